//! Graph constructors, deterministic per-sample random streams, and random
//! linear embeddings in the unit cube.

use std::fmt::{self, Write as _};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;
use crate::scalar::Real;

/// Vertex sets are stored as `u64` bitmasks.
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("edge probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("cycles need at least 3 vertices, got {0}")]
    CycleTooShort(usize),
    #[error("graph needs between 1 and {MAX_VERTICES} vertices, got {0}")]
    VertexCount(usize),
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("line {line}: duplicate edge {i}-{j}")]
    DuplicateEdge { line: usize, i: usize, j: usize },
    #[error("line {line}: vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange { line: usize, index: usize, n: usize },
}

/// Which construction produced a graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphModel {
    Complete,
    Gnp { p: f64 },
    Tripartite331,
    DisjointCycles { k: usize, l: usize },
    Custom,
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Complete => f.write_str("complete"),
            Self::Gnp { .. } => f.write_str("gnp"),
            Self::Tripartite331 => f.write_str("k331"),
            Self::DisjointCycles { .. } => f.write_str("cycles"),
            Self::Custom => f.write_str("custom"),
        }
    }
}

/// A simple undirected graph on at most [`MAX_VERTICES`] vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj: Vec<u64>,
    edge_ids: Vec<u32>,
    model: GraphModel,
}

const NO_EDGE: u32 = u32::MAX;

impl Graph {
    /// Builds a graph from `i < j` pairs that are already checked for range,
    /// loops and duplicates.
    fn from_checked(n: usize, mut edges: Vec<(u32, u32)>, model: GraphModel) -> Self {
        edges.sort_unstable();
        let mut adj = vec![0u64; n];
        let mut edge_ids = vec![NO_EDGE; n * n];
        for (id, &(i, j)) in edges.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
            edge_ids[i * n + j] = id as u32;
            edge_ids[j * n + i] = id as u32;
        }
        Self {
            n,
            edges,
            adj,
            edge_ids,
            model,
        }
    }

    /// Builds a custom graph, validating every edge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, ModelError> {
        check_vertex_count(n)?;
        let mut seen = vec![false; n * n];
        let mut out = Vec::new();
        for (line, (a, b)) in edges.into_iter().enumerate() {
            let (i, j) = (a.min(b), a.max(b));
            validate_edge(line + 1, n, i, j, &mut seen)?;
            out.push((i as u32, j as u32));
        }
        Ok(Self::from_checked(n, out, GraphModel::Custom))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn model(&self) -> GraphModel {
        self.model
    }

    /// Neighbor bitmask of `v`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i] >> j & 1 == 1
    }

    /// Index into [`Graph::edges`] of the edge `{i, j}`.
    #[inline]
    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        match self.edge_ids[i * self.n + j] {
            NO_EDGE => None,
            id => Some(id as usize),
        }
    }

    /// Bitmask with every vertex set.
    pub fn all_vertices(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    pub fn connected_components(&self) -> usize {
        let mut unseen = self.all_vertices();
        let mut count = 0;
        while unseen != 0 {
            count += 1;
            let mut frontier = unseen & unseen.wrapping_neg();
            while frontier != 0 {
                unseen &= !frontier;
                let mut next = 0;
                let mut f = frontier;
                while f != 0 {
                    let v = f.trailing_zeros() as usize;
                    f &= f - 1;
                    next |= self.adj[v];
                }
                frontier = next & unseen;
            }
        }
        count
    }
}

fn check_vertex_count(n: usize) -> Result<(), ModelError> {
    if n == 0 || n > MAX_VERTICES {
        return Err(ModelError::VertexCount(n));
    }
    Ok(())
}

fn validate_edge(line: usize, n: usize, i: usize, j: usize, seen: &mut [bool]) -> Result<(), ModelError> {
    if j >= n {
        return Err(ModelError::IndexOutOfRange { line, index: j, n });
    }
    if i == j {
        return Err(ModelError::ParseError {
            line,
            msg: format!("self-loop at vertex {i}"),
        });
    }
    if std::mem::replace(&mut seen[i * n + j], true) {
        return Err(ModelError::DuplicateEdge { line, i, j });
    }
    Ok(())
}

pub fn complete_graph(n: usize) -> Result<Graph, ModelError> {
    check_vertex_count(n)?;
    let edges = (0..n as u32)
        .flat_map(|i| (i + 1..n as u32).map(move |j| (i, j)))
        .collect();
    Ok(Graph::from_checked(n, edges, GraphModel::Complete))
}

/// `K_{3,3,1}` with parts `{0,1,2}`, `{3,4,5}`, `{6}`.
pub fn tripartite_331() -> Graph {
    let part = |v: u32| match v {
        0..=2 => 0,
        3..=5 => 1,
        _ => 2,
    };
    let edges = (0..7u32)
        .flat_map(|i| (i + 1..7).map(move |j| (i, j)))
        .filter(|&(i, j)| part(i) != part(j))
        .collect();
    Graph::from_checked(7, edges, GraphModel::Tripartite331)
}

/// A `k`-cycle on `0..k` and an `l`-cycle on `k..k+l`.
pub fn disjoint_cycles_graph(k: usize, l: usize) -> Result<Graph, ModelError> {
    for len in [k, l] {
        if len < 3 {
            return Err(ModelError::CycleTooShort(len));
        }
    }
    check_vertex_count(k + l)?;
    let ring = |start: usize, len: usize| {
        (0..len).map(move |i| {
            let (a, b) = (start + i, start + (i + 1) % len);
            (a.min(b) as u32, a.max(b) as u32)
        })
    };
    let edges = ring(0, k).chain(ring(k, l)).collect();
    Ok(Graph::from_checked(
        k + l,
        edges,
        GraphModel::DisjointCycles { k, l },
    ))
}

/// Independent random streams carved out of one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Edges,
    Coordinates,
    Directions,
    TrianglePairs,
    CrossingS,
    CrossingU,
    CrossingV,
    CrossingW,
}

impl Purpose {
    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// Identifies the random stream of one Monte Carlo sample.
///
/// The stream for `(master_seed, sample_index, purpose)` is ChaCha8 keyed by
/// `seed_from_u64(master_seed ^ tag(purpose) * 0x9E37_79B9_7F4A_7C15)` with
/// stream id `sample_index`. It depends on nothing else, so samples may run in
/// any order on any number of threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        Self {
            master_seed,
            sample_index,
        }
    }

    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        let key = self.master_seed ^ purpose.tag().wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(self.sample_index);
        rng
    }
}

/// `G(n, p)`: each of the `C(n, 2)` pairs, in lexicographic order, is kept
/// when a uniform draw from the sample's edge stream falls below `p`.
pub fn gnp_graph(n: usize, p: f64, seed: SeedSpec) -> Result<Graph, ModelError> {
    gnp_graph_with(n, p, &mut seed.rng(Purpose::Edges))
}

pub fn gnp_graph_with<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph, ModelError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(ModelError::InvalidProbability(p));
    }
    check_vertex_count(n)?;
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_checked(n, edges, GraphModel::Gnp { p }))
}

/// A graph with one position per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEmbedding<T> {
    pub graph: Graph,
    pub coords: Vec<Point3<T>>,
}

impl<T: Real> LinearEmbedding<T> {
    pub fn new(graph: Graph, coords: Vec<Point3<T>>) -> Self {
        assert_eq!(graph.vertex_count(), coords.len(), "one coordinate per vertex");
        Self { graph, coords }
    }

    /// False when some coordinate lies outside `[0, 1]^3` (custom input).
    pub fn in_unit_cube(&self) -> bool {
        let unit = |t: T| t >= T::zero() && t <= T::one();
        self.coords.iter().all(|p| unit(p.x) && unit(p.y) && unit(p.z))
    }

    /// Vertex positions of a cycle given by vertex indices.
    pub fn polygon(&self, vertices: &[u32]) -> Vec<Point3<T>> {
        vertices.iter().map(|&v| self.coords[v as usize]).collect()
    }
}

/// Draws `n` points i.i.d. uniform in the unit cube, `x, y, z` per point.
pub fn sample_points<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Point3<T>> {
    (0..n)
        .map(|_| {
            let (x, y, z): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            Point3::new(T::lit(x), T::lit(y), T::lit(z))
        })
        .collect()
}

/// Places the vertices of `g` uniformly in the cube using the sample's
/// coordinate stream.
pub fn sample_embedding<T: Real>(g: &Graph, seed: SeedSpec) -> LinearEmbedding<T> {
    let mut rng = seed.rng(Purpose::Coordinates);
    LinearEmbedding::new(g.clone(), sample_points(&mut rng, g.vertex_count()))
}

/// Parses the plain-text embedding format: `n m`, then `n` lines `x y z`,
/// then `m` lines `i j`. `#` starts a comment; blank lines are ignored.
pub fn load_embedding(text: &str) -> Result<LinearEmbedding<f64>, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next = |what: &str| {
        lines.next().ok_or_else(|| ModelError::ParseError {
            line: text.lines().count().max(1),
            msg: format!("unexpected end of input, expected {what}"),
        })
    };

    let (line, header) = next("header `n m`")?;
    let [n, m] = parse_fields::<usize, 2>(line, header)?;
    check_vertex_count(n).map_err(|e| ModelError::ParseError {
        line,
        msg: e.to_string(),
    })?;

    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, l) = next("a coordinate line `x y z`")?;
        let [x, y, z] = parse_fields::<f64, 3>(line, l)?;
        let p = Point3::new(x, y, z);
        if !p.is_finite() {
            return Err(ModelError::ParseError {
                line,
                msg: "coordinates must be finite".into(),
            });
        }
        coords.push(p);
    }

    let mut seen = vec![false; n * n];
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, l) = next("an edge line `i j`")?;
        let [a, b] = parse_fields::<usize, 2>(line, l)?;
        let (i, j) = (a.min(b), a.max(b));
        validate_edge(line, n, i, j, &mut seen)?;
        edges.push((i as u32, j as u32));
    }
    if let Some((line, _)) = lines.next() {
        return Err(ModelError::ParseError {
            line,
            msg: format!("trailing content after {m} edges"),
        });
    }
    Ok(LinearEmbedding::new(
        Graph::from_checked(n, edges, GraphModel::Custom),
        coords,
    ))
}

fn parse_fields<F: std::str::FromStr, const N: usize>(line: usize, text: &str) -> Result<[F; N], ModelError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != N {
        return Err(ModelError::ParseError {
            line,
            msg: format!("expected {N} fields, found {}", parts.len()),
        });
    }
    let mut out = Vec::with_capacity(N);
    for p in parts {
        out.push(p.parse::<F>().map_err(|_| ModelError::ParseError {
            line,
            msg: format!("cannot parse `{p}`"),
        })?);
    }
    Ok(out.try_into().ok().expect("length checked"))
}

/// Writes an embedding in the format read by [`load_embedding`]; floats use
/// the shortest representation that parses back to the same value.
pub fn write_embedding(e: &LinearEmbedding<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", e.graph.vertex_count(), e.graph.edge_count());
    for p in &e.coords {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for &(i, j) in e.graph.edges() {
        let _ = writeln!(s, "{i} {j}");
    }
    s
}
