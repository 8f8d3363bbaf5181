//! Per-embedding topological statistics: linking-number censuses over all
//! disjoint cycle pairs and direction-sampled squared writhe over all cycles.
//!
//! Both censuses first tabulate the signed crossing of every pair of
//! vertex-disjoint edges for one projection. A linking number or a directional
//! writhe is then a signed sum of table entries, so the cost of the geometry is
//! paid once per embedding (or once per direction) rather than once per cycle.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cycles::{above, Cycle, CycleWalker};
use crate::geometry::{
    crossing_projected, directional_writhe, sample_direction, Degeneracy, Direction,
    GeometryError, Point3,
};
use crate::models::{Graph, LinearEmbedding};
use crate::scalar::Real;
use crate::stats::{Mergeable, RunningMoments};

/// Directions drawn per cycle when estimating mean squared writhe.
pub const DEFAULT_DIRECTIONS: usize = 100;

/// Consecutive degenerate direction draws tolerated before giving up.
const MAX_REDRAWS: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("degenerate projection between cycles {first} and {second}: {source}")]
    DegeneratePair {
        first: Cycle,
        second: Cycle,
        source: GeometryError,
    },
    #[error("degenerate projection in cycle {cycle}: {source}")]
    DegenerateCycle { cycle: Cycle, source: GeometryError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(u64),
    #[error("no disjoint cycle pairs to average over")]
    NoPairs,
    #[error("direction count must be at least 1")]
    NoDirections,
    #[error("no generic direction found after {0} draws")]
    TooManyRedraws(u32),
}

impl InvariantError {
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::DegeneratePair { source, .. } | Self::DegenerateCycle { source, .. } => {
                source.is_degenerate()
            }
            Self::Geometry(g) => g.is_degenerate(),
            _ => false,
        }
    }
}

/// Linking numbers of all disjoint cycle pairs of one embedding, tallied by
/// absolute value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LinkTally {
    /// `by_abs[j]` is the number of pairs with `|lk| = j`.
    pub by_abs: Vec<u64>,
    pub pairs: u64,
    pub sum_sq: u64,
    pub sum_abs: u64,
}

impl LinkTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, lk: i64) {
        let a = lk.unsigned_abs();
        let j = a as usize;
        if self.by_abs.len() <= j {
            self.by_abs.resize(j + 1, 0);
        }
        self.by_abs[j] += 1;
        self.pairs += 1;
        self.sum_sq += a * a;
        self.sum_abs += a;
    }

    /// Pairs with `|lk| = abs`.
    pub fn count(&self, abs: usize) -> u64 {
        self.by_abs.get(abs).copied().unwrap_or(0)
    }

    /// Pairs with nonzero linking number.
    pub fn nonzero(&self) -> u64 {
        self.pairs - self.count(0)
    }

    pub fn average_sq(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.sum_sq as f64 / self.pairs as f64)
    }

    pub fn average_abs(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.sum_abs as f64 / self.pairs as f64)
    }
}

impl Mergeable for LinkTally {
    fn merge(&mut self, o: Self) {
        if self.by_abs.len() < o.by_abs.len() {
            self.by_abs.resize(o.by_abs.len(), 0);
        }
        for (a, b) in self.by_abs.iter_mut().zip(o.by_abs) {
            *a += b;
        }
        self.pairs += o.pairs;
        self.sum_sq += o.sum_sq;
        self.sum_abs += o.sum_abs;
    }
}

// Table cells hold -1, 0, +1, or one of these markers.
const DEGEN_ORIENT: i8 = i8::MIN;
const DEGEN_HEIGHT: i8 = i8::MIN + 1;

fn degeneracy_of(cell: i8) -> GeometryError {
    GeometryError::DegenerateProjection(if cell == DEGEN_HEIGHT {
        Degeneracy::HeightGap
    } else {
        Degeneracy::Orientation
    })
}

/// Signed crossings of every vertex-disjoint edge pair along one direction,
/// each edge oriented from its smaller to its larger endpoint.
struct CrossingTable {
    m: usize,
    cells: Vec<i8>,
    degenerate: bool,
}

impl CrossingTable {
    fn build<T: Real>(e: &LinearEmbedding<T>, dir: &Direction<T>) -> Self {
        let edges = e.graph.edges();
        let m = edges.len();
        let proj: Vec<_> = e.coords.iter().map(|&p| dir.project(p)).collect();
        let mut cells = vec![0i8; m * m];
        let mut degenerate = false;
        for (a, &(a0, a1)) in edges.iter().enumerate() {
            for (b, &(b0, b1)) in edges.iter().enumerate().skip(a + 1) {
                if a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1 {
                    continue;
                }
                let c = match crossing_projected(
                    proj[a0 as usize],
                    proj[a1 as usize],
                    proj[b0 as usize],
                    proj[b1 as usize],
                ) {
                    Ok(c) => c.value(),
                    Err(GeometryError::DegenerateProjection(Degeneracy::HeightGap)) => {
                        degenerate = true;
                        DEGEN_HEIGHT
                    }
                    Err(_) => {
                        degenerate = true;
                        DEGEN_ORIENT
                    }
                };
                cells[a * m + b] = c;
                cells[b * m + a] = c;
            }
        }
        Self {
            m,
            cells,
            degenerate,
        }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> i8 {
        self.cells[a * self.m + b]
    }
}

/// Edge ids of a cycle, each with `+1` when the cycle traverses it from its
/// smaller endpoint, `-1` otherwise.
fn oriented_edges(g: &Graph, vs: &[u32], out: &mut Vec<(usize, i32)>) {
    out.clear();
    let k = vs.len();
    for i in 0..k {
        let (a, b) = (vs[i] as usize, vs[(i + 1) % k] as usize);
        let id = g.edge_id(a, b).expect("cycle edge present in graph");
        out.push((id, if a < b { 1 } else { -1 }));
    }
}

/// Linking number of every disjoint cycle pair, projected along `+z`.
pub fn link_tally<T: Real>(e: &LinearEmbedding<T>) -> Result<LinkTally, InvariantError> {
    let mut tally = LinkTally::new();
    for_each_link(e, |_, _, lk| tally.record(lk))?;
    Ok(tally)
}

/// Calls `f(first, second, lk)` for every unordered pair of vertex-disjoint
/// cycles, in enumeration order.
pub fn for_each_link<T: Real>(
    e: &LinearEmbedding<T>,
    mut f: impl FnMut(&[u32], &[u32], i64),
) -> Result<(), InvariantError> {
    let g = &e.graph;
    let n = g.vertex_count();
    if n < 6 {
        return Ok(());
    }
    let table = CrossingTable::build(e, &Direction::z());
    let edges = g.edges();
    let mut w = vec![0i32; edges.len()];
    let mut bad = vec![0i8; edges.len()];
    let (mut ea, mut eb) = (Vec::new(), Vec::new());

    let mut outer = CycleWalker::new(g, g.all_vertices(), 3, n - 3);
    while let Some(a) = outer.next_cycle() {
        let rest = g.all_vertices() & !crate::cycles::vertex_mask(a) & above(a[0] as usize);
        if rest.count_ones() < 3 {
            continue;
        }
        oriented_edges(g, a, &mut ea);
        for (fid, &(f0, f1)) in edges.iter().enumerate() {
            if rest >> f0 & 1 == 0 || rest >> f1 & 1 == 0 {
                continue;
            }
            let mut s = 0i32;
            bad[fid] = 0;
            for &(eid, sign) in &ea {
                let c = table.get(eid, fid);
                if c < -1 {
                    bad[fid] = c;
                } else {
                    s += sign * c as i32;
                }
            }
            w[fid] = s;
        }
        let mut inner = CycleWalker::new(g, rest, 3, n);
        while let Some(b) = inner.next_cycle() {
            oriented_edges(g, b, &mut eb);
            let mut sum = 0i32;
            for &(fid, sign) in &eb {
                if table.degenerate && bad[fid] != 0 {
                    return Err(InvariantError::DegeneratePair {
                        first: Cycle::from_vertices(a).expect("cycle"),
                        second: Cycle::from_vertices(b).expect("cycle"),
                        source: degeneracy_of(bad[fid]),
                    });
                }
                sum += sign * w[fid];
            }
            if sum % 2 != 0 {
                return Err(InvariantError::DegeneratePair {
                    first: Cycle::from_vertices(a).expect("cycle"),
                    second: Cycle::from_vertices(b).expect("cycle"),
                    source: GeometryError::OddCrossingSum(sum as i64),
                });
            }
            f(a, b, (sum / 2) as i64);
        }
    }
    Ok(())
}

/// Sample mean and standard error of the per-embedding sum of squared
/// linking numbers.
pub fn mean_sum_sq_link<'a>(
    samples: impl IntoIterator<Item = &'a LinkTally>,
) -> Result<(f64, f64), InvariantError> {
    let m: RunningMoments = samples.into_iter().map(|t| t.sum_sq as f64).collect();
    if m.count() < 2 {
        return Err(InvariantError::InsufficientSamples(m.count()));
    }
    Ok((m.mean(), m.std_error()))
}

/// Per-embedding average of `lk^2` and of `|lk|` over pairs, each then
/// averaged over samples.
pub fn mean_average_link<'a>(
    samples: impl IntoIterator<Item = &'a LinkTally>,
) -> Result<(f64, f64), InvariantError> {
    let (mut sq, mut abs) = (RunningMoments::new(), RunningMoments::new());
    for t in samples {
        sq.push(t.average_sq().ok_or(InvariantError::NoPairs)?);
        abs.push(t.average_abs().ok_or(InvariantError::NoPairs)?);
    }
    if sq.count() == 0 {
        return Err(InvariantError::NoPairs);
    }
    Ok((sq.mean(), abs.mean()))
}

/// Pooled share of pairs with each `|lk|`, indexed by `|lk|`.
pub fn proportion_by_lk<'a>(
    samples: impl IntoIterator<Item = &'a LinkTally>,
) -> Result<Vec<f64>, InvariantError> {
    let mut pooled = LinkTally::new();
    for t in samples {
        pooled.merge(t.clone());
    }
    pooled_proportions(&pooled)
}

fn pooled_proportions(t: &LinkTally) -> Result<Vec<f64>, InvariantError> {
    if t.pairs == 0 {
        return Err(InvariantError::NoPairs);
    }
    Ok(t.by_abs
        .iter()
        .map(|&c| c as f64 / t.pairs as f64)
        .collect())
}

/// Streaming aggregate of many embeddings' tallies.
///
/// Averages over pairs skip embeddings that have no disjoint cycle pair (only
/// possible for sparse random graphs).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LinkAggregate {
    pub sum_sq: RunningMoments,
    pub avg_sq: RunningMoments,
    pub avg_abs: RunningMoments,
    pub pooled: LinkTally,
    /// Histogram of the number of nonzero-lk pairs per embedding.
    pub nonzero_hist: Vec<u64>,
    pub resamples: u64,
}

impl LinkAggregate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: &LinkTally) {
        self.sum_sq.push(t.sum_sq as f64);
        if let (Some(sq), Some(abs)) = (t.average_sq(), t.average_abs()) {
            self.avg_sq.push(sq);
            self.avg_abs.push(abs);
        }
        let k = t.nonzero() as usize;
        if self.nonzero_hist.len() <= k {
            self.nonzero_hist.resize(k + 1, 0);
        }
        self.nonzero_hist[k] += 1;
        self.pooled.merge(t.clone());
    }

    pub fn samples(&self) -> u64 {
        self.sum_sq.count()
    }

    pub fn proportions(&self) -> Result<Vec<f64>, InvariantError> {
        pooled_proportions(&self.pooled)
    }

    /// Pooled proportion of pairs with `|lk| = abs` (0 when there are none).
    pub fn proportion(&self, abs: usize) -> f64 {
        if self.pooled.pairs == 0 {
            0.0
        } else {
            self.pooled.count(abs) as f64 / self.pooled.pairs as f64
        }
    }
}

impl Mergeable for LinkAggregate {
    fn merge(&mut self, o: Self) {
        self.sum_sq.merge(o.sum_sq);
        self.avg_sq.merge(o.avg_sq);
        self.avg_abs.merge(o.avg_abs);
        self.pooled.merge(o.pooled);
        if self.nonzero_hist.len() < o.nonzero_hist.len() {
            self.nonzero_hist.resize(o.nonzero_hist.len(), 0);
        }
        for (a, b) in self.nonzero_hist.iter_mut().zip(o.nonzero_hist) {
            *a += b;
        }
        self.resamples += o.resamples;
    }
}

/// Checks the K6 census: 10 pairs, one or three Hopf links, nothing else.
pub fn check_k6_census(t: &LinkTally) -> Result<(), String> {
    let nz = t.nonzero();
    if t.pairs != 10 {
        return Err(format!("expected 10 disjoint pairs, found {}", t.pairs));
    }
    if !(nz == 1 || nz == 3) || t.count(1) != nz || !matches!(t.sum_sq, 1 | 3) {
        return Err(format!(
            "{nz} nonzero links, sum of squares {}, tally {:?}",
            t.sum_sq, t.by_abs
        ));
    }
    Ok(())
}

/// Checks the K3,3,1 census: 9 pairs and 1 to 5 nonzero links; an even count
/// has exactly one `|lk| = 2` and the rest `|lk| = 1`, an odd count only
/// `|lk| = 1`.
pub fn check_k331_census(t: &LinkTally) -> Result<(), String> {
    let nz = t.nonzero();
    if t.pairs != 9 {
        return Err(format!("expected 9 disjoint pairs, found {}", t.pairs));
    }
    let twos = u64::from(nz.is_multiple_of(2));
    let ok = (1..=5).contains(&nz)
        && t.count(2) == twos
        && t.count(1) == nz - twos
        && matches!(t.sum_sq, 1 | 3 | 5 | 7);
    if !ok {
        return Err(format!(
            "{nz} nonzero links, sum of squares {}, tally {:?}",
            t.sum_sq, t.by_abs
        ));
    }
    Ok(())
}

/// Direction-sampled mean squared writhe of one polygon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WritheEstimate {
    pub k: usize,
    pub mean_sq: f64,
    pub directions: usize,
    pub redraws: u64,
}

/// Averages `Wr^2` over `d` directions drawn uniformly from the sphere.
/// Degenerate directions are redrawn and counted.
pub fn mean_squared_writhe<T: Real, R: Rng + ?Sized>(
    poly: &[Point3<T>],
    d: usize,
    rng: &mut R,
) -> Result<WritheEstimate, InvariantError> {
    if d == 0 {
        return Err(InvariantError::NoDirections);
    }
    let mut sum = 0i64;
    let mut redraws = 0u64;
    for _ in 0..d {
        let mut tries = 0;
        let w = loop {
            match directional_writhe(poly, &sample_direction(rng)) {
                Ok(w) => break w,
                Err(e) if e.is_degenerate() && tries < MAX_REDRAWS => {
                    tries += 1;
                    redraws += 1;
                }
                Err(e) if e.is_degenerate() => {
                    return Err(InvariantError::TooManyRedraws(tries));
                }
                Err(e) => return Err(e.into()),
            }
        };
        sum += w * w;
    }
    Ok(WritheEstimate {
        k: poly.len(),
        mean_sq: sum as f64 / d as f64,
        directions: d,
        redraws,
    })
}

/// Mean squared writhe over a fixed list of directions.
pub fn mean_squared_writhe_along<T: Real>(
    poly: &[Point3<T>],
    dirs: &[Direction<T>],
) -> Result<WritheEstimate, InvariantError> {
    if dirs.is_empty() {
        return Err(InvariantError::NoDirections);
    }
    let mut sum = 0i64;
    for d in dirs {
        let w = directional_writhe(poly, d)?;
        sum += w * w;
    }
    Ok(WritheEstimate {
        k: poly.len(),
        mean_sq: sum as f64 / dirs.len() as f64,
        directions: dirs.len(),
        redraws: 0,
    })
}

/// Every cycle of a graph as oriented edge ids, enumerated once and reused for
/// many embeddings of the same graph.
#[derive(Clone, Debug)]
pub struct CycleEdgeLists {
    cycles: Vec<Vec<(usize, i32)>>,
    max_len: usize,
}

impl CycleEdgeLists {
    pub fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let mut cycles = Vec::new();
        let mut max_len = 0;
        if n >= 3 {
            let mut walker = CycleWalker::new(g, g.all_vertices(), 3, n);
            let mut buf = Vec::new();
            while let Some(c) = walker.next_cycle() {
                oriented_edges(g, c, &mut buf);
                max_len = max_len.max(c.len());
                cycles.push(buf.clone());
            }
        }
        Self { cycles, max_len }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Sum over all cycles of their direction-sampled mean squared writhe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WritheSum {
    pub total: f64,
    /// `by_len[k]`: contribution of the `k`-cycles.
    pub by_len: Vec<f64>,
    pub directions: usize,
    pub redraws: u64,
}

/// Sum of mean squared writhe over every cycle of `e`.
///
/// One set of `d` uniform directions is drawn per embedding and shared by all
/// cycles; each cycle's estimate is still an unbiased average over `d`
/// uniform directions. A direction under which any pair of disjoint edges is
/// degenerate is redrawn.
pub fn sum_sq_writhe<T: Real, R: Rng + ?Sized>(
    e: &LinearEmbedding<T>,
    d: usize,
    rng: &mut R,
) -> Result<WritheSum, InvariantError> {
    sum_sq_writhe_with(e, &CycleEdgeLists::new(&e.graph), d, rng)
}

/// [`sum_sq_writhe`] with a precomputed cycle list for `e.graph`.
pub fn sum_sq_writhe_with<T: Real, R: Rng + ?Sized>(
    e: &LinearEmbedding<T>,
    cycles: &CycleEdgeLists,
    d: usize,
    rng: &mut R,
) -> Result<WritheSum, InvariantError> {
    if d == 0 {
        return Err(InvariantError::NoDirections);
    }
    let mut by_len_sq = vec![0i64; cycles.max_len + 1];
    let mut redraws = 0u64;
    for _ in 0..d {
        let mut tries = 0;
        let table = loop {
            let t = CrossingTable::build(e, &sample_direction(rng));
            if !t.degenerate {
                break t;
            }
            tries += 1;
            redraws += 1;
            if tries >= MAX_REDRAWS {
                return Err(InvariantError::TooManyRedraws(tries));
            }
        };
        for c in &cycles.cycles {
            let k = c.len();
            let mut w = 0i32;
            for i in 0..k {
                let (ei, si) = c[i];
                let last = if i == 0 { k - 1 } else { k };
                if i + 2 >= last {
                    continue;
                }
                for &(ej, sj) in &c[i + 2..last] {
                    w += si * sj * table.get(ei, ej) as i32;
                }
            }
            by_len_sq[k] += (w * w) as i64;
        }
    }
    let by_len: Vec<f64> = by_len_sq.iter().map(|&s| s as f64 / d as f64).collect();
    Ok(WritheSum {
        total: by_len.iter().sum(),
        by_len,
        directions: d,
        redraws,
    })
}
