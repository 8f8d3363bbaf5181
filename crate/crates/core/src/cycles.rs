//! Streaming enumeration of simple cycles and of vertex-disjoint cycle pairs,
//! together with the closed-form counts they must reproduce.
//!
//! Enumeration is a depth-first backtrack rooted at each cycle's minimum
//! vertex. A path from root `r` only visits vertices above `r`, and a closed
//! path is reported only when its second vertex is smaller than its last, so
//! each undirected cycle appears exactly once, already in canonical form.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::models::Graph;

/// A simple cycle in canonical form: minimum vertex first, and the smaller of
/// that vertex's two cycle neighbors second.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cycle {
    vertices: Vec<u32>,
}

impl Cycle {
    /// Canonicalizes any rotation or reflection of a vertex cycle. Returns
    /// `None` for fewer than three or repeated vertices.
    pub fn from_vertices(vs: &[u32]) -> Option<Self> {
        let k = vs.len();
        if k < 3 {
            return None;
        }
        let mut sorted = vs.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let start = (0..k).min_by_key(|&i| vs[i])?;
        let fwd = vs[(start + 1) % k];
        let back = vs[(start + k - 1) % k];
        let vertices = if fwd < back {
            (0..k).map(|i| vs[(start + i) % k]).collect()
        } else {
            (0..k).map(|i| vs[(start + k - i) % k]).collect()
        };
        Some(Self { vertices })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn mask(&self) -> u64 {
        vertex_mask(&self.vertices)
    }

    pub fn is_canonical(&self) -> bool {
        Self::from_vertices(&self.vertices).as_ref() == Some(self)
    }

    /// True when consecutive vertices (cyclically) are adjacent in `g`.
    pub fn is_cycle_of(&self, g: &Graph) -> bool {
        let k = self.len();
        (0..k).all(|i| {
            g.has_edge(
                self.vertices[i] as usize,
                self.vertices[(i + 1) % k] as usize,
            )
        })
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn vertex_mask(vs: &[u32]) -> u64 {
    vs.iter().fold(0u64, |m, &v| m | 1 << v)
}

/// Two vertex-disjoint cycles with `first` rooted at the smaller vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CyclePair {
    pub first: Cycle,
    pub second: Cycle,
}

#[inline]
pub(crate) fn above(r: usize) -> u64 {
    if r >= 63 {
        0
    } else {
        !((1u64 << (r + 1)) - 1)
    }
}

/// Allocation-free cycle walker: [`CycleWalker::next_cycle`] lends the current
/// cycle as a slice of vertex indices.
pub struct CycleWalker<'g> {
    graph: &'g Graph,
    allowed: u64,
    min_len: usize,
    max_len: usize,
    roots: u64,
    root: usize,
    path: Vec<u32>,
    on_path: u64,
    pending: Vec<u64>,
}

impl<'g> CycleWalker<'g> {
    /// Cycles of `graph` restricted to the vertices in `allowed`, with length
    /// in `min_len..=max_len`.
    pub fn new(graph: &'g Graph, allowed: u64, min_len: usize, max_len: usize) -> Self {
        let allowed = allowed & graph.all_vertices();
        let max_len = max_len.min(allowed.count_ones() as usize);
        Self {
            graph,
            allowed,
            min_len: min_len.max(3),
            max_len,
            roots: if max_len >= 3 { allowed } else { 0 },
            root: 0,
            path: Vec::with_capacity(max_len),
            on_path: 0,
            pending: Vec::with_capacity(max_len),
        }
    }

    fn start_next_root(&mut self) -> bool {
        if self.roots == 0 {
            return false;
        }
        let r = self.roots.trailing_zeros() as usize;
        self.roots &= self.roots - 1;
        // need at least min_len allowed vertices >= r
        let reach = self.allowed & (above(r) | 1 << r);
        if (reach.count_ones() as usize) < self.min_len {
            self.roots = 0;
            return false;
        }
        self.root = r;
        self.path.clear();
        self.pending.clear();
        self.path.push(r as u32);
        self.on_path = 1 << r;
        self.pending
            .push(self.graph.neighbors(r) & self.allowed & above(r));
        true
    }

    pub fn next_cycle(&mut self) -> Option<&[u32]> {
        loop {
            let Some(top) = self.pending.last_mut() else {
                if !self.start_next_root() {
                    return None;
                }
                continue;
            };
            if *top == 0 {
                self.pending.pop();
                if let Some(v) = self.path.pop() {
                    self.on_path &= !(1u64 << v);
                }
                continue;
            }
            let v = top.trailing_zeros() as usize;
            *top &= *top - 1;

            self.path.push(v as u32);
            self.on_path |= 1 << v;
            let len = self.path.len();
            let next = if len < self.max_len {
                self.graph.neighbors(v) & self.allowed & above(self.root) & !self.on_path
            } else {
                0
            };
            self.pending.push(next);
            if len >= self.min_len
                && self.graph.has_edge(v, self.root)
                && self.path[1] < v as u32
            {
                return Some(&self.path);
            }
        }
    }
}

/// Owning iterator over canonical cycles.
pub struct Cycles<'g> {
    walker: CycleWalker<'g>,
}

impl Iterator for Cycles<'_> {
    type Item = Cycle;
    fn next(&mut self) -> Option<Cycle> {
        self.walker.next_cycle().map(|vs| Cycle {
            vertices: vs.to_vec(),
        })
    }
}

/// Every simple cycle of `g` with length in `min_len..=max_len`, each once.
pub fn enumerate_cycles(g: &Graph, min_len: usize, max_len: usize) -> Cycles<'_> {
    Cycles {
        walker: CycleWalker::new(g, g.all_vertices(), min_len, max_len),
    }
}

/// Cycles restricted to an induced vertex subset.
pub fn enumerate_cycles_within(g: &Graph, allowed: u64, min_len: usize, max_len: usize) -> Cycles<'_> {
    Cycles {
        walker: CycleWalker::new(g, allowed, min_len, max_len),
    }
}

/// Iterator over unordered pairs of vertex-disjoint cycles.
///
/// For each outer cycle `A` it walks the cycles of `g - V(A)` whose root
/// exceeds `A`'s root, so each unordered pair is produced once.
pub struct DisjointPairs<'g> {
    graph: &'g Graph,
    outer: CycleWalker<'g>,
    current: Option<(Cycle, CycleWalker<'g>)>,
}

impl Iterator for DisjointPairs<'_> {
    type Item = CyclePair;
    fn next(&mut self) -> Option<CyclePair> {
        loop {
            if let Some((first, inner)) = &mut self.current {
                if let Some(vs) = inner.next_cycle() {
                    return Some(CyclePair {
                        first: first.clone(),
                        second: Cycle {
                            vertices: vs.to_vec(),
                        },
                    });
                }
            }
            let n = self.graph.vertex_count();
            let vs = self.outer.next_cycle()?;
            let first = Cycle {
                vertices: vs.to_vec(),
            };
            let rest = self.graph.all_vertices() & !first.mask() & above(vs[0] as usize);
            let inner = CycleWalker::new(self.graph, rest, 3, n);
            self.current = Some((first, inner));
        }
    }
}

pub fn enumerate_disjoint_pairs(g: &Graph) -> DisjointPairs<'_> {
    let n = g.vertex_count();
    DisjointPairs {
        graph: g,
        outer: CycleWalker::new(g, g.all_vertices(), 3, n.saturating_sub(3)),
        current: None,
    }
}

/// `n! / m!` for `m <= n`.
pub fn falling_factorial(n: u64, k: u64) -> BigUint {
    (n - k + 1..=n).fold(BigUint::one(), |acc, x| acc * x)
}

pub fn factorial(n: u64) -> BigUint {
    falling_factorial(n, n)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    falling_factorial(n, k) / factorial(k)
}

/// Number of `k`-cycles in `K_n`: `n! / ((n - k)! 2k)`.
pub fn count_cycles_closed_form(n: u64, k: u64) -> BigUint {
    assert!(3 <= k && k <= n, "need 3 <= k <= n");
    falling_factorial(n, k) / (2 * k)
}

/// Number of vertex-disjoint (`k`-cycle, `l`-cycle) pairs in `K_n`:
/// `C(n,k) C(n-k,l) ((k-1)!/2) ((l-1)!/2)`, halved when `k == l`.
pub fn count_pairs_closed_form(n: u64, k: u64, l: u64) -> BigUint {
    assert!(k >= 3 && l >= 3 && k + l <= n, "need k, l >= 3 and k + l <= n");
    let half_ring = |m: u64| factorial(m - 1) / 2u32;
    let count = binomial(n, k) * binomial(n - k, l) * half_ring(k) * half_ring(l);
    if k == l {
        count / 2u32
    } else {
        count
    }
}

/// Both sides of the ordered-point counting identity:
/// `sum_{k=3}^{n-3} sum_{l=3}^{n-k} n!/(n-k-l)!` and
/// `sum_{i=6}^{n} n!/(n-i)! (i-5)`.
pub fn counting_identity(n: u64) -> (BigUint, BigUint) {
    assert!(n >= 6, "identity starts at n = 6");
    let mut lhs = BigUint::zero();
    for k in 3..=n - 3 {
        for l in 3..=n - k {
            lhs += falling_factorial(n, k + l);
        }
    }
    (lhs, ordered_split_sum(n))
}

/// `sum_{i=6}^{n} n!/(n-i)! (i-5)`.
pub fn ordered_split_sum(n: u64) -> BigUint {
    (6..=n).fold(BigUint::zero(), |acc, i| acc + falling_factorial(n, i) * (i - 5))
}
