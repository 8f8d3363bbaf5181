//! Monte Carlo estimates of the crossing constants `s, u, v, w` and of
//! `q = s + 2(u + v)` and `q' = 3s + 2(2u + v + w)`.
//!
//! `q` is estimated two ways: from the linking probability `P = 9q / 2` of two
//! random triangles, and from the configuration constants. Every constant owns
//! a separate random stream so the estimates are independent.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{crossing_projected, linking_number, Direction, GeometryError, Point3};
use crate::models::{sample_points, Purpose, SeedSpec};
use crate::montecarlo::run_samples;
use crate::scalar::Real;
use crate::stats::{bernoulli_ci99, Mergeable, Z99};

/// Degenerate redraws tolerated within a single sample.
const MAX_REDRAWS: u32 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ConstantName {
    S,
    U,
    V,
    W,
    Q,
    QPrime,
}

impl fmt::Display for ConstantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::S => "s",
            Self::U => "u",
            Self::V => "v",
            Self::W => "w",
            Self::Q => "q",
            Self::QPrime => "qprime",
        })
    }
}

/// Point estimate with a 99% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub name: ConstantName,
    pub estimate: f64,
    pub samples: u64,
    pub ci99_halfwidth: f64,
    pub resamples: u64,
}

impl ConstantEstimate {
    pub fn lower(&self) -> f64 {
        self.estimate - self.ci99_halfwidth
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.ci99_halfwidth
    }

    pub fn excludes_zero(&self) -> bool {
        self.lower() > 0.0 || self.upper() < 0.0
    }

    /// True when the two intervals overlap, i.e. the estimates differ by at
    /// most the sum of their half-widths.
    pub fn agrees_with(&self, other: &ConstantEstimate) -> bool {
        (self.estimate - other.estimate).abs() <= self.ci99_halfwidth + other.ci99_halfwidth
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("sample {index}: no generic configuration after {MAX_REDRAWS} draws")]
    TooManyRedraws { index: u64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Triangle-pair linking counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinkedCount {
    pub linked: u64,
    pub trials: u64,
    pub resamples: u64,
}

impl Mergeable for LinkedCount {
    fn merge(&mut self, o: Self) {
        self.linked += o.linked;
        self.trials += o.trials;
        self.resamples += o.resamples;
    }
}

/// Tally of a product `e1 * e2` taking values in `{-1, 0, 1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProductCount {
    pub sum: i64,
    pub nonzero: u64,
    pub trials: u64,
    pub resamples: u64,
}

impl ProductCount {
    pub fn push(&mut self, x: i8) {
        self.sum += x as i64;
        self.nonzero += (x != 0) as u64;
        self.trials += 1;
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.trials as f64
    }

    /// Unbiased sample variance, using `x^2 = |x|` for `x` in `{-1, 0, 1}`.
    pub fn variance(&self) -> f64 {
        let n = self.trials as f64;
        if self.trials < 2 {
            return 0.0;
        }
        let m = self.mean();
        ((self.nonzero as f64 - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn ci99_halfwidth(&self) -> f64 {
        Z99 * (self.variance() / self.trials as f64).sqrt()
    }
}

impl Mergeable for ProductCount {
    fn merge(&mut self, o: Self) {
        self.sum += o.sum;
        self.nonzero += o.nonzero;
        self.trials += o.trials;
        self.resamples += o.resamples;
    }
}

/// Signed crossing of segments `p[a0]p[a1]` and `p[b0]p[b1]` along `+z`.
#[inline]
fn cross_z<T: Real>(p: &[Point3<T>], a: (usize, usize), b: (usize, usize)) -> Result<i8, GeometryError> {
    let z = Direction::z();
    Ok(crossing_projected(
        z.project(p[a.0]),
        z.project(p[a.1]),
        z.project(p[b.0]),
        z.project(p[b.1]),
    )?
    .value())
}

/// Which configuration a product sample uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Configuration {
    /// Two disjoint segments; the value is the crossing indicator `|e|`.
    S,
    /// Segment `p0p1` against the path `p2 -> p3 -> p4`.
    U,
    /// Paths `p0 -> p1 -> p2` and `p3 -> p4 -> p5`; `e1 = (p0p1, p3p4)`,
    /// `e2 = (p1p2, p4p5)`.
    V,
    /// One path `p0 -> ... -> p4` with edges `l1 l2 l1' l2'`;
    /// `e1 = (l1, l1')`, `e2 = (l2, l2')`.
    W,
}

impl Configuration {
    pub fn points(self) -> usize {
        match self {
            Self::S => 4,
            Self::U | Self::W => 5,
            Self::V => 6,
        }
    }

    fn purpose(self) -> Purpose {
        match self {
            Self::S => Purpose::CrossingS,
            Self::U => Purpose::CrossingU,
            Self::V => Purpose::CrossingV,
            Self::W => Purpose::CrossingW,
        }
    }

    fn name(self) -> ConstantName {
        match self {
            Self::S => ConstantName::S,
            Self::U => ConstantName::U,
            Self::V => ConstantName::V,
            Self::W => ConstantName::W,
        }
    }

    /// The sampled value for one point configuration.
    pub fn value<T: Real>(self, p: &[Point3<T>]) -> Result<i8, GeometryError> {
        Ok(match self {
            Self::S => cross_z(p, (0, 1), (2, 3))?.abs(),
            Self::U => cross_z(p, (0, 1), (2, 3))? * cross_z(p, (0, 1), (3, 4))?,
            Self::V => cross_z(p, (0, 1), (3, 4))? * cross_z(p, (1, 2), (4, 5))?,
            Self::W => cross_z(p, (0, 1), (2, 3))? * cross_z(p, (1, 2), (3, 4))?,
        })
    }
}

/// Draws configurations from the sample's stream until one is generic.
/// Redraws continue the same stream.
fn sample_generic<T: Real, V>(
    seed: SeedSpec,
    purpose: Purpose,
    points: usize,
    resamples: &mut u64,
    mut f: impl FnMut(&[Point3<T>]) -> Result<V, GeometryError>,
) -> Result<V, ConstantsError> {
    let mut rng = seed.rng(purpose);
    for _ in 0..MAX_REDRAWS {
        let p: Vec<Point3<T>> = sample_points(&mut rng, points);
        match f(&p) {
            Ok(v) => return Ok(v),
            Err(e) if e.is_degenerate() => *resamples += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Err(ConstantsError::TooManyRedraws {
        index: seed.sample_index,
    })
}

/// Whether triangles `p0p1p2` and `p3p4p5` are linked.
pub fn triangle_pair_linked<T: Real>(p: &[Point3<T>]) -> Result<bool, GeometryError> {
    Ok(linking_number(&p[0..3], &p[3..6], &Direction::z())? != 0)
}

/// Counts linked triangle pairs among `n` random 6-point configurations.
pub fn count_linked_triangles<T: Real>(n: u64, seed: u64) -> Result<LinkedCount, ConstantsError> {
    run_samples(n, LinkedCount::default, |acc, i| {
        let linked = sample_generic::<T, _>(
            SeedSpec::new(seed, i),
            Purpose::TrianglePairs,
            6,
            &mut acc.resamples,
            triangle_pair_linked,
        )?;
        acc.linked += linked as u64;
        acc.trials += 1;
        Ok(())
    })
}

/// `q = (2/9) P(linked)` with the Bernoulli interval scaled alike.
pub fn q_from_linked(count: &LinkedCount) -> ConstantEstimate {
    let ci = bernoulli_ci99(count.linked, count.trials);
    ConstantEstimate {
        name: ConstantName::Q,
        estimate: 2.0 / 9.0 * ci.estimate,
        samples: count.trials,
        ci99_halfwidth: 2.0 / 9.0 * ci.halfwidth,
        resamples: count.resamples,
    }
}

/// `q` from the linking probability of two random triangles.
pub fn estimate_q_triangles<T: Real>(n: u64, seed: u64) -> Result<ConstantEstimate, ConstantsError> {
    if n == 0 {
        return Err(ConstantsError::NoSamples);
    }
    Ok(q_from_linked(&count_linked_triangles::<T>(n, seed)?))
}

/// Tallies `n` samples of one configuration.
pub fn count_products<T: Real>(
    config: Configuration,
    n: u64,
    seed: u64,
) -> Result<ProductCount, ConstantsError> {
    run_samples(n, ProductCount::default, |acc, i| {
        let x = sample_generic::<T, _>(
            SeedSpec::new(seed, i),
            config.purpose(),
            config.points(),
            &mut acc.resamples,
            |p| config.value(p),
        )?;
        acc.push(x);
        Ok(())
    })
}

/// Estimate of one of `s, u, v, w`.
pub fn estimate_config<T: Real>(
    config: Configuration,
    n: u64,
    seed: u64,
) -> Result<ConstantEstimate, ConstantsError> {
    if n == 0 {
        return Err(ConstantsError::NoSamples);
    }
    let c = count_products::<T>(config, n, seed)?;
    // s is half the crossing probability
    let scale = if config == Configuration::S { 0.5 } else { 1.0 };
    Ok(ConstantEstimate {
        name: config.name(),
        estimate: scale * c.mean(),
        samples: c.trials,
        ci99_halfwidth: scale * c.ci99_halfwidth(),
        resamples: c.resamples,
    })
}

pub fn estimate_s<T: Real>(n: u64, seed: u64) -> Result<ConstantEstimate, ConstantsError> {
    estimate_config::<T>(Configuration::S, n, seed)
}

pub fn estimate_u<T: Real>(n: u64, seed: u64) -> Result<ConstantEstimate, ConstantsError> {
    estimate_config::<T>(Configuration::U, n, seed)
}

pub fn estimate_v<T: Real>(n: u64, seed: u64) -> Result<ConstantEstimate, ConstantsError> {
    estimate_config::<T>(Configuration::V, n, seed)
}

pub fn estimate_w<T: Real>(n: u64, seed: u64) -> Result<ConstantEstimate, ConstantsError> {
    estimate_config::<T>(Configuration::W, n, seed)
}

/// Warning raised when combined estimates used different sample counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MismatchedSampleCounts(pub Vec<u64>);

impl fmt::Display for MismatchedSampleCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "combined estimates use different sample counts {:?}", self.0)
    }
}

/// Linear combination of independent estimates; half-widths add in
/// quadrature. The reported sample count is the smallest input count.
fn combine(
    name: ConstantName,
    terms: &[(f64, &ConstantEstimate)],
) -> (ConstantEstimate, Option<MismatchedSampleCounts>) {
    let estimate = terms.iter().map(|(c, e)| c * e.estimate).sum();
    let var: f64 = terms
        .iter()
        .map(|(c, e)| (c * e.ci99_halfwidth).powi(2))
        .sum();
    let counts: Vec<u64> = terms.iter().map(|(_, e)| e.samples).collect();
    let warn = counts
        .iter()
        .any(|&c| c != counts[0])
        .then(|| MismatchedSampleCounts(counts.clone()));
    (
        ConstantEstimate {
            name,
            estimate,
            samples: counts.iter().copied().min().unwrap_or(0),
            ci99_halfwidth: var.sqrt(),
            resamples: terms.iter().map(|(_, e)| e.resamples).sum(),
        },
        warn,
    )
}

/// `q = s + 2(u + v)`.
pub fn derive_q(
    s: &ConstantEstimate,
    u: &ConstantEstimate,
    v: &ConstantEstimate,
) -> (ConstantEstimate, Option<MismatchedSampleCounts>) {
    combine(ConstantName::Q, &[(1.0, s), (2.0, u), (2.0, v)])
}

/// `q' = 3s + 2(2u + v + w)`.
pub fn derive_qprime(
    s: &ConstantEstimate,
    u: &ConstantEstimate,
    v: &ConstantEstimate,
    w: &ConstantEstimate,
) -> (ConstantEstimate, Option<MismatchedSampleCounts>) {
    combine(ConstantName::QPrime, &[(3.0, s), (4.0, u), (2.0, v), (2.0, w)])
}

/// All four configuration constants with the derived `q` and `q'`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigurationEstimates {
    pub s: ConstantEstimate,
    pub u: ConstantEstimate,
    pub v: ConstantEstimate,
    pub w: Option<ConstantEstimate>,
    pub q: ConstantEstimate,
    pub qprime: Option<ConstantEstimate>,
}

/// Estimates `s, u, v` (and `w` when `with_w`) at `n` samples each.
pub fn estimate_configurations<T: Real>(
    n: u64,
    seed: u64,
    with_w: bool,
) -> Result<ConfigurationEstimates, ConstantsError> {
    let s = estimate_s::<T>(n, seed)?;
    let u = estimate_u::<T>(n, seed)?;
    let v = estimate_v::<T>(n, seed)?;
    let (q, _) = derive_q(&s, &u, &v);
    let (w, qprime) = if with_w {
        let w = estimate_w::<T>(n, seed)?;
        let (qp, _) = derive_qprime(&s, &u, &v, &w);
        (Some(w), Some(qp))
    } else {
        (None, None)
    };
    Ok(ConfigurationEstimates {
        s,
        u,
        v,
        w,
        q,
        qprime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::Q_REFERENCE;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn est(name: ConstantName, estimate: f64, hw: f64, samples: u64) -> ConstantEstimate {
        ConstantEstimate {
            name,
            estimate,
            samples,
            ci99_halfwidth: hw,
            resamples: 0,
        }
    }

    #[test]
    fn injected_unlinked_pair_gives_zero() {
        let pts = [
            p(0., 0., 0.),
            p(1., 0., 0.),
            p(0., 1., 0.3),
            p(10., 0., 0.),
            p(11., 0.2, 0.),
            p(10.5, 1., 0.7),
        ];
        let linked = triangle_pair_linked(&pts).unwrap();
        let q = q_from_linked(&LinkedCount {
            linked: linked as u64,
            trials: 1,
            resamples: 0,
        });
        assert_eq!((q.estimate, q.ci99_halfwidth, q.samples), (0.0, 0.0, 1));
    }

    #[test]
    fn billion_trial_counts_reproduce_reference_q() {
        let q = q_from_linked(&LinkedCount {
            linked: 152_402_780,
            trials: 1_000_000_000,
            resamples: 0,
        });
        assert!((q.estimate - Q_REFERENCE).abs() < 5e-7);
        // the standard 99% half-width is 6.5e-6; twice that is the 1.3e-5
        // reported alongside the count
        assert!((q.ci99_halfwidth - 6.5e-6).abs() < 1e-7);
    }

    #[test]
    fn derived_combinations() {
        let s = est(ConstantName::S, 0.1, 0.0, 10);
        let u = est(ConstantName::U, -0.02, 0.0, 10);
        let v = est(ConstantName::V, 0.003, 0.0, 10);
        let w = est(ConstantName::W, 0.05, 0.0, 10);
        let (q, warn) = derive_q(&s, &u, &v);
        assert!((q.estimate - (0.1 - 0.04 + 0.006)).abs() < 1e-15);
        assert_eq!(q.ci99_halfwidth, 0.0);
        assert!(warn.is_none());
        let (qp, _) = derive_qprime(&s, &u, &v, &w);
        assert!((qp.estimate - (0.3 - 0.08 + 0.006 + 0.1)).abs() < 1e-15);

        let s = est(ConstantName::S, 0.1, 0.003, 10);
        let u = est(ConstantName::U, 0.0, 0.004, 20);
        let (q, warn) = derive_q(&s, &u, &v);
        let expected = (0.003f64.powi(2) + (2.0 * 0.004f64).powi(2)).sqrt();
        assert!((q.ci99_halfwidth - expected).abs() < 1e-15);
        assert_eq!(warn, Some(MismatchedSampleCounts(vec![10, 20, 10])));
    }

    #[test]
    fn product_variance_matches_direct() {
        let xs = [1i8, 0, -1, 1, 1, 0, 0, -1, 1];
        let mut c = ProductCount::default();
        for &x in &xs {
            c.push(x);
        }
        let m: crate::stats::RunningMoments = xs.iter().map(|&x| x as f64).collect();
        assert!((c.mean() - m.mean()).abs() < 1e-15);
        assert!((c.variance() - m.variance()).abs() < 1e-15);
    }

    #[test]
    fn configuration_values() {
        // s: the two diagonals of a square, one raised
        let pts = [p(0., 0., 0.), p(1., 1., 0.), p(1., 0., 1.), p(0., 1., 1.)];
        assert_eq!(Configuration::S.value(&pts).unwrap(), 1);
        // u: segment p0p1 crossed twice by the path p2 -> p3 -> p4 with the
        // path passing over, down and back: the two crossings cancel in lk
        // terms but their product is +1 or -1
        let pts = [
            p(0., 0.5, 0.),
            p(1., 0.5, 0.),
            p(0.3, 0., 1.),
            p(0.5, 1., 1.),
            p(0.7, 0., 1.),
        ];
        assert_eq!(Configuration::U.value(&pts).unwrap(), -1);
        let pts = [
            p(0., 0.5, 0.),
            p(1., 0.5, 0.),
            p(0.3, 0., 1.),
            p(0.5, 1., 1.),
            p(0.7, 0., -2.),
        ];
        // the second crossing passes under: sign flips again
        assert_eq!(Configuration::U.value(&pts).unwrap(), 1);
    }

    #[test]
    fn small_runs_are_sane_and_reproducible() {
        let n = 200_000;
        let q = estimate_q_triangles::<f64>(n, 7).unwrap();
        assert_eq!(q, estimate_q_triangles::<f64>(n, 7).unwrap());
        assert!((q.estimate - Q_REFERENCE).abs() < q.ci99_halfwidth * 1.5);
        let p_link = 9.0 * q.estimate / 2.0;
        assert!(p_link > 0.0 && p_link < 1.0);

        let all = estimate_configurations::<f64>(n, 7, true).unwrap();
        assert!(all.s.estimate > 0.0 && all.s.estimate < 0.5 && all.s.excludes_zero());
        assert!(all.q.agrees_with(&q), "{:?} vs {:?}", all.q, q);
        assert!(all.qprime.unwrap().estimate > 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        assert_eq!(
            estimate_q_triangles::<f64>(0, 1),
            Err(ConstantsError::NoSamples)
        );
        assert_eq!(estimate_s::<f64>(0, 1), Err(ConstantsError::NoSamples));
    }

    #[test]
    fn single_precision_run() {
        let q = estimate_q_triangles::<f32>(50_000, 3).unwrap();
        assert!((q.estimate - Q_REFERENCE).abs() < 0.01);
    }
}
