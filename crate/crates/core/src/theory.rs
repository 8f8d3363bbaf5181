//! Closed-form expected values, parameterized by the constants `q` and `q'`.
//!
//! Factorial coefficients are summed exactly and converted to floating point
//! once, immediately before scaling by `q`.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycles::{count_cycles_closed_form, falling_factorial, ordered_split_sum};

/// Triangle-pair estimate of `q` from one billion samples.
pub const Q_REFERENCE: f64 = 0.033867;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("q' is required for writhe formulas")]
    MissingQPrime,
    #[error("{what} = {value} is not a probability")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub q: f64,
    pub qprime: Option<f64>,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            q: Q_REFERENCE,
            qprime: None,
        }
    }
}

impl TheoryParams {
    pub fn new(q: f64, qprime: Option<f64>) -> Result<Self, TheoryError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(q) {
            return Err(TheoryError::InvalidParameter(format!("q = {q}")));
        }
        if let Some(qp) = qprime {
            if !ok(qp) {
                return Err(TheoryError::InvalidParameter(format!("q' = {qp}")));
            }
        }
        Ok(Self { q, qprime })
    }

    pub fn with_qprime(self, qprime: f64) -> Self {
        Self {
            qprime: Some(qprime),
            ..self
        }
    }

    fn qprime(&self) -> Result<f64, TheoryError> {
        self.qprime.ok_or(TheoryError::MissingQPrime)
    }
}

/// Converts `num / 2^shift` to `f64`, keeping the top 64 bits of `num`.
fn big_to_f64_scaled(num: &BigUint, shift: u64) -> f64 {
    let bits = num.bits();
    let drop = bits.saturating_sub(64);
    let top = (num >> drop).to_u64().expect("fits in 64 bits") as f64;
    top * 2f64.powi((drop as i64 - shift as i64) as i32)
}

pub fn big_to_f64(num: &BigUint) -> f64 {
    big_to_f64_scaled(num, 0)
}

/// Mean squared linking number of a `k`-cycle and a disjoint `l`-cycle.
pub fn expected_pair_sq_link(k: u64, l: u64, params: &TheoryParams) -> f64 {
    assert!(k >= 3 && l >= 3);
    0.5 * (k * l) as f64 * params.q
}

/// Mean sum of squared linking numbers over all disjoint cycle pairs of `K_n`.
pub fn expected_mean_sum_sq_link_complete(n: u64, params: &TheoryParams) -> f64 {
    assert!(n >= 6, "K_n has disjoint cycle pairs only for n >= 6");
    params.q * big_to_f64(&ordered_split_sum(n)) / 16.0
}

/// As [`expected_mean_sum_sq_link_complete`] for a `G(n, p)` graph:
/// `(q/16) sum_{i=6}^{n} p^i n!/(n-i)! (i-5)`.
///
/// `p` is a dyadic rational `m / 2^e`, so the whole sum is formed exactly as
/// an integer over `2^(e n)` before the single conversion.
pub fn expected_mean_sum_sq_link_np(n: u64, p: f64, params: &TheoryParams) -> f64 {
    assert!(n >= 6, "needs n >= 6");
    assert!(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
    let (mantissa, exp) = dyadic(p);
    let m = BigUint::from(mantissa);
    let mut num = BigUint::zero();
    for i in 6..=n {
        let coeff = falling_factorial(n, i) * (i - 5);
        // p^i = m^i / 2^(e i) = m^i 2^(e (n - i)) / 2^(e n)
        num += (coeff * m.pow(i as u32)) << (exp * (n - i));
    }
    params.q * big_to_f64_scaled(&num, exp * n) / 16.0
}

/// Writes a positive finite `p <= 1` as `m / 2^e` with odd `m`.
fn dyadic(p: f64) -> (u64, u64) {
    let bits = p.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if raw_exp == 0 {
        (frac, 1074i64)
    } else {
        (frac | 1 << 52, 1075 - raw_exp)
    };
    while m & 1 == 0 && e > 0 {
        m >>= 1;
        e -= 1;
    }
    (m, e as u64)
}

/// Mean squared writhe of a random `k`-cycle, `q k^2 - (6q - q') k`.
///
/// The configuration count behind this formula assumes `k >= 5`; for
/// triangles the true value is 0, which the formula matches only if `q' = 3q`.
pub fn expected_mean_sq_writhe(k: u64, params: &TheoryParams) -> Result<f64, TheoryError> {
    let qp = params.qprime()?;
    let q = params.q;
    let k = k as f64;
    Ok(q * k * k - (6.0 * q - qp) * k)
}

/// Mean sum over all cycles of `K_n` of the mean squared writhe,
/// `sum_{k=3}^{n} (q k^2 - (6q - q') k) n!/((n-k)! 2k)`.
pub fn expected_sum_sq_writhe_complete(n: u64, params: &TheoryParams) -> Result<f64, TheoryError> {
    assert!(n >= 3);
    let qp = params.qprime()?;
    let q = params.q;
    let (mut quad, mut lin) = (BigUint::zero(), BigUint::zero());
    for k in 3..=n {
        let c = count_cycles_closed_form(n, k);
        lin += &c * k;
        quad += c * (k * k);
    }
    Ok(q * big_to_f64(&quad) - (6.0 * q - qp) * big_to_f64(&lin))
}

fn probability(what: &'static str, value: f64) -> Result<f64, TheoryError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(TheoryError::OutOfRange { what, value })
    }
}

/// Probability that a random `K_6` has exactly one Hopf link, `(3 - 45q)/2`.
pub fn k6_p1(params: &TheoryParams) -> Result<f64, TheoryError> {
    probability("K6 p1", (3.0 - 45.0 * params.q) / 2.0)
}

/// Lower bound on the probability that a random `K_{3,3,1}` has exactly one
/// nontrivial link, `(3 - 54q)/2`.
pub fn k331_p1_lower(params: &TheoryParams) -> Result<f64, TheoryError> {
    probability("K331 p1 lower bound", (3.0 - 54.0 * params.q) / 2.0)
}

/// Expected sum of squared linking numbers of `K_{3,3,1}`: nine (3,4) pairs.
pub fn k331_expected_sum(params: &TheoryParams) -> f64 {
    54.0 * params.q
}

/// `(lower, upper)` envelope `(q/32) p^n n n!` and `(q/16) e^{1/p} p^n n n!`
/// around the `G(n, p)` formula (`p = 1` gives the complete-graph bounds).
pub fn sum_sq_link_bounds(n: u64, p: f64, params: &TheoryParams) -> (f64, f64) {
    let nnf = n as f64 * big_to_f64(&falling_factorial(n, n)) * p.powi(n as i32);
    (
        params.q / 32.0 * nnf,
        params.q / 16.0 * (1.0 / p).exp() * nnf,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: TheoryParams = TheoryParams {
        q: Q_REFERENCE,
        qprime: None,
    };

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn pair_values() {
        assert!((expected_pair_sq_link(3, 3, &Q) - 0.1524015).abs() < 1e-9);
        assert!((expected_pair_sq_link(3, 4, &Q) - 6.0 * Q_REFERENCE).abs() < 1e-15);
        let zero = TheoryParams::new(0.0, None).unwrap();
        assert_eq!(expected_pair_sq_link(5, 7, &zero), 0.0);
    }

    #[test]
    fn complete_graph_column() {
        // expected series of the p = 1 experiment, as published (6 significant digits)
        let published = [
            (6, 1.52402),
            (7, 32.0043),
            (8, 469.397),
            (9, 6272.85),
            (10, 83531.3),
            (11, 1148380.0),
            (12, 16536400.0),
        ];
        for (n, v) in published {
            assert!(rel(expected_mean_sum_sq_link_complete(n, &Q), v) < 5e-6, "n={n}");
        }
        let unit = TheoryParams::new(1.0, None).unwrap();
        assert_eq!(expected_mean_sum_sq_link_complete(6, &unit), 45.0);
        assert_eq!(expected_mean_sum_sq_link_complete(7, &unit), 945.0);
    }

    #[test]
    fn gnp_columns() {
        let half = [
            (6, 0.0238127),
            (7, 0.333378),
            (8, 3.0004),
            (9, 23.0031),
            (10, 167.523),
            (11, 1221.16),
            (12, 9147.73),
            (13, 71336.0),
            (14, 582553.0),
            (15, 4993280.0),
        ];
        for (n, v) in half {
            assert!(rel(expected_mean_sum_sq_link_np(n, 0.5, &Q), v) < 5e-6, "p=0.5 n={n}");
        }
        let quarter = [
            (6, 0.000372074),
            (7, 0.00390678),
            (8, 0.0247429),
            (9, 0.125017),
            (10, 0.564041),
            (11, 2.41463),
            (12, 10.1783),
            (13, 43.2545),
            (14, 188.121),
            (15, 845.054),
            (16, 3941.6),
            (17, 19142.3),
        ];
        for (n, v) in quarter {
            assert!(rel(expected_mean_sum_sq_link_np(n, 0.25, &Q), v) < 5e-6, "p=0.25 n={n}");
        }
    }

    #[test]
    fn p_one_reduces_to_complete() {
        for n in 6..=17 {
            assert_eq!(
                expected_mean_sum_sq_link_np(n, 1.0, &Q),
                expected_mean_sum_sq_link_complete(n, &Q)
            );
        }
    }

    #[test]
    fn dyadic_decomposition() {
        assert_eq!(dyadic(1.0), (1, 0));
        assert_eq!(dyadic(0.5), (1, 1));
        assert_eq!(dyadic(0.75), (3, 2));
        let (m, e) = dyadic(0.3);
        assert_eq!(m as f64 / 2f64.powi(e as i32), 0.3);
    }

    #[test]
    fn odd_p_matches_float_sum() {
        let p = 0.37f64;
        for n in 6..=14u64 {
            let direct: f64 = (6..=n)
                .map(|i| {
                    p.powi(i as i32) * big_to_f64(&falling_factorial(n, i)) * (i - 5) as f64
                })
                .sum::<f64>()
                * Q.q
                / 16.0;
            assert!(rel(expected_mean_sum_sq_link_np(n, p, &Q), direct) < 1e-12);
        }
    }

    #[test]
    fn writhe_formulas() {
        let p = Q.with_qprime(3.0 * Q.q);
        assert!((expected_mean_sq_writhe(6, &p).unwrap() - 18.0 * Q.q).abs() < 1e-15);
        assert!(expected_mean_sq_writhe(3, &p).unwrap().abs() < 1e-15);
        let mut last = expected_mean_sq_writhe(6, &p).unwrap();
        for k in 7..20 {
            let w = expected_mean_sq_writhe(k, &p).unwrap();
            assert!(w > last);
            last = w;
        }
        assert_eq!(expected_mean_sq_writhe(5, &Q), Err(TheoryError::MissingQPrime));
    }

    #[test]
    fn writhe_sum_single_triangle_and_linearity() {
        let p = TheoryParams::new(0.02, Some(0.07)).unwrap();
        assert!((expected_sum_sq_writhe_complete(3, &p).unwrap() - (3.0 * 0.07 - 9.0 * 0.02)).abs() < 1e-15);
        // direct evaluation for n = 6 with q' = 3q
        let p = Q.with_qprime(3.0 * Q.q);
        let direct: f64 = [(3u64, 20.0), (4, 45.0), (5, 72.0), (6, 60.0)]
            .iter()
            .map(|&(k, c)| expected_mean_sq_writhe(k, &p).unwrap() * c)
            .sum();
        let got = expected_sum_sq_writhe_complete(6, &p).unwrap();
        assert!(rel(got, direct) < 1e-14);
        let doubled = TheoryParams::new(2.0 * Q.q, Some(6.0 * Q.q)).unwrap();
        assert!(rel(expected_sum_sq_writhe_complete(6, &doubled).unwrap(), 2.0 * got) < 1e-14);
        assert_eq!(expected_sum_sq_writhe_complete(6, &Q), Err(TheoryError::MissingQPrime));
    }

    #[test]
    fn small_graph_probabilities() {
        assert!((k6_p1(&Q).unwrap() - 0.7380).abs() < 5e-5);
        assert!((k331_p1_lower(&Q).unwrap() - 0.5856).abs() < 5e-5);
        // the published +-0.000013 on q carries through to these intervals
        assert!((45.0f64 * 0.000013 / 2.0 - 0.0003).abs() < 5e-5);
        assert!((54.0f64 * 0.000013 / 2.0 - 0.0004).abs() < 1e-4);
        let edge = TheoryParams::new(1.0 / 15.0, None).unwrap();
        assert!(k6_p1(&edge).unwrap().abs() < 1e-15);
        let big = TheoryParams::new(0.1, None).unwrap();
        assert!(matches!(k6_p1(&big), Err(TheoryError::OutOfRange { .. })));
    }

    #[test]
    fn k331_sum() {
        assert!((k331_expected_sum(&Q) - 1.828818).abs() < 1e-12);
        assert!((k331_expected_sum(&Q) - 9.0 * expected_pair_sq_link(3, 4, &Q)).abs() < 1e-15);
        assert_eq!(k331_expected_sum(&TheoryParams::new(0.0, None).unwrap()), 0.0);
        assert_eq!(k331_expected_sum(&TheoryParams::new(1.0, None).unwrap()), 54.0);
    }

    #[test]
    fn growth_bounds() {
        for n in 11..=20 {
            let v = expected_mean_sum_sq_link_complete(n, &Q);
            let (lo, hi) = sum_sq_link_bounds(n, 1.0, &Q);
            assert!(lo <= v && v <= hi, "n={n}");
            for p in [0.25, 0.5] {
                let v = expected_mean_sum_sq_link_np(n, p, &Q);
                let (lo, hi) = sum_sq_link_bounds(n, p, &Q);
                assert!(lo <= v && v <= hi, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(TheoryParams::new(-1.0, None).is_err());
        assert!(TheoryParams::new(f64::NAN, None).is_err());
        assert!(TheoryParams::new(0.03, Some(-0.1)).is_err());
    }
}
