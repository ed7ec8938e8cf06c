//! Mutual information over finite distributions and Blahut–Arimoto capacity.
//!
//! Everything is in nats; callers wanting bits divide by `ln 2`.

use rand::Rng;

use crate::channel::Dmc;
use crate::composition::{end_to_end, BatchNetwork};
use crate::error::{Error, Result};

/// Default convergence tolerance for capacity computations, in nats.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default iteration cap for capacity computations.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// A probability distribution over channel inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty distribution".into()));
        }
        if let Some((i, &v)) = probs
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=1.0 + 1e-12).contains(&v) || !v.is_finite())
        {
            return Err(Error::EntryOutOfRange {
                row: 0,
                col: i,
                value: v,
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::RowNotStochastic { row: 0, sum });
        }
        Ok(InputDistribution { probs })
    }

    pub fn uniform(len: usize) -> Self {
        InputDistribution {
            probs: vec![1.0 / len as f64; len.max(1)],
        }
    }

    /// Uniformly distributed point of the probability simplex (normalized
    /// exponentials).
    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        let mut probs: Vec<f64> = (0..len.max(1))
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        InputDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// `I(p, W)` in nats, with `0 ln(0/q) = 0`.
pub fn mutual_information(p: &InputDistribution, w: &Dmc) -> Result<f64> {
    if p.len() != w.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} symbols against a channel with {} inputs",
            p.len(),
            w.num_inputs()
        )));
    }
    Ok(mi_unchecked(p.probs(), w))
}

pub(crate) fn mi_unchecked(p: &[f64], w: &Dmc) -> f64 {
    let cols = w.num_outputs();
    let mut marginal = vec![0.0; cols];
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (m, &v) in marginal.iter_mut().zip(w.row(x)) {
            *m += px * v;
        }
    }
    let mut mi = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &v) in w.row(x).iter().enumerate() {
            if v > 0.0 {
                mi += px * v * (v / marginal[y]).ln();
            }
        }
    }
    mi
}

/// Outcome of a capacity computation.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Achievable lower estimate at termination (the mutual information of
    /// `optimizer`), in nats per channel input.
    pub capacity_nats: f64,
    pub optimizer: InputDistribution,
    pub iterations: usize,
    /// Difference between the upper and lower capacity estimates at
    /// termination.
    pub gap_bound: f64,
    /// False when the iteration cap was reached before the gap closed.
    pub converged: bool,
}

/// Alternating-maximization capacity computation with uniform
/// initialization. Lower estimates are non-decreasing across iterations;
/// the result is flagged non-converged if `max_iter` passes before the
/// upper/lower gap reaches `tol`.
///
/// Input symbols given zero probability never regain mass, but the uniform
/// start leaves every symbol alive; useless inputs decay instead of being
/// excluded outright.
pub fn blahut_arimoto(w: &Dmc, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    let n_in = w.num_inputs();
    let mut p = vec![1.0 / n_in as f64; n_in];
    let mut exponent = vec![0.0; n_in];
    let mut marginal = vec![0.0; w.num_outputs()];
    let mut lower = 0.0;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        marginal.fill(0.0);
        for (x, &px) in p.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (m, &v) in marginal.iter_mut().zip(w.row(x)) {
                *m += px * v;
            }
        }
        // relative entropy of each row against the output marginal
        let mut upper = f64::NEG_INFINITY;
        lower = 0.0;
        for x in 0..n_in {
            let mut d = 0.0;
            for (y, &v) in w.row(x).iter().enumerate() {
                if v > 0.0 {
                    d += v * (v / marginal[y]).ln();
                }
            }
            exponent[x] = d;
            upper = upper.max(d);
            lower += p[x] * d;
        }
        gap = (upper - lower).max(0.0);
        if gap <= tol {
            return Ok(CapacityResult {
                capacity_nats: lower.max(0.0),
                optimizer: InputDistribution { probs: p },
                iterations,
                gap_bound: gap,
                converged: true,
            });
        }
        let mut norm = 0.0;
        for (px, &d) in p.iter_mut().zip(&exponent) {
            *px *= (d - upper).exp();
            norm += *px;
        }
        for px in &mut p {
            *px /= norm;
        }
    }
    Ok(CapacityResult {
        capacity_nats: lower.max(0.0),
        optimizer: InputDistribution { probs: p },
        iterations,
        gap_bound: gap,
        converged: false,
    })
}

/// The network's exact achievable rate in nats per channel use: capacity of
/// the end-to-end batch channel divided by the inner blocklength.
pub fn batch_rate(net: &BatchNetwork, tol: f64) -> Result<f64> {
    let w = end_to_end(net)?;
    let cap = blahut_arimoto(&w, tol, DEFAULT_MAX_ITER)?;
    Ok(cap.capacity_nats / net.inner_blocklength() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::channel::{make_bsc, make_custom, make_erasure, Dmc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LN_2: f64 = std::f64::consts::LN_2;

    fn binary_entropy(p: f64) -> f64 {
        if p == 0.0 || p == 1.0 {
            0.0
        } else {
            -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
        }
    }

    fn identity2() -> Dmc {
        let a = Alphabet::binary();
        Dmc::new(a.clone(), a, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn mi_of_identity_is_ln2() {
        let p = InputDistribution::uniform(2);
        let mi = mutual_information(&p, &identity2()).unwrap();
        assert!((mi - LN_2).abs() < 1e-12);
    }

    #[test]
    fn mi_of_constant_channel_is_zero() {
        let a = Alphabet::binary();
        let w = Dmc::new(a.clone(), a, vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let p = InputDistribution::new(vec![0.2, 0.8]).unwrap();
        assert_eq!(mutual_information(&p, &w).unwrap(), 0.0);
    }

    #[test]
    fn mi_of_uniform_bsc_matches_closed_form() {
        let p = InputDistribution::uniform(2);
        let mi = mutual_information(&p, &make_bsc(0.1).unwrap()).unwrap();
        assert!((mi - (LN_2 - binary_entropy(0.1))).abs() < 1e-12);
    }

    #[test]
    fn capacity_of_bsc_matches_closed_form() {
        let r = blahut_arimoto(&make_bsc(0.1).unwrap(), 1e-9, 100_000).unwrap();
        assert!(r.converged);
        assert!(r.gap_bound <= 1e-9);
        assert!((r.capacity_nats - (LN_2 - binary_entropy(0.1))).abs() < 1e-6);
        for &p in r.optimizer.probs() {
            assert!((p - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn capacity_of_identity_is_ln2() {
        let r = blahut_arimoto(&identity2(), 1e-9, 100).unwrap();
        assert!((r.capacity_nats - LN_2).abs() < 1e-9);
    }

    #[test]
    fn capacity_of_input_restricted_erasure_matches_closed_form() {
        // erasure channel rows for Q* only (silent input dropped)
        let eps = 0.25;
        let full = make_erasure(2, eps).unwrap();
        let input = Alphabet::new(["a", "b"]).unwrap();
        let rows = vec![full.row(1).to_vec(), full.row(2).to_vec()];
        let restricted = make_custom(input, full.output_alphabet().clone(), rows).unwrap();
        let r = blahut_arimoto(&restricted, 1e-9, 100_000).unwrap();
        assert!((r.capacity_nats - (1.0 - eps) * LN_2).abs() < 1e-6);
    }

    #[test]
    fn iterates_are_monotone_and_converge_on_builtins() {
        for w in [
            make_bsc(0.3).unwrap(),
            make_erasure(2, 0.5).unwrap(),
            make_erasure(3, 0.2).unwrap(),
            crate::channel::make_bec(0.3).unwrap(),
        ] {
            // run iteration-by-iteration to observe the lower estimates
            let mut last = 0.0;
            for iters in 1..30 {
                let r = blahut_arimoto(&w, 1e-15, iters).unwrap();
                assert!(
                    r.capacity_nats >= last - 1e-12,
                    "lower estimate decreased: {} -> {}",
                    last,
                    r.capacity_nats
                );
                last = r.capacity_nats;
            }
            let r = blahut_arimoto(&w, 1e-9, 100_000).unwrap();
            assert!(r.converged, "no convergence for {w:?}");
            assert!(r.gap_bound <= 1e-9);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        // at eps = 0.25 the optimizer is non-uniform, so three iterations
        // cannot close a 1e-15 gap
        let r = blahut_arimoto(&make_erasure(2, 0.25).unwrap(), 1e-15, 3).unwrap();
        assert!(!r.converged);
        assert!(r.iterations == 3);
    }

    #[test]
    fn mi_bounds_hold_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = make_erasure(2, 0.3).unwrap();
        for _ in 0..50 {
            let p = InputDistribution::random(3, &mut rng);
            let mi = mutual_information(&p, &w).unwrap();
            assert!(mi >= 0.0);
            assert!(mi <= p.entropy() + 1e-12);
            assert!(mi <= (w.num_outputs() as f64).ln() + 1e-12);
        }
    }

    #[test]
    fn mi_is_concave_in_the_input_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let w = make_bsc(0.2).unwrap();
        for _ in 0..30 {
            let a = InputDistribution::random(2, &mut rng);
            let b = InputDistribution::random(2, &mut rng);
            let lambda: f64 = rng.random();
            let mix = InputDistribution::new(
                a.probs()
                    .iter()
                    .zip(b.probs())
                    .map(|(&x, &y)| lambda * x + (1.0 - lambda) * y)
                    .collect(),
            )
            .unwrap();
            let lhs = mutual_information(&mix, &w).unwrap();
            let rhs = lambda * mutual_information(&a, &w).unwrap()
                + (1.0 - lambda) * mutual_information(&b, &w).unwrap();
            assert!(lhs >= rhs - 1e-12);
        }
    }

    #[test]
    fn mi_is_convex_in_the_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = make_bsc(0.1).unwrap();
        let b = make_bsc(0.4).unwrap();
        for _ in 0..30 {
            let p = InputDistribution::random(2, &mut rng);
            let lambda: f64 = rng.random();
            let rows = (0..2)
                .map(|x| {
                    a.row(x)
                        .iter()
                        .zip(b.row(x))
                        .map(|(&u, &v)| lambda * u + (1.0 - lambda) * v)
                        .collect()
                })
                .collect();
            let mix = Dmc::new(
                a.input_alphabet().clone(),
                a.output_alphabet().clone(),
                rows,
            )
            .unwrap();
            let lhs = mutual_information(&p, &mix).unwrap();
            let rhs = lambda * mutual_information(&p, &a).unwrap()
                + (1.0 - lambda) * mutual_information(&p, &b).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }
}
