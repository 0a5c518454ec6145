//! Eve's information along the distinguished `c22` curves, the noise
//! thresholds where it overtakes Bob's, and a randomized search over the
//! nonsymmetric states.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::infotheory::{
    hsw_optimal, mi_alice_bob, mi_eve_analytic, mi_eve_optimal, min_abs_c22, Bits,
};
use crate::linalg::von_neumann_entropy;
use crate::povm::{optimize_povm, OptimizerConfig};
use crate::states::{
    ancilla_ensemble, bell_diagonal_state, general_state, purify, FamilyPoint, FreeCoefficients,
};

/// Quantum bit error rate for noise level `epsilon`.
pub fn qber(epsilon: f64) -> f64 {
    epsilon / 2.0
}

/// Which state Eve sends (and how she attacks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curve {
    /// The unbiased-noise state itself, `c22 = -(1 - eps)`.
    Honest,
    /// Maximum-entropy state, `c22 = -(1 - eps)^2`.
    MaxEnt,
    /// Smallest concurrence, i.e. smallest feasible `|c22|`.
    MinConc,
    /// Collective attack on the key at the maximum-entropy state.
    Hsw,
}

impl Curve {
    pub const ALL: [Curve; 4] = [Curve::Honest, Curve::MaxEnt, Curve::MinConc, Curve::Hsw];

    pub fn name(self) -> &'static str {
        match self {
            Curve::Honest => "honest",
            Curve::MaxEnt => "maxent",
            Curve::MinConc => "minconc",
            Curve::Hsw => "hsw",
        }
    }

    /// The `c22` Eve chooses at noise level `epsilon`.
    pub fn c22(self, epsilon: f64) -> Result<f64> {
        check_range("epsilon", epsilon, 0.0, 1.0)?;
        Ok(match self {
            Curve::Honest => -(1.0 - epsilon),
            Curve::MaxEnt | Curve::Hsw => -(1.0 - epsilon) * (1.0 - epsilon),
            Curve::MinConc => min_abs_c22(epsilon)?,
        })
    }

    pub fn point(self, epsilon: f64) -> Result<FamilyPoint> {
        FamilyPoint::feasible(epsilon, self.c22(epsilon)?)
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Curve {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Curve::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown curve '{s}' (expected honest, maxent, minconc or hsw)"))
    }
}

/// Eve's information on a curve, for `0 <= eps <= 1/2`.
pub fn eve_curve(curve: Curve, epsilon: f64) -> Result<Bits> {
    check_range("epsilon", epsilon, 0.0, 0.5)?;
    match curve {
        Curve::Hsw => hsw_optimal(epsilon),
        _ => mi_eve_analytic(curve.c22(epsilon)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub curve: Curve,
    pub epsilon_star: f64,
    pub qber: f64,
    /// `|I_AB - I_AE|` at `epsilon_star`.
    pub residual: f64,
    pub iterations: usize,
}

pub const MAX_BISECTION_STEPS: usize = 64;

/// Bisection for the noise level where Eve's information on `curve` meets
/// Bob's, over `(0, 1/2)`.
pub fn find_threshold(curve: Curve, tolerance: f64) -> Result<ThresholdResult> {
    check_range("tolerance", tolerance, 1e-12, 1.0)?;
    let rate = |e: f64| -> Result<f64> { Ok(mi_alice_bob(e)? - eve_curve(curve, e)?) };
    let (mut lo, mut hi) = (0.0, 0.5);
    let (f_lo, f_hi) = (rate(lo)?, rate(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoSignChange {
            curve: curve.name().into(),
        });
    }
    let mut best = (lo, f_lo.abs());
    let mut iterations = 0;
    while iterations < MAX_BISECTION_STEPS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let f = rate(mid)?;
        if f.abs() < best.1 {
            best = (mid, f.abs());
        }
        if f.abs() <= tolerance {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        curve,
        epsilon_star: best.0,
        qber: qber(best.0),
        residual: best.1,
        iterations,
    })
}

/// Golden-section maximizer of the entropy of the Bell-diagonal state over
/// the feasible `c22` interval.
pub fn max_entropy_c22(epsilon: f64) -> Result<f64> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    let entropy = |c22: f64| -> Result<f64> {
        let p = FamilyPoint::feasible(epsilon, c22)?;
        Ok(von_neumann_entropy(&bell_diagonal_state(&p)?))
    };
    let (mut a, mut b) = (-1.0, 2.0 * epsilon - 1.0);
    if b - a <= 0.0 {
        return Ok(-1.0);
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = entropy(x1)?;
    let mut f2 = entropy(x2)?;
    while b - a > 1e-11 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = entropy(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = entropy(x1)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// One row of the information curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub epsilon: f64,
    pub i_ab: Bits,
    pub honest: Bits,
    pub maxent: Bits,
    pub minconc: Bits,
    pub hsw: Bits,
    pub qber: f64,
}

pub fn scan_curves(grid: &[f64]) -> Result<Vec<ScanRow>> {
    grid.iter()
        .map(|&e| {
            Ok(ScanRow {
                epsilon: e,
                i_ab: mi_alice_bob(e)?,
                honest: eve_curve(Curve::Honest, e)?,
                maxent: eve_curve(Curve::MaxEnt, e)?,
                minconc: eve_curve(Curve::MinConc, e)?,
                hsw: eve_curve(Curve::Hsw, e)?,
                qber: qber(e),
            })
        })
        .collect()
}

/// `start, start + step, ...` up to `stop` (inclusive within rounding).
pub fn epsilon_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    check_range("start", start, 0.0, 0.5)?;
    check_range("stop", stop, 0.0, 0.5)?;
    if stop <= start {
        return Err(Error::OutOfRange {
            name: "stop",
            value: stop,
            lo: start,
            hi: 0.5,
        });
    }
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| (start + i as f64 * step).min(stop))
        .collect())
}

/// Settings for [`nonsymmetric_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub optimizer: OptimizerConfig,
    /// Rejection-sampling budget per local trial.
    pub max_attempts: usize,
    /// Standard deviation of local perturbations around the symmetric optimum.
    pub local_scale: f64,
    /// Hit-and-run steps per global trial.
    pub walk_steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig {
                restarts: 4,
                max_iterations: 2000,
                ..OptimizerConfig::default()
            },
            max_attempts: 200_000,
            local_scale: 0.05,
            walk_steps: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    /// The symmetric optimum itself.
    Anchor,
    /// Gaussian perturbation of the anchor.
    Local,
    /// Hit-and-run walk whose stationary law is uniform on the feasible set.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub trial: usize,
    pub kind: SampleKind,
    pub accepted: bool,
    pub attempts: usize,
    pub parameters: Option<[f64; 7]>,
    pub value: Option<Bits>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub epsilon: f64,
    pub qber: f64,
    pub trials: usize,
    pub accepted: usize,
    pub best_value: Bits,
    pub best_trial: usize,
    /// `c02, c20, c12, c21, c22, c23, c32`
    pub best_parameters: [f64; 7],
    pub symmetric_optimum: Bits,
    pub excess: f64,
    /// Samples (other than the anchor) within 1e-6 of the symmetric optimum.
    pub near_optimal: Vec<usize>,
    pub seed: u64,
    pub samples: Vec<SampleRecord>,
}

/// Eve's best raw-data information for a state given by its hidden
/// coefficients: purify, condition on Alice's outcomes, optimize a POVM.
pub fn eve_information(
    epsilon: f64,
    free: &FreeCoefficients,
    cfg: &OptimizerConfig,
) -> Result<Bits> {
    let rho = general_state(epsilon, free)?;
    let ensemble = ancilla_ensemble(&purify(&rho))?;
    Ok(optimize_povm(&ensemble, cfg)?.value)
}

fn is_feasible_free(epsilon: f64, x: &[f64; 7]) -> bool {
    x.iter().all(|v| v.abs() <= 1.0)
        && general_state(epsilon, &FreeCoefficients::from_array(*x)).is_ok()
}

/// Largest `t >= 0` with `x + t d` feasible, to bisection precision.
fn feasible_extent(epsilon: f64, x: &[f64; 7], d: &[f64; 7]) -> f64 {
    let at = |t: f64| -> [f64; 7] { std::array::from_fn(|i| x[i] + t * d[i]) };
    // distance to the [-1, 1]^7 box along d
    let mut hi = f64::INFINITY;
    for i in 0..7 {
        if d[i] > 0.0 {
            hi = hi.min((1.0 - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            hi = hi.min((-1.0 - x[i]) / d[i]);
        }
    }
    let hi = hi.max(0.0);
    if is_feasible_free(epsilon, &at(hi)) {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if is_feasible_free(epsilon, &at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Hit-and-run walk over the (convex) set of feasible hidden coefficients,
/// started at the maximum-entropy state; its stationary law is uniform.
fn hit_and_run(epsilon: f64, steps: usize, rng: &mut ChaCha8Rng) -> [f64; 7] {
    let mut x = FreeCoefficients::symmetric(-(1.0 - epsilon) * (1.0 - epsilon)).to_array();
    for _ in 0..steps {
        let mut d: [f64; 7] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let back: [f64; 7] = std::array::from_fn(|i| -d[i]);
        let t_max = feasible_extent(epsilon, &x, &d);
        let t_min = -feasible_extent(epsilon, &x, &back);
        let t = if t_max > t_min {
            rng.random_range(t_min..=t_max)
        } else {
            0.0
        };
        x = std::array::from_fn(|i| (x[i] + t * d[i]).clamp(-1.0, 1.0));
    }
    x
}

/// Randomized search over the seven hidden coefficients for states giving
/// Eve more than the symmetric optimum. Trial 0 is the symmetric optimum;
/// odd trials perturb it, even trials walk the whole feasible set.
pub fn nonsymmetric_search(
    epsilon: f64,
    trials: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<SearchReport> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let anchor = FreeCoefficients::symmetric(min_abs_c22(epsilon)?).to_array();
    let records: Vec<Result<SampleRecord>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let kind = match trial {
                0 => SampleKind::Anchor,
                t if t % 2 == 1 => SampleKind::Local,
                _ => SampleKind::Global,
            };
            let mut attempts = 0;
            let mut found = None;
            while attempts < cfg.max_attempts.max(1) {
                attempts += 1;
                let candidate: [f64; 7] = match kind {
                    SampleKind::Anchor => anchor,
                    SampleKind::Local => std::array::from_fn(|i| {
                        let z: f64 = rng.sample(StandardNormal);
                        (anchor[i] + cfg.local_scale * z).clamp(-1.0, 1.0)
                    }),
                    SampleKind::Global => hit_and_run(epsilon, cfg.walk_steps, &mut rng),
                };
                let free = FreeCoefficients::from_array(candidate);
                match general_state(epsilon, &free) {
                    Ok(rho) => {
                        found = Some((candidate, rho));
                        break;
                    }
                    Err(Error::NotPositive { .. }) if kind == SampleKind::Local => continue,
                    Err(e) => return Err(e),
                }
            }
            let Some((parameters, rho)) = found else {
                return Ok(SampleRecord {
                    trial,
                    kind,
                    accepted: false,
                    attempts,
                    parameters: None,
                    value: None,
                });
            };
            let optimizer = OptimizerConfig {
                seed: seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ..cfg.optimizer
            };
            let ensemble = ancilla_ensemble(&purify(&rho))?;
            let value = optimize_povm(&ensemble, &optimizer)?.value;
            Ok(SampleRecord {
                trial,
                kind,
                accepted: true,
                attempts,
                parameters: Some(parameters),
                value: Some(value),
            })
        })
        .collect();
    let samples = records.into_iter().collect::<Result<Vec<_>>>()?;

    let symmetric_optimum = mi_eve_optimal(epsilon)?;
    let mut best: Option<&SampleRecord> = None;
    for s in samples.iter().filter(|s| s.accepted) {
        if best.is_none_or(|b| s.value > b.value) {
            best = Some(s);
        }
    }
    let Some(best) = best else {
        return Err(Error::NoFeasibleSample {
            epsilon,
            attempts: samples.iter().map(|s| s.attempts).sum(),
        });
    };
    let best_value = best.value.expect("accepted samples carry a value");
    let near_optimal = samples
        .iter()
        .filter(|s| s.kind != SampleKind::Anchor)
        .filter(|s| {
            s.value
                .is_some_and(|v| (v - symmetric_optimum).abs() <= 1e-6)
        })
        .map(|s| s.trial)
        .collect();
    Ok(SearchReport {
        epsilon,
        qber: qber(epsilon),
        trials,
        accepted: samples.iter().filter(|s| s.accepted).count(),
        best_value,
        best_trial: best.trial,
        best_parameters: best.parameters.expect("accepted samples carry parameters"),
        symmetric_optimum,
        excess: best_value - symmetric_optimum,
        near_optimal,
        seed,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rules_are_feasible() {
        for i in 0..=100 {
            let e = i as f64 / 200.0;
            for c in Curve::ALL {
                assert!(c.point(e).is_ok(), "{c} at {e}");
            }
        }
    }

    #[test]
    fn curve_names_round_trip() {
        for c in Curve::ALL {
            assert_eq!(c.name().parse::<Curve>().unwrap(), c);
        }
        assert!("bogus".parse::<Curve>().is_err());
    }

    #[test]
    fn eve_curve_examples() {
        assert_eq!(eve_curve(Curve::Honest, 0.0).unwrap(), 0.0);
        let ab = mi_alice_bob(0.2).unwrap();
        assert!((eve_curve(Curve::MinConc, 0.2).unwrap() - ab).abs() < 1e-12);
        let ab = mi_alice_bob(0.2138).unwrap();
        assert!((eve_curve(Curve::MaxEnt, 0.2138).unwrap() - ab).abs() < 1e-3);
        assert!(eve_curve(Curve::Honest, 0.6).is_err());
    }

    #[test]
    fn thresholds_match_closed_forms() {
        let honest = find_threshold(Curve::Honest, 1e-12).unwrap();
        assert!((honest.epsilon_star - (1.0 - 0.5f64.sqrt())).abs() < 1e-6);
        let minconc = find_threshold(Curve::MinConc, 1e-12).unwrap();
        assert!((minconc.epsilon_star - 0.2).abs() < 1e-6);
        assert!((minconc.qber - 0.1).abs() < 1e-6);
        let maxent = find_threshold(Curve::MaxEnt, 1e-12).unwrap();
        let closed = 1.0 - ((1.25f64).sqrt() - 0.5).sqrt();
        assert!((maxent.epsilon_star - closed).abs() < 1e-6);
        let hsw = find_threshold(Curve::Hsw, 1e-12).unwrap();
        assert!((hsw.epsilon_star - 0.1230).abs() < 5e-4);
        assert!((mi_alice_bob(hsw.epsilon_star).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        for r in [honest, minconc, maxent, hsw] {
            assert!(r.residual <= 1e-12 && r.iterations <= MAX_BISECTION_STEPS);
        }
    }

    #[test]
    fn threshold_rejects_tiny_tolerance() {
        assert!(find_threshold(Curve::Honest, 1e-13).is_err());
    }

    #[test]
    fn max_entropy_examples() {
        assert!(max_entropy_c22(1.0).unwrap().abs() < 1e-6);
        assert_eq!(max_entropy_c22(0.0).unwrap(), -1.0);
        assert!((max_entropy_c22(0.3).unwrap() + 0.49).abs() < 1e-6);
    }

    #[test]
    fn scan_examples() {
        let rows = scan_curves(&[0.0, 0.2, 0.5]).unwrap();
        let r0 = rows[0];
        assert!((r0.i_ab - 0.5).abs() < 1e-15);
        assert_eq!([r0.honest, r0.maxent, r0.minconc, r0.hsw], [0.0; 4]);
        assert!((rows[1].i_ab - rows[1].minconc).abs() < 1e-9);
        assert!((rows[2].minconc - 0.5).abs() < 1e-15);
        assert!(scan_curves(&[0.7]).is_err());
    }

    #[test]
    fn grid_counts() {
        assert_eq!(epsilon_grid(0.0, 0.5, 0.01).unwrap().len(), 51);
        assert_eq!(
            epsilon_grid(0.1, 0.2, 0.05).unwrap(),
            vec![0.1, 0.15000000000000002, 0.2]
        );
        assert!(epsilon_grid(0.3, 0.2, 0.01).is_err());
        assert!(epsilon_grid(0.0, 0.5, 0.0).is_err());
        assert!(epsilon_grid(0.0, 0.6, 0.1).is_err());
    }

    #[test]
    fn search_at_zero_noise_is_trivial() {
        let cfg = SearchConfig {
            max_attempts: 500,
            ..SearchConfig::default()
        };
        let rep = nonsymmetric_search(0.0, 3, 1, &cfg).unwrap();
        assert_eq!(rep.symmetric_optimum, 0.0);
        assert!(rep.best_value.abs() < 1e-9);
        // the feasible set is a single point: perturbations are rejected
        assert!(!rep.samples[1].accepted);
    }

    #[test]
    fn symmetric_slice_recovers_optimum() {
        for e in [0.1, 0.25, 0.6] {
            let free = FreeCoefficients::symmetric(min_abs_c22(e).unwrap());
            let v = eve_information(e, &free, &SearchConfig::default().optimizer).unwrap();
            assert!(
                (v - mi_eve_optimal(e).unwrap()).abs() < 1e-5,
                "eps {e}: {v}"
            );
        }
    }

    #[test]
    fn search_single_trial_and_determinism() {
        let cfg = SearchConfig::default();
        let one = nonsymmetric_search(0.25, 1, 4, &cfg).unwrap();
        assert_eq!(one.trials, 1);
        assert_eq!(one.samples.len(), 1);
        let a = nonsymmetric_search(0.3, 6, 9, &cfg).unwrap();
        let b = nonsymmetric_search(0.3, 6, 9, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.best_value <= a.symmetric_optimum + 1e-4);
    }
}
