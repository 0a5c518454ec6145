//! Measurements on Eve's ancilla: the closed-form von Neumann measurement for
//! the Bell-diagonal family, its degenerate partners, and a numerical
//! accessible-information optimizer used to check it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{mutual_information, Bits};
use crate::linalg::{c, eig_hermitian, inv_sqrt_pd, random_unitary, real, ComplexMatrix, Ket, C64};
use crate::states::{Ensemble, FamilyPoint};

/// Elements may dip this far below zero.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Entrywise tolerance on `sum_k Pi_k = 1`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        let povm = Self::unchecked(elements, labels)?;
        povm.validate()?;
        Ok(povm)
    }

    fn unchecked(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        if labels.len() != elements.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let dim = elements[0].dim();
        if elements.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "POVM elements differ in dimension".into(),
            ));
        }
        Ok(Self { elements, labels })
    }

    /// Rank-one elements `|a_k><a_k|`, labelled by index.
    pub fn from_kets(kets: &[Ket]) -> Result<Self> {
        let elements = kets.iter().map(ComplexMatrix::outer).collect();
        Self::new(elements, numbered(kets.len()))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            elements: vec![ComplexMatrix::identity(dim)],
            labels: vec!["1".into()],
        }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// `max |sum_k Pi_k - 1|` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim());
        for e in &self.elements {
            sum = &sum + e;
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| eig_hermitian(e).map_or(f64::NEG_INFINITY, |s| s.min_eigenvalue()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidPovm(format!(
                "element eigenvalue {min:.3e} is negative"
            )));
        }
        let res = self.completeness_residual();
        if res.is_nan() || res > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "completeness residual {res:.3e}"
            )));
        }
        Ok(())
    }

    /// Largest imaginary part of any entry of any element.
    pub fn max_imag(&self) -> f64 {
        self.elements
            .iter()
            .map(ComplexMatrix::max_imag)
            .fold(0.0, f64::max)
    }

    /// Numerical rank of each element.
    pub fn ranks(&self, tol: f64) -> Vec<usize> {
        self.elements
            .iter()
            .map(|e| {
                eig_hermitian(e)
                    .map(|s| s.eigenvalues.iter().filter(|&&l| l > tol).count())
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Compression onto the coordinate axes `axes`, e.g. the support of an
    /// ensemble. Not validated: completeness holds on the subspace only when
    /// the original POVM is complete.
    pub fn restrict(&self, axes: &[usize]) -> Povm {
        Povm {
            elements: self.elements.iter().map(|e| e.compress(axes)).collect(),
            labels: self.labels.clone(),
        }
    }
}

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|k| k.to_string()).collect()
}

/// The four orthonormal kets `|P_k>` of the optimal von Neumann measurement
/// at a family point, in the orthonormal ancilla basis `e_j`.
///
/// With `|E_j> = sqrt(w_j) e_j`, the `e_1` and `e_3` coefficients reduce to
/// `1/2` and the `e_2`, `e_4` coefficients to `a/2`, `b/2` with
/// `a^2 = (3 - 2 eps - c22) / (1 - c22)` and `b^2 = (2 eps - 1 - c22) / (1 - c22)`,
/// so the kets stay finite on the boundary of the feasible region.
pub fn analytic_kets(point: &FamilyPoint) -> Result<[Ket; 4]> {
    point.require_feasible()?;
    let (e, c22) = (point.epsilon, point.c22);
    let gap = 1.0 - c22;
    let (a, b) = if gap <= 1e-12 {
        // c22 = 1 forces eps = 1, where both ratios are 1
        (1.0, 1.0)
    } else {
        (
            ((3.0 - 2.0 * e - c22) / gap).max(0.0).sqrt(),
            ((2.0 * e - 1.0 - c22) / gap).max(0.0).sqrt(),
        )
    };
    let h = 0.5;
    let k = |v: [C64; 4]| Ket::from_vec(v.iter().map(|z| z * h).collect());
    let one = real(1.0);
    let i = c(0.0, 1.0);
    Ok([
        k([one, real(a), -i, -i * b]),
        k([one, real(-a), -i, i * b]),
        k([one, i * b, i, real(-a)]),
        k([one, -i * b, i, real(a)]),
    ])
}

/// The optimal von Neumann measurement as a POVM of four projectors.
pub fn analytic_povm(point: &FamilyPoint) -> Result<Povm> {
    let kets = analytic_kets(point)?;
    Povm::new(
        kets.iter().map(ComplexMatrix::outer).collect(),
        vec!["P1".into(), "P2".into(), "P3".into(), "P4".into()],
    )
}

/// Equal-weight mixture of the analytic measurement and its complex
/// conjugate; real, and the canonical representative of the optimum.
pub fn canonical_povm(point: &FamilyPoint) -> Result<Povm> {
    let m = analytic_povm(point)?;
    convex_combine(&m, &conjugate_povm(&m), 0.5)
}

/// Joint table `p(a, k) = prior_a tr(rho_a Pi_k)` for ensemble member `a`
/// (rows) and outcome `k` (columns).
pub fn outcome_table(ensemble: &Ensemble, m: &Povm) -> Result<Vec<Vec<f64>>> {
    if ensemble.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble dimension {} vs POVM dimension {}",
            ensemble.dim(),
            m.dim()
        )));
    }
    let mut table: Vec<Vec<f64>> = ensemble
        .priors
        .iter()
        .zip(&ensemble.states)
        .map(|(p, rho)| {
            m.elements()
                .iter()
                .map(|e| (p * rho.matrix().trace_product(e).re).max(0.0))
                .collect()
        })
        .collect();
    let total: f64 = table.iter().flatten().sum();
    table.iter_mut().flatten().for_each(|x| *x /= total);
    Ok(table)
}

/// Mutual information between the ensemble label and the outcome of `m`.
pub fn accessible_info(ensemble: &Ensemble, m: &Povm) -> Result<Bits> {
    mutual_information(&outcome_table(ensemble, m)?)
}

/// Entrywise complex conjugate of every element.
pub fn conjugate_povm(m: &Povm) -> Povm {
    Povm {
        elements: m.elements.iter().map(ComplexMatrix::conjugate).collect(),
        labels: m.labels.clone(),
    }
}

/// Outcome-wise `weight m1 + (1 - weight) m2`.
pub fn convex_combine(m1: &Povm, m2: &Povm, weight: f64) -> Result<Povm> {
    crate::error::check_range("weight", weight, 0.0, 1.0)?;
    if m1.len() != m2.len() || m1.dim() != m2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot combine {}x{} with {}x{}",
            m1.len(),
            m1.dim(),
            m2.len(),
            m2.dim()
        )));
    }
    let elements = m1
        .elements
        .iter()
        .zip(&m2.elements)
        .map(|(a, b)| &a.scale(weight) + &b.scale(1.0 - weight))
        .collect();
    Povm::new(elements, m1.labels.clone())
}

/// Settings for [`optimize_povm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// A run stops once the objective improves by less than this for
    /// several consecutive steps.
    pub step_tolerance: f64,
    pub seed: u64,
    /// Number of rank-one outcomes.
    pub outcome_budget: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iterations: 4000,
            step_tolerance: 1e-10,
            seed: 0,
            outcome_budget: 16,
        }
    }
}

/// How one restart went.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub restart: usize,
    pub value: Bits,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub povm: Povm,
    pub value: Bits,
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

/// Best accessible information found from random starts.
pub fn optimize_povm(ensemble: &Ensemble, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    optimize_povm_from(ensemble, cfg, &[])
}

/// As [`optimize_povm`], with extra starting measurements run before the
/// random restarts.
pub fn optimize_povm_from(
    ensemble: &Ensemble,
    cfg: &OptimizerConfig,
    starts: &[Povm],
) -> Result<OptimizeResult> {
    let dim = ensemble.dim();
    if cfg.restarts == 0 && starts.is_empty() {
        return Err(Error::OutOfRange {
            name: "restarts",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if cfg.outcome_budget < dim {
        return Err(Error::OutOfRange {
            name: "outcome_budget",
            value: cfg.outcome_budget as f64,
            lo: dim as f64,
            hi: f64::INFINITY,
        });
    }
    for s in starts {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch("starting POVM dimension".into()));
        }
    }
    let problem = Problem::new(ensemble);
    let seeded: Vec<Vec<Ket>> = starts.iter().map(kets_of).collect();
    let total = seeded.len() + cfg.restarts;
    let runs: Vec<(Vec<Ket>, RestartReport)> = (0..total)
        .into_par_iter()
        .map(|r| {
            let init = if r < seeded.len() {
                seeded[r].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r as u64);
                random_frame(dim, cfg.outcome_budget, &mut rng)
            };
            problem.ascend(init, cfg, r)
        })
        .collect();
    let mut best = 0;
    for (i, (_, rep)) in runs.iter().enumerate() {
        if rep.value > runs[best].1.value {
            best = i;
        }
    }
    let reports: Vec<RestartReport> = runs.iter().map(|(_, r)| *r).collect();
    let (kets, rep) = runs.into_iter().nth(best).expect("at least one run");
    let povm = Povm::from_kets(&kets)?;
    let value = accessible_info(ensemble, &povm)?;
    Ok(OptimizeResult {
        povm,
        value,
        best_restart: rep.restart,
        restarts: reports,
    })
}

/// Rank-one decomposition `sqrt(l) v` of every element.
fn kets_of(m: &Povm) -> Vec<Ket> {
    let mut kets = Vec::new();
    for e in m.elements() {
        let spec = eig_hermitian(e).expect("POVM elements are Hermitian");
        for (i, &l) in spec.eigenvalues.iter().enumerate() {
            if l > 1e-14 {
                kets.push(spec.eigenvector(i) * real(l.sqrt()));
            }
        }
    }
    normalize_frame(&mut kets);
    kets
}

/// `budget` kets whose dyads sum to the identity: the first `dim` rows of a
/// Haar-random `budget x budget` unitary, read column-wise.
fn random_frame(dim: usize, budget: usize, rng: &mut ChaCha8Rng) -> Vec<Ket> {
    let u = random_unitary(budget, rng);
    (0..budget)
        .map(|k| Ket::from_fn(dim, |i, _| u.get(i, k)))
        .collect()
}

/// Ensemble members pre-multiplied by their priors, stored row-major.
struct Problem {
    dim: usize,
    weighted: Vec<Vec<C64>>,
    priors: Vec<f64>,
}

/// Outcome kets stored contiguously, `count x dim`.
#[derive(Clone)]
struct Frame {
    dim: usize,
    kets: Vec<C64>,
}

impl Frame {
    fn from_kets(kets: &[Ket]) -> Self {
        let dim = kets[0].len();
        Self {
            dim,
            kets: kets.iter().flat_map(|k| k.iter().copied()).collect(),
        }
    }

    fn to_kets(&self) -> Vec<Ket> {
        self.kets
            .chunks(self.dim)
            .map(Ket::from_column_slice)
            .collect()
    }

    fn count(&self) -> usize {
        self.kets.len() / self.dim
    }

    fn ket(&self, k: usize) -> &[C64] {
        &self.kets[k * self.dim..(k + 1) * self.dim]
    }

    /// `a_k <- S^{-1/2} a_k` with `S = sum_k a_k a_k^dagger`.
    fn normalize(&mut self) -> bool {
        let d = self.dim;
        let mut s = vec![C64::default(); d * d];
        for a in self.kets.chunks(d) {
            for i in 0..d {
                for j in 0..d {
                    s[i * d + j] += a[i] * a[j].conj();
                }
            }
        }
        let s = ComplexMatrix::from_fn(d, |i, j| s[i * d + j]);
        let Some(t) = inv_sqrt_pd(&s, 1e-300) else {
            return false;
        };
        let mut out = vec![C64::default(); d];
        for a in self.kets.chunks_mut(d) {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..d).map(|j| t.get(i, j) * a[j]).sum();
            }
            a.copy_from_slice(&out);
        }
        true
    }
}

fn normalize_frame(kets: &mut [Ket]) -> bool {
    let mut frame = Frame::from_kets(kets);
    if !frame.normalize() {
        return false;
    }
    for (k, a) in frame.to_kets().into_iter().enumerate() {
        kets[k] = a;
    }
    true
}

/// `y = M x` for row-major `M`.
fn mat_vec(m: &[C64], x: &[C64], y: &mut [C64]) {
    let d = x.len();
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = (0..d).map(|j| m[i * d + j] * x[j]).sum();
    }
}

impl Problem {
    fn new(ensemble: &Ensemble) -> Self {
        let dim = ensemble.dim();
        Self {
            dim,
            weighted: ensemble
                .priors
                .iter()
                .zip(&ensemble.states)
                .map(|(p, s)| {
                    let m = s.matrix();
                    (0..dim * dim)
                        .map(|ij| m.get(ij / dim, ij % dim) * *p)
                        .collect()
                })
                .collect(),
            priors: ensemble.priors.clone(),
        }
    }

    /// `p[a][k] = prior_a <a_k|rho_a|a_k>`
    fn likelihoods(&self, frame: &Frame) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mut tmp = vec![C64::default(); d];
        self.weighted
            .iter()
            .map(|w| {
                (0..frame.count())
                    .map(|k| {
                        let a = frame.ket(k);
                        mat_vec(w, a, &mut tmp);
                        let v: f64 = a.iter().zip(&tmp).map(|(x, y)| (x.conj() * y).re).sum();
                        v.max(0.0)
                    })
                    .collect()
            })
            .collect()
    }

    fn value(&self, p: &[Vec<f64>]) -> f64 {
        let k_count = p[0].len();
        let q: Vec<f64> = (0..k_count).map(|k| p.iter().map(|r| r[k]).sum()).collect();
        let mut info = 0.0;
        for (a, row) in p.iter().enumerate() {
            for (k, &pk) in row.iter().enumerate() {
                if pk > 0.0 {
                    info += pk * (pk / (self.priors[a] * q[k])).log2();
                }
            }
        }
        info
    }

    /// Ascent directions `(R_k - Lambda) a_k`, where
    /// `R_k = sum_a prior_a rho_a log2(p(a,k) / (prior_a q_k))` is the gradient
    /// with respect to `Pi_k` and `Lambda` the Hermitian part of `sum_k R_k Pi_k`.
    fn directions(&self, frame: &Frame, p: &[Vec<f64>]) -> Vec<C64> {
        let d = self.dim;
        let k_count = frame.count();
        let mut r = vec![C64::default(); d * d];
        let mut u = vec![C64::default(); k_count * d];
        for k in 0..k_count {
            let q: f64 = p.iter().map(|row| row[k]).sum();
            r.iter_mut().for_each(|x| *x = C64::default());
            for (a, w) in self.weighted.iter().enumerate() {
                let pk = p[a][k];
                if pk > 0.0 {
                    let l = (pk / (self.priors[a] * q)).log2();
                    r.iter_mut().zip(w).for_each(|(x, y)| *x += y * l);
                }
            }
            mat_vec(&r, frame.ket(k), &mut u[k * d..(k + 1) * d]);
        }
        // Lambda = herm(sum_k u_k a_k^dagger)
        let mut lambda = vec![C64::default(); d * d];
        for k in 0..k_count {
            let (uk, ak) = (&u[k * d..(k + 1) * d], frame.ket(k));
            for i in 0..d {
                for j in 0..d {
                    lambda[i * d + j] += uk[i] * ak[j].conj();
                }
            }
        }
        let herm: Vec<C64> = (0..d * d)
            .map(|ij| {
                let (i, j) = (ij / d, ij % d);
                (lambda[i * d + j] + lambda[j * d + i].conj()) * 0.5
            })
            .collect();
        let mut la = vec![C64::default(); d];
        for k in 0..k_count {
            mat_vec(&herm, frame.ket(k), &mut la);
            for (x, y) in u[k * d..(k + 1) * d].iter_mut().zip(&la) {
                *x -= y;
            }
        }
        u
    }

    /// Steepest ascent on the outcome kets: evaluate the likelihood table and
    /// the gradient operators, move every ket along its direction, restore
    /// completeness, and adapt the step by backtracking.
    fn ascend(
        &self,
        kets: Vec<Ket>,
        cfg: &OptimizerConfig,
        restart: usize,
    ) -> (Vec<Ket>, RestartReport) {
        let mut frame = Frame::from_kets(&kets);
        let mut p = self.likelihoods(&frame);
        let mut value = self.value(&p);
        let mut step = 1.0;
        let mut quiet = 0;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let dirs = self.directions(&frame, &p);
            let mut accepted = None;
            while step > 1e-14 {
                let mut trial = frame.clone();
                trial
                    .kets
                    .iter_mut()
                    .zip(&dirs)
                    .for_each(|(a, g)| *a += g * step);
                if trial.normalize() {
                    let tp = self.likelihoods(&trial);
                    let v = self.value(&tp);
                    if v >= value {
                        accepted = Some((trial, tp, v));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((trial, tp, v)) = accepted else {
                converged = true;
                break;
            };
            let gain = v - value;
            frame = trial;
            p = tp;
            value = v;
            step = (step * 1.5).min(64.0);
            if gain < cfg.step_tolerance {
                quiet += 1;
                if quiet >= 20 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        (
            frame.to_kets(),
            RestartReport {
                restart,
                value,
                iterations,
                converged,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::{hsw_bound, mi_eve_analytic, phi};
    use crate::linalg::DensityOperator;
    use crate::states::conditioned_ancilla;

    fn point(e: f64, c: f64) -> FamilyPoint {
        FamilyPoint::feasible(e, c).unwrap()
    }

    #[test]
    fn analytic_kets_are_orthonormal() {
        for (e, c) in [
            (0.3, -0.5),
            (0.1, -0.9),
            (0.45, -0.2),
            (0.8, 0.3),
            (0.2, -0.6),
            (0.0, -1.0),
        ] {
            let kets = analytic_kets(&point(e, c)).unwrap();
            for j in 0..4 {
                for k in 0..4 {
                    let ip = (kets[j].adjoint() * &kets[k])[(0, 0)];
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!(
                        (ip - real(want)).norm() < 1e-12,
                        "({e},{c}) <P{j}|P{k}> = {ip}"
                    );
                }
            }
            assert!(analytic_povm(&point(e, c)).unwrap().completeness_residual() < 1e-10);
        }
    }

    #[test]
    fn analytic_value_examples() {
        let ens = conditioned_ancilla(&point(0.3, -0.5)).unwrap();
        let got = accessible_info(&ens, &analytic_povm(&point(0.3, -0.5)).unwrap()).unwrap();
        assert!((got - mi_eve_analytic(-0.5).unwrap()).abs() < 1e-10);

        let p = point(0.4, -0.2);
        let ens = conditioned_ancilla(&p).unwrap();
        let got = accessible_info(&ens, &analytic_povm(&p).unwrap()).unwrap();
        assert!((got - 0.5 * phi(0.96f64.sqrt()).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn single_outcome_gives_nothing() {
        let ens = conditioned_ancilla(&point(0.3, -0.5)).unwrap();
        assert!(accessible_info(&ens, &Povm::identity(4)).unwrap().abs() < 1e-15);
        assert!(matches!(
            accessible_info(&ens, &Povm::identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn boundary_w3_zero_reduces_to_support() {
        for e in [0.1, 0.2, 0.35] {
            let p = point(e, 2.0 * e - 1.0);
            assert_eq!(p.support(), vec![0, 1, 3]);
            let m = analytic_povm(&p).unwrap();
            let reduced = m.restrict(&p.support());
            assert!(reduced.completeness_residual() <= 1e-9);
            assert!(reduced.min_eigenvalue() >= -1e-10);
            let ens = conditioned_ancilla(&p).unwrap();
            let got = accessible_info(&ens, &m).unwrap();
            assert!((got - mi_eve_analytic(p.c22).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugate_examples() {
        let real_povm = Povm::from_kets(&[
            Ket::from_vec(vec![real(1.0), real(0.0)]),
            Ket::from_vec(vec![real(0.0), real(1.0)]),
        ])
        .unwrap();
        assert_eq!(conjugate_povm(&real_povm), real_povm);

        let p = point(0.3, -0.4);
        let m = analytic_povm(&p).unwrap();
        let conj = conjugate_povm(&m);
        assert!(conj.max_imag() > 0.1 && conj != m);
        assert_eq!(conjugate_povm(&conj), m);
        let ens = conditioned_ancilla(&p).unwrap();
        let a = accessible_info(&ens, &m).unwrap();
        let b = accessible_info(&ens, &conj).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn convex_combination_examples() {
        let p = point(0.35, -0.3);
        let m = analytic_povm(&p).unwrap();
        let conj = conjugate_povm(&m);
        assert_eq!(convex_combine(&m, &conj, 1.0).unwrap(), m);
        let ens = conditioned_ancilla(&p).unwrap();
        let base = accessible_info(&ens, &m).unwrap();
        let half = convex_combine(&m, &conj, 0.5).unwrap();
        assert!(half.max_imag() < 1e-12);
        assert_eq!(half.ranks(1e-9), vec![2, 2, 2, 2]);
        assert!((accessible_info(&ens, &half).unwrap() - base).abs() < 1e-12);
        for w in 1..10 {
            let mix = convex_combine(&m, &conj, w as f64 / 10.0).unwrap();
            assert!((accessible_info(&ens, &mix).unwrap() - base).abs() < 1e-10);
        }
        assert!(convex_combine(&m, &Povm::identity(4), 0.5).is_err());
        assert!(convex_combine(&m, &conj, 1.5).is_err());
    }

    #[test]
    fn povm_validation_rejects_bad_sets() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(Povm::new(vec![half.clone()], vec!["a".into()]).is_err());
        let neg = ComplexMatrix::from_diagonal(&[1.5, 1.0]);
        let fix = ComplexMatrix::from_diagonal(&[-0.5, 0.0]);
        assert!(Povm::new(vec![neg, fix], vec!["a".into(), "b".into()]).is_err());
        assert!(Povm::new(vec![half.clone(), half], vec!["a".into(), "b".into()]).is_ok());
    }

    #[test]
    fn optimizer_finds_analytic_value() {
        let p = point(0.3, -0.4);
        let ens = conditioned_ancilla(&p).unwrap();
        let cfg = OptimizerConfig {
            seed: 1,
            ..OptimizerConfig::default()
        };
        let res = optimize_povm(&ens, &cfg).unwrap();
        let target = mi_eve_analytic(-0.4).unwrap();
        assert!(
            res.value <= target + 1e-6,
            "{} exceeds {}",
            res.value,
            target
        );
        assert!(
            res.value >= target - 1e-5,
            "{} short of {}",
            res.value,
            target
        );
        res.povm.validate().unwrap();
        assert!(res.value <= hsw_bound(&ens) + 1e-9);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let ens = conditioned_ancilla(&point(0.25, -0.6)).unwrap();
        let cfg = OptimizerConfig {
            restarts: 4,
            seed: 77,
            ..OptimizerConfig::default()
        };
        let a = optimize_povm(&ens, &cfg).unwrap();
        let b = optimize_povm(&ens, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.povm, b.povm);
    }

    #[test]
    fn optimizer_trivial_ensembles() {
        let ens = conditioned_ancilla(&point(0.0, -1.0)).unwrap();
        let cfg = OptimizerConfig {
            restarts: 3,
            ..OptimizerConfig::default()
        };
        assert!(optimize_povm(&ens, &cfg).unwrap().value.abs() < 1e-12);

        let rho =
            DensityOperator::new(ComplexMatrix::from_diagonal(&[0.4, 0.3, 0.2, 0.1])).unwrap();
        let same = Ensemble::new(vec![0.25; 4], vec![rho; 4]).unwrap();
        assert!(optimize_povm(&same, &cfg).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn optimizer_seeded_start_keeps_value() {
        let p = point(0.2, -0.7);
        let ens = conditioned_ancilla(&p).unwrap();
        let cfg = OptimizerConfig {
            restarts: 1,
            ..OptimizerConfig::default()
        };
        let start = analytic_povm(&p).unwrap();
        let analytic = accessible_info(&ens, &start).unwrap();
        let res = optimize_povm_from(&ens, &cfg, &[start]).unwrap();
        assert!(res.value >= analytic - 1e-6);
    }

    #[test]
    fn optimizer_rejects_small_budget() {
        let ens = conditioned_ancilla(&point(0.3, -0.4)).unwrap();
        let cfg = OptimizerConfig {
            outcome_budget: 3,
            ..OptimizerConfig::default()
        };
        assert!(optimize_povm(&ens, &cfg).is_err());
    }
}
