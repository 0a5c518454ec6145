//! Two-qubit states Alice and Bob may receive, their purifications, and the
//! ancilla states Eve holds once Alice's outcome is fixed.
//!
//! Outcomes are always ordered `z+, z-, x+, x-`. Two-qubit kets use the
//! index `2a + b` with Alice's qubit first; the purification appends Eve's
//! four-dimensional ancilla as the last factor.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::linalg::{
    bell_basis, eig_hermitian, partial_trace, pauli_product, qubit_ket, real, ComplexMatrix,
    DensityOperator, Keep, Ket,
};

/// Slack allowed on the feasibility inequality `-1 <= c22 <= 2 eps - 1`.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Bell weights at or below this are treated as exactly zero.
pub const ZERO_WEIGHT: f64 = 1e-12;

/// Alice's (or Bob's) measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    ZPlus,
    ZMinus,
    XPlus,
    XMinus,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::ZPlus,
        Outcome::ZMinus,
        Outcome::XPlus,
        Outcome::XMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::ZPlus => "z+",
            Outcome::ZMinus => "z-",
            Outcome::XPlus => "x+",
            Outcome::XMinus => "x-",
        }
    }

    pub fn ket(self) -> Ket {
        qubit_ket(self.index())
    }

    pub fn projector(self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.ket())
    }
}

/// Expectation values `c_jk = <sigma_j (x) sigma_k>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliCoefficients {
    pub c: [[f64; 4]; 4],
}

impl PauliCoefficients {
    /// Coefficients shared by every state consistent with the x/z statistics
    /// at noise level `epsilon`; all hidden coefficients zero.
    pub fn tomographic(epsilon: f64) -> Self {
        let mut c = [[0.0; 4]; 4];
        c[0][0] = 1.0;
        c[1][1] = -(1.0 - epsilon);
        c[3][3] = -(1.0 - epsilon);
        Self { c }
    }

    /// `rho = (1/4) sum_jk c_jk sigma_j (x) sigma_k`
    pub fn compose(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4);
        for j in 0..4 {
            for k in 0..4 {
                if self.c[j][k] != 0.0 {
                    m = &m + &pauli_product(j, k).scale(self.c[j][k] / 4.0);
                }
            }
        }
        m
    }

    pub fn decompose(m: &ComplexMatrix) -> Result<Self> {
        if m.dim() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "Pauli decomposition needs a 4x4 matrix, got {}",
                m.dim()
            )));
        }
        let mut c = [[0.0; 4]; 4];
        for (j, row) in c.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = m.trace_product(&pauli_product(j, k)).re;
            }
        }
        Ok(Self { c })
    }
}

/// The seven coefficients Alice and Bob cannot see.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FreeCoefficients {
    pub c02: f64,
    pub c20: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
    pub c23: f64,
    pub c32: f64,
}

impl FreeCoefficients {
    pub fn symmetric(c22: f64) -> Self {
        Self {
            c22,
            ..Self::default()
        }
    }

    pub fn to_array(self) -> [f64; 7] {
        [
            self.c02, self.c20, self.c12, self.c21, self.c22, self.c23, self.c32,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            c02: a[0],
            c20: a[1],
            c12: a[2],
            c21: a[3],
            c22: a[4],
            c23: a[5],
            c32: a[6],
        }
    }

    fn slots() -> [(usize, usize); 7] {
        [(0, 2), (2, 0), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2)]
    }
}

/// A state `(epsilon, c22)` of the Bell-diagonal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub epsilon: f64,
    pub c22: f64,
}

impl FamilyPoint {
    /// Range-checked point; feasibility is checked by the consumers.
    pub fn new(epsilon: f64, c22: f64) -> Result<Self> {
        check_range("epsilon", epsilon, 0.0, 1.0)?;
        check_range("c22", c22, -1.0, 1.0)?;
        Ok(Self { epsilon, c22 })
    }

    /// Range- and feasibility-checked point.
    pub fn feasible(epsilon: f64, c22: f64) -> Result<Self> {
        let p = Self::new(epsilon, c22)?;
        p.require_feasible()?;
        Ok(p)
    }

    pub fn is_feasible(&self) -> bool {
        self.c22 >= -1.0 - FEASIBILITY_TOL && self.c22 <= 2.0 * self.epsilon - 1.0 + FEASIBILITY_TOL
    }

    pub fn require_feasible(&self) -> Result<()> {
        if self.is_feasible() {
            Ok(())
        } else {
            Err(Error::InfeasiblePoint {
                epsilon: self.epsilon,
                c22: self.c22,
            })
        }
    }

    /// Raw Bell-diagonal weights (may be negative off the feasible region).
    pub fn raw_weights(&self) -> [f64; 4] {
        let (e, c) = (self.epsilon, self.c22);
        [
            (3.0 - 2.0 * e - c) / 4.0,
            (1.0 + c) / 4.0,
            (-1.0 + 2.0 * e - c) / 4.0,
            (1.0 + c) / 4.0,
        ]
    }

    /// Bell weights `<E_j|E_j>`, with anything at or below [`ZERO_WEIGHT`]
    /// set to exactly zero.
    pub fn weights(&self) -> [f64; 4] {
        self.raw_weights()
            .map(|w| if w <= ZERO_WEIGHT { 0.0 } else { w })
    }

    /// Indices of the ancilla axes carrying nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// A finite ensemble of states with prior probabilities.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub priors: Vec<f64>,
    pub states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(priors: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if priors.len() != states.len() || states.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} priors for {} states",
                priors.len(),
                states.len()
            )));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "ensemble states differ in dimension".into(),
            ));
        }
        let total: f64 = priors.iter().sum();
        if priors.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self { priors, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Prior-weighted average state.
    pub fn average(&self) -> DensityOperator {
        let mut m = ComplexMatrix::zeros(self.dim());
        for (p, s) in self.priors.iter().zip(&self.states) {
            m = &m + &s.matrix().scale(*p);
        }
        DensityOperator::new(m).expect("mixture of density operators")
    }
}

/// `|Psi_ABE>` with Eve's unnormalized ancilla kets.
#[derive(Debug, Clone)]
pub struct Purification {
    /// Sixteen amplitudes, index `4 * ab + e`.
    pub state: Ket,
    /// `|E_j> = sqrt(w_j) e_j`.
    pub ancilla: [Ket; 4],
}

/// Joint probabilities `p[bob][alice]` over `z+, z-, x+, x-`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    pub p: [[f64; 4]; 4],
}

impl JointTable {
    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.iter().map(|r| r.to_vec()).collect()
    }

    pub fn max_abs_diff(&self, other: &JointTable) -> f64 {
        self.p
            .iter()
            .flatten()
            .zip(other.p.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Per-cell `(empirical - p) / sqrt(p (1 - p) / n)`.
    pub fn z_scores(&self, empirical: &JointTable, n: u64) -> [[f64; 4]; 4] {
        std::array::from_fn(|b| {
            std::array::from_fn(|a| {
                let p = self.p[b][a];
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                let d = empirical.p[b][a] - p;
                if sigma > 0.0 {
                    d / sigma
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
        })
    }
}

/// `(1 - eps) |phi_1><phi_1| + eps / 4`
pub fn unbiased_noise_state(epsilon: f64) -> Result<DensityOperator> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    let singlet = ComplexMatrix::outer(&bell_basis()[0]);
    let m = &singlet.scale(1.0 - epsilon) + &ComplexMatrix::identity(4).scale(epsilon / 4.0);
    DensityOperator::new(m)
}

/// `sum_j w_j |phi_j><phi_j|` for a feasible family point.
pub fn bell_diagonal_state(point: &FamilyPoint) -> Result<DensityOperator> {
    point.require_feasible()?;
    let bell = bell_basis();
    let mut m = ComplexMatrix::zeros(4);
    for (w, phi) in point.weights().iter().zip(&bell) {
        m = &m + &ComplexMatrix::outer(phi).scale(*w);
    }
    DensityOperator::new(m)
}

/// State with the tomographic constraints at `epsilon` and the seven hidden
/// coefficients as given; rejected unless positive semidefinite.
pub fn general_state(epsilon: f64, free: &FreeCoefficients) -> Result<DensityOperator> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    let mut coeffs = PauliCoefficients::tomographic(epsilon);
    for ((j, k), v) in FreeCoefficients::slots().into_iter().zip(free.to_array()) {
        check_range("free coefficient", v, -1.0, 1.0)?;
        coeffs.c[j][k] = v;
    }
    let m = coeffs.compose();
    let min = eig_hermitian(&m)?.min_eigenvalue();
    if min < crate::linalg::DENSITY_MIN_EIGENVALUE {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    DensityOperator::new(m)
}

fn basis_ket(dim: usize, i: usize) -> Ket {
    let mut v = Ket::zeros(dim);
    v[i] = real(1.0);
    v
}

/// Schmidt-form purification `sum_j |phi_j>|E_j>` with `|E_j>` along the
/// ancilla axes.
pub fn purification(point: &FamilyPoint) -> Result<Purification> {
    point.require_feasible()?;
    let bell = bell_basis();
    let ancilla: [Ket; 4] =
        std::array::from_fn(|j| basis_ket(4, j) * real(point.weights()[j].sqrt()));
    let mut state = Ket::zeros(16);
    for (phi, e) in bell.iter().zip(&ancilla) {
        state += phi.kronecker(e);
    }
    Ok(Purification { state, ancilla })
}

/// Purification of an arbitrary two-qubit state through its eigenbasis:
/// `sum_i sqrt(lambda_i) |v_i>|e_i>`.
pub fn purify(rho: &DensityOperator) -> Ket {
    let spec = rho.spectrum();
    let d = rho.dim();
    let mut state = Ket::zeros(d * d);
    for (i, &l) in spec.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            state += spec.eigenvector(i).kronecker(&basis_ket(d, i)) * real(l.sqrt());
        }
    }
    state
}

/// Eve's ancilla states conditioned on Alice's outcome, built in closed form
/// from the Schmidt ancilla kets. Each carries prior 1/4.
pub fn conditioned_ancilla(point: &FamilyPoint) -> Result<Ensemble> {
    let pur = purification(point)?;
    let [e1, e2, e3, e4] = &pur.ancilla;
    let pair = |u: Ket, v: Ket| {
        DensityOperator::new(&ComplexMatrix::outer(&u) + &ComplexMatrix::outer(&v))
    };
    let states = vec![
        pair(e1 + e2, e3 + e4)?,
        pair(e1 - e2, e3 - e4)?,
        pair(e1 - e4, e2 + e3)?,
        pair(e1 + e4, e2 - e3)?,
    ];
    Ensemble::new(vec![0.25; 4], states)
}

/// Eve's conditioned ancilla states obtained by projecting Alice's qubit of
/// a purification `|Psi>` (two qubits followed by an ancilla of dimension
/// `len / 4`). Priors include the 1/2 for Alice's basis choice.
pub fn ancilla_ensemble(psi: &Ket) -> Result<Ensemble> {
    if !psi.len().is_multiple_of(4) || psi.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "purification length {} is not a multiple of 4",
            psi.len()
        )));
    }
    let de = psi.len() / 4;
    let rest = ComplexMatrix::identity(2 * de);
    let mut priors = Vec::with_capacity(4);
    let mut states = Vec::with_capacity(4);
    for outcome in Outcome::ALL {
        let projected = outcome.projector().kron(&rest).apply(psi);
        let reduced = partial_trace(&ComplexMatrix::outer(&projected), (4, de), Keep::Second)?;
        let prob = reduced.trace().re;
        if prob.is_nan() || prob <= 0.0 {
            return Err(Error::NotDensity(format!(
                "Alice outcome {} has zero probability",
                outcome.label()
            )));
        }
        priors.push(0.5 * prob);
        states.push(DensityOperator::normalized(reduced)?);
    }
    let total: f64 = priors.iter().sum();
    priors.iter_mut().for_each(|p| *p /= total);
    Ensemble::new(priors, states)
}

/// `p[b][a] = (1/4) tr(rho A_a (x) B_b)` for random x/z basis choices.
pub fn joint_table(rho: &DensityOperator) -> Result<JointTable> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "joint table needs a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let mut p = [[0.0; 4]; 4];
    for bob in Outcome::ALL {
        for alice in Outcome::ALL {
            let op = alice.projector().kron(&bob.projector());
            p[bob.index()][alice.index()] = 0.25 * rho.matrix().trace_product(&op).re;
        }
    }
    Ok(JointTable { p })
}

/// Empirical joint table from `n` i.i.d. draws at a family point.
pub fn simulate_raw_data(point: &FamilyPoint, n: u64, seed: u64) -> Result<JointTable> {
    let rho = bell_diagonal_state(point)?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let exact = joint_table(&rho)?;
    let cells: Vec<f64> = exact.p.iter().flatten().map(|&p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&cells).expect("table has positive mass");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 16];
    for _ in 0..n {
        counts[dist.sample(&mut rng)] += 1;
    }
    let mut p = [[0.0; 4]; 4];
    for (i, count) in counts.iter().enumerate() {
        p[i / 4][i % 4] = *count as f64 / n as f64;
    }
    Ok(JointTable { p })
}

/// Table consistent with unbiased noise `epsilon`, written out entry by entry.
pub fn expected_table(epsilon: f64) -> JointTable {
    let same = epsilon / 16.0;
    let flip = (2.0 - epsilon) / 16.0;
    let cross = 1.0 / 16.0;
    JointTable {
        p: [
            [same, flip, cross, cross],
            [flip, same, cross, cross],
            [cross, cross, same, flip],
            [cross, cross, flip, same],
        ],
    }
}
