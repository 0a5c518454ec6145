//! Small dense complex matrices: Hermitian eigendecomposition, partial trace,
//! von Neumann entropy and the Bell basis.
//!
//! Dimensions here never exceed 16, so everything is a plain `DMatrix` and
//! all routines allocate freely.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use nalgebra::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;

/// A column vector of complex amplitudes.
pub type Ket = DVector<C64>;

/// Hermiticity tolerance accepted by [`eig_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerances for [`DensityOperator`] validation.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-12;
pub const DENSITY_TRACE_TOL: f64 = 1e-12;
pub const DENSITY_MIN_EIGENVALUE: f64 = -1e-10;

/// Eigenvalues below this contribute nothing to an entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn from_inner(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "ComplexMatrix must be square");
        debug_assert!(m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_inner(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major construction from real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| real(rows[i][j]))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        Self::from_fn(dim, |i, j| {
            if i == j {
                real(diag[i])
            } else {
                C64::default()
            }
        })
    }

    /// `|v><v|`
    pub fn outer(v: &Ket) -> Self {
        Self(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = C64::default();
        for i in 0..n {
            for k in 0..n {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc
    }

    /// `<v|self|v>`
    pub fn expectation(&self, v: &Ket) -> C64 {
        (v.adjoint() * &self.0 * v)[(0, 0)]
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        &self.0 * v
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M^dagger|` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest imaginary part of any entry.
    pub fn max_imag(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * real(0.5))
    }

    /// Restriction to the coordinate subspace spanned by `axes`.
    pub fn compress(&self, axes: &[usize]) -> Self {
        Self::from_fn(axes.len(), |i, j| self.0[(axes[i], axes[j])])
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn eigenvector(&self, i: usize) -> Ket {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }

    /// `V diag(f(lambda)) V^dagger`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| real(f(l))),
        ));
        ComplexMatrix::from_inner(v * d * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before solving; anything further from Hermitian
/// than [`HERMITIAN_TOL`] is rejected.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Spectrum> {
    let defect = m.hermiticity_defect();
    if defect.is_nan() || defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let eig = SymmetricEigen::new(m.hermitian_part().into_inner());
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(m.dim(), m.dim(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Which factor of `H_A (x) H_B` survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace over one factor of a bipartite operator with factor
/// dimensions `(dim_a, dim_b)`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if da == 0 || db == 0 || da * db != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot split dimension {} as {} x {}",
            m.dim(),
            da,
            db
        )));
    }
    let inner = m.inner();
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(da, |a, a2| {
            (0..db).map(|b| inner[(a * db + b, a2 * db + b)]).sum()
        }),
        Keep::Second => ComplexMatrix::from_fn(db, |b, b2| {
            (0..da).map(|a| inner[(a * db + b, a * db + b2)]).sum()
        }),
    })
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect.is_nan() || defect > DENSITY_HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::NotDensity(format!("trace {tr} differs from 1")));
        }
        let min = eig_hermitian(&m)?.min_eigenvalue();
        if min < DENSITY_MIN_EIGENVALUE {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Normalizes a nonzero positive operator to unit trace.
    pub fn normalized(m: ComplexMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr.is_nan() || tr <= 0.0 {
            return Err(Error::NotDensity(format!("trace {tr} is not positive")));
        }
        Self::new(m.scale(1.0 / tr))
    }

    pub fn pure(v: &Ket) -> Result<Self> {
        Self::normalized(ComplexMatrix::outer(v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn spectrum(&self) -> Spectrum {
        eig_hermitian(&self.0).expect("density operators are Hermitian")
    }

    /// Eigenvalues descending, with `[-1e-10, 0)` clipped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum()
            .eigenvalues
            .into_iter()
            .map(|l| if l < 0.0 { 0.0 } else { l })
            .collect()
    }
}

/// Shannon entropy in bits of a weight vector; weights below
/// [`ENTROPY_CUTOFF`] contribute zero.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|&&p| p > ENTROPY_CUTOFF)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// `S(rho) = -tr(rho log2 rho)`.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    let s = shannon_entropy(&rho.eigenvalues());
    s.min((rho.dim() as f64).log2())
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.map(|l| l.max(0.0).sqrt()))
}

/// `m^{-1/2}` for a positive definite matrix; `None` when the smallest
/// eigenvalue is at or below `floor`.
pub fn inv_sqrt_pd(m: &ComplexMatrix, floor: f64) -> Option<ComplexMatrix> {
    let spec = eig_hermitian(m).ok()?;
    if spec.min_eigenvalue() <= floor {
        return None;
    }
    Some(spec.map(|l| 1.0 / l.sqrt()))
}

/// Pauli matrices with `sigma_0 = 1`.
pub fn pauli(j: usize) -> ComplexMatrix {
    let z = C64::default();
    let one = real(1.0);
    let i = c(0.0, 1.0);
    let m = match j {
        0 => [[one, z], [z, one]],
        1 => [[z, one], [one, z]],
        2 => [[z, -i], [i, z]],
        3 => [[one, z], [z, -one]],
        _ => panic!("Pauli index {j} out of range"),
    };
    ComplexMatrix::from_fn(2, |r, s| m[r][s])
}

/// `sigma_j (x) sigma_k`
pub fn pauli_product(j: usize, k: usize) -> ComplexMatrix {
    pauli(j).kron(&pauli(k))
}

/// Single-qubit kets, ordered `z+, z-, x+, x-` with `|x+-> = (|z+> +- |z->)/sqrt 2`.
pub fn qubit_ket(index: usize) -> Ket {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match index {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (h, h),
        3 => (h, -h),
        _ => panic!("qubit ket index {index} out of range"),
    };
    Ket::from_vec(vec![real(a), real(b)])
}

/// Two-qubit product basis ket `|a>|b>`, with `a, b` in `{0 = z+, 1 = z-}`.
fn zz(a: usize, b: usize) -> Ket {
    let mut v = Ket::zeros(4);
    v[2 * a + b] = real(1.0);
    v
}

/// The four Bell kets: singlet first, then `(|+-> + |-+>)`, `(|++> + |-->)`,
/// `(|++> - |-->)`, each over sqrt 2 (with `+`/`-` meaning `z+`/`z-`).
pub fn bell_basis() -> [Ket; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (pp, pm, mp, mm) = (zz(0, 0), zz(0, 1), zz(1, 0), zz(1, 1));
    [
        (&pm - &mp) * real(h),
        (&pm + &mp) * real(h),
        (&pp + &mm) * real(h),
        (&pp - &mm) * real(h),
    ]
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase fix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            real(1.0)
        };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    ComplexMatrix::from_inner(q)
}

/// Random Hermitian matrix with standard normal entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    g.hermitian_part()
}

/// Random mixed state `G G^dagger / tr` from a Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let g = ComplexMatrix::from_fn(dim, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    DensityOperator::normalized((&g * &g.adjoint()).hermitian_part()).expect("Ginibre state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn residual(m: &ComplexMatrix, s: &Spectrum) -> f64 {
        let v = &s.eigenvectors;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            s.eigenvalues.len(),
            s.eigenvalues.iter().map(|&l| real(l)),
        ));
        (m.inner() * v - v * d)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn eig_of_identity_and_diagonal() {
        let s = eig_hermitian(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(s.eigenvalues.len(), 4);
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-15));

        let s = eig_hermitian(&ComplexMatrix::from_diagonal(&[0.3, 0.7])).unwrap();
        assert!((s.eigenvalues[0] - 0.7).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn singlet_projector_is_rank_one() {
        let p = ComplexMatrix::outer(&bell_basis()[0]);
        let s = eig_hermitian(&p).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (l, e) in s.eigenvalues.iter().zip(expected) {
            assert!((l - e).abs() < 1e-14, "{l} vs {e}");
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 4, 16] {
            for _ in 0..20 {
                let m = random_hermitian(dim, &mut rng);
                let s = eig_hermitian(&m).unwrap();
                assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
                assert!(residual(&m, &s) <= 1e-10 * dim as f64);
                assert!(s.reconstruct().max_abs_diff(&m) <= 1e-10);
                let v = &s.eigenvectors;
                let gram = ComplexMatrix::from_inner(v.adjoint() * v);
                assert!(gram.max_abs_diff(&ComplexMatrix::identity(dim)) <= 1e-10);
            }
        }
    }

    #[test]
    fn bell_basis_matches_definitions() {
        let b = bell_basis();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = [0.0, h, -h, 0.0];
        let phi4 = [h, 0.0, 0.0, -h];
        for i in 0..4 {
            assert_eq!(b[0][i], real(singlet[i]));
            assert_eq!(b[3][i], real(phi4[i]));
        }
        for j in 0..4 {
            for k in 0..4 {
                let ip = (b[j].adjoint() * &b[k])[(0, 0)];
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip - real(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_of_product_and_singlet() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(2, &mut rng);
        let tau = random_density(4, &mut rng);
        let prod = rho.matrix().kron(tau.matrix());
        let a = partial_trace(&prod, (2, 4), Keep::First).unwrap();
        assert!(a.max_abs_diff(rho.matrix()) < 1e-14);
        let b = partial_trace(&prod, (2, 4), Keep::Second).unwrap();
        assert!(b.max_abs_diff(tau.matrix()) < 1e-14);

        let singlet = ComplexMatrix::outer(&bell_basis()[0]);
        let red = partial_trace(&singlet, (2, 2), Keep::First).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            partial_trace(&m, (3, 2), Keep::First),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityOperator::pure(&bell_basis()[2]).unwrap();
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(4)) - 2.0).abs() < 1e-14);
        // binary entropy h(0.1), evaluated directly
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        let rho = DensityOperator::new(ComplexMatrix::from_diagonal(&[0.9, 0.1])).unwrap();
        assert!((von_neumann_entropy(&rho) - h).abs() < 1e-14);
        assert!((h - 0.46900).abs() < 1e-5);
    }

    #[test]
    fn density_rejects_negative_and_untraced() {
        let neg = ComplexMatrix::from_diagonal(&[1.1, -0.1]);
        assert!(matches!(
            DensityOperator::new(neg),
            Err(Error::NotPositive { .. })
        ));
        let heavy = ComplexMatrix::from_diagonal(&[0.6, 0.6]);
        assert!(matches!(
            DensityOperator::new(heavy),
            Err(Error::NotDensity(_))
        ));
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(4, &mut rng);
        assert!((&u * &u.adjoint()).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }
}
