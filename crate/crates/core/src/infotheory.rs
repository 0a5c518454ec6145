//! Closed-form information functionals: Phi, the Alice-Bob and Alice-Eve
//! mutual informations, the HSW bound, concurrence / separability and the
//! one-way key rate.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::linalg::{pauli_product, sqrt_psd, von_neumann_entropy, DensityOperator};
use crate::states::{Ensemble, FamilyPoint};

/// Information in bits.
pub type Bits = f64;

/// `Phi(x) = (1/2) [(1-x) log2(1-x) + (1+x) log2(1+x)]`, with `Phi(1) = 1`.
pub fn phi(x: f64) -> Result<f64> {
    check_range("x", x, 0.0, 1.0)?;
    let lo = 1.0 - x;
    let lo_term = if lo > 0.0 { lo * lo.log2() } else { 0.0 };
    let hi = 1.0 + x;
    Ok((0.5 * (lo_term + hi * hi.log2())).max(0.0))
}

/// `I_AB(eps) = Phi(1 - eps) / 2`
pub fn mi_alice_bob(epsilon: f64) -> Result<Bits> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    Ok(0.5 * phi(1.0 - epsilon)?)
}

/// Eve's information from the optimal von Neumann measurement on a
/// Bell-diagonal state; depends on `c22` only.
pub fn mi_eve_analytic(c22: f64) -> Result<Bits> {
    check_range("c22", c22, -1.0, 1.0)?;
    let arg = (1.0 - c22 * c22).max(0.0).sqrt().min(1.0);
    Ok(0.5 * phi(arg)?)
}

/// Feasible `c22` of least magnitude: `-(1 - 2 eps)` below one half, zero above.
pub fn min_abs_c22(epsilon: f64) -> Result<f64> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    Ok(if epsilon < 0.5 {
        2.0 * epsilon - 1.0
    } else {
        0.0
    })
}

/// Eve's raw-data information after choosing `c22` optimally.
pub fn mi_eve_optimal(epsilon: f64) -> Result<Bits> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    if epsilon >= 0.5 {
        return Ok(0.5);
    }
    let arg = (2.0 * (epsilon * (1.0 - epsilon)).sqrt()).min(1.0);
    Ok(0.5 * phi(arg)?)
}

/// `S(average) - sum_a p_a S(rho_a)`
pub fn hsw_bound(ensemble: &Ensemble) -> Bits {
    let mixed = von_neumann_entropy(&ensemble.average());
    let members: f64 = ensemble
        .priors
        .iter()
        .zip(&ensemble.states)
        .map(|(p, s)| p * von_neumann_entropy(s))
        .sum();
    (mixed - members).max(0.0)
}

/// HSW bound at the maximum-entropy state: `1 - Phi(1 - eps)`.
pub fn hsw_optimal(epsilon: f64) -> Result<Bits> {
    check_range("epsilon", epsilon, 0.0, 1.0)?;
    Ok(1.0 - phi(1.0 - epsilon)?)
}

/// Degree of separability and concurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementNumbers {
    pub separability: f64,
    pub concurrence: f64,
}

/// Closed forms for the Bell-diagonal family.
pub fn entanglement_numbers(point: &FamilyPoint) -> Result<EntanglementNumbers> {
    point.require_feasible()?;
    let (e, c) = (point.epsilon, point.c22);
    Ok(EntanglementNumbers {
        separability: (e + 0.5 * (1.0 + c)).min(1.0),
        concurrence: (0.5 * (1.0 - c) - e).max(0.0),
    })
}

/// Hill-Wootters concurrence of an arbitrary two-qubit state.
///
/// The `lambda_i` are the singular values of `sqrt(rho) sqrt(rho~)` where
/// `rho~ = Y rho* Y` and `Y = sigma_y (x) sigma_y`, which avoids taking square
/// roots of tiny eigenvalues.
pub fn wootters_concurrence(rho: &DensityOperator) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let y = pauli_product(2, 2);
    let root = sqrt_psd(rho.matrix())?;
    let root_flipped = &(&y * &root.conjugate()) * &y;
    let mut lambda: Vec<f64> = (&root * &root_flipped)
        .into_inner()
        .singular_values()
        .iter()
        .copied()
        .collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

/// Shannon mutual information of a joint probability table (rows x columns).
pub fn mutual_information(table: &[Vec<f64>]) -> Result<Bits> {
    let total: f64 = table.iter().flatten().sum();
    if table.iter().flatten().any(|&p| p.is_nan() || p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { total });
    }
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged probability table".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|k| table.iter().map(|r| r[k]).sum())
        .collect();
    let mut info = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            if p > 0.0 {
                info += p * (p / (row_sums[r] * col_sums[k])).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

/// What Eve is assumed to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    /// Single-copy measurement on the raw data, optimal `c22`.
    RawAnalytic,
    /// Collective measurement after code words are announced.
    Hsw,
}

/// One-way key rate `I_AB - I_AE`; negative when Eve knows more than Bob.
pub fn key_rate(epsilon: f64, attack: Attack) -> Result<Bits> {
    let eve = match attack {
        Attack::RawAnalytic => mi_eve_optimal(epsilon)?,
        Attack::Hsw => hsw_optimal(epsilon)?,
    };
    Ok(mi_alice_bob(epsilon)? - eve)
}
