//! Distributed power control baseline and feasibility analysis.
//!
//! Implements the classical fixed-target iteration: each transmitter
//! scales its power by the ratio of its SINR target to its measured SINR,
//! clamped to the power limit. Feasibility of a target vector is decided
//! through the normalized interference matrix F: the iteration converges
//! to `p* = (I - F)^-1 u` exactly when the spectral radius of F is below
//! one and the fixed point respects the power limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::{compute_metrics, PowerVector, Scenario};
use crate::scalar::Scalar;

/// Stopping tolerance for the spectral-radius power iteration. Applied in
/// the scalar type's own precision, floored near machine epsilon for
/// narrow scalars.
const RHO_TOL: f64 = 1e-10;
/// Iteration cap for the power iteration. If reached, the returned radius
/// is the current upper Collatz-Wielandt bound (conservative: biases the
/// verdict toward infeasible).
const RHO_MAX_ITERS: usize = 10_000;

/// Outcome of the feasibility analysis for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeasibilityReport<F: Scalar> {
    /// Per-link SINR targets derived from the rate targets.
    pub target_sinr: Vec<F>,
    /// Spectral radius of the normalized interference matrix.
    pub spectral_radius: F,
    /// Power fixed point, present iff the spectral radius is below one
    /// and the linear solve produced finite values.
    pub fixed_point: Option<PowerVector<F>>,
    /// True iff the fixed point exists and lies in `[0, p_max]^N`.
    pub feasible: bool,
}

/// Invert the rate formula: gamma[i] = 2^(target[i]/bandwidth) - 1.
pub fn target_sinr<F: Scalar>(scenario: &Scenario<F>) -> Vec<F> {
    let two = F::from_f64_lossy(2.0);
    scenario
        .targets_kbps
        .iter()
        .map(|&t| two.powf(t / scenario.bandwidth_khz) - F::one())
        .collect()
}

/// One synchronous power-control update from `powers`.
///
/// `p'[i] = min(p_max, gamma[i] / sinr[i] * p[i])`, with two guards:
/// a zero target yields zero power, and a zero SINR against a positive
/// target escalates straight to the limit.
pub fn dpc_step<F: Scalar>(scenario: &Scenario<F>, powers: &PowerVector<F>) -> Result<PowerVector<F>> {
    let gamma = target_sinr(scenario);
    let metrics = compute_metrics(scenario, powers)?;
    let next = powers
        .as_slice()
        .iter()
        .zip(&metrics.sinr)
        .zip(&gamma)
        .map(|((&p, &s), &g)| {
            if g <= F::zero() {
                F::zero()
            } else if s <= F::zero() {
                scenario.p_max
            } else {
                (g / s * p).min(scenario.p_max)
            }
        })
        .collect();
    Ok(PowerVector(next))
}

/// Classify a scenario as feasible or divergent for the baseline.
///
/// Builds `F[i][j] = gamma[i] * g[j][i] / g[i][i]` (zero diagonal) and
/// `u[i] = gamma[i] / g[i][i]`, estimates the spectral radius by power
/// iteration, and solves for the fixed point when the radius is below one.
pub fn analyze_feasibility<F: Scalar>(scenario: &Scenario<F>) -> Result<FeasibilityReport<F>> {
    let n = scenario.n_pairs;
    for i in 0..n {
        if !(scenario.gains[i][i] > F::zero()) {
            return Err(Error::DegenerateLink(i));
        }
    }
    let gamma = target_sinr(scenario);

    let mut f_mat = vec![vec![F::zero(); n]; n];
    let mut u = vec![F::zero(); n];
    for i in 0..n {
        u[i] = gamma[i] / scenario.gains[i][i];
        for (j, f) in f_mat[i].iter_mut().enumerate() {
            if j != i {
                *f = gamma[i] * scenario.gains[j][i] / scenario.gains[i][i];
            }
        }
    }

    let rho = spectral_radius(&f_mat);

    let fixed_point = if rho < F::one() {
        // (I - F) p = u
        let mut a = f_mat.clone();
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { F::one() - *v } else { -*v };
            }
        }
        solve_linear(a, u).map(PowerVector)
    } else {
        None
    };

    let feasible = match &fixed_point {
        Some(p) => p
            .as_slice()
            .iter()
            .all(|&v| v >= F::zero() && v <= scenario.p_max),
        None => false,
    };

    Ok(FeasibilityReport {
        target_sinr: gamma,
        spectral_radius: rho,
        fixed_point,
        feasible,
    })
}

/// Spectral radius of a nonnegative matrix with zero diagonal.
///
/// Power iteration runs on `F + I` (shifting the spectrum by one keeps
/// the dominant eigenvalue real positive and kills the +/- oscillation a
/// zero-diagonal matrix exhibits) and stops when the Collatz-Wielandt
/// ratio bounds pinch below tolerance. Zero rows contribute only zero
/// eigenvalues, so they are peeled off first; this also makes the
/// decoupled case exact.
fn spectral_radius<F: Scalar>(f_mat: &[Vec<F>]) -> F {
    let n = f_mat.len();
    let mut keep: Vec<bool> = (0..n).map(|i| f_mat[i].iter().any(|&v| v > F::zero())).collect();
    // Removing a zero row (and its column) can zero out further rows.
    loop {
        let mut changed = false;
        for i in 0..n {
            if keep[i] && !f_mat[i].iter().enumerate().any(|(j, &v)| keep[j] && v > F::zero()) {
                keep[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let support: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    if support.is_empty() {
        return F::zero();
    }

    let m = support.len();
    let tol = F::from_f64_lossy(RHO_TOL).max(F::epsilon() * F::from_f64_lossy(32.0));
    let mut x = vec![F::one(); m];
    let mut upper = F::one();
    for _ in 0..RHO_MAX_ITERS {
        let mut y = vec![F::zero(); m];
        for (ri, &i) in support.iter().enumerate() {
            let mut acc = x[ri];
            for (rj, &j) in support.iter().enumerate() {
                acc += f_mat[i][j] * x[rj];
            }
            y[ri] = acc;
        }
        let mut lo = F::infinity();
        let mut hi = F::zero();
        for (yi, xi) in y.iter().zip(&x) {
            let r = *yi / *xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        upper = hi;
        if hi - lo < tol {
            let two = F::from_f64_lossy(2.0);
            return ((hi + lo) / two - F::one()).max(F::zero());
        }
        let norm = y.iter().copied().fold(F::zero(), F::max);
        for v in &mut y {
            *v /= norm;
        }
        x = y;
    }
    (upper - F::one()).max(F::zero())
}

/// Gaussian elimination with partial pivoting. Returns None on a singular
/// system or a nonfinite solution.
fn solve_linear<F: Scalar>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if !(a[pivot_row][col].abs() > F::zero()) {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != F::zero() {
                let (pivot, rest) = a.split_at_mut(col + 1);
                let src = &pivot[col][col..];
                let dst = &mut rest[row - col - 1][col..];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= factor * *s;
                }
                let rhs = b[col];
                b[row] -= factor * rhs;
            }
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}
