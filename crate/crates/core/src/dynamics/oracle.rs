//! Dense approximation of `U(t)` on a finite basis closed under the step.
//!
//! Independent of the sparse path: the principal logarithm of each cycle
//! block is assembled from its discrete-Fourier eigenpairs as a dense
//! matrix, and the fractional pulse is the dense matrix exponential of that
//! logarithm.

use super::{DynamicsError, PulseSchedule};
use crate::rational::to_f64;
use crate::reversible::{BeaconStep, ExtendedBasisState};
use crate::Rational;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Largest supported precision exponent; double precision cannot certify
/// more.
const MAX_PRECISION: u32 = 44;

#[derive(Debug, Clone)]
pub struct DenseUnitary {
    /// Column `i` is the image of `basis[i]`.
    pub matrix: DMatrix<Complex64>,
    /// Heuristic bound on the entrywise error; zero for permutation powers.
    pub error_estimate: f64,
}

impl DenseUnitary {
    /// Coordinates of `U(t)|basis[i]⟩`.
    pub fn column(&self, i: usize) -> Vec<Complex64> {
        self.matrix.column(i).iter().copied().collect()
    }
}

pub fn approx_unitary(
    step: &BeaconStep,
    sched: &PulseSchedule,
    basis: &[ExtendedBasisState],
    t: Rational,
    m: u32,
) -> Result<DenseUnitary, DynamicsError> {
    sched.check(step)?;
    if t < Rational::from_integer(0) {
        return Err(DynamicsError::NegativeTime(t));
    }
    let n = basis.len();
    let index: HashMap<&ExtendedBasisState, usize> = basis.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut succ = vec![0usize; n];
    for (i, x) in basis.iter().enumerate() {
        let y = step.forward(x)?;
        succ[i] = *index.get(&y).ok_or(DynamicsError::BasisNotClosed(i))?;
    }

    // P^c as an index map
    let c = sched.completed_pulses(t);
    let mut image: Vec<usize> = (0..n).collect();
    for _ in 0..c {
        for slot in image.iter_mut() {
            *slot = succ[*slot];
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut perm = DMatrix::from_element(n, n, zero);
    for (i, &j) in image.iter().enumerate() {
        perm[(j, i)] = Complex64::new(1.0, 0.0);
    }

    let Some(frac) = sched.pulse_fraction(t) else {
        return Ok(DenseUnitary {
            matrix: perm,
            error_estimate: 0.0,
        });
    };
    if m > MAX_PRECISION {
        return Err(DynamicsError::PrecisionUnreachable {
            estimate: f64::EPSILON,
            m,
        });
    }

    let log = principal_log(&succ);
    let f = to_f64(&frac);
    let pulse = (log * Complex64::new(f, 0.0)).exp();
    let estimate = 64.0 * (n.max(1) as f64) * f64::EPSILON * (1.0 + PI);
    if estimate > 2f64.powi(-(m as i32)) {
        return Err(DynamicsError::PrecisionUnreachable { estimate, m });
    }
    Ok(DenseUnitary {
        matrix: pulse * perm,
        error_estimate: estimate,
    })
}

/// Principal logarithm of the permutation matrix `P e_i = e_{succ[i]}`,
/// block by block over its cycles.
fn principal_log(succ: &[usize]) -> DMatrix<Complex64> {
    let n = succ.len();
    let mut log = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut x = succ[start];
        while x != start {
            seen[x] = true;
            cycle.push(x);
            x = succ[x];
        }
        let block = circulant_log(cycle.len());
        for (a, &ia) in cycle.iter().enumerate() {
            for (b, &ib) in cycle.iter().enumerate() {
                log[(ia, ib)] = block[(a, b)];
            }
        }
    }
    log
}

/// `log S` for the `k × k` cyclic shift `S e_j = e_{j+1}` with principal
/// eigenvalue arguments in `(−π, π]`: `F diag(iθ) F*` with
/// `F_{j,m} = ω^{−mj}/√k`.
fn circulant_log(k: usize) -> DMatrix<Complex64> {
    let kf = k as f64;
    let fourier = DMatrix::from_fn(k, k, |j, m| {
        Complex64::from_polar(1.0 / kf.sqrt(), -2.0 * PI * (m * j) as f64 / kf)
    });
    let eig = DMatrix::from_fn(k, k, |a, b| {
        if a != b {
            return Complex64::new(0.0, 0.0);
        }
        let m = a as f64;
        let theta = if 2 * a <= k {
            2.0 * PI * m / kf
        } else {
            2.0 * PI * (m - kf) / kf
        };
        Complex64::new(0.0, theta)
    });
    &fourier * eig * fourier.adjoint()
}
