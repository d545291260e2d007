//! Fractional powers of a permutation along one cycle.
//!
//! On a `k`-cycle the permutation is the cyclic shift with eigenvalues
//! `e^{2πi m/k}`. With principal arguments `θ = 2π m'/k`, `m'` in
//! `(−k/2, k/2]`, the pulse generator acting for a fraction `f` of the pulse
//! width maps `|c_0⟩` to `Σ_j K_j(f) |c_j⟩` where
//!
//! ```text
//! K_j(f) = (1/k) Σ_{m'} e^{2πi m' (f − j)/k}
//!        = (1/k) e^{iπ s x} sin(πk x) / sin(π x),   x = (f − j)/k,
//! ```
//!
//! and `s = 1` for even `k`, `0` for odd `k` (the sum of the first and last
//! `m'`). The closed form is a Dirichlet kernel, so each entry costs O(1).

use super::DynamicsError;
use crate::reversible::{BeaconStep, ClockMode, ExtendedBasisState};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Longest cycle that will be enumerated for mid-pulse evaluation.
pub const CYCLE_CAP: usize = 1 << 16;

/// Absolute error bound on each kernel entry.
pub const KERNEL_ERROR: f64 = 32.0 * f64::EPSILON;

/// Kernel entries `K_j(f)` for `j = 0..k`, with `0 < f < 1`.
pub fn cycle_kernel(k: usize, f: f64) -> Vec<Complex64> {
    assert!(k >= 1, "empty cycle");
    debug_assert!(f > 0.0 && f < 1.0, "fraction {f} outside (0, 1)");
    let kf = k as f64;
    let shift = if k.is_multiple_of(2) { 1.0 } else { 0.0 };
    (0..k)
        .map(|j| {
            // signed offset keeps x within about (-1/2, 1/2]
            let d = if j <= k / 2 { j as i64 } else { j as i64 - k as i64 };
            // f - d is exact for the small offsets where cancellation matters
            let u = f - d as f64;
            let x = u / kf;
            let ratio = (PI * u).sin() / (kf * (PI * x).sin());
            Complex64::from_polar(ratio, PI * shift * x)
        })
        .collect()
}

/// The cycle of the step permutation through `start`, in forward order.
///
/// An unbounded clock strictly increases along every orbit, so no orbit
/// closes and the call fails immediately.
pub fn find_cycle(step: &BeaconStep, start: &ExtendedBasisState) -> Result<Vec<ExtendedBasisState>, DynamicsError> {
    let cap = match step.mode() {
        ClockMode::Unbounded => return Err(DynamicsError::OrbitNotClosed { cap: CYCLE_CAP }),
        ClockMode::Cyclic { period } => (period as usize).min(CYCLE_CAP),
    };
    let mut cycle = vec![start.clone()];
    let mut x = start.clone();
    for _ in 0..cap {
        step.forward_in_place(&mut x)?;
        if x == *start {
            return Ok(cycle);
        }
        cycle.push(x.clone());
    }
    Err(DynamicsError::OrbitNotClosed { cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct eigen-sum with principal arguments.
    fn kernel_by_sum(k: usize, f: f64) -> Vec<Complex64> {
        let kf = k as f64;
        (0..k)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..k {
                    let mp = if 2 * m <= k { m as f64 } else { m as f64 - kf };
                    acc += Complex64::from_polar(1.0, 2.0 * PI * mp * (f - j as f64) / kf);
                }
                acc / kf
            })
            .collect()
    }

    #[test]
    fn closed_form_matches_eigen_sum() {
        for k in 1..40 {
            for &f in &[1e-9, 0.1, 0.25, 0.5, 0.73, 0.999_999] {
                let a = cycle_kernel(k, f);
                let b = kernel_by_sum(k, f);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).norm() < 1e-12, "k={k} f={f}: {x} vs {y}");
                }
                let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn two_cycle_profile() {
        for &f in &[0.25, 0.5, 0.75] {
            let kern = cycle_kernel(2, f);
            let expect = (PI * f / 2.0).sin().powi(2);
            assert!((kern[1].norm_sqr() - expect).abs() < 1e-15);
        }
        assert!((cycle_kernel(2, 0.5)[1].norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_tends_to_the_shift() {
        let k = cycle_kernel(16, 1.0 - 1e-12);
        assert!((k[1].norm() - 1.0).abs() < 1e-9);
        let k = cycle_kernel(16, 1e-12);
        assert!((k[0].norm() - 1.0).abs() < 1e-9);
    }
}
