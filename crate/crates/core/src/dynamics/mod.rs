//! Evolution under the pulse-lifted step permutation.
//!
//! Pulse `n` occupies `[n, n + δ]` and the Hamiltonian vanishes on
//! `[n + δ, n + 1]`, so `U(n) = Ṽⁿ` and integer-time evolution is a pure
//! relabeling that never touches amplitudes. Inside a pulse the state is
//! spread over the cycle of each support label (see [`pulse`]); that only
//! works on orbits that close, i.e. with a cyclic clock.

mod amplitude;
mod oracle;
pub mod pulse;
mod state;

pub use amplitude::{Amplitude, GaussianRational};
pub use oracle::{approx_unitary, DenseUnitary};
pub use state::{SparseState, NORM_TOLERANCE};

use crate::machine::MachineError;
use crate::rational::{floor, fract, to_f64};
use crate::reversible::{BeaconStep, ClockMode, ExtendedBasisState, TargetMode};
use crate::Rational;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("pulse width must satisfy 0 < δ < 1, got {0}")]
    BadPulseWidth(Rational),
    #[error("state at t = {0} lies inside a pulse; integer evolution needs a pulse boundary")]
    MidPulse(Rational),
    #[error("target time {target} precedes the state's time {state}")]
    TimeReversed { state: Rational, target: Rational },
    #[error("orbit does not close within {cap} steps; mid-pulse evolution needs a cyclic clock")]
    OrbitNotClosed { cap: usize },
    #[error("amplitude error bound {bound:e} exceeds 2^-{m}")]
    PrecisionExceeded { bound: f64, m: u32 },
    #[error("precision 2^-{m} cannot be certified (estimated error {estimate:e})")]
    PrecisionUnreachable { estimate: f64, m: u32 },
    #[error("basis is not closed under the step: successor of entry {0} is missing")]
    BasisNotClosed(usize),
    #[error("schedule clock mode {schedule} differs from the step's {step}")]
    ScheduleMismatch { schedule: ClockMode, step: ClockMode },
    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("label appears twice in a state")]
    DuplicateLabel,
    #[error("time must be non-negative, got {0}")]
    NegativeTime(Rational),
}

/// Pulse width δ and clock mode; defines `H(t)` and hence `U(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseSchedule {
    delta: Rational,
    clock_mode: ClockMode,
}

impl PulseSchedule {
    pub fn new(delta: Rational, clock_mode: ClockMode) -> Result<Self, DynamicsError> {
        if delta <= Rational::zero() || delta >= Rational::from_integer(1) {
            return Err(DynamicsError::BadPulseWidth(delta));
        }
        Ok(PulseSchedule { delta, clock_mode })
    }

    pub fn delta(&self) -> Rational {
        self.delta
    }

    pub fn clock_mode(&self) -> ClockMode {
        self.clock_mode
    }

    /// Number of pulses completed by time `t`.
    pub fn completed_pulses(&self, t: Rational) -> u64 {
        let extra = if fract(&t) >= self.delta { 1 } else { 0 };
        (floor(&t) + extra) as u64
    }

    /// Fraction of the current pulse elapsed at `t`, if `t` is strictly
    /// inside a pulse.
    pub fn pulse_fraction(&self, t: Rational) -> Option<Rational> {
        let s = fract(&t);
        (s > Rational::zero() && s < self.delta).then(|| s / self.delta)
    }

    /// The pulse window `[n, n + δ]`.
    pub fn window(&self, n: i64) -> (Rational, Rational) {
        let start = Rational::from_integer(n);
        (start, start + self.delta)
    }

    fn check(&self, step: &BeaconStep) -> Result<(), DynamicsError> {
        if self.clock_mode != step.mode() {
            return Err(DynamicsError::ScheduleMismatch {
                schedule: self.clock_mode,
                step: step.mode(),
            });
        }
        Ok(())
    }
}

/// `Ṽⁿ ψ`: every support label is advanced `n` times; amplitudes move
/// with their labels unchanged.
pub fn evolve_integer(step: &BeaconStep, psi: SparseState, n: u64) -> Result<SparseState, DynamicsError> {
    if psi.is_mid_pulse() {
        return Err(DynamicsError::MidPulse(psi.time_tag()));
    }
    let (entries, time) = psi.into_parts();
    let mut out = BTreeMap::new();
    for (mut label, amp) in entries {
        for _ in 0..n {
            step.forward_in_place(&mut label)?;
        }
        if out.insert(label, amp).is_some() {
            // forward is injective on well-formed labels
            return Err(DynamicsError::DuplicateLabel);
        }
    }
    Ok(SparseState::from_parts(
        out,
        time + Rational::from_integer(n as i64),
        false,
    ))
}

/// `U(t)ψ` for a state sampled at a pulse boundary and `t ≥ ψ.time_tag`.
pub fn evolve_to(
    step: &BeaconStep,
    sched: &PulseSchedule,
    psi: SparseState,
    t: Rational,
) -> Result<SparseState, DynamicsError> {
    sched.check(step)?;
    if t < Rational::zero() {
        return Err(DynamicsError::NegativeTime(t));
    }
    if psi.is_mid_pulse() {
        return Err(DynamicsError::MidPulse(psi.time_tag()));
    }
    let t0 = psi.time_tag();
    if t < t0 {
        return Err(DynamicsError::TimeReversed { state: t0, target: t });
    }
    let steps = sched.completed_pulses(t) - sched.completed_pulses(t0);
    let whole = evolve_integer(step, psi, steps)?;
    let (entries, _) = whole.into_parts();
    match sched.pulse_fraction(t) {
        None => Ok(SparseState::from_parts(entries, t, false)),
        Some(f) => {
            let mixed = partial_pulse(step, entries, to_f64(&f))?;
            Ok(SparseState::from_parts(mixed, t, true))
        }
    }
}

/// [`evolve_to`] with every amplitude certified to within `2^-m`.
pub fn evolve_to_within(
    step: &BeaconStep,
    sched: &PulseSchedule,
    psi: SparseState,
    t: Rational,
    m: u32,
) -> Result<SparseState, DynamicsError> {
    let out = evolve_to(step, sched, psi, t)?;
    let bound = out.max_error();
    if bound > 2f64.powi(-(m as i32)) {
        return Err(DynamicsError::PrecisionExceeded { bound, m });
    }
    Ok(out)
}

fn partial_pulse(
    step: &BeaconStep,
    entries: BTreeMap<ExtendedBasisState, Amplitude>,
    f: f64,
) -> Result<BTreeMap<ExtendedBasisState, Amplitude>, DynamicsError> {
    // labels sharing a cycle reuse its enumeration
    let mut cycles: Vec<Vec<ExtendedBasisState>> = Vec::new();
    let mut position: HashMap<ExtendedBasisState, (usize, usize)> = HashMap::new();
    let mut acc: BTreeMap<ExtendedBasisState, (Complex64, f64)> = BTreeMap::new();
    let mut kernels: HashMap<usize, Vec<Complex64>> = HashMap::new();
    for (label, amp) in entries {
        let (ci, pos) = match position.get(&label) {
            Some(&p) => p,
            None => {
                let cycle = pulse::find_cycle(step, &label)?;
                let ci = cycles.len();
                for (i, x) in cycle.iter().enumerate() {
                    position.insert(x.clone(), (ci, i));
                }
                cycles.push(cycle);
                (ci, 0)
            }
        };
        let cycle = &cycles[ci];
        let k = cycle.len();
        let kern = kernels.entry(k).or_insert_with(|| pulse::cycle_kernel(k, f));
        let a = amp.to_c64();
        let a_err = amp.error_bound();
        for (j, kj) in kern.iter().enumerate() {
            let target = &cycle[(pos + j) % k];
            let term = a * kj;
            let err = a.norm() * pulse::KERNEL_ERROR
                + (kj.norm() + pulse::KERNEL_ERROR) * a_err
                + 2.0 * f64::EPSILON * term.norm();
            let slot = acc.entry(target.clone()).or_insert((Complex64::new(0.0, 0.0), 0.0));
            slot.0 += term;
            slot.1 += err + f64::EPSILON * slot.0.norm();
        }
    }
    Ok(acc
        .into_iter()
        .filter(|(_, (v, _))| *v != Complex64::new(0.0, 0.0))
        .map(|(label, (value, error))| (label, Amplitude::Approx { value, error }))
        .collect())
}

/// `|⟨α|β⟩|²`.
pub fn fidelity(alpha: &SparseState, beta: &SparseState) -> f64 {
    if let Some(z) = alpha.inner_exact(beta) {
        return z.norm_sqr().to_f64().unwrap_or(f64::NAN).clamp(0.0, 1.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (label, a) in alpha.iter() {
        if let Some(b) = beta.amplitude(label) {
            acc += a.to_c64().conj() * b.to_c64();
        }
    }
    acc.norm_sqr().clamp(0.0, 1.0)
}

/// Exact `|⟨α|β⟩|²` when both states are exact.
pub fn fidelity_exact(alpha: &SparseState, beta: &SparseState) -> Option<num_rational::BigRational> {
    alpha.inner_exact(beta).map(|z| z.norm_sqr())
}

/// Weight of `alpha` on the labels accepted by `target`.
pub fn subspace_fidelity(alpha: &SparseState, target: &TargetMode) -> f64 {
    alpha
        .iter()
        .filter(|(label, _)| target.matches(label))
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `forward^k(seed)` for `k = 0..=horizon`, stopping at the first repeat.
pub fn enumerate_reachable(
    step: &BeaconStep,
    seed: &ExtendedBasisState,
    horizon: u64,
) -> Result<Vec<ExtendedBasisState>, DynamicsError> {
    let mut out = vec![seed.clone()];
    let mut seen: HashSet<ExtendedBasisState> = HashSet::new();
    seen.insert(seed.clone());
    let mut x = seed.clone();
    for _ in 0..horizon {
        step.forward_in_place(&mut x)?;
        if !seen.insert(x.clone()) {
            break;
        }
        out.push(x.clone());
    }
    Ok(out)
}
