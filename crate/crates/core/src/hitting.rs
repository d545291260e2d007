//! Grid semi-decision of the hitting time.
//!
//! The hitting time is the first `t ≥ 0` at which the fidelity of `U(t)|ψ⟩`
//! with the target reaches `1 − ε`. Here `t` ranges over a declared grid:
//! for each unit interval, the points `n + jδ/G` with `0 ≤ j < G`, up to and
//! including `t = horizon`. Idle segments are not sampled since the state is
//! constant there and equals the state at the next integer.
//!
//! A hit is always genuine. Running out of horizon is reported as
//! [`HitReport::Exhausted`], never as unreachability.

use crate::dynamics::{pulse, DynamicsError, PulseSchedule};
use crate::machine::{MachineError, MachineSpec};
use crate::rational::{format_rational, to_f64};
use crate::reversible::{target_predicate, BeaconStep, ClockMode, ExtendedBasisState, LabelError, TargetMode};
use crate::Rational;
use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HittingError {
    #[error("threshold ε must satisfy 0 < ε < 1/2, got {0}")]
    BadEpsilon(Rational),
    #[error("horizon must be positive")]
    BadHorizon,
    #[error("grid must have at least one sample per pulse")]
    BadGrid,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

impl From<MachineError> for HittingError {
    fn from(e: MachineError) -> Self {
        HittingError::Dynamics(DynamicsError::Machine(e))
    }
}

/// Samples per pulse needed for a grid point to land on the plateau where
/// the two-level profile `sin²(π s / 2δ)` exceeds `1 − ε`.
pub fn plateau_grid(epsilon: Rational) -> u32 {
    let eps = to_f64(&epsilon);
    let edge = (2.0 / PI) * (1.0 - eps).sqrt().asin();
    let raw = 2.0 / (1.0 - edge);
    // absorb rounding when the ratio is an exact integer (e.g. ε = 1/4 gives 6)
    (raw - 1e-9).ceil().max(2.0) as u32
}

/// Default grid: [`plateau_grid`] when mid-pulse evaluation is available,
/// integer times only under an unbounded clock.
pub fn default_grid(epsilon: Rational, mode: ClockMode) -> u32 {
    match mode {
        ClockMode::Unbounded => 1,
        ClockMode::Cyclic { .. } => plateau_grid(epsilon),
    }
}

/// A hitting-time query `(ψ, φ, U, ε)` with its grid and horizon; ψ is the
/// machine's initial label.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDescriptor {
    machine: MachineSpec,
    epsilon: Rational,
    schedule: PulseSchedule,
    target: TargetMode,
    horizon: u64,
    grid: u32,
}

impl InstanceDescriptor {
    pub fn new(
        machine: MachineSpec,
        epsilon: Rational,
        schedule: PulseSchedule,
        target: TargetMode,
        horizon: u64,
        grid: u32,
    ) -> Result<Self, HittingError> {
        if epsilon <= Rational::zero() || epsilon >= Rational::new(1, 2) {
            return Err(HittingError::BadEpsilon(epsilon));
        }
        if horizon == 0 {
            return Err(HittingError::BadHorizon);
        }
        if grid == 0 {
            return Err(HittingError::BadGrid);
        }
        let step = BeaconStep::new(machine.clone(), schedule.clock_mode());
        let target = target_predicate(&step, target)?;
        Ok(InstanceDescriptor {
            machine,
            epsilon,
            schedule,
            target,
            horizon,
            grid,
        })
    }

    pub fn machine(&self) -> &MachineSpec {
        &self.machine
    }

    pub fn epsilon(&self) -> Rational {
        self.epsilon
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }

    pub fn target(&self) -> &TargetMode {
        &self.target
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn step(&self) -> BeaconStep {
        BeaconStep::new(self.machine.clone(), self.schedule.clock_mode())
    }

    /// `1 − ε` as a float.
    pub fn threshold(&self) -> f64 {
        to_f64(&(Rational::from_integer(1) - self.epsilon))
    }

    /// Grid times in increasing order.
    pub fn grid_times(&self) -> impl Iterator<Item = Rational> + '_ {
        let per = self.schedule.delta() / Rational::from_integer(self.grid as i64);
        (0..self.horizon)
            .flat_map(move |n| {
                (0..self.grid).map(move |j| Rational::from_integer(n as i64) + per * Rational::from_integer(j as i64))
            })
            .chain(std::iter::once(Rational::from_integer(self.horizon as i64)))
    }

    /// The pulse in which the state reached at grid time `t` was produced.
    pub fn window_of(&self, t: Rational) -> (Rational, Rational) {
        let n = crate::rational::floor(&t);
        if t == Rational::from_integer(n) {
            if n == 0 {
                return (Rational::zero(), Rational::zero());
            }
            return self.schedule.window(n - 1);
        }
        self.schedule.window(n)
    }

    /// Deterministic JSON description.
    pub fn to_json(&self) -> serde_json::Value {
        let m = &self.machine;
        let rules: Vec<_> = m
            .rules()
            .iter()
            .map(|r| {
                serde_json::json!([
                    m.state_name(r.state),
                    m.symbol_name(r.read),
                    m.state_name(r.next),
                    m.symbol_name(r.write),
                    r.movement.to_string()
                ])
            })
            .collect();
        let input: Vec<&str> = m.input().iter().map(|&s| m.symbol_name(s)).collect();
        serde_json::json!({
            "machine": {
                "states": m.states(),
                "alphabet": m.alphabet(),
                "start": m.state_name(m.start()),
                "halt": m.state_name(m.halt()),
                "input": input,
                "rules": rules,
            },
            "initial_state": self.step().initial_state().to_hex(),
            "epsilon": format_rational(&self.epsilon),
            "delta": format_rational(&self.schedule.delta()),
            "clock": self.schedule.clock_mode().to_string(),
            "target": self.target.to_string(),
            "horizon": self.horizon,
            "grid": self.grid,
        })
    }
}

/// Lazily evaluates the fidelity at each grid time.
///
/// Integer grid points read the single support label directly. Fractional
/// points spread the label over its cycle; the cycle through the initial
/// label is enumerated once and reused, since every integer-time label lies
/// on it.
pub struct GridScan<'a> {
    inst: &'a InstanceDescriptor,
    step: BeaconStep,
    times: Box<dyn Iterator<Item = Rational> + 'a>,
    label: ExtendedBasisState,
    at: u64,
    cycle: Option<CycleCache>,
    failed: bool,
}

struct CycleCache {
    on_target: Vec<bool>,
    kernels: HashMap<Rational, Vec<Complex64>>,
}

impl<'a> GridScan<'a> {
    pub fn new(inst: &'a InstanceDescriptor) -> Self {
        let step = inst.step();
        let label = step.initial_state();
        GridScan {
            inst,
            step,
            times: Box::new(inst.grid_times()),
            label,
            at: 0,
            cycle: None,
            failed: false,
        }
    }

    fn sample(&mut self, t: Rational) -> Result<f64, HittingError> {
        let n = crate::rational::floor(&t) as u64;
        while self.at < n {
            self.step.forward_in_place(&mut self.label)?;
            self.at += 1;
        }
        let Some(f) = self.inst.schedule.pulse_fraction(t) else {
            return Ok(if self.inst.target.matches(&self.label) {
                1.0
            } else {
                0.0
            });
        };
        if self.cycle.is_none() {
            let cycle = pulse::find_cycle(&self.step, &self.step.initial_state())?;
            let on_target = cycle.iter().map(|x| self.inst.target.matches(x)).collect();
            self.cycle = Some(CycleCache {
                on_target,
                kernels: HashMap::new(),
            });
        }
        let cache = self.cycle.as_mut().expect("cycle cached above");
        let k = cache.on_target.len();
        let pos = (n % k as u64) as usize;
        let kern = cache
            .kernels
            .entry(f)
            .or_insert_with(|| pulse::cycle_kernel(k, to_f64(&f)));
        let fid: f64 = kern
            .iter()
            .enumerate()
            .filter(|(j, _)| cache.on_target[(pos + j) % k])
            .map(|(_, z)| z.norm_sqr())
            .sum();
        Ok(fid.clamp(0.0, 1.0))
    }
}

impl Iterator for GridScan<'_> {
    type Item = Result<(Rational, f64), HittingError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let t = self.times.next()?;
        let r = self.sample(t).map(|f| (t, f));
        self.failed = r.is_err();
        Some(r)
    }
}

/// Outcome of a grid semi-decision.
#[derive(Debug, Clone, PartialEq)]
pub enum HitReport {
    Hit {
        t_hit: Rational,
        fidelity_at_hit: f64,
        window: (Rational, Rational),
    },
    Exhausted {
        horizon: u64,
        max_fidelity_seen: f64,
    },
}

#[derive(Serialize)]
struct HitReportJson {
    outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_fidelity: Option<f64>,
}

impl HitReport {
    pub fn is_hit(&self) -> bool {
        matches!(self, HitReport::Hit { .. })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let j = match self {
            HitReport::Hit {
                t_hit,
                fidelity_at_hit,
                window,
            } => HitReportJson {
                outcome: "hit",
                t: Some(format_rational(t_hit)),
                fidelity: Some(*fidelity_at_hit),
                window: Some([format_rational(&window.0), format_rational(&window.1)]),
                horizon: None,
                max_fidelity: None,
            },
            HitReport::Exhausted {
                horizon,
                max_fidelity_seen,
            } => HitReportJson {
                outcome: "exhausted",
                t: None,
                fidelity: None,
                window: None,
                horizon: Some(*horizon),
                max_fidelity: Some(*max_fidelity_seen),
            },
        };
        serde_json::to_value(j).expect("report serializes")
    }
}

/// Scans `samples` against `threshold`, returning the first hit.
pub(crate) fn first_hit(
    inst: &InstanceDescriptor,
    samples: impl Iterator<Item = Result<(Rational, f64), HittingError>>,
    threshold: f64,
) -> Result<HitReport, HittingError> {
    let mut max_seen: f64 = 0.0;
    for s in samples {
        let (t, fid) = s?;
        if fid >= threshold {
            return Ok(HitReport::Hit {
                t_hit: t,
                fidelity_at_hit: fid,
                window: inst.window_of(t),
            });
        }
        max_seen = max_seen.max(fid);
    }
    Ok(HitReport::Exhausted {
        horizon: inst.horizon,
        max_fidelity_seen: max_seen,
    })
}

/// First grid time with fidelity at least `1 − ε`, or horizon exhaustion.
pub fn uhit_semidecide(inst: &InstanceDescriptor) -> Result<HitReport, HittingError> {
    first_hit(inst, GridScan::new(inst), inst.threshold())
}

/// Result of the time-step selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaT {
    Selected(Rational),
    /// No grid hit up to the horizon. Not a claim that Δt is infinite.
    UnreachableWithinHorizon,
}

/// Time to advance so that the target fidelity reaches `1 − ε`.
pub fn delta_t_select(inst: &InstanceDescriptor) -> Result<DeltaT, HittingError> {
    Ok(match uhit_semidecide(inst)? {
        HitReport::Hit { t_hit, .. } => DeltaT::Selected(t_hit),
        HitReport::Exhausted { .. } => DeltaT::UnreachableWithinHorizon,
    })
}

/// The full grid scan.
pub fn fidelity_trace(inst: &InstanceDescriptor) -> Result<Vec<(Rational, f64)>, HittingError> {
    GridScan::new(inst).collect()
}

/// CSV with header `t,fidelity`; `t` is exact, fidelity has 12 decimals.
pub fn trace_csv(trace: &[(Rational, f64)]) -> String {
    let mut out = String::from("t,fidelity\n");
    for (t, f) in trace {
        out.push_str(&format!("{},{:.12}\n", crate::rational::exact_decimal(t), f));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_to, subspace_fidelity, SparseState};
    use crate::machine::fixtures::*;
    use crate::machine::parse_machine;

    fn inst(doc: &str, mode: ClockMode, horizon: u64, grid: u32) -> InstanceDescriptor {
        InstanceDescriptor::new(
            parse_machine(doc).unwrap(),
            Rational::new(1, 4),
            PulseSchedule::new(Rational::new(1, 2), mode).unwrap(),
            TargetMode::BeaconSubspace,
            horizon,
            grid,
        )
        .unwrap()
    }

    #[test]
    fn plateau_grid_values() {
        // ε = 1/4: arcsin(√3/2) = π/3, so 2 / (1 − 2/3) = 6
        assert_eq!(plateau_grid(Rational::new(1, 4)), 6);
        // ε = 1/100: 2 / (1 − 0.93623) ≈ 31.4
        assert_eq!(plateau_grid(Rational::new(1, 100)), 32);
    }

    #[test]
    fn parameter_ranges() {
        let m = parse_machine(LOOP).unwrap();
        let s = PulseSchedule::new(Rational::new(1, 2), ClockMode::Unbounded).unwrap();
        let mk = |e, h, g| InstanceDescriptor::new(m.clone(), e, s, TargetMode::BeaconSubspace, h, g);
        assert!(matches!(
            mk(Rational::new(1, 2), 10, 1),
            Err(HittingError::BadEpsilon(_))
        ));
        assert!(matches!(mk(Rational::zero(), 10, 1), Err(HittingError::BadEpsilon(_))));
        assert!(matches!(mk(Rational::new(1, 4), 0, 1), Err(HittingError::BadHorizon)));
        assert!(matches!(mk(Rational::new(1, 4), 10, 0), Err(HittingError::BadGrid)));
    }

    #[test]
    fn move_right_three_hits_at_four_on_integer_grid() {
        let i = inst(MOVE_RIGHT_3, ClockMode::Unbounded, 100, 1);
        let r = uhit_semidecide(&i).unwrap();
        assert_eq!(
            r,
            HitReport::Hit {
                t_hit: Rational::from_integer(4),
                fidelity_at_hit: 1.0,
                window: (Rational::from_integer(3), Rational::new(7, 2)),
            }
        );
    }

    #[test]
    fn sub_grid_hit_lands_past_the_window_edge() {
        let i = inst(MOVE_RIGHT_3, ClockMode::cyclic(16).unwrap(), 100, 6);
        let HitReport::Hit {
            t_hit,
            fidelity_at_hit,
            window,
        } = uhit_semidecide(&i).unwrap()
        else {
            panic!("expected a hit");
        };
        assert!(t_hit > Rational::from_integer(3) && t_hit <= Rational::new(7, 2));
        assert!(fidelity_at_hit >= 0.75);
        assert_eq!(window, (Rational::from_integer(3), Rational::new(7, 2)));
        // the sample before must be below threshold
        let prev = t_hit - Rational::new(1, 12);
        let st = evolve_to(
            &i.step(),
            i.schedule(),
            SparseState::basis(i.step().initial_state()),
            prev,
        )
        .unwrap();
        assert!(subspace_fidelity(&st, &TargetMode::BeaconSubspace) < 0.75);
    }

    #[test]
    fn loop_exhausts_with_zero_fidelity() {
        let i = inst(LOOP, ClockMode::Unbounded, 10_000, 1);
        assert_eq!(
            uhit_semidecide(&i).unwrap(),
            HitReport::Exhausted {
                horizon: 10_000,
                max_fidelity_seen: 0.0
            }
        );
        assert_eq!(delta_t_select(&i).unwrap(), DeltaT::UnreachableWithinHorizon);
    }

    #[test]
    fn immediate_halt_hits_by_one() {
        let i = inst(IMMEDIATE, ClockMode::Unbounded, 10, 1);
        let r = uhit_semidecide(&i).unwrap();
        assert!(matches!(r, HitReport::Hit { t_hit, .. } if t_hit <= Rational::from_integer(1)));
    }

    #[test]
    fn unbounded_clock_rejects_fractional_grid() {
        let i = inst(MOVE_RIGHT_3, ClockMode::Unbounded, 10, 4);
        assert!(matches!(
            uhit_semidecide(&i),
            Err(HittingError::Dynamics(DynamicsError::OrbitNotClosed { .. }))
        ));
    }

    #[test]
    fn trace_alternates_after_halting() {
        let i = inst(MOVE_RIGHT_3, ClockMode::Unbounded, 12, 1);
        let tr = fidelity_trace(&i).unwrap();
        assert_eq!(tr.len(), 13);
        let vals: Vec<f64> = tr.iter().map(|(_, f)| *f).collect();
        assert_eq!(vals, [0., 0., 0., 0., 1., 0., 1., 0., 1., 0., 1., 0., 1.]);
        let csv = trace_csv(&tr);
        assert!(csv.starts_with("t,fidelity\n0,0.000000000000\n"));
        assert!(csv.contains("\n4,1.000000000000\n"));
    }

    #[test]
    fn exact_target_mode() {
        let m = parse_machine(MOVE_RIGHT_3).unwrap();
        let step = BeaconStep::new(m.clone(), ClockMode::Unbounded);
        let phi = step.forward_n(&step.initial_state(), 6).unwrap();
        let i = InstanceDescriptor::new(
            m,
            Rational::new(1, 4),
            PulseSchedule::new(Rational::new(1, 2), ClockMode::Unbounded).unwrap(),
            TargetMode::ExactLabel(phi),
            20,
            1,
        )
        .unwrap();
        assert!(
            matches!(uhit_semidecide(&i).unwrap(), HitReport::Hit { t_hit, .. } if t_hit == Rational::from_integer(6))
        );
    }

    #[test]
    fn report_json_shape() {
        let hit = HitReport::Hit {
            t_hit: Rational::from_integer(4),
            fidelity_at_hit: 1.0,
            window: (Rational::from_integer(3), Rational::new(7, 2)),
        };
        assert_eq!(
            hit.to_json(),
            serde_json::json!({"outcome": "hit", "t": "4", "fidelity": 1.0, "window": ["3", "7/2"]})
        );
        let ex = HitReport::Exhausted {
            horizon: 9,
            max_fidelity_seen: 0.0,
        };
        assert_eq!(
            ex.to_json(),
            serde_json::json!({"outcome": "exhausted", "horizon": 9, "max_fidelity": 0.0})
        );
    }
}
