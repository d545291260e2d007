//! Budgeted decision protocols, the adversarial sweep and noisy thresholds.
//!
//! A protocol prepares the initial label, evolves along the grid and
//! measures the target fidelity at each grid time. Observation time is the
//! logical time reached; work is the number of pulses applied, `⌈t⌉` at grid
//! time `t`. When either budget would be exceeded the protocol must still
//! answer, and it answers "unreachable".

use crate::hitting::{first_hit, GridScan, HitReport, HittingError, InstanceDescriptor};
use crate::rational::{format_rational, to_f64};
use crate::reduction::{counter_family, counter_halting_step, counter_name, encode, GroundTruth};
use crate::reversible::{ClockMode, TargetMode};
use crate::Rational;
use num_traits::{ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde_json::json;

/// Largest counter family member examined by [`adversarial_sweep`].
pub const SWEEP_CAP: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("observation budget must be positive, got {0}")]
    BadTimeBudget(Rational),
    #[error("work budget must be at least 1")]
    BadWorkBudget,
    #[error("failure probability must lie in [0, 1/2), got {0}")]
    BadFailureProb(Rational),
    #[error("noise margin γ = {gamma} too large for ε = {epsilon}")]
    MarginViolation { gamma: Rational, epsilon: Rational },
    #[error("no misclassified family member with n <= {cap} for τ_max = {tau_max}")]
    SearchRangeExhausted { cap: u64, tau_max: Rational },
    #[error("empty budget list")]
    NoBudgets,
    #[error("resources {time_used}/{work_used} exceed the budget")]
    BudgetViolated { time_used: Rational, work_used: u64 },
    #[error(transparent)]
    Hitting(#[from] HittingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolBudget {
    tau_max: Rational,
    e_max: u64,
    failure_prob: Rational,
}

impl ProtocolBudget {
    pub fn new(tau_max: Rational, e_max: u64, failure_prob: Rational) -> Result<Self, ProtocolError> {
        if tau_max <= Rational::zero() {
            return Err(ProtocolError::BadTimeBudget(tau_max));
        }
        if e_max == 0 {
            return Err(ProtocolError::BadWorkBudget);
        }
        if failure_prob < Rational::zero() || failure_prob >= Rational::new(1, 2) {
            return Err(ProtocolError::BadFailureProb(failure_prob));
        }
        Ok(ProtocolBudget {
            tau_max,
            e_max,
            failure_prob,
        })
    }

    /// Time budget `tau_max`, with the work budget large enough to never bind
    /// first.
    pub fn time_only(tau_max: u64) -> Result<Self, ProtocolError> {
        Self::new(Rational::from_integer(tau_max as i64), tau_max.max(1), Rational::zero())
    }

    pub fn tau_max(&self) -> Rational {
        self.tau_max
    }

    pub fn e_max(&self) -> u64 {
        self.e_max
    }

    pub fn failure_prob(&self) -> Rational {
        self.failure_prob
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "tau_max": format_rational(&self.tau_max), "e_max": self.e_max })
    }
}

/// Why an unreachable report was issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcedBy {
    ObservationTime,
    Work,
    /// The instance's own horizon ran out before either budget.
    Horizon,
}

impl ForcedBy {
    pub fn as_str(self) -> &'static str {
        match self {
            ForcedBy::ObservationTime => "observation_time",
            ForcedBy::Work => "work",
            ForcedBy::Horizon => "horizon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolVerdict {
    ReachableAt { t: Rational },
    ReportedUnreachable { forced_by: ForcedBy },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resources {
    pub time_used: Rational,
    pub work_used: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolOutcome {
    pub verdict: ProtocolVerdict,
    pub resources: Resources,
    /// Filled in by [`ProtocolOutcome::grade`].
    pub correct: Option<bool>,
}

impl ProtocolOutcome {
    pub fn grade(mut self, truth: &GroundTruth) -> Self {
        let said_reachable = matches!(self.verdict, ProtocolVerdict::ReachableAt { .. });
        self.correct = Some(said_reachable == truth.halts());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        let verdict = match self.verdict {
            ProtocolVerdict::ReachableAt { t } => json!({ "reachable_at": format_rational(&t) }),
            ProtocolVerdict::ReportedUnreachable { forced_by } => {
                json!({ "unreachable": forced_by.as_str() })
            }
        };
        json!({
            "verdict": verdict,
            "resources": {
                "time_used": format_rational(&self.resources.time_used),
                "work_used": self.resources.work_used,
            },
            "correct": self.correct,
        })
    }
}

fn work_at(t: Rational) -> u64 {
    t.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Runs the grid protocol until a hit, a budget or the horizon stops it.
pub fn run_bounded_protocol(
    inst: &InstanceDescriptor,
    budget: &ProtocolBudget,
) -> Result<ProtocolOutcome, ProtocolError> {
    let threshold = inst.threshold();
    let mut used = Resources {
        time_used: Rational::zero(),
        work_used: 0,
    };
    for sample in GridScan::new(inst) {
        let (t, fid) = sample?;
        let forced_by = if t > budget.tau_max {
            Some(ForcedBy::ObservationTime)
        } else if work_at(t) > budget.e_max {
            Some(ForcedBy::Work)
        } else {
            None
        };
        if let Some(forced_by) = forced_by {
            return finish(ProtocolVerdict::ReportedUnreachable { forced_by }, used, budget);
        }
        used = Resources {
            time_used: t,
            work_used: work_at(t),
        };
        if fid >= threshold {
            return finish(ProtocolVerdict::ReachableAt { t }, used, budget);
        }
    }
    finish(
        ProtocolVerdict::ReportedUnreachable {
            forced_by: ForcedBy::Horizon,
        },
        used,
        budget,
    )
}

fn finish(
    verdict: ProtocolVerdict,
    used: Resources,
    budget: &ProtocolBudget,
) -> Result<ProtocolOutcome, ProtocolError> {
    if used.time_used > budget.tau_max || used.work_used > budget.e_max {
        return Err(ProtocolError::BudgetViolated {
            time_used: used.time_used,
            work_used: used.work_used,
        });
    }
    Ok(ProtocolOutcome {
        verdict,
        resources: used,
        correct: None,
    })
}

/// A misclassified late halter for one budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepWitness {
    pub budget: ProtocolBudget,
    pub name: String,
    pub n: u64,
    pub k: u64,
    pub outcome: ProtocolOutcome,
}

impl SweepWitness {
    pub fn to_json(&self) -> serde_json::Value {
        let o = self.outcome.to_json();
        json!({
            "budget": self.budget.to_json(),
            "witness": { "name": self.name, "n": self.n, "K": self.k },
            "outcome": o["verdict"],
            "correct": o["correct"],
            "resources": o["resources"],
        })
    }
}

/// Instance used for counter family members in the sweep.
pub fn sweep_instance(n: u64, horizon: u64) -> Result<InstanceDescriptor, ProtocolError> {
    encode(
        counter_family(n),
        Rational::new(1, 4),
        Rational::new(1, 2),
        ClockMode::Unbounded,
        TargetMode::BeaconSubspace,
        horizon,
    )
    .map_err(|e| match e {
        crate::reduction::ReductionError::Hitting(h) => ProtocolError::Hitting(h),
        other => unreachable!("counter family encoding failed: {other}"),
    })
}

/// For each budget, the smallest counter family member that halts after
/// `tau_max` and that the bounded protocol misclassifies.
pub fn adversarial_sweep(budgets: &[ProtocolBudget]) -> Result<Vec<SweepWitness>, ProtocolError> {
    if budgets.is_empty() {
        return Err(ProtocolError::NoBudgets);
    }
    budgets.iter().map(|b| sweep_one(b, SWEEP_CAP)).collect()
}

pub(crate) fn sweep_one(budget: &ProtocolBudget, cap: u64) -> Result<SweepWitness, ProtocolError> {
    for n in 1..=cap {
        let k = counter_halting_step(n);
        if Rational::from_integer(k as i64) <= budget.tau_max {
            continue;
        }
        // the horizon always reaches the hit, so only a budget can stop the run
        let inst = sweep_instance(n, k + 1)?;
        let outcome = run_bounded_protocol(&inst, budget)?.grade(&GroundTruth::Halts { k });
        if outcome.correct == Some(false) {
            return Ok(SweepWitness {
                budget: *budget,
                name: counter_name(n),
                n,
                k,
                outcome,
            });
        }
    }
    Err(ProtocolError::SearchRangeExhausted {
        cap,
        tau_max: budget.tau_max,
    })
}

/// Bounded fidelity perturbation with a reproducible seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseModel {
    pub gamma: Rational,
    pub seed: u64,
}

/// Largest admissible margin is below both `1 − 2ε` and `(1 − ε)/2`; the
/// second keeps a zero fidelity pushed up by γ under the relaxed threshold.
pub fn check_margin(epsilon: Rational, gamma: Rational) -> Result<(), ProtocolError> {
    let one = Rational::from_integer(1);
    let ok = gamma >= Rational::zero() && gamma < one - epsilon * 2 && gamma * 2 < one - epsilon;
    if ok {
        Ok(())
    } else {
        Err(ProtocolError::MarginViolation { gamma, epsilon })
    }
}

/// Semi-decision with each sampled fidelity perturbed by a draw from
/// `[−γ, γ]` and compared against `1 − ε − γ`.
pub fn classify_with_noise(inst: &InstanceDescriptor, noise: &NoiseModel) -> Result<HitReport, ProtocolError> {
    check_margin(inst.epsilon(), noise.gamma)?;
    if noise.gamma.is_zero() {
        return Ok(crate::hitting::uhit_semidecide(inst)?);
    }
    let g = to_f64(&noise.gamma);
    let threshold = to_f64(&(Rational::from_integer(1) - inst.epsilon() - noise.gamma));
    let mut rng = StdRng::seed_from_u64(noise.seed);
    let samples = GridScan::new(inst).map(|s| s.map(|(t, f)| (t, (f + rng.random_range(-g..=g)).clamp(0.0, 1.0))));
    Ok(first_hit(inst, samples, threshold)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::fixtures::*;
    use crate::machine::parse_machine;
    use crate::reduction::{bundled_corpus, VerifyConfig};

    fn inst(doc: &str) -> InstanceDescriptor {
        VerifyConfig::default().instance(parse_machine(doc).unwrap()).unwrap()
    }

    #[test]
    fn budget_ranges() {
        let one = Rational::from_integer(1);
        assert!(ProtocolBudget::new(Rational::zero(), 1, Rational::zero()).is_err());
        assert!(ProtocolBudget::new(one, 0, Rational::zero()).is_err());
        assert!(ProtocolBudget::new(one, 1, Rational::new(1, 2)).is_err());
        assert!(ProtocolBudget::new(one, 1, Rational::new(1, 10)).is_ok());
    }

    #[test]
    fn move_right_three_is_reached_cheaply() {
        let b = ProtocolBudget::time_only(100).unwrap();
        let o = run_bounded_protocol(&inst(MOVE_RIGHT_3), &b)
            .unwrap()
            .grade(&GroundTruth::Halts { k: 3 });
        assert_eq!(
            o.verdict,
            ProtocolVerdict::ReachableAt {
                t: Rational::from_integer(4)
            }
        );
        assert!(o.resources.time_used <= Rational::from_integer(5));
        assert_eq!(o.resources.work_used, 4);
        assert_eq!(o.correct, Some(true));
    }

    #[test]
    fn late_halter_is_misclassified() {
        let b = ProtocolBudget::time_only(10).unwrap();
        // K(5) = 12 > 10
        let o = run_bounded_protocol(&sweep_instance(5, 100).unwrap(), &b)
            .unwrap()
            .grade(&GroundTruth::Halts { k: 12 });
        assert_eq!(
            o.verdict,
            ProtocolVerdict::ReportedUnreachable {
                forced_by: ForcedBy::ObservationTime
            }
        );
        assert_eq!(o.correct, Some(false));
        assert_eq!(o.resources.time_used, Rational::from_integer(10));
    }

    #[test]
    fn work_budget_can_bind_first() {
        let b = ProtocolBudget::new(Rational::from_integer(100), 3, Rational::zero()).unwrap();
        let o = run_bounded_protocol(&inst(MOVE_RIGHT_3), &b).unwrap();
        assert_eq!(
            o.verdict,
            ProtocolVerdict::ReportedUnreachable {
                forced_by: ForcedBy::Work
            }
        );
        assert_eq!(o.resources.work_used, 3);
    }

    #[test]
    fn loopers_are_always_classified_correctly() {
        for tau in [1, 10, 1000] {
            let b = ProtocolBudget::time_only(tau).unwrap();
            let o = run_bounded_protocol(&inst(LOOP), &b)
                .unwrap()
                .grade(&GroundTruth::LoopsForever { revisit: [0, 1] });
            assert_eq!(o.correct, Some(true));
        }
    }

    #[test]
    fn sweep_witnesses_grow_with_the_budget() {
        let budgets: Vec<_> = [10, 20, 40, 80]
            .iter()
            .map(|&t| ProtocolBudget::time_only(t).unwrap())
            .collect();
        let w = adversarial_sweep(&budgets).unwrap();
        // K(n) = 2n + 2 > τ  ⇔  n > (τ − 2)/2
        assert_eq!(w.iter().map(|w| w.n).collect::<Vec<_>>(), [5, 10, 20, 40]);
        for x in &w {
            assert!(Rational::from_integer(x.k as i64) > x.budget.tau_max());
        }
        assert!(matches!(adversarial_sweep(&[]), Err(ProtocolError::NoBudgets)));
    }

    #[test]
    fn sweep_cap_is_reported() {
        let b = ProtocolBudget::time_only(100).unwrap();
        assert!(matches!(
            sweep_one(&b, 10),
            Err(ProtocolError::SearchRangeExhausted { cap: 10, .. })
        ));
    }

    #[test]
    fn margin_rules() {
        let e = Rational::new(1, 4);
        assert!(check_margin(e, Rational::new(1, 8)).is_ok());
        assert!(check_margin(e, Rational::new(3, 8)).is_err());
        assert!(check_margin(e, Rational::new(-1, 8)).is_err());
        assert!(check_margin(Rational::new(2, 5), Rational::new(1, 5)).is_err());
    }

    #[test]
    fn zero_noise_matches_noiseless() {
        for e in bundled_corpus() {
            let i = VerifyConfig {
                horizon: 300,
                ..VerifyConfig::default()
            }
            .instance(e.machine)
            .unwrap();
            let noisy = classify_with_noise(
                &i,
                &NoiseModel {
                    gamma: Rational::zero(),
                    seed: 7,
                },
            )
            .unwrap();
            assert_eq!(noisy, crate::hitting::uhit_semidecide(&i).unwrap());
        }
    }

    #[test]
    fn noise_keeps_verdicts() {
        let gamma = Rational::new(1, 8);
        let hit = classify_with_noise(&inst(MOVE_RIGHT_3), &NoiseModel { gamma, seed: 1 }).unwrap();
        assert!(matches!(hit, HitReport::Hit { t_hit, .. } if t_hit == Rational::from_integer(4)));
        let miss = classify_with_noise(&inst(LOOP), &NoiseModel { gamma, seed: 1 }).unwrap();
        let HitReport::Exhausted { max_fidelity_seen, .. } = miss else {
            panic!("looper hit under noise");
        };
        assert!(max_fidelity_seen <= 0.125);
        let again = classify_with_noise(&inst(LOOP), &NoiseModel { gamma, seed: 1 }).unwrap();
        assert_eq!(miss, again);
    }
}
