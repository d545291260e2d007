//! From a machine and input to a hitting-time instance, and the corpus
//! check that the instance hits exactly when the machine halts.

mod corpus;

pub use corpus::{bundled_corpus, load_manifest, CorpusEntry, GroundTruth};

use crate::dynamics::{DynamicsError, PulseSchedule};
use crate::hitting::{default_grid, uhit_semidecide, HitReport, HittingError, InstanceDescriptor};
use crate::machine::{MachineError, MachineSpec, Move, ParseError};
use crate::rational::to_f64;
use crate::reversible::{ClockMode, TargetMode};
use crate::Rational;
use serde_json::json;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("corpus bug in {entry}: {detail}")]
    CorpusBug { entry: String, detail: String },
    #[error("machine file for {entry}: {source}")]
    Parse {
        entry: String,
        #[source]
        source: ParseError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Hitting(#[from] HittingError),
}

impl From<DynamicsError> for ReductionError {
    fn from(e: DynamicsError) -> Self {
        ReductionError::Hitting(e.into())
    }
}

/// Assembles the instance for `machine` with the grid chosen from `epsilon`.
pub fn encode(
    machine: MachineSpec,
    epsilon: Rational,
    delta: Rational,
    mode: ClockMode,
    target: TargetMode,
    horizon: u64,
) -> Result<InstanceDescriptor, ReductionError> {
    let schedule = PulseSchedule::new(delta, mode)?;
    let grid = default_grid(epsilon, mode);
    Ok(InstanceDescriptor::new(
        machine, epsilon, schedule, target, horizon, grid,
    )?)
}

/// Parameters shared by every entry of a corpus run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub epsilon: Rational,
    pub delta: Rational,
    pub mode: ClockMode,
    pub target: TargetMode,
    pub horizon: u64,
    /// Overrides the grid picked by [`encode`].
    pub grid: Option<u32>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            epsilon: Rational::new(1, 4),
            delta: Rational::new(1, 2),
            mode: ClockMode::Unbounded,
            target: TargetMode::BeaconSubspace,
            horizon: 10_000,
            grid: None,
        }
    }
}

impl VerifyConfig {
    pub fn instance(&self, machine: MachineSpec) -> Result<InstanceDescriptor, ReductionError> {
        let inst = encode(
            machine,
            self.epsilon,
            self.delta,
            self.mode,
            self.target.clone(),
            self.horizon,
        )?;
        Ok(match self.grid {
            None => inst,
            Some(g) => InstanceDescriptor::new(
                inst.machine().clone(),
                self.epsilon,
                *inst.schedule(),
                self.target.clone(),
                self.horizon,
                g,
            )?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Agree,
    Disagree { detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub entry: String,
    pub expected: GroundTruth,
    pub observed: HitReport,
    pub verdict: Verdict,
}

impl ReductionReport {
    pub fn agrees(&self) -> bool {
        self.verdict == Verdict::Agree
    }

    pub fn to_json(&self) -> serde_json::Value {
        let verdict = match &self.verdict {
            Verdict::Agree => json!("agree"),
            Verdict::Disagree { detail } => json!({ "disagree": detail }),
        };
        json!({
            "entry": self.entry,
            "expected": self.expected,
            "observed": self.observed.to_json(),
            "verdict": verdict,
        })
    }
}

/// Compares a semi-decision against the ground truth.
pub fn judge(expected: &GroundTruth, observed: &HitReport, cfg: &VerifyConfig) -> Verdict {
    let disagree = |detail: String| Verdict::Disagree { detail };
    match (expected, observed) {
        (GroundTruth::Halts { k }, HitReport::Hit { window, .. }) => {
            if *k + 1 > cfg.horizon {
                return disagree(format!("K = {k} lies beyond the horizon"));
            }
            let k = Rational::from_integer(*k as i64);
            if window.0 <= k + cfg.delta && window.1 >= k {
                Verdict::Agree
            } else {
                disagree(format!("hit window {window:?} misses [K, K + δ]"))
            }
        }
        (GroundTruth::Halts { k }, HitReport::Exhausted { .. }) => {
            disagree(format!("halts at {k} but no hit within the horizon"))
        }
        (GroundTruth::LoopsForever { .. }, HitReport::Exhausted { max_fidelity_seen, .. }) => {
            if *max_fidelity_seen <= to_f64(&cfg.epsilon) {
                Verdict::Agree
            } else {
                disagree(format!("fidelity {max_fidelity_seen} exceeds ε"))
            }
        }
        (GroundTruth::LoopsForever { .. }, HitReport::Hit { t_hit, .. }) => {
            disagree(format!("looping machine reported a hit at {t_hit}"))
        }
    }
}

/// Runs one entry after confirming its ground truth.
pub fn verify_entry(entry: &CorpusEntry, cfg: &VerifyConfig) -> Result<ReductionReport, ReductionError> {
    entry.check_ground_truth()?;
    let inst = cfg.instance(entry.machine.clone())?;
    let observed = uhit_semidecide(&inst)?;
    Ok(ReductionReport {
        entry: entry.name.clone(),
        expected: entry.ground_truth,
        verdict: judge(&entry.ground_truth, &observed, cfg),
        observed,
    })
}

/// One report per entry, in corpus order. Entries are checked in parallel.
pub fn verify_corpus(corpus: &[CorpusEntry], cfg: &VerifyConfig) -> Result<Vec<ReductionReport>, ReductionError> {
    std::thread::scope(|s| {
        let handles: Vec<_> = corpus.iter().map(|e| s.spawn(move || verify_entry(e, cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verification thread panicked"))
            .collect()
    })
}

/// Unary sweeper on input `1ⁿ`: right across the ones, back left across
/// them, then halt on the blank left of the input.
///
/// # Panics
///
/// If `n = 0`.
pub fn counter_family(n: u64) -> MachineSpec {
    assert!(n >= 1, "counter family starts at n = 1");
    let rules = [
        ("right", "1", "right", "1", Move::R),
        ("right", "_", "left", "_", Move::L),
        ("left", "1", "left", "1", Move::L),
        ("left", "_", "halt", "_", Move::S),
    ];
    let input = vec!["1"; n as usize];
    MachineSpec::from_names(&["right", "left", "halt"], &["_", "1"], "right", "halt", &rules, &input)
        .expect("counter family machine is well-formed")
}

/// Halting step of `counter_family(n)`, by classical replay.
pub fn counter_halting_step(n: u64) -> u64 {
    counter_family(n)
        .classical_run(4 * n + 8)
        .expect("counter family has every rule it needs")
        .halting_step()
        .expect("counter family halts")
}

/// Name of a counter family member.
pub fn counter_name(n: u64) -> String {
    format!("counter_{n}")
}
