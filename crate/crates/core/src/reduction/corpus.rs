//! Corpus entries, manifests and the bundled corpus.

use super::ReductionError;
use crate::machine::{parse_machine, MachineSpec, RunOutcome};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Known behaviour of a corpus machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroundTruth {
    Halts {
        #[serde(rename = "K")]
        k: u64,
    },
    /// The configurations after `r` and `r'` steps coincide.
    #[serde(rename = "loops")]
    LoopsForever { revisit: [u64; 2] },
}

impl GroundTruth {
    pub fn halts(&self) -> bool {
        matches!(self, GroundTruth::Halts { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub machine: MachineSpec,
    pub ground_truth: GroundTruth,
}

impl CorpusEntry {
    /// Replays the classical machine to confirm the ground truth.
    pub fn check_ground_truth(&self) -> Result<(), ReductionError> {
        let bug = |detail: String| ReductionError::CorpusBug {
            entry: self.name.clone(),
            detail,
        };
        match self.ground_truth {
            GroundTruth::Halts { k } => match self.machine.classical_run(k)? {
                RunOutcome::Halted { k: actual, .. } if actual == k => Ok(()),
                RunOutcome::Halted { k: actual, .. } => Err(bug(format!("halts at step {actual}, labelled {k}"))),
                RunOutcome::StillRunning { .. } => Err(bug(format!("still running after {k} steps"))),
            },
            GroundTruth::LoopsForever { revisit: [r, r2] } => {
                if r >= r2 {
                    return Err(bug(format!("revisit indices {r}, {r2} are not increasing")));
                }
                let late = match self.machine.classical_run(r2)? {
                    RunOutcome::StillRunning { at } => at,
                    RunOutcome::Halted { k, .. } => return Err(bug(format!("halts at step {k}"))),
                };
                let early = self.machine.configuration_at(r)?;
                if !early.same_machine_state(&late) {
                    return Err(bug(format!("configurations at steps {r} and {r2} differ")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    machine_file: String,
    ground_truth: GroundTruth,
}

fn build(
    manifest: &str,
    mut read: impl FnMut(&str) -> Result<String, ReductionError>,
) -> Result<Vec<CorpusEntry>, ReductionError> {
    let items: Vec<ManifestEntry> =
        serde_json::from_str(manifest).map_err(|e| ReductionError::Manifest(e.to_string()))?;
    items
        .into_iter()
        .map(|m| {
            let text = read(&m.machine_file)?;
            let machine = parse_machine(&text).map_err(|source| ReductionError::Parse {
                entry: m.name.clone(),
                source,
            })?;
            Ok(CorpusEntry {
                name: m.name,
                machine,
                ground_truth: m.ground_truth,
            })
        })
        .collect()
}

/// Loads a manifest; machine files are resolved relative to its directory.
pub fn load_manifest(path: &Path) -> Result<Vec<CorpusEntry>, ReductionError> {
    let io = |p: &Path, e: std::io::Error| ReductionError::Io {
        path: p.display().to_string(),
        message: e.to_string(),
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    build(&text, |file| {
        let p = dir.join(file);
        std::fs::read_to_string(&p).map_err(|e| io(&p, e))
    })
}

macro_rules! bundled {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../../corpus/", $file)))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundled!(
    "move_right_3.tm",
    "immediate_halt.tm",
    "bb2.tm",
    "bb3.tm",
    "bb4.tm",
    "counter_3.tm",
    "counter_20.tm",
    "binary_increment.tm",
    "eraser.tm",
    "unary_add.tm",
    "left_walker.tm",
    "parity.tm",
    "stay_loop.tm",
    "ping_pong.tm",
    "toggler.tm",
    "lasso.tm",
    "bouncer.tm",
    "shuttle.tm",
);

const BUNDLED_MANIFEST: &str = include_str!("../../corpus/manifest.json");

/// The corpus shipped with the crate.
pub fn bundled_corpus() -> Vec<CorpusEntry> {
    build(BUNDLED_MANIFEST, |file| {
        BUNDLED
            .iter()
            .find(|(name, _)| *name == file)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| ReductionError::Manifest(format!("{file} is not bundled")))
    })
    .expect("bundled corpus is well-formed")
}
