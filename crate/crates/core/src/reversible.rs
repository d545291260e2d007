//! Reversible one-step map with halt flag and beacon bit.
//!
//! A basis label carries the machine's work register together with the
//! history of applied rule identifiers, a clock, a halt flag `h` and a
//! beacon bit `b`. [`BeaconStep::forward`] advances one step:
//!
//! * pre-history idle labels (`τ < 0`, unbounded clock only) just tick,
//! * running labels apply the machine rule and append its id to the history;
//!   `h` rises on the step that enters the halt state,
//! * halted labels keep the work register, tick the clock and toggle `b`.
//!
//! The first toggle happens on the step that consumes the label at `τ = K`,
//! so `b = 1` first holds at `τ = K + 1`. For an immediately halting machine
//! the step at `τ = 0` raises `h` and toggles `b` together.
//!
//! Well-formed labels are exactly the labels on the orbit of the initial
//! label. With an unbounded clock that orbit is a copy of ℤ; with a cyclic
//! clock of period `L` the step from `τ = L − 1` returns to the initial label,
//! closing a single cycle of length `L`.

use crate::machine::{Configuration, MachineError, MachineSpec, RuleId, StateId, Tape, BLANK};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("malformed label: {0}")]
    Malformed(String),
    #[error("label encoding: {0}")]
    Decode(String),
    #[error("cyclic clock needs period L >= 2, got {0}")]
    BadPeriod(u64),
    #[error("invalid clock mode {0:?}; expected `unbounded` or `cyclic:L`")]
    BadClockMode(String),
}

/// How the clock register evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClockMode {
    /// Two-way integer clock.
    Unbounded,
    /// Clock modulo `period`; the work register resets when the clock wraps.
    Cyclic { period: u32 },
}

impl ClockMode {
    pub fn cyclic(period: u64) -> Result<Self, LabelError> {
        if period < 2 || period > u32::MAX as u64 {
            return Err(LabelError::BadPeriod(period));
        }
        Ok(ClockMode::Cyclic { period: period as u32 })
    }
}

impl fmt::Display for ClockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockMode::Unbounded => f.write_str("unbounded"),
            ClockMode::Cyclic { period } => write!(f, "cyclic:{period}"),
        }
    }
}

impl FromStr for ClockMode {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unbounded" {
            return Ok(ClockMode::Unbounded);
        }
        match s.strip_prefix("cyclic:").map(str::parse::<u64>) {
            Some(Ok(l)) => ClockMode::cyclic(l),
            _ => Err(LabelError::BadClockMode(s.to_string())),
        }
    }
}

impl Serialize for ClockMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Machine configuration (minus step counter) plus the applied-rule history.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorkRegister {
    pub state: StateId,
    pub head: i64,
    pub tape: Tape,
    pub history: Vec<RuleId>,
}

impl WorkRegister {
    pub fn initial(spec: &MachineSpec) -> Self {
        let c = spec.initial_configuration();
        WorkRegister {
            state: c.state,
            head: c.head,
            tape: c.tape,
            history: Vec::new(),
        }
    }

    pub fn matches(&self, c: &Configuration) -> bool {
        self.state == c.state && self.head == c.head && self.tape == c.tape
    }

    fn apply(&mut self, spec: &MachineSpec, id: RuleId) {
        let r = spec.rules()[id as usize];
        self.tape.write(self.head, r.write);
        self.head += r.movement.offset();
        self.state = r.next;
        self.history.push(id);
    }

    /// Undoes the last recorded rule. `None` if the register is not in the
    /// image of that rule.
    fn unapply(&self, spec: &MachineSpec) -> Option<Self> {
        let (&id, rest) = self.history.split_last()?;
        let r = spec.rule(id)?;
        if self.state != r.next {
            return None;
        }
        let prev_head = self.head - r.movement.offset();
        if self.tape.read(prev_head) != r.write {
            return None;
        }
        let mut tape = self.tape.clone();
        tape.write(prev_head, r.read);
        Some(WorkRegister {
            state: r.state,
            head: prev_head,
            tape,
            history: rest.to_vec(),
        })
    }
}

/// Computational basis label `|w, τ, h, b⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtendedBasisState {
    pub work: WorkRegister,
    pub clock: i64,
    pub halted: bool,
    pub beacon: bool,
}

const TAG_STATE: u8 = 1;
const TAG_HEAD: u8 = 2;
const TAG_TAPE: u8 = 3;
const TAG_HISTORY: u8 = 4;
const TAG_CLOCK: u8 = 5;
const TAG_HALT: u8 = 6;
const TAG_BEACON: u8 = 7;

impl ExtendedBasisState {
    pub fn history_len(&self) -> usize {
        self.work.history.len()
    }

    /// Canonical tag-length-value encoding.
    ///
    /// Fields appear in fixed order, each as `tag: u8`, `len: u32 LE`,
    /// `value`:
    ///
    /// | tag | field   | value                                          |
    /// |-----|---------|------------------------------------------------|
    /// | 1   | state   | `u32` LE                                       |
    /// | 2   | head    | `i64` LE                                       |
    /// | 3   | tape    | `(cell: i64 LE, symbol: u32 LE)*`, cells ascending, no blanks |
    /// | 4   | history | `u32` LE rule ids, oldest first                |
    /// | 5   | clock   | `i64` LE                                       |
    /// | 6   | halt    | `u8` 0 or 1                                    |
    /// | 7   | beacon  | `u8` 0 or 1                                    |
    pub fn to_bytes(&self) -> Vec<u8> {
        let w = &self.work;
        let mut out = Vec::with_capacity(48 + 12 * w.tape.len() + 4 * w.history.len());
        put(&mut out, TAG_STATE, &w.state.to_le_bytes());
        put(&mut out, TAG_HEAD, &w.head.to_le_bytes());
        let mut tape = Vec::with_capacity(12 * w.tape.len());
        for (c, s) in w.tape.cells() {
            tape.extend_from_slice(&c.to_le_bytes());
            tape.extend_from_slice(&s.to_le_bytes());
        }
        put(&mut out, TAG_TAPE, &tape);
        let hist: Vec<u8> = w.history.iter().flat_map(|h| h.to_le_bytes()).collect();
        put(&mut out, TAG_HISTORY, &hist);
        put(&mut out, TAG_CLOCK, &self.clock.to_le_bytes());
        put(&mut out, TAG_HALT, &[self.halted as u8]);
        put(&mut out, TAG_BEACON, &[self.beacon as u8]);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LabelError> {
        let mut r = Reader { bytes, pos: 0 };
        let state = u32::from_le_bytes(r.fixed(TAG_STATE)?);
        let head = i64::from_le_bytes(r.fixed(TAG_HEAD)?);
        let tape_bytes = r.field(TAG_TAPE)?;
        if tape_bytes.len() % 12 != 0 {
            return Err(decode("tape field length is not a multiple of 12"));
        }
        let mut cells = Vec::with_capacity(tape_bytes.len() / 12);
        for chunk in tape_bytes.chunks_exact(12) {
            let c = i64::from_le_bytes(chunk[..8].try_into().unwrap());
            let s = u32::from_le_bytes(chunk[8..].try_into().unwrap());
            if s == BLANK {
                return Err(decode("tape stores a blank cell"));
            }
            if cells.last().is_some_and(|&(p, _)| p >= c) {
                return Err(decode("tape cells are not strictly ascending"));
            }
            cells.push((c, s));
        }
        let hist_bytes = r.field(TAG_HISTORY)?;
        if hist_bytes.len() % 4 != 0 {
            return Err(decode("history field length is not a multiple of 4"));
        }
        let history = hist_bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let clock = i64::from_le_bytes(r.fixed(TAG_CLOCK)?);
        let halted = r.flag(TAG_HALT)?;
        let beacon = r.flag(TAG_BEACON)?;
        if r.pos != bytes.len() {
            return Err(decode("trailing bytes"));
        }
        Ok(ExtendedBasisState {
            work: WorkRegister {
                state,
                head,
                tape: Tape::from_cells(cells),
                history,
            },
            clock,
            halted,
            beacon,
        })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, LabelError> {
        let bytes = hex::decode(s.trim()).map_err(|e| decode(&e.to_string()))?;
        Self::from_bytes(&bytes)
    }
}

fn put(out: &mut Vec<u8>, tag: u8, value: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    out.extend_from_slice(value);
}

fn decode(msg: &str) -> LabelError {
    LabelError::Decode(msg.to_string())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn field(&mut self, tag: u8) -> Result<&'a [u8], LabelError> {
        let b = self.bytes;
        if b.len() < self.pos + 5 {
            return Err(decode("truncated field header"));
        }
        if b[self.pos] != tag {
            return Err(LabelError::Decode(format!("expected tag {tag}, found {}", b[self.pos])));
        }
        let len = u32::from_le_bytes(b[self.pos + 1..self.pos + 5].try_into().unwrap()) as usize;
        let start = self.pos + 5;
        if b.len() < start + len {
            return Err(decode("truncated field value"));
        }
        self.pos = start + len;
        Ok(&b[start..start + len])
    }

    fn fixed<const N: usize>(&mut self, tag: u8) -> Result<[u8; N], LabelError> {
        self.field(tag)?
            .try_into()
            .map_err(|_| LabelError::Decode(format!("field {tag} must be {N} bytes")))
    }

    fn flag(&mut self, tag: u8) -> Result<bool, LabelError> {
        match self.fixed::<1>(tag)? {
            [0] => Ok(false),
            [1] => Ok(true),
            _ => Err(LabelError::Decode(format!("flag {tag} is not 0 or 1"))),
        }
    }
}

/// Result of inverting one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Preimage {
    Label(ExtendedBasisState),
    NoPreimage,
}

/// The one-step permutation for a machine under a clock mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeaconStep {
    spec: MachineSpec,
    mode: ClockMode,
}

pub fn initial_state(spec: &MachineSpec, _mode: ClockMode) -> ExtendedBasisState {
    ExtendedBasisState {
        work: WorkRegister::initial(spec),
        clock: 0,
        halted: false,
        beacon: false,
    }
}

impl BeaconStep {
    pub fn new(spec: MachineSpec, mode: ClockMode) -> Self {
        BeaconStep { spec, mode }
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn initial_state(&self) -> ExtendedBasisState {
        initial_state(&self.spec, self.mode)
    }

    pub fn forward(&self, s: &ExtendedBasisState) -> Result<ExtendedBasisState, MachineError> {
        let mut next = s.clone();
        self.forward_in_place(&mut next)?;
        Ok(next)
    }

    /// Advances `s` by one step without reallocating the history.
    pub fn forward_in_place(&self, s: &mut ExtendedBasisState) -> Result<(), MachineError> {
        if let ClockMode::Cyclic { period } = self.mode {
            if s.clock >= period as i64 - 1 {
                *s = self.initial_state();
                return Ok(());
            }
        }
        let halt = self.spec.halt();
        if s.halted {
            s.beacon = !s.beacon;
        } else if s.clock < 0 {
            // idle pre-history
        } else if s.work.state == halt {
            // immediate halt: rising step and first toggle coincide
            s.halted = true;
            s.beacon = !s.beacon;
        } else {
            let w = &mut s.work;
            let id = self.spec.require_rule(w.state, w.tape.read(w.head))?;
            w.apply(&self.spec, id);
            s.halted = w.state == halt;
        }
        s.clock += 1;
        Ok(())
    }

    /// `forward` applied `n` times.
    pub fn forward_n(&self, s: &ExtendedBasisState, n: u64) -> Result<ExtendedBasisState, MachineError> {
        let mut x = s.clone();
        for _ in 0..n {
            self.forward_in_place(&mut x)?;
        }
        Ok(x)
    }

    /// Inverse step. Labels outside the image of well-formed labels have no
    /// preimage.
    pub fn backward(&self, s: &ExtendedBasisState) -> Result<Preimage, MachineError> {
        use Preimage::NoPreimage;
        let halt = self.spec.halt();
        let len = s.history_len() as i64;
        if let ClockMode::Cyclic { period } = self.mode {
            if s.clock < 0 || s.clock >= period as i64 {
                return Ok(NoPreimage);
            }
            if s.clock == 0 {
                if *s != self.initial_state() {
                    return Ok(NoPreimage);
                }
                let last = self.forward_n(s, period as u64 - 1)?;
                return Ok(Preimage::Label(last));
            }
        }
        let mut prev = s.clone();
        if !s.halted {
            if s.beacon {
                return Ok(NoPreimage);
            }
            if len == 0 {
                if s.clock > 0 || s.work != WorkRegister::initial(&self.spec) {
                    return Ok(NoPreimage);
                }
                prev.clock -= 1;
                return Ok(Preimage::Label(prev));
            }
            if s.clock != len || s.work.state == halt {
                return Ok(NoPreimage);
            }
            return Ok(match s.work.unapply(&self.spec) {
                Some(w) => {
                    prev.work = w;
                    prev.clock -= 1;
                    Preimage::Label(prev)
                }
                None => NoPreimage,
            });
        }
        if s.work.state != halt {
            return Ok(NoPreimage);
        }
        let since = s.clock - len;
        let min_since = if len == 0 { 1 } else { 0 };
        if since < min_since || (since.rem_euclid(2) == 1) != s.beacon {
            return Ok(NoPreimage);
        }
        if since == 0 {
            // rising step
            return Ok(match s.work.unapply(&self.spec) {
                Some(w) if w.state != halt => {
                    prev.work = w;
                    prev.clock -= 1;
                    prev.halted = false;
                    Preimage::Label(prev)
                }
                _ => NoPreimage,
            });
        }
        if since == 1 && len == 0 {
            if s.work != WorkRegister::initial(&self.spec) {
                return Ok(NoPreimage);
            }
            return Ok(Preimage::Label(self.initial_state()));
        }
        prev.clock -= 1;
        prev.beacon = !prev.beacon;
        Ok(Preimage::Label(prev))
    }

    /// Checks that `s` lies on the orbit of the initial label by replaying
    /// its history.
    pub fn check_well_formed(&self, s: &ExtendedBasisState) -> Result<(), LabelError> {
        let bad = |m: &str| Err(LabelError::Malformed(m.to_string()));
        let spec = &self.spec;
        let halt = spec.halt();
        let mut w = WorkRegister::initial(spec);
        for &id in &s.work.history {
            let Some(rule) = spec.rule(id) else {
                return bad("history references an unknown rule");
            };
            if w.state == halt {
                return bad("history continues past the halt state");
            }
            if rule.state != w.state || rule.read != w.tape.read(w.head) {
                return bad("history is not a valid run of the machine");
            }
            w.apply(spec, id);
        }
        if w != s.work {
            return bad("work register disagrees with its history replay");
        }
        let len = s.history_len() as i64;
        if let ClockMode::Cyclic { period } = self.mode {
            if s.clock < 0 || s.clock >= period as i64 {
                return bad("clock outside 0..L");
            }
        }
        if !s.halted {
            if s.beacon {
                return bad("beacon set before the halt flag");
            }
            if len == 0 {
                if s.clock > 0 {
                    return bad("clock ahead of an empty history");
                }
            } else if s.clock != len {
                return bad("clock and history length differ on a running label");
            } else if s.work.state == halt {
                return bad("halt state reached without the halt flag");
            }
            return Ok(());
        }
        if s.work.state != halt {
            return bad("halt flag set outside the halt state");
        }
        let since = s.clock - len;
        let min_since = if len == 0 { 1 } else { 0 };
        if since < min_since {
            return bad("clock behind the halting step");
        }
        if (since.rem_euclid(2) == 1) != s.beacon {
            return bad("beacon parity disagrees with time since halting");
        }
        Ok(())
    }
}

/// Which target the hitting time refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetMode {
    /// Every label with `b = 1`.
    BeaconSubspace,
    /// A single basis label.
    ExactLabel(ExtendedBasisState),
}

impl TargetMode {
    pub fn matches(&self, s: &ExtendedBasisState) -> bool {
        match self {
            TargetMode::BeaconSubspace => s.beacon,
            TargetMode::ExactLabel(phi) => s == phi,
        }
    }
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetMode::BeaconSubspace => f.write_str("beacon"),
            TargetMode::ExactLabel(phi) => write!(f, "exact:{}", phi.to_hex()),
        }
    }
}

impl FromStr for TargetMode {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "beacon" {
            return Ok(TargetMode::BeaconSubspace);
        }
        match s.strip_prefix("exact:") {
            Some(h) => Ok(TargetMode::ExactLabel(ExtendedBasisState::from_hex(h)?)),
            None => Err(LabelError::Decode(format!(
                "target must be `beacon` or `exact:<hex label>`, got {s:?}"
            ))),
        }
    }
}

impl Serialize for TargetMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TargetMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Predicate for `mode`, validating an exact target against the machine.
pub fn target_predicate(step: &BeaconStep, mode: TargetMode) -> Result<TargetMode, LabelError> {
    if let TargetMode::ExactLabel(phi) = &mode {
        step.check_well_formed(phi)?;
    }
    Ok(mode)
}
