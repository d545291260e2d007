//! Deterministic single-tape Turing machines.
//!
//! States and symbols are interned to dense indices at parse time; the
//! declared names are kept for diagnostics and serialization. The tape is
//! two-way infinite and stored sparsely (blank cells are never stored).

mod parse;

pub use parse::{parse_machine, ParseError};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub type StateId = u32;
pub type SymbolId = u32;
/// Index of a rule in declaration order. Histories record these.
pub type RuleId = u32;

/// The blank symbol is always the first declared symbol.
pub const BLANK: SymbolId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
    S,
}

impl Move {
    pub fn offset(self) -> i64 {
        match self {
            Move::L => -1,
            Move::R => 1,
            Move::S => 0,
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "L" => Some(Move::L),
            "R" => Some(Move::R),
            "S" => Some(Move::S),
            _ => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Move::L => "L",
            Move::R => "R",
            Move::S => "S",
        };
        f.write_str(c)
    }
}

/// `(state, read) -> (next, write, move)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rule {
    pub state: StateId,
    pub read: SymbolId,
    pub next: StateId,
    pub write: SymbolId,
    pub movement: Move,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("no rule for state {state} reading {symbol}; machine is ill-formed")]
    MissingRule { state: String, symbol: String },
    #[error("duplicate rule for ({state}, {symbol})")]
    DuplicateRule { state: String, symbol: String },
    #[error("undeclared state {0}")]
    UndeclaredState(String),
    #[error("undeclared symbol {0}")]
    UndeclaredSymbol(String),
    #[error("rule leaves the halt state {0}")]
    RuleFromHalt(String),
    #[error("input contains the blank symbol")]
    BlankInInput,
    #[error("{kind} {name} declared twice")]
    DuplicateDeclaration { kind: &'static str, name: String },
    #[error("alphabet must declare at least the blank symbol")]
    EmptyAlphabet,
}

/// A deterministic Turing machine together with its input word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    states: Vec<String>,
    alphabet: Vec<String>,
    start: StateId,
    halt: StateId,
    rules: Vec<Rule>,
    input: Vec<SymbolId>,
    lookup: HashMap<(StateId, SymbolId), RuleId>,
}

impl MachineSpec {
    /// Builds a machine from names, validating every structural invariant.
    ///
    /// `rules` entries are `(state, read, next, write, move)` by name.
    pub fn from_names<S: AsRef<str>>(
        states: &[S],
        alphabet: &[S],
        start: &str,
        halt: &str,
        rules: &[(S, S, S, S, Move)],
        input: &[S],
    ) -> Result<Self, MachineError> {
        let states: Vec<String> = states.iter().map(|s| s.as_ref().to_string()).collect();
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_string()).collect();
        if alphabet.is_empty() {
            return Err(MachineError::EmptyAlphabet);
        }
        let state_index = index_names(&states, "state")?;
        let symbol_index = index_names(&alphabet, "symbol")?;
        let st = |n: &str| {
            state_index
                .get(n)
                .copied()
                .ok_or_else(|| MachineError::UndeclaredState(n.to_string()))
        };
        let sy = |n: &str| {
            symbol_index
                .get(n)
                .copied()
                .ok_or_else(|| MachineError::UndeclaredSymbol(n.to_string()))
        };
        let start = st(start)?;
        let halt = st(halt)?;
        let mut built = Vec::with_capacity(rules.len());
        for (q, s, q2, s2, m) in rules {
            built.push(Rule {
                state: st(q.as_ref())?,
                read: sy(s.as_ref())?,
                next: st(q2.as_ref())?,
                write: sy(s2.as_ref())?,
                movement: *m,
            });
        }
        let input = input.iter().map(|s| sy(s.as_ref())).collect::<Result<Vec<_>, _>>()?;
        Self::new(states, alphabet, start, halt, built, input)
    }

    pub(crate) fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        start: StateId,
        halt: StateId,
        rules: Vec<Rule>,
        input: Vec<SymbolId>,
    ) -> Result<Self, MachineError> {
        if alphabet.is_empty() {
            return Err(MachineError::EmptyAlphabet);
        }
        let mut lookup = HashMap::with_capacity(rules.len());
        for (id, r) in rules.iter().enumerate() {
            if r.state == halt {
                return Err(MachineError::RuleFromHalt(states[halt as usize].clone()));
            }
            if lookup.insert((r.state, r.read), id as RuleId).is_some() {
                return Err(MachineError::DuplicateRule {
                    state: states[r.state as usize].clone(),
                    symbol: alphabet[r.read as usize].clone(),
                });
            }
        }
        if input.contains(&BLANK) {
            return Err(MachineError::BlankInInput);
        }
        Ok(Self {
            states,
            alphabet,
            start,
            halt,
            rules,
            input,
            lookup,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn halt(&self) -> StateId {
        self.halt
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules.get(id as usize)
    }

    pub fn input(&self) -> &[SymbolId] {
        &self.input
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id as usize]
    }

    pub fn symbol_name(&self, id: SymbolId) -> &str {
        &self.alphabet[id as usize]
    }

    /// The rule applicable in `(state, symbol)`, if any.
    pub fn lookup(&self, state: StateId, symbol: SymbolId) -> Option<RuleId> {
        self.lookup.get(&(state, symbol)).copied()
    }

    /// Replaces the input word, keeping the transition table.
    pub fn with_input(&self, input: Vec<SymbolId>) -> Result<Self, MachineError> {
        Self::new(
            self.states.clone(),
            self.alphabet.clone(),
            self.start,
            self.halt,
            self.rules.clone(),
            input,
        )
    }

    pub fn initial_configuration(&self) -> Configuration {
        let tape = self.input.iter().enumerate().map(|(i, &s)| (i as i64, s)).collect();
        Configuration {
            tape: Tape(tape),
            head: 0,
            state: self.start,
            step_count: 0,
        }
    }

    fn missing_rule(&self, state: StateId, symbol: SymbolId) -> MachineError {
        MachineError::MissingRule {
            state: self.state_name(state).to_string(),
            symbol: self.symbol_name(symbol).to_string(),
        }
    }

    /// Finds the rule to apply in `(state, symbol)` on a non-halt state.
    pub fn require_rule(&self, state: StateId, symbol: SymbolId) -> Result<RuleId, MachineError> {
        self.lookup(state, symbol)
            .ok_or_else(|| self.missing_rule(state, symbol))
    }

    /// One classical step.
    pub fn classical_step(&self, c: Configuration) -> Result<Step, MachineError> {
        if c.state == self.halt {
            return Ok(Step::Halted(c));
        }
        let mut c = c;
        let id = self.require_rule(c.state, c.tape.read(c.head))?;
        c.apply(&self.rules[id as usize]);
        c.step_count += 1;
        Ok(Step::Next(c))
    }

    /// Runs for at most `max_steps` steps from the initial configuration.
    pub fn classical_run(&self, max_steps: u64) -> Result<RunOutcome, MachineError> {
        let mut c = self.initial_configuration();
        loop {
            if c.state == self.halt {
                return Ok(RunOutcome::Halted {
                    k: c.step_count,
                    last: c,
                });
            }
            if c.step_count >= max_steps {
                return Ok(RunOutcome::StillRunning { at: c });
            }
            c = match self.classical_step(c)? {
                Step::Next(n) => n,
                Step::Halted(h) => h,
            };
        }
    }

    /// Configuration after exactly `n` steps, or the halted configuration
    /// when the machine stops earlier.
    pub fn configuration_at(&self, n: u64) -> Result<Configuration, MachineError> {
        Ok(match self.classical_run(n)? {
            RunOutcome::Halted { last, .. } => last,
            RunOutcome::StillRunning { at } => at,
        })
    }
}

fn index_names(names: &[String], kind: &'static str) -> Result<HashMap<String, u32>, MachineError> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i as u32).is_some() {
            return Err(MachineError::DuplicateDeclaration { kind, name: n.clone() });
        }
    }
    Ok(map)
}

/// Sparse tape: cell index to non-blank symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tape(BTreeMap<i64, SymbolId>);

impl Tape {
    pub fn read(&self, cell: i64) -> SymbolId {
        self.0.get(&cell).copied().unwrap_or(BLANK)
    }

    pub fn write(&mut self, cell: i64, symbol: SymbolId) {
        if symbol == BLANK {
            self.0.remove(&cell);
        } else {
            self.0.insert(cell, symbol);
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, SymbolId)> + '_ {
        self.0.iter().map(|(&c, &s)| (c, s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_cells(cells: impl IntoIterator<Item = (i64, SymbolId)>) -> Self {
        let mut t = Tape::default();
        for (c, s) in cells {
            t.write(c, s);
        }
        t
    }
}

/// Classical machine configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub tape: Tape,
    pub head: i64,
    pub state: StateId,
    pub step_count: u64,
}

impl Configuration {
    /// Applies `rule` to tape, head and state. Does not touch `step_count`.
    pub(crate) fn apply(&mut self, rule: &Rule) {
        self.tape.write(self.head, rule.write);
        self.head += rule.movement.offset();
        self.state = rule.next;
    }

    /// Equality ignoring the step counter.
    pub fn same_machine_state(&self, other: &Configuration) -> bool {
        self.state == other.state && self.head == other.head && self.tape == other.tape
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Next(Configuration),
    /// The input configuration was already in the halt state.
    Halted(Configuration),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Halted { k: u64, last: Configuration },
    StillRunning { at: Configuration },
}

impl RunOutcome {
    pub fn halting_step(&self) -> Option<u64> {
        match self {
            RunOutcome::Halted { k, .. } => Some(*k),
            RunOutcome::StillRunning { .. } => None,
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub const MOVE_RIGHT_3: &str = "\
# move right three cells then halt
states: q0 q1 q2 qH
alphabet: _ 1
start: q0
halt: qH
rule: q0 _ -> q1 _ R
rule: q1 _ -> q2 _ R
rule: q2 _ -> qH _ R
";

    pub const LOOP: &str = "\
states: q0 qH
alphabet: _
start: q0
halt: qH
rule: q0 _ -> q0 _ S
";

    pub const IMMEDIATE: &str = "\
states: qH
alphabet: _ 1
start: qH
halt: qH
";
}
