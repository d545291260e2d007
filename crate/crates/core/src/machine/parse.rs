//! Line-oriented machine description format.
//!
//! ```text
//! # comment
//! states: q0 q1 qH
//! alphabet: _ 0 1        # first symbol is the blank
//! start: q0
//! halt: qH
//! input: 101
//! rule: q0 1 -> q1 0 R
//! ```
//!
//! `input` is optional. Its tokens are symbol names; a token that is not a
//! declared symbol is read character by character.

use super::{MachineError, MachineSpec, Move, Rule};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Semantic {
        line: usize,
        #[source]
        source: MachineError,
    },
    #[error("missing required `{0}:` line")]
    MissingField(&'static str),
}

#[derive(Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(s: &str, base_column: usize) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(b) = start.take() {
                out.push(Token {
                    text: &s[b..i],
                    column: base_column + s[..b].chars().count(),
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        out.push(Token {
            text: &s[b..],
            column: base_column + s[..b].chars().count(),
        });
    }
    out
}

struct Header<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
}

struct RuleLine<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
}

/// Parses a machine description document.
pub fn parse_machine(text: &str) -> Result<MachineSpec, ParseError> {
    let mut headers: HashMap<&'static str, Header<'_>> = HashMap::new();
    let mut rules: Vec<RuleLine<'_>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let Some(colon) = content.find(':') else {
            let col = 1 + content.len() - content.trim_start().len();
            return Err(syntax(line, col, "expected `key: value`"));
        };
        let key = content[..colon].trim();
        let value = &content[colon + 1..];
        let value_col = content[..colon + 1].chars().count() + 1;
        let toks = tokens(value, value_col);
        let key_col = 1 + content.len() - content.trim_start().len();
        let field = match key {
            "states" => "states",
            "alphabet" => "alphabet",
            "start" => "start",
            "halt" => "halt",
            "input" => "input",
            "rule" => {
                rules.push(RuleLine { line, tokens: toks });
                continue;
            }
            other => {
                return Err(syntax(line, key_col, format!("unknown key `{other}`")));
            }
        };
        if headers.contains_key(field) {
            return Err(syntax(line, key_col, format!("`{field}:` given twice")));
        }
        headers.insert(field, Header { line, tokens: toks });
    }

    let take = |k: &'static str| headers.get(k).ok_or(ParseError::MissingField(k));
    let states_h = take("states")?;
    let alphabet_h = take("alphabet")?;
    let start_h = take("start")?;
    let halt_h = take("halt")?;

    let states = names(states_h, "states")?;
    let alphabet = names(alphabet_h, "alphabet")?;
    let state_ix = intern(&states, states_h, "state")?;
    let symbol_ix = intern(&alphabet, alphabet_h, "symbol")?;

    let single = |h: &Header<'_>, what: &str| -> Result<u32, ParseError> {
        match h.tokens.as_slice() {
            [t] => state_ix.get(t.text).copied().ok_or(ParseError::Semantic {
                line: h.line,
                source: MachineError::UndeclaredState(t.text.to_string()),
            }),
            [] => Err(syntax(h.line, 1, format!("`{what}:` needs a state name"))),
            [_, extra, ..] => Err(syntax(h.line, extra.column, "expected a single state name")),
        }
    };
    let start = single(start_h, "start")?;
    let halt = single(halt_h, "halt")?;

    let mut input = Vec::new();
    if let Some(h) = headers.get("input") {
        for t in &h.tokens {
            if let Some(&s) = symbol_ix.get(t.text) {
                input.push(s);
                continue;
            }
            for ch in t.text.chars() {
                let mut buf = [0u8; 4];
                let name: &str = ch.encode_utf8(&mut buf);
                match symbol_ix.get(name) {
                    Some(&s) => input.push(s),
                    None => {
                        return Err(ParseError::Semantic {
                            line: h.line,
                            source: MachineError::UndeclaredSymbol(name.to_string()),
                        })
                    }
                }
            }
        }
        if input.contains(&super::BLANK) {
            return Err(ParseError::Semantic {
                line: h.line,
                source: MachineError::BlankInInput,
            });
        }
    }

    let mut built = Vec::with_capacity(rules.len());
    let mut seen: HashMap<(u32, u32), usize> = HashMap::new();
    for r in &rules {
        let t = &r.tokens;
        if t.len() != 6 || t[2].text != "->" {
            let col = t.get(2).map_or(t.first().map_or(1, |x| x.column), |x| x.column);
            return Err(syntax(
                r.line,
                col,
                "expected `rule: state symbol -> state symbol L|R|S`",
            ));
        }
        let sem = |e: MachineError| ParseError::Semantic {
            line: r.line,
            source: e,
        };
        let st = |tok: &Token<'_>| {
            state_ix
                .get(tok.text)
                .copied()
                .ok_or_else(|| sem(MachineError::UndeclaredState(tok.text.to_string())))
        };
        let sy = |tok: &Token<'_>| {
            symbol_ix
                .get(tok.text)
                .copied()
                .ok_or_else(|| sem(MachineError::UndeclaredSymbol(tok.text.to_string())))
        };
        let rule = Rule {
            state: st(&t[0])?,
            read: sy(&t[1])?,
            next: st(&t[3])?,
            write: sy(&t[4])?,
            movement: Move::parse(t[5].text).ok_or_else(|| {
                syntax(
                    r.line,
                    t[5].column,
                    format!("move must be L, R or S, got `{}`", t[5].text),
                )
            })?,
        };
        if rule.state == halt {
            return Err(sem(MachineError::RuleFromHalt(t[0].text.to_string())));
        }
        if seen.insert((rule.state, rule.read), r.line).is_some() {
            return Err(sem(MachineError::DuplicateRule {
                state: t[0].text.to_string(),
                symbol: t[1].text.to_string(),
            }));
        }
        built.push(rule);
    }

    MachineSpec::new(states, alphabet, start, halt, built, input)
        .map_err(|e| ParseError::Semantic { line: 0, source: e })
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn names(h: &Header<'_>, what: &str) -> Result<Vec<String>, ParseError> {
    if h.tokens.is_empty() {
        return Err(syntax(h.line, 1, format!("`{what}:` must list at least one name")));
    }
    Ok(h.tokens.iter().map(|t| t.text.to_string()).collect())
}

fn intern<'a>(list: &'a [String], h: &Header<'_>, kind: &'static str) -> Result<HashMap<&'a str, u32>, ParseError> {
    let mut map = HashMap::with_capacity(list.len());
    for (i, n) in list.iter().enumerate() {
        if map.insert(n.as_str(), i as u32).is_some() {
            return Err(ParseError::Semantic {
                line: h.line,
                source: MachineError::DuplicateDeclaration { kind, name: n.clone() },
            });
        }
    }
    Ok(map)
}

/// Writes the machine back in the text format accepted by [`parse_machine`].
impl fmt::Display for MachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states().join(" "))?;
        writeln!(f, "alphabet: {}", self.alphabet().join(" "))?;
        writeln!(f, "start: {}", self.state_name(self.start()))?;
        writeln!(f, "halt: {}", self.state_name(self.halt()))?;
        if !self.input().is_empty() {
            let compact = self.alphabet().iter().all(|s| s.chars().count() == 1);
            let sep = if compact { "" } else { " " };
            let word: Vec<&str> = self.input().iter().map(|&s| self.symbol_name(s)).collect();
            writeln!(f, "input: {}", word.join(sep))?;
        }
        for r in self.rules() {
            writeln!(
                f,
                "rule: {} {} -> {} {} {}",
                self.state_name(r.state),
                self.symbol_name(r.read),
                self.state_name(r.next),
                self.symbol_name(r.write),
                r.movement
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn move_right_three_fields() {
        let m = parse_machine(MOVE_RIGHT_3).unwrap();
        assert_eq!(m.states(), ["q0", "q1", "q2", "qH"]);
        assert_eq!(m.alphabet(), ["_", "1"]);
        assert_eq!(m.state_name(m.start()), "q0");
        assert_eq!(m.state_name(m.halt()), "qH");
        assert!(m.input().is_empty());
        assert_eq!(m.rules().len(), 3);
        let r = m.rules()[1];
        assert_eq!((r.state, r.read, r.next, r.write, r.movement), (1, 0, 2, 0, Move::R));
    }

    #[test]
    fn duplicate_rule_names_the_pair() {
        let doc = "states: q0 qH\nalphabet: _ 0\nstart: q0\nhalt: qH\n\
                   rule: q0 0 -> qH 0 R\nrule: q0 0 -> q0 _ L\n";
        let err = parse_machine(doc).unwrap_err();
        match err {
            ParseError::Semantic {
                line: 6,
                source: MachineError::DuplicateRule { state, symbol },
            } => assert_eq!((state.as_str(), symbol.as_str()), ("q0", "0")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn immediate_halt_without_rules() {
        let m = parse_machine(IMMEDIATE).unwrap();
        assert!(m.rules().is_empty());
        assert_eq!(m.start(), m.halt());
        assert_eq!(m.classical_run(0).unwrap().halting_step(), Some(0));
    }

    #[test]
    fn rule_out_of_halt_is_rejected() {
        let doc = "states: a h\nalphabet: _\nstart: a\nhalt: h\nrule: h _ -> a _ R\n";
        assert!(matches!(
            parse_machine(doc),
            Err(ParseError::Semantic {
                line: 5,
                source: MachineError::RuleFromHalt(_)
            })
        ));
    }

    #[test]
    fn undeclared_names_are_rejected() {
        let doc = "states: a h\nalphabet: _\nstart: a\nhalt: h\nrule: a 1 -> h _ R\n";
        assert!(matches!(
            parse_machine(doc),
            Err(ParseError::Semantic { source: MachineError::UndeclaredSymbol(s), .. }) if s == "1"
        ));
        let doc = "states: a h\nalphabet: _\nstart: b\nhalt: h\n";
        assert!(matches!(
            parse_machine(doc),
            Err(ParseError::Semantic { source: MachineError::UndeclaredState(s), .. }) if s == "b"
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let doc = "states: a h\nalphabet: _\nstart: a\nhalt: h\nrule: a _ => h _ R\n";
        assert_eq!(
            parse_machine(doc).unwrap_err(),
            ParseError::Syntax {
                line: 5,
                column: 11,
                message: "expected `rule: state symbol -> state symbol L|R|S`".into()
            }
        );
        let doc = "states: a h\nalphabet: _\nstart: a\nhalt: h\nrule: a _ -> h _ X\n";
        assert!(matches!(
            parse_machine(doc),
            Err(ParseError::Syntax {
                line: 5,
                column: 18,
                ..
            })
        ));
        assert!(matches!(
            parse_machine("  bogus line\n"),
            Err(ParseError::Syntax { line: 1, column: 3, .. })
        ));
        assert_eq!(
            parse_machine("states: a\nalphabet: _\nhalt: a\n").unwrap_err(),
            ParseError::MissingField("start")
        );
    }

    #[test]
    fn input_word_and_tokens() {
        let doc = "states: a h\nalphabet: _ 0 1\nstart: a\nhalt: h\ninput: 101 # word\n";
        let m = parse_machine(doc).unwrap();
        assert_eq!(m.input(), [2, 1, 2]);
        let doc = "states: a h\nalphabet: B x10 y\nstart: a\nhalt: h\ninput: x10 y x10\n";
        let m = parse_machine(doc).unwrap();
        assert_eq!(m.input(), [1, 2, 1]);
        let doc = "states: a h\nalphabet: _ 1\nstart: a\nhalt: h\ninput: 1_1\n";
        assert!(matches!(
            parse_machine(doc),
            Err(ParseError::Semantic {
                source: MachineError::BlankInInput,
                ..
            })
        ));
    }

    fn arb_machine() -> impl Strategy<Value = MachineSpec> {
        (1usize..5, 1usize..4, any::<bool>()).prop_flat_map(|(ns, nsym, long_names)| {
            let states: Vec<String> = (0..=ns).map(|i| format!("q{i}")).collect();
            let alphabet: Vec<String> = (0..=nsym)
                .map(|i| {
                    if i == 0 {
                        "_".into()
                    } else if long_names {
                        format!("s{i}")
                    } else {
                        i.to_string()
                    }
                })
                .collect();
            let halt = ns as u32;
            let pairs: Vec<(u32, u32)> = (0..ns as u32)
                .flat_map(|q| (0..=nsym as u32).map(move |s| (q, s)))
                .collect();
            let rule_parts =
                proptest::collection::vec((any::<bool>(), 0..=ns as u32, 0..=nsym as u32, 0..3u8), pairs.len());
            let input = proptest::collection::vec(1..=nsym as u32, 0..6);
            (Just((states, alphabet, halt, pairs)), 0..=ns as u32, rule_parts, input).prop_map(
                |((states, alphabet, halt, pairs), start, parts, input)| {
                    let rules = pairs
                        .iter()
                        .zip(parts)
                        .filter(|(_, (keep, ..))| *keep)
                        .map(|(&(q, s), (_, q2, s2, m))| Rule {
                            state: q,
                            read: s,
                            next: q2,
                            write: s2,
                            movement: [Move::L, Move::R, Move::S][m as usize],
                        })
                        .collect();
                    MachineSpec::new(states, alphabet, start, halt, rules, input).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(m in arb_machine()) {
            let text = m.to_string();
            let back = parse_machine(&text).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
