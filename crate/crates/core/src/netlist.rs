//! Minimal SPICE-like netlist: parsing, rendering and fault-deviated copies.
//!
//! The grammar is line oriented. Blank lines and lines whose first
//! non-blank character is `*` are ignored. Every other line is either an
//! element card or a directive:
//!
//! ```text
//! Rxxx n+ n- value          resistor (ohms)
//! Cxxx n+ n- value          capacitor (farads)
//! Lxxx n+ n- value          inductor (henries)
//! Exxx o+ o- i+ i- gain     voltage-controlled voltage source
//! Vxxx n+ n- value          independent voltage source (AC amplitude)
//! .input <id>               driving source
//! .output <node>            observed node
//! .end                      optional, stops parsing
//! ```
//!
//! The first character of the id selects the kind. Values take an optional
//! engineering suffix (`f p n u m k meg g t`, case-insensitive). Node `0`
//! is ground.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const GROUND: &str = "0";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("line {line}: syntax error at `{token}`: {reason}")]
    Syntax { line: usize, token: String, reason: String },
    #[error("line {line}: unknown element kind \"{kind}\" in `{id}`")]
    UnknownKind { line: usize, kind: char, id: String },
    #[error("line {line}: duplicate element id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: element `{id}` has non-positive value {value}")]
    NonPositiveValue { line: usize, id: String, value: f64 },
    #[error("netlist is empty")]
    Empty,
    #[error("missing `.input` directive")]
    MissingInput,
    #[error("missing `.output` directive")]
    MissingOutput,
    #[error("`.input` names `{0}`, which is not a voltage source in the netlist")]
    BadInput(String),
    #[error("`.output` names node `{0}`, which is not connected to any element (or is ground)")]
    BadOutput(String),
    #[error("no element references the ground node \"0\"")]
    NoGround,
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("component `{0}` is not a resistor, capacitor or inductor")]
    NotPassive(String),
    #[error("deviation {deviation} of `{id}` gives a non-positive value")]
    InvalidDeviation { id: String, deviation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Resistor,
    Capacitor,
    Inductor,
    Vcvs,
    VSource,
}

impl ElementKind {
    pub fn from_prefix(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'R' => Some(Self::Resistor),
            'C' => Some(Self::Capacitor),
            'L' => Some(Self::Inductor),
            'E' => Some(Self::Vcvs),
            'V' => Some(Self::VSource),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Self::Vcvs => 4,
            _ => 2,
        }
    }

    /// Passive elements are the ones a parametric fault may target.
    pub fn is_passive(self) -> bool {
        matches!(self, Self::Resistor | Self::Capacitor | Self::Inductor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
    pub nodes: Vec<String>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    nodes: BTreeSet<String>,
    elements: Vec<Element>,
    input_source: String,
    output_node: String,
}

impl Circuit {
    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn input_source(&self) -> &str {
        &self.input_source
    }

    pub fn output_node(&self) -> &str {
        &self.output_node
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Ids of every resistor, capacitor and inductor, in netlist order.
    pub fn passive_ids(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter(|e| e.kind.is_passive())
            .map(|e| e.id.clone())
            .collect()
    }

    /// Returns a copy with `id` scaled by `1 + deviation`.
    pub fn apply_deviation(&self, id: &str, deviation: f64) -> Result<Circuit, NetlistError> {
        let idx = self
            .elements
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| NetlistError::UnknownComponent(id.to_string()))?;
        if !self.elements[idx].kind.is_passive() {
            return Err(NetlistError::NotPassive(id.to_string()));
        }
        let factor = 1.0 + deviation;
        if factor <= 0.0 || !factor.is_finite() {
            return Err(NetlistError::InvalidDeviation {
                id: id.to_string(),
                deviation,
            });
        }
        let mut out = self.clone();
        out.elements[idx].value *= factor;
        Ok(out)
    }

    /// Serializes back to netlist text; `parse_netlist(&c.render())` yields `c`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.elements {
            s.push_str(&e.id);
            for n in &e.nodes {
                s.push(' ');
                s.push_str(n);
            }
            // `{}` on f64 prints the shortest string that parses back exactly.
            s.push_str(&format!(" {}\n", e.value));
        }
        s.push_str(&format!(".input {}\n", self.input_source));
        s.push_str(&format!(".output {}\n", self.output_node));
        s
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for Circuit {
    type Err = NetlistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_netlist(s)
    }
}

/// Parses a numeric field with an optional engineering suffix.
pub fn parse_value(token: &str) -> Option<f64> {
    let lower = token.to_ascii_lowercase();
    let split = lower
        .char_indices()
        .find(|&(i, c)| c.is_ascii_alphabetic() && !(c == 'e' && is_exponent(&lower, i)))
        .map(|(i, _)| i)
        .unwrap_or(lower.len());
    let (mantissa, suffix) = lower.split_at(split);
    let scale = match suffix {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "meg" => 1e6,
        "g" => 1e9,
        "t" => 1e12,
        _ => return None,
    };
    let v: f64 = mantissa.parse().ok()?;
    let v = if suffix.is_empty() { v } else { v * scale };
    v.is_finite().then_some(v)
}

// An `e` is an exponent marker only when followed by a digit or a signed digit.
fn is_exponent(s: &str, i: usize) -> bool {
    let rest = &s.as_bytes()[i + 1..];
    match rest {
        [d, ..] if d.is_ascii_digit() => true,
        [b'+' | b'-', d, ..] if d.is_ascii_digit() => true,
        _ => false,
    }
}

pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    let mut elements: Vec<Element> = Vec::new();
    let mut input: Option<String> = None;
    let mut output: Option<String> = None;
    let mut any_content = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        any_content = true;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let head = fields[0];

        if let Some(directive) = head.strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "end" => break,
                "input" | "output" => {
                    if fields.len() != 2 {
                        return Err(NetlistError::Syntax {
                            line: line_no,
                            token: head.to_string(),
                            reason: "expected exactly one argument".into(),
                        });
                    }
                    let slot = if directive.eq_ignore_ascii_case("input") {
                        &mut input
                    } else {
                        &mut output
                    };
                    if slot.is_some() {
                        return Err(NetlistError::Syntax {
                            line: line_no,
                            token: head.to_string(),
                            reason: "directive given twice".into(),
                        });
                    }
                    *slot = Some(fields[1].to_string());
                }
                _ => {
                    return Err(NetlistError::Syntax {
                        line: line_no,
                        token: head.to_string(),
                        reason: "unknown directive".into(),
                    })
                }
            }
            continue;
        }

        let first = head.chars().next().expect("non-empty token");
        let kind = ElementKind::from_prefix(first).ok_or_else(|| NetlistError::UnknownKind {
            line: line_no,
            kind: first,
            id: head.to_string(),
        })?;
        if head.contains(',') || head.contains('"') {
            return Err(NetlistError::Syntax {
                line: line_no,
                token: head.to_string(),
                reason: "element ids may not contain `,` or `\"`".into(),
            });
        }
        let expected = 1 + kind.arity() + 1;
        if fields.len() != expected {
            let token = fields.get(expected).or(fields.last()).copied().unwrap_or(head);
            return Err(NetlistError::Syntax {
                line: line_no,
                token: token.to_string(),
                reason: format!("expected {} fields, found {}", expected, fields.len()),
            });
        }
        if elements.iter().any(|e| e.id == head) {
            return Err(NetlistError::DuplicateId {
                line: line_no,
                id: head.to_string(),
            });
        }
        let value_tok = fields[expected - 1];
        let value = parse_value(value_tok).ok_or_else(|| NetlistError::Syntax {
            line: line_no,
            token: value_tok.to_string(),
            reason: "invalid numeric value".into(),
        })?;
        if value.is_nan() || value <= 0.0 {
            return Err(NetlistError::NonPositiveValue {
                line: line_no,
                id: head.to_string(),
                value,
            });
        }
        elements.push(Element {
            id: head.to_string(),
            kind,
            nodes: fields[1..expected - 1].iter().map(|s| s.to_string()).collect(),
            value,
        });
    }

    if !any_content {
        return Err(NetlistError::Empty);
    }
    let input = input.ok_or(NetlistError::MissingInput)?;
    let output = output.ok_or(NetlistError::MissingOutput)?;

    let nodes: BTreeSet<String> = elements.iter().flat_map(|e| e.nodes.iter().cloned()).collect();
    if !nodes.contains(GROUND) {
        return Err(NetlistError::NoGround);
    }
    match elements.iter().find(|e| e.id == input) {
        Some(e) if e.kind == ElementKind::VSource => {}
        _ => return Err(NetlistError::BadInput(input)),
    }
    if output == GROUND || !nodes.contains(&output) {
        return Err(NetlistError::BadOutput(output));
    }

    Ok(Circuit {
        nodes,
        elements,
        input_source: input,
        output_node: output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ONE_POLE: &str = "V1 1 0 1\nR1 1 2 1000\nC1 2 0 1e-6\n.input V1\n.output 2";

    #[test]
    fn parses_one_pole() {
        let c = parse_netlist(ONE_POLE).unwrap();
        assert_eq!(c.elements().len(), 3);
        assert_eq!(c.output_node(), "2");
        assert_eq!(c.input_source(), "V1");
        let ids: Vec<_> = c.elements().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["V1", "R1", "C1"]);
        assert_eq!(c.element("C1").unwrap().value, 1e-6);
    }

    #[test]
    fn comments_blank_lines_and_end() {
        let text = "* title\n\n   * indented comment\nV1 in 0 1\nR1 in out 1k\nR2 out 0 1k\n.input V1\n.output out\n.end\nQ1 junk";
        let c = parse_netlist(text).unwrap();
        assert_eq!(c.elements().len(), 3);
        assert_eq!(c.element("R1").unwrap().value, 1000.0);
    }

    #[test]
    fn unknown_kind() {
        let err = parse_netlist("Q1 1 2 3 model").unwrap_err();
        assert!(matches!(err, NetlistError::UnknownKind { kind: 'Q', line: 1, .. }));
        assert!(err.to_string().contains("\"Q\""));
    }

    #[test]
    fn syntax_errors_report_line_and_token() {
        let err = parse_netlist("V1 1 0 1\nR1 1 2 abc\n.input V1\n.output 2").unwrap_err();
        assert_eq!(
            err,
            NetlistError::Syntax {
                line: 2,
                token: "abc".into(),
                reason: "invalid numeric value".into()
            }
        );
        let err = parse_netlist("V1 1 0 1\nR1 1 2\n.input V1\n.output 2").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 2, .. }));
        let err = parse_netlist("V1 1 0 1\n.tran 1 2\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 2, .. }));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_netlist("V1 1 0 1\nR1 1 0 1\nR1 1 0 2\n.input V1\n.output 1"),
            Err(NetlistError::DuplicateId { line: 3, .. })
        ));
        assert!(matches!(
            parse_netlist("V1 1 0 1\nR1 1 0 0\n.input V1\n.output 1"),
            Err(NetlistError::NonPositiveValue { line: 2, .. })
        ));
        assert!(matches!(
            parse_netlist("V1 1 0 1\nR1 1 0 -5\n.input V1\n.output 1"),
            Err(NetlistError::NonPositiveValue { .. })
        ));
        assert_eq!(
            parse_netlist("V1 1 0 1\nR1 1 0 1\n.output 1"),
            Err(NetlistError::MissingInput)
        );
        assert_eq!(
            parse_netlist("V1 1 0 1\nR1 1 0 1\n.input V1"),
            Err(NetlistError::MissingOutput)
        );
        assert_eq!(
            parse_netlist("V1 1 2 1\nR1 1 2 1\n.input V1\n.output 1"),
            Err(NetlistError::NoGround)
        );
        assert_eq!(
            parse_netlist("V1 1 0 1\nR1 1 0 1\n.input R1\n.output 1"),
            Err(NetlistError::BadInput("R1".into()))
        );
        assert_eq!(
            parse_netlist("V1 1 0 1\nR1 1 0 1\n.input V1\n.output 7"),
            Err(NetlistError::BadOutput("7".into()))
        );
        assert_eq!(parse_netlist("* nothing\n\n"), Err(NetlistError::Empty));
        assert_eq!(parse_netlist(""), Err(NetlistError::Empty));
    }

    #[test]
    fn vcvs_arity() {
        let c = parse_netlist("V1 1 0 1\nR1 1 2 1\nE1 3 0 0 2 1e6\nR2 2 3 1\n.input V1\n.output 3").unwrap();
        assert_eq!(c.element("E1").unwrap().nodes, ["3", "0", "0", "2"]);
        assert!(parse_netlist("V1 1 0 1\nE1 3 0 2 1e6\n.input V1\n.output 3").is_err());
    }

    #[test]
    fn engineering_values() {
        assert_eq!(parse_value("1k"), Some(1e3));
        assert_eq!(parse_value("1e-6"), Some(1e-6));
        assert!((parse_value("2.2u").unwrap() - 2.2e-6).abs() < 1e-21);
        assert_eq!(parse_value("1MEG"), Some(1e6));
        assert_eq!(parse_value("3m"), Some(3e-3));
        assert_eq!(parse_value("1.5E3"), Some(1500.0));
        assert_eq!(parse_value("4.7nF"), None);
        assert_eq!(parse_value("k"), None);
        assert_eq!(parse_value("1ek"), None);
        assert_eq!(parse_value("inf"), None);
        assert_eq!(parse_value(".5"), Some(0.5));
        assert_eq!(parse_value("2."), Some(2.0));
        assert_eq!(parse_value("1e3k"), Some(1e6));
        assert_eq!(parse_value("3M"), Some(3e-3));
        assert_eq!(parse_value("1kohm"), None);
        assert_eq!(parse_value("1e400"), None);
    }

    #[test]
    fn crlf_and_named_ground() {
        let c = parse_netlist("V1 in 0 1\r\nR1 in out 1\r\nR2 out gnd 1\r\nR3 gnd 0 1\r\n.INPUT V1\r\n.Output out\r\n").unwrap();
        assert!(c.nodes().contains("gnd"));
        assert_eq!(c.nodes().len(), 4);
    }

    #[test]
    fn deviation_examples() {
        let c = parse_netlist(ONE_POLE).unwrap();
        let up = c.apply_deviation("R1", 0.20).unwrap();
        assert!((up.element("R1").unwrap().value - 1200.0).abs() < 1e-9);
        assert_eq!(c.element("R1").unwrap().value, 1000.0);
        let down = c.apply_deviation("C1", -0.40).unwrap();
        assert!((down.element("C1").unwrap().value - 0.6e-6).abs() < 1e-18);
        assert_eq!(c.apply_deviation("C1", 0.0).unwrap(), c);
    }

    #[test]
    fn deviation_errors() {
        let c = parse_netlist(ONE_POLE).unwrap();
        assert_eq!(
            c.apply_deviation("R9", 0.1),
            Err(NetlistError::UnknownComponent("R9".into()))
        );
        assert_eq!(c.apply_deviation("V1", 0.1), Err(NetlistError::NotPassive("V1".into())));
        assert!(matches!(
            c.apply_deviation("R1", -1.0),
            Err(NetlistError::InvalidDeviation { .. })
        ));
        assert!(c.apply_deviation("R1", -1.5).is_err());
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        let elem = (0usize..4, 0usize..5, 0usize..5, 1e-12f64..1e12);
        proptest::collection::vec(elem, 1..8).prop_map(|specs| {
            let mut text = String::from("V1 n1 0 1\n");
            for (i, (k, a, b, v)) in specs.into_iter().enumerate() {
                let prefix = ['R', 'C', 'L', 'E'][k];
                if prefix == 'E' {
                    text.push_str(&format!("E{i} n{a} 0 n{b} 0 {v}\n"));
                } else {
                    text.push_str(&format!("{prefix}{i} n{a} n{b} {v}\n"));
                }
            }
            text.push_str(".input V1\n.output n1\n");
            parse_netlist(&text).unwrap()
        })
    }

    proptest! {
        #[test]
        fn render_round_trips(c in arb_circuit()) {
            prop_assert_eq!(parse_netlist(&c.render()).unwrap(), c);
        }

        #[test]
        fn inverse_deviation_restores(d in -0.95f64..3.0, v in 1e-9f64..1e9) {
            let c = parse_netlist(&format!("V1 1 0 1\nR1 1 2 {v}\nC1 2 0 1\n.input V1\n.output 2")).unwrap();
            let back = 1.0 / (1.0 + d) - 1.0;
            let restored = c.apply_deviation("R1", d).unwrap().apply_deviation("R1", back).unwrap();
            let rel = (restored.element("R1").unwrap().value - v).abs() / v;
            prop_assert!(rel <= 1e-12, "relative error {}", rel);
        }

        #[test]
        fn deviation_touches_one_element(c in arb_circuit(), d in -0.9f64..1.0, pick in 0usize..8) {
            let passives = c.passive_ids();
            prop_assume!(!passives.is_empty());
            let id = &passives[pick % passives.len()];
            let dev = c.apply_deviation(id, d).unwrap();
            prop_assert_eq!(dev.nodes(), c.nodes());
            prop_assert_eq!(dev.input_source(), c.input_source());
            prop_assert_eq!(dev.output_node(), c.output_node());
            for (a, b) in dev.elements().iter().zip(c.elements()) {
                prop_assert_eq!(&a.id, &b.id);
                prop_assert_eq!(&a.nodes, &b.nodes);
                prop_assert_eq!(a.kind, b.kind);
                if &a.id != id {
                    prop_assert_eq!(a.value, b.value);
                }
            }
        }
    }
}
