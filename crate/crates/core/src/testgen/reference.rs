//! Expected family conditions written down by hand, checked against the
//! conditions derived from code.
//!
//! Sidecar format, one entry per line, `#` or `//` comments:
//! `NODE.true|false = VAR OP INT [; DATA]`

use serde::Serialize;
use thiserror::Error;

use crate::flowgraph::NodeId;
use crate::model::ProgramModel;

use super::condition::{search_order, Atom, CmpOp};
use super::family_condition;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceEntry {
    pub predicate: NodeId,
    pub branch: bool,
    pub condition: Atom,
    pub data: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reference {
    pub entries: Vec<ReferenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reference line {line}: {message}")]
pub struct ReferenceError {
    pub line: usize,
    pub message: String,
}

impl Reference {
    pub fn parse(text: &str) -> Result<Self, ReferenceError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split("//").next().unwrap_or("").split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| ReferenceError { line: i + 1, message: message.to_string() };
            let (key, rest) = line.split_once('=').ok_or_else(|| err("expected `NODE.BRANCH = CONDITION`"))?;
            let (node, branch) = key.trim().split_once('.').ok_or_else(|| err("expected `NODE.true` or `NODE.false`"))?;
            let predicate = NodeId(node.trim().parse().map_err(|_| err("node id must be a positive integer"))?);
            let branch = match branch.trim() {
                "true" => true,
                "false" => false,
                _ => return Err(err("branch must be `true` or `false`")),
            };
            let (cond, data) = match rest.split_once(';') {
                Some((c, d)) => (c, Some(d.trim().parse::<i64>().map_err(|_| err("test data must be an integer"))?)),
                None => (rest, None),
            };
            let parts: Vec<&str> = cond.split_whitespace().collect();
            let [var, op, value] = parts[..] else { return Err(err("condition must be `VAR OP INT`")) };
            let op = CmpOp::parse(op).ok_or_else(|| err("unknown comparison operator"))?;
            let value = value.parse().map_err(|_| err("condition bound must be an integer"))?;
            entries.push(ReferenceEntry {
                predicate,
                branch,
                condition: Atom { slot: 0, var: var.to_string(), op, value },
                data,
            });
        }
        Ok(Reference { entries })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceNote {
    pub predicate: NodeId,
    pub branch: bool,
    pub reference: String,
    pub derived: Option<String>,
    pub data: Option<i64>,
    pub agrees: bool,
    pub notes: Vec<String>,
}

/// Checks each entry against the code-derived family condition over
/// `[-range, range]`, and its data against both conditions.
pub fn compare_reference(model: &ProgramModel, reference: &Reference, range: i64) -> Vec<ReferenceNote> {
    reference
        .entries
        .iter()
        .map(|e| {
            let derived = family_condition(model, e.predicate, e.branch);
            let mut notes = Vec::new();
            let reference_text = e.condition.to_string();
            match derived.as_ref().and_then(|d| d.atom.clone()) {
                None if derived.is_none() => notes.push(format!("node {} is not a predicate", e.predicate)),
                None => notes.push("derived condition is not a simple comparison; not compared".to_string()),
                Some(atom) => {
                    let mut differ: Vec<i64> = search_order(range).filter(|&x| atom.holds(x) != e.condition.holds(x)).collect();
                    differ.sort();
                    if !differ.is_empty() {
                        let shown: Vec<String> = differ.iter().take(4).map(i64::to_string).collect();
                        let more = if differ.len() > 4 { ", ..." } else { "" };
                        notes.push(format!(
                            "reference condition `{reference_text}` differs from code-derived `{atom}` at {} = {}{more}",
                            atom.var,
                            shown.join(", ")
                        ));
                    }
                    if let Some(d) = e.data {
                        if !atom.holds(d) {
                            notes.push(format!("reference data {d} does not satisfy code-derived `{atom}`"));
                        }
                    }
                }
            }
            if let Some(d) = e.data {
                if !e.condition.holds(d) {
                    notes.push(format!("reference data {d} does not satisfy its own condition `{reference_text}`"));
                }
            }
            ReferenceNote {
                predicate: e.predicate,
                branch: e.branch,
                reference: reference_text,
                derived: derived.map(|d| d.text),
                data: e.data,
                agrees: notes.is_empty(),
                notes,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::NodeMap;
    use crate::frontend::canonical_example;

    fn fig1() -> ProgramModel {
        let map = NodeMap::parse(include_str!("../../../../corpus/fig1.nodemap")).unwrap();
        ProgramModel::new(canonical_example(), Some(&map)).unwrap()
    }

    #[test]
    fn parses_sidecar() {
        let r = Reference::parse(include_str!("../../../../corpus/fig1.reference")).unwrap();
        assert_eq!(r.entries.len(), 4);
        assert_eq!(r.entries[2].predicate, NodeId(14));
        assert!(!r.entries[2].branch);
        assert_eq!(r.entries[2].condition.to_string(), "n < 0");
        assert_eq!(r.entries[2].data, Some(0));
    }

    #[test]
    fn bad_lines() {
        assert_eq!(Reference::parse("8.maybe = n < 1").unwrap_err().line, 1);
        assert!(Reference::parse("\n# c\nx.true = n < 1").is_err());
        assert!(Reference::parse("8.true = n << 1").is_err());
        assert!(Reference::parse("8.true = n < 1 ; zero").is_err());
    }

    #[test]
    fn flags_only_the_inconsistent_entry() {
        let r = Reference::parse(include_str!("../../../../corpus/fig1.reference")).unwrap();
        let notes = compare_reference(&fig1(), &r, 16);
        let agree: Vec<bool> = notes.iter().map(|n| n.agrees).collect();
        assert_eq!(agree, [true, true, false, true]);
        let bad = &notes[2];
        assert_eq!(bad.derived.as_deref(), Some("n ≤ 0"));
        assert_eq!(
            bad.notes,
            [
                "reference condition `n < 0` differs from code-derived `n ≤ 0` at n = 0",
                "reference data 0 does not satisfy its own condition `n < 0`",
            ]
        );
    }
}
