use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    /// The operator with its operands swapped.
    pub fn mirror(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "≤",
            CmpOp::Gt => ">",
            CmpOp::Ge => "≥",
            CmpOp::Eq => "=",
            CmpOp::Ne => "≠",
        }
    }

    /// Accepts both the source spellings and the display symbols.
    pub fn parse(s: &str) -> Option<CmpOp> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" | "≤" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" | "≥" => CmpOp::Ge,
            "==" | "=" => CmpOp::Eq,
            "!=" | "≠" => CmpOp::Ne,
            _ => return None,
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `var ⊙ value` over one input slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub slot: usize,
    pub var: String,
    pub op: CmpOp,
    pub value: i64,
}

impl Atom {
    pub fn holds(&self, x: i64) -> bool {
        self.op.holds(x, self.value)
    }

    pub fn negate(&self) -> Atom {
        Atom { op: self.op.negate(), ..self.clone() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op, self.value)
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Symbolic,
    Empirical,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub kind: ConditionKind,
    /// Names of the input slots: entry parameters, then `read()` values.
    pub slots: Vec<String>,
    /// Conjunction in interval form; empty means always true.
    pub constraint: Vec<Atom>,
    /// Inputs observed to follow the path (empirical conditions only).
    pub witnesses: Vec<Vec<i64>>,
}

impl Condition {
    pub fn infeasible(slots: Vec<String>) -> Self {
        Condition { kind: ConditionKind::Infeasible, slots, constraint: Vec::new(), witnesses: Vec::new() }
    }

    /// Builds a symbolic condition, or an infeasible one if the atoms conflict.
    pub fn symbolic(slots: Vec<String>, atoms: &[Atom]) -> Self {
        match simplify(atoms) {
            Some(constraint) => Condition { kind: ConditionKind::Symbolic, slots, constraint, witnesses: Vec::new() },
            None => Condition::infeasible(slots),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.kind != ConditionKind::Infeasible
    }

    pub fn satisfied_by(&self, inputs: &[i64]) -> bool {
        match self.kind {
            ConditionKind::Symbolic => {
                self.constraint.iter().all(|a| inputs.get(a.slot).is_some_and(|&x| a.holds(x)))
            }
            ConditionKind::Empirical => self.witnesses.iter().any(|w| w.as_slice() == inputs),
            ConditionKind::Infeasible => false,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConditionKind::Symbolic if self.constraint.is_empty() => f.write_str("true"),
            ConditionKind::Symbolic => {
                let parts: Vec<String> = self.constraint.iter().map(Atom::to_string).collect();
                f.write_str(&parts.join(" ∧ "))
            }
            ConditionKind::Empirical => {
                let shown: Vec<String> = self
                    .witnesses
                    .iter()
                    .take(8)
                    .map(|w| w.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
                    .collect();
                let more = if self.witnesses.len() > 8 { ", ..." } else { "" };
                write!(f, "empirical: inputs in {{{}{more}}}", shown.join("; "))
            }
            ConditionKind::Infeasible => f.write_str("infeasible"),
        }
    }
}

/// Interval form per slot: the tightest lower and upper bound keep their
/// original operator, a one-point interval becomes `x = v`, and `≠` atoms
/// inside the interval follow. `None` if the conjunction is unsatisfiable.
pub fn simplify(atoms: &[Atom]) -> Option<Vec<Atom>> {
    let mut slots: Vec<usize> = atoms.iter().map(|a| a.slot).collect();
    slots.sort();
    slots.dedup();
    let mut out = Vec::new();
    for slot in slots {
        let mine: Vec<&Atom> = atoms.iter().filter(|a| a.slot == slot).collect();
        let var = mine[0].var.clone();
        let mut lo: Option<(i128, &Atom)> = None;
        let mut hi: Option<(i128, &Atom)> = None;
        let mut excluded: Vec<i64> = Vec::new();
        for a in &mine {
            let v = i128::from(a.value);
            let (l, h) = match a.op {
                CmpOp::Lt => (None, Some(v - 1)),
                CmpOp::Le => (None, Some(v)),
                CmpOp::Gt => (Some(v + 1), None),
                CmpOp::Ge => (Some(v), None),
                CmpOp::Eq => (Some(v), Some(v)),
                CmpOp::Ne => {
                    excluded.push(a.value);
                    (None, None)
                }
            };
            if let Some(l) = l {
                if lo.is_none_or(|(cur, _)| l > cur) {
                    lo = Some((l, a));
                }
            }
            if let Some(h) = h {
                if hi.is_none_or(|(cur, _)| h < cur) {
                    hi = Some((h, a));
                }
            }
        }
        let low = lo.map_or(i128::from(i64::MIN), |b| b.0);
        let high = hi.map_or(i128::from(i64::MAX), |b| b.0);
        if low > high {
            return None;
        }
        excluded.sort();
        excluded.dedup();
        excluded.retain(|&x| (low..=high).contains(&i128::from(x)));
        if high - low < excluded.len() as i128 {
            return None;
        }
        if low == high {
            out.push(Atom { slot, var, op: CmpOp::Eq, value: low as i64 });
            continue;
        }
        out.extend(lo.map(|b| b.1.clone()));
        out.extend(hi.map(|b| b.1.clone()));
        out.extend(excluded.into_iter().map(|value| Atom { slot, var: var.clone(), op: CmpOp::Ne, value }));
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no input in [-{range}, {range}] satisfies the condition")]
pub struct Infeasible {
    pub range: i64,
}

/// Values in search order: 0, 1, -1, 2, -2, ...
pub fn search_order(range: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=range).flat_map(|v| [v, -v]))
}

/// Per slot the satisfying value with the smallest magnitude, non-negative
/// first on ties. Empirical witnesses are ranked by total magnitude.
pub fn find_test_data(condition: &Condition, range: i64) -> Result<Vec<i64>, Infeasible> {
    let err = Infeasible { range };
    match condition.kind {
        ConditionKind::Infeasible => Err(err),
        ConditionKind::Empirical => condition
            .witnesses
            .iter()
            .filter(|w| w.iter().all(|v| v.abs() <= range))
            .min_by_key(|w| (w.iter().map(|v| v.unsigned_abs()).sum::<u64>(), w.iter().map(|&v| (v.abs(), v < 0)).collect::<Vec<_>>()))
            .cloned()
            .ok_or(err),
        ConditionKind::Symbolic => (0..condition.slots.len())
            .map(|slot| {
                let atoms: Vec<&Atom> = condition.constraint.iter().filter(|a| a.slot == slot).collect();
                search_order(range).find(|&x| atoms.iter().all(|a| a.holds(x))).ok_or(err)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(op: CmpOp, value: i64) -> Atom {
        Atom { slot: 0, var: "n".into(), op, value }
    }

    fn show(atoms: &[Atom]) -> String {
        Condition::symbolic(vec!["n".into()], atoms).to_string()
    }

    #[test]
    fn interval_form() {
        assert_eq!(show(&[atom(CmpOp::Lt, 1)]), "n < 1");
        assert_eq!(show(&[atom(CmpOp::Ge, 1), atom(CmpOp::Lt, 2)]), "n = 1");
        assert_eq!(show(&[atom(CmpOp::Gt, 0), atom(CmpOp::Gt, 1), atom(CmpOp::Le, 9)]), "n > 1 ∧ n ≤ 9");
        assert_eq!(show(&[atom(CmpOp::Lt, 1), atom(CmpOp::Le, 0)]), "n < 1");
        assert_eq!(show(&[atom(CmpOp::Ne, 3), atom(CmpOp::Ne, 30), atom(CmpOp::Lt, 10)]), "n < 10 ∧ n ≠ 3");
        assert_eq!(show(&[]), "true");
        assert_eq!(show(&[atom(CmpOp::Lt, 1), atom(CmpOp::Gt, 0)]), "infeasible");
        assert_eq!(show(&[atom(CmpOp::Ge, 0), atom(CmpOp::Le, 1), atom(CmpOp::Ne, 0), atom(CmpOp::Ne, 1)]), "infeasible");
        assert_eq!(show(&[atom(CmpOp::Eq, 4), atom(CmpOp::Ne, 4)]), "infeasible");
    }

    #[test]
    fn test_data_tie_break() {
        let data = |atoms: &[Atom], range| find_test_data(&Condition::symbolic(vec!["n".into()], atoms), range);
        assert_eq!(data(&[atom(CmpOp::Lt, 1)], 16), Ok(vec![0]));
        assert_eq!(data(&[atom(CmpOp::Ge, 1)], 16), Ok(vec![1]));
        assert_eq!(data(&[atom(CmpOp::Lt, 0)], 16), Ok(vec![-1]));
        assert_eq!(data(&[atom(CmpOp::Ne, 0)], 16), Ok(vec![1]));
        assert_eq!(data(&[atom(CmpOp::Lt, -999_999)], 16), Err(Infeasible { range: 16 }));
        assert_eq!(data(&[], 16), Ok(vec![0]));
    }

    #[test]
    fn empirical_data_prefers_small_witnesses() {
        let c = Condition {
            kind: ConditionKind::Empirical,
            slots: vec!["a".into(), "b".into()],
            constraint: Vec::new(),
            witnesses: vec![vec![-1, 0], vec![2, 5], vec![1, -3], vec![1, 3]],
        };
        assert_eq!(find_test_data(&c, 16), Ok(vec![-1, 0]));
        assert_eq!(find_test_data(&c, 0), Err(Infeasible { range: 0 }));
        assert!(c.satisfied_by(&[1, 3]));
        assert!(!c.satisfied_by(&[1, 4]));
    }

    #[test]
    fn negation_and_parse() {
        assert_eq!(atom(CmpOp::Lt, 1).negate().to_string(), "n ≥ 1");
        assert_eq!(atom(CmpOp::Gt, 0).negate().to_string(), "n ≤ 0");
        assert_eq!(CmpOp::parse(">="), Some(CmpOp::Ge));
        assert_eq!(CmpOp::parse("≠"), Some(CmpOp::Ne));
        assert_eq!(CmpOp::Lt.mirror(), CmpOp::Gt);
    }
}
