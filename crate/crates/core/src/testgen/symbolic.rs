//! Replays a sequence of branch decisions over the syntax tree with values
//! kept as linear expressions in the input slots. Each decision becomes a
//! comparison atom on one slot when the predicate allows it.

use std::collections::{BTreeMap, HashMap};

use crate::frontend::{BinOp, Expr, ExprKind, FuncDef, Stmt, StmtKind};
use crate::model::ProgramModel;

use super::condition::{Atom, CmpOp};

/// `Σ coef·slot + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Lin {
    terms: BTreeMap<usize, i64>,
    constant: i64,
}

impl Lin {
    fn constant(c: i64) -> Self {
        Lin { terms: BTreeMap::new(), constant: c }
    }

    fn var(slot: usize) -> Self {
        Lin { terms: BTreeMap::from([(slot, 1)]), constant: 0 }
    }

    fn as_constant(&self) -> Option<i64> {
        self.terms.is_empty().then_some(self.constant)
    }

    fn add(&self, other: &Lin, sign: i64) -> Option<Lin> {
        let mut terms = self.terms.clone();
        for (&slot, &c) in &other.terms {
            let e = terms.entry(slot).or_insert(0);
            *e = e.checked_add(c.checked_mul(sign)?)?;
        }
        terms.retain(|_, c| *c != 0);
        Some(Lin { terms, constant: self.constant.checked_add(other.constant.checked_mul(sign)?)? })
    }

    fn scale(&self, k: i64) -> Option<Lin> {
        let mut terms = BTreeMap::new();
        for (&slot, &c) in &self.terms {
            let v = c.checked_mul(k)?;
            if v != 0 {
                terms.insert(slot, v);
            }
        }
        Some(Lin { terms, constant: self.constant.checked_mul(k)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Sym {
    Lin(Lin),
    Unknown,
}

impl Sym {
    fn constant(c: i64) -> Self {
        Sym::Lin(Lin::constant(c))
    }

    fn as_constant(&self) -> Option<i64> {
        match self {
            Sym::Lin(l) => l.as_constant(),
            Sym::Unknown => None,
        }
    }
}

fn lift(v: Option<Lin>) -> Sym {
    v.map_or(Sym::Unknown, Sym::Lin)
}

/// What one decision says about the inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Decision {
    Atom(Atom),
    /// The predicate does not depend on the inputs.
    Known(bool),
    /// Depends on inputs in a way that is not a single-slot comparison.
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Replayed {
    pub slots: Vec<String>,
    pub decisions: Vec<Decision>,
    /// Ran out of fuel before the decisions were used up.
    pub exhausted: bool,
}

impl Replayed {
    pub fn atoms(&self) -> Option<Vec<Atom>> {
        let mut atoms = Vec::new();
        for d in &self.decisions {
            match d {
                Decision::Atom(a) => atoms.push(a.clone()),
                Decision::Known(true) => {}
                Decision::Known(false) | Decision::Opaque => return None,
            }
        }
        Some(atoms)
    }

    pub fn impossible(&self) -> bool {
        self.decisions.contains(&Decision::Known(false))
    }

    pub fn opaque(&self) -> bool {
        self.exhausted || self.decisions.contains(&Decision::Opaque)
    }
}

const FUEL: usize = 2_000_000;

/// Replays `decisions` from the entry function. With `prefix` set the replay
/// stops right after the last decision; otherwise it runs to completion (or
/// until a predicate beyond the decisions is reached).
pub(crate) fn replay(model: &ProgramModel, entry: &str, decisions: &[bool], prefix: bool) -> Replayed {
    let mut r = Replay {
        model,
        decisions,
        prefix,
        out: Replayed { slots: Vec::new(), decisions: Vec::new(), exhausted: false },
        globals: model.ast().globals.iter().map(|g| (g.name.clone(), Sym::constant(g.init))).collect(),
        fuel: FUEL,
    };
    let Some(func) = model.function(entry) else { return r.out };
    let args = func
        .params
        .iter()
        .map(|p| {
            let slot = r.new_slot(p);
            Sym::Lin(Lin::var(slot))
        })
        .collect();
    let _ = r.invoke(entry, args);
    r.out
}

struct Stop;

struct Replay<'a> {
    model: &'a ProgramModel,
    decisions: &'a [bool],
    prefix: bool,
    out: Replayed,
    globals: HashMap<String, Sym>,
    fuel: usize,
}

struct Frame {
    scopes: Vec<HashMap<String, Sym>>,
    last: Sym,
}

enum Flow {
    Normal,
    Return(Sym),
}

impl<'a> Replay<'a> {
    fn new_slot(&mut self, hint: &str) -> usize {
        let taken = |n: &str| self.out.slots.iter().any(|s| s == n);
        let mut name = hint.to_string();
        let mut k = 2;
        while taken(&name) {
            name = format!("{hint}{k}");
            k += 1;
        }
        self.out.slots.push(name);
        self.out.slots.len() - 1
    }

    fn invoke(&mut self, name: &str, args: Vec<Sym>) -> Result<Sym, Stop> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.invoke_inner(name, args))
    }

    fn invoke_inner(&mut self, name: &str, args: Vec<Sym>) -> Result<Sym, Stop> {
        let model = self.model;
        let Some(func): Option<&FuncDef> = model.function(name) else { return Ok(Sym::Unknown) };
        let params = func.params.iter().cloned().zip(args).collect();
        let mut frame = Frame { scopes: vec![params], last: Sym::constant(0) };
        Ok(match self.block(&mut frame, &func.body)? {
            Flow::Return(v) => v,
            Flow::Normal => frame.last,
        })
    }

    fn block(&mut self, frame: &mut Frame, stmts: &'a [Stmt]) -> Result<Flow, Stop> {
        frame.scopes.push(HashMap::new());
        let mut flow = Flow::Normal;
        for s in stmts {
            flow = self.stmt(frame, s)?;
            if matches!(flow, Flow::Return(_)) {
                break;
            }
        }
        frame.scopes.pop();
        Ok(flow)
    }

    fn stmt(&mut self, frame: &mut Frame, stmt: &'a Stmt) -> Result<Flow, Stop> {
        if self.fuel == 0 {
            self.out.exhausted = true;
            return Err(Stop);
        }
        self.fuel -= 1;
        match &stmt.kind {
            StmtKind::Decl { name, init } => {
                let v = match init {
                    Some(e) => {
                        let v = self.eval(frame, e, Some(name))?;
                        frame.last = v.clone();
                        v
                    }
                    None => Sym::constant(0),
                };
                frame.scopes.last_mut().expect("scope").insert(name.clone(), v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(frame, value, Some(name))?;
                frame.last = v.clone();
                if let Some(slot) = frame.scopes.iter_mut().rev().find_map(|s| s.get_mut(name)) {
                    *slot = v;
                } else {
                    self.globals.insert(name.clone(), v);
                }
            }
            StmtKind::Print(e) | StmtKind::Expr(e) => frame.last = self.eval(frame, e, None)?,
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(frame, e, None)?,
                    None => Sym::constant(0),
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Omitted { returns } => {
                if *returns {
                    return Ok(Flow::Return(Sym::constant(0)));
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                let decision = self.condition(frame, cond)?;
                let i = self.out.decisions.len();
                let Some(&taken) = self.decisions.get(i) else { return Err(Stop) };
                self.out.decisions.push(decision.map_or(Decision::Opaque, |d| d.for_branch(taken)));
                if self.prefix && i + 1 == self.decisions.len() {
                    return Err(Stop);
                }
                return match (taken, else_block) {
                    (true, _) => self.block(frame, then_block),
                    (false, Some(b)) => self.block(frame, b),
                    (false, None) => Ok(Flow::Normal),
                };
            }
        }
        Ok(Flow::Normal)
    }

    /// The predicate as `lin ⊙ 0`, if its value is linear.
    fn condition(&mut self, frame: &mut Frame, cond: &'a Expr) -> Result<Option<Relation>, Stop> {
        if let ExprKind::Binary { op, lhs, rhs } = &cond.kind {
            if let Some(cmp) = CmpOp::parse(op.symbol()) {
                let l = self.eval(frame, lhs, None)?;
                let r = self.eval(frame, rhs, None)?;
                return Ok(match (l, r) {
                    (Sym::Lin(l), Sym::Lin(r)) => l.add(&r, -1).map(|d| Relation { lin: d, op: cmp }),
                    _ => None,
                });
            }
        }
        Ok(match self.eval(frame, cond, None)? {
            Sym::Lin(l) => Some(Relation { lin: l, op: CmpOp::Ne }),
            Sym::Unknown => None,
        })
    }

    fn eval(&mut self, frame: &mut Frame, expr: &'a Expr, hint: Option<&str>) -> Result<Sym, Stop> {
        Ok(match &expr.kind {
            ExprKind::Int(v) => Sym::constant(*v),
            ExprKind::Var(name) => frame
                .scopes
                .iter()
                .rev()
                .find_map(|s| s.get(name))
                .or_else(|| self.globals.get(name))
                .cloned()
                .unwrap_or(Sym::Unknown),
            ExprKind::Read => {
                let fallback = format!("input{}", self.out.slots.len());
                let slot = self.new_slot(hint.unwrap_or(&fallback));
                Sym::Lin(Lin::var(slot))
            }
            ExprKind::Neg(e) => match self.eval(frame, e, None)? {
                Sym::Lin(l) => lift(l.scale(-1)),
                Sym::Unknown => Sym::Unknown,
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(frame, lhs, None)?;
                let b = self.eval(frame, rhs, None)?;
                binary(*op, a, b)
            }
            ExprKind::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(frame, a, None)?);
                }
                self.invoke(callee, values)?
            }
        })
    }
}

fn binary(op: BinOp, a: Sym, b: Sym) -> Sym {
    if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
        return crate::interp::apply(op, x, y).map_or(Sym::Unknown, Sym::constant);
    }
    let (Sym::Lin(l), Sym::Lin(r)) = (a, b) else { return Sym::Unknown };
    match op {
        BinOp::Add => lift(l.add(&r, 1)),
        BinOp::Sub => lift(l.add(&r, -1)),
        BinOp::Mul => match (l.as_constant(), r.as_constant()) {
            (Some(k), _) => lift(r.scale(k)),
            (_, Some(k)) => lift(l.scale(k)),
            _ => Sym::Unknown,
        },
        _ => Sym::Unknown,
    }
}

/// `lin ⊙ 0`.
struct Relation {
    lin: Lin,
    op: CmpOp,
}

impl Relation {
    fn for_branch(self, taken: bool) -> Decision {
        let op = if taken { self.op } else { self.op.negate() };
        normalize(&self.lin, op)
    }
}

/// Solves `Σ a·x + c ⊙ 0` for a single slot `x`.
fn normalize(lin: &Lin, op: CmpOp) -> Decision {
    let mut terms = lin.terms.iter();
    let (slot, a) = match (terms.next(), terms.next()) {
        (None, _) => return Decision::Known(op.holds(lin.constant, 0)),
        (Some((&slot, &a)), None) => (slot, a),
        _ => return Decision::Opaque,
    };
    // a·x ⊙ k
    let Some(k) = lin.constant.checked_neg() else { return Decision::Opaque };
    let (a, k, op) = if a < 0 {
        match (a.checked_neg(), k.checked_neg()) {
            (Some(a), Some(k)) => (a, k, op.mirror()),
            _ => return Decision::Opaque,
        }
    } else {
        (a, k, op)
    };
    let floor = k.div_euclid(a);
    let ceil = if k.rem_euclid(a) == 0 { floor } else { floor + 1 };
    let exact = k.rem_euclid(a) == 0;
    let (op, value) = match op {
        CmpOp::Lt => (CmpOp::Lt, ceil),
        CmpOp::Le => (CmpOp::Le, floor),
        CmpOp::Gt => (CmpOp::Gt, floor),
        CmpOp::Ge => (CmpOp::Ge, ceil),
        CmpOp::Eq if exact => (CmpOp::Eq, floor),
        CmpOp::Eq => return Decision::Known(false),
        CmpOp::Ne if exact => (CmpOp::Ne, floor),
        CmpOp::Ne => return Decision::Known(true),
    };
    Decision::Atom(Atom { slot, var: String::new(), op, value })
}

/// Fills in slot names once the replay is done.
pub(crate) fn name_atoms(replayed: &mut Replayed) {
    for d in &mut replayed.decisions {
        if let Decision::Atom(a) = d {
            a.var = replayed.slots[a.slot].clone();
        }
    }
}
