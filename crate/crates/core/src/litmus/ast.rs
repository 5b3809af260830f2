//! Abstract syntax for the litmus DSL.
//!
//! A program declares a grid, shared locations with initial values, a list
//! of threads with structured bodies, and an optional quantified assertion
//! over final register values:
//!
//! ```text
//! grid 1, 2;
//! X = 0;
//! Y = 0;
//! thread<0, 0> {
//!     X^cta_rel = 1;
//!     Y^cta_rel = 1;
//! }
//! thread<0, 0> {
//!     a = Y^cta_na;
//!     b = X^cta_acq;
//! }
//! exists (a == 1 && b == 1);
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::scope::{MemOrder, Scope, ThreadCoord, Tid};

/// Interned shared-location identifier; index into `Program::locations`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocId(pub u32);

/// Stable identifier of a source statement. Copies made by unrolling and
/// barrier desugaring keep the id of the statement they came from, so
/// findings and repair edits always point back at the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

/// Source position (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub ctas: u32,
    pub threads_per_cta: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationDecl {
    pub name: String,
    pub init: i64,
    /// Marked with the `data` keyword: a value-carrying non-atomic location
    /// that race repair must not promote to atomic.
    pub repair_exempt: bool,
}

/// Value expressions: constants, registers, register plus constant, and
/// register-equals-constant (evaluating to 1 or 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(i64),
    Reg(String),
    AddConst(String, i64),
    EqConst(String, i64),
}

impl Expr {
    pub fn eval(&self, regs: &BTreeMap<String, i64>) -> i64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Reg(r) => regs.get(r).copied().unwrap_or(0),
            Expr::AddConst(r, v) => regs.get(r).copied().unwrap_or(0) + v,
            Expr::EqConst(r, v) => (regs.get(r).copied().unwrap_or(0) == *v) as i64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, l: i64, r: i64) -> bool {
        match self {
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Gt => l > r,
            CmpOp::Ge => l >= r,
        }
    }
}

/// Atom of a condition. `LoadInline` is a memory read appearing directly in
/// an `if`/`while` condition; unrolling lowers it to a fresh hidden register
/// read in front of the branch (and once per loop iteration).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondAtom {
    Reg(String),
    Const(i64),
    LoadInline { loc: String, sco: Scope, ord: MemOrder },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Cmp(CondAtom, CmpOp, CondAtom),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    pub fn has_inline_load(&self) -> bool {
        match self {
            Cond::Cmp(a, _, b) => {
                matches!(a, CondAtom::LoadInline { .. }) || matches!(b, CondAtom::LoadInline { .. })
            }
            Cond::And(a, b) | Cond::Or(a, b) => a.has_inline_load() || b.has_inline_load(),
            Cond::Not(a) => a.has_inline_load(),
        }
    }

    /// Evaluate over registers; inline loads must already be lowered.
    pub fn eval(&self, regs: &BTreeMap<String, i64>) -> bool {
        fn atom(a: &CondAtom, regs: &BTreeMap<String, i64>) -> i64 {
            match a {
                CondAtom::Reg(r) => regs.get(r).copied().unwrap_or(0),
                CondAtom::Const(v) => *v,
                CondAtom::LoadInline { .. } => {
                    panic!("inline load in condition not lowered before evaluation")
                }
            }
        }
        match self {
            Cond::Cmp(a, op, b) => op.eval(atom(a, regs), atom(b, regs)),
            Cond::And(a, b) => a.eval(regs) && b.eval(regs),
            Cond::Or(a, b) => a.eval(regs) || b.eval(regs),
            Cond::Not(a) => !a.eval(regs),
        }
    }

    /// Register names mentioned anywhere in the condition.
    pub fn regs(&self, out: &mut Vec<String>) {
        match self {
            Cond::Cmp(a, _, b) => {
                for atom in [a, b] {
                    if let CondAtom::Reg(r) = atom {
                        out.push(r.clone());
                    }
                }
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.regs(out);
                b.regs(out);
            }
            Cond::Not(a) => a.regs(out),
        }
    }
}

/// Why a thread can make no further progress at a blocked marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOrigin {
    /// A loop exhausted its unroll bound.
    Bound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    /// `X^sco_ord = e;`
    Write { loc: String, sco: Scope, ord: MemOrder, value: Expr },
    /// `r = X^sco_ord;`
    Read { reg: String, loc: String, sco: Scope, ord: MemOrder },
    /// `r = RMW^sco_ord(X, expected, desired);` — compare-and-swap: the read
    /// value lands in `r`; the write happens only when it equals `expected`.
    Cas { reg: String, loc: String, sco: Scope, ord: MemOrder, expected: Expr, desired: Expr },
    /// `r = FADD^sco_ord(X, e);` — fetch-and-add, always succeeds.
    Fadd { reg: String, loc: String, sco: Scope, ord: MemOrder, operand: Expr },
    /// `fence^sco_ord;`
    Fence { sco: Scope, ord: MemOrder },
    /// `bar^sco(id);` — desugared into a fetch-add arrival plus an await.
    Barrier { sco: Scope, id: u32 },
    /// `r = e;`
    Assign { reg: String, value: Expr },
    If { cond: Cond, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    While { cond: Cond, body: Vec<Stmt> },
    /// `r = await X^sco_ord(v);` — a read that only ever observes value `v`;
    /// the thread waits while no such write exists. Produced by barrier
    /// desugaring.
    AwaitRead { reg: String, loc: String, sco: Scope, ord: MemOrder, target: i64, barrier_id: Option<u32> },
    /// `blocked;` — the thread cannot proceed (exhausted unroll bound).
    Blocked { origin: BlockOrigin },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadDecl {
    pub coord: ThreadCoord,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub quant: Quantifier,
    pub cond: Cond,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub grid: Grid,
    pub locations: Vec<LocationDecl>,
    pub threads: Vec<ThreadDecl>,
    pub assertion: Option<Assertion>,
    /// Filled by barrier desugaring: (scope, cta, gpu, barrier id) of each
    /// barrier instance mapped to its auxiliary counter location.
    pub barrier_vars: BTreeMap<(Scope, u32, u32, u32), LocId>,
    pub(crate) next_stmt_id: u32,
}

impl Program {
    pub fn loc_id(&self, name: &str) -> Option<LocId> {
        self.locations
            .iter()
            .position(|l| l.name == name)
            .map(|i| LocId(i as u32))
    }

    pub fn loc_name(&self, id: LocId) -> &str {
        &self.locations[id.0 as usize].name
    }

    pub fn thread_coords(&self) -> Vec<ThreadCoord> {
        let mut coords = vec![ThreadCoord::init()];
        coords.extend(self.threads.iter().map(|t| t.coord));
        coords
    }

    pub fn coord_of(&self, tid: Tid) -> ThreadCoord {
        if tid.is_init() {
            ThreadCoord::init()
        } else {
            self.threads[tid.0 as usize - 1].coord
        }
    }

    /// Number of declared threads in the scope instance of `coord` at
    /// `scope`; this is the participant count of a barrier executed there.
    pub fn scope_population(&self, scope: Scope, coord: &ThreadCoord) -> usize {
        self.threads
            .iter()
            .filter(|t| match scope {
                Scope::Cta => t.coord.cta == coord.cta && t.coord.gpu == coord.gpu,
                Scope::Gpu => t.coord.gpu == coord.gpu,
                Scope::Sys => true,
            })
            .count()
    }

    pub fn fresh_stmt_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt_id);
        self.next_stmt_id += 1;
        id
    }

    /// Look up a statement by id anywhere in the program.
    pub fn find_stmt(&self, id: StmtId) -> Option<&Stmt> {
        fn walk(stmts: &[Stmt], id: StmtId) -> Option<&Stmt> {
            for s in stmts {
                if s.id == id {
                    return Some(s);
                }
                match &s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        if let Some(hit) = walk(then_branch, id).or_else(|| walk(else_branch, id)) {
                            return Some(hit);
                        }
                    }
                    StmtKind::While { body, .. } => {
                        if let Some(hit) = walk(body, id) {
                            return Some(hit);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        self.threads.iter().find_map(|t| walk(&t.body, id))
    }

    /// Apply `f` to the statement with the given id, wherever it lives.
    pub fn edit_stmt(&mut self, id: StmtId, f: impl FnOnce(&mut Stmt)) -> bool {
        fn walk<'a>(stmts: &'a mut [Stmt], id: StmtId) -> Option<&'a mut Stmt> {
            for s in stmts.iter_mut() {
                if s.id == id {
                    return Some(s);
                }
                match &mut s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        if let Some(hit) = walk(then_branch, id) {
                            return Some(hit);
                        }
                        if let Some(hit) = walk(else_branch, id) {
                            return Some(hit);
                        }
                    }
                    StmtKind::While { body, .. } => {
                        if let Some(hit) = walk(body, id) {
                            return Some(hit);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        for t in self.threads.iter_mut() {
            if let Some(s) = walk(&mut t.body, id) {
                f(s);
                return true;
            }
        }
        false
    }
}
