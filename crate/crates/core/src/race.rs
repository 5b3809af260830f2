//! Race detection and repair.
//!
//! When an event is added, it is compared against every already-executed
//! conflicting access (same location, at least one write) that is ordered
//! with it by happens-before in neither direction. If either side is
//! non-atomic the pair is a data race; if both are atomic but their scopes
//! are not mutually inclusive it is a heterogeneous race.
//!
//! Repair strengthens the two racy instructions just enough to remove the
//! race: scopes are raised to the smallest level that makes the two threads
//! mutually included, and a non-atomic side is promoted to a relaxed atomic.
//! Edits never weaken an order or scope. Locations declared with the `data`
//! keyword carry values through non-atomic accesses on purpose and are never
//! promoted; a race on them is reported as unrepairable.

use thiserror::Error;

use crate::graph::{CanonicalExec, EventId, ExecutionGraph, OpKind};
use crate::litmus::{printer, LocId, Program, Span, StmtId, StmtKind};
use crate::relations::RelationSet;
use crate::scope::{
    inclusive, smallest_including_scope, MemOrder, Scope, ThreadCoord, Tid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RaceKind {
    Data,
    Heterogeneous,
}

impl std::fmt::Display for RaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RaceKind::Data => "data race",
            RaceKind::Heterogeneous => "heterogeneous race",
        })
    }
}

/// One side of a race, with enough source information to report and repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessDesc {
    pub stmt: StmtId,
    pub span: Span,
    pub tid: Tid,
    pub coord: ThreadCoord,
    pub op: OpKind,
    pub loc: LocId,
    pub ord: MemOrder,
    pub sco: Scope,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceFinding {
    pub kind: RaceKind,
    pub a: AccessDesc,
    pub b: AccessDesc,
    pub loc_name: String,
    /// The execution in which the race was observed.
    pub witness: CanonicalExec,
}

impl RaceFinding {
    /// Findings are symmetric in (a, b); the dedup key orders the pair.
    pub fn key(&self) -> (RaceKind, StmtId, StmtId) {
        let (x, y) = if self.a.stmt <= self.b.stmt {
            (self.a.stmt, self.b.stmt)
        } else {
            (self.b.stmt, self.a.stmt)
        };
        (self.kind, x, y)
    }
}

/// Alg. 4: compare the just-added event against all previously executed
/// conflicting accesses. Pure detection; the caller applies policy.
pub fn check_race(p: &Program, g: &ExecutionGraph, added: EventId) -> Vec<RaceFinding> {
    check_race_with(p, g, &RelationSet::compute(g), added)
}

/// `check_race` against a relation set the caller already computed for `g`.
pub fn check_race_with(
    p: &Program,
    g: &ExecutionGraph,
    rels: &RelationSet,
    added: EventId,
) -> Vec<RaceFinding> {
    let e = g.event(added).expect("event in graph");
    let loc = match (e.op, e.loc) {
        (OpKind::F, _) | (_, None) => return Vec::new(),
        (_, Some(loc)) => loc,
    };
    let ei = g.idx_of(added).unwrap();
    let mut findings = Vec::new();
    for (di, d) in g.events().iter().enumerate() {
        if d.exe_stamp >= e.exe_stamp || d.loc != Some(loc) || d.op == OpKind::F {
            continue;
        }
        // Writes race with seen reads and writes; reads only with writes.
        if e.is_read() && !d.is_write() {
            continue;
        }
        if rels.hb.get(di, ei) || rels.hb.get(ei, di) {
            continue;
        }
        let kind = if !e.ord.is_atomic() || !d.ord.is_atomic() {
            RaceKind::Data
        } else if !inclusive(&g.access_view(e), &g.access_view(d)) {
            RaceKind::Heterogeneous
        } else {
            continue;
        };
        // Init writes are po-before everything, hence never get here.
        debug_assert!(!d.is_init());
        let desc = |ev: &crate::graph::Event| AccessDesc {
            stmt: ev.stmt.expect("program events carry a statement"),
            span: ev.stmt.and_then(|s| p.find_stmt(s)).map(|s| s.span).unwrap_or_default(),
            tid: ev.tid,
            coord: g.thread_coord(ev.tid),
            op: ev.op,
            loc,
            ord: ev.ord,
            sco: ev.sco,
        };
        findings.push(RaceFinding {
            kind,
            a: desc(e),
            b: desc(d),
            loc_name: p.loc_name(loc).to_string(),
            witness: g.canonical(),
        });
    }
    findings
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditChange {
    RaiseScope { from: Scope, to: Scope },
    PromoteOrder { from: MemOrder, to: MemOrder },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairEdit {
    pub stmt: StmtId,
    pub span: Span,
    pub before: String,
    pub after: String,
    pub change: EditChange,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RepairError {
    #[error("location `{0}` is a non-atomic data location; refusing to promote its accesses")]
    Unrepairable(String),
    #[error("accesses are already inclusive; nothing to repair")]
    NothingToDo,
}

/// Rewrite the two racy instructions in the source program. Heterogeneous
/// races raise scopes to the smallest mutually-including level; data races
/// additionally promote the non-atomic side to rlx. Returns the edited
/// program and the edit list.
pub fn repair(p: &Program, f: &RaceFinding) -> Result<(Program, Vec<RepairEdit>), RepairError> {
    let needed = smallest_including_scope(&f.a.coord, &f.b.coord);
    let mut prog = p.clone();
    let mut edits = Vec::new();

    let exempt = p
        .locations
        .iter()
        .any(|l| l.name == f.loc_name && l.repair_exempt);

    for side in [&f.a, &f.b] {
        let promote = side.ord == MemOrder::Na;
        if promote && exempt {
            return Err(RepairError::Unrepairable(f.loc_name.clone()));
        }
        let raise = side.sco < needed;
        if !promote && !raise {
            continue;
        }
        let before = prog
            .find_stmt(side.stmt)
            .map(printer::stmt_line)
            .unwrap_or_default();
        let mut change = None;
        prog.edit_stmt(side.stmt, |s| {
            if let StmtKind::Write { sco, ord, .. }
            | StmtKind::Read { sco, ord, .. }
            | StmtKind::Cas { sco, ord, .. }
            | StmtKind::Fadd { sco, ord, .. } = &mut s.kind
            {
                if promote {
                    change = Some(EditChange::PromoteOrder { from: *ord, to: MemOrder::Rlx });
                    *ord = MemOrder::Rlx;
                }
                if raise {
                    change = Some(EditChange::RaiseScope { from: *sco, to: needed });
                    *sco = needed;
                }
            }
        });
        let after = prog
            .find_stmt(side.stmt)
            .map(printer::stmt_line)
            .unwrap_or_default();
        if promote && raise {
            // Record both halves of the rewrite as separate edits.
            edits.push(RepairEdit {
                stmt: side.stmt,
                span: side.span,
                before: before.clone(),
                after: after.clone(),
                change: EditChange::PromoteOrder { from: MemOrder::Na, to: MemOrder::Rlx },
            });
            edits.push(RepairEdit {
                stmt: side.stmt,
                span: side.span,
                before,
                after,
                change: EditChange::RaiseScope { from: side.sco, to: needed },
            });
        } else if let Some(change) = change {
            edits.push(RepairEdit { stmt: side.stmt, span: side.span, before, after, change });
        }
    }

    if edits.is_empty() {
        return Err(RepairError::NothingToDo);
    }
    Ok((prog, edits))
}
