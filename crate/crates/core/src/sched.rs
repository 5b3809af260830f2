//! Thread frontiers and the deterministic scheduler.
//!
//! A thread's next instruction is recovered by replaying its (loop-free,
//! desugared) statement list against the events it has already executed;
//! register values flow out of read events, so graph surgery that retargets
//! a read automatically re-steers the thread's continuation.
//!
//! The scheduler draws events in a fixed total order: ascending program
//! order index, higher thread id first among equals. `NextEvent` returns
//! the minimal enabled event under that order; an await read whose target
//! value is written nowhere in the graph leaves its thread disabled.

use std::collections::BTreeMap;

use crate::graph::{Event, EventId, ExecutionGraph, OpKind};
use crate::litmus::{LocId, Program, Stmt, StmtId, StmtKind};
use crate::scope::{MemOrder, Scope, Tid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PendingKind {
    Read {
        loc: LocId,
        ord: MemOrder,
        sco: Scope,
        /// Await reads observe exactly this value.
        await_target: Option<i64>,
        barrier_id: Option<u32>,
    },
    Write {
        loc: LocId,
        ord: MemOrder,
        sco: Scope,
        val: i64,
        /// Set when this write is the success half of an RMW.
        rmw_read: Option<EventId>,
    },
    Fence {
        ord: MemOrder,
        sco: Scope,
    },
}

/// The next event a thread would add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingOp {
    pub tid: Tid,
    pub po_idx: u32,
    pub stmt: StmtId,
    pub kind: PendingKind,
}

impl PendingOp {
    pub fn nev_key(&self) -> (u32, std::cmp::Reverse<u32>, u8) {
        let rmw_write =
            matches!(&self.kind, PendingKind::Write { rmw_read: Some(_), .. });
        let slot = if rmw_write { self.po_idx - 1 } else { self.po_idx };
        (slot, std::cmp::Reverse(self.tid.0), rmw_write as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThreadState {
    Finished,
    Ready(PendingOp),
    /// Parked at an await whose target value exists nowhere in the graph.
    AwaitBlocked { loc: LocId, target: i64, barrier_id: Option<u32>, stmt: StmtId },
    /// Reached a `blocked` marker (exhausted unroll bound).
    BoundBlocked { stmt: StmtId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextEvent {
    /// The scheduler-minimal enabled event.
    Next(PendingOp),
    /// Every thread finished: the graph is a full execution.
    Done,
    /// No thread can run but not all finished.
    Blocked { barrier: Vec<crate::consistency::BarrierStall>, bound: Vec<Tid> },
}

/// Replay one thread against its events and report its state.
pub fn thread_state(p: &Program, g: &ExecutionGraph, tid: Tid) -> ThreadState {
    let decl = &p.threads[tid.0 as usize - 1];
    let events: Vec<&Event> = g.thread_events(tid).collect();
    let mut walker = Walker { p, g, events, cursor: 0, regs: BTreeMap::new(), tid };
    match walker.block(&decl.body) {
        Some(state) => state,
        None => ThreadState::Finished,
    }
}

/// Final register values of one thread (complete replay; blocked threads
/// yield whatever they computed before stalling).
pub fn thread_registers(p: &Program, g: &ExecutionGraph, tid: Tid) -> BTreeMap<String, i64> {
    let decl = &p.threads[tid.0 as usize - 1];
    let events: Vec<&Event> = g.thread_events(tid).collect();
    let mut walker = Walker { p, g, events, cursor: 0, regs: BTreeMap::new(), tid };
    let _ = walker.block(&decl.body);
    walker.regs
}

/// Register valuation of the whole execution, for assertion evaluation.
/// Registers missing from the map read as 0.
pub fn final_registers(p: &Program, g: &ExecutionGraph) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    for i in 1..=p.threads.len() {
        out.extend(thread_registers(p, g, Tid(i as u32)));
    }
    out
}

/// The scheduler: minimal enabled event, or the end-of-execution shape.
pub fn next_event(p: &Program, g: &ExecutionGraph) -> NextEvent {
    let mut best: Option<PendingOp> = None;
    let mut barrier = Vec::new();
    let mut bound = Vec::new();
    let mut unfinished = 0usize;
    for i in 1..=p.threads.len() {
        let tid = Tid(i as u32);
        match thread_state(p, g, tid) {
            ThreadState::Finished => {}
            ThreadState::Ready(op) => {
                unfinished += 1;
                match &best {
                    Some(b) if b.nev_key() <= op.nev_key() => {}
                    _ => best = Some(op),
                }
            }
            ThreadState::AwaitBlocked { loc, target, barrier_id, stmt } => {
                unfinished += 1;
                let _ = target;
                barrier.push(crate::consistency::BarrierStall { tid, barrier_id, loc, stmt });
            }
            ThreadState::BoundBlocked { .. } => {
                unfinished += 1;
                bound.push(tid);
            }
        }
    }
    match best {
        Some(op) => NextEvent::Next(op),
        None if unfinished == 0 => NextEvent::Done,
        None => NextEvent::Blocked { barrier, bound },
    }
}

struct Walker<'a> {
    p: &'a Program,
    g: &'a ExecutionGraph,
    events: Vec<&'a Event>,
    cursor: usize,
    regs: BTreeMap<String, i64>,
    tid: Tid,
}

impl<'a> Walker<'a> {
    /// Walk a statement block. `Some(state)` stops the replay; `None` means
    /// the block completed.
    fn block(&mut self, stmts: &[Stmt]) -> Option<ThreadState> {
        for s in stmts {
            if let Some(state) = self.stmt(s) {
                return Some(state);
            }
        }
        None
    }

    fn consume(&mut self, expect_op: OpKind, loc: Option<LocId>) -> Option<&'a Event> {
        let e = self.events.get(self.cursor)?;
        debug_assert_eq!(e.op, expect_op, "event stream out of sync with program");
        debug_assert_eq!(e.loc, loc, "event stream location mismatch");
        self.cursor += 1;
        Some(e)
    }

    fn ready(&self, stmt: &Stmt, kind: PendingKind) -> Option<ThreadState> {
        Some(ThreadState::Ready(PendingOp {
            tid: self.tid,
            po_idx: self.cursor as u32,
            stmt: stmt.id,
            kind,
        }))
    }

    fn stmt(&mut self, s: &Stmt) -> Option<ThreadState> {
        match &s.kind {
            StmtKind::Assign { reg, value } => {
                let v = value.eval(&self.regs);
                self.regs.insert(reg.clone(), v);
                None
            }
            StmtKind::Read { reg, loc, sco, ord } => {
                let loc = self.loc(loc);
                match self.consume(OpKind::R, Some(loc)) {
                    Some(e) => {
                        self.regs.insert(reg.clone(), e.val.expect("read has a value"));
                        None
                    }
                    None => self.ready(
                        s,
                        PendingKind::Read {
                            loc,
                            ord: *ord,
                            sco: *sco,
                            await_target: None,
                            barrier_id: None,
                        },
                    ),
                }
            }
            StmtKind::AwaitRead { reg, loc, sco, ord, target, barrier_id } => {
                let loc = self.loc(loc);
                match self.consume(OpKind::R, Some(loc)) {
                    Some(e) => {
                        self.regs.insert(reg.clone(), e.val.expect("read has a value"));
                        None
                    }
                    None => {
                        let satisfiable = self
                            .g
                            .writes_on(loc)
                            .any(|w| w.val == Some(*target));
                        if satisfiable {
                            self.ready(
                                s,
                                PendingKind::Read {
                                    loc,
                                    ord: *ord,
                                    sco: *sco,
                                    await_target: Some(*target),
                                    barrier_id: *barrier_id,
                                },
                            )
                        } else {
                            Some(ThreadState::AwaitBlocked {
                                loc,
                                target: *target,
                                barrier_id: *barrier_id,
                                stmt: s.id,
                            })
                        }
                    }
                }
            }
            StmtKind::Write { loc, sco, ord, value } => {
                let loc = self.loc(loc);
                let val = value.eval(&self.regs);
                match self.consume(OpKind::W, Some(loc)) {
                    Some(_) => None,
                    None => self.ready(
                        s,
                        PendingKind::Write { loc, ord: *ord, sco: *sco, val, rmw_read: None },
                    ),
                }
            }
            StmtKind::Cas { reg, loc, sco, ord, expected, desired } => {
                let loc = self.loc(loc);
                let expect = expected.eval(&self.regs);
                let desire = desired.eval(&self.regs);
                self.rmw(s, loc, *sco, *ord, reg, move |rv| (rv == expect).then_some(desire))
            }
            StmtKind::Fadd { reg, loc, sco, ord, operand } => {
                let loc = self.loc(loc);
                let add = operand.eval(&self.regs);
                self.rmw(s, loc, *sco, *ord, reg, move |rv| Some(rv + add))
            }
            StmtKind::Fence { sco, ord } => match self.consume(OpKind::F, None) {
                Some(_) => None,
                None => self.ready(s, PendingKind::Fence { ord: *ord, sco: *sco }),
            },
            StmtKind::If { cond, then_branch, else_branch } => {
                if cond.eval(&self.regs) {
                    self.block(then_branch)
                } else {
                    self.block(else_branch)
                }
            }
            StmtKind::Blocked { .. } => Some(ThreadState::BoundBlocked { stmt: s.id }),
            StmtKind::While { .. } => panic!("loops must be unrolled before scheduling"),
            StmtKind::Barrier { .. } => panic!("barriers must be desugared before scheduling"),
        }
    }

    /// Shared read-then-maybe-write path of CAS and FADD. `write_val` maps
    /// the read value to the written value, or `None` on failure.
    fn rmw(
        &mut self,
        s: &Stmt,
        loc: LocId,
        sco: Scope,
        ord: MemOrder,
        reg: &str,
        write_val: impl Fn(i64) -> Option<i64>,
    ) -> Option<ThreadState> {
        match self.consume(OpKind::R, Some(loc)) {
            None => self.ready(
                s,
                PendingKind::Read { loc, ord, sco, await_target: None, barrier_id: None },
            ),
            Some(r) => {
                let rv = r.val.expect("read has a value");
                self.regs.insert(reg.to_string(), rv);
                match write_val(rv) {
                    None => None,
                    Some(val) => match self.consume(OpKind::W, Some(loc)) {
                        Some(_) => None,
                        None => self.ready(
                            s,
                            PendingKind::Write { loc, ord, sco, val, rmw_read: Some(r.id) },
                        ),
                    },
                }
            }
        }
    }

    fn loc(&self, name: &str) -> LocId {
        self.p.loc_id(name).expect("validated location name")
    }
}
