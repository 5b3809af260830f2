//! Testing oracles.
//!
//! `prev` rolls an execution graph back to the unique predecessor graph the
//! exploration engine would have recursed from: drop the scheduler-maximal
//! (po ∪ rf)-maximal event, or, if that event is a read observing an
//! exe-later write, drop the pair and replay the scheduler forward with
//! every re-added read observing the co-maximal write and every re-added
//! write placed co-maximally (`max_e_graph`), stopping just before the
//! dropped write.
//!
//! `enumerate_all` exhaustively enumerates thread interleavings, rf sources,
//! and coherence placements, filters by consistency, and canonicalizes; it
//! is the independent completeness oracle the engine is compared against.
//!
//! `reference` recomputes the derived relations and axioms from scratch with
//! naive pair-set algebra, independently of the bitset implementation.

use std::collections::HashSet;

use thiserror::Error;

use crate::consistency::is_consistent;
use crate::graph::{CanonicalExec, EventId, ExecutionGraph, NewEvent, OpKind};
use crate::litmus::Program;
use crate::sched::{self, NextEvent, PendingKind, PendingOp, ThreadState};
use crate::scope::Tid;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("state budget exceeded after {0} states")]
    BudgetExceeded(u64),
    #[error("scheduler replay failed: {0}")]
    ReplayFailed(String),
}

/// Identity of a pending event: thread and program-order index.
pub type PendingId = (Tid, u32);

/// The unique predecessor of a consistent graph. Init-only graphs are their
/// own predecessor.
pub fn prev(p: &Program, g: &ExecutionGraph) -> Result<ExecutionGraph, OracleError> {
    let Some(last) = g.last_of_g() else {
        return Ok(g.clone());
    };
    let e = g.event(last).unwrap();
    if e.is_read() && g.reversed(last) {
        let w = g.rf_of(last).expect("reversed read has a source");
        debug_assert!(
            g.rf().iter().all(|(r, src)| *src != w || *r == last),
            "postponed write read by more than one read"
        );
        let w_ev = g.event(w).unwrap();
        let target = (w_ev.tid, w_ev.po_idx);
        let keep: Vec<bool> = g
            .events()
            .iter()
            .map(|d| d.id != last && d.id != w)
            .collect();
        max_e_graph(p, g.restrict(&keep), target)
    } else {
        let keep: Vec<bool> = g.events().iter().map(|d| d.id != last).collect();
        Ok(g.restrict(&keep))
    }
}

/// Replay the scheduler from `g`, adding every event maximally (reads
/// observe the co-maximal write, writes become co-maximal), until the next
/// scheduled event is `target`; returns the graph just before it.
pub fn max_e_graph(
    p: &Program,
    mut g: ExecutionGraph,
    target: PendingId,
) -> Result<ExecutionGraph, OracleError> {
    loop {
        let op = match sched::next_event(p, &g) {
            NextEvent::Next(op) => op,
            NextEvent::Done => {
                return Err(OracleError::ReplayFailed(
                    "ran out of events before reaching the target".into(),
                ))
            }
            NextEvent::Blocked { .. } => {
                return Err(OracleError::ReplayFailed("replay blocked".into()))
            }
        };
        if (op.tid, op.po_idx) == target {
            return Ok(g);
        }
        add_maximally(&mut g, &op)?;
    }
}

/// Apply one scheduler step maximally.
fn add_maximally(g: &mut ExecutionGraph, op: &PendingOp) -> Result<(), OracleError> {
    match &op.kind {
        PendingKind::Fence { ord, sco } => {
            g.add_event(NewEvent {
                tid: op.tid,
                po_idx: op.po_idx,
                op: OpKind::F,
                loc: None,
                ord: *ord,
                sco: *sco,
                val: None,
                rmw_pair: None,
                stmt: Some(op.stmt),
                await_target: None,
            })
            .map_err(|e| OracleError::ReplayFailed(e.to_string()))?;
        }
        PendingKind::Read { loc, ord, sco, await_target, .. } => {
            // readFromMOLatest: the co-maximal write.
            let w = *g
                .co_chain(*loc)
                .last()
                .ok_or_else(|| OracleError::ReplayFailed("location has no writes".into()))?;
            if let Some(t) = await_target {
                if g.event(w).unwrap().val != Some(*t) {
                    return Err(OracleError::ReplayFailed(
                        "await target is not the co-maximal value".into(),
                    ));
                }
            }
            let r = g
                .add_event(NewEvent {
                    tid: op.tid,
                    po_idx: op.po_idx,
                    op: OpKind::R,
                    loc: Some(*loc),
                    ord: *ord,
                    sco: *sco,
                    val: None,
                    rmw_pair: None,
                    stmt: Some(op.stmt),
                    await_target: *await_target,
                })
                .map_err(|e| OracleError::ReplayFailed(e.to_string()))?;
            g.set_rf(w, r).map_err(|e| OracleError::ReplayFailed(e.to_string()))?;
        }
        PendingKind::Write { loc, ord, sco, val, rmw_read } => {
            // SetAsMOLatestWrite: place at the end of the chain.
            let w = g
                .add_event(NewEvent {
                    tid: op.tid,
                    po_idx: op.po_idx,
                    op: OpKind::W,
                    loc: Some(*loc),
                    ord: *ord,
                    sco: *sco,
                    val: Some(*val),
                    rmw_pair: *rmw_read,
                    stmt: Some(op.stmt),
                    await_target: None,
                })
                .map_err(|e| OracleError::ReplayFailed(e.to_string()))?;
            let end = g.co_chain(*loc).len();
            g.place_co(w, end).map_err(|e| OracleError::ReplayFailed(e.to_string()))?;
        }
    }
    Ok(())
}

/// Brute-force enumeration of every consistent full execution: all thread
/// interleavings, all rf sources per read, all coherence insertions per
/// write, deduplicated by canonical identity. `budget` bounds the number of
/// explored partial states.
pub fn enumerate_all(
    p: &Program,
    budget: u64,
) -> Result<HashSet<CanonicalExec>, OracleError> {
    let mut out = HashSet::new();
    let mut states = 0u64;
    let g = ExecutionGraph::initial(p);
    enumerate_rec(p, &g, budget, &mut states, &mut out)?;
    Ok(out)
}

fn enumerate_rec(
    p: &Program,
    g: &ExecutionGraph,
    budget: u64,
    states: &mut u64,
    out: &mut HashSet<CanonicalExec>,
) -> Result<(), OracleError> {
    *states += 1;
    if *states > budget {
        return Err(OracleError::BudgetExceeded(*states));
    }
    if !is_consistent(g) {
        return Ok(());
    }
    // Every runnable thread is a scheduling choice.
    let mut ready = Vec::new();
    let mut unfinished = 0usize;
    for i in 1..=p.threads.len() {
        match sched::thread_state(p, g, Tid(i as u32)) {
            ThreadState::Finished => {}
            ThreadState::Ready(op) => {
                unfinished += 1;
                ready.push(op);
            }
            _ => unfinished += 1,
        }
    }
    if ready.is_empty() {
        if unfinished == 0 {
            out.insert(g.canonical());
        }
        return Ok(());
    }
    for op in ready {
        match &op.kind {
            PendingKind::Fence { ord, sco } => {
                let mut child = g.clone();
                child
                    .add_event(NewEvent {
                        tid: op.tid,
                        po_idx: op.po_idx,
                        op: OpKind::F,
                        loc: None,
                        ord: *ord,
                        sco: *sco,
                        val: None,
                        rmw_pair: None,
                        stmt: Some(op.stmt),
                        await_target: None,
                    })
                    .unwrap();
                enumerate_rec(p, &child, budget, states, out)?;
            }
            PendingKind::Read { loc, ord, sco, await_target, .. } => {
                let sources: Vec<EventId> = g
                    .writes_on(*loc)
                    .filter(|w| await_target.is_none_or(|t| w.val == Some(t)))
                    .map(|w| w.id)
                    .collect();
                for w in sources {
                    let mut child = g.clone();
                    let r = child
                        .add_event(NewEvent {
                            tid: op.tid,
                            po_idx: op.po_idx,
                            op: OpKind::R,
                            loc: Some(*loc),
                            ord: *ord,
                            sco: *sco,
                            val: None,
                            rmw_pair: None,
                            stmt: Some(op.stmt),
                            await_target: *await_target,
                        })
                        .unwrap();
                    child.set_rf(w, r).unwrap();
                    enumerate_rec(p, &child, budget, states, out)?;
                }
            }
            PendingKind::Write { loc, ord, sco, val, rmw_read } => {
                let mut with_w = g.clone();
                let w = with_w
                    .add_event(NewEvent {
                        tid: op.tid,
                        po_idx: op.po_idx,
                        op: OpKind::W,
                        loc: Some(*loc),
                        ord: *ord,
                        sco: *sco,
                        val: Some(*val),
                        rmw_pair: *rmw_read,
                        stmt: Some(op.stmt),
                        await_target: None,
                    })
                    .unwrap();
                for pos in with_w.co_positions(w) {
                    let mut child = with_w.clone();
                    child.place_co(w, pos).unwrap();
                    enumerate_rec(p, &child, budget, states, out)?;
                }
            }
        }
    }
    Ok(())
}

/// Naive from-scratch relation computation and consistency check, kept
/// deliberately independent of the bitset path in `relations`.
pub mod reference {
    use std::collections::BTreeSet;

    use crate::graph::{Event, ExecutionGraph, OpKind};
    use crate::scope::{inclusive, MemOrder};

    pub type PairSet = BTreeSet<(usize, usize)>;

    fn compose(a: &PairSet, b: &PairSet) -> PairSet {
        let mut out = PairSet::new();
        for (x, y) in a {
            for (y2, z) in b {
                if y == y2 {
                    out.insert((*x, *z));
                }
            }
        }
        out
    }

    fn union(a: &PairSet, b: &PairSet) -> PairSet {
        a.union(b).copied().collect()
    }

    fn intersect(a: &PairSet, b: &PairSet) -> PairSet {
        a.intersection(b).copied().collect()
    }

    fn closure(a: &PairSet) -> PairSet {
        let mut out = a.clone();
        loop {
            let step = compose(&out, &out);
            let next = union(&out, &step);
            if next == out {
                return out;
            }
            out = next;
        }
    }

    fn maybe(a: &PairSet, n: usize) -> PairSet {
        let mut out = a.clone();
        for i in 0..n {
            out.insert((i, i));
        }
        out
    }

    fn identity(n: usize, pred: impl Fn(usize) -> bool) -> PairSet {
        (0..n).filter(|i| pred(*i)).map(|i| (i, i)).collect()
    }

    fn irreflexive(a: &PairSet) -> bool {
        a.iter().all(|(x, y)| x != y)
    }

    fn acyclic(a: &PairSet) -> bool {
        irreflexive(&closure(a))
    }

    /// All derived relations as explicit pair sets over event positions.
    pub struct ReferenceRelations {
        pub fr: PairSet,
        pub eco: PairSet,
        pub rseq: PairSet,
        pub prel: PairSet,
        pub pacq: PairSet,
        pub sw: PairSet,
        pub hb: PairSet,
        pub psc: Option<PairSet>,
        pub porf: PairSet,
        pub rmw: PairSet,
        pub co: PairSet,
        pub incl: PairSet,
    }

    pub fn relations(g: &ExecutionGraph) -> ReferenceRelations {
        let events = g.events();
        let n = events.len();
        let same_loc = |a: &Event, b: &Event| {
            matches!((a.loc, b.loc), (Some(x), Some(y)) if x == y)
        };

        let mut po = PairSet::new();
        let mut incl = PairSet::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if g.po(&events[i], &events[j]) {
                    po.insert((i, j));
                }
                if inclusive(&g.access_view(&events[i]), &g.access_view(&events[j])) {
                    incl.insert((i, j));
                }
            }
        }
        let mut rf = PairSet::new();
        for (r, w) in g.rf() {
            rf.insert((g.idx_of(*w).unwrap(), g.idx_of(*r).unwrap()));
        }
        let mut co = PairSet::new();
        for chain in g.co_chains().values() {
            for (a, wa) in chain.iter().enumerate() {
                for wb in &chain[a + 1..] {
                    co.insert((g.idx_of(*wa).unwrap(), g.idx_of(*wb).unwrap()));
                }
            }
        }
        let mut rmw = PairSet::new();
        for e in events {
            if e.is_read() {
                if let Some(w) = e.rmw_pair {
                    rmw.insert((g.idx_of(e.id).unwrap(), g.idx_of(w).unwrap()));
                }
            }
        }

        let rf_inv: PairSet = rf.iter().map(|(a, b)| (*b, *a)).collect();
        let fr = compose(&rf_inv, &co);
        let eco = closure(&union(&union(&rf, &co), &fr));

        let id_w = identity(n, |i| events[i].is_write());
        let id_w_rlx =
            identity(n, |i| events[i].is_write() && events[i].ord.at_least(MemOrder::Rlx));
        let id_rel = identity(n, |i| events[i].ord.at_least(MemOrder::Rel));
        let id_acq = identity(n, |i| events[i].ord.at_least(MemOrder::Acq));
        let id_f = identity(n, |i| events[i].op == OpKind::F);

        let po_loc: PairSet = po
            .iter()
            .filter(|(i, j)| same_loc(&events[*i], &events[*j]))
            .copied()
            .collect();
        let po_nloc: PairSet = po.difference(&po_loc).copied().collect();
        let incl_rf = intersect(&incl, &rf);

        let rseq = compose(
            &compose(&compose(&id_w, &maybe(&po_loc, n)), &id_w_rlx),
            &maybe(&closure(&compose(&incl_rf, &rmw)), n),
        );
        let prel = compose(&id_rel, &maybe(&compose(&id_f, &po), n));
        let pacq = compose(&maybe(&compose(&po, &id_f), n), &id_acq);
        let sw = compose(&compose(&compose(&prel, &rseq), &incl_rf), &pacq);
        let hb = closure(&union(&po, &intersect(&incl, &sw)));

        let has_sc = events.iter().any(|e| e.ord == MemOrder::Sc);
        let psc = has_sc.then(|| {
            let id_esc = identity(n, |i| events[i].ord == MemOrder::Sc);
            let id_fsc =
                identity(n, |i| events[i].op == OpKind::F && events[i].ord == MemOrder::Sc);
            let hb_loc: PairSet = hb
                .iter()
                .filter(|(i, j)| same_loc(&events[*i], &events[*j]))
                .copied()
                .collect();
            let scb = union(
                &union(&union(&po, &compose(&compose(&po_nloc, &hb), &po_nloc)), &hb_loc),
                &union(&co, &fr),
            );
            let left = union(&id_esc, &compose(&id_fsc, &maybe(&hb, n)));
            let right = union(&id_esc, &compose(&maybe(&hb, n), &id_fsc));
            let pscb = compose(&compose(&left, &scb), &right);
            let pscf = compose(
                &compose(&id_fsc, &union(&hb, &compose(&compose(&hb, &eco), &hb))),
                &id_fsc,
            );
            union(&pscb, &pscf)
        });

        let porf = union(&po, &rf);
        ReferenceRelations { fr, eco, rseq, prel, pacq, sw, hb, psc, porf, rmw, co, incl }
    }

    /// The four axioms over the naive relations.
    pub fn consistent(g: &ExecutionGraph) -> bool {
        let r = relations(g);
        let n = g.events().len();
        if !acyclic(&r.porf) {
            return false;
        }
        if !irreflexive(&compose(&r.hb, &maybe(&r.eco, n))) {
            return false;
        }
        if !intersect(&r.rmw, &compose(&r.fr, &r.co)).is_empty() {
            return false;
        }
        match &r.psc {
            None => true,
            Some(psc) => acyclic(&intersect(&r.incl, psc)),
        }
    }
}
