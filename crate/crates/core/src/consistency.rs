//! The four consistency axioms, plus end-of-exploration blocked/divergence
//! classification.
//!
//! An execution graph is consistent iff:
//! - hb ; eco? is irreflexive            (Coherence)
//! - rmw ∩ (fr ; co) is empty            (Atomicity)
//! - incl ∩ psc is acyclic               (SC)
//! - po ∪ rf is acyclic                  (No-Thin-Air)
//!
//! All four checks are monotone in the graph: adding events and edges never
//! removes a violation, so the explorer may prune any inconsistent partial
//! graph.

use crate::graph::ExecutionGraph;
use crate::litmus::{LocId, Program, StmtId};
use crate::relations::RelationSet;
use crate::scope::Tid;
use crate::sched::{self, NextEvent};

pub fn coherent(g: &ExecutionGraph) -> bool {
    let rels = RelationSet::compute(g);
    coherent_rels(&rels)
}

pub(crate) fn coherent_rels(rels: &RelationSet) -> bool {
    rels.hb.compose(&rels.eco.maybe()).is_irreflexive()
}

pub fn atomicity_ok(g: &ExecutionGraph) -> bool {
    let rels = RelationSet::compute(g);
    atomicity_rels(&rels)
}

pub(crate) fn atomicity_rels(rels: &RelationSet) -> bool {
    rels.rmw.intersect(&rels.fr.compose(&rels.co)).is_empty()
}

pub fn sc_ok(g: &ExecutionGraph) -> bool {
    let rels = RelationSet::compute(g);
    sc_rels(&rels)
}

pub(crate) fn sc_rels(rels: &RelationSet) -> bool {
    match &rels.psc {
        None => true,
        Some(psc) => rels.incl.intersect(psc).is_acyclic(),
    }
}

/// No-Thin-Air, straight off the graph (no relation materialization).
pub fn porf_acyclic(g: &ExecutionGraph) -> bool {
    let n = g.events().len();
    // DFS over po ∪ rf successors; 0 = unvisited, 1 = on stack, 2 = done.
    let mut state = vec![0u8; n];
    fn visit(g: &ExecutionGraph, i: usize, state: &mut [u8]) -> bool {
        if state[i] == 1 {
            return false;
        }
        if state[i] == 2 {
            return true;
        }
        state[i] = 1;
        let e = &g.events()[i];
        for (j, d) in g.events().iter().enumerate() {
            let edge = g.po(e, d) || (d.is_read() && g.rf_of(d.id) == Some(e.id));
            if edge && !visit(g, j, state) {
                return false;
            }
        }
        state[i] = 2;
        true
    }
    (0..n).all(|i| visit(g, i, &mut state))
}

/// Conjunction of the four axioms, cheapest first.
pub fn is_consistent(g: &ExecutionGraph) -> bool {
    if !porf_acyclic(g) {
        return false;
    }
    let rels = RelationSet::compute(g);
    coherent_rels(&rels) && atomicity_rels(&rels) && sc_rels(&rels)
}

/// `is_consistent` against a relation set the caller already computed.
pub fn is_consistent_with(g: &ExecutionGraph, rels: &RelationSet) -> bool {
    porf_acyclic(g) && coherent_rels(rels) && atomicity_rels(rels) && sc_rels(rels)
}

/// One thread stuck at a barrier at the end of an execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarrierStall {
    pub tid: Tid,
    pub barrier_id: Option<u32>,
    pub loc: LocId,
    pub stmt: StmtId,
}

/// End-of-exploration blocking report: which threads wait at barriers, which
/// ran out of unroll bound.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockReport {
    pub barrier_waits: Vec<BarrierStall>,
    pub bound_blocked: Vec<Tid>,
}

impl BlockReport {
    /// Barrier divergence: at least one thread is parked at a barrier while
    /// nothing else can run. Bound exhaustion alone is not divergence.
    pub fn is_divergence(&self) -> bool {
        !self.barrier_waits.is_empty()
    }
}

/// When the graph has no next event, classify why. `None` means the graph
/// is not blocked (either it is full, or some thread can still run).
pub fn is_blocked(g: &ExecutionGraph, p: &Program) -> Option<BlockReport> {
    match sched::next_event(p, g) {
        NextEvent::Blocked { barrier, bound } => Some(BlockReport {
            barrier_waits: barrier,
            bound_blocked: bound,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NewEvent, OpKind};
    use crate::litmus::parse;
    use crate::scope::{MemOrder, Scope};

    fn skeleton(threads: &[(u32, u32)], locs: &[&str]) -> crate::litmus::Program {
        let mut src = String::from("grid 8, 8;\n");
        for l in locs {
            src.push_str(&format!("{l} = 0;\n"));
        }
        for (cta, gpu) in threads {
            src.push_str(&format!("thread<{cta}, {gpu}> {{ }}\n"));
        }
        parse(&src).unwrap()
    }

    #[test]
    fn init_only_graph_is_consistent() {
        let p = skeleton(&[(0, 0)], &["X", "Y"]);
        let g = ExecutionGraph::initial(&p);
        assert!(is_consistent(&g));
        assert!(coherent(&g));
        assert!(atomicity_ok(&g));
        assert!(sc_ok(&g));
        assert!(porf_acyclic(&g));
    }

    #[test]
    fn load_buffering_cycle_is_porf_cyclic() {
        // Each read reads the other thread's later write: po ∪ rf cycle.
        let p = skeleton(&[(0, 0), (0, 0)], &["X", "Y"]);
        let mut g = ExecutionGraph::initial(&p);
        let r1 = g
            .add_event(NewEvent {
                tid: Tid(1),
                po_idx: 0,
                op: OpKind::R,
                loc: p.loc_id("X").map(Some).unwrap(),
                ord: MemOrder::Rlx,
                sco: Scope::Cta,
                val: None,
                rmw_pair: None,
                stmt: None,
                await_target: None,
            })
            .unwrap();
        let w1 = g
            .add_event(NewEvent {
                tid: Tid(1),
                po_idx: 1,
                op: OpKind::W,
                loc: p.loc_id("Y").map(Some).unwrap(),
                ord: MemOrder::Rlx,
                sco: Scope::Cta,
                val: Some(1),
                rmw_pair: None,
                stmt: None,
                await_target: None,
            })
            .unwrap();
        let r2 = g
            .add_event(NewEvent {
                tid: Tid(2),
                po_idx: 0,
                op: OpKind::R,
                loc: p.loc_id("Y").map(Some).unwrap(),
                ord: MemOrder::Rlx,
                sco: Scope::Cta,
                val: None,
                rmw_pair: None,
                stmt: None,
                await_target: None,
            })
            .unwrap();
        let w2 = g
            .add_event(NewEvent {
                tid: Tid(2),
                po_idx: 1,
                op: OpKind::W,
                loc: p.loc_id("X").map(Some).unwrap(),
                ord: MemOrder::Rlx,
                sco: Scope::Cta,
                val: Some(1),
                rmw_pair: None,
                stmt: None,
                await_target: None,
            })
            .unwrap();
        g.place_co(w1, 1).unwrap();
        g.place_co(w2, 1).unwrap();
        g.set_rf(w2, r1).unwrap();
        assert!(porf_acyclic(&g), "half the cycle is fine");
        g.set_rf(w1, r2).unwrap();
        assert!(!porf_acyclic(&g));
        assert!(!is_consistent(&g));
    }

    #[test]
    fn double_cas_from_init_violates_atomicity() {
        // Two successful CAS both reading the initial write: whichever way
        // the two rmw writes are co-ordered, some write intervenes between a
        // pair's read source and its write.
        let p = skeleton(&[(0, 0), (0, 0)], &["X"]);
        let base = ExecutionGraph::initial(&p);
        let init = base.co_chain(p.loc_id("X").unwrap())[0];
        let mk = |first_pos: usize, second_pos: usize| {
            let mut g = base.clone();
            let loc = p.loc_id("X").unwrap();
            let mut rmw = |tid: u32, pos: usize, g: &mut ExecutionGraph| {
                let r = g
                    .add_event(NewEvent {
                        tid: Tid(tid),
                        po_idx: 0,
                        op: OpKind::R,
                        loc: Some(loc),
                        ord: MemOrder::AcqRel,
                        sco: Scope::Cta,
                        val: None,
                        rmw_pair: None,
                        stmt: None,
                        await_target: None,
                    })
                    .unwrap();
                g.set_rf(init, r).unwrap();
                let w = g
                    .add_event(NewEvent {
                        tid: Tid(tid),
                        po_idx: 1,
                        op: OpKind::W,
                        loc: Some(loc),
                        ord: MemOrder::AcqRel,
                        sco: Scope::Cta,
                        val: Some(1),
                        rmw_pair: Some(r),
                        stmt: None,
                        await_target: None,
                    })
                    .unwrap();
                g.place_co(w, pos).unwrap();
                w
            };
            rmw(1, first_pos, &mut g);
            rmw(2, second_pos, &mut g);
            g
        };
        // Both interleavings violate atomicity.
        assert!(!atomicity_ok(&mk(1, 2)));
        assert!(!atomicity_ok(&mk(1, 1)));
    }

    #[test]
    fn graph_without_rmw_passes_atomicity() {
        let p = skeleton(&[(0, 0)], &["X"]);
        let g = ExecutionGraph::initial(&p);
        assert!(atomicity_ok(&g));
    }

    #[test]
    fn sc_holds_trivially_without_sc_events() {
        let p = skeleton(&[(0, 0)], &["X"]);
        let g = ExecutionGraph::initial(&p);
        assert!(sc_ok(&g));
    }
}
