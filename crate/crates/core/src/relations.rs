//! Derived relations over an execution graph.
//!
//! Everything here is a literal transcription of the relational definitions
//! into boolean-matrix algebra over the graph's events:
//!
//! ```text
//! fr   = rf⁻¹ ; co
//! eco  = (rf ∪ co ∪ fr)⁺                          (same-location only)
//! rseq = [W] ; po|loc? ; [W⊒rlx] ; ((incl ∩ rf) ; rmw)*
//! prel = [E⊒rel] ; ([F] ; po)?
//! pacq = (po ; [F])? ; [E⊒acq]
//! sw   = prel ; rseq ; (incl ∩ rf) ; pacq
//! hb   = (po ∪ (incl ∩ sw))⁺
//! scb  = po ∪ po≠loc ; hb ; po≠loc ∪ hb|loc ∪ co ∪ fr
//! pscb = ([Esc] ∪ [Fsc] ; hb?) ; scb ; ([Esc] ∪ hb? ; [Fsc])
//! pscf = [Fsc] ; (hb ∪ hb ; eco ; hb) ; [Fsc]
//! psc  = pscb ∪ pscf
//! ```
//!
//! The inclusion relation gates rf inside rseq and sw, and gates sw inside
//! hb, so synchronization only ever flows through scope-inclusive pairs.
//! psc is only materialized when the graph contains sc events.

use std::collections::BTreeSet;

use crate::graph::{Event, EventId, ExecutionGraph, OpKind};
use crate::scope::{inclusive_with, InclMode, MemOrder};

/// Dense boolean relation over event positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rel {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl Rel {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64);
        Rel { n, words, rows: vec![0; n * words] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.row_mut(i)[j / 64] |= 1 << (j % 64);
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] & (1 << (j % 64)) != 0
    }

    pub fn identity_where(n: usize, pred: impl Fn(usize) -> bool) -> Self {
        let mut r = Rel::empty(n);
        for i in 0..n {
            if pred(i) {
                r.set(i, i);
            }
        }
        r
    }

    pub fn union(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.rows.iter_mut().zip(other.rows.iter()) {
            *a |= *b;
        }
        out
    }

    pub fn intersect(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.rows.iter_mut().zip(other.rows.iter()) {
            *a &= *b;
        }
        out
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &Rel) -> Rel {
        debug_assert_eq!(self.n, other.n);
        let mut out = Rel::empty(self.n);
        for i in 0..self.n {
            for w in 0..self.words {
                let mut bits = self.row(i)[w];
                while bits != 0 {
                    let j = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let (dst, src) = (i, j);
                    for k in 0..self.words {
                        let v = other.row(src)[k];
                        out.rows[dst * self.words + k] |= v;
                    }
                }
            }
        }
        out
    }

    /// Reflexive closure (identity on every event).
    pub fn maybe(&self) -> Rel {
        let mut out = self.clone();
        for i in 0..self.n {
            out.set(i, i);
        }
        out
    }

    /// Transitive closure.
    pub fn plus(&self) -> Rel {
        let mut out = self.clone();
        for k in 0..self.n {
            for i in 0..self.n {
                if out.get(i, k) {
                    for w in 0..self.words {
                        let v = out.rows[k * self.words + w];
                        out.rows[i * self.words + w] |= v;
                    }
                }
            }
        }
        out
    }

    /// Reflexive-transitive closure.
    pub fn star(&self) -> Rel {
        self.plus().maybe()
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i))
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|w| *w == 0)
    }

    /// Acyclicity via the transitive closure.
    pub fn is_acyclic(&self) -> bool {
        self.plus().is_irreflexive()
    }

    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |j| self.get(i, *j)).map(move |j| (i, j)))
    }
}

/// All derived relations of one graph, over event positions; `ids` maps
/// positions back to event ids.
#[derive(Debug, Clone)]
pub struct RelationSet {
    pub ids: Vec<EventId>,
    pub po: Rel,
    pub rf: Rel,
    pub co: Rel,
    pub rmw: Rel,
    pub incl: Rel,
    pub fr: Rel,
    pub eco: Rel,
    pub rseq: Rel,
    pub prel: Rel,
    pub pacq: Rel,
    pub sw: Rel,
    pub hb: Rel,
    /// Present only when the graph has sc events (fast path otherwise).
    pub psc: Option<Rel>,
}

fn same_loc(a: &Event, b: &Event) -> bool {
    matches!((a.loc, b.loc), (Some(x), Some(y)) if x == y)
}

impl RelationSet {
    pub fn compute(g: &ExecutionGraph) -> Self {
        Self::compute_with(g, InclMode::Symmetric)
    }

    pub fn compute_with(g: &ExecutionGraph, mode: InclMode) -> Self {
        let events = g.events();
        let n = events.len();
        let ids: Vec<EventId> = events.iter().map(|e| e.id).collect();
        let idx = |id: EventId| ids.iter().position(|x| *x == id).unwrap();

        // Synchronization (and hence a non-trivial hb) needs both a release
        // and an acquire side; the inclusion matrix is only consulted by sw
        // and the SC axiom.
        let has_rel = events.iter().any(|e| e.ord.at_least(MemOrder::Rel));
        let has_acq = events.iter().any(|e| e.ord.at_least(MemOrder::Acq));
        let has_sc = events.iter().any(|e| e.ord == MemOrder::Sc);
        let sync_possible = has_rel && has_acq;

        let mut po = Rel::empty(n);
        let mut incl = Rel::empty(n);
        for (i, a) in events.iter().enumerate() {
            for (j, b) in events.iter().enumerate() {
                if i != j {
                    if g.po(a, b) {
                        po.set(i, j);
                    }
                    if (sync_possible || has_sc)
                        && inclusive_with(mode, &g.access_view(a), &g.access_view(b))
                    {
                        incl.set(i, j);
                    }
                }
            }
        }

        let mut rf = Rel::empty(n);
        for (r, w) in g.rf() {
            rf.set(idx(*w), idx(*r));
        }

        let mut co = Rel::empty(n);
        for chain in g.co_chains().values() {
            for (a, wa) in chain.iter().enumerate() {
                for wb in chain.iter().skip(a + 1) {
                    co.set(idx(*wa), idx(*wb));
                }
            }
        }

        let mut rmw = Rel::empty(n);
        for e in events {
            if e.is_read() {
                if let Some(w) = e.rmw_pair {
                    rmw.set(idx(e.id), idx(w));
                }
            }
        }

        // fr = rf⁻¹ ; co
        let mut rf_inv = Rel::empty(n);
        for (i, j) in rf.iter_pairs().collect::<Vec<_>>() {
            rf_inv.set(j, i);
        }
        let fr = rf_inv.compose(&co);

        let eco = rf.union(&co).union(&fr).plus();

        let is = |p: &dyn Fn(&Event) -> bool| {
            Rel::identity_where(n, |i| p(&events[i]))
        };

        let mut po_loc = Rel::empty(n);
        let mut po_nloc = Rel::empty(n);
        for (i, j) in po.iter_pairs().collect::<Vec<_>>() {
            if same_loc(&events[i], &events[j]) {
                po_loc.set(i, j);
            } else {
                po_nloc.set(i, j);
            }
        }

        let (rseq, prel, pacq, sw) = if sync_possible {
            let id_w = is(&|e| e.is_write());
            let id_w_rlx = is(&|e| e.is_write() && e.ord.at_least(MemOrder::Rlx));
            let id_rel = is(&|e| e.ord.at_least(MemOrder::Rel));
            let id_acq = is(&|e| e.ord.at_least(MemOrder::Acq));
            let id_f = is(&|e| e.op == OpKind::F);
            let incl_rf = incl.intersect(&rf);

            // rseq = [W] ; po|loc? ; [W⊒rlx] ; ((incl ∩ rf) ; rmw)*
            let rseq = id_w
                .compose(&po_loc.maybe())
                .compose(&id_w_rlx)
                .compose(&incl_rf.compose(&rmw).star());

            // prel = [E⊒rel] ; ([F] ; po)?
            let prel = id_rel.compose(&id_f.compose(&po).maybe());
            // pacq = (po ; [F])? ; [E⊒acq]
            let pacq = po.compose(&id_f).maybe().compose(&id_acq);

            let sw = prel.compose(&rseq).compose(&incl_rf).compose(&pacq);
            (rseq, prel, pacq, sw)
        } else {
            // Without a release/acquire pair sw is empty; rseq, prel, pacq
            // still have their degenerate (identity-ish) parts.
            let id_w = is(&|e| e.is_write());
            let id_w_rlx = is(&|e| e.is_write() && e.ord.at_least(MemOrder::Rlx));
            let id_rel = is(&|e| e.ord.at_least(MemOrder::Rel));
            let id_acq = is(&|e| e.ord.at_least(MemOrder::Acq));
            let id_f = is(&|e| e.op == OpKind::F);
            let rseq = id_w.compose(&po_loc.maybe()).compose(&id_w_rlx);
            let prel = id_rel.compose(&id_f.compose(&po).maybe());
            let pacq = po.compose(&id_f).maybe().compose(&id_acq);
            (rseq, prel, pacq, Rel::empty(n))
        };

        let hb = po.union(&incl.intersect(&sw)).plus();

        let psc = has_sc.then(|| {
            let id_esc = is(&|e| e.ord == MemOrder::Sc);
            let id_fsc = is(&|e| e.op == OpKind::F && e.ord == MemOrder::Sc);
            let hb_loc = {
                let mut r = Rel::empty(n);
                for (i, j) in hb.iter_pairs().collect::<Vec<_>>() {
                    if same_loc(&events[i], &events[j]) {
                        r.set(i, j);
                    }
                }
                r
            };
            let scb = po
                .union(&po_nloc.compose(&hb).compose(&po_nloc))
                .union(&hb_loc)
                .union(&co)
                .union(&fr);
            let left = id_esc.union(&id_fsc.compose(&hb.maybe()));
            let right = id_esc.union(&hb.maybe().compose(&id_fsc));
            let pscb = left.compose(&scb).compose(&right);
            let pscf = id_fsc
                .compose(&hb.union(&hb.compose(&eco).compose(&hb)))
                .compose(&id_fsc);
            pscb.union(&pscf)
        });

        RelationSet {
            ids,
            po,
            rf,
            co,
            rmw,
            incl,
            fr,
            eco,
            rseq,
            prel,
            pacq,
            sw,
            hb,
            psc,
        }
    }

    /// Pairs of a relation as event-id tuples, for explicit set comparison
    /// in tests.
    pub fn pairs(&self, rel: &Rel) -> BTreeSet<(EventId, EventId)> {
        rel.iter_pairs().map(|(i, j)| (self.ids[i], self.ids[j])).collect()
    }
}
