//! The exploration engine.
//!
//! `explore` enumerates all consistent executions of a program, depth-first
//! over graph copies. A read branches over every write it may observe; a
//! write branches over every coherence placement, co-maximal first, and is
//! then offered to every *reversible* read on its location as a postponed
//! source: the read is re-targeted at the write, every event between them
//! that is not in the write's porf-prefix is deleted, and exploration resumes
//! from the swapped graph. `check_optimal` admits a swap only when every
//! deleted write is co-maximal and every deleted read reads a co-maximal
//! write, which makes each full execution reachable along exactly one path.
//!
//! Branches share nothing but the report sink and counters, so sibling
//! subtrees can run on worker threads; the sequential order is fixed and
//! reproducible.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering::Relaxed};
use std::sync::{Arc, Mutex};

use crate::consistency::{self, BarrierStall};
use crate::graph::{CanonicalExec, EventId, ExecutionGraph, NewEvent, OpKind};
use crate::litmus::{Program, Quantifier};
use crate::race::RaceFinding;
use crate::sched::{self, NextEvent, PendingKind};
use crate::scope::Tid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RacePolicy {
    /// Report the first race and stop the search.
    #[default]
    Stop,
    /// Collect every race and keep exploring.
    Continue,
    /// Stop at the first race so the driver can rewrite the program.
    Repair,
}

#[derive(Debug, Clone)]
pub struct ExploreOpts {
    pub on_race: RacePolicy,
    pub max_execs: Option<u64>,
    /// Terminate the whole search when an assertion verdict is decided
    /// (forall falsified / exists witnessed).
    pub stop_on_assertion: bool,
    /// Keep every full execution (canonical form) in the report. Needed for
    /// oracle comparisons and DOT dumps; off for long runs.
    pub collect_executions: bool,
    /// Also keep the full execution graphs (with insertion order), for
    /// predecessor-chain tests.
    pub collect_graphs: bool,
    /// Worker threads; 1 = fully sequential and byte-deterministic.
    pub jobs: usize,
}

impl Default for ExploreOpts {
    fn default() -> Self {
        ExploreOpts {
            on_race: RacePolicy::Stop,
            max_execs: None,
            stop_on_assertion: true,
            collect_executions: false,
            collect_graphs: false,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub executions: u64,
    /// Largest event count (including initializing writes) over all full
    /// executions.
    pub max_events: u64,
    pub events_added: u64,
    pub races_found: u64,
    pub divergent_branches: u64,
    pub bound_exhausted_branches: u64,
    /// High-water mark of simultaneously live graph copies.
    pub peak_live_graphs: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertionVerdict {
    ForallHeld,
    ForallViolated,
    ExistsWitnessed,
    ExistsUnsatisfied,
}

#[derive(Debug, Clone)]
pub struct AssertionReport {
    pub quant: Quantifier,
    pub verdict: AssertionVerdict,
    pub witness: Option<CanonicalExec>,
}

#[derive(Debug, Clone)]
pub struct DivergenceFinding {
    pub stalls: Vec<BarrierStall>,
    pub witness: CanonicalExec,
}

impl DivergenceFinding {
    pub fn barrier_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.stalls.iter().filter_map(|s| s.barrier_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn key(&self) -> Vec<(u32, u32)> {
        let mut k: Vec<(u32, u32)> =
            self.stalls.iter().map(|s| (s.tid.0, s.stmt.0)).collect();
        k.sort_unstable();
        k
    }
}

/// How a finished run is judged, in decreasing severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    AssertionViolation,
    Race,
    Divergence,
    LimitExceeded,
    Clean,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub stats: Stats,
    pub races: Vec<RaceFinding>,
    pub divergences: Vec<DivergenceFinding>,
    pub assertion: Option<AssertionReport>,
    pub executions: Vec<CanonicalExec>,
    /// Full graphs of the emitted executions (when `collect_graphs` is on).
    pub graphs: Vec<ExecutionGraph>,
    /// Executions emitted more than once; optimality means this stays empty.
    pub duplicate_executions: Vec<CanonicalExec>,
}

impl RunReport {
    pub fn verdict(&self) -> Verdict {
        let assertion_bad = matches!(
            self.assertion.as_ref().map(|a| a.verdict),
            Some(AssertionVerdict::ForallViolated) | Some(AssertionVerdict::ExistsWitnessed)
        );
        if assertion_bad {
            Verdict::AssertionViolation
        } else if !self.races.is_empty() {
            Verdict::Race
        } else if !self.divergences.is_empty() {
            Verdict::Divergence
        } else if self.stats.truncated {
            Verdict::LimitExceeded
        } else {
            Verdict::Clean
        }
    }
}

/// Explore a prepared (unrolled, desugared) program from the init-only graph.
pub fn explore(p: &Program, opts: ExploreOpts) -> RunReport {
    let engine = Engine::new(p, opts);
    engine.run(ExecutionGraph::initial(p))
}

/// Explore from a caller-supplied starting graph (used by oracle replays and
/// prev-chain tests).
pub fn explore_from(p: &Program, g: ExecutionGraph, opts: ExploreOpts) -> RunReport {
    Engine::new(p, opts).run(g)
}

struct Collected {
    races: Vec<RaceFinding>,
    race_keys: HashSet<(crate::race::RaceKind, crate::litmus::StmtId, crate::litmus::StmtId)>,
    divergences: Vec<DivergenceFinding>,
    div_keys: HashSet<Vec<(u32, u32)>>,
    assertion_witness: Option<CanonicalExec>,
    assertion_decided: bool,
    executions: Vec<CanonicalExec>,
    graphs: Vec<ExecutionGraph>,
    seen: HashSet<CanonicalExec>,
    duplicates: Vec<CanonicalExec>,
}

struct Engine<'p> {
    p: &'p Program,
    opts: ExploreOpts,
    stop: AtomicBool,
    executions: AtomicU64,
    max_events: AtomicU64,
    events_added: AtomicU64,
    races_found: AtomicU64,
    divergent: AtomicU64,
    bound_exhausted: AtomicU64,
    live: Arc<LiveCounter>,
    collected: Mutex<Collected>,
    queue: Mutex<Vec<(Tracked, u32, Option<EventId>)>>,
    in_flight: AtomicUsize,
}

#[derive(Default)]
struct LiveCounter {
    live: AtomicUsize,
    peak: AtomicUsize,
}

impl LiveCounter {
    fn inc(&self) {
        let now = self.live.fetch_add(1, Relaxed) + 1;
        self.peak.fetch_max(now, Relaxed);
    }

    fn dec(&self) {
        self.live.fetch_sub(1, Relaxed);
    }
}

/// An execution graph whose lifetime is counted, so tests can assert the
/// depth-bounded space claim.
struct Tracked {
    g: ExecutionGraph,
    ctr: Arc<LiveCounter>,
}

impl Tracked {
    fn new(g: ExecutionGraph, ctr: &Arc<LiveCounter>) -> Tracked {
        ctr.inc();
        Tracked { g, ctr: Arc::clone(ctr) }
    }
}

impl Drop for Tracked {
    fn drop(&mut self) {
        self.ctr.dec();
    }
}

impl<'p> Engine<'p> {
    fn new(p: &'p Program, opts: ExploreOpts) -> Engine<'p> {
        Engine {
            p,
            opts,
            stop: AtomicBool::new(false),
            executions: AtomicU64::new(0),
            max_events: AtomicU64::new(0),
            events_added: AtomicU64::new(0),
            races_found: AtomicU64::new(0),
            divergent: AtomicU64::new(0),
            bound_exhausted: AtomicU64::new(0),
            live: Arc::new(LiveCounter::default()),
            collected: Mutex::new(Collected {
                races: Vec::new(),
                race_keys: HashSet::new(),
                divergences: Vec::new(),
                div_keys: HashSet::new(),
                assertion_witness: None,
                assertion_decided: false,
                executions: Vec::new(),
                graphs: Vec::new(),
                seen: HashSet::new(),
                duplicates: Vec::new(),
            }),
            queue: Mutex::new(Vec::new()),
            in_flight: AtomicUsize::new(0),
        }
    }

    fn run(self, initial: ExecutionGraph) -> RunReport {
        let root = Tracked::new(initial, &self.live);
        if self.opts.jobs <= 1 {
            self.explore(root, 0, None);
        } else {
            // Seed the queue by fanning out the first few levels, then let
            // workers drain whole subtrees.
            const SEED_DEPTH: u32 = 4;
            self.in_flight.fetch_add(1, Relaxed);
            self.queue.lock().unwrap().push((root, SEED_DEPTH, None));
            std::thread::scope(|scope| {
                for _ in 0..self.opts.jobs {
                    scope.spawn(|| loop {
                        let item = self.queue.lock().unwrap().pop();
                        match item {
                            Some((g, seed, check)) => {
                                self.explore(g, seed, check);
                                self.in_flight.fetch_sub(1, Relaxed);
                            }
                            None => {
                                if self.in_flight.load(Relaxed) == 0 {
                                    return;
                                }
                                std::thread::yield_now();
                            }
                        }
                    });
                }
            });
        }

        let collected = self.collected.into_inner().unwrap();
        let mut races = collected.races;
        let mut divergences = collected.divergences;
        if self.opts.jobs > 1 {
            // Worker interleaving perturbs detection order; normalize.
            races.sort_by_key(|r| r.key());
            divergences.sort_by_key(|d| d.key());
        }
        let assertion = self.p.assertion.as_ref().map(|a| {
            let verdict = match (a.quant, collected.assertion_decided) {
                (Quantifier::Forall, true) => AssertionVerdict::ForallViolated,
                (Quantifier::Forall, false) => AssertionVerdict::ForallHeld,
                (Quantifier::Exists, true) => AssertionVerdict::ExistsWitnessed,
                (Quantifier::Exists, false) => AssertionVerdict::ExistsUnsatisfied,
            };
            AssertionReport { quant: a.quant, verdict, witness: collected.assertion_witness.clone() }
        });
        RunReport {
            stats: Stats {
                executions: self.executions.load(Relaxed),
                max_events: self.max_events.load(Relaxed),
                events_added: self.events_added.load(Relaxed),
                races_found: self.races_found.load(Relaxed),
                divergent_branches: self.divergent.load(Relaxed),
                bound_exhausted_branches: self.bound_exhausted.load(Relaxed),
                peak_live_graphs: self.live.peak.load(Relaxed),
                truncated: self.stop.load(Relaxed)
                    && self.opts.max_execs.is_some_and(|m| self.executions.load(Relaxed) >= m),
            },
            races,
            divergences,
            assertion,
            executions: collected.executions,
            graphs: collected.graphs,
            duplicate_executions: collected.duplicates,
        }
    }

    fn stopped(&self) -> bool {
        self.stop.load(Relaxed)
    }

    fn dispatch(&self, g: Tracked, seed: u32, check_added: Option<EventId>) {
        if seed > 0 && self.opts.jobs > 1 {
            self.in_flight.fetch_add(1, Relaxed);
            self.queue.lock().unwrap().push((g, seed - 1, check_added));
        } else {
            self.explore(g, 0, check_added);
        }
    }

    /// One recursion level of the search. Owns its graph; single-branch
    /// events (fences) are applied in place instead of recursing.
    /// `check_added` is a just-added read whose race check (Alg. 1 runs it
    /// right after addRF, before the consistency gates) shares this level's
    /// relation computation.
    fn explore(&self, mut tg: Tracked, seed: u32, mut check_added: Option<EventId>) {
        loop {
            if self.stopped() {
                return;
            }
            let rels = crate::relations::RelationSet::compute(&tg.g);
            if let Some(added) = check_added.take() {
                self.race_check_with(&tg.g, &rels, added);
                if self.stopped() {
                    return;
                }
            }
            if !consistency::is_consistent_with(&tg.g, &rels) {
                return;
            }
            match sched::next_event(self.p, &tg.g) {
                NextEvent::Done => {
                    self.finish_execution(&tg.g);
                    return;
                }
                NextEvent::Blocked { barrier, bound } => {
                    self.finish_blocked(&tg.g, barrier, bound);
                    return;
                }
                NextEvent::Next(op) => match op.kind.clone() {
                    PendingKind::Fence { ord, sco } => {
                        self.events_added.fetch_add(1, Relaxed);
                        tg.g
                            .add_event(NewEvent {
                                tid: op.tid,
                                po_idx: op.po_idx,
                                op: OpKind::F,
                                loc: None,
                                ord,
                                sco,
                                val: None,
                                rmw_pair: None,
                                stmt: Some(op.stmt),
                                await_target: None,
                            })
                            .expect("scheduler produces well-formed events");
                        continue;
                    }
                    PendingKind::Read { loc, ord, sco, await_target, .. } => {
                        // Sources in insertion order, initializing write
                        // first; awaits only observe their target value.
                        let sources: Vec<EventId> = tg
                            .g
                            .writes_on(loc)
                            .filter(|w| await_target.is_none_or(|t| w.val == Some(t)))
                            .map(|w| w.id)
                            .collect();
                        let last = sources.len();
                        let mut tg = Some(tg);
                        for (i, w) in sources.into_iter().enumerate() {
                            if self.stopped() {
                                return;
                            }
                            self.events_added.fetch_add(1, Relaxed);
                            let parent = tg.as_ref().unwrap();
                            let mut child = Tracked::new(parent.g.clone(), &self.live);
                            let r = child
                                .g
                                .add_event(NewEvent {
                                    tid: op.tid,
                                    po_idx: op.po_idx,
                                    op: OpKind::R,
                                    loc: Some(loc),
                                    ord,
                                    sco,
                                    val: None,
                                    rmw_pair: None,
                                    stmt: Some(op.stmt),
                                    await_target,
                                })
                                .expect("scheduler produces well-formed events");
                            child.g.set_rf(w, r).expect("same-location source");
                            // The last sibling does not need the parent.
                            if i + 1 == last {
                                tg = None;
                            }
                            self.dispatch(child, seed, Some(r));
                        }
                        return;
                    }
                    PendingKind::Write { loc, ord, sco, val, rmw_read } => {
                        self.events_added.fetch_add(1, Relaxed);
                        let w = tg
                            .g
                            .add_event(NewEvent {
                                tid: op.tid,
                                po_idx: op.po_idx,
                                op: OpKind::W,
                                loc: Some(loc),
                                ord,
                                sco,
                                val: Some(val),
                                rmw_pair: rmw_read,
                                stmt: Some(op.stmt),
                                await_target: None,
                            })
                            .expect("scheduler produces well-formed events");
                        // Races are independent of the coherence placement;
                        // check once, before placing.
                        self.race_check(&tg.g, w);
                        self.write_branches(tg, w, seed);
                        return;
                    }
                },
            }
        }
    }

    /// The branch fan of a freshly added, still co-unplaced write: one child
    /// per coherence placement (co-maximal first), then one child per
    /// accepted postponed-read swap (Alg. 2). The parent graph is handed to
    /// the last sibling, so a branch chain holds one live graph per level.
    fn write_branches(&self, tg: Tracked, w: EventId, seed: u32) {
        enum Branch {
            Place(usize),
            Swap(EventId, Vec<bool>, usize),
        }
        let g = &tg.g;
        let mut branches: Vec<Branch> =
            g.co_positions(w).into_iter().map(Branch::Place).collect();

        // Alg. 2: offer the write to every reversible same-location read
        // outside its porf-prefix whose deleted set passes the optimality
        // check.
        let w_ev = g.event(w).expect("write in graph");
        let loc = w_ev.loc.expect("write has location");
        let prefix = g.porf_prefix(w);
        for (i, r) in g.events().iter().enumerate() {
            let eligible = r.is_read()
                && r.loc == Some(loc)
                && r.reversible
                && !prefix[i]
                && r.await_target.is_none_or(|t| w_ev.val == Some(t));
            if !eligible {
                continue;
            }
            // Deleted = events after the read that are not in the write's
            // porf-prefix (the write itself is in its own prefix).
            let deleted: Vec<EventId> = g
                .events()
                .iter()
                .enumerate()
                .filter(|(j, e)| e.exe_stamp > r.exe_stamp && !prefix[*j])
                .map(|(_, e)| e.id)
                .collect();
            debug_assert_eq!(deleted, recompute_deleted(g, r.id, w), "Deleted set definition");
            if !check_optimal(g, &deleted, r.id, w, &prefix) {
                continue;
            }
            let keep: Vec<bool> =
                g.events().iter().map(|e| !deleted.contains(&e.id)).collect();
            // The postponed write takes every coherence position in the
            // restricted chain, co-maximal first: the swap branches differ
            // from each other and from the placement branches in a co edge.
            for pos in g.restricted_co_positions(&keep, w) {
                branches.push(Branch::Swap(r.id, keep.clone(), pos));
            }
        }

        let last = branches.len();
        let mut tg = Some(tg);
        for (i, b) in branches.into_iter().enumerate() {
            if self.stopped() {
                return;
            }
            let parent = &tg.as_ref().unwrap().g;
            let child = match b {
                Branch::Place(pos) => {
                    let mut c = parent.clone();
                    c.place_co(w, pos).expect("position in range");
                    c
                }
                Branch::Swap(r, keep, pos) => {
                    parent.revisit(&keep, w, r, pos).expect("revisit preconditions hold")
                }
            };
            let child = Tracked::new(child, &self.live);
            if i + 1 == last {
                tg = None;
            }
            self.dispatch(child, seed, None);
        }
    }

    fn race_check(&self, g: &ExecutionGraph, added: EventId) {
        let rels = crate::relations::RelationSet::compute(g);
        self.race_check_with(g, &rels, added);
    }

    fn race_check_with(
        &self,
        g: &ExecutionGraph,
        rels: &crate::relations::RelationSet,
        added: EventId,
    ) {
        let findings = crate::race::check_race_with(self.p, g, rels, added);
        if findings.is_empty() {
            return;
        }
        self.races_found.fetch_add(findings.len() as u64, Relaxed);
        let mut c = self.collected.lock().unwrap();
        for f in findings {
            if c.race_keys.insert(f.key()) {
                c.races.push(f);
            }
        }
        match self.opts.on_race {
            RacePolicy::Continue => {}
            RacePolicy::Stop | RacePolicy::Repair => {
                self.stop.store(true, Relaxed);
            }
        }
    }

    fn finish_execution(&self, g: &ExecutionGraph) {
        let n = self.executions.fetch_add(1, Relaxed) + 1;
        self.max_events.fetch_max(g.len() as u64, Relaxed);
        if self.opts.max_execs.is_some_and(|m| n >= m) {
            self.stop.store(true, Relaxed);
        }
        let mut c = self.collected.lock().unwrap();
        if self.opts.collect_executions {
            let canon = g.canonical();
            if !c.seen.insert(canon.clone()) {
                c.duplicates.push(canon.clone());
            }
            c.executions.push(canon);
        }
        if self.opts.collect_graphs {
            c.graphs.push(g.clone());
        }
        if let Some(a) = &self.p.assertion {
            let regs = sched::final_registers(self.p, g);
            let holds = a.cond.eval(&regs);
            let decided = match a.quant {
                Quantifier::Forall => !holds,
                Quantifier::Exists => holds,
            };
            if decided && !c.assertion_decided {
                c.assertion_decided = true;
                c.assertion_witness = Some(g.canonical());
                if self.opts.stop_on_assertion {
                    self.stop.store(true, Relaxed);
                }
            }
        }
    }

    fn finish_blocked(&self, g: &ExecutionGraph, barrier: Vec<BarrierStall>, bound: Vec<Tid>) {
        self.max_events.fetch_max(g.len() as u64, Relaxed);
        if barrier.is_empty() {
            // Bound exhaustion only; not a divergence.
            let _ = bound;
            self.bound_exhausted.fetch_add(1, Relaxed);
            return;
        }
        self.divergent.fetch_add(1, Relaxed);
        let finding = DivergenceFinding { stalls: barrier, witness: g.canonical() };
        let mut c = self.collected.lock().unwrap();
        if c.div_keys.insert(finding.key()) {
            c.divergences.push(finding);
        }
        drop(c);
        if matches!(self.opts.on_race, RacePolicy::Stop) {
            self.stop.store(true, Relaxed);
        }
    }
}

/// Alg. 3: a swap is optimal iff no deleted read reads from a deleted
/// later write, and neither a deleted write nor the source of a deleted
/// read is co-dominated by a write already meant to stay (added before the
/// read, or in the postponed write's porf-prefix).
fn check_optimal(
    g: &ExecutionGraph,
    deleted: &[EventId],
    r: EventId,
    w: EventId,
    w_prefix: &[bool],
) -> bool {
    let _ = w;
    let mut all: Vec<EventId> = deleted.to_vec();
    all.push(r);
    // Iterate in insertion order.
    all.sort_by_key(|id| g.event(*id).unwrap().exe_stamp);
    for e_id in all {
        let e = g.event(e_id).unwrap();
        let co_subject = match e.op {
            OpKind::R => {
                let src = g.rf_of(e_id).expect("reads have sources");
                if e.exe_stamp < g.event(src).unwrap().exe_stamp && deleted.contains(&src) {
                    return false;
                }
                src
            }
            OpKind::W => e_id,
            OpKind::F => continue,
        };
        // Eset: events inserted before e, plus the write's porf-prefix.
        let subj = g.event(co_subject).unwrap();
        let chain = g.co_chain(subj.loc.expect("co subject has location"));
        let Some(pos) = chain.iter().position(|x| *x == co_subject) else {
            continue;
        };
        for later in &chain[pos + 1..] {
            let later_ev = g.event(*later).unwrap();
            let in_eset = later_ev.exe_stamp < e.exe_stamp
                || w_prefix[g.idx_of(*later).unwrap()];
            if in_eset {
                return false;
            }
        }
    }
    true
}

/// Independent recomputation of the Deleted set for the debug cross-check.
fn recompute_deleted(g: &ExecutionGraph, r: EventId, w: EventId) -> Vec<EventId> {
    let r_stamp = g.event(r).unwrap().exe_stamp;
    let prefix_ids = g.porf_prefix_ids(w);
    g.events()
        .iter()
        .filter(|e| e.exe_stamp > r_stamp && !prefix_ids.contains(&e.id))
        .map(|e| e.id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::OpKind;
    use crate::litmus::{parse, prepare};
    use crate::scope::{MemOrder, Scope};

    const SEG: &str = "
grid 1, 2;
X = 0;
Y = 0;
thread<0, 0> {
    X^cta_rel = 1;
    Y^cta_rel = 1;
}
thread<0, 0> {
    a = Y^cta_na;
    b = X^cta_acq;
}
exists (a == 1 && b == 1);
";

    fn collect_opts() -> ExploreOpts {
        ExploreOpts {
            on_race: RacePolicy::Continue,
            stop_on_assertion: false,
            collect_executions: true,
            collect_graphs: true,
            ..Default::default()
        }
    }

    #[test]
    fn seg_has_four_executions_and_the_witness() {
        let (p, _) = prepare(SEG, 2).unwrap();
        let report = explore(&p, collect_opts());
        assert_eq!(report.stats.executions, 4);
        assert!(report.duplicate_executions.is_empty());
        let a = report.assertion.unwrap();
        assert_eq!(a.verdict, AssertionVerdict::ExistsWitnessed);
        // The witness reads both fields from thread 1's writes: a = 1, b = 1.
        let w = a.witness.unwrap();
        let x = p.loc_id("X").unwrap();
        let y = p.loc_id("Y").unwrap();
        for e in &w.events {
            if e.tid == 2 {
                assert_eq!(e.val, Some(1));
            }
        }
        assert_eq!(w.rf[&(2, 0)], (1, 1), "a reads thread 1's write of Y");
        assert_eq!(w.rf[&(2, 1)], (1, 0), "b reads thread 1's write of X");
        let _ = (x, y);
        // One data race on Y: the non-atomic read against the release write.
        assert_eq!(report.races.len(), 1);
        assert_eq!(report.races[0].kind, crate::race::RaceKind::Data);
        assert_eq!(report.races[0].loc_name, "Y");
    }

    #[test]
    fn empty_program_has_one_init_only_execution() {
        let (p, _) = prepare("grid 1, 1;\nthread<0, 0> { }\n", 2).unwrap();
        let report = explore(&p, collect_opts());
        assert_eq!(report.stats.executions, 1);
        assert!(report.races.is_empty());
        assert!(report.divergences.is_empty());
    }

    /// Build the two pre-swap graphs of the worked SEG example by hand, in
    /// the published insertion order (1) R(Y,0), (2) W(X,1), (3) R(X,_),
    /// (4) W(Y,1) with the write still co-unplaced, and drive the optimality
    /// check on the swap of (1) onto (4).
    fn seg_pre_swap(read_x_from_init: bool) -> (crate::litmus::Program, ExecutionGraph, [EventId; 4]) {
        let p = parse(SEG).unwrap();
        let mut g = ExecutionGraph::initial(&p);
        let x = p.loc_id("X").unwrap();
        let y = p.loc_id("Y").unwrap();
        let init_x = g.co_chain(x)[0];
        let init_y = g.co_chain(y)[0];
        let ev = |op, loc, ord, val| NewEvent {
            tid: crate::scope::Tid(0),
            po_idx: 0,
            op,
            loc: Some(loc),
            ord,
            sco: Scope::Cta,
            val,
            rmw_pair: None,
            stmt: None,
            await_target: None,
        };
        let e1 = g
            .add_event(NewEvent {
                tid: crate::scope::Tid(2),
                po_idx: 0,
                ..ev(OpKind::R, y, MemOrder::Na, None)
            })
            .unwrap();
        g.set_rf(init_y, e1).unwrap();
        let e2 = g
            .add_event(NewEvent {
                tid: crate::scope::Tid(1),
                po_idx: 0,
                val: Some(1),
                ..ev(OpKind::W, x, MemOrder::Rel, None)
            })
            .unwrap();
        g.place_co(e2, 1).unwrap();
        let e3 = g
            .add_event(NewEvent {
                tid: crate::scope::Tid(2),
                po_idx: 1,
                ..ev(OpKind::R, x, MemOrder::Acq, None)
            })
            .unwrap();
        g.set_rf(if read_x_from_init { init_x } else { e2 }, e3).unwrap();
        let e4 = g
            .add_event(NewEvent {
                tid: crate::scope::Tid(1),
                po_idx: 1,
                val: Some(1),
                ..ev(OpKind::W, y, MemOrder::Rel, None)
            })
            .unwrap();
        // (4) is deliberately not co-placed: the swap is considered before
        // placement.
        (p, g, [e1, e2, e3, e4])
    }

    #[test]
    fn porf_prefix_of_the_postponed_write() {
        let (_, g, [e1, e2, e3, e4]) = seg_pre_swap(false);
        let prefix = g.porf_prefix_ids(e4);
        // Both initializing writes, the po-earlier write (2), and (4) itself.
        assert_eq!(prefix.len(), 4);
        assert!(prefix.contains(&e2));
        assert!(prefix.contains(&e4));
        assert!(!prefix.contains(&e1));
        assert!(!prefix.contains(&e3));
    }

    #[test]
    fn swap_accepted_when_deleted_read_saw_co_maximal_write() {
        // The G4 shape: (3) reads (2), which is co-maximal on X.
        let (_, g, [e1, _e2, e3, e4]) = seg_pre_swap(false);
        let prefix = g.porf_prefix(e4);
        let deleted = vec![e3];
        assert!(check_optimal(&g, &deleted, e1, e4, &prefix));

        // Applying the swap yields the G5 shape: (3) deleted, (1) now reads
        // value 1 from (4), and (4) is co-maximal on Y.
        let keep: Vec<bool> = g.events().iter().map(|e| e.id != e3).collect();
        let g5 = g.revisit(&keep, e4, e1, 1).unwrap();
        assert_eq!(g5.program_event_count(), 3);
        assert_eq!(g5.rf_of(e1), Some(e4));
        assert_eq!(g5.event(e1).unwrap().val, Some(1));
        assert!(g5.co_maximal(e4));
        assert!(g5.reversed(e1), "the swapped read observes an exe-later write");
        assert!(consistency::is_consistent(&g5));
    }

    #[test]
    fn swap_rejected_when_deleted_read_saw_dominated_write() {
        // The G7 shape: (3) reads the initial write of X, which (2)
        // co-dominates, so the swap would duplicate an execution reachable
        // elsewhere.
        let (_, g, [e1, _e2, e3, e4]) = seg_pre_swap(true);
        let prefix = g.porf_prefix(e4);
        let deleted = vec![e3];
        assert!(!check_optimal(&g, &deleted, e1, e4, &prefix));
    }

    #[test]
    fn exploring_from_the_swapped_graph_finds_both_tails() {
        // From the G5 shape the read on X is the only next event; it can
        // observe the initial write or (2), giving the G8 and G6 endings.
        let (p, g, [e1, e2, e3, e4]) = seg_pre_swap(false);
        let keep: Vec<bool> = g.events().iter().map(|e| e.id != e3).collect();
        let g5 = g.revisit(&keep, e4, e1, 1).unwrap();
        let report = explore_from(&p, g5, collect_opts());
        assert_eq!(report.stats.executions, 2);
        let vals: std::collections::BTreeSet<i64> = report
            .graphs
            .iter()
            .map(|g| {
                g.events()
                    .iter()
                    .find(|e| e.tid.0 == 2 && e.po_idx == 1)
                    .and_then(|e| e.val)
                    .unwrap()
            })
            .collect();
        assert_eq!(vals.into_iter().collect::<Vec<_>>(), vec![0, 1]);
        let _ = e2;
    }

    #[test]
    fn last_of_g_picks_the_last_added_acquire_read() {
        // The G6 shape: full execution after the swap; the read of X is the
        // scheduler-order maximum among porf-maximal events. The maximal set
        // is recomputed here by brute force.
        let (p, g, [e1, e2, e3, e4]) = seg_pre_swap(false);
        let keep: Vec<bool> = g.events().iter().map(|e| e.id != e3).collect();
        let mut g6 = g.revisit(&keep, e4, e1, 1).unwrap();
        let x = p.loc_id("X").unwrap();
        let e5 = g6
            .add_event(NewEvent {
                tid: crate::scope::Tid(2),
                po_idx: 1,
                op: OpKind::R,
                loc: Some(x),
                ord: MemOrder::Acq,
                sco: Scope::Cta,
                val: None,
                rmw_pair: None,
                stmt: None,
                await_target: None,
            })
            .unwrap();
        g6.set_rf(e2, e5).unwrap();

        let maximal: Vec<EventId> = g6
            .events()
            .iter()
            .filter(|e| !e.is_init())
            .filter(|e| {
                g6.events().iter().all(|d| {
                    !g6.po(e, d) && g6.rf_of(d.id) != Some(e.id)
                })
            })
            .map(|e| e.id)
            .collect();
        assert!(maximal.contains(&e5));
        assert_eq!(g6.last_of_g(), Some(e5));

        // A single-event graph's last event is that event; an init-only
        // graph has none.
        let init_only = ExecutionGraph::initial(&p);
        assert_eq!(init_only.last_of_g(), None);
    }

    #[test]
    fn space_stays_depth_bounded_on_seg() {
        let (p, _) = prepare(SEG, 2).unwrap();
        let report = explore(&p, collect_opts());
        assert!(
            report.stats.peak_live_graphs as u64 <= report.stats.max_events + 1,
            "peak {} > {} + 1",
            report.stats.peak_live_graphs,
            report.stats.max_events
        );
    }

    #[test]
    fn max_execs_truncates_and_flags() {
        // Race-free two-thread load buffering (same CTA): 3 executions.
        let lb2 = "
grid 1, 2;
X = 0;
Y = 0;
thread<0, 0> { a = X^cta_rlx; Y^cta_rlx = 1; }
thread<0, 0> { b = Y^cta_rlx; X^cta_rlx = 1; }
";
        let (p, _) = prepare(lb2, 2).unwrap();
        let full = explore(&p, collect_opts());
        assert_eq!(full.stats.executions, 3);
        assert!(full.races.is_empty());

        let report = explore(
            &p,
            ExploreOpts {
                max_execs: Some(2),
                on_race: RacePolicy::Continue,
                stop_on_assertion: false,
                ..Default::default()
            },
        );
        assert_eq!(report.stats.executions, 2);
        assert!(report.stats.truncated);
        assert_eq!(report.verdict(), Verdict::LimitExceeded);
    }

    #[test]
    fn parallel_jobs_agree_with_sequential() {
        let (p, _) = prepare(SEG, 2).unwrap();
        let seq = explore(&p, collect_opts());
        let par = explore(&p, ExploreOpts { jobs: 4, ..collect_opts() });
        assert_eq!(seq.stats.executions, par.stats.executions);
        let s: HashSet<_> = seq.executions.iter().cloned().collect();
        let q: HashSet<_> = par.executions.iter().cloned().collect();
        assert_eq!(s, q);
        assert_eq!(seq.races.len(), par.races.len());
    }
}
