//! Events and execution graphs.
//!
//! An execution graph is a set of events together with the program order
//! (implicit in each event's thread and position), the reads-from map, the
//! per-location coherence order, and RMW pairing. Events also carry the
//! order in which they were added (`exe_stamp`); the exploration engine
//! branches on copies of a graph, so a graph value is always owned by a
//! single exploration branch.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::litmus::{LocId, Program, StmtId};
use crate::scope::{AccessView, MemOrder, Scope, ThreadCoord, Tid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    R,
    W,
    F,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::R => "R",
            OpKind::W => "W",
            OpKind::F => "F",
        })
    }
}

pub type EventId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub id: EventId,
    pub tid: Tid,
    /// Position within the thread; program order is (tid, po_idx).
    pub po_idx: u32,
    pub op: OpKind,
    pub loc: Option<LocId>,
    pub ord: MemOrder,
    pub sco: Scope,
    pub val: Option<i64>,
    pub exe_stamp: u64,
    /// Reads only: may this read still be re-targeted to a write added
    /// after it?
    pub reversible: bool,
    /// Partner event of a successful RMW (read points at write and vice
    /// versa).
    pub rmw_pair: Option<EventId>,
    /// Source statement; `None` for initializing writes.
    pub stmt: Option<StmtId>,
    /// Await reads only: the single value this read is allowed to observe.
    pub await_target: Option<i64>,
}

impl Event {
    pub fn is_read(&self) -> bool {
        self.op == OpKind::R
    }

    pub fn is_write(&self) -> bool {
        self.op == OpKind::W
    }

    pub fn is_init(&self) -> bool {
        self.tid.is_init()
    }

    /// Scheduler sort key: ascending program-order index, higher thread id
    /// first among equals, and the write half of an RMW in its read's slot,
    /// directly after the read. This is the fixed total order the scheduler
    /// draws events in, and the order `last_of_g` maximizes over. Keeping
    /// the RMW write adjacent means no same-location write of another
    /// thread is inserted between the two halves.
    pub fn nev_key(&self) -> (u32, std::cmp::Reverse<u32>, u8) {
        let rmw_write = self.is_write() && self.rmw_pair.is_some();
        let slot = if rmw_write { self.po_idx - 1 } else { self.po_idx };
        (slot, std::cmp::Reverse(self.tid.0), rmw_write as u8)
    }
}

/// Payload for adding one event.
#[derive(Debug, Clone)]
pub struct NewEvent {
    pub tid: Tid,
    pub po_idx: u32,
    pub op: OpKind,
    pub loc: Option<LocId>,
    pub ord: MemOrder,
    pub sco: Scope,
    pub val: Option<i64>,
    pub rmw_pair: Option<EventId>,
    pub stmt: Option<StmtId>,
    pub await_target: Option<i64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("event {0} not in graph")]
    NoSuchEvent(EventId),
    #[error("program-order gap: thread {tid} has {have} events, new event has index {given}")]
    PoGap { tid: Tid, have: u32, given: u32 },
    #[error("reads-from location mismatch: write on {w:?}, read on {r:?}")]
    RfLocMismatch { w: Option<LocId>, r: Option<LocId> },
    #[error("event {0} is not a read")]
    NotARead(EventId),
    #[error("event {0} is not a write")]
    NotAWrite(EventId),
    #[error("invalid coherence position {pos} (chain length {len})")]
    BadCoPosition { pos: usize, len: usize },
    #[error("event {0} already placed in coherence order")]
    AlreadyPlaced(EventId),
}

#[derive(Debug, Clone)]
pub struct ExecutionGraph {
    /// Events in insertion (`exe`) order.
    events: Vec<Event>,
    /// read id -> write id.
    rf: BTreeMap<EventId, EventId>,
    /// Per-location coherence chains (event ids, co order, init write first).
    co: BTreeMap<LocId, Vec<EventId>>,
    threads: Arc<Vec<ThreadCoord>>,
    next_id: EventId,
    next_stamp: u64,
}

impl ExecutionGraph {
    /// The starting graph: one non-atomic initializing write per location on
    /// the pseudo-thread 0, each co-minimal at its location.
    pub fn initial(program: &Program) -> Self {
        let threads = Arc::new(program.thread_coords());
        let mut g = ExecutionGraph {
            events: Vec::new(),
            rf: BTreeMap::new(),
            co: BTreeMap::new(),
            threads,
            next_id: 0,
            next_stamp: 0,
        };
        for (i, l) in program.locations.iter().enumerate() {
            let loc = LocId(i as u32);
            let id = g
                .add_event(NewEvent {
                    tid: Tid::INIT,
                    po_idx: i as u32,
                    op: OpKind::W,
                    loc: Some(loc),
                    ord: MemOrder::Na,
                    sco: Scope::Sys,
                    val: Some(l.init),
                    rmw_pair: None,
                    stmt: None,
                    await_target: None,
                })
                .expect("init events are well-formed");
            g.co.get_mut(&loc).unwrap().truncate(0);
            g.co.get_mut(&loc).unwrap().push(id);
        }
        g
    }

    pub fn thread_coord(&self, tid: Tid) -> ThreadCoord {
        self.threads[tid.0 as usize]
    }

    pub fn threads(&self) -> &Arc<Vec<ThreadCoord>> {
        &self.threads
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of non-init events.
    pub fn program_event_count(&self) -> usize {
        self.events.iter().filter(|e| !e.is_init()).count()
    }

    pub fn idx_of(&self, id: EventId) -> Option<usize> {
        self.events.iter().position(|e| e.id == id)
    }

    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    fn event_mut(&mut self, id: EventId) -> Option<&mut Event> {
        self.events.iter_mut().find(|e| e.id == id)
    }

    pub fn rf_of(&self, read: EventId) -> Option<EventId> {
        self.rf.get(&read).copied()
    }

    pub fn rf(&self) -> &BTreeMap<EventId, EventId> {
        &self.rf
    }

    pub fn co_chain(&self, loc: LocId) -> &[EventId] {
        self.co.get(&loc).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn co_chains(&self) -> &BTreeMap<LocId, Vec<EventId>> {
        &self.co
    }

    /// Events of one thread in program order (which equals insertion order
    /// within a thread).
    pub fn thread_events(&self, tid: Tid) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.tid == tid)
    }

    pub fn thread_event_count(&self, tid: Tid) -> u32 {
        self.thread_events(tid).count() as u32
    }

    /// Writes on a location in insertion order (initializing write first).
    pub fn writes_on(&self, loc: LocId) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.is_write() && e.loc == Some(loc))
    }

    /// Program order: same-thread index order, plus init events before every
    /// program event.
    pub fn po(&self, a: &Event, b: &Event) -> bool {
        if a.tid == b.tid {
            a.po_idx < b.po_idx
        } else {
            a.is_init() && !b.is_init()
        }
    }

    pub fn access_view(&self, e: &Event) -> AccessView<LocId> {
        AccessView {
            ord: e.ord,
            sco: e.sco,
            thread: self.thread_coord(e.tid),
            loc: e.loc,
        }
    }

    /// Append an event. Its po-predecessors must all be present.
    pub fn add_event(&mut self, new: NewEvent) -> Result<EventId, GraphError> {
        let have = self.thread_event_count(new.tid);
        if new.po_idx != have {
            return Err(GraphError::PoGap { tid: new.tid, have, given: new.po_idx });
        }
        let id = self.next_id;
        self.next_id += 1;
        let stamp = self.next_stamp;
        self.next_stamp += 1;
        let is_read = new.op == OpKind::R;
        self.events.push(Event {
            id,
            tid: new.tid,
            po_idx: new.po_idx,
            op: new.op,
            loc: new.loc,
            ord: new.ord,
            sco: new.sco,
            val: new.val,
            exe_stamp: stamp,
            reversible: is_read,
            rmw_pair: new.rmw_pair,
            stmt: new.stmt,
            await_target: new.await_target,
        });
        if let Some(pair) = new.rmw_pair {
            if let Some(partner) = self.event_mut(pair) {
                partner.rmw_pair = Some(id);
            }
        }
        if let Some(loc) = new.loc {
            self.co.entry(loc).or_default();
        }
        debug_assert_eq!(self.validate(), Ok(()));
        Ok(id)
    }

    /// Point `read` at `write` and propagate the written value to the read.
    pub fn set_rf(&mut self, write: EventId, read: EventId) -> Result<(), GraphError> {
        let w = self.event(write).ok_or(GraphError::NoSuchEvent(write))?;
        let r = self.event(read).ok_or(GraphError::NoSuchEvent(read))?;
        if !w.is_write() {
            return Err(GraphError::NotAWrite(write));
        }
        if !r.is_read() {
            return Err(GraphError::NotARead(read));
        }
        if w.loc != r.loc || w.loc.is_none() {
            return Err(GraphError::RfLocMismatch { w: w.loc, r: r.loc });
        }
        let val = w.val;
        self.rf.insert(read, write);
        self.event_mut(read).unwrap().val = val;
        debug_assert_eq!(self.validate(), Ok(()));
        Ok(())
    }

    /// Insert an unplaced write into its location's coherence chain at
    /// `pos` (1 = directly after the initializing write).
    pub fn place_co(&mut self, write: EventId, pos: usize) -> Result<(), GraphError> {
        let w = self.event(write).ok_or(GraphError::NoSuchEvent(write))?;
        if !w.is_write() {
            return Err(GraphError::NotAWrite(write));
        }
        let loc = w.loc.expect("writes have a location");
        let chain = self.co.entry(loc).or_default();
        if chain.contains(&write) {
            return Err(GraphError::AlreadyPlaced(write));
        }
        if pos < 1 || pos > chain.len() {
            return Err(GraphError::BadCoPosition { pos, len: chain.len() });
        }
        chain.insert(pos, write);
        debug_assert_eq!(self.validate(), Ok(()));
        Ok(())
    }

    /// All coherence positions for an unplaced write, co-maximal first.
    pub fn co_positions(&self, write: EventId) -> Vec<usize> {
        let w = self.event(write).expect("write in graph");
        let len = self.co_chain(w.loc.expect("write has location")).len();
        (1..=len).rev().collect()
    }

    /// One graph per coherence placement of `write`, co-maximal first. The
    /// caller filters by consistency.
    pub fn co_placements(&self, write: EventId) -> Vec<ExecutionGraph> {
        self.co_positions(write)
            .into_iter()
            .map(|pos| {
                let mut g = self.clone();
                g.place_co(write, pos).expect("position in range");
                g
            })
            .collect()
    }

    /// Is `write` co-maximal at its location? Events without a co entry are
    /// not considered placed.
    pub fn co_maximal(&self, write: EventId) -> bool {
        let w = self.event(write).expect("write in graph");
        self.co_chain(w.loc.expect("write has location")).last() == Some(&write)
    }

    /// The reflexive (po ∪ rf)-prefix of `of`: every event with a po/rf path
    /// into it, as a bitmask over `events()` positions.
    pub fn porf_prefix(&self, of: EventId) -> Vec<bool> {
        let n = self.events.len();
        let mut in_prefix = vec![false; n];
        let target = self.idx_of(of).expect("event in graph");
        let mut stack = vec![target];
        in_prefix[target] = true;
        while let Some(i) = stack.pop() {
            let e = &self.events[i];
            for (j, d) in self.events.iter().enumerate() {
                if !in_prefix[j] && self.po(d, e) {
                    in_prefix[j] = true;
                    stack.push(j);
                }
            }
            if e.is_read() {
                if let Some(w) = self.rf_of(e.id) {
                    let j = self.idx_of(w).unwrap();
                    if !in_prefix[j] {
                        in_prefix[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        in_prefix
    }

    pub fn porf_prefix_ids(&self, of: EventId) -> Vec<EventId> {
        self.porf_prefix(of)
            .iter()
            .enumerate()
            .filter(|(_, k)| **k)
            .map(|(i, _)| self.events[i].id)
            .collect()
    }

    /// Restriction to a subset of events (by position mask). Insertion order
    /// and stamps survive; rf, co, and rmw links onto removed events are
    /// dropped.
    pub fn restrict(&self, keep: &[bool]) -> ExecutionGraph {
        assert_eq!(keep.len(), self.events.len());
        let kept_ids: Vec<EventId> = self
            .events
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, e)| e.id)
            .collect();
        let events: Vec<Event> = self
            .events
            .iter()
            .filter(|e| kept_ids.contains(&e.id))
            .map(|e| {
                let mut e = e.clone();
                if let Some(p) = e.rmw_pair {
                    if !kept_ids.contains(&p) {
                        e.rmw_pair = None;
                    }
                }
                e
            })
            .collect();
        let rf = self
            .rf
            .iter()
            .filter(|(r, w)| kept_ids.contains(r) && kept_ids.contains(w))
            .map(|(r, w)| (*r, *w))
            .collect();
        let co = self
            .co
            .iter()
            .map(|(loc, chain)| {
                (*loc, chain.iter().copied().filter(|id| kept_ids.contains(id)).collect())
            })
            .collect();
        let g = ExecutionGraph {
            events,
            rf,
            co,
            threads: Arc::clone(&self.threads),
            next_id: self.next_id,
            next_stamp: self.next_stamp,
        };
        debug_assert_eq!(g.validate(), Ok(()));
        g
    }

    /// Is this read currently reading from a write that entered the
    /// execution after it? Such an rf edge can only come from a swap.
    pub fn reversed(&self, read: EventId) -> bool {
        let Some(r) = self.event(read) else { return false };
        match self.rf_of(read).and_then(|w| self.event(w)) {
            Some(w) => r.exe_stamp < w.exe_stamp,
            None => false,
        }
    }

    /// The swap at the heart of the exploration: restrict to `keep`, point
    /// `read` at `write` (both must survive), insert the write into the
    /// surviving coherence chain at `co_pos`, and permanently clear the
    /// reversible flag of every read in the write's porf-prefix. The read
    /// keeps its insertion position, so it now reads from an exe-later
    /// write.
    pub fn revisit(
        &self,
        keep: &[bool],
        write: EventId,
        read: EventId,
        co_pos: usize,
    ) -> Result<ExecutionGraph, GraphError> {
        let mut g = self.restrict(keep);
        if g.event(write).is_none() {
            return Err(GraphError::NoSuchEvent(write));
        }
        if g.event(read).is_none() {
            return Err(GraphError::NoSuchEvent(read));
        }
        let loc = g.event(write).unwrap().loc.expect("write has location");
        if !g.co_chain(loc).contains(&write) {
            g.place_co(write, co_pos)?;
        }
        g.set_rf(write, read)?;
        // Reads now locked into the causal past of the write stay put.
        for id in g.porf_prefix_ids(write) {
            let e = g.event_mut(id).unwrap();
            if e.op == OpKind::R {
                e.reversible = false;
            }
        }
        debug_assert_eq!(g.validate(), Ok(()));
        Ok(g)
    }

    /// Coherence positions available to an unplaced write in the restriction
    /// of this graph to `keep`, co-maximal first.
    pub fn restricted_co_positions(&self, keep: &[bool], write: EventId) -> Vec<usize> {
        let w = self.event(write).expect("write in graph");
        let loc = w.loc.expect("write has location");
        let len = self
            .co_chain(loc)
            .iter()
            .filter(|id| keep[self.idx_of(**id).unwrap()])
            .count();
        (1..=len).rev().collect()
    }

    /// The last event of the graph: the scheduler-order maximum among
    /// (po ∪ rf)-maximal program events, or `None` for an init-only graph.
    pub fn last_of_g(&self) -> Option<EventId> {
        let mut best: Option<&Event> = None;
        for e in &self.events {
            if e.is_init() || !self.porf_maximal(e) {
                continue;
            }
            match best {
                Some(b) if b.nev_key() >= e.nev_key() => {}
                _ => best = Some(e),
            }
        }
        best.map(|e| e.id)
    }

    fn porf_maximal(&self, e: &Event) -> bool {
        for d in &self.events {
            if self.po(e, d) {
                return false;
            }
            if d.is_read() && self.rf_of(d.id) == Some(e.id) {
                return false;
            }
        }
        true
    }

    /// Graph-shape invariants, checked after every mutation in debug builds.
    pub fn validate(&self) -> Result<(), String> {
        let mut ids = std::collections::HashSet::with_capacity(self.events.len());
        let mut last_stamp: Option<u64> = None;
        let mut per_thread: BTreeMap<Tid, u32> = BTreeMap::new();
        for e in &self.events {
            if !ids.insert(e.id) {
                return Err(format!("duplicate event id {}", e.id));
            }
            if last_stamp.is_some_and(|s| s >= e.exe_stamp) {
                return Err("exe stamps not strictly increasing".into());
            }
            last_stamp = Some(e.exe_stamp);
            // Events of each thread appear in program order (so exe is
            // po-compatible) with contiguous indices.
            let next = per_thread.entry(e.tid).or_insert(0);
            if e.po_idx != *next {
                return Err(format!("thread {} has a program-order gap", e.tid));
            }
            *next += 1;
            if e.op == OpKind::F && (e.loc.is_some() || e.val.is_some()) {
                return Err(format!("fence {} carries a location or value", e.id));
            }
            if e.op != OpKind::F && e.loc.is_none() {
                return Err(format!("memory event {} has no location", e.id));
            }
        }
        for (r, w) in &self.rf {
            let r = self.event(*r).ok_or("rf reader missing")?;
            let w = self.event(*w).ok_or("rf writer missing")?;
            if !r.is_read() || !w.is_write() || r.loc != w.loc {
                return Err(format!("malformed rf {} -> {}", w.id, r.id));
            }
            if r.val != w.val {
                return Err(format!("rf value mismatch {} -> {}", w.id, r.id));
            }
        }
        for (loc, chain) in &self.co {
            let mut seen = Vec::new();
            for id in chain {
                let e = self.event(*id).ok_or("co entry missing")?;
                if !e.is_write() || e.loc != Some(*loc) {
                    return Err(format!("co chain for {loc:?} contains non-write {id}"));
                }
                if seen.contains(id) {
                    return Err(format!("duplicate co entry {id}"));
                }
                seen.push(*id);
            }
            if let Some(first) = chain.first() {
                if !self.event(*first).unwrap().is_init()
                    && self.events.iter().any(|e| e.is_init() && e.loc == Some(*loc))
                {
                    return Err(format!("init write not co-minimal at {loc:?}"));
                }
            }
        }
        for e in &self.events {
            if let Some(p) = e.rmw_pair {
                let p = self.event(p).ok_or("rmw partner missing")?;
                if p.rmw_pair != Some(e.id) || p.tid != e.tid {
                    return Err(format!("rmw pair {} <-> {} not mutual", e.id, p.id));
                }
                let (r, w) = if e.is_read() { (e, p) } else { (p, e) };
                if !r.is_read() || !w.is_write() || w.po_idx != r.po_idx + 1 {
                    return Err(format!("rmw pair {} <-> {} not po-adjacent", r.id, w.id));
                }
            }
        }
        Ok(())
    }

    /// Canonical identity: event tuples plus rf and per-location co, with
    /// insertion order deliberately excluded. Two exploration branches that
    /// build the same execution along different insertion orders canonicalize
    /// identically.
    pub fn canonical(&self) -> CanonicalExec {
        let key = |id: EventId| {
            let e = self.event(id).unwrap();
            (e.tid.0, e.po_idx)
        };
        let mut events: Vec<CanonicalEvent> = self
            .events
            .iter()
            .map(|e| CanonicalEvent {
                tid: e.tid.0,
                po_idx: e.po_idx,
                op: e.op,
                loc: e.loc,
                ord: e.ord,
                sco: e.sco,
                val: e.val,
                rmw: e.rmw_pair.is_some(),
            })
            .collect();
        events.sort_unstable_by_key(|e| (e.tid, e.po_idx));
        let rf = self.rf.iter().map(|(r, w)| (key(*r), key(*w))).collect();
        let co = self
            .co
            .iter()
            .map(|(loc, chain)| (*loc, chain.iter().map(|id| key(*id)).collect()))
            .collect();
        CanonicalExec { events, rf, co }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonicalEvent {
    pub tid: u32,
    pub po_idx: u32,
    pub op: OpKind,
    pub loc: Option<LocId>,
    pub ord: MemOrder,
    pub sco: Scope,
    pub val: Option<i64>,
    pub rmw: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalExec {
    pub events: Vec<CanonicalEvent>,
    pub rf: BTreeMap<(u32, u32), (u32, u32)>,
    pub co: BTreeMap<LocId, Vec<(u32, u32)>>,
}

impl fmt::Display for CanonicalExec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            write!(f, "{}[{}.{}]", e.op, e.tid, e.po_idx)?;
            if let Some(loc) = e.loc {
                write!(f, " x{}", loc.0)?;
            }
            if let Some(v) = e.val {
                write!(f, "={v}")?;
            }
            writeln!(f)?;
        }
        for (r, w) in &self.rf {
            writeln!(f, "rf ({}.{}) <- ({}.{})", r.0, r.1, w.0, w.1)?;
        }
        for (loc, chain) in &self.co {
            write!(f, "co x{}:", loc.0)?;
            for k in chain {
                write!(f, " ({}.{})", k.0, k.1)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
