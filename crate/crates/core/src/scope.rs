//! Thread hierarchy, scope lattice, memory-order lattice, and the
//! scope-inclusion predicate.
//!
//! Threads are organized hierarchically: a CTA is a set of threads, a GPU is
//! a set of CTAs, and the system contains every GPU. An access is annotated
//! with a scope naming the level at which it is willing to synchronize.
//! Two atomic accesses can synchronize only when they are *inclusive*: each
//! access's scope (centered at its own thread) contains the other access's
//! thread, and, if both access memory, they touch the same location.

use std::fmt;

/// Thread identifier. Thread 0 is reserved for the initialization
/// pseudo-thread that owns the initializing write of every location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tid(pub u32);

impl Tid {
    pub const INIT: Tid = Tid(0);

    pub fn is_init(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// A thread's position in the hierarchy: its CTA and GPU identifiers.
///
/// The init pseudo-thread (tid 0) belongs to no CTA or GPU; its coordinate
/// fields are ignored and it is outside every scope's thread set except sys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreadCoord {
    pub tid: Tid,
    pub cta: u32,
    pub gpu: u32,
}

impl ThreadCoord {
    pub fn new(tid: Tid, cta: u32, gpu: u32) -> Self {
        ThreadCoord { tid, cta, gpu }
    }

    pub fn init() -> Self {
        ThreadCoord { tid: Tid::INIT, cta: 0, gpu: 0 }
    }

    pub fn is_init(&self) -> bool {
        self.tid.is_init()
    }
}

/// Synchronization scope, totally ordered cta < gpu < sys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Cta,
    Gpu,
    Sys,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Cta => "cta",
            Scope::Gpu => "gpu",
            Scope::Sys => "sys",
        })
    }
}

/// Memory order. The strength lattice is partial:
/// na < rlx < {rel, acq} < acq_rel < sc, with rel and acq incomparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemOrder {
    Na,
    Rlx,
    Acq,
    Rel,
    AcqRel,
    Sc,
}

impl MemOrder {
    /// True iff `self` is at least as strong as `other` (reflexive,
    /// transitive; rel and acq are incomparable).
    pub fn at_least(self, other: MemOrder) -> bool {
        use MemOrder::*;
        match other {
            Na => true,
            Rlx => self != Na,
            Acq => matches!(self, Acq | AcqRel | Sc),
            Rel => matches!(self, Rel | AcqRel | Sc),
            AcqRel => matches!(self, AcqRel | Sc),
            Sc => self == Sc,
        }
    }

    pub fn is_atomic(self) -> bool {
        self != MemOrder::Na
    }
}

impl fmt::Display for MemOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemOrder::Na => "na",
            MemOrder::Rlx => "rlx",
            MemOrder::Acq => "acq",
            MemOrder::Rel => "rel",
            MemOrder::AcqRel => "acq_rel",
            MemOrder::Sc => "sc",
        })
    }
}

/// Does the thread set named by scope `s`, centered at `owner`, contain
/// `other`?
///
/// cta: same (cta, gpu); gpu: same gpu; sys: everything. The init
/// pseudo-thread is in no set except at sys scope.
pub fn scope_includes(s: Scope, owner: &ThreadCoord, other: &ThreadCoord) -> bool {
    match s {
        Scope::Sys => true,
        _ if owner.is_init() || other.is_init() => false,
        Scope::Gpu => owner.gpu == other.gpu,
        Scope::Cta => owner.gpu == other.gpu && owner.cta == other.cta,
    }
}

/// Which quantifier to use for condition (ii) of the inclusion predicate.
///
/// `Symmetric` (the default) requires each access's scope to contain the
/// other access's thread. `Either` accepts one direction; it is provided as
/// a switch for the alternative reading of the definition but is not used by
/// the checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InclMode {
    #[default]
    Symmetric,
    Either,
}

/// One access as seen by the inclusion predicate: its order, scope, issuing
/// thread, and (for memory accesses) location.
#[derive(Debug, Clone, Copy)]
pub struct AccessView<L: Eq + Copy> {
    pub ord: MemOrder,
    pub sco: Scope,
    pub thread: ThreadCoord,
    pub loc: Option<L>,
}

/// The inclusion predicate over two accesses: (i) both atomic, (ii) the
/// scope condition per `mode`, (iii) same location when both access memory
/// (vacuous when either is a fence). Symmetric, not transitive.
pub fn inclusive_with<L: Eq + Copy>(
    mode: InclMode,
    a: &AccessView<L>,
    b: &AccessView<L>,
) -> bool {
    if !a.ord.is_atomic() || !b.ord.is_atomic() {
        return false;
    }
    let fwd = scope_includes(a.sco, &a.thread, &b.thread);
    let bwd = scope_includes(b.sco, &b.thread, &a.thread);
    let scopes_ok = match mode {
        InclMode::Symmetric => fwd && bwd,
        InclMode::Either => fwd || bwd,
    };
    if !scopes_ok {
        return false;
    }
    match (a.loc, b.loc) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// Symmetric-mode inclusion.
pub fn inclusive<L: Eq + Copy>(a: &AccessView<L>, b: &AccessView<L>) -> bool {
    inclusive_with(InclMode::Symmetric, a, b)
}

/// The smallest scope that makes `a` and `b` mutually included, used by race
/// repair.
pub fn smallest_including_scope(a: &ThreadCoord, b: &ThreadCoord) -> Scope {
    if a.gpu == b.gpu && a.cta == b.cta {
        Scope::Cta
    } else if a.gpu == b.gpu {
        Scope::Gpu
    } else {
        Scope::Sys
    }
}
