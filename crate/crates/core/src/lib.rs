//! A stateless model checker for small scoped concurrent programs under a
//! scoped RC11 memory model.
//!
//! Programs are written in a litmus DSL (`litmus`): a grid of hierarchically
//! organized threads performing scoped memory accesses, fences, and
//! barriers. The checker (`dpor`) enumerates every consistent execution
//! graph exactly once, evaluating assertions and flagging data races,
//! heterogeneous races, and barrier divergence, and can repair races by
//! strengthening scopes and atomicity (`race`). `oracle` holds the
//! brute-force enumerator and the unique-predecessor computation the test
//! suite verifies the engine against.

pub mod consistency;
pub mod dot;
pub mod dpor;
pub mod graph;
pub mod litmus;
pub mod oracle;
pub mod race;
pub mod relations;
pub mod sched;
pub mod scope;

pub use dpor::{explore, ExploreOpts, RacePolicy, RunReport, Verdict};
pub use litmus::{parse, prepare, Program};
