//! DOT rendering of executions: one node per event (the init writes fused
//! into a single `[init]` node), edges for po, rf, co, and fr.

use std::fmt::Write as _;

use crate::graph::{CanonicalEvent, CanonicalExec, OpKind};
use crate::litmus::Program;

pub fn to_dot(p: &Program, exec: &CanonicalExec, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{title}\" {{");
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  node [shape=plaintext, fontname=\"monospace\"];");
    let _ = writeln!(out, "  init [label=\"[init]\"];");

    let name = |e: &CanonicalEvent| format!("e_{}_{}", e.tid, e.po_idx);
    let label = |e: &CanonicalEvent| {
        let loc = e
            .loc
            .map(|l| p.loc_name(l).to_string())
            .unwrap_or_default();
        match e.op {
            OpKind::F => format!("F^{}_{}", e.sco, e.ord),
            _ => format!(
                "{}^{}_{}({},{})",
                e.op,
                e.sco,
                e.ord,
                loc,
                e.val.map(|v| v.to_string()).unwrap_or_else(|| "?".into())
            ),
        }
    };

    let program_events: Vec<&CanonicalEvent> =
        exec.events.iter().filter(|e| e.tid != 0).collect();
    for e in &program_events {
        let _ = writeln!(out, "  {} [label=\"{}\"];", name(e), label(e));
    }

    // po: init to each thread's first event, then chains within threads.
    let mut tids: Vec<u32> = program_events.iter().map(|e| e.tid).collect();
    tids.sort_unstable();
    tids.dedup();
    for tid in tids {
        let mut chain: Vec<&&CanonicalEvent> =
            program_events.iter().filter(|e| e.tid == tid).collect();
        chain.sort_by_key(|e| e.po_idx);
        if let Some(first) = chain.first() {
            let _ = writeln!(out, "  init -> {} [style=dotted];", name(first));
        }
        for pair in chain.windows(2) {
            let _ = writeln!(out, "  {} -> {} [label=\"po\"];", name(pair[0]), name(pair[1]));
        }
    }

    let node = |key: (u32, u32)| {
        if key.0 == 0 {
            "init".to_string()
        } else {
            format!("e_{}_{}", key.0, key.1)
        }
    };
    for (r, w) in &exec.rf {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"rf\", color=forestgreen, fontcolor=forestgreen];",
            node(*w),
            node(*r)
        );
    }
    for chain in exec.co.values() {
        for pair in chain.windows(2) {
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"co\", color=orange3, fontcolor=orange3];",
                node(pair[0]),
                node(pair[1])
            );
        }
    }
    // fr = rf⁻¹ ; co.
    for (r, w) in &exec.rf {
        for chain in exec.co.values() {
            if let Some(pos) = chain.iter().position(|k| k == w) {
                for later in &chain[pos + 1..] {
                    let _ = writeln!(
                        out,
                        "  {} -> {} [label=\"fr\", color=crimson, fontcolor=crimson, style=dashed];",
                        node(*r),
                        node(*later)
                    );
                }
            }
        }
    }
    let _ = writeln!(out, "}}");
    out
}
