//! Barrier desugaring.
//!
//! `bar^sco(id)` becomes an arrive-and-wait counter on a fresh auxiliary
//! location, one per (scope instance, id): an acquire-release fetch-add
//! arrival followed by an acquire await-read that only ever observes the
//! participant count of the scope instance. A thread whose await cannot yet
//! be satisfied has no next event; if it is still waiting when every other
//! thread has finished, the execution is divergent.

use std::collections::BTreeMap;

use crate::scope::{MemOrder, Scope, ThreadCoord, Tid};

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesugarWarning {
    pub message: String,
}

type InstanceKey = (Scope, u32, u32, u32);

fn instance_key(sco: Scope, coord: &ThreadCoord, id: u32) -> InstanceKey {
    match sco {
        Scope::Cta => (sco, coord.cta, coord.gpu, id),
        Scope::Gpu => (sco, 0, coord.gpu, id),
        Scope::Sys => (sco, 0, 0, id),
    }
}

fn aux_name(key: InstanceKey) -> String {
    let (sco, cta, gpu, id) = key;
    match sco {
        Scope::Cta => format!("__bar_cta{cta}g{gpu}_{id}"),
        Scope::Gpu => format!("__bar_gpu{gpu}_{id}"),
        Scope::Sys => format!("__bar_sys_{id}"),
    }
}

/// Replace every barrier statement; returns the rewritten program and any
/// warnings. Runs after `unroll`, so a barrier replicated out of a loop body
/// maps onto the same counter as its source statement.
pub fn desugar_barriers(p: &Program) -> (Program, Vec<DesugarWarning>) {
    let mut out = p.clone();
    let mut warnings = Vec::new();

    // Instances in use, with the number of distinct threads that reach each.
    let mut arriving_threads: BTreeMap<InstanceKey, usize> = BTreeMap::new();
    for t in &p.threads {
        let mut stack: Vec<&Stmt> = t.body.iter().rev().collect();
        let mut seen: Vec<InstanceKey> = Vec::new();
        while let Some(s) = stack.pop() {
            match &s.kind {
                StmtKind::Barrier { sco, id } => {
                    let key = instance_key(*sco, &t.coord, *id);
                    if !seen.contains(&key) {
                        seen.push(key);
                    }
                }
                StmtKind::If { then_branch, else_branch, .. } => {
                    stack.extend(then_branch.iter());
                    stack.extend(else_branch.iter());
                }
                StmtKind::While { body, .. } => stack.extend(body.iter()),
                _ => {}
            }
        }
        for key in seen {
            *arriving_threads.entry(key).or_default() += 1;
        }
    }

    if arriving_threads.is_empty() {
        return (out, warnings);
    }

    let mut participants: BTreeMap<InstanceKey, i64> = BTreeMap::new();
    for key in arriving_threads.keys() {
        let (sco, cta, gpu, id) = *key;
        let probe = ThreadCoord { tid: Tid(1), cta, gpu };
        let n = p.scope_population(sco, &probe);
        participants.insert(*key, n as i64);

        let loc = LocId(out.locations.len() as u32);
        out.locations.push(LocationDecl { name: aux_name(*key), init: 0, repair_exempt: false });
        out.barrier_vars.insert(*key, loc);

        let arrived = arriving_threads[key];
        if n == 0 {
            warnings.push(DesugarWarning {
                message: format!("barrier {id} at scope {sco} is used by zero threads"),
            });
        } else if arrived < n {
            warnings.push(DesugarWarning {
                message: format!(
                    "barrier {id} at scope {sco} expects {n} threads but only {arrived} reach \
                     it; executions may diverge"
                ),
            });
        }
    }

    let mut fresh_reg = 0u32;
    let threads = std::mem::take(&mut out.threads);
    out.threads = threads
        .into_iter()
        .map(|t| {
            let coord = t.coord;
            let body = rewrite_block(&t.body, &mut |s: &Stmt| match &s.kind {
                StmtKind::Barrier { sco, id } => {
                    let key = instance_key(*sco, &coord, *id);
                    let loc = aux_name(key);
                    let n = fresh_reg;
                    fresh_reg += 1;
                    vec![
                        Stmt {
                            id: s.id,
                            span: s.span,
                            kind: StmtKind::Fadd {
                                reg: format!("__bar_r{n}"),
                                loc: loc.clone(),
                                sco: *sco,
                                ord: MemOrder::AcqRel,
                                operand: Expr::Const(1),
                            },
                        },
                        Stmt {
                            id: s.id,
                            span: s.span,
                            kind: StmtKind::AwaitRead {
                                reg: format!("__bar_w{n}"),
                                loc,
                                sco: *sco,
                                ord: MemOrder::Acq,
                                target: participants[&key],
                                barrier_id: Some(*id),
                            },
                        },
                    ]
                }
                _ => vec![s.clone()],
            });
            ThreadDecl { coord, body }
        })
        .collect();

    (out, warnings)
}

fn rewrite_block(stmts: &[Stmt], f: &mut impl FnMut(&Stmt) -> Vec<Stmt>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        match &s.kind {
            StmtKind::If { cond, then_branch, else_branch } => out.push(Stmt {
                id: s.id,
                span: s.span,
                kind: StmtKind::If {
                    cond: cond.clone(),
                    then_branch: rewrite_block(then_branch, f),
                    else_branch: rewrite_block(else_branch, f),
                },
            }),
            StmtKind::While { cond, body } => out.push(Stmt {
                id: s.id,
                span: s.span,
                kind: StmtKind::While { cond: cond.clone(), body: rewrite_block(body, f) },
            }),
            _ => out.extend(f(s)),
        }
    }
    out
}
