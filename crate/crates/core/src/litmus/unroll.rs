//! Loop unrolling and condition-load lowering.
//!
//! `while (c) { B }` becomes a chain of `bound` conditional iterations; an
//! iteration past the bound is replaced by a `blocked` marker, so a thread
//! that would spin further simply has no next instruction. Memory reads
//! appearing inline in conditions are lowered to reads into fresh hidden
//! registers, re-issued on every loop iteration.

use super::ast::*;

/// Unroll every loop `bound` times and lower inline condition loads. The
/// result contains no `While` statements and no `LoadInline` atoms.
pub fn unroll(p: &Program, bound: u32) -> Program {
    assert!(bound >= 1, "unroll bound must be at least 1");
    let mut out = p.clone();
    let mut fresh = Fresh { next_reg: 0, next_stmt_id: p.next_stmt_id };
    let threads = std::mem::take(&mut out.threads);
    out.threads = threads
        .into_iter()
        .map(|t| ThreadDecl { coord: t.coord, body: unroll_block(&t.body, bound, &mut fresh) })
        .collect();
    out.next_stmt_id = fresh.next_stmt_id;
    out
}

struct Fresh {
    next_reg: u32,
    next_stmt_id: u32,
}

impl Fresh {
    fn reg(&mut self) -> String {
        let r = format!("__t{}", self.next_reg);
        self.next_reg += 1;
        r
    }

    fn stmt_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt_id);
        self.next_stmt_id += 1;
        id
    }
}

fn unroll_block(stmts: &[Stmt], bound: u32, fresh: &mut Fresh) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        match &s.kind {
            StmtKind::If { cond, then_branch, else_branch } => {
                let (mut pre, cond) = lower_cond(cond, s, fresh);
                out.append(&mut pre);
                out.push(Stmt {
                    id: s.id,
                    span: s.span,
                    kind: StmtKind::If {
                        cond,
                        then_branch: unroll_block(then_branch, bound, fresh),
                        else_branch: unroll_block(else_branch, bound, fresh),
                    },
                });
            }
            StmtKind::While { cond, body } => {
                out.append(&mut expand_loop(s, cond, body, bound, fresh));
            }
            _ => out.push(s.clone()),
        }
    }
    out
}

/// One loop iteration: re-evaluate the condition, run the body, continue
/// with the next iteration inside the taken branch. `remaining == 0` leaves
/// a blocked marker in place of the loop.
fn expand_loop(
    original: &Stmt,
    cond: &Cond,
    body: &[Stmt],
    remaining: u32,
    fresh: &mut Fresh,
) -> Vec<Stmt> {
    if remaining == 0 {
        return vec![Stmt {
            id: original.id,
            span: original.span,
            kind: StmtKind::Blocked { origin: BlockOrigin::Bound },
        }];
    }
    let (mut out, lowered) = lower_cond(cond, original, fresh);
    let mut then_branch = unroll_block(body, remaining, fresh);
    then_branch.extend(expand_loop(original, cond, body, remaining - 1, fresh));
    out.push(Stmt {
        id: original.id,
        span: original.span,
        kind: StmtKind::If { cond: lowered, then_branch, else_branch: Vec::new() },
    });
    out
}

/// Replace inline loads in a condition with fresh hidden registers, emitting
/// the corresponding reads in front.
fn lower_cond(cond: &Cond, at: &Stmt, fresh: &mut Fresh) -> (Vec<Stmt>, Cond) {
    fn atom(a: &CondAtom, at: &Stmt, fresh: &mut Fresh, pre: &mut Vec<Stmt>) -> CondAtom {
        match a {
            CondAtom::LoadInline { loc, sco, ord } => {
                let reg = fresh.reg();
                pre.push(Stmt {
                    id: at.id,
                    span: at.span,
                    kind: StmtKind::Read {
                        reg: reg.clone(),
                        loc: loc.clone(),
                        sco: *sco,
                        ord: *ord,
                    },
                });
                CondAtom::Reg(reg)
            }
            other => other.clone(),
        }
    }
    fn walk(c: &Cond, at: &Stmt, fresh: &mut Fresh, pre: &mut Vec<Stmt>) -> Cond {
        match c {
            Cond::Cmp(a, op, b) => {
                Cond::Cmp(atom(a, at, fresh, pre), *op, atom(b, at, fresh, pre))
            }
            Cond::And(a, b) => Cond::And(
                Box::new(walk(a, at, fresh, pre)),
                Box::new(walk(b, at, fresh, pre)),
            ),
            Cond::Or(a, b) => Cond::Or(
                Box::new(walk(a, at, fresh, pre)),
                Box::new(walk(b, at, fresh, pre)),
            ),
            Cond::Not(a) => Cond::Not(Box::new(walk(a, at, fresh, pre))),
        }
    }
    let mut pre = Vec::new();
    let lowered = walk(cond, at, fresh, &mut pre);
    (pre, lowered)
}
