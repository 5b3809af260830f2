//! The litmus DSL frontend: parsing, pretty-printing, loop unrolling, and
//! barrier desugaring.

pub mod ast;
pub mod desugar;
pub mod parser;
pub mod printer;
pub mod unroll;

pub use ast::*;
pub use desugar::{desugar_barriers, DesugarWarning};
pub use parser::parse;
pub use printer::print;
pub use unroll::unroll;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("{0}")]
    Validate(String),
}

/// Parse, unroll, and desugar in one step; the form the checker consumes.
pub fn prepare(source: &str, unroll_bound: u32) -> Result<(Program, Vec<DesugarWarning>), FrontendError> {
    let parsed = parse(source)?;
    let unrolled = unroll(&parsed, unroll_bound);
    Ok(desugar_barriers(&unrolled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scope::{MemOrder, Scope};

    pub(crate) const SEG: &str = "
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

    #[test]
    fn parses_seg() {
        let p = parse(SEG).unwrap();
        assert_eq!(p.threads.len(), 2);
        assert_eq!(p.threads[0].body.len(), 2);
        assert_eq!(p.threads[1].body.len(), 2);
        assert_eq!(p.locations.len(), 2);
        let a = p.assertion.as_ref().unwrap();
        assert_eq!(a.quant, Quantifier::Exists);
    }

    #[test]
    fn empty_thread_body_parses() {
        let p = parse("grid 1, 1;\nthread<0, 0> { }\n").unwrap();
        assert!(p.threads[0].body.is_empty());
    }

    #[test]
    fn rejects_release_read() {
        let e = parse("grid 1, 1;\nX = 0;\nthread<0, 0> { r = X^cta_rel; }\n").unwrap_err();
        assert!(e.to_string().contains("not a valid read order"), "{e}");
    }

    #[test]
    fn rejects_acquire_write() {
        let e = parse("grid 1, 1;\nX = 0;\nthread<0, 0> { X^cta_acq = 1; }\n").unwrap_err();
        assert!(e.to_string().contains("not a valid write order"), "{e}");
    }

    #[test]
    fn rejects_unknown_location() {
        let e = parse("grid 1, 1;\nthread<0, 0> { Z^cta_rlx = 1; }\n").unwrap_err();
        assert!(e.to_string().contains("unknown location"), "{e}");
    }

    #[test]
    fn rejects_out_of_grid_cta() {
        let e = parse("grid 1, 1;\nthread<3, 0> { }\n").unwrap_err();
        assert!(e.to_string().contains("grid has 1 CTAs"), "{e}");
    }

    #[test]
    fn rejects_ambiguous_assertion_register() {
        let src = "grid 1, 2;\nX = 0;\nthread<0, 0> { a = X^cta_rlx; }\nthread<0, 0> { a = X^cta_rlx; }\nforall (a == 0);\n";
        let e = parse(src).unwrap_err();
        assert!(e.to_string().contains("more than one thread"), "{e}");
    }

    #[test]
    fn parse_error_carries_position() {
        let e = parse("grid 1, 1;\nthread<0, 0> { X^cta_rlx 1; }\n").unwrap_err();
        match e {
            FrontendError::Parse { line, col, .. } => {
                assert_eq!(line, 2);
                assert!(col > 1);
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn roundtrip_seg() {
        let p = parse(SEG).unwrap();
        let printed = print(&p);
        let reparsed = parse(&printed).unwrap();
        assert_eq!(strip_ids(&p), strip_ids(&reparsed));
    }

    /// Ids and spans are synthesized during parsing, so round-trip equality
    /// compares programs with both normalized away.
    pub(crate) fn strip_ids(p: &Program) -> Program {
        fn walk(stmts: &mut Vec<Stmt>) {
            for s in stmts.iter_mut() {
                s.id = StmtId(0);
                s.span = Span::default();
                match &mut s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        walk(then_branch);
                        walk(else_branch);
                    }
                    StmtKind::While { body, .. } => walk(body),
                    _ => {}
                }
            }
        }
        let mut q = p.clone();
        q.next_stmt_id = 0;
        for t in q.threads.iter_mut() {
            walk(&mut t.body);
        }
        q
    }

    #[test]
    fn unroll_straight_line_is_identity() {
        let p = parse(SEG).unwrap();
        for bound in [1, 2, 5] {
            assert_eq!(unroll(&p, bound), p);
        }
    }

    #[test]
    fn unroll_spinloop_two_chained_reads_then_blocked() {
        let src = "grid 1, 1;\nX = 0;\nthread<0, 0> { while (X^cta_acq == 0) { } }\n";
        let p = parse(src).unwrap();
        let u = unroll(&p, 2);
        // Expansion: r0 = X; if (r0 == 0) { r1 = X; if (r1 == 0) { blocked; } }
        let body = &u.threads[0].body;
        assert_eq!(body.len(), 2);
        assert!(matches!(body[0].kind, StmtKind::Read { .. }));
        let StmtKind::If { then_branch, else_branch, .. } = &body[1].kind else {
            panic!("expected if, got {:?}", body[1].kind);
        };
        assert!(else_branch.is_empty());
        assert_eq!(then_branch.len(), 2);
        assert!(matches!(then_branch[0].kind, StmtKind::Read { .. }));
        let StmtKind::If { then_branch: inner, .. } = &then_branch[1].kind else {
            panic!("expected nested if");
        };
        assert!(matches!(inner[0].kind, StmtKind::Blocked { .. }));
    }

    #[test]
    fn unroll_cas_lock_single_attempt() {
        let src = "grid 1, 1;\nL = 0;\nthread<0, 0> { while (RMW^cta_acq_rel(L, 0, 1) == 0) { } }\n";
        // CAS in a condition is not in the grammar; model the caslock
        // acquire loop with a read of the CAS result instead.
        let _ = src;
        let src = "grid 1, 1;\nL = 0;\nthread<0, 0> { g = 0; while (g == 0) { g = RMW^cta_acq_rel(L, 0, 1); g = g == 0; g = g == 0; } }\n";
        let p = parse(src).unwrap();
        let u = unroll(&p, 1);
        let body = &u.threads[0].body;
        // g = 0; if (g == 0) { ...body...; blocked; }
        assert_eq!(body.len(), 2);
        let StmtKind::If { then_branch, .. } = &body[1].kind else { panic!() };
        assert!(matches!(then_branch[0].kind, StmtKind::Cas { .. }));
        assert!(matches!(then_branch.last().unwrap().kind, StmtKind::Blocked { .. }));
    }

    #[test]
    fn desugar_no_barriers_is_identity() {
        let p = parse(SEG).unwrap();
        let (d, warnings) = desugar_barriers(&p);
        assert_eq!(d, p);
        assert!(warnings.is_empty());
    }

    #[test]
    fn desugar_two_thread_cta_barrier() {
        let src = "grid 1, 2;\nX = 0;\nthread<0, 0> { bar^cta(1); }\nthread<0, 0> { bar^cta(1); }\n";
        let p = parse(src).unwrap();
        let (d, warnings) = desugar_barriers(&p);
        assert!(warnings.is_empty());
        assert_eq!(d.barrier_vars.len(), 1);
        let body = &d.threads[0].body;
        assert_eq!(body.len(), 2);
        let StmtKind::Fadd { ord, operand, .. } = &body[0].kind else { panic!() };
        assert_eq!(*ord, MemOrder::AcqRel);
        assert_eq!(*operand, Expr::Const(1));
        let StmtKind::AwaitRead { target, ord, barrier_id, .. } = &body[1].kind else { panic!() };
        assert_eq!(*target, 2);
        assert_eq!(*ord, MemOrder::Acq);
        assert_eq!(*barrier_id, Some(1));
    }

    #[test]
    fn desugar_divergent_barriers_get_two_counters() {
        // Two threads of one CTA arrive at different barrier ids.
        let src = "grid 1, 2;\nthread<0, 0> { bar^cta(1); }\nthread<0, 0> { bar^cta(2); }\n";
        let p = parse(src).unwrap();
        let (d, warnings) = desugar_barriers(&p);
        assert_eq!(d.barrier_vars.len(), 2);
        // Both counters are under-subscribed: 2 participants, 1 arrival.
        assert_eq!(warnings.len(), 2);
        for key in d.barrier_vars.keys() {
            assert_eq!(key.0, Scope::Cta);
        }
    }

    #[test]
    fn desugar_introduces_one_location_per_instance() {
        // The same barrier id in two different CTAs is two instances.
        let src = "grid 2, 1;\nthread<0, 0> { bar^cta(7); }\nthread<1, 0> { bar^cta(7); }\n";
        let p = parse(src).unwrap();
        let (d, _) = desugar_barriers(&p);
        assert_eq!(d.barrier_vars.len(), 2);
        assert_eq!(d.locations.len(), 2);
    }
}
