//! Pretty-printer for the DSL. `parse(print(p))` reproduces the AST up to
//! statement ids and spans.

use std::fmt::Write as _;

use super::ast::*;

pub fn print(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "grid {}, {};", p.grid.ctas, p.grid.threads_per_cta);
    for l in &p.locations {
        let data = if l.repair_exempt { "data " } else { "" };
        let _ = writeln!(out, "{}{} = {};", data, l.name, l.init);
    }
    for t in &p.threads {
        let _ = writeln!(out, "thread<{}, {}> {{", t.coord.cta, t.coord.gpu);
        print_block(&mut out, &t.body, 1);
        let _ = writeln!(out, "}}");
    }
    if let Some(a) = &p.assertion {
        let _ = writeln!(out, "{} ({});", a.quant, cond_str(&a.cond));
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        indent(out, depth);
        match &s.kind {
            StmtKind::Write { loc, sco, ord, value } => {
                let _ = writeln!(out, "{loc}^{sco}_{ord} = {};", expr_str(value));
            }
            StmtKind::Read { reg, loc, sco, ord } => {
                let _ = writeln!(out, "{reg} = {loc}^{sco}_{ord};");
            }
            StmtKind::Cas { reg, loc, sco, ord, expected, desired } => {
                let _ = writeln!(
                    out,
                    "{reg} = RMW^{sco}_{ord}({loc}, {}, {});",
                    expr_str(expected),
                    expr_str(desired)
                );
            }
            StmtKind::Fadd { reg, loc, sco, ord, operand } => {
                let _ = writeln!(out, "{reg} = FADD^{sco}_{ord}({loc}, {});", expr_str(operand));
            }
            StmtKind::Fence { sco, ord } => {
                let _ = writeln!(out, "fence^{sco}_{ord};");
            }
            StmtKind::Barrier { sco, id } => {
                let _ = writeln!(out, "bar^{sco}({id});");
            }
            StmtKind::Assign { reg, value } => {
                let _ = writeln!(out, "{reg} = {};", expr_str(value));
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let _ = writeln!(out, "if ({}) {{", cond_str(cond));
                print_block(out, then_branch, depth + 1);
                if else_branch.is_empty() {
                    indent(out, depth);
                    let _ = writeln!(out, "}}");
                } else {
                    indent(out, depth);
                    let _ = writeln!(out, "}} else {{");
                    print_block(out, else_branch, depth + 1);
                    indent(out, depth);
                    let _ = writeln!(out, "}}");
                }
            }
            StmtKind::While { cond, body } => {
                let _ = writeln!(out, "while ({}) {{", cond_str(cond));
                print_block(out, body, depth + 1);
                indent(out, depth);
                let _ = writeln!(out, "}}");
            }
            StmtKind::AwaitRead { reg, loc, sco, ord, target, .. } => {
                let _ = writeln!(out, "{reg} = await {loc}^{sco}_{ord}({target});");
            }
            StmtKind::Blocked { .. } => {
                let _ = writeln!(out, "blocked;");
            }
        }
    }
}

pub fn expr_str(e: &Expr) -> String {
    match e {
        Expr::Const(v) => v.to_string(),
        Expr::Reg(r) => r.clone(),
        Expr::AddConst(r, v) if *v < 0 => format!("{r} - {}", -v),
        Expr::AddConst(r, v) => format!("{r} + {v}"),
        Expr::EqConst(r, v) => format!("{r} == {v}"),
    }
}

fn atom_str(a: &CondAtom) -> String {
    match a {
        CondAtom::Reg(r) => r.clone(),
        CondAtom::Const(v) => v.to_string(),
        CondAtom::LoadInline { loc, sco, ord } => format!("{loc}^{sco}_{ord}"),
    }
}

fn cmp_str(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

pub fn cond_str(c: &Cond) -> String {
    match c {
        Cond::Cmp(a, op, b) => format!("{} {} {}", atom_str(a), cmp_str(*op), atom_str(b)),
        Cond::And(a, b) => format!("({}) && ({})", cond_str(a), cond_str(b)),
        Cond::Or(a, b) => format!("({}) || ({})", cond_str(a), cond_str(b)),
        Cond::Not(a) => format!("!({})", cond_str(a)),
    }
}

/// Render one statement on a single line, for repair diffs and reports.
pub fn stmt_line(s: &Stmt) -> String {
    let mut out = String::new();
    print_block(&mut out, std::slice::from_ref(s), 0);
    match &s.kind {
        StmtKind::If { .. } | StmtKind::While { .. } => {
            out.lines().next().unwrap_or("").trim().to_string() + " ..."
        }
        _ => out.trim().to_string(),
    }
}
