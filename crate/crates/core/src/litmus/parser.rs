//! Parser for the litmus DSL. Hand-rolled lexer and recursive descent;
//! every diagnostic carries a line and column.

use std::collections::BTreeMap;

use crate::scope::{MemOrder, Scope, ThreadCoord, Tid};

use super::ast::*;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.peek2() == Some(b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, Span), FrontendError> {
        self.skip_trivia();
        let span = Span { line: self.line, col: self.col };
        let c = match self.peek() {
            None => return Ok((Tok::Eof, span)),
            Some(c) => c,
        };
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok((Tok::Ident(text), span));
        }
        if c.is_ascii_digit() {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let v: i64 = text
                .parse()
                .map_err(|_| err(span, format!("integer literal `{text}` out of range")))?;
            return Ok((Tok::Int(v), span));
        }
        let two = |a: u8, b: u8| c == a && self.peek2() == Some(b);
        let punct: &'static str = if two(b'=', b'=') {
            "=="
        } else if two(b'!', b'=') {
            "!="
        } else if two(b'<', b'=') {
            "<="
        } else if two(b'>', b'=') {
            ">="
        } else if two(b'&', b'&') {
            "&&"
        } else if two(b'|', b'|') {
            "||"
        } else {
            match c {
                b'=' => "=",
                b'<' => "<",
                b'>' => ">",
                b'{' => "{",
                b'}' => "}",
                b'(' => "(",
                b')' => ")",
                b';' => ";",
                b',' => ",",
                b'^' => "^",
                b'+' => "+",
                b'-' => "-",
                b'!' => "!",
                _ => {
                    return Err(err(span, format!("unexpected character `{}`", c as char)));
                }
            }
        };
        for _ in 0..punct.len() {
            self.bump();
        }
        Ok((Tok::Punct(punct), span))
    }
}

fn err(span: Span, msg: impl Into<String>) -> FrontendError {
    FrontendError::Parse { line: span.line, col: span.col, msg: msg.into() }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    next_stmt_id: u32,
}

const KEYWORDS: &[&str] = &[
    "grid", "data", "thread", "fence", "bar", "if", "else", "while", "forall", "exists", "RMW",
    "FADD", "await", "blocked",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &'static str) -> Result<Span, FrontendError> {
        match self.peek() {
            Tok::Punct(q) if *q == p => Ok(self.bump().1),
            other => Err(err(self.span(), format!("expected `{p}`, found {other}"))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> Result<Span, FrontendError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.bump().1),
            other => Err(err(self.span(), format!("expected `{kw}`, found {other}"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_ident(&mut self) -> Result<(String, Span), FrontendError> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                if KEYWORDS.contains(&s.as_str()) {
                    return Err(err(self.span(), format!("`{s}` is a keyword")));
                }
                let sp = self.bump().1;
                Ok((s, sp))
            }
            other => Err(err(self.span(), format!("expected identifier, found {other}"))),
        }
    }

    fn eat_int(&mut self) -> Result<(i64, Span), FrontendError> {
        let neg = matches!(self.peek(), Tok::Punct("-"));
        if neg {
            self.bump();
        }
        match self.peek() {
            Tok::Int(v) => {
                let v = *v;
                let sp = self.bump().1;
                Ok((if neg { -v } else { v }, sp))
            }
            other => Err(err(self.span(), format!("expected integer, found {other}"))),
        }
    }

    fn fresh_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt_id);
        self.next_stmt_id += 1;
        id
    }

    /// `^cta_rel` lexes as `^` plus one identifier; split it into scope and
    /// order here so underscores in orders like `acq_rel` work.
    fn eat_scope_ord(&mut self) -> Result<(Scope, MemOrder), FrontendError> {
        self.eat_punct("^")?;
        let sp = self.span();
        let text = match self.bump().0 {
            Tok::Ident(s) => s,
            other => return Err(err(sp, format!("expected scope, found {other}"))),
        };
        let (scope, rest) = split_scope(&text).ok_or_else(|| {
            err(sp, format!("expected scope `cta`, `gpu`, or `sys`, found `{text}`"))
        })?;
        let rest = rest
            .strip_prefix('_')
            .ok_or_else(|| err(sp, format!("expected `_<order>` after scope in `{text}`")))?;
        let ord = parse_ord(rest)
            .ok_or_else(|| err(sp, format!("unknown memory order `{rest}`")))?;
        Ok((scope, ord))
    }

    /// A bare scope (for `bar^cta(1)`).
    fn eat_scope(&mut self) -> Result<Scope, FrontendError> {
        self.eat_punct("^")?;
        let sp = self.span();
        match self.bump().0 {
            Tok::Ident(s) => match split_scope(&s) {
                Some((scope, "")) => Ok(scope),
                _ => Err(err(sp, format!("expected bare scope, found `{s}`"))),
            },
            other => Err(err(sp, format!("expected scope, found {other}"))),
        }
    }

    fn parse_program(&mut self) -> Result<Program, FrontendError> {
        self.eat_keyword("grid")?;
        let (ctas, sp) = self.eat_int()?;
        self.eat_punct(",")?;
        let (tpc, _) = self.eat_int()?;
        self.eat_punct(";")?;
        if ctas < 1 || tpc < 1 {
            return Err(err(sp, "grid dimensions must be positive"));
        }
        let grid = Grid { ctas: ctas as u32, threads_per_cta: tpc as u32 };

        let mut locations: Vec<LocationDecl> = Vec::new();
        loop {
            let repair_exempt = self.at_keyword("data");
            if repair_exempt {
                self.bump();
            } else if !matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str())) {
                break;
            }
            let (name, sp) = self.eat_ident()?;
            self.eat_punct("=")?;
            let (init, _) = self.eat_int()?;
            self.eat_punct(";")?;
            if locations.iter().any(|l| l.name == name) {
                return Err(err(sp, format!("location `{name}` declared twice")));
            }
            locations.push(LocationDecl { name, init, repair_exempt });
        }

        let mut threads = Vec::new();
        while self.at_keyword("thread") {
            self.bump();
            self.eat_punct("<")?;
            let (cta, sp) = self.eat_int()?;
            self.eat_punct(",")?;
            let (gpu, _) = self.eat_int()?;
            self.eat_punct(">")?;
            if cta < 0 || gpu < 0 {
                return Err(err(sp, "thread coordinates must be non-negative"));
            }
            self.eat_punct("{")?;
            let body = self.parse_block()?;
            let tid = Tid(threads.len() as u32 + 1);
            threads.push(ThreadDecl {
                coord: ThreadCoord::new(tid, cta as u32, gpu as u32),
                body,
            });
        }
        if threads.is_empty() {
            return Err(err(self.span(), "program declares no threads"));
        }

        let assertion = if self.at_keyword("forall") || self.at_keyword("exists") {
            let quant = if self.at_keyword("forall") { Quantifier::Forall } else { Quantifier::Exists };
            self.bump();
            self.eat_punct("(")?;
            let cond = self.parse_cond()?;
            self.eat_punct(")")?;
            self.eat_punct(";")?;
            Some(Assertion { quant, cond })
        } else {
            None
        };

        match self.peek() {
            Tok::Eof => {}
            other => return Err(err(self.span(), format!("expected end of input, found {other}"))),
        }

        Ok(Program {
            grid,
            locations,
            threads,
            assertion,
            barrier_vars: BTreeMap::new(),
            next_stmt_id: self.next_stmt_id,
        })
    }

    fn parse_block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        let mut stmts = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Punct("}")) {
                self.bump();
                return Ok(stmts);
            }
            stmts.push(self.parse_stmt()?);
        }
    }

    fn parse_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        let id = self.fresh_id();
        let kind = if self.at_keyword("fence") {
            self.bump();
            let (sco, ord) = self.eat_scope_ord()?;
            self.eat_punct(";")?;
            StmtKind::Fence { sco, ord }
        } else if self.at_keyword("bar") {
            self.bump();
            let sco = self.eat_scope()?;
            self.eat_punct("(")?;
            let (bid, bsp) = self.eat_int()?;
            self.eat_punct(")")?;
            self.eat_punct(";")?;
            if bid < 0 {
                return Err(err(bsp, "barrier id must be non-negative"));
            }
            StmtKind::Barrier { sco, id: bid as u32 }
        } else if self.at_keyword("blocked") {
            self.bump();
            self.eat_punct(";")?;
            StmtKind::Blocked { origin: BlockOrigin::Bound }
        } else if self.at_keyword("if") {
            self.bump();
            self.eat_punct("(")?;
            let cond = self.parse_cond()?;
            self.eat_punct(")")?;
            self.eat_punct("{")?;
            let then_branch = self.parse_block()?;
            let else_branch = if self.at_keyword("else") {
                self.bump();
                self.eat_punct("{")?;
                self.parse_block()?
            } else {
                Vec::new()
            };
            StmtKind::If { cond, then_branch, else_branch }
        } else if self.at_keyword("while") {
            self.bump();
            self.eat_punct("(")?;
            let cond = self.parse_cond()?;
            self.eat_punct(")")?;
            self.eat_punct("{")?;
            let body = self.parse_block()?;
            StmtKind::While { cond, body }
        } else {
            // Starts with an identifier: write (`X^...= e`), or one of the
            // `r = ...` forms.
            let (name, _) = self.eat_ident()?;
            if matches!(self.peek(), Tok::Punct("^")) {
                let (sco, ord) = self.eat_scope_ord()?;
                self.eat_punct("=")?;
                let value = self.parse_expr()?;
                self.eat_punct(";")?;
                StmtKind::Write { loc: name, sco, ord, value }
            } else {
                self.eat_punct("=")?;
                if self.at_keyword("RMW") {
                    self.bump();
                    let (sco, ord) = self.eat_scope_ord()?;
                    self.eat_punct("(")?;
                    let (loc, _) = self.eat_ident()?;
                    self.eat_punct(",")?;
                    let expected = self.parse_expr()?;
                    self.eat_punct(",")?;
                    let desired = self.parse_expr()?;
                    self.eat_punct(")")?;
                    self.eat_punct(";")?;
                    StmtKind::Cas { reg: name, loc, sco, ord, expected, desired }
                } else if self.at_keyword("FADD") {
                    self.bump();
                    let (sco, ord) = self.eat_scope_ord()?;
                    self.eat_punct("(")?;
                    let (loc, _) = self.eat_ident()?;
                    self.eat_punct(",")?;
                    let operand = self.parse_expr()?;
                    self.eat_punct(")")?;
                    self.eat_punct(";")?;
                    StmtKind::Fadd { reg: name, loc, sco, ord, operand }
                } else if self.at_keyword("await") {
                    self.bump();
                    let (loc, _) = self.eat_ident()?;
                    let (sco, ord) = self.eat_scope_ord()?;
                    self.eat_punct("(")?;
                    let (target, _) = self.eat_int()?;
                    self.eat_punct(")")?;
                    self.eat_punct(";")?;
                    StmtKind::AwaitRead { reg: name, loc, sco, ord, target, barrier_id: None }
                } else if matches!(self.peek(), Tok::Ident(_))
                    && matches!(self.toks.get(self.pos + 1).map(|t| &t.0), Some(Tok::Punct("^")))
                {
                    let (loc, _) = self.eat_ident()?;
                    let (sco, ord) = self.eat_scope_ord()?;
                    self.eat_punct(";")?;
                    StmtKind::Read { reg: name, loc, sco, ord }
                } else {
                    let value = self.parse_expr()?;
                    self.eat_punct(";")?;
                    StmtKind::Assign { reg: name, value }
                }
            }
        };
        Ok(Stmt { id, span, kind })
    }

    fn parse_expr(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Punct("-") => {
                let (v, _) = self.eat_int()?;
                Ok(Expr::Const(v))
            }
            Tok::Ident(_) => {
                let (reg, _) = self.eat_ident()?;
                match self.peek() {
                    Tok::Punct("+") => {
                        self.bump();
                        let (v, _) = self.eat_int()?;
                        Ok(Expr::AddConst(reg, v))
                    }
                    Tok::Punct("-") => {
                        self.bump();
                        let (v, _) = self.eat_int()?;
                        Ok(Expr::AddConst(reg, -v))
                    }
                    Tok::Punct("==") => {
                        self.bump();
                        let (v, _) = self.eat_int()?;
                        Ok(Expr::EqConst(reg, v))
                    }
                    _ => Ok(Expr::Reg(reg)),
                }
            }
            other => Err(err(self.span(), format!("expected expression, found {other}"))),
        }
    }

    fn parse_cond(&mut self) -> Result<Cond, FrontendError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Cond, FrontendError> {
        let mut lhs = self.parse_and()?;
        while matches!(self.peek(), Tok::Punct("||")) {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Cond, FrontendError> {
        let mut lhs = self.parse_not()?;
        while matches!(self.peek(), Tok::Punct("&&")) {
            self.bump();
            let rhs = self.parse_not()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Cond, FrontendError> {
        if matches!(self.peek(), Tok::Punct("!")) {
            self.bump();
            return Ok(Cond::Not(Box::new(self.parse_not()?)));
        }
        if matches!(self.peek(), Tok::Punct("(")) {
            self.bump();
            let inner = self.parse_or()?;
            self.eat_punct(")")?;
            return Ok(inner);
        }
        let lhs = self.parse_cond_atom()?;
        let op = match self.peek() {
            Tok::Punct("==") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            other => {
                return Err(err(self.span(), format!("expected comparison operator, found {other}")))
            }
        };
        self.bump();
        let rhs = self.parse_cond_atom()?;
        Ok(Cond::Cmp(lhs, op, rhs))
    }

    fn parse_cond_atom(&mut self) -> Result<CondAtom, FrontendError> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Punct("-") => {
                let (v, _) = self.eat_int()?;
                Ok(CondAtom::Const(v))
            }
            Tok::Ident(_) => {
                let (name, _) = self.eat_ident()?;
                if matches!(self.peek(), Tok::Punct("^")) {
                    let (sco, ord) = self.eat_scope_ord()?;
                    Ok(CondAtom::LoadInline { loc: name, sco, ord })
                } else {
                    Ok(CondAtom::Reg(name))
                }
            }
            other => Err(err(self.span(), format!("expected condition atom, found {other}"))),
        }
    }
}

fn split_scope(text: &str) -> Option<(Scope, &str)> {
    for (name, scope) in [("cta", Scope::Cta), ("gpu", Scope::Gpu), ("sys", Scope::Sys)] {
        if let Some(rest) = text.strip_prefix(name) {
            return Some((scope, rest));
        }
    }
    None
}

fn parse_ord(text: &str) -> Option<MemOrder> {
    Some(match text {
        "na" => MemOrder::Na,
        "rlx" => MemOrder::Rlx,
        "acq" => MemOrder::Acq,
        "rel" => MemOrder::Rel,
        "acq_rel" => MemOrder::AcqRel,
        "sc" => MemOrder::Sc,
        _ => return None,
    })
}

/// Parse and validate a program.
pub fn parse(source: &str) -> Result<Program, FrontendError> {
    let mut lx = Lexer::new(source);
    let mut toks = Vec::new();
    loop {
        let (t, sp) = lx.next_tok()?;
        let eof = t == Tok::Eof;
        toks.push((t, sp));
        if eof {
            break;
        }
    }
    let mut p = Parser { toks, pos: 0, next_stmt_id: 0 };
    let program = p.parse_program()?;
    validate(&program)?;
    Ok(program)
}

/// Legal memory orders per operation class.
fn legal_orders(kind: &StmtKind) -> Option<(&'static str, &'static [MemOrder])> {
    use MemOrder::*;
    const READ: &[MemOrder] = &[Na, Rlx, Acq, Sc];
    const WRITE: &[MemOrder] = &[Na, Rlx, Rel, Sc];
    const RMW: &[MemOrder] = &[Rlx, Acq, Rel, AcqRel, Sc];
    const FENCE: &[MemOrder] = &[Rel, Acq, AcqRel, Sc];
    match kind {
        StmtKind::Read { .. } | StmtKind::AwaitRead { .. } => Some(("read", READ)),
        StmtKind::Write { .. } => Some(("write", WRITE)),
        StmtKind::Cas { .. } | StmtKind::Fadd { .. } => Some(("RMW", RMW)),
        StmtKind::Fence { .. } => Some(("fence", FENCE)),
        _ => None,
    }
}

fn stmt_ord(kind: &StmtKind) -> Option<MemOrder> {
    match kind {
        StmtKind::Read { ord, .. }
        | StmtKind::Write { ord, .. }
        | StmtKind::Cas { ord, .. }
        | StmtKind::Fadd { ord, .. }
        | StmtKind::Fence { ord, .. }
        | StmtKind::AwaitRead { ord, .. } => Some(*ord),
        _ => None,
    }
}

fn stmt_loc(kind: &StmtKind) -> Option<&str> {
    match kind {
        StmtKind::Read { loc, .. }
        | StmtKind::Write { loc, .. }
        | StmtKind::Cas { loc, .. }
        | StmtKind::Fadd { loc, .. }
        | StmtKind::AwaitRead { loc, .. } => Some(loc),
        _ => None,
    }
}

pub(crate) fn validate(p: &Program) -> Result<(), FrontendError> {
    fn walk<'a>(
        p: &'a Program,
        stmts: &'a [Stmt],
        defined: &mut Vec<String>,
        check: &mut impl FnMut(&'a Stmt, &mut Vec<String>) -> Result<(), FrontendError>,
    ) -> Result<(), FrontendError> {
        for s in stmts {
            check(s, defined)?;
            match &s.kind {
                StmtKind::If { then_branch, else_branch, .. } => {
                    walk(p, then_branch, defined, check)?;
                    walk(p, else_branch, defined, check)?;
                }
                StmtKind::While { body, .. } => walk(p, body, defined, check)?,
                _ => {}
            }
        }
        Ok(())
    }

    // Per-statement checks: orders legal for the operation class, locations
    // declared, registers not shadowing locations.
    let mut reg_owners: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (ti, t) in p.threads.iter().enumerate() {
        if t.coord.cta >= p.grid.ctas {
            return Err(FrontendError::Validate(format!(
                "thread {} declares cta {} but the grid has {} CTAs",
                ti + 1,
                t.coord.cta,
                p.grid.ctas
            )));
        }
        let mut defined = Vec::new();
        walk(p, &t.body, &mut defined, &mut |s, defined| {
            if let (Some(ord), Some((class, legal))) = (stmt_ord(&s.kind), legal_orders(&s.kind)) {
                if !legal.contains(&ord) {
                    return Err(FrontendError::Validate(format!(
                        "{}: `{}` is not a valid {} order",
                        s.span, ord, class
                    )));
                }
            }
            if let Some(loc) = stmt_loc(&s.kind) {
                if p.loc_id(loc).is_none() {
                    return Err(FrontendError::Validate(format!(
                        "{}: unknown location `{}`",
                        s.span, loc
                    )));
                }
            }
            let dst = match &s.kind {
                StmtKind::Read { reg, .. }
                | StmtKind::Cas { reg, .. }
                | StmtKind::Fadd { reg, .. }
                | StmtKind::Assign { reg, .. }
                | StmtKind::AwaitRead { reg, .. } => Some(reg),
                _ => None,
            };
            if let Some(reg) = dst {
                if p.loc_id(reg).is_some() {
                    return Err(FrontendError::Validate(format!(
                        "{}: `{}` is a shared location, not a register",
                        s.span, reg
                    )));
                }
                defined.push(reg.clone());
            }
            // Inline loads in conditions must name declared locations.
            if let StmtKind::If { cond, .. } | StmtKind::While { cond, .. } = &s.kind {
                let mut stack = vec![cond];
                while let Some(c) = stack.pop() {
                    match c {
                        Cond::Cmp(a, _, b) => {
                            for atom in [a, b] {
                                if let CondAtom::LoadInline { loc, sco: _, ord } = atom {
                                    if p.loc_id(loc).is_none() {
                                        return Err(FrontendError::Validate(format!(
                                            "{}: unknown location `{}` in condition",
                                            s.span, loc
                                        )));
                                    }
                                    if !legal_orders(&StmtKind::Read {
                                        reg: String::new(),
                                        loc: loc.clone(),
                                        sco: Scope::Sys,
                                        ord: *ord,
                                    })
                                    .unwrap()
                                    .1
                                    .contains(ord)
                                    {
                                        return Err(FrontendError::Validate(format!(
                                            "{}: `{}` is not a valid read order",
                                            s.span, ord
                                        )));
                                    }
                                }
                            }
                        }
                        Cond::And(a, b) | Cond::Or(a, b) => {
                            stack.push(a);
                            stack.push(b);
                        }
                        Cond::Not(a) => stack.push(a),
                    }
                }
            }
            Ok(())
        })?;
        for reg in defined {
            let owners = reg_owners.entry(reg).or_default();
            if !owners.contains(&ti) {
                owners.push(ti);
            }
        }
    }

    // Threads per (cta, gpu) must fit into the grid.
    let mut per_instance: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for t in &p.threads {
        *per_instance.entry((t.coord.cta, t.coord.gpu)).or_default() += 1;
    }
    for ((cta, gpu), n) in &per_instance {
        if *n > p.grid.threads_per_cta {
            return Err(FrontendError::Validate(format!(
                "cta {cta} on gpu {gpu} declares {n} threads but the grid allows {}",
                p.grid.threads_per_cta
            )));
        }
    }

    // Assertion registers must resolve to exactly one thread.
    if let Some(a) = &p.assertion {
        if a.cond.has_inline_load() {
            return Err(FrontendError::Validate(
                "assertions range over registers only, not memory".into(),
            ));
        }
        let mut regs = Vec::new();
        a.cond.regs(&mut regs);
        for r in regs {
            match reg_owners.get(&r).map(|o| o.len()).unwrap_or(0) {
                0 => {
                    return Err(FrontendError::Validate(format!(
                        "assertion mentions register `{r}` that no thread assigns"
                    )))
                }
                1 => {}
                _ => {
                    return Err(FrontendError::Validate(format!(
                        "register `{r}` in the assertion is assigned by more than one thread"
                    )))
                }
            }
        }
    }

    Ok(())
}
