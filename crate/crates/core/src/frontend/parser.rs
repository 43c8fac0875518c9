//! Recursive descent parser for `.mc` sources.
//!
//! Code and annotations share one expression grammar; `logic` mode turns on
//! the specification-only forms (`==>`, `<==>`, chained comparisons,
//! backslash builtins, quantifiers) and turns off `&x`.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::span::Span;
use super::ParseError;

pub type PResult<T> = Result<T, ParseError>;

/// Parses one source file. Imports are recorded, not followed.
pub fn parse_source(text: &str, file: &str) -> PResult<Program> {
    let toks = tokenize(text, file)?;
    let mut p = Parser {
        toks,
        pos: 0,
        module: None,
    };
    p.program()
}

/// Parses a standalone logic expression (used for coupling assumptions and
/// scenario expectations).
pub fn parse_logic_expr(text: &str, file: &str) -> PResult<Expr> {
    let toks = tokenize(text, file)?;
    let mut p = Parser {
        toks,
        pos: 0,
        module: None,
    };
    let e = p.expr(true)?;
    if !p.at(&Tok::Eof) {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    module: Option<String>,
}

const CONTRACT_KEYWORDS: &[&str] = &[
    "requires", "assigns", "ensures", "behavior", "complete", "disjoint", "assumes",
];

impl Parser {
    // ---- token helpers ----

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError {
            span: self.span(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> PResult<Span> {
        if self.at(t) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.advance().span;
                Ok((s, sp))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn peek_type(&self) -> Option<TypeName> {
        match self.peek() {
            Tok::Ident(s) => TypeName::from_keyword(s),
            _ => None,
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        match self.peek_type() {
            Some(t) => {
                self.advance();
                Ok(t)
            }
            None => Err(self.unexpected("type name")),
        }
    }

    // ---- top level ----

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        while !self.at(&Tok::Eof) {
            match self.peek() {
                Tok::AnnotStart => self.top_annotation(&mut prog)?,
                Tok::Ident(s) if s == "module" => {
                    self.advance();
                    let (name, _) = self.ident()?;
                    self.expect(&Tok::Semi, "`;`")?;
                    self.module = Some(name);
                }
                Tok::Ident(s) if s == "import" => {
                    let start = self.advance().span;
                    let path = match self.peek().clone() {
                        Tok::Str(s) => {
                            self.advance();
                            s
                        }
                        _ => return Err(self.unexpected("import path string")),
                    };
                    let end = self.expect(&Tok::Semi, "`;`")?;
                    prog.imports.push(Import {
                        path,
                        span: start.to(&end),
                    });
                }
                _ => self.declaration(&mut prog, None)?,
            }
        }
        Ok(prog)
    }

    fn top_annotation(&mut self, prog: &mut Program) -> PResult<()> {
        let start = self.expect(&Tok::AnnotStart, "annotation")?;
        let first = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("annotation keyword")),
        };
        if CONTRACT_KEYWORDS.contains(&first.as_str()) {
            let contract = self.contract(start)?;
            if self.at(&Tok::Eof) || self.at(&Tok::AnnotStart) {
                return Err(ParseError {
                    span: contract.span.clone(),
                    message: "contract is not followed by a function declaration".into(),
                });
            }
            return self.declaration(prog, Some(contract));
        }
        loop {
            if self.eat(&Tok::AnnotEnd) {
                return Ok(());
            }
            if self.at_kw("ghost") {
                let decls = self.ghost_decl()?;
                prog.ghost_decls.extend(decls);
            } else if self.at_kw("predicate") || self.at_kw("logic") {
                let def = self.logic_def()?;
                if def.return_type.is_none() {
                    prog.predicates.push(def);
                } else {
                    prog.logic_functions.push(def);
                }
            } else {
                return Err(self.unexpected("`ghost`, `predicate`, `logic` or a contract clause"));
            }
        }
    }

    fn ghost_decl(&mut self) -> PResult<Vec<VarDecl>> {
        let start = self.expect_kw("ghost")?;
        let ty = self.type_name()?;
        let mut out = Vec::new();
        loop {
            let d = self.declarator(ty, Storage::Global, false, &start)?;
            out.push(d);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semi, "`;`")?;
        Ok(out)
    }

    /// `name [N] [= init]` following an already-consumed type.
    fn declarator(
        &mut self,
        ty: TypeName,
        storage: Storage,
        is_const: bool,
        start: &Span,
    ) -> PResult<VarDecl> {
        let (name, _) = self.ident()?;
        let mut array_len = None;
        if self.eat(&Tok::LBracket) {
            match self.peek().clone() {
                Tok::Int(n) if n > 0 => {
                    self.advance();
                    array_len = Some(n as u64);
                }
                _ => return Err(self.unexpected("positive array length")),
            }
            self.expect(&Tok::RBracket, "`]`")?;
        }
        let init = if self.eat(&Tok::Assign) {
            if self.eat(&Tok::LBrace) {
                let mut items = Vec::new();
                if !self.at(&Tok::RBrace) {
                    loop {
                        items.push(self.expr(false)?);
                        if !self.eat(&Tok::Comma) || self.at(&Tok::RBrace) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBrace, "`}`")?;
                Some(Initializer::List(items))
            } else {
                Some(Initializer::Expr(self.expr(false)?))
            }
        } else {
            None
        };
        Ok(VarDecl {
            module: self.module.clone(),
            storage,
            is_const,
            ty,
            name,
            array_len,
            init,
            span: start.to(&self.prev_span()),
        })
    }

    fn logic_def(&mut self) -> PResult<LogicDef> {
        let start = self.span();
        let return_type = if self.eat_kw("predicate") {
            None
        } else {
            self.expect_kw("logic")?;
            Some(self.type_name()?)
        };
        let (name, _) = self.ident()?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) {
            if !self.at(&Tok::RParen) {
                loop {
                    let pstart = self.span();
                    let ty = self.type_name()?;
                    let (pname, pend) = self.ident()?;
                    params.push(LogicParam {
                        ty,
                        name: pname,
                        span: pstart.to(&pend),
                    });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(&Tok::RParen, "`)`")?;
        }
        self.expect(&Tok::Assign, "`=`")?;
        let body = self.expr(true)?;
        let end = self.expect(&Tok::Semi, "`;`")?;
        Ok(LogicDef {
            module: self.module.clone(),
            name,
            return_type,
            params,
            body,
            span: start.to(&end),
        })
    }

    fn contract(&mut self, start: Span) -> PResult<Contract> {
        let mut requires = Vec::new();
        let mut assigns: Option<Vec<AssignsTarget>> = None;
        let mut default = Behavior {
            name: DEFAULT_BEHAVIOR.into(),
            assumes: Vec::new(),
            ensures: Vec::new(),
            span: start.clone(),
        };
        let mut named: Vec<Behavior> = Vec::new();
        let mut complete = false;
        let mut disjoint = false;
        loop {
            if self.at(&Tok::AnnotEnd) {
                break;
            }
            let kw_span = self.span();
            let (kw, _) = self.ident()?;
            match kw.as_str() {
                "requires" => {
                    if !named.is_empty() {
                        return Err(ParseError {
                            span: kw_span,
                            message: "`requires` inside a named behavior is not supported".into(),
                        });
                    }
                    requires.push(self.expr(true)?);
                    self.expect(&Tok::Semi, "`;`")?;
                }
                "assigns" => {
                    if !named.is_empty() || assigns.is_some() {
                        return Err(ParseError {
                            span: kw_span,
                            message: "only one function-level `assigns` clause is supported".into(),
                        });
                    }
                    assigns = Some(self.assigns_list()?);
                }
                "ensures" => {
                    let e = self.expr(true)?;
                    self.expect(&Tok::Semi, "`;`")?;
                    match named.last_mut() {
                        Some(b) => {
                            b.ensures.push(e);
                            b.span = b.span.to(&self.prev_span());
                        }
                        None => {
                            if default.ensures.is_empty() {
                                default.span = kw_span.clone();
                            }
                            default.ensures.push(e);
                            default.span = default.span.to(&self.prev_span());
                        }
                    }
                }
                "assumes" => {
                    let e = self.expr(true)?;
                    self.expect(&Tok::Semi, "`;`")?;
                    match named.last_mut() {
                        Some(b) => {
                            b.assumes.push(e);
                            b.span = b.span.to(&self.prev_span());
                        }
                        None => {
                            return Err(ParseError {
                                span: kw_span,
                                message: "`assumes` outside a named behavior".into(),
                            })
                        }
                    }
                }
                "behavior" => {
                    let (name, _) = self.ident()?;
                    if name == DEFAULT_BEHAVIOR {
                        return Err(ParseError {
                            span: self.prev_span(),
                            message: "`default` is reserved for unnamed clauses".into(),
                        });
                    }
                    let end = self.expect(&Tok::Colon, "`:`")?;
                    named.push(Behavior {
                        name,
                        assumes: Vec::new(),
                        ensures: Vec::new(),
                        span: kw_span.to(&end),
                    });
                }
                "complete" | "disjoint" => {
                    self.expect_kw("behaviors")?;
                    self.expect(&Tok::Semi, "`;`")?;
                    if kw == "complete" {
                        complete = true;
                    } else {
                        disjoint = true;
                    }
                }
                _ => {
                    return Err(ParseError {
                        span: kw_span,
                        message: format!("unsupported contract clause `{kw}`"),
                    })
                }
            }
        }
        let end = self.expect(&Tok::AnnotEnd, "end of annotation")?;
        let mut behaviors = Vec::new();
        if !default.ensures.is_empty() {
            behaviors.push(default);
        }
        behaviors.extend(named);
        Ok(Contract {
            requires,
            assigns,
            behaviors,
            complete_declared: complete,
            disjoint_declared: disjoint,
            span: start.to(&end),
        })
    }

    fn assigns_list(&mut self) -> PResult<Vec<AssignsTarget>> {
        let mut out = Vec::new();
        loop {
            let start = self.span();
            let location = match self.peek().clone() {
                Tok::BsIdent(s) if s == "\\nothing" => {
                    self.advance();
                    Location::Nothing
                }
                Tok::Star => {
                    self.advance();
                    Location::Deref(self.ident()?.0)
                }
                Tok::Ident(_) => {
                    let (name, _) = self.ident()?;
                    if self.eat(&Tok::ColonColon) {
                        Location::Qualified(name, self.ident()?.0)
                    } else {
                        Location::Name(name)
                    }
                }
                _ => return Err(self.unexpected("assignable location")),
            };
            out.push(AssignsTarget {
                location,
                span: start.to(&self.prev_span()),
            });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semi, "`;`")?;
        Ok(out)
    }

    fn declaration(&mut self, prog: &mut Program, contract: Option<Contract>) -> PResult<()> {
        let start = self.span();
        let mut is_static = false;
        let mut is_const = false;
        let mut hardware = false;
        loop {
            if self.eat_kw("static") {
                is_static = true;
            } else if self.eat_kw("const") {
                is_const = true;
            } else if self.eat_kw("hardware") {
                hardware = true;
            } else {
                break;
            }
        }
        let ty = self.type_name()?;
        if matches!(self.peek_at(1), Tok::LParen) {
            if is_const {
                return Err(ParseError {
                    span: start,
                    message: "functions cannot be `const`".into(),
                });
            }
            let f = self.function(
                start,
                ty,
                FunctionAttrs {
                    hardware,
                    is_static,
                },
                contract,
            )?;
            prog.functions.push(f);
            return Ok(());
        }
        if contract.is_some() {
            return Err(ParseError {
                span: start,
                message: "a contract must be attached to a function".into(),
            });
        }
        if hardware {
            return Err(ParseError {
                span: start,
                message: "`hardware` applies only to functions".into(),
            });
        }
        if ty == TypeName::Void {
            return Err(ParseError {
                span: start,
                message: "variables cannot have type void".into(),
            });
        }
        let storage = if is_static {
            Storage::Static
        } else {
            Storage::Global
        };
        loop {
            let d = self.declarator(ty, storage, is_const, &start)?;
            if is_const {
                prog.constants.push(d);
            } else {
                prog.module_vars.push(d);
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semi, "`;`")?;
        Ok(())
    }

    fn function(
        &mut self,
        start: Span,
        return_type: TypeName,
        attrs: FunctionAttrs,
        contract: Option<Contract>,
    ) -> PResult<FunctionDef> {
        let (name, _) = self.ident()?;
        self.expect(&Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.at_kw("void") && matches!(self.peek_at(1), Tok::RParen) {
            self.advance();
        } else if !self.at(&Tok::RParen) {
            loop {
                let pstart = self.span();
                let ty = self.type_name()?;
                let out = self.eat(&Tok::Star);
                let (pname, pend) = self.ident()?;
                params.push(Param {
                    ty,
                    name: pname,
                    out,
                    span: pstart.to(&pend),
                });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen, "`)`")?;
        let body = if self.eat(&Tok::Semi) {
            None
        } else {
            Some(self.block()?)
        };
        Ok(FunctionDef {
            module: self.module.clone(),
            attrs,
            return_type,
            name,
            params,
            contract,
            body,
            span: start.to(&self.prev_span()),
        })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect(&Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.unexpected("`}`"));
            }
            self.statement_into(&mut stmts)?;
        }
        let end = self.advance().span;
        Ok(Block {
            stmts,
            span: start.to(&end),
        })
    }

    /// Parses one statement (or one annotation, which may hold several).
    fn statement_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        if self.at(&Tok::AnnotStart) {
            return self.body_annotation(out);
        }
        if self.peek_type().is_some() {
            return self.local_decls(out, false);
        }
        let s = self.statement(None)?;
        out.push(s);
        Ok(())
    }

    fn local_decls(&mut self, out: &mut Vec<Stmt>, ghost: bool) -> PResult<()> {
        let start = self.span();
        let ty = self.type_name()?;
        if ty == TypeName::Void {
            return Err(ParseError {
                span: start,
                message: "variables cannot have type void".into(),
            });
        }
        loop {
            let dstart = self.span();
            let (name, _) = self.ident()?;
            let init = if self.eat(&Tok::Assign) {
                Some(self.expr(false)?)
            } else {
                None
            };
            let s = Stmt {
                kind: StmtKind::Decl { ty, name, init },
                span: dstart.to(&self.prev_span()),
            };
            out.push(wrap_ghost(s, ghost));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Semi, "`;`")?;
        Ok(())
    }

    fn body_annotation(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let start = self.expect(&Tok::AnnotStart, "annotation")?;
        let mut loop_annot: Option<LoopAnnot> = None;
        loop {
            if self.at(&Tok::AnnotEnd) {
                break;
            }
            if self.at_kw("ghost") {
                self.advance();
                if self.peek_type().is_some() {
                    self.local_decls(out, true)?;
                } else {
                    let s = self.simple_statement()?;
                    self.expect(&Tok::Semi, "`;`")?;
                    out.push(wrap_ghost(s, true));
                }
            } else if self.at_kw("assert") {
                let kw = self.advance().span;
                let e = self.expr(true)?;
                let end = self.expect(&Tok::Semi, "`;`")?;
                out.push(Stmt {
                    kind: StmtKind::Assert(e),
                    span: kw.to(&end),
                });
            } else if self.at_kw("loop") {
                let kw = self.advance().span;
                self.expect_kw("invariant")?;
                let e = self.expr(true)?;
                let end = self.expect(&Tok::Semi, "`;`")?;
                let a = loop_annot.get_or_insert(LoopAnnot {
                    invariants: Vec::new(),
                    span: kw.clone(),
                });
                a.invariants.push(e);
                a.span = a.span.to(&end);
            } else {
                return Err(self.unexpected("`ghost`, `assert` or `loop invariant`"));
            }
        }
        self.expect(&Tok::AnnotEnd, "end of annotation")?;
        if let Some(annot) = loop_annot {
            if !(self.at_kw("while") || self.at_kw("for")) {
                return Err(ParseError {
                    span: start.to(&annot.span),
                    message: "loop annotation must be followed by a `while` or `for` loop".into(),
                });
            }
            let s = self.statement(Some(annot))?;
            out.push(s);
        }
        Ok(())
    }

    fn statement(&mut self, annot: Option<LoopAnnot>) -> PResult<Stmt> {
        let start = self.span();
        if self.at(&Tok::LBrace) {
            let b = self.block()?;
            let span = b.span.clone();
            return Ok(Stmt {
                kind: StmtKind::Block(b),
                span,
            });
        }
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        let kind = match kw.as_str() {
            "if" => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let cond = self.expr(false)?;
                self.expect(&Tok::RParen, "`)`")?;
                let then_block = self.branch()?;
                let else_block = if self.eat_kw("else") {
                    Some(self.branch()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                }
            }
            "while" => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let cond = self.expr(false)?;
                self.expect(&Tok::RParen, "`)`")?;
                let body = self.branch()?;
                StmtKind::While { cond, body, annot }
            }
            "for" => {
                self.advance();
                self.expect(&Tok::LParen, "`(`")?;
                let init = if self.at(&Tok::Semi) {
                    None
                } else if self.peek_type().is_some() {
                    let dstart = self.span();
                    let ty = self.type_name()?;
                    let (name, _) = self.ident()?;
                    let init = if self.eat(&Tok::Assign) {
                        Some(self.expr(false)?)
                    } else {
                        None
                    };
                    Some(Box::new(Stmt {
                        kind: StmtKind::Decl { ty, name, init },
                        span: dstart.to(&self.prev_span()),
                    }))
                } else {
                    Some(Box::new(self.simple_statement()?))
                };
                self.expect(&Tok::Semi, "`;`")?;
                let cond = if self.at(&Tok::Semi) {
                    None
                } else {
                    Some(self.expr(false)?)
                };
                self.expect(&Tok::Semi, "`;`")?;
                let step = if self.at(&Tok::RParen) {
                    None
                } else {
                    Some(Box::new(self.simple_statement()?))
                };
                self.expect(&Tok::RParen, "`)`")?;
                let body = self.branch()?;
                StmtKind::For {
                    init,
                    cond,
                    step,
                    body,
                    annot,
                }
            }
            "return" => {
                self.advance();
                let e = if self.at(&Tok::Semi) {
                    None
                } else {
                    Some(self.expr(false)?)
                };
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Return(e)
            }
            "break" => {
                self.advance();
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Break
            }
            "continue" => {
                self.advance();
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::Continue
            }
            "extern_effect" => {
                self.advance();
                self.expect(&Tok::Semi, "`;`")?;
                StmtKind::ExternEffect
            }
            _ => {
                let s = self.simple_statement()?;
                self.expect(&Tok::Semi, "`;`")?;
                return Ok(Stmt {
                    kind: s.kind,
                    span: start.to(&self.prev_span()),
                });
            }
        };
        Ok(Stmt {
            kind,
            span: start.to(&self.prev_span()),
        })
    }

    /// Branch bodies are always normalized to blocks.
    fn branch(&mut self) -> PResult<Block> {
        if self.at(&Tok::LBrace) {
            return self.block();
        }
        let start = self.span();
        let mut stmts = Vec::new();
        self.statement_into(&mut stmts)?;
        Ok(Block {
            stmts,
            span: start.to(&self.prev_span()),
        })
    }

    /// Assignment, compound assignment, increment, or call; no trailing `;`.
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let lhs = self.expr(false)?;
        let kind = match self.peek().clone() {
            Tok::Assign => {
                self.advance();
                let value = self.expr(false)?;
                StmtKind::Assign { target: lhs, value }
            }
            tok @ (Tok::PlusAssign | Tok::MinusAssign) => {
                self.advance();
                let rhs = self.expr(false)?;
                let op = if tok == Tok::PlusAssign {
                    BinOp::Add
                } else {
                    BinOp::Sub
                };
                let span = lhs.span.to(&rhs.span);
                let value = Expr::new(
                    ExprKind::Binary(op, Box::new(lhs.clone()), Box::new(rhs)),
                    span,
                );
                StmtKind::Assign { target: lhs, value }
            }
            tok @ (Tok::PlusPlus | Tok::MinusMinus) => {
                let op_span = self.advance().span;
                let op = if tok == Tok::PlusPlus {
                    BinOp::Add
                } else {
                    BinOp::Sub
                };
                let one = Expr::new(ExprKind::Int(1), op_span.clone());
                let span = lhs.span.to(&op_span);
                let value = Expr::new(
                    ExprKind::Binary(op, Box::new(lhs.clone()), Box::new(one)),
                    span,
                );
                StmtKind::Assign { target: lhs, value }
            }
            _ => {
                if !matches!(lhs.kind, ExprKind::Call(..)) {
                    return Err(ParseError {
                        span: lhs.span,
                        message: "expression statement has no effect; expected assignment or call"
                            .into(),
                    });
                }
                StmtKind::Expr(lhs)
            }
        };
        Ok(Stmt {
            kind,
            span: start.to(&self.prev_span()),
        })
    }

    // ---- expressions ----

    pub fn expr(&mut self, logic: bool) -> PResult<Expr> {
        self.equiv(logic)
    }

    fn starts_expr(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::BsIdent(_)
                | Tok::Int(_)
                | Tok::Real(_)
                | Tok::LParen
                | Tok::Minus
                | Tok::Bang
                | Tok::Star
                | Tok::Amp
        )
    }

    /// Parses the right operand of a binary operator, blaming the operator
    /// when the operand is missing.
    fn rhs<F>(&mut self, op_span: &Span, op: &str, f: F) -> PResult<Expr>
    where
        F: FnOnce(&mut Self) -> PResult<Expr>,
    {
        if !self.starts_expr() {
            return Err(ParseError {
                span: op_span.clone(),
                message: format!(
                    "dangling `{op}`: missing right-hand operand before {}",
                    self.peek().describe()
                ),
            });
        }
        f(self)
    }

    fn logic_only(&self, logic: bool, what: &str) -> PResult<()> {
        if logic {
            Ok(())
        } else {
            Err(ParseError {
                span: self.span(),
                message: format!("{what} is only allowed in annotations"),
            })
        }
    }

    fn equiv(&mut self, logic: bool) -> PResult<Expr> {
        let mut lhs = self.implies(logic)?;
        while self.at(&Tok::Equiv) {
            self.logic_only(logic, "`<==>`")?;
            let op = self.advance().span;
            let rhs = self.rhs(&op, "<==>", |p| p.implies(logic))?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(
                ExprKind::Binary(BinOp::Equiv, Box::new(lhs), Box::new(rhs)),
                span,
            );
        }
        Ok(lhs)
    }

    fn implies(&mut self, logic: bool) -> PResult<Expr> {
        let lhs = self.or(logic)?;
        if self.at(&Tok::Implies) {
            self.logic_only(logic, "`==>`")?;
            let op = self.advance().span;
            // right associative
            let rhs = self.rhs(&op, "==>", |p| p.implies(logic))?;
            let span = lhs.span.to(&rhs.span);
            return Ok(Expr::new(
                ExprKind::Binary(BinOp::Implies, Box::new(lhs), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn or(&mut self, logic: bool) -> PResult<Expr> {
        let mut lhs = self.and(logic)?;
        while self.at(&Tok::OrOr) {
            let op = self.advance().span;
            let rhs = self.rhs(&op, "||", |p| p.and(logic))?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(
                ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)),
                span,
            );
        }
        Ok(lhs)
    }

    fn and(&mut self, logic: bool) -> PResult<Expr> {
        let mut lhs = self.comparison(logic)?;
        while self.at(&Tok::AndAnd) {
            let op = self.advance().span;
            let rhs = self.rhs(&op, "&&", |p| p.comparison(logic))?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(
                ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)),
                span,
            );
        }
        Ok(lhs)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self, logic: bool) -> PResult<Expr> {
        let first = self.additive(logic)?;
        let mut operands = vec![first];
        let mut ops = Vec::new();
        while let Some(op) = self.cmp_op() {
            if !ops.is_empty() && !logic {
                return Err(ParseError {
                    span: self.span(),
                    message: "chained comparisons are only allowed in annotations".into(),
                });
            }
            let op_span = self.advance().span;
            let rhs = self.rhs(&op_span, op.symbol(), |p| p.additive(logic))?;
            operands.push(rhs);
            ops.push(op);
        }
        if ops.is_empty() {
            return Ok(operands.pop().unwrap());
        }
        let span = operands[0].span.to(&operands.last().unwrap().span);
        Ok(Expr::new(ExprKind::Compare(operands, ops), span))
    }

    fn additive(&mut self, logic: bool) -> PResult<Expr> {
        let mut lhs = self.multiplicative(logic)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let op_span = self.advance().span;
            let rhs = self.rhs(&op_span, op.symbol(), |p| p.multiplicative(logic))?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self, logic: bool) -> PResult<Expr> {
        let mut lhs = self.unary(logic)?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => break,
            };
            let op_span = self.advance().span;
            let rhs = self.rhs(&op_span, op.symbol(), |p| p.unary(logic))?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self, logic: bool) -> PResult<Expr> {
        let start = self.span();
        let op = match self.peek() {
            Tok::Minus => Some(UnOp::Neg),
            Tok::Bang => Some(UnOp::Not),
            Tok::Star => Some(UnOp::Deref),
            Tok::Amp => {
                if logic {
                    return Err(ParseError {
                        span: start,
                        message: "`&` is not allowed in annotations".into(),
                    });
                }
                Some(UnOp::AddrOf)
            }
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.rhs(&start, "unary operator", |p| p.unary(logic))?;
            let span = start.to(&operand.span);
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), span));
        }
        // cast: `(type) e`
        if self.at(&Tok::LParen) && matches!(self.peek_at(2), Tok::RParen) {
            if let Tok::Ident(s) = self.peek_at(1) {
                if let Some(ty) = TypeName::from_keyword(s) {
                    self.advance();
                    self.advance();
                    self.advance();
                    let operand = self.unary(logic)?;
                    let span = start.to(&operand.span);
                    return Ok(Expr::new(ExprKind::Cast(ty, Box::new(operand)), span));
                }
            }
        }
        self.postfix(logic)
    }

    fn postfix(&mut self, logic: bool) -> PResult<Expr> {
        let mut e = self.primary(logic)?;
        while self.at(&Tok::LBracket) {
            self.advance();
            let idx = self.expr(logic)?;
            let end = self.expect(&Tok::RBracket, "`]`")?;
            let span = e.span.to(&end);
            e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
        }
        Ok(e)
    }

    fn call_args(&mut self, logic: bool) -> PResult<(Vec<Expr>, Span)> {
        self.expect(&Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr(logic)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let end = self.expect(&Tok::RParen, "`)`")?;
        Ok((args, end))
    }

    fn primary(&mut self, logic: bool) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Int(v), start))
            }
            Tok::Real(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Real(v), start))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr(logic)?;
                let end = self.expect(&Tok::RParen, "`)`")?;
                Ok(Expr::new(e.kind, start.to(&end)))
            }
            Tok::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "true" => return Ok(Expr::new(ExprKind::Bool(true), start)),
                    "false" => return Ok(Expr::new(ExprKind::Bool(false), start)),
                    _ => {}
                }
                if self.eat(&Tok::ColonColon) {
                    let (member, end) = self.ident()?;
                    return Ok(Expr::new(ExprKind::Qualified(name, member), start.to(&end)));
                }
                if self.at(&Tok::LParen) {
                    let (args, end) = self.call_args(logic)?;
                    return Ok(Expr::new(ExprKind::Call(name, args), start.to(&end)));
                }
                Ok(Expr::new(ExprKind::Name(name), start))
            }
            Tok::BsIdent(name) => {
                self.logic_only(logic, &format!("`{name}`"))?;
                self.advance();
                match name.as_str() {
                    "\\true" => Ok(Expr::new(ExprKind::Bool(true), start)),
                    "\\false" => Ok(Expr::new(ExprKind::Bool(false), start)),
                    "\\result" => Ok(Expr::new(ExprKind::Result, start)),
                    "\\old" => {
                        self.expect(&Tok::LParen, "`(`")?;
                        let e = self.expr(true)?;
                        let end = self.expect(&Tok::RParen, "`)`")?;
                        Ok(Expr::new(ExprKind::Old(Box::new(e)), start.to(&end)))
                    }
                    "\\at" => {
                        self.expect(&Tok::LParen, "`(`")?;
                        let e = self.expr(true)?;
                        self.expect(&Tok::Comma, "`,`")?;
                        let (label, _) = self.ident()?;
                        let label = match label.as_str() {
                            "Pre" | "Old" => Label::Pre,
                            "Here" => Label::Here,
                            other => {
                                return Err(ParseError {
                                    span: self.prev_span(),
                                    message: format!("unsupported label `{other}`"),
                                })
                            }
                        };
                        let end = self.expect(&Tok::RParen, "`)`")?;
                        Ok(Expr::new(ExprKind::At(Box::new(e), label), start.to(&end)))
                    }
                    "\\forall" | "\\exists" => {
                        let q = if name == "\\forall" {
                            Quantifier::Forall
                        } else {
                            Quantifier::Exists
                        };
                        let ty = self.type_name()?;
                        let (var, _) = self.ident()?;
                        self.expect(&Tok::Semi, "`;`")?;
                        let body = self.expr(true)?;
                        let span = start.to(&body.span);
                        Ok(Expr::new(
                            ExprKind::Quant {
                                q,
                                ty,
                                var,
                                body: Box::new(body),
                            },
                            span,
                        ))
                    }
                    _ => {
                        let (args, end) = self.call_args(true)?;
                        Ok(Expr::new(ExprKind::Call(name, args), start.to(&end)))
                    }
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn wrap_ghost(s: Stmt, ghost: bool) -> Stmt {
    if ghost {
        let span = s.span.clone();
        Stmt {
            kind: StmtKind::Ghost(Box::new(s)),
            span,
        }
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source() {
        let p = parse_source("", "e.mc").unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn dangling_comparison_is_blamed() {
        let err = parse_source("/*@ behavior X: ensures \\result == @*/", "e.mc").unwrap_err();
        // `==` sits at columns 33-34
        assert_eq!(
            (err.span.line_start, err.span.col_start, err.span.col_end),
            (1, 33, 34)
        );
        assert!(err.message.contains("dangling `==`"), "{}", err.message);
    }

    #[test]
    fn chained_comparison_only_in_logic() {
        let e = parse_logic_expr("a >= b > c", "x").unwrap();
        match e.kind {
            ExprKind::Compare(operands, ops) => {
                assert_eq!(operands.len(), 3);
                assert_eq!(ops, vec![CmpOp::Ge, CmpOp::Gt]);
            }
            other => panic!("{other:?}"),
        }
        let err = parse_source("void f(void) { bool b = 1 < 2 < 3; }", "x").unwrap_err();
        assert!(err.message.contains("chained"));
    }

    #[test]
    fn implication_is_right_associative() {
        let e = parse_logic_expr("a ==> b ==> c", "x").unwrap();
        let ExprKind::Binary(BinOp::Implies, lhs, rhs) = e.kind else {
            panic!()
        };
        assert_eq!(lhs.kind, ExprKind::Name("a".into()));
        assert!(matches!(rhs.kind, ExprKind::Binary(BinOp::Implies, ..)));
    }

    #[test]
    fn quantifier_body_extends_right() {
        let e = parse_logic_expr("\\forall integer k; 0 <= k < 4 ==> a[k] > 0", "x").unwrap();
        let ExprKind::Quant { var, body, .. } = e.kind else {
            panic!()
        };
        assert_eq!(var, "k");
        assert!(matches!(body.kind, ExprKind::Binary(BinOp::Implies, ..)));
    }

    #[test]
    fn contract_must_precede_function() {
        let err = parse_source("/*@ ensures \\true; @*/\nstatic uint16_t x = 0;", "x").unwrap_err();
        assert!(err.message.contains("attached to a function"));
        let err = parse_source("/*@ ensures \\true; @*/", "x").unwrap_err();
        assert!(err.message.contains("not followed"));
    }

    #[test]
    fn loop_annotation_attaches_to_loop() {
        let src = "void f(void) { int32_t i = 0;\n //@ loop invariant 0 <= i <= 3;\n while (i < 3) { i++; } }";
        let p = parse_source(src, "x").unwrap();
        let body = p.functions[0].body.as_ref().unwrap();
        let StmtKind::While { annot, .. } = &body.stmts[1].kind else {
            panic!()
        };
        assert_eq!(annot.as_ref().unwrap().invariants.len(), 1);
    }

    #[test]
    fn backslash_forms_rejected_in_code() {
        let err = parse_source("int32_t f(void) { return \\result; }", "x").unwrap_err();
        assert!(err.message.contains("only allowed in annotations"));
    }

    #[test]
    fn module_tags_declarations() {
        let p = parse_source("module cbit;\nstatic uint16_t WorkCondition = 0;", "x").unwrap();
        assert_eq!(p.module_vars[0].module.as_deref(), Some("cbit"));
    }
}
