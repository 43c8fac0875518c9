//! Source printer. Output reparses to a structurally identical [`Program`]
//! (compare after [`Program::clear_spans`]); formatting is not preserved.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(p: &Program) -> String {
    let mut out = Printer {
        buf: String::new(),
        indent: 0,
        module: None,
    };
    out.program(p);
    out.buf
}

/// Prints a single expression.
pub fn expr_to_string(e: &Expr) -> String {
    expr(e)
}

struct Printer {
    buf: String,
    indent: usize,
    module: Option<String>,
}

impl Printer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.buf.push_str("    ");
        }
        self.buf.push_str(s);
        self.buf.push('\n');
    }

    fn enter_module(&mut self, m: &Option<String>) {
        if let Some(name) = m {
            if self.module.as_ref() != Some(name) {
                self.line(&format!("module {name};"));
                self.module = Some(name.clone());
            }
        }
    }

    fn program(&mut self, p: &Program) {
        for i in &p.imports {
            self.line(&format!("import \"{}\";", i.path));
        }
        // A `module` directive cannot be undone, so everything declared
        // outside any module goes first. Within each list the unqualified
        // items precede the qualified ones anyway (source order).
        for pass in [false, true] {
            let keep = |m: &Option<String>| m.is_some() == pass;
            for d in p.constants.iter().filter(|d| keep(&d.module)) {
                self.enter_module(&d.module);
                let s = var_decl(d);
                self.line(&s);
            }
            for d in p.module_vars.iter().filter(|d| keep(&d.module)) {
                self.enter_module(&d.module);
                let s = var_decl(d);
                self.line(&s);
            }
            for d in p.ghost_decls.iter().filter(|d| keep(&d.module)) {
                self.enter_module(&d.module);
                let s = format!("//@ ghost {}", var_decl(d));
                self.line(&s);
            }
            for d in p
                .predicates
                .iter()
                .chain(&p.logic_functions)
                .filter(|d| keep(&d.module))
            {
                self.enter_module(&d.module);
                let s = format!("/*@ {} @*/", logic_def(d));
                self.line(&s);
            }
            for f in p.functions.iter().filter(|f| keep(&f.module)) {
                self.enter_module(&f.module);
                self.function(f);
            }
        }
    }

    fn function(&mut self, f: &FunctionDef) {
        if let Some(c) = &f.contract {
            self.contract(c);
        }
        let mut head = String::new();
        if f.attrs.is_static {
            head.push_str("static ");
        }
        if f.attrs.hardware {
            head.push_str("hardware ");
        }
        let params = if f.params.is_empty() {
            "void".to_string()
        } else {
            f.params
                .iter()
                .map(|p| {
                    format!(
                        "{}{} {}",
                        p.ty.keyword(),
                        if p.out { "*" } else { "" },
                        p.name
                    )
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = write!(head, "{} {}({})", f.return_type.keyword(), f.name, params);
        match &f.body {
            None => self.line(&format!("{head};")),
            Some(b) => {
                self.line(&head);
                self.block(b);
            }
        }
    }

    fn contract(&mut self, c: &Contract) {
        self.line("/*@");
        for r in &c.requires {
            self.line(&format!("  @ requires {};", expr(r)));
        }
        if let Some(targets) = &c.assigns {
            let locs: Vec<String> = targets.iter().map(|t| location(&t.location)).collect();
            self.line(&format!("  @ assigns {};", locs.join(", ")));
        }
        for b in &c.behaviors {
            if b.is_default() {
                for e in &b.ensures {
                    self.line(&format!("  @ ensures {};", expr(e)));
                }
            }
        }
        for b in c.behaviors.iter().filter(|b| !b.is_default()) {
            self.line(&format!("  @ behavior {}:", b.name));
            for e in &b.assumes {
                self.line(&format!("  @   assumes {};", expr(e)));
            }
            for e in &b.ensures {
                self.line(&format!("  @   ensures {};", expr(e)));
            }
        }
        if c.complete_declared {
            self.line("  @ complete behaviors;");
        }
        if c.disjoint_declared {
            self.line("  @ disjoint behaviors;");
        }
        self.line("  @*/");
    }

    fn block(&mut self, b: &Block) {
        self.line("{");
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
        self.line("}");
    }

    fn loop_annot(&mut self, annot: &Option<LoopAnnot>) {
        if let Some(a) = annot {
            let clauses: Vec<String> = a
                .invariants
                .iter()
                .map(|e| format!("loop invariant {};", expr(e)))
                .collect();
            self.line(&format!("/*@ {} @*/", clauses.join(" ")));
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Ghost(inner) => {
                let text = simple_stmt(inner).unwrap_or_default();
                self.line(&format!("//@ ghost {text};"));
            }
            StmtKind::Assert(e) => self.line(&format!("//@ assert {};", expr(e))),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.line(&format!("if ({})", expr(cond)));
                self.block(then_block);
                if let Some(b) = else_block {
                    self.line("else");
                    self.block(b);
                }
            }
            StmtKind::While { cond, body, annot } => {
                self.loop_annot(annot);
                self.line(&format!("while ({})", expr(cond)));
                self.block(body);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
                annot,
            } => {
                self.loop_annot(annot);
                let init = init
                    .as_ref()
                    .and_then(|s| simple_stmt(s))
                    .unwrap_or_default();
                let cond = cond.as_ref().map(expr).unwrap_or_default();
                let step = step
                    .as_ref()
                    .and_then(|s| simple_stmt(s))
                    .unwrap_or_default();
                self.line(&format!("for ({init}; {cond}; {step})"));
                self.block(body);
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", expr(e))),
            StmtKind::Break => self.line("break;"),
            StmtKind::Continue => self.line("continue;"),
            StmtKind::ExternEffect => self.line("extern_effect;"),
            StmtKind::Block(b) => self.block(b),
            _ => {
                let text = simple_stmt(s).unwrap_or_default();
                self.line(&format!("{text};"));
            }
        }
    }
}

/// Declarations, assignments and call statements, without the `;`.
fn simple_stmt(s: &Stmt) -> Option<String> {
    Some(match &s.kind {
        StmtKind::Decl { ty, name, init } => match init {
            Some(e) => format!("{} {} = {}", ty.keyword(), name, expr(e)),
            None => format!("{} {}", ty.keyword(), name),
        },
        StmtKind::Assign { target, value } => format!("{} = {}", expr(target), expr(value)),
        StmtKind::Expr(e) => expr(e),
        _ => return None,
    })
}

fn var_decl(d: &VarDecl) -> String {
    let mut s = String::new();
    if d.storage == Storage::Static {
        s.push_str("static ");
    }
    if d.is_const {
        s.push_str("const ");
    }
    let _ = write!(s, "{} {}", d.ty.keyword(), d.name);
    if let Some(n) = d.array_len {
        let _ = write!(s, "[{n}]");
    }
    match &d.init {
        None => {}
        Some(Initializer::Expr(e)) => {
            let _ = write!(s, " = {}", expr(e));
        }
        Some(Initializer::List(items)) => {
            let items: Vec<String> = items.iter().map(expr).collect();
            let _ = write!(s, " = {{{}}}", items.join(", "));
        }
    }
    s.push(';');
    s
}

fn logic_def(d: &LogicDef) -> String {
    let head = match d.return_type {
        None => format!("predicate {}", d.name),
        Some(t) => format!("logic {} {}", t.keyword(), d.name),
    };
    let params = if d.params.is_empty() {
        String::new()
    } else {
        let ps: Vec<String> = d
            .params
            .iter()
            .map(|p| format!("{} {}", p.ty.keyword(), p.name))
            .collect();
        format!("({})", ps.join(", "))
    };
    format!("{head}{params} = {};", expr(&d.body))
}

fn location(l: &Location) -> String {
    match l {
        Location::Nothing => "\\nothing".into(),
        Location::Name(n) => n.clone(),
        Location::Qualified(m, v) => format!("{m}::{v}"),
        Location::Deref(p) => format!("*{p}"),
    }
}

fn is_atom(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Int(_)
            | ExprKind::Real(_)
            | ExprKind::Bool(_)
            | ExprKind::Name(_)
            | ExprKind::Qualified(..)
            | ExprKind::Result
            | ExprKind::Old(_)
            | ExprKind::At(..)
            | ExprKind::Call(..)
            | ExprKind::Index(..)
    )
}

/// Operand position: anything compound is parenthesized.
fn operand(e: &Expr) -> String {
    if is_atom(e) {
        expr(e)
    } else {
        format!("({})", expr(e))
    }
}

fn real_literal(v: f64) -> String {
    // `{:?}` is the shortest representation that reads back to the same
    // binary64 and always has a `.` or exponent.
    format!("{v:?}")
}

fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Real(v) => real_literal(*v),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Qualified(m, v) => format!("{m}::{v}"),
        ExprKind::Result => "\\result".into(),
        ExprKind::Old(x) => format!("\\old({})", expr(x)),
        ExprKind::At(x, label) => {
            let l = match label {
                Label::Pre => "Pre",
                Label::Here => "Here",
            };
            format!("\\at({}, {l})", expr(x))
        }
        ExprKind::Unary(op, x) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
                UnOp::Deref => "*",
                UnOp::AddrOf => "&",
            };
            format!("{sym}{}", operand(x))
        }
        ExprKind::Binary(op, a, b) => format!("{} {} {}", operand(a), op.symbol(), operand(b)),
        ExprKind::Compare(items, ops) => {
            let mut s = operand(&items[0]);
            for (op, it) in ops.iter().zip(&items[1..]) {
                let _ = write!(s, " {} {}", op.symbol(), operand(it));
            }
            s
        }
        ExprKind::Call(name, args) => {
            let args: Vec<String> = args.iter().map(expr).collect();
            format!("{name}({})", args.join(", "))
        }
        ExprKind::Index(base, idx) => format!("{}[{}]", operand(base), expr(idx)),
        ExprKind::Cast(ty, x) => format!("({}) {}", ty.keyword(), operand(x)),
        ExprKind::Quant { q, ty, var, body } => {
            let kw = match q {
                Quantifier::Forall => "\\forall",
                Quantifier::Exists => "\\exists",
            };
            format!("{kw} {} {var}; {}", ty.keyword(), expr(body))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn round_trip(src: &str) {
        let mut a = parse_source(src, "a.mc").unwrap();
        let printed = pretty_print(&a);
        let mut b = parse_source(&printed, "b.mc").unwrap_or_else(|e| panic!("{e}\n{printed}"));
        a.clear_spans();
        b.clear_spans();
        assert_eq!(a, b, "{printed}");
    }

    #[test]
    fn expressions_round_trip() {
        round_trip("/*@ ensures a - (b - c) == -1 && !(x < y) ==> \\old(z[1]) >= 2.5e-3 > -(4); @*/ void f(void);");
        round_trip("/*@ predicate P(integer k) = \\forall integer i; 0 <= i < k ==> (i % 2 == 0 || i % 2 == 1); @*/");
    }

    #[test]
    fn statements_round_trip() {
        round_trip(
            "module m;\nstatic uint16_t s = 3;\nint32_t f(int32_t* o, uint16_t k) {\n int32_t i = 0;\n \
             //@ loop invariant 0 <= i <= 4;\n while (i < 4) { i++; if (i == 2) { continue; } }\n \
             for (i = 0; i < 2; i += 1) s = (uint16_t) i;\n *o = i; return i; }",
        );
    }
}
