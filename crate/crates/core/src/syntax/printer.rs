//! Pretty-printing back to the concrete syntax.
//!
//! Binder names come from the recorded hints, disambiguated with ticks
//! whenever a hint would capture a free signal or a referenced outer
//! binder occurring in its body. Canonical states carry erased hints and
//! are printed with positional names instead (`s0, s1, ...` for the
//! hoisted prefix, `x0, x1, ...` for inner binders).

use crate::syntax::ast::{
    Alphabet, Continuation, DefTable, Expr, Name, Pattern, Program, Rexp, Type, Value,
};
use crate::syntax::symbols::Sym;

pub struct Printer<'d> {
    defs: &'d DefTable,
    frames: Vec<Vec<String>>,
    fresh: usize,
    positional: bool,
}

impl<'d> Printer<'d> {
    pub fn new(defs: &'d DefTable) -> Self {
        Printer {
            defs,
            frames: Vec::new(),
            fresh: 0,
            positional: false,
        }
    }

    /// Printer for canonical terms: ignores hints, generates positional
    /// names. `spine` holds the names of the hoisted prefix frame.
    pub fn positional(defs: &'d DefTable, spine: Vec<String>) -> Self {
        Printer {
            defs,
            frames: vec![spine],
            fresh: 0,
            positional: true,
        }
    }

    fn name_str(&self, n: Name) -> String {
        match n {
            Name::Free(s) => self.defs.name(s).to_string(),
            Name::Ext(i) => format!("~e{i}"),
            Name::Idx(up, slot) => {
                let depth = self.frames.len();
                let frame = depth.checked_sub(1 + up as usize);
                match frame.and_then(|f| self.frames.get(f)).and_then(|f| f.get(slot as usize)) {
                    Some(s) => s.clone(),
                    None => format!("#{up}.{slot}"),
                }
            }
        }
    }

    fn push_frame(&mut self, hints: &[Sym], avoid: Vec<String>) {
        let mut names = Vec::with_capacity(hints.len());
        if self.positional {
            for _ in hints {
                names.push(format!("x{}", self.fresh));
                self.fresh += 1;
            }
        } else {
            for h in hints {
                let base = self.defs.name(*h).to_string();
                let mut candidate = base.clone();
                while avoid.contains(&candidate) || names.contains(&candidate) {
                    candidate.push('\'');
                }
                names.push(candidate);
            }
        }
        self.frames.push(names);
    }

    fn pop_frame(&mut self) {
        self.frames.pop();
    }

    /// Names that a binder at the current depth must not shadow: free
    /// signals occurring in the body and printed names of outer frames
    /// the body actually references.
    fn avoid_set(&self, body: &Program, avoid: &mut Vec<String>) {
        let mut frees = Vec::new();
        let mut refs = Vec::new();
        collect_program(body, 1, &mut frees, &mut refs);
        for s in frees {
            avoid.push(self.defs.name(s).to_string());
        }
        // `refs` holds (up - depth) for indices escaping the new binder.
        let depth = self.frames.len();
        for escape in refs {
            if let Some(frame) = depth.checked_sub(1 + escape) {
                if let Some(names) = self.frames.get(frame) {
                    avoid.extend(names.iter().cloned());
                }
            }
        }
    }

    pub fn program(&mut self, p: &Program, out: &mut String) {
        self.program_prec(p, false, out);
    }

    /// `in_par` forces parentheses around right-open forms (`new`,
    /// `match`) so that `||` continues to parse at the outer level.
    fn program_prec(&mut self, p: &Program, in_par: bool, out: &mut String) {
        match p {
            Program::Nil => out.push('0'),
            Program::Call(a, es) => {
                out.push_str(self.defs.name(*a));
                out.push('(');
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.expr(e, out);
                }
                out.push(')');
            }
            Program::Emit(s, e) => {
                out.push_str("emit ");
                out.push_str(&self.name_str(*s));
                out.push(' ');
                self.expr(e, out);
            }
            Program::Present {
                signal,
                hint,
                body,
                els,
            } => {
                out.push_str("present ");
                out.push_str(&self.name_str(*signal));
                out.push('(');
                let mut avoid = Vec::new();
                self.avoid_set(body, &mut avoid);
                self.push_frame(std::slice::from_ref(hint), avoid);
                out.push_str(&self.frames.last().unwrap()[0]);
                out.push_str(") { ");
                self.program_prec(body, false, out);
                out.push_str(" }");
                self.pop_frame();
                out.push_str(" else ");
                self.continuation(els, out);
            }
            Program::MatchSig {
                left,
                right,
                then_br,
                else_br,
            } => {
                out.push_str("if ");
                out.push_str(&self.name_str(*left));
                out.push_str(" = ");
                out.push_str(&self.name_str(*right));
                out.push_str(" { ");
                self.program_prec(then_br, false, out);
                out.push_str(" } else { ");
                self.program_prec(else_br, false, out);
                out.push_str(" }");
            }
            Program::MatchVal {
                subject,
                pattern,
                then_br,
                else_br,
            } => {
                if in_par {
                    out.push('(');
                }
                out.push_str("match ");
                self.expr(subject, out);
                out.push_str(" with ");
                let mut hints = Vec::new();
                pattern.var_hints(&mut hints);
                let mut avoid = Vec::new();
                self.avoid_set(then_br, &mut avoid);
                self.push_frame(&hints, avoid);
                let frame = self.frames.last().unwrap().clone();
                let mut next = 0usize;
                self.pattern(pattern, &frame, &mut next, out);
                out.push_str(" -> (");
                self.program_prec(then_br, false, out);
                out.push(')');
                self.pop_frame();
                out.push_str(" | _ -> (");
                self.program_prec(else_br, false, out);
                out.push(')');
                if in_par {
                    out.push(')');
                }
            }
            Program::New { hints, body } => {
                if in_par {
                    out.push('(');
                }
                out.push_str("new ");
                let mut avoid = Vec::new();
                self.avoid_set(body, &mut avoid);
                self.push_frame(hints, avoid);
                let names = self.frames.last().unwrap().clone();
                out.push_str(&names.join(", "));
                out.push_str(" in ");
                self.program_prec(body, false, out);
                self.pop_frame();
                if in_par {
                    out.push(')');
                }
            }
            Program::Par(a, b) => {
                if in_par {
                    out.push('(');
                }
                self.program_prec(a, true, out);
                out.push_str(" || ");
                self.program_prec(b, true, out);
                if in_par {
                    out.push(')');
                }
            }
        }
    }

    fn continuation(&mut self, k: &Continuation, out: &mut String) {
        match k {
            Continuation::Halt => out.push('0'),
            Continuation::Call(a, rs) => {
                out.push_str(self.defs.name(*a));
                out.push('(');
                for (i, r) in rs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.rexp(r, out);
                }
                out.push(')');
            }
        }
    }

    pub fn expr(&mut self, e: &Expr, out: &mut String) {
        match e {
            Expr::Var(n) => out.push_str(&self.name_str(*n)),
            Expr::Ctor(c, args) => self.ctor_app(*c, args.len(), out, |this, i, out| {
                this.expr(&args[i], out)
            }),
            Expr::App(f, args) => {
                out.push_str(self.defs.name(*f));
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.expr(a, out);
                }
                out.push(')');
            }
        }
    }

    fn rexp(&mut self, r: &Rexp, out: &mut String) {
        match r {
            Rexp::Deref(n) => {
                out.push('!');
                out.push_str(&self.name_str(*n));
            }
            Rexp::Var(n) => out.push_str(&self.name_str(*n)),
            Rexp::Ctor(c, args) => self.ctor_app(*c, args.len(), out, |this, i, out| {
                this.rexp(&args[i], out)
            }),
            Rexp::App(f, args) => {
                out.push_str(self.defs.name(*f));
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.rexp(a, out);
                }
                out.push(')');
            }
        }
    }

    /// Shared constructor-application rendering with the list sugar:
    /// nil-terminated cons chains print as `[a; b]`, other cons cells as
    /// `h :: t`, everything else as `c(args...)`.
    fn ctor_app(
        &mut self,
        c: Sym,
        arity: usize,
        out: &mut String,
        mut arg: impl FnMut(&mut Self, usize, &mut String),
    ) {
        if c == Sym::NIL && arity == 0 {
            out.push_str("[]");
            return;
        }
        if c == Sym::CONS && arity == 2 {
            out.push('(');
            arg(self, 0, out);
            out.push_str(" :: ");
            arg(self, 1, out);
            out.push(')');
            return;
        }
        out.push_str(self.defs.name(c));
        if arity > 0 {
            out.push('(');
            for i in 0..arity {
                if i > 0 {
                    out.push_str(", ");
                }
                arg(self, i, out);
            }
            out.push(')');
        }
    }

    fn pattern(&mut self, p: &Pattern, frame: &[String], next: &mut usize, out: &mut String) {
        match p {
            Pattern::Var(_) => {
                out.push_str(&frame[*next]);
                *next += 1;
            }
            Pattern::Ctor(c, args) => {
                if *c == Sym::NIL && args.is_empty() {
                    out.push_str("[]");
                } else if *c == Sym::CONS && args.len() == 2 {
                    out.push('(');
                    self.pattern(&args[0], frame, next, out);
                    out.push_str(" :: ");
                    self.pattern(&args[1], frame, next, out);
                    out.push(')');
                } else {
                    out.push_str(self.defs.name(*c));
                    if !args.is_empty() {
                        out.push('(');
                        for (i, a) in args.iter().enumerate() {
                            if i > 0 {
                                out.push_str(", ");
                            }
                            self.pattern(a, frame, next, out);
                        }
                        out.push(')');
                    }
                }
            }
        }
    }

    pub fn value(&mut self, v: &Value, out: &mut String) {
        // Values print exactly like the corresponding expression, with
        // the list sugar applied to closed lists.
        if let Some(items) = closed_list(v) {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                self.value(item, out);
            }
            out.push(']');
            return;
        }
        match v {
            Value::Sig(n) => out.push_str(&self.name_str(*n)),
            Value::Ctor(c, args) => self.ctor_app(*c, args.len(), out, |this, i, out| {
                this.value(&args[i], out)
            }),
        }
    }
}

fn closed_list(v: &Value) -> Option<Vec<&Value>> {
    let mut items = Vec::new();
    let mut cur = v;
    loop {
        match cur {
            Value::Ctor(c, args) if *c == Sym::NIL && args.is_empty() => return Some(items),
            Value::Ctor(c, args) if *c == Sym::CONS && args.len() == 2 => {
                items.push(&args[0]);
                cur = &args[1];
            }
            _ => return None,
        }
    }
}

/// Collect free signal symbols and escaping frame references of a
/// program. `depth` counts frames between the traversal point and the
/// reference level; escapes are reported as `up - depth`.
fn collect_program(p: &Program, depth: u16, frees: &mut Vec<Sym>, escapes: &mut Vec<usize>) {
    let mut on_name = |n: &Name, d: u16| match n {
        Name::Free(s) => {
            if !frees.contains(s) {
                frees.push(*s);
            }
        }
        Name::Idx(up, _) if *up >= d => escapes.push((*up - d) as usize),
        _ => {}
    };
    match p {
        Program::Nil => {}
        Program::Call(_, es) => {
            for e in es {
                collect_expr(e, depth, frees, escapes);
            }
        }
        Program::Emit(s, e) => {
            on_name(s, depth);
            collect_expr(e, depth, frees, escapes);
        }
        Program::Present {
            signal, body, els, ..
        } => {
            on_name(signal, depth);
            collect_program(body, depth + 1, frees, escapes);
            if let Continuation::Call(_, rs) = els {
                for r in rs {
                    collect_rexp(r, depth, frees, escapes);
                }
            }
        }
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => {
            on_name(left, depth);
            on_name(right, depth);
            collect_program(then_br, depth, frees, escapes);
            collect_program(else_br, depth, frees, escapes);
        }
        Program::MatchVal {
            subject,
            then_br,
            else_br,
            ..
        } => {
            collect_expr(subject, depth, frees, escapes);
            collect_program(then_br, depth + 1, frees, escapes);
            collect_program(else_br, depth, frees, escapes);
        }
        Program::New { body, .. } => collect_program(body, depth + 1, frees, escapes),
        Program::Par(a, b) => {
            collect_program(a, depth, frees, escapes);
            collect_program(b, depth, frees, escapes);
        }
    }
}

fn collect_expr(e: &Expr, depth: u16, frees: &mut Vec<Sym>, escapes: &mut Vec<usize>) {
    match e {
        Expr::Var(Name::Free(s)) => {
            if !frees.contains(s) {
                frees.push(*s);
            }
        }
        Expr::Var(Name::Idx(up, _)) if *up >= depth => escapes.push((*up - depth) as usize),
        Expr::Var(_) => {}
        Expr::Ctor(_, es) | Expr::App(_, es) => {
            for e in es {
                collect_expr(e, depth, frees, escapes);
            }
        }
    }
}

fn collect_rexp(r: &Rexp, depth: u16, frees: &mut Vec<Sym>, escapes: &mut Vec<usize>) {
    match r {
        Rexp::Deref(Name::Free(s)) | Rexp::Var(Name::Free(s)) => {
            if !frees.contains(s) {
                frees.push(*s);
            }
        }
        Rexp::Deref(Name::Idx(up, _)) | Rexp::Var(Name::Idx(up, _)) if *up >= depth => {
            escapes.push((*up - depth) as usize)
        }
        Rexp::Deref(_) | Rexp::Var(_) => {}
        Rexp::Ctor(_, rs) | Rexp::App(_, rs) => {
            for r in rs {
                collect_rexp(r, depth, frees, escapes);
            }
        }
    }
}

pub fn pretty_program(p: &Program, defs: &DefTable) -> String {
    let mut out = String::new();
    Printer::new(defs).program(p, &mut out);
    out
}

pub fn pretty_value(v: &Value, defs: &DefTable) -> String {
    let mut out = String::new();
    Printer::new(defs).value(v, &mut out);
    out
}

pub fn pretty_type(t: &Type, defs: &DefTable) -> String {
    match t {
        Type::Unit => "unit".into(),
        Type::Nat => "nat".into(),
        Type::Sig(i) => format!("Sig({})", pretty_type(i, defs)),
        Type::List(i) => format!("List({})", pretty_type(i, defs)),
        Type::Data(s) => defs.name(*s).to_string(),
        Type::Var(v) => format!("?{v}"),
    }
}

/// Render a whole module back to source form.
pub fn pretty_module(defs: &DefTable, root: Option<&Program>, alphabet: &Alphabet) -> String {
    let mut out = String::new();
    for (name, ctors) in &defs.types {
        out.push_str("type ");
        out.push_str(defs.name(*name));
        out.push_str(" = ");
        for (i, c) in ctors.iter().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            out.push_str(defs.name(*c));
            let sig = &defs.ctors[c];
            if !sig.params.is_empty() {
                out.push('(');
                for (j, t) in sig.params.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&pretty_type(t, defs));
                }
                out.push(')');
            }
        }
        out.push('\n');
    }
    for (name, ty) in &defs.signals {
        out.push_str(&format!("signal {} : {}\n", defs.name(*name), pretty_type(ty, defs)));
    }
    for (f, def) in &defs.funs {
        for eq in &def.equations {
            out.push_str("fun ");
            out.push_str(defs.name(*f));
            out.push('(');
            let mut pr = Printer::new(defs);
            let mut hints = Vec::new();
            for p in &eq.patterns {
                p.var_hints(&mut hints);
            }
            let frame: Vec<String> = hints.iter().map(|h| defs.name(*h).to_string()).collect();
            pr.frames.push(frame.clone());
            let mut next = 0usize;
            for (i, p) in eq.patterns.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                pr.pattern(p, &frame, &mut next, &mut out);
            }
            out.push_str(") = ");
            pr.expr(&eq.rhs, &mut out);
            out.push('\n');
        }
    }
    for (name, def) in &defs.threads {
        out.push_str(defs.name(*name));
        out.push('(');
        for (i, (p, t)) in def.params.iter().zip(&def.param_types).enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(defs.name(*p));
            out.push_str(" : ");
            out.push_str(&pretty_type(t, defs));
        }
        out.push_str(") = ");
        let mut pr = Printer::new(defs);
        pr.frames
            .push(def.params.iter().map(|p| defs.name(*p).to_string()).collect());
        pr.program(&def.body, &mut out);
        out.push('\n');
    }
    for (s, v) in &alphabet.pairs {
        out.push_str(&format!(
            "input {} : {}\n",
            defs.name(*s),
            pretty_value(v, defs)
        ));
    }
    if let Some(p) = root {
        out.push_str(&pretty_program(p, defs));
        out.push('\n');
    }
    out
}
