//! Type checking by global monomorphic inference.
//!
//! Signals carry `Sig(σ)`, dereferenced signals produce `List(σ)`,
//! numerals inhabit `nat`, `*` inhabits `unit`, and `nil`/`cons` are
//! polymorphic in the element type. Thread parameters and generated
//! signals without annotations are inferred; inference variables that
//! remain unconstrained default to `unit`.

use crate::syntax::ast::{
    Continuation, DefTable, Expr, Name, Pattern, Program, Rexp, Type, Value,
};
use crate::syntax::canon::visit_names;
use crate::syntax::parser::Module;
use crate::syntax::printer::pretty_type;
use crate::syntax::symbols::Sym;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    Mismatch {
        context: String,
        expected: String,
        found: String,
    },
    #[error("in {context}: {name} is not a signal")]
    NotASignal { context: String, name: String },
    #[error("occurs check failed in {context} (infinite type)")]
    Occurs { context: String },
    #[error("function '{fun}' mentions the free signal '{signal}'; function results may only use names of their arguments")]
    FreeSignalInFun { fun: String, signal: String },
    #[error("in {context}: the matched variable may not occur in the first branch")]
    SubjectInBranch { context: String },
    #[error("unknown signal '{name}'")]
    UnknownSignal { name: String },
}

struct Checker<'m> {
    defs: &'m DefTable,
    subst: HashMap<u32, Type>,
    next_var: u32,
    errors: Vec<TypeError>,
    context: String,
    /// Inferred payload types of generated signals and variables, frame
    /// stack innermost-last.
    env: Vec<Vec<Type>>,
}

impl<'m> Checker<'m> {
    fn fresh(&mut self) -> Type {
        self.next_var += 1;
        Type::Var(self.next_var)
    }

    fn resolve(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => match self.subst.get(v) {
                Some(next) => self.resolve(next),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: u32, t: &Type) -> bool {
        match self.resolve(t) {
            Type::Var(w) => w == v,
            Type::Sig(i) | Type::List(i) => self.occurs(v, &i),
            _ => false,
        }
    }

    fn unify(&mut self, a: &Type, b: &Type) {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (Type::Var(v), _) => {
                if let Type::Var(w) = b {
                    if w == *v {
                        return;
                    }
                }
                if self.occurs(*v, &b) {
                    self.errors.push(TypeError::Occurs {
                        context: self.context.clone(),
                    });
                    return;
                }
                self.subst.insert(*v, b);
            }
            (_, Type::Var(_)) => self.unify(&b, &a),
            (Type::Unit, Type::Unit) | (Type::Nat, Type::Nat) => {}
            (Type::Sig(x), Type::Sig(y)) | (Type::List(x), Type::List(y)) => self.unify(x, y),
            (Type::Data(x), Type::Data(y)) if x == y => {}
            _ => {
                let defs = self.defs;
                self.errors.push(TypeError::Mismatch {
                    context: self.context.clone(),
                    expected: pretty_data(&a, defs),
                    found: pretty_data(&b, defs),
                });
            }
        }
    }

    /// Type of a name reference; always of the form `Sig(σ)` for names in
    /// signal position.
    fn name_type(&mut self, n: Name) -> Type {
        match n {
            Name::Free(s) => match self.defs.signals.get(&s) {
                Some(t) => Type::sig(t.clone()),
                None => {
                    self.errors.push(TypeError::UnknownSignal {
                        name: self.defs.name(s).to_string(),
                    });
                    Type::sig(self.fresh())
                }
            },
            Name::Ext(_) => Type::sig(self.fresh()),
            Name::Idx(up, slot) => {
                let frame = self.env.len().checked_sub(1 + up as usize);
                match frame
                    .and_then(|f| self.env.get(f))
                    .and_then(|f| f.get(slot as usize))
                {
                    Some(t) => t.clone(),
                    None => self.fresh(),
                }
            }
        }
    }

    fn signal_payload(&mut self, n: Name, what: &str) -> Type {
        let t = self.name_type(n);
        let payload = self.fresh();
        let resolved = self.resolve(&t);
        match resolved {
            Type::Sig(inner) => {
                self.unify(&payload, &inner);
            }
            Type::Var(_) => self.unify(&resolved, &Type::sig(payload.clone())),
            other => {
                self.errors.push(TypeError::NotASignal {
                    context: format!("{} ({what})", self.context),
                    name: pretty_data(&other, self.defs),
                });
            }
        }
        payload
    }

    fn expr_type(&mut self, e: &Expr) -> Type {
        match e {
            Expr::Var(n) => self.name_type(*n),
            Expr::Ctor(c, args) => self.ctor_type(*c, args.len(), |this, i| {
                this.expr_type(&args[i])
            }),
            Expr::App(f, args) => {
                let def = match self.defs.funs.get(f) {
                    Some(d) => d.clone(),
                    None => return self.fresh(),
                };
                for (i, a) in args.iter().enumerate() {
                    let at = self.expr_type(a);
                    if let Some(pt) = def.param_types.get(i) {
                        self.unify(pt, &at);
                    }
                }
                def.result_type.clone()
            }
        }
    }

    fn ctor_type(&mut self, c: Sym, arity: usize, mut arg: impl FnMut(&mut Self, usize) -> Type) -> Type {
        if c == Sym::STAR {
            return Type::Unit;
        }
        if c == Sym::NIL {
            return Type::list(self.fresh());
        }
        if c == Sym::CONS {
            let elem = self.fresh();
            if arity == 2 {
                let h = arg(self, 0);
                self.unify(&elem, &h);
                let t = arg(self, 1);
                self.unify(&Type::list(elem.clone()), &t);
            }
            return Type::list(elem);
        }
        if let Some(name) = numeral(self.defs, c) {
            let _ = name;
            return Type::Nat;
        }
        match self.defs.ctors.get(&c) {
            Some(sig) => {
                let sig = sig.clone();
                for i in 0..arity.min(sig.params.len()) {
                    let at = arg(self, i);
                    self.unify(&sig.params[i], &at);
                }
                sig.result
            }
            None => self.fresh(),
        }
    }

    fn rexp_type(&mut self, r: &Rexp) -> Type {
        match r {
            Rexp::Deref(n) => {
                let payload = self.signal_payload(*n, "dereference");
                Type::list(payload)
            }
            Rexp::Var(n) => self.name_type(*n),
            Rexp::Ctor(c, args) => self.ctor_type(*c, args.len(), |this, i| {
                this.rexp_type(&args[i])
            }),
            Rexp::App(f, args) => {
                let def = match self.defs.funs.get(f) {
                    Some(d) => d.clone(),
                    None => return self.fresh(),
                };
                for (i, a) in args.iter().enumerate() {
                    let at = self.rexp_type(a);
                    if let Some(pt) = def.param_types.get(i) {
                        self.unify(pt, &at);
                    }
                }
                def.result_type.clone()
            }
        }
    }

    fn pattern_type(&mut self, p: &Pattern, binds: &mut Vec<Type>) -> Type {
        match p {
            Pattern::Var(_) => {
                let t = self.fresh();
                binds.push(t.clone());
                t
            }
            Pattern::Ctor(c, args) => {
                let mut idx = 0usize;
                let arity = args.len();
                let arg_types: Vec<Type> = (0..arity)
                    .map(|i| {
                        let _ = i;
                        let t = self.pattern_type(&args[idx], binds);
                        idx += 1;
                        t
                    })
                    .collect();
                self.ctor_type(*c, arity, |_, i| arg_types[i].clone())
            }
        }
    }

    fn continuation(&mut self, k: &Continuation) {
        if let Continuation::Call(a, args) = k {
            let def = match self.defs.threads.get(a) {
                Some(d) => d.clone(),
                None => return,
            };
            for (i, r) in args.iter().enumerate() {
                let rt = self.rexp_type(r);
                if let Some(pt) = def.param_types.get(i) {
                    self.unify(pt, &rt);
                }
            }
        }
    }

    fn program(&mut self, p: &Program) {
        match p {
            Program::Nil => {}
            Program::Call(a, es) => {
                let def = match self.defs.threads.get(a) {
                    Some(d) => d.clone(),
                    None => return,
                };
                for (i, e) in es.iter().enumerate() {
                    let et = self.expr_type(e);
                    if let Some(pt) = def.param_types.get(i) {
                        self.unify(pt, &et);
                    }
                }
            }
            Program::Emit(s, e) => {
                let payload = self.signal_payload(*s, "emit");
                let et = self.expr_type(e);
                self.unify(&payload, &et);
            }
            Program::Present {
                signal, body, els, ..
            } => {
                let payload = self.signal_payload(*signal, "present");
                self.env.push(vec![payload]);
                self.program(body);
                self.env.pop();
                self.continuation(els);
            }
            Program::MatchSig {
                left,
                right,
                then_br,
                else_br,
            } => {
                let lt = self.name_type(*left);
                let rt = self.name_type(*right);
                self.unify(&lt, &rt);
                self.program(then_br);
                self.program(else_br);
            }
            Program::MatchVal {
                subject,
                pattern,
                then_br,
                else_br,
            } => {
                let st = self.expr_type(subject);
                let mut binds = Vec::new();
                let pt = self.pattern_type(pattern, &mut binds);
                self.unify(&st, &pt);
                // A matched variable must not recur in the first branch.
                if let Expr::Var(Name::Idx(up, slot)) = subject {
                    let mut found = false;
                    visit_names(then_br, 1, &mut |n, d| {
                        if n == Name::Idx(d + up, *slot) {
                            found = true;
                        }
                    });
                    if found {
                        self.errors.push(TypeError::SubjectInBranch {
                            context: self.context.clone(),
                        });
                    }
                }
                self.env.push(binds);
                self.program(then_br);
                self.env.pop();
                self.program(else_br);
            }
            Program::New { hints, body } => {
                let frame: Vec<Type> = hints.iter().map(|_| Type::sig(self.fresh())).collect();
                self.env.push(frame);
                self.program(body);
                self.env.pop();
            }
            Program::Par(a, b) => {
                self.program(a);
                self.program(b);
            }
        }
    }

    fn value_type(&mut self, v: &Value) -> Type {
        match v {
            Value::Sig(n) => self.name_type(*n),
            Value::Ctor(c, args) => self.ctor_type(*c, args.len(), |this, i| {
                this.value_type(&args[i])
            }),
        }
    }

    fn apply(&self, t: &Type) -> Type {
        match self.resolve(t) {
            Type::Var(_) => Type::Unit,
            Type::Sig(i) => Type::sig(self.apply(&i)),
            Type::List(i) => Type::list(self.apply(&i)),
            other => other,
        }
    }
}

fn numeral(defs: &DefTable, c: Sym) -> Option<&str> {
    let name = defs.name(c);
    if !name.is_empty() && name.chars().all(|ch| ch.is_ascii_digit()) {
        Some(name)
    } else {
        None
    }
}

fn pretty_data(t: &Type, defs: &DefTable) -> String {
    match t {
        Type::Data(s) => defs.name(*s).to_string(),
        Type::Sig(i) => format!("Sig({})", pretty_data(i, defs)),
        Type::List(i) => format!("List({})", pretty_data(i, defs)),
        other => pretty_type(other, defs),
    }
}

/// Check a whole module, resolving inferred types in place.
pub fn typecheck(module: &mut Module) -> Result<(), Vec<TypeError>> {
    let defs_snapshot = module.defs.clone();
    let mut ck = Checker {
        defs: &defs_snapshot,
        subst: HashMap::new(),
        next_var: module.next_tyvar,
        errors: Vec::new(),
        context: String::new(),
        env: Vec::new(),
    };

    // Give every function a signature before checking bodies, so
    // recursion and mutual use unify consistently.
    let mut fun_sigs: Vec<(Sym, Vec<Type>, Type)> = Vec::new();
    for (f, def) in &defs_snapshot.funs {
        let params: Vec<Type> = (0..def.arity).map(|_| ck.fresh()).collect();
        let result = ck.fresh();
        fun_sigs.push((*f, params, result));
    }
    let mut defs_with_sigs = defs_snapshot.clone();
    for (f, params, result) in &fun_sigs {
        let d = defs_with_sigs.funs.get_mut(f).unwrap();
        d.param_types = params.clone();
        d.result_type = result.clone();
    }
    let defs_with_sigs_ref = defs_with_sigs;
    ck.defs = &defs_with_sigs_ref;

    // Function equations.
    for (f, params, result) in &fun_sigs {
        let def = defs_with_sigs_ref.funs[f].clone();
        for (ei, eq) in def.equations.iter().enumerate() {
            ck.context = format!("fun {} (equation {})", defs_with_sigs_ref.name(*f), ei + 1);
            let mut binds = Vec::new();
            for (i, pat) in eq.patterns.iter().enumerate() {
                let pt = ck.pattern_type(pat, &mut binds);
                if let Some(want) = params.get(i) {
                    ck.unify(want, &pt);
                }
            }
            ck.env.push(binds);
            let rt = ck.expr_type(&eq.rhs);
            ck.env.pop();
            ck.unify(result, &rt);
            // Results may only mention names reaching the arguments.
            let mut frees = Vec::new();
            collect_expr_frees(&eq.rhs, &mut frees);
            for s in frees {
                ck.errors.push(TypeError::FreeSignalInFun {
                    fun: defs_with_sigs_ref.name(*f).to_string(),
                    signal: defs_with_sigs_ref.name(s).to_string(),
                });
            }
        }
    }

    // Thread bodies.
    for (a, def) in &defs_with_sigs_ref.threads {
        ck.context = format!("thread {}", defs_with_sigs_ref.name(*a));
        ck.env.push(def.param_types.clone());
        ck.program(&def.body);
        ck.env.pop();
    }

    // Root program and alphabet.
    if let Some(root) = &module.root {
        ck.context = "root program".into();
        ck.program(root);
    }
    for (s, v) in &module.alphabet.pairs {
        ck.context = format!("input {}", defs_with_sigs_ref.name(*s));
        let payload = match defs_with_sigs_ref.signals.get(s) {
            Some(t) => t.clone(),
            None => continue,
        };
        let vt = ck.value_type(v);
        ck.unify(&payload, &vt);
    }

    if !ck.errors.is_empty() {
        let mut es = ck.errors;
        es.dedup();
        return Err(es);
    }

    // Write resolved types back, defaulting leftovers to unit.
    for (a, def) in module.defs.threads.iter_mut() {
        let resolved = defs_with_sigs_ref.threads[a]
            .param_types
            .iter()
            .map(|t| ck.apply(t))
            .collect();
        def.param_types = resolved;
    }
    for (f, params, result) in &fun_sigs {
        let d = module.defs.funs.get_mut(f).unwrap();
        d.param_types = params.iter().map(|t| ck.apply(t)).collect();
        d.result_type = ck.apply(result);
    }
    module.next_tyvar = ck.next_var + 1;
    Ok(())
}

fn collect_expr_frees(e: &Expr, out: &mut Vec<Sym>) {
    match e {
        Expr::Var(Name::Free(s)) => out.push(*s),
        Expr::Var(_) => {}
        Expr::Ctor(_, es) | Expr::App(_, es) => {
            for e in es {
                collect_expr_frees(e, out);
            }
        }
    }
}
