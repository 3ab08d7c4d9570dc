//! Syntax: abstract syntax tree, concrete syntax, typing, substitution,
//! matching, evaluation and canonicalization.

pub mod ast;
pub mod canon;
pub mod eval;
pub mod parser;
pub mod printer;
pub mod subst;
pub mod symbols;
pub mod types;

pub use ast::{
    Alphabet, Bounds, Continuation, CtorSig, DefTable, Expr, FunDef, FunEquation, Name, Pattern,
    Program, Rexp, ThreadDef, Type, Value,
};
pub use canon::{canonicalize, struct_equiv, CanonicalState};
pub use eval::{eval_expr, match_value, EvalError};
pub use parser::{parse, Module, ParseError};
pub use printer::{pretty_module, pretty_program, pretty_value};
pub use subst::open_program;
pub use symbols::{Interner, Sym};
pub use types::{typecheck, TypeError};

use indexmap::IndexMap;

/// Merge two modules into one symbol space so that their programs can be
/// compared. Free signals, types, constructors and functions must agree
/// where both files declare them; clashing thread identifiers from the
/// second module are renamed. Returns the merged module together with
/// both root programs re-expressed in it.
pub fn merge_modules(a: &Module, b: &Module) -> Result<(Module, Program, Program), String> {
    let mut merged = a.clone();
    let mut map: IndexMap<Sym, Sym> = IndexMap::new();

    // Carry the builtin symbols over unchanged.
    for i in 0..4u32 {
        map.insert(Sym(i), Sym(i));
    }

    let resolve = |merged: &mut Module, map: &mut IndexMap<Sym, Sym>, s: Sym, b: &Module| -> Sym {
        if let Some(t) = map.get(&s) {
            return *t;
        }
        let t = merged.defs.interner.intern(b.defs.name(s));
        map.insert(s, t);
        t
    };

    // Types and constructors.
    for (name, ctors) in &b.defs.types {
        let tname = resolve(&mut merged, &mut map, *name, b);
        let mapped_ctors: Vec<Sym> = ctors
            .iter()
            .map(|c| resolve(&mut merged, &mut map, *c, b))
            .collect();
        match merged.defs.types.get(&tname) {
            None => {
                merged.defs.types.insert(tname, mapped_ctors.clone());
            }
            Some(existing) if *existing == mapped_ctors => {}
            Some(_) => {
                return Err(format!(
                    "conflicting declarations of type '{}'",
                    merged.defs.name(tname)
                ))
            }
        }
        for (c, mc) in ctors.iter().zip(&mapped_ctors) {
            let sig = remap_ctor_sig(&b.defs.ctors[c], &mut merged, &mut map, b);
            match merged.defs.ctors.get(mc) {
                None => {
                    merged.defs.ctors.insert(*mc, sig);
                }
                Some(existing)
                    if existing.params == sig.params && existing.result == sig.result => {}
                Some(_) => {
                    return Err(format!(
                        "conflicting declarations of constructor '{}'",
                        merged.defs.name(*mc)
                    ))
                }
            }
        }
    }

    // Signals.
    for (name, ty) in &b.defs.signals {
        let s = resolve(&mut merged, &mut map, *name, b);
        let ty = remap_type(ty, &mut merged, &mut map, b);
        match merged.defs.signals.get(&s) {
            None => {
                merged.defs.signals.insert(s, ty);
            }
            Some(existing) if *existing == ty => {}
            Some(_) => {
                return Err(format!(
                    "signal '{}' is declared at different types",
                    merged.defs.name(s)
                ))
            }
        }
    }

    // Functions: both sides must agree exactly when shared.
    for (name, def) in &b.defs.funs {
        let f = resolve(&mut merged, &mut map, *name, b);
        let mapped = FunDef {
            arity: def.arity,
            equations: def
                .equations
                .iter()
                .map(|eq| FunEquation {
                    patterns: eq
                        .patterns
                        .iter()
                        .map(|p| remap_pattern(p, &mut merged, &mut map, b))
                        .collect(),
                    rhs: remap_expr(&eq.rhs, &mut merged, &mut map, b),
                })
                .collect(),
            param_types: def
                .param_types
                .iter()
                .map(|t| remap_type(t, &mut merged, &mut map, b))
                .collect(),
            result_type: remap_type(&def.result_type, &mut merged, &mut map, b),
        };
        match merged.defs.funs.get(&f) {
            None => {
                merged.defs.funs.insert(f, mapped);
            }
            Some(existing) if fun_defs_equal(existing, &mapped) => {}
            Some(_) => {
                return Err(format!(
                    "conflicting definitions of function '{}'",
                    merged.defs.name(f)
                ))
            }
        }
    }

    // Threads: rename clashes from the second module.
    let mut thread_map: IndexMap<Sym, Sym> = IndexMap::new();
    for name in b.defs.threads.keys() {
        let base = b.defs.name(*name).to_string();
        let target = if merged.defs.interner.get(&base).is_some_and(|s| {
            merged.defs.threads.contains_key(&s)
        }) {
            merged.defs.interner.intern_fresh(&base)
        } else {
            merged.defs.interner.intern(&base)
        };
        thread_map.insert(*name, target);
    }
    for (name, def) in &b.defs.threads {
        let target = thread_map[name];
        let mapped = ThreadDef {
            params: def
                .params
                .iter()
                .map(|p| resolve(&mut merged, &mut map, *p, b))
                .collect(),
            param_types: def
                .param_types
                .iter()
                .map(|t| remap_type(t, &mut merged, &mut map, b))
                .collect(),
            body: remap_program(&def.body, &mut merged, &mut map, &thread_map, b),
        };
        merged.defs.threads.insert(target, mapped);
    }

    // Alphabet union.
    for (s, v) in &b.alphabet.pairs {
        let s = resolve(&mut merged, &mut map, *s, b);
        let v = remap_value(v, &mut merged, &mut map, b);
        if !merged.alphabet.pairs.contains(&(s, v.clone())) {
            merged.alphabet.pairs.push((s, v));
        }
    }
    merged.defs.fuel = merged.defs.fuel.max(b.defs.fuel);

    let root_a = a.root.clone().unwrap_or(Program::Nil);
    let root_b = match &b.root {
        Some(r) => remap_program(r, &mut merged, &mut map, &thread_map, b),
        None => Program::Nil,
    };
    merged.root = Some(root_a.clone());
    Ok((merged, root_a, root_b))
}

fn fun_defs_equal(a: &FunDef, b: &FunDef) -> bool {
    a.arity == b.arity
        && a.equations.len() == b.equations.len()
        && a.equations
            .iter()
            .zip(&b.equations)
            .all(|(x, y)| x.patterns == y.patterns && x.rhs == y.rhs)
}

fn remap_ctor_sig(
    sig: &CtorSig,
    merged: &mut Module,
    map: &mut IndexMap<Sym, Sym>,
    b: &Module,
) -> CtorSig {
    CtorSig {
        params: sig
            .params
            .iter()
            .map(|t| remap_type(t, merged, map, b))
            .collect(),
        result: remap_type(&sig.result, merged, map, b),
    }
}

fn remap_sym(s: Sym, merged: &mut Module, map: &mut IndexMap<Sym, Sym>, b: &Module) -> Sym {
    if let Some(t) = map.get(&s) {
        return *t;
    }
    let t = merged.defs.interner.intern(b.defs.name(s));
    map.insert(s, t);
    t
}

fn remap_type(t: &Type, merged: &mut Module, map: &mut IndexMap<Sym, Sym>, b: &Module) -> Type {
    match t {
        Type::Data(s) => Type::Data(remap_sym(*s, merged, map, b)),
        Type::Sig(i) => Type::sig(remap_type(i, merged, map, b)),
        Type::List(i) => Type::list(remap_type(i, merged, map, b)),
        other => other.clone(),
    }
}

fn remap_name(n: Name, merged: &mut Module, map: &mut IndexMap<Sym, Sym>, b: &Module) -> Name {
    match n {
        Name::Free(s) => Name::Free(remap_sym(s, merged, map, b)),
        other => other,
    }
}

fn remap_value(v: &Value, merged: &mut Module, map: &mut IndexMap<Sym, Sym>, b: &Module) -> Value {
    match v {
        Value::Sig(n) => Value::Sig(remap_name(*n, merged, map, b)),
        Value::Ctor(c, args) => Value::Ctor(
            remap_sym(*c, merged, map, b),
            args.iter().map(|a| remap_value(a, merged, map, b)).collect(),
        ),
    }
}

fn remap_expr(e: &Expr, merged: &mut Module, map: &mut IndexMap<Sym, Sym>, b: &Module) -> Expr {
    match e {
        Expr::Var(n) => Expr::Var(remap_name(*n, merged, map, b)),
        Expr::Ctor(c, es) => Expr::Ctor(
            remap_sym(*c, merged, map, b),
            es.iter().map(|e| remap_expr(e, merged, map, b)).collect(),
        ),
        Expr::App(f, es) => Expr::App(
            remap_sym(*f, merged, map, b),
            es.iter().map(|e| remap_expr(e, merged, map, b)).collect(),
        ),
    }
}

fn remap_rexp(r: &Rexp, merged: &mut Module, map: &mut IndexMap<Sym, Sym>, b: &Module) -> Rexp {
    match r {
        Rexp::Deref(n) => Rexp::Deref(remap_name(*n, merged, map, b)),
        Rexp::Var(n) => Rexp::Var(remap_name(*n, merged, map, b)),
        Rexp::Ctor(c, rs) => Rexp::Ctor(
            remap_sym(*c, merged, map, b),
            rs.iter().map(|r| remap_rexp(r, merged, map, b)).collect(),
        ),
        Rexp::App(f, rs) => Rexp::App(
            remap_sym(*f, merged, map, b),
            rs.iter().map(|r| remap_rexp(r, merged, map, b)).collect(),
        ),
    }
}

fn remap_pattern(
    p: &Pattern,
    merged: &mut Module,
    map: &mut IndexMap<Sym, Sym>,
    b: &Module,
) -> Pattern {
    match p {
        Pattern::Var(h) => Pattern::Var(remap_sym(*h, merged, map, b)),
        Pattern::Ctor(c, ps) => Pattern::Ctor(
            remap_sym(*c, merged, map, b),
            ps.iter()
                .map(|p| remap_pattern(p, merged, map, b))
                .collect(),
        ),
    }
}

fn remap_program(
    p: &Program,
    merged: &mut Module,
    map: &mut IndexMap<Sym, Sym>,
    threads: &IndexMap<Sym, Sym>,
    b: &Module,
) -> Program {
    match p {
        Program::Nil => Program::Nil,
        Program::Call(a, es) => Program::Call(
            threads.get(a).copied().unwrap_or(*a),
            es.iter().map(|e| remap_expr(e, merged, map, b)).collect(),
        ),
        Program::Emit(s, e) => Program::Emit(
            remap_name(*s, merged, map, b),
            remap_expr(e, merged, map, b),
        ),
        Program::Present {
            signal,
            hint,
            body,
            els,
        } => Program::Present {
            signal: remap_name(*signal, merged, map, b),
            hint: remap_sym(*hint, merged, map, b),
            body: Box::new(remap_program(body, merged, map, threads, b)),
            els: match els {
                Continuation::Halt => Continuation::Halt,
                Continuation::Call(a, rs) => Continuation::Call(
                    threads.get(a).copied().unwrap_or(*a),
                    rs.iter().map(|r| remap_rexp(r, merged, map, b)).collect(),
                ),
            },
        },
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => Program::MatchSig {
            left: remap_name(*left, merged, map, b),
            right: remap_name(*right, merged, map, b),
            then_br: Box::new(remap_program(then_br, merged, map, threads, b)),
            else_br: Box::new(remap_program(else_br, merged, map, threads, b)),
        },
        Program::MatchVal {
            subject,
            pattern,
            then_br,
            else_br,
        } => Program::MatchVal {
            subject: remap_expr(subject, merged, map, b),
            pattern: remap_pattern(pattern, merged, map, b),
            then_br: Box::new(remap_program(then_br, merged, map, threads, b)),
            else_br: Box::new(remap_program(else_br, merged, map, threads, b)),
        },
        Program::New { hints, body } => Program::New {
            hints: hints
                .iter()
                .map(|h| remap_sym(*h, merged, map, b))
                .collect(),
            body: Box::new(remap_program(body, merged, map, threads, b)),
        },
        Program::Par(x, y) => Program::Par(
            Box::new(remap_program(x, merged, map, threads, b)),
            Box::new(remap_program(y, merged, map, threads, b)),
        ),
    }
}

#[cfg(test)]
mod tests;
