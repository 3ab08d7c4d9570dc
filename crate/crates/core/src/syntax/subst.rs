//! Capture-avoiding substitution over de Bruijn frames.
//!
//! `open` instantiates the innermost frame of a term with values;
//! `shift` adjusts a term that is being moved under extra binders.
//! Capture is impossible by construction: bound occurrences are indices,
//! and values being substituted are shifted past every frame they cross.

use crate::syntax::ast::{Continuation, Expr, Name, Program, Rexp, Value};

fn subst_name(n: Name, depth: u16, args: &[Value]) -> Name {
    match n {
        Name::Idx(up, slot) if up == depth => {
            let v = args
                .get(slot as usize)
                .unwrap_or_else(|| panic!("substitution slot {slot} out of range"));
            match v.shifted(depth) {
                Value::Sig(m) => m,
                other => panic!("non-signal value {other:?} substituted into name position"),
            }
        }
        Name::Idx(up, slot) if up > depth => Name::Idx(up - 1, slot),
        other => other,
    }
}

fn subst_expr(e: &Expr, depth: u16, args: &[Value]) -> Expr {
    match e {
        Expr::Var(Name::Idx(up, slot)) if *up == depth => {
            args[*slot as usize].shifted(depth).as_expr()
        }
        Expr::Var(Name::Idx(up, slot)) if *up > depth => Expr::Var(Name::Idx(up - 1, *slot)),
        Expr::Var(n) => Expr::Var(*n),
        Expr::Ctor(c, es) => Expr::Ctor(*c, es.iter().map(|e| subst_expr(e, depth, args)).collect()),
        Expr::App(f, es) => Expr::App(*f, es.iter().map(|e| subst_expr(e, depth, args)).collect()),
    }
}

fn subst_rexp(r: &Rexp, depth: u16, args: &[Value]) -> Rexp {
    match r {
        Rexp::Deref(n) => Rexp::Deref(subst_name(*n, depth, args)),
        Rexp::Var(Name::Idx(up, slot)) if *up == depth => {
            expr_to_rexp(&args[*slot as usize].shifted(depth).as_expr())
        }
        Rexp::Var(Name::Idx(up, slot)) if *up > depth => Rexp::Var(Name::Idx(up - 1, *slot)),
        Rexp::Var(n) => Rexp::Var(*n),
        Rexp::Ctor(c, rs) => Rexp::Ctor(*c, rs.iter().map(|r| subst_rexp(r, depth, args)).collect()),
        Rexp::App(f, rs) => Rexp::App(*f, rs.iter().map(|r| subst_rexp(r, depth, args)).collect()),
    }
}

pub fn expr_to_rexp(e: &Expr) -> Rexp {
    match e {
        Expr::Var(n) => Rexp::Var(*n),
        Expr::Ctor(c, es) => Rexp::Ctor(*c, es.iter().map(expr_to_rexp).collect()),
        Expr::App(f, es) => Rexp::App(*f, es.iter().map(expr_to_rexp).collect()),
    }
}

fn subst_cont(k: &Continuation, depth: u16, args: &[Value]) -> Continuation {
    match k {
        Continuation::Halt => Continuation::Halt,
        Continuation::Call(a, rs) => {
            Continuation::Call(*a, rs.iter().map(|r| subst_rexp(r, depth, args)).collect())
        }
    }
}

fn subst_program(p: &Program, depth: u16, args: &[Value]) -> Program {
    match p {
        Program::Nil => Program::Nil,
        Program::Call(a, es) => {
            Program::Call(*a, es.iter().map(|e| subst_expr(e, depth, args)).collect())
        }
        Program::Emit(s, e) => Program::Emit(subst_name(*s, depth, args), subst_expr(e, depth, args)),
        Program::Present {
            signal,
            hint,
            body,
            els,
        } => Program::Present {
            signal: subst_name(*signal, depth, args),
            hint: *hint,
            body: Box::new(subst_program(body, depth + 1, args)),
            els: subst_cont(els, depth, args),
        },
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => Program::MatchSig {
            left: subst_name(*left, depth, args),
            right: subst_name(*right, depth, args),
            then_br: Box::new(subst_program(then_br, depth, args)),
            else_br: Box::new(subst_program(else_br, depth, args)),
        },
        Program::MatchVal {
            subject,
            pattern,
            then_br,
            else_br,
        } => Program::MatchVal {
            subject: subst_expr(subject, depth, args),
            pattern: pattern.clone(),
            then_br: Box::new(subst_program(then_br, depth + 1, args)),
            else_br: Box::new(subst_program(else_br, depth, args)),
        },
        Program::New { hints, body } => Program::New {
            hints: hints.clone(),
            body: Box::new(subst_program(body, depth + 1, args)),
        },
        Program::Par(a, b) => Program::Par(
            Box::new(subst_program(a, depth, args)),
            Box::new(subst_program(b, depth, args)),
        ),
    }
}

/// Instantiate the innermost frame of `p` with `args`. Frame references
/// above the instantiated one move down by one.
pub fn open_program(p: &Program, args: &[Value]) -> Program {
    subst_program(p, 0, args)
}

/// Instantiate the frame of an expression (function equation right-hand
/// sides and call arguments inside thread bodies are handled through
/// `open_program`; this is for standalone expressions).
pub fn open_expr(e: &Expr, args: &[Value]) -> Expr {
    subst_expr(e, 0, args)
}

fn shift_name(n: Name, by: u16, cutoff: u16) -> Name {
    match n {
        Name::Idx(up, slot) if up >= cutoff => Name::Idx(up + by, slot),
        other => other,
    }
}

fn shift_expr(e: &Expr, by: u16, cutoff: u16) -> Expr {
    match e {
        Expr::Var(n) => Expr::Var(shift_name(*n, by, cutoff)),
        Expr::Ctor(c, es) => Expr::Ctor(*c, es.iter().map(|e| shift_expr(e, by, cutoff)).collect()),
        Expr::App(f, es) => Expr::App(*f, es.iter().map(|e| shift_expr(e, by, cutoff)).collect()),
    }
}

fn shift_rexp(r: &Rexp, by: u16, cutoff: u16) -> Rexp {
    match r {
        Rexp::Deref(n) => Rexp::Deref(shift_name(*n, by, cutoff)),
        Rexp::Var(n) => Rexp::Var(shift_name(*n, by, cutoff)),
        Rexp::Ctor(c, rs) => Rexp::Ctor(*c, rs.iter().map(|r| shift_rexp(r, by, cutoff)).collect()),
        Rexp::App(f, rs) => Rexp::App(*f, rs.iter().map(|r| shift_rexp(r, by, cutoff)).collect()),
    }
}

fn shift_cont(k: &Continuation, by: u16, cutoff: u16) -> Continuation {
    match k {
        Continuation::Halt => Continuation::Halt,
        Continuation::Call(a, rs) => {
            Continuation::Call(*a, rs.iter().map(|r| shift_rexp(r, by, cutoff)).collect())
        }
    }
}

/// Move `p` under `by` additional frames: every reference that escapes
/// `cutoff` local frames is bumped.
pub fn shift_program(p: &Program, by: u16, cutoff: u16) -> Program {
    if by == 0 {
        return p.clone();
    }
    match p {
        Program::Nil => Program::Nil,
        Program::Call(a, es) => {
            Program::Call(*a, es.iter().map(|e| shift_expr(e, by, cutoff)).collect())
        }
        Program::Emit(s, e) => Program::Emit(shift_name(*s, by, cutoff), shift_expr(e, by, cutoff)),
        Program::Present {
            signal,
            hint,
            body,
            els,
        } => Program::Present {
            signal: shift_name(*signal, by, cutoff),
            hint: *hint,
            body: Box::new(shift_program(body, by, cutoff + 1)),
            els: shift_cont(els, by, cutoff),
        },
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => Program::MatchSig {
            left: shift_name(*left, by, cutoff),
            right: shift_name(*right, by, cutoff),
            then_br: Box::new(shift_program(then_br, by, cutoff)),
            else_br: Box::new(shift_program(else_br, by, cutoff)),
        },
        Program::MatchVal {
            subject,
            pattern,
            then_br,
            else_br,
        } => Program::MatchVal {
            subject: shift_expr(subject, by, cutoff),
            pattern: pattern.clone(),
            then_br: Box::new(shift_program(then_br, by, cutoff + 1)),
            else_br: Box::new(shift_program(else_br, by, cutoff)),
        },
        Program::New { hints, body } => Program::New {
            hints: hints.clone(),
            body: Box::new(shift_program(body, by, cutoff + 1)),
        },
        Program::Par(a, b) => Program::Par(
            Box::new(shift_program(a, by, cutoff)),
            Box::new(shift_program(b, by, cutoff)),
        ),
    }
}

/// Apply a name-for-name renaming to every name position of a program.
/// Used when extruding bound signals (spine slots become `Ext` names).
pub fn rename_program(p: &Program, f: &impl Fn(Name, u16) -> Name, depth: u16) -> Program {
    match p {
        Program::Nil => Program::Nil,
        Program::Call(a, es) => {
            Program::Call(*a, es.iter().map(|e| rename_expr(e, f, depth)).collect())
        }
        Program::Emit(s, e) => Program::Emit(f(*s, depth), rename_expr(e, f, depth)),
        Program::Present {
            signal,
            hint,
            body,
            els,
        } => Program::Present {
            signal: f(*signal, depth),
            hint: *hint,
            body: Box::new(rename_program(body, f, depth + 1)),
            els: rename_cont(els, f, depth),
        },
        Program::MatchSig {
            left,
            right,
            then_br,
            else_br,
        } => Program::MatchSig {
            left: f(*left, depth),
            right: f(*right, depth),
            then_br: Box::new(rename_program(then_br, f, depth)),
            else_br: Box::new(rename_program(else_br, f, depth)),
        },
        Program::MatchVal {
            subject,
            pattern,
            then_br,
            else_br,
        } => Program::MatchVal {
            subject: rename_expr(subject, f, depth),
            pattern: pattern.clone(),
            then_br: Box::new(rename_program(then_br, f, depth + 1)),
            else_br: Box::new(rename_program(else_br, f, depth)),
        },
        Program::New { hints, body } => Program::New {
            hints: hints.clone(),
            body: Box::new(rename_program(body, f, depth + 1)),
        },
        Program::Par(a, b) => Program::Par(
            Box::new(rename_program(a, f, depth)),
            Box::new(rename_program(b, f, depth)),
        ),
    }
}

pub fn rename_expr(e: &Expr, f: &impl Fn(Name, u16) -> Name, depth: u16) -> Expr {
    match e {
        Expr::Var(n) => Expr::Var(f(*n, depth)),
        Expr::Ctor(c, es) => Expr::Ctor(*c, es.iter().map(|e| rename_expr(e, f, depth)).collect()),
        Expr::App(g, es) => Expr::App(*g, es.iter().map(|e| rename_expr(e, f, depth)).collect()),
    }
}

pub fn rename_value(v: &Value, f: &impl Fn(Name, u16) -> Name, depth: u16) -> Value {
    match v {
        Value::Sig(n) => Value::Sig(f(*n, depth)),
        Value::Ctor(c, vs) => Value::Ctor(*c, vs.iter().map(|v| rename_value(v, f, depth)).collect()),
    }
}

fn rename_cont(k: &Continuation, f: &impl Fn(Name, u16) -> Name, depth: u16) -> Continuation {
    match k {
        Continuation::Halt => Continuation::Halt,
        Continuation::Call(a, rs) => {
            Continuation::Call(*a, rs.iter().map(|r| rename_rexp(r, f, depth)).collect())
        }
    }
}

fn rename_rexp(r: &Rexp, f: &impl Fn(Name, u16) -> Name, depth: u16) -> Rexp {
    match r {
        Rexp::Deref(n) => Rexp::Deref(f(*n, depth)),
        Rexp::Var(n) => Rexp::Var(f(*n, depth)),
        Rexp::Ctor(c, rs) => Rexp::Ctor(*c, rs.iter().map(|r| rename_rexp(r, f, depth)).collect()),
        Rexp::App(g, rs) => Rexp::App(*g, rs.iter().map(|r| rename_rexp(r, f, depth)).collect()),
    }
}

/// Shift a continuation under `by` additional frames.
pub fn shift_continuation(k: &Continuation, by: u16, cutoff: u16) -> Continuation {
    shift_cont(k, by, cutoff)
}
