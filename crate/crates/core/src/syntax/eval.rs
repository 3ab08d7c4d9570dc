//! Pattern matching and expression evaluation.
//!
//! Function symbols are defined by first-match rewrite equations and
//! evaluated call-by-value under a fuel budget, so a non-terminating
//! user function surfaces as an error instead of a hang.

use crate::syntax::ast::{DefTable, Expr, Pattern, Value};
use crate::syntax::symbols::Sym;
use crate::syntax::subst::open_expr;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("function evaluation exceeded the fuel budget (suspected non-termination in '{fun}')")]
    FuelExhausted { fun: String },
    #[error("no equation of '{fun}' matches the arguments")]
    NoEquation { fun: String },
    #[error("unknown function symbol '{fun}'")]
    UnknownFun { fun: String },
}

/// Match a closed value against a linear pattern. On success the
/// resulting substitution lists the bound values in slot order, i.e.
/// left-to-right over the pattern variables.
pub fn match_value(v: &Value, p: &Pattern) -> Option<Vec<Value>> {
    let mut binds = Vec::with_capacity(p.arity() as usize);
    if match_into(v, p, &mut binds) {
        Some(binds)
    } else {
        None
    }
}

fn match_into(v: &Value, p: &Pattern, binds: &mut Vec<Value>) -> bool {
    match p {
        Pattern::Var(_) => {
            binds.push(v.clone());
            true
        }
        Pattern::Ctor(c, ps) => match v {
            Value::Ctor(d, vs) if d == c && vs.len() == ps.len() => {
                vs.iter().zip(ps).all(|(v, p)| match_into(v, p, binds))
            }
            _ => false,
        },
    }
}

/// Evaluate a closed expression (signal names, bound or free, count as
/// constants). Deterministic: the first matching equation fires.
pub fn eval_expr(e: &Expr, defs: &DefTable) -> Result<Value, EvalError> {
    let mut fuel = defs.fuel;
    eval_with_fuel(e, defs, &mut fuel)
}

fn eval_with_fuel(e: &Expr, defs: &DefTable, fuel: &mut u32) -> Result<Value, EvalError> {
    match e {
        Expr::Var(n) => Ok(Value::Sig(*n)),
        Expr::Ctor(c, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_with_fuel(a, defs, fuel)?);
            }
            Ok(Value::Ctor(*c, vals))
        }
        Expr::App(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_with_fuel(a, defs, fuel)?);
            }
            apply(*f, &vals, defs, fuel)
        }
    }
}

fn apply(f: Sym, args: &[Value], defs: &DefTable, fuel: &mut u32) -> Result<Value, EvalError> {
    let def = defs.funs.get(&f).ok_or_else(|| EvalError::UnknownFun {
        fun: defs.name(f).to_string(),
    })?;
    if *fuel == 0 {
        return Err(EvalError::FuelExhausted {
            fun: defs.name(f).to_string(),
        });
    }
    *fuel -= 1;
    'eqs: for eq in &def.equations {
        let mut binds = Vec::new();
        for (v, p) in args.iter().zip(&eq.patterns) {
            if !match_into(v, p, &mut binds) {
                continue 'eqs;
            }
        }
        let body = open_expr(&eq.rhs, &binds);
        return eval_with_fuel(&body, defs, fuel);
    }
    Err(EvalError::NoEquation {
        fun: defs.name(f).to_string(),
    })
}

/// Evaluate a vector of expressions left to right.
pub fn eval_exprs(es: &[Expr], defs: &DefTable) -> Result<Vec<Value>, EvalError> {
    es.iter().map(|e| eval_expr(e, defs)).collect()
}
