//! Abstract syntax of the calculus: names, values, patterns, expressions,
//! programs and definition tables.
//!
//! Binders use de Bruijn *frames*: every binding construct introduces one
//! frame holding one or more variables, and a bound occurrence is addressed
//! as `Idx(up, slot)` where `up` counts frames outward and `slot` indexes
//! into that frame. Frames are introduced by `New` (the generated signals),
//! the body of `Present` (the received value), the first branch of
//! `MatchVal` (the pattern variables, in left-to-right order), thread
//! definition bodies (the parameters) and function equation right-hand
//! sides (the pattern variables).

use crate::syntax::symbols::Sym;
use indexmap::IndexMap;
use std::fmt;

/// A reference to a signal or value variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Name {
    /// Signal constant declared at top level of a source file.
    Free(Sym),
    /// Name that was extruded to the environment during exploration.
    /// The id is allocated by the state space and is stable within it.
    Ext(u32),
    /// Bound occurrence: `up` frames outward, position `slot` in the frame.
    Idx(u16, u16),
}

impl Name {
    pub fn is_bound(&self) -> bool {
        matches!(self, Name::Idx(..))
    }

    /// Shift frame references by `by` frames, leaving slots intact.
    /// Used when a closed-at-depth-0 term is placed under `by` extra frames.
    pub fn shifted(self, by: u16) -> Name {
        match self {
            Name::Idx(up, slot) => Name::Idx(up + by, slot),
            other => other,
        }
    }
}

/// A closed first-order value: a signal name or a constructor application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Sig(Name),
    Ctor(Sym, Vec<Value>),
}

impl Value {
    pub fn unit() -> Value {
        Value::Ctor(Sym::STAR, vec![])
    }

    pub fn nil() -> Value {
        Value::Ctor(Sym::NIL, vec![])
    }

    pub fn cons(head: Value, tail: Value) -> Value {
        Value::Ctor(Sym::CONS, vec![head, tail])
    }

    pub fn list(items: impl IntoIterator<Item = Value>) -> Value {
        let items: Vec<Value> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(Value::nil(), |acc, v| Value::cons(v, acc))
    }

    /// Bump all bound-name references by `by` frames.
    pub fn shifted(&self, by: u16) -> Value {
        if by == 0 {
            return self.clone();
        }
        match self {
            Value::Sig(n) => Value::Sig(n.shifted(by)),
            Value::Ctor(c, args) => {
                Value::Ctor(*c, args.iter().map(|a| a.shifted(by)).collect())
            }
        }
    }

    /// All names occurring in the value, in first-occurrence order.
    pub fn names(&self, out: &mut Vec<Name>) {
        match self {
            Value::Sig(n) => {
                if !out.contains(n) {
                    out.push(*n);
                }
            }
            Value::Ctor(_, args) => {
                for a in args {
                    a.names(out);
                }
            }
        }
    }

    pub fn as_expr(&self) -> Expr {
        match self {
            Value::Sig(n) => Expr::Var(*n),
            Value::Ctor(c, args) => Expr::Ctor(*c, args.iter().map(Value::as_expr).collect()),
        }
    }
}

/// An expression: variables, constructor applications, function applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Var(Name),
    Ctor(Sym, Vec<Expr>),
    App(Sym, Vec<Expr>),
}

impl Expr {
    /// Interpret a closed, function-free expression as a value.
    pub fn as_value(&self) -> Option<Value> {
        match self {
            Expr::Var(n) => Some(Value::Sig(*n)),
            Expr::Ctor(c, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.as_value()?);
                }
                Some(Value::Ctor(*c, vals))
            }
            Expr::App(..) => None,
        }
    }
}

/// An expression that may dereference a signal (`!s`), legal only in
/// continuation arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rexp {
    Deref(Name),
    Var(Name),
    Ctor(Sym, Vec<Rexp>),
    App(Sym, Vec<Rexp>),
}

/// A linear pattern. Variables bind in left-to-right traversal order;
/// the wildcard `_` also occupies a slot but its hint is not subject to
/// the linearity check.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Var(Sym),
    Ctor(Sym, Vec<Pattern>),
}

impl Pattern {
    /// Number of variable slots bound by the pattern.
    pub fn arity(&self) -> u16 {
        match self {
            Pattern::Var(_) => 1,
            Pattern::Ctor(_, args) => args.iter().map(Pattern::arity).sum(),
        }
    }

    pub fn var_hints(&self, out: &mut Vec<Sym>) {
        match self {
            Pattern::Var(h) => out.push(*h),
            Pattern::Ctor(_, args) => {
                for a in args {
                    a.var_hints(out);
                }
            }
        }
    }
}

/// Continuation evaluated at the end of the instant: either termination
/// or a recursive call whose arguments may dereference signals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Continuation {
    Halt,
    Call(Sym, Vec<Rexp>),
}

/// A program term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    /// Terminated thread.
    Nil,
    /// Recursive call of a thread identifier.
    Call(Sym, Vec<Expr>),
    /// Emit the value of the expression on the signal.
    Emit(Name, Expr),
    /// `s(x).P,K` — read a value emitted on `s` this instant, or run `K`
    /// at the end of the instant. Binds one slot in `body`.
    Present {
        signal: Name,
        hint: Sym,
        body: Box<Program>,
        els: Continuation,
    },
    /// `[s1 = s2] P1, P2` — name matching.
    MatchSig {
        left: Name,
        right: Name,
        then_br: Box<Program>,
        else_br: Box<Program>,
    },
    /// `[u ≫ p] P1, P2` — pattern matching. Binds `pattern.arity()` slots
    /// in `then_br`; `else_br` binds nothing.
    MatchVal {
        subject: Expr,
        pattern: Pattern,
        then_br: Box<Program>,
        else_br: Box<Program>,
    },
    /// Generate fresh signals and run the body. Binds `hints.len()` slots.
    New { hints: Vec<Sym>, body: Box<Program> },
    Par(Box<Program>, Box<Program>),
}

impl Program {
    pub fn par(components: impl IntoIterator<Item = Program>) -> Program {
        let mut comps: Vec<Program> = components.into_iter().collect();
        match comps.len() {
            0 => Program::Nil,
            1 => comps.pop().unwrap(),
            _ => {
                let mut it = comps.into_iter();
                let first = it.next().unwrap();
                it.fold(first, |acc, p| Program::Par(Box::new(acc), Box::new(p)))
            }
        }
    }
}

/// Typed thread definition `A(x⃗) = P`. The body binds one frame of
/// `params.len()` slots.
#[derive(Debug, Clone)]
pub struct ThreadDef {
    pub params: Vec<Sym>,
    pub param_types: Vec<Type>,
    pub body: Program,
}

/// One rewrite equation `f(p⃗) = e`. The right-hand side binds one frame
/// holding the pattern variables of all argument patterns, left to right.
#[derive(Debug, Clone)]
pub struct FunEquation {
    pub patterns: Vec<Pattern>,
    pub rhs: Expr,
}

#[derive(Debug, Clone)]
pub struct FunDef {
    pub arity: usize,
    pub equations: Vec<FunEquation>,
    pub param_types: Vec<Type>,
    pub result_type: Type,
}

/// Constructor signature. Builtin `nil`/`cons` are polymorphic in the
/// element type and handled specially by the type checker; user-declared
/// constructors are monomorphic.
#[derive(Debug, Clone)]
pub struct CtorSig {
    pub params: Vec<Type>,
    pub result: Type,
}

/// First-order types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Unit,
    Nat,
    Sig(Box<Type>),
    List(Box<Type>),
    Data(Sym),
    /// Inference variable; absent from checked tables.
    Var(u32),
}

impl Type {
    pub fn sig(inner: Type) -> Type {
        Type::Sig(Box::new(inner))
    }
    pub fn list(inner: Type) -> Type {
        Type::List(Box::new(inner))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Unit => write!(f, "unit"),
            Type::Nat => write!(f, "nat"),
            Type::Sig(t) => write!(f, "Sig({t})"),
            Type::List(t) => write!(f, "List({t})"),
            Type::Data(_) => write!(f, "<data>"),
            Type::Var(v) => write!(f, "?{v}"),
        }
    }
}

/// Declared alphabet of environment inputs: the finite set of
/// (signal, value) pairs rule `(in)` is closed over.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    pub pairs: Vec<(Sym, Value)>,
}

impl Alphabet {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, &Value)> {
        self.pairs.iter().map(|(s, v)| (*s, v))
    }
}

/// Exploration bounds. All fields are positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: usize,
    pub max_instants: usize,
    pub max_v_perms: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_states: 20_000,
            max_depth: 4_000,
            max_instants: 256,
            max_v_perms: 720,
        }
    }
}

/// Table of thread definitions, function equations, constructor
/// signatures, type declarations and free-signal declarations, plus the
/// interner all their symbols live in.
#[derive(Debug, Clone)]
pub struct DefTable {
    pub interner: crate::syntax::symbols::Interner,
    pub threads: IndexMap<Sym, ThreadDef>,
    pub funs: IndexMap<Sym, FunDef>,
    pub ctors: IndexMap<Sym, CtorSig>,
    pub types: IndexMap<Sym, Vec<Sym>>,
    pub signals: IndexMap<Sym, Type>,
    /// Rewrite-step budget for function evaluation.
    pub fuel: u32,
}

pub const DEFAULT_FUEL: u32 = 10_000;

impl Default for DefTable {
    fn default() -> Self {
        Self::new()
    }
}

impl DefTable {
    pub fn new() -> Self {
        DefTable {
            interner: crate::syntax::symbols::Interner::new(),
            threads: IndexMap::new(),
            funs: IndexMap::new(),
            ctors: IndexMap::new(),
            types: IndexMap::new(),
            signals: IndexMap::new(),
            fuel: DEFAULT_FUEL,
        }
    }

    pub fn name(&self, sym: Sym) -> &str {
        self.interner.resolve(sym)
    }
}
