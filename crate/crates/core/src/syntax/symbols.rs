//! String interning. A `Sym` is an index into the interner owned by the
//! enclosing [`Module`](crate::syntax::Module); builtin symbols occupy
//! fixed low indices so they can be named as constants.

use indexmap::IndexSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub u32);

impl Sym {
    pub const STAR: Sym = Sym(0);
    pub const NIL: Sym = Sym(1);
    pub const CONS: Sym = Sym(2);
    /// Placeholder hint used for all binders in canonical states, so that
    /// alpha-equivalent terms are structurally identical.
    pub const CANON: Sym = Sym(3);
}

const BUILTINS: [&str; 4] = ["*", "nil", "cons", "%canon"];

#[derive(Debug, Clone)]
pub struct Interner {
    names: IndexSet<String>,
}

impl Default for Interner {
    fn default() -> Self {
        Self::new()
    }
}

impl Interner {
    pub fn new() -> Self {
        let mut names = IndexSet::new();
        for b in BUILTINS {
            names.insert(b.to_string());
        }
        Interner { names }
    }

    pub fn intern(&mut self, s: &str) -> Sym {
        if let Some(i) = self.names.get_index_of(s) {
            return Sym(i as u32);
        }
        let (i, _) = self.names.insert_full(s.to_string());
        Sym(i as u32)
    }

    pub fn get(&self, s: &str) -> Option<Sym> {
        self.names.get_index_of(s).map(|i| Sym(i as u32))
    }

    pub fn resolve(&self, sym: Sym) -> &str {
        self.names
            .get_index(sym.0 as usize)
            .map(String::as_str)
            .unwrap_or("%canon")
    }

    /// Intern `base`, or `base_2`, `base_3`, ... until an unused name is
    /// found. Used when merging definition tables with clashing thread ids.
    pub fn intern_fresh(&mut self, base: &str) -> Sym {
        if self.names.get_index_of(base).is_none() {
            return self.intern(base);
        }
        for k in 2.. {
            let candidate = format!("{base}_{k}");
            if self.names.get_index_of(&candidate).is_none() {
                return self.intern(&candidate);
            }
        }
        unreachable!()
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sym#{}", self.0)
    }
}
