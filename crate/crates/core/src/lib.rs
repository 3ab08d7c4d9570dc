//! A synchronous pi-calculus with valued signals: executable semantics,
//! labelled transition systems, weak bisimulation checking and
//! determinacy/confluence analysis.
//!
//! Signals broadcast within an instant: emitted values persist until the
//! whole program suspends, at which point an end-of-instant transition
//! collects the emitted values, resets the signals and starts the next
//! instant. The [`syntax`] module gives the language and its canonical
//! forms, [`lts`] derives the transition system, [`equiv`] decides weak
//! bisimulation and its variant formulations, and [`analysis`] checks
//! reactivity, determinacy and confluence over explored state spaces.

pub mod analysis;
pub mod equiv;
pub mod gen;
pub mod lts;
pub mod syntax;
