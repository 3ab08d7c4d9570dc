//! Labelled transition system: actions, the shared state space with
//! on-demand edge derivation, bounded exploration and serialization.

pub mod action;
pub mod export;
pub mod space;

pub use action::{compatible, residual, Action, ActionKind, OutAction};
pub use export::{lts_to_dot, lts_to_json};
pub use space::{Edge, EdgeSet, LtsError, LtsInfo, Mode, Space, StateId};

#[cfg(test)]
mod tests;
