//! Library backing the `spi` binary: command implementations and the
//! bundled example corpus. Machine-readable results go to stdout,
//! diagnostics to stderr; every command is deterministic given its
//! arguments and seed.

pub mod commands;
pub mod corpus;

pub use commands::{
    analyze_source, bisim_sources, bounds_from_env, check_source, lts_source, run_source,
    BisimOptions, CliError, LtsFormat, RunOptions, RunPolicy, VPolicy,
};

/// Exit codes shared by the binary and the tests.
pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    /// `bisim`: the programs are distinguished; `analyze`: a requested
    /// property fails.
    pub const DISTINGUISHED: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
}
