//! Command-line front end.

use clap::{Args, Parser, Subcommand, ValueEnum};
use spi_cli::commands::{
    analyze_source, bisim_sources, bounds_from_env, check_source, lts_source, run_source,
    BisimOptions, LtsFormat, RunOptions, RunPolicy, VPolicy,
};
use spi_cli::exit_codes;
use spi_core::equiv::game::Variant;
use spi_core::syntax::ast::Bounds;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spi",
    about = "Synchronous pi-calculus: checker, interpreter, transition systems, bisimulation and determinacy analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct BoundArgs {
    /// Maximum number of explored states.
    #[arg(long)]
    max_states: Option<usize>,
    /// Maximum exploration depth.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Maximum number of instants explored along a path.
    #[arg(long)]
    max_instants: Option<usize>,
    /// Cap on end-of-instant collection permutations.
    #[arg(long)]
    max_v_perms: Option<usize>,
}

impl BoundArgs {
    fn resolve(&self) -> Bounds {
        let mut b = bounds_from_env();
        if let Some(v) = self.max_states {
            b.max_states = v;
        }
        if let Some(v) = self.max_depth {
            b.max_depth = v;
        }
        if let Some(v) = self.max_instants {
            b.max_instants = v;
        }
        if let Some(v) = self.max_v_perms {
            b.max_v_perms = v;
        }
        b
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Canonical,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum VPolicyArg {
    Sorted,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Standard,
    W,
    V1,
    V2,
    V3,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::W => Variant::WVariant,
            VariantArg::V1 => Variant::V1,
            VariantArg::V2 => Variant::V2,
            VariantArg::V3 => Variant::V3,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a source file.
    Check { file: PathBuf },
    /// Execute a number of instants and print the trace as JSON.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        instants: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Canonical)]
        policy: PolicyArg,
        #[arg(long, value_enum, default_value_t = VPolicyArg::Sorted)]
        v_policy: VPolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Explore the labelled transition system and print it.
    Lts {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Additional alphabet declarations (a file of `input` items).
        #[arg(long)]
        alphabet: Option<PathBuf>,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Decide weak bisimilarity of the root programs of two files.
    /// Exits 0 when equivalent, 2 when distinguished, 3 when
    /// inconclusive.
    Bisim {
        file_p: PathBuf,
        file_q: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
        variant: VariantArg,
        /// Allow internal steps after answering a next-instant move.
        #[arg(long)]
        relaxed_n: bool,
        /// Emission-context size bound of the third variant's game.
        #[arg(long, default_value_t = 2)]
        context_size: usize,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Check reactivity, determinacy and confluence properties.
    /// Exits 0 when all requested properties hold, 2 when one fails,
    /// 3 when inconclusive.
    Analyze {
        file: PathBuf,
        /// Comma-separated property list (default: all).
        #[arg(long, value_delimiter = ',')]
        properties: Option<Vec<String>>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Run the bundled example corpus against its expected verdicts.
    Corpus {
        /// Load `.spi` sources from this directory instead of the
        /// bundled copies.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            exit_codes::ERROR
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Check { file } => {
            let src = read(&file)?;
            match check_source(&src, &file.display().to_string()) {
                Ok(_) => {
                    eprintln!("{}: ok", file.display());
                    Ok(exit_codes::OK)
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Run {
            file,
            instants,
            policy,
            v_policy,
            seed,
            bounds,
        } => {
            let src = read(&file)?;
            let opts = RunOptions {
                instants,
                policy: match policy {
                    PolicyArg::Canonical => RunPolicy::Canonical,
                    PolicyArg::Random => RunPolicy::Random,
                },
                v_policy: match v_policy {
                    VPolicyArg::Sorted => VPolicy::Sorted,
                    VPolicyArg::Random => VPolicy::Random,
                },
                seed,
                bounds: bounds.resolve(),
            };
            let trace = run_source(&src, &file.display().to_string(), opts)
                .map_err(|e| e.to_string())?;
            print!("{trace}");
            Ok(exit_codes::OK)
        }
        Command::Lts {
            file,
            format,
            alphabet,
            out,
            bounds,
        } => {
            let src = read(&file)?;
            let extra = match &alphabet {
                Some(p) => Some(read(p)?),
                None => None,
            };
            let rendered = lts_source(
                &src,
                &file.display().to_string(),
                extra.as_deref(),
                match format {
                    FormatArg::Json => LtsFormat::Json,
                    FormatArg::Dot => LtsFormat::Dot,
                },
                bounds.resolve(),
            )
            .map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(&path, rendered)
                    .map_err(|e| format!("{}: {e}", path.display()))?,
                None => print!("{rendered}"),
            }
            Ok(exit_codes::OK)
        }
        Command::Bisim {
            file_p,
            file_q,
            variant,
            relaxed_n,
            context_size,
            bounds,
        } => {
            let sp = read(&file_p)?;
            let sq = read(&file_q)?;
            let opts = BisimOptions {
                variant: variant.into(),
                relaxed_n,
                bounds: bounds.resolve(),
                emission_context_size: context_size,
            };
            let (json, code) = bisim_sources(
                &sp,
                &file_p.display().to_string(),
                &sq,
                &file_q.display().to_string(),
                opts,
            )
            .map_err(|e| e.to_string())?;
            print!("{json}");
            Ok(code)
        }
        Command::Analyze {
            file,
            properties,
            bounds,
        } => {
            let src = read(&file)?;
            let (json, code) = analyze_source(
                &src,
                &file.display().to_string(),
                properties.as_deref(),
                bounds.resolve(),
            )
            .map_err(|e| e.to_string())?;
            print!("{json}");
            Ok(code)
        }
        Command::Corpus { dir } => {
            let mut out = Vec::new();
            let (passed, failed) =
                spi_cli::corpus::run_corpus(dir.as_deref(), &mut out).map_err(|e| e.to_string())?;
            print!("{}", String::from_utf8_lossy(&out));
            println!("corpus: {passed} passed, {failed} failed");
            Ok(if failed == 0 {
                exit_codes::OK
            } else {
                exit_codes::ERROR
            })
        }
    }
}
