//! Command implementations: parse/check, instant-by-instant execution,
//! transition-system export, bisimulation checking and analysis.

use serde::Serialize;
use spi_core::analysis::{Analyzer, Outcome, Report, ALL_PROPERTIES};
use spi_core::equiv::game::{GameConfig, Variant};
use spi_core::equiv::{bisim, Verdict};
use spi_core::lts::action::Action;
use spi_core::lts::space::{LtsError, Mode, Space, StateId};
use spi_core::lts::{lts_to_dot, lts_to_json};
use spi_core::syntax::ast::{Bounds, Program};
use spi_core::syntax::parser::Module;
use spi_core::syntax::{merge_modules, parse, typecheck};
use std::fmt::Write as _;

pub use error::CliError;

/// Small local error type; the binary maps it to exit code 1.
mod error {
    #[derive(Debug)]
    pub enum CliError {
        Diagnostics(Vec<String>),
        Runtime(String),
    }

    impl std::fmt::Display for CliError {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            match self {
                CliError::Diagnostics(ds) => {
                    for d in ds {
                        writeln!(f, "{d}")?;
                    }
                    Ok(())
                }
                CliError::Runtime(m) => write!(f, "{m}"),
            }
        }
    }

    impl std::error::Error for CliError {}
}

impl From<LtsError> for CliError {
    fn from(e: LtsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<spi_core::syntax::EvalError> for CliError {
    fn from(e: spi_core::syntax::EvalError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Default bounds, overridable through the environment:
/// `SPI_MAX_STATES`, `SPI_MAX_DEPTH`, `SPI_MAX_INSTANTS`,
/// `SPI_MAX_V_PERMS`.
pub fn bounds_from_env() -> Bounds {
    let get = |name: &str, dflt: usize| -> usize {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|v| *v > 0)
            .unwrap_or(dflt)
    };
    let d = Bounds::default();
    Bounds {
        max_states: get("SPI_MAX_STATES", d.max_states),
        max_depth: get("SPI_MAX_DEPTH", d.max_depth),
        max_instants: get("SPI_MAX_INSTANTS", d.max_instants),
        max_v_perms: get("SPI_MAX_V_PERMS", d.max_v_perms),
    }
}

/// Parse and type-check, producing the module or positioned diagnostics.
pub fn check_source(src: &str, origin: &str) -> Result<Module, CliError> {
    let mut module = parse(src).map_err(|es| {
        CliError::Diagnostics(es.iter().map(|e| format!("{origin}:{e}")).collect())
    })?;
    typecheck(&mut module).map_err(|es| {
        CliError::Diagnostics(es.iter().map(|e| format!("{origin}: {e}")).collect())
    })?;
    Ok(module)
}

fn root_of(module: &Module, origin: &str) -> Result<Program, CliError> {
    module.root.clone().ok_or_else(|| {
        CliError::Runtime(format!("{origin}: no root program (add a bare program item)"))
    })
}

// ---- run ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunPolicy {
    Canonical,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VPolicy {
    Sorted,
    Random,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub instants: usize,
    pub policy: RunPolicy,
    pub v_policy: VPolicy,
    pub seed: u64,
    pub bounds: Bounds,
}

#[derive(Serialize)]
pub struct RunTrace {
    pub format: &'static str,
    pub policy: String,
    pub seed: u64,
    pub instants: Vec<InstantTrace>,
}

#[derive(Serialize)]
pub struct InstantTrace {
    pub steps: Vec<StepTrace>,
    pub suspended: StateTrace,
    /// Values collected per signal at the end of the instant, as chosen
    /// by the collection policy.
    pub collected: Vec<(String, String)>,
    pub next: StateTrace,
}

#[derive(Serialize)]
pub struct StepTrace {
    pub action: String,
    pub state: StateTrace,
}

#[derive(Serialize)]
pub struct StateTrace {
    pub digest: String,
    pub term: String,
}

fn fnv_digest(s: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn state_trace(space: &Space, id: StateId) -> StateTrace {
    let term = space.state(id).render(space.defs);
    StateTrace {
        digest: fnv_digest(&term),
        term,
    }
}

/// Execute a fixed number of instants: fire internal steps under the
/// scheduling policy until suspension, then take one next-instant step
/// with the policy-selected collection. Detecting a repeated state
/// within an instant aborts with a non-reactivity error naming it.
pub fn run_source(src: &str, origin: &str, opts: RunOptions) -> Result<String, CliError> {
    let module = check_source(src, origin)?;
    let root = root_of(&module, origin)?;
    let mut space = Space::new(&module.defs, &module.alphabet, opts.bounds);
    let (mut cur, _) = space.intern_program(&root)?;

    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);

    let mut trace = RunTrace {
        format: "spi-trace/1",
        policy: match opts.policy {
            RunPolicy::Canonical => "canonical".into(),
            RunPolicy::Random => format!("random({})", opts.seed),
        },
        seed: opts.seed,
        instants: Vec::new(),
    };

    for _ in 0..opts.instants {
        let mut steps = Vec::new();
        let mut seen: Vec<StateId> = vec![cur];
        loop {
            let es = space.edges(cur, Mode::Std)?;
            let taus: Vec<(Action, StateId)> = es
                .edges
                .iter()
                .filter(|e| matches!(e.action, Action::Tau))
                .map(|e| (e.action.clone(), e.dst))
                .collect();
            drop(es);
            if taus.is_empty() {
                break;
            }
            let (act, dst) = match opts.policy {
                RunPolicy::Canonical => taus[0].clone(),
                RunPolicy::Random => taus[rng.gen_range(0..taus.len())].clone(),
            };
            if seen.contains(&dst) {
                return Err(CliError::Runtime(format!(
                    "{origin}: the instant does not terminate; internal steps revisit the state:\n  {}",
                    space.state(dst).render(space.defs)
                )));
            }
            if seen.len() >= opts.bounds.max_depth {
                return Err(CliError::Runtime(format!(
                    "{origin}: internal-step budget exhausted within one instant (suspected non-reactive behaviour)"
                )));
            }
            seen.push(dst);
            steps.push(StepTrace {
                action: act.render(space.defs),
                state: state_trace(&space, dst),
            });
            cur = dst;
        }

        let suspended = state_trace(&space, cur);
        let es = space.edges(cur, Mode::Std)?;
        let nexts: Vec<StateId> = es
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Next))
            .map(|e| e.dst)
            .collect();
        let v_overflow = es.v_overflow;
        drop(es);
        if v_overflow {
            return Err(CliError::Runtime(format!(
                "{origin}: end-of-instant permutation cap exceeded"
            )));
        }
        if nexts.is_empty() {
            return Err(CliError::Runtime(format!(
                "{origin}: suspended state has no next-instant step"
            )));
        }
        // The sorted policy is the first enumerated collection: per
        // signal, values listed in canonical value order.
        let pick = match opts.v_policy {
            VPolicy::Sorted => nexts[0],
            VPolicy::Random => nexts[rng.gen_range(0..nexts.len())],
        };
        let collected = collected_values(&space, cur);
        trace.instants.push(InstantTrace {
            steps,
            suspended,
            collected,
            next: state_trace(&space, pick),
        });
        cur = pick;
    }

    Ok(serde_json::to_string_pretty(&trace).expect("serializable") + "\n")
}

/// Render the emission map of a suspended state, each signal listing its
/// values in canonical order.
fn collected_values(space: &Space, id: StateId) -> Vec<(String, String)> {
    use spi_core::syntax::canon::value_key;
    let state = space.state(id);
    let mut per: Vec<(String, Vec<spi_core::syntax::ast::Value>)> = Vec::new();
    for comp in &state.comps {
        if let Program::Emit(sub, e) = comp {
            if let Some(v) = e.as_value() {
                let name = match sub {
                    spi_core::syntax::ast::Name::Free(s) => space.defs.name(*s).to_string(),
                    spi_core::syntax::ast::Name::Ext(i) => format!("~e{i}"),
                    spi_core::syntax::ast::Name::Idx(_, slot) => format!("s{slot}"),
                };
                match per.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, vs)) => {
                        if !vs.contains(&v) {
                            vs.push(v);
                        }
                    }
                    None => per.push((name, vec![v])),
                }
            }
        }
    }
    let mut out = Vec::new();
    for (name, mut vs) in per {
        vs.sort_by(|a, b| value_key(a, space.defs).cmp(&value_key(b, space.defs)));
        let mut list = String::from("[");
        for (i, v) in vs.iter().enumerate() {
            if i > 0 {
                let _ = write!(list, "; ");
            }
            let _ = write!(list, "{}", spi_core::syntax::pretty_value(v, space.defs));
        }
        list.push(']');
        out.push((name, list));
    }
    out.sort();
    out
}

// ---- lts ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtsFormat {
    Json,
    Dot,
}

/// Explore the root and serialize the transition system.
pub fn lts_source(
    src: &str,
    origin: &str,
    extra_alphabet: Option<&str>,
    format: LtsFormat,
    bounds: Bounds,
) -> Result<String, CliError> {
    let combined = match extra_alphabet {
        Some(a) => format!("{src}\n{a}\n"),
        None => src.to_string(),
    };
    let module = check_source(&combined, origin)?;
    let root = root_of(&module, origin)?;
    let mut space = Space::new(&module.defs, &module.alphabet, bounds);
    let (rid, _) = space.intern_program(&root)?;
    let info = space.explore(rid, Mode::Std)?;
    let out = match format {
        LtsFormat::Json => lts_to_json(&mut space, &info, Mode::Std)?,
        LtsFormat::Dot => lts_to_dot(&mut space, &info, Mode::Std)?,
    };
    Ok(out)
}

// ---- bisim ----

#[derive(Debug, Clone, Copy)]
pub struct BisimOptions {
    pub variant: Variant,
    pub relaxed_n: bool,
    pub bounds: Bounds,
    pub emission_context_size: usize,
}

#[derive(Serialize)]
struct BisimOutput {
    format: &'static str,
    variant: Variant,
    relaxed_n: bool,
    alphabet: Vec<(String, String)>,
    bounds: (usize, usize, usize, usize),
    #[serde(flatten)]
    verdict: Verdict,
}

/// Check two files for weak bisimilarity of their root programs.
/// Returns the JSON verdict and the matching exit code.
pub fn bisim_sources(
    src_p: &str,
    origin_p: &str,
    src_q: &str,
    origin_q: &str,
    opts: BisimOptions,
) -> Result<(String, i32), CliError> {
    let mp = check_source(src_p, origin_p)?;
    let mq = check_source(src_q, origin_q)?;
    if mp.root.is_none() {
        return Err(CliError::Runtime(format!("{origin_p}: no root program")));
    }
    if mq.root.is_none() {
        return Err(CliError::Runtime(format!("{origin_q}: no root program")));
    }
    let (merged, root_p, root_q) =
        merge_modules(&mp, &mq).map_err(|e| CliError::Runtime(format!("cannot merge: {e}")))?;

    let mut space = Space::new(&merged.defs, &merged.alphabet, opts.bounds);
    let mut cfg = GameConfig::new(opts.variant);
    cfg.relaxed_n = opts.relaxed_n;
    cfg.emission_context_size = opts.emission_context_size;

    let (rp, _) = space.intern_program(&root_p)?;
    let (rq, _) = space.intern_program(&root_q)?;
    let mode = opts.variant.mode();
    let mut verdict: Option<Verdict> = None;
    for info in [space.explore(rp, mode)?, space.explore(rq, mode)?] {
        if !info.complete {
            verdict = Some(Verdict::Inconclusive {
                reason: format!(
                    "state space truncated by {}",
                    info.truncated_by.unwrap_or("bounds")
                ),
            });
        } else if info.v_overflow && verdict.is_none() {
            verdict = Some(Verdict::Inconclusive {
                reason: "end-of-instant permutation cap exceeded".into(),
            });
        }
    }
    let verdict = match verdict {
        Some(v) => v,
        None => bisim(&mut space, rp, rq, cfg)?,
    };

    let code = match &verdict {
        Verdict::Equivalent => crate::exit_codes::OK,
        Verdict::Distinguished { .. } => crate::exit_codes::DISTINGUISHED,
        Verdict::Inconclusive { .. } => crate::exit_codes::INCONCLUSIVE,
    };
    let out = BisimOutput {
        format: "spi-verdict/1",
        variant: opts.variant,
        relaxed_n: opts.relaxed_n,
        alphabet: space
            .alphabet
            .iter()
            .map(|(s, v)| {
                (
                    merged.defs.name(*s).to_string(),
                    spi_core::syntax::pretty_value(v, &merged.defs),
                )
            })
            .collect(),
        bounds: (
            opts.bounds.max_states,
            opts.bounds.max_depth,
            opts.bounds.max_instants,
            opts.bounds.max_v_perms,
        ),
        verdict,
    };
    Ok((
        serde_json::to_string_pretty(&out).expect("serializable") + "\n",
        code,
    ))
}

// ---- analyze ----

/// Run the requested analyses (all of them by default). Returns the
/// JSON report and the exit code: 0 when everything requested holds,
/// 2 when something fails, 3 when nothing fails but something is
/// inconclusive.
pub fn analyze_source(
    src: &str,
    origin: &str,
    properties: Option<&[String]>,
    bounds: Bounds,
) -> Result<(String, i32), CliError> {
    let module = check_source(src, origin)?;
    let root = root_of(&module, origin)?;
    let mut space = Space::new(&module.defs, &module.alphabet, bounds);
    let (rid, _) = space.intern_program(&root)?;
    let mut analyzer = Analyzer::new(&mut space, rid)?;
    let names: Vec<&str> = match properties {
        Some(list) => list.iter().map(|s| s.as_str()).collect(),
        None => ALL_PROPERTIES.to_vec(),
    };
    for n in &names {
        if !ALL_PROPERTIES.contains(n) {
            return Err(CliError::Runtime(format!(
                "unknown property '{n}' (expected one of: {})",
                ALL_PROPERTIES.join(", ")
            )));
        }
    }
    let report: Report = analyzer.analyze_all(&names)?;
    let mut code = crate::exit_codes::OK;
    for v in &report.verdicts {
        match v.outcome {
            Outcome::Fails { .. } => code = crate::exit_codes::DISTINGUISHED,
            Outcome::Inconclusive { .. } if code == crate::exit_codes::OK => {
                code = crate::exit_codes::INCONCLUSIVE
            }
            _ => {}
        }
    }
    if !report.contradictions.is_empty() {
        return Err(CliError::Runtime(format!(
            "internal inconsistency between analyses (a bug in this tool): {}",
            report.contradictions.join("; ")
        )));
    }
    Ok((
        serde_json::to_string_pretty(&report).expect("serializable") + "\n",
        code,
    ))
}
