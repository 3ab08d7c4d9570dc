//! Bundled example corpus with expected verdicts. `run_corpus` executes
//! every case and reports one pass/fail line per case; it is also the
//! backbone of the acceptance suite.

use crate::commands::{
    analyze_source, bisim_sources, check_source, run_source, BisimOptions, RunOptions, RunPolicy,
    VPolicy,
};
use spi_core::equiv::game::Variant;
use spi_core::lts::action::Action;
use spi_core::lts::space::{Mode, Space};
use spi_core::syntax::ast::{Bounds, Program, Value};
use spi_core::syntax::canon::canonicalize;
use std::path::Path;

pub struct CorpusCase {
    pub name: &'static str,
    pub files: &'static [(&'static str, &'static str)],
    pub check: fn(&[(String, String)]) -> Result<(), String>,
}

pub const EMBEDDED: &[(&str, &str)] = &[
    ("server_client.spi", include_str!("../corpus/server_client.spi")),
    ("instant_orders.spi", include_str!("../corpus/instant_orders.spi")),
    ("footnote_p.spi", include_str!("../corpus/footnote_p.spi")),
    ("footnote_q.spi", include_str!("../corpus/footnote_q.spi")),
    ("omega.spi", include_str!("../corpus/omega.spi")),
    ("nil.spi", include_str!("../corpus/nil.spi")),
    ("tau_choice.spi", include_str!("../corpus/tau_choice.spi")),
    ("loop_choice.spi", include_str!("../corpus/loop_choice.spi")),
    ("competing.spi", include_str!("../corpus/competing.spi")),
];

fn bounds() -> Bounds {
    Bounds::default()
}

fn src<'a>(files: &'a [(String, String)], name: &str) -> &'a str {
    files
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, s)| s.as_str())
        .expect("corpus file present")
}

fn expect_analysis(
    files: &[(String, String)],
    file: &str,
    expected: &[(&str, bool)],
) -> Result<(), String> {
    let (report, _) = analyze_source(src(files, file), file, None, bounds())
        .map_err(|e| format!("analyze failed: {e}"))?;
    let parsed: serde_json::Value = serde_json::from_str(&report).unwrap();
    for (prop, want) in expected {
        let found = parsed["verdicts"]
            .as_array()
            .unwrap()
            .iter()
            .find(|v| v["property"] == *prop)
            .ok_or_else(|| format!("missing property {prop}"))?;
        let got = match found["result"].as_str() {
            Some("holds") => true,
            Some("fails") => false,
            other => return Err(format!("{prop} inconclusive: {other:?}")),
        };
        if got != *want {
            return Err(format!("{file}: expected {prop}={want}, got {got}"));
        }
    }
    Ok(())
}

fn expect_bisim(
    files: &[(String, String)],
    p: &str,
    q: &str,
    relaxed: bool,
    equivalent: bool,
) -> Result<(), String> {
    let opts = BisimOptions {
        variant: Variant::Standard,
        relaxed_n: relaxed,
        bounds: bounds(),
        emission_context_size: 2,
    };
    let (_, code) = bisim_sources(src(files, p), p, src(files, q), q, opts)
        .map_err(|e| format!("bisim failed: {e}"))?;
    let want = if equivalent {
        crate::exit_codes::OK
    } else {
        crate::exit_codes::DISTINGUISHED
    };
    if code != want {
        return Err(format!(
            "{p} vs {q} (relaxed={relaxed}): expected exit {want}, got {code}"
        ));
    }
    Ok(())
}

fn check_server_client(files: &[(String, String)]) -> Result<(), String> {
    expect_analysis(
        files,
        "server_client.spi",
        &[
            ("reactive", true),
            ("determinate", true),
            ("confluent", true),
            ("locally_confluent", true),
            ("diamond", true),
            ("tau_inert", true),
            ("strong_confluent", true),
        ],
    )?;
    // Three instants: the reply f(7) = ans(7) is emitted on t during the
    // second instant.
    let trace = run_source(
        src(files, "server_client.spi"),
        "server_client.spi",
        RunOptions {
            instants: 3,
            policy: RunPolicy::Canonical,
            v_policy: VPolicy::Sorted,
            seed: 0,
            bounds: bounds(),
        },
    )
    .map_err(|e| format!("run failed: {e}"))?;
    let parsed: serde_json::Value = serde_json::from_str(&trace).unwrap();
    let instants = parsed["instants"].as_array().unwrap();
    if instants.len() != 3 {
        return Err(format!("expected 3 instants, got {}", instants.len()));
    }
    let second = &instants[1];
    let suspended = second["suspended"]["term"].as_str().unwrap();
    if !suspended.contains("emit t ans(7)") {
        return Err(format!(
            "instant 2 suspension lacks the reply on t: {suspended}"
        ));
    }
    // And the reply is not there in instant 1.
    let first_susp = instants[0]["suspended"]["term"].as_str().unwrap();
    if first_susp.contains("ans(7)") {
        return Err("reply appeared too early".into());
    }
    Ok(())
}

fn check_instant_orders(files: &[(String, String)]) -> Result<(), String> {
    let module = check_source(src(files, "instant_orders.spi"), "instant_orders.spi")
        .map_err(|e| format!("{e}"))?;
    let root = module.root.clone().unwrap();
    let mut sp = Space::new(&module.defs, &module.alphabet, bounds());
    let (rid, _) = sp.intern_program(&root).map_err(|e| e.to_string())?;
    let info = sp.explore(rid, Mode::Std).map_err(|e| e.to_string())?;
    if !info.complete || info.v_overflow {
        return Err("exploration incomplete".into());
    }
    let b = module.defs.interner.get("B").unwrap();
    let one = module.defs.interner.get("1").unwrap();
    let two = module.defs.interner.get("2").unwrap();
    let expected: Vec<_> = [[one, two], [two, one]]
        .into_iter()
        .map(|order| {
            let list = Value::list(order.iter().map(|s| Value::Ctor(*s, vec![])));
            canonicalize(&Program::Call(b, vec![list.as_expr()]), &module.defs).unwrap()
        })
        .collect();
    let mut hits = 0;
    for id in info.states.clone() {
        let es = sp.edges(id, Mode::Std).map_err(|e| e.to_string())?;
        if !es.suspended {
            continue;
        }
        let nexts: Vec<_> = es
            .edges
            .iter()
            .filter(|e| matches!(e.action, Action::Next))
            .map(|e| sp.state(e.dst).clone())
            .collect();
        if nexts.iter().any(|n| expected.contains(n)) {
            if nexts.len() != 2 {
                return Err(format!("expected exactly 2 next states, got {}", nexts.len()));
            }
            if !(expected.iter().all(|x| nexts.contains(x))) {
                return Err("next-state set mismatch".into());
            }
            hits += 1;
        }
    }
    if hits == 0 {
        return Err("the doubly-received suspension was not reached".into());
    }
    Ok(())
}

fn check_footnote(files: &[(String, String)]) -> Result<(), String> {
    expect_bisim(files, "footnote_p.spi", "footnote_q.spi", false, false)?;
    expect_bisim(files, "footnote_p.spi", "footnote_q.spi", true, true)
}

fn check_remark(files: &[(String, String)]) -> Result<(), String> {
    expect_bisim(files, "omega.spi", "nil.spi", false, false)?;
    expect_bisim(files, "tau_choice.spi", "nil.spi", false, true)
}

fn check_loop_choice(files: &[(String, String)]) -> Result<(), String> {
    expect_analysis(
        files,
        "loop_choice.spi",
        &[
            ("reactive", false),
            ("locally_confluent", true),
            ("confluent", false),
            ("determinate", false),
        ],
    )
}

fn check_omega_reactivity(files: &[(String, String)]) -> Result<(), String> {
    expect_analysis(files, "omega.spi", &[("reactive", false)])
}

fn check_competing(files: &[(String, String)]) -> Result<(), String> {
    expect_analysis(
        files,
        "competing.spi",
        &[
            ("reactive", true),
            ("determinate", false),
            ("confluent", false),
            ("locally_confluent", false),
            ("diamond", false),
        ],
    )
}

fn check_nil(files: &[(String, String)]) -> Result<(), String> {
    expect_analysis(
        files,
        "nil.spi",
        &[("reactive", true), ("determinate", true), ("confluent", true)],
    )?;
    let trace = run_source(
        src(files, "nil.spi"),
        "nil.spi",
        RunOptions {
            instants: 4,
            policy: RunPolicy::Canonical,
            v_policy: VPolicy::Sorted,
            seed: 0,
            bounds: bounds(),
        },
    )
    .map_err(|e| format!("{e}"))?;
    let parsed: serde_json::Value = serde_json::from_str(&trace).unwrap();
    if parsed["instants"].as_array().unwrap().len() != 4 {
        return Err("expected 4 trivial instants".into());
    }
    Ok(())
}

pub fn cases() -> Vec<CorpusCase> {
    vec![
        CorpusCase {
            name: "server_client",
            files: &[("server_client.spi", "")],
            check: check_server_client,
        },
        CorpusCase {
            name: "instant_orders",
            files: &[("instant_orders.spi", "")],
            check: check_instant_orders,
        },
        CorpusCase {
            name: "footnote_discrimination",
            files: &[("footnote_p.spi", ""), ("footnote_q.spi", "")],
            check: check_footnote,
        },
        CorpusCase {
            name: "divergence_remark",
            files: &[("omega.spi", ""), ("tau_choice.spi", ""), ("nil.spi", "")],
            check: check_remark,
        },
        CorpusCase {
            name: "loop_choice_profile",
            files: &[("loop_choice.spi", "")],
            check: check_loop_choice,
        },
        CorpusCase {
            name: "omega_not_reactive",
            files: &[("omega.spi", "")],
            check: check_omega_reactivity,
        },
        CorpusCase {
            name: "competing_values",
            files: &[("competing.spi", "")],
            check: check_competing,
        },
        CorpusCase {
            name: "terminated_thread",
            files: &[("nil.spi", "")],
            check: check_nil,
        },
    ]
}

/// Run every corpus case. When `dir` is given, `.spi` sources are loaded
/// from it (an empty directory is an error); otherwise the embedded
/// sources are used. Returns (passed, failed) and prints one line per
/// case to the writer.
pub fn run_corpus(dir: Option<&Path>, out: &mut dyn std::io::Write) -> std::io::Result<(usize, usize)> {
    let sources: Vec<(String, String)> = match dir {
        None => EMBEDDED
            .iter()
            .map(|(n, s)| (n.to_string(), s.to_string()))
            .collect(),
        Some(d) => {
            let mut found = Vec::new();
            for (name, embedded) in EMBEDDED {
                let path = d.join(name);
                if path.is_file() {
                    found.push((name.to_string(), std::fs::read_to_string(&path)?));
                } else {
                    found.push((name.to_string(), embedded.to_string()));
                }
            }
            let any = std::fs::read_dir(d)?
                .filter_map(|e| e.ok())
                .any(|e| e.path().extension().is_some_and(|x| x == "spi"));
            if !any {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    format!("corpus directory {} contains no .spi files", d.display()),
                ));
            }
            found
        }
    };
    let mut passed = 0;
    let mut failed = 0;
    for case in cases() {
        match (case.check)(&sources) {
            Ok(()) => {
                passed += 1;
                writeln!(out, "corpus {:<24} PASS", case.name)?;
            }
            Err(msg) => {
                failed += 1;
                writeln!(out, "corpus {:<24} FAIL: {msg}", case.name)?;
            }
        }
    }
    Ok((passed, failed))
}
