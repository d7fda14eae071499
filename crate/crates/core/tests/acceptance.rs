//! Acceptance run: one line per criterion, non-zero exit on any unexpected
//! failure or runtime overrun.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use vrjp_core::flow::WeightDist;
use vrjp_core::graph::Graph;
use vrjp_core::rng::derive_seed;
use vrjp_core::stats::TestVerdict;
use vrjp_core::verify::{
    bounds_mc, crossover_grid, errw_vs_gamma, flow_graphs, flow_vs_schur, ig_appendix, markov_restriction, minimizer_rule,
    mixture_cases, mixture_restriction, schur_identities, three_vertex_cases, u_field_restriction, vrjp_direct_vs_mixture,
};

const SEED: u64 = 2026;

/// Checks that fail for a reason understood and recorded; reported, not hidden.
const KNOWN: &[(&str, &str)] = &[(
    "frac_moment(1e-4, 1/4) within 1e-3 of C_1/4",
    "the limit is approached at rate W^(1/2); at W = 1e-4 the exact value sits 0.016 below C_1/4",
)];

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Option<Duration>,
    run: fn(u64) -> vrjp_core::Result<Vec<TestVerdict>>,
}

fn c1(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    schur_identities(200, 50, s)
}

fn c2(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    u_field_restriction(100, 20, s)
}

fn c3(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    Ok(vec![markov_restriction(5, 4, s)?])
}

fn c4(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    let mut v = Vec::new();
    for (k, (name, w, j)) in mixture_cases()?.into_iter().enumerate() {
        v.extend(mixture_restriction(&name, &w, 0, &j, 5, 100_000, 0.02, derive_seed(s, k as u64))?);
    }
    Ok(v)
}

fn c5(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    let mut v = Vec::new();
    for (k, (name, w)) in three_vertex_cases()?.into_iter().enumerate() {
        v.extend(vrjp_direct_vs_mixture(&name, &w, 0, 6, 100_000, 0.02, 0.01, derive_seed(s, k as u64))?);
    }
    Ok(v)
}

fn c6(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    [0.5, 1.0, 2.0]
        .into_iter()
        .enumerate()
        .map(|(k, a)| errw_vs_gamma(&format!("triangle a={a}"), &Graph::complete(3, a)?, 0, 6, 100_000, 0.02, derive_seed(s, k as u64)))
        .collect()
}

fn c7(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    let mut v = Vec::new();
    for (k, (name, g)) in flow_graphs()?.into_iter().enumerate() {
        for (d, dist) in [WeightDist::Gamma { a: 1.0 }, WeightDist::Const { w: 1.0 }].iter().enumerate() {
            v.extend(flow_vs_schur(&name, &g, 2, dist, 10_000, 0.01, derive_seed(s, (2 * k + d) as u64))?);
        }
    }
    Ok(v)
}

fn c8(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    let mut v = bounds_mc(&[0.1, 0.25, 0.4, 1.0], 6, 100_000, s)?;
    v.push(crossover_grid()?);
    Ok(v)
}

fn c9(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    ig_appendix(1_000_000, 0.01, s)
}

fn c10(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    Ok(vec![minimizer_rule(500, s)?])
}

/// Runs the CLI twice per command (the second time single-threaded) and
/// compares the bytes written.
fn c11(s: u64) -> vrjp_core::Result<Vec<TestVerdict>> {
    let bin = env!("CARGO_BIN_EXE_vrjp");
    let dir = tempfile::tempdir()?;
    let graph = dir.path().join("g.json");
    std::fs::write(&graph, r#"{"vertices":["a","b","c","d"],"edges":[["a","b",1.0],["b","c",0.5],["c","d",2.0],["d","a",1.5],["a","c",0.7]]}"#)?;
    let g = graph.to_str().expect("utf-8 temp path");
    let seed = s.to_string();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("sample-beta", vec!["sample-beta", "--graph", g, "--samples", "3000"]),
        ("simulate vrjp", vec!["simulate", "--model", "vrjp", "--graph", g, "--steps", "20", "--paths", "2000"]),
        ("simulate errw json", vec!["--format", "json", "simulate", "--model", "errw", "--graph", g, "--steps", "20", "--paths", "500"]),
        ("flow", vec!["flow", "--graph", g, "--r", "4", "--alpha", "0.25,1", "--samples", "5000"]),
        ("verify restriction-mjp", vec!["verify", "restriction-mjp"]),
    ];
    let mut out = Vec::new();
    for (name, args) in cases {
        let run = |threads: Option<&str>| {
            let mut cmd = Command::new(bin);
            cmd.args(["--seed", &seed]).args(&args);
            if let Some(t) = threads {
                cmd.env("RAYON_NUM_THREADS", t);
            }
            cmd.output()
        };
        let a = run(None)?;
        let b = run(Some("1"))?;
        let same = a.status.success() && a.status == b.status && a.stdout == b.stdout && !a.stdout.is_empty();
        out.push(TestVerdict::at_most(
            format!("{name} byte-identical"),
            if same { 0.0 } else { 1.0 },
            0.0,
            a.stdout.len(),
            format!("{} bytes", a.stdout.len()),
        ));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "Schur identities", limit: Some(Duration::from_secs(5)), run: c1 },
        Criterion { id: 2, title: "u-field restriction", limit: None, run: c2 },
        Criterion { id: 3, title: "Markov restriction path law", limit: Some(Duration::from_secs(30)), run: c3 },
        Criterion { id: 4, title: "restriction as a mixture", limit: Some(Duration::from_secs(120)), run: c4 },
        Criterion { id: 5, title: "VRJP direct vs mixture", limit: None, run: c5 },
        Criterion { id: 6, title: "ERRW as a Gamma mixture", limit: None, run: c6 },
        Criterion { id: 7, title: "flow vs Schur oracle", limit: None, run: c7 },
        Criterion { id: 8, title: "moment bounds and crossover", limit: None, run: c8 },
        Criterion { id: 9, title: "inverse Gaussian moments", limit: None, run: c9 },
        Criterion { id: 10, title: "minimizer formulas", limit: None, run: c10 },
        Criterion { id: 11, title: "deterministic reproducibility", limit: None, run: c11 },
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    println!("acceptance run, seed {SEED}");
    for c in &criteria {
        let t0 = Instant::now();
        let result = (c.run)(derive_seed(SEED, c.id as u64));
        let took = t0.elapsed();
        let over = c.limit.is_some_and(|l| took > l);
        let limit = c.limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        match result {
            Err(e) => {
                unexpected += 1;
                println!("criterion {:>2}: FAIL  {} ({:.1} s): error {e}", c.id, c.title, took.as_secs_f64());
            }
            Ok(verdicts) => {
                let failed: Vec<&TestVerdict> = verdicts.iter().filter(|v| !v.pass).collect();
                let known: Vec<&&TestVerdict> = failed.iter().filter(|v| KNOWN.iter().any(|(n, _)| *n == v.test)).collect();
                let status = if failed.is_empty() && !over { "PASS" } else { "FAIL" };
                if failed.is_empty() && !over {
                    passed += 1;
                }
                if over || failed.len() > known.len() {
                    unexpected += 1;
                }
                println!(
                    "criterion {:>2}: {status}  {} ({} checks, {} failed, {:.1} s{limit})",
                    c.id,
                    c.title,
                    verdicts.len(),
                    failed.len(),
                    took.as_secs_f64()
                );
                for v in failed {
                    let why = KNOWN.iter().find(|(n, _)| *n == v.test).map_or("unexpected", |(_, w)| w);
                    println!(
                        "    failed: {} (statistic {:.4e}, threshold {:.4e}); {why}",
                        v.test, v.statistic, v.threshold
                    );
                }
                if over {
                    println!("    runtime over the limit");
                }
            }
        }
    }
    println!("{passed} of {} criteria pass; {unexpected} with unexpected failures", criteria.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
