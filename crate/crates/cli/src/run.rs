use std::fs;
use std::path::Path;
use std::time::Instant;

use scoped_mc_core::dpor::{self, AssertionVerdict, ExploreOpts, RunReport};
use scoped_mc_core::litmus::{self, Program, Quantifier};
use scoped_mc_core::race::{self, RepairEdit};
use scoped_mc_core::{dot, oracle, RacePolicy, Verdict};

use crate::{AssertMode, Cli, OnRace};

pub(crate) fn run(cli: Cli) -> Result<u8, String> {
    let file = cli.file.clone().ok_or("no input file given")?;
    let source = fs::read_to_string(&file)
        .map_err(|e| format!("{}: {e}", file.display()))?;
    let mut parsed = litmus::parse(&source).map_err(|e| format!("{}:{e}", file.display()))?;

    match cli.assert_mode {
        AssertMode::Auto => {}
        AssertMode::Forall => {
            if let Some(a) = parsed.assertion.as_mut() {
                a.quant = Quantifier::Forall;
            }
        }
        AssertMode::Exists => {
            if let Some(a) = parsed.assertion.as_mut() {
                a.quant = Quantifier::Exists;
            }
        }
    }

    if cli.oracle_diff {
        return oracle_diff(&cli, &parsed);
    }

    let t0 = Instant::now();
    let opts = ExploreOpts {
        on_race: match cli.on_race {
            OnRace::Stop => RacePolicy::Stop,
            OnRace::Continue => RacePolicy::Continue,
            OnRace::Repair => RacePolicy::Repair,
        },
        max_execs: cli.max_execs,
        stop_on_assertion: !cli.keep_going,
        collect_executions: cli.dot.is_some(),
        jobs: cli.jobs.max(1),
    };

    // Repair loop: rerun on the edited source until no findings or the
    // iteration bound is hit. A single pass otherwise.
    let mut src_ast = parsed;
    let mut all_races = Vec::new();
    let mut all_edits: Vec<RepairEdit> = Vec::new();
    let mut unrepairable: Option<String> = None;
    let mut report: RunReport;
    let mut iterations = 0u32;
    loop {
        iterations += 1;
        let (prepared, warnings) = prepare_ast(&src_ast, cli.unroll);
        for w in &warnings {
            eprintln!("warning: {}", w.message);
        }
        report = dpor::explore(&prepared, opts.clone());
        if matches!(cli.on_race, OnRace::Repair) && !report.races.is_empty() {
            let finding = report.races[0].clone();
            all_races.push(finding.clone());
            match race::repair(&src_ast, &finding) {
                Ok((fixed, edits)) => {
                    src_ast = fixed;
                    all_edits.extend(edits);
                    if iterations < cli.max_iter_repair {
                        continue;
                    }
                }
                Err(e) => {
                    unrepairable = Some(e.to_string());
                }
            }
        }
        break;
    }
    let elapsed = t0.elapsed();

    if !all_edits.is_empty() {
        let repaired_path = file.with_extension("repaired.lit");
        fs::write(&repaired_path, litmus::print(&src_ast))
            .map_err(|e| format!("{}: {e}", repaired_path.display()))?;
        eprintln!("repaired program written to {}", repaired_path.display());
    }

    // Races found before a repair pass rewrote them belong in the report.
    for r in all_races.into_iter().rev() {
        if !report.races.iter().any(|x| x.key() == r.key()) {
            report.races.insert(0, r);
        }
    }

    let (prepared, _) = prepare_ast(&src_ast, cli.unroll);
    if let Some(dir) = &cli.dot {
        write_dots(dir, &prepared, &report)?;
    }

    if cli.json {
        println!("{}", json_summary(&report, &all_edits));
    } else {
        print_report(&prepared, &report, &all_edits, unrepairable.as_deref());
        if cli.stats {
            print_stats(&report, &all_edits);
        }
    }
    eprintln!("wall time: {:.3}s", elapsed.as_secs_f64());

    Ok(match report.verdict() {
        Verdict::Clean => 0,
        Verdict::AssertionViolation => 1,
        Verdict::Race => 2,
        Verdict::Divergence => 3,
        Verdict::LimitExceeded => 5,
    })
}

fn prepare_ast(
    ast: &Program,
    unroll: u32,
) -> (Program, Vec<litmus::DesugarWarning>) {
    let unrolled = litmus::unroll(ast, unroll.max(1));
    litmus::desugar_barriers(&unrolled)
}

fn print_report(
    p: &Program,
    report: &RunReport,
    edits: &[RepairEdit],
    unrepairable: Option<&str>,
) {
    if let Some(a) = &report.assertion {
        let line = match a.verdict {
            AssertionVerdict::ForallHeld => "assertion: forall holds over all executions".into(),
            AssertionVerdict::ForallViolated => {
                "assertion: FORALL VIOLATED (witness below)".to_string()
            }
            AssertionVerdict::ExistsWitnessed => {
                "assertion: EXISTS WITNESSED (witness below)".to_string()
            }
            AssertionVerdict::ExistsUnsatisfied => {
                "assertion: exists unsatisfied by any execution".into()
            }
        };
        println!("{line}");
        if let Some(w) = &a.witness {
            println!("--- witnessing execution ---");
            print!("{w}");
            println!("----------------------------");
        }
    }
    for r in &report.races {
        println!(
            "{}: on `{}` between {} {}^{}_{} at {} (T{}) and {} {}^{}_{} at {} (T{})",
            r.kind,
            r.loc_name,
            r.a.op,
            r.loc_name,
            r.a.sco,
            r.a.ord,
            r.a.span,
            r.a.tid.0,
            r.b.op,
            r.loc_name,
            r.b.sco,
            r.b.ord,
            r.b.span,
            r.b.tid.0,
        );
    }
    for d in &report.divergences {
        let ids: Vec<String> = d.barrier_ids().iter().map(|i| i.to_string()).collect();
        let tids: Vec<String> = d.stalls.iter().map(|s| format!("T{}", s.tid.0)).collect();
        println!(
            "barrier divergence: threads {} blocked at barrier id(s) {}",
            tids.join(", "),
            ids.join(", ")
        );
    }
    for e in edits {
        println!("repair {}:", e.span);
        println!("  - {}", e.before);
        println!("  + {}", e.after);
    }
    if let Some(u) = unrepairable {
        println!("repair refused: {u}");
    }
    let _ = p;
    println!(
        "summary: executions={} max_events={} races={} divergences={} repairs={}{}",
        report.stats.executions,
        report.stats.max_events,
        report.races.len(),
        report.divergences.len(),
        edits.len(),
        if report.stats.truncated { " (truncated)" } else { "" },
    );
}

fn print_stats(report: &RunReport, edits: &[RepairEdit]) {
    println!("Executions: {}", report.stats.executions);
    println!("Events:     {}", report.stats.max_events);
    println!("#Race:      {}", report.races.len());
    println!("#Fix:       {}", edits.len());
}

fn json_summary(report: &RunReport, edits: &[RepairEdit]) -> String {
    let races: Vec<serde_json::Value> = report
        .races
        .iter()
        .map(|r| {
            serde_json::json!({
                "kind": match r.kind {
                    race::RaceKind::Data => "data",
                    race::RaceKind::Heterogeneous => "heterogeneous",
                },
                "location": r.loc_name,
                "a": side_json(&r.a),
                "b": side_json(&r.b),
            })
        })
        .collect();
    let repairs: Vec<serde_json::Value> = edits
        .iter()
        .map(|e| {
            serde_json::json!({
                "at": e.span.to_string(),
                "before": e.before,
                "after": e.after,
            })
        })
        .collect();
    let divergences: Vec<serde_json::Value> = report
        .divergences
        .iter()
        .map(|d| {
            serde_json::json!({
                "barrier_ids": d.barrier_ids(),
                "threads": d.stalls.iter().map(|s| s.tid.0).collect::<Vec<_>>(),
            })
        })
        .collect();
    let verdict = match report.verdict() {
        Verdict::Clean => "clean",
        Verdict::AssertionViolation => "assertion-violation",
        Verdict::Race => "race",
        Verdict::Divergence => "divergence",
        Verdict::LimitExceeded => "limit-exceeded",
    };
    serde_json::json!({
        "executions": report.stats.executions,
        "max_events": report.stats.max_events,
        "races": races,
        "repairs": repairs,
        "divergences": divergences,
        "verdict": verdict,
    })
    .to_string()
}

fn side_json(a: &race::AccessDesc) -> serde_json::Value {
    serde_json::json!({
        "at": a.span.to_string(),
        "thread": a.tid.0,
        "op": a.op.to_string(),
        "order": a.ord.to_string(),
        "scope": a.sco.to_string(),
    })
}

fn write_dots(dir: &Path, p: &Program, report: &RunReport) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let write = |name: String, content: String| -> Result<(), String> {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| format!("{}: {e}", path.display()))
    };
    for (i, exec) in report.executions.iter().enumerate() {
        write(format!("exec_{i:04}.dot"), dot::to_dot(p, exec, &format!("exec {i}")))?;
    }
    if let Some(a) = &report.assertion {
        if let Some(w) = &a.witness {
            write("witness_assertion.dot".into(), dot::to_dot(p, w, "assertion witness"))?;
        }
    }
    for (i, r) in report.races.iter().enumerate() {
        write(
            format!("witness_race_{i}.dot"),
            dot::to_dot(p, &r.witness, &format!("race {i}")),
        )?;
    }
    for (i, d) in report.divergences.iter().enumerate() {
        write(
            format!("witness_divergence_{i}.dot"),
            dot::to_dot(p, &d.witness, &format!("divergence {i}")),
        )?;
    }
    Ok(())
}

fn oracle_diff(cli: &Cli, parsed: &Program) -> Result<u8, String> {
    let (prepared, _) = prepare_ast(parsed, cli.unroll);
    let opts = ExploreOpts {
        on_race: RacePolicy::Continue,
        max_execs: None,
        stop_on_assertion: false,
        collect_executions: true,
        jobs: 1,
    };
    let report = dpor::explore(&prepared, opts);
    let engine: std::collections::HashSet<_> = report.executions.iter().cloned().collect();
    let brute = oracle::enumerate_all(&prepared, 50_000_000).map_err(|e| e.to_string())?;
    println!("engine: {} executions", engine.len());
    println!("oracle: {} executions", brute.len());
    let mut only_engine: Vec<String> =
        engine.difference(&brute).map(|e| e.to_string()).collect();
    let mut only_oracle: Vec<String> =
        brute.difference(&engine).map(|e| e.to_string()).collect();
    only_engine.sort();
    only_oracle.sort();
    for e in &only_engine {
        println!("only engine:\n{e}");
    }
    for e in &only_oracle {
        println!("only oracle:\n{e}");
    }
    Ok(if only_engine.is_empty() && only_oracle.is_empty() { 0 } else { 1 })
}
