//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scoped_mc_core::consistency;
use scoped_mc_core::dpor::{explore, explore_from, AssertionVerdict, ExploreOpts, RacePolicy};
use scoped_mc_core::graph::{ExecutionGraph, NewEvent, OpKind};
use scoped_mc_core::litmus::{self, Program};
use scoped_mc_core::oracle;
use scoped_mc_core::race::{self, EditChange, RaceKind};
use scoped_mc_core::scope::{MemOrder, Scope, Tid};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file")
}

fn prepared(name: &str) -> Program {
    litmus::prepare(&load(name), 2).expect("corpus file parses").0
}

fn collect_opts() -> ExploreOpts {
    ExploreOpts {
        on_race: RacePolicy::Continue,
        stop_on_assertion: false,
        collect_executions: true,
        collect_graphs: true,
        ..Default::default()
    }
}

fn lb_source(n: usize) -> String {
    let mut src = format!("grid 1, {n};\n");
    for i in 0..n {
        src.push_str(&format!("X{i} = 0;\n"));
    }
    for i in 0..n {
        let next = (i + 1) % n;
        src.push_str(&format!(
            "thread<0, 0> {{\n    a{i} = X{i}^cta_rlx;\n    X{next}^cta_rlx = 1;\n}}\n"
        ));
    }
    src
}

/// Random programs: up to 3 threads, up to 3 instructions each, up to 2
/// locations, spread over two CTAs and two GPUs.
fn fuzz_source(rng: &mut ChaCha8Rng) -> String {
    let n_locs = rng.gen_range(1..=2);
    let locs: &[&str] = &["X", "Y"][..n_locs];
    let n_threads = rng.gen_range(1..=3);
    let coords = [(0u32, 0u32), (1, 0), (0, 1)];
    let scopes = ["cta", "gpu", "sys"];
    let mut src = String::from("grid 2, 3;\n");
    for l in locs {
        src.push_str(&format!("{l} = 0;\n"));
    }
    for t in 0..n_threads {
        let (cta, gpu) = coords[rng.gen_range(0..coords.len())];
        src.push_str(&format!("thread<{cta}, {gpu}> {{\n"));
        for i in 0..rng.gen_range(1..=3) {
            let loc = locs[rng.gen_range(0..locs.len())];
            let sco = scopes[rng.gen_range(0..scopes.len())];
            let line = match rng.gen_range(0..100) {
                0..=39 => {
                    let ord = ["na", "rlx", "rel", "sc"][rng.gen_range(0..4)];
                    format!("{loc}^{sco}_{ord} = {};", rng.gen_range(1..=2))
                }
                40..=74 => {
                    let ord = ["na", "rlx", "acq", "sc"][rng.gen_range(0..4)];
                    format!("r{t}_{i} = {loc}^{sco}_{ord};")
                }
                75..=84 => {
                    let ord = ["rlx", "acq", "rel", "acq_rel", "sc"][rng.gen_range(0..5)];
                    format!(
                        "r{t}_{i} = RMW^{sco}_{ord}({loc}, {}, {});",
                        rng.gen_range(0..=1),
                        rng.gen_range(1..=2)
                    )
                }
                85..=89 => {
                    let ord = ["rlx", "acq", "rel", "acq_rel", "sc"][rng.gen_range(0..5)];
                    format!("r{t}_{i} = FADD^{sco}_{ord}({loc}, 1);")
                }
                _ => {
                    let ord = ["rel", "acq", "acq_rel", "sc"][rng.gen_range(0..4)];
                    format!("fence^{sco}_{ord};")
                }
            };
            src.push_str("    ");
            src.push_str(&line);
            src.push('\n');
        }
        src.push_str("}\n");
    }
    src
}

fn fuzz_corpus(count: usize) -> Vec<(String, Program)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    (0..count)
        .map(|_| {
            let src = fuzz_source(&mut rng);
            let p = litmus::prepare(&src, 2).expect("generated programs are valid").0;
            (src, p)
        })
        .collect()
}

const HANDWRITTEN: &[&str] = &[
    "seg.lit",
    "seg_diff_cta.lit",
    "mp_same_cta.lit",
    "mp_diff_cta.lit",
    "lb3.lit",
    "sb.lit",
    "sb_sc_fence.lit",
    "barrier_div.lit",
    "barrier_ok.lit",
    "spin.lit",
    "caslock.lit",
    "fadd.lit",
    "het_gpu.lit",
    "clean.lit",
    "data_exempt.lit",
];

// Criterion 1: the two-thread message-passing example explores exactly 4
// executions, and the exists(a=1 ∧ b=1) witness reads both values from the
// writer thread.
#[test]
fn acceptance_01_seg_execution_count() {
    let p = prepared("seg.lit");
    let report = explore(&p, collect_opts());
    assert_eq!(report.stats.executions, 4);
    assert!(report.duplicate_executions.is_empty());
    let a = report.assertion.expect("program has an assertion");
    assert_eq!(a.verdict, AssertionVerdict::ExistsWitnessed);
    let w = a.witness.expect("witness recorded");
    assert_eq!(w.rf[&(2, 0)], (1, 1), "a reads the writer's Y");
    assert_eq!(w.rf[&(2, 1)], (1, 0), "b reads the writer's X");
    println!("ACCEPTANCE 1 seg-execution-count: PASS (4 executions, witness matches)");
}

// Criterion 2: LB-n explores exactly 2^n - 1 executions.
#[test]
fn acceptance_02_lb_scaling() {
    let expected: &[(usize, u64)] =
        &[(2, 3), (3, 7), (7, 127), (12, 4095), (16, 65535)];
    for (n, count) in expected {
        let p = litmus::prepare(&lb_source(*n), 2).unwrap().0;
        let t = std::time::Instant::now();
        let report = explore(
            &p,
            ExploreOpts {
                on_race: RacePolicy::Continue,
                stop_on_assertion: false,
                ..Default::default()
            },
        );
        assert_eq!(report.stats.executions, *count, "LB-{n}");
        println!(
            "ACCEPTANCE 2 lb-scaling: LB-{n} = {count} executions in {:.2?}",
            t.elapsed()
        );
    }
    println!("ACCEPTANCE 2 lb-scaling: PASS");
}

// Criterion 3: message passing is race-free within a CTA and has both a
// heterogeneous and a data race across CTAs; a=1 ∧ b=0 is unreachable.
#[test]
fn acceptance_03_mp_scope_sensitivity() {
    let same = explore(&prepared("mp_same_cta.lit"), collect_opts());
    assert!(same.races.is_empty(), "same-CTA variant must be race-free");
    assert_eq!(
        same.assertion.unwrap().verdict,
        AssertionVerdict::ExistsUnsatisfied,
        "no execution reads a=1 and stale b=0"
    );

    let diff = explore(&prepared("mp_diff_cta.lit"), collect_opts());
    let het = diff.races.iter().filter(|r| r.kind == RaceKind::Heterogeneous).count();
    let data = diff.races.iter().filter(|r| r.kind == RaceKind::Data).count();
    assert!(het >= 1, "expected a heterogeneous race across CTAs");
    assert!(data >= 1, "expected a data race across CTAs");
    println!("ACCEPTANCE 3 mp-scope-sensitivity: PASS ({het} heterogeneous, {data} data)");
}

// Criterion 4: the five hand-built executions of the fig-2 message-passing
// program classify exactly as published: (b) and (c) consistent regardless
// of CTA placement, (d) consistent across CTAs, (e) consistent within one,
// and (f) — the synchronized stale read — coherence-forbidden.
#[test]
fn acceptance_04_fig2_semantics() {
    // Variant programs give the thread coordinates; events are added by
    // hand on top of the initial graph.
    let smp = |same_cta: bool| {
        let cta2 = if same_cta { 0 } else { 1 };
        let src = format!(
            "grid 2, 2;\nX = 0;\nY = 0;\nthread<0, 0> {{ }}\nthread<{cta2}, 0> {{ }}\n"
        );
        litmus::parse(&src).unwrap()
    };

    struct Built {
        g: ExecutionGraph,
        counts: [u32; 3],
    }
    impl Built {
        fn ev(
            &mut self,
            p: &Program,
            tid: u32,
            op: OpKind,
            loc: &str,
            ord: MemOrder,
            val: Option<i64>,
        ) -> u64 {
            let po_idx = self.counts[tid as usize];
            self.counts[tid as usize] += 1;
            self.g
                .add_event(NewEvent {
                    tid: Tid(tid),
                    po_idx,
                    op,
                    loc: Some(p.loc_id(loc).unwrap()),
                    ord,
                    sco: Scope::Cta,
                    val,
                    rmw_pair: None,
                    stmt: None,
                    await_target: None,
                })
                .unwrap()
        }
    }

    // Shapes: writer thread does W(X,1) rlx then W(Y,1) rel; reader does
    // R(Y) acq and possibly R(X) rlx.
    #[derive(Clone, Copy)]
    enum Shape {
        B, // R(Y) reads 0
        C, // R(Y)=1 from the write, R(X)=1 from the write
        DF, // R(Y)=1 from the write, R(X)=0 from init
    }
    let build = |p: &Program, shape: Shape| {
        let mut b = Built { g: ExecutionGraph::initial(p), counts: [0; 3] };
        let init_x = b.g.co_chain(p.loc_id("X").unwrap())[0];
        let init_y = b.g.co_chain(p.loc_id("Y").unwrap())[0];
        let wx = b.ev(p, 1, OpKind::W, "X", MemOrder::Rlx, Some(1));
        b.g.place_co(wx, 1).unwrap();
        let wy = b.ev(p, 1, OpKind::W, "Y", MemOrder::Rel, Some(1));
        b.g.place_co(wy, 1).unwrap();
        let ry = b.ev(p, 2, OpKind::R, "Y", MemOrder::Acq, None);
        match shape {
            Shape::B => {
                b.g.set_rf(init_y, ry).unwrap();
            }
            Shape::C => {
                b.g.set_rf(wy, ry).unwrap();
                let rx = b.ev(p, 2, OpKind::R, "X", MemOrder::Rlx, None);
                b.g.set_rf(wx, rx).unwrap();
            }
            Shape::DF => {
                b.g.set_rf(wy, ry).unwrap();
                let rx = b.ev(p, 2, OpKind::R, "X", MemOrder::Rlx, None);
                b.g.set_rf(init_x, rx).unwrap();
            }
        }
        b.g
    };

    for same in [true, false] {
        let p = smp(same);
        assert!(consistency::is_consistent(&build(&p, Shape::B)), "(b) same={same}");
        assert!(consistency::is_consistent(&build(&p, Shape::C)), "(c)/(e) same={same}");
    }
    let diff_cta = smp(false);
    assert!(
        consistency::is_consistent(&build(&diff_cta, Shape::DF)),
        "(d): unsynchronized stale read across CTAs is allowed"
    );
    let same_cta = smp(true);
    let f = build(&same_cta, Shape::DF);
    assert!(
        !consistency::is_consistent(&f),
        "(f): synchronized stale read violates coherence"
    );
    assert!(consistency::porf_acyclic(&f) && consistency::atomicity_ok(&f) && consistency::sc_ok(&f));
    assert!(!consistency::coherent(&f), "(f) fails specifically through coherence");
    println!("ACCEPTANCE 4 fig2-semantics: PASS");
}

// Criterion 5: mismatched barriers diverge (listing both barrier ids); the
// corrected single-barrier program does not.
#[test]
fn acceptance_05_barrier_divergence() {
    let div = explore(&prepared("barrier_div.lit"), collect_opts());
    assert_eq!(div.divergences.len(), 1);
    assert_eq!(div.divergences[0].barrier_ids(), vec![1, 2]);
    assert_eq!(div.stats.executions, 0);

    let ok = explore(&prepared("barrier_ok.lit"), collect_opts());
    assert!(ok.divergences.is_empty());
    assert!(ok.stats.executions > 0);
    println!("ACCEPTANCE 5 barrier-divergence: PASS");
}

// Criterion 6: the different-CTA variant is repaired by raising exactly the
// two X accesses from cta to gpu scope, and the repaired program explores
// without heterogeneous races.
#[test]
fn acceptance_06_repair_round_trip() {
    let src = load("seg_diff_cta.lit");
    let parsed = litmus::parse(&src).unwrap();
    let (prepared, _) = litmus::desugar_barriers(&litmus::unroll(&parsed, 2));
    let report = explore(
        &prepared,
        ExploreOpts { on_race: RacePolicy::Repair, stop_on_assertion: false, ..Default::default() },
    );
    let finding = report.races.first().expect("a race is found");
    assert_eq!(finding.kind, RaceKind::Heterogeneous);
    assert_eq!(finding.loc_name, "X");

    let (fixed, edits) = race::repair(&parsed, finding).unwrap();
    assert_eq!(edits.len(), 2, "exactly the two racy instructions change");
    for e in &edits {
        assert_eq!(
            e.change,
            EditChange::RaiseScope { from: Scope::Cta, to: Scope::Gpu }
        );
    }
    let printed = litmus::print(&fixed);
    assert!(printed.contains("X^gpu_rel = 1;"), "{printed}");
    assert!(printed.contains("b = X^gpu_acq;"), "{printed}");
    assert!(printed.contains("Y^cta_rel = 1;"), "the Y write is untouched");

    let (again, _) = litmus::desugar_barriers(&litmus::unroll(&fixed, 2));
    let re = explore(&again, collect_opts());
    assert!(
        re.races.iter().all(|r| r.kind != RaceKind::Heterogeneous),
        "no heterogeneous race remains after the repair"
    );
    println!("ACCEPTANCE 6 repair-round-trip: PASS");
}

// Criterion 7: over 200 random small programs, no execution is ever emitted
// twice (canonical identity).
#[test]
fn acceptance_07_optimality_no_duplicates() {
    let corpus = fuzz_corpus(200);
    for (src, p) in &corpus {
        let report = explore(&p.clone(), collect_opts());
        assert!(
            report.duplicate_executions.is_empty(),
            "duplicate executions on:\n{src}"
        );
    }
    println!("ACCEPTANCE 7 optimality: PASS (200 programs, no duplicates)");
}

// Criterion 8: on the fuzz corpus and every hand-written litmus test, the
// engine's execution set equals the brute-force enumeration, and every
// emitted execution passes the independent naive consistency checker.
#[test]
fn acceptance_08_oracle_equivalence() {
    let mut programs: Vec<(String, Program)> = fuzz_corpus(200);
    for name in HANDWRITTEN {
        programs.push((name.to_string(), prepared(name)));
    }
    for (name, p) in &programs {
        let report = explore(&p.clone(), collect_opts());
        let engine: HashSet<_> = report.executions.iter().cloned().collect();
        assert_eq!(
            engine.len(),
            report.executions.len(),
            "engine emitted duplicates on {name}"
        );
        let brute = oracle::enumerate_all(p, 20_000_000)
            .unwrap_or_else(|e| panic!("oracle budget on {name}: {e}"));
        assert_eq!(engine, brute, "execution sets differ on {name}");
        for g in &report.graphs {
            assert!(oracle::reference::consistent(g), "reference check fails on {name}");
        }
    }
    println!(
        "ACCEPTANCE 8 oracle-equivalence: PASS ({} programs)",
        programs.len()
    );
}

// Criterion 9: every emitted execution rolls back through consistent
// intermediates to the init-only graph, and re-running the engine from each
// intermediate reaches the original execution again.
#[test]
fn acceptance_09_prev_chain() {
    for name in HANDWRITTEN {
        let p = prepared(name);
        let report = explore(&p, collect_opts());
        for g in &report.graphs {
            let original = g.canonical();
            let mut chain = vec![g.clone()];
            let mut cur = g.clone();
            let mut steps = 0usize;
            let mut reversed_pops = 0usize;
            while cur.program_event_count() > 0 {
                let last = cur.last_of_g().unwrap();
                if cur.event(last).unwrap().is_read() && cur.reversed(last) {
                    reversed_pops += 1;
                }
                cur = oracle::prev(&p, &cur).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert!(
                    consistency::is_consistent(&cur),
                    "{name}: prev intermediate inconsistent"
                );
                chain.push(cur.clone());
                steps += 1;
                assert!(
                    steps <= g.len() + 2 * reversed_pops,
                    "{name}: prev chain exceeds |E| + 2 * reversed bound"
                );
            }
            // Re-running the engine from every intermediate reaches the
            // original execution.
            for inter in &chain[1..] {
                let re = explore_from(&p, inter.clone(), collect_opts());
                assert!(
                    re.executions.iter().any(|e| *e == original),
                    "{name}: execution not reachable from an intermediate"
                );
            }
        }
    }
    println!("ACCEPTANCE 9 prev-chain: PASS");
}

// Criterion 10: the search keeps at most (largest execution + 1) graphs
// alive at any moment, on every bundled corpus program and the LB family.
// Graphs are tracked by a live counter incremented on every copy the engine
// takes and decremented on drop.
#[test]
fn acceptance_10_linear_space() {
    let mut worst = (0usize, 0u64, String::new());
    let mut check = |name: &str, p: &Program| {
        let report = explore(
            p,
            ExploreOpts {
                on_race: RacePolicy::Continue,
                stop_on_assertion: false,
                ..Default::default()
            },
        );
        let peak = report.stats.peak_live_graphs;
        let bound = report.stats.max_events + 1;
        assert!(
            peak as u64 <= bound,
            "{name}: peak {peak} live graphs exceeds {bound}"
        );
        if peak > worst.0 {
            worst = (peak, bound, name.to_string());
        }
    };
    for name in HANDWRITTEN {
        check(name, &prepared(name));
    }
    for n in [2usize, 3, 7, 12] {
        check(&format!("LB-{n}"), &litmus::prepare(&lb_source(n), 2).unwrap().0);
    }
    println!(
        "ACCEPTANCE 10 linear-space: PASS (worst {} live of {} allowed, {})",
        worst.0, worst.1, worst.2
    );
}
