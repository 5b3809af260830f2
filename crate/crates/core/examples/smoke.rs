use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scoped_mc_core::dpor::{explore, ExploreOpts, RacePolicy};
use scoped_mc_core::litmus;
use scoped_mc_core::oracle;
use std::collections::HashSet;

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

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    for i in 0..200 {
        let src = fuzz_source(&mut rng);
        let (p, _) = litmus::prepare(&src, 2).unwrap();
        let report = explore(&p, ExploreOpts {
            on_race: RacePolicy::Continue,
            stop_on_assertion: false,
            collect_executions: true,
            ..Default::default()
        });
        let engine: HashSet<_> = report.executions.iter().cloned().collect();
        let brute = oracle::enumerate_all(&p, 20_000_000).unwrap();
        let peak_bound = report.stats.max_events + 1;
        let peak = report.stats.peak_live_graphs as u64;
        let _ = (peak, peak_bound);
        if engine != brute || !report.duplicate_executions.is_empty() {
            println!("#### program {i}:");
            println!("{src}");
            println!("engine {} oracle {} dups {} peak {}/{}", engine.len(), brute.len(), report.duplicate_executions.len(), peak, peak_bound);
            for e in engine.difference(&brute) {
                println!("ONLY ENGINE:\n{e}");
            }
            for e in brute.difference(&engine) {
                println!("ONLY ORACLE:\n{e}");
            }
            return;
        }
    }
    println!("all 200 agree");
}
