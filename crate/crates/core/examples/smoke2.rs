use scoped_mc_core::dpor::{explore, ExploreOpts, RacePolicy};
use scoped_mc_core::litmus;
use scoped_mc_core::oracle;
use std::collections::HashSet;

fn main() {
    let src = "grid 1, 4;
X = 0;
thread<0, 0> {
    X^cta_rlx = 1;
}
thread<0, 0> {
    r1_0 = X^cta_rlx;
    X^cta_rlx = 2;
}
thread<0, 0> {
    r2_0 = RMW^cta_rlx(X, 0, 1);
}
";
    let (p, _) = litmus::prepare(src, 2).unwrap();
    let report = explore(&p, ExploreOpts {
        on_race: RacePolicy::Continue,
        stop_on_assertion: false,
        collect_executions: true,
        ..Default::default()
    });
    let engine: HashSet<_> = report.executions.iter().cloned().collect();
    let brute = oracle::enumerate_all(&p, 5_000_000).unwrap();
    println!("engine {} oracle {}", engine.len(), brute.len());
    for e in brute.difference(&engine) {
        println!("== MISSING ==");
        print!("{e}");
    }
    for e in engine.difference(&brute) {
        println!("== EXTRA ==");
        print!("{e}");
    }
}
