//! Objective traces of the three extrapolation schemes on the demo scene.
//!
//! cargo run --release --example momentum_comparison
use spotdeconv::cli::{self, RunConfig};
use spotdeconv::solver::momentum_alpha;
use spotdeconv::Momentum;

fn main() -> spotdeconv::Result<()> {
    let schemes = [
        ("fista", Momentum::Fista),
        ("chambolle-dossal a=3", Momentum::ChambolleDossal { a: 3.0 }),
        ("none", Momentum::None),
    ];
    for (name, m) in schemes {
        let alphas: Vec<String> = (1..=5).map(|i| format!("{:.6}", momentum_alpha(m, i))).collect();
        println!("{name:<22} alpha(1..5) = {}", alphas.join(" "));
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/demo.json");
    let mut cfg = RunConfig::load(path.as_ref())?;
    cfg.max_iters = 5000;
    let scene = cli::synthesize(&cfg)?;
    let mut traces = Vec::new();
    for (name, m) in schemes {
        cfg.momentum = m;
        let res = cli::solve_image(&cfg, &scene.d_obs, true, |_| {})?;
        println!(
            "{name:<22} {} iterations, final objective {:.8}",
            res.iterations,
            res.objective_trace.as_ref().unwrap().last().unwrap()
        );
        traces.push(res.objective_trace.unwrap());
    }

    println!("\n{:>6} {:>14} {:>14} {:>14}", "iter", "fista", "chambolle", "none");
    for i in [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000] {
        let cell = |t: &Vec<f64>| t.get(i).map_or("-".to_string(), |v| format!("{v:.6}"));
        println!(
            "{i:>6} {:>14} {:>14} {:>14}",
            cell(&traces[0]),
            cell(&traces[1]),
            cell(&traces[2])
        );
    }
    Ok(())
}
