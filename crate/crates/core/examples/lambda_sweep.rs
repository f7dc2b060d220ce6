//! Effect of the regularization weight on sparsity and detection quality
//! for the demo scene.
//!
//! cargo run --release --example lambda_sweep
use spotdeconv::cli::{self, RunConfig};
use spotdeconv::{best_threshold, detect};

fn main() -> spotdeconv::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/demo.json");
    let mut cfg = RunConfig::load(path.as_ref())?;
    let scene = cli::synthesize(&cfg)?;

    println!(
        "{:>8} {:>6} {:>8} {:>6} {:>6}",
        "lambda", "iters", "nonzero", "dets", "F1"
    );
    for lambda in [0.0125, 0.025, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
        cfg.lambda = lambda;
        let res = cli::solve_image(&cfg, &scene.d_obs, false, |_| {})?;
        let nonzero = res.a_opt.pixels().filter(|p| p.iter().any(|&x| x > 0.0)).count();
        let dets = detect(&res.a_opt);
        let f1 = best_threshold(&dets, &scene.ground_truth, cfg.tolerance).f1;
        println!(
            "{lambda:>8} {:>6} {nonzero:>8} {:>6} {f1:>6.3}",
            res.iterations,
            dets.len()
        );
    }
    Ok(())
}
