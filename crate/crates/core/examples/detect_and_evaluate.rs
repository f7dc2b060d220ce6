//! Solve, detect and score one synthetic scene, then print the
//! per-threshold precision/recall/F1 table.
//!
//! cargo run --release --example detect_and_evaluate -- [seed]
use spotdeconv::cli::{self, RunConfig};
use spotdeconv::evaluation::threshold_sweep;
use spotdeconv::{best_threshold, detect, match_detections};

fn main() -> spotdeconv::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/demo.json");
    let mut cfg = RunConfig::load(path.as_ref())?;
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse().expect("seed");
    }
    let scene = cli::synthesize(&cfg)?;
    let res = cli::solve_image(&cfg, &scene.d_obs, false, |_| {})?;
    let dets = detect(&res.a_opt);
    println!("{} regional maxima", dets.len());

    println!(
        "\n{:>10} {:>4} {:>4} {:>4} {:>6} {:>6} {:>6}",
        "threshold", "tp", "fp", "fn", "pre", "rec", "F1"
    );
    for r in threshold_sweep(&dets, &scene.ground_truth, cfg.tolerance)
        .iter()
        .take(20)
    {
        println!(
            "{:>10.4} {:>4} {:>4} {:>4} {:>6.3} {:>6.3} {:>6.3}",
            r.threshold, r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
        );
    }

    let best = best_threshold(&dets, &scene.ground_truth, cfg.tolerance);
    println!("\nbest: {}", best.summary());
    let kept = dets.above(best.threshold);
    let m = match_detections(kept, &scene.ground_truth, cfg.tolerance);
    for (i, j) in m.pairs {
        let (d, g) = (&kept[i], &scene.ground_truth.points()[j]);
        println!(
            "detection ({:>5.1}, {:>5.1}) p = {:.3} -> source ({}, {})",
            d.row, d.col, d.pseudo_likelihood, g.row, g.col
        );
    }
    Ok(())
}
