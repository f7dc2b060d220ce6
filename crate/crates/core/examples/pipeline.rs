//! Runs synth, solve, detect and evaluate on a config and lists the files
//! written. Same as `spotdeconv pipeline`.
//!
//! cargo run --release --example pipeline -- [config.json] [out_dir]
use std::path::PathBuf;

use spotdeconv::cli::{self, RunConfig};

fn main() -> spotdeconv::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map_or_else(
        || PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/demo.json")),
        PathBuf::from,
    );
    let out_dir = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("spotdeconv-demo"), PathBuf::from);

    let cfg = RunConfig::load(&config)?;
    let out = cli::pipeline(&cfg, &out_dir, |p| {
        if p.iteration.is_multiple_of(200) {
            eprintln!("iter {:>5}  rel change {:.3e}", p.iteration, p.rel_change);
        }
    })?;
    println!(
        "{} iterations, converged: {}",
        out.solve.iterations, out.solve.converged
    );
    println!("{}", out.report.summary());

    let mut files: Vec<_> = std::fs::read_dir(&out_dir)?.filter_map(|e| e.ok()).collect();
    files.sort_by_key(|e| e.file_name());
    println!("\n{}:", out_dir.display());
    for f in files {
        println!(
            "  {:<20} {:>8} bytes",
            f.file_name().to_string_lossy(),
            f.metadata()?.len()
        );
    }
    Ok(())
}
