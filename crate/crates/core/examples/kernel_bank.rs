//! Prints the scale grid and the 1-D kernel factors for a few bank sizes.
//!
//! cargo run --release --example kernel_bank -- [sigma_max_pixels] [K]
use spotdeconv::KernelBank;

fn main() -> spotdeconv::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma_max: f64 = args.next().map_or(3.0, |s| s.parse().expect("sigma_max_pixels"));
    let k: usize = args.next().map_or(4, |s| s.parse().expect("K"));

    let bank = KernelBank::new(sigma_max, k, 4.0)?;
    println!("sigma_max = {sigma_max} px, K = {k}, truncation = 4 sigma");
    println!("bin edges: {:?}", bank.grid().edges());
    println!(
        "{:>3} {:>8} {:>6} {:>10} {:>10}",
        "k", "sigma", "radius", "mass", "centre"
    );
    for (i, f) in bank.factors().iter().enumerate() {
        println!(
            "{i:>3} {:>8.4} {:>6} {:>10.6} {:>10.6}",
            bank.grid().representative_sigma(i),
            f.radius(),
            f.mass(),
            f.taps()[f.radius()],
        );
    }

    let widest = bank.factor(k - 1);
    println!("\ntaps of bin {}:", k - 1);
    for (i, t) in widest.taps().iter().enumerate() {
        let offset = i as isize - widest.radius() as isize;
        println!("{offset:>4} {t:.6e} {}", "#".repeat((t * 200.0).round() as usize));
    }
    Ok(())
}
