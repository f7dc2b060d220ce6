//! Renders point sources through the forward operator and checks that the
//! adjoint satisfies <F a, r> = <a, F^T r> on random data.
//!
//! cargo run --release --example forward_adjoint
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spotdeconv::{adjoint, forward, Image, KernelBank, Volume};

fn main() -> spotdeconv::Result<()> {
    let bank = KernelBank::new(3.0, 4, 4.0)?;

    // one unit source per scale bin, side by side
    let mut a = Volume::zeros(15, 60, 4);
    for k in 0..4 {
        a.set(7, 7 + 15 * k, k, 1.0);
    }
    let img = forward(&a, &bank)?;
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let peak = img.max_value();
    for m in 0..img.rows() {
        let line: String = img
            .row(m)
            .iter()
            .map(|v| shades[((v / peak) * 9.0).round() as usize])
            .collect();
        println!("|{line}|");
    }
    for k in 0..4 {
        println!("bin {k}: peak {:.4}", img.get(7, 7 + 15 * k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = Volume::from_fn(32, 32, 4, |_, _, _| rng.random_range(-1.0..1.0));
    let r = Image::from_fn(32, 32, |_, _| rng.random_range(-1.0..1.0));
    let lhs = forward(&a, &bank)?.dot(&r)?;
    let rhs = a.dot(&adjoint(&r, &bank))?;
    println!("\n<Fa, r> = {lhs:.15}\n<a, F^T r> = {rhs:.15}");
    println!(
        "relative gap {:.2e}",
        (lhs - rhs).abs() / (a.frobenius_norm() * r.frobenius_norm())
    );
    Ok(())
}
