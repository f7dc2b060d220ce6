//! Size-preserving zero-padded separable convolution, the multi-kernel
//! forward operator `F a = Σ_k g_k ⊛ a_k`, and its adjoint.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{Kernel1D, KernelBank};
use crate::tensor::{Image, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Convolve,
    Correlate,
}

impl Mode {
    /// Source index for output `i` and tap offset `j ∈ [−R, R]`.
    #[inline]
    fn source(self, i: isize, j: isize) -> isize {
        match self {
            Mode::Convolve => i - j,
            Mode::Correlate => i + j,
        }
    }
}

fn filter_1d(signal: &[f64], taps: &[f64], mode: Mode) -> Vec<f64> {
    assert!(taps.len() % 2 == 1, "taps must have odd length");
    let r = (taps.len() / 2) as isize;
    let n = signal.len() as isize;
    (0..n)
        .map(|i| {
            // tap offsets whose source sample lies inside the signal
            let (lo, hi) = match mode {
                Mode::Convolve => ((i - n + 1).max(-r), i.min(r)),
                Mode::Correlate => ((-i).max(-r), (n - 1 - i).min(r)),
            };
            (lo..=hi)
                .map(|j| taps[(j + r) as usize] * signal[mode.source(i, j) as usize])
                .sum()
        })
        .collect()
}

/// `out[i] = Σ_j taps[R+j] · signal[i−j]`, zero outside the signal.
pub fn conv_same_1d(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    filter_1d(signal, taps, Mode::Convolve)
}

/// `out[i] = Σ_j taps[R+j] · signal[i+j]`, the adjoint of [`conv_same_1d`].
pub fn correlate_same_1d(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    filter_1d(signal, taps, Mode::Correlate)
}

fn filter_2d(img: &Image, taps: &[f64], mode: Mode) -> Image {
    let (rows, cols) = img.shape();
    let r = (taps.len() / 2) as isize;

    // along each row
    let mut tmp = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        tmp.extend(filter_1d(img.row(m), taps, mode));
    }

    // along each column, accumulating whole rows
    let mut out = vec![0.0; rows * cols];
    for m in 0..rows {
        let dst = &mut out[m * cols..(m + 1) * cols];
        for (u, &t) in taps.iter().enumerate() {
            let s = mode.source(m as isize, u as isize - r);
            if !(0..rows as isize).contains(&s) {
                continue;
            }
            let src = &tmp[s as usize * cols..(s as usize + 1) * cols];
            dst.iter_mut().zip(src).for_each(|(d, x)| *d += t * x);
        }
    }
    Image::new(rows, cols, out).expect("filtering finite data stays finite")
}

/// Same-size zero-padded 2-D convolution with the rank-1 kernel `k ⊗ k`,
/// done as a row pass followed by a column pass.
pub fn conv_same_2d(img: &Image, k: &Kernel1D) -> Image {
    filter_2d(img, k.taps(), Mode::Convolve)
}

/// Same-size zero-padded 2-D correlation with `k ⊗ k`.
pub fn correlate_same_2d(img: &Image, k: &Kernel1D) -> Image {
    filter_2d(img, k.taps(), Mode::Correlate)
}

/// Forward operator: `Σ_k g_k ⊛ a_k`. Slices are filtered in parallel and
/// summed in k order, so the result does not depend on the thread count.
pub fn forward(a: &Volume, bank: &KernelBank) -> Result<Image> {
    if a.depth() != bank.num_scales() {
        return Err(Error::shape(
            "forward: volume depth vs kernel bank",
            bank.num_scales(),
            a.depth(),
        ));
    }
    let parts: Vec<Image> = (0..a.depth())
        .into_par_iter()
        .map(|k| conv_same_2d(&a.slice(k), bank.factor(k)))
        .collect();
    let mut parts = parts.into_iter();
    let mut out = parts.next().expect("depth >= 1");
    for p in parts {
        out.axpy(1.0, &p)?;
    }
    Ok(out)
}

/// Adjoint of [`forward`]: slice k is the correlation of `r` with `g_k`.
pub fn adjoint(r: &Image, bank: &KernelBank) -> Volume {
    let slices: Vec<Image> = (0..bank.num_scales())
        .into_par_iter()
        .map(|k| correlate_same_2d(r, bank.factor(k)))
        .collect();
    Volume::from_slices(&slices).expect("slices share the residual's shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_scale_grid, KernelBank};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Image {
        Image::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_factor(rng: &mut ChaCha8Rng, radius: usize) -> Kernel1D {
        let half: Vec<f64> = (0..=radius).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut taps: Vec<f64> = half[1..].iter().rev().chain(half.iter()).copied().collect();
        let s: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= s * 1.0001);
        Kernel1D::new(taps, 0).unwrap()
    }

    /// Direct O(M·N·(2R+1)²) zero-padded convolution.
    fn dense_conv(img: &Image, taps: &[f64]) -> Image {
        let r = (taps.len() / 2) as isize;
        let (rows, cols) = (img.rows() as isize, img.cols() as isize);
        Image::from_fn(img.rows(), img.cols(), |m, n| {
            let mut acc = 0.0;
            for u in -r..=r {
                for v in -r..=r {
                    let (sm, sn) = (m as isize - u, n as isize - v);
                    if sm >= 0 && sm < rows && sn >= 0 && sn < cols {
                        acc += taps[(u + r) as usize] * taps[(v + r) as usize] * img.get(sm as usize, sn as usize);
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(conv_same_1d(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), vec![3.0, 6.0, 5.0]);
        assert_eq!(conv_same_1d(&[1.0, 2.0, 3.0], &[1.0]), vec![1.0, 2.0, 3.0]);
        // asymmetric taps expose the flip
        assert_eq!(conv_same_1d(&[0.0, 1.0, 0.0], &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            correlate_same_1d(&[0.0, 1.0, 0.0], &[1.0, 2.0, 3.0]),
            vec![3.0, 2.0, 1.0]
        );
        // radius larger than the signal
        assert_eq!(conv_same_1d(&[1.0], &[0.1, 0.2, 0.4, 0.2, 0.1]), vec![0.4]);
    }

    #[test]
    fn identity_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 5, 7);
        let id = Kernel1D::new(vec![1.0], 0).unwrap();
        assert_eq!(conv_same_2d(&img, &id), img);
    }

    #[test]
    fn separable_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for radius in [0, 1, 3, 6] {
            let img = random_image(&mut rng, 9, 9);
            let f = random_factor(&mut rng, radius);
            let sep = conv_same_2d(&img, &f);
            let dense = dense_conv(&img, f.taps());
            for (a, b) in sep.as_slice().iter().zip(dense.as_slice()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn impulse_response_is_the_cropped_kernel() {
        let bank = KernelBank::new(3.0, 3, 4.0).unwrap();
        let (m0, n0, k0) = (1usize, 6usize, 2usize);
        let mut a = Volume::zeros(8, 9, 3);
        a.set(m0, n0, k0, 1.0);
        let out = forward(&a, &bank).unwrap();
        let f = bank.factor(k0);
        let r = f.radius() as isize;
        for m in 0..8 {
            for n in 0..9 {
                let (du, dv) = (m as isize - m0 as isize, n as isize - n0 as isize);
                let expected = if du.abs() <= r && dv.abs() <= r {
                    f.taps()[(du + r) as usize] * f.taps()[(dv + r) as usize]
                } else {
                    0.0
                };
                assert!((out.get(m, n) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_and_near_identity() {
        let bank = KernelBank::new(0.1, 1, 4.0).unwrap();
        let z = Volume::zeros(4, 5, 1);
        assert!(forward(&z, &bank).unwrap().as_slice().iter().all(|&v| v == 0.0));
        assert!(adjoint(&Image::zeros(4, 5), &bank).as_slice().iter().all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(&mut rng, 4, 5);
        let a = Volume::from_slices(std::slice::from_ref(&img)).unwrap();
        let fa = forward(&a, &bank).unwrap();
        let ftr = adjoint(&img, &bank).slice(0);
        for ((x, y), z) in fa.as_slice().iter().zip(img.as_slice()).zip(ftr.as_slice()) {
            assert!((x - y).abs() < 1e-9);
            assert!((z - y).abs() < 1e-9);
        }
    }

    #[test]
    fn depth_mismatch() {
        let bank = KernelBank::new(2.0, 3, 4.0).unwrap();
        assert!(matches!(
            forward(&Volume::zeros(4, 4, 2), &bank),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn linearity_adjointness_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bank = KernelBank::new(3.0, 3, 4.0).unwrap();
        for _ in 0..20 {
            let a = Volume::from_fn(16, 16, 3, |_, _, _| rng.random_range(-1.0..1.0));
            let b = Volume::from_fn(16, 16, 3, |_, _, _| rng.random_range(-1.0..1.0));
            let r = random_image(&mut rng, 16, 16);
            let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));

            let mut combo = a.clone();
            combo.scale(alpha);
            combo.axpy(beta, &b).unwrap();
            let lhs = forward(&combo, &bank).unwrap();
            let mut rhs = forward(&a, &bank).unwrap();
            rhs.scale(alpha);
            rhs.axpy(beta, &forward(&b, &bank).unwrap()).unwrap();
            for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                assert!((x - y).abs() <= 1e-12);
            }

            let fa_r = forward(&a, &bank).unwrap().dot(&r).unwrap();
            let a_ftr = a.dot(&adjoint(&r, &bank)).unwrap();
            assert!((fa_r - a_ftr).abs() / (a.frobenius_norm() * r.frobenius_norm()) <= 1e-9);

            let adj = adjoint(&r, &bank);
            for k in 0..3 {
                let conv = conv_same_2d(&r, bank.factor(k));
                for (x, y) in adj.slice(k).as_slice().iter().zip(conv.as_slice()) {
                    assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn forward_is_thread_count_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bank = build_bank();
        let a = Volume::from_fn(12, 10, 4, |_, _, _| rng.random_range(0.0..1.0));
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| forward(&a, &bank).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| forward(&a, &bank).unwrap());
        assert_eq!(single, multi);
    }

    fn build_bank() -> KernelBank {
        crate::kernels::build_kernel_bank(make_scale_grid(2.0, 4).unwrap(), 4.0).unwrap()
    }
}
