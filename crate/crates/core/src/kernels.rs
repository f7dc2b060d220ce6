//! Rank-1 Gaussian kernels, one per scale bin.
//!
//! The scale range `[0, σ̃_max]` (in pixels) is split into K uniform bins.
//! Each bin is represented by its midpoint scale, and the 1-D factor is the
//! Gaussian integrated exactly over each pixel's extent. The 2-D kernel of
//! bin k is the outer product of the factor with itself.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Lower clamp on a bin's representative scale; the first bin starts at 0.
pub const SIGMA_MIN: f64 = 0.05;

/// Default half-width of a factor, in multiples of its scale.
pub const DEFAULT_TRUNCATION: f64 = 4.0;

/// Uniform partition of `[0, σ̃_max]` into K bins.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleGrid {
    sigma_max_pixels: f64,
    edges: Vec<f64>,
}

impl ScaleGrid {
    pub fn sigma_max_pixels(&self) -> f64 {
        self.sigma_max_pixels
    }

    /// Number of bins K.
    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The K+1 bin edges, `0 = s_0 < … < s_K = σ̃_max`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Midpoint of bin `k` (0-based), clamped below at [`SIGMA_MIN`].
    pub fn representative_sigma(&self, k: usize) -> f64 {
        (0.5 * (self.edges[k] + self.edges[k + 1])).max(SIGMA_MIN)
    }
}

/// Splits `[0, sigma_max_pixels]` into `k` equal bins.
pub fn make_scale_grid(sigma_max_pixels: f64, k: usize) -> Result<ScaleGrid> {
    if !(sigma_max_pixels.is_finite() && sigma_max_pixels > 0.0) {
        return Err(Error::invalid(
            "sigma_max_pixels",
            format!("must be a positive finite number, got {sigma_max_pixels}"),
        ));
    }
    if k == 0 {
        return Err(Error::invalid("num_scales", "must be at least 1"));
    }
    let mut edges: Vec<f64> = (0..=k).map(|i| i as f64 * sigma_max_pixels / k as f64).collect();
    edges[k] = sigma_max_pixels;
    Ok(ScaleGrid {
        sigma_max_pixels,
        edges,
    })
}

/// Odd-length, palindromic, non-negative 1-D filter with mass at most 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel1D {
    taps: Vec<f64>,
    bin: usize,
}

impl Kernel1D {
    pub fn new(taps: Vec<f64>, bin: usize) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::invalid(
                "taps",
                format!("length must be odd, got {}", taps.len()),
            ));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("taps", "taps must be finite and non-negative"));
        }
        let n = taps.len();
        if (0..n / 2).any(|j| taps[j] != taps[n - 1 - j]) {
            return Err(Error::invalid("taps", "taps must be palindromic"));
        }
        let mass: f64 = taps.iter().sum();
        if mass > 1.0 + 1e-9 {
            return Err(Error::invalid("taps", format!("mass {mass} exceeds 1")));
        }
        Ok(Self { taps, bin })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn radius(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn bin(&self) -> usize {
        self.bin
    }

    pub fn mass(&self) -> f64 {
        self.taps.iter().sum()
    }
}

/// Mass of a unit Gaussian of scale `sigma` falling in the pixel `[j − ½, j + ½]`.
fn pixel_mass(j: usize, sigma: f64) -> f64 {
    let s = SQRT_2 * sigma;
    if j == 0 {
        libm::erf(0.5 / s)
    } else {
        // erfc difference keeps precision in the tails
        let lo = (j as f64 - 0.5) / s;
        let hi = (j as f64 + 0.5) / s;
        0.5 * (libm::erfc(lo) - libm::erfc(hi))
    }
}

/// Pixel-integrated Gaussian factor for bin `k` of `grid`, truncated at
/// `ceil(truncation · σ_k)` pixels and left unnormalized.
pub fn gaussian_factor_1d(grid: &ScaleGrid, k: usize, truncation: f64) -> Result<Kernel1D> {
    if k >= grid.len() {
        return Err(Error::invalid(
            "bin",
            format!("{k} out of range for {} bins", grid.len()),
        ));
    }
    if !(truncation.is_finite() && truncation > 0.0) {
        return Err(Error::invalid(
            "truncation",
            format!("must be positive, got {truncation}"),
        ));
    }
    let sigma = grid.representative_sigma(k);
    let radius = (truncation * sigma).ceil() as usize;
    let half: Vec<f64> = (0..=radius).map(|j| pixel_mass(j, sigma)).collect();
    let taps = half[1..].iter().rev().chain(half.iter()).copied().collect();
    Kernel1D::new(taps, k)
}

/// The K separable kernels `g_k = f_k ⊗ f_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBank {
    grid: ScaleGrid,
    truncation: f64,
    factors: Vec<Kernel1D>,
}

impl KernelBank {
    /// Shorthand for [`make_scale_grid`] followed by [`build_kernel_bank`].
    pub fn new(sigma_max_pixels: f64, num_scales: usize, truncation: f64) -> Result<Self> {
        build_kernel_bank(make_scale_grid(sigma_max_pixels, num_scales)?, truncation)
    }

    /// A bank from arbitrary palindromic factors, e.g. for operator tests.
    pub fn from_factors(grid: ScaleGrid, factors: Vec<Kernel1D>) -> Result<Self> {
        if factors.len() != grid.len() {
            return Err(Error::shape("kernel bank", grid.len(), factors.len()));
        }
        Ok(Self {
            grid,
            truncation: f64::NAN,
            factors,
        })
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn sigma_max_pixels(&self) -> f64 {
        self.grid.sigma_max_pixels
    }

    pub fn num_scales(&self) -> usize {
        self.factors.len()
    }

    /// Truncation factor used to build the bank (NaN for custom factors).
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn factor(&self, k: usize) -> &Kernel1D {
        &self.factors[k]
    }

    pub fn factors(&self) -> &[Kernel1D] {
        &self.factors
    }
}

pub fn build_kernel_bank(grid: ScaleGrid, truncation: f64) -> Result<KernelBank> {
    let factors = (0..grid.len())
        .map(|k| gaussian_factor_1d(&grid, k, truncation))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelBank {
        grid,
        truncation,
        factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integral of the standard normal pdf scaled to `sigma`.
    fn simpson_gaussian_mass(lo: f64, hi: f64, sigma: f64) -> f64 {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let pdf = |x: f64| (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut acc = pdf(lo) + pdf(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn uniform_grids() {
        assert_eq!(make_scale_grid(4.0, 4).unwrap().edges(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(make_scale_grid(1.0, 1).unwrap().edges(), &[0.0, 1.0]);
        assert_eq!(
            make_scale_grid(2.5, 5).unwrap().edges(),
            &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5]
        );
        let g = make_scale_grid(0.1, 3).unwrap();
        assert_eq!(*g.edges().last().unwrap(), 0.1);
        assert!(g.edges().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_grids() {
        assert!(make_scale_grid(0.0, 3).is_err());
        assert!(make_scale_grid(-1.0, 3).is_err());
        assert!(make_scale_grid(f64::NAN, 3).is_err());
        assert!(make_scale_grid(1.0, 0).is_err());
    }

    #[test]
    fn smallest_scale_is_near_delta() {
        // midpoint 0.05 → clamp leaves it at 0.05
        let grid = make_scale_grid(0.1, 1).unwrap();
        let f = gaussian_factor_1d(&grid, 0, DEFAULT_TRUNCATION).unwrap();
        let r = f.radius();
        assert!(f.taps()[r] >= 1.0 - 1e-10);
        for (j, t) in f.taps().iter().enumerate() {
            if j != r {
                assert!(*t <= 1e-10);
            }
        }
    }

    #[test]
    fn unit_scale_center_tap_matches_quadrature() {
        // single bin [0, 2] → σ = 1
        let grid = make_scale_grid(2.0, 1).unwrap();
        assert_eq!(grid.representative_sigma(0), 1.0);
        let f = gaussian_factor_1d(&grid, 0, 4.0).unwrap();
        assert_eq!(f.radius(), 4);
        let center = f.taps()[4];
        let oracle = simpson_gaussian_mass(-0.5, 0.5, 1.0);
        assert!((oracle - 0.3829249225480262).abs() < 1e-12);
        assert!((center - oracle).abs() < 1e-12, "{center} vs {oracle}");
        // off-center taps against the same oracle
        for j in 1..=4usize {
            let o = simpson_gaussian_mass(j as f64 - 0.5, j as f64 + 0.5, 1.0);
            assert!((f.taps()[4 + j] - o).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_is_bounded_and_grows_with_truncation() {
        let grid = make_scale_grid(6.0, 5).unwrap();
        for k in 0..5 {
            let mut prev = 0.0;
            for c in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let m = gaussian_factor_1d(&grid, k, c).unwrap().mass();
                assert!(m > 0.0 && m <= 1.0);
                assert!(m >= prev);
                prev = m;
            }
            assert!(prev > 1.0 - 1e-12);
        }
    }

    #[test]
    fn bank_properties() {
        let bank = KernelBank::new(3.0, 4, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(bank.num_scales(), 4);
        let radii: Vec<usize> = bank.factors().iter().map(|f| f.radius()).collect();
        assert!(radii.windows(2).all(|w| w[0] <= w[1]), "{radii:?}");
        for (k, f) in bank.factors().iter().enumerate() {
            assert_eq!(f.bin(), k);
            let t = f.taps();
            assert!((0..t.len()).all(|j| t[j] == t[t.len() - 1 - j]));
            let m2 = f.mass().powi(2);
            assert!(m2 > 0.0 && m2 <= 1.0);
        }
        let again = KernelBank::new(3.0, 4, DEFAULT_TRUNCATION).unwrap();
        for (a, b) in bank.factors().iter().zip(again.factors()) {
            let ab: Vec<u64> = a.taps().iter().map(|x| x.to_bits()).collect();
            let bb: Vec<u64> = b.taps().iter().map(|x| x.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }

    #[test]
    fn kernel1d_validation() {
        assert!(Kernel1D::new(vec![0.5, 0.5], 0).is_err());
        assert!(Kernel1D::new(vec![0.1, 0.5, 0.2], 0).is_err());
        assert!(Kernel1D::new(vec![-0.1, 0.5, -0.1], 0).is_err());
        assert!(Kernel1D::new(vec![1.0, 1.0, 1.0], 0).is_err());
        assert!(Kernel1D::new(vec![0.25, 0.5, 0.25], 0).is_ok());
        let grid = make_scale_grid(1.0, 2).unwrap();
        assert!(gaussian_factor_1d(&grid, 2, 4.0).is_err());
        assert!(gaussian_factor_1d(&grid, 0, 0.0).is_err());
    }
}
