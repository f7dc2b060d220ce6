//! Accelerated proximal gradient solver for
//!
//! ```text
//! min_{a ≥ 0}  ‖w ⊙ (d_obs − F a)‖² + λ Σ_{m,n} ‖a[m,n,·]‖₂
//! ```
//!
//! One iteration, starting from the extrapolated point `b`:
//!
//! 1. residual `d = F b − d_obs`
//! 2. `a_k = [b_k − η F_kᵀ(w² ⊙ d)]₊` for every scale k
//! 3. per-pixel group shrinkage by `κ = (η/2)·λ`
//! 4. `b = a + α(i)·(a − a_prev)`
//!
//! Step 2 drops the factor 2 of the (unhalved) fidelity gradient, so the
//! iteration is proximal gradient with step `η/2` on the objective above.

use serde::{Deserialize, Serialize};

use crate::convolution::{adjoint, forward};
use crate::error::{Error, Result};
use crate::kernels::KernelBank;
use crate::tensor::{Image, Volume};

pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_CHAMBOLLE_A: f64 = 3.0;

/// Extrapolation sequence α(i).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Momentum {
    /// Beck–Teboulle: `t₁ = 1`, `t_{i+1} = (1 + √(1 + 4tᵢ²))/2`, `α(i) = (tᵢ − 1)/t_{i+1}`.
    #[default]
    Fista,
    /// Chambolle–Dossal: `α(i) = (i − 1)/(i + a − 1)` with `a > 2`.
    ChambolleDossal { a: f64 },
    /// No extrapolation (plain proximal gradient).
    None,
}

/// Yields α(1), α(2), … for a [`Momentum`] scheme.
#[derive(Clone, Debug)]
pub struct MomentumSequence {
    scheme: Momentum,
    i: usize,
    t: f64,
}

impl MomentumSequence {
    pub fn new(scheme: Momentum) -> Self {
        Self { scheme, i: 0, t: 1.0 }
    }
}

impl Iterator for MomentumSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.i += 1;
        let i = self.i as f64;
        let alpha = match self.scheme {
            Momentum::Fista => {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
                let alpha = (self.t - 1.0) / t_next;
                self.t = t_next;
                alpha
            }
            Momentum::ChambolleDossal { a } => (i - 1.0) / (i + a - 1.0),
            Momentum::None => 0.0,
        };
        Some(alpha)
    }
}

/// α(i) for a single 1-based iteration index.
pub fn momentum_alpha(scheme: Momentum, i: usize) -> f64 {
    assert!(i >= 1, "iterations are 1-based");
    MomentumSequence::new(scheme).nth(i - 1).expect("infinite sequence")
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub lambda: f64,
    pub weights: Image,
    pub momentum: Momentum,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub record_objective: bool,
    /// Halve the step and restart on divergence or a >10× objective jump
    /// (the latter only without momentum). Off by default.
    pub safeguard: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64, weights: Image) -> Self {
        Self {
            lambda,
            weights,
            momentum: Momentum::default(),
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            record_objective: false,
            safeguard: false,
        }
    }

    /// Uniform weights `w ≡ value` for an image of the given shape.
    pub fn uniform(lambda: f64, rows: usize, cols: usize, value: f64) -> Self {
        Self::new(lambda, Image::filled(rows, cols, value))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if self.weights.as_slice().iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("weights", "must be non-negative"));
        }
        if let Momentum::ChambolleDossal { a } = self.momentum {
            if !(a > 2.0 && a.is_finite()) {
                return Err(Error::invalid("momentum.a", format!("must be > 2, got {a}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol", format!("must be > 0, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Non-negative estimate.
    pub a_opt: Volume,
    pub iterations: usize,
    /// `objective(a⁽ⁱ⁾)` for `i = 0..=iterations` when recording was requested.
    pub objective_trace: Option<Vec<f64>>,
    pub final_rel_change: f64,
    /// Whether the relative-change criterion was met before the iteration cap.
    pub converged: bool,
    /// The step η actually used (smaller than the nominal one only if the
    /// safeguard kicked in).
    pub step_size: f64,
}

/// Per-iteration report passed to the progress callback.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub iteration: usize,
    pub rel_change: f64,
    pub objective: Option<f64>,
}

/// Fixed step `η = (1/σ̃_max) / max|w|²`.
pub fn step_size(sigma_max_pixels: f64, w: &Image) -> Result<f64> {
    if !(sigma_max_pixels > 0.0 && sigma_max_pixels.is_finite()) {
        return Err(Error::invalid(
            "sigma_max_pixels",
            format!("must be positive, got {sigma_max_pixels}"),
        ));
    }
    let wmax = w.max_abs();
    if wmax == 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok((1.0 / sigma_max_pixels) / (wmax * wmax))
}

/// Proximal map of `κ Σ ‖v[m,n,·]‖₂` restricted to `v ≥ 0`: each pixel
/// vector is scaled by `max(0, 1 − κ/‖v[m,n,·]‖)`, and zero vectors stay zero.
pub fn prox_group(v: &Volume, kappa: f64) -> Volume {
    let mut out = v.clone();
    shrink_groups(&mut out, kappa);
    out
}

fn shrink_groups(v: &mut Volume, kappa: f64) {
    for px in v.pixels_mut() {
        let rho = px.iter().map(|x| x * x).sum::<f64>().sqrt();
        let p = if rho > 0.0 { (1.0 - kappa / rho).max(0.0) } else { 0.0 };
        px.iter_mut().for_each(|x| *x *= p);
    }
}

fn check_problem(a: &Volume, d_obs: &Image, w: &Image, bank: &KernelBank) -> Result<()> {
    let (m, n, k) = a.shape();
    if (m, n) != d_obs.shape() {
        return Err(Error::shape(
            "volume vs observation",
            format!("{:?}", d_obs.shape()),
            format!("{:?}", (m, n)),
        ));
    }
    if w.shape() != d_obs.shape() {
        return Err(Error::shape(
            "weights vs observation",
            format!("{:?}", d_obs.shape()),
            format!("{:?}", w.shape()),
        ));
    }
    if k != bank.num_scales() {
        return Err(Error::shape("volume depth vs kernel bank", bank.num_scales(), k));
    }
    Ok(())
}

/// `‖w ⊙ (d_obs − F a)‖²`, not halved.
pub fn fidelity(a: &Volume, d_obs: &Image, w: &Image, bank: &KernelBank) -> Result<f64> {
    check_problem(a, d_obs, w, bank)?;
    let r = d_obs.sub(&forward(a, bank)?)?.hadamard(w)?;
    r.dot(&r)
}

/// `λ Σ_{m,n} ‖a[m,n,·]‖₂`.
pub fn group_penalty(a: &Volume, lambda: f64) -> f64 {
    lambda
        * a.pixels()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum::<f64>()
}

/// Full objective: weighted squared residual plus the group penalty.
pub fn objective(a: &Volume, d_obs: &Image, w: &Image, bank: &KernelBank, lambda: f64) -> Result<f64> {
    Ok(fidelity(a, d_obs, w, bank)? + group_penalty(a, lambda))
}

/// Gradient of [`fidelity`]: `2 Fᵀ(w² ⊙ (F a − d_obs))`.
pub fn fidelity_gradient(a: &Volume, d_obs: &Image, w: &Image, bank: &KernelBank) -> Result<Volume> {
    check_problem(a, d_obs, w, bank)?;
    let r = forward(a, bank)?.sub(d_obs)?.hadamard(&w.square())?;
    let mut g = adjoint(&r, bank);
    g.scale(2.0);
    Ok(g)
}

/// One gradient + projection + shrinkage step from `b` (no extrapolation).
/// `w2` holds the squared weights.
pub fn proximal_step(
    b: &Volume,
    d_obs: &Image,
    w2: &Image,
    bank: &KernelBank,
    eta: f64,
    lambda: f64,
) -> Result<Volume> {
    let resid = forward(b, bank)?.sub(d_obs)?.hadamard(w2)?;
    let mut a = b.clone();
    a.axpy(-eta, &adjoint(&resid, bank))?;
    a.project_nonneg_mut();
    shrink_groups(&mut a, 0.5 * eta * lambda);
    Ok(a)
}

/// Runs the solver without progress reporting.
pub fn apg_solve(d_obs: &Image, bank: &KernelBank, cfg: &SolverConfig, a0: Option<&Volume>) -> Result<SolveResult> {
    apg_solve_with_progress(d_obs, bank, cfg, a0, |_| {})
}

/// Runs the solver, calling `progress` after every iteration.
pub fn apg_solve_with_progress(
    d_obs: &Image,
    bank: &KernelBank,
    cfg: &SolverConfig,
    a0: Option<&Volume>,
    mut progress: impl FnMut(&Progress),
) -> Result<SolveResult> {
    cfg.validate()?;
    let (rows, cols) = d_obs.shape();
    let start = match a0 {
        Some(a) => {
            let mut a = a.clone();
            a.project_nonneg_mut();
            a
        }
        None => Volume::zeros(rows, cols, bank.num_scales()),
    };
    check_problem(&start, d_obs, &cfg.weights, bank)?;

    let mut eta = step_size(bank.sigma_max_pixels(), &cfg.weights)?;
    let w2 = cfg.weights.square();
    let watch_objective = cfg.record_objective || (cfg.safeguard && cfg.momentum == Momentum::None);
    let obj = |a: &Volume| objective(a, d_obs, &cfg.weights, bank, cfg.lambda);

    'restart: loop {
        let mut a_prev = start.clone();
        let mut b = start.clone();
        let mut alphas = MomentumSequence::new(cfg.momentum);
        let mut trace = if watch_objective {
            vec![obj(&a_prev)?]
        } else {
            Vec::new()
        };
        let mut rel_change = f64::INFINITY;
        let mut iterations = 0;

        for i in 1..=cfg.max_iters {
            iterations = i;
            let a = proximal_step(&b, d_obs, &w2, bank, eta, cfg.lambda)?;
            if !a.all_finite() {
                if cfg.safeguard && eta > f64::MIN_POSITIVE {
                    eta *= 0.5;
                    continue 'restart;
                }
                return Err(Error::Divergence { iteration: i });
            }
            debug_assert!(a.is_nonneg(), "iterate {i} left the non-negative orthant");

            let diff = a.sub(&a_prev)?;
            rel_change = diff.frobenius_norm() / a_prev.frobenius_norm().max(1e-12);

            let objective = if watch_objective {
                let f = obj(&a)?;
                let last = *trace.last().expect("trace starts with a⁽⁰⁾");
                if cfg.safeguard && cfg.momentum == Momentum::None && f > 10.0 * last.abs() && f > last {
                    eta *= 0.5;
                    continue 'restart;
                }
                trace.push(f);
                Some(f)
            } else {
                None
            };

            let alpha = alphas.next().expect("infinite sequence");
            b = a.clone();
            if alpha != 0.0 {
                b.axpy(alpha, &diff)?;
            }
            a_prev = a;

            progress(&Progress {
                iteration: i,
                rel_change,
                objective,
            });
            if rel_change <= cfg.rel_tol {
                break;
            }
        }

        return Ok(SolveResult {
            a_opt: a_prev,
            iterations,
            objective_trace: cfg.record_objective.then_some(trace),
            final_rel_change: rel_change,
            converged: rel_change <= cfg.rel_tol,
            step_size: eta,
        });
    }
}
