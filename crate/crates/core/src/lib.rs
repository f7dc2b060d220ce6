//! Group-sparse multi-kernel deconvolution of immunoassay images.
//!
//! Reconstructs a non-negative M×N×K density volume from a single image by
//! minimizing
//!
//! ```text
//! ‖w ⊙ (d_obs − Σ_k g_k ⊛ a_k)‖² + λ Σ_{m,n} ‖a[m,n,·]‖₂   subject to a ≥ 0
//! ```
//!
//! with an accelerated proximal gradient method, where the `g_k` are
//! rank-1 pixel-integrated Gaussian kernels over K scale bins. Cells are
//! then detected as regional maxima of the per-pixel group norm and scored
//! against ground truth by greedy matching.
//!
//! The pipeline, module by module:
//!
//! - [`tensor`]: [`Image`] and [`Volume`] storage and element-wise algebra
//! - [`kernels`]: scale grid and the [`KernelBank`]
//! - [`convolution`]: the forward operator and its adjoint
//! - [`solver`]: [`apg_solve`] and its building blocks
//! - [`detection`]: regional maxima of the group-norm image
//! - [`evaluation`]: greedy matching, precision/recall/F1, threshold sweep
//! - [`synth`]: reproducible synthetic scenes
//! - [`cli`]: configuration, file formats and the subcommands of the
//!   `spotdeconv` binary
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod cli;
pub mod convolution;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use convolution::{adjoint, conv_same_2d, forward};
pub use detection::{detect, Detection, DetectionList};
pub use error::{Error, Result};
pub use evaluation::{best_threshold, match_detections, prf1, EvalReport, GroundTruth};
pub use kernels::{build_kernel_bank, make_scale_grid, Kernel1D, KernelBank, ScaleGrid};
pub use solver::{apg_solve, objective, Momentum, SolveResult, SolverConfig};
pub use synth::{generate_scene, render_observation, SceneSpec};
pub use tensor::{group_norm_image, project_nonneg, Image, Volume};
