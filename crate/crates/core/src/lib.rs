//! Restoration of images blurred by a known point-spread function and
//! corrupted by Poisson noise.
//!
//! The observation is variance-stabilized with the Anscombe transform, and the
//! restored image is sought as `x = Φα` for a sparse, positivity-constrained
//! coefficient vector `α` over a wavelet dictionary. The resulting convex
//! problem
//!
//! ```text
//! min_α  Σ ½(z_i − 2√((HΦα)_i + b))²  +  ι_C(Φα)  +  λ Σ ψ(α_i)
//! ```
//!
//! is solved with forward-backward splitting (the proximity operator of the
//! non-smooth part being computed by a Douglas-Rachford sub-iteration) or with
//! Tseng's forward-backward-forward variant with an Armijo step search. The
//! regularization parameter can be chosen by generalized cross validation.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and run manifests live in the `vstdecon` crate.
//!
//! ```
//! use vstdecon_core::prelude::*;
//!
//! let truth = phantom(PhantomKind::Flat(5.0), 16, 16).unwrap();
//! let psf = Psf::new(PsfKind::MovingAverage(3), true).unwrap();
//! let conv = ConvOperator::new(psf, 16, 16).unwrap();
//! let blurred = conv.apply(&truth).unwrap();
//! let counts = poissonize(&blurred, 7).unwrap();
//!
//! let dict = Dictionary::dwt(16, 16, 2, FilterFamily::Haar).unwrap();
//! let model = FidelityModel::new(&counts, &conv, &dict, ANSCOMBE_OFFSET).unwrap();
//! let cfg = SolverConfig { lambda: 0.05, n_fb: 20, ..SolverConfig::default() };
//! let report = solve(&model, &L1, &cfg, &model.zero_coefs()).unwrap();
//! assert_eq!(report.restored.width(), 16);
//! ```

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dictionary;
mod error;
mod fft;
pub mod fidelity;
pub mod image;
pub mod noise;
pub mod operators;
pub mod phantom;
pub mod prox;
pub mod select;
pub mod solver;

pub use error::{Error, Result};

/// Commonly used items.
pub mod prelude {
    pub use crate::dictionary::{CoefVector, Dictionary, FilterFamily};
    pub use crate::fidelity::{anscombe, FidelityModel, ANSCOMBE_OFFSET, BIAS_CORRECTED_OFFSET};
    pub use crate::image::{metrics, rescale_peak, Image, MetricReport};
    pub use crate::noise::poissonize;
    pub use crate::operators::{ConvOperator, Psf, PsfKind};
    pub use crate::phantom::{phantom, LinesGaussiansParams, PhantomKind};
    pub use crate::prox::{prox_f2, prox_penalty, project_positive_coefs, CustomPenalty, DrConfig, DrInit, Penalty, L1};
    pub use crate::select::{degrees_of_freedom, default_grid, gcv, log_grid, sweep_lambda, GcvPoint, Sweep};
    pub use crate::solver::{
        objective, solve, solve_fb, solve_tseng, Algorithm, Objective, SolverConfig, SolverReport, StepSize, TsengParams,
    };
    pub use crate::{Error, Result};
}
