//! Neural-network surrogates for thermo-viscoplastic flow laws.
//!
//! The crate trains a small feed-forward network to reproduce a Johnson-Cook
//! flow law sigma(eps_p, rate, T), evaluates the network's analytic
//! derivatives with respect to its physical inputs, integrates either law
//! through a J2 radial-return material-point update with adiabatic heating,
//! and exports a trained network as a flat, dependency-free Fortran
//! subroutine in the VUHARD calling convention.
//!
//! Pipeline in one sitting:
//!
//! ```
//! use flowlaw::johnson_cook::JohnsonCookParams;
//! use flowlaw::dataset::{training_grid, test_set, RateSampling};
//! use flowlaw::mlp::{Activation, MlpModel, NormalizationRanges};
//! use flowlaw::train::{train_adam, TrainConfig};
//! use flowlaw::metrics::evaluate;
//!
//! let jc = JohnsonCookParams::steel_42crmo4();
//! let grid = training_grid(&jc);
//! let ranges = NormalizationRanges::from_dataset(&grid, jc.eps_dot_ref).unwrap();
//! let model = MlpModel::glorot(&[3, 15, 7, 1], Activation::Sigmoid, ranges, 1).unwrap();
//! let cfg = TrainConfig { iterations: 50, ..TrainConfig::default() };
//! let (trained, _history) = train_adam(&model, &grid, &cfg).unwrap();
//! let test = test_set(&jc, 100, 7, RateSampling::LogUniform);
//! let report = evaluate(&trained, &test).unwrap();
//! assert!(report.aare_sigma.is_finite());
//! ```

pub mod bench;
pub mod dataset;
pub mod error;
pub mod export;
pub mod johnson_cook;
pub mod metrics;
pub mod mlp;
pub mod plasticity;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
