//! Finite mixtures of contaminated multivariate skew-normal distributions
//! for incomplete data.
//!
//! The crate fits `G`-component mixtures with an ECM algorithm that works on
//! each row's observed coordinates, then uses the fitted model to cluster
//! rows, flag per-cluster outliers and impute missing cells.
//!
//! ```no_run
//! use fmcmsn::{fit, DataMatrix, FitConfig};
//!
//! let data = DataMatrix::from_rows(&[vec![Some(1.0), None], vec![Some(2.0), Some(0.5)]]).unwrap();
//! let result = fit(&data, &FitConfig::new(2).with_seed(7)).unwrap();
//! println!("labels: {:?}", result.labels);
//! println!("outliers: {}", result.outlier_flags.iter().filter(|&&f| f).count());
//! ```

pub mod cli;
pub mod data;
pub mod distributions;
pub mod em;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod model;
pub mod partition;
pub mod sim;
pub mod special;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use fit::{classify, detect_outliers, fit, impute, FitConfig, FitResult};
pub use model::{ComponentParams, Constraints, MixtureModel};
