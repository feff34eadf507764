//! Iterative learning control on lifted LTI motion systems.
//!
//! * [`lti_core`]: transfer functions, realizations, lifted `S` and `J`.
//! * [`trajectory`]: jerk-limited references and the derivative basis `Psi(r)`.
//! * [`numerics`]: quadratic costs, spectral norm, seeded Gaussian sampling.
//! * [`noilc`]: model-based norm-optimal ILC gains and update.
//! * [`acilc`]: model-free actor-critic ILC.
//! * [`harness`]: configuration, experiment runs, CSV logs and comparisons.
//!
//! ```no_run
//! use ilc_core::harness::{preset, run_experiment};
//!
//! let loaded = preset("paper_sec5").unwrap();
//! let result = run_experiment(&loaded).unwrap();
//! result.write(std::path::Path::new("out/paper_sec5")).unwrap();
//! ```

pub mod acilc;
pub mod harness;
pub mod lti_core;
pub mod noilc;
pub mod numerics;
pub mod trajectory;
