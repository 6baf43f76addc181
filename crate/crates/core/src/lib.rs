//! Self-similar point-mass weights, the Jacobi matrices they generate, and
//! the eigenvalue asymptotics of the associated Sturm–Liouville problem.
//!
//! ```
//! use selfsim::selfsim::SelfSimilarParams;
//! use selfsim::spectral::{compute_spectrum, Formulation};
//!
//! let p = SelfSimilarParams::new(0.5, 0.5, 0.0, 1.0).unwrap();
//! let s = compute_spectrum(&p, 2, Formulation::Fem, 2).unwrap();
//! assert!((s.eigenvalues[0] - (11.0 - 57f64.sqrt())).abs() < 1e-12);
//! ```

pub mod cli;
pub mod eigensolve;
pub mod error;
pub mod matrix;
pub mod operators;
pub mod selfsim;
pub mod spectral;

pub use error::{Error, Result};
pub use selfsim::SelfSimilarParams;
pub use spectral::{compute_spectrum, Formulation, SpectrumResult};
