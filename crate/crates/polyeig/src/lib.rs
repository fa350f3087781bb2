pub mod dense;
pub mod eigenvectors;
pub mod error;
pub mod format;
pub mod generate;
pub mod metrics;
pub mod pencil;
pub mod reduction;
pub mod polynomial;
pub mod qz;
pub mod rotation;
pub mod solver;
pub mod spike;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use pencil::{FactoredPencil, Flavor, Recorder};
pub use polynomial::{MatrixPolynomial, PencilSplit, ScaleMode, ScaleReport};
pub use rotation::{CoreTransformation, C64};
pub use solver::{solve, BackwardError, Side, Solution, SolverOptions};
pub use spike::SpikeFactor;
