//! Observables, channels and Naimark dilations on finite-dimensional
//! Hilbert spaces, with post-processing and channel realization searches.

pub mod analysis;
pub mod channels;
pub mod cli;
pub mod dilation;
pub mod error;
pub mod matrix;
pub mod observables;
pub mod oracle;
pub mod random;
pub mod realization;

pub use channels::{compose, conjugate_channel, is_identity_equivalent, support_projection, Channel};
pub use dilation::{least_disturbing, minimal_naimark, minimal_output_dimension, NaimarkDilation};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, HermitianMatrix};
pub use observables::{DensityMatrix, Instrument, Povm, Relabeling};
