//! Radial Fourier analysis on the Heisenberg group `H^d`: the spectral
//! transform, Schrödinger and wave propagators, restriction and Strichartz
//! scans, twisted-convolution estimates and the verification suites.

pub mod config;
pub mod container;
pub mod family;
pub mod fields;
pub mod grid;
pub mod htransform;
pub mod propagators;
pub mod quad;
pub mod report;
pub mod restriction;
pub mod specfun;
pub mod suites;
pub mod twisted;
pub mod window;

pub use config::{RunConfig, Tolerances};
pub use container::Stored;
pub use family::{GaussianPacket, PacketFamily, SpaceTimePacket};
pub use fields::{FieldError, NormOrder, RadialField, SpaceTimeField};
pub use grid::{Grid, TimeGrid};
pub use htransform::{SpectralField, TransformError};
pub use propagators::PropagatorError;
pub use report::{Check, SuiteReport, VerificationReport};
pub use restriction::{RestrictionError, SurfaceValues};
