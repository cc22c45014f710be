//! Band structures of periodic quantum graphs on hexagonal lattices.
//!
//! The crate covers monolayers, AA and AA′ bilayers, hetero bilayers and
//! trilayer sandwiches with Robin vertex conditions, the Hill-discriminant
//! map from graph roots to operator spectra, and the discrete magnetic
//! Laplacian with rational flux.

pub mod bands;
pub mod cli;
pub mod floquet;
pub mod hill;
pub mod io;
pub mod lattice;
pub mod magnetic;
pub mod poly;

pub use bands::{DispersionSurface, GridSpec, Tolerances, TouchKind, TouchReport};
pub use floquet::{DispersionRoots, FloquetMatrix, RootSource};
pub use hill::{HillDiscriminant, PotentialSpec};
pub use lattice::{Quasimomentum, StackConfig, Variant};
pub use magnetic::FluxSpec;
