//! Quantitative recurrence on Bedford-McMullen carpets.
//!
//! The toolkit covers both sides of the dimension theory of the
//! recurrent set `W(K, T, psi)` of the canonical expanding map on a
//! carpet, for carpets whose Hausdorff and box dimensions agree:
//!
//! - [`carpet`]: alphabets, column profiles, classical dimensions;
//! - [`symbolic`]: exact digit arithmetic, cylinders, approximate
//!   squares, rigorous distance enclosures;
//! - [`rate`]: rate functions `psi`, the digit counts `l_i(n)` and their
//!   exactly-resolved ceilings, decay exponents `tau_i`;
//! - [`dimtheory`]: entropy functionals, the recurrent-set dimension
//!   formula, and its tight lower-bound objective over the simplex;
//! - [`recur`]: recurrence predicates, per-cylinder return regions,
//!   exact covering counts against the closed-form bounds;
//! - [`sampler`]: the digit-repetition measure that samples recurrent
//!   points;
//! - [`boxcount`]: box-counting dimension estimation of point clouds.
//!
//! Geometry is exact rational throughout; floating point only enters
//! through logarithms in dimension formulas and regression.

#![forbid(unsafe_code)]

mod exact;

pub mod boxcount;
pub mod carpet;
pub mod dimtheory;
pub mod rate;
pub mod recur;
pub mod sampler;
pub mod symbolic;

pub use carpet::{Carpet, CarpetError};
pub use rate::{RateFunction, RateSpec, Tau};
pub use symbolic::{Coord, CylinderWord, Rect, SymbolicPoint};
