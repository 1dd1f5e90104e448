//! Growth functions, Poincaré series and boundary audits for groups acting
//! on hyperbolic spaces with an invariant system of horoballs.
//!
//! Two backends implement [`space::Space`]: the upper half-plane with an
//! integer-matrix group ([`models::half_plane`]) and a cusped Cayley graph
//! over a free product of cyclic groups ([`models::cusped`]).

pub mod audit;
pub mod boundary;
pub mod enumeration;
pub mod error;
pub mod models;
pub mod report;
pub mod series;
pub mod space;
#[cfg(test)]
mod testing;

pub use error::{Error, Result};
pub use models::{AnyModel, GroupSpec};
pub use space::Space;
