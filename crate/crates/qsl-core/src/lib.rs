//! Geometric quantum speed limit (QSL) numerics.
//!
//! The crate embeds density matrices onto a unit sphere of Hermitian
//! matrices, measures state distance as the arc angle between embeddings,
//! and evaluates the family of QSL times this geometry induces: the general
//! integrator plus the closed-form bounds obtained for particular choices
//! of the alternative function, together with the dynamics generators that
//! attain them and a randomized comparison harness.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metric;

pub use error::{Error, Result};
