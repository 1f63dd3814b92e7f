//! Single-shot resource monotones and exact resource-morphism synthesis for
//! quantum resource theories with a closed convex free set.

pub mod error;
pub mod opalg;
pub(crate) mod conic;
pub mod freesets;
pub mod divergences;
pub mod monotones;
pub mod transitions;
pub mod applications;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
