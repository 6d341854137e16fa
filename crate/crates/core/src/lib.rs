//! Delone sets, substitution tilings and their metrics, repetitivity and
//! ergodic diagnostics.

pub mod decorate;
pub mod ergodic;
pub mod error;
pub mod geom;
pub mod index;
pub mod io;
pub mod metrics;
pub mod pointset;
pub mod render;
pub mod repet;
pub mod subst;

pub use error::{Error, Result};
