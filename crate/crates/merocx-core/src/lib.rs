//! Exact-arithmetic engine for a finite model of the cosimplicial double complex
//! of restricted meromorphic tables with non-commutative parameters.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line live
//! in the companion `merocx` crate.
#![no_std]

extern crate alloc;

pub mod algebra;
pub mod cech;
pub mod cell;
pub mod cochain;
pub mod complex;
pub mod coord;
pub mod invariants;
pub mod laurent;
pub mod linalg;
pub mod pattern;
pub mod scalar;
pub mod star;

pub use algebra::{AlgebraElem, Model, ModelParams, Mono, NuForm};
pub use cochain::{Cochain, GCochain, PoleCochain};
pub use laurent::LaurentElem;
pub use pattern::{PoleForm, TreePat};
pub use scalar::Q;

/// Errors raised by core operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    UnknownVariable(u32),
    InvalidArgument(alloc::string::String),
    Unsupported(alloc::string::String),
    CrossCheck(alloc::string::String),
    NoSolution(alloc::string::String),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::UnknownVariable(v) => write!(f, "unknown variable z{v}"),
            Error::InvalidArgument(s) => write!(f, "invalid argument: {s}"),
            Error::Unsupported(s) => write!(f, "unsupported: {s}"),
            Error::CrossCheck(s) => write!(f, "cross-check failed: {s}"),
            Error::NoSolution(s) => write!(f, "no solution: {s}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<alloc::string::String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
