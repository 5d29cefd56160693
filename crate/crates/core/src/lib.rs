//! Memristive crossbar simulation core.
//!
//! Behavioral memristor models, crossbar arrays and their readout, weight to
//! conductance mapping with linear-regression tuning, injectable device
//! non-idealities, and a minimal dense/conv network runtime that can be
//! patched onto crossbars.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the CLI live in the `memxbar` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod crossbar;
pub mod device;
mod error;
pub mod linalg;
pub mod mapping;
mod math;
pub mod network;
pub mod nonideality;

pub use error::{Error, Result};
pub use linalg::Matrix;
