//! Semi-supervised regression GANs on a polynomial coefficient benchmark.
//!
//! The crate is layered bottom-up: [`autodiff`] provides the tape, [`models`]
//! the networks, [`losses`] the objectives, [`training`] the step loops and
//! [`harness`] the multi-seed sweeps and report files.

pub mod autodiff;
pub mod dataset;
pub mod losses;
pub mod metrics;
pub mod models;
pub mod training;
pub mod harness;
