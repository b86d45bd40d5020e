// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anosov;
pub mod error;
pub mod flow;
pub mod group;
pub mod hyperbolic;
pub mod liouville;
pub mod model;
pub mod phase;
pub mod potential;
pub mod profile;
pub mod riccati;
pub mod birkhoff;
pub mod closed;
pub mod correlation;
pub mod inversion;
pub mod io;
pub mod resonances;
pub mod stats;
