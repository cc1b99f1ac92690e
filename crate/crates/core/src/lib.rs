// NaN-rejecting range checks read as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod constants;
pub mod decoupled;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod par;
pub mod radial;
pub mod reference;
pub mod stats;
pub mod sweep;
pub mod verification;
