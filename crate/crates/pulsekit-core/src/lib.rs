//! Robust single-qubit gate toolkit for a three-level transmon model.
//!
//! The crate covers the full simulation pipeline: a driven three-level
//! Hamiltonian with detuning and amplitude error channels ([`model`]),
//! Fourier and DRAG pulse parametrizations ([`pulses`]), exact
//! piecewise-constant propagation with an optional dissipative channel
//! ([`propagation`]), ensemble-robust gradient pulse optimization
//! ([`grape`]), simulated randomized benchmarking and robustness landscapes
//! ([`benchmarking`]), calibration-sequence simulation ([`calibration`])
//! and drift-sensitivity regression ([`drift`]).
//!
//! The crate is `no_std` (with `alloc`); everything is pure computation
//! over immutable inputs, so all APIs are safe to call concurrently.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
// Index-style loops mirror the matrix arithmetic they implement, and the
// negated comparisons in validation reject NaN along with the sign.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod benchmarking;
pub mod calibration;
pub mod drift;
mod fit;
pub mod grape;
pub mod linalg;
pub mod model;
mod optim;
pub mod propagation;
pub mod pulses;
pub mod units;

pub use linalg::C64;
