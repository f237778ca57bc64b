//! IO companion of the robust-gate toolkit: run configuration, pulse and
//! CSV file formats, and the subcommand runners behind the `pulsekit`
//! binary. All numerics live in `pulsekit-core`; this crate converts
//! user-facing units (MHz, ns, µs), manages artifacts and parallelizes
//! scans and campaigns.

pub mod config;
pub mod pulsefile;
pub mod runner;
