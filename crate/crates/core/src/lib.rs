//! Effective capacity (EC) of delay-constrained uplink NOMA and OMA networks.
//!
//! The crate evaluates per-user and total ECs of an uplink power-domain NOMA
//! system over ordered Rayleigh block fading, together with the TDMA (OMA)
//! baseline, through three independent routes:
//!
//! * closed forms built on the confluent hypergeometric function `U` and the
//!   upper incomplete Gamma function ([`special_fn`]),
//! * adaptive quadrature of single-integral representations,
//! * seeded, thread-count independent Monte Carlo ([`monte_carlo`]).
//!
//! On top of these sit the asymptotic checks ([`asymptotics`]) and the
//! exhaustive user pairing / grouping search ([`pairing_search`]).
//!
//! All quantities are linear scale. The normalized QoS exponent `beta` is
//! negative; `beta -> 0-` models a delay-tolerant user.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod channel_model;
pub mod effective_capacity;
mod error;
pub mod monte_carlo;
pub mod pairing_search;
pub(crate) mod quad;
pub mod special_fn;

#[cfg(test)]
pub(crate) mod oracle;

pub use channel_model::{OrderedGains, RngSpec};
pub use effective_capacity::{EcEstimate, EcMethod, NetworkConfig};
pub use error::{Error, Result};
pub use pairing_search::Partition;

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear SNR to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
