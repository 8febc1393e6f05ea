//! Baseband simulator of EC-GSM-IoT network synchronization.
//!
//! The transmitter builds the BCCH-carrier multiframe ([`signal`]), the
//! [`channel`] adds offsets, fading and noise, and the receiver chain
//! ([`mfd`], [`timing`], [`ecsch`], [`freq`]) is driven by [`sync::run_sync`].
//! [`harness`] runs Monte-Carlo campaigns on top.

pub mod channel;
pub mod ecsch;
pub mod error;
pub mod freq;
pub mod harness;
pub mod mfd;
pub mod params;
pub mod rng;
pub mod signal;
pub mod stream;
pub mod sync;
pub mod timing;

pub use error::{Error, Result};
