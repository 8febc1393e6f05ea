//! Transmitter side: coding, modulation, bursts and the multiframe.

pub mod burst;
pub mod conv;
pub mod crc;
pub mod gmsk;
pub mod multiframe;
