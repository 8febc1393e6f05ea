//! CRC-10 protection of the EC-SCH information block.

use crate::params::{CRC10_POLY, CRC_BITS, ECSCH_BLOCK_BITS, ECSCH_INFO_BITS};

fn crc10_register(bits: &[u8]) -> u16 {
    let mut reg: u16 = 0;
    for &b in bits {
        let feedback = ((reg >> (CRC_BITS - 1)) & 1) ^ u16::from(b & 1);
        reg = (reg << 1) & 0x3ff;
        if feedback != 0 {
            reg ^= CRC10_POLY;
        }
    }
    reg
}

/// Parity bits of `bits`, most significant first.
pub fn crc10_parity(bits: &[u8]) -> [u8; CRC_BITS] {
    let reg = crc10_register(bits);
    std::array::from_fn(|i| ((reg >> (CRC_BITS - 1 - i)) & 1) as u8)
}

/// Appends the 10 parity bits to the information bits.
pub fn crc10_attach(info: &[u8; ECSCH_INFO_BITS]) -> [u8; ECSCH_BLOCK_BITS] {
    let parity = crc10_parity(info);
    let mut out = [0u8; ECSCH_BLOCK_BITS];
    out[..ECSCH_INFO_BITS].copy_from_slice(info);
    out[ECSCH_INFO_BITS..].copy_from_slice(&parity);
    out
}

pub fn crc10_check(block: &[u8; ECSCH_BLOCK_BITS]) -> bool {
    crc10_parity(&block[..ECSCH_INFO_BITS])[..] == block[ECSCH_INFO_BITS..]
}
