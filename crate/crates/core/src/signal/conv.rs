//! Rate-1/2, constraint-length-5 convolutional encoder.

use crate::params::{
    CONV_CONSTRAINT_LEN, CONV_G0, CONV_G1, CONV_TAIL_BITS, ECSCH_BLOCK_BITS, ECSCH_CODED_BITS,
};

pub const CONV_STATES: usize = 1 << (CONV_CONSTRAINT_LEN - 1);

/// Output pair for input `bit` entering a register holding the previous
/// `CONV_CONSTRAINT_LEN - 1` inputs (`state`, most recent in bit 0).
#[inline]
pub fn conv_output(state: usize, bit: u8) -> (u8, u8) {
    // window bit i holds u_{k-i}
    let window = ((state << 1) | usize::from(bit & 1)) as u8;
    let c0 = (window & CONV_G0).count_ones() as u8 & 1;
    let c1 = (window & CONV_G1).count_ones() as u8 & 1;
    (c0, c1)
}

#[inline]
pub fn conv_next_state(state: usize, bit: u8) -> usize {
    ((state << 1) | usize::from(bit & 1)) & (CONV_STATES - 1)
}

/// Encodes `bits` from the zero state without appending tail bits.
pub fn conv_encode_bits(bits: &[u8]) -> Vec<u8> {
    let mut state = 0;
    let mut out = Vec::with_capacity(2 * bits.len());
    for &b in bits {
        let (c0, c1) = conv_output(state, b);
        out.push(c0);
        out.push(c1);
        state = conv_next_state(state, b);
    }
    out
}

/// Encodes the CRC-protected block plus four zero tail bits.
pub fn conv_encode(block: &[u8; ECSCH_BLOCK_BITS]) -> [u8; ECSCH_CODED_BITS] {
    let mut input = block.to_vec();
    input.extend([0u8; CONV_TAIL_BITS]);
    let coded = conv_encode_bits(&input);
    let mut out = [0u8; ECSCH_CODED_BITS];
    out.copy_from_slice(&coded);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct shift-register simulation with explicit taps.
    fn shift_register_encode(bits: &[u8]) -> Vec<u8> {
        let g0 = [1u8, 0, 0, 1, 1];
        let g1 = [1u8, 1, 0, 1, 1];
        let mut reg = [0u8; 5];
        let mut out = Vec::new();
        for &b in bits {
            reg.rotate_right(1);
            reg[0] = b;
            let c0 = reg.iter().zip(g0).map(|(r, g)| r & g).fold(0, |a, x| a ^ x);
            let c1 = reg.iter().zip(g1).map(|(r, g)| r & g).fold(0, |a, x| a ^ x);
            out.push(c0);
            out.push(c1);
        }
        out
    }

    #[test]
    fn zero_block_is_zero_codeword() {
        assert!(conv_encode(&[0; ECSCH_BLOCK_BITS]).iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_gives_interleaved_generators() {
        let mut block = [0u8; ECSCH_BLOCK_BITS];
        block[0] = 1;
        let coded = conv_encode(&block);
        // G0 = 1+D^3+D^4 -> 1,0,0,1,1 ; G1 = 1+D+D^3+D^4 -> 1,1,0,1,1
        assert_eq!(&coded[..10], &[1, 1, 0, 1, 0, 0, 1, 1, 1, 1]);
        assert!(coded[10..].iter().all(|&b| b == 0));
        assert_eq!(
            coded.to_vec(),
            shift_register_encode(&{
                let mut v = block.to_vec();
                v.extend([0; 4]);
                v
            })
        );
    }

    #[test]
    fn terminates_in_zero_state() {
        let block: [u8; ECSCH_BLOCK_BITS] = std::array::from_fn(|i| ((i * 7 + 3) % 5 == 0) as u8);
        let mut state = 0;
        let mut input = block.to_vec();
        input.extend([0; 4]);
        for b in input {
            state = conv_next_state(state, b);
        }
        assert_eq!(state, 0);
    }
}
