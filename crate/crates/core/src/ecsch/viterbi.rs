//! Soft-decision Viterbi decoder for the terminated K = 5 code.

use crate::params::{CONV_TAIL_BITS, ECSCH_BLOCK_BITS, ECSCH_CODED_BITS};
use crate::signal::conv::{conv_next_state, conv_output, CONV_STATES};

/// Decodes 78 LLRs (`log P(0)/P(1)`) to the 35-bit block. The returned
/// metric is the correlation of the best path with the LLRs; larger is
/// more reliable.
pub fn viterbi_decode(llrs: &[f64; ECSCH_CODED_BITS]) -> ([u8; ECSCH_BLOCK_BITS], f64) {
    const STEPS: usize = ECSCH_BLOCK_BITS + CONV_TAIL_BITS;
    let mut metric = [f64::NEG_INFINITY; CONV_STATES];
    metric[0] = 0.0;
    let mut prev = [[0u8; CONV_STATES]; STEPS];
    for step in 0..STEPS {
        let (l0, l1) = (llrs[2 * step], llrs[2 * step + 1]);
        let mut next = [f64::NEG_INFINITY; CONV_STATES];
        let mut from = [0u8; CONV_STATES];
        let inputs: &[u8] = if step < ECSCH_BLOCK_BITS {
            &[0, 1]
        } else {
            &[0]
        };
        for s in 0..CONV_STATES {
            if metric[s] == f64::NEG_INFINITY {
                continue;
            }
            for &b in inputs {
                let (c0, c1) = conv_output(s, b);
                let m = metric[s] + 0.5 * (sign(c0) * l0 + sign(c1) * l1);
                let ns = conv_next_state(s, b);
                if m > next[ns] {
                    next[ns] = m;
                    from[ns] = s as u8;
                }
            }
        }
        metric = next;
        prev[step] = from;
    }
    let mut block = [0u8; ECSCH_BLOCK_BITS];
    let mut s = 0usize;
    for step in (0..STEPS).rev() {
        if step < ECSCH_BLOCK_BITS {
            block[step] = (s & 1) as u8;
        }
        s = usize::from(prev[step][s]);
    }
    (block, metric[0])
}

#[inline]
fn sign(c: u8) -> f64 {
    if c == 0 {
        1.0
    } else {
        -1.0
    }
}
