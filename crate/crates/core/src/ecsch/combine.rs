//! Chase combining of EC-SCH LLRs under the four cyclic-shift hypotheses.

use crate::params::{ECSCH_CODED_BITS, ECSCH_MFS_PER_PERIOD};
use crate::signal::burst::cyclic_shift_invert;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrBuffer {
    pub llrs: [f64; ECSCH_CODED_BITS],
    pub reps: usize,
    pub shift_hypothesis: usize,
}

impl LlrBuffer {
    pub fn new(shift_hypothesis: usize) -> Self {
        Self {
            llrs: [0.0; ECSCH_CODED_BITS],
            reps: 0,
            shift_hypothesis,
        }
    }

    pub fn reset(&mut self) {
        self.llrs = [0.0; ECSCH_CODED_BITS];
        self.reps = 0;
    }
}

pub fn new_buffers() -> [LlrBuffer; ECSCH_MFS_PER_PERIOD] {
    std::array::from_fn(LlrBuffer::new)
}

/// Shift index of a burst received `mf_offset` multiframes after the first
/// collected one, under hypothesis `h`.
pub fn hypothesis_shift(h: usize, mf_offset: usize) -> usize {
    (h + mf_offset) % ECSCH_MFS_PER_PERIOD
}

/// Adds burst-order LLRs into every buffer after undoing the shift that
/// buffer's hypothesis predicts for this multiframe.
pub fn chase_combine(
    buffers: &mut [LlrBuffer; ECSCH_MFS_PER_PERIOD],
    new_llrs: &[f64; ECSCH_CODED_BITS],
    mf_offset: usize,
) {
    for buf in buffers.iter_mut() {
        let aligned =
            cyclic_shift_invert(new_llrs, hypothesis_shift(buf.shift_hypothesis, mf_offset));
        for (a, x) in buf.llrs.iter_mut().zip(&aligned) {
            *a += x;
        }
        buf.reps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::burst::{cyclic_shift_apply, EcschPayload};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_rep_buffers_are_rotations() {
        let l: [f64; ECSCH_CODED_BITS] = std::array::from_fn(|i| i as f64);
        let mut b = new_buffers();
        chase_combine(&mut b, &l, 0);
        for h in 1..4 {
            let mut rotated = b[0].llrs;
            rotated.rotate_right(20 * h);
            // buffer h undid a rotation of 20h; relative to buffer 0 it is rotated back
            let mut back = b[h].llrs;
            back.rotate_left(20 * h);
            assert_eq!(back, b[0].llrs);
        }
        assert!(b.iter().all(|x| x.reps == 1));
    }

    /// Mean/std of sign-corrected combined LLRs for the right and a wrong
    /// hypothesis: the right one grows like `reps`, the wrong one like √reps.
    #[test]
    fn combining_gain_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = EcschPayload::new(4242, 12);
        let coded = p.coded_bits();
        let sign: Vec<f64> = coded
            .iter()
            .map(|&c| if c == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut b = new_buffers();
        let mut snapshots = Vec::new();
        for rep in 0..28 {
            let mf = rep / 7;
            let tx = cyclic_shift_apply(&coded, mf % 4);
            let l: [f64; ECSCH_CODED_BITS] = std::array::from_fn(|i| {
                let s = if tx[i] == 0 { 1.0 } else { -1.0 };
                0.5 * s + rng.sample::<f64, _>(StandardNormal)
            });
            chase_combine(&mut b, &l, mf);
            if rep == 6 || rep == 27 {
                let proj = |buf: &LlrBuffer| {
                    buf.llrs.iter().zip(&sign).map(|(x, s)| x * s).sum::<f64>() / 78.0
                };
                snapshots.push((proj(&b[0]), proj(&b[2])));
            }
        }
        let (r7, w7) = snapshots[0];
        let (r28, w28) = snapshots[1];
        assert!((r28 / r7 - 4.0).abs() < 1.0, "{r7} {r28}");
        assert!(w28.abs() < r28 / 3.0 && w7.abs() < r7, "{w7} {w28}");
    }
}
