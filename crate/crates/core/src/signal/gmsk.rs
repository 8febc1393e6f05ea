//! GMSK modulation (BT = 0.3, modulation index 0.5) at one sample per symbol.
//!
//! Sample `k` is the signal at the end of symbol `k`. With GSM differential
//! encoding, derotating sample `k` by `exp(-j·π/2·(k+1))` leaves a value close
//! to the real symbol `1 - 2·b[k]` times a common phase.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

pub const GMSK_BT: f64 = 0.3;

/// Pulse memory on each side of the current symbol.
const SPAN: usize = 2;
const PATTERNS: usize = 1 << (2 * SPAN + 1);

fn erf(x: f64) -> f64 {
    // Abramowitz & Stegun 7.1.26
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let y = 1.0
        - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t
            + 0.254_829_592)
            * t
            * (-x * x).exp();
    sign * y
}

fn gauss_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Fraction of one symbol's phase change accrued during symbol interval
/// `m` relative to the symbol, for m in -SPAN..=SPAN. Sums to one.
pub fn phase_increment_weights() -> [f64; 2 * SPAN + 1] {
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * GMSK_BT);
    let mut w = [0.0; 2 * SPAN + 1];
    const STEPS: usize = 256;
    for (i, wi) in w.iter_mut().enumerate() {
        let m = i as f64 - SPAN as f64;
        // Simpson over the rectangular symbol support tau in [0, 1]
        let f = |tau: f64| gauss_cdf((m + 1.0 - tau) / sigma) - gauss_cdf((m - tau) / sigma);
        let h = 1.0 / STEPS as f64;
        let mut acc = f(0.0) + f(1.0);
        for s in 1..STEPS {
            let c = if s % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * f(s as f64 * h);
        }
        *wi = acc * h / 3.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Per-sample phasor increments indexed by the 5-symbol neighbourhood
/// (bit j set means symbol k - SPAN + j is -1).
fn increment_table() -> &'static [Complex64; PATTERNS] {
    static TABLE: OnceLock<[Complex64; PATTERNS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let w = phase_increment_weights();
        std::array::from_fn(|pattern| {
            // symbol k + d (d = j - SPAN) is in its relative interval -d
            let mut dphi = 0.0;
            for j in 0..(2 * SPAN + 1) {
                let a = if pattern >> j & 1 == 1 { -1.0 } else { 1.0 };
                dphi += a * w[2 * SPAN - j];
            }
            Complex64::from_polar(1.0, FRAC_PI_2 * dphi)
        })
    })
}

/// Differentially encoded NRZ symbols (+1 for d = 0), with b[-1] = 0.
pub fn diff_encode(bits: &[u8]) -> Vec<f64> {
    let mut prev = 0u8;
    bits.iter()
        .map(|&b| {
            let d = (b ^ prev) & 1;
            prev = b & 1;
            if d == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Modulates `bits`, writing `bits.len() + extra` samples into `out`. Symbols
/// outside the sequence are taken as +1 (continued zero tail). The first
/// sample has phase `phase0`.
pub fn gmsk_modulate_into(bits: &[u8], extra: usize, phase0: f64, out: &mut Vec<Complex64>) {
    let table = increment_table();
    let sym = diff_encode(bits);
    let n = bits.len() + extra;
    let is_neg = |i: isize| -> usize {
        if i < 0 || i as usize >= sym.len() {
            0
        } else {
            usize::from(sym[i as usize] < 0.0)
        }
    };
    let mut pattern = 0usize;
    for j in 0..(2 * SPAN + 1) {
        pattern |= is_neg(j as isize - SPAN as isize) << j;
    }
    let mut x = Complex64::from_polar(1.0, phase0);
    out.reserve(n);
    for k in 0..n {
        if k > 0 {
            pattern = (pattern >> 1) | (is_neg(k as isize + SPAN as isize) << (2 * SPAN));
            x *= table[pattern];
        }
        out.push(x);
    }
}

/// Constant-envelope GMSK samples, one per input bit.
pub fn gmsk_modulate(bits: &[u8]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(bits.len());
    gmsk_modulate_into(bits, 0, 0.0, &mut out);
    out
}

/// Removes the π/2-per-sample rotation; `first_index` is the absolute index
/// of `samples[0]`.
pub fn derotate(samples: &[Complex64], first_index: usize) -> Vec<Complex64> {
    const ROT: [Complex64; 4] = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    samples
        .iter()
        .enumerate()
        .map(|(i, &s)| s * ROT[(first_index + i + 1) % 4])
        .collect()
}
