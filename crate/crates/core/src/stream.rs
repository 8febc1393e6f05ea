//! Sample streams and the receiver-facing source abstraction.
//!
//! Receiver code only ever sees [`SampleSource`], which hands out samples and
//! nothing else. Ground truth lives in [`StreamMeta`] and is reserved for
//! scoring.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::multiframe::PayloadSchedule;

/// Ground truth attached to a generated stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamMeta {
    /// First multiframe boundary at or after receiver sample 0.
    pub mf_start: usize,
    pub freq_offset_hz: f64,
    /// Transmitted sample index seen as receiver sample 0.
    pub time_offset_samples: usize,
    pub schedule: PayloadSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub samples: Vec<Complex64>,
    pub meta: StreamMeta,
}

/// Random-access provider of received samples.
pub trait SampleSource {
    /// Total number of samples available.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copies samples `[start, start + out.len())` into `out`.
    ///
    /// Panics if the range exceeds [`SampleSource::len`].
    fn read(&mut self, start: usize, out: &mut [Complex64]);
}

impl SampleSource for [Complex64] {
    fn len(&self) -> usize {
        <[Complex64]>::len(self)
    }

    fn read(&mut self, start: usize, out: &mut [Complex64]) {
        out.copy_from_slice(&self[start..start + out.len()]);
    }
}

impl SampleSource for Vec<Complex64> {
    fn len(&self) -> usize {
        <[Complex64]>::len(self)
    }

    fn read(&mut self, start: usize, out: &mut [Complex64]) {
        out.copy_from_slice(&self[start..start + out.len()]);
    }
}

/// Writes samples as interleaved little-endian float32 I/Q.
pub fn write_iq_f32(path: &Path, samples: &[Complex64]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for s in samples {
        w.write_all(&(s.re as f32).to_le_bytes())
            .and_then(|_| w.write_all(&(s.im as f32).to_le_bytes()))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_iq_f32(path: &Path) -> Result<Vec<Complex64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(f64::from(re), f64::from(im))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iq_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let x = vec![Complex64::new(0.5, -0.25), Complex64::new(-1.0, 2.0)];
        write_iq_f32(&path, &x).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16);
        assert_eq!(read_iq_f32(&path).unwrap(), x);
    }

    #[test]
    fn slice_source_reads() {
        let mut v: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut out = [Complex64::new(0.0, 0.0); 3];
        v.read(4, &mut out);
        assert_eq!(out[0].re, 4.0);
        assert_eq!(out[2].re, 6.0);
    }
}
