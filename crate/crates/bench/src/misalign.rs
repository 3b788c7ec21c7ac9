//! Streaming copies with the misalignment on the read side or the write side.
//!
//! On a CPU the cost of misalignment shows up when 8-byte accesses straddle
//! cache lines. Both buffers start on a 64-byte boundary; `offset` shifts
//! one side of the copy.

use std::fmt;
use std::str::FromStr;

use crate::error::{BenchError, Result};
use crate::timing::{measure, BenchReport, BenchResult, Repeat};

const LINE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyMode {
    /// Misaligned read, aligned write.
    Mraw,
    /// Aligned read, misaligned write.
    Armw,
}

impl fmt::Display for CopyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CopyMode::Mraw => "mraw",
            CopyMode::Armw => "armw",
        })
    }
}

impl FromStr for CopyMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mraw" => Ok(CopyMode::Mraw),
            "armw" => Ok(CopyMode::Armw),
            other => Err(BenchError::Params(format!("unknown copy mode '{other}' (mraw | armw)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisalignParams {
    /// Bytes copied per repetition; rounded down to whole 8-byte words.
    pub bytes: usize,
    pub offsets: Vec<usize>,
    pub repeat: Repeat,
}

impl Default for MisalignParams {
    fn default() -> Self {
        Self { bytes: 16 << 20, offsets: (0..64).collect(), repeat: Repeat::default() }
    }
}

/// A byte buffer with a 64-byte aligned window of `len + LINE` bytes.
struct Aligned {
    buf: Vec<u8>,
    base: usize,
    span: usize,
}

impl Aligned {
    fn new(len: usize) -> Self {
        let buf = vec![0u8; len + 2 * LINE];
        let base = buf.as_ptr().align_offset(LINE);
        Self { buf, base, span: len + LINE }
    }

    fn window(&self) -> &[u8] {
        &self.buf[self.base..self.base + self.span]
    }

    fn window_mut(&mut self) -> &mut [u8] {
        &mut self.buf[self.base..self.base + self.span]
    }
}

fn copy_words(src: &[u8], dst: &mut [u8]) {
    for (d, s) in dst.chunks_exact_mut(8).zip(src.chunks_exact(8)) {
        let w = u64::from_le_bytes(s.try_into().expect("8-byte chunk"));
        d.copy_from_slice(&w.to_le_bytes());
    }
}

struct CopyBench {
    src: Aligned,
    dst: Aligned,
    len: usize,
    offset: usize,
    mode: CopyMode,
}

impl CopyBench {
    fn new(bytes: usize, offset: usize, mode: CopyMode) -> Result<Self> {
        let len = bytes / 8 * 8;
        if len == 0 {
            return Err(BenchError::Params(format!("buffer of {bytes} B holds no 8-byte word")));
        }
        if offset >= len || offset >= LINE {
            return Err(BenchError::Params(format!(
                "offset {offset} must be below the buffer size {len} and the line size {LINE}"
            )));
        }
        let mut src = Aligned::new(len);
        for (i, b) in src.window_mut().iter_mut().enumerate() {
            *b = (i.wrapping_mul(131) ^ (i >> 8)) as u8;
        }
        Ok(Self { src, dst: Aligned::new(len), len, offset, mode })
    }

    fn run(&mut self) {
        let (len, off) = (self.len, self.offset);
        match self.mode {
            CopyMode::Mraw => {
                copy_words(&self.src.window()[off..off + len], &mut self.dst.window_mut()[..len])
            }
            CopyMode::Armw => {
                copy_words(&self.src.window()[..len], &mut self.dst.window_mut()[off..off + len])
            }
        }
    }

    fn verify(&self) -> Result<()> {
        let (len, off) = (self.len, self.offset);
        let (want, got) = match self.mode {
            CopyMode::Mraw => (&self.src.window()[off..off + len], &self.dst.window()[..len]),
            CopyMode::Armw => (&self.src.window()[..len], &self.dst.window()[off..off + len]),
        };
        if let Some(i) = want.iter().zip(got).position(|(a, b)| a != b) {
            return Err(BenchError::Check(format!(
                "{} copy at offset {off}: byte {i} is {} instead of {}",
                self.mode, got[i], want[i]
            )));
        }
        Ok(())
    }
}

/// One copy mode at one offset. Verifies the copy bytewise, then times it.
/// The bandwidth counts bytes read plus bytes written.
pub fn bench_misalignment(
    bytes: usize,
    offset: usize,
    mode: CopyMode,
    repeat: Repeat,
) -> Result<BenchResult> {
    let mut b = CopyBench::new(bytes, offset, mode)?;
    b.run();
    b.verify()?;
    let timing = measure(repeat, || {
        b.run();
        Ok(())
    })?;
    Ok(BenchResult {
        name: mode.to_string(),
        parameter: offset as f64,
        timing,
        metric: 2.0 * b.len as f64 / timing.median,
    })
}

/// Both modes over every requested offset.
pub fn misalignment_report(p: &MisalignParams) -> Result<BenchReport> {
    let mut results = Vec::new();
    for &offset in &p.offsets {
        for mode in [CopyMode::Mraw, CopyMode::Armw] {
            results.push(bench_misalignment(p.bytes, offset, mode, p.repeat)?);
        }
    }
    Ok(BenchReport {
        benchmark: "misalignment".into(),
        parameter: "offset [B]".into(),
        metric: "bandwidth [B/s]".into(),
        results,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_are_line_aligned() {
        let a = Aligned::new(1000);
        assert_eq!(a.window().as_ptr() as usize % LINE, 0);
        assert_eq!(a.window().len(), 1000 + LINE);
    }

    #[test]
    fn copies_are_shifted_exactly() {
        for mode in [CopyMode::Mraw, CopyMode::Armw] {
            for off in [0, 1, 7, 8, 13, 63] {
                let mut b = CopyBench::new(4096, off, mode).unwrap();
                b.run();
                b.verify().unwrap();
            }
        }
    }

    #[test]
    fn stale_destination_fails_verification() {
        let b = CopyBench::new(512, 3, CopyMode::Mraw).unwrap();
        assert!(matches!(b.verify(), Err(BenchError::Check(_))));
    }

    #[test]
    fn offset_bounds() {
        assert!(CopyBench::new(64, 64, CopyMode::Armw).is_err());
        assert!(CopyBench::new(4, 0, CopyMode::Armw).is_err());
    }

    #[test]
    fn report_rows_per_offset_and_mode() {
        let p = MisalignParams { bytes: 4096, offsets: vec![0, 5], repeat: Repeat { warmup: 0, reps: 5 } };
        let r = misalignment_report(&p).unwrap();
        assert_eq!(r.results.len(), 4);
        assert!(r.results.iter().all(|x| x.metric > 0.0 && x.metric.is_finite()));
    }
}
