//! Repeated timing and the result records every benchmark emits.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{BenchError, Result};

pub const MIN_REPS: usize = 5;
pub const DEFAULT_WARMUP: usize = 3;

/// Repetition counts shared by all benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Repeat {
    pub warmup: usize,
    pub reps: usize,
}

impl Default for Repeat {
    fn default() -> Self {
        Self { warmup: DEFAULT_WARMUP, reps: 7 }
    }
}

impl Repeat {
    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(BenchError::Params(format!(
                "{} repetitions requested, at least {MIN_REPS} needed",
                self.reps
            )));
        }
        Ok(())
    }
}

/// Order statistics of the timed repetitions, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub reps: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Timing {
    pub fn from_samples(samples: &[Duration]) -> Result<Self> {
        if samples.len() < MIN_REPS {
            return Err(BenchError::Params(format!("{} samples, at least {MIN_REPS} needed", samples.len())));
        }
        let mut s: Vec<f64> = samples.iter().map(Duration::as_secs_f64).collect();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
        Ok(Self { reps: n, min: s[0], median, max: s[n - 1] })
    }
}

/// Runs `f` `warmup` times untimed, then `reps` times timed.
pub fn measure<F>(repeat: Repeat, mut f: F) -> Result<Timing>
where
    F: FnMut() -> Result<()>,
{
    repeat.validate()?;
    for _ in 0..repeat.warmup {
        f()?;
    }
    let mut samples = Vec::with_capacity(repeat.reps);
    for _ in 0..repeat.reps {
        let t0 = Instant::now();
        f()?;
        samples.push(t0.elapsed());
    }
    Timing::from_samples(&samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    /// Variant within the benchmark, e.g. `soa-propagate` or `contiguous`.
    pub name: String,
    pub parameter: f64,
    pub timing: Timing,
    /// Throughput at the median time, in the report's metric unit.
    pub metric: f64,
}

/// All results of one benchmark run, with the column names they share.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub benchmark: String,
    /// Column header for `parameter`, with unit.
    pub parameter: String,
    /// Column header for `metric`, with unit.
    pub metric: String,
    pub results: Vec<BenchResult>,
    /// Soft checks that did not hold.
    pub warnings: Vec<String>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "benchmark",
            "variant",
            self.parameter.as_str(),
            "repetitions",
            "median [s]",
            "min [s]",
            "max [s]",
            self.metric.as_str(),
        ])?;
        for r in &self.results {
            out.write_record([
                self.benchmark.clone(),
                r.name.clone(),
                r.parameter.to_string(),
                r.timing.reps.to_string(),
                format!("{:e}", r.timing.median),
                format!("{:e}", r.timing.min),
                format!("{:e}", r.timing.max),
                format!("{:e}", r.metric),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn find(&self, name: &str, parameter: f64) -> Option<&BenchResult> {
        self.results.iter().find(|r| r.name == name && r.parameter == parameter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        let ms = |v: u64| Duration::from_millis(v);
        let t = Timing::from_samples(&[ms(5), ms(1), ms(3), ms(2), ms(4)]).unwrap();
        assert_eq!((t.min, t.median, t.max), (0.001, 0.003, 0.005));
        let t = Timing::from_samples(&[ms(1), ms(2), ms(3), ms(4), ms(5), ms(6)]).unwrap();
        assert!((t.median - 0.0035).abs() < 1e-15);
        assert!(Timing::from_samples(&[ms(1); 4]).is_err());
    }

    #[test]
    fn warmup_runs_are_not_timed() {
        let mut calls = 0;
        let t = measure(Repeat { warmup: 2, reps: 5 }, || {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 7);
        assert_eq!(t.reps, 5);
        assert!(t.min <= t.median && t.median <= t.max);
    }

    #[test]
    fn too_few_reps_rejected() {
        assert!(measure(Repeat { warmup: 0, reps: 1 }, || Ok(())).is_err());
    }

    #[test]
    fn csv_has_units() {
        let report = BenchReport {
            benchmark: "x".into(),
            parameter: "offset [B]".into(),
            metric: "bandwidth [B/s]".into(),
            results: vec![],
            warnings: vec![],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            "benchmark,variant,offset [B],repetitions,median [s],min [s],max [s],bandwidth [B/s]"
        );
    }
}
