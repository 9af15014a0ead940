//! Tracing overhead measurement.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::engine::EngineKind;
use crate::program::{Program, Strategy};
use crate::trace::{EmissionConfig, NullSink, TraceFormat, TraceSink, WriterSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    /// Every port disabled: hooks only count events.
    Off,
    /// Every event built and handed to a sink that drops it.
    NullSink,
    /// Every event written to a file in canonical form.
    FullFile,
}

impl BenchMode {
    pub const ALL: [BenchMode; 3] = [BenchMode::Off, BenchMode::NullSink, BenchMode::FullFile];

    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Off => "off",
            BenchMode::NullSink => "null-sink",
            BenchMode::FullFile => "full-file",
        }
    }
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown bench mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchLine {
    pub mode: BenchMode,
    /// Best wall time over the repetitions.
    pub wall_ms: f64,
    pub ratio_vs_off: f64,
}

impl fmt::Display for BenchLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:.3} {:.3}", self.mode, self.wall_ms, self.ratio_vs_off)
    }
}

fn time_once(engine: EngineKind, p: &Program, s: Strategy, mode: BenchMode, trace_path: &Path) -> io::Result<f64> {
    let run = |config: EmissionConfig, sink: &mut dyn TraceSink| -> io::Result<f64> {
        let start = Instant::now();
        engine.solve(p, s, config, sink).map_err(io::Error::other)?;
        Ok(start.elapsed().as_secs_f64() * 1e3)
    };
    match mode {
        BenchMode::Off => run(EmissionConfig::off(), &mut NullSink),
        BenchMode::NullSink => run(EmissionConfig::all(), &mut NullSink),
        BenchMode::FullFile => {
            let file = BufWriter::new(File::create(trace_path)?);
            run(EmissionConfig::all(), &mut WriterSink::new(file, TraceFormat::Canonical))
        }
    }
}

/// Times each mode `repeat` times, runs interleaved, and reports the best
/// time of each against the best untraced time. The trace file of the
/// `full-file` mode is written to `trace_path`.
pub fn bench(
    engine: EngineKind,
    program: &Program,
    strategy: Strategy,
    modes: &[BenchMode],
    repeat: usize,
    trace_path: &Path,
) -> io::Result<Vec<BenchLine>> {
    let mut all = modes.to_vec();
    if !all.contains(&BenchMode::Off) {
        all.insert(0, BenchMode::Off);
    }
    let mut best = vec![f64::INFINITY; all.len()];
    for _ in 0..repeat.max(1) {
        for (i, &m) in all.iter().enumerate() {
            best[i] = best[i].min(time_once(engine, program, strategy, m, trace_path)?);
        }
    }
    let off = best[all.iter().position(|&m| m == BenchMode::Off).expect("added")].max(1e-6);
    Ok(modes
        .iter()
        .map(|&mode| {
            let wall_ms = best[all.iter().position(|&m| m == mode).expect("timed")];
            BenchLine { mode, wall_ms, ratio_vs_off: wall_ms / off }
        })
        .collect())
}
