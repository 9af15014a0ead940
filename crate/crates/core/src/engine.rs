//! Engine selection.

use std::fmt;
use std::str::FromStr;

use crate::fast::solve_fast;
use crate::program::{Program, Strategy};
use crate::ref_engine::{solve, EngineResult};
use crate::trace::{EmissionConfig, TraceError, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineKind {
    /// Executes the transition rules one at a time.
    Ref,
    #[default]
    Fast,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Ref => "ref",
            EngineKind::Fast => "fast",
        }
    }

    pub fn solve(
        self,
        program: &Program,
        strategy: Strategy,
        config: EmissionConfig,
        sink: &mut dyn TraceSink,
    ) -> Result<EngineResult, TraceError> {
        match self {
            EngineKind::Ref => solve(program, strategy, config, sink),
            EngineKind::Fast => solve_fast(program, strategy, config, sink),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ref" => Ok(EngineKind::Ref),
            "fast" => Ok(EngineKind::Fast),
            _ => Err(format!("unknown engine {s:?} (expected ref or fast)")),
        }
    }
}
