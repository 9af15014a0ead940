//! Trace conformance: rule replay, engine-to-engine alignment and the
//! mutation catalog used to measure both.

pub mod align;
pub mod check;
pub mod mutate;
pub mod replay;

pub use align::{align, AlignmentReport, NameMap, Verdict};
pub use check::{check_events, ctext_vars, replay_check, Violation};
pub use replay::{replay_domains, DomainReplay};
