//! Finite-domain constraint propagation with a precisely specified execution
//! trace.

pub mod bench;
pub mod domain;
pub mod engine;
pub mod fast;
pub mod ids;
pub mod program;
pub mod propagators;
pub mod query;
pub mod ref_engine;
pub mod search;
pub mod state;
pub mod trace;
pub mod validate;
pub mod viz;

pub use domain::{classify_update, parse_domain, FiniteDomain, UpdateKind, UpdateKinds, FULL_MAX};
pub use engine::EngineKind;
pub use ids::{ChoicePointId, ConstraintId, VarId};
pub use program::{gen_queens, parse_program, Program, Strategy};
pub use ref_engine::{EngineResult, Outcome};
