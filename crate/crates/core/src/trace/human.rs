//! Column-aligned console format:
//!
//! ```text
//!  3 newConstraint c1  element([v1,[2,5,7],v2])
//!  4 reduce   c1   v1 =[1,2,3]   W=[0,4-268435455]
//!  6 suspend  c1
//! ```

use std::fmt::Write;

use super::{Port, TraceEvent};
use crate::domain::FiniteDomain;

/// Domains whose largest value is at most this are printed value by value.
pub const LIST_VALUES_MAX: u32 = 127;

/// Console rendering of a domain: small domains list every value
/// (`[1,2,3]`), others use the canonical interval form (`[0,4-268435455]`).
pub fn render_domain_human(d: &FiniteDomain) -> String {
    match d.max() {
        Some(max) if max <= LIST_VALUES_MAX => {
            let values: Vec<String> = d.iter().map(|v| v.to_string()).collect();
            format!("[{}]", values.join(","))
        }
        _ => d.to_string(),
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Renders one event; projected-away attributes are left blank.
pub fn render_human(e: &TraceEvent) -> String {
    let mut line = format!("{:>2} ", e.chrono);
    let cid = opt(&e.cid);
    let vid = opt(&e.vid);
    let dom = e.dom.as_ref().map(|d| format!("={}", render_domain_human(d))).unwrap_or_default();
    let _ = match e.port {
        Port::NewVariable => write!(line, "newVariable   {vid} {dom}"),
        Port::NewConstraint => write!(line, "newConstraint {cid:<3} {}", opt(&e.ctext)),
        Port::Reduce => {
            let wd = e.wd.as_ref().map(|w| format!("W={}", render_domain_human(w))).unwrap_or_default();
            write!(line, "reduce   {cid:<4} {vid} {dom:<8}   {wd}")
        }
        Port::Suspend | Port::Awake | Port::Reject => write!(line, "{:<8} {cid}", e.port.name()),
        Port::Solution => {
            let bindings = e
                .bindings
                .as_ref()
                .map(|b| b.iter().map(|(v, n)| format!("{v}={n}")).collect::<Vec<_>>().join(","))
                .unwrap_or_default();
            write!(line, "solution {bindings}")
        }
        Port::ChoicePoint => write!(line, "choicePoint {}", opt(&e.cpid)),
        Port::BackTo => write!(line, "{:<8} {}", e.port.name(), opt(&e.cpid)),
        Port::Failure => write!(line, "failure"),
    };
    line.truncate(line.trim_end().len());
    line
}
