//! Labeling heuristics shared by both engines.

use crate::domain::FiniteDomain;
use crate::program::{ValOrder, VarOrder};

/// Picks the variable to label among `sizes` (domain sizes of every live
/// variable, in id order). Ground variables are never picked.
pub fn select_var(order: VarOrder, sizes: &[u64]) -> Option<usize> {
    let n = sizes.len();
    let candidates = sizes.iter().enumerate().filter(|(_, &s)| s > 1);
    match order {
        VarOrder::FirstFailMin => candidates.min_by_key(|&(i, &s)| (s, i)).map(|(i, _)| i),
        // Distance from the centre, doubled to stay integral: |2i - (n-1)|.
        VarOrder::FirstFailMiddleFirst => {
            candidates.min_by_key(|&(i, &s)| (s, (2 * i).abs_diff(n - 1), i)).map(|(i, _)| i)
        }
    }
}

pub fn select_value(order: ValOrder, dom: &FiniteDomain) -> Option<u32> {
    match order {
        ValOrder::MinValue => dom.min(),
        ValOrder::MiddleValue => dom.nth(dom.size().div_ceil(2).checked_sub(1)?),
    }
}
