//! Trace identifiers: `v<n>` variables, `c<n>` constraints, `p<n>` choice points.

use std::fmt;
use std::str::FromStr;

macro_rules! ordinal_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn ordinal(self) -> u32 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(self, f)
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.strip_prefix($prefix)
                    .filter(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|n| n.parse().ok())
                    .map($name)
                    .ok_or_else(|| format!(concat!("expected ", $prefix, "<n>, found {:?}"), s))
            }
        }
    };
}

ordinal_id!(
    /// A finite-domain variable, numbered densely from 1 in creation order.
    VarId,
    "v"
);
ordinal_id!(
    /// A constraint, numbered densely from 1 in creation order.
    ///
    /// Ordinal 0 is reserved for [`ConstraintId::LABEL`].
    ConstraintId,
    "c"
);
ordinal_id!(
    /// A choice point, numbered from 1 in creation order.
    ChoicePointId,
    "p"
);

impl ConstraintId {
    /// Synthetic constraint `c0` to which labeling decisions and declared
    /// initial domains are attributed.
    pub const LABEL: ConstraintId = ConstraintId(0);

    pub fn is_label(self) -> bool {
        self.0 == 0
    }
}

/// Hands out ordinals 1, 2, 3, ... Counters are never rewound on backtracking,
/// so an id names at most one entity over a whole run.
#[derive(Debug, Clone, Default)]
pub struct IdCounter(u32);

impl IdCounter {
    pub fn fresh(&mut self) -> u32 {
        self.0 += 1;
        self.0
    }
}
