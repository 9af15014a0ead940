//! Event filters.
//!
//! ```text
//! filter := ε | cond ("," cond)*
//! cond   := attr op value
//!         | attr "in" "(" value ("," value)* ")"     brackets also accepted
//! attr   := chrono | port | cid | vid
//! op     := "=" | "<" | ">"
//! ```
//!
//! Conditions are conjoined. Each attribute appears at most once. `port`
//! takes only `=` and `in`; `chrono` takes no `in`. An event lacking `cid`
//! or `vid` fails any condition on it. Ids compare by ordinal.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ids::{ConstraintId, VarId};
use crate::trace::{Port, PortSet, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad filter {text:?}: {message}")]
pub struct FilterError {
    pub text: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Lt,
    Gt,
}

impl Cmp {
    fn test<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Lt => a < b,
            Cmp::Gt => a > b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Lt => "<",
            Cmp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdCond<T> {
    Cmp(Cmp, T),
    In(Vec<T>),
}

impl<T: Ord + Copy + fmt::Display> IdCond<T> {
    fn test(&self, x: Option<T>) -> bool {
        match (self, x) {
            (_, None) => false,
            (IdCond::Cmp(op, y), Some(x)) => op.test(x, *y),
            (IdCond::In(ys), Some(x)) => ys.contains(&x),
        }
    }

    fn write(&self, name: &str, out: &mut Vec<String>) {
        out.push(match self {
            IdCond::Cmp(op, y) => format!("{name}{}{y}", op.symbol()),
            IdCond::In(ys) => format!("{name} in ({})", join(ys)),
        });
    }
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// A conjunction of conditions; the default filter matches every event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filter {
    pub chrono: Option<(Cmp, u64)>,
    pub port: Option<PortSet>,
    pub cid: Option<IdCond<ConstraintId>>,
    pub vid: Option<IdCond<VarId>>,
}

impl Filter {
    pub fn any() -> Self {
        Filter::default()
    }

    pub fn ports(ports: PortSet) -> Self {
        Filter { port: Some(ports), ..Filter::default() }
    }

    pub fn matches(&self, e: &TraceEvent) -> bool {
        self.chrono.is_none_or(|(op, n)| op.test(e.chrono, n))
            && self.port.is_none_or(|ps| ps.contains(e.port))
            && self.cid.as_ref().is_none_or(|c| c.test(e.cid))
            && self.vid.as_ref().is_none_or(|c| c.test(e.vid))
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some((op, n)) = self.chrono {
            parts.push(format!("chrono{}{n}", op.symbol()));
        }
        if let Some(ps) = self.port {
            let ports: Vec<Port> = ps.iter().collect();
            parts.push(match ports.as_slice() {
                [p] => format!("port={p}"),
                _ => format!("port in ({})", join(ports)),
            });
        }
        if let Some(c) = &self.cid {
            c.write("cid", &mut parts);
        }
        if let Some(c) = &self.vid {
            c.write("vid", &mut parts);
        }
        f.write_str(&parts.join(","))
    }
}

/// Splits on commas outside parentheses and brackets.
fn split_top(text: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unbalanced {ch:?}"));
                }
            }
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unclosed list".into());
    }
    out.push(&text[start..]);
    Ok(out)
}

enum Rhs<'a> {
    Op(Cmp, &'a str),
    List(Vec<&'a str>),
}

fn parse_cond(cond: &str) -> Result<(&str, Rhs<'_>), String> {
    let name_end = cond.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(cond.len());
    let (name, rest) = (&cond[..name_end], cond[name_end..].trim_start());
    if name.is_empty() {
        return Err(format!("expected an attribute name in {cond:?}"));
    }
    let op = match rest.chars().next() {
        Some('=') => Some(Cmp::Eq),
        Some('<') => Some(Cmp::Lt),
        Some('>') => Some(Cmp::Gt),
        _ => None,
    };
    if let Some(op) = op {
        let value = rest[1..].trim();
        if value.is_empty() {
            return Err(format!("missing value after {name}{}", op.symbol()));
        }
        return Ok((name, Rhs::Op(op, value)));
    }
    let list =
        rest.strip_prefix("in").map(str::trim_start).ok_or_else(|| format!("expected =, <, > or in after {name}"))?;
    let inner = list
        .strip_prefix('(')
        .and_then(|l| l.strip_suffix(')'))
        .or_else(|| list.strip_prefix('[').and_then(|l| l.strip_suffix(']')))
        .ok_or_else(|| format!("expected a parenthesized list after {name} in"))?;
    let items: Vec<&str> = inner.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(format!("empty item in the list for {name}"));
    }
    Ok((name, Rhs::List(items)))
}

fn parse_id_cond<T: FromStr>(name: &str, rhs: Rhs<'_>) -> Result<IdCond<T>, String> {
    let one = |s: &str| s.parse::<T>().map_err(|_| format!("bad {name} value {s:?}"));
    Ok(match rhs {
        Rhs::Op(op, v) => IdCond::Cmp(op, one(v)?),
        Rhs::List(items) => IdCond::In(items.into_iter().map(one).collect::<Result<_, _>>()?),
    })
}

impl FromStr for Filter {
    type Err = FilterError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |message: String| FilterError { text: text.to_string(), message };
        let mut f = Filter::default();
        if text.trim().is_empty() {
            return Ok(f);
        }
        for cond in split_top(text).map_err(err)? {
            let (name, rhs) = parse_cond(cond.trim()).map_err(err)?;
            let dup = || err(format!("more than one condition on {name}"));
            match name {
                "chrono" => {
                    let Rhs::Op(op, v) = rhs else { return Err(err("chrono does not take a list".into())) };
                    let n = v.parse().map_err(|_| err(format!("bad chrono value {v:?}")))?;
                    if f.chrono.replace((op, n)).is_some() {
                        return Err(dup());
                    }
                }
                "port" => {
                    let ports = match rhs {
                        Rhs::Op(Cmp::Eq, v) => PortSet::of(&[v.parse().map_err(err)?]),
                        Rhs::Op(..) => return Err(err("port takes only = and in".into())),
                        Rhs::List(items) => items.into_iter().try_fold(PortSet::NONE, |acc, p| {
                            Ok::<_, FilterError>(acc.with(p.parse().map_err(err)?))
                        })?,
                    };
                    if f.port.replace(ports).is_some() {
                        return Err(dup());
                    }
                }
                "cid" => {
                    if f.cid.replace(parse_id_cond(name, rhs).map_err(err)?).is_some() {
                        return Err(dup());
                    }
                }
                "vid" => {
                    if f.vid.replace(parse_id_cond(name, rhs).map_err(err)?).is_some() {
                        return Err(dup());
                    }
                }
                _ => return Err(err(format!("unknown attribute {name:?} (expected chrono, port, cid or vid)"))),
            }
        }
        Ok(f)
    }
}
