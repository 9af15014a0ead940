//! Machine format: one event per line, `key=value` fields separated by single
//! spaces in the order `chrono port cid vid dom wd mods ctext bindings cpid`,
//! absent attributes omitted. A line holding only `...` ends a truncated trace.

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use super::{Bindings, Port, TraceEvent};
use crate::domain::{parse_domain, UpdateKinds};
use crate::ids::VarId;

pub const TRUNCATION_MARKER: &str = "...";

pub fn render_canonical(e: &TraceEvent) -> String {
    let mut s = format!("chrono={} port={}", e.chrono, e.port);
    if let Some(c) = e.cid {
        let _ = write!(s, " cid={c}");
    }
    if let Some(v) = e.vid {
        let _ = write!(s, " vid={v}");
    }
    if let Some(d) = &e.dom {
        let _ = write!(s, " dom={d}");
    }
    if let Some(w) = &e.wd {
        let _ = write!(s, " wd={w}");
    }
    if let Some(m) = e.mods {
        let _ = write!(s, " mods={m}");
    }
    if let Some(t) = &e.ctext {
        let _ = write!(s, " ctext={t}");
    }
    if let Some(b) = &e.bindings {
        s.push_str(" bindings=");
        for (i, (v, n)) in b.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}={n}");
        }
    }
    if let Some(p) = e.cpid {
        let _ = write!(s, " cpid={p}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}, column {column}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn parse_bindings(text: &str) -> Result<Bindings, String> {
    let mut out = Bindings::new();
    if text.is_empty() {
        return Ok(out);
    }
    for item in text.split(',') {
        let (v, n) = item.split_once('=').ok_or_else(|| format!("expected v<n>=<value>, found {item:?}"))?;
        let v: VarId = v.parse()?;
        let n: u32 = n.parse().map_err(|_| format!("bad binding value {n:?}"))?;
        if out.insert(v, n).is_some() {
            return Err(format!("{v} bound twice"));
        }
    }
    Ok(out)
}

/// Parses one canonical line; `line_no` is used in errors only.
pub fn parse_canonical(line: &str, line_no: usize) -> Result<TraceEvent, TraceParseError> {
    let err = |column: usize, message: String| TraceParseError { line: line_no, column, message };
    let mut chrono = None;
    let mut port = None;
    let mut ev = TraceEvent::failure(0);
    let mut column = 1;
    for field in line.split(' ') {
        let at = column;
        column += field.len() + 1;
        let (key, value) =
            field.split_once('=').ok_or_else(|| err(at, format!("expected key=value, found {field:?}")))?;
        let vcol = at + key.len() + 1;
        let dup = || err(at, format!("duplicate field {key}"));
        macro_rules! set {
            ($slot:expr, $parsed:expr) => {{
                if $slot.is_some() {
                    return Err(dup());
                }
                $slot = Some($parsed.map_err(|m: String| err(vcol, m))?);
            }};
        }
        match key {
            "chrono" => set!(chrono, value.parse::<u64>().map_err(|_| format!("bad chrono {value:?}"))),
            "port" => set!(port, value.parse::<Port>()),
            "cid" => set!(ev.cid, value.parse()),
            "vid" => set!(ev.vid, value.parse()),
            "dom" => {
                if ev.dom.is_some() {
                    return Err(dup());
                }
                ev.dom = Some(parse_domain(value).map_err(|e| err(vcol + e.offset, e.message))?);
            }
            "wd" => {
                if ev.wd.is_some() {
                    return Err(dup());
                }
                ev.wd = Some(parse_domain(value).map_err(|e| err(vcol + e.offset, e.message))?);
            }
            "mods" => set!(ev.mods, value.parse::<UpdateKinds>()),
            "ctext" => set!(ev.ctext, Ok::<_, String>(value.to_string())),
            "bindings" => set!(ev.bindings, parse_bindings(value)),
            "cpid" => set!(ev.cpid, value.parse()),
            _ => return Err(err(at, format!("unknown field {key:?}"))),
        }
    }
    ev.chrono = chrono.ok_or_else(|| err(1, "missing chrono".into()))?;
    ev.port = port.ok_or_else(|| err(1, "missing port".into()))?;
    Ok(ev)
}

/// A whole trace file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTrace {
    pub events: Vec<TraceEvent>,
    /// Set when the file ends with the `...` marker: only a prefix is present.
    pub truncated: bool,
}

pub fn parse_trace(text: &str) -> Result<ParsedTrace, TraceParseError> {
    let mut reader = TraceReader::new(text.as_bytes());
    let events = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedTrace { events, truncated: reader.truncated() })
}

/// Streams events from canonical text, one line at a time.
pub struct TraceReader<R> {
    input: R,
    line_no: usize,
    truncated: bool,
    done: bool,
    buf: String,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(input: R) -> Self {
        TraceReader { input, line_no: 0, truncated: false, done: false, buf: String::new() }
    }

    /// Whether the `...` marker was reached.
    pub fn truncated(&self) -> bool {
        self.truncated
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceEvent, TraceParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            self.line_no += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.is_empty() {
                        continue;
                    }
                    if self.truncated {
                        self.done = true;
                        let message = "content after truncation marker".to_string();
                        return Some(Err(TraceParseError { line: self.line_no, column: 1, message }));
                    }
                    if line == TRUNCATION_MARKER {
                        self.truncated = true;
                        continue;
                    }
                    let parsed = parse_canonical(line, self.line_no);
                    if parsed.is_err() {
                        self.done = true;
                    }
                    return Some(parsed);
                }
                Err(e) => {
                    self.done = true;
                    let message = format!("read error: {e}");
                    return Some(Err(TraceParseError { line: self.line_no, column: 1, message }));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FiniteDomain;
    use crate::ids::ConstraintId;

    #[test]
    fn reduce_line() {
        let ev = TraceEvent::reduce(5, ConstraintId(1), VarId(2), &FiniteDomain::full(), "[2,5,7]".parse().unwrap());
        let line = render_canonical(&ev);
        assert_eq!(line, "chrono=5 port=reduce cid=c1 vid=v2 dom=[2,5,7] wd=[0-1,3-4,6,8-268435455] mods=[min,max]");
        assert_eq!(parse_canonical(&line, 1).unwrap(), ev);
    }

    #[test]
    fn solution_line() {
        let ev = TraceEvent::solution(32, [(VarId(1), 1), (VarId(2), 2)].into_iter().collect());
        let line = render_canonical(&ev);
        assert_eq!(line, "chrono=32 port=solution bindings=v1=1,v2=2");
        assert_eq!(parse_canonical(&line, 1).unwrap(), ev);
        let empty = TraceEvent::solution(1, Bindings::new());
        assert_eq!(parse_canonical(&render_canonical(&empty), 1).unwrap(), empty);
    }

    #[test]
    fn errors_locate_the_field() {
        let e = parse_canonical("chrono=3 port=reduce vid=x1", 7).unwrap_err();
        assert_eq!((e.line, e.column), (7, 26));
        let e = parse_canonical("chrono=3 port=suspend dom=[1,q]", 2).unwrap_err();
        assert_eq!(e.column, 30);
        assert!(parse_canonical("chrono=3", 1).is_err());
        assert!(parse_canonical("chrono=3 port=suspend cid=c1 cid=c2", 1).is_err());
        assert!(parse_canonical("chrono=3 port=nap", 1).is_err());
        assert!(parse_canonical("chrono=3  port=failure", 1).is_err());
    }

    #[test]
    fn truncated_files() {
        let t = parse_trace("chrono=1 port=failure\n...\n").unwrap();
        assert!(t.truncated);
        assert_eq!(t.events.len(), 1);
        assert!(parse_trace("...\nchrono=1 port=failure\n").is_err());
        let e = parse_trace("chrono=1 port=failure\nchrono=2 bogus\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
