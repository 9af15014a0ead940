//! Problem files.
//!
//! ```text
//! # comment
//! var i in 0-268435455;
//! var a in [0-268435455];
//! con c1: element(i,[2,5,7],a);
//! choice { con c2: eq(a,i); } or { con c3: eq_const(a,2); };
//! label all firstFailMin minValue;
//! ```
//!
//! Variables are identified by their declaration index in [`Program::decls`];
//! a variable declared inside a choice branch is visible only in that branch.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{parse_domain, parse_items, FiniteDomain};
use crate::propagators::Constraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VarOrder {
    /// Smallest domain first, ties by declaration order.
    #[default]
    FirstFailMin,
    /// Smallest domain first, ties broken middle-out over declaration order.
    FirstFailMiddleFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ValOrder {
    #[default]
    MinValue,
    /// The value at 1-based position `ceil(size/2)`.
    MiddleValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Strategy {
    pub var_order: VarOrder,
    pub val_order: ValOrder,
}

impl Strategy {
    pub const FIRST_FAIL_MIN: Strategy = Strategy { var_order: VarOrder::FirstFailMin, val_order: ValOrder::MinValue };
    pub const MIDDLE_FIRST: Strategy =
        Strategy { var_order: VarOrder::FirstFailMiddleFirst, val_order: ValOrder::MiddleValue };
}

impl VarOrder {
    pub fn name(self) -> &'static str {
        match self {
            VarOrder::FirstFailMin => "firstFailMin",
            VarOrder::FirstFailMiddleFirst => "firstFailMiddleFirst",
        }
    }
}

impl ValOrder {
    pub fn name(self) -> &'static str {
        match self {
            ValOrder::MinValue => "minValue",
            ValOrder::MiddleValue => "middleValue",
        }
    }
}

impl FromStr for VarOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "firstFailMin" => Ok(VarOrder::FirstFailMin),
            "firstFailMiddleFirst" => Ok(VarOrder::FirstFailMiddleFirst),
            _ => Err(format!("unknown variable order {s:?} (expected firstFailMin or firstFailMiddleFirst)")),
        }
    }
}

impl FromStr for ValOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minValue" => Ok(ValOrder::MinValue),
            "middleValue" => Ok(ValOrder::MiddleValue),
            _ => Err(format!("unknown value order {s:?} (expected minValue or middleValue)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.var_order.name(), self.val_order.name())
    }
}

/// `firstFailMin,minValue`, or a variable order alone, which picks its usual
/// partner (`firstFailMin` with `minValue`, `firstFailMiddleFirst` with
/// `middleValue`).
impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split([',', ' ']).filter(|p| !p.is_empty());
        let var_order: VarOrder = parts.next().ok_or("empty strategy")?.parse()?;
        let val_order = match parts.next() {
            Some(v) => v.parse()?,
            None if var_order == VarOrder::FirstFailMiddleFirst => ValOrder::MiddleValue,
            None => ValOrder::MinValue,
        };
        if let Some(extra) = parts.next() {
            return Err(format!("unexpected {extra:?} in strategy"));
        }
        Ok(Strategy { var_order, val_order })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: FiniteDomain,
    /// Introduced by desugaring rather than written by the user.
    pub hidden: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConDecl {
    pub name: String,
    /// Over declaration indices.
    pub constraint: Constraint<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Var(usize),
    Con(ConDecl),
    /// Alternatives, tried in order.
    Choice(Vec<Vec<Item>>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<VarDecl>,
    pub items: Vec<Item>,
    pub strategy: Option<Strategy>,
}

impl Program {
    pub fn strategy_or_default(&self) -> Strategy {
        self.strategy.unwrap_or_default()
    }

    /// Declaration indices of top-level variables, in order.
    pub fn top_level_vars(&self) -> Vec<usize> {
        self.items.iter().filter_map(|it| if let Item::Var(i) = it { Some(*i) } else { None }).collect()
    }

    pub fn constraint_count(&self) -> usize {
        fn count(items: &[Item]) -> usize {
            items
                .iter()
                .map(|it| match it {
                    Item::Var(_) => 0,
                    Item::Con(_) => 1,
                    Item::Choice(alts) => alts.iter().map(|a| count(a)).sum(),
                })
                .sum()
        }
        count(&self.items)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: {message}")]
    Semantic { line: usize, column: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s:?}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Punct(c) => write!(f, "'{c}'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
    /// Byte range in the source.
    at: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ProgramError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let (mut line, mut line_start) = (1, 0);
    while let Some(&(at, c)) = chars.peek() {
        let column = text[line_start..at].chars().count() + 1;
        if c == '\n' {
            chars.next();
            line += 1;
            line_start = at + 1;
        } else if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                chars.next();
            }
        } else if c.is_ascii_alphabetic() {
            let mut end = at;
            while let Some(&(i, c)) = chars.peek() {
                if !(c.is_ascii_alphanumeric() || c == '_') {
                    break;
                }
                end = i + c.len_utf8();
                chars.next();
            }
            out.push(Spanned { tok: Tok::Ident(text[at..end].to_string()), line, column, at, end });
        } else if c.is_ascii_digit() {
            let mut end = at;
            while let Some(&(i, c)) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                end = i + 1;
                chars.next();
            }
            let n = text[at..end].parse().map_err(|_| ProgramError::Syntax {
                line,
                column,
                message: format!("integer {} out of range", &text[at..end]),
            })?;
            out.push(Spanned { tok: Tok::Int(n), line, column, at, end });
        } else if "-;:,()[]{}".contains(c) {
            chars.next();
            out.push(Spanned { tok: Tok::Punct(c), line, column, at, end: at + 1 });
        } else {
            return Err(ProgramError::Syntax { line, column, message: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<Spanned>,
    pos: usize,
    prog: Program,
    /// Visible variable names, innermost scope last.
    scopes: Vec<HashMap<String, usize>>,
    con_names: BTreeSet<String>,
    hidden: usize,
}

type PResult<T> = Result<T, ProgramError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(s) if self.pos < self.toks.len() => (s.line, s.column),
            Some(s) => (s.line, s.column + 1),
            None => (1, 1),
        }
    }

    fn syntax<T>(&self, message: String) -> PResult<T> {
        let (line, column) = self.here();
        Err(ProgramError::Syntax { line, column, message })
    }

    fn semantic_at<T>(&self, tok: usize, message: String) -> PResult<T> {
        let s = &self.toks[tok];
        Err(ProgramError::Semantic { line: s.line, column: s.column, message })
    }

    fn found(&self) -> String {
        self.peek().map_or("end of input".to_string(), |t| t.to_string())
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.syntax(format!("expected '{c}', found {}", self.found()))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        let hit = self.peek() == Some(&Tok::Punct(c));
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.syntax(format!("expected {what}, found {}", self.found())),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.syntax(format!("expected '{kw}', found {}", self.found())),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat('-');
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => self.syntax(format!("expected integer, found {}", self.found())),
        }
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn declare(&mut self, name: String, domain: FiniteDomain, hidden: bool) -> usize {
        let idx = self.prog.decls.len();
        self.prog.decls.push(VarDecl { name: name.clone(), domain, hidden });
        self.scopes.last_mut().expect("scope").insert(name, idx);
        idx
    }

    fn items(&mut self, top: bool) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                None if top => return Ok(items),
                Some(Tok::Punct('}')) if !top => return Ok(items),
                None => return self.syntax("unclosed '{'".into()),
                _ => self.item(top, &mut items)?,
            }
        }
    }

    fn item(&mut self, top: bool, items: &mut Vec<Item>) -> PResult<()> {
        let start = self.pos;
        let kw = self.ident("'var', 'con', 'choice' or 'label'")?;
        match kw.as_str() {
            "var" => {
                let name_tok = self.pos;
                let name = self.ident("variable name")?;
                self.keyword("in")?;
                let domain = self.domain_text()?;
                self.expect(';')?;
                if self.scopes.iter().any(|s| s.contains_key(&name)) {
                    return self.semantic_at(name_tok, format!("variable {name} declared twice"));
                }
                if domain.is_empty() {
                    return self.semantic_at(name_tok, format!("variable {name} has an empty domain"));
                }
                items.push(Item::Var(self.declare(name, domain, false)));
            }
            "con" => {
                let name_tok = self.pos;
                let name = self.ident("constraint name")?;
                self.expect(':')?;
                if !self.con_names.insert(name.clone()) {
                    return self.semantic_at(name_tok, format!("constraint {name} declared twice"));
                }
                self.constraint(name, items)?;
                self.expect(';')?;
            }
            "choice" => {
                let mut alts = Vec::new();
                loop {
                    self.expect('{')?;
                    self.scopes.push(HashMap::new());
                    let alt = self.items(false);
                    self.scopes.pop();
                    alts.push(alt?);
                    self.expect('}')?;
                    match self.peek() {
                        Some(Tok::Ident(s)) if s == "or" => self.pos += 1,
                        _ => break,
                    }
                }
                self.expect(';')?;
                if alts.len() < 2 {
                    return self.semantic_at(start, "a choice needs at least two alternatives".into());
                }
                items.push(Item::Choice(alts));
            }
            "label" => {
                self.keyword("all")?;
                let var_tok = self.pos;
                let var_order = self.ident("variable order")?;
                let val_tok = self.pos;
                let val_order = self.ident("value order")?;
                self.expect(';')?;
                if !top {
                    return self.semantic_at(start, "label is only allowed at top level".into());
                }
                if self.prog.strategy.is_some() {
                    return self.semantic_at(start, "more than one label directive".into());
                }
                let var_order = match var_order.parse() {
                    Ok(v) => v,
                    Err(e) => return self.semantic_at(var_tok, e),
                };
                let val_order = match val_order.parse() {
                    Ok(v) => v,
                    Err(e) => return self.semantic_at(val_tok, e),
                };
                self.prog.strategy = Some(Strategy { var_order, val_order });
            }
            other => {
                self.pos = start;
                return self.syntax(format!("expected 'var', 'con', 'choice' or 'label', found {other:?}"));
            }
        }
        Ok(())
    }

    /// A domain written either bracketed or bare (`1-3`, `1,4-6`).
    fn domain_text(&mut self) -> PResult<FiniteDomain> {
        let Some(first) = self.toks.get(self.pos).cloned() else {
            return self.syntax("expected domain, found end of input".into());
        };
        let mut end = self.pos;
        while self.toks.get(end).is_some_and(|s| matches!(s.tok, Tok::Int(_) | Tok::Punct('-' | ',' | '[' | ']'))) {
            end += 1;
        }
        if end == self.pos {
            return self.syntax(format!("expected domain, found {}", self.found()));
        }
        let raw = &self.text[first.at..self.toks[end - 1].end];
        let parsed = if raw.starts_with('[') { parse_domain(raw) } else { parse_items(raw, 0) };
        self.pos = end;
        parsed.map_err(|e| ProgramError::Syntax {
            line: first.line,
            column: first.column + raw[..e.offset.min(raw.len())].chars().count(),
            message: e.message,
        })
    }

    fn var_arg(&mut self) -> PResult<usize> {
        let tok = self.pos;
        let name = self.ident("variable")?;
        match self.lookup(&name) {
            Some(i) => Ok(i),
            None => self.semantic_at(tok, format!("undeclared variable {name}")),
        }
    }

    fn constraint(&mut self, name: String, items: &mut Vec<Item>) -> PResult<()> {
        let kind_tok = self.pos;
        let kind = self.ident("constraint kind")?;
        self.expect('(')?;
        let constraint = match kind.as_str() {
            "gt" | "eq" => {
                let x = self.var_arg()?;
                self.expect(',')?;
                let y = self.var_arg()?;
                if kind == "gt" {
                    Constraint::Gt(x, y)
                } else {
                    Constraint::Eq(x, y)
                }
            }
            "neq" => {
                let x = self.var_arg()?;
                self.expect(',')?;
                let y = self.var_arg()?;
                self.expect(',')?;
                let k = self.int()?;
                Constraint::NeqOffset { x, y, k }
            }
            "element" => {
                let index = self.var_arg()?;
                self.expect(',')?;
                self.expect('[')?;
                let mut list = Vec::new();
                if !self.eat(']') {
                    loop {
                        list.push(self.int()?);
                        if self.eat(']') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                self.expect(',')?;
                let value = self.var_arg()?;
                if list.is_empty() {
                    return self.semantic_at(kind_tok, "element list must not be empty".into());
                }
                Constraint::Element { index, list, value }
            }
            "eq_const" => {
                let x = self.var_arg()?;
                self.expect(',')?;
                let k = self.int()?;
                let Ok(k) = u32::try_from(k) else {
                    return self.semantic_at(kind_tok, format!("eq_const value {k} is outside the domain range"));
                };
                if k > crate::domain::FULL_MAX {
                    return self.semantic_at(kind_tok, format!("eq_const value {k} is outside the domain range"));
                }
                self.hidden += 1;
                let hidden = self.declare(format!("_k{}", self.hidden), FiniteDomain::singleton(k), true);
                items.push(Item::Var(hidden));
                Constraint::Eq(x, hidden)
            }
            _ => {
                return self.semantic_at(
                    kind_tok,
                    format!("unknown constraint {kind:?} (expected gt, eq, neq, element or eq_const)"),
                )
            }
        };
        self.expect(')')?;
        let [a, b] = constraint.vars();
        if a == b {
            return self.semantic_at(kind_tok, format!("{kind} mentions variable {} twice", self.prog.decls[a].name));
        }
        items.push(Item::Con(ConDecl { name, constraint }));
        Ok(())
    }
}

pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    let toks = lex(text)?;
    let mut p = Parser {
        text,
        toks,
        pos: 0,
        prog: Program::default(),
        scopes: vec![HashMap::new()],
        con_names: BTreeSet::new(),
        hidden: 0,
    };
    p.prog.items = p.items(true)?;
    Ok(p.prog)
}

/// The n-queens problem: `qi` is the row of the queen in column `i`.
pub fn gen_queens(n: usize, strategy: Strategy) -> Result<String, String> {
    if n < 1 {
        return Err("queens needs n >= 1".into());
    }
    let mut out = format!("# {n}-queens\n");
    for i in 1..=n {
        out.push_str(&format!("var q{i} in 1-{n};\n"));
    }
    for i in 1..=n {
        for j in i + 1..=n {
            let d = j - i;
            out.push_str(&format!("con r{i}_{j}: neq(q{i},q{j},0);\n"));
            out.push_str(&format!("con u{i}_{j}: neq(q{i},q{j},{d});\n"));
            out.push_str(&format!("con d{i}_{j}: neq(q{i},q{j},-{d});\n"));
        }
    }
    out.push_str(&format!("label all {} {};\n", strategy.var_order.name(), strategy.val_order.name()));
    Ok(out)
}
