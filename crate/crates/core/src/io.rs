//! Presentation files, their canonical rendering, and task reports.
//!
//! A file is a list of `[section]` headers, each followed by `key = value`
//! lines. `#` starts a comment.
//!
//! ```text
//! [generators]
//! labels = v, h
//! parity = 0, 0
//!
//! [locality]
//! v,v = 2
//! * = 1
//!
//! [brackets]
//! [v,v] = (d + 2*lam) v
//!
//! [order]
//! rank = right
//! left = label-major
//! deriv = below-left 2
//!
//! [caps]
//! K = 8
//! D = 6
//! KN = 3
//!
//! [task]
//! task = envelope
//! bound = 4
//!
//! [relations]
//! r0 = L{1}[v] v - v
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};

use crate::conformal::{build_mxn, ConformalAlgebra, LocalityFunction};
use crate::error::{Error, Result};
use crate::gsb::{complete, is_cap_stable, CompletionOptions, TraceEntry};
use crate::lie::{
    build_envelope, envelope, lambda_to_coeffs, search_localities, LambdaBracket,
    LieConformalPresentation, Speciality,
};
use crate::module::{reduced_module_words, split_null_extension, ModulePresentation};
use crate::poly::Polynomial;
use crate::rewrite::Origin;
use crate::scalar::{format_scalar, int, parse_scalar, Scalar};
use crate::schema::Caps;
use crate::word::{Alphabet, DerivSlot, Gen, Label, OrderSpec, RankClass, TieBreak, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Complete,
    Basis,
    Envelope,
    Speciality,
    Product,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Complete => "complete",
            Task::Basis => "basis",
            Task::Envelope => "envelope",
            Task::Speciality => "speciality",
            Task::Product => "product",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        [
            Task::Complete,
            Task::Basis,
            Task::Envelope,
            Task::Speciality,
            Task::Product,
        ]
        .into_iter()
        .find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderConfig {
    pub rank: Vec<RankClass>,
    pub left: TieBreak,
    pub right: TieBreak,
    pub deriv: DerivSlot,
}

impl Default for OrderConfig {
    fn default() -> Self {
        OrderConfig {
            rank: vec![RankClass::RightMul],
            left: TieBreak::IndexMajor,
            right: TieBreak::IndexMajor,
            deriv: DerivSlot::Lowest,
        }
    }
}

/// `x ∘_n y` operands for the product task.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductQuery {
    pub x: Polynomial,
    pub n: u32,
    pub y: Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresentationFile {
    pub labels: Vec<String>,
    pub parity: Vec<u8>,
    pub locality: Option<LocalityFunction>,
    pub brackets: BTreeMap<(Label, Label), LambdaBracket>,
    pub order: OrderConfig,
    pub caps: Caps,
    /// Largest locality value tried by the speciality search.
    pub max_locality: u32,
    pub task: Option<Task>,
    pub bound: usize,
    pub product: Option<ProductQuery>,
    pub relations: Vec<(String, Polynomial)>,
}

impl PresentationFile {
    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.labels.iter().cloned()).with_parity(self.parity.clone())
    }

    pub fn spec(&self) -> OrderSpec {
        let mut spec = OrderSpec::standard(self.alphabet());
        spec.rank_classes = self.order.rank.clone();
        spec.left = self.order.left;
        spec.right = self.order.right;
        spec.deriv = self.order.deriv;
        spec
    }

    fn require_locality(&self) -> Result<&LocalityFunction> {
        self.locality.as_ref().ok_or_else(|| Error::Parse {
            line: 0,
            column: 0,
            message: "this task needs a [locality] section".into(),
        })
    }

    pub fn lie(&self, locality: LocalityFunction) -> LieConformalPresentation {
        let mut lie = LieConformalPresentation::new(self.spec(), locality);
        lie.brackets = self.brackets.clone();
        lie
    }

    /// `M(X,N)`, or the envelope when brackets are given, plus the extra relations.
    pub fn module_presentation(&self) -> Result<ModulePresentation> {
        let loc = self.require_locality()?.clone();
        let spec = self.spec();
        let mut p = if self.brackets.is_empty() {
            build_mxn(&spec, &loc)
        } else {
            build_envelope(&self.lie(loc))?
        };
        for (name, f) in &self.relations {
            let target = if f.words().all(|w| w.is_operator_word()) {
                &mut p.algebra
            } else {
                &mut p.module
            };
            target.push_polynomial(f, &spec, Origin::Input(name.clone()))?;
        }
        p.validate()?;
        Ok(p)
    }
}

fn perr<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        column,
        message: message.into(),
    })
}

/// A `key = value` line with positions (1-based).
struct Entry {
    line: usize,
    key: String,
    value: String,
    value_col: usize,
}

fn split_sections(source: &str) -> Result<BTreeMap<String, (usize, Vec<Entry>)>> {
    let mut sections: BTreeMap<String, (usize, Vec<Entry>)> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("");
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = text.len() - text.trim_start().len();
        if trimmed.starts_with('[') && trimmed.ends_with(']') && !trimmed.contains('=') {
            let name = trimmed[1..trimmed.len() - 1].trim().to_string();
            if sections.contains_key(&name) {
                return perr(line, indent + 1, format!("duplicate section [{name}]"));
            }
            sections.insert(name.clone(), (line, Vec::new()));
            current = Some(name);
            continue;
        }
        let Some(section) = &current else {
            return perr(line, indent + 1, "entry outside of any section");
        };
        let Some(eq) = text.find('=') else {
            return perr(line, indent + 1, "expected `key = value`");
        };
        let key = text[..eq].trim().to_string();
        let value = text[eq + 1..].trim().to_string();
        let value_col = eq + 2 + (text[eq + 1..].len() - text[eq + 1..].trim_start().len());
        sections
            .get_mut(section)
            .expect("current section")
            .1
            .push(Entry {
                line,
                key,
                value,
                value_col,
            });
    }
    Ok(sections)
}

fn parse_number<T: std::str::FromStr>(e: &Entry, what: &str) -> Result<T> {
    e.value.parse().or_else(|_| {
        perr(
            e.line,
            e.value_col,
            format!("expected {what}, found `{}`", e.value),
        )
    })
}

fn label_of(alphabet: &Alphabet, name: &str, line: usize, col: usize) -> Result<Label> {
    alphabet.label(name.trim()).map_or_else(
        || perr(line, col, format!("undeclared label `{}`", name.trim())),
        Ok,
    )
}

pub fn parse(source: &str) -> Result<PresentationFile> {
    let mut sections = split_sections(source)?;
    let known = [
        "generators",
        "locality",
        "brackets",
        "order",
        "caps",
        "task",
        "relations",
    ];
    if let Some((name, (line, _))) = sections.iter().find(|(n, _)| !known.contains(&n.as_str())) {
        return perr(*line, 1, format!("unknown section [{name}]"));
    }

    // generators
    let (gen_line, gens) = sections.remove("generators").unwrap_or((1, Vec::new()));
    let mut labels = Vec::new();
    let mut parity = Vec::new();
    for e in &gens {
        match e.key.as_str() {
            "labels" => {
                for name in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let ok = name.chars().next().is_some_and(|c| c.is_alphabetic())
                        && name.chars().all(|c| c.is_alphanumeric() || c == '_')
                        && !matches!(name, "d" | "lam" | "L" | "R");
                    if !ok {
                        return perr(e.line, e.value_col, format!("invalid label `{name}`"));
                    }
                    if labels.iter().any(|l| l == name) {
                        return perr(
                            e.line,
                            e.value_col,
                            format!("label `{name}` declared twice"),
                        );
                    }
                    labels.push(name.to_string());
                }
            }
            "parity" => {
                for p in e.value.split(',').map(str::trim) {
                    match p {
                        "0" => parity.push(0),
                        "1" => parity.push(1),
                        _ => {
                            return perr(
                                e.line,
                                e.value_col,
                                format!("parity must be 0 or 1, found `{p}`"),
                            )
                        }
                    }
                }
            }
            k => return perr(e.line, 1, format!("unknown key `{k}` in [generators]")),
        }
    }
    if labels.is_empty() {
        return perr(gen_line, 1, "no generators");
    }
    if parity.is_empty() {
        parity = vec![0; labels.len()];
    }
    if parity.len() != labels.len() {
        return perr(
            gen_line,
            1,
            "parity list length differs from the label list",
        );
    }
    let alphabet = Alphabet::new(labels.iter().cloned()).with_parity(parity.clone());
    let size = labels.len();

    // locality
    let locality = match sections.remove("locality") {
        None => None,
        Some((line, entries)) => {
            let mut values: Vec<Option<u32>> = vec![None; size * size];
            let mut default = None;
            for e in &entries {
                let n: i64 = parse_number(e, "an integer")?;
                if n < 0 {
                    return perr(e.line, e.value_col, "negative locality");
                }
                if e.key == "*" {
                    default = Some(n as u32);
                    continue;
                }
                let Some((a, b)) = e.key.split_once(',') else {
                    return perr(e.line, 1, "expected `a,b = n`");
                };
                let a = label_of(&alphabet, a, e.line, 1)?;
                let b = label_of(&alphabet, b, e.line, 1)?;
                values[(a as usize) * size + b as usize] = Some(n as u32);
            }
            let mut loc = LocalityFunction::constant(size, 0);
            for a in 0..size {
                for b in 0..size {
                    match values[a * size + b].or(default) {
                        Some(v) => loc.set(a as Label, b as Label, v),
                        None => {
                            return perr(
                                line,
                                1,
                                format!("locality of ({},{}) is missing", labels[a], labels[b]),
                            );
                        }
                    }
                }
            }
            Some(loc)
        }
    };

    // brackets
    let mut brackets = BTreeMap::new();
    if let Some((_, entries)) = sections.remove("brackets") {
        for e in &entries {
            let key = e.key.trim();
            let inner = key
                .strip_prefix('[')
                .and_then(|k| k.strip_suffix(']'))
                .and_then(|k| k.split_once(','));
            let Some((a, b)) = inner else {
                return perr(e.line, 1, "expected `[a,b] = expression`");
            };
            let a = label_of(&alphabet, a, e.line, 2)?;
            let b = label_of(&alphabet, b, e.line, 2)?;
            let f = parse_lambda(&e.value, &alphabet, e.line, e.value_col)?;
            brackets.insert((a, b), f);
        }
    }

    // order
    let mut order = OrderConfig::default();
    if let Some((_, entries)) = sections.remove("order") {
        for e in &entries {
            let tie = |v: &str| match v {
                "index-major" => Ok(TieBreak::IndexMajor),
                "label-major" => Ok(TieBreak::LabelMajor),
                _ => perr(
                    e.line,
                    e.value_col,
                    format!("expected index-major or label-major, found `{v}`"),
                ),
            };
            match e.key.as_str() {
                "rank" => {
                    order.rank.clear();
                    if e.value != "none" {
                        for c in e.value.split(',').map(str::trim) {
                            order.rank.push(match c {
                                "right" => RankClass::RightMul,
                                "left" => RankClass::LeftMul,
                                "deriv" => RankClass::Deriv,
                                _ => {
                                    return perr(
                                        e.line,
                                        e.value_col,
                                        format!("unknown rank class `{c}`"),
                                    )
                                }
                            });
                        }
                    }
                }
                "left" => order.left = tie(&e.value)?,
                "right" => order.right = tie(&e.value)?,
                "deriv" => {
                    let v: Vec<&str> = e.value.split_whitespace().collect();
                    order.deriv = match v.as_slice() {
                        ["lowest"] => DerivSlot::Lowest,
                        ["below-left", k] => {
                            DerivSlot::BelowLeftIndex(k.parse().or_else(|_| {
                                perr(e.line, e.value_col, "expected an index after below-left")
                            })?)
                        }
                        _ => {
                            return perr(e.line, e.value_col, "expected `lowest` or `below-left K`")
                        }
                    };
                }
                k => return perr(e.line, 1, format!("unknown key `{k}` in [order]")),
            }
        }
    }

    // caps
    let mut caps = Caps::default();
    let mut max_locality = 3;
    if let Some((_, entries)) = sections.remove("caps") {
        for e in &entries {
            match e.key.as_str() {
                "K" => caps.max_index = parse_number(e, "an index cap")?,
                "D" => caps.max_degree = parse_number(e, "a degree cap")?,
                "KN" => max_locality = parse_number(e, "a locality cap")?,
                k => return perr(e.line, 1, format!("unknown key `{k}` in [caps]")),
            }
        }
    }

    // relations (before the task, which may refer to polynomials)
    let mut relations = Vec::new();
    if let Some((_, entries)) = sections.remove("relations") {
        for e in &entries {
            let p = parse_polynomial(&e.value, &alphabet, e.line, e.value_col)?;
            relations.push((e.key.clone(), p));
        }
    }

    // task
    let mut task = None;
    let mut bound = 4;
    let mut product = ProductQuery {
        x: Polynomial::zero(),
        n: 0,
        y: Polynomial::zero(),
    };
    let mut has_product = false;
    if let Some((_, entries)) = sections.remove("task") {
        for e in &entries {
            match e.key.as_str() {
                "task" => {
                    task = Some(Task::parse(&e.value).map_or_else(
                        || perr(e.line, e.value_col, format!("unknown task `{}`", e.value)),
                        Ok,
                    )?)
                }
                "bound" => bound = parse_number(e, "a bound")?,
                "x" => {
                    product.x = parse_polynomial(&e.value, &alphabet, e.line, e.value_col)?;
                    has_product = true;
                }
                "y" => {
                    product.y = parse_polynomial(&e.value, &alphabet, e.line, e.value_col)?;
                    has_product = true;
                }
                "n" => {
                    product.n = parse_number(e, "an index")?;
                    has_product = true;
                }
                k => return perr(e.line, 1, format!("unknown key `{k}` in [task]")),
            }
        }
    }

    Ok(PresentationFile {
        labels,
        parity,
        locality,
        brackets,
        order,
        caps,
        max_locality,
        task,
        bound,
        product: has_product.then_some(product),
        relations,
    })
}

// ---------- expressions ----------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Scalar),
    Ident(String),
    /// `L{n}[a]` or `R{n}[a]`
    Op(bool, u32, String),
    Sym(char),
}

fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Num(parse_scalar(&s).expect("digits")), col));
        } else if (c == 'L' || c == 'R') && chars.get(i + 1) == Some(&'{') {
            let close = chars[i..].iter().position(|&x| x == '}').map(|p| p + i);
            let Some(close) = close else {
                return perr(line, col, "unterminated index");
            };
            let index: String = chars[i + 2..close].iter().collect();
            let Ok(n) = index.trim().parse::<u32>() else {
                return perr(line, col + 2, format!("invalid index `{index}`"));
            };
            if chars.get(close + 1) != Some(&'[') {
                return perr(line, col0 + close + 1, "expected `[label]`");
            }
            let end = chars[close..]
                .iter()
                .position(|&x| x == ']')
                .map(|p| p + close);
            let Some(end) = end else {
                return perr(line, col0 + close + 1, "unterminated label");
            };
            let label: String = chars[close + 2..end].iter().collect();
            out.push((Tok::Op(c == 'L', n, label.trim().to_string()), col));
            i = end + 1;
        } else if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return perr(line, col, format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

/// Terms keyed by (label, ∂-power, λ-power); `None` label for scalars.
type LambdaTerms = BTreeMap<(Option<Label>, u32, u32), Scalar>;

struct ExprParser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    alphabet: &'a Alphabet,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        perr(self.line, self.col(), message)
    }

    fn expr(&mut self) -> Result<LambdaTerms> {
        let mut acc = LambdaTerms::new();
        let mut first = true;
        loop {
            let negative = match self.peek() {
                Some(Tok::Sym('+')) if !first => {
                    self.pos += 1;
                    false
                }
                Some(Tok::Sym('-')) => {
                    self.pos += 1;
                    true
                }
                _ if first => false,
                _ => break,
            };
            let t = self.term()?;
            for (k, v) in t {
                let e = acc.entry(k).or_insert_with(Scalar::zero);
                if negative {
                    *e -= v;
                } else {
                    *e += v;
                }
            }
            first = false;
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(acc)
    }

    fn term(&mut self) -> Result<LambdaTerms> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('*')) => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = self.multiply(&acc, &f)?;
                }
                Some(Tok::Sym('/')) => {
                    self.pos += 1;
                    let Some(Tok::Num(q)) = self.peek().cloned() else {
                        return self.fail("expected an integer divisor");
                    };
                    if q.is_zero() {
                        return self.fail("division by zero");
                    }
                    self.pos += 1;
                    for v in acc.values_mut() {
                        *v /= &q;
                    }
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::Sym('(')) => {
                    let f = self.power()?;
                    acc = self.multiply(&acc, &f)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn multiply(&self, x: &LambdaTerms, y: &LambdaTerms) -> Result<LambdaTerms> {
        let mut out = LambdaTerms::new();
        for ((la, da, ya), ca) in x {
            for ((lb, db, yb), cb) in y {
                let label = match (la, lb) {
                    (Some(_), Some(_)) => {
                        return self.fail("a bracket must be linear in the generators")
                    }
                    (l, None) | (None, l) => *l,
                };
                *out.entry((label, da + db, ya + yb))
                    .or_insert_with(Scalar::zero) += ca * cb;
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    fn power(&mut self) -> Result<LambdaTerms> {
        let base = self.atom()?;
        if let Some(Tok::Sym('^')) = self.peek() {
            self.pos += 1;
            let Some(Tok::Num(k)) = self.peek().cloned() else {
                return self.fail("expected an exponent");
            };
            self.pos += 1;
            let k: u32 = k
                .to_integer()
                .try_into()
                .or_else(|_| self.fail("exponent too large"))?;
            let mut acc = LambdaTerms::from([((None, 0, 0), Scalar::one())]);
            for _ in 0..k {
                acc = self.multiply(&acc, &base)?;
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<LambdaTerms> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of expression");
        };
        self.pos += 1;
        Ok(match tok {
            Tok::Num(n) => LambdaTerms::from([((None, 0, 0), n)]),
            Tok::Ident(s) if s == "d" => LambdaTerms::from([((None, 1, 0), Scalar::one())]),
            Tok::Ident(s) if s == "lam" => LambdaTerms::from([((None, 0, 1), Scalar::one())]),
            Tok::Ident(s) => match self.alphabet.label(&s) {
                Some(l) => LambdaTerms::from([((Some(l), 0, 0), Scalar::one())]),
                None => {
                    self.pos -= 1;
                    return self.fail(format!("undeclared label `{s}`"));
                }
            },
            Tok::Sym('(') => {
                let e = self.expr()?;
                if self.peek() != Some(&Tok::Sym(')')) {
                    return self.fail("expected `)`");
                }
                self.pos += 1;
                e
            }
            _ => {
                self.pos -= 1;
                return self.fail("unexpected token");
            }
        })
    }
}

/// A λ-bracket such as `(d + 2*lam) v`.
pub fn parse_lambda(
    text: &str,
    alphabet: &Alphabet,
    line: usize,
    col: usize,
) -> Result<LambdaBracket> {
    let toks = tokenize(text, line, col)?;
    let mut p = ExprParser {
        toks,
        pos: 0,
        line,
        end_col: col + text.chars().count(),
        alphabet,
    };
    let terms = p.expr()?;
    if p.pos != p.toks.len() {
        return p.fail("unexpected trailing input");
    }
    let mut out = LambdaBracket::zero();
    for ((label, d, lam), c) in terms {
        match label {
            Some(l) => out.add(l, d, lam, c),
            None if c.is_zero() => {}
            None => return perr(line, col, "every term of a bracket needs a generator"),
        }
    }
    Ok(out)
}

/// Canonical text of a bracket: `2 lam v + d v`, `0` when zero.
pub fn render_lambda(f: &LambdaBracket, alphabet: &Alphabet) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (&(c, d, lam), k)) in f.terms.iter().enumerate() {
        let negative = k.is_negative();
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mag = k.abs();
        if !mag.is_one() {
            let _ = write!(out, "{} ", format_scalar(&mag));
        }
        for (sym, e) in [("d", d), ("lam", lam)] {
            match e {
                0 => {}
                1 => {
                    let _ = write!(out, "{sym} ");
                }
                e => {
                    let _ = write!(out, "{sym}^{e} ");
                }
            }
        }
        out.push_str(&alphabet.labels[c as usize]);
    }
    out
}

/// A polynomial in module or operator words: `2 L{1}[v] d^2 v - 1/2 d v`.
pub fn parse_polynomial(
    text: &str,
    alphabet: &Alphabet,
    line: usize,
    col: usize,
) -> Result<Polynomial> {
    let toks = tokenize(text, line, col)?;
    let mut out = Polynomial::zero();
    let mut i = 0;
    let at = |i: usize| toks.get(i).map_or(col + text.chars().count(), |t| t.1);
    if toks.is_empty() {
        return perr(line, col, "empty polynomial");
    }
    if toks.len() == 1 && toks[0].0 == Tok::Num(Scalar::zero()) {
        return Ok(out);
    }
    let mut first = true;
    while i < toks.len() {
        let mut c = int(1);
        match &toks[i].0 {
            Tok::Sym('+') if !first => i += 1,
            Tok::Sym('-') => {
                c = int(-1);
                i += 1;
            }
            _ if first => {}
            _ => return perr(line, at(i), "expected `+` or `-`"),
        }
        first = false;
        if let Some((Tok::Num(n), _)) = toks.get(i) {
            c *= n;
            i += 1;
            if let Some((Tok::Sym('/'), _)) = toks.get(i) {
                let Some((Tok::Num(q), _)) = toks.get(i + 1) else {
                    return perr(line, at(i + 1), "expected a denominator");
                };
                if q.is_zero() {
                    return perr(line, at(i + 1), "division by zero");
                }
                c /= q;
                i += 2;
            }
        }
        let mut letters = Vec::new();
        while let Some((tok, tcol)) = toks.get(i) {
            match tok {
                Tok::Ident(s) if s == "d" => {
                    let mut k = 1;
                    if let Some((Tok::Sym('^'), _)) = toks.get(i + 1) {
                        let Some((Tok::Num(e), _)) = toks.get(i + 2) else {
                            return perr(line, at(i + 2), "expected an exponent");
                        };
                        k = e
                            .to_integer()
                            .try_into()
                            .or_else(|_| perr(line, at(i + 2), "exponent too large"))?;
                        i += 2;
                    }
                    letters.extend(std::iter::repeat_n(Gen::Deriv, k));
                }
                Tok::Op(left, n, a) => {
                    let a = label_of(alphabet, a, line, *tcol)?;
                    letters.push(if *left {
                        Gen::Left(*n, a)
                    } else {
                        Gen::Right(*n, a)
                    });
                }
                Tok::Ident(s) => letters.push(Gen::Module(label_of(alphabet, s, line, *tcol)?)),
                _ => break,
            }
            i += 1;
        }
        if letters.is_empty() && c.is_one() && toks.get(i).is_some() {
            return perr(line, at(i), "expected a word");
        }
        out.add_term(Word(letters), c);
    }
    Ok(out)
}

/// Canonical text of a whole file; `parse(render(p)) == p`.
pub fn render(p: &PresentationFile) -> String {
    let alphabet = p.alphabet();
    let spec = p.spec();
    let mut out = String::new();
    let _ = writeln!(out, "[generators]\nlabels = {}", p.labels.join(", "));
    let parity: Vec<String> = p.parity.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "parity = {}", parity.join(", "));
    if let Some(loc) = &p.locality {
        out.push_str("\n[locality]\n");
        for a in 0..p.labels.len() {
            for b in 0..p.labels.len() {
                let _ = writeln!(
                    out,
                    "{},{} = {}",
                    p.labels[a],
                    p.labels[b],
                    loc.get(a as Label, b as Label)
                );
            }
        }
    }
    if !p.brackets.is_empty() {
        out.push_str("\n[brackets]\n");
        for (&(a, b), f) in &p.brackets {
            let _ = writeln!(
                out,
                "[{},{}] = {}",
                p.labels[a as usize],
                p.labels[b as usize],
                render_lambda(f, &alphabet)
            );
        }
    }
    out.push_str("\n[order]\n");
    let rank: Vec<&str> = p
        .order
        .rank
        .iter()
        .map(|r| match r {
            RankClass::RightMul => "right",
            RankClass::LeftMul => "left",
            RankClass::Deriv => "deriv",
            RankClass::ModuleGen => "module",
        })
        .collect();
    let _ = writeln!(
        out,
        "rank = {}",
        if rank.is_empty() {
            "none".to_string()
        } else {
            rank.join(", ")
        }
    );
    let tie = |t: TieBreak| match t {
        TieBreak::IndexMajor => "index-major",
        TieBreak::LabelMajor => "label-major",
    };
    let _ = writeln!(
        out,
        "left = {}\nright = {}",
        tie(p.order.left),
        tie(p.order.right)
    );
    match p.order.deriv {
        DerivSlot::Lowest => out.push_str("deriv = lowest\n"),
        DerivSlot::BelowLeftIndex(k) => {
            let _ = writeln!(out, "deriv = below-left {k}");
        }
    }
    let _ = writeln!(
        out,
        "\n[caps]\nK = {}\nD = {}\nKN = {}",
        p.caps.max_index, p.caps.max_degree, p.max_locality
    );
    out.push_str("\n[task]\n");
    if let Some(t) = p.task {
        let _ = writeln!(out, "task = {}", t.name());
    }
    let _ = writeln!(out, "bound = {}", p.bound);
    if let Some(q) = &p.product {
        let _ = writeln!(
            out,
            "x = {}\nn = {}\ny = {}",
            q.x.render(&spec),
            q.n,
            q.y.render(&spec)
        );
    }
    if !p.relations.is_empty() {
        out.push_str("\n[relations]\n");
        for (name, f) in &p.relations {
            let _ = writeln!(out, "{name} = {}", f.render(&spec));
        }
    }
    out
}

// ---------- tasks ----------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// Saturation left the answer undetermined.
    Undetermined,
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Done => 0,
            Status::Undetermined => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResultReport {
    pub task: Task,
    /// Deterministic body.
    pub lines: Vec<String>,
    /// One `kind | w | outcome` line per examined composition.
    pub trace: Vec<String>,
    pub status: Status,
    pub elapsed: Duration,
}

impl ResultReport {
    /// Body followed by the timing line.
    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        let _ = writeln!(out, "time: {} ms", self.elapsed.as_millis());
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub max_index: Option<u32>,
    pub max_degree: Option<usize>,
    pub bound: Option<usize>,
}

/// Wall clock; absent on wasm32, where `Instant::now` panics.
struct Clock(#[cfg_attr(target_arch = "wasm32", allow(dead_code))] Option<Instant>);

impl Clock {
    fn start() -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        return Clock(Some(Instant::now()));
        #[cfg(target_arch = "wasm32")]
        return Clock(None);
    }

    fn elapsed(&self) -> Duration {
        self.0.map_or(Duration::ZERO, |t| t.elapsed())
    }
}

fn render_trace(entries: &[TraceEntry], spec: &OrderSpec) -> Vec<String> {
    entries.iter().map(|t| t.render(spec)).collect()
}

fn speciality_line(s: &Speciality, spec: &OrderSpec) -> String {
    match s {
        Speciality::Special => "speciality: special".into(),
        Speciality::NotSpecial(w) => {
            format!("speciality: not special (witness {})", w.render(spec))
        }
        Speciality::Undetermined(why) => format!("speciality: undetermined ({why})"),
    }
}

fn render_locality(loc: &LocalityFunction, labels: &[String]) -> String {
    let mut parts = Vec::new();
    for a in 0..labels.len() {
        for b in 0..labels.len() {
            parts.push(format!(
                "{},{}={}",
                labels[a],
                labels[b],
                loc.get(a as Label, b as Label)
            ));
        }
    }
    parts.join(" ")
}

/// Runs the file's task (or `task` when given).
pub fn run(
    file: &PresentationFile,
    task: Option<Task>,
    overrides: Overrides,
) -> Result<ResultReport> {
    let start = Clock::start();
    let task = task.or(file.task).ok_or_else(|| Error::Parse {
        line: 0,
        column: 0,
        message: "no task given".into(),
    })?;
    let mut caps = file.caps;
    if let Some(k) = overrides.max_index {
        caps.max_index = k;
    }
    if let Some(d) = overrides.max_degree {
        caps.max_degree = d;
    }
    let bound = overrides.bound.unwrap_or(file.bound);
    let opts = CompletionOptions::new(caps);
    let spec = file.spec();
    let mut lines = vec![
        format!("task: {}", task.name()),
        format!("generators: {}", file.labels.join(", ")),
        format!("caps: K={} D={}", caps.max_index, caps.max_degree),
    ];
    if let Some(loc) = &file.locality {
        lines.push(format!("locality: {}", render_locality(loc, &file.labels)));
    }
    let mut trace = Vec::new();
    let mut status = Status::Done;

    match task {
        Task::Complete | Task::Basis => {
            let p = file.module_presentation()?;
            if !p.module.rules.is_empty() {
                lines.push(format!("module rules ({}):", p.module.rules.len()));
                lines.extend(
                    p.module
                        .rules
                        .iter()
                        .map(|r| format!("  {}", r.polynomial().render(&spec))),
                );
            }
            let input = split_null_extension(&p)?;
            let c = complete(&input, &opts);
            let stable = is_cap_stable(&input, &opts, &c);
            lines.push(format!("new rules ({}):", c.new_rules.len()));
            lines.extend(
                c.new_rules
                    .iter()
                    .map(|r| format!("  {}", r.polynomial().render(&spec))),
            );
            lines.push(format!(
                "compositions examined: {}",
                c.report.compositions_examined
            ));
            lines.push(format!("withdrawn: {}", c.report.withdrawn));
            lines.push(format!(
                "saturation: {}",
                if c.report.truncated {
                    "truncated".to_string()
                } else if c.report.rules_beyond_caps.is_empty() {
                    "clean".to_string()
                } else {
                    format!("{} rules beyond caps", c.report.rules_beyond_caps.len())
                }
            ));
            lines.push(format!("cap-stable: {}", if stable { "yes" } else { "no" }));
            if !c.report.is_clean() || !stable {
                status = Status::Undetermined;
            }
            if task == Task::Basis {
                let mut rules = p.rule_set()?;
                for r in &c.new_rules {
                    rules.add_rule(r.clone());
                }
                let words = reduced_module_words(&rules, bound, caps.max_index);
                lines.push(format!(
                    "basis words up to length {bound} ({}):",
                    words.len()
                ));
                lines.extend(words.iter().map(|w| format!("  {}", spec.render(w))));
            }
            trace = render_trace(&c.trace, &spec);
        }
        Task::Envelope => {
            if file.brackets.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    column: 0,
                    message: "the envelope task needs a [brackets] section".into(),
                });
            }
            let lie = file.lie(file.require_locality()?.clone());
            for ((a, b), f) in &lie.brackets {
                let g = lambda_to_coeffs(f);
                for (n, comb) in g.iter().enumerate() {
                    if comb.is_empty() {
                        continue;
                    }
                    let p = Polynomial::from_terms(comb.iter().map(|(c, k, x)| {
                        let mut w = vec![Gen::Deriv; *k as usize];
                        w.push(Gen::Module(*c));
                        (x.clone(), Word(w))
                    }));
                    lines.push(format!(
                        "[{} {n} {}] = {}",
                        file.labels[*a as usize],
                        file.labels[*b as usize],
                        p.render(&spec)
                    ));
                }
            }
            let r = envelope(&lie, &opts, bound)?;
            lines.push(format!(
                "commutator rules ({}):",
                r.presentation.module.rules.len()
            ));
            lines.extend(
                r.presentation
                    .module
                    .rules
                    .iter()
                    .map(|x| format!("  {}", x.polynomial().render(&spec))),
            );
            lines.push(format!("new rules ({}):", r.completion.new_rules.len()));
            lines.extend(
                r.completion
                    .new_rules
                    .iter()
                    .map(|x| format!("  {}", x.polynomial().render(&spec))),
            );
            lines.push(format!(
                "compositions examined: {}",
                r.completion.report.compositions_examined
            ));
            lines.push(format!(
                "cap-stable: {}",
                if r.cap_stable { "yes" } else { "no" }
            ));
            lines.push(speciality_line(&r.speciality, &spec));
            lines.push(format!(
                "basis words up to length {bound} ({}):",
                r.basis.len()
            ));
            lines.extend(r.basis.iter().map(|w| format!("  {}", spec.render(w))));
            if matches!(r.speciality, Speciality::Undetermined(_)) {
                status = Status::Undetermined;
            }
            trace = render_trace(&r.completion.trace, &spec);
        }
        Task::Speciality => {
            let base = file.lie(LocalityFunction::constant(file.labels.len(), 0));
            let results = match &file.locality {
                Some(loc) => {
                    let mut l = base.clone();
                    l.locality = loc.clone();
                    vec![(loc.clone(), envelope(&l, &opts, 1)?.speciality)]
                }
                None => search_localities(&base, file.max_locality, &opts)?,
            };
            for (loc, s) in &results {
                lines.push(format!(
                    "{} : {}",
                    render_locality(loc, &file.labels),
                    s.label()
                ));
            }
            let verdict =
                if let Some((loc, _)) = results.iter().find(|(_, s)| *s == Speciality::Special) {
                    format!(
                        "verdict: special (N: {})",
                        render_locality(loc, &file.labels)
                    )
                } else if results
                    .iter()
                    .all(|(_, s)| matches!(s, Speciality::NotSpecial(_)))
                {
                    "verdict: not special for every N tried".to_string()
                } else {
                    status = Status::Undetermined;
                    "verdict: undetermined".to_string()
                };
            if results.len() == 1 {
                lines.push(speciality_line(&results[0].1, &spec));
            }
            lines.push(verdict);
        }
        Task::Product => {
            let q = file.product.as_ref().ok_or_else(|| Error::Parse {
                line: 0,
                column: 0,
                message: "the product task needs x, n and y in [task]".into(),
            })?;
            let loc = file.require_locality()?.clone();
            let p = file.module_presentation()?;
            let c = complete(&split_null_extension(&p)?, &opts);
            let mut closed = p.clone();
            closed.module.rules.extend(c.new_rules.iter().cloned());
            let alg = ConformalAlgebra::from_presentation(&closed, loc, caps.max_index)?;
            let x = alg.normal_form(&q.x);
            let y = alg.normal_form(&q.y);
            let z = alg.product(&x, q.n, &y)?;
            lines.push(format!("x = {}", x.render(&spec)));
            lines.push(format!("y = {}", y.render(&spec)));
            lines.push(format!("x o{} y = {}", q.n, z.render(&spec)));
            if !c.report.is_clean() {
                status = Status::Undetermined;
            }
        }
    }
    Ok(ResultReport {
        task,
        lines,
        trace,
        status,
        elapsed: start.elapsed(),
    })
}
