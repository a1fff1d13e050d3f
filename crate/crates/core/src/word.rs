//! Generators, words and the configurable monomial order.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type Label = u32;

/// One letter of the operator/module alphabet `Z = O ∪ X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    /// The derivation `∂`.
    Deriv,
    /// `L_n^a`: left multiplication by the generator `a` at index `n`.
    Left(u32, Label),
    /// `R_n^a`: right multiplication.
    Right(u32, Label),
    /// A module generator `x ∈ X`.
    Module(Label),
    /// A free-form generator for presentations that are not conformal.
    Plain(u32),
}

impl Gen {
    pub fn index(&self) -> Option<u32> {
        match *self {
            Gen::Left(n, _) | Gen::Right(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn label(&self) -> Option<Label> {
        match *self {
            Gen::Left(_, a) | Gen::Right(_, a) | Gen::Module(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_module(&self) -> bool {
        matches!(self, Gen::Module(_))
    }
}

/// A finite (possibly empty) sequence of generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Gen>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: impl Into<Vec<Gen>>) -> Self {
        Word(letters.into())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    /// `prefix · self · suffix`
    pub fn wrap(&self, prefix: &[Gen], suffix: &[Gen]) -> Word {
        let mut letters = Vec::with_capacity(prefix.len() + self.len() + suffix.len());
        letters.extend_from_slice(prefix);
        letters.extend_from_slice(&self.0);
        letters.extend_from_slice(suffix);
        Word(letters)
    }

    /// Exactly one module generator, in terminal position.
    pub fn is_module_word(&self) -> bool {
        match self.0.split_last() {
            Some((last, init)) => last.is_module() && !init.iter().any(Gen::is_module),
            None => false,
        }
    }

    pub fn is_operator_word(&self) -> bool {
        !self.0.iter().any(Gen::is_module)
    }

    pub fn max_index(&self) -> u32 {
        self.0.iter().filter_map(Gen::index).max().unwrap_or(0)
    }

    /// Positions at which `factor` occurs.
    pub fn occurrences<'a>(&'a self, factor: &'a [Gen]) -> impl Iterator<Item = usize> + 'a {
        let n = factor.len();
        (0..=self.len().saturating_sub(n))
            .filter(move |&i| n <= self.len() && &self.0[i..i + n] == factor)
    }

    pub fn contains_factor(&self, factor: &[Gen]) -> bool {
        self.occurrences(factor).next().is_some()
    }
}

impl Deref for Word {
    type Target = [Gen];
    fn deref(&self) -> &[Gen] {
        &self.0
    }
}

impl From<Vec<Gen>> for Word {
    fn from(v: Vec<Gen>) -> Self {
        Word(v)
    }
}

/// Declared generator names: the well-ordered label set `X` (declaration
/// order is the well-order), parities, and free-form names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    pub labels: Vec<String>,
    pub parity: Vec<u8>,
    pub plain: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let parity = vec![0; labels.len()];
        Alphabet {
            labels,
            parity,
            plain: Vec::new(),
        }
    }

    pub fn with_plain<S: Into<String>>(mut self, plain: impl IntoIterator<Item = S>) -> Self {
        self.plain = plain.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_parity(mut self, parity: Vec<u8>) -> Self {
        assert_eq!(parity.len(), self.labels.len());
        self.parity = parity;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, name: &str) -> Option<Label> {
        self.labels
            .iter()
            .position(|l| l == name)
            .map(|i| i as Label)
    }

    pub fn parity(&self, a: Label) -> u8 {
        self.parity.get(a as usize).copied().unwrap_or(0)
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        0..self.labels.len() as Label
    }

    pub fn check(&self, g: &Gen) -> Result<()> {
        match *g {
            Gen::Left(_, a) | Gen::Right(_, a) | Gen::Module(a)
                if a as usize >= self.labels.len() =>
            {
                Err(Error::UnknownLabel(a))
            }
            Gen::Plain(i) if i as usize >= self.plain.len() => Err(Error::UnknownPlain(i)),
            _ => Ok(()),
        }
    }

    fn name(&self, a: Label) -> &str {
        self.labels
            .get(a as usize)
            .map(String::as_str)
            .unwrap_or("?")
    }

    /// `d^s L{n}[a] R{m}[b] x`; the empty word renders as `1`.
    pub fn render_word(&self, w: &[Gen]) -> String {
        if w.is_empty() {
            return "1".to_string();
        }
        let mut out = String::new();
        let mut i = 0;
        while i < w.len() {
            if !out.is_empty() {
                out.push(' ');
            }
            match w[i] {
                Gen::Deriv => {
                    let run = w[i..].iter().take_while(|g| **g == Gen::Deriv).count();
                    if run == 1 {
                        out.push('d');
                    } else {
                        let _ = write!(out, "d^{run}");
                    }
                    i += run;
                    continue;
                }
                Gen::Left(n, a) => {
                    let _ = write!(out, "L{{{n}}}[{}]", self.name(a));
                }
                Gen::Right(n, a) => {
                    let _ = write!(out, "R{{{n}}}[{}]", self.name(a));
                }
                Gen::Module(a) => out.push_str(self.name(a)),
                Gen::Plain(p) => out.push_str(
                    self.plain
                        .get(p as usize)
                        .map(String::as_str)
                        .unwrap_or("?"),
                ),
            }
            i += 1;
        }
        out
    }
}

/// Generator classes that can be counted ahead of the deg-lex comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankClass {
    ModuleGen,
    RightMul,
    LeftMul,
    Deriv,
}

impl RankClass {
    fn counts(&self, g: &Gen) -> bool {
        matches!(
            (self, g),
            (RankClass::ModuleGen, Gen::Module(_))
                | (RankClass::RightMul, Gen::Right(..))
                | (RankClass::LeftMul, Gen::Left(..))
                | (RankClass::Deriv, Gen::Deriv)
        )
    }
}

/// How two `L` (or two `R`) letters compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// `L_n^a < L_m^b` iff `n < m`, or `n = m` and `a < b`.
    IndexMajor,
    /// `L_n^a < L_m^b` iff `a < b`, or `a = b` and `n < m`.
    LabelMajor,
}

/// Where `∂` sits in the letter precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivSlot {
    /// Below every other letter.
    Lowest,
    /// Just below `L_k` of the least label, above `L_{k-1}`:
    /// `BelowLeftIndex(2)` gives `L_0 < L_1 < ∂ < L_2 < ...`.
    BelowLeftIndex(u32),
}

/// A monomial order: counts of the rank classes first, then deg-lex over
/// the letter precedence `∂ ? L < R < plain < X`. With `module_extension`
/// the number of module generators is ranked before everything, which
/// puts all operator words below all module words and compares `ux`, `vy`
/// by `u` against `v`, then `x` against `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSpec {
    pub alphabet: Alphabet,
    pub rank_classes: Vec<RankClass>,
    pub left: TieBreak,
    pub right: TieBreak,
    pub deriv: DerivSlot,
    pub module_extension: bool,
}

pub type LetterKey = (u64, u64, u64);

impl OrderSpec {
    /// R-degree first, then deg-lex with `∂ < L_n^a < R_m^b`, indices
    /// before labels.
    pub fn standard(alphabet: Alphabet) -> Self {
        OrderSpec {
            alphabet,
            rank_classes: vec![RankClass::RightMul],
            left: TieBreak::IndexMajor,
            right: TieBreak::IndexMajor,
            deriv: DerivSlot::Lowest,
            module_extension: true,
        }
    }

    /// Plain deg-lex, nothing ranked.
    pub fn deglex(alphabet: Alphabet) -> Self {
        OrderSpec {
            rank_classes: Vec::new(),
            module_extension: false,
            ..Self::standard(alphabet)
        }
    }

    pub fn with_left(mut self, left: TieBreak) -> Self {
        self.left = left;
        self
    }

    pub fn with_deriv(mut self, deriv: DerivSlot) -> Self {
        self.deriv = deriv;
        self
    }

    pub fn letter_key(&self, g: &Gen) -> LetterKey {
        let (n, a) = match *g {
            Gen::Left(n, a) | Gen::Right(n, a) => (n as u64, a as u64),
            _ => (0, 0),
        };
        match *g {
            Gen::Deriv => match self.deriv {
                DerivSlot::Lowest => (0, 0, 0),
                DerivSlot::BelowLeftIndex(k) => match self.left {
                    TieBreak::IndexMajor => (1, 2 * k as u64, 0),
                    TieBreak::LabelMajor => (1, 0, 2 * k as u64),
                },
            },
            Gen::Left(..) => match self.left {
                TieBreak::IndexMajor => (1, 2 * n + 1, a),
                TieBreak::LabelMajor => (1, a, 2 * n + 1),
            },
            Gen::Right(..) => match self.right {
                TieBreak::IndexMajor => (2, n, a),
                TieBreak::LabelMajor => (2, a, n),
            },
            Gen::Plain(i) => (3, i as u64, 0),
            Gen::Module(x) => (4, x as u64, 0),
        }
    }

    pub fn compare_letters(&self, g: &Gen, h: &Gen) -> Ordering {
        self.letter_key(g).cmp(&self.letter_key(h))
    }

    /// Totally ordered encoding of a word: comparing keys compares words.
    pub fn key(&self, w: &[Gen]) -> Vec<u64> {
        let mut key = Vec::with_capacity(self.rank_classes.len() + 2 + 3 * w.len());
        if self.module_extension {
            key.push(w.iter().filter(|g| g.is_module()).count() as u64);
        }
        for class in &self.rank_classes {
            key.push(w.iter().filter(|g| class.counts(g)).count() as u64);
        }
        key.push(w.len() as u64);
        for g in w {
            let (c, x, y) = self.letter_key(g);
            key.extend([c, x, y]);
        }
        key
    }

    pub fn cmp_words(&self, u: &[Gen], v: &[Gen]) -> Ordering {
        self.key(u).cmp(&self.key(v))
    }

    /// Checked comparison: every letter must belong to the declared alphabet.
    pub fn compare(&self, u: &[Gen], v: &[Gen]) -> Result<Ordering> {
        for g in u.iter().chain(v) {
            self.alphabet.check(g)?;
        }
        Ok(self.cmp_words(u, v))
    }

    /// Compares two words of `O^# X`.
    pub fn compare_module_words(&self, ux: &Word, vy: &Word) -> Result<Ordering> {
        for w in [ux, vy] {
            if !w.is_module_word() {
                return Err(Error::NotModuleWord(self.alphabet.render_word(w)));
            }
        }
        self.compare(ux, vy)
    }

    /// Smallest `n` with `L_n^a` above `∂`; every larger index is above too.
    pub fn deriv_threshold(&self, a: Label) -> u32 {
        match (self.deriv, self.left) {
            (DerivSlot::Lowest, _) => 0,
            (DerivSlot::BelowLeftIndex(k), TieBreak::IndexMajor) => k,
            (DerivSlot::BelowLeftIndex(k), TieBreak::LabelMajor) => {
                if a == 0 {
                    k
                } else {
                    0
                }
            }
        }
    }

    pub fn render(&self, w: &[Gen]) -> String {
        self.alphabet.render_word(w)
    }
}
