//! Elements of the free associative algebra over exact rationals.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_scalar, Scalar};
use crate::word::{Alphabet, Gen, OrderSpec, Word};

/// Finite map word → nonzero scalar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Word, Scalar>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(w: Word) -> Self {
        Self::term(Scalar::one(), w)
    }

    pub fn term(c: Scalar, w: Word) -> Self {
        let mut p = Self::zero();
        p.add_term(w, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Scalar, Word)>) -> Self {
        let mut p = Self::zero();
        for (c, w) in terms {
            p.add_term(w, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> Scalar {
        self.terms.get(w).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.terms.keys()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Word, Scalar)> {
        self.terms.into_iter()
    }

    pub fn add_term(&mut self, w: Word, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Polynomial, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (w, d) in &other.terms {
            self.add_term(w.clone(), d * c);
        }
    }

    pub fn scale(&self, c: &Scalar) -> Polynomial {
        let mut out = Polynomial::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-Scalar::one())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(other, &-Scalar::one());
        out
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.add_scaled(other, &Scalar::one());
        out
    }

    /// `prefix · self · suffix`
    pub fn wrap(&self, prefix: &[Gen], suffix: &[Gen]) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.wrap(prefix, suffix), c.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (u, c) in &self.terms {
            for (v, d) in &other.terms {
                out.add_term(u.concat(v), c * d);
            }
        }
        out
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn max_index(&self) -> u32 {
        self.terms.keys().map(Word::max_index).max().unwrap_or(0)
    }

    /// The ≺-greatest word and its coefficient.
    pub fn leading(&self, spec: &OrderSpec) -> Result<(Word, Scalar)> {
        self.terms
            .iter()
            .max_by(|a, b| spec.cmp_words(a.0, b.0))
            .map(|(w, c)| (w.clone(), c.clone()))
            .ok_or(Error::ZeroPolynomial)
    }

    pub fn leading_word(&self, spec: &OrderSpec) -> Result<Word> {
        self.leading(spec).map(|(w, _)| w)
    }

    pub fn make_monic(&self, spec: &OrderSpec) -> Result<Polynomial> {
        let (_, c) = self.leading(spec)?;
        Ok(self.scale(&c.recip()))
    }

    /// Terms sorted by ≺, greatest first.
    pub fn sorted_terms<'a>(&'a self, spec: &OrderSpec) -> Vec<(&'a Word, &'a Scalar)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| spec.cmp_words(b.0, a.0));
        v
    }

    /// Canonical text, greatest word first: `L{1}[v] v - 1/2 d v`.
    pub fn render(&self, spec: &OrderSpec) -> String {
        render_terms(&spec.alphabet, self.sorted_terms(spec))
    }
}

pub(crate) fn render_terms<'a>(
    alphabet: &Alphabet,
    terms: impl IntoIterator<Item = (&'a Word, &'a Scalar)>,
) -> String {
    let mut out = String::new();
    for (i, (w, c)) in terms.into_iter().enumerate() {
        let negative = c.is_negative();
        let magnitude = c.abs();
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        if w.is_empty() {
            out.push_str(&format_scalar(&magnitude));
        } else {
            if !magnitude.is_one() {
                out.push_str(&format_scalar(&magnitude));
                out.push(' ');
            }
            out.push_str(&alphabet.render_word(w));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn spec() -> OrderSpec {
        OrderSpec::standard(Alphabet::new(["v", "h"]))
    }

    #[test]
    fn leading_and_monic() {
        let spec = spec();
        let v = Gen::Module(0);
        let h = Gen::Module(1);
        // R_0^v h - L_0^h v + d L_1^h v: R-degree ranks first
        let p = Polynomial::from_terms([
            (int(1), Word::new(vec![Gen::Right(0, 0), h])),
            (int(-1), Word::new(vec![Gen::Left(0, 1), v])),
            (int(1), Word::new(vec![Gen::Deriv, Gen::Left(1, 1), v])),
        ]);
        assert_eq!(
            p.leading(&spec).unwrap(),
            (Word::new(vec![Gen::Right(0, 0), h]), int(1))
        );
        let q = Polynomial::from_terms([
            (int(1), Word::new(vec![Gen::Left(1, 0), v])),
            (int(-1), Word::new(vec![v])),
        ]);
        assert_eq!(
            q.leading_word(&spec).unwrap(),
            Word::new(vec![Gen::Left(1, 0), v])
        );
        let single = Polynomial::term(ratio(3, 2), Word::new(vec![v]));
        assert_eq!(single.leading(&spec).unwrap().1, ratio(3, 2));
        assert_eq!(
            Polynomial::zero().leading(&spec),
            Err(Error::ZeroPolynomial)
        );
        assert_eq!(
            Polynomial::zero().make_monic(&spec),
            Err(Error::ZeroPolynomial)
        );

        let u = Word::new(vec![Gen::Left(2, 0), v]);
        let w = Word::new(vec![Gen::Left(0, 0), v]);
        let r = Polynomial::from_terms([(int(2), u.clone()), (int(-4), w.clone())]);
        let m = r.make_monic(&spec).unwrap();
        assert_eq!(
            m,
            Polynomial::from_terms([(int(1), u.clone()), (int(-2), w)])
        );
        assert_eq!(m.make_monic(&spec).unwrap(), m);
        let neg = Polynomial::term(int(-1), u.clone());
        assert_eq!(neg.make_monic(&spec).unwrap(), Polynomial::monomial(u));
    }

    #[test]
    fn canonical_storage() {
        let w = Word::new(vec![Gen::Deriv]);
        let mut p = Polynomial::term(int(2), w.clone());
        p.add_term(w.clone(), int(-2));
        assert!(p.is_zero());
        p.add_term(w, int(0));
        assert!(p.is_zero());
    }

    #[test]
    fn rendering() {
        let spec = spec();
        let v = Gen::Module(0);
        let p = Polynomial::from_terms([
            (ratio(-1, 2), Word::new(vec![Gen::Deriv, v])),
            (int(1), Word::new(vec![Gen::Left(1, 0), v])),
            (int(3), Word::empty()),
        ]);
        assert_eq!(p.render(&spec), "L{1}[v] v - 1/2 d v + 3");
        assert_eq!(Polynomial::zero().render(&spec), "0");
    }
}
