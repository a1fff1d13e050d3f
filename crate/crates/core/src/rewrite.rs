//! Rewrite rules, single-step reduction and normal forms with replayable
//! certificates.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::Scalar;
use crate::schema::{Caps, RelationSchema};
use crate::word::{Gen, OrderSpec, Word};

/// Where a rule came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    Family {
        name: String,
        params: Vec<i64>,
        tail: Option<Word>,
    },
    Input(String),
    /// Admitted by completion, numbered in admission order.
    Added(usize),
}

impl Origin {
    pub fn family_name(&self) -> &str {
        match self {
            Origin::Family { name, .. } => name,
            Origin::Input(name) => name,
            Origin::Added(_) => "added",
        }
    }
}

/// `pattern → remainder`, standing for the monic polynomial
/// `pattern - remainder` whose leading word is `pattern`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub pattern: Word,
    pub remainder: Polynomial,
    pub origin: Origin,
}

impl Rule {
    pub fn from_polynomial(p: &Polynomial, spec: &OrderSpec, origin: Origin) -> Result<Rule> {
        let monic = p.make_monic(spec)?;
        let (pattern, _) = monic.leading(spec)?;
        let mut remainder = monic;
        remainder.add_term(pattern.clone(), -Scalar::one());
        Ok(Rule {
            pattern,
            remainder: remainder.neg(),
            origin,
        })
    }

    pub fn polynomial(&self) -> Polynomial {
        let mut p = self.remainder.neg();
        p.add_term(self.pattern.clone(), Scalar::one());
        p
    }

    /// Every word of the remainder is ≺ the pattern.
    pub fn is_oriented(&self, spec: &OrderSpec) -> bool {
        self.remainder
            .words()
            .all(|w| spec.cmp_words(w, &self.pattern) == std::cmp::Ordering::Less)
    }
}

/// One rewriting step `coeff · prefix · (pattern - remainder) · suffix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub rule: Rule,
    pub prefix: Word,
    pub suffix: Word,
    pub coeff: Scalar,
}

impl Step {
    pub fn context_word(&self) -> Word {
        self.rule.pattern.wrap(&self.prefix, &self.suffix)
    }
}

/// The steps taken by a normal-form computation: `f - nf(f)` equals the sum
/// of the step polynomials.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Certificate {
    pub steps: Vec<Step>,
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `Σ coeff · prefix · rule · suffix`
    pub fn replay(&self) -> Polynomial {
        let mut total = Polynomial::zero();
        for s in &self.steps {
            total.add_scaled(&s.rule.polynomial().wrap(&s.prefix, &s.suffix), &s.coeff);
        }
        total
    }

    /// Checks `f - result = replay()`.
    pub fn verifies(&self, f: &Polynomial, result: &Polynomial) -> bool {
        f.sub(result) == self.replay()
    }
}

/// A set of rewrite rules: lazily matched families plus concrete rules.
///
/// Rule selection at a word: the leftmost reducible position, the longest
/// pattern there, ties broken by insertion order.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub spec: OrderSpec,
    schemas: Vec<(usize, RelationSchema)>,
    rules: Vec<(usize, Option<Rule>)>,
    by_first: HashMap<Gen, Vec<usize>>,
    next_seq: usize,
}

impl RuleSet {
    pub fn new(spec: OrderSpec) -> Self {
        RuleSet {
            spec,
            schemas: Vec::new(),
            rules: Vec::new(),
            by_first: HashMap::new(),
            next_seq: 0,
        }
    }

    pub fn add_schema(&mut self, s: RelationSchema) -> Result<()> {
        s.validate()?;
        self.schemas.push((self.next_seq, s));
        self.next_seq += 1;
        Ok(())
    }

    /// Adds a concrete rule and returns its slot.
    pub fn add_rule(&mut self, r: Rule) -> usize {
        let slot = self.rules.len();
        if let Some(&g) = r.pattern.first() {
            self.by_first.entry(g).or_default().push(slot);
        }
        self.rules.push((self.next_seq, Some(r)));
        self.next_seq += 1;
        slot
    }

    pub fn add_polynomial(&mut self, p: &Polynomial, origin: Origin) -> Result<usize> {
        let r = Rule::from_polynomial(p, &self.spec, origin)?;
        Ok(self.add_rule(r))
    }

    pub fn deactivate(&mut self, slot: usize) -> Option<Rule> {
        self.rules[slot].1.take()
    }

    pub fn rule(&self, slot: usize) -> Option<&Rule> {
        self.rules.get(slot).and_then(|(_, r)| r.as_ref())
    }

    pub fn schemas(&self) -> impl Iterator<Item = &RelationSchema> {
        self.schemas.iter().map(|(_, s)| s)
    }

    /// Active concrete rules with their slots.
    pub fn concrete(&self) -> impl Iterator<Item = (usize, &Rule)> {
        self.rules
            .iter()
            .enumerate()
            .filter_map(|(i, (_, r))| r.as_ref().map(|r| (i, r)))
    }

    /// Every rule instance whose pattern lies within `caps`: concrete rules
    /// first (in insertion order), then family instances.
    pub fn instances(&self, caps: &Caps) -> Vec<Rule> {
        let mut out: Vec<Rule> = self
            .concrete()
            .filter(|(_, r)| caps.admits(&r.pattern))
            .map(|(_, r)| r.clone())
            .collect();
        for (_, s) in &self.schemas {
            out.extend(s.instances(caps, &self.spec));
        }
        out
    }

    fn matches_at(&self, w: &[Gen], at: usize) -> Option<(usize, Rule)> {
        let mut best: Option<(usize, usize, Rule)> = None;
        let consider = |seq: usize, r: Rule, best: &mut Option<(usize, usize, Rule)>| {
            let better = match best {
                None => true,
                Some((bs, bl, _)) => r.pattern.len() > *bl || (r.pattern.len() == *bl && seq < *bs),
            };
            if better {
                *best = Some((seq, r.pattern.len(), r));
            }
        };
        if let Some(slots) = self.by_first.get(&w[at]) {
            for &slot in slots {
                if let (seq, Some(r)) = &self.rules[slot] {
                    if w[at..].starts_with(&r.pattern) {
                        consider(*seq, r.clone(), &mut best);
                    }
                }
            }
        }
        for (seq, s) in &self.schemas {
            if s.may_start_with(&w[at]) {
                if let Some(r) = s.match_at(w, at, &self.spec) {
                    consider(*seq, r, &mut best);
                }
            }
        }
        best.map(|(_, _, r)| (at, r))
    }

    /// Leftmost reducible position and the selected rule.
    pub fn find(&self, w: &[Gen]) -> Option<(usize, Rule)> {
        (0..w.len()).find_map(|at| self.matches_at(w, at))
    }

    /// Whether some pattern starts exactly at position 0.
    pub fn matches_prefix(&self, w: &[Gen]) -> bool {
        !w.is_empty() && self.matches_at(w, 0).is_some()
    }

    pub fn is_reduced(&self, w: &[Gen]) -> bool {
        self.find(w).is_none()
    }

    pub fn normal_form(&self, f: &Polynomial) -> Polynomial {
        self.reduce(f, None)
    }

    pub fn normal_form_with_certificate(&self, f: &Polynomial) -> (Polynomial, Certificate) {
        let mut cert = Certificate::default();
        let nf = self.reduce(f, Some(&mut cert));
        (nf, cert)
    }

    fn reduce(&self, f: &Polynomial, mut cert: Option<&mut Certificate>) -> Polynomial {
        let spec = &self.spec;
        let mut work: BTreeMap<Vec<u64>, (Word, Scalar)> = BTreeMap::new();
        let push = |work: &mut BTreeMap<Vec<u64>, (Word, Scalar)>, w: Word, c: Scalar| {
            use std::collections::btree_map::Entry;
            match work.entry(spec.key(&w)) {
                Entry::Vacant(e) => {
                    e.insert((w, c));
                }
                Entry::Occupied(mut e) => {
                    e.get_mut().1 += c;
                    if e.get().1.is_zero() {
                        e.remove();
                    }
                }
            }
        };
        for (w, c) in f.terms() {
            push(&mut work, w.clone(), c.clone());
        }
        let mut result = Polynomial::zero();
        while let Some((_, (w, c))) = work.pop_last() {
            match self.find(&w) {
                Some((at, rule)) => {
                    let prefix = &w[..at];
                    let suffix = &w[at + rule.pattern.len()..];
                    for (rw, rc) in rule.remainder.terms() {
                        push(&mut work, rw.wrap(prefix, suffix), rc * &c);
                    }
                    if let Some(cert) = cert.as_deref_mut() {
                        cert.steps.push(Step {
                            prefix: Word::new(prefix.to_vec()),
                            suffix: Word::new(suffix.to_vec()),
                            coeff: c,
                            rule,
                        });
                    }
                }
                None => result.add_term(w, c),
            }
        }
        result
    }
}

/// `f - α · prefix · rule · suffix`, where `α` is the coefficient of
/// `prefix · pattern · suffix` in `f`.
pub fn reduce_once(
    f: &Polynomial,
    rule: &Rule,
    prefix: &Word,
    suffix: &Word,
) -> Result<Polynomial> {
    let w = rule.pattern.wrap(prefix, suffix);
    let alpha = f.coeff(&w);
    if alpha.is_zero() {
        return Err(Error::NoMatch);
    }
    let mut out = f.clone();
    out.add_scaled(&rule.polynomial().wrap(prefix, suffix), &-alpha);
    Ok(out)
}
