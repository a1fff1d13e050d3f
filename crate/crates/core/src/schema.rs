//! Parameterized relation families.
//!
//! A [`RelationSchema`] is a formal sum of term templates whose generator
//! indices are affine in integer parameters, with coefficients built from
//! signs, binomials and inverse factorials, and with finite summations whose
//! bounds are affine too. One term is designated leading; matching a word
//! against the leading template recovers the parameters, so infinite families
//! act as lazy rewrite rules.

use num_traits::{One, Zero};

use crate::conformal::{is_b0_word, LocalityFunction};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rewrite::{Origin, Rule};
use crate::scalar::{binomial, factorial, sign, Scalar};
use crate::word::{Gen, Label, OrderSpec, Word};

pub type Var = usize;

/// Bounds used whenever an infinite family has to be enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest generator index `K`.
    pub max_index: u32,
    /// Largest word length `D`.
    pub max_degree: usize,
}

impl Caps {
    pub fn new(max_index: u32, max_degree: usize) -> Self {
        Caps {
            max_index,
            max_degree,
        }
    }

    pub fn admits(&self, w: &[Gen]) -> bool {
        w.len() <= self.max_degree && w.iter().filter_map(Gen::index).all(|n| n <= self.max_index)
    }
}

impl Default for Caps {
    fn default() -> Self {
        Caps::new(8, 6)
    }
}

/// `constant + Σ coeff·var`
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Affine {
    pub constant: i64,
    pub coeffs: Vec<(Var, i64)>,
}

impl Affine {
    pub fn constant(c: i64) -> Self {
        Affine {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    pub fn var(v: Var) -> Self {
        Affine {
            constant: 0,
            coeffs: vec![(v, 1)],
        }
    }

    pub fn plus(mut self, c: i64) -> Self {
        self.constant += c;
        self
    }

    pub fn times(mut self, k: i64) -> Self {
        self.constant *= k;
        for c in &mut self.coeffs {
            c.1 *= k;
        }
        self.coeffs.retain(|&(_, k)| k != 0);
        self
    }

    pub fn eval(&self, values: &[i64]) -> i64 {
        self.constant + self.coeffs.iter().map(|&(v, k)| k * values[v]).sum::<i64>()
    }

    /// `Some((var, offset))` when the expression is `var + offset`.
    fn as_shifted_var(&self) -> Option<(Var, i64)> {
        match self.coeffs.as_slice() {
            [(v, 1)] => Some((*v, self.constant)),
            _ => None,
        }
    }
}

impl std::ops::Add<&Affine> for Affine {
    type Output = Affine;

    fn add(mut self, other: &Affine) -> Affine {
        self.constant += other.constant;
        for &(v, k) in &other.coeffs {
            match self.coeffs.iter_mut().find(|(w, _)| *w == v) {
                Some(e) => e.1 += k,
                None => self.coeffs.push((v, k)),
            }
        }
        self.coeffs.retain(|&(_, k)| k != 0);
        self
    }
}

impl std::ops::Sub<&Affine> for Affine {
    type Output = Affine;

    fn sub(self, other: &Affine) -> Affine {
        self + &other.clone().times(-1)
    }
}

pub fn var(v: Var) -> Affine {
    Affine::var(v)
}

pub fn cst(c: i64) -> Affine {
    Affine::constant(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Const(Scalar),
    /// `(-1)^e`
    Sign(Affine),
    /// `binom(top, bottom)`, zero for a negative bottom.
    Binom(Affine, Affine),
    /// `1/e!` (a divided power when paired with `∂^e`).
    InvFactorial(Affine),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LetterTemplate {
    Deriv,
    /// `∂^e`
    DerivPow(Affine),
    Left(Affine, Label),
    Right(Affine, Label),
    Module(Label),
    Plain(u32),
    /// The bound word variable `u`, ranging over ∂-free normal words.
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermTemplate {
    /// Summation variables with inclusive affine ranges, outermost first.
    pub sums: Vec<(Var, Affine, Affine)>,
    pub factors: Vec<Factor>,
    pub letters: Vec<LetterTemplate>,
}

impl TermTemplate {
    pub fn new(factors: Vec<Factor>, letters: Vec<LetterTemplate>) -> Self {
        TermTemplate {
            sums: Vec::new(),
            factors,
            letters,
        }
    }

    pub fn summed(mut self, v: Var, lo: Affine, hi: Affine) -> Self {
        self.sums.push((v, lo, hi));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub values: Vec<i64>,
    pub tail: Option<Word>,
}

impl Assignment {
    pub fn new(values: impl Into<Vec<i64>>) -> Self {
        Assignment {
            values: values.into(),
            tail: None,
        }
    }

    pub fn with_tail(mut self, tail: Word) -> Self {
        self.tail = Some(tail);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationSchema {
    pub name: String,
    /// Parameter names; variables `0..params.len()`.
    pub params: Vec<String>,
    /// Total number of variables, summation variables included.
    pub num_vars: usize,
    /// Each expression must evaluate to a non-negative number.
    pub constraints: Vec<Affine>,
    pub terms: Vec<TermTemplate>,
    pub leading: usize,
    /// Present when the template contains a `Tail` letter.
    pub tail: Option<LocalityFunction>,
}

impl RelationSchema {
    pub fn new(name: impl Into<String>, params: &[&str]) -> Self {
        RelationSchema {
            name: name.into(),
            params: params.iter().map(|s| s.to_string()).collect(),
            num_vars: params.len(),
            constraints: Vec::new(),
            terms: Vec::new(),
            leading: 0,
            tail: None,
        }
    }

    pub fn fresh_var(&mut self) -> Var {
        self.num_vars += 1;
        self.num_vars - 1
    }

    /// Adds the constraint `e >= 0`.
    pub fn require(mut self, e: Affine) -> Self {
        self.constraints.push(e);
        self
    }

    pub fn term(mut self, t: TermTemplate) -> Self {
        self.terms.push(t);
        self
    }

    pub fn with_tail(mut self, locality: LocalityFunction) -> Self {
        self.tail = Some(locality);
        self
    }

    fn leading_letters(&self) -> &[LetterTemplate] {
        &self.terms[self.leading].letters
    }

    /// Structural checks: the leading term has no summation, no `∂^e`,
    /// binds every parameter through a `var + c` index, and `Tail` occurs
    /// only last and only with a locality function.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::Schema {
                schema: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        let lead = &self.terms[self.leading];
        if !lead.sums.is_empty() {
            return bad("leading term carries a summation");
        }
        let mut bound = vec![false; self.params.len()];
        for (i, l) in lead.letters.iter().enumerate() {
            match l {
                LetterTemplate::DerivPow(_) => return bad("leading term contains a power of d"),
                LetterTemplate::Left(e, _) | LetterTemplate::Right(e, _) => {
                    if e.coeffs.is_empty() {
                        continue;
                    }
                    match e.as_shifted_var() {
                        Some((v, _)) if v < self.params.len() => bound[v] = true,
                        _ => return bad("leading index is not of the form var + c"),
                    }
                }
                LetterTemplate::Tail if (i + 1 != lead.letters.len() || self.tail.is_none()) => {
                    return bad("tail variable must be last and needs a locality function");
                }
                _ => {}
            }
        }
        if bound.iter().any(|b| !b) {
            return bad("a parameter does not occur in the leading term");
        }
        Ok(())
    }

    fn admissible(&self, values: &[i64]) -> bool {
        values.iter().all(|&v| v >= 0) && self.constraints.iter().all(|c| c.eval(values) >= 0)
    }

    /// Concrete polynomial for an admissible assignment, scaled to be monic,
    /// together with the designated leading word. Fails when the assignment
    /// violates a constraint or the designated term is not ≺-leading.
    pub fn instantiate_with_leading(
        &self,
        a: &Assignment,
        spec: &OrderSpec,
    ) -> Result<(Polynomial, Word)> {
        if a.values.len() != self.params.len() || !self.admissible(&a.values) {
            return Err(Error::Inadmissible(self.name.clone()));
        }
        if self.tail.is_some() != a.tail.is_some() {
            return Err(Error::Inadmissible(self.name.clone()));
        }
        if let (Some(loc), Some(t)) = (&self.tail, &a.tail) {
            if !is_b0_word(t, loc) {
                return Err(Error::Inadmissible(self.name.clone()));
            }
        }
        let mut values = a.values.clone();
        values.resize(self.num_vars, 0);
        let mut poly = Polynomial::zero();
        let mut leading_word = None;
        for (i, t) in self.terms.iter().enumerate() {
            self.expand(t, 0, &mut values, a.tail.as_ref(), &mut poly, &mut |w| {
                if i == self.leading {
                    leading_word = Some(w.clone());
                }
            })?;
        }
        let lead = leading_word.ok_or_else(|| Error::Schema {
            schema: self.name.clone(),
            reason: "leading term vanished".into(),
        })?;
        match poly.leading(spec) {
            Ok((w, c)) if w == lead => Ok((poly.scale(&c.recip()), lead)),
            _ => Err(Error::Schema {
                schema: self.name.clone(),
                reason: format!("designated term {} is not leading", spec.render(&lead)),
            }),
        }
    }

    pub fn instantiate(&self, a: &Assignment, spec: &OrderSpec) -> Result<Polynomial> {
        self.instantiate_with_leading(a, spec).map(|(p, _)| p)
    }

    pub fn instance(&self, a: &Assignment, spec: &OrderSpec) -> Result<Rule> {
        let (p, lead) = self.instantiate_with_leading(a, spec)?;
        let mut remainder = p;
        remainder.add_term(lead.clone(), -Scalar::one());
        Ok(Rule {
            pattern: lead,
            remainder: remainder.neg(),
            origin: Origin::Family {
                name: self.name.clone(),
                params: a.values.clone(),
                tail: a.tail.clone(),
            },
        })
    }

    fn expand(
        &self,
        t: &TermTemplate,
        depth: usize,
        values: &mut Vec<i64>,
        tail: Option<&Word>,
        out: &mut Polynomial,
        seen: &mut dyn FnMut(&Word),
    ) -> Result<()> {
        if depth < t.sums.len() {
            let (v, lo, hi) = &t.sums[depth];
            let (lo, hi) = (lo.eval(values), hi.eval(values));
            for x in lo..=hi {
                values[*v] = x;
                self.expand(t, depth + 1, values, tail, out, seen)?;
            }
            return Ok(());
        }
        let mut c = Scalar::one();
        for f in &t.factors {
            match f {
                Factor::Const(k) => c *= k,
                Factor::Sign(e) => c *= sign(e.eval(values)),
                Factor::Binom(top, k) => c *= binomial(top.eval(values), k.eval(values)),
                Factor::InvFactorial(e) => {
                    let e = e.eval(values);
                    if e < 0 {
                        c = Scalar::zero();
                    } else {
                        c /= Scalar::from_integer(factorial(e as u64));
                    }
                }
            }
            if c.is_zero() {
                return Ok(());
            }
        }
        let index = |e: &Affine| -> Result<u32> {
            let n = e.eval(values);
            u32::try_from(n).map_err(|_| Error::Schema {
                schema: self.name.clone(),
                reason: format!("negative index {n} under a nonzero coefficient"),
            })
        };
        let mut letters = Vec::with_capacity(t.letters.len() + 4);
        for l in &t.letters {
            match l {
                LetterTemplate::Deriv => letters.push(Gen::Deriv),
                LetterTemplate::DerivPow(e) => {
                    let k = index(e)?;
                    letters.extend(std::iter::repeat_n(Gen::Deriv, k as usize));
                }
                LetterTemplate::Left(e, a) => letters.push(Gen::Left(index(e)?, *a)),
                LetterTemplate::Right(e, a) => letters.push(Gen::Right(index(e)?, *a)),
                LetterTemplate::Module(a) => letters.push(Gen::Module(*a)),
                LetterTemplate::Plain(p) => letters.push(Gen::Plain(*p)),
                LetterTemplate::Tail => letters.extend_from_slice(tail.expect("tail bound")),
            }
        }
        let w = Word(letters);
        seen(&w);
        out.add_term(w, c);
        Ok(())
    }

    /// Whether the leading template can start with `g`.
    pub fn may_start_with(&self, g: &Gen) -> bool {
        match (self.leading_letters().first(), g) {
            (Some(LetterTemplate::Deriv), Gen::Deriv) => true,
            (Some(LetterTemplate::Left(_, a)), Gen::Left(_, b)) => a == b,
            (Some(LetterTemplate::Right(_, a)), Gen::Right(_, b)) => a == b,
            (Some(LetterTemplate::Module(a)), Gen::Module(b)) => a == b,
            (Some(LetterTemplate::Plain(a)), Gen::Plain(b)) => a == b,
            (Some(LetterTemplate::Tail), _) => true,
            _ => false,
        }
    }

    /// Solves the leading template against `word[at..]`.
    pub fn match_assignment(&self, word: &[Gen], at: usize) -> Option<(Assignment, usize)> {
        let mut values: Vec<Option<i64>> = vec![None; self.params.len()];
        let mut pos = at;
        let mut tail = None;
        let bind = |e: &Affine, n: u32, values: &mut Vec<Option<i64>>| -> bool {
            if e.coeffs.is_empty() {
                return e.constant == n as i64;
            }
            let (v, off) = e.as_shifted_var().expect("validated schema");
            let x = n as i64 - off;
            if x < 0 {
                return false;
            }
            match values[v] {
                Some(y) => y == x,
                None => {
                    values[v] = Some(x);
                    true
                }
            }
        };
        for l in self.leading_letters() {
            if let LetterTemplate::Tail = l {
                let rest = &word[pos..];
                if rest.is_empty() || !is_b0_word(rest, self.tail.as_ref()?) {
                    return None;
                }
                tail = Some(Word::new(rest.to_vec()));
                pos = word.len();
                continue;
            }
            let g = word.get(pos)?;
            let ok = match (l, g) {
                (LetterTemplate::Deriv, Gen::Deriv) => true,
                (LetterTemplate::Left(e, a), Gen::Left(n, b))
                | (LetterTemplate::Right(e, a), Gen::Right(n, b)) => {
                    a == b && bind(e, *n, &mut values)
                }
                (LetterTemplate::Module(a), Gen::Module(b)) => a == b,
                (LetterTemplate::Plain(a), Gen::Plain(b)) => a == b,
                _ => false,
            };
            if !ok {
                return None;
            }
            pos += 1;
        }
        let values: Vec<i64> = values.into_iter().collect::<Option<_>>()?;
        if !self.admissible(&values) {
            return None;
        }
        Some((Assignment { values, tail }, pos - at))
    }

    /// The instance whose pattern occurs at `word[at..]`, if any.
    pub fn match_at(&self, word: &[Gen], at: usize, spec: &OrderSpec) -> Option<Rule> {
        let (a, _) = self.match_assignment(word, at)?;
        let rule = self
            .instance(&a, spec)
            .unwrap_or_else(|e| panic!("instance of matched schema failed: {e}"));
        Some(rule)
    }

    /// All instances whose pattern lies within `caps`, in parameter order.
    pub fn instances(&self, caps: &Caps, spec: &OrderSpec) -> Vec<Rule> {
        let k = caps.max_index as i64;
        let p = self.params.len();
        let fixed_len = self.leading_letters().len();
        let tails: Vec<Option<Word>> = match &self.tail {
            None => vec![None],
            Some(loc) => {
                let room = (caps.max_degree + 1).saturating_sub(fixed_len);
                crate::conformal::b0_words(loc, room, caps.max_index)
                    .into_iter()
                    .map(Some)
                    .collect()
            }
        };
        let mut out = Vec::new();
        let mut values = vec![0i64; p];
        loop {
            if self.admissible(&values) {
                for t in &tails {
                    let a = Assignment {
                        values: values.clone(),
                        tail: t.clone(),
                    };
                    if let Ok(rule) = self.instance(&a, spec) {
                        if caps.admits(&rule.pattern) {
                            out.push(rule);
                        }
                    }
                }
            }
            let mut i = 0;
            while i < p {
                values[i] += 1;
                if values[i] <= k {
                    break;
                }
                values[i] = 0;
                i += 1;
            }
            if i == p {
                break;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use crate::word::Alphabet;

    #[test]
    fn affine_arithmetic() {
        let e = var(0).plus(3) + &var(1).times(2) - &var(0);
        assert_eq!(e.eval(&[5, 4]), 11);
        assert_eq!(e.coeffs, vec![(1, 2)]);
    }

    fn commutation() -> RelationSchema {
        // L_n^a d - d L_n^a - n L_{n-1}^a
        RelationSchema::new("ld", &["n"])
            .term(TermTemplate::new(
                vec![],
                vec![LetterTemplate::Left(var(0), 0), LetterTemplate::Deriv],
            ))
            .term(TermTemplate::new(
                vec![Factor::Const(int(-1))],
                vec![LetterTemplate::Deriv, LetterTemplate::Left(var(0), 0)],
            ))
            .term(TermTemplate::new(
                vec![Factor::Const(int(-1)), Factor::Binom(var(0), cst(1))],
                vec![LetterTemplate::Left(var(0).plus(-1), 0)],
            ))
    }

    #[test]
    fn instantiate_and_match() {
        let spec = OrderSpec::standard(Alphabet::new(["a"]));
        let s = commutation();
        s.validate().unwrap();
        let p0 = s.instantiate(&Assignment::new([0]), &spec).unwrap();
        assert_eq!(p0.len(), 2);
        let p3 = s.instantiate(&Assignment::new([3]), &spec).unwrap();
        assert_eq!(p3.coeff(&Word::new(vec![Gen::Left(2, 0)])), int(-3));
        let word = [Gen::Deriv, Gen::Left(4, 0), Gen::Deriv];
        assert!(s.match_at(&word, 0, &spec).is_none());
        let rule = s.match_at(&word, 1, &spec).unwrap();
        assert_eq!(rule.pattern, Word::new(vec![Gen::Left(4, 0), Gen::Deriv]));
        assert_eq!(s.instances(&Caps::new(3, 4), &spec).len(), 4);
    }

    #[test]
    fn inadmissible_and_misdesignated() {
        let spec = OrderSpec::standard(Alphabet::new(["a"]));
        let s = commutation().require(var(0).plus(-2));
        assert_eq!(
            s.instantiate(&Assignment::new([1]), &spec),
            Err(Error::Inadmissible("ld".into()))
        );
        let vir = spec
            .clone()
            .with_deriv(crate::word::DerivSlot::BelowLeftIndex(2));
        let s = commutation();
        assert!(matches!(
            s.instantiate(&Assignment::new([1]), &vir),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn validation_rejects_unbound_parameter() {
        let s = RelationSchema::new("bad", &["n", "m"]).term(TermTemplate::new(
            vec![],
            vec![LetterTemplate::Left(var(0), 0)],
        ));
        assert!(s.validate().is_err());
    }
}
