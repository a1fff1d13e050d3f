//! Universal associative envelopes of Lie conformal (super)algebras.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::conformal::{build_ax, locality_schema, right_mul_schema, LocalityFunction};
use crate::error::{Error, Result};
use crate::gsb::{complete, is_cap_stable, Completion, CompletionOptions};
use crate::module::{reduced_module_words, split_null_extension, ModulePresentation};
use crate::poly::Polynomial;
use crate::rewrite::{Origin, Rule, RuleSet};
use crate::scalar::{factorial, int, sign, Scalar};
use crate::schema::{cst, var, Factor, LetterTemplate, RelationSchema, TermTemplate};
use crate::word::{Gen, Label, OrderSpec, TieBreak, Word};

/// `[a λ b] = Σ_c f_c(∂, λ) c`, stored as `(c, ∂-power, λ-power) -> coefficient`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LambdaBracket {
    pub terms: BTreeMap<(Label, u32, u32), Scalar>,
}

impl LambdaBracket {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add(&mut self, c: Label, deriv: u32, lambda: u32, coeff: Scalar) {
        let e = self
            .terms
            .entry((c, deriv, lambda))
            .or_insert_with(Scalar::zero);
        *e += coeff;
        if e.is_zero() {
            self.terms.remove(&(c, deriv, lambda));
        }
    }

    pub fn with(mut self, c: Label, deriv: u32, lambda: u32, coeff: Scalar) -> Self {
        self.add(c, deriv, lambda, coeff);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lambda_degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.2).max()
    }
}

/// An element `Σ κ ∂^k c` of `k[∂]X`, as `(c, k, κ)`.
pub type DerivCombination = Vec<(Label, u32, Scalar)>;

/// `g_n`: the coefficient of `λ^{(n)} = λ^n / n!`, i.e. `n!` times the
/// coefficient of `λ^n`.
pub fn lambda_to_coeffs(bracket: &LambdaBracket) -> Vec<DerivCombination> {
    let len = bracket.lambda_degree().map_or(0, |d| d as usize + 1);
    let mut out: Vec<DerivCombination> = vec![Vec::new(); len];
    for (&(c, k, n), coeff) in &bracket.terms {
        out[n as usize].push((c, k, coeff * Scalar::from_integer(factorial(n as u64))));
    }
    out
}

#[derive(Debug, Clone)]
pub struct LieConformalPresentation {
    /// Labels carry their parity; the order also fixes the envelope's ≺.
    pub spec: OrderSpec,
    pub locality: LocalityFunction,
    pub brackets: BTreeMap<(Label, Label), LambdaBracket>,
}

impl LieConformalPresentation {
    pub fn new(spec: OrderSpec, locality: LocalityFunction) -> Self {
        LieConformalPresentation {
            spec,
            locality,
            brackets: BTreeMap::new(),
        }
    }

    pub fn bracket(mut self, a: Label, b: Label, f: LambdaBracket) -> Self {
        self.brackets.insert((a, b), f);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.spec.alphabet.len();
        if self.locality.size() != n {
            return Err(Error::Schema {
                schema: "locality".into(),
                reason: format!(
                    "defined on {} generators, alphabet has {n}",
                    self.locality.size()
                ),
            });
        }
        for (&(a, b), f) in &self.brackets {
            for l in [a, b].into_iter().chain(f.terms.keys().map(|k| k.0)) {
                if l as usize >= n {
                    return Err(Error::UnknownLabel(l));
                }
            }
        }
        Ok(())
    }

    pub fn coeffs(&self, a: Label, b: Label) -> Vec<DerivCombination> {
        self.brackets
            .get(&(a, b))
            .map(lambda_to_coeffs)
            .unwrap_or_default()
    }

    fn parity_sign(&self, a: Label, b: Label) -> i64 {
        let p = self.spec.alphabet.parity(a) * self.spec.alphabet.parity(b);
        if p % 2 == 1 {
            -1
        } else {
            1
        }
    }
}

/// Constraint on `(n, m)` making `L_n^a > L_m^b`, as `n − m − shift >= 0`;
/// `None` when no pair qualifies and `Some(None)` when every pair does.
fn commutation_constraint(
    spec: &OrderSpec,
    a: Label,
    b: Label,
    odd_square: bool,
) -> Option<Option<i64>> {
    match spec.left {
        TieBreak::IndexMajor => Some(Some(if a > b || (a == b && odd_square) {
            0
        } else {
            1
        })),
        TieBreak::LabelMajor => {
            if a > b {
                Some(None)
            } else if a == b {
                Some(Some(if odd_square { 0 } else { 1 }))
            } else {
                None
            }
        }
    }
}

/// `L_n^a L_m^b − (−1)^{p(a)p(b)} L_m^b L_n^a − Σ_s C(n,s) L^{g_s}_{n+m−s}` over
/// `L_n^a > L_m^b`, with `L^{∂^k c}_N = (−1)^k k! C(N,k) L^c_{N−k}`.
pub fn commutation_schema(
    lie: &LieConformalPresentation,
    a: Label,
    b: Label,
) -> Option<RelationSchema> {
    let eps = lie.parity_sign(a, b);
    let constraint = commutation_constraint(&lie.spec, a, b, a == b && eps == -1)?;
    let (n, m) = (var(0), var(1));
    let mut s = RelationSchema::new(format!("comm[{a},{b}]"), &["n", "m"])
        .term(TermTemplate::new(
            vec![],
            vec![
                LetterTemplate::Left(n.clone(), a),
                LetterTemplate::Left(m.clone(), b),
            ],
        ))
        .term(TermTemplate::new(
            vec![Factor::Const(int(-eps))],
            vec![
                LetterTemplate::Left(m.clone(), b),
                LetterTemplate::Left(n.clone(), a),
            ],
        ));
    if let Some(shift) = constraint {
        s = s.require((n.clone() - &m).plus(-shift));
    }
    for (k_s, g) in lie.coeffs(a, b).iter().enumerate() {
        let k_s = k_s as i64;
        let total = (n.clone() + &m).plus(-k_s);
        for (c, k, kappa) in g {
            let k = *k as i64;
            let coeff = -kappa * sign(k) * Scalar::from_integer(factorial(k as u64));
            s = s.term(TermTemplate::new(
                vec![
                    Factor::Const(coeff),
                    Factor::Binom(n.clone(), cst(k_s)),
                    Factor::Binom(total.clone(), cst(k)),
                ],
                vec![LetterTemplate::Left(total.clone().plus(-k), *c)],
            ));
        }
    }
    Some(s)
}

/// `A(L;X)`: the relations of `A(X)` together with the left commutators.
pub fn build_alx(lie: &LieConformalPresentation) -> Vec<RelationSchema> {
    let mut out = build_ax(&lie.spec);
    let labels: Vec<Label> = lie.spec.alphabet.labels().collect();
    for &a in &labels {
        for &b in &labels {
            out.extend(commutation_schema(lie, a, b));
        }
    }
    out
}

fn module_word(letters: &[Gen]) -> Word {
    Word::new(letters.to_vec())
}

/// `L_n^a b − (−1)^{p(a)p(b)} R_n^a b − g_n^{a,b}` for every `n` at which
/// some term can be nonzero.
pub fn commutator_relations(lie: &LieConformalPresentation) -> Vec<(String, Polynomial)> {
    let mut out = Vec::new();
    let labels: Vec<Label> = lie.spec.alphabet.labels().collect();
    for &a in &labels {
        for &b in &labels {
            let g = lie.coeffs(a, b);
            let top = (lie.locality.get(a, b).max(lie.locality.get(b, a)) as usize).max(g.len());
            for n in 0..top {
                let mut p =
                    Polynomial::monomial(module_word(&[Gen::Left(n as u32, a), Gen::Module(b)]));
                p.add_term(
                    module_word(&[Gen::Right(n as u32, a), Gen::Module(b)]),
                    int(-lie.parity_sign(a, b)),
                );
                for (c, k, kappa) in g.get(n).into_iter().flatten() {
                    let mut w = vec![Gen::Deriv; *k as usize];
                    w.push(Gen::Module(*c));
                    p.add_term(Word(w), -kappa.clone());
                }
                out.push((format!("comm[{a},{b}]({n})"), p));
            }
        }
    }
    out
}

/// Gaussian elimination on leading words: the result has distinct leading
/// words and every tail reduced modulo `base` and the other rules.
pub fn interreduce(polys: Vec<(String, Polynomial)>, base: &RuleSet) -> Result<Vec<Rule>> {
    let spec = base.spec.clone();
    let mut pending: Vec<(String, Polynomial)> = polys;
    let mut rules: Vec<Rule> = Vec::new();
    while let Some((name, p)) = pending.pop() {
        let mut set = base.clone();
        for r in &rules {
            set.add_rule(r.clone());
        }
        let nf = set.normal_form(&p);
        if nf.is_zero() {
            continue;
        }
        let rule = Rule::from_polynomial(&nf, &spec, Origin::Input(name))?;
        let (keep, redo): (Vec<Rule>, Vec<Rule>) = rules
            .into_iter()
            .partition(|r| !r.pattern.contains_factor(&rule.pattern));
        rules = keep;
        pending.extend(
            redo.into_iter()
                .map(|r| (r.origin.family_name().to_string(), r.polynomial())),
        );
        rules.push(rule);
    }
    // final tail reduction
    let mut out = Vec::with_capacity(rules.len());
    for (i, r) in rules.iter().enumerate() {
        let mut set = base.clone();
        for (j, o) in rules.iter().enumerate() {
            if i != j {
                set.add_rule(o.clone());
            }
        }
        out.push(Rule {
            pattern: r.pattern.clone(),
            remainder: set.normal_form(&r.remainder),
            origin: r.origin.clone(),
        });
    }
    out.sort_by(|x, y| spec.cmp_words(&x.pattern, &y.pattern));
    Ok(out)
}

/// `U(L;X,N)` as an `A(L;X)`-module: locality, right multiplication and the
/// commutators, the latter reduced against the former and interreduced.
pub fn build_envelope(lie: &LieConformalPresentation) -> Result<ModulePresentation> {
    lie.validate()?;
    let spec = &lie.spec;
    let mut p = ModulePresentation::new(spec.clone());
    p.algebra.schemas = build_alx(lie);
    let labels: Vec<Label> = spec.alphabet.labels().collect();
    for &a in &labels {
        for &b in &labels {
            p.module.schemas.push(locality_schema(a, b, &lie.locality));
        }
    }
    for &a in &labels {
        for &b in &labels {
            p.module.schemas.push(right_mul_schema(a, b, &lie.locality));
        }
    }
    let base = p.rule_set()?;
    p.module.rules = interreduce(commutator_relations(lie), &base)?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Speciality {
    Special,
    /// A closed rule lying in `k[∂]X`.
    NotSpecial(Polynomial),
    Undetermined(String),
}

impl Speciality {
    pub fn label(&self) -> &'static str {
        match self {
            Speciality::Special => "special",
            Speciality::NotSpecial(_) => "not special",
            Speciality::Undetermined(_) => "undetermined",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub presentation: ModulePresentation,
    pub completion: Completion,
    pub cap_stable: bool,
    pub basis: Vec<Word>,
    pub speciality: Speciality,
}

fn in_deriv_span(w: &[Gen]) -> bool {
    matches!(w.split_last(), Some((Gen::Module(_), rest)) if rest.iter().all(|g| *g == Gen::Deriv))
}

/// The first closed rule all of whose words are `∂^s x`.
pub fn deriv_span_witness(rules: &RuleSet) -> Option<Polynomial> {
    rules
        .concrete()
        .map(|(_, r)| r.polynomial())
        .find(|p| p.words().all(|w| in_deriv_span(w)))
}

pub fn decide_speciality(completion: &Completion, cap_stable: bool) -> Speciality {
    if let Some(p) = deriv_span_witness(&completion.closed) {
        return Speciality::NotSpecial(p);
    }
    if !completion.report.is_clean() {
        return Speciality::Undetermined("a completion reached its caps".into());
    }
    if !cap_stable {
        return Speciality::Undetermined("new rules appear when the index cap is raised".into());
    }
    Speciality::Special
}

/// Builds, completes and classifies `U(L;X,N)`.
pub fn envelope(
    lie: &LieConformalPresentation,
    opts: &CompletionOptions,
    basis_bound: usize,
) -> Result<EnvelopeResult> {
    let presentation = build_envelope(lie)?;
    let input = split_null_extension(&presentation)?;
    let completion = complete(&input, opts);
    let cap_stable = deriv_span_witness(&completion.closed).is_some()
        || is_cap_stable(&input, opts, &completion);
    let speciality = decide_speciality(&completion, cap_stable);
    let mut basis_rules = presentation.rule_set()?;
    for r in &completion.new_rules {
        basis_rules.add_rule(r.clone());
    }
    let basis = reduced_module_words(&basis_rules, basis_bound, opts.caps.max_index);
    Ok(EnvelopeResult {
        presentation,
        completion,
        cap_stable,
        basis,
        speciality,
    })
}

/// Every locality function with values `<= max_n`, classified.
pub fn search_localities(
    lie: &LieConformalPresentation,
    max_n: u32,
    opts: &CompletionOptions,
) -> Result<Vec<(LocalityFunction, Speciality)>> {
    let size = lie.spec.alphabet.len();
    let cells = size * size;
    let total = (max_n as usize + 1).pow(cells as u32);
    let grid: Vec<LocalityFunction> = (0..total)
        .map(|mut code| {
            let mut loc = LocalityFunction::constant(size, 0);
            for cell in 0..cells {
                let v = (code % (max_n as usize + 1)) as u32;
                code /= max_n as usize + 1;
                loc.set((cell / size) as Label, (cell % size) as Label, v);
            }
            loc
        })
        .collect();
    let classify = |loc: LocalityFunction| -> Result<(LocalityFunction, Speciality)> {
        let mut l = lie.clone();
        l.locality = loc.clone();
        let r = envelope(&l, opts, 1)?;
        Ok((loc, r.speciality))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.into_par_iter().map(classify).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.into_iter().map(classify).collect()
    }
}
