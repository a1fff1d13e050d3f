//! Associative conformal algebras through their operator module: the
//! operator alphabet, the algebra `A(X)`, the module `M(X,N)`, normal
//! words and conformal products.

use crate::error::{Error, Result};
use crate::gsb::GsbCheck;
use crate::module::{module_gsb_check, ModulePresentation, Relations};
use crate::poly::Polynomial;
use crate::rewrite::{Origin, RuleSet};
use crate::scalar::{binomial, factorial, falling, int, sign, Scalar};
use crate::schema::{cst, var, Caps, Factor, LetterTemplate, RelationSchema, TermTemplate};
use crate::word::{Gen, Label, OrderSpec, Word};

/// `N: X × X → Z_+`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityFunction {
    size: usize,
    values: Vec<u32>,
}

impl LocalityFunction {
    pub fn new(size: usize, f: impl Fn(Label, Label) -> u32) -> Self {
        let mut values = Vec::with_capacity(size * size);
        for a in 0..size as u32 {
            for b in 0..size as u32 {
                values.push(f(a, b));
            }
        }
        LocalityFunction { size, values }
    }

    pub fn constant(size: usize, n: u32) -> Self {
        Self::new(size, |_, _| n)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: Label, b: Label) -> u32 {
        self.values[a as usize * self.size + b as usize]
    }

    pub fn set(&mut self, a: Label, b: Label, n: u32) {
        self.values[a as usize * self.size + b as usize] = n;
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// The label `L_n^a` meets next: the following left letter's label, or the
/// generator.
fn next_label(w: &[Gen]) -> Option<Label> {
    match w.first()? {
        Gen::Left(_, a) | Gen::Module(a) => Some(*a),
        _ => None,
    }
}

/// `∂^s L_{n1}^{a1} ... L_{nk}^{ak} c` with every `n_i < N(a_i, a_{i+1})`.
pub fn is_normal_word(w: &[Gen], loc: &LocalityFunction) -> bool {
    let s = w.iter().take_while(|g| **g == Gen::Deriv).count();
    is_b0_word(&w[s..], loc)
}

/// A ∂-free normal word.
pub fn is_b0_word(w: &[Gen], loc: &LocalityFunction) -> bool {
    let Some((last, ops)) = w.split_last() else {
        return false;
    };
    let Gen::Module(c) = last else {
        return false;
    };
    if *c as usize >= loc.size() {
        return false;
    }
    for (i, g) in ops.iter().enumerate() {
        let Gen::Left(n, a) = g else {
            return false;
        };
        match next_label(&w[i + 1..]) {
            Some(b) if (*a as usize) < loc.size() && *n < loc.get(*a, b) => {}
            _ => return false,
        }
    }
    true
}

/// All ∂-free normal words of length `<= max_len` with indices `<= max_index`.
pub fn b0_words(loc: &LocalityFunction, max_len: usize, max_index: u32) -> Vec<Word> {
    let mut out = Vec::new();
    if max_len == 0 {
        return out;
    }
    let mut frontier: Vec<Vec<Gen>> = (0..loc.size() as u32)
        .map(|c| vec![Gen::Module(c)])
        .collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in frontier {
            if w.len() < max_len {
                let b = next_label(&w).expect("normal word");
                for a in 0..loc.size() as u32 {
                    for n in 0..loc.get(a, b).min(max_index.saturating_add(1)) {
                        let mut v = Vec::with_capacity(w.len() + 1);
                        v.push(Gen::Left(n, a));
                        v.extend_from_slice(&w);
                        next.push(v);
                    }
                }
            }
            out.push(Word(w));
        }
        frontier = next;
    }
    out
}

/// Normal words of length `<= bound`, ≺-ascending.
pub fn enumerate_normal_words(spec: &OrderSpec, loc: &LocalityFunction, bound: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for w in b0_words(loc, bound, u32::MAX) {
        for s in 0..=(bound - w.len()) {
            let mut v = vec![Gen::Deriv; s];
            v.extend_from_slice(&w);
            out.push(Word(v));
        }
    }
    out.sort_by(|a, b| spec.cmp_words(a, b));
    out
}

fn l(e: crate::schema::Affine, a: Label) -> LetterTemplate {
    LetterTemplate::Left(e, a)
}

fn r(e: crate::schema::Affine, a: Label) -> LetterTemplate {
    LetterTemplate::Right(e, a)
}

fn minus_one() -> Factor {
    Factor::Const(int(-1))
}

/// `X_n ∂ − ∂X_n − n X_{n−1}` for `X = L^a` or `R^a`.
fn deriv_commutation(name: String, left: bool, a: Label) -> RelationSchema {
    let x = |e| if left { l(e, a) } else { r(e, a) };
    RelationSchema::new(name, &["n"])
        .term(TermTemplate::new(
            vec![],
            vec![x(var(0)), LetterTemplate::Deriv],
        ))
        .term(TermTemplate::new(
            vec![minus_one()],
            vec![LetterTemplate::Deriv, x(var(0))],
        ))
        .term(TermTemplate::new(
            vec![minus_one(), Factor::Binom(var(0), cst(1))],
            vec![x(var(0).plus(-1))],
        ))
}

/// The defining relations of `A(X)`: `L∂`, `R∂` and `RL` commutation, oriented
/// for `spec`. Where `∂` sits above `L_n^a` the `L∂` family is split so its
/// leading term is `∂L_n^a`.
pub fn build_ax(spec: &OrderSpec) -> Vec<RelationSchema> {
    let mut out = Vec::new();
    let labels: Vec<Label> = spec.alphabet.labels().collect();
    for &a in &labels {
        let t = spec.deriv_threshold(a) as i64;
        if t > 0 {
            let mut low =
                deriv_commutation(format!("ld-low[{a}]"), true, a).require(cst(t - 1) - &var(0));
            low.leading = 1;
            out.push(low);
        }
        out.push(deriv_commutation(format!("ld[{a}]"), true, a).require(var(0).plus(-t)));
    }
    for &a in &labels {
        out.push(deriv_commutation(format!("rd[{a}]"), false, a));
    }
    for &b in &labels {
        for &a in &labels {
            out.push(
                RelationSchema::new(format!("rl[{b},{a}]"), &["m", "n"])
                    .term(TermTemplate::new(vec![], vec![r(var(0), b), l(var(1), a)]))
                    .term(TermTemplate::new(
                        vec![minus_one()],
                        vec![l(var(1), a), r(var(0), b)],
                    )),
            );
        }
    }
    out
}

/// `L_n^a b`, `n >= N(a,b)`.
pub fn locality_schema(a: Label, b: Label, loc: &LocalityFunction) -> RelationSchema {
    RelationSchema::new(format!("loc[{a},{b}]"), &["n"])
        .require(var(0).plus(-(loc.get(a, b) as i64)))
        .term(TermTemplate::new(
            vec![],
            vec![l(var(0), a), LetterTemplate::Module(b)],
        ))
}

/// `R_n^b a − Σ_{s=0}^{N(a,b)−n−1} (−1)^{n+s} ∂^{(s)} L^a_{n+s} b`.
pub fn right_mul_schema(a: Label, b: Label, loc: &LocalityFunction) -> RelationSchema {
    let mut s = RelationSchema::new(format!("rmul[{a},{b}]"), &["n"]);
    let v = s.fresh_var();
    let top = cst(loc.get(a, b) as i64 - 1) - &var(0);
    s.term(TermTemplate::new(
        vec![],
        vec![r(var(0), b), LetterTemplate::Module(a)],
    ))
    .term(
        TermTemplate::new(
            vec![
                minus_one(),
                Factor::Sign(var(0) + &var(v)),
                Factor::InvFactorial(var(v)),
            ],
            vec![
                LetterTemplate::DerivPow(var(v)),
                l(var(0) + &var(v), a),
                LetterTemplate::Module(b),
            ],
        )
        .summed(v, cst(0), top),
    )
}

/// `L_n^a L_m^b u + Σ_{q=1}^{n} (−1)^q C(n,q) L^a_{n−q} L^b_{m+q} u`,
/// `n >= N(a,b)`, `u` a ∂-free normal word.
pub fn locality_ex_schema(a: Label, b: Label, loc: &LocalityFunction) -> RelationSchema {
    let mut s = RelationSchema::new(format!("locx[{a},{b}]"), &["n", "m"]);
    let q = s.fresh_var();
    s.require(var(0).plus(-(loc.get(a, b) as i64)))
        .term(TermTemplate::new(
            vec![],
            vec![l(var(0), a), l(var(1), b), LetterTemplate::Tail],
        ))
        .term(
            TermTemplate::new(
                vec![Factor::Sign(var(q)), Factor::Binom(var(0), var(q))],
                vec![
                    l(var(0) - &var(q), a),
                    l(var(1) + &var(q), b),
                    LetterTemplate::Tail,
                ],
            )
            .summed(q, cst(1), var(0)),
        )
        .with_tail(loc.clone())
}

/// `M(X,N)`: `A(X)` acting on `X` subject to locality and right multiplication.
pub fn build_mxn(spec: &OrderSpec, loc: &LocalityFunction) -> ModulePresentation {
    let mut p = ModulePresentation::new(spec.clone());
    p.algebra.schemas = build_ax(spec);
    let labels: Vec<Label> = spec.alphabet.labels().collect();
    for &a in &labels {
        for &b in &labels {
            p.module.schemas.push(locality_schema(a, b, loc));
        }
    }
    for &a in &labels {
        for &b in &labels {
            p.module.schemas.push(right_mul_schema(a, b, loc));
        }
    }
    p
}

/// `Σ(X,N)`: `M(X,N)` together with the extended locality family.
pub fn sigma_xn(spec: &OrderSpec, loc: &LocalityFunction) -> ModulePresentation {
    let mut p = build_mxn(spec, loc);
    let labels: Vec<Label> = spec.alphabet.labels().collect();
    for &a in &labels {
        for &b in &labels {
            p.module.schemas.push(locality_ex_schema(a, b, loc));
        }
    }
    p
}

/// The free associative conformal algebra `C(X,N)` realised on normal words.
#[derive(Debug, Clone)]
pub struct ConformalAlgebra {
    pub loc: LocalityFunction,
    pub max_index: u32,
    rules: RuleSet,
}

impl ConformalAlgebra {
    pub fn new(spec: &OrderSpec, loc: LocalityFunction, max_index: u32) -> Result<Self> {
        let rules = sigma_xn(spec, &loc).rule_set()?;
        Ok(ConformalAlgebra {
            loc,
            max_index,
            rules,
        })
    }

    /// The quotient by a presentation over `M(X,N)`, e.g. an envelope; the
    /// extended locality family is added for reduction.
    pub fn from_presentation(
        presentation: &ModulePresentation,
        loc: LocalityFunction,
        max_index: u32,
    ) -> Result<Self> {
        let mut p = presentation.clone();
        let labels: Vec<Label> = p.spec.alphabet.labels().collect();
        for &a in &labels {
            for &b in &labels {
                p.module.schemas.push(locality_ex_schema(a, b, &loc));
            }
        }
        Ok(ConformalAlgebra {
            loc,
            max_index,
            rules: p.rule_set()?,
        })
    }

    pub fn spec(&self) -> &OrderSpec {
        &self.rules.spec
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn generator(&self, c: Label) -> Polynomial {
        Polynomial::monomial(Word::new(vec![Gen::Module(c)]))
    }

    pub fn normal_form(&self, f: &Polynomial) -> Polynomial {
        self.rules.normal_form(f)
    }

    fn check_element(&self, x: &Polynomial) -> Result<()> {
        for w in x.words() {
            if !w.is_module_word() {
                return Err(Error::NotModuleWord(self.spec().render(w)));
            }
        }
        Ok(())
    }

    fn check_index(&self, n: u64) -> Result<()> {
        if n > self.max_index as u64 {
            return Err(Error::CapExceeded {
                index: n,
                cap: self.max_index,
            });
        }
        Ok(())
    }

    /// `∂x`.
    pub fn derivative(&self, x: &Polynomial) -> Polynomial {
        self.normal_form(&x.wrap(&[Gen::Deriv], &[]))
    }

    /// `x ∘_n y`, in normal words.
    pub fn product(&self, x: &Polynomial, n: u32, y: &Polynomial) -> Result<Polynomial> {
        self.check_element(x)?;
        self.check_element(y)?;
        let mut raw = Polynomial::zero();
        for (u, a) in x.terms() {
            for (v, b) in y.terms() {
                let p = self.word_product(u, n as u64, v)?;
                raw.add_scaled(&p, &(a * b));
            }
        }
        Ok(self.normal_form(&raw))
    }

    fn word_product(&self, u: &[Gen], n: u64, y: &[Gen]) -> Result<Polynomial> {
        self.check_index(n)?;
        match u.first() {
            Some(Gen::Deriv) => {
                // (∂w) ∘_n y = −n (w ∘_{n−1} y)
                if n == 0 {
                    return Ok(Polynomial::zero());
                }
                Ok(self
                    .word_product(&u[1..], n - 1, y)?
                    .scale(&int(-(n as i64))))
            }
            Some(Gen::Left(n1, a)) => {
                // (a ∘_{n1} w) ∘_n y = Σ_j (−1)^j C(n1,j) a ∘_{n1−j} (w ∘_{n+j} y)
                let mut out = Polynomial::zero();
                for j in 0..=*n1 as u64 {
                    let inner = self.word_product(&u[1..], n + j, y)?;
                    if inner.is_zero() {
                        continue;
                    }
                    let c = sign(j as i64) * binomial(*n1 as i64, j as i64);
                    out.add_scaled(&inner.wrap(&[Gen::Left(*n1 - j as u32, *a)], &[]), &c);
                }
                Ok(out)
            }
            Some(Gen::Module(c)) if u.len() == 1 => {
                let mut w = Vec::with_capacity(y.len() + 1);
                w.push(Gen::Left(n as u32, *c));
                w.extend_from_slice(y);
                Ok(Polynomial::monomial(Word(w)))
            }
            _ => Err(Error::NotNormal(self.spec().render(u))),
        }
    }

    /// An index past which `u ∘_k v` vanishes: the derivatives on both
    /// sides plus the localities along the chain `c, b1, ..., bk, d`.
    fn vanishing_bound(&self, u: &[Gen], v: &[Gen]) -> u64 {
        let s = u.iter().filter(|g| **g == Gen::Deriv).count() as u64;
        let t = v.iter().filter(|g| **g == Gen::Deriv).count() as u64;
        let mut chain: Vec<Label> = u.last().and_then(|g| g.label()).into_iter().collect();
        chain.extend(v.iter().filter_map(|g| g.label()));
        let n: u64 = chain
            .windows(2)
            .map(|p| self.loc.get(p[0], p[1]) as u64)
            .sum();
        s + t + n
    }

    /// `{x ∘_n y} = Σ_s (−1)^{n+s} ∂^{(s)} (x ∘_{n+s} y)`.
    pub fn brace(&self, x: &Polynomial, n: u32, y: &Polynomial) -> Result<Polynomial> {
        let mut out = Polynomial::zero();
        for (u, a) in x.terms() {
            for (v, b) in y.terms() {
                let bound = self.vanishing_bound(u, v);
                let mut s = 0u64;
                while (n as u64) + s < bound {
                    let p = self.product(
                        &Polynomial::monomial(u.clone()),
                        n + s as u32,
                        &Polynomial::monomial(v.clone()),
                    )?;
                    let c =
                        sign((n as u64 + s) as i64) / Scalar::from_integer(factorial(s)) * a * b;
                    let d = vec![Gen::Deriv; s as usize];
                    out.add_scaled(&p.wrap(&d, &[]), &c);
                    s += 1;
                }
            }
        }
        Ok(self.normal_form(&out))
    }

    /// `R_n^c u`, evaluated through the module rules.
    pub fn right_action(&self, x: &Polynomial, n: u32, c: Label) -> Result<Polynomial> {
        self.check_element(x)?;
        self.check_index(n as u64)?;
        Ok(self.normal_form(&x.wrap(&[Gen::Right(n, c)], &[])))
    }
}

/// `(∂^s u) ∘_n y` by sesquilinearity alone: `(−1)^s n(n−1)…(n−s+1) u ∘_{n−s} y`.
pub fn sesquilinear_factor(s: u64, n: u64) -> Scalar {
    sign(s as i64) * falling(n as i64, s)
}

/// Conformal GSB test: `S ∪ Σ(X,N)` as module relations over `A(X)`.
pub fn conformal_gsb_check(
    spec: &OrderSpec,
    loc: &LocalityFunction,
    extra: &[Polynomial],
    caps: &Caps,
) -> Result<GsbCheck> {
    let mut p = sigma_xn(spec, loc);
    let mut extra_rules = Relations::default();
    for (i, f) in extra.iter().enumerate() {
        extra_rules.push_polynomial(f, spec, Origin::Input(format!("s{i}")))?;
    }
    p.module.extend(extra_rules);
    module_gsb_check(&p, caps)
}

/// A single left letter applied to a normal word, then normalised.
pub fn left_action(alg: &ConformalAlgebra, n: u32, a: Label, x: &Polynomial) -> Polynomial {
    alg.normal_form(&x.wrap(&[Gen::Left(n, a)], &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsb::{complete, CompletionOptions};
    use crate::module::split_null_extension;
    use crate::schema::Assignment;
    use crate::word::Alphabet;

    fn w(letters: &[Gen]) -> Word {
        Word::new(letters.to_vec())
    }

    const D: Gen = Gen::Deriv;

    fn one_generator(n: u32) -> (OrderSpec, LocalityFunction) {
        (
            OrderSpec::standard(Alphabet::new(["a"])),
            LocalityFunction::constant(1, n),
        )
    }

    #[test]
    fn normal_words_for_trivial_locality() {
        let (spec, loc) = one_generator(1);
        let a = Gen::Module(0);
        let l0 = Gen::Left(0, 0);
        assert_eq!(
            enumerate_normal_words(&spec, &loc, 3),
            vec![
                w(&[a]),
                w(&[D, a]),
                w(&[l0, a]),
                w(&[D, D, a]),
                w(&[D, l0, a]),
                w(&[l0, l0, a])
            ]
        );
    }

    #[test]
    fn b0_counts_are_powers_of_two() {
        let (_, loc) = one_generator(2);
        let words = b0_words(&loc, 6, 10);
        for k in 0..6 {
            assert_eq!(words.iter().filter(|w| w.len() == k + 1).count(), 1 << k);
        }
        assert!(words.iter().all(|w| is_b0_word(w, &loc)));
        assert!(!is_b0_word(&[Gen::Left(2, 0), Gen::Module(0)], &loc));
        assert!(!is_b0_word(&[D, Gen::Module(0)], &loc));
        assert!(is_normal_word(&[D, Gen::Left(1, 0), Gen::Module(0)], &loc));
    }

    #[test]
    fn algebra_relations() {
        let spec = OrderSpec::standard(Alphabet::new(["a"]));
        let ax = build_ax(&spec);
        let ld = ax.iter().find(|s| s.name == "ld[0]").unwrap();
        assert_eq!(
            ld.instantiate(&Assignment::new([0]), &spec).unwrap().len(),
            2
        );
        let rl = ax.iter().find(|s| s.name == "rl[0,0]").unwrap();
        let p = rl.instantiate(&Assignment::new([2, 1]), &spec).unwrap();
        let (r2, l1) = (Gen::Right(2, 0), Gen::Left(1, 0));
        assert_eq!(
            p,
            Polynomial::from_terms([(int(1), w(&[r2, l1])), (int(-1), w(&[l1, r2]))])
        );
    }

    #[test]
    fn right_multiplication_for_a_pair() {
        // labels v < h with N(h,v) = 2: R_1^v h + L_1^h v
        let spec = OrderSpec::standard(Alphabet::new(["v", "h"]));
        let loc = LocalityFunction::new(2, |a, b| [[2, 1], [2, 0]][a as usize][b as usize]);
        let s = right_mul_schema(1, 0, &loc);
        let p = s.instantiate(&Assignment::new([1]), &spec).unwrap();
        let expected = Polynomial::from_terms([
            (int(1), w(&[Gen::Right(1, 0), Gen::Module(1)])),
            (int(1), w(&[Gen::Left(1, 1), Gen::Module(0)])),
        ]);
        assert_eq!(p, expected);
        let p = s.instantiate(&Assignment::new([3]), &spec).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn extended_locality_instance() {
        let spec = OrderSpec::standard(Alphabet::new(["a", "b", "c"]));
        let loc = LocalityFunction::constant(3, 2);
        let s = locality_ex_schema(0, 1, &loc);
        let c = Gen::Module(2);
        let p = s
            .instantiate(&Assignment::new([2, 0]).with_tail(w(&[c])), &spec)
            .unwrap();
        let expected = Polynomial::from_terms([
            (int(1), w(&[Gen::Left(2, 0), Gen::Left(0, 1), c])),
            (int(-2), w(&[Gen::Left(1, 0), Gen::Left(1, 1), c])),
            (int(1), w(&[Gen::Left(0, 0), Gen::Left(2, 1), c])),
        ]);
        assert_eq!(p, expected);
    }

    #[test]
    fn operator_algebra_is_closed() {
        let spec = OrderSpec::standard(Alphabet::new(["a", "b"]));
        let mut p = ModulePresentation::new(spec.clone());
        p.algebra.schemas = build_ax(&spec);
        let c = complete(
            &split_null_extension(&p).unwrap(),
            &CompletionOptions::new(Caps::new(3, 4)),
        );
        assert!(c.new_rules.is_empty());
    }

    #[test]
    fn completion_recovers_extended_locality() {
        let (spec, loc) = one_generator(1);
        let caps = Caps::new(3, 4);
        let c = complete_module_for_test(&spec, &loc, caps);
        assert!(!c.is_empty());
        let sigma = sigma_xn(&spec, &loc).rule_set().unwrap();
        for r in &c {
            assert!(r.pattern.len() >= 3, "{}", spec.render(&r.pattern));
            assert!(sigma.normal_form(&r.polynomial()).is_zero());
        }
    }

    fn complete_module_for_test(
        spec: &OrderSpec,
        loc: &LocalityFunction,
        caps: Caps,
    ) -> Vec<crate::rewrite::Rule> {
        let p = build_mxn(spec, loc);
        complete(
            &split_null_extension(&p).unwrap(),
            &CompletionOptions::new(caps),
        )
        .new_rules
    }

    #[test]
    fn products_of_generators() {
        let spec = OrderSpec::standard(Alphabet::new(["a", "b"]));
        let loc = LocalityFunction::constant(2, 2);
        let alg = ConformalAlgebra::new(&spec, loc, 12).unwrap();
        let (a, b) = (alg.generator(0), alg.generator(1));
        let da = alg.derivative(&a);
        for n in 0..4 {
            let lhs = alg.product(&da, n, &b).unwrap();
            let rhs = if n == 0 {
                Polynomial::zero()
            } else {
                alg.product(&a, n - 1, &b).unwrap().scale(&int(-(n as i64)))
            };
            assert_eq!(lhs, rhs, "n = {n}");
        }
        assert!(alg.product(&a, 2, &b).unwrap().is_zero());
        assert!(alg.product(&a, 1, &b).unwrap().len() == 1);
        assert!(matches!(
            alg.product(&a, 13, &b),
            Err(Error::CapExceeded { .. })
        ));
    }
}
