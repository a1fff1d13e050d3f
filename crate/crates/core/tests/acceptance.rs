use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gsb_core::conformal::{
    b0_words, build_ax, build_mxn, enumerate_normal_words, is_b0_word, is_normal_word, sigma_xn,
    ConformalAlgebra, LocalityFunction,
};
use gsb_core::gsb::{
    check_gsb, complete, find_compositions, CompletionOptions, CompositionKind, Outcome,
};
use gsb_core::lie::{
    build_alx, build_envelope, commutation_schema, envelope, LambdaBracket,
    LieConformalPresentation, Speciality,
};
use gsb_core::module::{
    module_gsb_check, reduced_module_words, split_null_extension, ModulePresentation,
};
use gsb_core::oracle::{
    cumulative_counts, quotient_dimensions, standard_grading, OracleRelations, Universe,
};
use gsb_core::rewrite::{Rule, RuleSet};
use gsb_core::scalar::{binomial, int};
use gsb_core::schema::Caps;
use gsb_core::word::{DerivSlot, TieBreak};
use gsb_core::{Alphabet, Gen, Label, OrderSpec, Polynomial, Scalar, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const L1_LIMIT: Duration = Duration::from_secs(10);
const L2_LIMIT: Duration = Duration::from_secs(60);
const L3_LIMIT: Duration = Duration::from_secs(60);
const L4_LIMIT: Duration = Duration::from_secs(60);
const L5_LIMIT: Duration = Duration::from_secs(120);
const L6_LIMIT: Duration = Duration::from_secs(60);

fn w(letters: &[Gen]) -> Word {
    Word(letters.to_vec())
}

fn hv() -> LieConformalPresentation {
    let spec = OrderSpec::standard(Alphabet::new(["v", "h"])).with_left(TieBreak::LabelMajor);
    let loc = LocalityFunction::new(2, |a, b| [[2, 1], [2, 0]][a as usize][b as usize]);
    LieConformalPresentation::new(spec, loc)
        .bracket(
            0,
            0,
            LambdaBracket::zero()
                .with(0, 1, 0, int(1))
                .with(0, 0, 1, int(2)),
        )
        .bracket(
            0,
            1,
            LambdaBracket::zero()
                .with(1, 1, 0, int(1))
                .with(1, 0, 1, int(1)),
        )
        .bracket(1, 0, LambdaBracket::zero().with(1, 0, 1, int(1)))
}

fn virasoro() -> LieConformalPresentation {
    let spec = OrderSpec::standard(Alphabet::new(["v"])).with_deriv(DerivSlot::BelowLeftIndex(2));
    LieConformalPresentation::new(spec, LocalityFunction::constant(1, 3)).bracket(
        0,
        0,
        LambdaBracket::zero()
            .with(0, 1, 0, int(1))
            .with(0, 0, 1, int(2)),
    )
}

fn closed_rules(p: &ModulePresentation, new_rules: &[Rule]) -> RuleSet {
    let mut set = p.rule_set().unwrap();
    for r in new_rules {
        set.add_rule(r.clone());
    }
    set
}

/// Reduces the composition of `f` and `g` at `target` with a certificate.
fn replay_composition(f: &Rule, g: &Rule, target: &Word, closed: &RuleSet) -> usize {
    let spec = &closed.spec;
    let c = find_compositions(f, g)
        .into_iter()
        .find(|c| &c.w == target)
        .unwrap_or_else(|| panic!("no composition at {}", spec.render(target)));
    assert_eq!(c.kind, CompositionKind::Intersection);
    let (nf, cert) = closed.normal_form_with_certificate(&c.value);
    assert!(nf.is_zero(), "residue {}", nf.render(spec));
    assert!(cert.verifies(&c.value, &nf));
    assert!(!cert.is_empty());
    for s in &cert.steps {
        assert!(spec.cmp_words(&s.context_word(), target).is_lt());
    }
    cert.len()
}

/// Quotient dimensions of module words (length `<= d`, index `<= n`) by
/// the presentation's defining relations, computed without rewriting.
fn oracle_dimensions(
    p: &ModulePresentation,
    loc: &LocalityFunction,
    d: usize,
    n: u32,
    slack: usize,
) -> Vec<usize> {
    let spec = &p.spec;
    let caps = Caps::new(n, d + slack);
    let r_free = |q: &Polynomial| {
        q.words()
            .all(|w| w.iter().all(|g| !matches!(g, Gen::Right(..))))
    };
    let mut rel = OracleRelations::default();
    for s in &p.algebra.schemas {
        rel.algebra.extend(
            s.instances(&caps, spec)
                .iter()
                .map(Rule::polynomial)
                .filter(|q| r_free(q)),
        );
    }
    for s in p
        .module
        .schemas
        .iter()
        .filter(|s| s.name.starts_with("loc"))
    {
        rel.module
            .extend(s.instances(&caps, spec).iter().map(Rule::polynomial));
    }
    rel.module
        .extend(p.module.rules.iter().map(Rule::polynomial));
    let labels: Vec<Label> = spec.alphabet.labels().collect();
    let universe = Universe {
        max_len: d + slack,
        max_index: n,
    };
    quotient_dimensions(
        &labels,
        loc,
        &rel,
        &universe,
        (d, n),
        Some(&standard_grading),
    )
}

fn lemma_algebra_closed() -> String {
    let spec = OrderSpec::standard(Alphabet::new(["a", "b"]));
    let mut p = ModulePresentation::new(spec.clone());
    p.algebra.schemas = build_ax(&spec);
    let mut set = RuleSet::new(spec);
    for s in &p.algebra.schemas {
        set.add_schema(s.clone()).unwrap();
    }
    let c = complete(&set, &CompletionOptions::new(Caps::new(6, 5)));
    assert!(c.report.is_clean());
    assert!(c.new_rules.is_empty());
    assert!(!c.trace.is_empty());
    for t in &c.trace {
        assert_eq!(t.kind, CompositionKind::Intersection);
        assert!(
            t.f.family_name().starts_with("rl["),
            "{}",
            t.f.family_name()
        );
        assert!(t.g.family_name().starts_with("ld"), "{}", t.g.family_name());
        assert_eq!(t.outcome, Outcome::Trivial);
    }
    format!("{} compositions, all trivial", c.trace.len())
}

fn extended_locality_is_forced() -> String {
    let spec = OrderSpec::standard(Alphabet::new(["a", "b"]));
    let loc = LocalityFunction::constant(2, 2);
    let (k, d) = (6, 5);
    let p = build_mxn(&spec, &loc);
    let c = complete(
        &split_null_extension(&p).unwrap(),
        &CompletionOptions::new(Caps::new(k, d)),
    );
    assert!(c.report.is_clean());

    // direct instantiation: L_n^a L_m^b u with n >= N(a,b) and L_m^b u in B_0
    let mut expected = BTreeSet::new();
    for u in b0_words(&loc, d - 1, k)
        .into_iter()
        .filter(|u| u.len() >= 2)
    {
        for a in 0..2 {
            for n in loc.get(a, u[0].label().unwrap())..=k {
                let mut letters = vec![Gen::Left(n, a)];
                letters.extend_from_slice(&u);
                expected.insert(Word(letters));
            }
        }
    }
    let got: BTreeSet<Word> = c.new_rules.iter().map(|r| r.pattern.clone()).collect();
    assert_eq!(got, expected);

    let sigma = sigma_xn(&spec, &loc).rule_set().unwrap();
    for r in &c.new_rules {
        let (a, b) = match (r.pattern[0], r.pattern[1]) {
            (Gen::Left(_, a), Gen::Left(_, b)) => (a, b),
            _ => panic!("unexpected pattern {}", spec.render(&r.pattern)),
        };
        assert!(is_b0_word(&r.pattern[1..], &loc));
        let schema = gsb_core::conformal::locality_ex_schema(a, b, &loc);
        let inst = schema.match_at(&r.pattern, 0, &spec).expect("instance");
        assert_eq!(inst.pattern, r.pattern);
        assert!(r.remainder.words().all(|x| is_normal_word(x, &loc)));
        assert_eq!(
            sigma.normal_form(&inst.remainder),
            r.remainder,
            "{}",
            spec.render(&r.pattern)
        );
    }
    format!("{} rules, each an instance", c.new_rules.len())
}

fn basis_agreement() -> String {
    let mut summary = Vec::new();
    for n in 1..=3u32 {
        let t = Instant::now();
        let spec = OrderSpec::standard(Alphabet::new(["a"]));
        let loc = LocalityFunction::constant(1, n);
        let bound = 6;
        let p = build_mxn(&spec, &loc);
        let c = complete(
            &split_null_extension(&p).unwrap(),
            &CompletionOptions::new(Caps::new(n, bound)),
        );
        assert!(c.report.is_clean());
        let closed = closed_rules(&p, &c.new_rules);
        let normal = enumerate_normal_words(&spec, &loc, bound);
        let reduced = reduced_module_words(&closed, bound, n);
        assert_eq!(normal, reduced, "N = {n}");
        let dims = oracle_dimensions(&p, &loc, bound, n, n as usize - 1);
        assert_eq!(dims, cumulative_counts(&normal, bound), "N = {n}");
        assert!(t.elapsed() < L3_LIMIT, "N = {n} took {:?}", t.elapsed());
        summary.push(format!("N={n}: {}", normal.len()));
    }
    summary.join(", ")
}

fn hv_example() -> String {
    let lie = hv();
    let spec = lie.spec.clone();
    let caps = Caps::new(4, 6);
    let r = envelope(&lie, &CompletionOptions::new(caps), 6).unwrap();
    assert!(r.completion.new_rules.is_empty());
    assert_eq!(r.speciality, Speciality::Special);
    let check = module_gsb_check(&r.presentation, &caps).unwrap();
    assert!(check.is_gsb());

    let closed = split_null_extension(&r.presentation).unwrap();
    let (v, h) = (Gen::Module(0), Gen::Module(1));
    let (r0v, l0h, l0v) = (Gen::Right(0, 0), Gen::Left(0, 1), Gen::Left(0, 0));
    let f = closed.find(&[r0v, l0h]).unwrap().1;
    let g = closed.find(&[l0h, v]).unwrap().1;
    assert_eq!(g.pattern, w(&[l0h, v]));
    let steps = replay_composition(&f, &g, &w(&[r0v, l0h, v]), &closed);

    let mut expected = Vec::new();
    for x in [v, h] {
        for s in 0..6 {
            for k in 0..6 - s {
                let mut letters = vec![Gen::Deriv; s];
                letters.extend(std::iter::repeat_n(l0v, k));
                letters.push(x);
                expected.push(Word(letters));
            }
        }
    }
    expected.sort_by(|a, b| spec.cmp_words(a, b));
    assert_eq!(r.basis, expected);
    format!(
        "GSB ({} compositions), certificate {steps} steps, basis {}",
        check.examined,
        r.basis.len()
    )
}

fn virasoro_example() -> String {
    let lie = virasoro();
    let spec = lie.spec.clone();
    let caps = Caps::new(8, 6);
    let r = envelope(&lie, &CompletionOptions::new(caps), 4).unwrap();
    let (l2, v) = (Gen::Left(2, 0), Gen::Module(0));
    let target = w(&[l2, l2, v]);
    let patterns: Vec<&Word> = r.completion.new_rules.iter().map(|x| &x.pattern).collect();
    assert_eq!(patterns, [&target]);
    assert!(r.completion.new_rules[0].remainder.is_zero());
    assert_eq!(r.speciality, Speciality::Special);

    let closed = &r.completion.closed;
    let f = closed.find(&[Gen::Right(0, 0), l2]).unwrap().1;
    let g = r.completion.new_rules[0].clone();
    let steps = replay_composition(&f, &g, &w(&[Gen::Right(0, 0), l2, l2, v]), closed);

    let mut p = r.presentation.clone();
    p.module.rules.push(g);
    let check = module_gsb_check(&p, &caps).unwrap();
    assert!(check.is_gsb(), "{} witnesses", check.witnesses.len());
    format!(
        "one new rule {}, certificate {steps} steps, GSB ({} compositions)",
        spec.render(&target),
        check.examined
    )
}

fn operator_halves_closed() -> String {
    let mut out = Vec::new();
    for (name, lie, caps) in [
        ("HV", hv(), Caps::new(6, 5)),
        ("Vir", virasoro(), Caps::new(8, 6)),
    ] {
        let mut set = RuleSet::new(lie.spec.clone());
        for s in build_alx(&lie) {
            set.add_schema(s).unwrap();
        }
        let c = complete(&set, &CompletionOptions::new(caps));
        assert!(c.report.is_clean(), "{name}");
        assert!(
            c.new_rules.is_empty(),
            "{name}: {} new rules",
            c.new_rules.len()
        );
        let check = check_gsb(&set, &caps);
        assert!(check.is_gsb(), "{name}");
        out.push(format!(
            "{name}: {} compositions",
            c.report.compositions_examined
        ));
    }
    out.join(", ")
}

fn random_letter(rng: &mut ChaCha8Rng, labels: u32, max_index: u32) -> Gen {
    match rng.gen_range(0..3) {
        0 => Gen::Deriv,
        1 => Gen::Left(rng.gen_range(0..=max_index), rng.gen_range(0..labels)),
        _ => Gen::Right(rng.gen_range(0..=max_index), rng.gen_range(0..labels)),
    }
}

fn random_word(rng: &mut ChaCha8Rng, labels: u32, max_index: u32, max_len: usize) -> Vec<Gen> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| random_letter(rng, labels, max_index))
        .collect()
}

fn order_compatibility(rng: &mut ChaCha8Rng) -> usize {
    let specs = [
        OrderSpec::standard(Alphabet::new(["a", "b"])),
        OrderSpec::standard(Alphabet::new(["a", "b"])).with_left(TieBreak::LabelMajor),
        OrderSpec::standard(Alphabet::new(["a", "b"])).with_deriv(DerivSlot::BelowLeftIndex(2)),
        OrderSpec::deglex(Alphabet::new(["a", "b"])),
    ];
    let mut violations = 0;
    for i in 0..10_000 {
        let spec = &specs[i % specs.len()];
        let (u, v) = (random_word(rng, 2, 3, 4), random_word(rng, 2, 3, 4));
        let (a, b) = (random_word(rng, 2, 3, 3), random_word(rng, 2, 3, 3));
        let outer = |x: &[Gen]| -> Vec<Gen> { a.iter().chain(x).chain(&b).cloned().collect() };
        let before = spec.cmp_words(&u, &v);
        let after = spec.cmp_words(&outer(&u), &outer(&v));
        if before != after || spec.cmp_words(&v, &u) != before.reverse() {
            violations += 1;
        }
    }
    violations
}

fn random_element(rng: &mut ChaCha8Rng) -> Polynomial {
    let terms = rng.gen_range(1..=4);
    Polynomial::from_terms((0..terms).map(|_| {
        let mut letters = random_word(rng, 2, 3, 4);
        letters.push(Gen::Module(rng.gen_range(0..2)));
        let c = Scalar::new(
            rng.gen_range(-5i64..=5).into(),
            rng.gen_range(1i64..=4).into(),
        );
        (c, Word(letters))
    }))
}

fn normal_form_properties(rng: &mut ChaCha8Rng) {
    let spec = OrderSpec::standard(Alphabet::new(["a", "b"]));
    let loc = LocalityFunction::constant(2, 2);
    let p = build_mxn(&spec, &loc);
    let c = complete(
        &split_null_extension(&p).unwrap(),
        &CompletionOptions::new(Caps::new(4, 5)),
    );
    let closed = &c.closed;
    for _ in 0..200 {
        let (f, g) = (random_element(rng), random_element(rng));
        let (alpha, beta) = (
            int(rng.gen_range(-3..=3)),
            Scalar::new(1.into(), rng.gen_range(1i64..=3).into()),
        );
        let nf = closed.normal_form(&f);
        assert_eq!(closed.normal_form(&nf), nf);
        assert!(nf.words().all(|w| closed.is_reduced(w)));
        let mut lin = f.scale(&alpha);
        lin.add_scaled(&g, &beta);
        let mut expected = nf.scale(&alpha);
        expected.add_scaled(&closed.normal_form(&g), &beta);
        assert_eq!(closed.normal_form(&lin), expected);
    }
}

fn conformal_identities() -> usize {
    let spec = OrderSpec::standard(Alphabet::new(["a", "b"]));
    let alg = ConformalAlgebra::new(&spec, LocalityFunction::constant(2, 2), 16).unwrap();
    let gens: Vec<Polynomial> = (0..2).map(|c| alg.generator(c)).collect();
    let mut sample: Vec<Polynomial> = gens.clone();
    sample.extend(gens.iter().map(|x| alg.derivative(x)));
    sample.push(alg.product(&gens[0], 1, &gens[1]).unwrap());
    let prod = |x: &Polynomial, n: u32, y: &Polynomial| alg.product(x, n, y).unwrap();
    let brace = |x: &Polynomial, n: u32, y: &Polynomial| alg.brace(x, n, y).unwrap();
    let mut checked = 0;

    // associativity on generator triples
    for a in &gens {
        for b in &gens {
            for c in &gens {
                for n in 0..=3u32 {
                    for m in 0..=3u32 {
                        let lhs = prod(a, n, &prod(b, m, c));
                        let mut rhs = Polynomial::zero();
                        for s in 0..=n {
                            let t = prod(&prod(a, n - s, b), m + s, c);
                            rhs.add_scaled(&t, &binomial(n as i64, s as i64));
                        }
                        assert_eq!(lhs, alg.normal_form(&rhs), "n={n} m={m}");
                        checked += 1;
                    }
                }
            }
        }
    }

    for x in &sample {
        for y in &sample {
            for n in 0..=3u32 {
                let dx = alg.derivative(x);
                let dy = alg.derivative(y);
                let prev = |f: &dyn Fn(u32) -> Polynomial| {
                    if n == 0 {
                        Polynomial::zero()
                    } else {
                        f(n - 1)
                    }
                };
                // sesquilinearity
                let rhs = prev(&|k| prod(x, k, y)).scale(&int(-(n as i64)));
                assert_eq!(prod(&dx, n, y), rhs);
                let mut rhs = alg.derivative(&prod(x, n, y));
                rhs.add_scaled(&prev(&|k| prod(x, k, y)), &int(n as i64));
                assert_eq!(prod(x, n, &dy), alg.normal_form(&rhs));
                // braces
                let mut rhs = alg.derivative(&brace(x, n, y));
                rhs.add_scaled(&prev(&|k| brace(x, k, y)), &int(n as i64));
                assert_eq!(brace(&dx, n, y), alg.normal_form(&rhs));
                let rhs = prev(&|k| brace(x, k, y)).scale(&int(-(n as i64)));
                assert_eq!(brace(x, n, &dy), rhs);
                for (c, g) in gens.iter().enumerate() {
                    if y == g {
                        assert_eq!(brace(x, n, y), alg.right_action(x, n, c as Label).unwrap());
                    }
                }
                checked += 4;
            }
        }
    }
    for a in &gens {
        for b in &gens {
            for c in &gens {
                for n in 0..=3u32 {
                    for m in 0..=3u32 {
                        assert_eq!(prod(a, n, &brace(b, m, c)), brace(&prod(a, n, b), m, c));
                        checked += 1;
                    }
                }
            }
        }
    }
    checked
}

fn properties() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let violations = order_compatibility(&mut rng);
    assert_eq!(violations, 0);
    normal_form_properties(&mut rng);
    let identities = conformal_identities();
    format!("10000 order quadruples, 200 normal forms, {identities} identities")
}

fn odd_generator() -> String {
    let spec = OrderSpec::standard(Alphabet::new(["e"]).with_parity(vec![1]));
    let loc = LocalityFunction::constant(1, 2);
    let lie = LieConformalPresentation::new(spec.clone(), loc.clone());
    let schema = commutation_schema(&lie, 0, 0).unwrap();
    let word = w(&[Gen::Left(3, 0), Gen::Left(1, 0)]);
    let rule = schema.match_at(&word, 0, &spec).unwrap();
    let swapped = w(&[Gen::Left(1, 0), Gen::Left(3, 0)]);
    assert_eq!(rule.polynomial().coeff(&swapped), int(1));
    assert!(schema
        .match_at(&w(&[Gen::Left(2, 0), Gen::Left(2, 0)]), 0, &spec)
        .is_some());

    let caps = Caps::new(4, 6);
    let r = envelope(&lie, &CompletionOptions::new(caps), 4).unwrap();
    assert!(r.completion.report.is_clean());
    let p = build_envelope(&lie).unwrap();
    let closed = closed_rules(&p, &r.completion.new_rules);
    let d = 4;
    let words: Vec<Word> = reduced_module_words(&closed, d, 2);
    let dims = oracle_dimensions(&p, &loc, d, 2, 1);
    assert_eq!(dims, cumulative_counts(&words, d));
    format!("{}, dimensions {:?}", r.speciality.label(), dims)
}

type Criterion = (&'static str, fn() -> String, Option<Duration>);

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        (
            "1 operator relations are closed",
            lemma_algebra_closed,
            Some(L1_LIMIT),
        ),
        (
            "2 extended locality is forced",
            extended_locality_is_forced,
            Some(L2_LIMIT),
        ),
        (
            "3 normal words, reduced words and oracle agree",
            basis_agreement,
            None,
        ),
        ("4 two-generator envelope", hv_example, Some(L4_LIMIT)),
        (
            "5 Virasoro envelope at N=3",
            virasoro_example,
            Some(L5_LIMIT),
        ),
        (
            "6 commutator halves add nothing",
            operator_halves_closed,
            Some(L6_LIMIT),
        ),
        ("7 property suites", properties, None),
        ("8 odd generator", odd_generator, None),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let line = match outcome {
            Ok(detail) if limit.is_none_or(|l| elapsed < l) => {
                format!(
                    "PASS criterion {name}: {detail} ({:.2}s)",
                    elapsed.as_secs_f64()
                )
            }
            Ok(detail) => {
                failed.push(name);
                format!(
                    "FAIL criterion {name}: {detail}, over time limit ({:.2}s)",
                    elapsed.as_secs_f64()
                )
            }
            Err(e) => {
                failed.push(name);
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!(
                    "FAIL criterion {name}: {msg} ({:.2}s)",
                    elapsed.as_secs_f64()
                )
            }
        };
        let _ = writeln!(stdout, "{line}");
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
