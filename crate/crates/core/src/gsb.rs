//! Compositions (critical pairs), triviality and cap-bounded completion.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use crate::poly::Polynomial;
use crate::rewrite::{Certificate, Origin, Rule, RuleSet};
use crate::schema::Caps;
use crate::word::{Gen, OrderSpec, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompositionKind {
    Inclusion,
    Intersection,
}

impl fmt::Display for CompositionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompositionKind::Inclusion => "inclusion",
            CompositionKind::Intersection => "intersection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub kind: CompositionKind,
    pub f: Rule,
    pub g: Rule,
    /// The ambiguity word.
    pub w: Word,
    pub value: Polynomial,
}

/// Inclusion: `f̄ = u ḡ v`, value `f - u g v`.
fn inclusion(f: &Rule, g: &Rule, at: usize) -> Composition {
    let u = &f.pattern[..at];
    let v = &f.pattern[at + g.pattern.len()..];
    Composition {
        kind: CompositionKind::Inclusion,
        w: f.pattern.clone(),
        value: f.polynomial().sub(&g.polynomial().wrap(u, v)),
        f: f.clone(),
        g: g.clone(),
    }
}

/// Intersection: `f̄ = u₁u₂`, `ḡ = u₂v₂`, value `f v₂ - u₁ g`.
fn intersection(f: &Rule, g: &Rule, at: usize) -> Composition {
    let u1 = &f.pattern[..at];
    let overlap = f.pattern.len() - at;
    let v2 = &g.pattern[overlap..];
    Composition {
        kind: CompositionKind::Intersection,
        w: f.pattern.wrap(&[], v2),
        value: f
            .polynomial()
            .wrap(&[], v2)
            .sub(&g.polynomial().wrap(u1, &[])),
        f: f.clone(),
        g: g.clone(),
    }
}

/// Compositions where `g` sits inside `f̄` or overlaps the end of `f̄`.
fn directed(f: &Rule, g: &Rule, same: bool) -> Vec<Composition> {
    let (fp, gp) = (&f.pattern, &g.pattern);
    let mut out = Vec::new();
    for at in 0..fp.len() {
        let rest = &fp[at..];
        if rest.starts_with(gp) {
            if !(same && at == 0 && gp.len() == fp.len()) {
                out.push(inclusion(f, g, at));
            }
        } else if at > 0 && gp.len() > rest.len() && gp.starts_with(rest) {
            out.push(intersection(f, g, at));
        }
    }
    out
}

/// Every composition of inclusion and intersection between `f` and `g`,
/// in both directions.
pub fn find_compositions(f: &Rule, g: &Rule) -> Vec<Composition> {
    let same = f == g;
    let mut out = directed(f, g, same);
    if !same {
        let mut back = directed(g, f, false);
        // identical patterns give the same inclusion twice
        if f.pattern == g.pattern {
            back.retain(|c| c.kind != CompositionKind::Inclusion);
        }
        out.extend(back);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Triviality {
    /// Reduces to zero; every step context is ≺ the ambiguity word.
    Trivial(Certificate),
    NonTrivial(Polynomial),
}

impl Triviality {
    pub fn is_trivial(&self) -> bool {
        matches!(self, Triviality::Trivial(_))
    }
}

pub fn is_trivial(c: &Composition, rules: &RuleSet) -> Triviality {
    let (nf, cert) = rules.normal_form_with_certificate(&c.value);
    if nf.is_zero() {
        debug_assert!(cert.verifies(&c.value, &nf));
        debug_assert!(cert
            .steps
            .iter()
            .all(|s| rules.spec.cmp_words(&s.context_word(), &c.w).is_lt()));
        Triviality::Trivial(cert)
    } else {
        Triviality::NonTrivial(nf)
    }
}

/// Finds all compositions among `rules` whose ambiguity word is within caps.
/// Uses a first-letter index so only candidate pairs are examined.
pub fn compositions_within(rules: &[Rule], caps: &Caps) -> Vec<Composition> {
    let index = first_letter_index(rules);
    let mut out = Vec::new();
    for (i, f) in rules.iter().enumerate() {
        out.extend(
            compositions_of(i, f, rules, &index, caps, |_| true)
                .into_iter()
                .map(|(_, c)| c),
        );
    }
    out
}

fn first_letter_index(rules: &[Rule]) -> HashMap<Gen, Vec<usize>> {
    let mut index: HashMap<Gen, Vec<usize>> = HashMap::new();
    for (j, r) in rules.iter().enumerate() {
        if let Some(&g) = r.pattern.first() {
            index.entry(g).or_default().push(j);
        }
    }
    index
}

/// Compositions where `f` (at position `i`) is the outer/left rule.
fn compositions_of(
    i: usize,
    f: &Rule,
    rules: &[Rule],
    index: &HashMap<Gen, Vec<usize>>,
    caps: &Caps,
    alive: impl Fn(usize) -> bool,
) -> Vec<(usize, Composition)> {
    let fp = &f.pattern;
    let mut out = Vec::new();
    for at in 0..fp.len() {
        let Some(cands) = index.get(&fp[at]) else {
            continue;
        };
        let rest = &fp[at..];
        for &j in cands {
            if !alive(j) {
                continue;
            }
            let g = &rules[j];
            let gp = &g.pattern;
            if rest.starts_with(gp) {
                if at == 0 && gp.len() == fp.len() && j <= i {
                    continue;
                }
                if caps.admits(fp) {
                    out.push((j, inclusion(f, g, at)));
                }
            } else if at > 0 && gp.len() > rest.len() && gp.starts_with(rest) {
                let c = intersection(f, g, at);
                if caps.admits(&c.w) {
                    out.push((j, c));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Trivial,
    NewRule(Polynomial),
    /// One of the two rules was superseded before the pair was examined.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub kind: CompositionKind,
    pub w: Word,
    pub f: Origin,
    pub g: Origin,
    pub outcome: Outcome,
}

impl TraceEntry {
    /// `kind | w | outcome`
    pub fn render(&self, spec: &OrderSpec) -> String {
        let outcome = match &self.outcome {
            Outcome::Trivial => "trivial".to_string(),
            Outcome::Skipped => "skipped".to_string(),
            Outcome::NewRule(p) => format!("new {}", p.render(spec)),
        };
        format!("{} | {} | {}", self.kind, spec.render(&self.w), outcome)
    }
}

/// Which cap boundaries a completion touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SaturationReport {
    /// Surviving rules whose pattern lies outside the caps; some of their
    /// compositions were not examined.
    pub rules_beyond_caps: Vec<Word>,
    pub compositions_examined: usize,
    /// Admitted rules later superseded by a rule with a smaller pattern.
    pub withdrawn: usize,
    /// The rule budget ran out before the queue emptied.
    pub truncated: bool,
}

impl SaturationReport {
    pub fn is_clean(&self) -> bool {
        self.rules_beyond_caps.is_empty() && !self.truncated
    }
}

#[derive(Debug, Clone)]
pub struct Completion {
    /// Input rules plus surviving new rules.
    pub closed: RuleSet,
    /// Surviving admitted rules, tails fully reduced, in admission order.
    pub new_rules: Vec<Rule>,
    pub report: SaturationReport,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionOptions {
    pub caps: Caps,
    pub max_new_rules: usize,
}

impl CompletionOptions {
    pub fn new(caps: Caps) -> Self {
        CompletionOptions {
            caps,
            max_new_rules: 1_000_000,
        }
    }
}

struct Pending {
    comp: Composition,
    left: usize,
    right: usize,
}

/// Shirshov completion within caps: compositions are examined smallest
/// ambiguity word first; nonzero normal forms become new monic rules, and
/// previously added rules whose pattern becomes reducible are withdrawn and
/// re-reduced. Input rules are never withdrawn.
pub fn complete(input: &RuleSet, opts: &CompletionOptions) -> Completion {
    let caps = opts.caps;
    let spec = input.spec.clone();
    let mut rules = input.clone();
    let mut entries: Vec<Rule> = input.instances(&caps);
    let base_len = entries.len();
    let mut alive = vec![true; base_len];
    // slot in `rules` for added entries
    let mut slots: HashMap<usize, usize> = HashMap::new();
    let mut index = first_letter_index(&entries);

    let mut heap: BinaryHeap<Reverse<(Vec<u64>, usize)>> = BinaryHeap::new();
    let mut pending: Vec<Option<Pending>> = Vec::new();
    let enqueue = |p: Pending,
                   heap: &mut BinaryHeap<Reverse<(Vec<u64>, usize)>>,
                   pending: &mut Vec<Option<Pending>>| {
        heap.push(Reverse((spec.key(&p.comp.w), pending.len())));
        pending.push(Some(p));
    };
    for (i, f) in entries.iter().enumerate() {
        for (right, c) in compositions_of(i, f, &entries, &index, &caps, |_| true) {
            enqueue(
                Pending {
                    comp: c,
                    left: i,
                    right,
                },
                &mut heap,
                &mut pending,
            );
        }
    }

    let mut report = SaturationReport::default();
    let mut trace = Vec::new();
    let mut added = 0usize;

    while let Some(Reverse((_, id))) = heap.pop() {
        let Pending { comp, left, right } = pending[id].take().expect("queued once");
        if !alive[left] || !alive[right] {
            trace.push(TraceEntry {
                kind: comp.kind,
                w: comp.w,
                f: comp.f.origin,
                g: comp.g.origin,
                outcome: Outcome::Skipped,
            });
            continue;
        }
        report.compositions_examined += 1;
        let nf = rules.normal_form(&comp.value);
        let outcome = if nf.is_zero() {
            Outcome::Trivial
        } else {
            Outcome::NewRule(nf.make_monic(&spec).expect("nonzero"))
        };
        trace.push(TraceEntry {
            kind: comp.kind,
            w: comp.w,
            f: comp.f.origin,
            g: comp.g.origin,
            outcome: outcome.clone(),
        });
        let Outcome::NewRule(first) = outcome else {
            continue;
        };
        if added >= opts.max_new_rules {
            report.truncated = true;
            break;
        }

        // admit, withdrawing superseded added rules
        let mut admissions = vec![first];
        while let Some(p) = admissions.pop() {
            let p = rules.normal_form(&p);
            if p.is_zero() {
                continue;
            }
            added += 1;
            let rule = Rule::from_polynomial(&p, &spec, Origin::Added(added)).expect("nonzero");
            let slot = rules.add_rule(rule.clone());
            let e = entries.len();
            entries.push(rule.clone());
            alive.push(true);
            slots.insert(e, slot);
            index.entry(rule.pattern[0]).or_default().push(e);
            for old in base_len..e {
                if alive[old] && entries[old].pattern.contains_factor(&rule.pattern) {
                    alive[old] = false;
                    report.withdrawn += 1;
                    if let Some(r) = rules.deactivate(slots[&old]) {
                        admissions.push(r.polynomial());
                    }
                }
            }
            let is_alive = |j: usize| alive[j];
            for (right, c) in compositions_of(e, &rule, &entries, &index, &caps, is_alive) {
                enqueue(
                    Pending {
                        comp: c,
                        left: e,
                        right,
                    },
                    &mut heap,
                    &mut pending,
                );
            }
            // the new rule as the inner/right partner of existing rules
            for (j, f) in entries.iter().enumerate().take(e) {
                if !alive[j] {
                    continue;
                }
                for c in directed(f, &rule, false) {
                    if caps.admits(&c.w) {
                        enqueue(
                            Pending {
                                comp: c,
                                left: j,
                                right: e,
                            },
                            &mut heap,
                            &mut pending,
                        );
                    }
                }
            }
        }
    }

    // reduce tails of surviving added rules
    let mut new_rules = Vec::new();
    let survivors: Vec<usize> = (base_len..entries.len()).filter(|&e| alive[e]).collect();
    let mut closed = input.clone();
    for &e in &survivors {
        let r = &entries[e];
        let tail = rules.normal_form(&r.remainder);
        new_rules.push(Rule {
            pattern: r.pattern.clone(),
            remainder: tail,
            origin: r.origin.clone(),
        });
    }
    for r in &new_rules {
        if !caps.admits(&r.pattern) {
            report.rules_beyond_caps.push(r.pattern.clone());
        }
        closed.add_rule(r.clone());
    }
    Completion {
        closed,
        new_rules,
        report,
        trace,
    }
}

/// Result of checking every in-cap composition for triviality.
#[derive(Debug, Clone, Default)]
pub struct GsbCheck {
    pub examined: usize,
    pub witnesses: Vec<(Composition, Polynomial)>,
}

impl GsbCheck {
    pub fn is_gsb(&self) -> bool {
        self.witnesses.is_empty()
    }
}

pub fn check_gsb(rules: &RuleSet, caps: &Caps) -> GsbCheck {
    let instances = rules.instances(caps);
    let comps = compositions_within(&instances, caps);
    let examined = comps.len();
    let reduce = |c: Composition| {
        let nf = rules.normal_form(&c.value);
        (!nf.is_zero()).then_some((c, nf))
    };
    #[cfg(feature = "parallel")]
    let mut witnesses: Vec<_> = {
        use rayon::prelude::*;
        comps.into_par_iter().filter_map(reduce).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut witnesses: Vec<_> = comps.into_iter().filter_map(reduce).collect();
    witnesses.sort_by(|a, b| rules.spec.cmp_words(&a.0.w, &b.0.w));
    GsbCheck {
        examined,
        witnesses,
    }
}

/// Re-runs the completion with the index cap raised by two and reports
/// whether the rules found below the original caps are unchanged.
pub fn is_cap_stable(input: &RuleSet, opts: &CompletionOptions, first: &Completion) -> bool {
    let mut wider = *opts;
    wider.caps.max_index += 2;
    let second = complete(input, &wider);
    let below = |c: &Completion| {
        let mut v: Vec<Polynomial> = c
            .new_rules
            .iter()
            .filter(|r| opts.caps.admits(&r.pattern))
            .map(Rule::polynomial)
            .collect();
        v.sort_by(|a, b| a.words().cmp(b.words()));
        v
    };
    below(first) == below(&second)
}
