//! Gröbner–Shirshov bases for left modules, via the split null extension.

use crate::error::{Error, Result};
use crate::gsb::{check_gsb, complete, Completion, CompletionOptions, GsbCheck};
use crate::poly::Polynomial;
use crate::rewrite::{Origin, Rule, RuleSet};
use crate::schema::{var, Caps, LetterTemplate, RelationSchema, TermTemplate};
use crate::word::{Gen, OrderSpec, Word};

/// Schemas together with concrete rules.
#[derive(Debug, Clone, Default)]
pub struct Relations {
    pub schemas: Vec<RelationSchema>,
    pub rules: Vec<Rule>,
}

impl Relations {
    pub fn push_polynomial(
        &mut self,
        p: &Polynomial,
        spec: &OrderSpec,
        origin: Origin,
    ) -> Result<()> {
        self.rules.push(Rule::from_polynomial(p, spec, origin)?);
        Ok(())
    }

    pub fn extend(&mut self, other: Relations) {
        self.schemas.extend(other.schemas);
        self.rules.extend(other.rules);
    }

    fn install(&self, set: &mut RuleSet) -> Result<()> {
        for s in &self.schemas {
            set.add_schema(s.clone())?;
        }
        for r in &self.rules {
            set.add_rule(r.clone());
        }
        Ok(())
    }
}

/// A left module over `k<O>/(Σ)` generated by `X` subject to `S`.
#[derive(Debug, Clone)]
pub struct ModulePresentation {
    pub spec: OrderSpec,
    /// `Σ`, over operator letters only.
    pub algebra: Relations,
    /// `S`, every word ending in exactly one module generator.
    pub module: Relations,
}

impl ModulePresentation {
    pub fn new(spec: OrderSpec) -> Self {
        ModulePresentation {
            spec,
            algebra: Relations::default(),
            module: Relations::default(),
        }
    }

    /// Module rules must consist of module words.
    pub fn validate(&self) -> Result<()> {
        for r in &self.module.rules {
            for w in std::iter::once(&r.pattern).chain(r.remainder.words()) {
                if !w.is_module_word() {
                    return Err(Error::NotModuleWord(self.spec.render(w)));
                }
            }
        }
        for r in &self.algebra.rules {
            if !r.pattern.is_operator_word() {
                return Err(Error::Schema {
                    schema: "algebra".into(),
                    reason: format!(
                        "{} contains a module generator",
                        self.spec.render(&r.pattern)
                    ),
                });
            }
        }
        Ok(())
    }

    /// `Σ ∪ S` without the annihilation rules: enough for reducing module words.
    pub fn rule_set(&self) -> Result<RuleSet> {
        let mut set = RuleSet::new(self.spec.clone());
        self.algebra.install(&mut set)?;
        self.module.install(&mut set)?;
        Ok(set)
    }
}

/// `x·g → 0` for one kind of follower letter `g`.
fn annihilator(x: u32, follower: LetterTemplate, name: &str) -> RelationSchema {
    let params: &[&str] = match follower {
        LetterTemplate::Left(..) | LetterTemplate::Right(..) => &["n"],
        _ => &[],
    };
    RelationSchema::new(format!("null[{name}]"), params).term(TermTemplate::new(
        vec![],
        vec![LetterTemplate::Module(x), follower],
    ))
}

/// `Σ ∪ S ∪ {x·a, x·y}`: the defining rules of the split null extension.
/// The annihilation rules are lazy families over every operator letter.
pub fn split_null_extension(p: &ModulePresentation) -> Result<RuleSet> {
    p.validate()?;
    let mut set = p.rule_set()?;
    let alphabet = &p.spec.alphabet;
    for x in alphabet.labels() {
        let mut followers = vec![(LetterTemplate::Deriv, "d".to_string())];
        for a in alphabet.labels() {
            followers.push((LetterTemplate::Left(var(0), a), format!("L{a}")));
            followers.push((LetterTemplate::Right(var(0), a), format!("R{a}")));
            followers.push((LetterTemplate::Module(a), format!("x{a}")));
        }
        for i in 0..alphabet.plain.len() as u32 {
            followers.push((LetterTemplate::Plain(i), format!("p{i}")));
        }
        for (f, name) in followers {
            set.add_schema(annihilator(x, f, &format!("{x}.{name}")))?;
        }
    }
    Ok(set)
}

pub fn module_gsb_check(p: &ModulePresentation, caps: &Caps) -> Result<GsbCheck> {
    Ok(check_gsb(&split_null_extension(p)?, caps))
}

/// Completes `Σ ∪ S` inside the split null extension.
pub fn complete_module(p: &ModulePresentation, opts: &CompletionOptions) -> Result<Completion> {
    Ok(complete(&split_null_extension(p)?, opts))
}

/// All rule-free words of `O^# X` with length `<= bound` and indices
/// `<= max_index`, ≺-ascending. Words are grown right to left, so a new
/// word is reducible exactly when a pattern starts at its first letter.
pub fn reduced_module_words(rules: &RuleSet, bound: usize, max_index: u32) -> Vec<Word> {
    let spec = &rules.spec;
    let alphabet = &spec.alphabet;
    let mut letters = vec![Gen::Deriv];
    for n in 0..=max_index {
        for a in alphabet.labels() {
            letters.push(Gen::Left(n, a));
            letters.push(Gen::Right(n, a));
        }
    }
    letters.extend((0..alphabet.plain.len() as u32).map(Gen::Plain));
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Gen>> = alphabet
        .labels()
        .map(|x| vec![Gen::Module(x)])
        .filter(|w| !rules.matches_prefix(w))
        .collect();
    while let Some(w) = stack.pop() {
        if w.len() < bound {
            for &g in &letters {
                let mut next = Vec::with_capacity(w.len() + 1);
                next.push(g);
                next.extend_from_slice(&w);
                if !rules.matches_prefix(&next) {
                    stack.push(next);
                }
            }
        }
        out.push(Word(w));
    }
    out.sort_by(|a, b| spec.cmp_words(a, b));
    out
}
