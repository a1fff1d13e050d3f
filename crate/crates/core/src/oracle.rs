//! Brute-force quotient dimensions by exact Gaussian elimination over the
//! `R`-free word basis, independent of rewriting and completion.
//!
//! `R` letters never appear as columns: `R_m^c` acts on `R`-free words by
//! the closed formulas of the defining relations
//! `R_m ∂ = ∂R_m + mR_{m−1}`, `R_m L = L R_m` and
//! `R_m^c b = Σ_s (−1)^{m+s} ∂^{(s)} L^b_{m+s} c`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;

use crate::conformal::LocalityFunction;
use crate::poly::Polynomial;
use crate::scalar::{factorial, int, sign, Scalar};
use crate::word::{Gen, Label, Word};

/// The truncated universe of `R`-free module words.
#[derive(Debug, Clone, Copy)]
pub struct Universe {
    pub max_len: usize,
    pub max_index: u32,
}

impl Universe {
    fn contains(&self, w: &[Gen]) -> bool {
        w.len() <= self.max_len
            && w.iter()
                .all(|g| g.index().is_none_or(|n| n <= self.max_index))
    }
}

/// Defining relations: `R`-free operator polynomials `s` give `u·s·v·x`;
/// module polynomials `g` may contain `R` letters and give the closure of
/// `g` under left multiplication by `∂`, `L` and `R`.
#[derive(Debug, Clone, Default)]
pub struct OracleRelations {
    pub algebra: Vec<Polynomial>,
    pub module: Vec<Polynomial>,
}

/// `R_m^c w` for an `R`-free module word `w`, as an `R`-free polynomial.
fn right_on(m: u32, c: Label, w: &[Gen], loc: &LocalityFunction) -> Polynomial {
    match w.first() {
        Some(Gen::Deriv) => {
            let mut out = right_on(m, c, &w[1..], loc).wrap(&[Gen::Deriv], &[]);
            if m > 0 {
                out.add_scaled(&right_on(m - 1, c, &w[1..], loc), &int(m as i64));
            }
            out
        }
        Some(Gen::Left(n, a)) => right_on(m, c, &w[1..], loc).wrap(&[Gen::Left(*n, *a)], &[]),
        Some(Gen::Module(b)) => {
            let mut out = Polynomial::zero();
            let top = loc.get(*b, c);
            for s in 0..top.saturating_sub(m) {
                let mut word = vec![Gen::Deriv; s as usize];
                word.push(Gen::Left(m + s, *b));
                word.push(Gen::Module(c));
                let coeff = sign((m + s) as i64) / Scalar::from_integer(factorial(s as u64));
                out.add_term(Word(word), coeff);
            }
            out
        }
        _ => panic!("not an R-free module word"),
    }
}

/// Eliminates every `R` letter, rightmost first.
fn eliminate_right(p: &Polynomial, loc: &LocalityFunction) -> Polynomial {
    let mut out = Polynomial::zero();
    for (w, c) in p.terms() {
        match w.iter().rposition(|g| matches!(g, Gen::Right(..))) {
            None => out.add_term(w.clone(), c.clone()),
            Some(at) => {
                let Gen::Right(m, r) = w[at] else {
                    unreachable!()
                };
                let inner = right_on(m, r, &w[at + 1..], loc).wrap(&w[..at], &[]);
                out.add_scaled(&eliminate_right(&inner, loc), c);
            }
        }
    }
    out
}

fn universe_words(labels: &[Label], u: &Universe, keep: &dyn Fn(&[Gen]) -> bool) -> Vec<Word> {
    let mut letters = vec![Gen::Deriv];
    for n in 0..=u.max_index {
        letters.extend(labels.iter().map(|&a| Gen::Left(n, a)));
    }
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Gen>> = labels.iter().map(|&x| vec![Gen::Module(x)]).collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in frontier {
            if w.len() < u.max_len {
                for &g in &letters {
                    let mut v = Vec::with_capacity(w.len() + 1);
                    v.push(g);
                    v.extend_from_slice(&w);
                    next.push(v);
                }
            }
            if keep(&w) {
                out.push(Word(w));
            }
        }
        frontier = next;
    }
    out
}

type Row = BTreeMap<usize, Scalar>;

/// Incremental row echelon form; a row's pivot is its smallest column.
#[derive(Default)]
struct Echelon {
    pivots: HashMap<usize, Row>,
}

impl Echelon {
    /// The new echelon row, if the rank grew.
    fn insert(&mut self, mut row: Row) -> Option<&Row> {
        while let Some((&c, v)) = row.first_key_value() {
            let Some(p) = self.pivots.get(&c) else {
                let inv = v.recip();
                for x in row.values_mut() {
                    *x *= &inv;
                }
                return Some(self.pivots.entry(c).or_insert(row));
            };
            let f = v.clone();
            for (k, x) in p {
                let e = row.entry(*k).or_insert_with(Scalar::zero);
                *e -= &f * x;
                if e.is_zero() {
                    row.remove(k);
                }
            }
        }
        None
    }
}

/// An additive weight on words.
pub type Grading<'a> = &'a dyn Fn(&[Gen]) -> i64;

struct Block {
    words: Vec<Word>,
    column: HashMap<Word, usize>,
    echelon: Echelon,
}

/// `dim span(V_{<=d}) / (I ∩ span V_{<=d})` for `d = 0..=target.0`, where
/// `V` is the set of `R`-free module words of length `<= target.0` and
/// index `<= target.1`, and `I` is approximated from inside the universe. `grading` must be additive over letters and make every relation
/// homogeneous; it splits the elimination into independent blocks.
pub fn quotient_dimensions(
    labels: &[Label],
    loc: &LocalityFunction,
    relations: &OracleRelations,
    universe: &Universe,
    target: (usize, u32),
    grading: Option<Grading>,
) -> Vec<usize> {
    let (target_len, target_index) = target;
    let grade = |w: &[Gen]| grading.map_or(0, |g| g(w));
    let in_v = |w: &[Gen]| {
        w.len() <= target_len
            && w.iter()
                .all(|g| g.index().is_none_or(|n| n <= target_index))
    };
    let wanted: BTreeSet<i64> = universe_words(labels, universe, &in_v)
        .iter()
        .map(|w| grade(w))
        .collect();
    let mut blocks: BTreeMap<i64, Block> = BTreeMap::new();
    for w in universe_words(labels, universe, &|w| wanted.contains(&grade(w))) {
        blocks
            .entry(grade(&w))
            .or_insert_with(|| Block {
                words: Vec::new(),
                column: HashMap::new(),
                echelon: Echelon::default(),
            })
            .words
            .push(w);
    }
    for b in blocks.values_mut() {
        // words outside V first, then V by decreasing length
        b.words
            .sort_by_key(|w| (in_v(w), std::cmp::Reverse(w.len()), w.0.clone()));
        b.column = b
            .words
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
    }

    // inserts `p` if it lies inside the universe; returns the new echelon
    // row, whose support is as far down the column order as possible
    let insert = |blocks: &mut BTreeMap<i64, Block>, p: &Polynomial| -> Option<Polynomial> {
        let first = p.words().next()?;
        let block = blocks.get_mut(&grade(first))?;
        let mut row = Row::new();
        for (w, c) in p.terms() {
            if grading.is_some() && grade(w) != grade(first) {
                panic!("inhomogeneous relation for the oracle grading");
            }
            match block.column.get(w) {
                Some(&col) if universe.contains(w) => {
                    row.insert(col, c.clone());
                }
                _ => return None,
            }
        }
        let words = &block.words;
        let row = block.echelon.insert(row)?;
        Some(Polynomial::from_terms(
            row.iter().map(|(&c, x)| (x.clone(), words[c].clone())),
        ))
    };

    // u·s·v·x for every placement inside the universe
    let mut anchors: HashMap<Vec<Gen>, Vec<usize>> = HashMap::new();
    let mut max_anchor = 0;
    for (i, s) in relations.algebra.iter().enumerate() {
        if let Some(w) = s.words().next() {
            max_anchor = max_anchor.max(w.len());
            anchors.entry(w.0.clone()).or_default().push(i);
        }
    }
    let hosts: Vec<Word> = blocks
        .values()
        .flat_map(|b| b.words.iter().cloned())
        .collect();
    for w in &hosts {
        for at in 0..w.len() {
            for len in 1..=max_anchor.min(w.len() - at - 1) {
                let Some(hits) = anchors.get(&w[at..at + len]) else {
                    continue;
                };
                for &i in hits {
                    insert(
                        &mut blocks,
                        &relations.algebra[i].wrap(&w[..at], &w[at + len..]),
                    );
                }
            }
        }
    }

    // module relations, closed under ∂, L and R
    let mut ops = vec![None];
    for n in 0..=universe.max_index {
        for &a in labels {
            ops.push(Some((true, n, a)));
            ops.push(Some((false, n, a)));
        }
    }
    let mut work: Vec<Polynomial> = Vec::new();
    for g in &relations.module {
        work.extend(insert(&mut blocks, &eliminate_right(g, loc)));
    }
    while let Some(p) = work.pop() {
        for op in &ops {
            let q = match *op {
                None => p.wrap(&[Gen::Deriv], &[]),
                Some((true, n, a)) => p.wrap(&[Gen::Left(n, a)], &[]),
                Some((false, m, c)) => {
                    let mut q = Polynomial::zero();
                    for (w, k) in p.terms() {
                        q.add_scaled(&right_on(m, c, w, loc), k);
                    }
                    q
                }
            };
            if !q.is_zero() {
                work.extend(insert(&mut blocks, &q));
            }
        }
    }

    let mut counts = vec![(0usize, 0usize); target_len + 1];
    for b in blocks.values() {
        for w in b.words.iter().filter(|w| in_v(w)) {
            counts[w.len()].0 += 1;
        }
        for &c in b.echelon.pivots.keys() {
            if in_v(&b.words[c]) {
                counts[b.words[c].len()].1 += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(target_len + 1);
    let (mut words, mut pivots) = (0usize, 0usize);
    for (w, p) in counts {
        words += w;
        pivots += p;
        out.push(words - pivots);
    }
    out
}

/// Operator count (major) and conformal weight `#∂ − Σ(n+1)` (minor); every
/// relation of a free conformal algebra is homogeneous for it.
pub fn standard_grading(w: &[Gen]) -> i64 {
    let (mut ops, mut weight) = (0i64, 0i64);
    for g in w {
        match g {
            Gen::Deriv => weight += 1,
            Gen::Left(n, _) | Gen::Right(n, _) => {
                ops += 1;
                weight -= *n as i64 + 1;
            }
            _ => {}
        }
    }
    ops * 1000 + weight
}

/// `#{w : len(w) <= d}` for `d = 0..=target_len`.
pub fn cumulative_counts(words: &[Word], target_len: usize) -> Vec<usize> {
    (0..=target_len)
        .map(|d| words.iter().filter(|w| w.len() <= d).count())
        .collect()
}
