//! Canonical forms for operator-free terms: integral permutational symmetry,
//! dummy relabeling, sorting, merging, and recombination of bare integrals
//! into antisymmetrized ones.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use itertools::Itertools;
use num_traits::Signed;
use thiserror::Error;

use crate::model::{fresh_labels, sort_factors, Binding, Coeff, Expression, Index, Label, OrbitalSpace, TensorFactor, TensorKind, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("term still carries operators: {0}")]
    OperatorsRemain(String),
}

/// Largest number of dummy relabelings tried exhaustively per term.
pub const EXHAUSTIVE_LIMIT: usize = 40_320;

const HEURISTIC_ROUNDS: usize = 8;

/// Sign picked up by a tensor when brought to its canonical image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    /// The tensor equals its own negative.
    Zero,
}

impl Sign {
    fn times(self, other: Self) -> Self {
        match (self, other) {
            (Self::Zero, _) | (_, Self::Zero) => Self::Zero,
            (a, b) if a == b => Self::Plus,
            _ => Self::Minus,
        }
    }

    fn apply(self, c: Coeff) -> Coeff {
        match self {
            Self::Plus => c,
            Self::Minus => -c,
            Self::Zero => Coeff::from_integer(0),
        }
    }
}

/// Index permutations (with sign) under which each integral is invariant.
const ONE_ELECTRON_IMAGES: [([usize; 2], bool); 2] = [([0, 1], false), ([1, 0], false)];
const BARE_IMAGES: [[usize; 4]; 4] = [[0, 1, 2, 3], [2, 3, 0, 1], [1, 0, 3, 2], [3, 2, 1, 0]];
const ANTISYM_IMAGES: [([usize; 4], bool); 8] = [
    ([0, 1, 2, 3], false),
    ([2, 3, 0, 1], false),
    ([1, 0, 3, 2], false),
    ([3, 2, 1, 0], false),
    ([0, 1, 3, 2], true),
    ([1, 0, 2, 3], true),
    ([3, 2, 0, 1], true),
    ([2, 3, 1, 0], true),
];

fn pick_minimal<'a>(idx: &[Index], images: impl Iterator<Item = (&'a [usize], bool)>) -> (Vec<Index>, Sign) {
    let mut best: Option<(Vec<Index>, Sign)> = None;
    for (perm, negate) in images {
        let cand: Vec<Index> = perm.iter().map(|&k| idx[k]).collect();
        let sign = if negate { Sign::Minus } else { Sign::Plus };
        match &mut best {
            None => best = Some((cand, sign)),
            Some((b, s)) => {
                if cand < *b {
                    *b = cand;
                    *s = sign;
                } else if cand == *b && *s != sign {
                    *s = Sign::Zero;
                }
            }
        }
    }
    best.expect("at least the identity image")
}

/// Minimal-label representative of a tensor under its permutational symmetry.
///
/// `h` and `d` are symmetric, `V` has the four-element pair-swap group, `A`
/// adds the antisymmetric swaps within each pair, amplitudes are left alone.
pub fn canonical_tensor(t: &TensorFactor) -> (TensorFactor, Sign) {
    let idx = t.indices();
    let (indices, sign) = match t.kind() {
        TensorKind::Delta | TensorKind::OneElectron => {
            pick_minimal(idx, ONE_ELECTRON_IMAGES.iter().map(|(p, n)| (&p[..], *n)))
        }
        TensorKind::TwoElectronBare => pick_minimal(idx, BARE_IMAGES.iter().map(|p| (&p[..], false))),
        TensorKind::TwoElectronAntisym => pick_minimal(idx, ANTISYM_IMAGES.iter().map(|(p, n)| (&p[..], *n))),
        TensorKind::Amplitude { .. } => (idx.to_vec(), Sign::Plus),
    };
    (t.with_indices(indices), sign)
}

/// Canonical tensors of a term, sorted, with their accumulated sign.
fn canonical_factors(tensors: &[TensorFactor]) -> (Vec<TensorFactor>, Sign) {
    let mut sign = Sign::Plus;
    let mut out: Vec<TensorFactor> = tensors
        .iter()
        .map(|t| {
            let (c, s) = canonical_tensor(t);
            sign = sign.times(s);
            c
        })
        .collect();
    sort_factors(&mut out);
    (out, sign)
}

fn require_operator_free(term: &Term) -> Result<(), CanonError> {
    if term.is_operator_free() {
        Ok(())
    } else {
        Err(CanonError::OperatorsRemain(term.serialize()))
    }
}

/// Renames dummies, per space, to the fresh-label sequence in order of first
/// appearance in the sorted factor list. Free indices are untouched.
pub fn relabel_dummies(term: &Term) -> Result<Term, CanonError> {
    require_operator_free(term)?;
    let mut sorted: Vec<TensorFactor> = term.tensors().to_vec();
    sort_factors(&mut sorted);
    let free: BTreeSet<Label> = term
        .occurrences()
        .filter(|i| i.binding == Binding::Free)
        .map(|i| i.label)
        .collect();

    let mut sequences: BTreeMap<OrbitalSpace, _> = BTreeMap::new();
    let mut map: BTreeMap<Label, Label> = BTreeMap::new();
    for idx in sorted.iter().flat_map(|t| t.indices()) {
        if idx.binding != Binding::Dummy || map.contains_key(&idx.label) {
            continue;
        }
        let seq = sequences
            .entry(idx.space)
            .or_insert_with(|| fresh_labels(idx.space).filter(|l| !free.contains(l)));
        map.insert(idx.label, seq.next().expect("infinite sequence"));
    }
    let mut out = Term::new(term.coeff(), sorted, Vec::new());
    out.rename(&map);
    sort_factors(out.parts_mut().1);
    Ok(out)
}

/// An operator-free term in canonical form together with its coefficient-free key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalTerm {
    term: Term,
    key: String,
}

impl CanonicalTerm {
    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn into_term(self) -> Term {
        self.term
    }

    /// Serialization without the coefficient; equal keys mean mergeable terms.
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn coeff(&self) -> Coeff {
        self.term.coeff()
    }
}

/// Canonical form of an operator-free term, or `None` if the term is
/// identically zero by symmetry.
///
/// Tensor canonicalization and first-appearance relabeling are alternated to a
/// fixed point; if the term has few enough dummies, every relabeling within
/// each space is then tried and the smallest factor list kept.
pub fn canonicalize_term(term: &Term) -> Result<Option<CanonicalTerm>, CanonError> {
    require_operator_free(term)?;
    let mut current = Term::new(term.coeff(), term.tensors().to_vec(), Vec::new());
    for _ in 0..HEURISTIC_ROUNDS {
        let (factors, sign) = canonical_factors(current.tensors());
        if sign == Sign::Zero {
            return Ok(None);
        }
        let next = relabel_dummies(&Term::new(sign.apply(current.coeff()), factors, Vec::new()))?;
        if next == current {
            break;
        }
        current = next;
    }

    let mut groups: BTreeMap<OrbitalSpace, Vec<Label>> = BTreeMap::new();
    for (label, (idx, _)) in current.index_counts() {
        if idx.is_dummy() {
            groups.entry(idx.space).or_default().push(label);
        }
    }
    let count = groups
        .values()
        .map(|g| (1..=g.len()).product::<usize>())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);

    let (factors, sign) = if groups.is_empty() || count > EXHAUSTIVE_LIMIT {
        canonical_factors(current.tensors())
    } else {
        let sources: Vec<Label> = groups.values().flatten().copied().collect();
        let mut best: Option<(Vec<TensorFactor>, Sign)> = None;
        for targets in groups
            .values()
            .map(|g| g.iter().copied().permutations(g.len()).collect::<Vec<_>>())
            .multi_cartesian_product()
        {
            let map: BTreeMap<Label, Label> = sources.iter().copied().zip(targets.into_iter().flatten()).collect();
            let mut renamed = current.clone();
            renamed.rename(&map);
            let (cand, sign) = canonical_factors(renamed.tensors());
            match &mut best {
                None => best = Some((cand, sign)),
                Some((b, s)) => {
                    if cand < *b {
                        *b = cand;
                        *s = sign;
                    } else if cand == *b && *s != sign {
                        *s = Sign::Zero;
                    }
                }
            }
        }
        best.expect("at least the identity relabeling")
    };
    if sign == Sign::Zero {
        return Ok(None);
    }
    let term = Term::new(sign.apply(current.coeff()), factors, Vec::new());
    let key = term.structure();
    Ok(Some(CanonicalTerm { term, key }))
}

/// Stable sort by coefficient-free serialization.
pub fn sort_terms(expr: Expression) -> Expression {
    let mut keyed: Vec<(String, Term)> = expr.into_iter().map(|t| (t.structure(), t)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, t)| t).collect()
}

/// Collapses adjacent terms with equal structure, summing coefficients and
/// dropping cancellations. Expects [`sort_terms`] order.
pub fn merge_terms(expr: Expression) -> Expression {
    let mut out: Vec<(String, Term)> = Vec::new();
    for t in expr {
        let key = t.structure();
        match out.last_mut() {
            Some((k, prev)) if *k == key => {
                let sum = prev.coeff() + t.coeff();
                *prev = prev.clone().with_coeff(sum);
            }
            _ => out.push((key, t)),
        }
    }
    out.into_iter().map(|(_, t)| t).collect()
}

/// Canonicalizes every term, then sorts and merges.
pub fn canonicalize_expression(expr: &Expression) -> Result<Expression, CanonError> {
    let mut terms = Vec::with_capacity(expr.len());
    for t in expr {
        if let Some(c) = canonicalize_term(t)? {
            terms.push(c.into_term());
        }
    }
    Ok(merge_terms(sort_terms(Expression::new(terms))))
}

/// Replaces each pair `c X V[p,q,r,s]` and `-c X V[p,q,s,r]` by `c X A[p,q,r,s]`.
///
/// Partners of opposite sign but unequal size contribute the smaller
/// magnitude to `A` and keep the rest bare, so the result does not depend on
/// how a sum was split between `A` and `V` beforehand. Existing `A` factors
/// are expanded first for the same reason.
/// Partners are matched up to dummy relabeling; pairing is greedy in canonical
/// order. Passes repeat until no pair is left, since a term with several `V`
/// factors can only combine once its partners have been combined themselves.
pub fn antisymmetrize(expr: &Expression) -> Result<Expression, CanonError> {
    let mut current = canonicalize_expression(&expand_antisym(expr))?;
    loop {
        let (next, paired) = antisymmetrize_pass(current)?;
        if !paired {
            return Ok(next);
        }
        current = next;
    }
}

fn antisymmetrize_pass(expr: Expression) -> Result<(Expression, bool), CanonError> {
    let terms: Vec<Term> = expr.into_terms();
    let mut paired = false;
    let keys: Vec<String> = terms.iter().map(Term::structure).collect();
    let by_key: BTreeMap<&str, usize> = keys.iter().enumerate().map(|(n, k)| (k.as_str(), n)).collect();
    let mut consumed = alloc::vec![false; terms.len()];
    let mut out = Vec::with_capacity(terms.len());

    for (n, term) in terms.iter().enumerate() {
        if consumed[n] {
            continue;
        }
        consumed[n] = true;
        let mut replacement = None;
        for (pos, factor) in term.tensors().iter().enumerate() {
            if factor.kind() != TensorKind::TwoElectronBare {
                continue;
            }
            let mut partner = term.clone();
            let idx = partner.parts_mut().1[pos].indices_mut();
            idx.swap(2, 3);
            let Some(partner) = canonicalize_term(&partner)? else {
                continue;
            };
            if partner.key() == keys[n] {
                continue;
            }
            let Some(&m) = by_key.get(partner.key()) else {
                continue;
            };
            if consumed[m] {
                continue;
            }
            // term m is c2 * s * X' where X' is this term's swapped image
            let c1 = term.coeff();
            let s = partner.coeff() / c1;
            let d2 = terms[m].coeff() * s;
            if c1.is_positive() == d2.is_positive() {
                continue;
            }
            let k = if c1.abs() <= d2.abs() { c1 } else { -d2 };
            consumed[m] = true;
            paired = true;
            let mut combined = term.clone().with_coeff(k);
            let tensors = combined.parts_mut().1;
            tensors[pos] = tensors[pos].with_kind(TensorKind::TwoElectronAntisym);
            out.push(terms[m].clone().with_coeff(terms[m].coeff() + s * k));
            replacement = Some((combined, c1 - k));
            break;
        }
        match replacement {
            Some((combined, rest)) => {
                out.push(combined);
                out.push(term.clone().with_coeff(rest));
            }
            None => out.push(term.clone()),
        }
    }
    Ok((canonicalize_expression(&Expression::new(out))?, paired))
}

/// Rewrites every `A[p,q,r,s]` as `V[p,q,r,s] - V[p,q,s,r]`.
pub fn expand_antisym(expr: &Expression) -> Expression {
    let mut pending: Vec<Term> = expr.terms().to_vec();
    let mut out = Vec::new();
    while let Some(term) = pending.pop() {
        let Some(pos) = term
            .tensors()
            .iter()
            .position(|t| t.kind() == TensorKind::TwoElectronAntisym)
        else {
            out.push(term);
            continue;
        };
        let bare = term.tensors()[pos].with_kind(TensorKind::TwoElectronBare);
        let mut direct = term.clone();
        direct.parts_mut().1[pos] = bare.clone();
        let mut exchange = term.clone();
        let i = bare.indices();
        exchange.parts_mut().1[pos] = bare.with_indices(alloc::vec![i[0], i[1], i[3], i[2]]);
        let c = exchange.coeff();
        pending.push(direct);
        pending.push(exchange.with_coeff(-c));
    }
    out.reverse();
    Expression::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use alloc::format;

    fn idx(c: char) -> Index {
        Index::dummy(c)
    }

    fn canon_str(src: &str) -> String {
        format!("{}", canonicalize_expression(&parse(src).unwrap()).unwrap())
    }

    #[test]
    fn one_electron_is_symmetric() {
        let (t, s) = canonical_tensor(&TensorFactor::one_electron(idx('j'), idx('i')));
        assert_eq!(format!("{t}"), "h[i,j]");
        assert_eq!(s, Sign::Plus);
    }

    #[test]
    fn bare_integral_pair_swap() {
        let (t, s) = canonical_tensor(&TensorFactor::bare([idx('r'), idx('s'), idx('p'), idx('q')]));
        assert_eq!(format!("{t}"), "V[p,q,r,s]");
        assert_eq!(s, Sign::Plus);
        // exchange-type permutation is not a symmetry of V
        let (t, _) = canonical_tensor(&TensorFactor::bare([idx('p'), idx('q'), idx('s'), idx('r')]));
        assert_eq!(format!("{t}"), "V[p,q,s,r]");
    }

    #[test]
    fn antisym_integral_absorbs_sign() {
        let (t, s) = canonical_tensor(&TensorFactor::antisym([idx('p'), idx('q'), idx('s'), idx('r')]));
        assert_eq!(format!("{t}"), "A[p,q,r,s]");
        assert_eq!(s, Sign::Minus);
        let (_, s) = canonical_tensor(&TensorFactor::antisym([idx('p'), idx('p'), idx('r'), idx('s')]));
        assert_eq!(s, Sign::Zero);
    }

    #[test]
    fn delta_sorted_and_amplitude_untouched() {
        let (t, _) = canonical_tensor(&TensorFactor::delta(idx('q'), idx('p')));
        assert_eq!(format!("{t}"), "d[p,q]");
        let amp = TensorFactor::amplitude(&[idx('j'), idx('i')], &[idx('b'), idx('a')]).unwrap();
        assert_eq!(canonical_tensor(&amp), (amp, Sign::Plus));
    }

    #[test]
    fn canonical_tensor_is_idempotent() {
        let t = TensorFactor::antisym([idx('s'), idx('q'), idx('r'), idx('p')]);
        let (once, s1) = canonical_tensor(&t);
        let (twice, s2) = canonical_tensor(&once);
        assert_eq!(once, twice);
        assert_eq!(s2, Sign::Plus);
        assert_ne!(s1, Sign::Zero);
    }

    #[test]
    fn relabel_renames_bound_indices() {
        let t = parse("t[k=>c] t[k=>c]").unwrap();
        let r = relabel_dummies(&t.terms()[0]).unwrap();
        assert_eq!(r.serialize(), "+1 t[m=>e:vir] t[m=>e:vir]");
    }

    #[test]
    fn relabel_keeps_free_indices() {
        let t = parse("h[i,q] h[q,a]").unwrap();
        let r = relabel_dummies(&t.terms()[0]).unwrap();
        assert_eq!(r.serialize(), "+1 h[i,p] h[p,a]");
        let t = parse("h[m,q] h[q,n]").unwrap();
        let r = relabel_dummies(&t.terms()[0]).unwrap();
        assert_eq!(r.serialize(), "+1 h[m,p] h[p,n]");
    }

    #[test]
    fn relabel_requires_operator_free_terms() {
        let t = parse("c(i) a(i)").unwrap();
        assert!(matches!(relabel_dummies(&t.terms()[0]), Err(CanonError::OperatorsRemain(_))));
    }

    #[test]
    fn dummy_swaps_give_identical_canonical_terms() {
        assert_eq!(canon_str("A[m,n,m,n]"), canon_str("A[n,m,n,m]"));
        assert_eq!(canon_str("t[j=>a] t[i=>a] h[i,j]"), canon_str("t[l=>c] t[k=>c] h[l,k]"));
    }

    #[test]
    fn self_negative_term_vanishes() {
        assert_eq!(canon_str("A[m,m,a,b]"), "0");
        assert_eq!(canon_str("t[i,j=>a,b] A[a,b,c,d] d[c,d]"), "0");
    }

    #[test]
    fn sort_is_order_independent_and_idempotent() {
        let x = parse("h[a,b] - h[i,j]").unwrap();
        let y = parse("-h[i,j] + h[a,b]").unwrap();
        assert_eq!(sort_terms(x.clone()), sort_terms(y));
        let sorted = sort_terms(x);
        assert_eq!(sort_terms(sorted.clone()), sorted);
        assert!(sort_terms(Expression::default()).is_empty());
    }

    #[test]
    fn merge_examples() {
        assert_eq!(format!("{}", merge_terms(parse("1/2 h[i,j] + 1/2 h[i,j]").unwrap())), "+1 h[i,j]");
        assert!(merge_terms(parse("h[i,j] - h[i,j]").unwrap()).is_empty());
        let distinct = parse("h[a,b] + h[i,j]").unwrap();
        assert_eq!(merge_terms(distinct.clone()), distinct);
    }

    #[test]
    fn antisymmetrize_pairs_exchange_partners() {
        let e = parse("1/2 V[m,n,m,n] - 1/2 V[m,n,n,m]").unwrap();
        assert_eq!(format!("{}", antisymmetrize(&e).unwrap()), "+1/2 A[m,n,m,n]");

        let e = parse("-t[j=>b] t[i=>a] V[a,j,b,i] + t[j=>b] t[i=>a] V[a,j,i,b]").unwrap();
        let want = canonicalize_expression(&parse("-t[j=>b] t[i=>a] A[a,j,b,i]").unwrap()).unwrap();
        assert_eq!(antisymmetrize(&e).unwrap(), want);

        let lone = parse("V[p,q,r,s]").unwrap();
        assert_eq!(antisymmetrize(&lone).unwrap(), canonicalize_expression(&lone).unwrap());
    }

    #[test]
    fn antisymmetrize_matches_partner_under_relabeling() {
        // the exchange partner is written with different dummy names
        let e = parse("h[i,a] V[i,j,a,b] t[j=>b] - h[k,c] V[k,l,d,c] t[l=>d]").unwrap();
        let got = antisymmetrize(&e).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got.terms()[0].tensors().iter().filter(|t| t.kind() == TensorKind::TwoElectronAntisym).count(), 1);
    }

    #[test]
    fn expand_then_antisymmetrize_round_trips() {
        let e = canonicalize_expression(&parse("-t[j=>b] t[i=>a] A[a,j,b,i] + 1/2 t[i=>a] t[i=>a] A[m,n,m,n]").unwrap()).unwrap();
        let expanded = canonicalize_expression(&expand_antisym(&e)).unwrap();
        assert_eq!(expanded.len(), 4);
        assert_eq!(antisymmetrize(&expanded).unwrap(), e);
    }

    #[test]
    fn canonicalize_rejects_operators() {
        let e = parse("h[p,q] c(p) a(q)").unwrap();
        assert!(canonicalize_expression(&e).is_err());
    }
}
