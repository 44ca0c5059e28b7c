//! Indices, operators, tensor factors, terms and expressions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Exact rational coefficient of a term.
pub type Coeff = Rational64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("cannot infer an orbital space for letter '{0}'; annotate it with :occ, :vir or :gen")]
    UnknownLetter(char),
    #[error("{kind} expects {expected} indices, got {got}")]
    Arity {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("amplitude index {0} must be occupied below and virtual above")]
    AmplitudeSpace(Label),
    #[error("index {label} occurs {count} times but is marked {binding:?}")]
    BindingViolation {
        label: Label,
        count: usize,
        binding: Binding,
    },
    #[error("index {0} occurs with inconsistent space or binding")]
    InconsistentIndex(Label),
}

/// Orbital space of an index relative to the reference determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrbitalSpace {
    Occupied,
    Virtual,
    General,
}

impl OrbitalSpace {
    /// Letter convention: i-n occupied, a-d virtual, p-s general.
    pub fn infer(letter: char) -> Result<Self, ModelError> {
        match letter {
            'i'..='n' => Ok(Self::Occupied),
            'a'..='d' => Ok(Self::Virtual),
            'p'..='s' => Ok(Self::General),
            other => Err(ModelError::UnknownLetter(other)),
        }
    }

    /// `None` means the two spaces are disjoint.
    pub fn intersect(self, other: Self) -> Option<Self> {
        use OrbitalSpace::*;
        match (self, other) {
            (General, x) | (x, General) => Some(x),
            (x, y) if x == y => Some(x),
            _ => None,
        }
    }

    pub fn annotation(self) -> &'static str {
        match self {
            Self::Occupied => "occ",
            Self::Virtual => "vir",
            Self::General => "gen",
        }
    }

    pub fn from_annotation(tag: &str) -> Option<Self> {
        match tag {
            "occ" => Some(Self::Occupied),
            "vir" => Some(Self::Virtual),
            "gen" => Some(Self::General),
            _ => None,
        }
    }

    fn fresh_letters(self) -> &'static [char] {
        match self {
            Self::Occupied => &['m', 'n', 'o'],
            Self::Virtual => &['e', 'f', 'g'],
            Self::General => &['p', 'q', 'r', 's'],
        }
    }
}

/// Orbital label: a base letter with an optional ordinal (`m`, `m1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    letter: char,
    ordinal: Option<u32>,
}

impl Label {
    pub const fn new(letter: char, ordinal: Option<u32>) -> Self {
        Self { letter, ordinal }
    }

    pub const fn letter(self) -> char {
        self.letter
    }

    pub const fn ordinal(self) -> Option<u32> {
        self.ordinal
    }
}

impl From<char> for Label {
    fn from(letter: char) -> Self {
        Self::new(letter, None)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char(self.letter)?;
        if let Some(n) = self.ordinal {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Endless sequence of engine-allocated labels for one space: `m, n, o, m1, n1, o1, m2, ...`.
pub fn fresh_labels(space: OrbitalSpace) -> impl Iterator<Item = Label> {
    let letters = space.fresh_letters();
    (0u32..).flat_map(move |round| {
        letters
            .iter()
            .map(move |&c| Label::new(c, if round == 0 { None } else { Some(round) }))
    })
}

/// First label of `space`'s fresh sequence not present in `used`.
pub fn fresh_label(space: OrbitalSpace, used: &BTreeSet<Label>) -> Label {
    fresh_labels(space)
        .find(|l| !used.contains(l))
        .expect("fresh label sequence is infinite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    /// Summed over its space; occurs exactly twice in a term.
    Dummy,
    /// Occurs exactly once in a term.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index {
    pub label: Label,
    pub space: OrbitalSpace,
    pub binding: Binding,
}

impl Index {
    pub const fn new(label: Label, space: OrbitalSpace, binding: Binding) -> Self {
        Self {
            label,
            space,
            binding,
        }
    }

    /// Dummy index whose space follows the letter convention.
    pub fn dummy(letter: char) -> Self {
        Self::new(letter.into(), infer_or_general(letter), Binding::Dummy)
    }

    /// Free index whose space follows the letter convention.
    pub fn free(letter: char) -> Self {
        Self::new(letter.into(), infer_or_general(letter), Binding::Free)
    }

    pub fn is_dummy(&self) -> bool {
        self.binding == Binding::Dummy
    }

    /// Whether the text form needs an explicit `:space` annotation.
    pub fn needs_annotation(&self) -> bool {
        OrbitalSpace::infer(self.label.letter()) != Ok(self.space)
    }
}

fn infer_or_general(letter: char) -> OrbitalSpace {
    OrbitalSpace::infer(letter).unwrap_or(OrbitalSpace::General)
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if self.needs_annotation() {
            write!(f, ":{}", self.space.annotation())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Creation,
    Annihilation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FermionOp {
    pub kind: OpKind,
    pub index: Index,
}

impl FermionOp {
    pub const fn creation(index: Index) -> Self {
        Self {
            kind: OpKind::Creation,
            index,
        }
    }

    pub const fn annihilation(index: Index) -> Self {
        Self {
            kind: OpKind::Annihilation,
            index,
        }
    }
}

impl fmt::Display for FermionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            OpKind::Creation => 'c',
            OpKind::Annihilation => 'a',
        };
        write!(f, "{tag}({})", self.index)
    }
}

/// Tensor kinds, declared in sort rank order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TensorKind {
    Delta,
    /// `h[p,q]`
    OneElectron,
    /// `V[p,q,r,s]` = <pq|rs>
    TwoElectronBare,
    /// `A[p,q,r,s]` = <pq||rs> = <pq|rs> - <pq|sr>
    TwoElectronAntisym,
    /// `t[lower=>upper]`; `lower` occupied indices come first.
    Amplitude { lower: u8 },
}

impl TensorKind {
    pub fn is_amplitude(self) -> bool {
        matches!(self, TensorKind::Amplitude { .. })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "d",
            Self::OneElectron => "h",
            Self::TwoElectronBare => "V",
            Self::TwoElectronAntisym => "A",
            Self::Amplitude { .. } => "t",
        }
    }

    fn check_arity(self, got: usize) -> Result<(), ModelError> {
        let (ok, expected) = match self {
            Self::Delta | Self::OneElectron => (got == 2, "2"),
            Self::TwoElectronBare | Self::TwoElectronAntisym => (got == 4, "4"),
            Self::Amplitude { lower } => {
                let upper = got.checked_sub(lower as usize);
                (lower <= 2 && matches!(upper, Some(u) if u <= 2), "at most 2 lower and 2 upper")
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::Arity {
                kind: self.name(),
                expected,
                got,
            })
        }
    }
}

/// Canonical factor order: integrals and deltas sorted by kind rank and
/// labels, followed by amplitudes in their original relative order.
///
/// Amplitudes do not commute past each other here: a bra amplitude is the
/// conjugate of a ket amplitude, so `t[k=>c] t[i=>a]` and `t[i=>a] t[k=>c]`
/// are kept apart.
pub fn factor_order(a: &TensorFactor, b: &TensorFactor) -> core::cmp::Ordering {
    use core::cmp::Ordering;
    match (a.kind.is_amplitude(), b.kind.is_amplitude()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => a.cmp(b),
    }
}

/// Stable in-place sort by [`factor_order`].
pub fn sort_factors(factors: &mut [TensorFactor]) {
    factors.sort_by(factor_order);
}

/// A scalar tensor factor of a term.
///
/// Ordering is by kind rank, then index labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TensorFactor {
    kind: TensorKind,
    indices: Vec<Index>,
}

impl TensorFactor {
    pub fn new(kind: TensorKind, indices: Vec<Index>) -> Result<Self, ModelError> {
        kind.check_arity(indices.len())?;
        if let TensorKind::Amplitude { lower } = kind {
            let lower = lower as usize;
            for (pos, idx) in indices.iter().enumerate() {
                let want = if pos < lower {
                    OrbitalSpace::Occupied
                } else {
                    OrbitalSpace::Virtual
                };
                if idx.space != want {
                    return Err(ModelError::AmplitudeSpace(idx.label));
                }
            }
        }
        Ok(Self { kind, indices })
    }

    pub fn delta(p: Index, q: Index) -> Self {
        Self {
            kind: TensorKind::Delta,
            indices: alloc::vec![p, q],
        }
    }

    pub fn one_electron(p: Index, q: Index) -> Self {
        Self {
            kind: TensorKind::OneElectron,
            indices: alloc::vec![p, q],
        }
    }

    pub fn bare(idx: [Index; 4]) -> Self {
        Self {
            kind: TensorKind::TwoElectronBare,
            indices: idx.to_vec(),
        }
    }

    pub fn antisym(idx: [Index; 4]) -> Self {
        Self {
            kind: TensorKind::TwoElectronAntisym,
            indices: idx.to_vec(),
        }
    }

    pub fn amplitude(lower: &[Index], upper: &[Index]) -> Result<Self, ModelError> {
        let mut indices = lower.to_vec();
        indices.extend_from_slice(upper);
        Self::new(
            TensorKind::Amplitude {
                lower: lower.len().min(u8::MAX as usize) as u8,
            },
            indices,
        )
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    pub(crate) fn indices_mut(&mut self) -> &mut [Index] {
        &mut self.indices
    }

    /// Same kind with the indices permuted; arity is unchanged so no validation is needed.
    pub(crate) fn with_indices(&self, indices: Vec<Index>) -> Self {
        debug_assert_eq!(indices.len(), self.indices.len());
        Self {
            kind: self.kind,
            indices,
        }
    }

    pub(crate) fn with_kind(&self, kind: TensorKind) -> Self {
        Self {
            kind,
            indices: self.indices.clone(),
        }
    }

    /// Amplitude lower (occupied) indices; empty for other kinds.
    pub fn lower(&self) -> &[Index] {
        match self.kind {
            TensorKind::Amplitude { lower } => &self.indices[..lower as usize],
            _ => &[],
        }
    }

    /// Amplitude upper (virtual) indices; empty for other kinds.
    pub fn upper(&self) -> &[Index] {
        match self.kind {
            TensorKind::Amplitude { lower } => &self.indices[lower as usize..],
            _ => &[],
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, idx: &[Index]) -> fmt::Result {
    for (n, i) in idx.iter().enumerate() {
        if n > 0 {
            f.write_char(',')?;
        }
        write!(f, "{i}")?;
    }
    Ok(())
}

impl fmt::Display for TensorFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.kind.name())?;
        if let TensorKind::Amplitude { .. } = self.kind {
            write_list(f, self.lower())?;
            f.write_str("=>")?;
            write_list(f, self.upper())?;
        } else {
            write_list(f, &self.indices)?;
        }
        f.write_char(']')
    }
}

/// `coeff * prod(tensors) * <HF| ops |HF>`, summed over dummy indices.
///
/// Tensor factors commute, so equality treats them as a multiset; the stored
/// order is only used for presentation.
#[derive(Debug, Clone)]
pub struct Term {
    coeff: Coeff,
    tensors: Vec<TensorFactor>,
    ops: Vec<FermionOp>,
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.coeff == other.coeff
            && self.ops == other.ops
            && self.tensors.len() == other.tensors.len()
            && self.sorted_tensors() == other.sorted_tensors()
    }
}

impl Eq for Term {}

impl Term {
    pub fn new(coeff: Coeff, tensors: Vec<TensorFactor>, ops: Vec<FermionOp>) -> Self {
        Self {
            coeff,
            tensors,
            ops,
        }
    }

    pub fn scalar(coeff: Coeff) -> Self {
        Self::new(coeff, Vec::new(), Vec::new())
    }

    pub fn coeff(&self) -> Coeff {
        self.coeff
    }

    pub fn tensors(&self) -> &[TensorFactor] {
        &self.tensors
    }

    pub fn ops(&self) -> &[FermionOp] {
        &self.ops
    }

    pub fn is_operator_free(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn with_coeff(mut self, coeff: Coeff) -> Self {
        self.coeff = coeff;
        self
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Coeff, &mut Vec<TensorFactor>, &mut Vec<FermionOp>) {
        (&mut self.coeff, &mut self.tensors, &mut self.ops)
    }

    pub fn into_parts(self) -> (Coeff, Vec<TensorFactor>, Vec<FermionOp>) {
        (self.coeff, self.tensors, self.ops)
    }

    /// Factors in canonical order: see [`factor_order`].
    pub fn sorted_tensors(&self) -> Vec<&TensorFactor> {
        let mut v: Vec<_> = self.tensors.iter().collect();
        v.sort_by(|a, b| factor_order(a, b));
        v
    }

    /// Every index occurrence: tensors first, then the operator string.
    pub fn occurrences(&self) -> impl Iterator<Item = &Index> {
        self.tensors
            .iter()
            .flat_map(|t| t.indices.iter())
            .chain(self.ops.iter().map(|o| &o.index))
    }

    fn occurrences_mut(&mut self) -> impl Iterator<Item = &mut Index> {
        self.tensors
            .iter_mut()
            .flat_map(|t| t.indices.iter_mut())
            .chain(self.ops.iter_mut().map(|o| &mut o.index))
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        self.occurrences().map(|i| i.label).collect()
    }

    /// Distinct indices with their occurrence counts.
    pub fn index_counts(&self) -> BTreeMap<Label, (Index, usize)> {
        let mut out: BTreeMap<Label, (Index, usize)> = BTreeMap::new();
        for idx in self.occurrences() {
            out.entry(idx.label).or_insert((*idx, 0)).1 += 1;
        }
        out
    }

    /// Checks that every label has one space and binding, dummies occur twice and free indices once.
    pub fn check_bindings(&self) -> Result<(), ModelError> {
        let mut seen: BTreeMap<Label, (Index, usize)> = BTreeMap::new();
        for idx in self.occurrences() {
            let entry = seen.entry(idx.label).or_insert((*idx, 0));
            if entry.0 != *idx {
                return Err(ModelError::InconsistentIndex(idx.label));
            }
            entry.1 += 1;
        }
        for (label, (idx, count)) in seen {
            let expected = match idx.binding {
                Binding::Dummy => 2,
                Binding::Free => 1,
            };
            if count != expected {
                return Err(ModelError::BindingViolation {
                    label,
                    count,
                    binding: idx.binding,
                });
            }
        }
        Ok(())
    }

    /// Replaces every occurrence of `from` with `to`.
    pub fn substitute(&mut self, from: Label, to: Index) {
        for idx in self.occurrences_mut() {
            if idx.label == from {
                *idx = to;
            }
        }
    }

    /// Applies a label renaming to all occurrences simultaneously.
    pub fn rename(&mut self, map: &BTreeMap<Label, Label>) {
        for idx in self.occurrences_mut() {
            if let Some(&to) = map.get(&idx.label) {
                idx.label = to;
            }
        }
    }

    /// Deterministic text form: signed coefficient, sorted tensors, then the operator string.
    pub fn serialize(&self) -> String {
        alloc::format!("{self}")
    }

    /// Serialization without the coefficient; equal for terms that differ only in coefficient.
    pub fn structure(&self) -> String {
        let mut s = String::new();
        for t in self.sorted_tensors() {
            if !s.is_empty() {
                s.push(' ');
            }
            let _ = write!(s, "{t}");
        }
        for o in &self.ops {
            if !s.is_empty() {
                s.push(' ');
            }
            let _ = write!(s, "{o}");
        }
        s
    }
}

pub(crate) fn write_coeff(f: &mut impl fmt::Write, c: Coeff) -> fmt::Result {
    let sign = if c.is_negative() { '-' } else { '+' };
    write!(f, "{sign}{}", c.abs())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_coeff(f, self.coeff)?;
        let rest = self.structure();
        if !rest.is_empty() {
            write!(f, " {rest}")?;
        }
        Ok(())
    }
}

/// Ordered sum of terms; zero-coefficient terms are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expression {
    terms: Vec<Term>,
}

impl Expression {
    pub fn new(terms: Vec<Term>) -> Self {
        terms.into_iter().collect()
    }

    pub fn single(term: Term) -> Self {
        Self::new(alloc::vec![term])
    }

    pub fn push(&mut self, term: Term) {
        if !term.coeff.is_zero() {
            self.terms.push(term);
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Term> {
        self.terms.iter()
    }

    pub fn is_operator_free(&self) -> bool {
        self.terms.iter().all(Term::is_operator_free)
    }
}

impl FromIterator<Term> for Expression {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        Self {
            terms: iter.into_iter().filter(|t| !t.coeff.is_zero()).collect(),
        }
    }
}

impl Extend<Term> for Expression {
    fn extend<I: IntoIterator<Item = Term>>(&mut self, iter: I) {
        for t in iter {
            self.push(t);
        }
    }
}

impl IntoIterator for Expression {
    type Item = Term;
    type IntoIter = alloc::vec::IntoIter<Term>;

    fn into_iter(self) -> Self::IntoIter {
        self.terms.into_iter()
    }
}

impl<'a> IntoIterator for &'a Expression {
    type Item = &'a Term;
    type IntoIter = core::slice::Iter<'a, Term>;

    fn into_iter(self) -> Self::IntoIter {
        self.terms.iter()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_char('0');
        }
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_char(' ')?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(n: i64, d: i64) -> Coeff {
        Coeff::new(n, d)
    }

    #[test]
    fn infers_spaces_from_letter_families() {
        assert_eq!(OrbitalSpace::infer('i'), Ok(OrbitalSpace::Occupied));
        assert_eq!(OrbitalSpace::infer('n'), Ok(OrbitalSpace::Occupied));
        assert_eq!(OrbitalSpace::infer('b'), Ok(OrbitalSpace::Virtual));
        assert_eq!(OrbitalSpace::infer('r'), Ok(OrbitalSpace::General));
        assert_eq!(OrbitalSpace::infer('x'), Err(ModelError::UnknownLetter('x')));
        assert_eq!(OrbitalSpace::infer('e'), Err(ModelError::UnknownLetter('e')));
    }

    #[test]
    fn intersection_table() {
        use OrbitalSpace::*;
        assert_eq!(Occupied.intersect(Virtual), None);
        assert_eq!(Virtual.intersect(Occupied), None);
        assert_eq!(General.intersect(Occupied), Some(Occupied));
        assert_eq!(Virtual.intersect(General), Some(Virtual));
        assert_eq!(Virtual.intersect(Virtual), Some(Virtual));
        assert_eq!(General.intersect(General), Some(General));
    }

    #[test]
    fn serializes_terms() {
        let t = Term::new(
            r(1, 1),
            vec![TensorFactor::one_electron(Index::free('i'), Index::free('j'))],
            vec![],
        );
        assert_eq!(t.serialize(), "+1 h[i,j]");
        let m = Index::dummy('m');
        let n = Index::dummy('n');
        let t = Term::new(r(-1, 2), vec![TensorFactor::antisym([m, n, m, n])], vec![]);
        assert_eq!(t.serialize(), "-1/2 A[m,n,m,n]");
        assert_eq!(Term::scalar(r(3, 1)).serialize(), "+3");
    }

    #[test]
    fn integrals_commute_but_amplitudes_keep_their_order() {
        let i = Index::dummy('i');
        let a = Index::dummy('a');
        let j = Index::dummy('j');
        let t1 = TensorFactor::amplitude(&[i], &[a]).unwrap();
        let t2 = TensorFactor::amplitude(&[j], &[a]).unwrap();
        let h = TensorFactor::one_electron(i, j);
        let x = Term::new(r(-1, 1), vec![t2.clone(), t1.clone(), h.clone()], vec![]);
        let y = Term::new(r(-1, 1), vec![h.clone(), t2.clone(), t1.clone()], vec![]);
        assert_eq!(x, y);
        assert_eq!(x.serialize(), y.serialize());
        assert_eq!(x.serialize(), "-1 h[i,j] t[j=>a] t[i=>a]");
        let z = Term::new(r(-1, 1), vec![h, t1, t2], vec![]);
        assert_ne!(x, z);
    }

    #[test]
    fn fresh_labels_cycle_with_ordinals() {
        let got: Vec<String> = fresh_labels(OrbitalSpace::Occupied)
            .take(5)
            .map(|l| alloc::format!("{l}"))
            .collect();
        assert_eq!(got, ["m", "n", "o", "m1", "n1"]);
        let used: BTreeSet<Label> = ['e', 'f'].into_iter().map(Label::from).collect();
        assert_eq!(fresh_label(OrbitalSpace::Virtual, &used), Label::from('g'));
    }

    #[test]
    fn annotation_only_when_letter_disagrees() {
        let e = Index::new('e'.into(), OrbitalSpace::Virtual, Binding::Dummy);
        assert_eq!(alloc::format!("{e}"), "e:vir");
        let p = Index::new('p'.into(), OrbitalSpace::Occupied, Binding::Free);
        assert_eq!(alloc::format!("{p}"), "p:occ");
        assert_eq!(alloc::format!("{}", Index::dummy('i')), "i");
    }

    #[test]
    fn arity_is_checked() {
        let p = Index::dummy('p');
        assert!(TensorFactor::new(TensorKind::OneElectron, vec![p]).is_err());
        assert!(TensorFactor::new(TensorKind::TwoElectronBare, vec![p, p, p, p]).is_ok());
        let i = Index::dummy('i');
        assert!(TensorFactor::amplitude(&[i, i, i], &[]).is_err());
        assert!(matches!(
            TensorFactor::amplitude(&[Index::dummy('a')], &[]),
            Err(ModelError::AmplitudeSpace(_))
        ));
    }

    #[test]
    fn binding_check_detects_miscounts() {
        let i = Index::dummy('i');
        let ok = Term::new(r(1, 1), vec![TensorFactor::delta(i, i)], vec![]);
        assert!(ok.check_bindings().is_ok());
        let bad = Term::new(r(1, 1), vec![], vec![FermionOp::creation(i)]);
        assert!(matches!(
            bad.check_bindings(),
            Err(ModelError::BindingViolation { count: 1, .. })
        ));
    }

    #[test]
    fn expression_drops_zero_terms_and_renders_zero() {
        let e = Expression::new(vec![Term::scalar(Coeff::zero())]);
        assert!(e.is_empty());
        assert_eq!(alloc::format!("{e}"), "0");
    }
}
