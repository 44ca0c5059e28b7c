//! Operator movement toward the vacuum, anticommutation swaps, delta
//! contraction, and the iterate-until-unchanged loop.

use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{fresh_label, Binding, Expression, FermionOp, Index, OpKind, OrbitalSpace, TensorFactor, TensorKind, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("operator position {pos} has no right neighbour in a string of length {len}")]
    InvalidPosition { pos: usize, len: usize },
    #[error("operator string still contains movable operators")]
    NotAllGeneral,
    #[error("operator string is empty")]
    NoOperators,
}

/// Where an operator has to travel to meet the vacuum that annihilates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Kills the ket: occupied creation, virtual annihilation.
    MoveRight,
    /// Kills the bra: occupied annihilation, virtual creation.
    MoveLeft,
    /// General index; never moved on its own.
    Stationary,
}

pub fn direction(op: &FermionOp) -> Direction {
    match (op.kind, op.index.space) {
        (_, OrbitalSpace::General) => Direction::Stationary,
        (OpKind::Creation, OrbitalSpace::Occupied) | (OpKind::Annihilation, OrbitalSpace::Virtual) => {
            Direction::MoveRight
        }
        (OpKind::Annihilation, OrbitalSpace::Occupied) | (OpKind::Creation, OrbitalSpace::Virtual) => {
            Direction::MoveLeft
        }
    }
}

/// Termination measure: for each right-mover the number of operators to its
/// right, plus for each left-mover the number to its left.
pub fn movement_measure(ops: &[FermionOp]) -> usize {
    let last = ops.len().saturating_sub(1);
    ops.iter()
        .enumerate()
        .map(|(pos, op)| match direction(op) {
            Direction::MoveRight => last - pos,
            Direction::MoveLeft => pos,
            Direction::Stationary => 0,
        })
        .sum()
}

/// Anticommutes `ops[pos]` and `ops[pos + 1]`.
///
/// Returns no terms for two identical operators, the sign-flipped swap for equal
/// kinds, and additionally the contracted delta term (listed first) for a
/// creation/annihilation pair whose spaces overlap.
pub fn swap_adjacent(term: &Term, pos: usize) -> Result<Vec<Term>, EngineError> {
    let ops = term.ops();
    if pos + 1 >= ops.len() {
        return Err(EngineError::InvalidPosition { pos, len: ops.len() });
    }
    let (left, right) = (ops[pos], ops[pos + 1]);
    if left == right {
        return Ok(Vec::new());
    }

    let mut out = Vec::with_capacity(2);
    if left.kind != right.kind && left.index.space.intersect(right.index.space).is_some() {
        let mut contracted = term.clone();
        let (_, tensors, ops) = contracted.parts_mut();
        ops.drain(pos..pos + 2);
        tensors.push(TensorFactor::delta(left.index, right.index));
        out.push(contracted);
    }

    let mut swapped = term.clone();
    let (coeff, _, ops) = swapped.parts_mut();
    ops.swap(pos, pos + 1);
    *coeff = -*coeff;
    out.push(swapped);
    Ok(out)
}

/// Result of a single rewrite step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// No movable operator; the term is left as is.
    Unchanged,
    /// Replacement terms (possibly none) with deltas already contracted.
    Rewritten(Vec<Term>),
}

/// One rewrite step on a single term.
///
/// The rightmost right-mover is swapped with its right neighbour, or the term
/// vanishes if it is already last. Failing that, the leftmost left-mover is
/// swapped with its left neighbour or vanishes at the front.
pub fn step(term: &Term) -> Step {
    let ops = term.ops();
    let pair = if let Some(pos) = ops.iter().rposition(|o| direction(o) == Direction::MoveRight) {
        if pos + 1 == ops.len() {
            return Step::Rewritten(Vec::new());
        }
        pos
    } else if let Some(pos) = ops.iter().position(|o| direction(o) == Direction::MoveLeft) {
        if pos == 0 {
            return Step::Rewritten(Vec::new());
        }
        pos - 1
    } else {
        return Step::Unchanged;
    };
    let swapped = swap_adjacent(term, pair).expect("neighbour exists by construction");
    Step::Rewritten(swapped.into_iter().filter_map(apply_deltas).collect())
}

/// Expression-valued form of [`step`]: the term itself when nothing moves.
pub fn one_step(term: &Term) -> Expression {
    match step(term) {
        Step::Unchanged => Expression::single(term.clone()),
        Step::Rewritten(terms) => Expression::new(terms),
    }
}

/// Splits the leftmost general operator index into its occupied and virtual parts.
///
/// Dummy indices are renamed to fresh labels; a free index keeps its label and
/// has its space narrowed instead.
pub fn split_general(term: &Term) -> Result<[Term; 2], EngineError> {
    let first = term.ops().first().ok_or(EngineError::NoOperators)?;
    if term.ops().iter().any(|o| direction(o) != Direction::Stationary) {
        return Err(EngineError::NotAllGeneral);
    }
    let target = first.index;
    let used = term.labels();
    let branch = |space: OrbitalSpace| {
        let label = match target.binding {
            Binding::Dummy => fresh_label(space, &used),
            Binding::Free => target.label,
        };
        let mut t = term.clone();
        t.substitute(target.label, Index::new(label, space, target.binding));
        t
    };
    Ok([branch(OrbitalSpace::Occupied), branch(OrbitalSpace::Virtual)])
}

/// Contracts Kronecker deltas; `None` if the term vanishes.
///
/// A delta with at least one dummy index is removed and the dummy replaced by
/// the other index (the more specific one, or the earlier label when equally
/// specific). Deltas between two free indices are kept, as are `d[x,x]`
/// traces of a dummy that occurs nowhere else.
pub fn apply_deltas(mut term: Term) -> Option<Term> {
    loop {
        let mut action = None;
        for (pos, t) in term.tensors().iter().enumerate() {
            if t.kind() != TensorKind::Delta {
                continue;
            }
            let (x, y) = (t.indices()[0], t.indices()[1]);
            let space = x.space.intersect(y.space)?;
            if x.label == y.label {
                continue;
            }
            let (survivor, victim) = match (x.binding, y.binding) {
                (Binding::Free, Binding::Free) => continue,
                (Binding::Free, Binding::Dummy) => (x, y),
                (Binding::Dummy, Binding::Free) => (y, x),
                (Binding::Dummy, Binding::Dummy) => {
                    if x.space == space && y.space != space {
                        (x, y)
                    } else if y.space == space && x.space != space {
                        (y, x)
                    } else if x.label <= y.label {
                        (x, y)
                    } else {
                        (y, x)
                    }
                }
            };
            action = Some((pos, Index::new(survivor.label, space, survivor.binding), victim.label));
            break;
        }
        let Some((pos, survivor, victim)) = action else {
            return Some(term);
        };
        term.parts_mut().1.remove(pos);
        term.substitute(victim, survivor);
        term.substitute(survivor.label, survivor);
    }
}

/// Counters collected by [`fixpoint_with_stats`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixpointStats {
    /// Rounds of mapping [`step`] over the live terms.
    pub iterations: usize,
    /// Number of [`split_general`] applications.
    pub splits: usize,
    /// Largest number of live (operator-carrying) terms in any round.
    pub peak_terms: usize,
}

/// Rewrites until every term is operator-free.
pub fn fixpoint(expr: Expression) -> Expression {
    fixpoint_with_stats(expr).0
}

pub fn fixpoint_with_stats(expr: Expression) -> (Expression, FixpointStats) {
    let mut stats = FixpointStats::default();
    let (mut done, mut live): (Vec<Term>, Vec<Term>) = expr
        .into_iter()
        .filter_map(apply_deltas)
        .partition(Term::is_operator_free);

    while !live.is_empty() {
        stats.iterations += 1;
        stats.peak_terms = stats.peak_terms.max(live.len());
        let mut changed = false;
        let mut next = Vec::with_capacity(live.len());
        for term in live {
            match step(&term) {
                Step::Unchanged => next.push(term),
                Step::Rewritten(terms) => {
                    changed = true;
                    next.extend(terms);
                }
            }
        }
        if !changed {
            // Only general-index strings are left.
            let stalled = core::mem::take(&mut next);
            for term in stalled {
                let branches = split_general(&term).expect("unchanged terms hold only general operators");
                stats.splits += 1;
                next.extend(branches.into_iter().filter_map(apply_deltas));
            }
        }
        live = Vec::with_capacity(next.len());
        for term in next {
            if term.is_operator_free() {
                done.push(term);
            } else {
                live.push(term);
            }
        }
    }
    (Expression::new(done), stats)
}

/// Upper bound on [`fixpoint_with_stats`] iterations for a string of `n` operators.
///
/// At a fixed length the measure drops at every swap and is at most
/// `n(n-1)`; each of the at most `n` splits costs one extra stalled round, and
/// every contraction shortens the string by two.
pub fn iteration_bound(n: usize) -> usize {
    let mut total = 0;
    let mut k = n;
    loop {
        total += 2 * (k + 1) * (k * k.saturating_sub(1) + 1);
        if k < 2 {
            break;
        }
        k -= 2;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coeff;
    use alloc::vec;

    fn one() -> Coeff {
        Coeff::from_integer(1)
    }

    fn c(l: char) -> FermionOp {
        FermionOp::creation(Index::dummy(l))
    }

    fn a(l: char) -> FermionOp {
        FermionOp::annihilation(Index::dummy(l))
    }

    fn ops_term(ops: Vec<FermionOp>) -> Term {
        Term::new(one(), vec![], ops)
    }

    #[test]
    fn direction_table() {
        assert_eq!(direction(&c('i')), Direction::MoveRight);
        assert_eq!(direction(&a('b')), Direction::MoveRight);
        assert_eq!(direction(&a('i')), Direction::MoveLeft);
        assert_eq!(direction(&c('a')), Direction::MoveLeft);
        assert_eq!(direction(&a('p')), Direction::Stationary);
        assert_eq!(direction(&c('q')), Direction::Stationary);
    }

    #[test]
    fn swap_creation_annihilation_generates_delta() {
        let t = ops_term(vec![c('i'), a('q')]);
        let out = swap_adjacent(&t, 0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].serialize(), "+1 d[i,q]");
        assert_eq!(out[1].serialize(), "-1 a(q) c(i)");
    }

    #[test]
    fn swap_same_kind_flips_sign_only() {
        let out = swap_adjacent(&ops_term(vec![c('i'), c('b')]), 0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].serialize(), "-1 c(b) c(i)");
    }

    #[test]
    fn swap_disjoint_spaces_drops_delta() {
        let out = swap_adjacent(&ops_term(vec![a('i'), c('b')]), 0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].serialize(), "-1 c(b) a(i)");
    }

    #[test]
    fn swap_identical_operators_vanishes() {
        for op in [c('i'), a('i'), c('a'), a('a'), c('p'), a('p')] {
            assert!(swap_adjacent(&ops_term(vec![op, op]), 0).unwrap().is_empty());
        }
    }

    #[test]
    fn swap_rejects_out_of_range() {
        assert_eq!(
            swap_adjacent(&ops_term(vec![c('i')]), 0),
            Err(EngineError::InvalidPosition { pos: 0, len: 1 })
        );
    }

    #[test]
    fn one_step_kills_movers_at_the_vacuum() {
        assert!(one_step(&ops_term(vec![c('i')])).is_empty());
        assert!(one_step(&ops_term(vec![a('a'), c('i')])).is_empty());
        assert!(one_step(&ops_term(vec![a('i'), a('p')])).is_empty());
    }

    #[test]
    fn one_step_swaps_rightmost_right_mover() {
        let out = one_step(&ops_term(vec![c('j'), c('p')]));
        assert_eq!(out.len(), 1);
        assert_eq!(out.terms()[0].serialize(), "-1 c(p) c(j)");
        assert!(one_step(&ops_term(vec![c('j'), a('b')])).is_empty());
    }

    #[test]
    fn one_step_leaves_general_strings_alone() {
        let t = ops_term(vec![c('p'), a('q')]);
        assert_eq!(one_step(&t), Expression::single(t.clone()));
        assert_eq!(step(&t), Step::Unchanged);
        let empty = Term::scalar(one());
        assert_eq!(one_step(&empty), Expression::single(empty.clone()));
    }

    #[test]
    fn split_general_renames_dummy_into_both_spaces() {
        let p = Index::dummy('p');
        let q = Index::dummy('q');
        let t = Term::new(
            one(),
            vec![TensorFactor::one_electron(p, q)],
            vec![FermionOp::creation(p), FermionOp::annihilation(q)],
        );
        let [occ, vir] = split_general(&t).unwrap();
        assert_eq!(occ.serialize(), "+1 h[m,q] c(m) a(q)");
        assert_eq!(vir.serialize(), "+1 h[e:vir,q] c(e:vir) a(q)");
        assert!(occ.check_bindings().is_ok() && vir.check_bindings().is_ok());

        let mixed = ops_term(vec![c('i'), c('p')]);
        assert_eq!(split_general(&mixed), Err(EngineError::NotAllGeneral));
    }

    #[test]
    fn split_general_narrows_free_index() {
        let t = Term::new(one(), vec![], vec![FermionOp::creation(Index::free('p'))]);
        let [occ, vir] = split_general(&t).unwrap();
        assert_eq!(occ.serialize(), "+1 c(p:occ)");
        assert_eq!(vir.serialize(), "+1 c(p:vir)");
    }

    #[test]
    fn deltas_substitute_dummies() {
        let q = Index::dummy('q');
        let j = Index::free('j');
        let t = Term::new(
            one(),
            vec![TensorFactor::delta(q, j), TensorFactor::one_electron(q, Index::free('i'))],
            vec![],
        );
        assert_eq!(apply_deltas(t).unwrap().serialize(), "+1 h[j,i]");

        let t = Term::new(one(), vec![TensorFactor::delta(Index::free('i'), Index::free('a'))], vec![]);
        assert_eq!(apply_deltas(t), None);

        let t = Term::new(one(), vec![TensorFactor::delta(Index::free('i'), Index::free('j'))], vec![]);
        assert_eq!(apply_deltas(t.clone()), Some(t));
    }

    #[test]
    fn deltas_prefer_specific_then_earlier_label() {
        let (i, j, p) = (Index::dummy('i'), Index::dummy('j'), Index::dummy('p'));
        let t = Term::new(
            one(),
            vec![
                TensorFactor::delta(p, i),
                TensorFactor::one_electron(p, Index::free('k')),
                TensorFactor::one_electron(i, Index::free('l')),
            ],
            vec![],
        );
        assert_eq!(apply_deltas(t).unwrap().serialize(), "+1 h[i,k] h[i,l]");

        let t = Term::new(
            one(),
            vec![
                TensorFactor::delta(j, i),
                TensorFactor::one_electron(j, Index::free('k')),
                TensorFactor::one_electron(i, Index::free('l')),
            ],
            vec![],
        );
        assert_eq!(apply_deltas(t).unwrap().serialize(), "+1 h[i,k] h[i,l]");
    }

    #[test]
    fn delta_against_free_general_narrows_it() {
        let t = Term::new(
            one(),
            vec![
                TensorFactor::delta(Index::dummy('i'), Index::free('p')),
                TensorFactor::one_electron(Index::dummy('i'), Index::free('q')),
            ],
            vec![],
        );
        assert_eq!(apply_deltas(t).unwrap().serialize(), "+1 h[p:occ,q]");
    }

    #[test]
    fn fixpoint_single_operators_vanish() {
        for op in [c('i'), a('i'), c('a'), a('a')] {
            let t = Term::new(one(), vec![], vec![FermionOp { index: Index { binding: Binding::Free, ..op.index }, ..op }]);
            assert!(fixpoint(Expression::single(t)).is_empty());
        }
        let free_p = Term::new(one(), vec![], vec![FermionOp::annihilation(Index::free('p'))]);
        assert!(fixpoint(Expression::single(free_p)).is_empty());
    }

    #[test]
    fn fixpoint_h1_over_reference_is_occupied_trace() {
        let p = Index::dummy('p');
        let q = Index::dummy('q');
        let t = Term::new(
            one(),
            vec![TensorFactor::one_electron(p, q)],
            vec![FermionOp::creation(p), FermionOp::annihilation(q)],
        );
        let out = fixpoint(Expression::single(t));
        assert_eq!(out.len(), 1);
        assert_eq!(out.terms()[0].serialize(), "+1 h[m,m]");
    }

    #[test]
    fn fixpoint_keeps_scalar_terms() {
        let e = Expression::single(Term::scalar(one()));
        assert_eq!(fixpoint(e.clone()), e);
    }

    #[test]
    fn number_operator_pair_leaves_trace_delta() {
        // sum_p <a_p^+ a_p> has no tensor to absorb the contraction.
        let t = ops_term(vec![c('p'), a('p')]);
        let out = fixpoint(Expression::single(t));
        assert_eq!(out.len(), 1);
        assert_eq!(out.terms()[0].serialize(), "+1 d[m,m]");
    }

    #[test]
    fn measure_decreases_on_swaps() {
        let t = ops_term(vec![c('j'), a('p'), a('b'), c('q'), a('k')]);
        let before = movement_measure(t.ops());
        if let Step::Rewritten(out) = step(&t) {
            for o in out {
                assert!(o.ops().len() < t.ops().len() || movement_measure(o.ops()) < before);
            }
        } else {
            panic!("expected a rewrite");
        }
    }

    #[test]
    fn iteration_bound_values() {
        assert_eq!(iteration_bound(0), 2);
        assert_eq!(iteration_bound(2), 2 * 3 * 3 + 2);
    }
}
