//! Random inputs for property tests and the acceptance suite.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Binding, Coeff, Expression, FermionOp, Index, OpKind, OrbitalSpace, TensorFactor, TensorKind, Term};

const LETTERS: [&[char]; 3] = [&['i', 'j', 'k', 'l'], &['a', 'b', 'c', 'd'], &['p', 'q', 'r', 's']];

/// Hands out distinct letters, falling back to another space when one runs dry.
struct LetterPool {
    used: [usize; 3],
}

impl LetterPool {
    fn new() -> Self {
        Self { used: [0; 3] }
    }

    fn take(&mut self, rng: &mut impl Rng, binding: Binding) -> Option<Index> {
        let start = rng.random_range(0..3);
        for k in 0..3 {
            let s = (start + k) % 3;
            if self.used[s] < LETTERS[s].len() {
                let letter = LETTERS[s][self.used[s]];
                self.used[s] += 1;
                let space = OrbitalSpace::infer(letter).ok()?;
                return Some(Index {
                    label: letter.into(),
                    space,
                    binding,
                });
            }
        }
        None
    }
}

/// Occurrence list in which dummies appear twice and frees once, shuffled.
fn occurrences(rng: &mut impl Rng, pool: &mut LetterPool, slots: usize, n_free: usize) -> Vec<Index> {
    let n_free = n_free.min(slots);
    let n_free = if (slots - n_free) % 2 == 1 { n_free + 1 } else { n_free };
    let mut out = Vec::with_capacity(slots);
    for _ in 0..n_free.min(slots) {
        out.extend(pool.take(rng, Binding::Free));
    }
    while out.len() + 1 < slots {
        let Some(idx) = pool.take(rng, Binding::Dummy) else { break };
        out.push(idx);
        out.push(idx);
    }
    out.shuffle(rng);
    out
}

/// A unit-coefficient string of up to `max_ops` operators with no tensors.
pub fn random_operator_term(rng: &mut impl Rng, max_ops: usize) -> Term {
    let n = rng.random_range(1..=max_ops.max(1));
    let n_free = rng.random_range(0..=n.min(2));
    let mut pool = LetterPool::new();
    let ops = occurrences(rng, &mut pool, n, n_free)
        .into_iter()
        .map(|index| FermionOp {
            kind: if rng.random_bool(0.5) { OpKind::Creation } else { OpKind::Annihilation },
            index,
        })
        .collect();
    Term::new(Coeff::from_integer(1), Vec::new(), ops)
}

fn random_coeff(rng: &mut impl Rng) -> Coeff {
    let num = rng.random_range(1..=4i64) * if rng.random_bool(0.5) { 1 } else { -1 };
    Coeff::new(num, rng.random_range(1..=4))
}

/// Packs an occurrence list into tensors, or `None` if it does not fit.
fn pack(rng: &mut impl Rng, mut rest: &[Index]) -> Option<Vec<TensorFactor>> {
    let mut tensors = Vec::new();
    while !rest.is_empty() {
        let lower = rest.iter().take(2).take_while(|i| i.space == OrbitalSpace::Occupied).count();
        let upper = rest[lower..]
            .iter()
            .take(2)
            .take_while(|i| i.space == OrbitalSpace::Virtual)
            .count();
        let mut choices: Vec<TensorKind> = Vec::new();
        if lower + upper > 0 {
            choices.push(TensorKind::Amplitude { lower: lower as u8 });
        }
        if rest.len() >= 2 {
            choices.extend([TensorKind::OneElectron, TensorKind::Delta]);
        }
        if rest.len() >= 4 {
            choices.extend([TensorKind::TwoElectronBare, TensorKind::TwoElectronAntisym]);
        }
        let kind = *choices.get(rng.random_range(0..choices.len().max(1)))?;
        let take = match kind {
            TensorKind::Amplitude { .. } => lower + upper,
            TensorKind::OneElectron | TensorKind::Delta => 2,
            _ => 4,
        };
        tensors.push(TensorFactor::new(kind, rest[..take].to_vec()).ok()?);
        rest = &rest[take..];
    }
    Some(tensors)
}

fn random_operator_free_term(rng: &mut impl Rng, free: &[Index]) -> Term {
    loop {
        let slots = rng.random_range(2..=8usize).max(free.len());
        let mut pool = LetterPool::new();
        // reserve the shared free letters
        let mut occ: Vec<Index> = free.to_vec();
        for idx in free {
            let s = LETTERS.iter().position(|l| l.contains(&idx.label.letter())).unwrap_or(2);
            pool.used[s] += 1;
        }
        let dummies = occurrences(rng, &mut pool, slots.saturating_sub(free.len()), 0);
        occ.extend(dummies.into_iter().filter(|i| i.binding == Binding::Dummy));
        occ.shuffle(rng);
        if occ.is_empty() {
            continue;
        }
        if let Some(tensors) = pack(rng, &occ) {
            return Term::new(random_coeff(rng), tensors, Vec::new());
        }
    }
}

/// Sum of up to `max_terms` random operator-free terms sharing up to two free
/// indices.
pub fn random_operator_free_expression(rng: &mut impl Rng, max_terms: usize) -> Expression {
    let n_free = rng.random_range(0..=2);
    let free: Vec<Index> = [Index::free('i'), Index::free('a')][..n_free].to_vec();
    let n = rng.random_range(1..=max_terms.max(1));
    (0..n).map(|_| random_operator_free_term(rng, &free)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_terms_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let t = random_operator_term(&mut rng, 12);
            assert!(t.ops().len() <= 12 && !t.ops().is_empty());
            t.check_bindings().unwrap();
            let e = random_operator_free_expression(&mut rng, 4);
            assert!(e.is_operator_free());
            for t in &e {
                t.check_bindings().unwrap();
            }
        }
    }
}
