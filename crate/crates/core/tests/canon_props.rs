use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqeval_core::canon::{antisymmetrize, canonical_tensor, canonicalize_term, expand_antisym, merge_terms, sort_terms};
use sqeval_core::oracle::{numeric_symbolic_value, NumericTensors, OrbitalBasis, DEFAULT_BUDGET};
use sqeval_core::sample::random_operator_free_expression;
use sqeval_core::{canonicalize_expression, fixpoint, parse, Binding, Expression, Label};

fn expr_from_seed(seed: u64) -> Expression {
    random_operator_free_expression(&mut ChaCha8Rng::seed_from_u64(seed), 5)
}

/// Largest difference between two operator-free expressions over all free assignments.
fn max_diff(a: &Expression, b: &Expression, seed: u64) -> f64 {
    let basis = OrbitalBasis::new(2, 2).unwrap();
    let tensors = NumericTensors::random(seed, basis);
    let mut free: Vec<Label> = a
        .iter()
        .chain(b.iter())
        .flat_map(|t| t.occurrences().filter(|i| i.binding == Binding::Free).map(|i| i.label).collect::<Vec<_>>())
        .collect();
    free.sort();
    free.dedup();
    let n = basis.len();
    let mut worst: f64 = 0.0;
    for k in 0..n.pow(free.len() as u32) {
        let assign: BTreeMap<Label, usize> = free.iter().enumerate().map(|(j, l)| (*l, k / n.pow(j as u32) % n)).collect();
        let x = numeric_symbolic_value(a, &tensors, &assign, DEFAULT_BUDGET).unwrap();
        let y = numeric_symbolic_value(b, &tensors, &assign, DEFAULT_BUDGET).unwrap();
        worst = worst.max((x - y).abs());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn each_stage_preserves_value(seed in any::<u64>()) {
        let e = expr_from_seed(seed);
        let tensors: Expression = e
            .iter()
            .map(|t| {
                let mut sign = 1i64;
                let factors = t.tensors().iter().map(|f| {
                    let (c, s) = canonical_tensor(f);
                    sign *= match s {
                        sqeval_core::canon::Sign::Plus => 1,
                        sqeval_core::canon::Sign::Minus => -1,
                        sqeval_core::canon::Sign::Zero => 0,
                    };
                    c
                }).collect();
                sqeval_core::Term::new(t.coeff() * sign, factors, vec![])
            })
            .collect();
        prop_assert!(max_diff(&e, &tensors, seed) <= 1e-12);
        let relabeled: Expression = e.iter().map(|t| sqeval_core::canon::relabel_dummies(t).unwrap()).collect();
        prop_assert!(max_diff(&e, &relabeled, seed) <= 1e-12);
        let merged = merge_terms(sort_terms(e.clone()));
        prop_assert!(max_diff(&e, &merged, seed) <= 1e-12);
        let full = antisymmetrize(&e).unwrap();
        prop_assert!(max_diff(&e, &full, seed) <= 1e-12, "{e} => {full}");
    }

    #[test]
    fn canonicalization_is_idempotent(seed in any::<u64>()) {
        let e = expr_from_seed(seed);
        let once = canonicalize_expression(&e).unwrap();
        prop_assert_eq!(canonicalize_expression(&once).unwrap(), once.clone());
        for t in &once {
            let c = canonicalize_term(t).unwrap().unwrap();
            prop_assert_eq!(c.term(), t);
            for f in t.tensors() {
                let (f1, _) = canonical_tensor(f);
                prop_assert_eq!(canonical_tensor(&f1).0, f1);
            }
        }
    }

    #[test]
    fn antisymmetrize_round_trips(seed in any::<u64>()) {
        let e = antisymmetrize(&expr_from_seed(seed)).unwrap();
        let again = antisymmetrize(&expand_antisym(&e)).unwrap();
        prop_assert_eq!(again.clone(), e.clone(), "{} vs {}", again, e);
    }
}

#[test]
fn cis_fixpoint_output_merges_to_expected_counts() {
    let h1 = "t[j=>b] t[i=>a] c(j) a(b) c(p) a(q) c(a) a(i) h[p,q]";
    let h2 = "1/2 t[j=>b] t[i=>a] c(j) a(b) c(p) c(q) a(s) a(r) c(a) a(i) V[p,q,r,s]";
    assert_eq!(antisymmetrize(&fixpoint(parse(h1).unwrap())).unwrap().len(), 3);
    assert_eq!(antisymmetrize(&fixpoint(parse(h2).unwrap())).unwrap().len(), 4);
}

#[test]
fn amplitude_factor_order_is_kept() {
    let swapped = parse("t[i=>a] t[j=>a] - t[j=>a] t[i=>a]").unwrap();
    assert_eq!(canonicalize_expression(&swapped).unwrap().len(), 2);
    // relabeling that also exchanges the roles of both amplitudes still merges
    let a = parse("t[k=>c] t[i=>a] h[a,c] h[i,k] + t[k=>a] t[i=>c] h[a,c] h[i,k]").unwrap();
    let merged = canonicalize_expression(&a).unwrap();
    assert_eq!(merged.len(), 1, "{merged}");
    assert_eq!(merged.terms()[0].coeff(), 2.into());
}
