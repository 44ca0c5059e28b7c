//! Brute-force numeric backend used to certify symbolic results.
//!
//! Operator strings are applied to explicit determinants (bit `k` set means
//! spin-orbital `k` is occupied), and dummy indices are summed by plain
//! enumeration. Orbitals `0..n_occ` are occupied in the reference, the rest
//! are virtual.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Binding, Expression, Label, OpKind, OrbitalSpace, TensorKind, Term};

/// Default cap on enumerated `assignments x operators` per evaluation.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Largest basis the oracle accepts.
pub const MAX_ORBITALS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("invalid basis: need 1 <= n_occ, 1 <= n_virt and n_occ + n_virt <= {MAX_ORBITALS} (got {n_occ}, {n_virt})")]
    InvalidBasis { n_occ: usize, n_virt: usize },
    #[error("evaluation needs {needed} assignment-operations, budget is {budget}")]
    ScaleExceeded { needed: u64, budget: u64 },
    #[error("expression still carries operators")]
    OperatorsPresent,
    #[error("free index {0} has no assigned orbital")]
    UnboundFreeIndex(Label),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbitalBasis {
    n_occ: usize,
    n_virt: usize,
}

impl OrbitalBasis {
    pub fn new(n_occ: usize, n_virt: usize) -> Result<Self, OracleError> {
        if n_occ == 0 || n_virt == 0 || n_occ + n_virt > MAX_ORBITALS {
            return Err(OracleError::InvalidBasis { n_occ, n_virt });
        }
        Ok(Self { n_occ, n_virt })
    }

    pub fn n_occ(self) -> usize {
        self.n_occ
    }

    pub fn n_virt(self) -> usize {
        self.n_virt
    }

    pub fn len(self) -> usize {
        self.n_occ + self.n_virt
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn orbitals(self, space: OrbitalSpace) -> Range<usize> {
        match space {
            OrbitalSpace::Occupied => 0..self.n_occ,
            OrbitalSpace::Virtual => self.n_occ..self.len(),
            OrbitalSpace::General => 0..self.len(),
        }
    }

    pub fn reference(self) -> Determinant {
        (1 << self.n_occ) - 1
    }
}

pub type Determinant = u32;

/// Action of one operator on a determinant: the new determinant and its sign,
/// or `None` if the determinant is annihilated.
pub fn apply_to_determinant(det: Determinant, kind: OpKind, orbital: usize) -> Option<(Determinant, f64)> {
    let bit = 1 << orbital;
    let occupied = det & bit != 0;
    let next = match (kind, occupied) {
        (OpKind::Annihilation, true) => det & !bit,
        (OpKind::Creation, false) => det | bit,
        _ => return None,
    };
    let below = (det & (bit - 1)).count_ones();
    Some((next, if below.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

/// Finitely supported real superposition of determinants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockState {
    amplitudes: BTreeMap<Determinant, f64>,
}

impl FockState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn determinant(det: Determinant) -> Self {
        Self::from_amplitudes([(det, 1.0)])
    }

    pub fn reference(basis: OrbitalBasis) -> Self {
        Self::determinant(basis.reference())
    }

    pub fn from_amplitudes(iter: impl IntoIterator<Item = (Determinant, f64)>) -> Self {
        let mut s = Self::zero();
        for (d, a) in iter {
            s.add(d, a);
        }
        s
    }

    pub fn add(&mut self, det: Determinant, amplitude: f64) {
        let slot = self.amplitudes.entry(det).or_insert(0.0);
        *slot += amplitude;
        if *slot == 0.0 {
            self.amplitudes.remove(&det);
        }
    }

    pub fn amplitude(&self, det: Determinant) -> f64 {
        self.amplitudes.get(&det).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Determinant, f64)> + '_ {
        self.amplitudes.iter().map(|(&d, &a)| (d, a))
    }

    pub fn overlap(&self, other: &Self) -> f64 {
        self.iter().map(|(d, a)| a * other.amplitude(d)).sum()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (d, a) in other.iter() {
            out.add(d, a);
        }
        out
    }
}

pub fn apply_op(state: &FockState, kind: OpKind, orbital: usize) -> FockState {
    FockState::from_amplitudes(
        state
            .iter()
            .filter_map(|(det, amp)| apply_to_determinant(det, kind, orbital).map(|(d, s)| (d, s * amp))),
    )
}

/// Real integrals and amplitudes over a basis.
///
/// `h` is symmetric and `V` has the pair-swap symmetry
/// `V[pqrs] = V[rspq] = V[qpsr] = V[srqp]`; amplitudes are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTensors {
    basis: OrbitalBasis,
    h: Vec<f64>,
    v: Vec<f64>,
    /// Keyed by (lower, upper) index counts; dense over all orbitals.
    amplitudes: BTreeMap<(usize, usize), Vec<f64>>,
}

fn flat(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

impl NumericTensors {
    /// All-zero tensors.
    pub fn zeros(basis: OrbitalBasis) -> Self {
        let n = basis.len();
        let mut amplitudes = BTreeMap::new();
        for lower in 0..=2 {
            for upper in 0..=2 {
                amplitudes.insert((lower, upper), alloc::vec![0.0; n.pow((lower + upper) as u32)]);
            }
        }
        Self {
            basis,
            h: alloc::vec![0.0; n * n],
            v: alloc::vec![0.0; n.pow(4)],
            amplitudes,
        }
    }

    /// Uniform draws in [-1, 1], then averaged over each symmetry orbit.
    pub fn random(seed: u64, basis: OrbitalBasis) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Self::zeros(basis);
        let n = basis.len();
        for x in out.h.iter_mut().chain(out.v.iter_mut()) {
            *x = rng.random_range(-1.0..=1.0);
        }
        for values in out.amplitudes.values_mut() {
            for x in values.iter_mut() {
                *x = rng.random_range(-1.0..=1.0);
            }
        }

        for p in 0..n {
            for q in p + 1..n {
                let avg = (out.h[p * n + q] + out.h[q * n + p]) / 2.0;
                out.h[p * n + q] = avg;
                out.h[q * n + p] = avg;
            }
        }
        let mut seen = alloc::vec![false; out.v.len()];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let orbit: BTreeSet<usize> = [[p, q, r, s], [r, s, p, q], [q, p, s, r], [s, r, q, p]]
                            .iter()
                            .map(|i| flat(n, i))
                            .collect();
                        if seen[flat(n, &[p, q, r, s])] {
                            continue;
                        }
                        let avg = orbit.iter().map(|&k| out.v[k]).sum::<f64>() / orbit.len() as f64;
                        for &k in &orbit {
                            out.v[k] = avg;
                            seen[k] = true;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn basis(&self) -> OrbitalBasis {
        self.basis
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.basis.len() + q]
    }

    pub fn v(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.v[flat(self.basis.len(), &[p, q, r, s])]
    }

    /// `<pq||rs> = <pq|rs> - <pq|sr>`
    pub fn antisym(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.v(p, q, r, s) - self.v(p, q, s, r)
    }

    pub fn amplitude(&self, lower: &[usize], upper: &[usize]) -> f64 {
        let n = self.basis.len();
        let pos = flat(n, lower) * n.pow(upper.len() as u32) + flat(n, upper);
        self.amplitudes
            .get(&(lower.len(), upper.len()))
            .map_or(0.0, |v| v[pos])
    }

    pub fn set_amplitude(&mut self, lower: &[usize], upper: &[usize], value: f64) {
        let n = self.basis.len();
        let pos = flat(n, lower) * n.pow(upper.len() as u32) + flat(n, upper);
        if let Some(v) = self.amplitudes.get_mut(&(lower.len(), upper.len())) {
            v[pos] = value;
        }
    }

    /// Sets every amplitude of one shape to zero.
    pub fn clear_amplitudes(&mut self, lower: usize, upper: usize) {
        if let Some(v) = self.amplitudes.get_mut(&(lower, upper)) {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn tensor_value(&self, kind: TensorKind, orb: &[usize]) -> f64 {
        match kind {
            TensorKind::Delta => f64::from(u8::from(orb[0] == orb[1])),
            TensorKind::OneElectron => self.h(orb[0], orb[1]),
            TensorKind::TwoElectronBare => self.v(orb[0], orb[1], orb[2], orb[3]),
            TensorKind::TwoElectronAntisym => self.antisym(orb[0], orb[1], orb[2], orb[3]),
            TensorKind::Amplitude { lower } => {
                let (lo, up) = orb.split_at(lower as usize);
                self.amplitude(lo, up)
            }
        }
    }
}

/// Orbitals assigned to free indices.
pub type FreeAssignment = BTreeMap<Label, usize>;

/// A term lowered to slot numbers for fast enumeration.
struct Compiled {
    coeff: f64,
    /// Orbital range of each dummy slot; free slots come after and are fixed.
    dummy_ranges: Vec<Range<usize>>,
    fixed: Vec<usize>,
    tensors: Vec<(TensorKind, Vec<usize>)>,
    ops: Vec<(OpKind, usize)>,
}

impl Compiled {
    /// `None` if a free index sits outside its space, so the term is zero.
    fn new(term: &Term, basis: OrbitalBasis, free: &FreeAssignment) -> Result<Option<Self>, OracleError> {
        let counts = term.index_counts();
        let mut slot: BTreeMap<Label, usize> = BTreeMap::new();
        let mut dummy_ranges = Vec::new();
        for (label, (idx, _)) in &counts {
            if idx.binding == Binding::Dummy {
                slot.insert(*label, dummy_ranges.len());
                dummy_ranges.push(basis.orbitals(idx.space));
            }
        }
        let mut fixed = Vec::new();
        for (label, (idx, _)) in &counts {
            if idx.binding == Binding::Free {
                let orb = *free.get(label).ok_or(OracleError::UnboundFreeIndex(*label))?;
                if !basis.orbitals(idx.space).contains(&orb) {
                    return Ok(None);
                }
                slot.insert(*label, dummy_ranges.len() + fixed.len());
                fixed.push(orb);
            }
        }
        let coeff = *term.coeff().numer() as f64 / *term.coeff().denom() as f64;
        Ok(Some(Self {
            coeff,
            dummy_ranges,
            fixed,
            tensors: term
                .tensors()
                .iter()
                .map(|t| (t.kind(), t.indices().iter().map(|i| slot[&i.label]).collect()))
                .collect(),
            ops: term.ops().iter().map(|o| (o.kind, slot[&o.index.label])).collect(),
        }))
    }

    fn cost(&self) -> u64 {
        let assignments = self
            .dummy_ranges
            .iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(r.len() as u64));
        assignments
            .and_then(|a| a.checked_mul(self.ops.len().max(1) as u64))
            .unwrap_or(u64::MAX)
    }

    fn value(&self, tensors: &NumericTensors) -> f64 {
        let reference = tensors.basis.reference();
        let mut orb: Vec<usize> = self.dummy_ranges.iter().map(|r| r.start).collect();
        orb.extend_from_slice(&self.fixed);
        if self.dummy_ranges.iter().any(|r| r.is_empty()) {
            return 0.0;
        }
        let mut buf = Vec::with_capacity(4);
        let mut total = 0.0;
        loop {
            let mut prod = self.coeff;
            for (kind, slots) in &self.tensors {
                buf.clear();
                buf.extend(slots.iter().map(|&s| orb[s]));
                prod *= tensors.tensor_value(*kind, &buf);
                if prod == 0.0 {
                    break;
                }
            }
            if prod != 0.0 {
                let mut det = reference;
                for &(kind, s) in self.ops.iter().rev() {
                    match apply_to_determinant(det, kind, orb[s]) {
                        Some((d, sign)) => {
                            det = d;
                            prod *= sign;
                        }
                        None => {
                            prod = 0.0;
                            break;
                        }
                    }
                }
                if det == reference {
                    total += prod;
                }
            }
            // odometer over dummy slots
            let mut k = 0;
            loop {
                if k == self.dummy_ranges.len() {
                    return total;
                }
                orb[k] += 1;
                if orb[k] < self.dummy_ranges[k].end {
                    break;
                }
                orb[k] = self.dummy_ranges[k].start;
                k += 1;
            }
        }
    }
}

fn compile(expr: &Expression, basis: OrbitalBasis, free: &FreeAssignment) -> Result<Vec<Compiled>, OracleError> {
    let mut out = Vec::with_capacity(expr.len());
    for t in expr {
        if let Some(c) = Compiled::new(t, basis, free)? {
            out.push(c);
        }
    }
    Ok(out)
}

fn total_cost(compiled: &[Compiled]) -> u64 {
    compiled.iter().fold(0u64, |acc, c| acc.saturating_add(c.cost()))
}

fn evaluate(expr: &Expression, tensors: &NumericTensors, free: &FreeAssignment, budget: u64) -> Result<f64, OracleError> {
    let compiled = compile(expr, tensors.basis, free)?;
    let needed = total_cost(&compiled);
    if needed > budget {
        return Err(OracleError::ScaleExceeded { needed, budget });
    }
    Ok(compiled.iter().map(|c| c.value(tensors)).sum())
}

/// `sum over dummies of coeff * tensors * <HF| ops |HF>` for an expression
/// that may still carry operators.
pub fn numeric_input_value(
    expr: &Expression,
    tensors: &NumericTensors,
    free: &FreeAssignment,
    budget: u64,
) -> Result<f64, OracleError> {
    evaluate(expr, tensors, free, budget)
}

/// Value of an operator-free expression; deltas evaluate to 1 or 0.
pub fn numeric_symbolic_value(
    expr: &Expression,
    tensors: &NumericTensors,
    free: &FreeAssignment,
    budget: u64,
) -> Result<f64, OracleError> {
    if !expr.is_operator_free() {
        return Err(OracleError::OperatorsPresent);
    }
    evaluate(expr, tensors, free, budget)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub trials: usize,
    /// Trial `k` uses seed `seed + k`.
    pub seed: u64,
    pub tol: f64,
    pub budget: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            trials: 5,
            seed: 1,
            tol: 1e-10,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    /// Largest difference over all free-index assignments.
    pub abs_diff: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub trials: Vec<TrialResult>,
    pub tol: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.trials.iter().all(|t| t.passed)
    }

    pub fn max_abs_diff(&self) -> f64 {
        self.trials.iter().map(|t| t.abs_diff).fold(0.0, f64::max)
    }
}

/// Whitespace-separated table: `seed abs_diff verdict`.
impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed abs_diff verdict")?;
        for t in &self.trials {
            writeln!(f, "{} {:.3e} {}", t.seed, t.abs_diff, verdict(t.passed))?;
        }
        write!(f, "# {} max_abs_diff={:.3e} tol={:e}", verdict(self.passed()), self.max_abs_diff(), self.tol)
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn free_labels(expr: &Expression, into: &mut BTreeSet<Label>) {
    for t in expr {
        into.extend(t.occurrences().filter(|i| i.binding == Binding::Free).map(|i| i.label));
    }
}

/// Compares an operator-carrying input against an operator-free derivation on
/// random tensors, over every assignment of free indices to orbitals.
pub fn check_equivalence(
    input: &Expression,
    derived: &Expression,
    basis: OrbitalBasis,
    opts: CheckOptions,
) -> Result<Report, OracleError> {
    if !derived.is_operator_free() {
        return Err(OracleError::OperatorsPresent);
    }
    let mut labels = BTreeSet::new();
    free_labels(input, &mut labels);
    free_labels(derived, &mut labels);
    let labels: Vec<Label> = labels.into_iter().collect();
    let n = basis.len();
    let assignments = (n as u64).checked_pow(labels.len() as u32).unwrap_or(u64::MAX);

    let mut compiled = Vec::new();
    let mut needed = 0u64;
    let mut orb = alloc::vec![0usize; labels.len()];
    for _ in 0..assignments {
        let free: FreeAssignment = labels.iter().copied().zip(orb.iter().copied()).collect();
        let lhs = compile(input, basis, &free)?;
        let rhs = compile(derived, basis, &free)?;
        needed = needed.saturating_add(total_cost(&lhs)).saturating_add(total_cost(&rhs));
        if needed > opts.budget {
            return Err(OracleError::ScaleExceeded {
                needed,
                budget: opts.budget,
            });
        }
        compiled.push((lhs, rhs));
        for slot in orb.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }

    let trials = (0..opts.trials as u64)
        .map(|k| {
            let seed = opts.seed.wrapping_add(k);
            let tensors = NumericTensors::random(seed, basis);
            let abs_diff = compiled
                .iter()
                .map(|(lhs, rhs)| {
                    let a: f64 = lhs.iter().map(|c| c.value(&tensors)).sum();
                    let b: f64 = rhs.iter().map(|c| c.value(&tensors)).sum();
                    (a - b).abs()
                })
                .fold(0.0, f64::max);
            TrialResult {
                seed,
                abs_diff,
                passed: abs_diff <= opts.tol,
            }
        })
        .collect();
    Ok(Report { trials, tol: opts.tol })
}
