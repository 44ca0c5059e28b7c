//! End-to-end reduction: rewrite to operator-free form, then simplify.

use thiserror::Error;

use crate::canon::{antisymmetrize, CanonError};
use crate::engine::{fixpoint_with_stats, FixpointStats};
use crate::model::{Expression, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("result violates index bindings: {0}")]
    Binding(#[from] ModelError),
    #[error("operators remain after rewriting")]
    OperatorsRemain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub result: Expression,
    pub stats: FixpointStats,
}

/// Reduces `expr` to a canonical, merged, antisymmetrized operator-free sum.
pub fn evaluate(expr: Expression) -> Result<Evaluation, PipelineError> {
    let (raw, stats) = fixpoint_with_stats(expr);
    if !raw.is_operator_free() {
        return Err(PipelineError::OperatorsRemain);
    }
    let result = antisymmetrize(&raw)?;
    for t in &result {
        t.check_bindings()?;
    }
    Ok(Evaluation { result, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonicalize_expression;
    use crate::parser::parse;

    fn eval(src: &str) -> Expression {
        evaluate(parse(src).unwrap()).unwrap().result
    }

    fn same(a: &Expression, b: &str) {
        let b = canonicalize_expression(&parse(b).unwrap()).unwrap();
        assert_eq!(canonicalize_expression(a).unwrap(), b, "got {a}");
    }

    #[test]
    fn one_body_reference_energy() {
        same(&eval("h[p,q] c(p) a(q)"), "h[m,m]");
    }

    #[test]
    fn two_body_reference_energy() {
        same(&eval("1/2 V[p,q,r,s] c(p) c(q) a(s) a(r)"), "1/2 A[m,n,m,n]");
    }

    #[test]
    fn cis_one_body() {
        let r = eval("t[j=>b] t[i=>a] c(j) a(b) c(p) a(q) c(a) a(i) h[p,q]");
        assert_eq!(r.len(), 3);
        same(&r, "-t[j=>a] t[i=>a] h[i,j] + t[i=>b] t[i=>a] h[a,b] + t[i=>a] t[i=>a] h[m,m]");
    }

    #[test]
    fn operator_free_input_passes_through() {
        same(&eval("h[i,j] t[i=>a] t[j=>a]"), "h[i,j] t[i=>a] t[j=>a]");
        assert!(eval("c(a) a(i)").is_empty());
    }
}
