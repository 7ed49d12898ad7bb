//! Computational toolkit for interpolation couples of finite Banach
//! lattices: exact K-functionals and rearrangements, the order relations
//! they induce, synthesis of positive contractions by linear programming,
//! certification of intermediate norms and nonlinear operators, and
//! gradient-flow audits for graph Dirichlet forms.

pub mod error;
pub mod kfunc;
pub mod lp;
pub mod matrix;
pub mod norm;
pub mod opcert;
pub mod sample;
pub mod space;

pub use error::{Error, Result};
pub use kfunc::{
    check_relation, check_relation_scaled, k_curve, k_inf_value, k_l1linf_curve, k_value,
    k_value_general, lift_decomposition, optimal_decomposition, refine_decomposition, sum_norm,
    Decomposition, KCurve, RelationKind, RelationReport, RelationWitness, Saturation,
};
pub use lp::{lp_solve, FarkasCertificate, LinearProgram, LpOutcome};
pub use matrix::Matrix;
pub use norm::{Couple, NormSpec};
pub use space::{lattice_eval, LatticeOp, LatticeVector, MeasureSpace, StepFunction};

/// Fixed float formatting used by CSV/SVG artifacts and content digests:
/// 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{x:.11e}");
    // Normalize "d.dddddddddddde±k" into a trimmed decimal form.
    let (mantissa, exponent) = formatted.split_once('e').expect("exponent present");
    let exp: i32 = exponent.parse().expect("valid exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(2.5), "2.5");
        assert_eq!(fmt_sig(-0.125), "-0.125");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(1e15), "1e15");
        assert_eq!(fmt_sig(1.23e-7), "1.23e-7");
    }
}
