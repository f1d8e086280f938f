//! Closed-form symmetric single-project solvers.
//!
//! With `n` identical players on one project, identity effort maps, and
//! proportional sharing, both the equilibrium and the optimum reduce to
//! scalar first-order conditions in the total quality, solved here by
//! bracketed bisection.

use crate::model::{CostModel, ValueFunction};
use crate::solvers::onedim::bisect_root;
use crate::{Error, Result};

const FOC_TOL: f64 = 1e-12;

/// Finds a sign change of `f` over a geometric grid and bisects it.
fn solve_scalar_foc(
    f: impl Fn(f64) -> f64,
    what: &'static str,
) -> Result<f64> {
    let mut prev_x = 1e-9;
    let mut prev_f = f(prev_x);
    for k in 1..=720 {
        let x = 1e-9 * 10f64.powf(k as f64 / 40.0);
        if x > 1e9 {
            break;
        }
        let fx = f(x);
        if prev_f == 0.0 {
            return Ok(prev_x);
        }
        if prev_f.is_finite() && fx.is_finite() && prev_f * fx < 0.0 {
            return Ok(bisect_root(&f, prev_x, x, FOC_TOL));
        }
        if prev_f.is_infinite() && fx.is_finite() && fx < 0.0 {
            return Ok(bisect_root(&f, prev_x, x, FOC_TOL));
        }
        prev_x = x;
        prev_f = fx;
    }
    Err(Error::NoSignChange { what, lo: 1e-9, hi: 1e9 })
}

/// Total equilibrium quality of the symmetric single-project game.
///
/// With a soft cost the stationarity condition is
/// `v'(X) − c'(X/n) + (1 − 1/n)(v(X) − v'(X)X)/X = 0`; with no cost
/// (`cost = None`, budgets slack) it degenerates to
/// `(1 − 1/n)·v(Q) + (1/n)·v'(Q)·Q = 0`, which only the non-monotone
/// value family can satisfy.
pub fn symmetric_single_project_eq(
    vf: &ValueFunction,
    cost: Option<&CostModel>,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("need at least one player".into()));
    }
    if !vf.is_concave_of_sum() {
        return Err(Error::Domain("symmetric solver needs a value of the total quality".into()));
    }
    let nf = n as f64;
    match cost {
        Some(c) => {
            if c.is_hard() {
                return Err(Error::Domain(
                    "symmetric solver takes a soft cost or None for the zero-cost variant".into(),
                ));
            }
            let foc = |x: f64| {
                let v = vf.value_of_total(x);
                let dv = vf.total_derivative(x);
                dv - c.marginal_cost(x / nf) + (1.0 - 1.0 / nf) * (v - dv * x) / x
            };
            solve_scalar_foc(foc, "symmetric equilibrium FOC")
        }
        None => {
            if n == 1 {
                // Single player maximizes v itself: v'(Q) = 0.
                return solve_scalar_foc(|x| vf.total_derivative(x), "single-player peak");
            }
            let foc =
                |x: f64| (1.0 - 1.0 / nf) * vf.value_of_total(x) + vf.total_derivative(x) * x / nf;
            solve_scalar_foc(foc, "zero-cost symmetric equilibrium FOC")
        }
    }
}

/// Socially optimal total quality of the symmetric single-project game:
/// `v'(X) − c'(X/n) = 0`, or the peak `v'(X) = 0` with no cost.
pub fn symmetric_single_project_opt(
    vf: &ValueFunction,
    cost: Option<&CostModel>,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("need at least one player".into()));
    }
    if !vf.is_concave_of_sum() {
        return Err(Error::Domain("symmetric solver needs a value of the total quality".into()));
    }
    let nf = n as f64;
    let foc = move |x: f64| match cost {
        Some(c) => vf.total_derivative(x) - c.marginal_cost(x / nf),
        None => vf.total_derivative(x),
    };
    // A constant FOC (linear value with linear cost) has no interior root.
    let probes = [1e-6, 1e-3, 1.0, 1e3];
    let first = foc(probes[0]);
    if first.is_finite() && probes.iter().all(|&x| (foc(x) - first).abs() < 1e-14) {
        return Err(Error::NoInteriorOptimum("first-order condition is constant".into()));
    }
    solve_scalar_foc(foc, "symmetric optimum FOC").map_err(|e| match e {
        Error::NoSignChange { .. } => {
            Error::NoInteriorOptimum("first-order condition never changes sign".into())
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_linear_equilibrium_totals() {
        // Q = ((n − 1/2)/n)² for the sqrt-value linear-cost game.
        for n in [1usize, 2, 3, 8] {
            let q = symmetric_single_project_eq(
                &ValueFunction::Sqrt,
                Some(&CostModel::SoftLinear),
                n,
            )
            .unwrap();
            let nf = n as f64;
            let expect = ((nf - 0.5) / nf).powi(2);
            assert!((q - expect).abs() < 1e-10, "n={n}: {q} vs {expect}");
        }
    }

    #[test]
    fn sqrt_linear_optimum_is_quarter() {
        for n in [1usize, 2, 7, 100] {
            let x = symmetric_single_project_opt(
                &ValueFunction::Sqrt,
                Some(&CostModel::SoftLinear),
                n,
            )
            .unwrap();
            assert!((x - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn single_peaked_zero_cost_equilibrium() {
        // r·Q(1−Q) with no cost: Q̃ = n/(n+1); at n = 3 that is 3/4.
        let vf = ValueFunction::SinglePeaked { r: 4.0 };
        let q = symmetric_single_project_eq(&vf, None, 3).unwrap();
        assert!((q - 0.75).abs() < 1e-10, "{q}");
        // Single player lands on the peak, which is also the optimum.
        let q1 = symmetric_single_project_eq(&vf, None, 1).unwrap();
        assert!((q1 - 0.5).abs() < 1e-10);
        let x1 = symmetric_single_project_opt(&vf, None, 1).unwrap();
        assert!((q1 - x1).abs() < 1e-10);
    }

    #[test]
    fn linear_value_linear_cost_is_degenerate() {
        let vf = ValueFunction::Power { weight: 1.0, alpha: 1.0 };
        let err =
            symmetric_single_project_opt(&vf, Some(&CostModel::SoftLinear), 2).unwrap_err();
        assert!(matches!(err, Error::NoInteriorOptimum(_)), "{err}");
    }

    #[test]
    fn quadratic_cost_sqrt_value_crosschecked() {
        // 1/(2√X) = 2X at n = 1; X = 4^(−2/3).
        let cost = CostModel::SoftPower { kappa: 1.0, mu: 1.0 };
        let x = symmetric_single_project_opt(&ValueFunction::Sqrt, Some(&cost), 1).unwrap();
        let expect = 4f64.powf(-2.0 / 3.0);
        assert!((x - expect).abs() < 1e-10, "{x} vs {expect}");

        // Cross-check against a dense scalar grid on SW(X) = v(X) − n·c(X/n).
        let mut best_x = 0.0;
        let mut best = f64::NEG_INFINITY;
        for t in 0..=100_000 {
            let xx = t as f64 * 1e-5;
            let sw = xx.sqrt() - cost.cost(xx);
            if sw > best {
                best = sw;
                best_x = xx;
            }
        }
        assert!((best_x - x).abs() < 1e-4);
    }

    #[test]
    fn monotone_value_zero_cost_has_no_equilibrium_root() {
        let err = symmetric_single_project_eq(&ValueFunction::Sqrt, None, 3).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }
}
