//! Values, gradients and Hessians of the catalogue terms.

use std::f64::consts::LN_2;

use super::program::ConvexTerm;

/// Largest exponent accepted before the term is treated as +∞.
const MAX_EXPONENT: f64 = 600.0;

/// Local second-order model of a term over its (at most two) variables.
/// When both indices coincide the entries are meant to be accumulated.
#[derive(Debug, Clone, Copy)]
pub struct TermEval {
    pub value: f64,
    pub vars: [usize; 2],
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl TermEval {
    fn flat(vars: [usize; 2], value: f64) -> Self {
        Self { value, vars, grad: [0.0; 2], hess: [[0.0; 2]; 2] }
    }
}

pub fn evaluate(term: &ConvexTerm, x: &[f64]) -> TermEval {
    match *term {
        ConvexTerm::ExpPerspective { u, v, k1, k2 } => {
            let (uu, vv) = (x[u], x[v]);
            if uu <= 0.0 {
                let value = if vv <= 0.0 { 0.0 } else { f64::INFINITY };
                return TermEval::flat([u, v], value);
            }
            let y = vv * LN_2 / (uu * k2);
            if y > MAX_EXPONENT {
                return TermEval::flat([u, v], f64::INFINITY);
            }
            let e = y.exp();
            let em1 = y.exp_m1();
            let value = uu * k1 * em1;
            let g_u = k1 * (em1 - y * e);
            let g_v = k1 * e * LN_2 / k2;
            let c = k1 * (LN_2 / k2).powi(2) * e / uu;
            let r = vv / uu;
            TermEval {
                value,
                vars: [u, v],
                grad: [g_u, g_v],
                hess: [[c * r * r, -c * r], [-c * r, c]],
            }
        }
        ConvexTerm::Cubic { v, k3, k4 } => {
            let d = k4 - x[v];
            if d < 0.0 {
                return TermEval::flat([v, v], f64::INFINITY);
            }
            TermEval {
                value: k3 * d * d * d,
                vars: [v, v],
                grad: [-3.0 * k3 * d * d, 0.0],
                hess: [[6.0 * k3 * d, 0.0], [0.0, 0.0]],
            }
        }
        ConvexTerm::Quadratic { v1, v2, k5, k6, k7, k8 } => {
            let r = k6 * x[v1] + k7 * x[v2] + k8;
            TermEval {
                value: k5 * r * r,
                vars: [v1, v2],
                grad: [2.0 * k5 * r * k6, 2.0 * k5 * r * k7],
                hess: [[2.0 * k5 * k6 * k6, 2.0 * k5 * k6 * k7], [2.0 * k5 * k6 * k7, 2.0 * k5 * k7 * k7]],
            }
        }
    }
}
