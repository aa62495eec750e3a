use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Smooth convex scalar terms the barrier solver knows how to differentiate.
/// Indices refer to [`MixedConvexProgram::scalars`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexTerm {
    /// `u·k1·(2^{v/(u·k2)} − 1)`, the perspective of an exponential rate cost.
    /// Defined as 0 at `u = v = 0` and +∞ for `u ≤ 0 < v`.
    ExpPerspective { u: usize, v: usize, k1: f64, k2: f64 },
    /// `k3·(k4 − v)³` on `v ≤ k4`.
    Cubic { v: usize, k3: f64, k4: f64 },
    /// `k5·(k6·v1 + k7·v2 + k8)²`.
    Quadratic { v1: usize, v2: usize, k5: f64, k6: f64, k7: f64, k8: f64 },
}

impl ConvexTerm {
    pub fn scaled(&self, f: f64) -> Self {
        match *self {
            ConvexTerm::ExpPerspective { u, v, k1, k2 } => ConvexTerm::ExpPerspective { u, v, k1: k1 * f, k2 },
            ConvexTerm::Cubic { v, k3, k4 } => ConvexTerm::Cubic { v, k3: k3 * f, k4 },
            ConvexTerm::Quadratic { v1, v2, k5, k6, k7, k8 } => {
                ConvexTerm::Quadratic { v1, v2, k5: k5 * f, k6, k7, k8 }
            }
        }
    }

    pub fn variables(&self) -> [usize; 2] {
        match *self {
            ConvexTerm::ExpPerspective { u, v, .. } => [u, v],
            ConvexTerm::Cubic { v, .. } => [v, v],
            ConvexTerm::Quadratic { v1, v2, .. } => [v1, v2],
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            ConvexTerm::ExpPerspective { k1, k2, .. } => k1 > 0.0 && k2 > 0.0,
            ConvexTerm::Cubic { k3, .. } => k3 >= 0.0,
            ConvexTerm::Quadratic { k5, .. } => k5 >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("term {self:?} is not convex on its domain")))
        }
    }
}

/// `Σ_b Tr(A_b X_b) + Σ_s c_s x_s + Σ terms + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexExpr {
    pub psd: Vec<(usize, HermitianMatrix)>,
    pub linear: Vec<(usize, f64)>,
    pub terms: Vec<ConvexTerm>,
    pub constant: f64,
}

impl ConvexExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn psd(mut self, block: usize, coeff: HermitianMatrix) -> Self {
        self.psd.push((block, coeff));
        self
    }

    pub fn linear(mut self, var: usize, coeff: f64) -> Self {
        self.linear.push((var, coeff));
        self
    }

    pub fn term(mut self, t: ConvexTerm) -> Self {
        self.terms.push(t);
        self
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            psd: self.psd.iter().map(|(b, a)| (*b, a.scale(f))).collect(),
            linear: self.linear.iter().map(|(s, c)| (*s, c * f)).collect(),
            terms: self.terms.iter().map(|t| t.scaled(f)).collect(),
            constant: self.constant * f,
        }
    }

    /// Evaluates the expression at explicit block and scalar values.
    pub fn evaluate(&self, blocks: &[HermitianMatrix], scalars: &[f64]) -> Result<f64> {
        let mut v = self.constant;
        for (b, a) in &self.psd {
            v += a.trace_product(&blocks[*b])?;
        }
        for (s, c) in &self.linear {
            v += c * scalars[*s];
        }
        for t in &self.terms {
            v += super::terms::evaluate(t, scalars).value;
        }
        Ok(v)
    }
}

/// `expr ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub expr: ConvexExpr,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVar {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl ScalarVar {
    /// A variable whose bounds coincide is held constant by the solver.
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

/// Linear objective plus convex terms over Hermitian PSD blocks and bounded
/// scalars, subject to convex inequality rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixedConvexProgram {
    pub psd_blocks: Vec<usize>,
    /// Scale of the `σ·I` starting point of each block.
    pub psd_start_scale: Vec<f64>,
    pub scalars: Vec<ScalarVar>,
    pub objective: ConvexExpr,
    pub constraints: Vec<Constraint>,
}

impl MixedConvexProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_psd_block(&mut self, dim: usize, start_scale: f64) -> usize {
        self.psd_blocks.push(dim);
        self.psd_start_scale.push(start_scale);
        self.psd_blocks.len() - 1
    }

    pub fn add_scalar(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.scalars.push(ScalarVar { name: name.into(), lower, upper });
        self.scalars.len() - 1
    }

    pub fn add_constraint(&mut self, label: impl Into<String>, expr: ConvexExpr, rhs: f64) {
        self.constraints.push(Constraint { label: label.into(), expr, rhs });
    }

    /// Scalar inequality rows: explicit constraints plus every finite bound
    /// side of the free scalars.
    pub fn inequality_rows(&self) -> usize {
        self.constraints.len()
            + self
                .scalars
                .iter()
                .filter(|s| !s.is_fixed())
                .map(|s| s.lower.is_finite() as usize + s.upper.is_finite() as usize)
                .sum::<usize>()
    }

    pub fn free_scalars(&self) -> usize {
        self.scalars.iter().filter(|s| !s.is_fixed()).count()
    }

    pub fn check(&self) -> Result<()> {
        if self.psd_start_scale.len() != self.psd_blocks.len() {
            return Err(Error::Dimension("one start scale per PSD block".into()));
        }
        for s in &self.scalars {
            if !(s.lower <= s.upper) {
                return Err(Error::Domain(format!("scalar {} has empty box [{}, {}]", s.name, s.lower, s.upper)));
            }
        }
        let exprs = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.expr));
        for e in exprs {
            for (b, a) in &e.psd {
                let dim = self
                    .psd_blocks
                    .get(*b)
                    .ok_or_else(|| Error::Dimension(format!("reference to missing PSD block {b}")))?;
                if a.dim() != *dim {
                    return Err(Error::Dimension(format!("coefficient of size {} on block of size {dim}", a.dim())));
                }
            }
            let vars = e.linear.iter().map(|(s, _)| *s).chain(e.terms.iter().flat_map(|t| t.variables()));
            for s in vars {
                if s >= self.scalars.len() {
                    return Err(Error::Dimension(format!("reference to missing scalar {s}")));
                }
            }
            for t in &e.terms {
                t.check()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmSettings {
    /// Barrier parameter growth per outer iteration.
    pub mu_factor: f64,
    /// Starting barrier parameter; chosen from the objective scale when `None`.
    pub initial_t: Option<f64>,
    /// Centering stops once half the squared Newton decrement falls below this.
    pub newton_tol: f64,
    /// Terminate once the duality-gap bound `m/t` falls below this.
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    pub armijo_alpha: f64,
    pub armijo_beta: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            mu_factor: 10.0,
            initial_t: None,
            newton_tol: 1e-9,
            gap_tol: 1e-11,
            feas_tol: 1e-8,
            max_newton: 100,
            max_outer: 60,
            armijo_alpha: 0.3,
            armijo_beta: 0.5,
        }
    }
}

impl IpmSettings {
    pub fn check(&self) -> Result<()> {
        if !(self.mu_factor > 1.0) {
            return Err(Error::Params("mu_factor must exceed 1".into()));
        }
        if !(self.newton_tol > 0.0 && self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::Params("tolerances must be positive".into()));
        }
        Ok(())
    }
}
