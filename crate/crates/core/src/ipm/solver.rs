//! Log-barrier interior-point method over Hermitian PSD blocks and scalars.
//!
//! Each PSD block of size `n` is parameterized by `n²` real coordinates: the
//! diagonal followed by the real and imaginary parts of the strict upper
//! triangle. The block barrier is `−log det X`. Newton systems are
//! Jacobi-equilibrated before the Cholesky solve because coordinates mix
//! watts, bits and seconds.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::program::{ConvexExpr, ConvexTerm, IpmSettings, MixedConvexProgram};
use super::terms::evaluate as eval_term;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Phase-I stops as soon as every row has at least this normalized slack.
const PHASE_ONE_MARGIN: f64 = 1e-3;
const PHASE_ONE_GAP: f64 = 1e-10;
const PHASE_ONE_TRACE_CAP: f64 = 1e8;
const MIN_STEP: f64 = 1e-14;
const CONSTANT_ROW_TOL: f64 = 1e-12;
/// Squared Newton decrement below which full steps are taken.
const QUADRATIC_REGION: f64 = 0.1;
const PRECISION_FLOOR: f64 = 1e-6;
/// Multiple of the barrier value's rounding error treated as noise.
const ROUNDING_SCALE: f64 = 64.0;

/// Blocks and scalar values of a candidate point.
#[derive(Debug, Clone, PartialEq)]
pub struct IpmPoint {
    pub blocks: Vec<HermitianMatrix>,
    pub scalars: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Final `m/t`, an upper bound on the duality gap.
    pub gap_bound: f64,
    /// Largest constraint value `expr − rhs` (negative means strictly feasible).
    pub max_violation: f64,
    pub min_psd_eigenvalue: f64,
    pub outer_iterations: usize,
    pub newton_steps: usize,
    pub phase_one_steps: usize,
    /// Central-path multiplier estimates `1/(t·slack)`, one per constraint.
    pub constraint_duals: Vec<f64>,
    /// Objective after each centering step.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmSolution {
    pub point: IpmPoint,
    pub objective: f64,
    pub kkt: KktReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOne {
    Feasible(IpmPoint),
    /// The normalized infeasibility measure could not be driven below zero.
    Infeasible { measure: f64 },
}

struct BlockLayout {
    offset: usize,
    dim: usize,
    /// Each coordinate's basis matrix as a list of `coeff·e_p e_qᵀ` entries.
    basis: Vec<Vec<(usize, usize, Complex64)>>,
}

impl BlockLayout {
    fn new(offset: usize, dim: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut basis: Vec<Vec<(usize, usize, Complex64)>> = (0..dim).map(|k| vec![(k, k, one)]).collect();
        for j in 0..dim {
            for k in (j + 1)..dim {
                basis.push(vec![(j, k, one), (k, j, one)]);
                basis.push(vec![(j, k, i), (k, j, -i)]);
            }
        }
        Self { offset, dim, basis }
    }

    /// `Tr(A E_a)` for every coordinate `a`.
    fn pairing(&self, a: &DMatrix<Complex64>, out: &mut [f64], scale: f64) {
        let n = self.dim;
        let mut c = 0;
        for k in 0..n {
            out[c] += scale * a[(k, k)].re;
            c += 1;
        }
        for j in 0..n {
            for k in (j + 1)..n {
                let z = a[(j, k)];
                out[c] += scale * 2.0 * z.re;
                out[c + 1] += scale * 2.0 * z.im;
                c += 2;
            }
        }
    }

    fn assemble(&self, z: &[f64]) -> DMatrix<Complex64> {
        let n = self.dim;
        let x = &z[self.offset..self.offset + n * n];
        let mut m = DMatrix::zeros(n, n);
        let mut c = 0;
        for k in 0..n {
            m[(k, k)] = Complex64::new(x[c], 0.0);
            c += 1;
        }
        for j in 0..n {
            for k in (j + 1)..n {
                let v = Complex64::new(x[c], x[c + 1]);
                m[(j, k)] = v;
                m[(k, j)] = v.conj();
                c += 2;
            }
        }
        m
    }

    fn coords_of(&self, m: &DMatrix<Complex64>, z: &mut [f64]) {
        let n = self.dim;
        let x = &mut z[self.offset..self.offset + n * n];
        let mut c = 0;
        for k in 0..n {
            x[c] = m[(k, k)].re;
            c += 1;
        }
        for j in 0..n {
            for k in (j + 1)..n {
                x[c] = m[(j, k)].re;
                x[c + 1] = m[(j, k)].im;
                c += 2;
            }
        }
    }
}

struct Row {
    lin: Vec<f64>,
    constant: f64,
    terms: Vec<ConvexTerm>,
}

struct Bound {
    coord: usize,
    lower: Option<f64>,
    upper: Option<f64>,
}

struct Compiled {
    n: usize,
    blocks: Vec<BlockLayout>,
    coord_of: Vec<Option<usize>>,
    fixed: Vec<f64>,
    objective: Row,
    rows: Vec<Row>,
    bounds: Vec<Bound>,
}

struct BlockFactor {
    inverse: DMatrix<Complex64>,
}

struct Eval {
    f0: f64,
    /// `−g_i > 0`.
    slacks: Vec<f64>,
    bound_slacks: Vec<f64>,
    factors: Vec<BlockFactor>,
    barrier: f64,
}

impl Compiled {
    fn new(prog: &MixedConvexProgram) -> Self {
        let mut blocks = Vec::new();
        let mut n = 0;
        for &d in &prog.psd_blocks {
            blocks.push(BlockLayout::new(n, d));
            n += d * d;
        }
        let mut coord_of = Vec::with_capacity(prog.scalars.len());
        let mut fixed = Vec::with_capacity(prog.scalars.len());
        let mut bounds = Vec::new();
        for s in &prog.scalars {
            if s.is_fixed() {
                coord_of.push(None);
                fixed.push(s.lower);
            } else {
                coord_of.push(Some(n));
                fixed.push(f64::NAN);
                bounds.push(Bound {
                    coord: n,
                    lower: s.lower.is_finite().then_some(s.lower),
                    upper: s.upper.is_finite().then_some(s.upper),
                });
                n += 1;
            }
        }
        let mut c = Self {
            n,
            blocks,
            coord_of,
            fixed,
            objective: Row { lin: Vec::new(), constant: 0.0, terms: Vec::new() },
            rows: Vec::new(),
            bounds,
        };
        c.objective = c.compile(&prog.objective, 0.0);
        c.rows = prog.constraints.iter().map(|k| c.compile(&k.expr, k.rhs)).collect();
        c
    }

    fn compile(&self, e: &ConvexExpr, rhs: f64) -> Row {
        let mut lin = vec![0.0; self.n];
        let mut constant = e.constant - rhs;
        for (b, a) in &e.psd {
            let l = &self.blocks[*b];
            l.pairing(a.as_matrix(), &mut lin[l.offset..l.offset + l.dim * l.dim], 1.0);
        }
        for &(s, coef) in &e.linear {
            match self.coord_of[s] {
                Some(c) => lin[c] += coef,
                None => constant += coef * self.fixed[s],
            }
        }
        Row { lin, constant, terms: e.terms.clone() }
    }

    fn barrier_order(&self) -> f64 {
        let bound_sides: usize = self.bounds.iter().map(|b| b.lower.is_some() as usize + b.upper.is_some() as usize).sum();
        (self.rows.len() + bound_sides + self.blocks.iter().map(|b| b.dim).sum::<usize>()) as f64
    }

    fn scalars(&self, z: &[f64]) -> Vec<f64> {
        self.coord_of
            .iter()
            .zip(&self.fixed)
            .map(|(c, f)| c.map_or(*f, |c| z[c]))
            .collect()
    }

    fn to_point(&self, z: &[f64]) -> IpmPoint {
        IpmPoint {
            blocks: self
                .blocks
                .iter()
                .map(|b| HermitianMatrix::from_matrix_unchecked(b.assemble(z)))
                .collect(),
            scalars: self.scalars(z),
        }
    }

    fn coords(&self, p: &IpmPoint) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for (b, m) in self.blocks.iter().zip(&p.blocks) {
            b.coords_of(m.as_matrix(), &mut z);
        }
        for (s, c) in self.coord_of.iter().enumerate() {
            if let Some(c) = c {
                z[*c] = p.scalars[s];
            }
        }
        z
    }

    fn row_value(&self, r: &Row, z: &[f64], x: &[f64]) -> f64 {
        let mut v = r.constant + r.lin.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        for t in &r.terms {
            v += eval_term(t, x).value;
        }
        v
    }

    /// Returns `None` outside the barrier's domain.
    fn evaluate(&self, z: &[f64], t: f64) -> Option<Eval> {
        let x = self.scalars(z);
        let f0 = self.row_value(&self.objective, z, &x);
        if !f0.is_finite() {
            return None;
        }
        let mut barrier = t * f0;
        let mut slacks = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let s = -self.row_value(r, z, &x);
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            barrier -= s.ln();
            slacks.push(s);
        }
        let mut bound_slacks = Vec::new();
        for b in &self.bounds {
            let v = z[b.coord];
            for s in [b.lower.map(|l| v - l), b.upper.map(|u| u - v)].into_iter().flatten() {
                if !(s > 0.0) {
                    return None;
                }
                barrier -= s.ln();
                bound_slacks.push(s);
            }
        }
        let mut factors = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let chol = Cholesky::new(b.assemble(z))?;
            let l = chol.l_dirty();
            let mut logdet = 0.0;
            for k in 0..b.dim {
                let d = l[(k, k)].re;
                if !(d > 0.0) {
                    return None;
                }
                logdet += 2.0 * d.ln();
            }
            barrier -= logdet;
            factors.push(BlockFactor { inverse: chol.inverse() });
        }
        barrier.is_finite().then_some(Eval { f0, slacks, bound_slacks, factors, barrier })
    }

    fn row_gradient(&self, r: &Row, x: &[f64], grad: &mut [f64], hess: Option<(&mut DMatrix<f64>, f64)>) {
        grad.copy_from_slice(&r.lin);
        let mut hess = hess;
        for term in &r.terms {
            let e = eval_term(term, x);
            for a in 0..2 {
                if let Some(ca) = self.coord_of[e.vars[a]] {
                    grad[ca] += e.grad[a];
                    if let Some((h, w)) = hess.as_mut() {
                        for b in 0..2 {
                            if let Some(cb) = self.coord_of[e.vars[b]] {
                                h[(ca, cb)] += *w * e.hess[a][b];
                            }
                        }
                    }
                }
            }
        }
    }

    fn derivatives(&self, z: &[f64], ev: &Eval, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let x = self.scalars(z);
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut buf = vec![0.0; n];

        self.row_gradient(&self.objective, &x, &mut buf, Some((&mut hess, t)));
        for k in 0..n {
            grad[k] += t * buf[k];
        }

        for (r, &s) in self.rows.iter().zip(&ev.slacks) {
            self.row_gradient(r, &x, &mut buf, Some((&mut hess, 1.0 / s)));
            let nz: Vec<usize> = (0..n).filter(|&k| buf[k] != 0.0).collect();
            let inv2 = 1.0 / (s * s);
            for &a in &nz {
                grad[a] += buf[a] / s;
                for &b in &nz {
                    hess[(a, b)] += buf[a] * buf[b] * inv2;
                }
            }
        }

        let mut k = 0;
        for b in &self.bounds {
            if b.lower.is_some() {
                let s = ev.bound_slacks[k];
                grad[b.coord] -= 1.0 / s;
                hess[(b.coord, b.coord)] += 1.0 / (s * s);
                k += 1;
            }
            if b.upper.is_some() {
                let s = ev.bound_slacks[k];
                grad[b.coord] += 1.0 / s;
                hess[(b.coord, b.coord)] += 1.0 / (s * s);
                k += 1;
            }
        }

        for (b, f) in self.blocks.iter().zip(&ev.factors) {
            let y = &f.inverse;
            let off = b.offset;
            let nn = b.dim * b.dim;
            b.pairing(y, grad.as_mut_slice()[off..off + nn].as_mut(), -1.0);
            for (ia, ea) in b.basis.iter().enumerate() {
                for (ib, eb) in b.basis.iter().enumerate().skip(ia) {
                    let mut acc = 0.0;
                    for &(p, q, c) in ea {
                        for &(r, s, d) in eb {
                            acc += (c * d * y[(q, r)] * y[(s, p)]).re;
                        }
                    }
                    hess[(off + ia, off + ib)] += acc;
                    if ib != ia {
                        hess[(off + ib, off + ia)] += acc;
                    }
                }
            }
        }
        (grad, hess)
    }

    fn start(&self, prog: &MixedConvexProgram) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for (b, &scale) in self.blocks.iter().zip(&prog.psd_start_scale) {
            for k in 0..b.dim {
                z[b.offset + k] = if scale > 0.0 { scale } else { 1.0 };
            }
        }
        for b in &self.bounds {
            z[b.coord] = match (b.lower, b.upper) {
                (Some(l), Some(u)) => 0.5 * (l + u),
                (Some(l), None) => l + 1.0,
                (None, Some(u)) => u - 1.0,
                (None, None) => 0.0,
            };
        }
        z
    }
}

fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let d: DVector<f64> = DVector::from_fn(n, |k, _| {
        let h = hess[(k, k)];
        if h > 0.0 && h.is_finite() {
            1.0 / h.sqrt()
        } else {
            1.0
        }
    });
    let mut scaled = DMatrix::from_fn(n, n, |a, b| hess[(a, b)] * d[a] * d[b]);
    let rhs = DVector::from_fn(n, |k, _| -grad[k] * d[k]);
    let mut ridge = 0.0;
    for _ in 0..12 {
        if let Some(chol) = Cholesky::new(scaled.clone()) {
            let step = chol.solve(&rhs);
            if step.iter().all(|v| v.is_finite()) {
                return Some(step.component_mul(&d));
            }
        }
        let bump = if ridge == 0.0 { 1e-14 } else { ridge * 9.0 };
        for k in 0..n {
            scaled[(k, k)] += bump;
        }
        ridge += bump;
    }
    None
}

struct Centering {
    newton_steps: usize,
}

/// Damped Newton minimization of the barrier at fixed `t`.
fn center(
    c: &Compiled,
    z: &mut Vec<f64>,
    ev: &mut Eval,
    t: f64,
    settings: &IpmSettings,
    mut early_exit: impl FnMut(&Compiled, &[f64], &Eval) -> bool,
) -> Result<Centering> {
    let mut steps = 0;
    let mut prev_decrement = f64::INFINITY;
    loop {
        if early_exit(c, z, ev) {
            return Ok(Centering { newton_steps: steps });
        }
        let (grad, hess) = c.derivatives(z, ev, t);
        let dir = newton_direction(&grad, &hess)
            .ok_or_else(|| Error::Numerical(format!("singular Newton system at t = {t:.3e}")))?;
        let slope = grad.dot(&dir);
        let decrement = -slope;
        if !decrement.is_finite() {
            return Err(Error::Numerical("non-finite Newton decrement".into()));
        }
        if decrement / 2.0 <= settings.newton_tol {
            return Ok(Centering { newton_steps: steps });
        }
        let quadratic = decrement <= QUADRATIC_REGION;
        // Rounding in the gradient caps the attainable decrement; once Newton
        // steps stop shrinking it, the point is centered to working precision.
        let floor = PRECISION_FLOOR.max(ROUNDING_SCALE * f64::EPSILON * ev.barrier.abs());
        if quadratic && decrement / 2.0 <= floor && decrement > 0.5 * prev_decrement {
            return Ok(Centering { newton_steps: steps });
        }
        if steps >= settings.max_newton {
            return Err(Error::Numerical(format!(
                "Newton centering did not converge in {} steps at t = {t:.3e} (decrement {decrement:.3e})",
                settings.max_newton
            )));
        }
        steps += 1;
        prev_decrement = decrement;

        // Near the centre the barrier value is too large to resolve the
        // predicted decrease, so only the domain is checked there.
        let mut s = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, b)| a + s * b).collect();
            if let Some(next) = c.evaluate(&trial, t) {
                if quadratic || next.barrier <= ev.barrier + settings.armijo_alpha * s * slope {
                    break Some((trial, next));
                }
            }
            s *= settings.armijo_beta;
            if s < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((trial, next)) => {
                *z = trial;
                *ev = next;
            }
            None if decrement / 2.0 <= floor => return Ok(Centering { newton_steps: steps }),
            None => {
                return Err(Error::Numerical(format!(
                    "line search failed at t = {t:.3e} with Newton decrement {decrement:.3e}"
                )))
            }
        }
    }
}

/// Builds the phase-I program: rows normalized by their magnitude at the
/// starting point and relaxed by a shared slack variable `s ≥ −1`, which is
/// the objective. Returns the program, the start, and the row weights.
fn phase_one_program(prog: &MixedConvexProgram, x0: &IpmPoint) -> Result<(MixedConvexProgram, IpmPoint)> {
    let mut p1 = MixedConvexProgram {
        psd_blocks: prog.psd_blocks.clone(),
        psd_start_scale: prog.psd_start_scale.clone(),
        scalars: prog.scalars.clone(),
        objective: ConvexExpr::new(),
        constraints: Vec::new(),
    };
    let s_var = p1.add_scalar("phase_one_slack", -1.0, f64::INFINITY);
    p1.objective = ConvexExpr::new().linear(s_var, 1.0);
    let mut measure = f64::NEG_INFINITY;
    for k in &prog.constraints {
        let v = k.expr.evaluate(&x0.blocks, &x0.scalars)?;
        if !v.is_finite() {
            return Err(Error::Numerical(format!("row {} is undefined at the phase-I start", k.label)));
        }
        let mut w = v.abs().max(k.rhs.abs());
        if !(w > 0.0) {
            w = 1.0;
        }
        measure = measure.max((v - k.rhs) / w);
        p1.add_constraint(k.label.clone(), k.expr.scaled(1.0 / w).linear(s_var, -1.0), k.rhs / w);
    }
    // Directions invisible to every row would otherwise let −log det run off
    // to −∞; a loose trace cap keeps the phase-I barrier bounded below.
    for (b, (&dim, &scale)) in prog.psd_blocks.iter().zip(&prog.psd_start_scale).enumerate() {
        let cap = PHASE_ONE_TRACE_CAP * dim as f64 * scale.max(f64::MIN_POSITIVE);
        p1.add_constraint(
            format!("trace_cap[{b}]"),
            ConvexExpr::new().psd(b, HermitianMatrix::scaled_identity(dim, 1.0 / cap)),
            1.0,
        );
    }
    let mut scalars = x0.scalars.clone();
    scalars.push(measure + 1.0);
    Ok((p1, IpmPoint { blocks: x0.blocks.clone(), scalars }))
}

fn max_row(c: &Compiled, z: &[f64], rows: usize) -> f64 {
    let x = c.scalars(z);
    c.rows[..rows].iter().map(|r| c.row_value(r, z, &x)).fold(f64::NEG_INFINITY, f64::max)
}

struct PhaseOneRun {
    outcome: PhaseOne,
    newton_steps: usize,
}

fn run_phase_one(prog: &MixedConvexProgram, settings: &IpmSettings) -> Result<PhaseOneRun> {
    prog.check()?;
    settings.check()?;
    let c = Compiled::new(prog);
    let z0 = c.start(prog);
    if c.evaluate(&z0, 0.0).is_some() {
        return Ok(PhaseOneRun { outcome: PhaseOne::Feasible(c.to_point(&z0)), newton_steps: 0 });
    }
    let x0 = c.to_point(&z0);
    let (p1, start) = phase_one_program(prog, &x0)?;
    let c1 = Compiled::new(&p1);
    let n_rows = prog.constraints.len();
    let mut z = c1.coords(&start);
    let s_coord = c1.n - 1;
    let measure = |c1: &Compiled, z: &[f64]| if n_rows == 0 { f64::NEG_INFINITY } else { max_row(c1, z, n_rows) + z[s_coord] };

    let mut t = settings.initial_t.unwrap_or(1.0);
    let mut ev = c1
        .evaluate(&z, t)
        .ok_or_else(|| Error::Numerical("phase-I start is outside the barrier domain".into()))?;
    let m = c1.barrier_order();
    let mut steps = 0;
    for _ in 0..settings.max_outer {
        let done = center(&c1, &mut z, &mut ev, t, settings, |c1, z, _| measure(c1, z) <= -PHASE_ONE_MARGIN)?;
        steps += done.newton_steps;
        let mu = measure(&c1, &z);
        if mu <= -PHASE_ONE_MARGIN || (m / t <= PHASE_ONE_GAP && mu < 0.0) {
            let mut point = c1.to_point(&z);
            point.scalars.pop();
            return Ok(PhaseOneRun { outcome: PhaseOne::Feasible(point), newton_steps: steps });
        }
        if m / t <= PHASE_ONE_GAP {
            return Ok(PhaseOneRun { outcome: PhaseOne::Infeasible { measure: mu }, newton_steps: steps });
        }
        t *= settings.mu_factor;
        ev = c1.evaluate(&z, t).expect("point stays in domain when t changes");
    }
    Ok(PhaseOneRun { outcome: PhaseOne::Infeasible { measure: measure(&c1, &z) }, newton_steps: steps })
}

/// Finds a strictly feasible point (positive slacks, positive definite
/// blocks, scalars strictly inside their boxes) or certifies that none could
/// be found.
pub fn phase_one(prog: &MixedConvexProgram, settings: &IpmSettings) -> Result<PhaseOne> {
    run_phase_one(prog, settings).map(|r| r.outcome)
}

/// Solves the program with a barrier method started from a phase-I point.
/// Rows that touch no free variable are checked once and left out of the
/// barrier, so pinned scalars may sit exactly on such a row. Returns the
/// reduced program and, for every original row, its index in it.
fn drop_constant_rows(prog: &MixedConvexProgram) -> Result<(MixedConvexProgram, Vec<Option<usize>>)> {
    let free = |s: usize| !prog.scalars[s].is_fixed();
    let fixed: Vec<f64> = prog.scalars.iter().map(|s| s.lower).collect();
    let mut reduced = MixedConvexProgram { constraints: Vec::new(), ..prog.clone() };
    let mut index = Vec::with_capacity(prog.constraints.len());
    for k in &prog.constraints {
        let e = &k.expr;
        let constant = e.psd.is_empty()
            && !e.linear.iter().any(|&(s, _)| free(s))
            && !e.terms.iter().any(|t| t.variables().into_iter().any(free));
        if !constant {
            index.push(Some(reduced.constraints.len()));
            reduced.constraints.push(k.clone());
            continue;
        }
        let excess = e.evaluate(&[], &fixed)? - k.rhs;
        if excess > CONSTANT_ROW_TOL * k.rhs.abs().max(1.0) {
            return Err(Error::InfeasibleProgram { measure: excess / k.rhs.abs().max(1.0) });
        }
        index.push(None);
    }
    Ok((reduced, index))
}

pub fn ip_solve(prog: &MixedConvexProgram, settings: &IpmSettings) -> Result<IpmSolution> {
    let (reduced, index) = drop_constant_rows(prog)?;
    let mut sol = solve_reduced(&reduced, settings)?;
    let duals = std::mem::take(&mut sol.kkt.constraint_duals);
    sol.kkt.constraint_duals = index.iter().map(|i| i.map_or(0.0, |i| duals[i])).collect();
    Ok(sol)
}

fn solve_reduced(prog: &MixedConvexProgram, settings: &IpmSettings) -> Result<IpmSolution> {
    let p1 = run_phase_one(prog, settings)?;
    let start = match p1.outcome {
        PhaseOne::Feasible(p) => p,
        PhaseOne::Infeasible { measure } => return Err(Error::InfeasibleProgram { measure }),
    };
    let c = Compiled::new(prog);
    let mut z = c.coords(&start);
    let m = c.barrier_order();
    let f_start = {
        let x = c.scalars(&z);
        c.row_value(&c.objective, &z, &x)
    };
    let mut t = settings.initial_t.unwrap_or(m / f_start.abs().max(1e-9));
    let mut ev = c
        .evaluate(&z, t)
        .ok_or_else(|| Error::Numerical("phase-I point is outside the barrier domain".into()))?;

    let mut newton_steps = 0;
    let mut outer = 0;
    let mut trace = Vec::new();
    loop {
        let done = center(&c, &mut z, &mut ev, t, settings, |_, _, _| false)?;
        newton_steps += done.newton_steps;
        outer += 1;
        trace.push(ev.f0);
        if m / t <= settings.gap_tol {
            break;
        }
        if outer >= settings.max_outer {
            return Err(Error::Numerical(format!("barrier method stopped after {outer} outer iterations with m/t = {:.3e}", m / t)));
        }
        t *= settings.mu_factor;
        ev = c.evaluate(&z, t).expect("point stays in domain when t changes");
    }

    let point = c.to_point(&z);
    let max_violation = -ev.slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let min_psd_eigenvalue = point.blocks.iter().map(HermitianMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
    let objective = prog.objective.evaluate(&point.blocks, &point.scalars)?;
    Ok(IpmSolution {
        kkt: KktReport {
            gap_bound: m / t,
            max_violation: if ev.slacks.is_empty() { f64::NEG_INFINITY } else { max_violation },
            min_psd_eigenvalue,
            outer_iterations: outer,
            newton_steps,
            phase_one_steps: p1.newton_steps,
            constraint_duals: ev.slacks.iter().map(|s| 1.0 / (t * s)).collect(),
            objective_trace: trace,
        },
        point,
        objective,
    })
}
