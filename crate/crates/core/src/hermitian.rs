//! Small dense complex Hermitian matrices.
//!
//! Covariances, channel Gram matrices and the solver's PSD blocks are all
//! stored as [`HermitianMatrix`]. Dimensions here are tiny (the number of
//! transmit antennas), so everything is dense and the eigensolver is a
//! cyclic complex Jacobi iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used when checking Hermitian symmetry of inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self(DMatrix::from_diagonal_element(n, n, Complex64::new(s, 0.0)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                Complex64::new(diag[j], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// Wraps a square matrix after checking it is Hermitian. The stored copy is
    /// exactly symmetrized so downstream code can rely on it.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let n = m.nrows();
        for j in 0..n {
            for k in j..n {
                if (m[(j, k)] - m[(k, j)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::Domain(format!("matrix is not Hermitian at ({j}, {k})")));
                }
            }
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Symmetrizes `(M + M^H)/2` without checking.
    pub fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self(h)
    }

    /// Outer product `h h^H`.
    pub fn gram(h: &[Complex64]) -> Self {
        let n = h.len();
        Self(DMatrix::from_fn(n, n, |j, k| h[j] * h[k].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.0[(j, k)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.0[(k, k)].re).sum()
    }

    /// `Tr(A B)` for Hermitian `A`, `B`, computed as `Re Σ A_jk conj(B_jk)`.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "trace product of {}x{} and {}x{}",
                self.dim(),
                self.dim(),
                other.dim(),
                other.dim()
            )));
        }
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }

    /// `h^H M h`.
    pub fn quadratic_form(&self, h: &[Complex64]) -> Result<f64> {
        let n = self.dim();
        if h.len() != n {
            return Err(Error::Dimension(format!("vector of length {} against {n}x{n} matrix", h.len())));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += h[j].conj() * self.0[(j, k)] * h[k];
            }
        }
        Ok(acc.re)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("matrix sum".into()));
        }
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("matrix difference".into()));
        }
        Ok(Self(&self.0 - &other.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn eig(&self) -> EigenDecomposition {
        jacobi_eig(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix. Rejects non-Hermitian input.
pub fn eig_hermitian(m: &DMatrix<Complex64>) -> Result<EigenDecomposition> {
    let h = HermitianMatrix::new(m.clone())?;
    Ok(h.eig())
}

pub fn gram(h: &[Complex64]) -> HermitianMatrix {
    HermitianMatrix::gram(h)
}

pub fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    a.trace_product(b)
}

/// Dominant rank-one factor of a PSD matrix.
///
/// Returns `sqrt(λ_max)·v_max` with the largest-magnitude entry made real and
/// positive, together with `λ_2 / λ_max` (zero when `λ_max` is not positive).
pub fn rank_one_extract(w: &HermitianMatrix) -> (Vec<Complex64>, f64) {
    let n = w.dim();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let eig = w.eig();
    let lmax = eig.values[n - 1];
    if lmax <= 0.0 {
        return (vec![Complex64::new(0.0, 0.0); n], 0.0);
    }
    let second = if n > 1 { eig.values[n - 2].max(0.0) } else { 0.0 };
    let v = &eig.vectors[n - 1];
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    let amp = lmax.sqrt();
    let beam = v.iter().map(|z| z * phase * amp).collect();
    (beam, second / lmax)
}

fn off_diagonal_norm(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                s += a[(j, k)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_eig(input: &DMatrix<Complex64>) -> EigenDecomposition {
    let n = input.nrows();
    let mut a = input.clone();
    let mut v: DMatrix<Complex64> = DMatrix::identity(n, n);
    let total = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let zero = Complex64::new(0.0, 0.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b == 0.0 || b <= f64::MIN_POSITIVE {
                    continue;
                }
                // Phase rotation makes the pivot real, then a real Jacobi rotation zeroes it.
                let phase = apq / b;
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let zeta = (beta - alpha) / (2.0 * b);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = phase.conj();
                // J = diag(1, e) * [[c, s], [-s, c]]
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = e * (-s);
                let jqq = e * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    EigenDecomposition {
        values: order.iter().map(|&k| a[(k, k)].re).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|r| v[(r, k)]).collect()).collect(),
    }
}
