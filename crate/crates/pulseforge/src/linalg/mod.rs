//! Dense complex linear algebra with diagonal-aware fast paths.
//!
//! Matrices are square, row-major `Complex64`. Diagonal matrices are stored
//! as vectors ([`DiagonalVector`]) and never materialized as N x N: scaling a
//! dense matrix by a diagonal costs O(N^2), exponentiating a diagonal costs
//! O(N). The one place a general O(N^3) product is unavoidable is
//! [`sandwich_product`], which evaluates {phase} W1 {alpha} W2 {phase*} with
//! exactly one full multiplication.

mod expm;

pub use expm::{expm, expm_into, ExpmWorkspace};

use num_complex::Complex64;

use crate::counters;
use crate::error::{Error, Result};

/// Dense N x N complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "DenseMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, " {:+.4e}{:+.4e}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be >= 1");
        DenseMatrix {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::ONE;
        }
        m
    }

    /// Build from a row-major closure.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    /// Build from row-major data; the length must be a perfect square.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(DenseMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Complex64::ZERO);
    }

    pub fn set_identity(&mut self) {
        self.fill_zero();
        for i in 0..self.dim {
            self.data[i * self.dim + i] = Complex64::ONE;
        }
    }

    pub fn copy_from(&mut self, other: &DenseMatrix) {
        assert_eq!(self.dim, other.dim, "copy_from: dimension mismatch");
        self.data.copy_from_slice(&other.data);
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> DenseMatrix {
        let n = self.dim;
        DenseMatrix::from_fn(n, |r, c| self[(c, r)].conj())
    }

    /// self += scale * other
    pub fn add_scaled(&mut self, scale: Complex64, other: &DenseMatrix) {
        assert_eq!(self.dim, other.dim, "add_scaled: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, scale: Complex64) {
        for a in self.data.iter_mut() {
            *a *= scale;
        }
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let n = self.dim;
        let mut best = 0.0f64;
        for c in 0..n {
            let mut s = 0.0;
            for r in 0..n {
                s += self.data[r * n + c].norm();
            }
            best = best.max(s);
        }
        best
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-norm of the difference; dimension mismatch yields infinity.
    pub fn max_diff(&self, other: &DenseMatrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm of (self^dag * self - I), computed by direct loops.
    ///
    /// Diagnostic only: does not go through the counted multiply path.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let mut s = Complex64::ZERO;
                for k in 0..n {
                    s += self.data[k * n + r].conj() * self.data[k * n + c];
                }
                if r == c {
                    s -= Complex64::ONE;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Diagonal matrix stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalVector {
    entries: Vec<Complex64>,
}

impl DiagonalVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        assert!(!entries.is_empty(), "diagonal dimension must be >= 1");
        DiagonalVector { entries }
    }

    pub fn ones(dim: usize) -> Self {
        Self::new(vec![Complex64::ONE; dim])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn conj(&self) -> DiagonalVector {
        DiagonalVector::new(self.entries.iter().map(|z| z.conj()).collect())
    }

    /// True if every entry has unit modulus to within `tol`.
    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.entries.iter().all(|z| (z.norm() - 1.0).abs() <= tol)
    }
}

/// Which side a diagonal acts on in [`diag_mul`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// D * M: scales row k of M by d[k].
    Left,
    /// M * D: scales column k of M by d[k].
    Right,
}

/// Elementwise exponential of a real diagonal: entries[k] = exp(scale * d[k]).
pub fn diag_exp(d: &[f64], scale: Complex64) -> Result<DiagonalVector> {
    let mut out = DiagonalVector::new(vec![Complex64::ZERO; d.len().max(1)]);
    diag_exp_into(d, scale, &mut out)?;
    Ok(out)
}

/// [`diag_exp`] into a preallocated diagonal.
pub fn diag_exp_into(d: &[f64], scale: Complex64, out: &mut DiagonalVector) -> Result<()> {
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("diag_exp: non-finite input".into()));
    }
    if out.dim() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "diag_exp: input {} vs out {}",
            d.len(),
            out.dim()
        )));
    }
    for (o, &x) in out.entries_mut().iter_mut().zip(d.iter()) {
        *o = (scale * x).exp();
    }
    Ok(())
}

/// Multiply by a diagonal in O(N^2): exactly N^2 scalar multiplies.
pub fn diag_mul(d: &DiagonalVector, m: &DenseMatrix, side: Side) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(m.dim());
    diag_mul_into(d, m, side, &mut out)?;
    Ok(out)
}

pub fn diag_mul_into(
    d: &DiagonalVector,
    m: &DenseMatrix,
    side: Side,
    out: &mut DenseMatrix,
) -> Result<()> {
    let n = m.dim();
    if d.dim() != n || out.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "diag_mul: diag {} vs matrix {} vs out {}",
            d.dim(),
            n,
            out.dim()
        )));
    }
    let dd = d.entries();
    let src = m.as_slice();
    let dst = out.as_mut_slice();
    match side {
        Side::Left => {
            for r in 0..n {
                let f = dd[r];
                for c in 0..n {
                    dst[r * n + c] = f * src[r * n + c];
                }
            }
        }
        Side::Right => {
            for r in 0..n {
                for c in 0..n {
                    dst[r * n + c] = src[r * n + c] * dd[c];
                }
            }
        }
    }
    Ok(())
}

/// General matrix product `out = a * b`. The only O(N^3) path in the crate;
/// every call is counted.
pub fn matmul_into(a: &DenseMatrix, b: &DenseMatrix, out: &mut DenseMatrix) -> Result<()> {
    let n = a.dim();
    if b.dim() != n || out.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "matmul: {} x {} -> {}",
            n,
            b.dim(),
            out.dim()
        )));
    }
    counters::record_matmul();
    let av = a.as_slice();
    let bv = b.as_slice();
    let ov = out.as_mut_slice();
    ov.fill(Complex64::ZERO);
    for i in 0..n {
        for k in 0..n {
            let aik = av[i * n + k];
            let brow = &bv[k * n..(k + 1) * n];
            let orow = &mut ov[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aik * brow[j];
            }
        }
    }
    Ok(())
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(a.dim());
    matmul_into(a, b, &mut out)?;
    Ok(out)
}

/// Tolerance for the unit-modulus precondition on sandwich phases.
pub const PHASE_UNIT_TOL: f64 = 1e-10;

/// Evaluate {phase} W1 {alpha} W2 {phase*} with a single general product:
///
/// 1. row-scale W2 by `alpha` (O(N^2)),
/// 2. one full product with W1 (O(N^3)),
/// 3. elementwise multiply by the rank-1 pattern phase[r] * conj(phase[c])
///    (O(N^2)).
///
/// `scratch` holds the row-scaled W2; `out` receives the result.
pub fn sandwich_product_into(
    phase: &DiagonalVector,
    w1: &DenseMatrix,
    alpha_diag: &DiagonalVector,
    w2: &DenseMatrix,
    scratch: &mut DenseMatrix,
    out: &mut DenseMatrix,
) -> Result<()> {
    let n = w1.dim();
    if phase.dim() != n || alpha_diag.dim() != n || w2.dim() != n || scratch.dim() != n || out.dim() != n
    {
        return Err(Error::DimensionMismatch(
            "sandwich_product: all operands must share one dimension".into(),
        ));
    }
    if !phase.is_unit_modulus(PHASE_UNIT_TOL) {
        return Err(Error::InvalidArgument(
            "sandwich_product: phase entries must have unit modulus".into(),
        ));
    }
    diag_mul_into(alpha_diag, w2, Side::Left, scratch)?;
    matmul_into(w1, scratch, out)?;
    let p = phase.entries();
    let ov = out.as_mut_slice();
    for r in 0..n {
        let pr = p[r];
        for c in 0..n {
            ov[r * n + c] *= pr * p[c].conj();
        }
    }
    Ok(())
}

pub fn sandwich_product(
    phase: &DiagonalVector,
    w1: &DenseMatrix,
    alpha_diag: &DiagonalVector,
    w2: &DenseMatrix,
) -> Result<DenseMatrix> {
    let n = w1.dim();
    let mut scratch = DenseMatrix::zeros(n);
    let mut out = DenseMatrix::zeros(n);
    sandwich_product_into(phase, w1, alpha_diag, w2, &mut scratch, &mut out)?;
    Ok(out)
}

/// Solve A X = B in place by LU with partial pivoting; B is overwritten
/// with X. Used by the matrix exponential's Pade solve.
pub(crate) fn lu_solve_inplace(a: &mut DenseMatrix, b: &mut DenseMatrix) -> Result<()> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch("lu_solve: A vs B".into()));
    }
    let av = a.as_mut_slice();
    let bv = b.as_mut_slice();
    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut best = av[k * n + k].norm();
        for r in (k + 1)..n {
            let mag = av[r * n + k].norm();
            if mag > best {
                best = mag;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::Numeric("lu_solve: singular matrix".into()));
        }
        if piv != k {
            for c in 0..n {
                av.swap(k * n + c, piv * n + c);
                bv.swap(k * n + c, piv * n + c);
            }
        }
        let pivot = av[k * n + k];
        for r in (k + 1)..n {
            let f = av[r * n + k] / pivot;
            av[r * n + k] = f;
            for c in (k + 1)..n {
                let t = av[k * n + c];
                av[r * n + c] -= f * t;
            }
            for c in 0..n {
                let t = bv[k * n + c];
                bv[r * n + c] -= f * t;
            }
        }
    }
    // back substitution
    for k in (0..n).rev() {
        let pivot = av[k * n + k];
        for c in 0..n {
            bv[k * n + c] /= pivot;
        }
        for r in 0..k {
            let f = av[r * n + k];
            for c in 0..n {
                let t = bv[k * n + c];
                bv[r * n + c] -= f * t;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
