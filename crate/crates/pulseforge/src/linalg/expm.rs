//! Matrix exponential by scaling and squaring with a degree-13 Pade
//! approximant (Higham 2005). The input is the full exponent: callers
//! evolving a Hamiltonian pass -i * H * dt.

use num_complex::Complex64;

use super::{lu_solve_inplace, matmul_into, DenseMatrix};
use crate::counters;
use crate::error::{Error, Result};

/// Degree-13 Pade coefficients b_0..b_13.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound under which the unscaled degree-13 approximant meets
/// double-precision backward error.
const THETA13: f64 = 5.371920351148152;

/// Preallocated buffers for [`expm_into`]; reuse across calls on matrices of
/// one dimension.
pub struct ExpmWorkspace {
    a: DenseMatrix,
    a2: DenseMatrix,
    a4: DenseMatrix,
    a6: DenseMatrix,
    w: DenseMatrix,
    u: DenseMatrix,
    v: DenseMatrix,
}

impl ExpmWorkspace {
    pub fn new(dim: usize) -> Self {
        ExpmWorkspace {
            a: DenseMatrix::zeros(dim),
            a2: DenseMatrix::zeros(dim),
            a4: DenseMatrix::zeros(dim),
            a6: DenseMatrix::zeros(dim),
            w: DenseMatrix::zeros(dim),
            u: DenseMatrix::zeros(dim),
            v: DenseMatrix::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// exp(M) into a freshly allocated matrix.
pub fn expm(m: &DenseMatrix) -> Result<DenseMatrix> {
    let mut ws = ExpmWorkspace::new(m.dim());
    let mut out = DenseMatrix::zeros(m.dim());
    expm_into(m, &mut ws, &mut out)?;
    Ok(out)
}

/// exp(M) into `out`, reusing `ws` buffers.
pub fn expm_into(m: &DenseMatrix, ws: &mut ExpmWorkspace, out: &mut DenseMatrix) -> Result<()> {
    let n = m.dim();
    if ws.dim() != n || out.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "expm: matrix {} vs workspace {} vs out {}",
            n,
            ws.dim(),
            out.dim()
        )));
    }
    if !m.is_finite() {
        return Err(Error::Numeric("expm: non-finite input".into()));
    }
    counters::record_expm();

    let norm = m.one_norm();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };

    ws.a.copy_from(m);
    if squarings > 0 {
        ws.a.scale(Complex64::new(1.0 / f64::powi(2.0, squarings as i32), 0.0));
    }

    matmul_into(&ws.a, &ws.a, &mut ws.a2)?;
    matmul_into(&ws.a2, &ws.a2, &mut ws.a4)?;
    matmul_into(&ws.a2, &ws.a4, &mut ws.a6)?;

    let b = |i: usize| Complex64::new(PADE13[i], 0.0);

    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    ws.w.fill_zero();
    ws.w.add_scaled(b(13), &ws.a6);
    ws.w.add_scaled(b(11), &ws.a4);
    ws.w.add_scaled(b(9), &ws.a2);
    matmul_into(&ws.a6, &ws.w, &mut ws.u)?;
    ws.u.add_scaled(b(7), &ws.a6);
    ws.u.add_scaled(b(5), &ws.a4);
    ws.u.add_scaled(b(3), &ws.a2);
    for i in 0..n {
        ws.u[(i, i)] += b(1);
    }
    matmul_into(&ws.a, &ws.u, &mut ws.w)?;
    std::mem::swap(&mut ws.u, &mut ws.w);

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    ws.w.fill_zero();
    ws.w.add_scaled(b(12), &ws.a6);
    ws.w.add_scaled(b(10), &ws.a4);
    ws.w.add_scaled(b(8), &ws.a2);
    matmul_into(&ws.a6, &ws.w, &mut ws.v)?;
    ws.v.add_scaled(b(6), &ws.a6);
    ws.v.add_scaled(b(4), &ws.a4);
    ws.v.add_scaled(b(2), &ws.a2);
    for i in 0..n {
        ws.v[(i, i)] += b(0);
    }

    // (V - U) X = (V + U)
    ws.w.copy_from(&ws.v);
    ws.w.add_scaled(-Complex64::ONE, &ws.u); // V - U
    out.copy_from(&ws.v);
    out.add_scaled(Complex64::ONE, &ws.u); // V + U
    lu_solve_inplace(&mut ws.w, out)?;

    for _ in 0..squarings {
        matmul_into(out, out, &mut ws.w)?;
        std::mem::swap(out, &mut ws.w);
    }
    Ok(())
}
