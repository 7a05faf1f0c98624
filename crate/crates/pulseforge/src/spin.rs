//! Spin systems: operators, background Hamiltonians, and the Hadamard basis.
//!
//! A [`SpinSystem`] describes q spin-1/2 nuclei (Hilbert dimension N = 2^q)
//! with per-spin species labels, chemical-shift offsets, and pairwise
//! couplings in either the weak (z-z only) or strong (isotropic) model.
//! Spin 1 is the most significant qubit: basis state |b1 b2 ... bq> has
//! index b1*2^(q-1) + ... + bq, and all operators follow that ordering.
//!
//! Frequencies are stored internally in rad/s; the builder takes Hz and
//! multiplies by 2 pi, matching how NMR parameters are quoted.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// How pairwise couplings enter the background Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingModel {
    /// omega_rs Iz_r Iz_s only; H0 is diagonal.
    Weak,
    /// omega_rs (Ix Ix + Iy Iy + Iz Iz); adds flip-flop terms.
    Strong,
}

/// Operator axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A control channel: one RF field addressing every spin of one species.
/// The x and y quadratures of a channel share one phase transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlChannel {
    pub species: String,
}

#[derive(Debug, Clone)]
struct Spin {
    species: String,
    /// rad/s
    offset: f64,
}

#[derive(Debug, Clone, Copy)]
struct Coupling {
    /// 1-based spin indices, a < b
    a: usize,
    b: usize,
    /// rad/s
    strength: f64,
}

/// A system of coupled spin-1/2 nuclei.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    spins: Vec<Spin>,
    couplings: Vec<Coupling>,
    dipolar: Vec<Coupling>,
    model: CouplingModel,
}

/// Builder for [`SpinSystem`]; frequencies in Hz.
#[derive(Debug, Default)]
pub struct SpinSystemBuilder {
    spins: Vec<Spin>,
    couplings: Vec<Coupling>,
    dipolar: Vec<Coupling>,
    model: Option<CouplingModel>,
}

impl SpinSystemBuilder {
    /// Append a spin with a species label and chemical-shift offset in Hz.
    pub fn spin(mut self, species: impl Into<String>, offset_hz: f64) -> Self {
        self.spins.push(Spin {
            species: species.into(),
            offset: 2.0 * PI * offset_hz,
        });
        self
    }

    /// Scalar coupling between spins `a` and `b` (1-based), in Hz.
    pub fn coupling(mut self, a: usize, b: usize, strength_hz: f64) -> Self {
        self.couplings.push(Coupling {
            a,
            b,
            strength: 2.0 * PI * strength_hz,
        });
        self
    }

    /// Axially symmetric dipolar coupling, pattern (-1/2, -1/2, 1) on
    /// (xx, yy, zz), in Hz. Only meaningful with the strong model.
    pub fn dipolar(mut self, a: usize, b: usize, strength_hz: f64) -> Self {
        self.dipolar.push(Coupling {
            a,
            b,
            strength: 2.0 * PI * strength_hz,
        });
        self
    }

    pub fn coupling_model(mut self, model: CouplingModel) -> Self {
        self.model = Some(model);
        self
    }

    pub fn build(self) -> Result<SpinSystem> {
        let q = self.spins.len();
        if q == 0 {
            return Err(Error::InvalidArgument("a spin system needs at least one spin".into()));
        }
        if self.spins.iter().any(|s| s.species.is_empty()) {
            return Err(Error::InvalidArgument("empty species label".into()));
        }
        if self.spins.iter().any(|s| !s.offset.is_finite()) {
            return Err(Error::Numeric("non-finite spin offset".into()));
        }
        let mut normalize = |list: Vec<Coupling>, what: &str| -> Result<Vec<Coupling>> {
            let mut seen = std::collections::BTreeSet::new();
            let mut out = Vec::with_capacity(list.len());
            for c in list {
                if c.a == 0 || c.b == 0 || c.a > q || c.b > q {
                    return Err(Error::IndexOutOfRange(format!(
                        "{what} ({}, {}) with {q} spins",
                        c.a, c.b
                    )));
                }
                if c.a == c.b {
                    return Err(Error::InvalidArgument(format!("{what} of spin {} with itself", c.a)));
                }
                if !c.strength.is_finite() {
                    return Err(Error::Numeric(format!("non-finite {what} strength")));
                }
                let (a, b) = (c.a.min(c.b), c.a.max(c.b));
                if !seen.insert((a, b)) {
                    return Err(Error::InvalidArgument(format!("duplicate {what} ({a}, {b})")));
                }
                out.push(Coupling { a, b, strength: c.strength });
            }
            Ok(out)
        };
        Ok(SpinSystem {
            spins: self.spins,
            couplings: normalize(self.couplings, "coupling")?,
            dipolar: normalize(self.dipolar, "dipolar coupling")?,
            model: self.model.unwrap_or(CouplingModel::Weak),
        })
    }
}

const HALF_SX: [[Complex64; 2]; 2] = [
    [Complex64::ZERO, Complex64::new(0.5, 0.0)],
    [Complex64::new(0.5, 0.0), Complex64::ZERO],
];
const HALF_SY: [[Complex64; 2]; 2] = [
    [Complex64::ZERO, Complex64::new(0.0, -0.5)],
    [Complex64::new(0.0, 0.5), Complex64::ZERO],
];
const HALF_SZ: [[Complex64; 2]; 2] = [
    [Complex64::new(0.5, 0.0), Complex64::ZERO],
    [Complex64::ZERO, Complex64::new(-0.5, 0.0)],
];

fn half_sigma(axis: Axis) -> [[Complex64; 2]; 2] {
    match axis {
        Axis::X => HALF_SX,
        Axis::Y => HALF_SY,
        Axis::Z => HALF_SZ,
    }
}

/// Tensor-product embedding: 2x2 factors at the listed 1-based spin
/// positions, identity elsewhere. Construction helper; does not touch the
/// counted multiply path.
fn op_chain(q: usize, factors: &[(usize, [[Complex64; 2]; 2])]) -> DenseMatrix {
    let n = 1usize << q;
    DenseMatrix::from_fn(n, |row, col| {
        let mut v = Complex64::ONE;
        for r in 1..=q {
            let br = (row >> (q - r)) & 1;
            let bc = (col >> (q - r)) & 1;
            let e = match factors.iter().find(|(rr, _)| *rr == r) {
                Some((_, m)) => m[br][bc],
                None if br == bc => Complex64::ONE,
                None => Complex64::ZERO,
            };
            if e == Complex64::ZERO {
                return Complex64::ZERO;
            }
            v *= e;
        }
        v
    })
}

impl SpinSystem {
    pub fn builder() -> SpinSystemBuilder {
        SpinSystemBuilder::default()
    }

    /// Homonuclear weak-coupling shorthand: offsets in Hz, couplings as
    /// (a, b, Hz) with 1-based indices.
    pub fn homonuclear_weak(offsets_hz: &[f64], couplings_hz: &[(usize, usize, f64)]) -> Result<Self> {
        let mut b = Self::builder().coupling_model(CouplingModel::Weak);
        for &o in offsets_hz {
            b = b.spin("1H", o);
        }
        for &(i, j, v) in couplings_hz {
            b = b.coupling(i, j, v);
        }
        b.build()
    }

    /// Number of spins q.
    pub fn spin_count(&self) -> usize {
        self.spins.len()
    }

    /// Hilbert dimension N = 2^q.
    pub fn dim(&self) -> usize {
        1 << self.spins.len()
    }

    pub fn coupling_model(&self) -> CouplingModel {
        self.model
    }

    /// Per-spin offsets in rad/s.
    pub fn offsets(&self) -> Vec<f64> {
        self.spins.iter().map(|s| s.offset).collect()
    }

    pub fn species_of(&self, spin: usize) -> Result<&str> {
        self.check_spin(spin)?;
        Ok(&self.spins[spin - 1].species)
    }

    /// Control channels: one per distinct species, in first-appearance order.
    pub fn channels(&self) -> Vec<ControlChannel> {
        let mut out: Vec<ControlChannel> = Vec::new();
        for s in &self.spins {
            if !out.iter().any(|c| c.species == s.species) {
                out.push(ControlChannel { species: s.species.clone() });
            }
        }
        out
    }

    fn check_spin(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.spin_count() {
            return Err(Error::IndexOutOfRange(format!(
                "spin {r} of {}",
                self.spin_count()
            )));
        }
        Ok(())
    }

    /// Spins selected by an optional species filter (1-based indices).
    fn selected(&self, species: Option<&str>) -> Result<Vec<usize>> {
        match species {
            None => Ok((1..=self.spin_count()).collect()),
            Some(sp) => {
                let sel: Vec<usize> = self
                    .spins
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.species == sp)
                    .map(|(i, _)| i + 1)
                    .collect();
                if sel.is_empty() {
                    return Err(Error::UnknownSpecies(sp.into()));
                }
                Ok(sel)
            }
        }
    }

    /// (1/2) sigma_axis on spin r (1-based), identity elsewhere.
    pub fn single_spin_op(&self, r: usize, axis: Axis) -> Result<DenseMatrix> {
        self.check_spin(r)?;
        Ok(op_chain(self.spin_count(), &[(r, half_sigma(axis))]))
    }

    /// F_axis = sum of single-spin operators over the selected species
    /// (all spins when `species` is None).
    pub fn total_spin_op(&self, axis: Axis, species: Option<&str>) -> Result<DenseMatrix> {
        let sel = self.selected(species)?;
        let q = self.spin_count();
        let mut total = DenseMatrix::zeros(self.dim());
        for r in sel {
            total.add_scaled(Complex64::ONE, &op_chain(q, &[(r, half_sigma(axis))]));
        }
        Ok(total)
    }

    /// Diagonal of F^z over the selected species, in O(N q).
    pub fn fz_spectrum(&self, species: Option<&str>) -> Result<Vec<f64>> {
        let sel = self.selected(species)?;
        let q = self.spin_count();
        let n = self.dim();
        let mut spec = vec![0.0f64; n];
        for (m, s) in spec.iter_mut().enumerate() {
            for &r in &sel {
                *s += if (m >> (q - r)) & 1 == 0 { 0.5 } else { -0.5 };
            }
        }
        Ok(spec)
    }

    /// Background Hamiltonian: offsets plus couplings in the configured
    /// model, plus any dipolar terms. Diagonal in the weak model.
    pub fn h0(&self) -> DenseMatrix {
        let q = self.spin_count();
        let mut h = DenseMatrix::zeros(self.dim());
        for (i, s) in self.spins.iter().enumerate() {
            h.add_scaled(
                Complex64::new(s.offset, 0.0),
                &op_chain(q, &[(i + 1, HALF_SZ)]),
            );
        }
        for cpl in &self.couplings {
            let w = Complex64::new(cpl.strength, 0.0);
            h.add_scaled(w, &op_chain(q, &[(cpl.a, HALF_SZ), (cpl.b, HALF_SZ)]));
            if self.model == CouplingModel::Strong {
                h.add_scaled(w, &op_chain(q, &[(cpl.a, HALF_SX), (cpl.b, HALF_SX)]));
                h.add_scaled(w, &op_chain(q, &[(cpl.a, HALF_SY), (cpl.b, HALF_SY)]));
            }
        }
        for cpl in &self.dipolar {
            let w = cpl.strength;
            h.add_scaled(
                Complex64::new(w, 0.0),
                &op_chain(q, &[(cpl.a, HALF_SZ), (cpl.b, HALF_SZ)]),
            );
            h.add_scaled(
                Complex64::new(-0.5 * w, 0.0),
                &op_chain(q, &[(cpl.a, HALF_SX), (cpl.b, HALF_SX)]),
            );
            h.add_scaled(
                Complex64::new(-0.5 * w, 0.0),
                &op_chain(q, &[(cpl.a, HALF_SY), (cpl.b, HALF_SY)]),
            );
        }
        h
    }
}

/// The q-qubit Hadamard H^(q): self-inverse and satisfies
/// H^(q) F^x H^(q) = F^z exactly.
pub fn hadamard_basis(q: usize) -> DenseMatrix {
    assert!(q >= 1, "hadamard_basis: q must be >= 1");
    let n = 1usize << q;
    let scale = 1.0 / (n as f64).sqrt();
    DenseMatrix::from_fn(n, |row, col| {
        let sign = if (row & col).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * scale, 0.0)
    })
}
