use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let m = random_matrix(n, rng);
    let mut h = DenseMatrix::zeros(n);
    for r in 0..n {
        for cc in 0..n {
            h[(r, cc)] = 0.5 * (m[(r, cc)] + m[(cc, r)].conj());
        }
    }
    h
}

/// Cyclic Jacobi eigensolver for complex Hermitian matrices. Test oracle,
/// independent of the Pade path: returns (eigenvalues, eigenvectors) with
/// A = V diag(w) V^dag.
fn jacobi_hermitian(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() < 1e-18 {
                    continue;
                }
                let phase = apq / apq.norm();
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                // columns p, q of the rotation: J_pp = c, J_qp = -s conj(phase)... apply
                // M <- J^dag M J and V <- V J with J_pp=c, J_pq=s*phase, J_qp=-s*conj(phase), J_qq=c
                for r in 0..n {
                    let mrp = m[(r, p)];
                    let mrq = m[(r, q)];
                    m[(r, p)] = cth * mrp - sth * phase.conj() * mrq;
                    m[(r, q)] = sth * phase * mrp + cth * mrq;
                }
                for cc in 0..n {
                    let mpc = m[(p, cc)];
                    let mqc = m[(q, cc)];
                    m[(p, cc)] = cth * mpc - sth * phase * mqc;
                    m[(q, cc)] = sth * phase.conj() * mpc + cth * mqc;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = cth * vrp - sth * phase.conj() * vrq;
                    v[(r, q)] = sth * phase * vrp + cth * vrq;
                }
            }
        }
    }
    let w = (0..n).map(|i| m[(i, i)].re).collect();
    (w, v)
}

/// exp(scale * H) for Hermitian H via the Jacobi eigendecomposition.
fn expm_eig_oracle(h: &DenseMatrix, scale: Complex64) -> DenseMatrix {
    let n = h.dim();
    let (w, v) = jacobi_hermitian(h);
    DenseMatrix::from_fn(n, |r, cc| {
        let mut s = Complex64::ZERO;
        for k in 0..n {
            s += v[(r, k)] * (scale * w[k]).exp() * v[(cc, k)].conj();
        }
        s
    })
}

#[test]
fn jacobi_oracle_is_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &n in &[2usize, 4, 8] {
        let h = random_hermitian(n, &mut rng);
        let (w, v) = jacobi_hermitian(&h);
        assert!(v.unitarity_residual() < 1e-12);
        // V^dag H V = diag(w)
        for r in 0..n {
            for cc in 0..n {
                let mut s = Complex64::ZERO;
                for i in 0..n {
                    for j in 0..n {
                        s += v[(i, r)].conj() * h[(i, j)] * v[(j, cc)];
                    }
                }
                let expect = if r == cc { c(w[r], 0.0) } else { Complex64::ZERO };
                assert!((s - expect).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn expm_of_zero_is_identity() {
    let z = DenseMatrix::zeros(4);
    let e = expm(&z).unwrap();
    assert!(e.max_diff(&DenseMatrix::identity(4)) < 1e-15);
}

#[test]
fn expm_pauli_x_half_turn() {
    // exp(-i (pi/2) sigma_x) = -i sigma_x
    let mut m = DenseMatrix::zeros(2);
    m[(0, 1)] = c(0.0, -std::f64::consts::FRAC_PI_2);
    m[(1, 0)] = c(0.0, -std::f64::consts::FRAC_PI_2);
    let e = expm(&m).unwrap();
    assert!((e[(0, 0)]).norm() < 1e-14);
    assert!((e[(1, 1)]).norm() < 1e-14);
    assert!((e[(0, 1)] - c(0.0, -1.0)).norm() < 1e-14);
    assert!((e[(1, 0)] - c(0.0, -1.0)).norm() < 1e-14);
}

#[test]
fn expm_matches_eigendecomposition_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = random_hermitian(8, &mut rng);
    // exponent -i H dt with a physics-like scale
    let dt = 0.7;
    let scale = c(0.0, -dt);
    let mut m = h.clone();
    m.scale(scale);
    let got = expm(&m).unwrap();
    let want = expm_eig_oracle(&h, scale);
    assert!(got.max_diff(&want) < 1e-12, "diff = {}", got.max_diff(&want));
}

#[test]
fn expm_large_norm_takes_squaring_branch() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_hermitian(6, &mut rng);
    let scale = c(0.0, -40.0); // norm well past theta_13
    let mut m = h.clone();
    m.scale(scale);
    let got = expm(&m).unwrap();
    let want = expm_eig_oracle(&h, scale);
    assert!(got.max_diff(&want) < 1e-11, "diff = {}", got.max_diff(&want));
    assert!(got.unitarity_residual() < 1e-11);
}

#[test]
fn expm_rejects_non_finite() {
    let mut m = DenseMatrix::zeros(3);
    m[(0, 0)] = c(f64::NAN, 0.0);
    assert!(matches!(expm(&m), Err(Error::Numeric(_))));
}

#[test]
fn expm_anti_hermitian_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for &n in &[2usize, 4, 8, 16] {
        let h = random_hermitian(n, &mut rng);
        let mut m = h.clone();
        m.scale(c(0.0, -1.3));
        let e = expm(&m).unwrap();
        let tol = 100.0 * f64::EPSILON * n as f64;
        assert!(
            e.unitarity_residual() <= tol,
            "n={n}: residual {} > {tol}",
            e.unitarity_residual()
        );
    }
}

#[test]
fn expm_commuting_sum_factorizes() {
    // A and B diagonal in the same (random) basis commute, so
    // exp(A + B) = exp(A) exp(B).
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_hermitian(6, &mut rng);
    for (a_sc, b_sc) in [(0.3, -0.9), (1.1, 0.4)] {
        let mut a = h.clone();
        a.scale(c(0.0, -a_sc));
        let mut b = h.clone();
        b.scale(c(0.0, -b_sc));
        let mut sum = a.clone();
        sum.add_scaled(Complex64::ONE, &b);
        let lhs = expm(&sum).unwrap();
        let rhs = matmul(&expm(&a).unwrap(), &expm(&b).unwrap()).unwrap();
        assert!(lhs.max_diff(&rhs) < 1e-12);
    }
}

#[test]
fn diag_exp_half_spins() {
    let d = diag_exp(&[0.5, -0.5], c(0.0, -std::f64::consts::PI)).unwrap();
    assert!((d.entries()[0] - c(0.0, -1.0)).norm() < 1e-15);
    assert!((d.entries()[1] - c(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn diag_exp_zeros_gives_ones() {
    let d = diag_exp(&[0.0; 5], c(0.0, -0.123)).unwrap();
    for e in d.entries() {
        assert!((e - Complex64::ONE).norm() < 1e-16);
    }
}

#[test]
fn diag_exp_matches_expm_of_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
    let scale = c(0.0, -0.05);
    let fast = diag_exp(&d, scale).unwrap();
    let mut m = DenseMatrix::zeros(8);
    for (i, &x) in d.iter().enumerate() {
        m[(i, i)] = scale * x;
    }
    let full = expm(&m).unwrap();
    for i in 0..8 {
        assert!((fast.entries()[i] - full[(i, i)]).norm() < 1e-14);
    }
}

#[test]
fn diag_exp_rejects_non_finite() {
    assert!(matches!(
        diag_exp(&[1.0, f64::INFINITY], Complex64::ONE),
        Err(Error::Numeric(_))
    ));
}

#[test]
fn diag_mul_identity_diagonal_is_noop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_matrix(5, &mut rng);
    let d = DiagonalVector::ones(5);
    assert!(diag_mul(&d, &m, Side::Left).unwrap().max_diff(&m) < 1e-16);
    assert!(diag_mul(&d, &m, Side::Right).unwrap().max_diff(&m) < 1e-16);
}

#[test]
fn diag_mul_on_identity_materializes_diagonal() {
    let d = DiagonalVector::new(vec![c(2.0, 0.0), c(3.0, 0.0)]);
    let got = diag_mul(&d, &DenseMatrix::identity(2), Side::Left).unwrap();
    assert_eq!(got[(0, 0)], c(2.0, 0.0));
    assert_eq!(got[(1, 1)], c(3.0, 0.0));
    assert_eq!(got[(0, 1)], Complex64::ZERO);
}

#[test]
fn diag_mul_dimension_mismatch() {
    let d = DiagonalVector::ones(3);
    let m = DenseMatrix::zeros(4);
    assert!(matches!(
        diag_mul(&d, &m, Side::Left),
        Err(Error::DimensionMismatch(_))
    ));
}

fn materialize(d: &DiagonalVector) -> DenseMatrix {
    let n = d.dim();
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = d.entries()[i];
    }
    m
}

proptest! {
    #[test]
    fn diag_mul_equals_full_product(seed in 0u64..512, n_ix in 0usize..4) {
        let n = [2usize, 4, 8, 16][n_ix];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(n, &mut rng);
        let d = DiagonalVector::new(
            (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        );
        let dmat = materialize(&d);
        let left = diag_mul(&d, &m, Side::Left).unwrap();
        prop_assert!(left.max_diff(&matmul(&dmat, &m).unwrap()) < 1e-14);
        let right = diag_mul(&d, &m, Side::Right).unwrap();
        prop_assert!(right.max_diff(&matmul(&m, &dmat).unwrap()) < 1e-14);
    }
}

#[test]
fn sandwich_trivial_phase_and_bases() {
    let d = DiagonalVector::new(vec![c(0.5, 0.1), c(-1.0, 0.0), c(0.0, 2.0)]);
    let eye = DenseMatrix::identity(3);
    let got = sandwich_product(&DiagonalVector::ones(3), &eye, &d, &eye).unwrap();
    assert!(got.max_diff(&materialize(&d)) < 1e-15);
}

#[test]
fn sandwich_one_spin_matches_three_expm_factors() {
    // One spin: exp(-i phi Fz) W1 exp(-i a Fz dt) W2 exp(i phi Fz) must equal
    // the same product assembled from full matrix exponentials,
    // W1 = exp(-i H0 dt/2) H and W2 = H exp(-i H0 dt/2).
    let w0 = 2.0 * std::f64::consts::PI * 9000.0;
    let alpha = 2.0 * std::f64::consts::PI * 3500.0;
    let phi = 0.77;
    let dt = 8e-6;
    let s = 1.0 / f64::sqrt(2.0);
    let had = DenseMatrix::from_fn(2, |r, cc| c(if (r, cc) == (1, 1) { -s } else { s }, 0.0));
    let fz = [0.5, -0.5];
    let mut h0 = DenseMatrix::zeros(2);
    h0[(0, 0)] = c(w0 * 0.5, 0.0);
    h0[(1, 1)] = c(-w0 * 0.5, 0.0);

    let mut half = h0.clone();
    half.scale(c(0.0, -dt / 2.0));
    let e_half = expm(&half).unwrap();
    let w1 = matmul(&e_half, &had).unwrap();
    let w2 = matmul(&had, &e_half).unwrap();

    let phase = diag_exp(&fz, c(0.0, -phi)).unwrap();
    let central = diag_exp(&fz, c(0.0, -alpha * dt)).unwrap();
    let fast = sandwich_product(&phase, &w1, &central, &w2).unwrap();

    // oracle: all five factors as dense products
    let p = materialize(&phase);
    let cmat = materialize(&central);
    let pc = materialize(&phase.conj());
    let oracle = matmul(
        &matmul(&matmul(&matmul(&p, &w1).unwrap(), &cmat).unwrap(), &w2).unwrap(),
        &pc,
    )
    .unwrap();
    assert!(fast.max_diff(&oracle) < 1e-14);
}

#[test]
fn sandwich_matches_naive_five_matrix_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 8;
    let w1 = random_matrix(n, &mut rng);
    let w2 = random_matrix(n, &mut rng);
    let alpha = DiagonalVector::new(
        (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
    );
    let phase = DiagonalVector::new(
        (0..n)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(-3.0..3.0)))
            .collect(),
    );
    let fast = sandwich_product(&phase, &w1, &alpha, &w2).unwrap();
    let p = materialize(&phase);
    let a = materialize(&alpha);
    let pc = materialize(&phase.conj());
    let oracle = matmul(
        &matmul(&matmul(&matmul(&p, &w1).unwrap(), &a).unwrap(), &w2).unwrap(),
        &pc,
    )
    .unwrap();
    assert!(fast.max_diff(&oracle) < 1e-13);
}

#[test]
fn sandwich_performs_exactly_one_matmul() {
    let n = 4;
    let w1 = DenseMatrix::identity(n);
    let w2 = DenseMatrix::identity(n);
    let alpha = DiagonalVector::ones(n);
    let phase = DiagonalVector::ones(n);
    let before = crate::counters::snapshot();
    sandwich_product(&phase, &w1, &alpha, &w2).unwrap();
    let delta = crate::counters::snapshot().since(&before);
    assert_eq!(delta.matmul, 1);
}

#[test]
fn sandwich_rejects_non_unit_phase() {
    let n = 3;
    let phase = DiagonalVector::new(vec![c(1.0, 0.0), c(0.9, 0.0), c(1.0, 0.0)]);
    let err = sandwich_product(&phase, &DenseMatrix::identity(n), &DiagonalVector::ones(n), &DenseMatrix::identity(n));
    assert!(matches!(err, Err(Error::InvalidArgument(_))));
}

#[test]
fn lu_solve_recovers_known_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a = random_matrix(6, &mut rng);
    let x = random_matrix(6, &mut rng);
    let b = matmul(&a, &x).unwrap();
    let mut a2 = a.clone();
    let mut got = b.clone();
    lu_solve_inplace(&mut a2, &mut got).unwrap();
    assert!(got.max_diff(&x) < 1e-11);
}

#[test]
fn matmul_counter_counts_calls() {
    let a = DenseMatrix::identity(3);
    let before = crate::counters::snapshot();
    let _ = matmul(&a, &a).unwrap();
    let _ = matmul(&a, &a).unwrap();
    assert_eq!(crate::counters::snapshot().since(&before).matmul, 2);
}
