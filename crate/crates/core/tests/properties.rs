use fdsec::baseline::{leakage_residual, zf_directions};
use fdsec::harness::{format_sig9, round_sig9};
use fdsec::hermitian::{eig_hermitian, is_psd, rank_one_ratio, real_embed, CMatrix, CVector, HermitianMatrix, C64};
use fdsec::moop::lambda_grid;
use fdsec::oracle::max_quadratic_on_ball;
use fdsec::scenario::{generate_drop, SystemConfig};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn cvector(n: usize) -> impl Strategy<Value = CVector> {
    proptest::collection::vec(complex(), n).prop_map(CVector::from_vec)
}

fn cmatrix(n: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(complex(), n * n).prop_map(move |v| CMatrix::from_vec(n, n, v))
}

fn hermitian() -> impl Strategy<Value = HermitianMatrix> {
    (1usize..6).prop_flat_map(cmatrix).prop_map(|a| HermitianMatrix::symmetrized(&a + a.adjoint()))
}

fn gram() -> impl Strategy<Value = HermitianMatrix> {
    (1usize..6).prop_flat_map(cmatrix).prop_map(|a| HermitianMatrix::symmetrized(&a * a.adjoint()))
}

proptest! {
    #[test]
    fn embedding_doubles_the_spectrum(a in hermitian()) {
        let mut complex_vals = eig_hermitian(&a).values;
        complex_vals.sort_by(f64::total_cmp);
        let mut real_vals: Vec<f64> = SymmetricEigen::new(real_embed(&a)).eigenvalues.iter().copied().collect();
        real_vals.sort_by(f64::total_cmp);
        let scale = a.frobenius_norm().max(1.0);
        for (i, v) in complex_vals.iter().enumerate() {
            prop_assert!((real_vals[2 * i] - v).abs() < 1e-9 * scale);
            prop_assert!((real_vals[2 * i + 1] - v).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(a in hermitian()) {
        let back = eig_hermitian(&a).reconstruct();
        let err = (back.as_matrix() - a.as_matrix()).norm();
        prop_assert!(err < 1e-9 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn gram_matrices_are_psd_and_stay_so_under_congruence(a in gram(), f in (1usize..4).prop_flat_map(cmatrix)) {
        prop_assert!(is_psd(&a, 1e-9 * a.spectral_norm().max(1.0)));
        if f.ncols() == a.dim() {
            let c = a.congruence(&f);
            prop_assert!(is_psd(&c, 1e-9 * c.spectral_norm().max(1.0)));
        }
    }

    #[test]
    fn trace_product_is_symmetric(a in (3usize..4).prop_flat_map(cmatrix), b in (3usize..4).prop_flat_map(cmatrix)) {
        let a = HermitianMatrix::symmetrized(&a + a.adjoint());
        let b = HermitianMatrix::symmetrized(&b + b.adjoint());
        let (x, y) = (a.trace_product(&b), b.trace_product(&a));
        prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn outer_products_are_rank_one(v in (1usize..7).prop_flat_map(cvector)) {
        prop_assume!(v.norm() > 1e-3);
        prop_assert!(rank_one_ratio(&HermitianMatrix::outer(&v)) < 1e-12);
    }

    #[test]
    fn ball_maximum_dominates_points_on_the_ball(
        a in (3usize..4).prop_flat_map(cmatrix),
        c in cvector(3),
        d in cvector(3),
        eps in 0.0..2.0f64,
    ) {
        let a = HermitianMatrix::symmetrized(&a + a.adjoint());
        let best = max_quadratic_on_ball(&a, &c, eps);
        let dir = if d.norm() > 0.0 { d.unscale(d.norm()) } else { d };
        for t in [0.0, 0.5, 1.0] {
            let x = &c + &dir * C64::new(t * eps, 0.0);
            prop_assert!(a.quadratic_form(&x) <= best + 1e-8 * best.abs().max(1.0));
        }
    }

    #[test]
    fn drops_are_reproducible(seed in any::<u64>()) {
        let cfg = SystemConfig::desk_scale();
        prop_assert_eq!(generate_drop(&cfg, seed).unwrap(), generate_drop(&cfg, seed).unwrap());
    }

    #[test]
    fn estimates_lie_inside_their_balls(seed in any::<u64>(), kappa_sq in 0.0..0.2f64) {
        let cfg = SystemConfig { kappa_est_sq: kappa_sq, ..SystemConfig::desk_scale() };
        let r = generate_drop(&cfg, seed).unwrap();
        let tight = |err: f64, eps: f64| err <= eps * (1.0 + 1e-12) + 1e-300;
        for (m, (t, h)) in r.l_true.iter().zip(&r.l_hat).enumerate() {
            prop_assert!(((r.eps_dl[m] / t.norm()).powi(2) - kappa_sq).abs() <= 1e-12);
            prop_assert!(tight((t - h).norm(), r.eps_dl[m]));
        }
        for j in 0..cfg.j {
            for k in 0..cfg.k {
                prop_assert!(tight((r.f_true[(j, k)] - r.f_hat[(j, k)]).norm(), r.eps_cci[(j, k)]));
            }
            for m in 0..cfg.m {
                prop_assert!(tight((&r.e_true[j][m] - &r.e_hat[j][m]).norm(), r.eps_ul[j][m]));
            }
        }
    }

    #[test]
    fn zero_forcing_nulls_random_channels(seed in any::<u64>()) {
        let r = generate_drop(&SystemConfig::desk_scale(), seed).unwrap();
        let dirs = zf_directions(&r.h).unwrap();
        let scale = r.h.iter().map(|h| h.norm()).fold(0.0, f64::max);
        prop_assert!(leakage_residual(&dirs, &r.h) < 1e-9 * scale);
    }

    #[test]
    fn lambda_grid_spans_the_unit_interval(step in 0.001..0.5f64) {
        let g = lambda_grid(step).unwrap();
        prop_assert_eq!(g[0], 0.0);
        prop_assert_eq!(*g.last().unwrap(), 1.0);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.windows(2).all(|w| w[1] - w[0] <= step * (1.0 + 1e-9)));
    }

    #[test]
    fn nine_digit_text_round_trips(x in prop_oneof![any::<f64>(), -1e3..1e3f64, 1e-12..1e-3f64]) {
        prop_assume!(x.is_finite());
        let r = round_sig9(x);
        let back: f64 = format_sig9(x).parse().unwrap();
        prop_assert_eq!(back, r);
        prop_assert_eq!(round_sig9(r), r);
        prop_assert!((r - x).abs() <= 5e-9 * x.abs());
    }
}
