use fdsec::exec::Execution;
use fdsec::hermitian::{CMatrix, CVector, HermitianMatrix, C64};
use fdsec::moop::solve_point;
use fdsec::oracle::{
    adversarial_check, adversarial_check_with, restricted_grid_bound, restricted_grid_bound_with, ConstraintKind,
    GridOptions, OracleOptions,
};
use fdsec::scenario::{generate_drop, ChannelRealization, SystemConfig};
use fdsec::sdp::{assemble, solve, ClarabelBackend, Problem, SolveStatus};

const FEASIBLE_SEEDS: [u64; 2] = [12, 18];

fn tiny() -> SystemConfig {
    SystemConfig {
        k: 1,
        j: 1,
        m: 1,
        n_t: 2,
        n_r: 1,
        ..SystemConfig::desk_scale()
    }
}

#[test]
fn recovered_policies_survive_sampling() {
    let cfg = SystemConfig::desk_scale();
    let be = ClarabelBackend::default();
    for seed in FEASIBLE_SEEDS {
        let r = generate_drop(&cfg, seed).unwrap();
        let (point, _) = solve_point(&Problem::P1, &r, &cfg, None, &be).unwrap();
        let report = adversarial_check(point.policy.as_ref().unwrap(), &r, &cfg, 10_000);
        assert_eq!(report.samples, 10_000);
        assert_eq!(report.violations, 0, "seed {seed}");
        assert!(report.is_clean(), "seed {seed}: {}", report.worst_margin());
        let expected = cfg.k + cfg.k * cfg.m + cfg.j * cfg.m;
        assert_eq!(report.constraints.len(), expected);
    }
}

#[test]
fn exact_channels_need_a_single_evaluation() {
    let cfg = SystemConfig {
        kappa_est_sq: 0.0,
        ..SystemConfig::desk_scale()
    };
    let r = generate_drop(&cfg, 0).unwrap();
    let policy = fdsec::phy::AllocationPolicy::from_beams(
        r.h.iter().map(|h| h * C64::new(1e-3, 0.0)).collect(),
        HermitianMatrix::zeros(cfg.n_t),
        vec![1e-3; cfg.j],
    );
    let report = adversarial_check(&policy, &r, &cfg, 10_000);
    assert_eq!(report.samples, 1);
    for c in &report.constraints {
        assert_eq!(c.worst_index, 0);
        assert_eq!(c.worst_margin, c.refined_margin);
    }
}

/// A single user whose eavesdropper sees part of the user's direction plus
/// a strong orthogonal component that artificial noise can jam.
fn jammable() -> (SystemConfig, ChannelRealization) {
    let cfg = SystemConfig {
        k: 1,
        j: 0,
        m: 1,
        n_t: 4,
        n_r: 1,
        kappa_est_sq: 0.05,
        sigma_eve_dbm: SystemConfig::desk_scale().sigma_dl_dbm,
        ..SystemConfig::desk_scale()
    };
    let mut r = generate_drop(&cfg, 3).unwrap();
    let h = r.h[0].clone();
    let mut perp = CVector::from_fn(4, |i, _| C64::new((i as f64 + 1.0).cos(), (i as f64).sin()));
    perp -= &h * (h.dotc(&perp) / h.norm_squared());
    let perp = perp.unscale(perp.norm()) * C64::new(3.0 * h.norm(), 0.0);
    let l = &h * C64::new(0.6, 0.0) + perp;
    let l = CMatrix::from_column_slice(4, 1, l.as_slice());
    r.eps_dl = vec![cfg.kappa() * l.norm()];
    r.l_hat = vec![l.clone()];
    r.l_true = vec![l];
    (cfg, r)
}

#[test]
fn halving_the_artificial_noise_exposes_leakage() {
    let (cfg, r) = jammable();
    let (point, _) = solve_point(&Problem::P1, &r, &cfg, None, &ClarabelBackend::default()).unwrap();
    let policy = point.policy.unwrap();
    assert!(policy.z.trace() > 1e-3 * policy.q1());
    assert!(adversarial_check(&policy, &r, &cfg, 10_000).is_clean());

    let mut weak = policy.clone();
    weak.z = HermitianMatrix::symmetrized(policy.z.as_matrix() * C64::new(0.5, 0.0));
    let report = adversarial_check(&weak, &r, &cfg, 10_000);
    let leaks = report.violations_of(|k| matches!(k, ConstraintKind::DlLeakage { .. }));
    assert!(leaks > 0);
    assert_eq!(report.violations_of(|k| matches!(k, ConstraintKind::DlSinr { .. })), 0);
}

#[test]
fn sampling_does_not_depend_on_the_worker_layout() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEEDS[0]).unwrap();
    let (point, _) = solve_point(&Problem::P1, &r, &cfg, None, &ClarabelBackend::default()).unwrap();
    let policy = point.policy.unwrap();
    let run = |exec| {
        let opts = OracleOptions {
            exec,
            ..OracleOptions::default()
        };
        adversarial_check_with(&policy, &r, &cfg, 2_000, &opts)
    };
    let a = run(Execution::Sequential);
    let b = run(Execution::Parallel);
    for (x, y) in a.constraints.iter().zip(&b.constraints) {
        assert_eq!(x.worst_margin, y.worst_margin);
        assert_eq!(x.worst_index, y.worst_index);
        assert_eq!(x.worst_sample, y.worst_sample);
        assert_eq!(x.refined_margin, y.refined_margin);
    }
}

#[test]
fn grid_bound_lies_above_the_relaxation() {
    let cfg = tiny();
    let be = ClarabelBackend::default();
    let mut compared = 0;
    let mut strict = 0;
    for seed in 0..20 {
        let r = generate_drop(&cfg, seed).unwrap();
        let sdp = solve(&assemble(&Problem::P1, &r, &cfg, None).unwrap(), &be);
        let bound = restricted_grid_bound(&r, &cfg).unwrap();
        match sdp.status {
            SolveStatus::Optimal => {
                assert!(sdp.objective <= bound.q1 * (1.0 + 1e-6), "seed {seed}");
                if bound.q1.is_finite() {
                    compared += 1;
                    if bound.q1 > sdp.objective * 1.01 {
                        strict += 1;
                    }
                }
            }
            SolveStatus::Infeasible => assert!(bound.q1.is_infinite(), "seed {seed}"),
            SolveStatus::NumericalFailure => panic!("seed {seed}: numerical failure"),
        }
    }
    assert!(compared >= 3);
    assert!(strict >= 1);
}

#[test]
fn grid_policy_passes_the_sampling_oracle() {
    let cfg = tiny();
    let r = generate_drop(&cfg, 9).unwrap();
    let bound = restricted_grid_bound(&r, &cfg).unwrap();
    let policy = bound.policy.unwrap();
    assert!((policy.q1() - bound.q1).abs() <= 1e-12 * bound.q1);
    assert!(adversarial_check(&policy, &r, &cfg, 10_000).is_clean());
}

#[test]
fn grid_bound_approaches_the_mrt_power() {
    let cfg = SystemConfig {
        j: 0,
        m: 0,
        kappa_est_sq: 0.0,
        ..tiny()
    };
    let r = generate_drop(&cfg, 1).unwrap();
    let mrt = cfg.gamma_dl() * cfg.sigma_dl_sq() / r.h[0].norm_squared();
    let gap = |directions| {
        let opts = GridOptions {
            directions,
            ..GridOptions::default()
        };
        restricted_grid_bound_with(&r, &cfg, &opts).unwrap().q1 / mrt - 1.0
    };
    let (coarse, fine) = (gap(20), gap(2000));
    assert!(coarse >= -1e-12 && fine >= -1e-12);
    assert!(fine < coarse);
    assert!(fine < 5e-3, "{fine}");
}

#[test]
fn grid_bound_rejects_large_instances() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, 0).unwrap();
    assert!(restricted_grid_bound(&r, &cfg).is_err());
}
