use fdsec::hermitian::{CMatrix, RANK_ONE_RATIO};
use fdsec::model::{Constraint, VarKind};
use fdsec::scenario::{generate_drop, ChannelRealization, SystemConfig};
use fdsec::sdp::{
    assemble, recover_rank_one, solve, write_program, Binding, ClarabelBackend, Problem, ProblemLabel, SolveStatus, Weights,
    FEAS_TOL,
};

// Seed 12 is a feasible desk-scale drop.
const FEASIBLE_SEED: u64 = 12;

fn single_user() -> SystemConfig {
    SystemConfig {
        k: 1,
        j: 0,
        m: 0,
        n_t: 4,
        kappa_est_sq: 0.0,
        ..SystemConfig::desk_scale()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn single_user_power_matches_mrt() {
    let cfg = single_user();
    let be = ClarabelBackend::default();
    for seed in 0..5 {
        let r = generate_drop(&cfg, seed).unwrap();
        let program = assemble(&Problem::P1, &r, &cfg, None).unwrap();
        let report = solve(&program, &be);
        assert_eq!(report.status, SolveStatus::Optimal);
        let mrt = cfg.gamma_dl() * cfg.sigma_dl_sq() / r.h[0].norm_squared();
        assert!(rel(report.objective, mrt) < 1e-6, "seed {seed}: {} vs {mrt}", report.objective);
        assert!(report.max_violation <= FEAS_TOL);
    }
}

#[test]
fn p1_variable_count() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, 0).unwrap();
    let p = assemble(&Problem::P1, &r, &cfg, None).unwrap();
    let table = &p.vars.table;
    let (k, j, m) = (cfg.k, cfg.j, cfg.m);
    let herm: Vec<usize> = table
        .iter()
        .filter_map(|(_, d)| match d.kind {
            VarKind::Hermitian { dim, .. } => Some(dim),
            _ => None,
        })
        .collect();
    assert_eq!(herm.iter().filter(|&&d| d == cfg.n_t).count(), k + 1);
    assert_eq!(herm.iter().filter(|&&d| d == cfg.n_r).count(), j * m);
    assert_eq!(table.scalar_count(), j + k + k * m + 2 * j * m);
}

#[test]
fn weighted_problem_with_full_downlink_weight_reduces_to_p1() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEED).unwrap();
    let be = ClarabelBackend::default();
    let p1 = solve(&assemble(&Problem::P1, &r, &cfg, None).unwrap(), &be);
    assert!(p1.is_optimal());
    let q1_star = 0.5 * p1.objective;
    let w = Weights {
        lambda1: 1.0,
        q1_star,
        q2_star: 1.0,
    };
    let p3 = solve(&assemble(&Problem::P3(w), &r, &cfg, None).unwrap(), &be);
    assert!(p3.is_optimal());
    assert!(rel(p3.objective, p1.objective - q1_star) < 1e-6, "{} vs {}", p3.objective, p1.objective - q1_star);
}

#[test]
fn weight_outside_unit_interval_is_rejected() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, 0).unwrap();
    for lambda1 in [-0.1, 1.5, f64::NAN] {
        let w = Weights {
            lambda1,
            q1_star: 1.0,
            q2_star: 1.0,
        };
        assert!(assemble(&Problem::P3(w), &r, &cfg, None).is_err());
    }
    let w = Weights {
        lambda1: 0.5,
        q1_star: f64::INFINITY,
        q2_star: 1.0,
    };
    assert!(assemble(&Problem::P3(w), &r, &cfg, None).is_err());
}

/// An eavesdropper whose channel equals the user's sees exactly the user's
/// SINR, so a leakage limit below `log2(1 + Γ)` cannot be met.
fn eavesdropper_on_user(seed: u64) -> (SystemConfig, ChannelRealization) {
    let cfg = SystemConfig {
        m: 1,
        n_r: 1,
        sigma_eve_dbm: SystemConfig::desk_scale().sigma_dl_dbm,
        ..single_user()
    };
    let mut r = generate_drop(&cfg, seed).unwrap();
    let l = CMatrix::from_column_slice(cfg.n_t, 1, r.h[0].as_slice());
    r.l_true = vec![l.clone()];
    r.l_hat = vec![l];
    (cfg, r)
}

#[test]
fn eavesdropper_on_the_user_direction_is_infeasible() {
    let (cfg, r) = eavesdropper_on_user(3);
    assert!(cfg.gamma_dl().log2() > cfg.r_tol_dl);
    let report = solve(&assemble(&Problem::P1, &r, &cfg, None).unwrap(), &ClarabelBackend::default());
    assert_eq!(report.status, SolveStatus::Infeasible);
    assert!(report.values.is_none() || report.max_violation > FEAS_TOL);
}

#[test]
fn relaxing_the_leakage_limit_restores_feasibility() {
    let (mut cfg, r) = eavesdropper_on_user(3);
    cfg.r_tol_dl = 4.0;
    let report = solve(&assemble(&Problem::P1, &r, &cfg, None).unwrap(), &ClarabelBackend::default());
    assert!(report.is_optimal());
    assert!(report.max_violation <= FEAS_TOL);
}

#[test]
fn constraint_order_does_not_change_the_optimum() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEED).unwrap();
    let be = ClarabelBackend::default();
    let program = assemble(&Problem::P1, &r, &cfg, None).unwrap();
    let a = solve(&program, &be);
    let mut shuffled = program.clone();
    shuffled.constraints.reverse();
    let n = shuffled.constraints.len();
    shuffled.constraints.swap(0, n / 2);
    let b = solve(&shuffled, &be);
    assert!(a.is_optimal() && b.is_optimal());
    assert!(rel(a.objective, b.objective) < 1e-6, "{} vs {} ({:?} {:?})", a.objective, b.objective, a.backend_status, b.backend_status);
}

#[test]
fn recovered_beams_are_rank_one_and_feasible() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEED).unwrap();
    let be = ClarabelBackend::default();
    let program = assemble(&Problem::P1, &r, &cfg, None).unwrap();
    let report = solve(&program, &be);
    assert!(report.is_optimal());
    assert!(report.max_violation <= FEAS_TOL);
    if let Some(gap) = report.relative_gap {
        assert!(gap <= 1e-6, "gap {gap}");
    }
    let rec = recover_rank_one(&program, &report, &be).unwrap();
    assert!(!rec.anomaly);
    assert!(rec.stage2.is_none());
    assert!(rec.max_ratio() <= RANK_ONE_RATIO);
    assert!(rec.violation <= FEAS_TOL);
    assert!(rel(rec.policy.q1(), report.objective) < 1e-6);
    let beams = rec.policy.beams.as_ref().unwrap();
    for b in beams {
        let first = b.iter().find(|z| z.norm() > 0.0).unwrap();
        assert!(first.im.abs() < 1e-12 && first.re > 0.0);
    }
}

#[test]
fn second_stage_freezes_everything_but_the_beamformers() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEED).unwrap();
    let be = ClarabelBackend::default();
    let program = assemble(&Problem::P2, &r, &cfg, None).unwrap();
    let first = solve(&program, &be);
    assert!(first.is_optimal());
    let values = first.values.as_ref().unwrap();

    let second = program.stage2(values);
    assert_eq!(second.label, ProblemLabel::Stage2);
    for (id, _) in second.vars.table.iter() {
        let free = matches!(second.bindings[id.0], Binding::Free);
        assert_eq!(free, program.vars.w.contains(&id));
    }
    // The first-stage point is feasible for the second stage.
    assert!(second.max_violation(values) <= FEAS_TOL);
}

#[test]
fn uplink_only_recovery_keeps_uplink_powers() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEED).unwrap();
    let be = ClarabelBackend::default();
    let program = assemble(&Problem::P2, &r, &cfg, None).unwrap();
    let first = solve(&program, &be);
    assert!(first.is_optimal());
    let rec = recover_rank_one(&program, &first, &be).unwrap();
    let values = first.values.as_ref().unwrap();
    for (j, &p) in program.vars.p.iter().enumerate() {
        assert_eq!(rec.policy.p[j], values.scalar(p));
    }
    assert!(rec.violation <= FEAS_TOL);
    assert_eq!(rec.anomaly, rec.max_ratio() > RANK_ONE_RATIO);
    if let Some(stage2) = &rec.stage2 {
        if stage2.is_optimal() {
            assert!(rec.max_ratio() <= RANK_ONE_RATIO);
        }
    }
}

#[test]
fn program_dump_lists_every_constraint() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, 0).unwrap();
    let program = assemble(&Problem::P1, &r, &cfg, None).unwrap();
    let mut buf = Vec::new();
    write_program(&program, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("program P1\n"));
    assert!(text.ends_with("end\n"));
    let vars = text.lines().filter(|l| l.starts_with("var ")).count();
    assert_eq!(vars, program.vars.table.len());
    let records = text.lines().filter(|l| l.starts_with("constraint ")).count();
    assert_eq!(records, program.constraints.len());
    let lmis = program.constraints.iter().filter(|c| matches!(c, Constraint::Lmi(_))).count();
    assert_eq!(text.lines().filter(|l| l.starts_with("constraint lmi ")).count(), lmis);
}
