use fdsec::exec::Execution;
use fdsec::hermitian::RANK_ONE_RATIO;
use fdsec::moop::{dominated_pairs, is_monotone, sweep, Frontier};
use fdsec::scenario::{generate_drop, SystemConfig};
use fdsec::sdp::{ClarabelBackend, SolveStatus, FEAS_TOL};

const FEASIBLE_SEED: u64 = 12;
const INFEASIBLE_SEED: u64 = 0;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn frontier(seed: u64, step: f64) -> Frontier {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, seed).unwrap();
    sweep(&r, &cfg, step, None, &ClarabelBackend::default(), Execution::default()).unwrap()
}

#[test]
fn feasible_drop_traces_a_pareto_frontier() {
    let f = frontier(FEASIBLE_SEED, 0.25);
    let (q1_star, q2_star) = f.anchors.unwrap();
    assert_eq!(f.points.len(), 5);
    let lambdas: Vec<f64> = f.points.iter().map(|p| p.lambda1).collect();
    assert_eq!(lambdas, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    for p in &f.points {
        assert_eq!(p.status, SolveStatus::Optimal);
        assert_eq!(p.lambda1 + p.lambda2, 1.0);
        assert!(p.q1.unwrap() >= q1_star * (1.0 - 1e-6));
        assert!(p.q2.unwrap() >= q2_star * (1.0 - 1e-6));
        assert!(p.violation.unwrap() <= FEAS_TOL);
        if p.lambda1 > 0.0 {
            assert!(p.stage1_rank_ratio.unwrap() <= RANK_ONE_RATIO);
        }
    }

    let last = f.points.last().unwrap();
    assert!(rel(last.q1.unwrap(), q1_star) < 1e-6);
    assert_eq!(last.tau, Some(0.0));
    let first = &f.points[0];
    assert!(rel(first.q2.unwrap(), q2_star) < 1e-6);
    assert_eq!(first.tau, Some(0.0));

    let min_q1 = f.points.iter().filter_map(|p| p.q1).fold(f64::INFINITY, f64::min);
    let min_q2 = f.points.iter().filter_map(|p| p.q2).fold(f64::INFINITY, f64::min);
    assert!(rel(min_q1, q1_star) < 1e-6);
    assert!(rel(min_q2, q2_star) < 1e-6);

    assert!(is_monotone(&f.points, 1e-6));
    assert!(dominated_pairs(&f.points, 1e-6).is_empty());
}

#[test]
fn finer_grid_reproduces_the_coarse_points() {
    let coarse = frontier(FEASIBLE_SEED, 0.5);
    let fine = frontier(FEASIBLE_SEED, 0.25);
    for p in &coarse.points {
        let q = fine.points.iter().find(|q| q.lambda1 == p.lambda1).unwrap();
        assert!(rel(q.q1.unwrap(), p.q1.unwrap()) < 1e-6);
        assert!(rel(q.q2.unwrap(), p.q2.unwrap()) < 1e-6);
    }
}

#[test]
fn infeasible_drop_is_an_outage_at_every_weight() {
    let f = frontier(INFEASIBLE_SEED, 0.5);
    assert!(f.is_outage());
    assert_eq!(f.points.len(), 3);
    for p in &f.points {
        assert_eq!(p.status, SolveStatus::Infeasible);
        assert!(p.q1.is_none() && p.policy.is_none());
    }
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let cfg = SystemConfig::desk_scale();
    let r = generate_drop(&cfg, FEASIBLE_SEED).unwrap();
    let be = ClarabelBackend::default();
    let a = sweep(&r, &cfg, 0.25, None, &be, Execution::Sequential).unwrap();
    let b = sweep(&r, &cfg, 0.25, None, &be, Execution::Parallel).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!(p.lambda1, q.lambda1);
        assert_eq!(p.q1, q.q1);
        assert_eq!(p.q2, q.q2);
    }
}
