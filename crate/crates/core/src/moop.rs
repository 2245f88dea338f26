//! Weighted Tchebycheff sweep: anchor optima, then the weighted problem over
//! a uniform grid of downlink weights.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hermitian::CVector;
use crate::phy::{secrecy_rates, AllocationPolicy, SecrecyRates, UncertainLinks};
use crate::scenario::{ChannelRealization, SystemConfig};
use crate::sdp::{
    assemble, recover_rank_one, solve, ConicBackend, Problem, SolveReport, SolveStatus, Weights,
};

#[derive(Clone, Debug)]
pub struct ParetoPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub status: SolveStatus,
    /// Total downlink power (W) of the recovered policy.
    pub q1: Option<f64>,
    /// Total uplink power (W).
    pub q2: Option<f64>,
    pub tau: Option<f64>,
    /// Secrecy rates of the recovered policy on the true channels.
    pub secrecy: Option<SecrecyRates>,
    /// Largest `λ₂/λ₁` over the covariances the beams came from.
    pub max_rank_ratio: Option<f64>,
    /// Largest ratio returned by the first solve, before any second stage.
    pub stage1_rank_ratio: Option<f64>,
    pub stage2_used: bool,
    /// The beams are not exactly rank one although the weights promise it.
    pub anomaly: bool,
    /// Normalized violation of the recovered policy.
    pub violation: Option<f64>,
    pub solve_time: Duration,
    pub policy: Option<AllocationPolicy>,
}

impl ParetoPoint {
    fn failed(lambda1: f64, status: SolveStatus, solve_time: Duration) -> Self {
        Self {
            lambda1,
            lambda2: 1.0 - lambda1,
            status,
            q1: None,
            q2: None,
            tau: None,
            secrecy: None,
            max_rank_ratio: None,
            stage1_rank_ratio: None,
            stage2_used: false,
            anomaly: false,
            violation: None,
            solve_time,
            policy: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves one program of the family and evaluates the recovered policy.
/// `tau_override` replaces the solver's objective in the `tau` field.
pub fn solve_point(
    problem: &Problem,
    realization: &ChannelRealization,
    config: &SystemConfig,
    directions: Option<&[CVector]>,
    backend: &dyn ConicBackend,
) -> Result<(ParetoPoint, SolveReport)> {
    let lambda1 = match problem {
        Problem::P1 => 1.0,
        Problem::P2 => 0.0,
        Problem::P3(w) => w.lambda1,
    };
    let program = assemble(problem, realization, config, directions)?;
    let report = solve(&program, backend);
    if !report.is_optimal() {
        return Ok((ParetoPoint::failed(lambda1, report.status, report.solve_time), report));
    }
    let rec = recover_rank_one(&program, &report, backend)?;
    let secrecy = secrecy_rates(realization, UncertainLinks::truth(realization), &rec.policy, config)?;
    let tau = match problem {
        Problem::P3(_) => report.objective,
        _ => 0.0,
    };
    let stage_time = rec.stage2.as_ref().map_or(Duration::ZERO, |r| r.solve_time);
    let point = ParetoPoint {
        lambda1,
        lambda2: 1.0 - lambda1,
        status: SolveStatus::Optimal,
        q1: Some(rec.policy.q1()),
        q2: Some(rec.policy.q2()),
        tau: Some(tau),
        secrecy: Some(secrecy),
        max_rank_ratio: Some(rec.max_ratio()),
        stage1_rank_ratio: Some(rec.stage1_ratios.iter().copied().fold(0.0, f64::max)),
        stage2_used: rec.stage2.is_some(),
        anomaly: rec.anomaly,
        violation: Some(rec.violation),
        solve_time: report.solve_time + stage_time,
        policy: Some(rec.policy),
    };
    Ok((point, report))
}

/// `{0, step, …, 1}`. A step that does not divide one still ends at one.
pub fn lambda_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Validation(format!("lambda step must lie in (0, 0.5], got {step}")));
    }
    let ratio = 1.0 / step;
    let n = ratio.round();
    if (ratio - n).abs() < 1e-9 {
        let n = n as usize;
        return Ok((0..=n).map(|i| i as f64 / n as f64).collect());
    }
    let n = ratio.floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    grid.push(1.0);
    Ok(grid)
}

#[derive(Clone, Debug)]
pub struct Frontier {
    /// `(Q₁*, Q₂*)` of this drop and scheme.
    pub anchors: Option<(f64, f64)>,
    /// One point per requested weight, in request order.
    pub points: Vec<ParetoPoint>,
}

impl Frontier {
    /// The drop is an outage when an anchor problem has no solution.
    pub fn is_outage(&self) -> bool {
        self.anchors.is_none()
    }
}

/// Traces the frontier of one drop. With `directions` the downlink beams are
/// fixed to those unit vectors (the baseline scheme) and only their powers
/// are optimized.
pub fn sweep(
    realization: &ChannelRealization,
    config: &SystemConfig,
    lambda_step: f64,
    directions: Option<&[CVector]>,
    backend: &dyn ConicBackend,
    exec: Execution,
) -> Result<Frontier> {
    sweep_weights(realization, config, &lambda_grid(lambda_step)?, directions, backend, exec)
}

/// Like [`sweep`] for an arbitrary set of downlink weights. Both anchors are
/// always solved; weights 0 and 1 reuse the anchor solutions.
pub fn sweep_weights(
    realization: &ChannelRealization,
    config: &SystemConfig,
    weights: &[f64],
    directions: Option<&[CVector]>,
    backend: &dyn ConicBackend,
    exec: Execution,
) -> Result<Frontier> {
    if let Some(&bad) = weights.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Validation(format!("lambda1 must lie in [0, 1], got {bad}")));
    }
    let marker = |status: SolveStatus, t: Duration| Frontier {
        anchors: None,
        points: weights.iter().map(|&l| ParetoPoint::failed(l, status, t)).collect(),
    };

    let (p1, r1) = solve_point(&Problem::P1, realization, config, directions, backend)?;
    if !p1.is_optimal() {
        return Ok(marker(p1.status, r1.solve_time));
    }
    let (p2, r2) = solve_point(&Problem::P2, realization, config, directions, backend)?;
    if !p2.is_optimal() {
        return Ok(marker(p2.status, r2.solve_time));
    }
    let (q1_star, q2_star) = (r1.objective, r2.objective);

    let solved = exec.map(weights, |&lambda1| {
        if lambda1 == 1.0 {
            return Ok(p1.clone());
        }
        if lambda1 == 0.0 {
            return Ok(p2.clone());
        }
        let w = Weights {
            lambda1,
            q1_star,
            q2_star,
        };
        solve_point(&Problem::P3(w), realization, config, directions, backend).map(|(p, _)| p)
    });
    Ok(Frontier {
        anchors: Some((q1_star, q2_star)),
        points: solved.into_iter().collect::<Result<_>>()?,
    })
}

/// `x` is below `y` by more than `rel` of the larger magnitude.
fn clearly_below(x: f64, y: f64, rel: f64) -> bool {
    x < y - rel * x.abs().max(y.abs())
}

/// Pairs `(a, b)` where `a` beats `b` in both objectives by more than the
/// relative slack `rel`.
pub fn dominated_pairs(points: &[ParetoPoint], rel: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, pa) in points.iter().enumerate() {
        for (b, pb) in points.iter().enumerate() {
            if let (Some(a1), Some(a2), Some(b1), Some(b2)) = (pa.q1, pa.q2, pb.q1, pb.q2) {
                if clearly_below(a1, b1, rel) && clearly_below(a2, b2, rel) {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

/// Whether `q2` is nonincreasing, up to the relative slack `rel`, once the
/// optimal points are sorted by `q1`.
pub fn is_monotone(points: &[ParetoPoint], rel: f64) -> bool {
    let mut pts: Vec<(f64, f64)> = points.iter().filter_map(|p| Some((p.q1?, p.q2?))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.windows(2).all(|w| !clearly_below(w[0].1, w[1].1, rel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_size() {
        let g = lambda_grid(0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(g[7], 0.07);
        assert_eq!(lambda_grid(0.05).unwrap().len(), 21);
        let g = lambda_grid(0.3).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn grid_rejects_bad_steps() {
        for s in [0.0, -0.1, 0.6, f64::NAN] {
            assert!(lambda_grid(s).is_err());
        }
    }

    fn pt(q1: f64, q2: f64) -> ParetoPoint {
        ParetoPoint {
            q1: Some(q1),
            q2: Some(q2),
            ..ParetoPoint::failed(0.5, SolveStatus::Optimal, Duration::ZERO)
        }
    }

    #[test]
    fn dominance_scan() {
        let pts = vec![pt(1.0, 3.0), pt(2.0, 2.0), pt(3.0, 1.0)];
        assert!(dominated_pairs(&pts, 1e-6).is_empty());
        assert!(is_monotone(&pts, 1e-6));
        let pts = vec![pt(1.0, 3.0), pt(2.0, 2.0), pt(2.5, 2.5)];
        assert_eq!(dominated_pairs(&pts, 1e-6), vec![(1, 2)]);
        assert!(!is_monotone(&pts, 1e-6));
    }

    #[test]
    fn plateaus_are_not_dominated() {
        let pts = vec![pt(1.0, 3.0), pt(1.0, 3.0), pt(1.0, 2.0)];
        assert!(dominated_pairs(&pts, 1e-6).is_empty());
        assert!(is_monotone(&pts, 1e-6));
    }
}
