//! Independent checks of a solution against the original semi-infinite
//! constraints: Monte Carlo sampling of the uncertainty balls, and an
//! exhaustive search over a restricted policy family on tiny instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hermitian::{eig_hermitian, CMatrix, CVector, HermitianMatrix, C64};
use crate::phy::{dl_sinr, eve_dl_capacity, eve_ul_capacity, zf_receivers, AllocationPolicy};
use crate::scenario::{uniform_in_complex_ball, uniform_on_complex_sphere, ChannelRealization, SystemConfig};
use crate::sdp::FEAS_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Downlink SINR of user `k` over the co-channel ball.
    DlSinr { k: usize },
    /// Leakage of user `k`'s stream to eavesdropper `m`.
    DlLeakage { k: usize, m: usize },
    /// Leakage of uplink user `j` to eavesdropper `m`.
    UlLeakage { j: usize, m: usize },
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintKind::DlSinr { k } => write!(f, "sinr_dl[{k}]"),
            ConstraintKind::DlLeakage { k, m } => write!(f, "leak_dl[{k}][{m}]"),
            ConstraintKind::UlLeakage { j, m } => write!(f, "leak_ul[{j}][{m}]"),
        }
    }
}

/// One joint draw of every channel error.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    /// Co-channel error seen by each downlink user (length J each).
    pub df: Vec<CVector>,
    /// Error of each eavesdropper's base-station channel.
    pub dl: Vec<CMatrix>,
    /// `de[j][m]`, error of the uplink-user-to-eavesdropper channel.
    pub de: Vec<Vec<CVector>>,
}

#[derive(Clone, Debug)]
pub struct ConstraintMargin {
    pub kind: ConstraintKind,
    /// Smallest margin over the drawn samples. SINR margins are relative
    /// (`SINR/Γ − 1`); leakage margins are in bits.
    pub worst_margin: f64,
    pub worst_index: usize,
    pub worst_sample: Perturbation,
    /// Samples with margin below `−FEAS_TOL`.
    pub violations: usize,
    /// Margin after local search around the worst sample.
    pub refined_margin: f64,
}

#[derive(Clone, Debug)]
pub struct AdversarialReport {
    pub constraints: Vec<ConstraintMargin>,
    pub samples: usize,
    /// Samples violating at least one constraint.
    pub violations: usize,
}

impl AdversarialReport {
    pub fn worst_margin(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.worst_margin.min(c.refined_margin))
            .fold(f64::INFINITY, f64::min)
    }

    /// No drawn or refined sample violates any constraint.
    pub fn is_clean(&self) -> bool {
        self.violations == 0 && self.worst_margin() >= -FEAS_TOL
    }

    pub fn violations_of(&self, pred: impl Fn(ConstraintKind) -> bool) -> usize {
        self.constraints.iter().filter(|c| pred(c.kind)).map(|c| c.violations).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub seed: u64,
    /// Share of samples placed on the ball boundaries.
    pub boundary_fraction: f64,
    /// Local-search iterations per constraint after sampling.
    pub refine_steps: usize,
    pub exec: Execution,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            boundary_fraction: 0.25,
            refine_steps: 200,
            exec: Execution::default(),
        }
    }
}

struct Balls<'a> {
    r: &'a ChannelRealization,
    eps_f: Vec<f64>,
}

impl<'a> Balls<'a> {
    fn new(r: &'a ChannelRealization) -> Self {
        let eps_f = (0..r.k()).map(|k| if r.j() > 0 { r.eps_stacked(k) } else { 0.0 }).collect();
        Self { r, eps_f }
    }

    fn is_degenerate(&self) -> bool {
        self.eps_f.iter().all(|&e| e == 0.0)
            && self.r.eps_dl.iter().all(|&e| e == 0.0)
            && self.r.eps_ul.iter().flatten().all(|&e| e == 0.0)
    }

    fn zero(&self) -> Perturbation {
        let r = self.r;
        let n_r = r.l_hat.first().map_or(0, |l| l.ncols());
        Perturbation {
            df: vec![CVector::zeros(r.j()); r.k()],
            dl: vec![CMatrix::zeros(r.n_t(), n_r); r.m()],
            de: vec![vec![CVector::zeros(n_r); r.m()]; r.j()],
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, boundary: bool) -> Perturbation {
        let mut p = self.zero();
        let mut fill = |out: &mut [C64], eps: f64| {
            if boundary {
                uniform_on_complex_sphere(out, eps, rng);
            } else {
                uniform_in_complex_ball(out, eps, rng);
            }
        };
        for (k, v) in p.df.iter_mut().enumerate() {
            fill(v.as_mut_slice(), self.eps_f[k]);
        }
        for (m, v) in p.dl.iter_mut().enumerate() {
            fill(v.as_mut_slice(), self.r.eps_dl[m]);
        }
        for (j, row) in p.de.iter_mut().enumerate() {
            for (m, v) in row.iter_mut().enumerate() {
                fill(v.as_mut_slice(), self.r.eps_ul[j][m]);
            }
        }
        p
    }
}

fn kinds(r: &ChannelRealization) -> Vec<ConstraintKind> {
    let mut out: Vec<ConstraintKind> = (0..r.k()).map(|k| ConstraintKind::DlSinr { k }).collect();
    for k in 0..r.k() {
        for m in 0..r.m() {
            out.push(ConstraintKind::DlLeakage { k, m });
        }
    }
    for j in 0..r.j() {
        for m in 0..r.m() {
            out.push(ConstraintKind::UlLeakage { j, m });
        }
    }
    out
}

fn margin(
    kind: ConstraintKind,
    d: &Perturbation,
    policy: &AllocationPolicy,
    r: &ChannelRealization,
    config: &SystemConfig,
) -> f64 {
    let sigma_e = config.sigma_eve_sq();
    match kind {
        ConstraintKind::DlSinr { k } => {
            let f: Vec<C64> = r.f_hat_col(k).iter().zip(d.df[k].iter()).map(|(a, b)| a + b).collect();
            dl_sinr(k, &r.h, policy, &f, config.sigma_dl_sq()) / config.gamma_dl() - 1.0
        }
        ConstraintKind::DlLeakage { k, m } => {
            let l = &r.l_hat[m] + &d.dl[m];
            config.r_tol_dl - eve_dl_capacity(&policy.w[k], &policy.z, &l, sigma_e)
        }
        ConstraintKind::UlLeakage { j, m } => {
            let l = &r.l_hat[m] + &d.dl[m];
            let e = &r.e_hat[j][m] + &d.de[j][m];
            config.r_tol_ul - eve_ul_capacity(policy.p[j], &e, &policy.z, &l, sigma_e)
        }
    }
}

fn project(v: &mut [C64], eps: f64) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > eps {
        let s = if n > 0.0 { eps / n } else { 0.0 };
        v.iter_mut().for_each(|z| *z *= s);
    }
}

/// Random local search from `start` over the balls the constraint depends
/// on, with a shrinking step.
fn refine(
    kind: ConstraintKind,
    start: &Perturbation,
    balls: &Balls<'_>,
    policy: &AllocationPolicy,
    config: &SystemConfig,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, Perturbation) {
    let r = balls.r;
    let mut best = start.clone();
    let mut best_margin = margin(kind, &best, policy, r, config);
    for i in 0..steps {
        let shrink = 0.5 * (1.0 - i as f64 / steps.max(1) as f64) + 1e-3;
        let mut cand = best.clone();
        let nudge = |v: &mut [C64], eps: f64, rng: &mut ChaCha8Rng| {
            if eps == 0.0 {
                return;
            }
            let mut step = vec![C64::new(0.0, 0.0); v.len()];
            uniform_on_complex_sphere(&mut step, shrink * eps, rng);
            for (a, b) in v.iter_mut().zip(&step) {
                *a += b;
            }
            // Worst cases sit on the boundary; push there half of the time.
            if rng.random::<bool>() {
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if n > 0.0 {
                    v.iter_mut().for_each(|z| *z *= eps / n);
                }
            }
            project(v, eps);
        };
        match kind {
            ConstraintKind::DlSinr { k } => nudge(cand.df[k].as_mut_slice(), balls.eps_f[k], rng),
            ConstraintKind::DlLeakage { m, .. } => nudge(cand.dl[m].as_mut_slice(), r.eps_dl[m], rng),
            ConstraintKind::UlLeakage { j, m } => {
                nudge(cand.dl[m].as_mut_slice(), r.eps_dl[m], rng);
                nudge(cand.de[j][m].as_mut_slice(), r.eps_ul[j][m], rng);
            }
        }
        let mg = margin(kind, &cand, policy, r, config);
        if mg < best_margin {
            best_margin = mg;
            best = cand;
        }
    }
    (best_margin, best)
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples the uncertainty balls around the estimates and evaluates every
/// downlink SINR and leakage constraint of `policy`.
pub fn adversarial_check(
    policy: &AllocationPolicy,
    realization: &ChannelRealization,
    config: &SystemConfig,
    n_samples: usize,
) -> AdversarialReport {
    adversarial_check_with(policy, realization, config, n_samples, &OracleOptions::default())
}

pub fn adversarial_check_with(
    policy: &AllocationPolicy,
    realization: &ChannelRealization,
    config: &SystemConfig,
    n_samples: usize,
    options: &OracleOptions,
) -> AdversarialReport {
    let balls = Balls::new(realization);
    let kinds = kinds(realization);
    let degenerate = balls.is_degenerate();
    let n = if degenerate { 1 } else { n_samples.max(1) };
    let n_boundary = (options.boundary_fraction.clamp(0.0, 1.0) * n as f64).round() as usize;

    // Sample i is on the boundary when i < n_boundary; its draws depend only
    // on (seed, i), so any worker layout gives the same report.
    let draw = |i: usize| -> Perturbation {
        if degenerate {
            return balls.zero();
        }
        balls.draw(&mut sample_rng(options.seed, i as u64), i < n_boundary)
    };
    let margins: Vec<Vec<f64>> = options.exec.map_range(n, |i| {
        let d = draw(i);
        kinds.iter().map(|&kind| margin(kind, &d, policy, realization, config)).collect()
    });

    let violating = margins.iter().filter(|row| row.iter().any(|&m| m < -FEAS_TOL)).count();
    let constraints = kinds
        .iter()
        .enumerate()
        .map(|(c, &kind)| {
            let (worst_index, worst_margin) = margins
                .iter()
                .enumerate()
                .map(|(i, row)| (i, row[c]))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            let violations = margins.iter().filter(|row| row[c] < -FEAS_TOL).count();
            let worst_sample = draw(worst_index);
            let refined_margin = if degenerate || options.refine_steps == 0 {
                worst_margin
            } else {
                let mut rng = sample_rng(options.seed, (n + c) as u64);
                refine(kind, &worst_sample, &balls, policy, config, options.refine_steps, &mut rng).0
            };
            ConstraintMargin {
                kind,
                worst_margin,
                worst_index,
                worst_sample,
                violations,
                refined_margin,
            }
        })
        .collect();
    AdversarialReport {
        constraints,
        samples: n,
        violations: violating,
    }
}

/// `max xᴴAx` over the ball `‖x − c‖ ≤ eps`, by the trust-region secular
/// equation on the eigenbasis of `A`.
pub fn max_quadratic_on_ball(a: &HermitianMatrix, c: &CVector, eps: f64) -> f64 {
    let at_center = a.quadratic_form(c);
    if eps <= 0.0 {
        return at_center;
    }
    let eig = eig_hermitian(a);
    let lam: Vec<f64> = eig.values.iter().copied().collect();
    let proj: Vec<f64> = (0..lam.len()).map(|i| eig.vectors[i].dotc(c).norm_sqr()).collect();
    let a_max = lam.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a_abs = lam.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let c_norm_sq: f64 = proj.iter().sum();
    if a_abs == 0.0 {
        return 0.0;
    }
    let tiny = 1e-14 * a_abs;

    // Stationary point y_i = μ ŷ_i / (μ − a_i); distance² φ(μ) decreases on
    // (max(a_max, 0), ∞).
    let phi = |mu: f64| -> f64 {
        lam.iter()
            .zip(&proj)
            .filter(|(&l, _)| (mu - l).abs() > 0.0)
            .map(|(&l, &p)| p * l * l / ((mu - l) * (mu - l)))
            .sum()
    };
    let value = |mu: f64| -> f64 {
        lam.iter()
            .zip(&proj)
            .map(|(&l, &p)| if (mu - l).abs() > 0.0 { l * p * mu * mu / ((mu - l) * (mu - l)) } else { 0.0 })
            .sum()
    };
    let mu0 = a_max.max(0.0);
    let top: Vec<usize> = (0..lam.len()).filter(|&i| lam[i] >= a_max - tiny).collect();
    let top_weight: f64 = top.iter().map(|&i| proj[i]).sum();
    let rest = |mu: f64| -> f64 {
        (0..lam.len())
            .filter(|i| !top.contains(i))
            .map(|i| proj[i] * lam[i] * lam[i] / ((mu - lam[i]) * (mu - lam[i])))
            .sum()
    };
    if a_max <= 0.0 {
        let off_null: f64 = (0..lam.len()).filter(|&i| lam[i] < -tiny).map(|i| proj[i]).sum();
        if off_null <= eps * eps {
            return 0.0;
        }
    } else if top_weight <= 1e-28 * c_norm_sq.max(f64::MIN_POSITIVE) {
        // Hard case: c has no weight on the top eigenspace.
        let r = rest(a_max);
        if r <= eps * eps {
            let others: f64 = (0..lam.len())
                .filter(|i| !top.contains(i))
                .map(|i| lam[i] * proj[i] * a_max * a_max / ((a_max - lam[i]) * (a_max - lam[i])))
                .sum();
            return others + a_max * (eps * eps - r);
        }
    }

    let mut lo = mu0;
    let mut hi = mu0 + a_abs * c_norm_sq.sqrt() / eps + a_abs + tiny;
    while phi(hi) > eps * eps {
        hi = mu0 + 2.0 * (hi - mu0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > eps * eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    value(hi).max(at_center)
}

/// Deterministic net of unit directions up to a global phase. Two antennas
/// use a Fibonacci lattice on the Bloch sphere; other sizes use a
/// low-discrepancy sequence pushed through Box–Muller.
pub fn sphere_net(n_t: usize, count: usize) -> Vec<CVector> {
    let count = count.max(1);
    match n_t {
        0 => Vec::new(),
        1 => vec![CVector::from_element(1, C64::new(1.0, 0.0))],
        2 => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                    let theta = z.clamp(-1.0, 1.0).acos();
                    let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
                    CVector::from_vec(vec![
                        C64::new((theta / 2.0).cos(), 0.0),
                        C64::from_polar((theta / 2.0).sin(), phi),
                    ])
                })
                .collect()
        }
        _ => {
            let d = 2 * n_t;
            // Generalized golden ratio: the root of x^(d+1) = x + 1.
            let mut g = 2.0f64;
            for _ in 0..64 {
                g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
            }
            let alpha: Vec<f64> = (1..=d).map(|i| (1.0 / g.powi(i as i32)).fract()).collect();
            (0..count)
                .map(|i| {
                    let u: Vec<f64> = alpha.iter().map(|a| (0.5 + a * (i + 1) as f64).fract()).collect();
                    let v = CVector::from_iterator(
                        n_t,
                        (0..n_t).map(|t| {
                            let (u1, u2) = (u[2 * t].max(1e-300), u[2 * t + 1]);
                            C64::from_polar((-2.0 * u1.ln()).sqrt(), 2.0 * std::f64::consts::PI * u2)
                        }),
                    );
                    let n = v.norm();
                    v.unscale(n)
                })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    pub directions: usize,
    /// Nonzero AN levels `q`, log-spaced; `q = 0` is always tried.
    pub an_levels: usize,
    /// The AN grid spans `[10^lo, 10^hi]` times the single-user MRT power.
    pub an_decades: (f64, f64),
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            directions: 2000,
            an_levels: 80,
            an_decades: (-6.0, 2.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridBound {
    /// Best total downlink power found, `+∞` if nothing in the family is
    /// feasible.
    pub q1: f64,
    pub policy: Option<AllocationPolicy>,
    pub evaluated: usize,
    pub feasible: usize,
}

/// Upper bound on the P1 optimum from the family `w = √p·u`, `Z = q·I`,
/// with `u` on a direction net and `q` on a grid. For each pair the least
/// `p` and uplink power meeting both SINR targets are computed in closed
/// form, and the leakage constraints are checked at their exact worst
/// cases.
pub fn restricted_grid_bound(realization: &ChannelRealization, config: &SystemConfig) -> Result<GridBound> {
    restricted_grid_bound_with(realization, config, &GridOptions::default())
}

pub fn restricted_grid_bound_with(
    r: &ChannelRealization,
    config: &SystemConfig,
    options: &GridOptions,
) -> Result<GridBound> {
    let (k, j, m, n_t) = (r.k(), r.j(), r.m(), r.n_t());
    let n_r = r.l_hat.first().map_or(1, |l| l.ncols());
    if k != 1 || j > 1 || m > 1 || n_t > 3 || n_r != 1 {
        return Err(Error::Validation(format!(
            "grid bound needs K=1, J<=1, M<=1, N_T<=3, N_R=1; got K={k} J={j} M={m} N_T={n_t} N_R={n_r}"
        )));
    }
    let h = &r.h[0];
    let gamma = config.gamma_dl();
    let sigma = config.sigma_dl_sq();
    let sigma_e = config.sigma_eve_sq();
    let f_max = if j == 1 { r.f_hat[(0, 0)].norm() + r.eps_cci[(0, 0)] } else { 0.0 };

    // Uplink: P ≥ c0 + c1·p + cq·q.
    let ul = if j == 1 {
        let v = zf_receivers(&r.g)?.remove(0);
        let gain = v.dotc(&r.g[0]).norm_sqr();
        let g_ul = config.gamma_ul();
        let rho = config.rho();
        let row_energy: Vec<f64> = (0..n_t).map(|n| r.h_si.row(n).iter().map(|z| z.norm_sqr()).sum()).collect();
        let v_sq: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
        let c0 = g_ul * config.sigma_ul_sq() * v.norm_squared() / gain;
        let cq = g_ul * rho * v_sq.iter().zip(&row_energy).map(|(a, b)| a * b).sum::<f64>() / gain;
        Some((v_sq, gain, g_ul * rho, c0, cq))
    } else {
        None
    };

    let mrt = gamma * sigma / h.norm_squared();
    let mut qs = vec![0.0];
    let (lo, hi) = options.an_decades;
    let levels = options.an_levels.max(1);
    for i in 0..levels {
        let t = if levels == 1 { lo } else { lo + (hi - lo) * i as f64 / (levels - 1) as f64 };
        qs.push(mrt * 10f64.powf(t));
    }

    let mut best: Option<(f64, f64, f64, f64, CVector)> = None;
    let mut evaluated = 0;
    let mut feasible = 0;
    for u in sphere_net(n_t, options.directions) {
        let hu = h.dotc(&u).norm_sqr();
        if !(hu > 0.0) {
            continue;
        }
        let hsi_u_sq: Vec<f64> = (&r.h_si * &u).iter().map(|z| z.norm_sqr()).collect();
        for &q in &qs {
            evaluated += 1;
            // Downlink: p ≥ a0 + a1·P.
            let a0 = gamma * (q * h.norm_squared() + sigma) / hu;
            let a1 = gamma * f_max * f_max / hu;
            let (p, big_p) = match &ul {
                Some((v_sq, gain, gr, c0, cq)) => {
                    let c1 = gr * v_sq.iter().zip(&hsi_u_sq).map(|(a, b)| a * b).sum::<f64>() / gain;
                    let base = c0 + cq * q;
                    let det = 1.0 - a1 * c1;
                    if !(det > 0.0) {
                        continue;
                    }
                    let p = (a0 + a1 * base) / det;
                    (p, base + c1 * p)
                }
                None => (a0, 0.0),
            };
            if m == 1 {
                let l_hat = CVector::from_column_slice(r.l_hat[0].as_slice());
                let eps_l = r.eps_dl[0];
                let xi = config.xi_dl();
                let a = HermitianMatrix::outer(&u) * p + HermitianMatrix::identity(n_t) * (-xi * q);
                if max_quadratic_on_ball(&a, &l_hat, eps_l) > xi * sigma_e {
                    continue;
                }
                if j == 1 {
                    let e_max = r.e_hat[0][0][0].norm() + r.eps_ul[0][0];
                    let l_min = (l_hat.norm() - eps_l).max(0.0);
                    if big_p * e_max * e_max > config.xi_ul() * (q * l_min * l_min + sigma_e) {
                        continue;
                    }
                }
            }
            feasible += 1;
            let q1 = p + n_t as f64 * q;
            if best.as_ref().is_none_or(|b| q1 < b.0) {
                best = Some((q1, p, q, big_p, u.clone()));
            }
        }
    }
    Ok(match best {
        Some((q1, p, q, big_p, u)) => GridBound {
            q1,
            policy: Some(AllocationPolicy::from_beams(
                vec![u * C64::new(p.sqrt(), 0.0)],
                HermitianMatrix::identity(n_t) * q,
                if j == 1 { vec![big_p] } else { Vec::new() },
            )),
            evaluated,
            feasible,
        },
        None => GridBound {
            q1: f64::INFINITY,
            policy: None,
            evaluated,
            feasible,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(xs: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(xs.len(), xs.iter().map(|&(a, b)| C64::new(a, b)))
    }

    #[test]
    fn ball_maximum_of_a_projector() {
        // max |x_1|² over ‖x − c‖ ≤ ε is (|c_1| + ε)².
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        let c = cv(&[(0.6, 0.8), (2.0, 0.0)]);
        let v = max_quadratic_on_ball(&a, &c, 0.5);
        assert!((v - 2.25).abs() < 1e-9, "{v}");
    }

    #[test]
    fn ball_maximum_of_a_negative_form() {
        // max −‖x‖² over ‖x − c‖ ≤ ε is −(‖c‖ − ε)², or 0 when the ball
        // holds the origin.
        let a = HermitianMatrix::identity(2) * -1.0;
        let c = cv(&[(3.0, 0.0), (0.0, 4.0)]);
        assert!((max_quadratic_on_ball(&a, &c, 1.0) + 16.0).abs() < 1e-9);
        assert_eq!(max_quadratic_on_ball(&a, &c, 6.0), 0.0);
    }

    #[test]
    fn ball_maximum_in_the_hard_case() {
        // c is orthogonal to the top eigenvector.
        let a = HermitianMatrix::from_real_diagonal(&[2.0, -1.0]);
        let c = cv(&[(0.0, 0.0), (1.0, 0.0)]);
        let v = max_quadratic_on_ball(&a, &c, 1.0);
        // Brute force over the circle boundary and interior.
        let mut best = f64::NEG_INFINITY;
        for i in 0..=400 {
            for r in [0.25, 0.5, 0.75, 1.0] {
                let t = i as f64 / 400.0 * std::f64::consts::TAU;
                let x = cv(&[(r * t.cos(), 0.0), (1.0 + r * t.sin(), 0.0)]);
                best = best.max(a.quadratic_form(&x));
            }
        }
        assert!(v >= best - 1e-9 && v <= best + 1e-3, "{v} vs {best}");
    }

    #[test]
    fn bloch_net_is_unit_and_spread() {
        let net = sphere_net(2, 500);
        assert_eq!(net.len(), 500);
        for u in &net {
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
        let target = cv(&[(0.3, 0.1), (-0.2, 0.9)]);
        let target = target.unscale(target.norm());
        let best = net.iter().map(|u| u.dotc(&target).norm()).fold(0.0, f64::max);
        assert!(best > 0.99);
    }

    #[test]
    fn generic_net_is_unit() {
        for u in sphere_net(3, 100) {
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }
}
