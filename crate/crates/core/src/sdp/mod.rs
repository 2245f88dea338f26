//! Relaxed robust SDP: assembly, solution through a real-cone backend, and
//! rank-one recovery.
//!
//! A [`ConicProgram`] is built over the model variables of
//! [`ModelVars`]. Each variable carries a [`Binding`]: free, frozen at a
//! value, or tied to a fixed rank-one direction with a free power. The
//! binding is resolved when the program is lowered, so the same constraint
//! builders serve the power-minimization anchors, the weighted problem, the
//! fixed-direction baseline and the rank-reduction second stage.

mod backend;
mod dump;
mod lower;
mod recover;

pub use backend::{BackendStatus, ClarabelBackend, ConicBackend, PsdBlock, RealConicProblem, RealSolution, SparseRow};
pub use dump::write_program;
pub use lower::{hermitian_basis, LoweredProgram};
pub use recover::{recover_rank_one, Recovery};

use std::fmt;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::hermitian::{CVector, HermitianMatrix};
use crate::model::{Assignment, Constraint, LinearForm, Value, VarId, VarKind};
use crate::phy::zf_receivers;
use crate::robust::{build_epigraph, build_robust_constraints, idle_multipliers, ModelVars};
use crate::scenario::{ChannelRealization, SystemConfig};

/// Absolute violation tolerance on normalized constraints.
pub const FEAS_TOL: f64 = 1e-6;
/// Relative primal-dual gap tolerance.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemLabel {
    /// Total downlink power minimization.
    P1,
    /// Total uplink power minimization.
    P2,
    /// Weighted Tchebycheff problem with downlink weight `lambda1`.
    P3 { lambda1: f64 },
    /// Rank-reduction pass with everything but the beamformers frozen.
    Stage2,
}

impl fmt::Display for ProblemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemLabel::P1 => write!(f, "P1"),
            ProblemLabel::P2 => write!(f, "P2"),
            ProblemLabel::P3 { lambda1 } => write!(f, "P3(lambda1={lambda1})"),
            ProblemLabel::Stage2 => write!(f, "stage2"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub lambda1: f64,
    pub q1_star: f64,
    pub q2_star: f64,
}

impl Weights {
    pub fn lambda2(&self) -> f64 {
        1.0 - self.lambda1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem {
    P1,
    P2,
    P3(Weights),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Binding {
    Free,
    Fixed(Value),
    /// `X = p · u uᴴ` with `p` the scalar variable `power`.
    RankOne { power: VarId, direction: CVector },
}

#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub label: ProblemLabel,
    pub vars: ModelVars,
    pub bindings: Vec<Binding>,
    /// Typical magnitude of each variable, used only for conditioning.
    pub scales: Vec<f64>,
    pub objective: LinearForm,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub backend_status: BackendStatus,
    /// Objective in physical units (watts); NaN unless a point was returned.
    pub objective: f64,
    pub dual_objective: Option<f64>,
    /// Primal-dual gap relative to the normalized objective.
    pub relative_gap: Option<f64>,
    pub values: Option<Assignment>,
    /// Largest normalized constraint violation at `values`.
    pub max_violation: f64,
    /// Optimal value of the minimum-margin problem when it was consulted.
    pub infeasibility_margin: Option<f64>,
    pub solve_time: Duration,
    pub iterations: u32,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Order-of-magnitude hints for every model variable of a drop.
fn scale_hints(
    vars: &ModelVars,
    realization: &ChannelRealization,
    config: &SystemConfig,
    weights: Option<&Weights>,
) -> Result<Vec<f64>> {
    let v = zf_receivers(&realization.g)?;
    let k = realization.k().max(1) as f64;
    let p_dl = realization
        .h
        .iter()
        .map(|h| config.gamma_dl() * config.sigma_dl_sq() / h.norm_squared())
        .sum::<f64>()
        / k;
    let si = config.rho() * k * p_dl;
    let p_ul: Vec<f64> = v
        .iter()
        .zip(&realization.g)
        .map(|(vj, gj)| {
            config.gamma_ul() * (config.sigma_ul_sq() + si) * vj.norm_squared() / vj.dotc(gj).norm_sqr()
        })
        .collect();
    let p_ul_max = p_ul.iter().copied().fold(0.0, f64::max);

    let mut s = vec![p_dl; vars.table.len()];
    let mut set = |id: VarId, x: f64| {
        if x.is_finite() && x > 0.0 {
            s[id.0] = x;
        }
    };
    for (j, &id) in vars.p.iter().enumerate() {
        set(id, p_ul[j]);
    }
    for &id in &vars.delta {
        set(id, p_ul_max);
    }
    for (m, eps) in realization.eps_dl.iter().enumerate() {
        for kk in 0..vars.k() {
            set(vars.t[kk][m], eps * eps * p_dl);
        }
        for jj in 0..vars.j() {
            set(vars.beta[jj][m], eps * eps * p_dl);
        }
    }
    for jj in 0..vars.j() {
        for m in 0..vars.m() {
            let eps = realization.eps_ul[jj][m];
            set(vars.alpha[jj][m], eps * eps * p_ul[jj]);
            set(vars.m_slack[jj][m], p_ul[jj] * realization.e_hat[jj][m].norm_squared());
        }
    }
    if let (Some(tau), Some(w)) = (vars.tau, weights) {
        set(tau, (w.lambda1 * w.q1_star).max(w.lambda2() * w.q2_star));
    }
    Ok(s)
}

fn total_dl_power(vars: &ModelVars, n_t: usize) -> LinearForm {
    let mut f = LinearForm::default();
    for &w in vars.w.iter().chain(std::iter::once(&vars.z)) {
        f.add_matrix(w, HermitianMatrix::identity(n_t));
    }
    f
}

fn total_ul_power(vars: &ModelVars) -> LinearForm {
    let mut f = LinearForm::default();
    for &p in &vars.p {
        f.add_scalar(p, 1.0);
    }
    f
}

/// Builds the relaxed robust program for one drop. With `directions`, each
/// `W_k` is replaced by `p_k ŵ_k ŵ_kᴴ` for the given unit directions.
pub fn assemble(
    problem: &Problem,
    realization: &ChannelRealization,
    config: &SystemConfig,
    directions: Option<&[CVector]>,
) -> Result<ConicProgram> {
    let weights = match problem {
        Problem::P3(w) => {
            if !(0.0..=1.0).contains(&w.lambda1) {
                return Err(Error::Validation(format!("lambda1 must lie in [0, 1], got {}", w.lambda1)));
            }
            Some(w)
        }
        _ => None,
    };
    let mut vars = ModelVars::for_config(config, weights.is_some());
    if directions.is_some() {
        vars = vars.with_dl_powers();
    }
    let mut constraints = build_robust_constraints(&vars, realization, config)?;
    let (label, objective) = match problem {
        Problem::P1 => (ProblemLabel::P1, total_dl_power(&vars, config.n_t)),
        Problem::P2 => (ProblemLabel::P2, total_ul_power(&vars)),
        Problem::P3(w) => {
            let pair = build_epigraph(&vars, w.lambda1, w.lambda2(), w.q1_star, w.q2_star)?;
            constraints.extend(pair.into_iter().map(Constraint::Affine));
            let mut f = LinearForm::default();
            f.add_scalar(vars.tau.expect("declared"), 1.0);
            (ProblemLabel::P3 { lambda1: w.lambda1 }, f)
        }
    };

    let mut bindings = vec![Binding::Free; vars.table.len()];
    for id in idle_multipliers(&vars, realization) {
        bindings[id.0] = Binding::Fixed(Value::Scalar(0.0));
    }
    if let Some(dirs) = directions {
        if dirs.len() != vars.k() {
            return Err(Error::Validation(format!(
                "expected {} beam directions, got {}",
                vars.k(),
                dirs.len()
            )));
        }
        let powers = vars.dl_power.clone().expect("declared");
        for (k, d) in dirs.iter().enumerate() {
            bindings[vars.w[k].0] = Binding::RankOne {
                power: powers[k],
                direction: d.clone(),
            };
        }
    }
    let scales = scale_hints(&vars, realization, config, weights)?;
    let program = ConicProgram {
        label,
        vars,
        bindings,
        scales,
        objective,
        constraints,
    };
    program.validate()?;
    Ok(program)
}

impl ConicProgram {
    pub fn validate(&self) -> Result<()> {
        let table = &self.vars.table;
        let check = |id: VarId, what: &str| -> Result<()> {
            if table.contains(id) {
                Ok(())
            } else {
                Err(Error::Validation(format!("{what} references undeclared variable {}", id.0)))
            }
        };
        for id in self.objective.vars() {
            check(id, "objective")?;
        }
        for c in &self.constraints {
            for id in c.vars() {
                check(id, c.name())?;
            }
        }
        if self.bindings.len() != table.len() || self.scales.len() != table.len() {
            return Err(Error::Validation("binding/scale table size mismatch".into()));
        }
        for (i, b) in self.bindings.iter().enumerate() {
            let kind = table.get(VarId(i)).kind;
            let ok = match b {
                Binding::Free => true,
                Binding::Fixed(Value::Scalar(_)) => matches!(kind, VarKind::Scalar { .. }),
                Binding::Fixed(Value::Hermitian(h)) => {
                    matches!(kind, VarKind::Hermitian { dim, .. } if dim == h.dim())
                }
                Binding::RankOne { power, direction } => {
                    table.contains(*power)
                        && matches!(table.get(*power).kind, VarKind::Scalar { .. })
                        && matches!(self.bindings[power.0], Binding::Free)
                        && matches!(kind, VarKind::Hermitian { dim, .. } if dim == direction.len())
                }
            };
            if !ok {
                return Err(Error::Validation(format!(
                    "binding of {} does not match its declaration",
                    table.get(VarId(i)).name
                )));
            }
        }
        Ok(())
    }

    /// Copy of this program with every variable except the downlink
    /// covariances frozen at `values`, minimizing `Σ Tr(W_k) + Tr(Z)`.
    pub fn stage2(&self, values: &Assignment) -> ConicProgram {
        let mut bindings: Vec<Binding> = self
            .vars
            .table
            .iter()
            .map(|(id, _)| match &self.bindings[id.0] {
                Binding::Fixed(v) => Binding::Fixed(v.clone()),
                _ => Binding::Fixed(values.0[id.0].clone()),
            })
            .collect();
        for &w in &self.vars.w {
            bindings[w.0] = Binding::Free;
        }
        let n_t = self.vars.table.get(self.vars.z).kind.real_dim().isqrt();
        ConicProgram {
            label: ProblemLabel::Stage2,
            vars: self.vars.clone(),
            bindings,
            scales: self.scales.clone(),
            objective: total_dl_power(&self.vars, n_t),
            constraints: self.constraints.clone(),
        }
    }

    pub fn lower(&self) -> LoweredProgram {
        lower::lower(self)
    }

    /// Largest normalized violation of any constraint or variable domain at
    /// `values`.
    pub fn max_violation(&self, values: &Assignment) -> f64 {
        let lp = self.lower();
        lp.max_violation(&lp.params_from(self, values))
    }

    /// Whether the beamformers are left unpriced by the objective, so a
    /// rank-reduction pass may be needed.
    pub fn allows_stage2(&self) -> bool {
        matches!(self.label, ProblemLabel::P2 | ProblemLabel::P3 { lambda1: 0.0 })
    }
}

/// Solves `program` on `backend` and maps the result back to model units.
pub fn solve(program: &ConicProgram, backend: &dyn ConicBackend) -> SolveReport {
    solve_with(program, backend, false)
}

fn solve_with(program: &ConicProgram, backend: &dyn ConicBackend, refinement: bool) -> SolveReport {
    let start = Instant::now();
    let lowered = program.lower();
    let real = lowered.to_real_cone();
    let sol = if refinement {
        backend.solve_refinement(&real)
    } else {
        backend.solve(&real)
    };
    let values = sol.x.as_ref().map(|y| lowered.assignment_from(program, y));
    let max_violation = sol
        .x
        .as_ref()
        .map_or(f64::INFINITY, |y| lowered.max_violation(y));
    let mut margin = None;
    let status = match sol.status {
        BackendStatus::Solved => SolveStatus::Optimal,
        BackendStatus::AlmostSolved if max_violation <= FEAS_TOL => SolveStatus::Optimal,
        BackendStatus::Infeasible => SolveStatus::Infeasible,
        _ => {
            // Interior-point runs on infeasible instances sometimes stall
            // before certifying; settle them with the margin problem.
            let m = backend.solve(&real.margin_problem());
            margin = match (m.status, m.x) {
                (BackendStatus::Solved | BackendStatus::AlmostSolved, Some(x)) => x.last().copied(),
                _ => None,
            };
            match margin {
                Some(s) if s > FEAS_TOL => SolveStatus::Infeasible,
                _ => SolveStatus::NumericalFailure,
            }
        }
    };
    let objective = values.as_ref().map_or(f64::NAN, |v| program.objective.eval(v));
    let dual_objective = sol.dual_objective.map(|d| lowered.objective_to_physical(d));
    let relative_gap = match (sol.primal_objective, sol.dual_objective) {
        (Some(p), Some(d)) => Some((p - d).abs() / p.abs().max(1.0)),
        _ => None,
    };
    SolveReport {
        status,
        backend_status: sol.status,
        objective,
        dual_objective,
        relative_gap,
        values,
        max_violation,
        infeasibility_margin: margin,
        solve_time: start.elapsed(),
        iterations: sol.iterations,
    }
}

/// Scalar values of `ids`.
pub(crate) fn scalar_values(values: &Assignment, ids: &[VarId]) -> Vec<f64> {
    ids.iter().map(|&id| values.scalar(id)).collect()
}
