//! Real-cone backend contract and the Clarabel implementation.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use nalgebra::DMatrix;

/// `constant + Σ a_i y_i`, required `≥ 0` or `= 0` depending on the list it
/// sits in.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRow {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

/// `constant + Σ y_i · M_i ⪰ 0` with real symmetric matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl PsdBlock {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }
}

impl RealConicProblem {
    /// Minimum-margin companion problem: a new last variable `s` is added to
    /// every inequality (`s·I` on PSD blocks) and minimized over `s ≥ −1`.
    /// The companion is strictly feasible, and its optimum is positive
    /// exactly when the original inequalities have no common solution.
    pub fn margin_problem(&self) -> RealConicProblem {
        let s = self.n;
        let mut nonneg: Vec<SparseRow> = self
            .nonneg
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.terms.push((s, 1.0));
                r
            })
            .collect();
        nonneg.push(SparseRow {
            constant: 1.0,
            terms: vec![(s, 1.0)],
        });
        let psd = self
            .psd
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.terms.push((s, DMatrix::identity(b.dim(), b.dim())));
                b
            })
            .collect();
        let mut objective = vec![0.0; s + 1];
        objective[s] = 1.0;
        RealConicProblem {
            n: s + 1,
            objective,
            zero: self.zero.clone(),
            nonneg,
            psd,
        }
    }
}

/// `minimize cᵀy` subject to affine equalities, affine nonnegativities and
/// real linear matrix inequalities.
#[derive(Clone, Debug, PartialEq)]
pub struct RealConicProblem {
    pub n: usize,
    pub objective: Vec<f64>,
    pub zero: Vec<SparseRow>,
    pub nonneg: Vec<SparseRow>,
    pub psd: Vec<PsdBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendStatus {
    Solved,
    AlmostSolved,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalError,
    SetupError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealSolution {
    pub status: BackendStatus,
    pub x: Option<Vec<f64>>,
    pub primal_objective: Option<f64>,
    pub dual_objective: Option<f64>,
    pub iterations: u32,
}

pub trait ConicBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &RealConicProblem) -> RealSolution;

    /// Solve used for rank reduction, where most variables are frozen and
    /// the feasible set is thin.
    fn solve_refinement(&self, problem: &RealConicProblem) -> RealSolution {
        self.solve(problem)
    }
}

/// Clarabel interior-point solver, single-threaded per solve.
#[derive(Clone, Debug)]
pub struct ClarabelBackend {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
    /// Static KKT regularization for ordinary solves.
    pub regularization: f64,
    /// Static KKT regularization for rank-reduction solves.
    pub refinement_regularization: f64,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self {
            tol_gap: 1e-10,
            tol_feas: 1e-10,
            max_iter: 300,
            regularization: 1e-8,
            refinement_regularization: 1e-6,
        }
    }
}

/// Column-major upper triangle with off-diagonals scaled by √2, the layout
/// of Clarabel's PSD triangle cone.
fn svec(m: &DMatrix<f64>, mut f: impl FnMut(usize, f64)) {
    let n = m.nrows();
    let mut idx = 0;
    for c in 0..n {
        for r in 0..=c {
            let v = if r == c { m[(r, c)] } else { m[(r, c)] * std::f64::consts::SQRT_2 };
            f(idx, v);
            idx += 1;
        }
    }
}

impl ClarabelBackend {
    fn settings(&self, regularization: f64) -> DefaultSettings<f64> {
        DefaultSettings {
            verbose: false,
            max_iter: self.max_iter,
            tol_gap_abs: self.tol_gap,
            tol_gap_rel: self.tol_gap,
            tol_feas: self.tol_feas,
            max_threads: 1,
            // Rows and blocks arrive already normalized; a second
            // equilibration pass costs accuracy on near-degenerate drops.
            equilibrate_enable: false,
            static_regularization_constant: regularization,
            ..DefaultSettings::default()
        }
    }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, problem: &RealConicProblem) -> RealSolution {
        self.run(problem, self.regularization)
    }

    fn solve_refinement(&self, problem: &RealConicProblem) -> RealSolution {
        self.run(problem, self.refinement_regularization)
    }
}

impl ClarabelBackend {
    fn run(&self, problem: &RealConicProblem, regularization: f64) -> RealSolution {
        let n = problem.n;
        let mut ii = Vec::new();
        let mut jj = Vec::new();
        let mut vv = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();

        // Clarabel form: A y + s = b, s in cone. Our blocks read
        // s = constant + Σ y_i M_i, so b = constant and A = −M.
        let mut push_rows = |rows: &[SparseRow], b: &mut Vec<f64>| {
            for r in rows {
                let row = b.len();
                b.push(r.constant);
                for &(i, a) in &r.terms {
                    ii.push(row);
                    jj.push(i);
                    vv.push(-a);
                }
            }
        };
        if !problem.zero.is_empty() {
            push_rows(&problem.zero, &mut b);
            cones.push(SupportedConeT::ZeroConeT(problem.zero.len()));
        }
        if !problem.nonneg.is_empty() {
            push_rows(&problem.nonneg, &mut b);
            cones.push(SupportedConeT::NonnegativeConeT(problem.nonneg.len()));
        }
        for blk in &problem.psd {
            let base = b.len();
            svec(&blk.constant, |_, v| b.push(v));
            for (i, m) in &blk.terms {
                svec(m, |k, v| {
                    if v != 0.0 {
                        ii.push(base + k);
                        jj.push(*i);
                        vv.push(-v);
                    }
                });
            }
            cones.push(SupportedConeT::PSDTriangleConeT(blk.dim()));
        }

        let a = CscMatrix::new_from_triplets(b.len(), n, ii, jj, vv);
        let p = CscMatrix::zeros((n, n));
        let mut solver = match DefaultSolver::new(&p, &problem.objective, &a, &b, &cones, self.settings(regularization)) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("clarabel setup failed: {e}");
                return RealSolution {
                    status: BackendStatus::SetupError,
                    x: None,
                    primal_objective: None,
                    dual_objective: None,
                    iterations: 0,
                };
            }
        };
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => BackendStatus::Solved,
            SolverStatus::AlmostSolved => BackendStatus::AlmostSolved,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => BackendStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => BackendStatus::Unbounded,
            SolverStatus::MaxIterations | SolverStatus::MaxTime => BackendStatus::IterationLimit,
            _ => BackendStatus::NumericalError,
        };
        let has_point = !matches!(status, BackendStatus::Infeasible | BackendStatus::Unbounded);
        let finite = |x: f64| x.is_finite().then_some(x);
        RealSolution {
            status,
            x: (has_point && sol.x.iter().all(|v| v.is_finite())).then(|| sol.x.clone()),
            primal_objective: if has_point { finite(sol.obj_val) } else { None },
            dual_objective: if has_point { finite(sol.obj_val_dual) } else { None },
            iterations: sol.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_lp() {
        // min y0 + y1 s.t. y0 ≥ 1, y1 ≥ 2.
        let p = RealConicProblem {
            n: 2,
            objective: vec![1.0, 1.0],
            zero: vec![],
            nonneg: vec![
                SparseRow { constant: -1.0, terms: vec![(0, 1.0)] },
                SparseRow { constant: -2.0, terms: vec![(1, 1.0)] },
            ],
            psd: vec![],
        };
        let s = ClarabelBackend::default().solve(&p);
        assert_eq!(s.status, BackendStatus::Solved);
        let x = s.x.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-7 && (x[1] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn small_sdp() {
        // min y s.t. [[y, 1], [1, y]] ⪰ 0 → y = 1.
        let p = RealConicProblem {
            n: 1,
            objective: vec![1.0],
            zero: vec![],
            nonneg: vec![],
            psd: vec![PsdBlock {
                constant: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
                terms: vec![(0, DMatrix::identity(2, 2))],
            }],
        };
        let s = ClarabelBackend::default().solve(&p);
        assert_eq!(s.status, BackendStatus::Solved);
        assert!((s.x.unwrap()[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_lp() {
        let p = RealConicProblem {
            n: 1,
            objective: vec![1.0],
            zero: vec![],
            nonneg: vec![
                SparseRow { constant: -1.0, terms: vec![(0, 1.0)] },
                SparseRow { constant: 0.0, terms: vec![(0, -1.0)] },
            ],
            psd: vec![],
        };
        assert_eq!(ClarabelBackend::default().solve(&p).status, BackendStatus::Infeasible);
    }
}
