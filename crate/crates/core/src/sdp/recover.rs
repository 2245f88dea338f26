use super::{solve_with, ConicBackend, ConicProgram, SolveReport};
use crate::error::{Error, Result};
use crate::hermitian::{canonical_phase, eig_hermitian, rank_one_ratio, C64, RANK_ONE_RATIO};
use crate::model::{Assignment, Value};
use crate::phy::{AllocationPolicy, Auxiliaries};

use super::scalar_values;

#[derive(Clone, Debug)]
pub struct Recovery {
    pub policy: AllocationPolicy,
    /// `λ₂/λ₁` of every `W_k` as returned by the first solve.
    pub stage1_ratios: Vec<f64>,
    /// Ratios of the covariances the beams were extracted from.
    pub ratios: Vec<f64>,
    pub stage2: Option<SolveReport>,
    /// Set when the final covariances are not rank one; the beams are then
    /// principal-eigenvector approximations.
    pub anomaly: bool,
    /// Normalized violation of the rank-one policy against the program.
    pub violation: f64,
}

impl Recovery {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

fn policy_from(program: &ConicProgram, values: &Assignment) -> AllocationPolicy {
    let v = &program.vars;
    let grid = |ids: &Vec<Vec<crate::model::VarId>>| ids.iter().map(|row| scalar_values(values, row)).collect();
    AllocationPolicy {
        w: v.w.iter().map(|&id| values.matrix(id).clone()).collect(),
        beams: None,
        z: values.matrix(v.z).clone(),
        p: scalar_values(values, &v.p),
        aux: Auxiliaries {
            tau: v.tau.map_or(0.0, |id| values.scalar(id)),
            delta: scalar_values(values, &v.delta),
            t: grid(&v.t),
            alpha: grid(&v.alpha),
            beta: grid(&v.beta),
            m_slack: v
                .m_slack
                .iter()
                .map(|row| row.iter().map(|&id| values.matrix(id).clone()).collect())
                .collect(),
        },
    }
}

/// Principal-eigenvector beams with `‖w‖² = Tr(W)` and the canonical phase.
fn extract_beams(policy: &mut AllocationPolicy) {
    let beams: Vec<_> = policy
        .w
        .iter()
        .map(|w| {
            let eig = eig_hermitian(w);
            let tr = w.trace().max(0.0);
            match eig.principal() {
                Some((_, u)) => canonical_phase(u) * C64::new(tr.sqrt(), 0.0),
                None => u_zero(w.dim()),
            }
        })
        .collect();
    *policy = AllocationPolicy {
        aux: std::mem::take(&mut policy.aux),
        ..AllocationPolicy::from_beams(beams, policy.z.clone(), policy.p.clone())
    };
}

fn u_zero(n: usize) -> crate::hermitian::CVector {
    crate::hermitian::CVector::zeros(n)
}

fn assignment_with_beams(program: &ConicProgram, values: &Assignment, policy: &AllocationPolicy) -> Assignment {
    let mut a = values.clone();
    for (k, &id) in program.vars.w.iter().enumerate() {
        a.set(id, Value::Hermitian(policy.w[k].clone()));
    }
    a
}

/// Extracts rank-one beamformers from an optimal solve. When the covariances
/// are not rank one and the program leaves them unpriced (uplink-only
/// objective), a second solve with everything else frozen minimizes the
/// downlink power, which yields rank-one covariances with the same uplink
/// powers.
pub fn recover_rank_one(
    program: &ConicProgram,
    report: &SolveReport,
    backend: &dyn ConicBackend,
) -> Result<Recovery> {
    let values = match (&report.values, report.is_optimal()) {
        (Some(v), true) => v,
        _ => {
            return Err(Error::Validation(format!(
                "rank-one recovery needs an optimal solve, got {}",
                report.status
            )))
        }
    };
    let ratios_of = |vals: &Assignment| -> Vec<f64> {
        program.vars.w.iter().map(|&id| rank_one_ratio(vals.matrix(id))).collect()
    };
    let stage1_ratios = ratios_of(values);
    let rank_one = |r: &[f64]| r.iter().all(|&x| x <= RANK_ONE_RATIO);

    let mut stage2 = None;
    let mut final_values = values.clone();
    let mut ratios = stage1_ratios.clone();
    if !rank_one(&ratios) && program.allows_stage2() {
        let second = program.stage2(values);
        let rep = solve_with(&second, backend, true);
        if rep.is_optimal() {
            let v2 = rep.values.clone().expect("optimal has values");
            ratios = ratios_of(&v2);
            final_values = v2;
        } else {
            log::warn!("rank-reduction solve ended {}", rep.status);
        }
        stage2 = Some(rep);
    }

    let mut policy = policy_from(program, &final_values);
    extract_beams(&mut policy);
    let violation = program.max_violation(&assignment_with_beams(program, &final_values, &policy));
    Ok(Recovery {
        policy,
        anomaly: !rank_one(&ratios),
        stage1_ratios,
        ratios,
        stage2,
        violation,
    })
}
