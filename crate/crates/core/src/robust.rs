//! Robust constraint builders.
//!
//! The semi-infinite SINR and leakage constraints over the CSI uncertainty
//! balls become finite LMIs through the S-procedure; the uplink SINR and
//! the Tchebycheff epigraph become affine constraints. All builders are
//! pure and reference decision variables through [`ModelVars`].
//!
//! Block layouts, with `σ²` the relevant noise power:
//!
//! * Downlink SINR, user `k` (dimension `J + 1`, multiplier `δ_k`):
//!   `[[δI − P, −P f̂], [−f̂ᴴP, c − Σ_j P_j|f̂_j|² − δε²]]` where
//!   `c = hᴴ(W_k/Γ − Σ_{r≠k} W_r − Z)h − σ²` and `P = diag(P_j)`.
//! * Downlink leakage, `(k, m)` (dimension `N_R + N_T`, multiplier `t`):
//!   `B ᴴ(ξZ − W_k)B + diag((ξσ² − t)I, tε⁻²I)` with `B = [L̂  I]`.
//! * Uplink leakage, `(j, m)`, split through the slack `M`:
//!   `−P [ê;1][ê;1]ᴴ + diag(M − αI, αε⁻²)` (dimension `N_R + 1`) and
//!   `ξ BᴴZB + diag((ξσ² − β)I − M, βε⁻²I)` (dimension `N_R + N_T`).
//!
//! A zero radius turns a block into the direct constraint at the estimate
//! and its multiplier is pinned to zero by the caller.

use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, CVector, HermitianMatrix, C64};
use crate::model::{AffineConstraint, Constraint, LinearForm, LmiBlock, Sense, VarId, VarTable};
use crate::phy::zf_receivers;
use crate::scenario::{ChannelRealization, SystemConfig};

/// Identifiers of every decision variable of the robust program.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelVars {
    pub table: VarTable,
    pub w: Vec<VarId>,
    pub z: VarId,
    pub p: Vec<VarId>,
    pub delta: Vec<VarId>,
    /// `t[k][m]`.
    pub t: Vec<Vec<VarId>>,
    /// `alpha[j][m]`.
    pub alpha: Vec<Vec<VarId>>,
    /// `beta[j][m]`.
    pub beta: Vec<Vec<VarId>>,
    /// `m_slack[j][m]`.
    pub m_slack: Vec<Vec<VarId>>,
    pub tau: Option<VarId>,
    /// Per-user downlink powers when beam directions are fixed.
    pub dl_power: Option<Vec<VarId>>,
}

impl ModelVars {
    pub fn declare(k: usize, j: usize, m: usize, n_t: usize, n_r: usize, epigraph: bool) -> Self {
        let mut table = VarTable::new();
        let w = (0..k).map(|i| table.add_hermitian(format!("W[{i}]"), n_t, true)).collect();
        let z = table.add_hermitian("Z", n_t, true);
        let m_slack = (0..j)
            .map(|jj| (0..m).map(|mm| table.add_hermitian(format!("M[{jj}][{mm}]"), n_r, false)).collect())
            .collect();
        let p = (0..j).map(|i| table.add_scalar(format!("P[{i}]"), true)).collect();
        let delta = (0..k).map(|i| table.add_scalar(format!("delta[{i}]"), true)).collect();
        let t = (0..k)
            .map(|kk| (0..m).map(|mm| table.add_scalar(format!("t[{kk}][{mm}]"), true)).collect())
            .collect();
        let alpha = (0..j)
            .map(|jj| (0..m).map(|mm| table.add_scalar(format!("alpha[{jj}][{mm}]"), true)).collect())
            .collect();
        let beta = (0..j)
            .map(|jj| (0..m).map(|mm| table.add_scalar(format!("beta[{jj}][{mm}]"), true)).collect())
            .collect();
        let tau = epigraph.then(|| table.add_scalar("tau", false));
        Self {
            table,
            w,
            z,
            p,
            delta,
            t,
            alpha,
            beta,
            m_slack,
            tau,
            dl_power: None,
        }
    }

    pub fn for_config(config: &SystemConfig, epigraph: bool) -> Self {
        Self::declare(config.k, config.j, config.m, config.n_t, config.n_r, epigraph)
    }

    /// Adds one nonnegative power scalar per downlink user.
    pub fn with_dl_powers(mut self) -> Self {
        let ids = (0..self.w.len())
            .map(|i| self.table.add_scalar(format!("p[{i}]"), true))
            .collect();
        self.dl_power = Some(ids);
        self
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }
    pub fn j(&self) -> usize {
        self.p.len()
    }
    pub fn m(&self) -> usize {
        self.t.first().map_or(0, Vec::len)
    }
}

/// Downlink SINR block for user `k`. `f_hat_k[j]` are the estimated
/// co-channel gains and `eps_k` the stacked radius.
pub fn build_c1_lmi(
    vars: &ModelVars,
    k: usize,
    f_hat_k: &[C64],
    eps_k: f64,
    h_k: &CVector,
    gamma: f64,
    sigma_sq: f64,
) -> Result<LmiBlock> {
    if !(gamma > 0.0) {
        return Err(Error::Validation(format!("SINR target must be positive, got {gamma}")));
    }
    let j = vars.j();
    let robust = eps_k > 0.0 && j > 0;
    let dim = if robust { j + 1 } else { 1 };
    let corner = dim - 1;

    let mut constant = CMatrix::zeros(dim, dim);
    constant[(corner, corner)] = C64::new(-sigma_sq, 0.0);
    let mut block = LmiBlock::new(format!("sinr_dl[{k}]"), HermitianMatrix::symmetrized(constant));

    // B_h = [0 h]: only the corner sees the beamformers and the noise.
    let mut b_h = CMatrix::zeros(h_k.len(), dim);
    b_h.set_column(corner, h_k);
    for (r, &wr) in vars.w.iter().enumerate() {
        let coeff = if r == k { 1.0 / gamma } else { -1.0 };
        block = block.congruence(wr, b_h.clone(), coeff);
    }
    block = block.congruence(vars.z, b_h, -1.0);

    for (jj, (&pj, f)) in vars.p.iter().zip(f_hat_k).enumerate() {
        let mut c = CMatrix::zeros(dim, dim);
        c[(corner, corner)] = C64::new(-f.norm_sqr(), 0.0);
        if robust {
            c[(jj, jj)] = C64::new(-1.0, 0.0);
            c[(jj, corner)] = -f;
            c[(corner, jj)] = -f.conj();
        }
        block = block.scaled(pj, HermitianMatrix::symmetrized(c));
    }

    if robust {
        let mut d = vec![1.0; dim];
        d[corner] = -eps_k * eps_k;
        block = block.scaled(vars.delta[k], HermitianMatrix::from_real_diagonal(&d));
    }
    Ok(block)
}

/// `ρ H_SIᴴ diag(|v|²) H_SI`: self-interference seen through receiver `v`.
pub fn si_coupling(h_si: &CMatrix, v: &CVector, rho: f64) -> HermitianMatrix {
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        v.len(),
        v.iter().map(|x| C64::new(x.norm_sqr(), 0.0)),
    ));
    HermitianMatrix::symmetrized(h_si.adjoint() * d * h_si * C64::new(rho, 0.0))
}

/// Uplink SINR constraint for user `j`, affine in `(P, Z, W)`.
#[allow(clippy::too_many_arguments)]
pub fn build_c2(
    vars: &ModelVars,
    j: usize,
    v: &[CVector],
    g: &[CVector],
    rho: f64,
    h_si: &CMatrix,
    sigma_sq: f64,
    gamma: f64,
) -> AffineConstraint {
    let vj = &v[j];
    let mut form = LinearForm::constant(-gamma * sigma_sq * vj.norm_squared());
    for (n, &pn) in vars.p.iter().enumerate() {
        let gain = vj.dotc(&g[n]).norm_sqr();
        form.add_scalar(pn, if n == j { gain } else { -gamma * gain });
    }
    let c = si_coupling(h_si, vj, rho) * -gamma;
    for &wk in &vars.w {
        form.add_matrix(wk, c.clone());
    }
    form.add_matrix(vars.z, c);
    AffineConstraint {
        name: format!("sinr_ul[{j}]"),
        form,
        sense: Sense::NonNegative,
    }
}

/// `[L̂  I]`, N_T × (N_R + N_T).
fn b_l(l_hat: &CMatrix) -> CMatrix {
    let (n_t, n_r) = l_hat.shape();
    let mut b = CMatrix::zeros(n_t, n_r + n_t);
    b.view_mut((0, 0), (n_t, n_r)).copy_from(l_hat);
    b.view_mut((0, n_r), (n_t, n_t)).fill_with_identity();
    b
}

/// Downlink leakage block for user `k` and eavesdropper `m`.
pub fn build_c3_lmi(
    vars: &ModelVars,
    k: usize,
    m: usize,
    l_hat: &CMatrix,
    eps: f64,
    xi: f64,
    sigma_e_sq: f64,
) -> LmiBlock {
    let (n_t, n_r) = l_hat.shape();
    let name = format!("leak_dl[{k}][{m}]");
    if eps > 0.0 {
        let dim = n_r + n_t;
        let mut c = vec![0.0; dim];
        c[..n_r].fill(xi * sigma_e_sq);
        let mut td = vec![-1.0; dim];
        td[n_r..].fill(1.0 / (eps * eps));
        let b = b_l(l_hat);
        LmiBlock::new(name, HermitianMatrix::from_real_diagonal(&c))
            .congruence(vars.z, b.clone(), xi)
            .congruence(vars.w[k], b, -1.0)
            .scaled(vars.t[k][m], HermitianMatrix::from_real_diagonal(&td))
    } else {
        LmiBlock::new(name, HermitianMatrix::identity(n_r) * (xi * sigma_e_sq))
            .congruence(vars.z, l_hat.clone(), xi)
            .congruence(vars.w[k], l_hat.clone(), -1.0)
    }
}

/// Uplink leakage blocks for user `j` and eavesdropper `m`: the
/// `(ê, ε_UL)` half bounding `P eeᴴ ⪯ M` and the `(L̂, ε_DL)` half bounding
/// `M ⪯ ξX`.
#[allow(clippy::too_many_arguments)]
pub fn build_c4_lmis(
    vars: &ModelVars,
    j: usize,
    m: usize,
    e_hat: &CVector,
    eps_ul: f64,
    l_hat: &CMatrix,
    eps_dl: f64,
    xi: f64,
    sigma_e_sq: f64,
) -> (LmiBlock, LmiBlock) {
    let (n_t, n_r) = l_hat.shape();
    let slack = vars.m_slack[j][m];

    let a = if eps_ul > 0.0 {
        let dim = n_r + 1;
        let mut ext = CVector::zeros(dim);
        ext.rows_mut(0, n_r).copy_from(e_hat);
        ext[n_r] = C64::new(1.0, 0.0);
        let mut ad = vec![-1.0; dim];
        ad[n_r] = 1.0 / (eps_ul * eps_ul);
        let mut sel = CMatrix::zeros(n_r, dim);
        sel.view_mut((0, 0), (n_r, n_r)).fill_with_identity();
        LmiBlock::new(format!("leak_ul_a[{j}][{m}]"), HermitianMatrix::zeros(dim))
            .scaled(vars.p[j], HermitianMatrix::outer(&ext) * -1.0)
            .congruence(slack, sel, 1.0)
            .scaled(vars.alpha[j][m], HermitianMatrix::from_real_diagonal(&ad))
    } else {
        LmiBlock::new(format!("leak_ul_a[{j}][{m}]"), HermitianMatrix::zeros(n_r))
            .scaled(vars.p[j], HermitianMatrix::outer(e_hat) * -1.0)
            .congruence(slack, CMatrix::identity(n_r, n_r), 1.0)
    };

    let b = if eps_dl > 0.0 {
        let dim = n_r + n_t;
        let mut c = vec![0.0; dim];
        c[..n_r].fill(xi * sigma_e_sq);
        let mut bd = vec![-1.0; dim];
        bd[n_r..].fill(1.0 / (eps_dl * eps_dl));
        let mut sel = CMatrix::zeros(n_r, dim);
        sel.view_mut((0, 0), (n_r, n_r)).fill_with_identity();
        LmiBlock::new(format!("leak_ul_b[{j}][{m}]"), HermitianMatrix::from_real_diagonal(&c))
            .congruence(vars.z, b_l(l_hat), xi)
            .congruence(slack, sel, -1.0)
            .scaled(vars.beta[j][m], HermitianMatrix::from_real_diagonal(&bd))
    } else {
        LmiBlock::new(
            format!("leak_ul_b[{j}][{m}]"),
            HermitianMatrix::identity(n_r) * (xi * sigma_e_sq),
        )
        .congruence(vars.z, l_hat.clone(), xi)
        .congruence(slack, CMatrix::identity(n_r, n_r), -1.0)
    };
    (a, b)
}

/// Epigraph pair `τ − λ₁(Σ Tr W + Tr Z − Q₁*) ≥ 0`, `τ − λ₂(Σ P − Q₂*) ≥ 0`.
pub fn build_epigraph(
    vars: &ModelVars,
    lambda1: f64,
    lambda2: f64,
    q1_star: f64,
    q2_star: f64,
) -> Result<[AffineConstraint; 2]> {
    let tau = vars
        .tau
        .ok_or_else(|| Error::Validation("epigraph requires a tau variable".into()))?;
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) || (lambda1 + lambda2 - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "weights must be nonnegative and sum to one, got ({lambda1}, {lambda2})"
        )));
    }
    if !q1_star.is_finite() || !q2_star.is_finite() {
        return Err(Error::Validation("anchor values must be finite".into()));
    }
    let n_t = vars.table.get(vars.z).kind.real_dim().isqrt();
    let mut dl = LinearForm::constant(lambda1 * q1_star);
    dl.add_scalar(tau, 1.0);
    for &w in vars.w.iter().chain(std::iter::once(&vars.z)) {
        dl.add_matrix(w, HermitianMatrix::identity(n_t) * -lambda1);
    }
    let mut ul = LinearForm::constant(lambda2 * q2_star);
    ul.add_scalar(tau, 1.0);
    for &p in &vars.p {
        ul.add_scalar(p, -lambda2);
    }
    Ok([
        AffineConstraint {
            name: "epigraph_dl".into(),
            form: dl,
            sense: Sense::NonNegative,
        },
        AffineConstraint {
            name: "epigraph_ul".into(),
            form: ul,
            sense: Sense::NonNegative,
        },
    ])
}

/// Every robust constraint of a drop, in a fixed order: downlink SINR,
/// uplink SINR, downlink leakage, uplink leakage.
pub fn build_robust_constraints(
    vars: &ModelVars,
    realization: &ChannelRealization,
    config: &SystemConfig,
) -> Result<Vec<Constraint>> {
    let v = zf_receivers(&realization.g)?;
    let sigma_e = config.sigma_eve_sq();
    let mut out = Vec::new();
    for k in 0..realization.k() {
        out.push(Constraint::Lmi(build_c1_lmi(
            vars,
            k,
            &realization.f_hat_col(k),
            realization.eps_stacked(k),
            &realization.h[k],
            config.gamma_dl(),
            config.sigma_dl_sq(),
        )?));
    }
    for j in 0..realization.j() {
        out.push(Constraint::Affine(build_c2(
            vars,
            j,
            &v,
            &realization.g,
            config.rho(),
            &realization.h_si,
            config.sigma_ul_sq(),
            config.gamma_ul(),
        )));
    }
    for k in 0..realization.k() {
        for m in 0..realization.m() {
            out.push(Constraint::Lmi(build_c3_lmi(
                vars,
                k,
                m,
                &realization.l_hat[m],
                realization.eps_dl[m],
                config.xi_dl(),
                sigma_e,
            )));
        }
    }
    for j in 0..realization.j() {
        for m in 0..realization.m() {
            let (a, b) = build_c4_lmis(
                vars,
                j,
                m,
                &realization.e_hat[j][m],
                realization.eps_ul[j][m],
                &realization.l_hat[m],
                realization.eps_dl[m],
                config.xi_ul(),
                sigma_e,
            );
            out.push(Constraint::Lmi(a));
            out.push(Constraint::Lmi(b));
        }
    }
    Ok(out)
}

/// Multipliers whose uncertainty radius is zero; they carry no meaning and
/// are pinned to zero.
pub fn idle_multipliers(vars: &ModelVars, realization: &ChannelRealization) -> Vec<VarId> {
    let mut out = Vec::new();
    for k in 0..vars.k() {
        if realization.eps_stacked(k) == 0.0 || vars.j() == 0 {
            out.push(vars.delta[k]);
        }
        for m in 0..vars.m() {
            if realization.eps_dl[m] == 0.0 {
                out.push(vars.t[k][m]);
            }
        }
    }
    for j in 0..vars.j() {
        for m in 0..vars.m() {
            if realization.eps_ul[j][m] == 0.0 {
                out.push(vars.alpha[j][m]);
            }
            if realization.eps_dl[m] == 0.0 {
                out.push(vars.beta[j][m]);
            }
        }
    }
    out
}
