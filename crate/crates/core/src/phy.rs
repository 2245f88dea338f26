//! Link metrics: zero-forcing receivers, SINRs, eavesdropper capacities and
//! secrecy rates.
//!
//! Every metric takes the uncertain channels explicitly so the same code
//! evaluates true channels, estimates and adversarial samples.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, CVector, HermitianMatrix, C64};
use crate::scenario::{ChannelRealization, SystemConfig};

/// Relative singular-value floor below which a channel matrix is treated as
/// rank deficient.
pub const RANK_FLOOR: f64 = 1e-10;

/// Auxiliary variables of the robust program: the epigraph level and the
/// S-procedure multipliers and slacks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Auxiliaries {
    pub tau: f64,
    /// `delta[k]`.
    pub delta: Vec<f64>,
    /// `t[k][m]`.
    pub t: Vec<Vec<f64>>,
    /// `alpha[j][m]`.
    pub alpha: Vec<Vec<f64>>,
    /// `beta[j][m]`.
    pub beta: Vec<Vec<f64>>,
    /// `m_slack[j][m]`, N_R × N_R.
    pub m_slack: Vec<Vec<HermitianMatrix>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllocationPolicy {
    /// Downlink covariance per user. After rank-one recovery this holds
    /// `w wᴴ` for the recovered beam.
    pub w: Vec<HermitianMatrix>,
    pub beams: Option<Vec<CVector>>,
    /// Artificial-noise covariance.
    pub z: HermitianMatrix,
    /// Uplink transmit powers (W).
    pub p: Vec<f64>,
    pub aux: Auxiliaries,
}

impl AllocationPolicy {
    pub fn from_beams(beams: Vec<CVector>, z: HermitianMatrix, p: Vec<f64>) -> Self {
        let w = beams.iter().map(HermitianMatrix::outer).collect();
        Self {
            w,
            beams: Some(beams),
            z,
            p,
            aux: Auxiliaries::default(),
        }
    }

    /// Total downlink power `Σ Tr(W_k) + Tr(Z)`.
    pub fn q1(&self) -> f64 {
        self.w.iter().map(HermitianMatrix::trace).sum::<f64>() + self.z.trace()
    }

    /// Total uplink power `Σ P_j`.
    pub fn q2(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn w_sum(&self) -> HermitianMatrix {
        let n = self.z.dim();
        self.w.iter().fold(HermitianMatrix::zeros(n), |acc, w| acc + w.clone())
    }
}

/// Moore-Penrose pseudo-inverse of a full-column-rank matrix.
fn left_pinv(q: &CMatrix) -> Result<CMatrix> {
    let svd = q.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_FLOOR * smax {
        return Err(Error::DegenerateChannel(format!(
            "channel matrix rank deficient (sigma_min/sigma_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    svd.pseudo_inverse(0.0).map_err(|e| Error::DegenerateChannel(e.to_string()))
}

/// Zero-forcing receivers `v_j = (u_j Q†)ᴴ`, `Q = [g_1 … g_J]`, so that
/// `v_jᴴ g_n = δ_{jn}`.
pub fn zf_receivers(g: &[CVector]) -> Result<Vec<CVector>> {
    if g.is_empty() {
        return Ok(Vec::new());
    }
    let n_t = g[0].len();
    if g.len() > n_t {
        return Err(Error::DegenerateChannel(format!(
            "{} uplink users exceed {} receive antennas",
            g.len(),
            n_t
        )));
    }
    let q = CMatrix::from_columns(g);
    let pinv = left_pinv(&q)?;
    Ok((0..g.len()).map(|j| pinv.row(j).adjoint()).collect())
}

/// Downlink SINR at user `k` with co-channel channels `f_k[j]`.
pub fn dl_sinr(
    k: usize,
    h: &[CVector],
    policy: &AllocationPolicy,
    f_k: &[C64],
    sigma_sq: f64,
) -> f64 {
    let hk = &h[k];
    let signal = policy.w[k].quadratic_form(hk);
    let mui: f64 = (0..policy.w.len())
        .filter(|&r| r != k)
        .map(|r| policy.w[r].quadratic_form(hk))
        .sum();
    let cci: f64 = f_k.iter().zip(&policy.p).map(|(f, p)| p * f.norm_sqr()).sum();
    let an = policy.z.quadratic_form(hk);
    signal / (mui + cci + an + sigma_sq)
}

/// Per-antenna residual self-interference power `ρ·diag(H_SI (Z + Σ W) H_SIᴴ)`.
pub fn si_diagonal(h_si: &CMatrix, policy: &AllocationPolicy, rho: f64) -> Vec<f64> {
    let total = (policy.w_sum() + policy.z.clone()).into_inner();
    let s = h_si * total * h_si.adjoint();
    (0..s.nrows()).map(|n| rho * s[(n, n)].re).collect()
}

/// Uplink SINR of user `j` after receiver `v[j]`.
pub fn ul_sinr(
    j: usize,
    g: &[CVector],
    v: &[CVector],
    h_si: &CMatrix,
    policy: &AllocationPolicy,
    rho: f64,
    sigma_sq: f64,
) -> f64 {
    let vj = &v[j];
    let gain = |n: usize| vj.dotc(&g[n]).norm_sqr();
    let signal = policy.p[j] * gain(j);
    let mui: f64 = (0..g.len()).filter(|&n| n != j).map(|n| policy.p[n] * gain(n)).sum();
    let si: f64 = si_diagonal(h_si, policy, rho)
        .iter()
        .zip(vj.iter())
        .map(|(d, x)| d * x.norm_sqr())
        .sum();
    signal / (mui + si + sigma_sq * vj.norm_squared())
}

/// `log2 det(A)` for Hermitian positive definite `A`.
fn log2_det_hpd(a: &CMatrix) -> f64 {
    match Cholesky::new(a.clone()) {
        Some(c) => {
            let l = c.l_dirty();
            2.0 * (0..a.nrows()).map(|i| l[(i, i)].re.abs().log2()).sum::<f64>()
        }
        None => {
            let h = HermitianMatrix::symmetrized(a.clone());
            crate::hermitian::eig_hermitian(&h)
                .values
                .iter()
                .map(|&x| x.max(f64::MIN_POSITIVE).log2())
                .sum()
        }
    }
}

/// Eavesdropper interference-plus-noise covariance `Lᴴ Z L + σ² I`.
pub fn eve_covariance(l: &CMatrix, z: &HermitianMatrix, sigma_sq: f64) -> CMatrix {
    let n_r = l.ncols();
    l.adjoint() * z.as_matrix() * l + CMatrix::identity(n_r, n_r) * C64::new(sigma_sq, 0.0)
}

/// `log2 det(I + X⁻¹ A)` evaluated as `log2 det(X + A) − log2 det(X)`.
fn leakage(x: &CMatrix, a: &CMatrix) -> f64 {
    let sum = x + a;
    (log2_det_hpd(&sum) - log2_det_hpd(x)).max(0.0)
}

/// Capacity of eavesdropper `L` for downlink covariance `W_k`.
pub fn eve_dl_capacity(w_k: &HermitianMatrix, z: &HermitianMatrix, l: &CMatrix, sigma_sq: f64) -> f64 {
    let x = eve_covariance(l, z, sigma_sq);
    let a = l.adjoint() * w_k.as_matrix() * l;
    leakage(&x, &a)
}

/// Capacity of eavesdropper `(e, L)` for uplink power `p_j`.
pub fn eve_ul_capacity(p_j: f64, e: &CVector, z: &HermitianMatrix, l: &CMatrix, sigma_sq: f64) -> f64 {
    let x = eve_covariance(l, z, sigma_sq);
    let a = e * e.adjoint() * C64::new(p_j, 0.0);
    leakage(&x, &a)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SecrecyRates {
    pub dl: Vec<f64>,
    pub ul: Vec<f64>,
}

impl SecrecyRates {
    pub fn min_dl(&self) -> Option<f64> {
        self.dl.iter().copied().reduce(f64::min)
    }
    pub fn min_ul(&self) -> Option<f64> {
        self.ul.iter().copied().reduce(f64::min)
    }
    /// Total downlink secrecy rate divided by K.
    pub fn avg_dl(&self) -> Option<f64> {
        (!self.dl.is_empty()).then(|| self.dl.iter().sum::<f64>() / self.dl.len() as f64)
    }
    pub fn avg_ul(&self) -> Option<f64> {
        (!self.ul.is_empty()).then(|| self.ul.iter().sum::<f64>() / self.ul.len() as f64)
    }
}

/// Uncertain links as seen by an evaluator: co-channel `f[(j, k)]`,
/// eavesdropper `l[m]` and `e[j][m]`.
#[derive(Clone, Copy, Debug)]
pub struct UncertainLinks<'a> {
    pub f: &'a DMatrix<C64>,
    pub l: &'a [CMatrix],
    pub e: &'a [Vec<CVector>],
}

impl<'a> UncertainLinks<'a> {
    pub fn truth(r: &'a ChannelRealization) -> Self {
        Self {
            f: &r.f_true,
            l: &r.l_true,
            e: &r.e_true,
        }
    }
    pub fn estimate(r: &'a ChannelRealization) -> Self {
        Self {
            f: &r.f_hat,
            l: &r.l_hat,
            e: &r.e_hat,
        }
    }
}

/// Per-user secrecy rates `[log2(1 + SINR) − max_m C_eve]⁺`. An empty set
/// of eavesdroppers leaks nothing.
pub fn secrecy_rates(
    realization: &ChannelRealization,
    links: UncertainLinks<'_>,
    policy: &AllocationPolicy,
    config: &SystemConfig,
) -> Result<SecrecyRates> {
    let v = zf_receivers(&realization.g)?;
    let sigma_e = config.sigma_eve_sq();
    let dl = (0..realization.k())
        .map(|k| {
            let f_k: Vec<C64> = links.f.column(k).iter().copied().collect();
            let rate = (1.0 + dl_sinr(k, &realization.h, policy, &f_k, config.sigma_dl_sq())).log2();
            let leak = links
                .l
                .iter()
                .map(|l| eve_dl_capacity(&policy.w[k], &policy.z, l, sigma_e))
                .fold(0.0, f64::max);
            (rate - leak).max(0.0)
        })
        .collect();
    let ul = (0..realization.j())
        .map(|j| {
            let sinr = ul_sinr(
                j,
                &realization.g,
                &v,
                &realization.h_si,
                policy,
                config.rho(),
                config.sigma_ul_sq(),
            );
            let leak = (0..links.l.len())
                .map(|m| eve_ul_capacity(policy.p[j], &links.e[j][m], &policy.z, &links.l[m], sigma_e))
                .fold(0.0, f64::max);
            ((1.0 + sinr).log2() - leak).max(0.0)
        })
        .collect();
    Ok(SecrecyRates { dl, ul })
}
