//! Network drops: geometry, path loss, small-scale fading and the
//! norm-bounded CSI uncertainty attached to the imperfectly known links.
//!
//! The base station sits at the origin. Every user and potential
//! eavesdropper is placed at a distance drawn uniformly between the
//! reference and the maximum service distance, at a uniform angle. Links
//! touching the base station get the array gain; user-to-user and
//! user-to-eavesdropper links do not.
//!
//! Path loss is log-distance anchored at free space:
//! `PL(d) = FSPL(d_ref, f_c) + 10·α·log10(d / d_ref)`. Noise powers are
//! interpreted as total in-band powers, not densities.
//!
//! Imperfect links (co-channel interference `f`, base-station-to-eavesdropper
//! `L`, uplink-user-to-eavesdropper `e`) carry an estimate and a radius
//! `ε = κ·‖true channel‖`. The estimation error is drawn uniformly inside that
//! ball and `estimate = truth − error`, so the truth always lies inside the
//! ball around the estimate.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, CVector, C64};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

/// Scenario constants. Field names carry their units; defaults mirror the
/// reference system parameters (K=3, J=7, M=2, N_T=10, N_R=2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Downlink users.
    pub k: usize,
    /// Uplink users.
    pub j: usize,
    /// Potential eavesdroppers.
    pub m: usize,
    /// Base-station antennas.
    pub n_t: usize,
    /// Antennas per eavesdropper.
    pub n_r: usize,
    pub gamma_dl_req_db: f64,
    pub gamma_ul_req_db: f64,
    /// Tolerable eavesdropper rate on downlink data (bit/s/Hz).
    pub r_tol_dl: f64,
    /// Tolerable eavesdropper rate on uplink data (bit/s/Hz).
    pub r_tol_ul: f64,
    /// Residual self-interference constant.
    pub rho_db: f64,
    pub sigma_dl_dbm: f64,
    pub sigma_ul_dbm: f64,
    pub sigma_eve_dbm: f64,
    pub antenna_gain_dbi: f64,
    /// Maximum normalized estimation error `ε²/‖channel‖²`, same for all
    /// imperfect links.
    pub kappa_est_sq: f64,
    pub path_loss_exponent: f64,
    pub ref_distance_m: f64,
    pub max_distance_m: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub rician_factor_db: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            k: 3,
            j: 7,
            m: 2,
            n_t: 10,
            n_r: 2,
            gamma_dl_req_db: 10.0,
            gamma_ul_req_db: 5.0,
            r_tol_dl: 1.0,
            r_tol_ul: 1.0,
            rho_db: -80.0,
            sigma_dl_dbm: -100.0,
            sigma_ul_dbm: -110.0,
            sigma_eve_dbm: -100.0,
            antenna_gain_dbi: 10.0,
            kappa_est_sq: 0.05,
            path_loss_exponent: 3.6,
            ref_distance_m: 30.0,
            max_distance_m: 600.0,
            carrier_hz: 1.9e9,
            bandwidth_hz: 200e3,
            rician_factor_db: 5.0,
        }
    }
}

impl SystemConfig {
    /// Reduced cell that keeps every structural feature (self-interference,
    /// co-channel interference, artificial noise, robustness) while solving
    /// in well under a second.
    pub fn desk_scale() -> Self {
        Self {
            k: 2,
            j: 3,
            m: 1,
            n_t: 6,
            n_r: 2,
            ..Self::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.k == 0 {
            return fail("at least one downlink user is required".into());
        }
        if self.n_t <= 1 {
            return fail(format!("n_t must exceed 1, got {}", self.n_t));
        }
        if self.n_t < self.j {
            return fail(format!("n_t ({}) must be at least j ({})", self.n_t, self.j));
        }
        if self.n_t < self.k {
            return fail(format!("n_t ({}) must be at least k ({})", self.n_t, self.k));
        }
        if self.n_r == 0 || self.n_r >= self.n_t {
            return fail(format!(
                "need 1 <= n_r < n_t, got n_r={} n_t={}",
                self.n_r, self.n_t
            ));
        }
        let finite = [
            self.gamma_dl_req_db,
            self.gamma_ul_req_db,
            self.r_tol_dl,
            self.r_tol_ul,
            self.rho_db,
            self.sigma_dl_dbm,
            self.sigma_ul_dbm,
            self.sigma_eve_dbm,
            self.antenna_gain_dbi,
            self.kappa_est_sq,
            self.path_loss_exponent,
            self.ref_distance_m,
            self.max_distance_m,
            self.carrier_hz,
            self.bandwidth_hz,
            self.rician_factor_db,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return fail("all numeric parameters must be finite".into());
        }
        if self.r_tol_dl <= 0.0 || self.r_tol_ul <= 0.0 {
            return fail("tolerable eavesdropper rates must be positive".into());
        }
        if self.rho() >= 1.0 {
            return fail(format!("rho must be well below 1, got {}", self.rho()));
        }
        if self.kappa_est_sq < 0.0 {
            return fail("kappa_est_sq must be nonnegative".into());
        }
        if self.ref_distance_m <= 0.0 || self.max_distance_m < self.ref_distance_m {
            return fail("need 0 < ref_distance_m <= max_distance_m".into());
        }
        if self.carrier_hz <= 0.0 || self.bandwidth_hz <= 0.0 || self.path_loss_exponent <= 0.0 {
            return fail("carrier, bandwidth and path-loss exponent must be positive".into());
        }
        Ok(())
    }

    pub fn gamma_dl(&self) -> f64 {
        db_to_linear(self.gamma_dl_req_db)
    }
    pub fn gamma_ul(&self) -> f64 {
        db_to_linear(self.gamma_ul_req_db)
    }
    pub fn rho(&self) -> f64 {
        db_to_linear(self.rho_db)
    }
    pub fn sigma_dl_sq(&self) -> f64 {
        dbm_to_watt(self.sigma_dl_dbm)
    }
    pub fn sigma_ul_sq(&self) -> f64 {
        dbm_to_watt(self.sigma_ul_dbm)
    }
    pub fn sigma_eve_sq(&self) -> f64 {
        dbm_to_watt(self.sigma_eve_dbm)
    }
    /// `2^R_tol − 1` for downlink leakage.
    pub fn xi_dl(&self) -> f64 {
        2f64.powf(self.r_tol_dl) - 1.0
    }
    pub fn xi_ul(&self) -> f64 {
        2f64.powf(self.r_tol_ul) - 1.0
    }
    pub fn kappa(&self) -> f64 {
        self.kappa_est_sq.sqrt()
    }

    /// Linear power gain of a link of length `d` metres, without array gain.
    pub fn path_gain(&self, d: f64) -> f64 {
        let d = d.max(self.ref_distance_m);
        let wavelength = SPEED_OF_LIGHT / self.carrier_hz;
        let fspl_ref_db = 20.0 * (4.0 * PI * self.ref_distance_m / wavelength).log10();
        let pl_db = fspl_ref_db + 10.0 * self.path_loss_exponent * (d / self.ref_distance_m).log10();
        db_to_linear(-pl_db)
    }
}

/// One drop: true channels, the base station's estimates of the imperfect
/// links, and the uncertainty radii around those estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub seed: u64,
    /// Downlink channels `h_k` (N_T).
    pub h: Vec<CVector>,
    /// Uplink channels `g_j` (N_T).
    pub g: Vec<CVector>,
    /// Self-interference channel (N_T × N_T).
    pub h_si: CMatrix,
    /// Co-channel interference `f[j][k]`, uplink user j to downlink user k.
    pub f_true: DMatrix<C64>,
    pub f_hat: DMatrix<C64>,
    /// Base station to eavesdropper `L_m` (N_T × N_R).
    pub l_true: Vec<CMatrix>,
    pub l_hat: Vec<CMatrix>,
    /// Uplink user j to eavesdropper m, `e[j][m]` (N_R).
    pub e_true: Vec<Vec<CVector>>,
    pub e_hat: Vec<Vec<CVector>>,
    /// Radii: `eps_cci[(j, k)]`, `eps_dl[m]`, `eps_ul[j][m]`.
    pub eps_cci: DMatrix<f64>,
    pub eps_dl: Vec<f64>,
    pub eps_ul: Vec<Vec<f64>>,
}

impl ChannelRealization {
    pub fn k(&self) -> usize {
        self.h.len()
    }
    pub fn j(&self) -> usize {
        self.g.len()
    }
    pub fn m(&self) -> usize {
        self.l_true.len()
    }
    pub fn n_t(&self) -> usize {
        self.h_si.nrows()
    }

    /// Radius of the stacked co-channel error ball at downlink user `k`:
    /// `ε_k² = Σ_j ε_{j,k}²`.
    pub fn eps_stacked(&self, k: usize) -> f64 {
        self.eps_cci.column(k).iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Estimated co-channel vector `f̂_k` (length J).
    pub fn f_hat_col(&self, k: usize) -> Vec<C64> {
        self.f_hat.column(k).iter().copied().collect()
    }

    pub fn f_true_col(&self, k: usize) -> Vec<C64> {
        self.f_true.column(k).iter().copied().collect()
    }

    /// Checks that every true channel lies inside its declared ball
    /// (relative slack `1e-12` for rounding).
    pub fn truth_inside_balls(&self) -> bool {
        let slack = |eps: f64| eps * (1.0 + 1e-12) + 1e-300;
        for j in 0..self.j() {
            for k in 0..self.k() {
                if (self.f_true[(j, k)] - self.f_hat[(j, k)]).norm() > slack(self.eps_cci[(j, k)]) {
                    return false;
                }
            }
            for m in 0..self.m() {
                if (&self.e_true[j][m] - &self.e_hat[j][m]).norm() > slack(self.eps_ul[j][m]) {
                    return false;
                }
            }
        }
        (0..self.m()).all(|m| (&self.l_true[m] - &self.l_hat[m]).norm() <= slack(self.eps_dl[m]))
    }
}

/// RNG stream identifiers. Each channel group draws from its own stream so
/// changing J or M leaves the downlink and uplink draws untouched.
mod stream {
    pub const DL_GEOMETRY: u64 = 1;
    pub const UL_GEOMETRY: u64 = 2;
    pub const EVE_GEOMETRY: u64 = 3;
    pub const DL_FADING: u64 = 4;
    pub const UL_FADING: u64 = 5;
    pub const CCI_FADING: u64 = 6;
    pub const EVE_BS_FADING: u64 = 7;
    pub const EVE_UL_FADING: u64 = 8;
    pub const SI_FADING: u64 = 9;
    pub const CCI_ERROR: u64 = 10;
    pub const EVE_BS_ERROR: u64 = 11;
    pub const EVE_UL_ERROR: u64 = 12;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `CN(0, 1)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rician sample with unit mean power: `(specular, diffuse)` parts.
pub fn rician_parts<R: Rng + ?Sized>(k_factor: f64, rng: &mut R) -> (C64, C64) {
    let phase = rng.random::<f64>() * 2.0 * PI;
    let los = C64::from_polar((k_factor / (k_factor + 1.0)).sqrt(), phase);
    let nlos = complex_gaussian(rng) * (1.0 / (k_factor + 1.0)).sqrt();
    (los, nlos)
}

/// Fills `out` with a point drawn uniformly from the complex ball of radius
/// `radius` (real dimension `2·out.len()`).
pub fn uniform_in_complex_ball<R: Rng + ?Sized>(out: &mut [C64], radius: f64, rng: &mut R) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let mut norm_sq = 0.0;
    for z in out.iter_mut() {
        *z = complex_gaussian(rng);
        norm_sq += z.norm_sqr();
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2 * n) as f64);
    let scale = if norm_sq > 0.0 { r / norm_sq.sqrt() } else { 0.0 };
    for z in out.iter_mut() {
        *z *= scale;
    }
}

/// Point uniformly distributed on the sphere of radius `radius`.
pub fn uniform_on_complex_sphere<R: Rng + ?Sized>(out: &mut [C64], radius: f64, rng: &mut R) {
    let mut norm_sq = 0.0;
    for z in out.iter_mut() {
        *z = complex_gaussian(rng);
        norm_sq += z.norm_sqr();
    }
    let scale = if norm_sq > 0.0 { radius / norm_sq.sqrt() } else { 0.0 };
    for z in out.iter_mut() {
        *z *= scale;
    }
}

#[derive(Clone, Copy, Debug)]
struct Position {
    x: f64,
    y: f64,
}

impl Position {
    fn origin_distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
    fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn place(n: usize, cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> Vec<Position> {
    (0..n)
        .map(|_| {
            let d = cfg.ref_distance_m + rng.random::<f64>() * (cfg.max_distance_m - cfg.ref_distance_m);
            let a = rng.random::<f64>() * 2.0 * PI;
            Position {
                x: d * a.cos(),
                y: d * a.sin(),
            }
        })
        .collect()
}

fn fading_vector(n: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng) * amplitude)
}

/// Draws the error inside the ball of radius `κ‖truth‖` and returns
/// `(estimate, radius)`.
fn estimate_within_ball(truth: &[C64], kappa: f64, rng: &mut ChaCha8Rng) -> (Vec<C64>, f64) {
    let norm = truth.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let radius = kappa * norm;
    if radius == 0.0 {
        return (truth.to_vec(), 0.0);
    }
    let mut err = vec![C64::new(0.0, 0.0); truth.len()];
    uniform_in_complex_ball(&mut err, radius, rng);
    let est = truth.iter().zip(&err).map(|(t, e)| t - e).collect();
    (est, radius)
}

/// Generates one drop. Pure in `(config, seed)`.
pub fn generate_drop(config: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    config.validate()?;
    let (k, j, m, n_t, n_r) = (config.k, config.j, config.m, config.n_t, config.n_r);
    let bs_gain = db_to_linear(config.antenna_gain_dbi);
    let kappa = config.kappa();

    let dl_pos = place(k, config, &mut rng_for(seed, stream::DL_GEOMETRY));
    let ul_pos = place(j, config, &mut rng_for(seed, stream::UL_GEOMETRY));
    let eve_pos = place(m, config, &mut rng_for(seed, stream::EVE_GEOMETRY));

    let bs_amp = |p: &Position| (bs_gain * config.path_gain(p.origin_distance())).sqrt();
    let pair_amp = |a: &Position, b: &Position| config.path_gain(a.distance(b)).sqrt();

    let mut rng = rng_for(seed, stream::DL_FADING);
    let h = dl_pos.iter().map(|p| fading_vector(n_t, bs_amp(p), &mut rng)).collect();

    let mut rng = rng_for(seed, stream::UL_FADING);
    let g = ul_pos.iter().map(|p| fading_vector(n_t, bs_amp(p), &mut rng)).collect();

    let mut rng = rng_for(seed, stream::CCI_FADING);
    let mut f_true = DMatrix::zeros(j, k);
    for jj in 0..j {
        for kk in 0..k {
            f_true[(jj, kk)] = complex_gaussian(&mut rng) * pair_amp(&ul_pos[jj], &dl_pos[kk]);
        }
    }

    let mut rng = rng_for(seed, stream::EVE_BS_FADING);
    let l_true: Vec<CMatrix> = eve_pos
        .iter()
        .map(|p| {
            let a = bs_amp(p);
            CMatrix::from_fn(n_t, n_r, |_, _| complex_gaussian(&mut rng) * a)
        })
        .collect();

    let mut rng = rng_for(seed, stream::EVE_UL_FADING);
    let e_true: Vec<Vec<CVector>> = ul_pos
        .iter()
        .map(|u| {
            eve_pos
                .iter()
                .map(|e| fading_vector(n_r, pair_amp(u, e), &mut rng))
                .collect()
        })
        .collect();

    let k_factor = db_to_linear(config.rician_factor_db);
    let mut rng = rng_for(seed, stream::SI_FADING);
    let h_si = CMatrix::from_fn(n_t, n_t, |_, _| {
        let (los, nlos) = rician_parts(k_factor, &mut rng);
        los + nlos
    });

    let mut rng = rng_for(seed, stream::CCI_ERROR);
    let mut f_hat = f_true.clone();
    let mut eps_cci = DMatrix::zeros(j, k);
    for jj in 0..j {
        for kk in 0..k {
            let (est, r) = estimate_within_ball(&[f_true[(jj, kk)]], kappa, &mut rng);
            f_hat[(jj, kk)] = est[0];
            eps_cci[(jj, kk)] = r;
        }
    }

    let mut rng = rng_for(seed, stream::EVE_BS_ERROR);
    let mut l_hat = Vec::with_capacity(m);
    let mut eps_dl = Vec::with_capacity(m);
    for l in &l_true {
        let (est, r) = estimate_within_ball(l.as_slice(), kappa, &mut rng);
        l_hat.push(CMatrix::from_column_slice(n_t, n_r, &est));
        eps_dl.push(r);
    }

    let mut rng = rng_for(seed, stream::EVE_UL_ERROR);
    let mut e_hat = Vec::with_capacity(j);
    let mut eps_ul = Vec::with_capacity(j);
    for row in &e_true {
        let mut hats = Vec::with_capacity(m);
        let mut radii = Vec::with_capacity(m);
        for e in row {
            let (est, r) = estimate_within_ball(e.as_slice(), kappa, &mut rng);
            hats.push(CVector::from_vec(est));
            radii.push(r);
        }
        e_hat.push(hats);
        eps_ul.push(radii);
    }

    Ok(ChannelRealization {
        seed,
        h,
        g,
        h_si,
        f_true,
        f_hat,
        l_true,
        l_hat,
        e_true,
        e_hat,
        eps_cci,
        eps_dl,
        eps_ul,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watt(-100.0) - 1e-13).abs() / 1e-13 < 1e-12);
        assert!((db_to_linear(-80.0) - 1e-8).abs() / 1e-8 < 1e-12);
        assert!((watt_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn zero_kappa_gives_exact_estimates() {
        let cfg = SystemConfig {
            kappa_est_sq: 0.0,
            ..SystemConfig::desk_scale()
        };
        let d = generate_drop(&cfg, 5).unwrap();
        assert_eq!(d.f_hat, d.f_true);
        assert_eq!(d.l_hat, d.l_true);
        assert_eq!(d.e_hat, d.e_true);
        assert!(d.eps_dl.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn radii_follow_normalized_error() {
        let cfg = SystemConfig::default();
        let d = generate_drop(&cfg, 9).unwrap();
        for m in 0..cfg.m {
            let want = cfg.kappa_est_sq * d.l_true[m].norm_squared();
            assert!((d.eps_dl[m].powi(2) - want).abs() <= 1e-12 * want);
        }
        for jj in 0..cfg.j {
            for kk in 0..cfg.k {
                let want = cfg.kappa_est_sq * d.f_true[(jj, kk)].norm_sqr();
                assert!((d.eps_cci[(jj, kk)].powi(2) - want).abs() <= 1e-12 * want);
            }
        }
        assert!(d.truth_inside_balls());
    }

    #[test]
    fn stacked_radius() {
        let d = generate_drop(&SystemConfig::desk_scale(), 3).unwrap();
        for k in 0..d.k() {
            let s: f64 = (0..d.j()).map(|j| d.eps_cci[(j, k)].powi(2)).sum();
            assert!((d.eps_stacked(k).powi(2) - s).abs() <= 1e-14 * s);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SystemConfig::desk_scale();
        assert_eq!(generate_drop(&cfg, 42).unwrap(), generate_drop(&cfg, 42).unwrap());
        assert_ne!(generate_drop(&cfg, 42).unwrap(), generate_drop(&cfg, 43).unwrap());
    }

    #[test]
    fn toggling_counts_keeps_dl_and_ul_draws() {
        let a = SystemConfig::desk_scale();
        let b = SystemConfig { m: 0, ..a.clone() };
        let c = SystemConfig { j: 1, ..a.clone() };
        let da = generate_drop(&a, 17).unwrap();
        let db = generate_drop(&b, 17).unwrap();
        let dc = generate_drop(&c, 17).unwrap();
        assert_eq!(da.h, db.h);
        assert_eq!(da.g, db.g);
        assert_eq!(da.h, dc.h);
        assert_eq!(da.g[0], dc.g[0]);
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SystemConfig::desk_scale();
        for bad in [
            SystemConfig { n_t: 1, ..base.clone() },
            SystemConfig { j: 7, ..base.clone() },
            SystemConfig { n_r: 6, ..base.clone() },
            SystemConfig { kappa_est_sq: -0.1, ..base.clone() },
            SystemConfig { r_tol_dl: 0.0, ..base.clone() },
            SystemConfig { rho_db: 3.0, ..base.clone() },
        ] {
            assert!(matches!(generate_drop(&bad, 1), Err(Error::Validation(_))), "{bad:?}");
        }
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = SystemConfig::from_toml_str("k = 2\nj = 3\nm = 1\nn_t = 6\n").unwrap();
        assert_eq!(cfg, SystemConfig::desk_scale());
        let back = SystemConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert!(SystemConfig::from_toml_str("bogus_key = 1").is_err());
    }
}
