//! Monte Carlo experiment driver and result files.
//!
//! An experiment runs `trials` channel drops at every sweep point, solves
//! the proposed scheme and optionally the zero-forcing baseline, and writes
//! one CSV per sweep point plus a JSON summary:
//!
//! ```text
//! <out>/records-00.csv
//! <out>/records-01.csv
//! ...
//! <out>/summary.json
//! ```
//!
//! Every number is written with 9 significant digits and rows are sorted by
//! `(seed, scheme, lambda1)`, so `(config, seed)` determines every byte.
//! Solve times are left blank unless timing is requested.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::baseline::zf_directions;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moop::{lambda_grid, sweep_weights, ParetoPoint};
use crate::oracle::adversarial_check;
use crate::phy::{zf_receivers, SecrecyRates};
use crate::scenario::{generate_drop, watt_to_dbm, ChannelRealization, SystemConfig};
use crate::sdp::{ConicBackend, SolveStatus};

pub const CSV_COLUMNS: [&str; 13] = [
    "seed",
    "scheme",
    "lambda1",
    "status",
    "q1_dbm",
    "q2_dbm",
    "tau",
    "min_dl_secrecy",
    "min_ul_secrecy",
    "avg_dl_secrecy",
    "avg_ul_secrecy",
    "solve_ms",
    "max_rank_ratio",
];

/// Candidate seeds tried per trial before giving up on finding a usable drop.
const MAX_REGENERATIONS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tradeoff,
    PowerVsDlSinr,
    OutageVsDlSinr,
    PowerVsUlSinr,
    SecrecyVsDlSinr,
    SecrecyVsUlSinr,
    PowerVsKappa,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Tradeoff,
        ExperimentKind::PowerVsDlSinr,
        ExperimentKind::OutageVsDlSinr,
        ExperimentKind::PowerVsUlSinr,
        ExperimentKind::SecrecyVsDlSinr,
        ExperimentKind::SecrecyVsUlSinr,
        ExperimentKind::PowerVsKappa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Tradeoff => "tradeoff",
            ExperimentKind::PowerVsDlSinr => "power-vs-dl-sinr",
            ExperimentKind::OutageVsDlSinr => "outage-vs-dl-sinr",
            ExperimentKind::PowerVsUlSinr => "power-vs-ul-sinr",
            ExperimentKind::SecrecyVsDlSinr => "secrecy-vs-dl-sinr",
            ExperimentKind::SecrecyVsUlSinr => "secrecy-vs-ul-sinr",
            ExperimentKind::PowerVsKappa => "power-vs-kappa",
        }
    }

    pub fn parameter(&self) -> Option<SweepParameter> {
        match self {
            ExperimentKind::Tradeoff => None,
            ExperimentKind::PowerVsDlSinr | ExperimentKind::OutageVsDlSinr | ExperimentKind::SecrecyVsDlSinr => {
                Some(SweepParameter::DlSinrDb)
            }
            ExperimentKind::PowerVsUlSinr | ExperimentKind::SecrecyVsUlSinr => Some(SweepParameter::UlSinrDb),
            ExperimentKind::PowerVsKappa => Some(SweepParameter::KappaSq),
        }
    }

    pub fn default_points(&self) -> Vec<f64> {
        match self.parameter() {
            None => Vec::new(),
            Some(SweepParameter::DlSinrDb) => vec![0.0, 4.0, 8.0, 12.0],
            Some(SweepParameter::UlSinrDb) => vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            Some(SweepParameter::KappaSq) => vec![0.0, 0.025, 0.05, 0.1],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    DlSinrDb,
    UlSinrDb,
    KappaSq,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::DlSinrDb => "gamma_dl_req_db",
            SweepParameter::UlSinrDb => "gamma_ul_req_db",
            SweepParameter::KappaSq => "kappa_est_sq",
        }
    }

    pub fn apply(&self, config: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = config.clone();
        match self {
            SweepParameter::DlSinrDb => c.gamma_dl_req_db = value,
            SweepParameter::UlSinrDb => c.gamma_ul_req_db = value,
            SweepParameter::KappaSq => c.kappa_est_sq = value,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    Baseline,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Baseline => "baseline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifySummary {
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    /// Seed of the drop actually solved.
    pub seed: u64,
    pub scheme: Scheme,
    pub lambda1: f64,
    pub status: SolveStatus,
    pub q1_w: Option<f64>,
    pub q2_w: Option<f64>,
    pub tau: Option<f64>,
    pub secrecy: Option<SecrecyRates>,
    pub solve_time: Duration,
    pub max_rank_ratio: Option<f64>,
    pub anomaly: bool,
    pub stage2_used: bool,
    pub verify: Option<VerifySummary>,
}

impl RunRecord {
    pub fn from_point(seed: u64, scheme: Scheme, p: &ParetoPoint) -> Self {
        Self {
            seed,
            scheme,
            lambda1: p.lambda1,
            status: p.status,
            q1_w: p.q1,
            q2_w: p.q2,
            tau: p.tau,
            secrecy: p.secrecy.clone(),
            solve_time: p.solve_time,
            max_rank_ratio: p.max_rank_ratio,
            anomaly: p.anomaly,
            stage2_used: p.stage2_used,
            verify: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn q1_dbm(&self) -> Option<f64> {
        positive_dbm(self.q1_w)
    }

    pub fn q2_dbm(&self) -> Option<f64> {
        positive_dbm(self.q2_w)
    }

    fn sort_key(&self) -> (u64, Scheme, f64) {
        (self.seed, self.scheme, self.lambda1)
    }
}

fn positive_dbm(w: Option<f64>) -> Option<f64> {
    w.filter(|&x| x > 0.0).map(watt_to_dbm)
}

/// Sorts by `(seed, scheme, lambda1)`.
pub fn sort_canonical(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        let (sa, ka, la) = a.sort_key();
        let (sb, kb, lb) = b.sort_key();
        sa.cmp(&sb).then(ka.cmp(&kb)).then(la.total_cmp(&lb))
    });
}

/// Fraction of records without an optimal solution.
pub fn outage_fraction(records: &[RunRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| !r.is_optimal()).count() as f64 / records.len() as f64
}

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..9).contains(&exp) {
        let rounded: f64 = sci.parse().expect("valid float");
        trim(&format!("{:.*}", (8 - exp).max(0) as usize, rounded))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// `x` rounded to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().unwrap_or(x)
}

/// One CSV row, as written and as parsed back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: u64,
    pub scheme: String,
    pub lambda1: f64,
    pub status: String,
    pub q1_dbm: Option<f64>,
    pub q2_dbm: Option<f64>,
    pub tau: Option<f64>,
    pub min_dl_secrecy: Option<f64>,
    pub min_ul_secrecy: Option<f64>,
    pub avg_dl_secrecy: Option<f64>,
    pub avg_ul_secrecy: Option<f64>,
    pub solve_ms: Option<f64>,
    pub max_rank_ratio: Option<f64>,
}

impl CsvRow {
    pub fn from_record(r: &RunRecord, timing: bool) -> Self {
        let s = r.secrecy.as_ref();
        let opt = |x: Option<f64>| x.map(round_sig9);
        Self {
            seed: r.seed,
            scheme: r.scheme.as_str().into(),
            lambda1: round_sig9(r.lambda1),
            status: r.status.as_str().into(),
            q1_dbm: opt(r.q1_dbm()),
            q2_dbm: opt(r.q2_dbm()),
            tau: opt(r.tau),
            min_dl_secrecy: opt(s.and_then(|s| s.min_dl())),
            min_ul_secrecy: opt(s.and_then(|s| s.min_ul())),
            avg_dl_secrecy: opt(s.and_then(|s| s.avg_dl())),
            avg_ul_secrecy: opt(s.and_then(|s| s.avg_ul())),
            solve_ms: timing.then(|| round_sig9(r.solve_time.as_secs_f64() * 1e3)),
            max_rank_ratio: opt(r.max_rank_ratio),
        }
    }

    fn fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(format_sig9).unwrap_or_default();
        vec![
            self.seed.to_string(),
            self.scheme.clone(),
            format_sig9(self.lambda1),
            self.status.clone(),
            opt(self.q1_dbm),
            opt(self.q2_dbm),
            opt(self.tau),
            opt(self.min_dl_secrecy),
            opt(self.min_ul_secrecy),
            opt(self.avg_dl_secrecy),
            opt(self.avg_ul_secrecy),
            opt(self.solve_ms),
            opt(self.max_rank_ratio),
        ]
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], timing: bool, out: W) -> Result<()> {
    let mut sorted = records.to_vec();
    sort_canonical(&mut sorted);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &sorted {
        w.write_record(CsvRow::from_record(r, timing).fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Validation(format!("unexpected CSV header {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: SystemConfig,
    pub trials: usize,
    pub seed: u64,
    /// Weight step of the trade-off sweep.
    pub lambda_step: f64,
    /// Downlink weight used by every other experiment.
    pub lambda1: f64,
    /// Sweep values; `None` uses the kind's defaults.
    pub points: Option<Vec<f64>>,
    pub baseline: bool,
    /// Samples per adversarial check, or `None` to skip verification.
    pub verify_samples: Option<usize>,
    pub timing: bool,
    pub exec: Execution,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, config: SystemConfig) -> Self {
        Self {
            kind,
            config,
            trials: 50,
            seed: 0,
            lambda_step: 0.01,
            lambda1: 0.1,
            points: None,
            baseline: true,
            verify_samples: None,
            timing: false,
            exec: Execution::default(),
        }
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        match self.kind.parameter() {
            None => vec![f64::NAN],
            Some(_) => self.points.clone().unwrap_or_else(|| self.kind.default_points()),
        }
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        match self.kind {
            ExperimentKind::Tradeoff => lambda_grid(self.lambda_step),
            _ => {
                if !(0.0..=1.0).contains(&self.lambda1) {
                    return Err(Error::Validation(format!("lambda1 must lie in [0, 1], got {}", self.lambda1)));
                }
                Ok(vec![self.lambda1])
            }
        }
    }

    fn point_configs(&self) -> Result<Vec<SystemConfig>> {
        self.config.validate()?;
        match self.kind.parameter() {
            None => Ok(vec![self.config.clone()]),
            Some(p) => self.sweep_values().iter().map(|&v| p.apply(&self.config, v)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if self.kind.parameter().is_some() && self.sweep_values().is_empty() {
            return Err(Error::Validation("sweep needs at least one point".into()));
        }
        self.weights()?;
        self.point_configs()?;
        Ok(())
    }
}

/// Records of one sweep point.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub value: f64,
    pub records: Vec<RunRecord>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub points: Vec<PointResult>,
    /// Seed of the drop used by each trial.
    pub drop_seeds: Vec<u64>,
    /// Candidate drops rejected for degenerate geometry.
    pub regenerations: u64,
}

fn usable(realization: &ChannelRealization) -> Result<bool> {
    let degenerate = |r: Result<Vec<_>>| match r {
        Ok(_) => Ok(false),
        Err(Error::DegenerateChannel(_)) => Ok(true),
        Err(e) => Err(e),
    };
    Ok(!degenerate(zf_receivers(&realization.g))? && !degenerate(zf_directions(&realization.h))?)
}

/// The first `trials` seeds from `seed` upward whose drops admit zero-forcing,
/// and the number of candidates skipped.
pub fn select_drops(config: &SystemConfig, seed: u64, trials: usize) -> Result<(Vec<u64>, u64)> {
    let mut seeds = Vec::with_capacity(trials);
    let mut rejected = 0;
    let mut candidate = seed;
    while seeds.len() < trials {
        let ok = match generate_drop(config, candidate) {
            Ok(r) => usable(&r)?,
            Err(Error::DegenerateChannel(_)) => false,
            Err(e) => return Err(e),
        };
        if ok {
            seeds.push(candidate);
        } else {
            rejected += 1;
            if rejected > MAX_REGENERATIONS * trials as u64 {
                return Err(Error::Validation("too many degenerate drops".into()));
            }
        }
        candidate = candidate.wrapping_add(1);
    }
    Ok((seeds, rejected))
}

fn solve_trial(
    spec: &ExperimentSpec,
    config: &SystemConfig,
    seed: u64,
    weights: &[f64],
    backend: &dyn ConicBackend,
) -> Result<Vec<RunRecord>> {
    let r = generate_drop(config, seed)?;
    let mut schemes = vec![(Scheme::Proposed, None)];
    if spec.baseline {
        schemes.push((Scheme::Baseline, Some(zf_directions(&r.h)?)));
    }
    let mut out = Vec::new();
    for (scheme, dirs) in schemes {
        let frontier = sweep_weights(&r, config, weights, dirs.as_deref(), backend, spec.exec)?;
        for p in &frontier.points {
            let mut rec = RunRecord::from_point(seed, scheme, p);
            if let (Some(n), Some(policy)) = (spec.verify_samples, &p.policy) {
                let rep = adversarial_check(policy, &r, config, n);
                rec.verify = Some(VerifySummary {
                    samples: rep.samples,
                    violations: rep.violations,
                    worst_margin: rep.worst_margin(),
                });
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// Runs every trial at every sweep point.
pub fn run_experiment(spec: &ExperimentSpec, backend: &dyn ConicBackend) -> Result<ExperimentOutput> {
    spec.validate()?;
    let configs = spec.point_configs()?;
    let values = spec.sweep_values();
    let weights = spec.weights()?;
    let (drop_seeds, regenerations) = select_drops(&configs[0], spec.seed, spec.trials)?;
    log::info!(
        "{}: {} trials x {} points, {} degenerate drops skipped",
        spec.kind,
        spec.trials,
        configs.len(),
        regenerations
    );

    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|p| drop_seeds.iter().map(move |&s| (p, s)))
        .collect();
    let solved = spec.exec.map(&jobs, |&(p, seed)| {
        let recs = solve_trial(spec, &configs[p], seed, &weights, backend);
        log::debug!("point {p} seed {seed} done");
        recs
    });

    let mut points: Vec<PointResult> = values
        .iter()
        .map(|&value| PointResult {
            value,
            records: Vec::new(),
        })
        .collect();
    for (&(p, _), recs) in jobs.iter().zip(solved) {
        points[p].records.extend(recs?);
    }
    for p in &mut points {
        sort_canonical(&mut p.records);
    }
    Ok(ExperimentOutput {
        points,
        drop_seeds,
        regenerations,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Averages over the optimal records at one `(point, scheme, λ)`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightSummary {
    pub lambda1: f64,
    pub trials: usize,
    pub feasible: usize,
    pub outage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub means: Option<Means>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Means {
    pub q1_w: f64,
    pub q2_w: f64,
    /// dBm of the mean power in watts.
    pub q1_dbm: Option<f64>,
    pub q2_dbm: Option<f64>,
    pub avg_dl_secrecy: Option<f64>,
    pub avg_ul_secrecy: Option<f64>,
    pub min_dl_secrecy: Option<f64>,
    pub min_ul_secrecy: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub weights: Vec<WeightSummary>,
    pub rank_anomalies: usize,
    pub stage2_solves: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_violations: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub file: String,
    pub schemes: Vec<SchemeSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<&'static str>,
    pub trials: usize,
    pub seed: u64,
    pub weights: Vec<f64>,
    pub baseline: bool,
    pub regenerations: u64,
    pub drop_seeds: Vec<u64>,
    pub points: Vec<PointSummary>,
    pub config: SystemConfig,
}

fn r9(x: Option<f64>) -> Option<f64> {
    x.map(round_sig9)
}

fn summarize_scheme(records: &[RunRecord], scheme: Scheme, weights: &[f64]) -> SchemeSummary {
    let mine: Vec<&RunRecord> = records.iter().filter(|r| r.scheme == scheme).collect();
    let per_weight = weights
        .iter()
        .map(|&l| {
            let at: Vec<&RunRecord> = mine.iter().copied().filter(|r| r.lambda1 == l).collect();
            let ok: Vec<&RunRecord> = at.iter().copied().filter(|r| r.is_optimal()).collect();
            let m = |f: &dyn Fn(&RunRecord) -> Option<f64>| mean(ok.iter().filter_map(|r| f(r)));
            let sec = |f: fn(&SecrecyRates) -> Option<f64>| r9(m(&|r| r.secrecy.as_ref().and_then(f)));
            let means = (!ok.is_empty()).then(|| {
                let q1 = m(&|r| r.q1_w).unwrap_or(0.0);
                let q2 = m(&|r| r.q2_w).unwrap_or(0.0);
                Means {
                    q1_w: round_sig9(q1),
                    q2_w: round_sig9(q2),
                    q1_dbm: r9(positive_dbm(Some(q1))),
                    q2_dbm: r9(positive_dbm(Some(q2))),
                    avg_dl_secrecy: sec(SecrecyRates::avg_dl),
                    avg_ul_secrecy: sec(SecrecyRates::avg_ul),
                    min_dl_secrecy: sec(SecrecyRates::min_dl),
                    min_ul_secrecy: sec(SecrecyRates::min_ul),
                }
            });
            WeightSummary {
                lambda1: round_sig9(l),
                trials: at.len(),
                feasible: ok.len(),
                outage: round_sig9(if at.is_empty() { 1.0 } else { 1.0 - ok.len() as f64 / at.len() as f64 }),
                means,
            }
        })
        .collect();
    let verified: Vec<&VerifySummary> = mine.iter().filter_map(|r| r.verify.as_ref()).collect();
    let any_verified = mine.iter().any(|r| r.verify.is_some());
    SchemeSummary {
        scheme,
        weights: per_weight,
        rank_anomalies: mine.iter().filter(|r| r.anomaly).count(),
        stage2_solves: mine.iter().filter(|r| r.stage2_used).count(),
        verified: any_verified.then_some(verified.len()),
        verify_violations: any_verified.then(|| verified.iter().filter(|v| v.violations > 0).count()),
    }
}

pub fn summarize(spec: &ExperimentSpec, output: &ExperimentOutput) -> Result<Summary> {
    let weights = spec.weights()?;
    let mut schemes = vec![Scheme::Proposed];
    if spec.baseline {
        schemes.push(Scheme::Baseline);
    }
    let points = output
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| PointSummary {
            index: i,
            value: spec.kind.parameter().map(|_| round_sig9(p.value)),
            file: records_file_name(i),
            schemes: schemes.iter().map(|&s| summarize_scheme(&p.records, s, &weights)).collect(),
        })
        .collect();
    Ok(Summary {
        kind: spec.kind,
        parameter: spec.kind.parameter().map(|p| p.name()),
        trials: spec.trials,
        seed: spec.seed,
        weights: weights.into_iter().map(round_sig9).collect(),
        baseline: spec.baseline,
        regenerations: output.regenerations,
        drop_seeds: output.drop_seeds.clone(),
        points,
        config: spec.config.clone(),
    })
}

pub fn records_file_name(index: usize) -> String {
    format!("records-{index:02}.csv")
}

/// Output files created and truncated up front, so an unwritable
/// destination fails before any solve.
pub struct OutputFiles {
    pub dir: PathBuf,
    records: Vec<File>,
    summary: File,
}

impl OutputFiles {
    pub fn create(dir: &Path, n_points: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let records = (0..n_points)
            .map(|i| File::create(dir.join(records_file_name(i))))
            .collect::<std::io::Result<_>>()?;
        let summary = File::create(dir.join("summary.json"))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records,
            summary,
        })
    }

    pub fn write(self, spec: &ExperimentSpec, output: &ExperimentOutput) -> Result<Summary> {
        for (file, point) in self.records.into_iter().zip(&output.points) {
            write_csv(&point.records, spec.timing, BufWriter::new(file))?;
        }
        let summary = summarize(spec, output)?;
        let mut w = BufWriter::new(self.summary);
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
        w.flush()?;
        Ok(summary)
    }
}

/// Validates, prepares the output directory, runs, and writes the results.
pub fn run_to_dir(spec: &ExperimentSpec, backend: &dyn ConicBackend, dir: &Path) -> Result<Summary> {
    spec.validate()?;
    let files = OutputFiles::create(dir, spec.sweep_values().len())?;
    let output = run_experiment(spec, backend)?;
    files.write(spec, &output)
}
