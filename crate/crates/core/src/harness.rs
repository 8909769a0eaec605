//! Monte Carlo experiments: paired per-trial evaluation of the schemes over a
//! parameter sweep, aggregation into a result table and CSV/JSON emission.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fd_oneway_rates, fd_oneway_region, hd_anc_rank_one_solve, hd_anc_solve, local_csi_sum_rate, proposed_solve,
    upper_bound_solve, Objective, SchemeId,
};
use crate::error::{Error, Result};
use crate::hd_relay::hd_matrix_region;
use crate::model::{assemble_relay_matrix, sample_channels, ChannelRealization, SystemConfig};
use crate::numerics::db_to_linear;
use crate::p1::rate_region;
use crate::subspace::SolverMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Sweep: boundary direction in degrees from the R_A axis.
    RateRegion,
    /// Sweep: source SNR in dB (`P_A = P_B`).
    SumrateVsSourceSnr,
    /// Sweep: relay SNR in dB.
    SumrateVsRelaySnr,
    /// Sweep: residual self-interference gain at both sources in dB.
    SumrateVsSi,
    /// Sweep: relay antennas `M_T = M_R`.
    SumrateVsAntennas,
    /// [`ExperimentKind::RateRegion`] with the weak B-relay preset.
    AsymmetricRegion,
    /// [`ExperimentKind::SumrateVsSourceSnr`] with the weak B-relay preset.
    AsymmetricSumrate,
    /// Source-SNR sweep comparing global and local channel knowledge.
    LocalCsiSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::RateRegion,
        ExperimentKind::SumrateVsSourceSnr,
        ExperimentKind::SumrateVsRelaySnr,
        ExperimentKind::SumrateVsSi,
        ExperimentKind::SumrateVsAntennas,
        ExperimentKind::AsymmetricRegion,
        ExperimentKind::AsymmetricSumrate,
        ExperimentKind::LocalCsiSweep,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::RateRegion => "rate_region",
            ExperimentKind::SumrateVsSourceSnr => "sumrate_vs_source_snr",
            ExperimentKind::SumrateVsRelaySnr => "sumrate_vs_relay_snr",
            ExperimentKind::SumrateVsSi => "sumrate_vs_si",
            ExperimentKind::SumrateVsAntennas => "sumrate_vs_antennas",
            ExperimentKind::AsymmetricRegion => "asymmetric_region",
            ExperimentKind::AsymmetricSumrate => "asymmetric_sumrate",
            ExperimentKind::LocalCsiSweep => "local_csi_sweep",
        }
    }

    pub fn is_region(self) -> bool {
        matches!(self, ExperimentKind::RateRegion | ExperimentKind::AsymmetricRegion)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind '{s}'")))
    }
}

/// A complete, reproducible experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub schemes: Vec<SchemeId>,
    pub sweep: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Boundary points per region solve.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub base: SystemConfig,
}

fn default_points() -> usize {
    21
}

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 20160915;

impl ExperimentSpec {
    /// The default setup of each experiment: all schemes that make sense for
    /// it, its usual sweep and `DEFAULT_TRIALS` trials.
    pub fn preset(kind: ExperimentKind) -> Self {
        use SchemeId::*;
        let mut base = SystemConfig::default();
        let steps = |lo: i32, hi: i32, step: i32| (lo..=hi).step_by(step as usize).map(f64::from).collect::<Vec<_>>();
        let (schemes, sweep) = match kind {
            ExperimentKind::RateRegion | ExperimentKind::AsymmetricRegion => {
                (vec![ProposedFd, HdAnc, FdOneway, FdUpperBound], steps(0, 90, 5))
            }
            ExperimentKind::SumrateVsSourceSnr | ExperimentKind::AsymmetricSumrate => {
                (vec![ProposedFd, HdAnc, FdOneway, FdUpperBound], steps(0, 30, 5))
            }
            ExperimentKind::SumrateVsRelaySnr => (vec![ProposedFd, HdAnc, FdOneway, FdUpperBound], steps(0, 20, 5)),
            ExperimentKind::SumrateVsSi => (vec![ProposedFd, HdAnc, FdOneway], steps(-20, 5, 5)),
            ExperimentKind::SumrateVsAntennas => (vec![ProposedFd, HdAnc, FdOneway, FdUpperBound], steps(2, 6, 1)),
            ExperimentKind::LocalCsiSweep => (vec![ProposedFd, LocalCsi, HdAnc], steps(0, 30, 5)),
        };
        if matches!(kind, ExperimentKind::AsymmetricRegion | ExperimentKind::AsymmetricSumrate) {
            base.gain_br = db_to_linear(-10.0);
        }
        ExperimentSpec { kind, schemes, sweep, trials: DEFAULT_TRIALS, seed: DEFAULT_SEED, points: default_points(), base }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::Config("sweep must not be empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.sweep.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        if self.kind.is_region() && self.sweep.iter().any(|a| !(0.0..=90.0).contains(a)) {
            return Err(Error::Config("region directions must lie in [0, 90] degrees".into()));
        }
        if self.kind.is_region() && self.schemes.contains(&SchemeId::LocalCsi) {
            return Err(Error::Config("local_csi has no rate region".into()));
        }
        if self.kind == ExperimentKind::SumrateVsAntennas
            && self.sweep.iter().any(|m| m.fract() != 0.0 || *m < 2.0)
        {
            return Err(Error::Config("antenna counts must be integers of at least 2".into()));
        }
        for v in &self.sweep {
            self.config_for(*v).validate()?;
        }
        Ok(())
    }

    /// System configuration at one sweep value.
    pub fn config_for(&self, value: f64) -> SystemConfig {
        let mut c = self.base.clone();
        match self.kind {
            ExperimentKind::RateRegion | ExperimentKind::AsymmetricRegion => {}
            ExperimentKind::SumrateVsSourceSnr | ExperimentKind::AsymmetricSumrate | ExperimentKind::LocalCsiSweep => {
                c.p_a = db_to_linear(value);
                c.p_b = db_to_linear(value);
            }
            ExperimentKind::SumrateVsRelaySnr => c.p_r = db_to_linear(value),
            ExperimentKind::SumrateVsSi => {
                c.sigma2_a = db_to_linear(value);
                c.sigma2_b = db_to_linear(value);
            }
            ExperimentKind::SumrateVsAntennas => {
                c.m_t = value as usize;
                c.m_r = value as usize;
            }
        }
        c
    }
}

/// Seed of trial `t`: a SplitMix64 step on the master seed and trial index.
/// Independent of the sweep value and scheme list, so every scheme and every
/// sweep point sees the same channel stream.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the random transmit direction used by the local-CSI scheme.
fn local_csi_seed(channel_seed: u64) -> u64 {
    trial_seed(channel_seed, 0x10CA1)
}

/// One aggregated row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub scheme: SchemeId,
    #[serde(rename = "mean_RA")]
    pub mean_ra: f64,
    #[serde(rename = "se_RA")]
    pub se_ra: f64,
    #[serde(rename = "mean_RB")]
    pub mean_rb: f64,
    #[serde(rename = "se_RB")]
    pub se_rb: f64,
    pub mean_sum: f64,
    pub se_sum: f64,
    /// Ratio of mean sum rates against the half-duplex scheme at the same
    /// sweep value; absent when that scheme was not run.
    pub gain_vs_hd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub code_version: String,
    pub gain_definition: String,
    /// Trials in which a scheme's solver returned an error and was scored as zero.
    pub failures: usize,
    /// Trials violating `upper bound >= proposed >= local CSI` (sum rate, 1e-6 slack).
    pub ordering_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: TableMetadata,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, sweep_value: f64, scheme: SchemeId) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.scheme == scheme)
    }
}

/// Per-trial rates of every requested scheme.
type TrialRates = Vec<(f64, f64)>;

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

struct TrialOutcome {
    rates: TrialRates,
    failures: usize,
    ordering_violation: bool,
}

fn sum_rate_trial(ch: &ChannelRealization, channel_seed: u64, schemes: &[SchemeId], config: &SystemConfig) -> TrialOutcome {
    let mut failures = 0;
    let mut fail = |scheme: SchemeId, e: &Error| {
        warn!("{scheme} failed on channel seed {channel_seed}: {e}");
        failures += 1;
        (0.0, 0.0)
    };
    let needs_proposed = schemes.iter().any(|s| matches!(s, SchemeId::ProposedFd | SchemeId::FdUpperBound));
    let proposed = if needs_proposed { Some(proposed_solve(ch, Objective::SumRate, config)) } else { None };
    let mut by_scheme = Vec::with_capacity(schemes.len());
    for &s in schemes {
        let rates = match s {
            SchemeId::ProposedFd => match proposed.as_ref().expect("computed above") {
                Ok(op) => (op.rate_a, op.rate_b),
                Err(e) => fail(s, e),
            },
            SchemeId::HdAnc => match hd_anc_solve(ch, Objective::SumRate, config) {
                Ok(op) => (op.rate_a, op.rate_b),
                Err(e) => fail(s, &e),
            },
            // each direction gets half the time
            SchemeId::FdOneway => match fd_oneway_rates(ch, config) {
                Ok((ra, rb)) => (0.5 * ra, 0.5 * rb),
                Err(e) => fail(s, &e),
            },
            SchemeId::FdUpperBound => {
                let seed = proposed.as_ref().and_then(|p| p.as_ref().ok());
                match upper_bound_solve(ch, Objective::SumRate, config, seed) {
                    Ok(op) => (op.rate_a, op.rate_b),
                    Err(e) => fail(s, &e),
                }
            }
            SchemeId::LocalCsi => match local_csi_sum_rate(ch, config, local_csi_seed(channel_seed)) {
                Ok(op) => (op.rate_a, op.rate_b),
                Err(e) => fail(s, &e),
            },
        };
        by_scheme.push((s, rates));
    }
    let sum_of = |id: SchemeId| by_scheme.iter().find(|(s, _)| *s == id).map(|(_, r)| r.0 + r.1);
    let mut ordering_violation = false;
    if let (Some(ub), Some(p)) = (sum_of(SchemeId::FdUpperBound), sum_of(SchemeId::ProposedFd)) {
        ordering_violation |= ub < p - 1e-6;
    }
    if let (Some(p), Some(l)) = (sum_of(SchemeId::ProposedFd), sum_of(SchemeId::LocalCsi)) {
        ordering_violation |= p < l - 1e-6;
    }
    TrialOutcome { rates: by_scheme.into_iter().map(|(_, r)| r).collect(), failures, ordering_violation }
}

/// Rate pairs `(R_A, R_B)` bounding a scheme's region on one realization.
pub fn scheme_region(
    ch: &ChannelRealization,
    scheme: SchemeId,
    points: usize,
    config: &SystemConfig,
) -> Result<Vec<(f64, f64)>> {
    let feasible = |pts: Vec<crate::p1::RegionPoint>| -> Vec<(f64, f64)> {
        pts.into_iter().filter(|p| p.feasible).map(|p| (p.rate_a, p.rate_b)).collect()
    };
    match scheme {
        SchemeId::ProposedFd => Ok(feasible(rate_region(ch, points, config, SolverMode::PROPOSED))),
        SchemeId::FdUpperBound => {
            let free = ch.without_relay_si();
            let mut pts = feasible(rate_region(&free, points, config, SolverMode::NO_RELAY_SI));
            // the proposed region is achievable without the loop too
            pts.extend(feasible(rate_region(ch, points, config, SolverMode::PROPOSED)));
            Ok(pts)
        }
        SchemeId::HdAnc => {
            let hd = crate::baselines::half_duplex_channels(ch);
            let warm: Vec<_> = hd_anc_rank_one_solve(ch, Objective::SumRate, config)
                .ok()
                .and_then(|op| assemble_relay_matrix(&op.beamformer.w_t, &op.beamformer.w_r).ok())
                .into_iter()
                .collect();
            Ok(hd_matrix_region(&hd, config, points, &warm).into_iter().map(|op| (op.rate_a, op.rate_b)).collect())
        }
        SchemeId::FdOneway => fd_oneway_region(ch, config, points),
        SchemeId::LocalCsi => Err(Error::Config("local_csi has no rate region".into())),
    }
}

/// Upper-right convex hull of the rate pairs together with the origin and
/// their axis projections: the region reachable by time sharing. Returned
/// counter-clockwise from the R_A axis to the R_B axis.
pub fn region_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let max_a = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let max_b = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= 0.0 && p.1 >= 0.0).collect();
    pts.push((max_a, 0.0));
    pts.push((0.0, max_b));
    // sort by R_A descending, then build the upper hull from (max_a, 0)
    pts.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.total_cmp(&y.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Where the ray at `angle_deg` from the R_A axis leaves the hull.
pub fn radial_point(hull: &[(f64, f64)], angle_deg: f64) -> (f64, f64) {
    // sin_cos leaves ~1e-17 residue on the axes
    let d = match angle_deg {
        a if a == 0.0 => (1.0, 0.0),
        a if a == 90.0 => (0.0, 1.0),
        a => {
            let (s, c) = a.to_radians().sin_cos();
            (c, s)
        }
    };
    let mut best = 0.0f64;
    for w in hull.windows(2) {
        let (p, q) = (w[0], w[1]);
        let e = (q.0 - p.0, q.1 - p.1);
        let den = d.0 * e.1 - d.1 * e.0;
        if den.abs() < 1e-300 {
            continue;
        }
        let t = (p.0 * e.1 - p.1 * e.0) / den;
        let s = (p.0 * d.1 - p.1 * d.0) / den;
        if (-1e-12..=1.0 + 1e-12).contains(&s) && t > best {
            best = t;
        }
    }
    if hull.len() == 1 {
        best = 0.0;
    }
    (best * d.0, best * d.1)
}

fn region_trial(ch: &ChannelRealization, spec: &ExperimentSpec, config: &SystemConfig) -> (Vec<TrialRates>, usize) {
    let mut failures = 0;
    let hulls: Vec<Vec<(f64, f64)>> = spec
        .schemes
        .iter()
        .map(|&s| match scheme_region(ch, s, spec.points, config) {
            Ok(pts) => region_hull(&pts),
            Err(e) => {
                warn!("{s} region failed: {e}");
                failures += 1;
                vec![(0.0, 0.0)]
            }
        })
        .collect();
    let per_angle = spec.sweep.iter().map(|&a| hulls.iter().map(|h| radial_point(h, a)).collect()).collect();
    (per_angle, failures)
}

fn aggregate(spec: &ExperimentSpec, value: f64, trials: &[TrialRates]) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = spec
        .schemes
        .iter()
        .enumerate()
        .map(|(k, &scheme)| {
            let ra: Vec<f64> = trials.iter().map(|t| t[k].0).collect();
            let rb: Vec<f64> = trials.iter().map(|t| t[k].1).collect();
            let sum: Vec<f64> = trials.iter().map(|t| t[k].0 + t[k].1).collect();
            let (mean_ra, se_ra) = mean_and_se(&ra);
            let (mean_rb, se_rb) = mean_and_se(&rb);
            let (mean_sum, se_sum) = mean_and_se(&sum);
            ResultRow { sweep_value: value, scheme, mean_ra, se_ra, mean_rb, se_rb, mean_sum, se_sum, gain_vs_hd: None }
        })
        .collect();
    if let Some(hd) = rows.iter().find(|r| r.scheme == SchemeId::HdAnc).map(|r| r.mean_sum) {
        for r in &mut rows {
            r.gain_vs_hd = Some(r.mean_sum / hd);
        }
    }
    rows
}

/// Runs every trial of every sweep value in parallel. Results do not depend
/// on the worker count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    info!("running {} ({} trials, {} sweep values)", spec.kind, spec.trials, spec.sweep.len());
    let mut rows = Vec::with_capacity(spec.sweep.len() * spec.schemes.len());
    let mut failures = 0;
    let mut violations = 0;
    if spec.kind.is_region() {
        let config = spec.config_for(0.0);
        let outcomes: Vec<(Vec<TrialRates>, usize)> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(spec.seed, t as u64);
                region_trial(&sample_channels(&config, seed), spec, &config)
            })
            .collect();
        failures = outcomes.iter().map(|o| o.1).sum();
        for (i, &angle) in spec.sweep.iter().enumerate() {
            let trials: Vec<TrialRates> = outcomes.iter().map(|o| o.0[i].clone()).collect();
            rows.extend(aggregate(spec, angle, &trials));
        }
    } else {
        for &value in &spec.sweep {
            let config = spec.config_for(value);
            let outcomes: Vec<TrialOutcome> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(spec.seed, t as u64);
                    sum_rate_trial(&sample_channels(&config, seed), seed, &spec.schemes, &config)
                })
                .collect();
            failures += outcomes.iter().map(|o| o.failures).sum::<usize>();
            violations += outcomes.iter().filter(|o| o.ordering_violation).count();
            let trials: Vec<TrialRates> = outcomes.into_iter().map(|o| o.rates).collect();
            debug!("sweep value {value} done");
            rows.extend(aggregate(spec, value, &trials));
        }
    }
    Ok(ResultTable {
        metadata: TableMetadata {
            spec: spec.clone(),
            seed: spec.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            gain_definition: "ratio of mean sum rates against hd_anc at the same sweep value".into(),
            failures,
            ordering_violations: violations,
        },
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Parse(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

/// `x` rounded to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

pub const CSV_HEADER: [&str; 9] =
    ["sweep_value", "scheme", "mean_RA", "se_RA", "mean_RB", "se_RB", "mean_sum", "se_sum", "gain_vs_hd"];

/// The CSV rendering: header, then one row per table row with six
/// significant digits.
pub fn to_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &table.rows {
        let num = |x: f64| round_sig6(x).to_string();
        w.write_record([
            num(r.sweep_value),
            r.scheme.tag().to_string(),
            num(r.mean_ra),
            num(r.se_ra),
            num(r.mean_rb),
            num(r.se_rb),
            num(r.mean_sum),
            num(r.se_sum),
            r.gain_vs_hd.map(num).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses rows written by [`to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> =
        rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(|e| Error::Parse(e.to_string()))).collect()
}

/// A copy with every number rounded to six significant digits.
pub fn rounded(table: &ResultTable) -> ResultTable {
    let mut t = table.clone();
    for r in &mut t.rows {
        for x in [&mut r.sweep_value, &mut r.mean_ra, &mut r.se_ra, &mut r.mean_rb, &mut r.se_rb, &mut r.mean_sum, &mut r.se_sum] {
            *x = round_sig6(*x);
        }
        r.gain_vs_hd = r.gain_vs_hd.map(round_sig6);
    }
    t
}

/// Writes the table to `path`.
pub fn emit(table: &ResultTable, format: OutputFormat, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Config("refusing to write an empty result table".into()));
    }
    let text = match format {
        OutputFormat::Csv => to_csv(table)?,
        OutputFormat::Json => serde_json::to_string_pretty(&rounded(table)).map_err(|e| Error::Parse(e.to_string()))?,
    };
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Reads a table written by [`emit`] in JSON form.
pub fn read_json(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Reads the rows of a CSV written by [`emit`].
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    rows_from_csv(&text)
}
