//! Two-phase half-duplex relaying with a general relay matrix.
//!
//! Only the part of `W` that maps `span{h_AR, h_BR}` into `span{h_RA, h_RB}`
//! reaches the destinations; any other component only costs relay power and
//! adds forwarded noise. So `W = U_t B U_r^H` with orthonormal bases `U_t`,
//! `U_r` of those spans and a (at most) 2x2 core `B`, which is optimised by
//! L-BFGS after normalising the relay output to its budget.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use num_complex::Complex64;

use crate::error::{Error, InfeasibleCause, Result};
use crate::model::{relay_output_power_full, sinr_pair_full, ChannelRealization, SystemConfig};
use crate::numerics::{CMat, CVec};

/// A relay matrix together with the half-duplex rates it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperatingPoint {
    pub w: CMat,
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Rates including the one-half pre-log.
    pub rate_a: f64,
    pub rate_b: f64,
    pub p_r: f64,
}

impl MatrixOperatingPoint {
    /// Evaluates a relay matrix on interference-free channels.
    pub fn evaluate(channels: &ChannelRealization, w: CMat, config: &SystemConfig) -> Self {
        let (gamma_a, gamma_b) = sinr_pair_full(channels, &w, config.p_a, config.p_b);
        let p_r = relay_output_power_full(channels, &w, config.p_a, config.p_b);
        MatrixOperatingPoint {
            w,
            gamma_a,
            gamma_b,
            rate_a: 0.5 * (1.0 + gamma_a).log2(),
            rate_b: 0.5 * (1.0 + gamma_b).log2(),
            p_r,
        }
    }

    pub fn sum_rate(&self) -> f64 {
        self.rate_a + self.rate_b
    }
}

fn orthonormal_span(vs: &[&CVec]) -> CMat {
    let mut cols: Vec<CVec> = Vec::new();
    for v in vs {
        let mut u = (*v).clone();
        for c in &cols {
            let p = c.dotc(&u);
            u -= c * p;
        }
        let n = u.norm();
        if n > 1e-10 * (1.0 + v.norm()) {
            cols.push(u / Complex64::new(n, 0.0));
        }
    }
    if cols.is_empty() {
        let mut e = CVec::zeros(vs[0].len());
        e[0] = Complex64::new(1.0, 0.0);
        cols.push(e);
    }
    CMat::from_columns(&cols)
}

/// Channels expressed in the two spans.
#[derive(Debug, Clone)]
pub struct ReducedRelay {
    u_t: CMat,
    u_r: CMat,
    a_t: CVec,
    b_t: CVec,
    a_r: CVec,
    b_r: CVec,
    p_a: f64,
    p_b: f64,
    p_r: f64,
}

impl ReducedRelay {
    pub fn new(channels: &ChannelRealization, config: &SystemConfig) -> Self {
        let u_t = orthonormal_span(&[&channels.h_ra, &channels.h_rb]);
        let u_r = orthonormal_span(&[&channels.h_ar, &channels.h_br]);
        ReducedRelay {
            a_t: u_t.adjoint() * &channels.h_ra,
            b_t: u_t.adjoint() * &channels.h_rb,
            a_r: u_r.adjoint() * &channels.h_ar,
            b_r: u_r.adjoint() * &channels.h_br,
            u_t,
            u_r,
            p_a: config.p_a,
            p_b: config.p_b,
            p_r: config.p_r,
        }
    }

    fn shape(&self) -> (usize, usize) {
        (self.u_t.ncols(), self.u_r.ncols())
    }

    fn unpack(&self, x: &[f64]) -> CMat {
        let (m, n) = self.shape();
        CMat::from_fn(m, n, |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(x[k], x[k + 1])
        })
    }

    fn pack(&self, b: &CMat) -> Vec<f64> {
        let (m, n) = self.shape();
        let mut x = Vec::with_capacity(2 * m * n);
        for i in 0..m {
            for j in 0..n {
                x.push(b[(i, j)].re);
                x.push(b[(i, j)].im);
            }
        }
        x
    }

    /// Core of a full relay matrix.
    pub fn core_of(&self, w: &CMat) -> CMat {
        self.u_t.adjoint() * w * &self.u_r
    }

    /// Per-phase SINRs of a core scaled to the relay budget.
    pub fn sinrs(&self, b: &CMat) -> (f64, f64) {
        let power = self.p_a * (b * &self.a_r).norm_squared() + self.p_b * (b * &self.b_r).norm_squared() + b.norm_squared();
        if !(power > 0.0) {
            return (0.0, 0.0);
        }
        let c2 = self.p_r / power;
        let sig_a = (self.a_t.adjoint() * b * &self.b_r)[(0, 0)].norm_sqr();
        let sig_b = (self.b_t.adjoint() * b * &self.a_r)[(0, 0)].norm_sqr();
        let noise_a = (b.adjoint() * &self.a_t).norm_squared();
        let noise_b = (b.adjoint() * &self.b_t).norm_squared();
        (
            self.p_b * c2 * sig_a / (c2 * noise_a + 1.0),
            self.p_a * c2 * sig_b / (c2 * noise_b + 1.0),
        )
    }

    fn rates(&self, b: &CMat) -> (f64, f64) {
        let (ga, gb) = self.sinrs(b);
        (0.5 * (1.0 + ga).log2(), 0.5 * (1.0 + gb).log2())
    }

    /// Full relay matrix for a core, scaled to the relay budget.
    pub fn expand(&self, b: &CMat) -> CMat {
        let power = self.p_a * (b * &self.a_r).norm_squared() + self.p_b * (b * &self.b_r).norm_squared() + b.norm_squared();
        let w = &self.u_t * b * self.u_r.adjoint();
        if power > 0.0 {
            w * Complex64::new((self.p_r / power).sqrt(), 0.0)
        } else {
            w
        }
    }
}

struct Weighted<'a> {
    relay: &'a ReducedRelay,
    weight_a: f64,
}

impl Weighted<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let (ra, rb) = self.relay.rates(&self.relay.unpack(x));
        self.weight_a * ra + (1.0 - self.weight_a) * rb
    }
}

impl CostFunction for Weighted<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-self.value(x))
    }
}

impl Gradient for Weighted<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let h = 1e-6 * scale;
        let mut y = x.clone();
        Ok((0..x.len())
            .map(|i| {
                y[i] = x[i] + h;
                let up = self.value(&y);
                y[i] = x[i] - h;
                let down = self.value(&y);
                y[i] = x[i];
                -(up - down) / (2.0 * h)
            })
            .collect())
    }
}

fn normalized(x: Vec<f64>) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.into_iter().map(|v| v / n).collect()
    } else {
        x
    }
}

/// Maximises `weight_a R_A + (1 - weight_a) R_B` from each start and keeps
/// the best core. Never returns something worse than the best start.
fn optimize_weighted(relay: &ReducedRelay, weight_a: f64, starts: &[CMat], max_iters: u64) -> CMat {
    let problem = Weighted { relay, weight_a };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let x0 = normalized(relay.pack(s));
        let v0 = problem.value(&x0);
        let mut cand = (x0.clone(), v0);
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), 7)
            .with_tolerance_grad(1e-10)
            .and_then(|s| s.with_tolerance_cost(1e-14));
        if let Ok(solver) = solver {
            let run = Executor::new(Weighted { relay, weight_a }, solver)
                .configure(|st| st.param(x0).max_iters(max_iters))
                .run();
            if let Ok(res) = run {
                if let Some(x) = res.state().get_best_param() {
                    let v = problem.value(x);
                    if v > cand.1 {
                        cand = (x.clone(), v);
                    }
                }
            }
        }
        if best.as_ref().is_none_or(|(_, bv)| cand.1 > *bv) {
            best = Some(cand);
        }
    }
    let (x, _) = best.expect("at least one start");
    relay.unpack(&x)
}

/// Starting cores: a supplied matrix (typically the best rank-one relay),
/// the matched network-coding core and its two one-way halves.
fn default_starts(relay: &ReducedRelay, extra: &[CMat]) -> Vec<CMat> {
    let mut starts: Vec<CMat> = extra.iter().map(|w| relay.core_of(w)).collect();
    let ab = &relay.a_t * relay.b_r.adjoint();
    let ba = &relay.b_t * relay.a_r.adjoint();
    starts.push(&ab + &ba);
    starts.push(ab);
    starts.push(ba);
    starts
}

const MAX_ITERS: u64 = 200;

/// Weighted-rate optimum over general relay matrices.
pub fn hd_matrix_weighted(
    channels: &ChannelRealization,
    config: &SystemConfig,
    weight_a: f64,
    warm: &[CMat],
) -> MatrixOperatingPoint {
    let relay = ReducedRelay::new(channels, config);
    let core = optimize_weighted(&relay, weight_a, &default_starts(&relay, warm), MAX_ITERS);
    MatrixOperatingPoint::evaluate(channels, relay.expand(&core), config)
}

/// Half-duplex sum-rate optimum over general relay matrices.
pub fn hd_matrix_sum_rate(channels: &ChannelRealization, config: &SystemConfig, warm: &[CMat]) -> MatrixOperatingPoint {
    hd_matrix_weighted(channels, config, 0.5, warm)
}

/// Points of the half-duplex region boundary from weighted-rate maximisation
/// over `n_points` weights, ordered from B's endpoint to A's.
pub fn hd_matrix_region(
    channels: &ChannelRealization,
    config: &SystemConfig,
    n_points: usize,
    warm: &[CMat],
) -> Vec<MatrixOperatingPoint> {
    let n = n_points.max(2);
    let relay = ReducedRelay::new(channels, config);
    let base = default_starts(&relay, warm);
    let mut prev: Option<CMat> = None;
    (0..n)
        .map(|i| {
            let weight_a = i as f64 / (n - 1) as f64;
            let mut starts = base.clone();
            if let Some(p) = &prev {
                starts.push(p.clone());
            }
            let core = optimize_weighted(&relay, weight_a, &starts, MAX_ITERS);
            prev = Some(core.clone());
            MatrixOperatingPoint::evaluate(channels, relay.expand(&core), config)
        })
        .collect()
}

/// Best A-rate with `R_B >= r_b`, by bisection on the rate weight. Points
/// come from weighted optima, so between supported points this follows the
/// convex hull of the region.
pub fn hd_matrix_rate_given_rb(
    channels: &ChannelRealization,
    config: &SystemConfig,
    r_b: f64,
    warm: &[CMat],
) -> Result<MatrixOperatingPoint> {
    let relay = ReducedRelay::new(channels, config);
    let base = default_starts(&relay, warm);
    let solve = |w: f64| {
        let core = optimize_weighted(&relay, w, &base, MAX_ITERS);
        MatrixOperatingPoint::evaluate(channels, relay.expand(&core), config)
    };
    let b_only = solve(0.0);
    if b_only.rate_b < r_b - 1e-9 {
        return Err(Error::Infeasible(InfeasibleCause::NoFeasibleAlpha));
    }
    let a_only = solve(1.0);
    if a_only.rate_b >= r_b {
        return Ok(a_only);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = b_only;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let op = solve(mid);
        if op.rate_b >= r_b {
            if op.rate_a > best.rate_a {
                best = op;
            }
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
