//! Sum-rate solver: a difference-of-concave iteration for the transmit
//! beamformer, a candidate-enumeration power allocation and the same
//! receive-combiner search as the rate-region solver.
//!
//! For fixed `w_r` and powers the sum rate depends on `w_t` only through
//! `s_A = |h_RA^H w_t|^2` and `s_B = |h_RB^H w_t|^2`:
//!
//! ```text
//! F = log2(1 + k_A s_A / (s_A + c_A)) + log2(1 + k_B s_B / (s_B + c_B))
//!   = [log2((1 + k_A) s_A + c_A) + log2((1 + k_B) s_B + c_B)]
//!   - [log2(s_A + c_A) + log2(s_B + c_B)]
//! ```
//!
//! with `k_A = p_B C_rB`, `c_A = p_A |h_AA|^2 + 1` and symmetrically for B.
//! Both brackets are concave, so replacing the second by its tangent plane
//! gives a concave minorant that touches `F` at the anchor.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    effective_gains, receive_combiner_or_endpoint, ChannelRealization, EffectiveGains, OperatingPoint,
    RelayBeamformer, SystemConfig,
};
use crate::numerics::{golden_section_max, maximize_1d, real_cubic_roots, CVec, SearchOptions};
use crate::subspace::{SolverMode, SubspaceGeometry, TransmitSpace};

/// Coarse grid used before golden refinement inside the DC step; the
/// searched profile is concave so a few points suffice to bracket it.
const DC_GRID: usize = 17;

/// Sum-rate coefficients for fixed `w_r` and powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRateTerms {
    pub k_a: f64,
    pub c_a: f64,
    pub k_b: f64,
    pub c_b: f64,
}

impl SumRateTerms {
    pub fn new(channels: &ChannelRealization, w_r: &CVec, p_a: f64, p_b: f64) -> Self {
        let c_ra = w_r.dotc(&channels.h_ar).norm_sqr();
        let c_rb = w_r.dotc(&channels.h_br).norm_sqr();
        SumRateTerms {
            k_a: p_b * c_rb,
            c_a: p_a * channels.h_aa2() + 1.0,
            k_b: p_a * c_ra,
            c_b: p_b * channels.h_bb2() + 1.0,
        }
    }

    pub fn value(&self, s_a: f64, s_b: f64) -> f64 {
        (1.0 + self.k_a * s_a / (s_a + self.c_a)).log2() + (1.0 + self.k_b * s_b / (s_b + self.c_b)).log2()
    }

    /// The first concave part.
    pub fn f(&self, s_a: f64, s_b: f64) -> f64 {
        ((1.0 + self.k_a) * s_a + self.c_a).log2() + ((1.0 + self.k_b) * s_b + self.c_b).log2()
    }

    /// The subtracted concave part.
    pub fn g(&self, s_a: f64, s_b: f64) -> f64 {
        (s_a + self.c_a).log2() + (s_b + self.c_b).log2()
    }

    /// `g` replaced by its tangent plane at `anchor`.
    pub fn linearized(&self, s_a: f64, s_b: f64, anchor: (f64, f64)) -> f64 {
        let (sa_k, sb_k) = anchor;
        let ln2 = std::f64::consts::LN_2;
        let g_l = self.g(sa_k, sb_k) + (s_a - sa_k) / (ln2 * (sa_k + self.c_a)) + (s_b - sb_k) / (ln2 * (sb_k + self.c_b));
        self.f(s_a, s_b) - g_l
    }

    /// Unconstrained maximiser of the linearized objective in `s_A`.
    fn stationary_s_a(&self, sa_k: f64) -> f64 {
        sa_k + self.c_a * self.k_a / (self.k_a + 1.0)
    }
}

/// Iterate of the DC loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcState {
    pub s_a: f64,
    pub s_b: f64,
    /// Trace budget `|w_t|^2`.
    pub p_prime: f64,
    pub f_value: f64,
    pub k: usize,
}

/// The sum rate (without pre-log) as a function of the two quadratic forms.
pub fn dc_objective(channels: &ChannelRealization, w_r: &CVec, p_a: f64, p_b: f64, s_a: f64, s_b: f64) -> f64 {
    SumRateTerms::new(channels, w_r, p_a, p_b).value(s_a, s_b)
}

/// [`dc_objective`] with its subtracted part linearized at `anchor`; never
/// above [`dc_objective`], equal at the anchor.
pub fn dc_linearized_objective(
    channels: &ChannelRealization,
    w_r: &CVec,
    p_a: f64,
    p_b: f64,
    s_a: f64,
    s_b: f64,
    anchor: (f64, f64),
) -> f64 {
    SumRateTerms::new(channels, w_r, p_a, p_b).linearized(s_a, s_b, anchor)
}

/// Range of `s_A` reachable by a zero-forcing `w_t` of squared norm `p_prime`
/// that delivers `s_B`.
pub fn feasible_set_bounds(channels: &ChannelRealization, w_r: &CVec, p_prime: f64, s_b: f64) -> Result<(f64, f64)> {
    let geom = SubspaceGeometry::new(channels, w_r, TransmitSpace::ZeroForcing)?;
    let hi = geom.s_b_max(p_prime);
    if !(0.0..=hi * (1.0 + 1e-12)).contains(&s_b) {
        return Err(Error::OutOfRange { value: s_b, lo: 0.0, hi });
    }
    Ok(geom.s_a_bounds(p_prime, s_b.min(hi)))
}

fn dc_search(budget: f64) -> SearchOptions {
    SearchOptions { grid_points: DC_GRID, tol: 1e-12 * (1.0 + budget) }
}

/// One DC iteration in reduced coordinates. Returns the anchor itself when
/// the candidate does not improve the linearized objective.
fn dc_step_reduced(geom: &SubspaceGeometry, terms: &SumRateTerms, budget: f64, anchor: (f64, f64)) -> (f64, f64) {
    let target_a = terms.stationary_s_a(anchor.0);
    let inner = |s_b: f64| {
        let (lo, hi) = geom.s_a_bounds(budget, s_b);
        let s_a = target_a.clamp(lo, hi);
        (s_a, terms.linearized(s_a, s_b, anchor))
    };
    let sb_max = geom.s_b_max(budget);
    let s_b = if geom.dim() == 1 {
        sb_max
    } else {
        maximize_1d(|s| inner(s).1, 0.0, sb_max, dc_search(sb_max)).map(|(x, _)| x).unwrap_or(anchor.1)
    };
    let (s_a, v) = inner(s_b);
    if v >= terms.linearized(anchor.0, anchor.1, anchor) {
        (s_a, s_b)
    } else {
        anchor
    }
}

fn reconstruct(geom: &SubspaceGeometry, budget: f64, s: (f64, f64)) -> CVec {
    let q = if geom.has_b() { s.1 / (budget * geom.norm_b2) } else { 0.0 };
    let t = if geom.has_a() { s.0 / (budget * geom.norm_a2) } else { 0.0 };
    geom.beamformer(budget, &geom.unit_vector_for(q, t))
}

fn coords(channels: &ChannelRealization, w_t: &CVec) -> (f64, f64) {
    (channels.h_ra.dotc(w_t).norm_sqr(), channels.h_rb.dotc(w_t).norm_sqr())
}

/// One DC iteration from `anchor = (s_A, s_B)`; returns the new coordinates
/// and a zero-forcing beamformer that realises them.
pub fn dc_step(
    channels: &ChannelRealization,
    w_r: &CVec,
    p_a: f64,
    p_b: f64,
    p_r: f64,
    anchor: (f64, f64),
) -> Result<(f64, f64, CVec)> {
    let geom = SubspaceGeometry::new(channels, w_r, TransmitSpace::ZeroForcing)?;
    let terms = SumRateTerms::new(channels, w_r, p_a, p_b);
    let budget = trace_budget(channels, w_r, p_a, p_b, p_r);
    let (s_a, s_b) = dc_step_reduced(&geom, &terms, budget, anchor);
    let w_t = reconstruct(&geom, budget, (s_a, s_b));
    Ok((s_a, s_b, w_t))
}

/// `P_R / (p_A C_rA + p_B C_rB + 1)`.
pub fn trace_budget(channels: &ChannelRealization, w_r: &CVec, p_a: f64, p_b: f64, p_r: f64) -> f64 {
    let c_ra = w_r.dotc(&channels.h_ar).norm_sqr();
    let c_rb = w_r.dotc(&channels.h_br).norm_sqr();
    p_r / (p_a * c_ra + p_b * c_rb + 1.0)
}

/// Output of [`solve_txbf_p2`].
#[derive(Debug, Clone)]
pub struct TxbfP2 {
    pub w_t: CVec,
    /// Objective after each DC iteration, starting with the initial point.
    pub trace: Vec<f64>,
    pub state: DcState,
}

/// Sum-rate transmit beamformer for fixed `w_r` and powers. `warm` (a
/// previous beamformer in the same subspace) competes with the default start
/// along the unconstrained A-direction.
#[allow(clippy::too_many_arguments)]
pub fn solve_txbf_p2(
    channels: &ChannelRealization,
    w_r: &CVec,
    p_a: f64,
    p_b: f64,
    config: &SystemConfig,
    space: TransmitSpace,
    warm: Option<&CVec>,
) -> Result<TxbfP2> {
    let geom = SubspaceGeometry::new(channels, w_r, space)?;
    let terms = SumRateTerms::new(channels, w_r, p_a, p_b);
    let budget = trace_budget(channels, w_r, p_a, p_b, config.p_r);
    if geom.dim() == 1 {
        let (a0, b0) = (geom.norm_a2, geom.norm_b2);
        let opts = SearchOptions { grid_points: config.grid_points, tol: 1e-12 * (1.0 + budget) };
        let (p_t, v) = maximize_1d(|p| terms.value(p * a0, p * b0), 0.0, budget, opts)?;
        let n = geom.basis.column(0).into_owned();
        let w_t = n * Complex64::new(p_t.sqrt(), 0.0);
        let state = DcState { s_a: p_t * a0, s_b: p_t * b0, p_prime: budget, f_value: v, k: 0 };
        return Ok(TxbfP2 { w_t, trace: vec![v], state });
    }
    let mut anchor = if geom.has_a() {
        (budget * geom.norm_a2, budget * geom.norm_b2 * geom.r * geom.r)
    } else {
        (0.0, budget * geom.norm_b2)
    };
    if let Some(w) = warm {
        let n2 = w.norm_squared();
        if n2 > 0.0 {
            let (sa, sb) = coords(channels, w);
            let scale = budget / n2;
            let cand = (sa * scale, sb * scale);
            if terms.value(cand.0, cand.1) > terms.value(anchor.0, anchor.1) {
                anchor = cand;
            }
        }
    }
    let mut value = terms.value(anchor.0, anchor.1);
    let mut trace = vec![value];
    let mut k = 0;
    while k < config.iter_max {
        k += 1;
        let next = dc_step_reduced(&geom, &terms, budget, anchor);
        let v = terms.value(next.0, next.1);
        if v < value {
            break;
        }
        let gain = v - value;
        anchor = next;
        value = v;
        trace.push(v);
        if gain < config.conv_tol {
            break;
        }
    }
    let w_t = reconstruct(&geom, budget, anchor);
    let state = DcState { s_a: anchor.0, s_b: anchor.1, p_prime: budget, f_value: value, k };
    Ok(TxbfP2 { w_t, trace, state })
}

/// Sum rate (without pre-log) for given gains and powers.
fn sum_rate_of(g: &EffectiveGains, h_aa2: f64, h_bb2: f64, p: (f64, f64)) -> f64 {
    let (ga, gb) = g.sinr_pair(h_aa2, h_bb2, p.0, p.1);
    (1.0 + ga).log2() + (1.0 + gb).log2()
}

/// Product of linear polynomials, coefficients lowest degree first.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// End points of `c_ra p_A + c_rb p_B = k` inside the power box.
fn relay_segment(c_ra: f64, c_rb: f64, k: f64, pa_max: f64, pb_max: f64) -> Option<((f64, f64), (f64, f64))> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4);
    let tol = 1e-12;
    let inside = |x: f64, hi: f64| x >= -tol * (1.0 + hi) && x <= hi * (1.0 + tol) + tol;
    if c_rb > 0.0 {
        for pa in [0.0, pa_max] {
            let pb = (k - c_ra * pa) / c_rb;
            if inside(pb, pb_max) {
                pts.push((pa, pb.clamp(0.0, pb_max)));
            }
        }
    }
    if c_ra > 0.0 {
        for pb in [0.0, pb_max] {
            let pa = (k - c_rb * pb) / c_ra;
            if inside(pa, pa_max) {
                pts.push((pa.clamp(0.0, pa_max), pb));
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    let key = |p: &(f64, f64)| p.0 - p.1;
    let lo = *pts.iter().min_by(|a, b| key(a).total_cmp(&key(b)))?;
    let hi = *pts.iter().max_by(|a, b| key(a).total_cmp(&key(b)))?;
    Some((lo, hi))
}

/// Sum-rate power allocation for fixed beamformers: the binary corners that
/// respect the relay budget, plus the end points and stationary points of
/// the relay-budget segment.
pub fn solve_power_p2(channels: &ChannelRealization, w_t: &CVec, w_r: &CVec, config: &SystemConfig) -> (f64, f64) {
    let g = effective_gains(channels, w_t, w_r);
    power_p2_from_gains(&g, channels.h_aa2(), channels.h_bb2(), w_t.norm_squared(), config)
}

pub(crate) fn power_p2_from_gains(g: &EffectiveGains, h_aa2: f64, h_bb2: f64, t2: f64, config: &SystemConfig) -> (f64, f64) {
    let (pa_max, pb_max) = (config.p_a, config.p_b);
    let k = if t2 > 0.0 { config.p_r / t2 - 1.0 } else { f64::INFINITY };
    let mut cands: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    if k < 0.0 {
        return (0.0, 0.0);
    }
    let fits = |p: (f64, f64)| g.c_ra * p.0 + g.c_rb * p.1 <= k * (1.0 + 1e-12);
    for p in [(pa_max, pb_max), (pa_max, 0.0), (0.0, pb_max)] {
        if fits(p) {
            cands.push(p);
        }
    }
    if k.is_finite() {
        if let Some((e0, e1)) = relay_segment(g.c_ra, g.c_rb, k, pa_max, pb_max) {
            cands.push(e0);
            cands.push(e1);
            let (dx, dy) = (e1.0 - e0.0, e1.1 - e0.1);
            // log-terms of the sum rate, each affine in the segment parameter
            let d1 = [g.c_at + 1.0 + h_aa2 * e0.0, h_aa2 * dx];
            let n1 = [d1[0] + g.c_at * g.c_rb * e0.1, d1[1] + g.c_at * g.c_rb * dy];
            let d2 = [g.c_bt + 1.0 + h_bb2 * e0.1, h_bb2 * dy];
            let n2 = [d2[0] + g.c_bt * g.c_ra * e0.0, d2[1] + g.c_bt * g.c_ra * dx];
            let parts = [(1.0, n1), (-1.0, d1), (1.0, n2), (-1.0, d2)];
            let mut num = [0.0f64; 4];
            for (i, (sign, li)) in parts.iter().enumerate() {
                let mut prod = vec![sign * li[1]];
                for (j, (_, lj)) in parts.iter().enumerate() {
                    if i != j {
                        prod = poly_mul(&prod, lj);
                    }
                }
                for (c, p) in num.iter_mut().zip(prod) {
                    *c += p;
                }
            }
            let scale = num.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if scale > 0.0 {
                if let Ok(roots) = real_cubic_roots(num[3] / scale, num[2] / scale, num[1] / scale, num[0] / scale) {
                    for t in roots.into_iter().filter(|t| *t > 0.0 && *t < 1.0) {
                        cands.push((
                            (e0.0 + t * dx).clamp(0.0, pa_max),
                            (e0.1 + t * dy).clamp(0.0, pb_max),
                        ));
                    }
                }
            }
        }
    }
    let mut best = (cands[0], sum_rate_of(g, h_aa2, h_bb2, cands[0]));
    for &p in &cands[1..] {
        let v = sum_rate_of(g, h_aa2, h_bb2, p);
        if v > best.1 {
            best = (p, v);
        }
    }
    best.0
}

/// Alternates the DC beamformer and the power allocation for one combiner.
pub fn optimize_fixed_alpha_p2(
    channels: &ChannelRealization,
    alpha: f64,
    config: &SystemConfig,
    mode: SolverMode,
) -> Result<OperatingPoint> {
    let w_r = receive_combiner_or_endpoint(channels, alpha)?;
    let mut powers = (config.p_a, config.p_b);
    let mut w_t: Option<CVec> = None;
    let mut trace: Vec<f64> = Vec::new();
    let mut best: Option<(CVec, (f64, f64), Vec<f64>)> = None;
    let mut iterations = 0;
    for k in 0..config.iter_max.max(1) {
        iterations = k + 1;
        let tx = solve_txbf_p2(channels, &w_r, powers.0, powers.1, config, mode.space, w_t.as_ref())?;
        let next_powers = if mode.power_control {
            solve_power_p2(channels, &tx.w_t, &w_r, config)
        } else {
            powers
        };
        let g = effective_gains(channels, &tx.w_t, &w_r);
        let value = mode.prelog * sum_rate_of(&g, channels.h_aa2(), channels.h_bb2(), next_powers);
        if let Some(&prev) = trace.last() {
            if value < prev {
                break;
            }
        }
        trace.push(value);
        best = Some((tx.w_t.clone(), next_powers, tx.trace));
        w_t = Some(tx.w_t);
        powers = next_powers;
        let converged = trace.len() >= 2 && value - trace[trace.len() - 2] < config.conv_tol;
        if converged || !mode.power_control {
            break;
        }
    }
    let (w_t, (p_a, p_b), inner) = best.expect("first iteration always records a point");
    let bf = RelayBeamformer { w_t, w_r, alpha };
    let mut op = OperatingPoint::evaluate(channels, bf, p_a, p_b, mode.prelog);
    op.trace = trace;
    op.inner_trace = inner;
    op.iterations = iterations;
    Ok(op)
}

/// Best sum rate over the receive-combiner family.
pub fn max_sum_rate(channels: &ChannelRealization, config: &SystemConfig, mode: SolverMode) -> Result<OperatingPoint> {
    let n = config.alpha_grid.max(2);
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut best: Option<(usize, OperatingPoint)> = None;
    let mut last_err = None;
    for (i, &a) in grid.iter().enumerate() {
        match optimize_fixed_alpha_p2(channels, a, config, mode) {
            Ok(op) => {
                if best.as_ref().is_none_or(|(_, b)| op.sum_rate() > b.sum_rate()) {
                    best = Some((i, op));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((i, mut best)) = best else {
        return Err(last_err.unwrap_or(Error::ZeroVector));
    };
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(n - 1)];
    let mut refined: Option<OperatingPoint> = None;
    golden_section_max(
        |a| match optimize_fixed_alpha_p2(channels, a, config, mode) {
            Ok(op) => {
                let v = op.sum_rate();
                if refined.as_ref().is_none_or(|r| v > r.sum_rate()) {
                    refined = Some(op);
                }
                v
            }
            Err(_) => f64::NEG_INFINITY,
        },
        lo,
        hi,
        config.alpha_tol,
    );
    if let Some(r) = refined {
        if r.sum_rate() > best.sum_rate() {
            best = r;
        }
    }
    Ok(best)
}
