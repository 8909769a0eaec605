//! Rate-region solver: maximise source A's SINR subject to a rate target for
//! source B, alternating a closed-form transmit beamformer with a vertex-based
//! power allocation and searching the receive-combiner parameter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, InfeasibleCause, Result};
use crate::model::{
    effective_gains, receive_combiner_or_endpoint, ChannelRealization, EffectiveGains, OperatingPoint,
    RelayBeamformer, SystemConfig,
};
use crate::numerics::{golden_section_max, orthogonal_unit, CVec};
use crate::subspace::{SolverMode, SubspaceGeometry, TransmitSpace};

/// Relative slack applied when checking the closed-form gates.
const GATE_TOL: f64 = 1e-10;

/// Quantities of the transmit-beamformer subproblem for one `(w_r, p_A, p_B)`.
#[derive(Debug, Clone)]
pub struct P1Subproblem {
    /// SINR target of source B.
    pub gamma_b: f64,
    /// Required `|h_RB^H w_t|^2`.
    pub gamma_b_bar: f64,
    /// Budget for `|w_t|^2`.
    pub p_bar: f64,
    pub geometry: SubspaceGeometry,
    /// Fraction of `w_t`'s reach towards B that the target consumes.
    pub q: f64,
}

/// Unit `z` maximising `|d2^H z|^2` subject to `|d1^H z|^2 = q`.
///
/// Achieves `(r sqrt(q) + sqrt((1-q)(1-r^2)))^2` with `r = |d2^H d1|`.
pub fn boundary_unit_vector(d1: &CVec, d2: &CVec, q: f64) -> Result<CVec> {
    if d1.len() != d2.len() {
        return Err(Error::Dimension(format!("{} vs {}", d1.len(), d2.len())));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange { value: q, lo: 0.0, hi: 1.0 });
    }
    let ip = d2.dotc(d1);
    let r = ip.norm().min(1.0);
    let phi = ip.arg();
    let one_minus = 1.0 - r * r;
    if one_minus < 1e-10 {
        let mut z = d1 * Complex64::from_polar(q.sqrt(), -phi);
        if q < 1.0 {
            let u = orthogonal_unit(&[d1], d1.len()).ok_or(Error::Infeasible(InfeasibleCause::RankOneSubspace))?;
            z += u * Complex64::new((1.0 - q).sqrt(), 0.0);
        }
        return Ok(z);
    }
    let g = ((1.0 - q) / one_minus).sqrt();
    let c1 = Complex64::from_polar(r * g - q.sqrt(), std::f64::consts::PI - phi);
    Ok(d1 * c1 + d2 * Complex64::new(g, 0.0))
}

/// Steps 1 and 2 of the closed-form beamformer: gates and derived budgets.
pub fn p1_subproblem(
    channels: &ChannelRealization,
    w_r: &CVec,
    p_a: f64,
    p_b: f64,
    gamma_b: f64,
    p_r: f64,
    space: TransmitSpace,
) -> Result<P1Subproblem> {
    let c_ra = w_r.dotc(&channels.h_ar).norm_sqr();
    let c_rb = w_r.dotc(&channels.h_br).norm_sqr();
    let gamma_b = gamma_b.max(0.0);
    let gamma_b_bar = if gamma_b == 0.0 {
        0.0
    } else {
        let margin = p_a * c_ra - gamma_b;
        if margin <= 0.0 {
            return Err(Error::Infeasible(InfeasibleCause::SourceGate));
        }
        gamma_b * (p_b * channels.h_bb2() + 1.0) / margin
    };
    let p_bar = p_r / (p_a * c_ra + p_b * c_rb + 1.0);
    let geometry = SubspaceGeometry::new(channels, w_r, space)?;
    let reach = p_bar * geometry.norm_b2;
    if gamma_b_bar > 0.0 && reach < gamma_b_bar * (1.0 - GATE_TOL) {
        return Err(Error::Infeasible(InfeasibleCause::RelayGate));
    }
    let q = if gamma_b_bar == 0.0 { 0.0 } else { (gamma_b_bar / reach).min(1.0) };
    Ok(P1Subproblem { gamma_b, gamma_b_bar, p_bar, geometry, q })
}

impl P1Subproblem {
    /// Steps 3 and 4: the optimal transmit beamformer.
    pub fn solve(&self) -> Result<CVec> {
        let g = &self.geometry;
        let z = if !g.has_a() {
            // A's link is blind to the subspace; just serve B as well as possible
            if g.has_b() {
                g.d1.clone()
            } else {
                g.unit_vector_for(0.0, 0.0)
            }
        } else if !g.has_b() || g.r * g.r >= self.q {
            g.d2.clone()
        } else {
            if g.dim() == 1 {
                return Err(Error::Infeasible(InfeasibleCause::RankOneSubspace));
            }
            boundary_unit_vector(&g.d1, &g.d2, self.q)?
        };
        Ok(g.beamformer(self.p_bar, &z))
    }
}

/// Closed-form transmit beamformer maximising `|h_RA^H w_t|^2` under B's SINR
/// target, the relay budget and (optionally) zero forcing.
pub fn solve_txbf_p1(
    channels: &ChannelRealization,
    w_r: &CVec,
    p_a: f64,
    p_b: f64,
    gamma_b: f64,
    p_r: f64,
    space: TransmitSpace,
) -> Result<CVec> {
    p1_subproblem(channels, w_r, p_a, p_b, gamma_b, p_r, space)?.solve()
}

/// Half-plane `a0 p_A + a1 p_B <= b`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    a0: f64,
    a1: f64,
    b: f64,
}

impl HalfPlane {
    fn slack(&self, x: (f64, f64)) -> f64 {
        self.b - self.a0 * x.0 - self.a1 * x.1
    }

    fn scale(&self, box_a: f64, box_b: f64) -> f64 {
        self.a0.abs() * box_a + self.a1.abs() * box_b + self.b.abs() + 1.0
    }
}

fn intersect(l: &HalfPlane, m: &HalfPlane) -> Option<(f64, f64)> {
    let det = l.a0 * m.a1 - l.a1 * m.a0;
    let norm = (l.a0.abs() + l.a1.abs()) * (m.a0.abs() + m.a1.abs());
    if det.abs() <= 1e-14 * norm || norm == 0.0 {
        return None;
    }
    Some(((l.b * m.a1 - l.a1 * m.b) / det, (l.a0 * m.b - l.b * m.a0) / det))
}

/// Source A's SINR as a function of the powers for fixed beamformers.
fn gamma_a_of(g: &EffectiveGains, h_aa2: f64, p: (f64, f64)) -> f64 {
    p.1 * g.c_at * g.c_rb / (g.c_at + p.0 * h_aa2 + 1.0)
}

fn gamma_b_of(g: &EffectiveGains, h_bb2: f64, p: (f64, f64)) -> f64 {
    p.0 * g.c_bt * g.c_ra / (g.c_bt + p.1 * h_bb2 + 1.0)
}

/// Power allocation maximising A's SINR over the feasible polygon
/// (B's SINR target, relay budget, source boxes), by vertex enumeration.
pub fn solve_power_p1(
    channels: &ChannelRealization,
    w_t: &CVec,
    w_r: &CVec,
    gamma_b: f64,
    config: &SystemConfig,
) -> Result<(f64, f64)> {
    let g = effective_gains(channels, w_t, w_r);
    power_p1_from_gains(&g, channels.h_aa2(), channels.h_bb2(), w_t.norm_squared(), gamma_b, config)
}

pub(crate) fn power_p1_from_gains(
    g: &EffectiveGains,
    h_aa2: f64,
    h_bb2: f64,
    t2: f64,
    gamma_b: f64,
    config: &SystemConfig,
) -> Result<(f64, f64)> {
    let (pa_max, pb_max) = (config.p_a, config.p_b);
    if gamma_b > 0.0 && pa_max * g.c_bt * g.c_ra <= gamma_b {
        return Err(Error::Infeasible(InfeasibleCause::SourceGate));
    }
    let planes = [
        HalfPlane { a0: -g.c_bt * g.c_ra, a1: gamma_b * h_bb2, b: -gamma_b * (g.c_bt + 1.0) },
        HalfPlane { a0: t2 * g.c_ra, a1: t2 * g.c_rb, b: config.p_r - t2 },
        HalfPlane { a0: -1.0, a1: 0.0, b: 0.0 },
        HalfPlane { a0: 1.0, a1: 0.0, b: pa_max },
        HalfPlane { a0: 0.0, a1: -1.0, b: 0.0 },
        HalfPlane { a0: 0.0, a1: 1.0, b: pb_max },
    ];
    let feasible = |x: (f64, f64)| {
        planes.iter().all(|h| h.slack(x) >= -1e-11 * h.scale(pa_max, pb_max))
    };
    let mut best: Option<((f64, f64), f64)> = None;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            let Some(x) = intersect(&planes[i], &planes[j]) else { continue };
            if !feasible(x) {
                continue;
            }
            let x = (x.0.clamp(0.0, pa_max), x.1.clamp(0.0, pb_max));
            let v = gamma_a_of(g, h_aa2, x);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((x, v));
            }
        }
    }
    let (mut x, _) = best.ok_or(Error::Infeasible(InfeasibleCause::EmptyPolygon))?;
    // keep the exact target after clamping round-off
    if gamma_b > 0.0 && gamma_b_of(g, h_bb2, x) < gamma_b {
        let need = gamma_b * (g.c_bt + x.1 * h_bb2 + 1.0) / (g.c_bt * g.c_ra);
        x.0 = need.min(pa_max).max(x.0);
    }
    Ok(x)
}

/// The four-case power rule read step by step (forced SINR-B power, relay
/// check, otherwise both constraints active). `None` when the first gate
/// rejects. The result of the last case may fall outside the box.
pub fn stepwise_power_p1(
    g: &EffectiveGains,
    h_bb2: f64,
    t2: f64,
    gamma_b: f64,
    config: &SystemConfig,
) -> Option<(f64, f64)> {
    let (pa_max, pb_max) = (config.p_a, config.p_b);
    if gamma_b > 0.0 && pa_max * g.c_bt * g.c_ra <= gamma_b {
        return None;
    }
    let need = gamma_b * (g.c_bt + pb_max * h_bb2 + 1.0) / (g.c_bt * g.c_ra);
    let x = if gamma_b == 0.0 {
        (0.0, pb_max)
    } else if pa_max >= need {
        (need, pb_max)
    } else if h_bb2 > 0.0 {
        let pb = (pa_max * g.c_bt * g.c_ra / gamma_b - 1.0 - g.c_bt) / h_bb2;
        if pb < 0.0 {
            return None;
        }
        (pa_max, pb.min(pb_max))
    } else {
        return None;
    };
    if t2 * (x.0 * g.c_ra + x.1 * g.c_rb + 1.0) <= config.p_r {
        return Some(x);
    }
    // both constraints active:
    //   C_Bt C_rA p_A - Gamma_B |h_BB|^2 p_B = Gamma_B (C_Bt + 1)
    //   C_rA p_A + C_rB p_B = P_R / t2 - 1
    let (a11, a12, b1) = (g.c_bt * g.c_ra, -gamma_b * h_bb2, gamma_b * (g.c_bt + 1.0));
    let (a21, a22, b2) = (g.c_ra, g.c_rb, config.p_r / t2 - 1.0);
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-300 {
        return None;
    }
    Some(((b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det))
}

/// Alternates the closed-form beamformer and the power allocation for one
/// receive-combiner parameter.
pub fn optimize_fixed_alpha_p1(
    channels: &ChannelRealization,
    alpha: f64,
    gamma_b: f64,
    config: &SystemConfig,
    mode: SolverMode,
) -> Result<OperatingPoint> {
    let w_r = receive_combiner_or_endpoint(channels, alpha)?;
    optimize_with_combiner(channels, &w_r, alpha, gamma_b, config, mode)
}

fn optimize_with_combiner(
    channels: &ChannelRealization,
    w_r: &CVec,
    alpha: f64,
    gamma_b: f64,
    config: &SystemConfig,
    mode: SolverMode,
) -> Result<OperatingPoint> {
    let starts: &[(f64, f64)] = if mode.power_control {
        &[(config.p_a, config.p_b), (config.p_a, 0.0)]
    } else {
        &[(config.p_a, config.p_b)]
    };
    let mut last_err = Error::Infeasible(InfeasibleCause::SourceGate);
    for &(pa0, pb0) in starts {
        match solve_txbf_p1(channels, w_r, pa0, pb0, gamma_b, config.p_r, mode.space) {
            Ok(w_t) => return Ok(alternate(channels, w_r, alpha, w_t, (pa0, pb0), gamma_b, config, mode)),
            Err(e) if e.is_infeasible() => last_err = e,
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

#[allow(clippy::too_many_arguments)]
fn alternate(
    channels: &ChannelRealization,
    w_r: &CVec,
    alpha: f64,
    mut w_t: CVec,
    mut powers: (f64, f64),
    gamma_b: f64,
    config: &SystemConfig,
    mode: SolverMode,
) -> OperatingPoint {
    let h_aa2 = channels.h_aa2();
    let mut trace = Vec::new();
    let mut current = (w_t.clone(), powers);
    let mut iterations = 0;
    for k in 0..config.iter_max.max(1) {
        iterations = k + 1;
        if mode.power_control {
            if let Ok(p) = solve_power_p1(channels, &w_t, w_r, gamma_b, config) {
                powers = p;
            }
        }
        let value = gamma_a_of(&effective_gains(channels, &w_t, w_r), h_aa2, powers);
        if let Some(&prev) = trace.last() {
            if value < prev {
                // numerical regression: keep the previous iterate
                break;
            }
        }
        trace.push(value);
        current = (w_t.clone(), powers);
        let converged = trace.len() >= 2 && value - trace[trace.len() - 2] < config.conv_tol;
        if converged || !mode.power_control {
            break;
        }
        match solve_txbf_p1(channels, w_r, powers.0, powers.1, gamma_b, config.p_r, mode.space) {
            Ok(w) => w_t = w,
            Err(_) => break,
        }
    }
    let (w_t, (p_a, p_b)) = current;
    let bf = RelayBeamformer { w_t, w_r: w_r.clone(), alpha };
    let mut op = OperatingPoint::evaluate(channels, bf, p_a, p_b, mode.prelog);
    op.trace = trace;
    op.iterations = iterations;
    op
}

/// SINR target matching a rate target under the given pre-log.
pub fn sinr_target(rate: f64, prelog: f64) -> f64 {
    (rate / prelog).exp2() - 1.0
}

fn alpha_grid(config: &SystemConfig) -> Vec<f64> {
    let n = config.alpha_grid.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Best A-rate over the receive-combiner family subject to `R_B >= r_b`.
pub fn max_rate_given_rb(
    channels: &ChannelRealization,
    r_b: f64,
    config: &SystemConfig,
    mode: SolverMode,
) -> Result<OperatingPoint> {
    let gamma_b = sinr_target(r_b.max(0.0), mode.prelog);
    let grid = alpha_grid(config);
    let mut best: Option<(usize, OperatingPoint)> = None;
    for (i, &a) in grid.iter().enumerate() {
        match optimize_fixed_alpha_p1(channels, a, gamma_b, config, mode) {
            Ok(op) => {
                if best.as_ref().is_none_or(|(_, b)| op.gamma_a > b.gamma_a) {
                    best = Some((i, op));
                }
            }
            Err(e) if e.is_infeasible() || matches!(e, Error::DegenerateGeometry(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let (i, mut best) = best.ok_or(Error::Infeasible(InfeasibleCause::NoFeasibleAlpha))?;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let mut refined: Option<OperatingPoint> = None;
    golden_section_max(
        |a| match optimize_fixed_alpha_p1(channels, a, gamma_b, config, mode) {
            Ok(op) => {
                let v = op.gamma_a;
                if refined.as_ref().is_none_or(|r| v > r.gamma_a) {
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
        if r.gamma_a > best.gamma_a {
            best = r;
        }
    }
    Ok(best)
}

/// One sampled point of a rate-region boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub r_b_target: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub alpha: f64,
    pub feasible: bool,
}

impl RegionPoint {
    fn infeasible(r_b: f64) -> Self {
        RegionPoint { r_b_target: r_b, rate_a: 0.0, rate_b: 0.0, p_a: 0.0, p_b: 0.0, alpha: 0.0, feasible: false }
    }

    fn from_op(r_b: f64, op: &OperatingPoint) -> Self {
        RegionPoint {
            r_b_target: r_b,
            rate_a: op.rate_a,
            rate_b: op.rate_b,
            p_a: op.powers.p_a,
            p_b: op.powers.p_b,
            alpha: op.beamformer.alpha,
            feasible: true,
        }
    }
}

/// Whether some grid combiner admits a first beamformer for this target.
fn target_feasible(channels: &ChannelRealization, combiners: &[CVec], gamma_b: f64, config: &SystemConfig, mode: SolverMode) -> bool {
    let starts: &[(f64, f64)] = if mode.power_control {
        &[(config.p_a, config.p_b), (config.p_a, 0.0)]
    } else {
        &[(config.p_a, config.p_b)]
    };
    combiners.iter().any(|w_r| {
        starts.iter().any(|&(pa, pb)| solve_txbf_p1(channels, w_r, pa, pb, gamma_b, config.p_r, mode.space).is_ok())
    })
}

/// Largest B-rate target that the first alternation step can meet on the
/// combiner grid, by bisection.
pub fn max_rate_b(channels: &ChannelRealization, config: &SystemConfig, mode: SolverMode) -> f64 {
    let combiners: Vec<CVec> = alpha_grid(config)
        .into_iter()
        .filter_map(|a| receive_combiner_or_endpoint(channels, a).ok())
        .collect();
    // B's SINR can never exceed p_A |w_r^H h_AR|^2 <= P_A |h_AR|^2
    let mut hi = mode.prelog * (1.0 + config.p_a * channels.h_ar.norm_squared()).log2();
    let mut lo = 0.0;
    if !target_feasible(channels, &combiners, 0.0, config, mode) {
        return 0.0;
    }
    if target_feasible(channels, &combiners, sinr_target(hi, mode.prelog), config, mode) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if target_feasible(channels, &combiners, sinr_target(mid, mode.prelog), config, mode) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * (1.0 + hi) {
            break;
        }
    }
    lo
}

/// Sweeps B's rate target from zero to its maximum and returns the boundary.
/// A-rates are made nonincreasing in the target by carrying forward any point
/// that dominates an earlier one.
pub fn rate_region(
    channels: &ChannelRealization,
    n_points: usize,
    config: &SystemConfig,
    mode: SolverMode,
) -> Vec<RegionPoint> {
    let n = n_points.max(2);
    let r_max = max_rate_b(channels, config, mode);
    let mut points: Vec<RegionPoint> = (0..n)
        .map(|i| {
            let r_b = r_max * i as f64 / (n - 1) as f64;
            match max_rate_given_rb(channels, r_b, config, mode) {
                Ok(op) => RegionPoint::from_op(r_b, &op),
                Err(_) => RegionPoint::infeasible(r_b),
            }
        })
        .collect();
    for i in (0..points.len().saturating_sub(1)).rev() {
        let next = points[i + 1].clone();
        if next.feasible && (!points[i].feasible || next.rate_a > points[i].rate_a) {
            let target = points[i].r_b_target;
            points[i] = RegionPoint { r_b_target: target, ..next };
        }
    }
    points
}

/// CSV rendering of a region sweep.
pub fn region_csv(points: &[RegionPoint]) -> String {
    let mut s = String::from("r_B_target,R_A,R_B,p_A,p_B,alpha,feasible\n");
    for p in points {
        s.push_str(&format!(
            "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}\n",
            p.r_b_target, p.rate_a, p.rate_b, p.p_a, p.p_b, p.alpha, p.feasible
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{receive_combiner, relay_output_power, sample_channels, zf_residual};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        let v = CVec::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let nv = v.norm();
        v / c(nv, 0.0)
    }

    fn instance(seed: u64) -> (ChannelRealization, SystemConfig) {
        let cfg = SystemConfig { sigma2_r: 0.5, sigma2_a: 0.05, sigma2_b: 0.05, ..Default::default() };
        (sample_channels(&cfg, seed), cfg)
    }

    #[test]
    fn boundary_vector_saturated_and_orthogonal_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d1 = random_unit(&mut rng, 3);
        let d2 = random_unit(&mut rng, 3);
        let z = boundary_unit_vector(&d1, &d2, 1.0).unwrap();
        let r2 = d2.dotc(&d1).norm_sqr();
        assert_abs_diff_eq!(d2.dotc(&z).norm_sqr(), r2, epsilon = 1e-12);
        assert_abs_diff_eq!(d1.dotc(&z).norm_sqr(), 1.0, epsilon = 1e-12);

        let e1 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e2 = CVec::from_vec(vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let z = boundary_unit_vector(&e1, &e2, 0.0).unwrap();
        assert!((z - &e2).norm() < 1e-12);
    }

    #[test]
    fn boundary_vector_meets_constraints_and_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let n = rng.random_range(2..6);
            let d1 = random_unit(&mut rng, n);
            let d2 = random_unit(&mut rng, n);
            let q: f64 = rng.random();
            let z = boundary_unit_vector(&d1, &d2, q).unwrap();
            let r = d2.dotc(&d1).norm();
            let want = (r * q.sqrt() + ((1.0 - q) * (1.0 - r * r)).sqrt()).powi(2);
            assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(d1.dotc(&z).norm_sqr(), q, epsilon = 1e-10);
            assert_abs_diff_eq!(d2.dotc(&z).norm_sqr(), want, epsilon = 1e-10);
        }
    }

    #[test]
    fn boundary_vector_collinear_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d1 = random_unit(&mut rng, 3);
        let d2 = &d1 * Complex64::from_polar(1.0, 0.7);
        let z = boundary_unit_vector(&d1, &d2, 0.3).unwrap();
        assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d1.dotc(&z).norm_sqr(), 0.3, epsilon = 1e-12);
        let one = CVec::from_vec(vec![c(1.0, 0.0)]);
        assert!(boundary_unit_vector(&one, &one, 0.5).is_err());
        assert!(boundary_unit_vector(&one, &one, 1.0).is_ok());
    }

    #[test]
    fn zero_target_gives_scaled_a_direction() {
        let cfg = SystemConfig::default();
        let ch = sample_channels(&cfg, 5).without_relay_si();
        let wr = receive_combiner(&ch, 0.5).unwrap();
        let wt = solve_txbf_p1(&ch, &wr, cfg.p_a, cfg.p_b, 0.0, cfg.p_r, TransmitSpace::ZeroForcing).unwrap();
        let cos = ch.h_ra.dotc(&wt).norm() / (ch.h_ra.norm() * wt.norm());
        assert_abs_diff_eq!(cos, 1.0, epsilon = 1e-12);
        let pr = relay_output_power(&ch, &wt, &wr, cfg.p_a, cfg.p_b);
        assert_abs_diff_eq!(pr, cfg.p_r, epsilon = 1e-8);
    }

    #[test]
    fn source_gate_rejects() {
        let (ch, cfg) = instance(6);
        let wr = receive_combiner(&ch, 0.5).unwrap();
        let c_ra = wr.dotc(&ch.h_ar).norm_sqr();
        // scale p_A so that p_A C_rA = 0.5 against a unit target
        let p_a = 0.5 / c_ra;
        let err = solve_txbf_p1(&ch, &wr, p_a, cfg.p_b, 1.0, cfg.p_r, TransmitSpace::ZeroForcing).unwrap_err();
        assert!(matches!(err, Error::Infeasible(InfeasibleCause::SourceGate)));
    }

    #[test]
    fn txbf_contract_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut solved = 0;
        for seed in 0..300 {
            let (ch, cfg) = instance(seed);
            let alpha: f64 = rng.random();
            let wr = receive_combiner(&ch, alpha).unwrap();
            let gamma_b = rng.random::<f64>() * 6.0;
            match p1_subproblem(&ch, &wr, cfg.p_a, cfg.p_b, gamma_b, cfg.p_r, TransmitSpace::ZeroForcing) {
                Ok(sub) => {
                    let wt = sub.solve().unwrap();
                    solved += 1;
                    assert!(zf_residual(&ch, &wt, &wr) <= 1e-9);
                    let pr = relay_output_power(&ch, &wt, &wr, cfg.p_a, cfg.p_b);
                    assert!((pr - cfg.p_r).abs() <= 1e-8, "relay power {pr}");
                    let reach = ch.h_rb.dotc(&wt).norm_sqr();
                    assert!(reach >= sub.gamma_b_bar * (1.0 - 1e-8));
                    let (_, gb) = crate::model::sinr_pair(&ch, &wt, &wr, cfg.p_a, cfg.p_b);
                    assert!(gb >= gamma_b * (1.0 - 1e-8));
                }
                Err(e) => assert!(e.is_infeasible()),
            }
        }
        assert!(solved > 100);
    }

    #[test]
    fn shortcut_and_boundary_agree_at_the_switch() {
        // choose the target so that the unconstrained direction meets it exactly
        for seed in 0..50 {
            let (ch, cfg) = instance(seed);
            let wr = receive_combiner(&ch, 0.5).unwrap();
            let sub = p1_subproblem(&ch, &wr, cfg.p_a, cfg.p_b, 0.0, cfg.p_r, TransmitSpace::ZeroForcing).unwrap();
            let g = &sub.geometry;
            let q = g.r * g.r;
            let z = boundary_unit_vector(&g.d1, &g.d2, q).unwrap();
            assert_abs_diff_eq!(g.d2.dotc(&z).norm_sqr(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(g.d1.dotc(&z).norm_sqr(), q, epsilon = 1e-9);
        }
    }

    #[test]
    fn forced_power_case_without_si() {
        let cfg = SystemConfig { p_r: 1e6, ..Default::default() };
        let ch = sample_channels(&cfg, 9).without_source_si();
        let wr = receive_combiner(&ch, 0.5).unwrap();
        let wt = solve_txbf_p1(&ch, &wr, cfg.p_a, cfg.p_b, 0.0, 10.0, TransmitSpace::ZeroForcing).unwrap();
        let g = effective_gains(&ch, &wt, &wr);
        let gamma_b = 0.1 * cfg.p_a * g.c_bt * g.c_ra / (g.c_bt + 1.0);
        let (pa, pb) = solve_power_p1(&ch, &wt, &wr, gamma_b, &cfg).unwrap();
        assert_abs_diff_eq!(pb, cfg.p_b, epsilon = 1e-9);
        assert_abs_diff_eq!(pa, gamma_b * (g.c_bt + 1.0) / (g.c_bt * g.c_ra), epsilon = 1e-9);
    }

    #[test]
    fn empty_polygon_is_infeasible() {
        let (ch, cfg) = instance(11);
        let wr = receive_combiner(&ch, 0.5).unwrap();
        let wt = solve_txbf_p1(&ch, &wr, cfg.p_a, cfg.p_b, 0.0, cfg.p_r, TransmitSpace::ZeroForcing).unwrap();
        let g = effective_gains(&ch, &wt, &wr);
        let gamma_b = 1.01 * cfg.p_a * g.c_bt * g.c_ra / (g.c_bt + 1.0);
        assert!(solve_power_p1(&ch, &wt, &wr, gamma_b, &cfg).unwrap_err().is_infeasible());
    }

    #[test]
    fn vertex_solver_matches_stepwise_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut compared = 0;
        for _ in 0..1000 {
            let g = EffectiveGains {
                c_at: rng.random::<f64>() * 5.0,
                c_rb: rng.random::<f64>() * 3.0,
                c_bt: rng.random::<f64>() * 5.0 + 0.01,
                c_ra: rng.random::<f64>() * 3.0 + 0.01,
            };
            let cfg = SystemConfig { p_r: rng.random::<f64>() * 20.0 + 0.5, ..Default::default() };
            let (h_aa2, h_bb2) = (rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1);
            let t2 = rng.random::<f64>() * 0.5 + 0.01;
            let gamma_b = rng.random::<f64>() * 10.0;
            let vertex = power_p1_from_gains(&g, h_aa2, h_bb2, t2, gamma_b, &cfg);
            let Some(x) = stepwise_power_p1(&g, h_bb2, t2, gamma_b, &cfg) else { continue };
            let inside = x.0 >= -1e-9 && x.0 <= cfg.p_a + 1e-9 && x.1 >= -1e-9 && x.1 <= cfg.p_b + 1e-9;
            if !inside {
                continue;
            }
            compared += 1;
            let v = vertex.expect("stepwise point is feasible");
            assert_abs_diff_eq!(gamma_a_of(&g, h_aa2, v), gamma_a_of(&g, h_aa2, x), epsilon = 1e-8);
        }
        assert!(compared > 300, "{compared}");
    }

    #[test]
    fn alternation_is_monotone_and_feasible() {
        for seed in 0..40 {
            let (ch, cfg) = instance(seed);
            let op = match optimize_fixed_alpha_p1(&ch, 0.4, 2.0, &cfg, SolverMode::PROPOSED) {
                Ok(op) => op,
                Err(e) => {
                    assert!(e.is_infeasible());
                    continue;
                }
            };
            for w in op.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
            assert!(op.gamma_b >= 2.0 * (1.0 - 1e-8));
            assert!(op.powers.p_r <= cfg.p_r + 1e-8);
            assert!(zf_residual(&ch, &op.beamformer.w_t, &op.beamformer.w_r) <= 1e-9);
        }
    }

    #[test]
    fn zero_target_converges_fast_to_full_b_power() {
        let (ch, cfg) = instance(13);
        let op = optimize_fixed_alpha_p1(&ch, 0.5, 0.0, &cfg, SolverMode::PROPOSED).unwrap();
        let improving = op.trace.windows(2).filter(|w| w[1] - w[0] >= cfg.conv_tol).count();
        assert!(improving <= 2, "{:?}", op.trace);
        assert_abs_diff_eq!(op.powers.p_b, cfg.p_b, epsilon = 1e-12);
    }

    #[test]
    fn excessive_target_is_infeasible() {
        let (ch, cfg) = instance(14);
        let cap = (1.0 + cfg.p_a * ch.h_ar.norm_squared()).log2();
        assert!(max_rate_given_rb(&ch, cap + 0.1, &cfg, SolverMode::PROPOSED).unwrap_err().is_infeasible());
    }

    #[test]
    fn region_targets_met_and_monotone() {
        let (ch, cfg) = instance(15);
        let pts = rate_region(&ch, 6, &cfg, SolverMode::PROPOSED);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].r_b_target, 0.0);
        for p in &pts {
            assert!(p.feasible);
            assert!(p.rate_b >= p.r_b_target - 1e-6);
        }
        for w in pts.windows(2) {
            assert!(w[1].rate_a <= w[0].rate_a + 1e-6);
        }
        let csv = region_csv(&pts);
        assert_eq!(csv.lines().count(), 7);
    }
}
