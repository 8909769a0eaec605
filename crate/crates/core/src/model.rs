//! System configuration, channel draws and the post-zero-forcing signal model.
//!
//! All powers and variances are linear and normalised to unit noise power, so
//! an SNR of `x` dB is simply a power budget of `10^(x/10)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{vec_complement_projector, vec_projector, CMat, CVec};

/// Antenna counts, power budgets, residual self-interference levels and
/// solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Relay transmit antennas.
    pub m_t: usize,
    /// Relay receive antennas.
    pub m_r: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub p_r: f64,
    /// Residual self-interference variances at A, B and the relay.
    pub sigma2_a: f64,
    pub sigma2_b: f64,
    pub sigma2_r: f64,
    /// Average gain of the B-relay links (both directions).
    pub gain_br: f64,
    /// Number of points on the receive-combiner grid over `[0, 1]`.
    pub alpha_grid: usize,
    /// Width at which the golden refinement of the combiner parameter stops.
    pub alpha_tol: f64,
    pub iter_max: usize,
    pub conv_tol: f64,
    /// Grid resolution used by every one-dimensional search.
    pub grid_points: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m_t: 3,
            m_r: 3,
            p_a: 10.0,
            p_b: 10.0,
            p_r: 10.0,
            sigma2_a: 0.01,
            sigma2_b: 0.01,
            sigma2_r: 0.01,
            gain_br: 1.0,
            alpha_grid: 21,
            alpha_tol: 1e-3,
            iter_max: 50,
            conv_tol: 1e-6,
            grid_points: 201,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m_t < 2 {
            return bad(format!("m_t must be at least 2, got {}", self.m_t));
        }
        if self.m_r < 1 {
            return bad("m_r must be at least 1".into());
        }
        for (name, v) in [
            ("p_a", self.p_a),
            ("p_b", self.p_b),
            ("p_r", self.p_r),
            ("sigma2_a", self.sigma2_a),
            ("sigma2_b", self.sigma2_b),
            ("sigma2_r", self.sigma2_r),
            ("gain_br", self.gain_br),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.iter_max < 1 {
            return bad("iter_max must be at least 1".into());
        }
        if !(self.conv_tol > 0.0) {
            return bad("conv_tol must be positive".into());
        }
        if self.alpha_grid < 2 {
            return bad("alpha_grid must be at least 2".into());
        }
        if !(self.alpha_tol > 0.0) {
            return bad("alpha_tol must be positive".into());
        }
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2".into());
        }
        Ok(())
    }
}

/// One draw of every channel between A, B and the relay.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// A to relay receive antennas (`M_R`).
    pub h_ar: CVec,
    /// B to relay receive antennas (`M_R`).
    pub h_br: CVec,
    /// Relay transmit antennas to A (`M_T`).
    pub h_ra: CVec,
    /// Relay transmit antennas to B (`M_T`).
    pub h_rb: CVec,
    /// Residual self-interference at A and B.
    pub h_aa: Complex64,
    pub h_bb: Complex64,
    /// Residual loop channel at the relay, `M_R x M_T`.
    pub h_rr: CMat,
}

fn cn(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn cn_vec(rng: &mut ChaCha8Rng, n: usize, variance: f64) -> CVec {
    DVector::from_iterator(n, (0..n).map(|_| cn(rng, variance)))
}

/// Draws a Rayleigh realization. Deterministic in `(config, seed)`; the draw
/// order is fixed so changing one variance never reshuffles the others.
pub fn sample_channels(config: &SystemConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mt, mr) = (config.m_t, config.m_r);
    let h_ar = cn_vec(&mut rng, mr, 1.0);
    let h_br = cn_vec(&mut rng, mr, config.gain_br);
    let h_ra = cn_vec(&mut rng, mt, 1.0);
    let h_rb = cn_vec(&mut rng, mt, config.gain_br);
    let h_aa = cn(&mut rng, config.sigma2_a);
    let h_bb = cn(&mut rng, config.sigma2_b);
    let mut h_rr = DMatrix::zeros(mr, mt);
    for j in 0..mt {
        for i in 0..mr {
            h_rr[(i, j)] = cn(&mut rng, config.sigma2_r);
        }
    }
    if config.sigma2_r == 0.0 {
        h_rr.fill(Complex64::new(0.0, 0.0));
    }
    ChannelRealization { h_ar, h_br, h_ra, h_rb, h_aa, h_bb, h_rr }
}

impl ChannelRealization {
    pub fn m_t(&self) -> usize {
        self.h_ra.len()
    }

    pub fn m_r(&self) -> usize {
        self.h_ar.len()
    }

    pub fn h_aa2(&self) -> f64 {
        self.h_aa.norm_sqr()
    }

    pub fn h_bb2(&self) -> f64 {
        self.h_bb.norm_sqr()
    }

    /// Copy with the relay loop channel removed.
    pub fn without_relay_si(&self) -> Self {
        let mut c = self.clone();
        c.h_rr.fill(Complex64::new(0.0, 0.0));
        c
    }

    /// Copy with the source self-interference removed.
    pub fn without_source_si(&self) -> Self {
        let mut c = self.clone();
        c.h_aa = Complex64::new(0.0, 0.0);
        c.h_bb = Complex64::new(0.0, 0.0);
        c
    }

    pub fn check(&self) -> Result<()> {
        let (mt, mr) = (self.m_t(), self.m_r());
        if self.h_br.len() != mr || self.h_rb.len() != mt || self.h_rr.shape() != (mr, mt) {
            return Err(Error::Dimension("inconsistent channel dimensions".into()));
        }
        let finite = self
            .h_ar
            .iter()
            .chain(self.h_br.iter())
            .chain(self.h_ra.iter())
            .chain(self.h_rb.iter())
            .chain(self.h_rr.iter())
            .chain([self.h_aa, self.h_bb].iter())
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::Parse("non-finite channel entry".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ChannelDoc::from(self)).expect("channel document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ChannelDoc = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let ch = doc.into_channels()?;
        ch.check()?;
        Ok(ch)
    }
}

/// JSON layout of a realization: complex numbers as `[re, im]`, the loop
/// channel as a list of rows.
#[derive(Serialize, Deserialize)]
struct ChannelDoc {
    h_ar: Vec<Complex64>,
    h_br: Vec<Complex64>,
    h_ra: Vec<Complex64>,
    h_rb: Vec<Complex64>,
    h_aa: Complex64,
    h_bb: Complex64,
    h_rr: Vec<Vec<Complex64>>,
}

impl From<&ChannelRealization> for ChannelDoc {
    fn from(c: &ChannelRealization) -> Self {
        ChannelDoc {
            h_ar: c.h_ar.iter().copied().collect(),
            h_br: c.h_br.iter().copied().collect(),
            h_ra: c.h_ra.iter().copied().collect(),
            h_rb: c.h_rb.iter().copied().collect(),
            h_aa: c.h_aa,
            h_bb: c.h_bb,
            h_rr: c.h_rr.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl ChannelDoc {
    fn into_channels(self) -> Result<ChannelRealization> {
        let mr = self.h_rr.len();
        let mt = self.h_rr.first().map_or(0, |r| r.len());
        if self.h_rr.iter().any(|r| r.len() != mt) {
            return Err(Error::Dimension("ragged h_rr rows".into()));
        }
        let h_rr = DMatrix::from_fn(mr, mt, |i, j| self.h_rr[i][j]);
        Ok(ChannelRealization {
            h_ar: DVector::from_vec(self.h_ar),
            h_br: DVector::from_vec(self.h_br),
            h_ra: DVector::from_vec(self.h_ra),
            h_rb: DVector::from_vec(self.h_rb),
            h_aa: self.h_aa,
            h_bb: self.h_bb,
            h_rr,
        })
    }
}

/// Rank-one relay processing `W = w_t w_r^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayBeamformer {
    pub w_t: CVec,
    /// Unit-norm receive combiner.
    pub w_r: CVec,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p_a: f64,
    pub p_b: f64,
    /// Resulting relay output power.
    pub p_r: f64,
}

/// A feasible solver output together with its convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub beamformer: RelayBeamformer,
    pub powers: PowerAllocation,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    /// Pre-log factor applied to both rates (1 for one-phase schemes, 1/2 for
    /// two-phase ones).
    pub prelog: f64,
    /// Objective after every outer alternation.
    pub trace: Vec<f64>,
    /// Objective history of the last inner beamformer solve (DC iterations).
    pub inner_trace: Vec<f64>,
    pub iterations: usize,
}

impl OperatingPoint {
    /// Evaluates SINRs, rates and relay power for a fixed beamformer and powers.
    pub fn evaluate(
        channels: &ChannelRealization,
        beamformer: RelayBeamformer,
        p_a: f64,
        p_b: f64,
        prelog: f64,
    ) -> Self {
        let (gamma_a, gamma_b) = sinr_pair(channels, &beamformer.w_t, &beamformer.w_r, p_a, p_b);
        let p_r = relay_output_power(channels, &beamformer.w_t, &beamformer.w_r, p_a, p_b);
        OperatingPoint {
            beamformer,
            powers: PowerAllocation { p_a, p_b, p_r },
            gamma_a,
            gamma_b,
            rate_a: prelog * (1.0 + gamma_a).log2(),
            rate_b: prelog * (1.0 + gamma_b).log2(),
            prelog,
            trace: Vec::new(),
            inner_trace: Vec::new(),
            iterations: 0,
        }
    }

    pub fn sum_rate(&self) -> f64 {
        self.rate_a + self.rate_b
    }

    pub fn report(&self) -> SolverReport {
        SolverReport {
            rate_a: self.rate_a,
            rate_b: self.rate_b,
            sum_rate: self.sum_rate(),
            gamma_a: self.gamma_a,
            gamma_b: self.gamma_b,
            p_a: self.powers.p_a,
            p_b: self.powers.p_b,
            p_r: self.powers.p_r,
            alpha: self.beamformer.alpha,
            iterations: self.iterations,
            trace: self.trace.clone(),
            inner_trace: self.inner_trace.clone(),
            w_t: self.beamformer.w_t.iter().copied().collect(),
            w_r: self.beamformer.w_r.iter().copied().collect(),
        }
    }
}

/// JSON-friendly summary of an [`OperatingPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub rate_a: f64,
    pub rate_b: f64,
    pub sum_rate: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_r: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub inner_trace: Vec<f64>,
    pub w_t: Vec<Complex64>,
    pub w_r: Vec<Complex64>,
}

/// Squared effective gains seen through the relay beamformer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveGains {
    /// `|h_RA^H w_t|^2`
    pub c_at: f64,
    /// `|w_r^H h_BR|^2`
    pub c_rb: f64,
    /// `|h_RB^H w_t|^2`
    pub c_bt: f64,
    /// `|w_r^H h_AR|^2`
    pub c_ra: f64,
}

impl EffectiveGains {
    pub fn sinr_pair(&self, h_aa2: f64, h_bb2: f64, p_a: f64, p_b: f64) -> (f64, f64) {
        let ga = p_b * self.c_at * self.c_rb / (self.c_at + p_a * h_aa2 + 1.0);
        let gb = p_a * self.c_bt * self.c_ra / (self.c_bt + p_b * h_bb2 + 1.0);
        (ga, gb)
    }
}

pub fn effective_gains(channels: &ChannelRealization, w_t: &CVec, w_r: &CVec) -> EffectiveGains {
    EffectiveGains {
        c_at: channels.h_ra.dotc(w_t).norm_sqr(),
        c_rb: w_r.dotc(&channels.h_br).norm_sqr(),
        c_bt: channels.h_rb.dotc(w_t).norm_sqr(),
        c_ra: w_r.dotc(&channels.h_ar).norm_sqr(),
    }
}

/// The combiner family indexed by `alpha` exactly as parameterised: the
/// weighted sum of the unit projections of `h_AR` onto `h_BR` and onto its
/// orthogonal complement. Its norm is `sqrt(alpha^2 + 1 - alpha)`.
pub fn receive_combiner_raw(channels: &ChannelRealization, alpha: f64) -> Result<CVec> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange { value: alpha, lo: 0.0, hi: 1.0 });
    }
    let par = vec_projector(&channels.h_br)? * &channels.h_ar;
    let perp = vec_complement_projector(&channels.h_br)? * &channels.h_ar;
    let (np, nq) = (par.norm(), perp.norm());
    if nq < 1e-10 {
        return Err(Error::DegenerateGeometry("h_AR is parallel to h_BR"));
    }
    if np < 1e-10 {
        return Err(Error::DegenerateGeometry("h_AR is orthogonal to h_BR"));
    }
    let a = Complex64::new(alpha / np, 0.0);
    let b = Complex64::new((1.0 - alpha).sqrt() / nq, 0.0);
    Ok(par * a + perp * b)
}

/// Unit-norm receive combiner for `alpha` (the raw family renormalised).
pub fn receive_combiner(channels: &ChannelRealization, alpha: f64) -> Result<CVec> {
    let w = receive_combiner_raw(channels, alpha)?;
    let n = w.norm();
    Ok(w / Complex64::new(n, 0.0))
}

/// [`receive_combiner`], falling back to the surviving direction when the two
/// source channels are (numerically) parallel or orthogonal at the relay.
pub fn receive_combiner_or_endpoint(channels: &ChannelRealization, alpha: f64) -> Result<CVec> {
    match receive_combiner(channels, alpha) {
        Err(Error::DegenerateGeometry(_)) => {
            let par = vec_projector(&channels.h_br)? * &channels.h_ar;
            let perp = &channels.h_ar - &par;
            let pick = if perp.norm() >= par.norm() && alpha < 1.0 {
                perp
            } else if par.norm() > 0.0 {
                par
            } else {
                channels.h_br.clone()
            };
            let n = pick.norm();
            if !(n > 0.0) {
                return Err(Error::ZeroVector);
            }
            Ok(pick / Complex64::new(n, 0.0))
        }
        other => other,
    }
}

/// `W = w_t w_r^H`, mapping relay receive space (`M_R`) to transmit space (`M_T`).
pub fn assemble_relay_matrix(w_t: &CVec, w_r: &CVec) -> Result<CMat> {
    if w_t.is_empty() || w_r.is_empty() {
        return Err(Error::Dimension("empty beamformer".into()));
    }
    Ok(w_t * w_r.adjoint())
}

/// Post-ZF SINRs at A and B for the rank-one relay.
pub fn sinr_pair(channels: &ChannelRealization, w_t: &CVec, w_r: &CVec, p_a: f64, p_b: f64) -> (f64, f64) {
    effective_gains(channels, w_t, w_r).sinr_pair(channels.h_aa2(), channels.h_bb2(), p_a, p_b)
}

/// SINRs for a general relay matrix `W`.
pub fn sinr_pair_full(channels: &ChannelRealization, w: &CMat, p_a: f64, p_b: f64) -> (f64, f64) {
    let a_row = channels.h_ra.adjoint() * w; // 1 x M_R
    let b_row = channels.h_rb.adjoint() * w;
    let sig_a = (&a_row * &channels.h_br)[(0, 0)].norm_sqr();
    let sig_b = (&b_row * &channels.h_ar)[(0, 0)].norm_sqr();
    let ga = p_b * sig_a / (a_row.norm_squared() + p_a * channels.h_aa2() + 1.0);
    let gb = p_a * sig_b / (b_row.norm_squared() + p_b * channels.h_bb2() + 1.0);
    (ga, gb)
}

/// Relay output power for the rank-one relay.
pub fn relay_output_power(
    channels: &ChannelRealization,
    w_t: &CVec,
    w_r: &CVec,
    p_a: f64,
    p_b: f64,
) -> f64 {
    let t2 = w_t.norm_squared();
    let ca = w_r.dotc(&channels.h_ar).norm_sqr();
    let cb = w_r.dotc(&channels.h_br).norm_sqr();
    p_a * t2 * ca + p_b * t2 * cb + t2
}

/// Relay output power for a general relay matrix under zero forcing.
pub fn relay_output_power_full(channels: &ChannelRealization, w: &CMat, p_a: f64, p_b: f64) -> f64 {
    p_a * (w * &channels.h_ar).norm_squared()
        + p_b * (w * &channels.h_br).norm_squared()
        + (w * w.adjoint()).trace().re
}

/// `|w_r^H H_RR w_t|`, the loop leakage left by the beamformer.
pub fn zf_residual(channels: &ChannelRealization, w_t: &CVec, w_r: &CVec) -> f64 {
    (w_r.adjoint() * &channels.h_rr * w_t)[(0, 0)].norm()
}
