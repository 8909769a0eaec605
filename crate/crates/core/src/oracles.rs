//! Brute-force reference solvers used to check the closed forms.
//!
//! These only evaluate the signal model (SINRs, relay power) on candidates
//! produced by grids or random sampling. None of them touches the transmit
//! subspace geometry or the solver modules, so agreement is meaningful.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{relay_output_power, sinr_pair, ChannelRealization, SystemConfig};
use crate::numerics::{orth_complement_projector, CMat, CVec};

/// Result of an exhaustive or sampled search. `best_value` is
/// `f64::NEG_INFINITY` when no candidate was feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub best_value: f64,
    /// Oracle-specific coordinates of the best candidate.
    pub best_point: Vec<f64>,
    pub samples: usize,
    /// Grid step, or the final refinement radius for sampled oracles.
    pub resolution: f64,
}

impl OracleReport {
    pub fn feasible(&self) -> bool {
        self.best_value > f64::NEG_INFINITY
    }
}

/// What the power grid maximises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerObjective {
    /// A's SINR subject to B's SINR reaching the target.
    RateRegion { gamma_b: f64 },
    /// `log2(1+gamma_A) + log2(1+gamma_B)`.
    SumRate,
}

/// Exhaustive `n x n` grid over `[0, P_A] x [0, P_B]`; relay power and (for
/// the region objective) B's target are checked at every node.
/// `best_point` is `[p_A, p_B]` and `resolution` the larger grid step.
pub fn grid_power_oracle(
    channels: &ChannelRealization,
    w_t: &CVec,
    w_r: &CVec,
    objective: PowerObjective,
    n: usize,
    config: &SystemConfig,
) -> OracleReport {
    let n = n.max(2);
    let step_a = config.p_a / (n - 1) as f64;
    let step_b = config.p_b / (n - 1) as f64;
    let relay_cap = config.p_r * (1.0 + 1e-12);
    let eval = |p_a: f64, p_b: f64| -> f64 {
        if relay_output_power(channels, w_t, w_r, p_a, p_b) > relay_cap {
            return f64::NEG_INFINITY;
        }
        let (ga, gb) = sinr_pair(channels, w_t, w_r, p_a, p_b);
        match objective {
            PowerObjective::RateRegion { gamma_b } => {
                if gb >= gamma_b {
                    ga
                } else {
                    f64::NEG_INFINITY
                }
            }
            PowerObjective::SumRate => (1.0 + ga).log2() + (1.0 + gb).log2(),
        }
    };
    let (value, p_a, p_b) = (0..n)
        .into_par_iter()
        .map(|i| {
            let p_a = if i == n - 1 { config.p_a } else { step_a * i as f64 };
            let mut best = (f64::NEG_INFINITY, p_a, 0.0);
            for j in 0..n {
                let p_b = if j == n - 1 { config.p_b } else { step_b * j as f64 };
                let v = eval(p_a, p_b);
                if v > best.0 {
                    best = (v, p_a, p_b);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, 0.0, 0.0), |x, y| if y.0 > x.0 { y } else { x });
    OracleReport {
        best_value: value,
        best_point: vec![p_a, p_b],
        samples: n * n,
        resolution: step_a.max(step_b),
    }
}

/// Orthonormal basis of the subspace a zero-forcing `w_t` may use, built by
/// Gram-Schmidt on the columns of the complement projector of `H_RR^H w_r`.
/// The whole space when the loop leakage direction vanishes.
pub fn zero_forcing_directions(channels: &ChannelRealization, w_r: &CVec) -> CMat {
    let m = channels.m_t();
    let v = channels.h_rr.adjoint() * w_r;
    let proj = if v.norm() > 0.0 {
        orth_complement_projector(&CMat::from_column_slice(m, 1, v.as_slice())).unwrap_or_else(|_| CMat::identity(m, m))
    } else {
        CMat::identity(m, m)
    };
    let mut cols: Vec<CVec> = Vec::new();
    for k in 0..m {
        let mut u = proj.column(k).into_owned();
        for c in &cols {
            let p = c.dotc(&u);
            u -= c * p;
        }
        let nrm = u.norm();
        if nrm > 1e-8 {
            cols.push(u / Complex64::new(nrm, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

/// Constraints of the sampled transmit-beamformer search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamformerConstraints {
    /// Bound on `|w_t|^2`; samples sit on this sphere.
    pub budget: f64,
    /// Required `|h_RB^H w_t|^2`.
    pub min_s_b: f64,
    pub zero_forcing: bool,
}

const BATCH: usize = 4096;

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// Random unit directions in the allowed subspace, scaled to the budget and
/// filtered by B's requirement, followed by a shrinking-radius random local
/// search around the best sample. `best_point` holds the real and imaginary
/// parts of the best `w_t`, interleaved. Deterministic in `seed`.
pub fn sampled_beamformer_oracle<F>(
    channels: &ChannelRealization,
    w_r: &CVec,
    constraints: &BeamformerConstraints,
    objective: F,
    n_samples: usize,
    seed: u64,
) -> OracleReport
where
    F: Fn(&CVec) -> f64 + Sync,
{
    let basis = if constraints.zero_forcing {
        zero_forcing_directions(channels, w_r)
    } else {
        CMat::identity(channels.m_t(), channels.m_t())
    };
    let scale = Complex64::new(constraints.budget.max(0.0).sqrt(), 0.0);
    let to_beam = |z: &CVec| -> CVec {
        let nrm = z.norm();
        if nrm > 0.0 {
            (&basis * z) * (scale / nrm)
        } else {
            CVec::zeros(basis.nrows())
        }
    };
    let score = |w: &CVec| -> f64 {
        if channels.h_rb.dotc(w).norm_sqr() >= constraints.min_s_b {
            let v = objective(w);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        } else {
            f64::NEG_INFINITY
        }
    };
    let dim = basis.ncols();
    let batches = n_samples.div_ceil(BATCH);
    let (best_value, best_z) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let count = BATCH.min(n_samples - b * BATCH);
            let mut best = (f64::NEG_INFINITY, CVec::zeros(dim));
            for _ in 0..count {
                let z = gaussian(&mut rng, dim);
                let v = score(&to_beam(&z));
                if v > best.0 {
                    best = (v, z);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, CVec::zeros(dim)), |x, y| if y.0 > x.0 { y } else { x });
    let mut best = (best_value, best_z);
    let mut radius = 0.1;
    if best.0 > f64::NEG_INFINITY && dim > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let mut misses = 0;
        while radius > 1e-10 {
            let nrm = best.1.norm();
            let step = gaussian(&mut rng, dim) * Complex64::new(radius * nrm, 0.0);
            let cand = &best.1 + step;
            let v = score(&to_beam(&cand));
            if v > best.0 {
                best = (v, cand);
                misses = 0;
            } else {
                misses += 1;
                if misses >= 1000 {
                    radius *= 0.5;
                    misses = 0;
                }
            }
        }
    }
    let w = to_beam(&best.1);
    OracleReport {
        best_value: best.0,
        best_point: w.iter().flat_map(|z| [z.re, z.im]).collect(),
        samples: n_samples,
        resolution: radius,
    }
}

/// `max |d2^H z|^2` over unit `z` with `|d1^H z|^2 = q`, solved on the
/// two-dimensional slice `z = b d1 + g d2'` (`d2'` the phase-aligned `d2`).
/// The norm constraint `b^2 + g^2 + 2 b g r = 1` is an ellipse in `(b, g)`;
/// it is swept densely, every crossing of `(b + g r)^2 = q` is bisected and
/// the best `(b r + g)^2` returned.
pub fn lagrangian_boundary_oracle(d1: &CVec, d2: &CVec, q: f64) -> f64 {
    let r = d2.dotc(d1).norm().min(1.0);
    if 1.0 - r < 1e-12 {
        return q;
    }
    if q >= 1.0 {
        // z must be d1 up to phase
        return r * r;
    }
    let (sp, sm) = ((1.0 + r).sqrt(), (1.0 - r).sqrt());
    let point = |t: f64| {
        let (x, y) = (t.cos() / sp, t.sin() / sm);
        let b = (x + y) / std::f64::consts::SQRT_2;
        let g = (x - y) / std::f64::consts::SQRT_2;
        (b, g)
    };
    let h = |t: f64| {
        let (b, g) = point(t);
        (b + g * r).powi(2) - q
    };
    let value = |t: f64| {
        let (b, g) = point(t);
        (b * r + g).powi(2)
    };
    let n = 20_000;
    let dt = std::f64::consts::TAU / n as f64;
    let mut best = f64::NEG_INFINITY;
    let mut closest = (f64::INFINITY, 0.0);
    for i in 0..n {
        let (t0, t1) = (dt * i as f64, dt * (i + 1) as f64);
        let (h0, h1) = (h(t0), h(t1));
        if h0.abs() < closest.0 {
            closest = (h0.abs(), t0);
        }
        if h0 == 0.0 {
            best = best.max(value(t0));
        } else if h0.signum() != h1.signum() {
            let (mut lo, mut hi, mut hlo) = (t0, t1, h0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let hm = h(mid);
                if hm.signum() == hlo.signum() {
                    lo = mid;
                    hlo = hm;
                } else {
                    hi = mid;
                }
            }
            best = best.max(value(0.5 * (lo + hi)));
        }
    }
    if best == f64::NEG_INFINITY {
        // the level set only touches the ellipse (q at its extreme): polish
        // the closest sweep point by golden search on -|h|
        let (mut a, mut b) = (closest.1 - dt, closest.1 + dt);
        for _ in 0..200 {
            let m1 = b - 0.618_033_988_749_894_8 * (b - a);
            let m2 = a + 0.618_033_988_749_894_8 * (b - a);
            if h(m1).abs() <= h(m2).abs() {
                b = m2;
            } else {
                a = m1;
            }
        }
        best = value(0.5 * (a + b));
    }
    best
}

/// Grid maximisation of a function of `(s_A, s_B) = (|h_RA^H w|^2, |h_RB^H w|^2)`
/// over zero-forcing `w_t` with `|w_t|^2 = budget`, for a two-dimensional
/// allowed subspace. Directions `cos(theta) u1 + sin(theta) e^{j psi} u2` are
/// gridded `n x n`, then the best node is polished by alternating golden
/// searches in `theta` and `psi` on shrinking windows. `best_point` is
/// `[s_A, s_B]`.
pub fn grid_dc_oracle<F>(
    channels: &ChannelRealization,
    w_r: &CVec,
    budget: f64,
    objective: F,
    n: usize,
) -> Result<OracleReport>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let basis = zero_forcing_directions(channels, w_r);
    if basis.ncols() != 2 {
        return Err(Error::Dimension(format!("grid oracle needs a 2-D subspace, got {}", basis.ncols())));
    }
    let a = channels.h_ra.adjoint() * &basis;
    let b = channels.h_rb.adjoint() * &basis;
    let n = n.max(2);
    let d_theta = std::f64::consts::FRAC_PI_2 / (n - 1) as f64;
    let d_psi = std::f64::consts::TAU / n as f64;
    let coords = |theta: f64, psi: f64| -> (f64, f64) {
        let e = Complex64::from_polar(theta.sin(), psi);
        let c = Complex64::new(theta.cos(), 0.0);
        (budget * (a[(0, 0)] * c + a[(0, 1)] * e).norm_sqr(), budget * (b[(0, 0)] * c + b[(0, 1)] * e).norm_sqr())
    };
    let eval = |theta: f64, psi: f64| {
        let (sa, sb) = coords(theta, psi);
        objective(sa, sb)
    };
    let (mut value, mut theta, mut psi) = (0..n)
        .into_par_iter()
        .map(|i| {
            let theta = d_theta * i as f64;
            let mut best = (f64::NEG_INFINITY, theta, 0.0);
            for j in 0..n {
                let psi = d_psi * j as f64;
                let v = eval(theta, psi);
                if v > best.0 {
                    best = (v, theta, psi);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, 0.0, 0.0), |x, y| if y.0 > x.0 { y } else { x });
    let golden = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> (f64, f64) {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..80 {
            let m1 = hi - 0.618_033_988_749_894_8 * (hi - lo);
            let m2 = lo + 0.618_033_988_749_894_8 * (hi - lo);
            if f(m1) >= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, f(x))
    };
    let (mut wt, mut wp) = (2.0 * d_theta, 2.0 * d_psi);
    for _ in 0..60 {
        let lo = (theta - wt).max(0.0);
        let hi = (theta + wt).min(std::f64::consts::FRAC_PI_2);
        let (t, v) = golden(&|t| eval(t, psi), lo, hi);
        if v > value {
            (theta, value) = (t, v);
        }
        let (p, v) = golden(&|p| eval(theta, p), psi - wp, psi + wp);
        if v > value {
            (psi, value) = (p, v);
        }
        wt *= 0.7;
        wp *= 0.7;
    }
    let (sa, sb) = coords(theta, psi);
    Ok(OracleReport {
        best_value: value,
        best_point: vec![sa, sb],
        samples: n * n,
        resolution: d_theta.max(d_psi),
    })
}
