//! Transmit-side geometry shared by the rate-region and sum-rate solvers.
//!
//! Once the receive combiner `w_r` is fixed, the zero-forcing constraint
//! `w_r^H H_RR w_t = 0` confines `w_t` to the null space of `w_r^H H_RR`.
//! Writing `w_t = sqrt(P) N z` with `N` an orthonormal basis of that space and
//! `|z| = 1`, the two quadratic forms the solvers care about become
//!
//! ```text
//! |h_RA^H w_t|^2 = P |a|^2 |d2^H z|^2      a = N^H h_RA, d2 = a/|a|
//! |h_RB^H w_t|^2 = P |b|^2 |d1^H z|^2      b = N^H h_RB, d1 = b/|b|
//! ```
//!
//! so everything is described by `|a|`, `|b|`, `r = |d2^H d1|` and the
//! dimension of the subspace.

use num_complex::Complex64;

use crate::error::Result;
use crate::model::ChannelRealization;
use crate::numerics::{null_space_basis, orthogonal_unit, CMat, CVec};

/// Where the relay transmit beamformer may live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitSpace {
    /// Null space of `w_r^H H_RR` (the whole space when the loop channel
    /// seen through `w_r` vanishes).
    ZeroForcing,
    /// No loop constraint; the basis is the identity.
    Unconstrained,
}

/// How a scheme drives the shared solver machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverMode {
    pub space: TransmitSpace,
    /// Optimise the source powers; otherwise they stay at their budgets.
    pub power_control: bool,
    /// Pre-log factor applied to reported rates.
    pub prelog: f64,
}

impl SolverMode {
    /// One-phase full duplex with relay zero forcing.
    pub const PROPOSED: SolverMode =
        SolverMode { space: TransmitSpace::ZeroForcing, power_control: true, prelog: 1.0 };
    /// Full duplex with the relay loop assumed away.
    pub const NO_RELAY_SI: SolverMode =
        SolverMode { space: TransmitSpace::Unconstrained, power_control: true, prelog: 1.0 };
    /// Two-phase half duplex: full source power, no loop, half pre-log.
    pub const HALF_DUPLEX: SolverMode =
        SolverMode { space: TransmitSpace::Unconstrained, power_control: false, prelog: 0.5 };
}

const TINY: f64 = 1e-14;

/// Orthonormal basis of the admissible transmit subspace for `w_r`.
pub fn transmit_basis(channels: &ChannelRealization, w_r: &CVec, space: TransmitSpace) -> Result<CMat> {
    let m = channels.m_t();
    match space {
        TransmitSpace::Unconstrained => Ok(CMat::identity(m, m)),
        TransmitSpace::ZeroForcing => {
            let v = channels.h_rr.adjoint() * w_r;
            if v.norm() <= TINY * (1.0 + channels.h_rr.norm()) {
                Ok(CMat::identity(m, m))
            } else {
                null_space_basis(&v)
            }
        }
    }
}

/// The reduced description of the transmit subspace for one `w_r`.
#[derive(Debug, Clone)]
pub struct SubspaceGeometry {
    pub basis: CMat,
    /// `N^H h_RA`
    pub a: CVec,
    /// `N^H h_RB`
    pub b: CVec,
    pub norm_a2: f64,
    pub norm_b2: f64,
    /// Unit `b` (zero vector when `b` vanishes).
    pub d1: CVec,
    /// Unit `a` (zero vector when `a` vanishes).
    pub d2: CVec,
    /// `|d2^H d1|`
    pub r: f64,
    /// `arg(d2^H d1)`
    pub phi: f64,
}

fn unit_or_zero(v: &CVec) -> CVec {
    let n = v.norm();
    if n > TINY {
        v / Complex64::new(n, 0.0)
    } else {
        CVec::zeros(v.len())
    }
}

impl SubspaceGeometry {
    pub fn new(channels: &ChannelRealization, w_r: &CVec, space: TransmitSpace) -> Result<Self> {
        let basis = transmit_basis(channels, w_r, space)?;
        Ok(Self::from_basis(channels, basis))
    }

    pub fn from_basis(channels: &ChannelRealization, basis: CMat) -> Self {
        let a = basis.adjoint() * &channels.h_ra;
        let b = basis.adjoint() * &channels.h_rb;
        let d1 = unit_or_zero(&b);
        let d2 = unit_or_zero(&a);
        let ip = d2.dotc(&d1);
        SubspaceGeometry {
            norm_a2: a.norm_squared(),
            norm_b2: b.norm_squared(),
            r: ip.norm().min(1.0),
            phi: ip.arg(),
            basis,
            a,
            b,
            d1,
            d2,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn has_a(&self) -> bool {
        self.norm_a2 > TINY
    }

    pub fn has_b(&self) -> bool {
        self.norm_b2 > TINY
    }

    /// `d1` and `d2` span a single direction.
    pub fn collinear(&self) -> bool {
        1.0 - self.r * self.r < 1e-10
    }

    /// Range of `|d2^H z|^2` over unit `z` with `|d1^H z|^2 = q`.
    pub fn projection_bounds(&self, q: f64) -> (f64, f64) {
        let q = q.clamp(0.0, 1.0);
        if !self.has_b() {
            // no constraint direction: anything in [0,1] (or exactly 1 in 1-D)
            return if self.dim() >= 2 { (0.0, 1.0) } else { (1.0, 1.0) };
        }
        if !self.has_a() {
            return (0.0, 0.0);
        }
        let s = self.r * q.sqrt();
        let t = ((1.0 - q) * (1.0 - self.r * self.r)).max(0.0).sqrt();
        let hi = (s + t).powi(2);
        let lo = if self.dim() >= 3 {
            (s - t).max(0.0).powi(2)
        } else {
            // two-dimensional: only the relative phase is free
            (s - t).powi(2)
        };
        (lo.min(hi), hi)
    }

    /// Bounds on `s_A = P |a|^2 |d2^H z|^2` given `s_B = P |b|^2 |d1^H z|^2`.
    pub fn s_a_bounds(&self, budget: f64, s_b: f64) -> (f64, f64) {
        let q = if self.has_b() { s_b / (budget * self.norm_b2) } else { 0.0 };
        let (lo, hi) = self.projection_bounds(q);
        let scale = budget * self.norm_a2;
        (scale * lo, scale * hi)
    }

    /// Largest reachable `s_B` at the given budget.
    pub fn s_b_max(&self, budget: f64) -> f64 {
        budget * self.norm_b2
    }

    /// Maps a reduced unit vector back to the relay transmit beamformer.
    pub fn beamformer(&self, budget: f64, z: &CVec) -> CVec {
        (&self.basis * z) * Complex64::new(budget.max(0.0).sqrt(), 0.0)
    }

    /// A unit vector orthogonal to both `d1` and `d2`, if the subspace has room.
    pub fn spare_direction(&self) -> Option<CVec> {
        let mut span: Vec<CVec> = Vec::new();
        for d in [&self.d1, &self.d2] {
            if d.norm() > 0.5 {
                let mut v = d.clone();
                for s in &span {
                    let c = s.dotc(&v);
                    v -= s * c;
                }
                let n = v.norm();
                if n > 1e-8 {
                    span.push(v / Complex64::new(n, 0.0));
                }
            }
        }
        let refs: Vec<&CVec> = span.iter().collect();
        orthogonal_unit(&refs, self.dim())
    }

    /// Unit `z` with `|d1^H z|^2 = q` and `|d2^H z|^2 = t`, for any `t` within
    /// [`Self::projection_bounds`]. Boundary points use the closed-form maximiser,
    /// interior ones a relative phase (and, in three or more dimensions, a
    /// component outside `span{d1, d2}`).
    pub fn unit_vector_for(&self, q: f64, t: f64) -> CVec {
        let q = q.clamp(0.0, 1.0);
        let dim = self.dim();
        let first_axis = || {
            let mut e = CVec::zeros(dim);
            e[0] = Complex64::new(1.0, 0.0);
            e
        };
        let mix = |d: &CVec, w: f64| -> CVec {
            // sqrt(w) d + sqrt(1-w) f with f orthogonal to d
            let w = w.clamp(0.0, 1.0);
            let mut z = d * Complex64::new(w.sqrt(), 0.0);
            if w < 1.0 {
                if let Some(f) = orthogonal_unit(&[d], dim) {
                    z += f * Complex64::new((1.0 - w).sqrt(), 0.0);
                } else {
                    z = d.clone();
                }
            }
            z
        };
        match (self.has_a(), self.has_b()) {
            (false, false) => return first_axis(),
            (true, false) => return mix(&self.d2, t),
            (false, true) => return mix(&self.d1, q),
            _ => {}
        }
        if self.collinear() {
            return mix(&self.d1, q);
        }
        let (lo, hi) = self.projection_bounds(q);
        if t >= hi - 1e-14 {
            return crate::p1::boundary_unit_vector(&self.d1, &self.d2, q)
                .unwrap_or_else(|_| mix(&self.d1, q));
        }
        let t = t.max(lo);
        let r = self.r;
        let e = {
            let ip = self.d1.dotc(&self.d2);
            (&self.d2 - &self.d1 * ip) / Complex64::new((1.0 - r * r).sqrt(), 0.0)
        };
        let s = r * q.sqrt();
        let u = ((1.0 - q) * (1.0 - r * r)).sqrt();
        let base = &self.d1 * Complex64::new(q.sqrt(), 0.0);
        let edge = (s - u).powi(2);
        if t >= edge || u <= s {
            let cos = if s * u > 0.0 {
                ((t - s * s - u * u) / (2.0 * s * u)).clamp(-1.0, 1.0)
            } else {
                1.0
            };
            let theta = self.phi + cos.acos();
            base + e * Complex64::from_polar((1.0 - q).sqrt(), theta)
        } else {
            // |s - c u| = sqrt(t) with the e-component rotated against d1
            let c = ((s + t.sqrt()) / u).clamp(0.0, 1.0);
            let theta = self.phi + std::f64::consts::PI;
            let mut z = base + &e * Complex64::from_polar((1.0 - q).sqrt() * c, theta);
            if let Some(f) = self.spare_direction() {
                z += f * Complex64::new(((1.0 - q) * (1.0 - c * c)).max(0.0).sqrt(), 0.0);
            }
            z
        }
    }
}
