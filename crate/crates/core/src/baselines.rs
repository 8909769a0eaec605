//! Benchmark schemes: two-phase half-duplex network coding, two-phase
//! full-duplex one-way relaying, the relay-loop-free upper bound and the
//! local-CSI variant of the proposed scheme.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hd_relay::{hd_matrix_rate_given_rb, hd_matrix_sum_rate, MatrixOperatingPoint};
use crate::model::{
    assemble_relay_matrix, receive_combiner_or_endpoint, ChannelRealization, OperatingPoint, RelayBeamformer, SystemConfig,
};
use crate::numerics::{vec_complement_projector, CMat, CVec};
use crate::p1::max_rate_given_rb;
use crate::p2::max_sum_rate;
use crate::subspace::{transmit_basis, SolverMode, TransmitSpace};

/// The schemes the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    ProposedFd,
    HdAnc,
    FdOneway,
    FdUpperBound,
    LocalCsi,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] =
        [SchemeId::ProposedFd, SchemeId::HdAnc, SchemeId::FdOneway, SchemeId::FdUpperBound, SchemeId::LocalCsi];

    /// Tag used in tables and JSON.
    pub fn tag(self) -> &'static str {
        match self {
            SchemeId::ProposedFd => "proposed_fd",
            SchemeId::HdAnc => "hd_anc",
            SchemeId::FdOneway => "fd_oneway",
            SchemeId::FdUpperBound => "fd_upper_bound",
            SchemeId::LocalCsi => "local_csi",
        }
    }

    /// Short command-line name.
    pub fn short(self) -> &'static str {
        match self {
            SchemeId::ProposedFd => "proposed",
            SchemeId::HdAnc => "hd",
            SchemeId::FdOneway => "fd2",
            SchemeId::FdUpperBound => "ub",
            SchemeId::LocalCsi => "localcsi",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        SchemeId::ALL
            .into_iter()
            .find(|id| id.tag() == s || id.short() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}' (expected proposed, hd, fd2, ub or localcsi)")))
    }
}

/// What a two-way solver is asked to optimise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    SumRate,
    /// Maximise A's rate with B's rate at least this value.
    RateB(f64),
}

fn solve_with(channels: &ChannelRealization, objective: Objective, config: &SystemConfig, mode: SolverMode) -> Result<OperatingPoint> {
    match objective {
        Objective::SumRate => max_sum_rate(channels, config, mode),
        Objective::RateB(r_b) => max_rate_given_rb(channels, r_b, config, mode),
    }
}

/// The proposed one-phase full-duplex scheme.
pub fn proposed_solve(channels: &ChannelRealization, objective: Objective, config: &SystemConfig) -> Result<OperatingPoint> {
    solve_with(channels, objective, config, SolverMode::PROPOSED)
}

/// Channels as seen by the half-duplex scheme: no self-interference anywhere.
pub fn half_duplex_channels(channels: &ChannelRealization) -> ChannelRealization {
    channels.without_relay_si().without_source_si()
}

/// Two-phase half-duplex analog network coding restricted to a rank-one
/// relay, solved with the proposed machinery (full source powers, no zero
/// forcing). Rates carry the one-half pre-log; a rate target is therefore met
/// with twice the per-phase rate.
pub fn hd_anc_rank_one_solve(channels: &ChannelRealization, objective: Objective, config: &SystemConfig) -> Result<OperatingPoint> {
    solve_with(&half_duplex_channels(channels), objective, config, SolverMode::HALF_DUPLEX)
}

/// Two-phase half-duplex analog network coding with a general relay matrix,
/// warm-started from the rank-one solution.
pub fn hd_anc_solve(channels: &ChannelRealization, objective: Objective, config: &SystemConfig) -> Result<MatrixOperatingPoint> {
    let hd = half_duplex_channels(channels);
    let warm: Vec<CMat> = hd_anc_rank_one_solve(channels, objective, config)
        .ok()
        .and_then(|op| assemble_relay_matrix(&op.beamformer.w_t, &op.beamformer.w_r).ok())
        .into_iter()
        .collect();
    match objective {
        Objective::SumRate => Ok(hd_matrix_sum_rate(&hd, config, &warm)),
        Objective::RateB(r_b) => hd_matrix_rate_given_rb(&hd, config, r_b, &warm),
    }
}

/// Relay-to-destination direction for the one-way full-duplex benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    BToA,
    AToB,
}

/// End-to-end SINR of an amplify-and-forward hop pair with receive gain
/// `c_in`, transmit gain `c_out` and the relay scaled to its budget.
pub fn one_way_sinr(p_src: f64, c_in: f64, p_r: f64, c_out: f64) -> f64 {
    let x = p_src * c_in;
    let y = p_r * c_out;
    x * y / (x + y + 1.0)
}

fn complement_or_identity(v: &CVec) -> Result<CMat> {
    if v.norm() <= 1e-14 {
        Ok(CMat::identity(v.len(), v.len()))
    } else {
        vec_complement_projector(v)
    }
}

/// Receive- and transmit-zero-forcing SINRs of one direction.
pub fn fd_oneway_sinrs(channels: &ChannelRealization, config: &SystemConfig, direction: Direction) -> Result<(f64, f64)> {
    let (h_in, h_out, p_src) = match direction {
        Direction::BToA => (&channels.h_br, &channels.h_ra, config.p_b),
        Direction::AToB => (&channels.h_ar, &channels.h_rb, config.p_a),
    };
    // transmit along h_out, receive orthogonally to the loop it creates
    let d = complement_or_identity(&(&channels.h_rr * h_out))?;
    let rzf = one_way_sinr(p_src, (&d * h_in).norm_squared(), config.p_r, h_out.norm_squared());
    // receive along h_in, transmit orthogonally to the loop it sees
    let b = complement_or_identity(&(channels.h_rr.adjoint() * h_in))?;
    let tzf = one_way_sinr(p_src, h_in.norm_squared(), config.p_r, (&b * h_out).norm_squared());
    Ok((rzf, tzf))
}

/// One-way full-duplex rate of a direction using the better zero-forcing side.
pub fn fd_oneway_direction_rate(channels: &ChannelRealization, config: &SystemConfig, direction: Direction) -> Result<f64> {
    let (rzf, tzf) = fd_oneway_sinrs(channels, config, direction)?;
    Ok((1.0 + rzf.max(tzf)).log2())
}

/// `(R_A, R_B)` of the one-way scheme, each received at full time share.
pub fn fd_oneway_rates(channels: &ChannelRealization, config: &SystemConfig) -> Result<(f64, f64)> {
    Ok((
        fd_oneway_direction_rate(channels, config, Direction::BToA)?,
        fd_oneway_direction_rate(channels, config, Direction::AToB)?,
    ))
}

/// Time-sharing segment `(t R_A, (1 - t) R_B)` for `t` from 1 down to 0.
pub fn fd_oneway_region(channels: &ChannelRealization, config: &SystemConfig, n_points: usize) -> Result<Vec<(f64, f64)>> {
    let (ra, rb) = fd_oneway_rates(channels, config)?;
    let n = n_points.max(2);
    Ok((0..n)
        .map(|i| {
            let t = 1.0 - i as f64 / (n - 1) as f64;
            (t * ra, (1.0 - t) * rb)
        })
        .collect())
}

/// Sum rate of the one-way scheme with equal time shares.
pub fn fd_oneway_sum_rate(channels: &ChannelRealization, config: &SystemConfig) -> Result<f64> {
    let (ra, rb) = fd_oneway_rates(channels, config)?;
    Ok(0.5 * (ra + rb))
}

fn objective_value(op: &OperatingPoint, objective: Objective) -> f64 {
    match objective {
        Objective::SumRate => op.sum_rate(),
        Objective::RateB(_) => op.rate_a,
    }
}

/// The proposed scheme with the relay loop removed (`H_RR = 0`, no zero
/// forcing). When `seed` (a proposed-scheme solution on the same channels)
/// scores higher it is returned instead, since it is feasible here too.
pub fn upper_bound_solve(
    channels: &ChannelRealization,
    objective: Objective,
    config: &SystemConfig,
    seed: Option<&OperatingPoint>,
) -> Result<OperatingPoint> {
    let free = channels.without_relay_si();
    let solved = solve_with(&free, objective, config, SolverMode::NO_RELAY_SI);
    let seeded = seed.map(|s| {
        let mut op = OperatingPoint::evaluate(&free, s.beamformer.clone(), s.powers.p_a, s.powers.p_b, 1.0);
        op.trace = s.trace.clone();
        op.inner_trace = s.inner_trace.clone();
        op.iterations = s.iterations;
        op
    });
    match (solved, seeded) {
        (Ok(a), Some(b)) => Ok(if objective_value(&b, objective) > objective_value(&a, objective) { b } else { a }),
        (Ok(a), None) => Ok(a),
        (Err(_), Some(b)) => Ok(b),
        (Err(e), None) => Err(e),
    }
}

/// Full source powers, the midpoint combiner and a random zero-forcing
/// transmit direction at full relay power.
pub fn local_csi_sum_rate(channels: &ChannelRealization, config: &SystemConfig, seed: u64) -> Result<OperatingPoint> {
    let alpha = 0.5;
    let w_r = receive_combiner_or_endpoint(channels, alpha)?;
    let basis = transmit_basis(channels, &w_r, TransmitSpace::ZeroForcing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = CVec::from_fn(basis.ncols(), |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let z = &z / Complex64::new(z.norm(), 0.0);
    let c_ra = w_r.dotc(&channels.h_ar).norm_sqr();
    let c_rb = w_r.dotc(&channels.h_br).norm_sqr();
    let budget = config.p_r / (config.p_a * c_ra + config.p_b * c_rb + 1.0);
    let w_t = (&basis * z) * Complex64::new(budget.sqrt(), 0.0);
    let bf = RelayBeamformer { w_t, w_r, alpha };
    Ok(OperatingPoint::evaluate(channels, bf, config.p_a, config.p_b, 1.0))
}
