//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line. Run with
//! `cargo test --release --test acceptance -- --nocapture`.

use std::time::Instant;

use fdtwrc::baselines::{local_csi_sum_rate, proposed_solve, upper_bound_solve, Objective, SchemeId};
use fdtwrc::harness::{run_experiment, ExperimentKind, ExperimentSpec, ResultTable};
use fdtwrc::model::{
    effective_gains, receive_combiner, relay_output_power, sample_channels, sinr_pair, zf_residual, ChannelRealization,
    OperatingPoint, SystemConfig,
};
use fdtwrc::numerics::{db_to_linear, CVec};
use fdtwrc::oracles::{
    grid_dc_oracle, grid_power_oracle, lagrangian_boundary_oracle, sampled_beamformer_oracle, zero_forcing_directions,
    BeamformerConstraints, PowerObjective,
};
use fdtwrc::p1::{boundary_unit_vector, optimize_fixed_alpha_p1, solve_power_p1, solve_txbf_p1};
use fdtwrc::p2::{dc_step, optimize_fixed_alpha_p2, solve_power_p2, solve_txbf_p2, trace_budget, SumRateTerms};
use fdtwrc::subspace::{SolverMode, TransmitSpace};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20160915;

fn verdict(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn sumrate_spec(schemes: Vec<SchemeId>, base: SystemConfig, kind: ExperimentKind, sweep: Vec<f64>) -> ExperimentSpec {
    ExperimentSpec { kind, schemes, sweep, trials: 1000, seed: SEED, points: 21, base }
}

fn mean_sum(t: &ResultTable, v: f64, s: SchemeId) -> f64 {
    t.row(v, s).expect("row present").mean_sum
}

fn gain(t: &ResultTable, v: f64, s: SchemeId) -> f64 {
    t.row(v, s).and_then(|r| r.gain_vs_hd).expect("gain present")
}

#[test]
fn criterion_1_gain_reproduction() {
    use SchemeId::*;
    let start = Instant::now();
    let spec = sumrate_spec(
        vec![ProposedFd, HdAnc, FdOneway],
        SystemConfig::default(),
        ExperimentKind::SumrateVsSourceSnr,
        vec![10.0],
    );
    let t = run_experiment(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (gp, gf) = (gain(&t, 10.0, ProposedFd), gain(&t, 10.0, FdOneway));
    let pass = (1.41..=1.71).contains(&gp) && (1.10..=1.34).contains(&gf) && secs <= 600.0;
    verdict(
        1,
        pass,
        &format!("proposed/HD = {gp:.4} in [1.41,1.71], fd_oneway/HD = {gf:.4} in [1.10,1.34], {secs:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_high_relay_power() {
    use SchemeId::*;
    let base = SystemConfig { p_r: db_to_linear(20.0), ..Default::default() };
    let spec = sumrate_spec(vec![ProposedFd, HdAnc, FdUpperBound], base, ExperimentKind::SumrateVsSourceSnr, vec![10.0]);
    let t = run_experiment(&spec).unwrap();
    let gp = gain(&t, 10.0, ProposedFd);
    let frac = mean_sum(&t, 10.0, ProposedFd) / mean_sum(&t, 10.0, FdUpperBound);
    let pass = (1.55..=1.85).contains(&gp) && frac >= 0.95;
    verdict(2, pass, &format!("proposed/HD = {gp:.4} in [1.55,1.85], proposed/upper bound = {frac:.4} >= 0.95"));
    assert!(pass);
}

#[test]
fn criterion_3_crossover_orderings() {
    use SchemeId::*;
    let mut notes = Vec::new();
    let mut pass = true;

    let relay = sumrate_spec(
        vec![ProposedFd, FdOneway],
        SystemConfig::default(),
        ExperimentKind::SumrateVsRelaySnr,
        vec![10.0, 15.0, 20.0],
    );
    let t = run_experiment(&relay).unwrap();
    for v in [10.0, 15.0, 20.0] {
        let (p, f) = (mean_sum(&t, v, ProposedFd), mean_sum(&t, v, FdOneway));
        pass &= p >= f;
        notes.push(format!("relay {v} dB: {p:.3} vs fd_oneway {f:.3}"));
    }

    let si = sumrate_spec(
        vec![ProposedFd, HdAnc, FdOneway],
        SystemConfig::default(),
        ExperimentKind::SumrateVsSi,
        vec![5.0],
    );
    let t = run_experiment(&si).unwrap();
    let (p, h, f) = (mean_sum(&t, 5.0, ProposedFd), mean_sum(&t, 5.0, HdAnc), mean_sum(&t, 5.0, FdOneway));
    pass &= p >= h && f >= h;
    notes.push(format!("SI +5 dB: proposed {p:.3}, fd_oneway {f:.3} vs HD {h:.3}"));

    let src = sumrate_spec(
        vec![ProposedFd],
        SystemConfig::default(),
        ExperimentKind::SumrateVsSourceSnr,
        vec![15.0, 25.0],
    );
    let t = run_experiment(&src).unwrap();
    let growth = mean_sum(&t, 25.0, ProposedFd) / mean_sum(&t, 15.0, ProposedFd) - 1.0;
    pass &= growth < 0.15;
    notes.push(format!("source 15->25 dB growth {:.2}% < 15%", 100.0 * growth));

    verdict(3, pass, &notes.join("; "));
    assert!(pass);
}

#[test]
fn criterion_4_antenna_sweep() {
    use SchemeId::*;
    let ms = vec![2.0, 3.0, 4.0, 5.0, 6.0];
    let spec =
        sumrate_spec(vec![ProposedFd, HdAnc], SystemConfig::default(), ExperimentKind::SumrateVsAntennas, ms.clone());
    let t = run_experiment(&spec).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for w in ms.windows(2) {
        let (a, b) = (t.row(w[0], ProposedFd).unwrap(), t.row(w[1], ProposedFd).unwrap());
        pass &= b.mean_sum >= a.mean_sum - a.se_sum.max(b.se_sum);
    }
    for &m in &ms {
        let g = gain(&t, m, ProposedFd);
        if m >= 3.0 {
            pass &= (1.40..=1.70).contains(&g);
        }
        notes.push(format!("M={m}: sum {:.3}, gain {g:.3}", mean_sum(&t, m, ProposedFd)));
    }
    verdict(4, pass, &format!("nondecreasing within 1 SE, gain in [1.40,1.70] for M>=3: {}", notes.join(", ")));
    assert!(pass);
}

fn random_instance(rng: &mut ChaCha8Rng, config: &SystemConfig) -> (ChannelRealization, CVec, f64, f64) {
    let ch = sample_channels(config, rng.random());
    let w_r = receive_combiner(&ch, rng.random_range(0.02..0.98)).unwrap();
    let p_a = config.p_a * rng.random_range(0.2..1.0);
    let p_b = config.p_b * rng.random_range(0.2..1.0);
    (ch, w_r, p_a, p_b)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let nrm = v.norm();
    v / Complex64::new(nrm, 0.0)
}

/// B's SINR target whose required `|h_RB^H w_t|^2` is `frac` of what the
/// zero-forcing subspace can deliver.
fn target_for_fraction(ch: &ChannelRealization, w_r: &CVec, p_a: f64, p_b: f64, p_r: f64, frac: f64) -> (f64, f64, f64) {
    let c_ra = w_r.dotc(&ch.h_ar).norm_sqr();
    let c_rb = w_r.dotc(&ch.h_br).norm_sqr();
    let budget = p_r / (p_a * c_ra + p_b * c_rb + 1.0);
    let n = zero_forcing_directions(ch, w_r);
    let reach = budget * (n.adjoint() * &ch.h_rb).norm_squared();
    let need = frac * reach;
    let gamma_b = need * p_a * c_ra / (p_b * ch.h_bb2() + 1.0 + need);
    (gamma_b, need, budget)
}

/// Objective difference of a power pair against the grid optimum, in units
/// of the local slope times the grid step.
fn slope(f: impl Fn(f64, f64) -> f64, p: (f64, f64), h: f64) -> f64 {
    let e = 1e-6 * h.max(1e-9);
    let gx = (f(p.0 + e, p.1) - f(p.0 - e, p.1)) / (2.0 * e);
    let gy = (f(p.0, p.1 + e) - f(p.0, p.1 - e)) / (2.0 * e);
    (gx * gx + gy * gy).sqrt()
}

#[test]
fn criterion_5_oracle_equivalence() {
    let config = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = [0.0f64; 5];

    // transmit beamformer of the region solver vs sampling + refinement
    for i in 0..100 {
        let (ch, w_r, p_a, p_b) = random_instance(&mut rng, &config);
        let frac = if i % 4 == 0 { 0.0 } else { rng.random_range(0.05..0.95) };
        let (gamma_b, need, budget) = target_for_fraction(&ch, &w_r, p_a, p_b, config.p_r, frac);
        let w_t = solve_txbf_p1(&ch, &w_r, p_a, p_b, gamma_b, config.p_r, TransmitSpace::ZeroForcing).unwrap();
        let closed = ch.h_ra.dotc(&w_t).norm_sqr();
        let cons = BeamformerConstraints { budget, min_s_b: need, zero_forcing: true };
        let oracle =
            sampled_beamformer_oracle(&ch, &w_r, &cons, |w| ch.h_ra.dotc(w).norm_sqr(), 100_000, i as u64).best_value;
        worst[0] = worst[0].max((closed - oracle).abs() / closed.max(1e-12));
    }

    // boundary vector vs the Lagrangian slice solve
    for _ in 0..100 {
        let d1 = random_unit(&mut rng, 3);
        let d2 = random_unit(&mut rng, 3);
        let q = rng.random_range(0.0..1.0);
        let z = boundary_unit_vector(&d1, &d2, q).unwrap();
        worst[1] = worst[1].max((d2.dotc(&z).norm_sqr() - lagrangian_boundary_oracle(&d1, &d2, q)).abs());
    }

    // power allocations vs 1000 x 1000 grids: never beaten, and within the
    // distance the grid step allows
    for _ in 0..100 {
        let (ch, w_r, _, _) = random_instance(&mut rng, &config);
        let (gamma_b, _, _) = target_for_fraction(&ch, &w_r, config.p_a, config.p_b, config.p_r, rng.random_range(0.0..0.9));
        let w_t = solve_txbf_p1(&ch, &w_r, config.p_a, config.p_b, gamma_b, config.p_r, TransmitSpace::ZeroForcing).unwrap();
        let p = solve_power_p1(&ch, &w_t, &w_r, gamma_b, &config).unwrap();
        let ga = |a: f64, b: f64| sinr_pair(&ch, &w_t, &w_r, a, b).0;
        let rep = grid_power_oracle(&ch, &w_t, &w_r, PowerObjective::RateRegion { gamma_b }, 1000, &config);
        let closed = ga(p.0, p.1);
        let scale = slope(ga, p, rep.resolution) * rep.resolution;
        assert!(closed >= rep.best_value - 1e-9 * closed.abs().max(1.0), "grid beats vertex solution");
        worst[2] = worst[2].max((closed - rep.best_value) / scale.max(1e-12));

        let w_t2 = solve_txbf_p2(&ch, &w_r, config.p_a, config.p_b, &config, TransmitSpace::ZeroForcing, None).unwrap().w_t;
        let p2 = solve_power_p2(&ch, &w_t2, &w_r, &config);
        let sr = |a: f64, b: f64| {
            let (x, y) = sinr_pair(&ch, &w_t2, &w_r, a, b);
            (1.0 + x).log2() + (1.0 + y).log2()
        };
        let rep = grid_power_oracle(&ch, &w_t2, &w_r, PowerObjective::SumRate, 1000, &config);
        let closed = sr(p2.0, p2.1);
        let scale = slope(sr, p2, rep.resolution) * rep.resolution;
        assert!(closed >= rep.best_value - 1e-9, "grid beats candidate solution");
        worst[3] = worst[3].max((closed - rep.best_value) / scale.max(1e-12));
    }

    // one DC step vs a direction grid of the linearized objective
    for _ in 0..100 {
        let (ch, w_r, p_a, p_b) = random_instance(&mut rng, &config);
        let budget = trace_budget(&ch, &w_r, p_a, p_b, config.p_r);
        let n = zero_forcing_directions(&ch, &w_r);
        let z = random_unit(&mut rng, n.ncols());
        let w0 = (&n * z) * Complex64::new((budget * rng.random_range(0.1..1.0)).sqrt(), 0.0);
        let anchor = (ch.h_ra.dotc(&w0).norm_sqr(), ch.h_rb.dotc(&w0).norm_sqr());
        let terms = SumRateTerms::new(&ch, &w_r, p_a, p_b);
        let (s_a, s_b, w_t) = dc_step(&ch, &w_r, p_a, p_b, config.p_r, anchor).unwrap();
        let realised = effective_gains(&ch, &w_t, &w_r);
        assert!((realised.c_at - s_a).abs() <= 1e-8 * (1.0 + s_a) && (realised.c_bt - s_b).abs() <= 1e-8 * (1.0 + s_b));
        let closed = terms.linearized(s_a, s_b, anchor);
        let rep = grid_dc_oracle(&ch, &w_r, budget, |a, b| terms.linearized(a, b, anchor), 400).unwrap();
        worst[4] = worst[4].max((closed - rep.best_value).abs() / rep.best_value.abs().max(1e-12));
    }

    let pass = worst[0] <= 1e-4 && worst[1] <= 1e-8 && worst[2] <= 1.0 && worst[3] <= 1.0 && worst[4] <= 1e-4;
    verdict(
        5,
        pass,
        &format!(
            "txbf_p1 rel {:.2e} <= 1e-4; boundary {:.2e} <= 1e-8; power_p1 {:.3} and power_p2 {:.3} slope-steps <= 1; dc_step rel {:.2e} <= 1e-4",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    );
    assert!(pass);
}

struct Invariants {
    checked: usize,
    failures: Vec<String>,
}

impl Invariants {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failures.len() < 10 {
            self.failures.push(what());
        }
    }

    fn operating_point(&mut self, ch: &ChannelRealization, op: &OperatingPoint, config: &SystemConfig, zf: bool, tag: &str) {
        let bf = &op.beamformer;
        if zf {
            let res = zf_residual(ch, &bf.w_t, &bf.w_r);
            self.check(res <= 1e-9, || format!("{tag}: ZF residual {res:e}"));
        }
        let pr = relay_output_power(ch, &bf.w_t, &bf.w_r, op.powers.p_a, op.powers.p_b);
        self.check(pr <= config.p_r + 1e-8, || format!("{tag}: relay power {pr} > {}", config.p_r));
        let (pa, pb) = (op.powers.p_a, op.powers.p_b);
        self.check((0.0..=config.p_a).contains(&pa) && (0.0..=config.p_b).contains(&pb), || {
            format!("{tag}: powers ({pa}, {pb}) outside the box")
        });
        let (ga, gb) = sinr_pair(ch, &bf.w_t, &bf.w_r, pa, pb);
        let ra = op.prelog * (1.0 + ga).log2();
        let rb = op.prelog * (1.0 + gb).log2();
        self.check((ra - op.rate_a).abs() <= 1e-12 * (1.0 + ra) && (rb - op.rate_b).abs() <= 1e-12 * (1.0 + rb), || {
            format!("{tag}: rate/SINR mismatch")
        });
        for trace in [&op.trace, &op.inner_trace] {
            let mono = trace.windows(2).all(|w| w[1] >= w[0] - 1e-9);
            self.check(mono, || format!("{tag}: trace decreases {trace:?}"));
        }
    }
}

#[test]
fn criterion_6_structural_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut inv = Invariants { checked: 0, failures: Vec::new() };
    let mut calls = 0;
    while calls < 10_000 {
        let config = SystemConfig {
            m_t: rng.random_range(2..=5),
            m_r: rng.random_range(2..=5),
            p_a: db_to_linear(rng.random_range(0.0..25.0)),
            p_b: db_to_linear(rng.random_range(0.0..25.0)),
            p_r: db_to_linear(rng.random_range(0.0..25.0)),
            sigma2_a: db_to_linear(rng.random_range(-30.0..0.0)),
            sigma2_b: db_to_linear(rng.random_range(-30.0..0.0)),
            sigma2_r: db_to_linear(rng.random_range(-30.0..0.0)),
            ..Default::default()
        };
        let ch = sample_channels(&config, rng.random());
        let alpha = rng.random_range(0.0..1.0);
        let Ok(w_r) = receive_combiner(&ch, alpha) else { continue };

        // transmit steps at fixed powers use the whole relay budget
        let (p_a, p_b) = (config.p_a * rng.random_range(0.0..1.0), config.p_b * rng.random_range(0.0..1.0));
        let tx = solve_txbf_p2(&ch, &w_r, p_a, p_b, &config, TransmitSpace::ZeroForcing, None).unwrap();
        let pr = relay_output_power(&ch, &tx.w_t, &w_r, p_a, p_b);
        inv.check((pr - config.p_r).abs() <= 1e-8 * config.p_r.max(1.0), || format!("txbf_p2 relay power {pr}"));
        inv.check(zf_residual(&ch, &tx.w_t, &w_r) <= 1e-9, || "txbf_p2 ZF".into());
        inv.check(tx.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), || "DC trace decreases".into());
        calls += 1;

        let rate_b: f64 = rng.random_range(0.0..3.0);
        let gamma_b = rate_b.exp2() - 1.0;
        match solve_txbf_p1(&ch, &w_r, p_a, p_b, gamma_b, config.p_r, TransmitSpace::ZeroForcing) {
            Ok(w_t) => {
                let pr = relay_output_power(&ch, &w_t, &w_r, p_a, p_b);
                inv.check((pr - config.p_r).abs() <= 1e-8 * config.p_r.max(1.0), || format!("txbf_p1 relay power {pr}"));
                inv.check(zf_residual(&ch, &w_t, &w_r) <= 1e-9, || "txbf_p1 ZF".into());
                let gb = sinr_pair(&ch, &w_t, &w_r, p_a, p_b).1;
                inv.check(gb >= gamma_b * (1.0 - 1e-8) - 1e-12, || format!("txbf_p1 misses target {gb} < {gamma_b}"));
            }
            Err(e) => inv.check(e.is_infeasible(), || format!("txbf_p1 error {e}")),
        }
        calls += 1;

        match optimize_fixed_alpha_p1(&ch, alpha, gamma_b, &config, SolverMode::PROPOSED) {
            Ok(op) => {
                inv.operating_point(&ch, &op, &config, true, "fixed-alpha p1");
                inv.check(op.gamma_b >= gamma_b * (1.0 - 1e-8) - 1e-12, || "p1 alternation misses target".into());
            }
            Err(e) => inv.check(e.is_infeasible(), || format!("p1 error {e}")),
        }
        calls += 1;

        let op = optimize_fixed_alpha_p2(&ch, alpha, &config, SolverMode::PROPOSED).unwrap();
        inv.operating_point(&ch, &op, &config, true, "fixed-alpha p2");
        calls += 1;

        if calls % 40 == 0 {
            let prop = proposed_solve(&ch, Objective::SumRate, &config).unwrap();
            inv.operating_point(&ch, &prop, &config, true, "proposed");
            let ub = upper_bound_solve(&ch, Objective::SumRate, &config, Some(&prop)).unwrap();
            inv.operating_point(&ch.without_relay_si(), &ub, &config, false, "upper bound");
            let local = local_csi_sum_rate(&ch, &config, rng.random()).unwrap();
            inv.operating_point(&ch, &local, &config, true, "local csi");
            let (u, p, l) = (ub.sum_rate(), prop.sum_rate(), local.sum_rate());
            inv.check(u >= p - 1e-6 && p >= l - 1e-6, || format!("ordering ub {u} proposed {p} local {l}"));
            calls += 3;
        }
    }
    let pass = inv.failures.is_empty();
    verdict(6, pass, &format!("{calls} solver calls, {} checks, failures: {:?}", inv.checked, inv.failures));
    assert!(pass);
}

#[test]
fn criterion_7_region_dominance() {
    use SchemeId::*;
    let mut spec = ExperimentSpec::preset(ExperimentKind::RateRegion);
    spec.schemes = vec![ProposedFd, HdAnc];
    spec.trials = 100;
    spec.seed = SEED;
    let sym = run_experiment(&spec).unwrap();
    let mut enclosed = true;
    let mut tightest = f64::INFINITY;
    for &angle in &spec.sweep {
        let p = sym.row(angle, ProposedFd).unwrap();
        let h = sym.row(angle, HdAnc).unwrap();
        let (rp, rh) = (p.mean_ra.hypot(p.mean_rb), h.mean_ra.hypot(h.mean_rb));
        enclosed &= rp >= rh;
        tightest = tightest.min(rp / rh);
    }

    let mut asym = ExperimentSpec::preset(ExperimentKind::AsymmetricRegion);
    asym.schemes = vec![ProposedFd];
    asym.trials = 100;
    asym.seed = SEED;
    asym.sweep = vec![0.0, 90.0];
    let weak = run_experiment(&asym).unwrap();
    let a_kept = weak.row(0.0, ProposedFd).unwrap().mean_ra / sym.row(0.0, ProposedFd).unwrap().mean_ra;
    let b_kept = weak.row(90.0, ProposedFd).unwrap().mean_rb / sym.row(90.0, ProposedFd).unwrap().mean_rb;
    let pass = enclosed && b_kept < a_kept;
    verdict(
        7,
        pass,
        &format!(
            "proposed encloses HD in all {} directions (min radius ratio {tightest:.3}); weak B link keeps {:.3} of A's endpoint and {:.3} of B's",
            spec.sweep.len(),
            a_kept,
            b_kept
        ),
    );
    assert!(pass);
}
