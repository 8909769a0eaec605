//! Small complex linear-algebra and root-finding kernels shared by the solvers.
//!
//! Everything here is a pure function of its arguments. Matrices are the
//! `nalgebra` dynamic types over [`Complex64`]; the problem sizes are tiny
//! (a handful of relay antennas), so clarity wins over blocking tricks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

/// Relative singular-value floor below which a matrix counts as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn check_full_column_rank(x: &CMat) -> Result<()> {
    if x.ncols() == 0 || x.nrows() < x.ncols() {
        return Err(Error::Dimension(format!(
            "need a tall matrix with at least one column, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min <= RANK_TOL * max {
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        return Err(Error::RankDeficient { ratio });
    }
    Ok(())
}

/// Orthogonal projector onto the column space of `x`, `X (X^H X)^-1 X^H`.
///
/// Evaluated through a thin QR factorisation (`Q Q^H`), which is the same
/// operator but stays Hermitian and idempotent to rounding.
pub fn orth_projector(x: &CMat) -> Result<CMat> {
    check_full_column_rank(x)?;
    let q = x.clone().qr().q();
    Ok(&q * q.adjoint())
}

/// `I - orth_projector(x)`.
pub fn orth_complement_projector(x: &CMat) -> Result<CMat> {
    let p = orth_projector(x)?;
    Ok(CMat::identity(x.nrows(), x.nrows()) - p)
}

/// Projector onto the span of a single vector; convenience over [`orth_projector`].
pub fn vec_projector(v: &CVec) -> Result<CMat> {
    orth_projector(&CMat::from_column_slice(v.len(), 1, v.as_slice()))
}

/// Complement of [`vec_projector`].
pub fn vec_complement_projector(v: &CVec) -> Result<CMat> {
    orth_complement_projector(&CMat::from_column_slice(v.len(), 1, v.as_slice()))
}

/// Orthonormal basis `N` (M x (M-1)) of the null space of the row vector `v^H`.
///
/// Built from a Householder reflector that maps `v` onto the first axis: the
/// remaining reflector columns are orthonormal and orthogonal to `v`. Column
/// phases are arbitrary.
pub fn null_space_basis(v: &CVec) -> Result<CMat> {
    let m = v.len();
    if m < 2 {
        return Err(Error::Dimension(format!("null space of a length-{m} vector")));
    }
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroVector);
    }
    // u = v + e^{j arg v_0} |v| e_0 avoids cancellation in the first entry.
    let phase = if v[0].norm() > 0.0 {
        v[0] / v[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut u = v.clone();
    u[0] += phase * norm;
    let unorm2 = u.norm_squared();
    let mut n = CMat::zeros(m, m - 1);
    for k in 1..m {
        // column k of H = I - 2 u u^H / (u^H u)
        let scale = u[k].conj() * (2.0 / unorm2);
        for i in 0..m {
            let delta = if i == k { 1.0 } else { 0.0 };
            n[(i, k - 1)] = Complex64::new(delta, 0.0) - u[i] * scale;
        }
    }
    Ok(n)
}

/// A unit vector orthogonal to every (orthonormal) vector in `span`, built by
/// Gram-Schmidt from the coordinate axis that survives best. `None` when the
/// span already fills the space.
pub fn orthogonal_unit(span: &[&CVec], dim: usize) -> Option<CVec> {
    let mut best: Option<(f64, CVec)> = None;
    for k in 0..dim {
        let mut e = CVec::zeros(dim);
        e[k] = Complex64::new(1.0, 0.0);
        for s in span {
            let c = s.dotc(&e);
            e -= *s * c;
        }
        let nrm = e.norm();
        if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
            best = Some((nrm, e));
        }
    }
    match best {
        Some((nrm, e)) if nrm > 1e-8 => Some(e / Complex64::new(nrm, 0.0)),
        _ => None,
    }
}

fn horner(c: &[f64; 4], x: f64) -> (f64, f64) {
    // value and derivative of c[0] x^3 + c[1] x^2 + c[2] x + c[3]
    let v = ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
    let d = (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2];
    (v, d)
}

fn polish(c: &[f64; 4], mut x: f64) -> f64 {
    let (mut fx, _) = horner(c, x);
    for _ in 0..8 {
        let (_, d) = horner(c, x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let next = x - fx / d;
        let (fn_, _) = horner(c, next);
        if !(fn_.abs() < fx.abs()) {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

/// All real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, sorted ascending.
///
/// Trigonometric / Cardano solution of the depressed cubic; a conjugate pair
/// whose imaginary part is below `1e-8` (relative) is reported as a real
/// (near double) root. Roots are Newton-polished on the original polynomial.
/// Leading coefficients below `1e-12` of the largest coefficient are treated
/// as zero, so the routine falls back to quadratic and linear solves.
pub fn real_cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if !(scale > 0.0) {
        return Err(Error::ZeroPolynomial);
    }
    let a = [c3 / scale, c2 / scale, c1 / scale, c0 / scale];
    const LEAD: f64 = 1e-12;
    const IMAG: f64 = 1e-8;

    let mut roots = Vec::with_capacity(3);
    if a[0].abs() > LEAD {
        let b = a[1] / a[0];
        let c = a[2] / a[0];
        let d = a[3] / a[0];
        let shift = -b / 3.0;
        let p = c - b * b / 3.0;
        let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc > 0.0 {
            let s = disc.sqrt();
            let big = -(q / 2.0) - q.signum() * s;
            let u = big.cbrt();
            let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
            roots.push(u + v + shift);
            let re = -(u + v) / 2.0 + shift;
            let im = (3f64.sqrt() / 2.0) * (u - v).abs();
            if im <= IMAG * re.abs().max(1.0) {
                roots.push(re);
            }
        } else if p.abs() < 1e-300 {
            roots.push(shift);
        } else {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            for k in 0..3 {
                let t = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                roots.push(t + shift);
            }
        }
    } else if a[1].abs() > LEAD {
        let (qa, qb, qc) = (a[1], a[2], a[3]);
        let disc = qb * qb - 4.0 * qa * qc;
        let tol = IMAG * (qb * qb).max((4.0 * qa * qc).abs()).max(f64::MIN_POSITIVE);
        if disc >= 0.0 {
            let s = disc.sqrt();
            let t = -0.5 * (qb + qb.signum() * s);
            if t != 0.0 {
                roots.push(t / qa);
                roots.push(qc / t);
            } else {
                roots.push(0.0);
            }
        } else if -disc <= tol {
            roots.push(-qb / (2.0 * qa));
        }
    } else if a[2].abs() > LEAD {
        roots.push(-a[3] / a[2]);
    }

    let full = [c3, c2, c1, c0];
    let mut out: Vec<f64> = roots
        .into_iter()
        .filter(|r| r.is_finite())
        .map(|r| polish(&full, r))
        .collect();
    out.sort_by(|x, y| x.total_cmp(y));
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * x.abs().max(1.0));
    Ok(out)
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns the best
/// point seen. Assumes `f` is unimodal on the bracket.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let guard = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = guard(f(x1));
    let mut f2 = guard(f(x2));
    let mut iters = 0;
    while b - a > tol && iters < 200 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = guard(f(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = guard(f(x2));
        }
        iters += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Controls for [`maximize_1d`].
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { grid_points: 201, tol: 1e-9 }
    }
}

/// Dense grid followed by golden-section refinement around the best grid
/// point. The returned value is never below any grid value.
pub fn maximize_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: SearchOptions,
) -> Result<(f64, f64)> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::EmptyInterval { lo, hi });
    }
    let guard = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    if lo == hi {
        return Ok((lo, guard(f(lo))));
    }
    let n = opts.grid_points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    let mut best_i = 0;
    for i in 0..n {
        let x = if i == n - 1 { hi } else { lo + step * i as f64 };
        let v = guard(f(x));
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = golden_section_max(&mut f, a, b, opts.tol);
    if refined.1 > best.1 {
        best = refined;
    }
    Ok(best)
}
