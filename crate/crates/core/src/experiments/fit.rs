//! Least-squares fits shared by the experiments.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("linear fit needs two or more paired samples, got {} and {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(LinearFit { slope, intercept, residual: (sse / n).sqrt() })
}

/// Slope of `ln y` against `x`, skipping samples with `y <= 0`.
pub fn log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter(|(_, &b)| b > 0.0).map(|(&a, &b)| (a, b.ln())).unzip();
    Ok(linear_fit(&xs, &ys)?.slope)
}

/// Fit of `ln y` against `ln x`; every sample must be positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("log-log fit needs positive samples".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// `E(t) ~ amplitude exp(-rate t) + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub offset: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub converged: bool,
}

pub const MIN_DECAY_SAMPLES: usize = 10;

/// Best `(A, P)` with `P >= 0` for a fixed rate, and the squared error.
fn linear_part(t: &[f64], e: &[f64], rate: f64) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let x: Vec<f64> = t.iter().map(|&s| (-rate * (s - t[0])).exp()).collect();
    let sse = |a: f64, p: f64| x.iter().zip(e).map(|(xi, ei)| (ei - a * xi - p).powi(2)).sum::<f64>();
    let (sx, se) = (x.iter().sum::<f64>(), e.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxe: f64 = x.iter().zip(e).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det > 1e-12 * n * sxx {
        let a = (n * sxe - sx * se) / det;
        let p = (sxx * se - sx * sxe) / det;
        if p >= 0.0 {
            return (a, p, sse(a, p));
        }
    } else {
        // Rate zero: the exponential is the constant column.
        let p = (se / n).max(0.0);
        return (0.0, p, sse(0.0, p));
    }
    let a = sxe / sxx;
    (a, 0.0, sse(a, 0.0))
}

/// Nonlinear least squares for `E(t) = A exp(-nu (t - t0)) + P` with `P >= 0`.
///
/// The rate is located by a profile scan over a logarithmic grid spanning the
/// sampled window, refined by golden-section search and polished with
/// Gauss-Newton steps. The amplitude refers to the first sample time.
pub fn fit_decay(t: &[f64], e: &[f64]) -> Result<DecayFit> {
    if t.len() != e.len() {
        return Err(Error::Fit(format!("{} times for {} values", t.len(), e.len())));
    }
    if t.len() < MIN_DECAY_SAMPLES {
        return Err(Error::Fit(format!("decay fit needs at least {MIN_DECAY_SAMPLES} samples, got {}", t.len())));
    }
    if t.iter().chain(e).any(|v| !v.is_finite()) || e.iter().any(|&v| v < 0.0) {
        return Err(Error::Fit("samples must be finite with E >= 0".into()));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("times must be strictly increasing".into()));
    }
    let n = t.len() as f64;
    let (lo, hi) = e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-14 * hi.abs() {
        let p = e.iter().sum::<f64>() / n;
        return Ok(DecayFit { amplitude: 0.0, rate: 0.0, offset: p, residual: 0.0, converged: true });
    }
    let span = t[t.len() - 1] - t[0];
    let profile = |nu: f64| linear_part(t, e, nu).2;

    let grid: Vec<f64> = (0..=400).map(|k| (1e-4 / span) * (1e8f64).powf(k as f64 / 400.0)).collect();
    let mut best = (0.0, profile(0.0));
    let mut best_k = None;
    for (k, &nu) in grid.iter().enumerate() {
        let s = profile(nu);
        if s < best.1 {
            best = (nu, s);
            best_k = Some(k);
        }
    }
    let mut nu = best.0;
    if let Some(k) = best_k {
        let (mut a, mut b) = (if k == 0 { 0.0 } else { grid[k - 1] }, grid[(k + 1).min(grid.len() - 1)]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
        let (mut f1, mut f2) = (profile(x1), profile(x2));
        for _ in 0..200 {
            if (b - a) <= 1e-15 * b {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = profile(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = profile(x2);
            }
        }
        nu = if f1 < f2 { x1 } else { x2 };
        if profile(nu) > best.1 {
            nu = best.0;
        }
    }
    let (mut amp, mut off, mut sse) = linear_part(t, e, nu);
    let mut converged = true;
    if nu > 0.0 {
        let (a_gn, nu_gn, p_gn, ok) = gauss_newton(t, e, amp, nu, off);
        converged = ok;
        let sse_gn: f64 =
            t.iter().zip(e).map(|(&s, &v)| (v - a_gn * (-nu_gn * (s - t[0])).exp() - p_gn).powi(2)).sum();
        if p_gn >= 0.0 && nu_gn >= 0.0 && sse_gn <= sse {
            (amp, nu, off, sse) = (a_gn, nu_gn, p_gn, sse_gn);
        }
    }
    Ok(DecayFit { amplitude: amp, rate: nu, offset: off, residual: (sse / n).sqrt(), converged })
}

fn gauss_newton(t: &[f64], e: &[f64], mut a: f64, mut nu: f64, mut p: f64) -> (f64, f64, f64, bool) {
    for _ in 0..50 {
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for (&s, &v) in t.iter().zip(e) {
            let x = (-nu * (s - t[0])).exp();
            let r = v - a * x - p;
            let j = [x, -a * (s - t[0]) * x, 1.0];
            for i in 0..3 {
                jtr[i] += j[i] * r;
                for k in 0..3 {
                    jtj[i][k] += j[i] * j[k];
                }
            }
        }
        let Some(d) = solve3(jtj, jtr) else { return (a, nu, p, false) };
        a += d[0];
        nu += d[1];
        p += d[2];
        let scale = a.abs().max(nu.abs()).max(p.abs()).max(1e-300);
        if d.iter().all(|x| x.abs() <= 1e-14 * scale) {
            return (a, nu, p, true);
        }
    }
    (a, nu, p, true)
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let mut mi = m;
        for r in 0..3 {
            mi[r][i] = b[r];
        }
        *o = det(&mi) / d;
    }
    Some(out)
}
