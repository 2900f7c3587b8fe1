//! Exponential and damped-oscillation fits of time traces.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::TimeTrace;
use crate::error::{Error, Result};
use crate::numerics::{eigenvalues_general, CMatrix, CVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayComponent {
    pub rate: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// Sorted by rate, fastest first.
    pub components: Vec<DecayComponent>,
    /// Root-mean-square residual of `ln y`.
    pub log_rms: f64,
}

impl DecayFit {
    pub fn fastest(&self) -> DecayComponent {
        self.components[0]
    }

    pub fn slowest(&self) -> DecayComponent {
        *self.components.last().expect("fit has at least one component")
    }
}

/// Fits `Σ_k a_k e^{−r_k t}` (one or two terms) to `|values|` of `trace`
/// restricted to `window`.
pub fn fit_decay_rates(trace: &TimeTrace, window: (f64, f64), terms: usize) -> Result<DecayFit> {
    let (t, y): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, v.norm()))
        .unzip();
    fit_exponentials(&t, &y, terms)
}

pub fn fit_exponentials(t: &[f64], y: &[f64], terms: usize) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::Dimension {
            expected: t.len(),
            actual: y.len(),
        });
    }
    if t.len() < 2 * terms + 1 {
        return Err(Error::Fit(format!(
            "{} samples are too few for {terms} exponentials",
            t.len()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("data must be positive and finite, found {bad}")));
    }
    match terms {
        1 => {
            let (a, r) = log_linear(t, y)?;
            let log_rms = rms(t, y, &[(a, r)]);
            Ok(DecayFit {
                components: vec![DecayComponent { rate: r, amplitude: a }],
                log_rms,
            })
        }
        2 => two_exponentials(t, y),
        _ => Err(Error::Fit(format!("unsupported number of exponentials: {terms}"))),
    }
}

/// Least squares for `ln y = ln a − r t`.
fn log_linear(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|x| (x - mt) * (x - mt)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate time window".into()));
    }
    let sxy: f64 = t.iter().zip(&ly).map(|(x, l)| (x - mt) * (l - my)).sum();
    let slope = sxy / sxx;
    Ok(((my - slope * mt).exp(), -slope))
}

fn model(t: f64, comps: &[(f64, f64)]) -> f64 {
    comps.iter().map(|(a, r)| a * (-r * t).exp()).sum()
}

fn rms(t: &[f64], y: &[f64], comps: &[(f64, f64)]) -> f64 {
    let ss: f64 = t
        .iter()
        .zip(y)
        .map(|(ti, yi)| {
            let d = model(*ti, comps).ln() - yi.ln();
            d * d
        })
        .sum();
    (ss / t.len() as f64).sqrt()
}

/// Levenberg–Marquardt on log residuals, parameters `ln a_k, ln r_k`.
fn two_exponentials(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    let n = t.len();
    // Peel the slow tail off first, then fit the head of the remainder.
    let tail = (n * 3) / 5;
    let (a2, r2) = log_linear(&t[tail..], &y[tail..])?;
    let head: Vec<(f64, f64)> = t[..(n / 5).max(3)]
        .iter()
        .zip(y)
        .map(|(ti, yi)| (*ti, yi - a2 * (-r2 * ti).exp()))
        .filter(|(_, v)| *v > 0.0)
        .collect();
    let (a1, r1) = if head.len() >= 2 {
        let (ht, hy): (Vec<f64>, Vec<f64>) = head.into_iter().unzip();
        log_linear(&ht, &hy).unwrap_or((y[0].max(a2), 10.0 * r2.abs().max(1e-12)))
    } else {
        (y[0].max(a2), 10.0 * r2.abs().max(1e-12))
    };
    let guard = |x: f64| x.abs().max(1e-300).ln();
    let mut p = DVector::from_vec(vec![guard(a1), guard(r1), guard(a2), guard(r2)]);
    let unpack = |p: &DVector<f64>| [(p[0].exp(), p[1].exp()), (p[2].exp(), p[3].exp())];
    let cost = |p: &DVector<f64>| {
        let c = unpack(p);
        t.iter()
            .zip(y)
            .map(|(ti, yi)| {
                let d = model(*ti, &c).ln() - yi.ln();
                d * d
            })
            .sum::<f64>()
    };
    let mut mu = 1e-3;
    let mut current = cost(&p);
    for _ in 0..500 {
        let c = unpack(&p);
        let mut jac = DMatrix::<f64>::zeros(n, 4);
        let mut res = DVector::<f64>::zeros(n);
        for (i, (ti, yi)) in t.iter().zip(y).enumerate() {
            let e1 = c[0].0 * (-c[0].1 * ti).exp();
            let e2 = c[1].0 * (-c[1].1 * ti).exp();
            let m = e1 + e2;
            res[i] = m.ln() - yi.ln();
            jac[(i, 0)] = e1 / m;
            jac[(i, 1)] = -c[0].1 * ti * e1 / m;
            jac[(i, 2)] = e2 / m;
            jac[(i, 3)] = -c[1].1 * ti * e2 / m;
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &res;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..4 {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let c_trial = cost(&trial);
            if c_trial.is_finite() && c_trial < current {
                let done = (current - c_trial) <= 1e-15 * current.max(1e-300);
                p = trial;
                current = c_trial;
                mu = (mu / 3.0).max(1e-12);
                improved = !done;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let c = unpack(&p);
    let mut components: Vec<DecayComponent> = c
        .iter()
        .map(|&(amplitude, rate)| DecayComponent { rate, amplitude })
        .collect();
    components.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    Ok(DecayFit {
        components,
        log_rms: (current / n as f64).sqrt(),
    })
}

/// One damped complex exponential `amplitude · e^{(−rate + i frequency) t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub rate: f64,
    pub frequency: f64,
    pub amplitude: C64,
}

/// Matrix-pencil decomposition of a uniformly sampled trace into `order`
/// damped complex exponentials. Modes are sorted by `|amplitude|`,
/// largest first. At most `max_samples` points of the window are used.
pub fn fit_modes(trace: &TimeTrace, window: (f64, f64), order: usize, max_samples: usize) -> Result<Vec<Mode>> {
    let pts: Vec<(f64, C64)> = trace
        .times
        .iter()
        .zip(&trace.values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, *v))
        .collect();
    let stride = pts.len().div_ceil(max_samples.max(8)).max(1);
    let pts: Vec<(f64, C64)> = pts.into_iter().step_by(stride).collect();
    let n = pts.len();
    if order == 0 || n < 3 * order + 2 {
        return Err(Error::Fit(format!("{n} samples are too few for {order} modes")));
    }
    let dt = pts[1].0 - pts[0].0;
    if dt <= 0.0
        || pts
            .windows(2)
            .any(|w| ((w[1].0 - w[0].0) - dt).abs() > 1e-9 * dt.max(1.0))
    {
        return Err(Error::Fit("mode fit requires a uniform time grid".into()));
    }
    let l = n / 3;
    let rows = n - l;
    let hankel = CMatrix::from_fn(rows, l + 1, |i, j| pts[i + j].1);
    let svd = hankel.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Fit("SVD failed".into()))?;
    // Rows of V† are right singular vectors (conjugated); take the leading `order`.
    let v = v_t.rows(0, order).adjoint();
    let v1 = v.rows(0, l).into_owned();
    let v2 = v.rows(1, l).into_owned();
    let pencil = v1.pseudo_inverse(1e-14).map_err(|e| Error::Fit(e.to_string()))? * v2;
    let z = eigenvalues_general(&pencil)?;
    // Amplitudes by least squares on the Vandermonde system.
    let t0 = pts[0].0;
    let vander = CMatrix::from_fn(n, order, |k, m| z[m].powu(k as u32));
    let y = CVector::from_iterator(n, pts.iter().map(|p| p.1));
    let coeffs = vander
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let mut modes: Vec<Mode> = z
        .iter()
        .zip(coeffs.iter())
        .map(|(zi, ci)| {
            let s = zi.ln() / dt;
            Mode {
                rate: -s.re,
                frequency: s.im,
                // Referenced to t = 0 instead of the window start.
                amplitude: ci * (-s * t0).exp(),
            }
        })
        .collect();
    modes.sort_by(|a, b| b.amplitude.norm().total_cmp(&a.amplitude.norm()));
    Ok(modes)
}
