//! Damped least-squares fitting of the model curves used across the crate:
//! a Levenberg-Marquardt loop with numeric Jacobians, plus named fits with
//! data-driven starting points.

use crate::linalg::{jacobi_eigen, solve_linear, Matrix};
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const REL_PARAM_TOL: f64 = 1e-8;

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Condition number of J^T J at the solution; large values flag weakly
    /// identified parameters.
    pub condition: f64,
}

/// Levenberg-Marquardt minimization of `sum_i (y_i - model(p, x_i))^2`.
pub fn least_squares<F>(model: F, xs: &[f64], ys: &[f64], initial: &[f64]) -> Result<FitResult>
where
    F: Fn(&[f64], f64) -> f64,
{
    let n = xs.len();
    let np = initial.len();
    if n != ys.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    if np == 0 {
        return Err(Error::InvalidInput("no parameters to fit".into()));
    }
    if n < np {
        return Err(Error::InvalidInput(format!(
            "need at least {np} points for {np} parameters, got {n}"
        )));
    }

    let cost_of = |p: &[f64]| -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let r = y - model(p, x);
                r * r
            })
            .sum()
    };

    let mut params = initial.to_vec();
    let mut cost = cost_of(&params);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jtj_last = Matrix::identity(np);

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // numeric Jacobian, central differences
        let mut jac = vec![vec![0.0; np]; n];
        for k in 0..np {
            let step = 1e-6 * params[k].abs().max(1e-8);
            let mut plus = params.clone();
            plus[k] += step;
            let mut minus = params.clone();
            minus[k] -= step;
            for (i, &x) in xs.iter().enumerate() {
                jac[i][k] = (model(&plus, x) - model(&minus, x)) / (2.0 * step);
            }
        }
        let mut jtj = Matrix::zeros(np, np);
        let mut jtr = vec![0.0; np];
        for (i, &x) in xs.iter().enumerate() {
            let r = ys[i] - model(&params, x);
            for a in 0..np {
                jtr[a] += jac[i][a] * r;
                for b in 0..np {
                    jtj.add_to(a, b, jac[i][a] * jac[i][b]);
                }
            }
        }
        jtj_last = jtj.clone();
        if (0..np).all(|a| jtj.get(a, a) == 0.0) {
            return Err(Error::SingularJacobian);
        }

        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = jtj.clone();
            for a in 0..np {
                let d = jtj.get(a, a);
                damped.add_to(a, a, lambda * if d > 0.0 { d } else { 1.0 });
            }
            let step = match solve_linear(damped, jtr.clone()) {
                Ok(s) => s,
                Err(Error::SingularJacobian) => return Err(Error::SingularJacobian),
                Err(e) => return Err(e),
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let trial_cost = cost_of(&trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel_change = step
                    .iter()
                    .zip(&params)
                    .map(|(s, p)| s.abs() / p.abs().max(1e-12))
                    .fold(0.0f64, f64::max);
                params = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                if rel_change < REL_PARAM_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if converged || !accepted {
            break;
        }
    }

    let condition = condition_number(&jtj_last);
    Ok(FitResult {
        residual_rms: (cost / n as f64).sqrt(),
        params,
        converged,
        iterations,
        condition,
    })
}

fn condition_number(jtj: &Matrix) -> f64 {
    match jacobi_eigen(jtj) {
        Ok(e) => {
            let max = e.values.iter().cloned().fold(f64::MIN, f64::max);
            let min = e.values.iter().cloned().fold(f64::MAX, f64::min);
            if min <= 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// `offset + peak / (1 + 4 (x - center)^2 / fwhm^2)`.
pub fn lorentzian(params: &[f64], x: f64) -> f64 {
    let (center, fwhm, peak, offset) = (params[0], params[1], params[2], params[3]);
    offset + peak / (1.0 + 4.0 * (x - center).powi(2) / (fwhm * fwhm))
}

/// Fit a Lorentzian line; returns params `[center, fwhm, peak, offset]`.
pub fn fit_lorentzian(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() < 4 {
        return Err(Error::InvalidInput(
            "need at least 4 points for a Lorentzian".into(),
        ));
    }
    let (min_y, max_y) = min_max(ys);
    if max_y - min_y <= 0.0 {
        return Err(Error::DegenerateFit("flat data has no line to fit".into()));
    }
    let peak_idx = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let span = xs[xs.len() - 1] - xs[0];
    let initial = [xs[peak_idx], span.abs() / 4.0, max_y - min_y, min_y];
    let mut fit = least_squares(lorentzian, xs, ys, &initial)?;
    fit.params[1] = fit.params[1].abs(); // fwhm sign is a gauge freedom
    Ok(fit)
}

/// Whether an exponential relaxes toward or away from its asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentialKind {
    /// `A exp(-t/tau) + c`
    Decay,
    /// `A (1 - exp(-t/tau)) + c`
    Recovery,
}

/// Fit an exponential; returns params `[amplitude, tau, offset]`.
pub fn fit_exponential(ts: &[f64], ys: &[f64], kind: ExponentialKind) -> Result<FitResult> {
    if ts.len() < 4 {
        return Err(Error::InvalidInput(
            "need at least 4 points for an exponential".into(),
        ));
    }
    let (min_y, max_y) = min_max(ys);
    if max_y - min_y <= 0.0 {
        return Err(Error::DegenerateFit(
            "flat data has no relaxation to fit".into(),
        ));
    }
    let span = ts[ts.len() - 1] - ts[0];
    let first = ys[0];
    let last = ys[ys.len() - 1];
    let model: fn(&[f64], f64) -> f64 = match kind {
        ExponentialKind::Decay => |p, t| p[0] * (-t / p[1]).exp() + p[2],
        ExponentialKind::Recovery => |p, t| p[0] * (1.0 - (-t / p[1]).exp()) + p[2],
    };
    let initial = match kind {
        ExponentialKind::Decay => [first - last, span / 3.0, last],
        ExponentialKind::Recovery => [last - first, span / 3.0, first],
    };
    let fit = least_squares(model, ts, ys, &initial)?;
    if fit.params[1] <= 0.0 {
        return Err(Error::DegenerateFit(format!(
            "time constant came out non-positive ({})",
            fit.params[1]
        )));
    }
    Ok(fit)
}

/// `SNR = sqrt(G^2 A / (G^2 B + 1))`.
pub fn snr_vs_gain(params: &[f64], g: f64) -> f64 {
    let (a, b) = (params[0], params[1]);
    (g * g * a / (g * g * b + 1.0)).abs().sqrt()
}

/// Fit the SNR-versus-gain saturation; returns params `[A, B]`.
/// `1/B` estimates the system-to-input noise ratio.
pub fn fit_snr_vs_gain(gks: &[f64], snrs: &[f64]) -> Result<FitResult> {
    let mut distinct = gks.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 distinct gains".into()));
    }
    let first = snrs[0].max(1e-12);
    let last = *snrs.last().unwrap();
    let g_last = *gks.last().unwrap();
    let a0 = first * first;
    let b0 = (a0 / (last * last) - 1.0 / (g_last * g_last)).max(1e-6);
    let fit = least_squares(snr_vs_gain, gks, snrs, &[a0, b0])?;
    Ok(fit)
}

/// `G_SNR = a (1 - exp(-T_e / tau_k))`.
pub fn gsnr_vs_te(params: &[f64], te: f64) -> f64 {
    params[0] * (1.0 - (-te / params[1]).exp())
}

/// Fit the SNR-gain saturation with echo duration; params `[a, tau_k]`.
pub fn fit_gsnr_vs_te(tes: &[f64], gsnrs: &[f64]) -> Result<FitResult> {
    if tes.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 points".into()));
    }
    let (_, max_y) = min_max(gsnrs);
    if max_y <= 0.0 {
        return Err(Error::DegenerateFit("no positive SNR gain in data".into()));
    }
    let span = tes[tes.len() - 1] - tes[0];
    let fit = least_squares(gsnr_vs_te, tes, gsnrs, &[max_y, span / 3.0])?;
    Ok(fit)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}
