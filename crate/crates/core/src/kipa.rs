//! The resonator as a degenerate three-wave-mixing amplifier.
//!
//! With a DC bias current and a pump at twice the resonance frequency, the
//! current-dependent kinetic inductance mixes signal and idler at the same
//! frequency. In the frame rotating at half the pump frequency the
//! effective Hamiltonian carries a detuning, a squeezing term of strength
//! `xi` and a Kerr term `K`; the input-output relations below follow from
//! it. The Kerr term is computed for completeness but excluded from the
//! gain expressions, which are derived without it.

use crate::consts::HBAR;
use crate::{Error, Result};
use num_complex::Complex64;

type C64 = Complex64;

/// Keep-out margin below the self-oscillation threshold `kappa_total/2`.
const STABILITY_MARGIN: f64 = 0.999;

/// Rotating-frame Hamiltonian parameters of the biased, pumped resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    /// DC-bias frequency pull (angular frequency, non-positive).
    pub delta_dc: f64,
    /// Pump-induced frequency pull (angular frequency, non-positive).
    pub delta_p: f64,
    /// Kerr coefficient (angular frequency).
    pub k_kerr: f64,
    /// Complex three-wave-mixing strength.
    pub xi: C64,
}

/// Hamiltonian parameters scaled by the kinetic inductance fraction:
///
/// ```text
/// delta_DC = -(alpha/2) (I_DC/I*)^2 w0      delta_p = -(alpha/8) (I_p/I*)^2 w0
/// K = -(3 alpha/8) (hbar w0 / (L_T I*^2)) w0
/// xi = -(alpha/4) (I_DC I_p / I*^2) w0 e^{-i phi_p}
/// ```
pub fn hamiltonian_params(
    alpha: f64,
    i_dc: f64,
    i_p: f64,
    phi_p: f64,
    i_star: f64,
    omega0: f64,
    l_total: f64,
) -> Result<HamiltonianParams> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if omega0 <= 0.0 || l_total <= 0.0 || i_star <= 0.0 {
        return Err(Error::InvalidInput(
            "omega0, L_T and I* must be positive".into(),
        ));
    }
    for current in [i_dc, i_p] {
        if current.abs() >= i_star {
            return Err(Error::CurrentRange {
                current,
                limit: i_star,
            });
        }
    }
    let istar2 = i_star * i_star;
    let delta_dc = -alpha / 2.0 * i_dc * i_dc / istar2 * omega0;
    let delta_p = -alpha / 8.0 * i_p * i_p / istar2 * omega0;
    let k_kerr = -3.0 * alpha / 8.0 * HBAR * omega0 / (l_total * istar2) * omega0;
    let xi_mag = alpha / 4.0 * i_dc.abs() * i_p.abs() / istar2 * omega0;
    let xi = -xi_mag * C64::new(0.0, -phi_p).exp();
    Ok(HamiltonianParams {
        delta_dc,
        delta_p,
        k_kerr,
        xi,
    })
}

/// Amplifier operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KipaParams {
    /// Resonance angular frequency.
    pub omega0: f64,
    /// External coupling rate omega0/Qc.
    pub kappa: f64,
    /// Internal loss rate omega0/Qi.
    pub gamma: f64,
    /// Pump-half detuning omega0 - omega_p/2.
    pub delta: f64,
    /// Three-wave-mixing strength |xi|.
    pub xi_mag: f64,
    /// Pump phase, rad. 3 pi/2 maximizes the I-quadrature gain.
    pub phi_p: f64,
}

impl KipaParams {
    pub fn new(omega0: f64, kappa: f64, gamma: f64) -> Result<Self> {
        if omega0 <= 0.0 || kappa < 0.0 || gamma < 0.0 || kappa + gamma == 0.0 {
            return Err(Error::InvalidInput(
                "need omega0 > 0 and non-negative rates with kappa + gamma > 0".into(),
            ));
        }
        Ok(Self {
            omega0,
            kappa,
            gamma,
            delta: 0.0,
            xi_mag: 0.0,
            phi_p: 1.5 * std::f64::consts::PI,
        })
    }

    /// Operating point from the bias and pump currents: the mixing strength
    /// and phase come from [`hamiltonian_params`], with the pump frequency
    /// set so the DC and pump frequency pulls are absorbed (Delta = 0).
    #[allow(clippy::too_many_arguments)] // one argument per knob on the bench
    pub fn from_currents(
        omega0: f64,
        kappa: f64,
        gamma: f64,
        alpha: f64,
        i_dc: f64,
        i_p: f64,
        phi_p: f64,
        i_star: f64,
        l_total: f64,
    ) -> Result<Self> {
        let hp = hamiltonian_params(alpha, i_dc, i_p, phi_p, i_star, omega0, l_total)?;
        Self::new(omega0, kappa, gamma)?.with_pump(hp.xi.norm(), phi_p)
    }

    pub fn with_pump(mut self, xi_mag: f64, phi_p: f64) -> Result<Self> {
        if xi_mag < 0.0 {
            return Err(Error::InvalidInput(
                "pump strength must be non-negative".into(),
            ));
        }
        self.xi_mag = xi_mag;
        self.phi_p = phi_p;
        self.ensure_stable()?;
        Ok(self)
    }

    pub fn with_detuning(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Total linewidth kappa + gamma.
    pub fn kappa_total(&self) -> f64 {
        self.kappa + self.gamma
    }

    /// Half the pump frequency, where degenerate gain is evaluated.
    pub fn omega_half_pump(&self) -> f64 {
        self.omega0 - self.delta
    }

    /// Strictly below the self-oscillation threshold kappa_total/2?
    pub fn is_stable(&self) -> bool {
        self.xi_mag < self.kappa_total() / 2.0
    }

    fn ensure_stable(&self) -> Result<()> {
        if !self.is_stable() {
            return Err(Error::PumpThreshold {
                xi: self.xi_mag,
                threshold: self.kappa_total() / 2.0,
            });
        }
        Ok(())
    }

    /// The frequency-domain reflection additionally keeps a margin below
    /// threshold, where the line shape is a near-pole artifact. The closed
    /// forms (`degenerate_gain`, `added_noise`) stay exact up to threshold.
    fn ensure_margin(&self) -> Result<()> {
        self.ensure_stable()?;
        if self.xi_mag >= STABILITY_MARGIN * self.kappa_total() / 2.0 {
            return Err(Error::PumpThreshold {
                xi: self.xi_mag,
                threshold: STABILITY_MARGIN * self.kappa_total() / 2.0,
            });
        }
        Ok(())
    }
}

/// Complex reflection at angular frequency `omega`, measured along the
/// quadrature the pump amplifies (pump phase aligned for maximum gain).
///
/// The degenerate amplifier reflects an input at `omega` into a signal
/// part *and* a phase-conjugate idler part at the mirror frequency. On the
/// amplified quadrature the two add; the returned value has the signal
/// part's phase and the combined magnitude. For `xi = 0` it reduces to the
/// ordinary one-port cavity reflection, and at `omega = omega_p/2` its
/// magnitude equals the degenerate amplitude gain.
pub fn reflection_gain(params: &KipaParams, omega: f64) -> Result<C64> {
    params.ensure_margin()?;
    let kl = params.kappa_total();
    let detune = omega - params.omega_half_pump();
    let den = C64::new(params.delta, 0.0).powi(2) + (C64::new(kl / 2.0, detune)).powi(2)
        - C64::new(params.xi_mag * params.xi_mag, 0.0);
    let guard = 1e-12 * kl * kl;
    if den.norm() < guard {
        return Err(Error::Pole {
            magnitude: den.norm(),
            guard,
        });
    }
    let num = C64::new(
        params.kappa * kl / 2.0,
        params.kappa * (params.delta + detune),
    );
    let signal = num / den - 1.0;
    let idler_mag = params.kappa * params.xi_mag / den.norm();
    if signal.norm() < 1e-300 {
        return Ok(C64::new(idler_mag, 0.0));
    }
    Ok(signal * (1.0 + idler_mag / signal.norm()))
}

/// Amplitude gain at the degenerate point: `kappa / ((kappa+gamma)/2 - |xi|) - 1`.
pub fn degenerate_gain(params: &KipaParams) -> Result<f64> {
    params.ensure_stable()?;
    Ok(params.kappa / (params.kappa_total() / 2.0 - params.xi_mag) - 1.0)
}

/// Pump strength that produces amplitude gain `g_k` at the degenerate point.
pub fn xi_for_gain(g_k: f64, kappa: f64, gamma: f64) -> Result<f64> {
    let kl = kappa + gamma;
    if g_k < (kappa - gamma) / kl {
        return Err(Error::InvalidInput(format!(
            "gain {g_k} below the zero-pump value {}",
            (kappa - gamma) / kl
        )));
    }
    Ok(kl / 2.0 - kappa / (g_k + 1.0))
}

/// The 2x2 transform of the (I, Q) quadratures on reflection:
///
/// ```text
/// A_G = kappa / (Delta^2 + kL^2/4 - |xi|^2) *
///       [ kL/2 - |xi| sin(phi_p),  -|xi| cos(phi_p) + Delta ]
///       [ -|xi| cos(phi_p) - Delta,  kL/2 + |xi| sin(phi_p) ] - 1
/// ```
///
/// Diagonal for `Delta = 0` and `cos(phi_p) = 0`; at `phi_p = 3 pi/2` the
/// first diagonal entry is the amplitude gain along I.
pub fn quadrature_transform(params: &KipaParams) -> Result<[[f64; 2]; 2]> {
    params.ensure_stable()?;
    let kl = params.kappa_total();
    let den = params.delta * params.delta + kl * kl / 4.0 - params.xi_mag * params.xi_mag;
    if den <= 0.0 {
        return Err(Error::PumpThreshold {
            xi: params.xi_mag,
            threshold: kl / 2.0,
        });
    }
    let (sin_p, cos_p) = params.phi_p.sin_cos();
    let pref = params.kappa / den;
    Ok([
        [
            pref * (kl / 2.0 - params.xi_mag * sin_p) - 1.0,
            pref * (-params.xi_mag * cos_p + params.delta),
        ],
        [
            pref * (-params.xi_mag * cos_p - params.delta),
            pref * (kl / 2.0 + params.xi_mag * sin_p) - 1.0,
        ],
    ])
}

/// Noise the amplifier adds to the amplified quadrature, referred to its
/// input: `(gamma/kappa) (G_k + 1)/(G_k - 1) (1/4 + n_th_bath)` photons.
pub fn added_noise(params: &KipaParams, n_th_bath: f64) -> Result<f64> {
    if n_th_bath < 0.0 {
        return Err(Error::InvalidInput(
            "bath occupation must be non-negative".into(),
        ));
    }
    if params.gamma == 0.0 {
        return Ok(0.0);
    }
    let g_k = degenerate_gain(params)?;
    if g_k <= 1.0 {
        return Err(Error::DegenerateInput);
    }
    Ok(params.gamma / params.kappa * (g_k + 1.0) / (g_k - 1.0) * (0.25 + n_th_bath))
}

/// Pump power needed to hold a fixed gain as the kinetic inductance
/// fraction varies: `P_p = I_p^2 Z_r0 / (2 alpha^2 sqrt(1 - alpha))`,
/// with `I_p` the pump current amplitude that achieves the gain at
/// `alpha = 1` and `Z_r0` the resonator impedance without kinetic
/// inductance.
pub fn pump_power(alpha: f64, i_p_at_alpha1: f64, z_r0: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "pump power defined for alpha in (0, 1), got {alpha}"
        )));
    }
    if i_p_at_alpha1 <= 0.0 || z_r0 <= 0.0 {
        return Err(Error::InvalidInput(
            "pump current and Z_r0 must be positive".into(),
        ));
    }
    Ok(i_p_at_alpha1 * i_p_at_alpha1 * z_r0 / (2.0 * alpha * alpha * (1.0 - alpha).sqrt()))
}

/// One row of a reflection-gain sweep.
#[derive(Debug, Clone, Copy)]
pub struct GainSweepRow {
    pub omega: f64,
    pub gain: C64,
}

pub fn gain_sweep(
    params: &KipaParams,
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
) -> Result<Vec<GainSweepRow>> {
    if n_points < 2 || omega_max <= omega_min {
        return Err(Error::InvalidInput("bad sweep grid".into()));
    }
    let step = (omega_max - omega_min) / (n_points - 1) as f64;
    (0..n_points)
        .map(|k| {
            let omega = omega_min + step * k as f64;
            Ok(GainSweepRow {
                omega,
                gain: reflection_gain(params, omega)?,
            })
        })
        .collect()
}

/// CSV lines for a gain sweep: `freq_Hz,gain_dB,phase_rad`.
pub fn gain_sweep_csv(rows: &[GainSweepRow]) -> String {
    use crate::consts::TWO_PI;
    let mut out = String::from("freq_Hz,gain_dB,phase_rad\n");
    for row in rows {
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e}\n",
            row.omega / TWO_PI,
            20.0 * row.gain.norm().max(1e-300).log10(),
            row.gain.arg()
        ));
    }
    out
}
