//! Signal and noise propagation through the measurement chain:
//! amplifier -> attenuator (insertion loss) -> HEMT.
//!
//! All occupations are photons per quadrature with the vacuum at 1/4, and
//! `n_sys` is referred to the output of the first-stage amplifier. Signals
//! are quadrature amplitudes in photon^(1/2) units.

use crate::consts::{HBAR, KB};
use crate::{Error, Result};

/// Thermal occupation per signal quadrature,
/// `1 / (2 [exp(hbar omega / kB T) - 1])`.
pub fn n_thermal(t_kelvin: f64, omega: f64) -> Result<f64> {
    if t_kelvin <= 0.0 || omega <= 0.0 {
        return Err(Error::InvalidInput(
            "temperature and frequency must be positive".into(),
        ));
    }
    let x = HBAR * omega / (KB * t_kelvin);
    Ok(0.5 / x.exp_m1())
}

/// Spin polarization `tanh(hbar omega / (2 kB T))`.
pub fn polarization(t_kelvin: f64, omega: f64) -> Result<f64> {
    if t_kelvin <= 0.0 || omega <= 0.0 {
        return Err(Error::InvalidInput(
            "temperature and frequency must be positive".into(),
        ));
    }
    Ok((HBAR * omega / (2.0 * KB * t_kelvin)).tanh())
}

/// Beamsplitter action of an attenuator with amplitude transmissivity
/// `eta` on a (signal, noise) pair; the bath sits `n_eta` above vacuum.
pub fn attenuator_transform(signal: f64, noise: f64, eta: f64, n_eta: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    if n_eta < 0.0 || noise < 0.0 {
        return Err(Error::InvalidInput(
            "occupations must be non-negative".into(),
        ));
    }
    let eta2 = eta * eta;
    Ok((eta * signal, eta2 * noise + (1.0 - eta2) * (0.25 + n_eta)))
}

/// Phase-insensitive amplifier of amplitude gain `g_h` adding `n_h` above
/// vacuum per quadrature (idler-port noise enters with gain^2 - 1).
pub fn hemt_transform(signal: f64, noise: f64, g_h: f64, n_h: f64) -> Result<(f64, f64)> {
    if g_h < 1.0 {
        return Err(Error::InvalidInput(format!(
            "HEMT gain must be >= 1, got {g_h}"
        )));
    }
    if n_h < 0.0 || noise < 0.0 {
        return Err(Error::InvalidInput(
            "occupations must be non-negative".into(),
        ));
    }
    let g2 = g_h * g_h;
    Ok((g_h * signal, g2 * noise + (g2 - 1.0) * (0.25 + n_h)))
}

/// The full chain at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChain {
    /// First-stage amplitude gain along the amplified quadrature.
    pub g_k: f64,
    /// Attenuator amplitude transmissivity.
    pub eta: f64,
    /// HEMT amplitude gain.
    pub g_h: f64,
    /// First-stage added noise per quadrature, referred to its input.
    pub n_k: f64,
    /// Attenuator bath occupation above vacuum.
    pub n_eta: f64,
    /// HEMT added noise above vacuum.
    pub n_h: f64,
    /// Mean input quadrature amplitude <I_in>.
    pub signal_i: f64,
    /// Input quadrature noise <I_in^2> (>= 1/4).
    pub noise_in: f64,
}

impl NoiseChain {
    #[allow(clippy::too_many_arguments)] // one argument per chain element
    pub fn new(
        g_k: f64,
        eta: f64,
        g_h: f64,
        n_k: f64,
        n_eta: f64,
        n_h: f64,
        signal_i: f64,
        noise_in: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidInput(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        if g_h < 1.0 {
            return Err(Error::InvalidInput("HEMT gain must be >= 1".into()));
        }
        if n_k < 0.0 || n_eta < 0.0 || n_h < 0.0 {
            return Err(Error::InvalidInput(
                "added-noise occupations must be non-negative".into(),
            ));
        }
        if noise_in < 0.25 {
            return Err(Error::InvalidInput(
                "input noise cannot beat the vacuum floor of 1/4".into(),
            ));
        }
        if g_k <= 0.0 {
            return Err(Error::InvalidInput(
                "first-stage gain must be positive".into(),
            ));
        }
        Ok(Self {
            g_k,
            eta,
            g_h,
            n_k,
            n_eta,
            n_h,
            signal_i,
            noise_in,
        })
    }

    /// Noise added by everything after the first stage, referred to the
    /// first stage's output:
    /// `(1/eta^2 - 1)(1/4 + n_eta) + (1 - 1/G_h^2)(1/4 + n_h)/eta^2`.
    pub fn system_noise(&self) -> Result<f64> {
        if self.eta <= 0.0 {
            return Err(Error::InvalidInput(
                "system noise undefined at eta = 0".into(),
            ));
        }
        let eta2 = self.eta * self.eta;
        let gh2 = self.g_h * self.g_h;
        Ok((1.0 / eta2 - 1.0) * (0.25 + self.n_eta) + (1.0 - 1.0 / gh2) * (0.25 + self.n_h) / eta2)
    }

    /// Amplitude SNR referred to the HEMT input:
    /// `SNR^2 = G_k^2 <I>^2 / (G_k^2 <I^2> + (G_k^2 - 1) n_k + n_sys)`.
    pub fn chain_snr(&self) -> Result<f64> {
        let n_sys = self.system_noise()?;
        let gk2 = self.g_k * self.g_k;
        let den = gk2 * self.noise_in + (gk2 - 1.0) * self.n_k + n_sys;
        if den <= 0.0 {
            return Err(Error::InvalidInput("non-positive noise denominator".into()));
        }
        Ok((gk2 * self.signal_i * self.signal_i / den).sqrt())
    }

    /// SNR improvement over the same chain with unit first-stage gain:
    /// `G_SNR^2 = G_k^2 (<I^2> + n_sys) / (G_k^2 <I^2> + (G_k^2 - 1) n_k + n_sys)`.
    pub fn snr_gain(&self) -> Result<f64> {
        let n_sys = self.system_noise()?;
        let gk2 = self.g_k * self.g_k;
        let den = gk2 * self.noise_in + (gk2 - 1.0) * self.n_k + n_sys;
        if den <= 0.0 {
            return Err(Error::InvalidInput("non-positive noise denominator".into()));
        }
        Ok((gk2 * (self.noise_in + n_sys) / den).sqrt())
    }
}

/// CSV lines for an SNR sweep over first-stage gain: `Gk,SNR,G_SNR`.
pub fn snr_sweep_csv(chain: &NoiseChain, gk_values: &[f64]) -> Result<String> {
    let mut out = String::from("Gk,SNR,G_SNR\n");
    for &g_k in gk_values {
        let point = NoiseChain { g_k, ..*chain };
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e}\n",
            g_k,
            point.chain_snr()?,
            point.snr_gain()?
        ));
    }
    Ok(out)
}
