//! Coplanar-waveguide line parameters with geometric and kinetic
//! inductance.
//!
//! The geometric capacitance and inductance per unit length come from the
//! zeroth-order conformal mapping of an infinitely thin CPW on a
//! half-space substrate,
//!
//! ```text
//! C_l  = 4 eps0 eps_eff K(k) / K(k'),   k = w / (w + 2 g)
//! Lg_l = (mu0 / 4) K(k') / K(k),        eps_eff = (1 + eps_r) / 2
//! ```
//!
//! and the film adds a kinetic contribution `Lk_l = Lk0 / w` from its sheet
//! inductance. Complete elliptic integrals are evaluated with the
//! arithmetic-geometric mean.

use crate::consts::{EPS0, MU0};
use crate::{Error, Result};

/// A CPW segment: geometry plus derived per-length line parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpwLine {
    /// Center-track width, m.
    pub w: f64,
    /// Gap to ground, m.
    pub gap: f64,
    /// Physical length, m.
    pub length: f64,
    /// Substrate relative permittivity.
    pub eps_r: f64,
    /// Sheet kinetic inductance, H per square.
    pub lk0_sq: f64,
    /// Capacitance per length, F/m.
    pub c_l: f64,
    /// Geometric inductance per length, H/m.
    pub lg_l: f64,
    /// Kinetic inductance per length, H/m.
    pub lk_l: f64,
    /// Characteristic impedance, ohm.
    pub z: f64,
    /// Kinetic inductance fraction Lk / (Lk + Lg).
    pub alpha: f64,
}

impl CpwLine {
    pub fn new(w: f64, gap: f64, length: f64, eps_r: f64, lk0_sq: f64) -> Result<Self> {
        if w <= 0.0 || gap <= 0.0 {
            return Err(Error::InvalidInput(
                "track width and gap must be positive".into(),
            ));
        }
        if length <= 0.0 {
            return Err(Error::InvalidInput(
                "segment length must be positive".into(),
            ));
        }
        if eps_r < 1.0 {
            return Err(Error::InvalidInput("eps_r must be at least 1".into()));
        }
        if lk0_sq < 0.0 {
            return Err(Error::InvalidInput(
                "sheet inductance must be non-negative".into(),
            ));
        }
        let k = w / (w + 2.0 * gap);
        let kp = (1.0 - k * k).sqrt();
        let kk = ellipk(k)?;
        let kkp = ellipk(kp)?;
        let eps_eff = (1.0 + eps_r) / 2.0;
        let c_l = 4.0 * EPS0 * eps_eff * kk / kkp;
        let lg_l = MU0 / 4.0 * kkp / kk;
        let lk_l = lk0_sq / w;
        let l_total = lg_l + lk_l;
        Ok(Self {
            w,
            gap,
            length,
            eps_r,
            lk0_sq,
            c_l,
            lg_l,
            lk_l,
            z: (l_total / c_l).sqrt(),
            alpha: lk_l / l_total,
        })
    }

    /// Total inductance per length, H/m.
    pub fn l_total(&self) -> f64 {
        self.lg_l + self.lk_l
    }

    /// Phase velocity, m/s.
    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.l_total() * self.c_l).sqrt()
    }
}

/// Complete elliptic integral of the first kind K(k) for modulus `k`,
/// via the arithmetic-geometric mean: K(k) = pi / (2 AGM(1, k')).
pub fn ellipk(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "elliptic modulus {k} outside [0, 1)"
        )));
    }
    let kp = (1.0 - k * k).sqrt();
    let mut a = 1.0f64;
    let mut b = kp;
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            return Ok(std::f64::consts::PI / (a + b));
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Err(Error::EllipticConvergence)
}

/// Kinetic inductance at current `i`: `Lk0 (1 + I^2 / I*^2)`. Valid only
/// below the scale current.
pub fn kinetic_inductance(lk0: f64, i: f64, i_star: f64) -> Result<f64> {
    if i_star <= 0.0 {
        return Err(Error::InvalidInput("I* must be positive".into()));
    }
    if i.abs() >= i_star {
        return Err(Error::CurrentRange {
            current: i,
            limit: i_star,
        });
    }
    Ok(lk0 * (1.0 + (i / i_star).powi(2)))
}

/// DC-current tuning of the resonance: the frequency shift
/// `-omega0 I^2 / (2 I*^2)`, always non-positive.
pub fn dc_tuning(omega0_at_zero: f64, i_dc: f64, i_star: f64) -> Result<f64> {
    if i_star <= 0.0 {
        return Err(Error::InvalidInput("I* must be positive".into()));
    }
    if i_dc.abs() >= i_star {
        return Err(Error::CurrentRange {
            current: i_dc,
            limit: i_star,
        });
    }
    Ok(-omega0_at_zero * (i_dc / i_star).powi(2) / 2.0)
}

/// Quarter-wave fundamental of a shorted resonator of length `l`:
/// `omega0 = pi / (2 l sqrt(L C))` with L the full (geometric plus kinetic)
/// inductance per length.
pub fn resonator_frequency(line: &CpwLine, l: f64) -> Result<f64> {
    if l <= 0.0 {
        return Err(Error::InvalidInput(
            "resonator length must be positive".into(),
        ));
    }
    Ok(std::f64::consts::PI / (2.0 * l * (line.l_total() * line.c_l).sqrt()))
}

/// Resonator operating point: frequency, bias, and quality factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorState {
    /// Fundamental angular frequency at zero bias current.
    pub omega0: f64,
    /// DC bias current, A.
    pub i_dc: f64,
    /// Nonlinearity scale current, A.
    pub i_star: f64,
    /// Resonator length, m.
    pub l: f64,
    pub q_i: f64,
    pub q_c: f64,
    pub q_l: f64,
}

impl ResonatorState {
    /// Build from internal and coupling quality factors; the loaded Q is
    /// derived so `1/QL = 1/Qi + 1/Qc` holds exactly.
    pub fn new(omega0: f64, i_dc: f64, i_star: f64, l: f64, q_i: f64, q_c: f64) -> Result<Self> {
        if omega0 <= 0.0 || l <= 0.0 || q_i <= 0.0 || q_c <= 0.0 {
            return Err(Error::InvalidInput(
                "resonator parameters must be positive".into(),
            ));
        }
        if i_dc.abs() >= i_star {
            return Err(Error::CurrentRange {
                current: i_dc,
                limit: i_star,
            });
        }
        Ok(Self {
            omega0,
            i_dc,
            i_star,
            l,
            q_i,
            q_c,
            q_l: 1.0 / (1.0 / q_i + 1.0 / q_c),
        })
    }

    /// Total loss rate kappa + gamma = omega0 / QL.
    pub fn kappa_total(&self) -> f64 {
        self.omega0 / self.q_l
    }

    /// External coupling rate omega0 / Qc.
    pub fn kappa(&self) -> f64 {
        self.omega0 / self.q_c
    }

    /// Internal loss rate omega0 / Qi.
    pub fn gamma(&self) -> f64 {
        self.omega0 / self.q_i
    }
}
