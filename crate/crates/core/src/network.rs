//! ABCD-matrix cascades and S-parameters for the stepped-impedance filter.
//!
//! Every segment is a lossless transmission line; the cascade of eight
//! alternating low/high impedance quarter-wave transformers forms a Bragg
//! stopband centered on the resonator frequency with passbands at DC and at
//! the pump frequency.

use crate::cpw::CpwLine;
use crate::{Error, Result};
use num_complex::Complex64;

type C64 = Complex64;

/// 2x2 chain (ABCD) matrix of a two-port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Abcd {
    pub fn identity() -> Self {
        Self {
            a: C64::new(1.0, 0.0),
            b: C64::new(0.0, 0.0),
            c: C64::new(0.0, 0.0),
            d: C64::new(1.0, 0.0),
        }
    }

    /// Lossless line of impedance `z` and electrical length `beta_l`:
    /// [[cos bl, j z sin bl], [j sin bl / z, cos bl]].
    pub fn lossless_line(z: f64, beta_l: f64) -> Self {
        let (sin, cos) = beta_l.sin_cos();
        Self {
            a: C64::new(cos, 0.0),
            b: C64::new(0.0, z * sin),
            c: C64::new(0.0, sin / z),
            d: C64::new(cos, 0.0),
        }
    }

    /// `self` followed by `rhs`.
    pub fn cascade(&self, rhs: &Abcd) -> Abcd {
        Abcd {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    /// ad - bc; unity for reciprocal networks.
    pub fn determinant(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    /// Convert to S-parameters with the same real reference `z0` on both
    /// ports. Returns (s11, s21).
    pub fn to_s(&self, z0: f64) -> Result<(C64, C64)> {
        if z0 <= 0.0 {
            return Err(Error::InvalidInput(
                "reference impedance must be positive".into(),
            ));
        }
        let z0c = C64::new(z0, 0.0);
        let den = self.a + self.b / z0c + self.c * z0c + self.d;
        if den.norm() == 0.0 {
            return Err(Error::Pole {
                magnitude: 0.0,
                guard: f64::MIN_POSITIVE,
            });
        }
        let s11 = (self.a + self.b / z0c - self.c * z0c - self.d) / den;
        let s21 = C64::new(2.0, 0.0) / den;
        Ok((s11, s21))
    }
}

/// A stepped-impedance filter: ordered CPW segments between matched ports.
#[derive(Debug, Clone)]
pub struct SifNetwork {
    pub segments: Vec<CpwLine>,
    /// Port reference impedance, ohm (both ports).
    pub z0: f64,
}

impl SifNetwork {
    pub fn new(segments: Vec<CpwLine>, z0: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput(
                "network needs at least one segment".into(),
            ));
        }
        if z0 <= 0.0 {
            return Err(Error::InvalidInput(
                "port impedance must be positive".into(),
            ));
        }
        Ok(Self { segments, z0 })
    }

    /// The eight-section filter of the reference device: four pairs of
    /// alternating low/high impedance CPW, the final high-impedance section
    /// narrower than the rest. Each segment is cut to a quarter wavelength
    /// at `omega0_design` using its own phase velocity.
    pub fn eight_section_design(
        omega0_design: f64,
        eps_r: f64,
        lk0_sq: f64,
        z0: f64,
    ) -> Result<Self> {
        if omega0_design <= 0.0 {
            return Err(Error::InvalidInput(
                "design frequency must be positive".into(),
            ));
        }
        let lo = (138e-6, 6e-6);
        let hi = (10e-6, 70e-6);
        let hi_final = (5e-6, 15e-6);
        let geoms = [lo, hi, lo, hi, lo, hi, lo, hi_final];
        let mut segments = Vec::with_capacity(8);
        for (w, gap) in geoms {
            // length placeholder, replaced by the quarter-wave condition
            let probe = CpwLine::new(w, gap, 1.0, eps_r, lk0_sq)?;
            let quarter = std::f64::consts::FRAC_PI_2 * probe.phase_velocity() / omega0_design;
            segments.push(CpwLine::new(w, gap, quarter, eps_r, lk0_sq)?);
        }
        Self::new(segments, z0)
    }

    /// Parse a plain-text description: header lines `eps_r=`, `Lk0_sq=`,
    /// `Z0=`, then one segment per line as `w_m gap_m length_m`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut eps_r = None;
        let mut lk0_sq = None;
        let mut z0 = None;
        let mut geoms: Vec<(f64, f64, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let value: f64 = value.trim().parse().map_err(|_| {
                    Error::Parse(format!(
                        "line {}: bad number `{}`",
                        lineno + 1,
                        value.trim()
                    ))
                })?;
                match key.trim() {
                    "eps_r" => eps_r = Some(value),
                    "Lk0_sq" => lk0_sq = Some(value),
                    "Z0" => z0 = Some(value),
                    other => {
                        return Err(Error::Parse(format!(
                            "line {}: unknown header {other}",
                            lineno + 1
                        )))
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected `w_m gap_m length_m`",
                    lineno + 1
                )));
            }
            let mut vals = [0.0; 3];
            for (slot, field) in vals.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| {
                    Error::Parse(format!("line {}: bad number {field}", lineno + 1))
                })?;
            }
            geoms.push((vals[0], vals[1], vals[2]));
        }
        let eps_r = eps_r.ok_or_else(|| Error::Parse("missing eps_r header".into()))?;
        let lk0_sq = lk0_sq.ok_or_else(|| Error::Parse("missing Lk0_sq header".into()))?;
        let z0 = z0.ok_or_else(|| Error::Parse("missing Z0 header".into()))?;
        let segments = geoms
            .into_iter()
            .map(|(w, gap, length)| CpwLine::new(w, gap, length, eps_r, lk0_sq))
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments, z0)
    }

    /// Cascade the per-segment ABCD matrices at angular frequency `omega`.
    pub fn abcd(&self, omega: f64) -> Result<Abcd> {
        if omega <= 0.0 {
            return Err(Error::InvalidInput("frequency must be positive".into()));
        }
        let mut m = Abcd::identity();
        for seg in &self.segments {
            let beta_l = omega / seg.phase_velocity() * seg.length;
            m = m.cascade(&Abcd::lossless_line(seg.z, beta_l));
        }
        Ok(m)
    }

    /// Complex transmission at `omega`.
    pub fn s21(&self, omega: f64) -> Result<C64> {
        Ok(self.abcd(omega)?.to_s(self.z0)?.1)
    }

    /// Complex reflection at `omega`.
    pub fn s11(&self, omega: f64) -> Result<C64> {
        Ok(self.abcd(omega)?.to_s(self.z0)?.0)
    }
}

/// One row of a transmission sweep.
#[derive(Debug, Clone, Copy)]
pub struct SifSweepRow {
    pub omega: f64,
    pub s21: C64,
    pub s11: C64,
}

pub fn sweep(
    network: &SifNetwork,
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
) -> Result<Vec<SifSweepRow>> {
    if n_points < 2 || omega_max <= omega_min || omega_min <= 0.0 {
        return Err(Error::InvalidInput("bad sweep grid".into()));
    }
    let step = (omega_max - omega_min) / (n_points - 1) as f64;
    (0..n_points)
        .map(|k| {
            let omega = omega_min + step * k as f64;
            let (s11, s21) = network.abcd(omega)?.to_s(network.z0)?;
            Ok(SifSweepRow { omega, s21, s11 })
        })
        .collect()
}

/// CSV lines for a sweep: `freq_Hz,S21_mag,S21_phase_rad,S11_mag`.
pub fn sweep_csv(rows: &[SifSweepRow]) -> String {
    use crate::consts::TWO_PI;
    let mut out = String::from("freq_Hz,S21_mag,S21_phase_rad,S11_mag\n");
    for row in rows {
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e}\n",
            row.omega / TWO_PI,
            row.s21.norm(),
            row.s21.arg(),
            row.s11.norm()
        ));
    }
    out
}
