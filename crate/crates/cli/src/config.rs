//! Flat `key = value` configuration with one section per subsystem.
//!
//! Every key the tool understands appears in [`DEFAULT_CONFIG`] with the
//! reference-device value; user files and `--set section.key=value`
//! overrides are validated against that schema before any computation, so
//! typos fail fast.

use std::collections::BTreeMap;

/// Reference-device parameter file, embedded as the default configuration.
pub const DEFAULT_CONFIG: &str = r#"
# reference device parameters

[spin]
a_hz = 1.478e9               # hyperfine A / 2pi
gamma_e_hz_per_t = 2.7997e10 # electron gyromagnetic ratio / 2pi
gamma_n_hz_per_t = -6.96e6   # nuclear gyromagnetic ratio / 2pi
b_min_t = 1e-4
b_max_t = 1.3e-2
b_step_t = 5e-5
threshold = 0.05             # matrix-element cutoff for listing a transition

[cpw]
w_m = 1e-6
gap_m = 1e-5
eps_r = 11.9
lk0_sq_h = 3.5e-12           # sheet kinetic inductance, H per square
length_m = 1.75e-3
i_star_a = 3.45e-2

[sif]
f0_hz = 7.3e9                # quarter-wave design frequency
z0_ohm = 50.0
file =
f_min_hz = 2e8
f_max_hz = 1.6e10
n_points = 1601

[kipa]
omega0_hz = 7.203e9
kappa = 1.2181e6             # external coupling rate, rad/s
gamma = 3.8682e5             # internal loss rate, rad/s
xi = 4.0e5                   # three-wave-mixing strength, rad/s
phi_p = 4.71238898038469     # pump phase, rad (3 pi / 2 maximizes I gain)
Delta = 0.0                  # pump-half detuning, rad/s
f_span_hz = 4e6
n_points = 801

[noise]
eta_db = 3.5                 # insertion loss between device and HEMT
T_hemt_K = 3.6
T_device_K = 0.4
G_h_db = 40.0
n_k = 0.0                    # first-stage added noise per quadrature
signal_i = 1.0
gk_min = 1.0
gk_max = 10.0
gk_points = 91
measurement_csv =

[budget]
omega0_hz = 7.203e9
q_i = 1.17e5
q_c = 37155.0
t_e_s = 2e-5                 # echo duration
g0_hz = 13.2
p_in_dbm = -73.0
nbar = 1.0e7
pi2_s = 3e-6
linewidth_hz = 2.55e6
line_offset_hz = 5e5
t_p_s = 1e-5
temperature_k = 0.4
beta_a = 0.6
beta_b_inv = 54.3
beta_c = 0.082
beta_d_inv = 10.0
c_d_per_m3 = 1.03e23
v_d_m3 = 1.0098e-15
snr1_off = 0.55
snr1_on = 3.99
coupling_csv =
fieldmap_csv =

[optimize]
alpha_min = 0.05
alpha_max = 0.95
alpha_step = 0.05
alpha_ref = 0.0              # normalization point for the scaling factors
i_p_a = 1.0e-3               # pump current for unit kinetic fraction
z_r0_ohm = 104.0             # resonator impedance without kinetic inductance

[fit]
data_csv =

[echo]
signal_csv =
blank_csv =
t1_s = 0.0
t2_s = 0.0
"#;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parsed configuration: `(section, key) -> value` with schema checking.
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<(String, String), String>,
}

impl Config {
    /// The embedded defaults.
    pub fn defaults() -> Self {
        let mut cfg = Config {
            values: BTreeMap::new(),
        };
        cfg.merge_text(DEFAULT_CONFIG, false)
            .expect("embedded defaults must parse");
        cfg
    }

    /// Overlay a user file on top; keys must already exist in the schema.
    pub fn merge_file(&mut self, path: &str) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {path}: {e}")))?;
        self.merge_text(&text, true)
    }

    fn merge_text(&mut self, text: &str, validate: bool) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    ConfigError(format!("line {}: unterminated section", lineno + 1))
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            if section.is_empty() {
                return Err(ConfigError(format!(
                    "line {}: key before any [section]",
                    lineno + 1
                )));
            }
            let slot = (section.clone(), key.trim().to_string());
            if validate && !self.values.contains_key(&slot) {
                return Err(ConfigError(format!(
                    "unknown key `{}.{}` (line {})",
                    slot.0,
                    slot.1,
                    lineno + 1
                )));
            }
            self.values.insert(slot, value.trim().to_string());
        }
        Ok(())
    }

    /// Apply one `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (path, value) = assignment.split_once('=').ok_or_else(|| {
            ConfigError(format!(
                "--set needs `section.key=value`, got `{assignment}`"
            ))
        })?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| ConfigError(format!("--set key must be `section.key`, got `{path}`")))?;
        let slot = (section.trim().to_string(), key.trim().to_string());
        if !self.values.contains_key(&slot) {
            return Err(ConfigError(format!("unknown key `{}.{}`", slot.0, slot.1)));
        }
        self.values.insert(slot, value.trim().to_string());
        Ok(())
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let raw = self.raw(section, key)?;
        raw.parse()
            .map_err(|_| ConfigError(format!("`{section}.{key}` is not a number: `{raw}`")))
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let raw = self.raw(section, key)?;
        raw.parse()
            .map_err(|_| ConfigError(format!("`{section}.{key}` is not an integer: `{raw}`")))
    }

    /// A string value; empty means unset.
    pub fn string(&self, section: &str, key: &str) -> Result<Option<String>, ConfigError> {
        let raw = self.raw(section, key)?;
        Ok(if raw.is_empty() { None } else { Some(raw) })
    }

    fn raw(&self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .cloned()
            .ok_or_else(|| ConfigError(format!("missing key `{section}.{key}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_read() {
        let cfg = Config::defaults();
        assert_eq!(cfg.f64("spin", "a_hz").unwrap(), 1.478e9);
        assert_eq!(cfg.usize("sif", "n_points").unwrap(), 1601);
        assert!(cfg.string("sif", "file").unwrap().is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut cfg = Config::defaults();
        assert!(cfg.merge_text("[spin]\nbogus = 1\n", true).is_err());
        assert!(cfg.set("spin.bogus=1").is_err());
        assert!(cfg.set("nonsense").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = Config::defaults();
        cfg.set("kipa.xi=5e5").unwrap();
        assert_eq!(cfg.f64("kipa", "xi").unwrap(), 5e5);
        cfg.merge_text("[noise]\neta_db = 2.0\n", true).unwrap();
        assert_eq!(cfg.f64("noise", "eta_db").unwrap(), 2.0);
    }
}
