//! Subcommand implementations. Each returns the text (CSV or report) to be
//! written to `--out` or stdout.

use crate::config::{Config, ConfigError};
use kipakit::budget::{self, BudgetInputs, CouplingDistribution, CpwFieldModel, FieldMap};
use kipakit::consts::TWO_PI;
use kipakit::cpw::{CpwLine, ResonatorState};
use kipakit::echo::{echo_snr, Trace};
use kipakit::fit::{self, ExponentialKind};
use kipakit::kipa::{self, KipaParams};
use kipakit::network::{self, SifNetwork};
use kipakit::noise::{self, NoiseChain};
use kipakit::spin::{self, SpinSystem};

/// What a command produced: the primary artifact (CSV or report) and, for
/// the budget, a human-readable key-value summary printed alongside a file.
pub struct CommandOutput {
    pub primary: String,
    pub summary: Option<String>,
}

impl From<String> for CommandOutput {
    fn from(primary: String) -> Self {
        CommandOutput {
            primary,
            summary: None,
        }
    }
}

/// Failures split by exit code: configuration (2) vs numerical (3).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<kipakit::Error> for CliError {
    fn from(e: kipakit::Error) -> Self {
        match e {
            kipakit::Error::InvalidInput(_) | kipakit::Error::Parse(_) | kipakit::Error::Io(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn read_input(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))
}

fn spin_system(cfg: &Config) -> Result<SpinSystem, CliError> {
    Ok(SpinSystem {
        a: TWO_PI * cfg.f64("spin", "a_hz")?,
        gamma_e: TWO_PI * cfg.f64("spin", "gamma_e_hz_per_t")?,
        gamma_n: TWO_PI * cfg.f64("spin", "gamma_n_hz_per_t")?,
        ..SpinSystem::bismuth()
    })
}

pub fn cmd_spectrum(cfg: &Config) -> Result<String, CliError> {
    let sys = spin_system(cfg)?;
    let b_min = cfg.f64("spin", "b_min_t")?;
    let b_max = cfg.f64("spin", "b_max_t")?;
    let step = cfg.f64("spin", "b_step_t")?;
    let threshold = cfg.f64("spin", "threshold")?;
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
    if !(b_max > b_min) || step <= 0.0 {
        return Err(CliError::Config(format!(
            "empty field range: b_min_t = {b_min}, b_max_t = {b_max}, b_step_t = {step}"
        )));
    }
    let rows = spin::sweep(&sys, b_min, b_max, step, threshold)?;
    Ok(spin::sweep_csv(&rows))
}

fn sif_network(cfg: &Config) -> Result<SifNetwork, CliError> {
    let z0 = cfg.f64("sif", "z0_ohm")?;
    match cfg.string("sif", "file")? {
        Some(path) => Ok(SifNetwork::parse(&read_input(&path)?)?),
        None => {
            let f0 = cfg.f64("sif", "f0_hz")?;
            let eps_r = cfg.f64("cpw", "eps_r")?;
            let lk0 = cfg.f64("cpw", "lk0_sq_h")?;
            Ok(SifNetwork::eight_section_design(
                TWO_PI * f0,
                eps_r,
                lk0,
                z0,
            )?)
        }
    }
}

pub fn cmd_sif(cfg: &Config) -> Result<String, CliError> {
    let net = sif_network(cfg)?;
    let f_min = cfg.f64("sif", "f_min_hz")?;
    let f_max = cfg.f64("sif", "f_max_hz")?;
    let n = cfg.usize("sif", "n_points")?;
    let rows = network::sweep(&net, TWO_PI * f_min, TWO_PI * f_max, n)?;
    Ok(network::sweep_csv(&rows))
}

fn kipa_params(cfg: &Config) -> Result<KipaParams, CliError> {
    let omega0 = TWO_PI * cfg.f64("kipa", "omega0_hz")?;
    let params = KipaParams::new(omega0, cfg.f64("kipa", "kappa")?, cfg.f64("kipa", "gamma")?)?
        .with_pump(cfg.f64("kipa", "xi")?, cfg.f64("kipa", "phi_p")?)?
        .with_detuning(cfg.f64("kipa", "Delta")?);
    Ok(params)
}

pub fn cmd_kipa_gain(cfg: &Config) -> Result<String, CliError> {
    let params = kipa_params(cfg)?;
    let span = TWO_PI * cfg.f64("kipa", "f_span_hz")?;
    let n = cfg.usize("kipa", "n_points")?;
    let center = params.omega_half_pump();
    let rows = kipa::gain_sweep(&params, center - span / 2.0, center + span / 2.0, n)?;
    let mut out = kipa::gain_sweep_csv(&rows);
    // the sweep is phase-aligned; the configured pump phase enters the
    // per-quadrature gains at the degenerate point
    let a_g = kipa::quadrature_transform(&params)?;
    out.push_str(&format!(
        "# quadrature_gain_I = {:.9e}, quadrature_gain_Q = {:.9e}, phi_p_rad = {:.9e}\n",
        a_g[0][0], a_g[1][1], params.phi_p
    ));
    Ok(out)
}

fn noise_chain(cfg: &Config, g_k: f64) -> Result<NoiseChain, CliError> {
    let omega0 = TWO_PI * cfg.f64("kipa", "omega0_hz")?;
    let eta = 10f64.powf(-cfg.f64("noise", "eta_db")? / 20.0);
    let g_h = 10f64.powf(cfg.f64("noise", "G_h_db")? / 20.0);
    let n_h = noise::n_thermal(cfg.f64("noise", "T_hemt_K")?, omega0)?;
    let t_dev = cfg.f64("noise", "T_device_K")?;
    let noise_in = 0.25 + noise::n_thermal(t_dev, omega0)?;
    let n_eta = noise::n_thermal(t_dev, omega0)?; // attenuator bath at device temperature
    Ok(NoiseChain::new(
        g_k,
        eta,
        g_h,
        cfg.f64("noise", "n_k")?,
        n_eta,
        n_h,
        cfg.f64("noise", "signal_i")?,
        noise_in,
    )?)
}

fn parse_xy_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (x, y) = (fields.next(), fields.next());
        match (x, y) {
            (Some(x), Some(y)) => {
                let parse = |s: &str| -> Result<f64, CliError> {
                    s.parse().map_err(|_| {
                        CliError::Config(format!("line {}: bad number `{s}`", lineno + 1))
                    })
                };
                xs.push(parse(x)?);
                ys.push(parse(y)?);
            }
            _ => {
                return Err(CliError::Config(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )))
            }
        }
    }
    Ok((xs, ys))
}

pub fn cmd_snr_chain(cfg: &Config) -> Result<String, CliError> {
    let gk_min = cfg.f64("noise", "gk_min")?;
    let gk_max = cfg.f64("noise", "gk_max")?;
    let n = cfg.usize("noise", "gk_points")?;
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
    if n < 2 || !(gk_max > gk_min) || gk_min <= 0.0 {
        return Err(CliError::Config("bad gk grid".into()));
    }
    let chain = noise_chain(cfg, gk_min)?;
    let gks: Vec<f64> = (0..n)
        .map(|k| gk_min + (gk_max - gk_min) * k as f64 / (n - 1) as f64)
        .collect();
    let mut out = noise::snr_sweep_csv(&chain, &gks)?;
    if let Some(path) = cfg.string("noise", "measurement_csv")? {
        let (gk_data, snr_data) = parse_xy_csv(&read_input(&path)?)?;
        let fitres = fit::fit_snr_vs_gain(&gk_data, &snr_data)?;
        out.push_str(&format!(
            "# fit: A = {:.9e}, B = {:.9e}, 1/B = {:.9e}, residual_rms = {:.9e}, converged = {}\n",
            fitres.params[0],
            fitres.params[1],
            1.0 / fitres.params[1],
            fitres.residual_rms,
            fitres.converged
        ));
    }
    Ok(out)
}

pub fn cmd_budget(cfg: &Config) -> Result<CommandOutput, CliError> {
    let omega0 = TWO_PI * cfg.f64("budget", "omega0_hz")?;
    let q_i = cfg.f64("budget", "q_i")?;
    let q_c = cfg.f64("budget", "q_c")?;
    let res = ResonatorState::new(
        omega0,
        0.0,
        cfg.f64("cpw", "i_star_a")?,
        cfg.f64("cpw", "length_m")?,
        q_i,
        q_c,
    )?;
    let (kappa_total, kappa_c) = (res.kappa_total(), res.kappa());

    let temperature = cfg.f64("budget", "temperature_k")?;
    let n_th = noise::n_thermal(temperature, omega0)?;
    let pol = noise::polarization(temperature, omega0)?;

    let p_in = 1e-3 * 10f64.powf(cfg.f64("budget", "p_in_dbm")? / 10.0);
    let nbar_computed = budget::intracavity_photons(p_in, omega0, kappa_total, res.gamma())?;
    let nbar = cfg.f64("budget", "nbar")?;
    let g0_rabi = budget::rabi_to_g0(cfg.f64("budget", "pi2_s")?, nbar)?;
    let g0 = TWO_PI * cfg.f64("budget", "g0_hz")?;

    let beta_b_computed = budget::pulse_overlap(
        TWO_PI * cfg.f64("budget", "linewidth_hz")?,
        TWO_PI * cfg.f64("budget", "line_offset_hz")?,
        res.q_l,
        omega0,
        cfg.f64("budget", "t_p_s")?,
    )?;

    let v_d = match cfg.string("budget", "fieldmap_csv")? {
        Some(path) => {
            FieldMap::from_csv(&read_input(&path)?)?
                .effective_volume()
                .0
        }
        None => cfg.f64("budget", "v_d_m3")?,
    };
    let beta_c = match cfg.string("budget", "coupling_csv")? {
        Some(path) => CouplingDistribution::from_csv(&read_input(&path)?)?.spin_fraction(g0)?,
        None => cfg.f64("budget", "beta_c")?,
    };

    let inputs = BudgetInputs {
        beta_a: cfg.f64("budget", "beta_a")?,
        beta_b: 1.0 / cfg.f64("budget", "beta_b_inv")?,
        beta_c,
        beta_d: 1.0 / cfg.f64("budget", "beta_d_inv")?,
        c_d: cfg.f64("budget", "c_d_per_m3")?,
        v_d,
    };
    let (n_d, n_tot) = budget::total_spins(&inputs)?;
    let snr_off = cfg.f64("budget", "snr1_off")?;
    let snr_on = cfg.f64("budget", "snr1_on")?;
    let n_min_off = budget::n_min_measured(n_tot, snr_off)?;
    let n_min_on = budget::n_min_measured(n_tot, snr_on)?;
    let w_echo = 1.0 / cfg.f64("budget", "t_e_s")?;
    // a zeroed budget (some beta = 0) has no sensitivity to invert
    let invert = |n_min: f64| -> Result<f64, CliError> {
        if n_min > 0.0 {
            Ok(budget::noise_from_n_min(
                kappa_total,
                kappa_c,
                w_echo,
                g0,
                pol,
                n_min,
            )?)
        } else {
            Ok(0.0)
        }
    };
    let n_n_off = invert(n_min_off)?;
    let n_n_on = invert(n_min_on)?;
    let analytic_vd = CpwFieldModel::reference_device()
        .field_map()?
        .effective_volume()
        .0;
    let line_geom = cpw_line(cfg)?;
    let f0_design = kipakit::cpw::resonator_frequency(&line_geom, line_geom.length)?;

    let mut out = String::from("quantity,value,unit\n");
    let mut line = |name: &str, value: f64, unit: &str| {
        out.push_str(&format!("{name},{value:.9e},{unit}\n"));
    };
    line("beta_a", inputs.beta_a, "1");
    line("beta_b", inputs.beta_b, "1");
    line("beta_c", inputs.beta_c, "1");
    line("beta_d", inputs.beta_d, "1");
    line("C_d", inputs.c_d, "m^-3");
    line("V_d", inputs.v_d, "m^3");
    line("N_d", n_d, "spins");
    line("N_tot", n_tot, "spins");
    line("SNR1_pump_off", snr_off, "1");
    line("SNR1_pump_on", snr_on, "1");
    line("N_min_pump_off", n_min_off, "spins");
    line("N_min_pump_on", n_min_on, "spins");
    line("n_n_pump_off", n_n_off, "photons");
    line("n_n_pump_on", n_n_on, "photons");
    line("n_th_device", n_th, "photons_per_quadrature");
    line("equilibrium_noise", 0.25 + n_th, "photons_per_quadrature");
    line("polarization", pol, "1");
    line("kappa_total", kappa_total, "rad_per_s");
    line("kappa_c", kappa_c, "rad_per_s");
    line("nbar_input", nbar, "photons");
    line("nbar_from_power", nbar_computed, "photons");
    line("g0_input", g0 / TWO_PI, "Hz");
    line("g0_from_rabi", g0_rabi / TWO_PI, "Hz");
    line("beta_b_computed", beta_b_computed, "1");
    line("V_d_analytic_model", analytic_vd, "m^3");
    line("resonator_impedance", line_geom.z, "ohm");
    line("kinetic_fraction", line_geom.alpha, "1");
    line("resonator_f0_design", f0_design / TWO_PI, "Hz");

    let summary = out
        .lines()
        .skip(1)
        .map(|row| {
            let mut fields = row.split(',');
            let name = fields.next().unwrap_or_default();
            let value = fields.next().unwrap_or_default();
            let unit = fields.next().unwrap_or_default();
            if unit == "1" {
                format!("{name:24} = {value}\n")
            } else {
                format!("{name:24} = {value} {unit}\n")
            }
        })
        .collect::<String>();
    Ok(CommandOutput {
        primary: out,
        summary: Some(summary),
    })
}

pub fn cmd_optimize_alpha(cfg: &Config) -> Result<String, CliError> {
    let a_min = cfg.f64("optimize", "alpha_min")?;
    let a_max = cfg.f64("optimize", "alpha_max")?;
    let step = cfg.f64("optimize", "alpha_step")?;
    let a_ref = cfg.f64("optimize", "alpha_ref")?;
    let i_p = cfg.f64("optimize", "i_p_a")?;
    let z_r0 = cfg.f64("optimize", "z_r0_ohm")?;
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
    if step <= 0.0 || !(a_max > a_min) || a_min <= 0.0 || a_max >= 1.0 {
        return Err(CliError::Config(
            "alpha grid must satisfy 0 < min < max < 1".into(),
        ));
    }
    let mut out = String::from(
        "alpha,Pp_W,g0_factor,Ntot_factor,Nmin_factor,SNR_factor,NminSqrtT1_factor,SNRperSqrtT1_factor,length_factor\n",
    );
    let n_steps = ((a_max - a_min) / step).round() as usize;
    for k in 0..=n_steps {
        let alpha = a_min + step * k as f64;
        if alpha >= 1.0 {
            break;
        }
        let p_p = kipa::pump_power(alpha, i_p, z_r0)?;
        let s = budget::alpha_scaling(alpha, a_ref)?;
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            alpha,
            p_p,
            s.g0_factor,
            s.n_tot_factor,
            s.n_min_factor,
            s.snr_factor,
            s.n_min_abs_factor,
            s.abs_snr_factor,
            s.length_factor
        ));
    }
    Ok(out)
}

pub fn cmd_fit(cfg: &Config, kind: &str) -> Result<String, CliError> {
    let path = cfg
        .string("fit", "data_csv")?
        .ok_or_else(|| CliError::Config("fit needs `fit.data_csv`".into()))?;
    let (xs, ys) = parse_xy_csv(&read_input(&path)?)?;
    let (names, result): (&[&str], fit::FitResult) = match kind {
        "lorentzian" => (&["center", "fwhm", "peak", "offset"], fit::fit_lorentzian(&xs, &ys)?),
        "exp-decay" => (
            &["amplitude", "tau", "offset"],
            fit::fit_exponential(&xs, &ys, ExponentialKind::Decay)?,
        ),
        "exp-recovery" => (
            &["amplitude", "tau", "offset"],
            fit::fit_exponential(&xs, &ys, ExponentialKind::Recovery)?,
        ),
        "snr-vs-gain" => (&["A", "B"], fit::fit_snr_vs_gain(&xs, &ys)?),
        "gsnr-vs-te" => (&["a", "tau_k"], fit::fit_gsnr_vs_te(&xs, &ys)?),
        other => {
            return Err(CliError::Config(format!(
                "unknown fit kind `{other}` (expected lorentzian, exp-decay, exp-recovery, snr-vs-gain, gsnr-vs-te)"
            )))
        }
    };
    let mut out = String::new();
    for (name, value) in names.iter().zip(&result.params) {
        out.push_str(&format!("{name} = {value:.9e}\n"));
    }
    if kind == "snr-vs-gain" {
        out.push_str(&format!("1/B = {:.9e}\n", 1.0 / result.params[1]));
    }
    out.push_str(&format!("residual_rms = {:.9e}\n", result.residual_rms));
    out.push_str(&format!("converged = {}\n", result.converged));
    out.push_str(&format!("iterations = {}\n", result.iterations));
    Ok(out)
}

pub fn cmd_echo_snr(cfg: &Config) -> Result<String, CliError> {
    let signal_path = cfg
        .string("echo", "signal_csv")?
        .ok_or_else(|| CliError::Config("echo-snr needs `echo.signal_csv`".into()))?;
    let blank_path = cfg
        .string("echo", "blank_csv")?
        .ok_or_else(|| CliError::Config("echo-snr needs `echo.blank_csv`".into()))?;
    let t1 = cfg.f64("echo", "t1_s")?;
    let t2 = cfg.f64("echo", "t2_s")?;
    let signal = Trace::from_csv(&read_input(&signal_path)?)?;
    let blank = Trace::from_csv(&read_input(&blank_path)?)?;
    let snr = echo_snr(&signal, &blank, (t1, t2))?;
    Ok(format!("echo_snr = {snr:.9e}\n"))
}

fn cpw_line(cfg: &Config) -> Result<CpwLine, CliError> {
    Ok(CpwLine::new(
        cfg.f64("cpw", "w_m")?,
        cfg.f64("cpw", "gap_m")?,
        cfg.f64("cpw", "length_m")?,
        cfg.f64("cpw", "eps_r")?,
        cfg.f64("cpw", "lk0_sq_h")?,
    )?)
}
