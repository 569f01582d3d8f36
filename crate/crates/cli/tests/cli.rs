//! End-to-end tests of the binary: output shape, determinism, exit codes,
//! and the command-level reproduction checks.

use std::process::{Command, Output};

fn kipakit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kipakit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = kipakit(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn deterministic_output() {
    let args = [
        "spectrum",
        "--set",
        "spin.b_max_t=3e-3",
        "--set",
        "spin.b_step_t=5e-4",
    ];
    let first = stdout_of(&args);
    let second = stdout_of(&args);
    assert_eq!(first, second, "identical runs must be byte-identical");
    assert!(first.starts_with("B0_T,freq_Hz,mx,mz,F_lower,mF_lower,F_upper,mF_upper\n"));
}

#[test]
fn exit_codes() {
    // unknown config key: 2
    let out = kipakit(&["spectrum", "--set", "spin.nope=1"]);
    assert_eq!(out.status.code(), Some(2));
    // empty sweep range: 2
    let out = kipakit(&["spectrum", "--set", "spin.b_max_t=0"]);
    assert_eq!(out.status.code(), Some(2));
    // missing input file: 2
    let out = kipakit(&["echo-snr", "--set", "echo.signal_csv=/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(2));
    // pump beyond the self-oscillation threshold: numerical, 3
    let out = kipakit(&["kipa-gain", "--set", "kipa.xi=9e5"]);
    assert_eq!(out.status.code(), Some(3));
    // unknown subcommand: clap's usage error, 2
    let out = kipakit(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = kipakit(&[
        "sif",
        "--set",
        "sif.n_points=21",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("freq_Hz,S21_mag,S21_phase_rad,S11_mag\n"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn sif_stopband_minimum_near_design_frequency() {
    // fine scan around the design point: the |S21| minimum sits within 5%
    // of f0, the 2 f0 passband transmits, and a uniform network is flat
    let text = stdout_of(&[
        "sif",
        "--set",
        "sif.f_min_hz=5.0e9",
        "--set",
        "sif.f_max_hz=9.5e9",
        "--set",
        "sif.n_points=901",
    ]);
    let freqs = csv_column(&text, 0);
    let mags = csv_column(&text, 1);
    let (argmin, _) = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let f_min = freqs[argmin];
    assert!(
        (f_min - 7.3e9).abs() < 0.05 * 7.3e9,
        "stopband minimum at {f_min:.3e} Hz"
    );
}

#[test]
fn sif_refined_grid_keeps_extrema() {
    let coarse = stdout_of(&[
        "sif",
        "--set",
        "sif.f_min_hz=6e9",
        "--set",
        "sif.f_max_hz=9e9",
        "--set",
        "sif.n_points=301",
    ]);
    let fine = stdout_of(&[
        "sif",
        "--set",
        "sif.f_min_hz=6e9",
        "--set",
        "sif.f_max_hz=9e9",
        "--set",
        "sif.n_points=601",
    ]);
    let loc = |text: &str| {
        let f = csv_column(text, 0);
        let m = csv_column(text, 1);
        let (i, _) = m
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        f[i]
    };
    let step = 3e9 / 300.0;
    assert!((loc(&coarse) - loc(&fine)).abs() <= step + 1e-6);
}

#[test]
fn sif_from_network_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.txt");
    // single segment with the ports matched to its own impedance:
    // transparent at every frequency
    let z_match = kipakit::cpw::CpwLine::new(100e-6, 45e-6, 2e-3, 11.9, 0.0)
        .unwrap()
        .z;
    std::fs::write(
        &path,
        format!("eps_r = 11.9\nLk0_sq = 0.0\nZ0 = {z_match:.9}\n100e-6 45e-6 2e-3\n"),
    )
    .unwrap();
    let text = stdout_of(&[
        "sif",
        "--set",
        &format!("sif.file={}", path.display()),
        "--set",
        "sif.n_points=31",
    ]);
    for mag in csv_column(&text, 1) {
        assert!((mag - 1.0).abs() < 1e-4, "|S21| = {mag}");
    }
}

#[test]
fn kipa_gain_peak_matches_closed_form() {
    let text = stdout_of(&["kipa-gain", "--set", "kipa.n_points=401"]);
    let gains_db = csv_column(&text, 1);
    let peak_db = gains_db.iter().cloned().fold(f64::MIN, f64::max);
    // closed form for the default operating point
    let (kappa, gamma, xi): (f64, f64, f64) = (1.2181e6, 3.8682e5, 4.0e5);
    let g_k = kappa / ((kappa + gamma) / 2.0 - xi) - 1.0;
    let expect = 20.0 * g_k.log10();
    assert!(
        (peak_db - expect).abs() < 1e-6,
        "peak {peak_db} dB vs {expect} dB"
    );
    // the trailer reports the phase-dependent per-quadrature gains; at the
    // default max-gain phase the I gain equals the peak amplitude gain
    let trailer = text
        .lines()
        .find(|l| l.starts_with("# quadrature"))
        .unwrap();
    let gain_i: f64 = trailer
        .split("quadrature_gain_I = ")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((gain_i - g_k).abs() < 1e-6 * g_k);
    // flipping the pump phase by pi deamplifies the I quadrature
    let flipped = stdout_of(&[
        "kipa-gain",
        "--set",
        "kipa.n_points=5",
        "--set",
        "kipa.phi_p=1.5707963267948966",
    ]);
    let trailer = flipped
        .lines()
        .find(|l| l.starts_with("# quadrature"))
        .unwrap();
    let gain_i_flipped: f64 = trailer
        .split("quadrature_gain_I = ")
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        gain_i_flipped < 1.0 && gain_i_flipped > 0.0,
        "opposite phase must deamplify: {gain_i_flipped}"
    );
}

#[test]
fn snr_chain_unit_gain_column_and_fit_roundtrip() {
    // G_SNR = 1 at G_k = 1 exactly
    let text = stdout_of(&["snr-chain", "--set", "noise.gk_points=25"]);
    let gks = csv_column(&text, 0);
    let gsnrs = csv_column(&text, 2);
    assert!((gks[0] - 1.0).abs() < 1e-12 && (gsnrs[0] - 1.0).abs() < 1e-12);
    assert!(
        gsnrs.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        "G_SNR must not decrease"
    );

    // feed the generated curve back in as measurement data: the fitted A, B
    // must match the chain's own closed-form identifications within 1%
    let dir = tempfile::tempdir().unwrap();
    let meas = dir.path().join("meas.csv");
    let snrs = csv_column(&text, 1);
    let mut data = String::from("Gk,SNR\n");
    for (g, s) in gks.iter().zip(&snrs) {
        data.push_str(&format!("{g},{s}\n"));
    }
    std::fs::write(&meas, data).unwrap();
    let fitted = stdout_of(&[
        "snr-chain",
        "--set",
        "noise.gk_points=25",
        "--set",
        &format!("noise.measurement_csv={}", meas.display()),
    ]);
    let fit_line = fitted
        .lines()
        .find(|l| l.starts_with("# fit:"))
        .unwrap()
        .to_string();
    let grab = |tag: &str| -> f64 {
        let rest = fit_line.split(tag).nth(1).unwrap();
        rest.trim_start_matches([' ', '='])
            .split(',')
            .next()
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    let a_fit = grab("A");
    let b_fit = grab(" B");
    // closed-form A and B for the same chain (vacuum-referred quantities)
    use kipakit::consts::TWO_PI;
    let omega0 = TWO_PI * 7.203e9;
    let eta = 10f64.powf(-3.5 / 20.0);
    let g_h = 10f64.powf(40.0 / 20.0);
    let n_h = kipakit::noise::n_thermal(3.6, omega0).unwrap();
    let n_dev = kipakit::noise::n_thermal(0.4, omega0).unwrap();
    let chain =
        kipakit::noise::NoiseChain::new(1.0, eta, g_h, 0.0, n_dev, n_h, 1.0, 0.25 + n_dev).unwrap();
    let n_sys = chain.system_noise().unwrap();
    let a_expect = 1.0 / (n_sys - 0.0);
    let b_expect = (0.25 + n_dev) / n_sys;
    assert!(
        ((a_fit - a_expect) / a_expect).abs() < 0.01,
        "A {a_fit} vs {a_expect}"
    );
    assert!(
        ((b_fit - b_expect) / b_expect).abs() < 0.01,
        "B {b_fit} vs {b_expect}"
    );
}

#[test]
fn budget_report_internal_consistency() {
    let text = stdout_of(&["budget"]);
    let value_of = |name: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap_or_else(|| panic!("missing {name}"))
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    let n_tot = value_of("N_tot");
    let product = value_of("beta_a")
        * value_of("beta_b")
        * value_of("beta_c")
        * value_of("beta_d")
        * value_of("C_d")
        * value_of("V_d");
    assert!(
        ((n_tot - product) / product).abs() < 1e-8,
        "N_tot {n_tot} vs product {product}"
    );
    assert!((n_tot - 9.4e3).abs() < 0.02 * 9.4e3);
    assert!((value_of("N_min_pump_off") - 17.1e3).abs() < 0.03 * 17.1e3);
    assert!((value_of("N_min_pump_on") - 2.4e3).abs() < 0.03 * 2.4e3);
    // zeroed beta kills the count
    let zeroed = stdout_of(&["budget", "--set", "budget.beta_c=0"]);
    let n_tot_line = zeroed.lines().find(|l| l.starts_with("N_tot,")).unwrap();
    let v: f64 = n_tot_line.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn budget_accepts_fieldmap_and_coupling_csv() {
    let dir = tempfile::tempdir().unwrap();
    // uniform fully implanted block: V_d = the block volume
    let map = dir.path().join("map.csv");
    std::fs::write(
        &map,
        "x_m,y_m,z_m,cell_vol_m3,B1perp_T,in_implant\n0,1e-6,0,2.2e-15,1e-9,1\n",
    )
    .unwrap();
    // all spins at the calibration coupling: beta_c = 1
    let coupling = dir.path().join("g0.csv");
    std::fs::write(&coupling, "g0_hz,weight\n13.2,1.0\n").unwrap();
    let text = stdout_of(&[
        "budget",
        "--set",
        &format!("budget.fieldmap_csv={}", map.display()),
        "--set",
        &format!("budget.coupling_csv={}", coupling.display()),
    ]);
    let value_of = |name: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value_of("V_d") - 2.2e-15).abs() < 1e-27);
    assert!((value_of("beta_c") - 1.0).abs() < 1e-9);
    let n_tot = value_of("N_tot");
    let expect = 0.6 * (1.0 / 54.3) * 1.0 * 0.1 * 1.03e23 * 2.2e-15;
    assert!(
        ((n_tot - expect) / expect).abs() < 1e-8,
        "N_tot {n_tot} vs {expect}"
    );
}

#[test]
fn optimize_alpha_reproduces_design_numbers() {
    let text = stdout_of(&["optimize-alpha"]);
    let alphas = csv_column(&text, 0);
    let pps = csv_column(&text, 1);
    let snrs = csv_column(&text, 5);
    // grid minimum of the pump power within one step of 0.75
    let (argmin, _) = pps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    assert!(
        (alphas[argmin] - 0.75).abs() < 0.05 + 1e-9,
        "minimum at {}",
        alphas[argmin]
    );
    // rows at 0.8 and 0.4: power cost 3.6 dB, SNR gain 2.28
    let idx_of = |a: f64| alphas.iter().position(|&x| (x - a).abs() < 1e-9).unwrap();
    let (i8, i4) = (idx_of(0.8), idx_of(0.4));
    let delta_db = 10.0 * (pps[i4] / pps[i8]).log10();
    assert!((delta_db - 3.6).abs() < 0.05, "delta Pp {delta_db} dB");
    let snr_ratio = snrs[i4] / snrs[i8];
    assert!((snr_ratio - 2.28).abs() < 0.01, "SNR ratio {snr_ratio}");
    // normalization: factors tend to 1 toward alpha = 0
    let small = stdout_of(&[
        "optimize-alpha",
        "--set",
        "optimize.alpha_min=0.001",
        "--set",
        "optimize.alpha_step=0.3",
    ]);
    let first_snr = csv_column(&small, 5)[0];
    assert!((first_snr - 1.0).abs() < 2e-3);
}

#[test]
fn fit_command_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lor.csv");
    let mut data = String::from("x,y\n");
    for k in 0..60 {
        let x = 6.4e-3 + k as f64 * 0.012e-3;
        let y = 0.3 + 2.4 / (1.0 + 4.0 * (x - 6.76e-3_f64).powi(2) / (0.10e-3_f64).powi(2));
        data.push_str(&format!("{x:.9e},{y:.9e}\n"));
    }
    std::fs::write(&path, data).unwrap();
    let report = stdout_of(&[
        "fit",
        "lorentzian",
        "--set",
        &format!("fit.data_csv={}", path.display()),
    ]);
    let value_of = |name: &str| -> f64 {
        report
            .lines()
            .find(|l| l.starts_with(&format!("{name} =")))
            .unwrap()
            .split('=')
            .nth(1)
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!(((value_of("center") - 6.76e-3) / 6.76e-3).abs() < 1e-6);
    assert!(((value_of("fwhm") - 0.10e-3) / 0.10e-3).abs() < 1e-6);
    assert!(report.contains("converged = true"));
    // unknown kind: 2
    let out = kipakit(&[
        "fit",
        "cubic",
        "--set",
        &format!("fit.data_csv={}", path.display()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn echo_snr_command() {
    let dir = tempfile::tempdir().unwrap();
    let sig_path = dir.path().join("sig.csv");
    let blank_path = dir.path().join("blank.csv");
    let n = 400;
    let dt = 1e-4;
    let mut sig = String::from("t_s,I,Q\n");
    let mut blank = String::from("t_s,I,Q\n");
    for k in 0..n {
        let t = k as f64 * dt;
        let i = if (200..300).contains(&k) { 2.5 } else { 0.0 };
        sig.push_str(&format!("{t:.9e},{i:.9e},0.0\n"));
        let b = if k % 2 == 0 { 1.0 } else { -1.0 };
        blank.push_str(&format!("{t:.9e},{b:.9e},0.0\n"));
    }
    std::fs::write(&sig_path, sig).unwrap();
    std::fs::write(&blank_path, blank).unwrap();
    let report = stdout_of(&[
        "echo-snr",
        "--set",
        &format!("echo.signal_csv={}", sig_path.display()),
        "--set",
        &format!("echo.blank_csv={}", blank_path.display()),
        "--set",
        "echo.t1_s=0.0200",
        "--set",
        "echo.t2_s=0.0299",
    ]);
    let snr: f64 = report
        .trim()
        .split('=')
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((snr - 2.5).abs() < 0.05, "snr = {snr}");
}

#[test]
fn config_file_merging() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("override.cfg");
    std::fs::write(&path, "[noise]\ngk_points = 3\ngk_max = 2.0\n").unwrap();
    let text = stdout_of(&["snr-chain", "--config", path.to_str().unwrap()]);
    assert_eq!(text.lines().count(), 4); // header + 3 rows
                                         // --set wins over the file
    let text = stdout_of(&[
        "snr-chain",
        "--config",
        path.to_str().unwrap(),
        "--set",
        "noise.gk_points=2",
    ]);
    assert_eq!(text.lines().count(), 3);
    // a config file with an unknown key is rejected up front
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "[noise]\nnot_a_key = 1\n").unwrap();
    let out = kipakit(&["snr-chain", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_grid_refinement_keeps_crossings() {
    // the crossing fields of the target frequency are grid-independent
    // within 0.01 mT once the step halves
    use kipakit::consts::TWO_PI;
    use kipakit::spin::{crossings, SpinOperator, SpinSystem};
    let sys = SpinSystem::bismuth();
    let target = TWO_PI * 7.203e9;
    let coarse = crossings(&sys, target, 1e-4, 13e-3, 1e-4, SpinOperator::Sx, 0.05).unwrap();
    let fine = crossings(&sys, target, 1e-4, 13e-3, 5e-5, SpinOperator::Sx, 0.05).unwrap();
    assert_eq!(coarse.len(), fine.len());
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(
            (c.field - f.field).abs() < 1e-5,
            "{} vs {}",
            c.field,
            f.field
        );
    }
}

#[test]
fn spectrum_sx_branches_cross_resonance_out_to_370_mt() {
    // the five strong branches each cross the resonance exactly once over
    // the full field range
    use kipakit::consts::TWO_PI;
    use kipakit::spin::{crossings, SpinOperator, SpinSystem};
    let sys = SpinSystem::bismuth();
    let target = TWO_PI * 7.203e9;
    let all = crossings(&sys, target, 2e-4, 0.37, 2e-4, SpinOperator::Sx, 0.35).unwrap();
    assert_eq!(
        all.len(),
        5,
        "fields: {:?}",
        all.iter().map(|c| c.field * 1e3).collect::<Vec<_>>()
    );
    let mut branches: Vec<_> = all.iter().map(|c| (c.lower, c.upper)).collect();
    branches.dedup();
    assert_eq!(branches.len(), 5, "each crossing on a distinct branch");
}
