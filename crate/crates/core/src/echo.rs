//! Quadrature echo traces and amplitude-SNR extraction.
//!
//! The pipeline mirrors the measurement post-processing: subtract the
//! per-quadrature DC offsets estimated before the echo, low-pass at 1 MHz,
//! rotate in the IQ plane so the echo lies along I (minimizing the
//! integrated |Q| over the echo window), then take the ratio of the mean
//! echo amplitude to the RMS of an echo-free blank trace over the same
//! window.

use crate::{Error, Result};

/// Single-pole low-pass cutoff applied to both quadratures, Hz.
const LOWPASS_HZ: f64 = 1e6;

/// Phase resolution of the rotation search, rad.
const PHASE_RESOLUTION: f64 = 1e-4;

/// A uniformly sampled demodulated record.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Sample times, s (uniform, strictly increasing).
    pub t: Vec<f64>,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
}

impl Trace {
    pub fn new(t: Vec<f64>, i: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::InvalidInput("trace needs at least 2 samples".into()));
        }
        if t.len() != i.len() || t.len() != q.len() {
            return Err(Error::InvalidInput("t, I, Q lengths differ".into()));
        }
        let dt = t[1] - t[0];
        if dt <= 0.0 {
            return Err(Error::InvalidInput(
                "times must be strictly increasing".into(),
            ));
        }
        for pair in t.windows(2) {
            let step = pair[1] - pair[0];
            if step <= 0.0 || (step - dt).abs() > 1e-6 * dt {
                return Err(Error::InvalidInput(
                    "times must be uniform and increasing".into(),
                ));
            }
        }
        Ok(Self { t, i, q })
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// Parse `t_s,I,Q` CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut i = Vec::new();
        let mut q = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected `t_s,I,Q`",
                    lineno + 1
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number `{s}`", lineno + 1)))
            };
            t.push(parse(fields[0])?);
            i.push(parse(fields[1])?);
            q.push(parse(fields[2])?);
        }
        Self::new(t, i, q)
    }

    fn window_indices(&self, window: (f64, f64)) -> Result<std::ops::Range<usize>> {
        let (t1, t2) = window;
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
        if !(t2 > t1) {
            return Err(Error::InvalidInput("window must have t2 > t1".into()));
        }
        if t1 < self.t[0] || t2 > *self.t.last().unwrap() {
            return Err(Error::InvalidInput("window lies outside the trace".into()));
        }
        let first = self.t.iter().position(|&t| t >= t1).unwrap();
        let last = self.t.iter().rposition(|&t| t <= t2).unwrap();
        if last <= first {
            return Err(Error::InvalidInput("window contains no samples".into()));
        }
        Ok(first..last + 1)
    }
}

struct Processed {
    i: Vec<f64>,
    q: Vec<f64>,
}

/// Offsets from the first tenth of the record, which must precede the echo
/// window; then the 1 MHz single-pole filter.
fn preprocess(trace: &Trace, window: (f64, f64)) -> Result<Processed> {
    let n_offset = (trace.t.len() / 10).max(1);
    if trace.t[n_offset - 1] >= window.0 {
        return Err(Error::InvalidInput(
            "echo window overlaps the offset-estimation region (first 10% of the trace)".into(),
        ));
    }
    let mean = |v: &[f64]| v.iter().take(n_offset).sum::<f64>() / n_offset as f64;
    let (i_off, q_off) = (mean(&trace.i), mean(&trace.q));

    let dt = trace.dt();
    let rc = 1.0 / (std::f64::consts::TAU * LOWPASS_HZ);
    let alpha = dt / (rc + dt);
    let filter = |src: &[f64], offset: f64| {
        let mut out = Vec::with_capacity(src.len());
        let mut state = src[0] - offset;
        out.push(state);
        for &v in &src[1..] {
            state += alpha * ((v - offset) - state);
            out.push(state);
        }
        out
    };
    Ok(Processed {
        i: filter(&trace.i, i_off),
        q: filter(&trace.q, q_off),
    })
}

/// Integrated |Q| over the window after rotating by `phi`.
fn abs_q_integral(p: &Processed, range: &std::ops::Range<usize>, phi: f64) -> f64 {
    let (sin, cos) = phi.sin_cos();
    range
        .clone()
        .map(|k| (cos * p.q[k] - sin * p.i[k]).abs())
        .sum()
}

/// Golden-section minimization of the |Q| integral over phi in [0, pi).
fn rotation_phase(p: &Processed, range: &std::ops::Range<usize>) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    // coarse scan first, the objective can have two local minima in [0, pi)
    let mut best = 0.0;
    let mut best_val = f64::INFINITY;
    const COARSE: usize = 32;
    for k in 0..COARSE {
        let phi = std::f64::consts::PI * k as f64 / COARSE as f64;
        let val = abs_q_integral(p, range, phi);
        if val < best_val {
            best_val = val;
            best = phi;
        }
    }
    let half = std::f64::consts::PI / COARSE as f64;
    let mut lo = best - half;
    let mut hi = best + half;
    let mut m1 = hi - INVPHI * (hi - lo);
    let mut m2 = lo + INVPHI * (hi - lo);
    let mut f1 = abs_q_integral(p, range, m1);
    let mut f2 = abs_q_integral(p, range, m2);
    while hi - lo > PHASE_RESOLUTION {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - INVPHI * (hi - lo);
            f1 = abs_q_integral(p, range, m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + INVPHI * (hi - lo);
            f2 = abs_q_integral(p, range, m2);
        }
    }
    0.5 * (lo + hi)
}

/// Amplitude SNR of an echo: mean rotated I of `signal` over the window
/// divided by the RMS rotated I of `blank` over the same window. The
/// rotation is found on the signal trace and applied to both.
pub fn echo_snr(signal: &Trace, blank: &Trace, window: (f64, f64)) -> Result<f64> {
    let sig_range = signal.window_indices(window)?;
    let blank_range = blank.window_indices(window)?;
    let sig = preprocess(signal, window)?;
    let bl = preprocess(blank, window)?;

    let mut phi = rotation_phase(&sig, &sig_range);
    // the |Q| objective is pi-periodic; pick the sign that puts the echo on +I
    let (sin, cos) = phi.sin_cos();
    let mean_i: f64 = sig_range
        .clone()
        .map(|k| cos * sig.i[k] + sin * sig.q[k])
        .sum::<f64>()
        / sig_range.len() as f64;
    if mean_i < 0.0 {
        phi += std::f64::consts::PI;
    }
    let (sin, cos) = phi.sin_cos();

    let signal_mean: f64 = sig_range
        .clone()
        .map(|k| cos * sig.i[k] + sin * sig.q[k])
        .sum::<f64>()
        / sig_range.len() as f64;
    let blank_ms: f64 = blank_range
        .clone()
        .map(|k| {
            let v = cos * bl.i[k] + sin * bl.q[k];
            v * v
        })
        .sum::<f64>()
        / blank_range.len() as f64;
    if blank_ms <= 0.0 {
        return Err(Error::InvalidInput(
            "blank trace has zero RMS in the window".into(),
        ));
    }
    Ok(signal_mean / blank_ms.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// dt large against the filter time constant makes the low-pass nearly
    /// transparent, with an exactly computable effect on alternating data.
    fn make_traces(c: f64, phase: f64) -> (Trace, Trace, (f64, f64), f64) {
        let n = 400;
        let dt = 1e-4;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let window = (200.0 * dt, 299.0 * dt);
        let (sin, cos) = phase.sin_cos();
        let mut i = vec![0.0; n];
        let mut q = vec![0.0; n];
        for k in 200..300 {
            i[k] = c * cos;
            q[k] = c * sin;
        }
        let signal = Trace::new(t.clone(), i, q).unwrap();
        // alternating +-1 blank: filtered steady state is +-alpha/(2-alpha)
        let bi: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let blank = Trace::new(t, bi, vec![0.0; n]).unwrap();
        let rc = 1.0 / (std::f64::consts::TAU * LOWPASS_HZ);
        let alpha = dt / (rc + dt);
        let blank_rms = alpha / (2.0 - alpha);
        (signal, blank, window, blank_rms)
    }

    #[test]
    fn constant_echo_against_unit_noise() {
        let c = 3.7;
        let (signal, blank, window, blank_rms) = make_traces(c, 0.0);
        let snr = echo_snr(&signal, &blank, window).unwrap();
        // expected = c / filtered blank RMS; the filter is near-transparent
        // so this is close to c itself
        let expect = c / blank_rms;
        assert!(
            ((snr - expect) / expect).abs() < 2e-3,
            "snr = {snr}, expect {expect}"
        );
        assert!(((snr - c) / c).abs() < 0.01);
    }

    fn rotate_trace(trace: &Trace, phase: f64) -> Trace {
        let (sin, cos) = phase.sin_cos();
        Trace::new(
            trace.t.clone(),
            trace
                .i
                .iter()
                .zip(&trace.q)
                .map(|(i, q)| cos * i - sin * q)
                .collect(),
            trace
                .i
                .iter()
                .zip(&trace.q)
                .map(|(i, q)| sin * i + cos * q)
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rotation_invariance() {
        // a global phase shift of the demodulation reference touches both
        // the echo and the blank; the result must not move
        let c = 2.0;
        let (s0, blank, window, _) = make_traces(c, 0.0);
        let base = echo_snr(&s0, &blank, window).unwrap();
        for phase in [0.4, 1.2, 2.9, 4.4] {
            let snr = echo_snr(
                &rotate_trace(&s0, phase),
                &rotate_trace(&blank, phase),
                window,
            )
            .unwrap();
            assert!(
                ((snr - base) / base).abs() < 1e-6,
                "phase {phase}: {snr} vs {base}"
            );
        }
    }

    #[test]
    fn common_scale_invariance() {
        let (signal, blank, window, _) = make_traces(1.5, 0.7);
        let snr1 = echo_snr(&signal, &blank, window).unwrap();
        let scale = 37.0;
        let s2 = Trace::new(
            signal.t.clone(),
            signal.i.iter().map(|v| v * scale).collect(),
            signal.q.iter().map(|v| v * scale).collect(),
        )
        .unwrap();
        let b2 = Trace::new(
            blank.t.clone(),
            blank.i.iter().map(|v| v * scale).collect(),
            blank.q.iter().map(|v| v * scale).collect(),
        )
        .unwrap();
        let snr2 = echo_snr(&s2, &b2, window).unwrap();
        assert!(((snr1 - snr2) / snr1).abs() < 1e-9);
    }

    #[test]
    fn zero_blank_is_an_error() {
        let (signal, _, window, _) = make_traces(1.0, 0.0);
        let blank = Trace::new(
            signal.t.clone(),
            vec![0.0; signal.t.len()],
            vec![0.0; signal.t.len()],
        )
        .unwrap();
        assert!(echo_snr(&signal, &blank, window).is_err());
    }

    #[test]
    fn window_outside_trace_is_an_error() {
        let (signal, blank, _, _) = make_traces(1.0, 0.0);
        assert!(echo_snr(&signal, &blank, (0.03, 0.08)).is_err());
        // window overlapping the offset-estimation region is also rejected
        assert!(echo_snr(&signal, &blank, (0.0, 0.01)).is_err());
    }

    #[test]
    fn trace_validation() {
        assert!(Trace::new(vec![0.0], vec![0.0], vec![0.0]).is_err());
        assert!(Trace::new(vec![0.0, 1.0, 1.5], vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(Trace::new(vec![0.0, 1.0], vec![0.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let text = "t_s,I,Q\n0,1.0,0.5\n1e-6,0.9,0.4\n2e-6,0.8,0.3\n";
        let tr = Trace::from_csv(text).unwrap();
        assert_eq!(tr.t.len(), 3);
        assert!((tr.i[1] - 0.9).abs() < 1e-12);
    }
}
