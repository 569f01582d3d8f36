//! The coupled electron-nuclear spin system of a bismuth donor in silicon.
//!
//! The Hamiltonian is the isotropic hyperfine coupling plus the Zeeman
//! interaction of both spins,
//!
//! ```text
//! H / hbar = A S.I + B0 (gamma_e S_z + gamma_n I_z)
//! ```
//!
//! in angular-frequency units. For S = 1/2, I = 9/2 the Hilbert space has
//! 20 levels which group into total-spin manifolds F = 4 (nine states) and
//! F = 5 (eleven states), split by 5A at zero field. All operators are
//! built in the product basis |m_S> (x) |m_I> with descending magnetic
//! quantum numbers and ladder-operator phases chosen so that the
//! Hamiltonian matrix is real symmetric.

use crate::consts::TWO_PI;
use crate::linalg::{jacobi_eigen, Matrix};
use crate::{Error, Result};

/// Finite-difference step for field gradients, tesla.
const GRADIENT_STEP: f64 = 1e-6;

/// A spin-1/2 electron hyperfine-coupled to a nucleus of spin `i`.
///
/// All frequencies are angular (rad/s, rad/s/T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystem {
    /// Electron spin quantum number.
    pub s: f64,
    /// Nuclear spin quantum number.
    pub i: f64,
    /// Hyperfine constant A (angular frequency).
    pub a: f64,
    /// Electron gyromagnetic ratio (angular frequency per tesla).
    pub gamma_e: f64,
    /// Nuclear gyromagnetic ratio (angular frequency per tesla).
    pub gamma_n: f64,
}

impl SpinSystem {
    /// The 209Bi donor in 28Si: A/2pi = 1.478 GHz, gamma_e/2pi = 27.997 GHz/T,
    /// gamma_n/2pi = -6.96 MHz/T.
    pub fn bismuth() -> Self {
        Self {
            s: 0.5,
            i: 4.5,
            a: TWO_PI * 1.478e9,
            gamma_e: TWO_PI * 27.997e9,
            gamma_n: TWO_PI * -6.96e6,
        }
    }

    /// Hilbert-space dimension (2S+1)(2I+1).
    pub fn dim(&self) -> usize {
        let ns = (2.0 * self.s + 1.0).round() as usize;
        let ni = (2.0 * self.i + 1.0).round() as usize;
        ns * ni
    }

    fn validate(&self) -> Result<()> {
        if self.s <= 0.0 || self.i <= 0.0 {
            return Err(Error::InvalidInput(
                "spin quantum numbers must be positive".into(),
            ));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidInput(
                "hyperfine constant must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Full-space operators used throughout: S_x, S_z, I_z, F_z and S.I.
    pub fn operators(&self) -> SpinOperators {
        let ns = (2.0 * self.s + 1.0).round() as usize;
        let ni = (2.0 * self.i + 1.0).round() as usize;
        let (sp, sz) = ladder_and_z(self.s);
        let (ip, iz) = ladder_and_z(self.i);
        let es = Matrix::identity(ns);
        let ei = Matrix::identity(ni);

        let sm = transpose(&sp);
        let im = transpose(&ip);
        let sx_small = scale(&add(&sp, &sm), 0.5);

        let sx = sx_small.kron(&ei);
        let sz_full = sz.kron(&ei);
        let iz_full = es.kron(&iz);
        // S.I = Sz Iz + (S+ I- + S- I+)/2, real in this basis
        let mut s_dot_i = sz.kron(&iz);
        let cross = add(&sp.kron(&im), &sm.kron(&ip));
        for r in 0..s_dot_i.n_rows() {
            for c in 0..s_dot_i.n_cols() {
                s_dot_i.add_to(r, c, 0.5 * cross.get(r, c));
            }
        }
        let mut fz = Matrix::zeros(ns * ni, ns * ni);
        for r in 0..fz.n_rows() {
            for c in 0..fz.n_cols() {
                fz.set(r, c, sz_full.get(r, c) + iz_full.get(r, c));
            }
        }
        SpinOperators {
            sx,
            sz: sz_full,
            iz: iz_full,
            fz,
            s_dot_i,
        }
    }

    /// Build the Hamiltonian matrix at static field `b0` (tesla).
    pub fn hamiltonian(&self, b0: f64) -> Result<Matrix> {
        self.validate()?;
        if b0 < 0.0 {
            return Err(Error::InvalidInput("B0 must be non-negative".into()));
        }
        let ops = self.operators();
        let n = self.dim();
        let mut h = Matrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                h.set(
                    r,
                    c,
                    self.a * ops.s_dot_i.get(r, c)
                        + b0 * (self.gamma_e * ops.sz.get(r, c) + self.gamma_n * ops.iz.get(r, c)),
                );
            }
        }
        Ok(h)
    }

    /// Diagonalize at field `b0` and label the eigenstates.
    pub fn eigensolution(&self, b0: f64) -> Result<EigenSolution> {
        let h = self.hamiltonian(b0)?;
        diagonalize(self, b0, &h)
    }

    /// Frequency of the transition between two labeled states at `b0`.
    pub fn transition_frequency(
        &self,
        lower: StateLabel,
        upper: StateLabel,
        b0: f64,
    ) -> Result<f64> {
        let sol = self.eigensolution(b0)?;
        let i = sol.index_of(lower)?;
        let j = sol.index_of(upper)?;
        Ok((sol.energies[j] - sol.energies[i]).abs())
    }
}

/// Raising operator J+ and Jz for spin `j` in the basis of descending m,
/// with the usual real non-negative ladder matrix elements.
fn ladder_and_z(j: f64) -> (Matrix, Matrix) {
    let n = (2.0 * j + 1.0).round() as usize;
    let m_of = |k: usize| j - k as f64;
    let mut jp = Matrix::zeros(n, n);
    let mut jz = Matrix::zeros(n, n);
    for k in 0..n {
        jz.set(k, k, m_of(k));
        if k > 0 {
            let m = m_of(k);
            jp.set(k - 1, k, (j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    (jp, jz)
}

fn transpose(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.n_cols(), m.n_rows());
    for i in 0..m.n_rows() {
        for j in 0..m.n_cols() {
            out.set(j, i, m.get(i, j));
        }
    }
    out
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        for j in 0..a.n_cols() {
            out.set(i, j, a.get(i, j) + b.get(i, j));
        }
    }
    out
}

fn scale(a: &Matrix, factor: f64) -> Matrix {
    let mut out = Matrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        for j in 0..a.n_cols() {
            out.set(i, j, factor * a.get(i, j));
        }
    }
    out
}

/// Matrix representations shared by the spin operations.
pub struct SpinOperators {
    pub sx: Matrix,
    pub sz: Matrix,
    pub iz: Matrix,
    pub fz: Matrix,
    pub s_dot_i: Matrix,
}

/// |F, m_F> assignment for an eigenstate. Quantum numbers are stored as
/// twice their value so half-integers stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLabel {
    pub f2: i32,
    pub m2: i32,
}

impl StateLabel {
    pub fn new(f: f64, mf: f64) -> Self {
        Self {
            f2: (2.0 * f).round() as i32,
            m2: (2.0 * mf).round() as i32,
        }
    }

    pub fn f(&self) -> f64 {
        self.f2 as f64 / 2.0
    }

    pub fn mf(&self) -> f64 {
        self.m2 as f64 / 2.0
    }
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn half(v: i32, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            if v % 2 == 0 {
                write!(fmt, "{}", v / 2)
            } else {
                write!(fmt, "{}/2", v)
            }
        }
        write!(fmt, "|")?;
        half(self.f2, fmt)?;
        write!(fmt, ",")?;
        half(self.m2, fmt)?;
        write!(fmt, ">")
    }
}

/// Eigenvalues, eigenvectors and |F, m_F> labels at one field point.
pub struct EigenSolution {
    /// Static field, tesla.
    pub field: f64,
    /// Eigenvalues ascending, angular frequency.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors in the product basis, one per energy.
    pub states: Vec<Vec<f64>>,
    /// Per-state |F, m_F> assignment.
    pub labels: Vec<StateLabel>,
    /// Jacobi sweeps used.
    pub sweeps: usize,
}

impl EigenSolution {
    pub fn index_of(&self, label: StateLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::InvalidInput(format!("no state labeled {label}")))
    }
}

/// Diagonalize a spin Hamiltonian and assign |F, m_F> labels.
///
/// m_F is read off the expectation value of F_z = S_z + I_z. The
/// Hamiltonian is block-diagonal in m_F in the product basis and plane
/// rotations never couple across the exact zeros, so every eigenvector
/// carries a sharp m_F even through the zero-field degeneracy. Within each
/// m_F pair the lower-energy state continues adiabatically into the
/// F = I - 1/2 manifold and the upper one into F = I + 1/2; the two
/// branches never cross because the hyperfine coupling holds them apart.
pub fn diagonalize(sys: &SpinSystem, b0: f64, h: &Matrix) -> Result<EigenSolution> {
    let n = sys.dim();
    if h.n_rows() != n || h.n_cols() != n {
        return Err(Error::InvalidInput("Hamiltonian dimension mismatch".into()));
    }
    let decomp = jacobi_eigen(h)?;
    let energies = decomp.values;
    let states: Vec<Vec<f64>> = (0..n).map(|k| decomp.vectors.column(k)).collect();
    let ops = sys.operators();

    // reconstruction residual check
    let scale = h.max_abs();
    for (k, v) in states.iter().enumerate() {
        for r in 0..n {
            let mut hv = 0.0;
            for (c, vc) in v.iter().enumerate() {
                hv += h.get(r, c) * vc;
            }
            if (hv - energies[k] * v[r]).abs() > 1e-9 * scale {
                return Err(Error::EigenConvergence {
                    iterations: decomp.sweeps,
                });
            }
        }
    }

    let labels = assign_labels(sys, &energies, &states, &ops.fz)?;
    Ok(EigenSolution {
        field: b0,
        energies,
        states,
        labels,
        sweeps: decomp.sweeps,
    })
}

fn assign_labels(
    sys: &SpinSystem,
    energies: &[f64],
    states: &[Vec<f64>],
    fz: &Matrix,
) -> Result<Vec<StateLabel>> {
    let n = energies.len();
    let f_upper2 = (2.0 * (sys.i + sys.s)).round() as i32;
    let f_lower2 = f_upper2 - 2;
    let mut m2s = vec![0i32; n];
    for k in 0..n {
        let mf = fz.bilinear(&states[k], &states[k]);
        let m2 = (2.0 * mf).round();
        if (2.0 * mf - m2).abs() > 0.2 {
            return Err(Error::InvalidInput(format!(
                "state {k} has no sharp m_F (got <Fz> = {mf:.6})"
            )));
        }
        m2s[k] = m2 as i32;
    }
    let mut labels = vec![StateLabel { f2: 0, m2: 0 }; n];
    for k in 0..n {
        let partners: Vec<usize> = (0..n).filter(|&j| m2s[j] == m2s[k]).collect();
        let f2 = match partners.len() {
            1 => f_upper2,
            2 => {
                let other = if partners[0] == k {
                    partners[1]
                } else {
                    partners[0]
                };
                if energies[k] < energies[other] {
                    f_lower2
                } else {
                    f_upper2
                }
            }
            n => {
                return Err(Error::InvalidInput(format!(
                    "m_F = {} appears in {} states; labeling supports S = 1/2 only",
                    m2s[k] as f64 / 2.0,
                    n
                )))
            }
        };
        labels[k] = StateLabel { f2, m2: m2s[k] };
    }
    let n_lower = labels.iter().filter(|l| l.f2 == f_lower2).count();
    let n_upper = labels.iter().filter(|l| l.f2 == f_upper2).count();
    let i2 = (2.0 * sys.i).round() as i32;
    if n_lower as i32 != i2 || n_upper as i32 != i2 + 2 {
        return Err(Error::InvalidInput(format!(
            "manifold split {n_lower}/{n_upper} does not match 2I = {i2} / 2I+2"
        )));
    }
    Ok(labels)
}

/// Which spin operator drives a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinOperator {
    Sx,
    Sz,
}

/// One transition between labeled eigenstates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub lower: StateLabel,
    pub upper: StateLabel,
    /// Transition angular frequency (non-negative).
    pub frequency: f64,
    /// |<upper| S_x |lower>|.
    pub mx: f64,
    /// |<upper| S_z |lower>|.
    pub mz: f64,
    /// d omega / d B0 at the solution field (angular frequency per tesla).
    pub dfdb: f64,
}

/// Enumerate level pairs whose matrix element under `operator` passes
/// `threshold`. Degenerate pairs (zero energy difference) are skipped, they
/// are not spectroscopic transitions. The field gradient is evaluated by a
/// central difference around the solution field.
pub fn transitions(
    sys: &SpinSystem,
    sol: &EigenSolution,
    operator: SpinOperator,
    threshold: f64,
) -> Result<Vec<Transition>> {
    if !(threshold > 0.0 && threshold < 0.5) {
        return Err(Error::InvalidInput(format!(
            "threshold must lie in (0, 0.5), got {threshold}"
        )));
    }
    let ops = sys.operators();
    let n = sys.dim();
    let span = sol.energies[n - 1] - sol.energies[0];
    let freq_floor = 1e-9 * span;

    // one solution on each side for all gradients at once
    let db = GRADIENT_STEP;
    let b_minus = (sol.field - db).max(0.0);
    let b_plus = sol.field + db;
    let sol_m = sys.eigensolution(b_minus)?;
    let sol_p = sys.eigensolution(b_plus)?;

    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let freq = sol.energies[j] - sol.energies[i];
            if freq <= freq_floor {
                continue;
            }
            let mx = ops.sx.bilinear(&sol.states[j], &sol.states[i]).abs();
            let mz = ops.sz.bilinear(&sol.states[j], &sol.states[i]).abs();
            let elem = match operator {
                SpinOperator::Sx => mx,
                SpinOperator::Sz => mz,
            };
            if elem < threshold {
                continue;
            }
            let (lo, hi) = (sol.labels[i], sol.labels[j]);
            let fp = sol_p.energies[sol_p.index_of(hi)?] - sol_p.energies[sol_p.index_of(lo)?];
            let fm = sol_m.energies[sol_m.index_of(hi)?] - sol_m.energies[sol_m.index_of(lo)?];
            let dfdb = (fp - fm) / (b_plus - b_minus);
            out.push(Transition {
                lower: lo,
                upper: hi,
                frequency: freq,
                mx,
                mz,
                dfdb,
            });
        }
    }
    Ok(out)
}

/// Find the field where a transition meets `omega_target`, by bracketing on
/// a coarse grid and bisecting to |omega - target| < 2 pi x 1 kHz.
pub fn resonant_field(
    sys: &SpinSystem,
    lower: StateLabel,
    upper: StateLabel,
    omega_target: f64,
    b_range: (f64, f64),
) -> Result<f64> {
    let (b_lo, b_hi) = b_range;
    if !(b_hi > b_lo && b_lo >= 0.0) {
        return Err(Error::InvalidInput(
            "field interval must satisfy 0 <= lo < hi".into(),
        ));
    }
    let freq = |b: f64| -> Result<f64> { sys.transition_frequency(lower, upper, b) };
    const GRID: usize = 64;
    let step = (b_hi - b_lo) / GRID as f64;
    let mut prev_b = if b_lo == 0.0 { 1e-9 } else { b_lo };
    let mut prev = freq(prev_b)? - omega_target;
    let tol = TWO_PI * 1e3;
    if prev.abs() < tol {
        return Ok(prev_b);
    }
    for k in 1..=GRID {
        let b = b_lo + step * k as f64;
        let cur = freq(b)? - omega_target;
        if cur.abs() < tol {
            return Ok(b);
        }
        if prev * cur < 0.0 {
            // bisect
            let (mut lo, mut hi, mut flo) = (prev_b, b, prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = freq(mid)? - omega_target;
                if fm.abs() < tol {
                    return Ok(mid);
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = cur;
        prev_b = b;
    }
    Err(Error::NoCrossing { lo: b_lo, hi: b_hi })
}

/// d omega / d B0 of a transition by central difference with a
/// step-halving consistency check.
pub fn transition_gradient(
    sys: &SpinSystem,
    lower: StateLabel,
    upper: StateLabel,
    b0: f64,
) -> Result<f64> {
    if b0 <= 0.0 {
        return Err(Error::InvalidInput(
            "B0 must be positive for gradients".into(),
        ));
    }
    let central = |db: f64| -> Result<f64> {
        let fp = sys.transition_frequency(lower, upper, b0 + db)?;
        let fm = sys.transition_frequency(lower, upper, b0 - db)?;
        Ok((fp - fm) / (2.0 * db))
    };
    let mut db = GRADIENT_STEP.min(b0 / 2.0);
    let mut coarse = central(db)?;
    for _ in 0..6 {
        let fine = central(db / 2.0)?;
        let scale = fine.abs().max(TWO_PI * 1e3);
        if (fine - coarse).abs() <= 1e-4 * scale {
            return Ok(fine);
        }
        db /= 2.0;
        coarse = fine;
    }
    Ok(coarse)
}

/// A transition crossing a target frequency during a field sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub lower: StateLabel,
    pub upper: StateLabel,
    pub operator: SpinOperator,
    /// Field at which the transition frequency equals the target, tesla.
    pub field: f64,
    /// Matrix element near the crossing.
    pub element: f64,
}

/// Scan `[b_min, b_max]` with `step` and list every field at which a
/// transition with `operator` element >= `threshold` crosses `omega_target`.
/// Each bracket found on the grid is refined by bisection.
pub fn crossings(
    sys: &SpinSystem,
    omega_target: f64,
    b_min: f64,
    b_max: f64,
    step: f64,
    operator: SpinOperator,
    threshold: f64,
) -> Result<Vec<Crossing>> {
    if !(step > 0.0 && b_max > b_min && b_min >= 0.0) {
        return Err(Error::InvalidInput("bad sweep range".into()));
    }
    // per grid point: branch label pair -> (field, frequency, element)
    type BranchMap = std::collections::HashMap<(StateLabel, StateLabel), (f64, f64, f64)>;
    let n_steps = ((b_max - b_min) / step).ceil() as usize;
    let mut prev: Option<BranchMap> = None;
    let mut found = Vec::new();
    for k in 0..=n_steps {
        let b = (b_min + step * k as f64).min(b_max).max(1e-9);
        let sol = sys.eigensolution(b)?;
        let ops = sys.operators();
        let mut cur = std::collections::HashMap::new();
        let span = sol.energies[sys.dim() - 1] - sol.energies[0];
        for i in 0..sys.dim() {
            for j in (i + 1)..sys.dim() {
                let freq = sol.energies[j] - sol.energies[i];
                if freq <= 1e-9 * span {
                    continue;
                }
                if (freq - omega_target).abs() > 0.3 * omega_target {
                    continue;
                }
                let elem = match operator {
                    SpinOperator::Sx => ops.sx.bilinear(&sol.states[j], &sol.states[i]).abs(),
                    SpinOperator::Sz => ops.sz.bilinear(&sol.states[j], &sol.states[i]).abs(),
                };
                cur.insert((sol.labels[i], sol.labels[j]), (b, freq, elem));
            }
        }
        if let Some(prev_map) = &prev {
            for (key, &(b2, f2, e2)) in &cur {
                if let Some(&(b1, f1, e1)) = prev_map.get(key) {
                    if (f1 - omega_target) * (f2 - omega_target) <= 0.0 && e1.max(e2) >= threshold {
                        let field = refine_crossing(sys, key.0, key.1, omega_target, b1, b2)?;
                        found.push(Crossing {
                            lower: key.0,
                            upper: key.1,
                            operator,
                            field,
                            element: e1.max(e2),
                        });
                    }
                }
            }
        }
        prev = Some(cur);
    }
    found.sort_by(|a, b| {
        a.field
            .partial_cmp(&b.field)
            .unwrap()
            .then(a.lower.cmp(&b.lower))
            .then(a.upper.cmp(&b.upper))
    });
    Ok(found)
}

fn refine_crossing(
    sys: &SpinSystem,
    lower: StateLabel,
    upper: StateLabel,
    omega_target: f64,
    mut b_lo: f64,
    mut b_hi: f64,
) -> Result<f64> {
    let mut f_lo = sys.transition_frequency(lower, upper, b_lo)? - omega_target;
    for _ in 0..60 {
        if (b_hi - b_lo) < 1e-9 {
            break;
        }
        let mid = 0.5 * (b_lo + b_hi);
        let fm = sys.transition_frequency(lower, upper, mid)? - omega_target;
        if f_lo * fm <= 0.0 {
            b_hi = mid;
        } else {
            b_lo = mid;
            f_lo = fm;
        }
    }
    Ok(0.5 * (b_lo + b_hi))
}

/// One row of a field-sweep export.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub b0: f64,
    pub transition: Transition,
}

/// Sweep the field and collect transitions passing `threshold` under either
/// operator. Rows carry both matrix elements so the caller can classify.
pub fn sweep(
    sys: &SpinSystem,
    b_min: f64,
    b_max: f64,
    step: f64,
    threshold: f64,
) -> Result<Vec<SweepRow>> {
    if !(step > 0.0 && b_max > b_min && b_min >= 0.0) {
        return Err(Error::InvalidInput("bad sweep range".into()));
    }
    let n_steps = ((b_max - b_min) / step).ceil() as usize;
    let mut rows = Vec::new();
    for k in 0..=n_steps {
        let b = (b_min + step * k as f64).min(b_max);
        let sol = sys.eigensolution(b)?;
        let mut listed = std::collections::HashSet::new();
        for op in [SpinOperator::Sx, SpinOperator::Sz] {
            for t in transitions(sys, &sol, op, threshold)? {
                if listed.insert((t.lower, t.upper)) {
                    rows.push(SweepRow {
                        b0: b,
                        transition: t,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// CSV lines for a sweep: `B0_T,freq_Hz,mx,mz,F_lower,mF_lower,F_upper,mF_upper`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("B0_T,freq_Hz,mx,mz,F_lower,mF_lower,F_upper,mF_upper\n");
    for row in rows {
        let t = &row.transition;
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{},{},{},{}\n",
            row.b0,
            t.frequency / TWO_PI,
            t.mx,
            t.mz,
            t.lower.f(),
            t.lower.mf(),
            t.upper.f(),
            t.upper.mf(),
        ));
    }
    out
}
