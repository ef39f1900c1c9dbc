//! Classical limit: canonical coordinates on the product of two spin
//! spheres, the coherent-state Hamiltonian, RK4 trajectories, Poincaré
//! sections and Lyapunov exponents.
//!
//! A spin coherent state `|z>` maps to the canonical point
//! `(q + ip) / sqrt(4s) = z / sqrt(1 + |z|^2)`, which fills the disk
//! `A = q^2 + p^2 < 4s`; the whole circle `A = 4s` is the single point
//! `z = infinity` (`m = +s`). In these variables `<z|Sz|z> = A/2 - s` and
//! `<z|Sx|z> = q sqrt(4s - A) / 2`, which gives
//!
//! `H = e1 (A1/2 - s1) + e2 (A2/2 - s2) + (alpha/4) q1 q2 sqrt((4s1 - A1)(4s2 - A2))`.

use num_complex::Complex64 as C64;

use crate::dynamics::{ModelParams, TimeGrid};
use crate::error::{Error, Result};
use crate::spin::{CoherentParam, SpinMagnitude};

/// Closest approach to the sphere boundary `4s - A` the flow may reach.
pub const BOUNDARY_TOL: f64 = 1e-9;
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct ClassicalState {
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
}

impl ClassicalState {
    pub const ORIGIN: ClassicalState = ClassicalState { q1: 0.0, p1: 0.0, q2: 0.0, p2: 0.0 };

    pub fn new(q1: f64, p1: f64, q2: f64, p2: f64) -> Self {
        ClassicalState { q1, p1, q2, p2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.p1, self.q2, self.p2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        ClassicalState { q1: a[0], p1: a[1], q2: a[2], p2: a[3] }
    }

    pub fn a1(&self) -> f64 {
        self.q1 * self.q1 + self.p1 * self.p1
    }

    pub fn a2(&self) -> f64 {
        self.q2 * self.q2 + self.p2 * self.p2
    }

    /// Maps both spins' coherent labels to one canonical point.
    pub fn from_coherent(z1: CoherentParam, s1: SpinMagnitude, z2: CoherentParam, s2: SpinMagnitude) -> Self {
        let (q1, p1) = z_to_canonical(z1, s1);
        let (q2, p2) = z_to_canonical(z2, s2);
        ClassicalState { q1, p1, q2, p2 }
    }

    /// Coherent labels `(z1, z2)`; fails on or outside the sphere boundary.
    pub fn to_coherent(&self, s1: SpinMagnitude, s2: SpinMagnitude) -> Result<(C64, C64)> {
        Ok((canonical_to_z(self.q1, self.p1, s1)?, canonical_to_z(self.q2, self.p2, s2)?))
    }

    fn distance(&self, other: &ClassicalState) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

impl std::fmt::Display for ClassicalState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.q1, self.p1, self.q2, self.p2)
    }
}

/// `(q, p)` of the coherent label `z`. The point at infinity is sent to
/// `(sqrt(4s), 0)` on the boundary circle.
pub fn z_to_canonical(z: CoherentParam, s: SpinMagnitude) -> (f64, f64) {
    let r = (4.0 * s.value()).sqrt();
    match z {
        CoherentParam::Infinity => (r, 0.0),
        CoherentParam::Finite(z) => {
            let w = z * (r / (1.0 + z.norm_sqr()).sqrt());
            (w.re, w.im)
        }
    }
}

/// Inverse of [`z_to_canonical`] on the open disk `A < 4s`.
pub fn canonical_to_z(q: f64, p: f64, s: SpinMagnitude) -> Result<C64> {
    let four_s = 4.0 * s.value();
    let a = q * q + p * p;
    if !(a < four_s) {
        return Err(Error::param("point", format!("A = {a} is not inside the sphere disk A < 4s = {four_s}")));
    }
    let w = C64::new(q, p) / four_s.sqrt();
    Ok(w / (1.0 - a / four_s).sqrt())
}

fn check_constraints(x: &ClassicalState, p: &ModelParams) -> Result<(f64, f64)> {
    let r1 = 4.0 * p.s1.value() - x.a1();
    let r2 = 4.0 * p.s2.value() - x.a2();
    if !(r1 >= 0.0 && r2 >= 0.0) {
        return Err(Error::param("point", format!("{x} violates A_i <= 4 s_i")));
    }
    Ok((r1, r2))
}

/// Coherent-state expectation of the Hamiltonian.
pub fn classical_hamiltonian(x: &ClassicalState, p: &ModelParams) -> Result<f64> {
    let (r1, r2) = check_constraints(x, p)?;
    Ok(energy_unchecked(x, p, r1, r2))
}

fn energy_unchecked(x: &ClassicalState, p: &ModelParams, r1: f64, r2: f64) -> f64 {
    p.eps1_b0 * (0.5 * x.a1() - p.s1.value())
        + p.eps2_b0 * (0.5 * x.a2() - p.s2.value())
        + 0.25 * p.alpha * x.q1 * x.q2 * (r1 * r2).sqrt()
}

/// Hamilton's equations `dq/dt = dH/dp`, `dp/dt = -dH/dq`.
pub fn hamilton_rhs(x: &ClassicalState, p: &ModelParams) -> Result<ClassicalState> {
    let (r1, r2) = check_constraints(x, p)?;
    if r1 < BOUNDARY_TOL || r2 < BOUNDARY_TOL {
        return Err(Error::param("point", format!("{x} is within {BOUNDARY_TOL:e} of the sphere boundary")));
    }
    Ok(rhs_unchecked(x, p, r1, r2))
}

fn rhs_unchecked(x: &ClassicalState, p: &ModelParams, r1: f64, r2: f64) -> ClassicalState {
    let c = 0.25 * p.alpha;
    let (sq1, sq2) = (r1.sqrt(), r2.sqrt());
    // d/dx sqrt(4s - A) = -x / sqrt(4s - A)
    let dh_dq1 = p.eps1_b0 * x.q1 + c * x.q2 * sq2 * (sq1 - x.q1 * x.q1 / sq1);
    let dh_dp1 = p.eps1_b0 * x.p1 - c * x.q1 * x.q2 * sq2 * x.p1 / sq1;
    let dh_dq2 = p.eps2_b0 * x.q2 + c * x.q1 * sq1 * (sq2 - x.q2 * x.q2 / sq2);
    let dh_dp2 = p.eps2_b0 * x.p2 - c * x.q1 * x.q2 * sq1 * x.p2 / sq2;
    ClassicalState { q1: dh_dp1, p1: -dh_dq1, q2: dh_dp2, p2: -dh_dq2 }
}

/// Flow evaluated along an integration; remembers nothing but the model.
struct Flow<'a> {
    params: &'a ModelParams,
    four_s1: f64,
    four_s2: f64,
}

impl<'a> Flow<'a> {
    fn new(params: &'a ModelParams) -> Self {
        Flow { params, four_s1: 4.0 * params.s1.value(), four_s2: 4.0 * params.s2.value() }
    }

    fn rhs(&self, x: &[f64; 4]) -> Option<[f64; 4]> {
        let s = ClassicalState::from_array(*x);
        let r1 = self.four_s1 - s.a1();
        let r2 = self.four_s2 - s.a2();
        if !(r1 >= BOUNDARY_TOL && r2 >= BOUNDARY_TOL) {
            return None;
        }
        Some(rhs_unchecked(&s, self.params, r1, r2).to_array())
    }

    /// One classical RK4 step; `None` if any stage leaves the disk.
    fn rk4(&self, x: &[f64; 4], h: f64) -> Option<[f64; 4]> {
        let add = |a: &[f64; 4], k: &[f64; 4], f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2], a[3] + f * k[3]];
        let k1 = self.rhs(x)?;
        let k2 = self.rhs(&add(x, &k1, 0.5 * h))?;
        let k3 = self.rhs(&add(x, &k2, 0.5 * h))?;
        let k4 = self.rhs(&add(x, &k3, h))?;
        let mut out = *x;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Some(out)
    }

    fn advance(&self, x: &mut [f64; 4], t: f64, duration: f64, step: f64) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let n = (duration / step - 1e-9).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        for k in 0..n {
            match self.rk4(x, h) {
                Some(next) => *x = next,
                None => {
                    return Err(Error::SphereBoundary { time: t + k as f64 * h, last: ClassicalState::from_array(*x) });
                }
            }
        }
        Ok(())
    }

    fn energy(&self, x: &[f64; 4]) -> f64 {
        let s = ClassicalState::from_array(*x);
        energy_unchecked(&s, self.params, self.four_s1 - s.a1(), self.four_s2 - s.a2())
    }
}

fn check_interior(x: &ClassicalState, p: &ModelParams) -> Result<()> {
    let (r1, r2) = check_constraints(x, p)?;
    if r1 < BOUNDARY_TOL || r2 < BOUNDARY_TOL {
        return Err(Error::param("point", format!("{x} is not strictly inside the sphere disks")));
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("step", format!("must be positive, got {step}")));
    }
    Ok(())
}

/// A sampled classical trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    /// `max_t |H(t) - H(0)| / max(1, |H(0)|)`.
    pub fn max_relative_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1.0)
    }
}

/// Fixed-step RK4 sampled on `grid`; each grid interval is split into equal
/// substeps no longer than `step`.
pub fn integrate_trajectory(x0: &ClassicalState, params: &ModelParams, grid: &TimeGrid, step: f64) -> Result<Trajectory> {
    grid.validate()?;
    check_step(step)?;
    check_interior(x0, params)?;
    let flow = Flow::new(params);
    let times = grid.times();
    let mut x = x0.to_array();
    let mut states = Vec::with_capacity(times.len());
    let mut energies = Vec::with_capacity(times.len());
    states.push(*x0);
    energies.push(flow.energy(&x));
    for w in times.windows(2) {
        flow.advance(&mut x, w[0], w[1] - w[0], step)?;
        states.push(ClassicalState::from_array(x));
        energies.push(flow.energy(&x));
    }
    Ok(Trajectory { times, states, energies })
}

/// Advances `x0` by `duration` (negative durations integrate backwards).
pub fn flow_for(x0: &ClassicalState, params: &ModelParams, duration: f64, step: f64) -> Result<ClassicalState> {
    check_step(step)?;
    check_interior(x0, params)?;
    let flow = Flow::new(params);
    let mut x = x0.to_array();
    let n = (duration.abs() / step - 1e-9).ceil().max(1.0) as usize;
    let h = duration / n as f64;
    for k in 0..n {
        x = flow.rk4(&x, h).ok_or(Error::SphereBoundary { time: k as f64 * h, last: ClassicalState::from_array(x) })?;
    }
    Ok(ClassicalState::from_array(x))
}

/// Sign of `dp2/dt` at the crossings to keep.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum CrossingDirection {
    #[default]
    Positive,
    Negative,
    Both,
}

impl std::str::FromStr for CrossingDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "+" => Ok(CrossingDirection::Positive),
            "negative" | "-" => Ok(CrossingDirection::Negative),
            "both" => Ok(CrossingDirection::Both),
            other => Err(Error::param("direction", format!("expected positive|negative|both, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for CrossingDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CrossingDirection::Positive => "positive",
            CrossingDirection::Negative => "negative",
            CrossingDirection::Both => "both",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SectionPoint {
    pub q1: f64,
    pub p1: f64,
    /// Not plotted, but needed to re-seed the flow from the section.
    pub q2: f64,
    /// Residual `p2` after refinement.
    pub p2: f64,
    pub crossing_time: f64,
}

impl SectionPoint {
    pub fn state(&self) -> ClassicalState {
        ClassicalState { q1: self.q1, p1: self.p1, q2: self.q2, p2: self.p2 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SectionOptions {
    pub n_crossings: usize,
    pub direction: CrossingDirection,
    pub step: f64,
    /// Integration stops here even if fewer crossings were found.
    pub max_time: f64,
}

impl Default for SectionOptions {
    fn default() -> Self {
        SectionOptions { n_crossings: 500, direction: CrossingDirection::Positive, step: DEFAULT_STEP, max_time: 1e5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub points: Vec<SectionPoint>,
    /// False when `max_time` was reached first.
    pub complete: bool,
}

const REFINE_TOL: f64 = 1e-12;

/// Crossings of the surface `p2 = 0`, each refined by bisection on the
/// substep length of an RK4 step taken from the start of the bracketing step.
pub fn poincare_section(x0: &ClassicalState, params: &ModelParams, opts: &SectionOptions) -> Result<Section> {
    if opts.n_crossings == 0 {
        return Err(Error::param("crossings", "must be at least 1"));
    }
    check_step(opts.step)?;
    check_interior(x0, params)?;
    let flow = Flow::new(params);
    let h = opts.step;
    let mut x = x0.to_array();
    let mut t = 0.0;
    let mut points = Vec::with_capacity(opts.n_crossings);
    let max_steps = (opts.max_time / h).ceil() as u64;
    for k in 0..max_steps {
        let next = flow.rk4(&x, h).ok_or(Error::SphereBoundary { time: t, last: ClassicalState::from_array(x) })?;
        let (a, b) = (x[3], next[3]);
        let hit = match opts.direction {
            CrossingDirection::Positive => a < 0.0 && b >= 0.0,
            CrossingDirection::Negative => a > 0.0 && b <= 0.0,
            CrossingDirection::Both => (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0),
        };
        if hit {
            let (tau, y) = refine_crossing(&flow, &x, h, a);
            points.push(SectionPoint { q1: y[0], p1: y[1], q2: y[2], p2: y[3], crossing_time: t + tau });
            if points.len() == opts.n_crossings {
                return Ok(Section { points, complete: true });
            }
        }
        x = next;
        t = (k + 1) as f64 * h;
    }
    Ok(Section { points, complete: false })
}

fn refine_crossing(flow: &Flow<'_>, x: &[f64; 4], h: f64, p2_start: f64) -> (f64, [f64; 4]) {
    let (mut lo, mut hi) = (0.0, h);
    let mut best = (h, flow.rk4(x, h).expect("bracketing step succeeded"));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let y = flow.rk4(x, mid).expect("shorter step stays inside");
        if y[3].abs() < best.1[3].abs() {
            best = (mid, y);
        }
        if y[3].abs() < REFINE_TOL || hi - lo < 1e-16 {
            break;
        }
        if (y[3] < 0.0) == (p2_start < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Number of occupied cells of a `bins x bins` grid over the `(q1, p1)` disk.
pub fn occupied_cells(points: &[SectionPoint], s1: SpinMagnitude, bins: usize) -> usize {
    let r = (4.0 * s1.value()).sqrt();
    let mut seen = vec![false; bins * bins];
    for p in points {
        let i = (((p.q1 + r) / (2.0 * r)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        let j = (((p.p1 + r) / (2.0 * r)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        seen[i * bins + j] = true;
    }
    seen.iter().filter(|&&b| b).count()
}

/// Values of `q2` with `H(q1, p1, q2, p2 = 0) = energy`, by scanning for sign
/// changes and bisecting.
pub fn shell_q2_roots(q1: f64, p1: f64, energy: f64, params: &ModelParams) -> Vec<f64> {
    let r = (4.0 * params.s2.value()).sqrt() * (1.0 - 1e-12);
    let f = |q2: f64| classical_hamiltonian(&ClassicalState::new(q1, p1, q2, 0.0), params).map(|e| e - energy).unwrap_or(f64::NAN);
    if !(q1 * q1 + p1 * p1 < 4.0 * params.s1.value()) {
        return Vec::new();
    }
    const SCAN: usize = 2000;
    let mut roots = Vec::new();
    let mut prev = (-r, f(-r));
    for k in 1..=SCAN {
        let q = -r + 2.0 * r * k as f64 / SCAN as f64;
        let v = f(q);
        if prev.1 == 0.0 {
            roots.push(prev.0);
        } else if prev.1 * v < 0.0 {
            let (mut lo, mut hi, mut flo) = (prev.0, q, prev.1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 || hi - lo < 1e-15 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (q, v);
    }
    roots
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LyapunovOptions {
    pub horizon: f64,
    pub renorm_interval: f64,
    pub step: f64,
    pub initial_offset: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions { horizon: 2000.0, renorm_interval: 1.0, step: DEFAULT_STEP, initial_offset: 1e-8 }
    }
}

/// Largest Lyapunov exponent from the growth of a renormalised separation
/// between a reference and a shadow trajectory.
pub fn lyapunov_exponent(x0: &ClassicalState, params: &ModelParams, opts: &LyapunovOptions) -> Result<f64> {
    if !(opts.horizon > 0.0 && opts.renorm_interval > 0.0 && opts.renorm_interval <= opts.horizon) {
        return Err(Error::param("horizon", "need 0 < renorm_interval <= horizon"));
    }
    if !(opts.initial_offset > 0.0) {
        return Err(Error::param("initial_offset", "must be positive"));
    }
    check_step(opts.step)?;
    check_interior(x0, params)?;
    let flow = Flow::new(params);
    let d0 = opts.initial_offset;
    let mut x = x0.to_array();
    let mut y = x;
    for v in y.iter_mut() {
        *v += 0.5 * d0;
    }
    let intervals = (opts.horizon / opts.renorm_interval).round().max(1.0) as usize;
    let mut log_sum = 0.0;
    for k in 0..intervals {
        let t = k as f64 * opts.renorm_interval;
        flow.advance(&mut x, t, opts.renorm_interval, opts.step)?;
        flow.advance(&mut y, t, opts.renorm_interval, opts.step)?;
        let d = ClassicalState::from_array(x).distance(&ClassicalState::from_array(y));
        log_sum += (d / d0).ln();
        for i in 0..4 {
            y[i] = x[i] + (y[i] - x[i]) * d0 / d;
        }
    }
    Ok(log_sum / (intervals as f64 * opts.renorm_interval))
}
