//! Preset experiments for the three regimes: two qubits, a qubit coupled to a
//! large spin, and two large spins with their classical companion.
//!
//! Defaults not fixed by the model itself (coupling strengths, time grids,
//! the semiclassical representatives) are choices of this crate; they are
//! listed with each preset.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::classical::{
    canonical_to_z, integrate_trajectory, lyapunov_exponent, poincare_section, ClassicalState, LyapunovOptions, Section,
    SectionOptions, Trajectory, DEFAULT_STEP,
};
use crate::dynamics::mixed::ReducedMixedEvolution;
use crate::dynamics::{build_hamiltonian, spectral_decompose, EigenSystem, ModelParams, TimeGrid};
use crate::entropy::{linear_entropy, von_neumann_from_spectrum, EntropySeries};
use crate::error::{Error, Result};
use crate::spin::{
    coherent_state, hermitian_eigenvalues, reduce_pure_unchecked, thermal_density, uniform_state, CoherentParam,
    DensityOperator, Ket, SpinMagnitude, Subsystem,
};

/// Coupling used by the semiclassical presets, `alpha sqrt(s1 s2) = 1`.
///
/// Smallest value of the sweep `alpha sqrt(s1 s2) in {0.5, 1, 2, 5}` whose
/// Poincaré section shows regular islands next to a chaotic sea. Not a
/// value taken from the literature.
pub const SEMICLASSICAL_ALPHA: f64 = 1.0 / 15.0;

/// Coupling used by the environment presets.
///
/// For `alpha > 2` a large spin aligned with the qubit along `x` keeps the
/// sign of `<S1x>` while it precesses, so the qubit follows it adiabatically
/// and the `z1 = z2 = 1` run stays nearly entanglement-free. Not a value
/// taken from the literature.
pub const ENVIRONMENT_ALPHA: f64 = 3.0;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    TwoQubits,
    Environment,
    Semiclassical,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::TwoQubits => "two_qubits",
            Regime::Environment => "environment",
            Regime::Semiclassical => "semiclassical",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_qubits" | "two-qubits" => Ok(Regime::TwoQubits),
            "environment" => Ok(Regime::Environment),
            "semiclassical" => Ok(Regime::Semiclassical),
            other => Err(Error::param("regime", format!("unknown regime `{other}`"))),
        }
    }
}

/// Initial state of one spin.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Coherent(CoherentParam),
    Uniform,
    Thermal { temperature: f64 },
    /// Coherent state given by its canonical point `(q, p)`.
    Canonical { q: f64, p: f64 },
}

impl InitialSpec {
    fn coherent_label(&self, s: SpinMagnitude) -> Result<Option<CoherentParam>> {
        Ok(match *self {
            InitialSpec::Coherent(z) => Some(z),
            InitialSpec::Canonical { q, p } => Some(CoherentParam::Finite(canonical_to_z(q, p, s)?)),
            _ => None,
        })
    }

    fn pure_state(&self, s: SpinMagnitude) -> Result<Option<Ket>> {
        Ok(match self {
            InitialSpec::Uniform => Some(uniform_state(s)),
            InitialSpec::Thermal { .. } => None,
            _ => self.coherent_label(s)?.map(|z| coherent_state(s, z)),
        })
    }
}

/// Classical companion settings for the semiclassical regime.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ClassicalOptions {
    pub step: f64,
    pub section: Option<SectionOptions>,
    pub lyapunov: Option<LyapunovOptions>,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        ClassicalOptions { step: DEFAULT_STEP, section: None, lyapunov: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub regime: Regime,
    pub s1: SpinMagnitude,
    pub s2: SpinMagnitude,
    pub alpha: f64,
    pub eps1_b0: f64,
    pub eps2_b0: f64,
    pub grid: TimeGrid,
    pub initial_1: InitialSpec,
    pub initial_2: InitialSpec,
    pub classical: ClassicalOptions,
}

impl ScenarioConfig {
    /// Defaults per regime. Two qubits: `alpha = 1`, `t in [0, 50]`, 2000
    /// points. Environment: `s1 = 200`, [`ENVIRONMENT_ALPHA`], `t in [0, 200]`, 4000
    /// points. Semiclassical: `s1 = s2 = 15`, [`SEMICLASSICAL_ALPHA`], same
    /// grid as the environment. All start from `z1 = z2 = 0` except the
    /// semiclassical regime, which starts from the `regular` representative.
    pub fn default_for(regime: Regime) -> Self {
        let zero = InitialSpec::Coherent(CoherentParam::real(0.0));
        match regime {
            Regime::TwoQubits => ScenarioConfig {
                regime,
                s1: SpinMagnitude::HALF,
                s2: SpinMagnitude::HALF,
                alpha: 1.0,
                eps1_b0: 1.0,
                eps2_b0: 1.0,
                grid: TimeGrid { t_start: 0.0, t_end: 50.0, n_points: 2000 },
                initial_1: zero,
                initial_2: zero,
                classical: ClassicalOptions::default(),
            },
            Regime::Environment => ScenarioConfig {
                regime,
                s1: SpinMagnitude::from_twice(400),
                s2: SpinMagnitude::HALF,
                alpha: ENVIRONMENT_ALPHA,
                eps1_b0: 1.0,
                eps2_b0: 1.0,
                grid: TimeGrid { t_start: 0.0, t_end: 200.0, n_points: 4000 },
                initial_1: zero,
                initial_2: zero,
                classical: ClassicalOptions::default(),
            },
            Regime::Semiclassical => {
                let x = SemiclassicalRepresentative::Regular.point();
                ScenarioConfig {
                    regime,
                    s1: SpinMagnitude::from_twice(30),
                    s2: SpinMagnitude::from_twice(30),
                    alpha: SEMICLASSICAL_ALPHA,
                    eps1_b0: 1.0,
                    eps2_b0: 1.0,
                    grid: TimeGrid { t_start: 0.0, t_end: 200.0, n_points: 4000 },
                    initial_1: InitialSpec::Canonical { q: x.q1, p: x.p1 },
                    initial_2: InitialSpec::Canonical { q: x.q2, p: x.p2 },
                    classical: ClassicalOptions::default(),
                }
            }
        }
    }

    pub fn model(&self) -> ModelParams {
        ModelParams { s1: self.s1, s2: self.s2, alpha: self.alpha, eps1_b0: self.eps1_b0, eps2_b0: self.eps2_b0 }
    }

    /// Checks the regime constraints and every numeric field.
    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        self.grid.validate()?;
        if self.grid.t_start != 0.0 {
            // series start from the prepared product state
            return Err(Error::param("t_start", "scenarios start at t = 0"));
        }
        match self.regime {
            Regime::TwoQubits => {
                if self.s1 != SpinMagnitude::HALF || self.s2 != SpinMagnitude::HALF {
                    return Err(Error::param("s1", "two_qubits requires s1 = s2 = 1/2"));
                }
            }
            Regime::Environment => {
                if self.s2 != SpinMagnitude::HALF {
                    return Err(Error::param("s2", "environment requires s2 = 1/2"));
                }
            }
            Regime::Semiclassical => {
                if self.s1 != self.s2 {
                    return Err(Error::param("s2", "semiclassical requires s1 = s2"));
                }
            }
        }
        if self.s1.twice() == 0 || self.s2.twice() == 0 {
            return Err(Error::param("s1", "spins must be at least 1/2"));
        }
        match (self.regime, self.initial_1) {
            (Regime::Environment, InitialSpec::Canonical { .. }) | (Regime::TwoQubits, InitialSpec::Canonical { .. }) => {
                return Err(Error::param("initial_1", "canonical points are only used in the semiclassical regime"));
            }
            (Regime::TwoQubits | Regime::Semiclassical, InitialSpec::Uniform | InitialSpec::Thermal { .. }) => {
                return Err(Error::param("initial_1", "only the environment regime accepts uniform or thermal states"));
            }
            (_, InitialSpec::Thermal { temperature }) if !(temperature > 0.0 && temperature.is_finite()) => {
                return Err(Error::param("temperature", format!("must be positive, got {temperature}")));
            }
            _ => {}
        }
        match (self.regime, self.initial_2) {
            (_, InitialSpec::Coherent(_)) | (Regime::Semiclassical, InitialSpec::Canonical { .. }) => {}
            _ => return Err(Error::param("initial_2", "spin 2 starts in a coherent state")),
        }
        if let InitialSpec::Canonical { q, p } = self.initial_1 {
            canonical_to_z(q, p, self.s1)?;
        }
        if let InitialSpec::Canonical { q, p } = self.initial_2 {
            canonical_to_z(q, p, self.s2)?;
        }
        if !(self.classical.step > 0.0) {
            return Err(Error::param("step", "must be positive"));
        }
        Ok(())
    }

    /// Canonical point of the initial coherent pair (semiclassical regime).
    pub fn classical_point(&self) -> Result<ClassicalState> {
        let z1 = self.initial_1.coherent_label(self.s1)?.ok_or_else(|| Error::param("initial_1", "not a coherent state"))?;
        let z2 = self.initial_2.coherent_label(self.s2)?.ok_or_else(|| Error::param("initial_2", "not a coherent state"))?;
        Ok(match (self.initial_1, self.initial_2) {
            (InitialSpec::Canonical { q: q1, p: p1 }, InitialSpec::Canonical { q: q2, p: p2 }) => ClassicalState::new(q1, p1, q2, p2),
            _ => ClassicalState::from_coherent(z1, self.s1, z2, self.s2),
        })
    }
}

/// The eight two-qubit initial conditions `(z1, z2)`.
pub fn two_qubit_case(name: &str) -> Option<(CoherentParam, CoherentParam)> {
    let r = CoherentParam::real;
    let i = CoherentParam::Finite(C64::new(0.0, 1.0));
    Some(match name {
        "case_a" => (r(0.0), r(0.0)),
        "case_b" => (r(1.0), r(0.0)),
        "case_c" => (CoherentParam::Infinity, r(0.0)),
        "case_d" => (r(0.0), r(1.0)),
        "case_e" => (r(0.0), i),
        "case_f" => (r(1.0), r(1.0)),
        "case_g" => (r(1.0), i),
        "case_h" => (i, i),
        _ => return None,
    })
}

pub const TWO_QUBIT_CASES: [&str; 8] = ["case_a", "case_b", "case_c", "case_d", "case_e", "case_f", "case_g", "case_h"];

/// Classical initial conditions used for the semiclassical runs at
/// [`SEMICLASSICAL_ALPHA`]. The regular and periodic points sit close to the
/// ground state; the chaotic point lies on the `H = -5` shell, where the
/// section is mostly a chaotic sea.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SemiclassicalRepresentative {
    /// Quasi-periodic orbit, `H = -29.5`.
    Regular,
    /// Symmetric orbit `q1 = q2, p1 = p2`, a fixed point of the section.
    Periodic,
    /// Orbit in the chaotic sea, `H = -5`.
    Chaotic,
}

impl SemiclassicalRepresentative {
    pub const ALL: [SemiclassicalRepresentative; 3] = [Self::Regular, Self::Periodic, Self::Chaotic];

    pub fn name(self) -> &'static str {
        match self {
            Self::Regular => "regular",
            Self::Periodic => "periodic",
            Self::Chaotic => "chaotic",
        }
    }

    pub fn point(self) -> ClassicalState {
        match self {
            Self::Regular => ClassicalState::new(1.0, 0.0, 0.0, 0.0),
            Self::Periodic => ClassicalState::new(1.0, 0.0, 1.0, 0.0),
            Self::Chaotic => ClassicalState::new(0.0, 5.0, 5.0, 0.0),
        }
    }
}

/// A named configuration.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ScenarioConfig,
}

pub fn presets() -> Vec<Preset> {
    let mut out = Vec::new();
    let descriptions = [
        "z1 = 0, z2 = 0",
        "z1 = 1, z2 = 0",
        "z1 = infinity, z2 = 0",
        "z1 = 0, z2 = 1",
        "z1 = 0, z2 = i",
        "z1 = 1, z2 = 1",
        "z1 = 1, z2 = i",
        "z1 = i, z2 = i",
    ];
    for (name, description) in TWO_QUBIT_CASES.iter().zip(descriptions) {
        let (z1, z2) = two_qubit_case(name).expect("listed case");
        let mut config = ScenarioConfig::default_for(Regime::TwoQubits);
        config.initial_1 = InitialSpec::Coherent(z1);
        config.initial_2 = InitialSpec::Coherent(z2);
        out.push(Preset { name, description, config });
    }
    let env = ScenarioConfig::default_for(Regime::Environment);
    let s1 = env.s1.value();
    let coh = |x: f64| InitialSpec::Coherent(CoherentParam::real(x));
    for (name, description, i1, z2) in [
        ("env_ground", "coherent environment z1 = 0, qubit z2 = 0", coh(0.0), 0.0),
        ("env_coherent", "coherent environment z1 = 0, qubit z2 = 1", coh(0.0), 1.0),
        ("env_aligned", "coherent environment z1 = 1, qubit z2 = 1", coh(1.0), 1.0),
        ("env_uniform", "non-localized environment, qubit z2 = 1", InitialSpec::Uniform, 1.0),
        ("env_thermal", "thermal environment T = s1/10, qubit z2 = 1", InitialSpec::Thermal { temperature: s1 / 10.0 }, 1.0),
    ] {
        let mut config = env.clone();
        config.initial_1 = i1;
        config.initial_2 = coh(z2);
        out.push(Preset { name, description, config });
    }
    for rep in SemiclassicalRepresentative::ALL {
        let x = rep.point();
        let mut config = ScenarioConfig::default_for(Regime::Semiclassical);
        config.initial_1 = InitialSpec::Canonical { q: x.q1, p: x.p1 };
        config.initial_2 = InitialSpec::Canonical { q: x.q2, p: x.p2 };
        let description = match rep {
            SemiclassicalRepresentative::Regular => "s1 = s2 = 15, regular (quasi-periodic) classical orbit",
            SemiclassicalRepresentative::Periodic => "s1 = s2 = 15, periodic classical orbit",
            SemiclassicalRepresentative::Chaotic => "s1 = s2 = 15, chaotic classical orbit",
        };
        out.push(Preset { name: rep.name(), description, config });
    }
    out
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| p.config)
        .ok_or_else(|| Error::param("preset", format!("unknown preset `{name}`")))
}

/// Hamiltonian and its eigensystem, shared by runs with equal model
/// parameters.
#[derive(Clone, Debug)]
pub struct Simulation {
    params: ModelParams,
    eig: EigenSystem,
}

impl Simulation {
    pub fn new(params: ModelParams) -> Result<Self> {
        let eig = spectral_decompose(&build_hamiltonian(&params)?)?;
        Ok(Simulation { params, eig })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    fn check(&self, cfg: &ScenarioConfig) -> Result<()> {
        if cfg.model() != self.params {
            return Err(Error::param("alpha", "configuration does not match the prepared model"));
        }
        Ok(())
    }

    /// Entropy series of a pure initial state.
    pub fn pure_series(&self, psi0: &Ket, grid: &TimeGrid) -> Result<EntropySeries> {
        let (d1, d2) = self.params.dims();
        let evo = self.eig.evolve(psi0)?;
        let times = grid.times();
        let m1: Vec<f64> = self.params.s1.m_values().collect();
        let (s1, s2) = (self.params.s1.value(), self.params.s2.value());
        let rows: Vec<Result<Vec<[f64; 4]>>> = times
            .par_chunks(SERIES_CHUNK)
            .map(|ts| {
                let states = evo.states_at(ts);
                (0..ts.len())
                    .map(|c| {
                        let amps = states.column(c);
                        let amps = amps.as_slice();
                        let rho2 = reduce_pure_unchecked(amps, d1, d2, Subsystem::Second);
                        let sz1: f64 = amps.chunks_exact(d2).zip(&m1).map(|(row, m)| m * row.iter().map(|a| a.norm_sqr()).sum::<f64>()).sum();
                        let (delta, delta_n, sz2) = measures(rho2, self.params.s2)?;
                        Ok([delta, delta_n, sigma(sz1, s1), sigma(sz2, s2)])
                    })
                    .collect()
            })
            .collect();
        assemble(times, rows)
    }

    /// Entropy series of a mixed initial state through the eigenbasis
    /// quadratic forms of [`ReducedMixedEvolution`].
    pub fn mixed_series(&self, rho0: &DensityOperator, grid: &TimeGrid) -> Result<EntropySeries> {
        let (d1, d2) = self.params.dims();
        let sz1 = DVector::from_iterator(d1 * d2, self.params.s1.m_values().flat_map(|m| std::iter::repeat_n(m, d2)));
        let evo = ReducedMixedEvolution::new(&self.eig, rho0, d1, d2, Subsystem::Second, &[sz1])?;
        let times = grid.times();
        let (s1, s2) = (self.params.s1.value(), self.params.s2.value());
        let rows: Vec<Result<Vec<[f64; 4]>>> = evo
            .evaluate(&times)
            .into_iter()
            .map(|sample| {
                let (delta, delta_n, sz2) = measures(sample.reduced.into_matrix(), self.params.s2)?;
                Ok(vec![[delta, delta_n, sigma(sample.expectations[0], s1), sigma(sz2, s2)]])
            })
            .collect();
        assemble(times, rows)
    }

    pub fn run_two_qubits(&self, cfg: &ScenarioConfig) -> Result<EntropySeries> {
        expect_regime(cfg, Regime::TwoQubits)?;
        self.check(cfg)?;
        self.pure_series(&initial_product(cfg)?, &cfg.grid)
    }

    pub fn run_environment(&self, cfg: &ScenarioConfig) -> Result<EntropySeries> {
        expect_regime(cfg, Regime::Environment)?;
        self.check(cfg)?;
        match cfg.initial_1 {
            InitialSpec::Thermal { temperature } => {
                let z2 = cfg.initial_2.pure_state(cfg.s2)?.expect("validated coherent");
                let rho0 = thermal_density(cfg.s1, temperature)?.tensor(&z2.projector())?;
                self.mixed_series(&rho0, &cfg.grid)
            }
            _ => self.pure_series(&initial_product(cfg)?, &cfg.grid),
        }
    }

    pub fn run_semiclassical(&self, cfg: &ScenarioConfig) -> Result<SemiclassicalRun> {
        expect_regime(cfg, Regime::Semiclassical)?;
        self.check(cfg)?;
        let series = self.pure_series(&initial_product(cfg)?, &cfg.grid)?;
        let x0 = cfg.classical_point()?;
        let params = cfg.model();
        let trajectory = integrate_trajectory(&x0, &params, &cfg.grid, cfg.classical.step)?;
        let section = cfg.classical.section.map(|o| poincare_section(&x0, &params, &o)).transpose()?;
        let lyapunov = cfg.classical.lyapunov.map(|o| lyapunov_exponent(&x0, &params, &o)).transpose()?;
        Ok(SemiclassicalRun { series, trajectory, section, lyapunov })
    }

    pub fn run(&self, cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
        Ok(match cfg.regime {
            Regime::TwoQubits => ScenarioOutput::Series(self.run_two_qubits(cfg)?),
            Regime::Environment => ScenarioOutput::Series(self.run_environment(cfg)?),
            Regime::Semiclassical => ScenarioOutput::Semiclassical(self.run_semiclassical(cfg)?),
        })
    }
}

const SERIES_CHUNK: usize = 128;

fn sigma(sz: f64, s: f64) -> f64 {
    ((sz + s) / (2.0 * s)).clamp(0.0, 1.0)
}

/// Entropies below this are rounding noise of a pure reduced state and are
/// reported as exactly zero.
pub const ENTROPY_FLOOR: f64 = 1e-14;

fn floor(x: f64) -> f64 {
    if x < ENTROPY_FLOOR {
        0.0
    } else {
        x
    }
}

/// `(delta, delta_N, <Sz>)` of the reduced state of spin 2.
fn measures(rho2: DMatrix<C64>, s2: SpinMagnitude) -> Result<(f64, f64, f64)> {
    let d2 = rho2.nrows();
    let sz2: f64 = (0..d2).map(|a| rho2[(a, a)].re * s2.m_at(a)).sum();
    let eigenvalues = hermitian_eigenvalues(&rho2);
    let rho2 = DensityOperator::from_raw(rho2);
    Ok((floor(linear_entropy(&rho2)?), floor(von_neumann_from_spectrum(&eigenvalues, d2)?), sz2))
}

fn assemble(times: Vec<f64>, rows: Vec<Result<Vec<[f64; 4]>>>) -> Result<EntropySeries> {
    let mut s = EntropySeries { times, ..Default::default() };
    for chunk in rows {
        for [a, b, c, d] in chunk? {
            s.delta.push(a);
            s.delta_n.push(b);
            s.sigma1.push(c);
            s.sigma2.push(d);
        }
    }
    Ok(s)
}

fn expect_regime(cfg: &ScenarioConfig, regime: Regime) -> Result<()> {
    if cfg.regime != regime {
        return Err(Error::param("regime", format!("expected {}, got {}", regime.name(), cfg.regime.name())));
    }
    cfg.validate()
}

fn initial_product(cfg: &ScenarioConfig) -> Result<Ket> {
    let a = cfg.initial_1.pure_state(cfg.s1)?.ok_or_else(|| Error::param("initial_1", "mixed state needs the mixed runner"))?;
    let b = cfg.initial_2.pure_state(cfg.s2)?.ok_or_else(|| Error::param("initial_2", "spin 2 starts in a coherent state"))?;
    a.tensor(&b)
}

/// Quantum series plus the classical companion.
#[derive(Clone, Debug)]
pub struct SemiclassicalRun {
    pub series: EntropySeries,
    pub trajectory: Trajectory,
    pub section: Option<Section>,
    pub lyapunov: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum ScenarioOutput {
    Series(EntropySeries),
    Semiclassical(SemiclassicalRun),
}

impl ScenarioOutput {
    pub fn series(&self) -> &EntropySeries {
        match self {
            ScenarioOutput::Series(s) => s,
            ScenarioOutput::Semiclassical(r) => &r.series,
        }
    }
}

pub fn run_two_qubit_scenario(cfg: &ScenarioConfig) -> Result<EntropySeries> {
    expect_regime(cfg, Regime::TwoQubits)?;
    Simulation::new(cfg.model())?.run_two_qubits(cfg)
}

pub fn run_environment_scenario(cfg: &ScenarioConfig) -> Result<EntropySeries> {
    expect_regime(cfg, Regime::Environment)?;
    Simulation::new(cfg.model())?.run_environment(cfg)
}

pub fn run_semiclassical_scenario(cfg: &ScenarioConfig) -> Result<SemiclassicalRun> {
    expect_regime(cfg, Regime::Semiclassical)?;
    Simulation::new(cfg.model())?.run_semiclassical(cfg)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    Simulation::new(cfg.model())?.run(cfg)
}
