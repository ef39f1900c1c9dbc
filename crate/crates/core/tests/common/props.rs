//! Invariants as property checks, shared by the property tests and the
//! acceptance report.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use super::*;
use spindyn::classical::*;
use spindyn::cli::output::{read_series, write_series};
use spindyn::dynamics::*;
use spindyn::entropy::*;
use spindyn::scenarios::*;
use spindyn::spin::*;

pub type Check = fn() -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("ket and density validity", ket_and_density_validity),
    ("qubit coherent state closed form", qubit_coherent_form),
    ("partial trace of a product", partial_trace_of_product),
    ("partial trace keeps the trace", partial_trace_keeps_trace),
    ("coherent Sz expectation", coherent_sz_expectation),
    ("unitarity", unitarity),
    ("group law", group_law),
    ("energy conservation", quantum_energy_conservation),
    ("two-qubit analytic spectrum", analytic_spectrum),
    ("two-qubit spectral structure of delta", two_qubit_frequencies),
    ("entropies invariant under unitaries", unitary_invariance),
    ("Schmidt symmetry", schmidt_symmetry),
    ("two-qubit ordering delta <= delta_N", two_qubit_ordering),
    ("semiclassical ordering delta_N <= delta", semiclassical_ordering),
    ("two-qubit shared extrema", shared_extrema),
    ("classical energy drift", classical_energy_drift),
    ("time reversal", time_reversal),
    ("hamilton_rhs gradient", rhs_gradient),
    ("section re-seeding", section_reseeding),
    ("quantum-classical correspondence", quantum_classical_correspondence),
    ("series ranges", series_ranges),
    ("series determinism", series_determinism),
    ("short-time growth", short_time_growth),
    ("CSV determinism and round trip", csv_determinism),
];

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn complex() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn spin(max_twice: u32) -> impl Strategy<Value = SpinMagnitude> {
    (1..=max_twice).prop_map(SpinMagnitude::from_twice)
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn ket_and_density_validity() -> Result<(), String> {
    check(200, (spin(60), complex(), spin(8), 0.1..50.0f64, any::<u64>()), |(s, z, s2, temp, seed)| {
        let psi = coherent_state(s, z.into());
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let u = uniform_state(s);
        prop_assert!((u.norm() - 1.0).abs() < 1e-12);
        let both = psi.tensor(&coherent_state(s2, CoherentParam::Infinity)).unwrap();
        prop_assert!((both.norm() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for rho in [thermal_density(s2, temp).unwrap(), random_density(&mut rng, s2.dim()), psi.projector()] {
            let m = rho.matrix();
            prop_assert!(hermitian_deviation(m) < 1e-12);
            prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(rho.eigenvalues().iter().all(|&l| l > -1e-10));
        }
        Ok(())
    })
}

pub fn qubit_coherent_form() -> Result<(), String> {
    check(100, complex(), |z| {
        let psi = coherent_state(SpinMagnitude::HALF, z.into());
        let n = (1.0 + z.norm_sqr()).sqrt();
        let expected = DVector::from_vec(vec![C64::new(1.0 / n, 0.0), z / n]);
        prop_assert!(max_abs_diff(psi.amplitudes(), &expected) < 1e-14);
        Ok(())
    })
}

pub fn partial_trace_of_product() -> Result<(), String> {
    check(100, (2..=5usize, 2..=5usize, any::<u64>()), |(da, db, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&mut rng, da);
        let b = random_density(&mut rng, db);
        let ab = a.tensor(&b).unwrap();
        let ra = partial_trace(&ab, da, db, Subsystem::First).unwrap();
        let rb = partial_trace(&ab, da, db, Subsystem::Second).unwrap();
        prop_assert!(max_diff(ra.matrix(), a.matrix()) < 1e-14);
        prop_assert!(max_diff(rb.matrix(), b.matrix()) < 1e-14);
        Ok(())
    })
}

pub fn partial_trace_keeps_trace() -> Result<(), String> {
    check(100, (1..=6usize, 1..=6usize, any::<u64>()), |(d1, d2, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, d1 * d2);
        for keep in [Subsystem::First, Subsystem::Second] {
            let r = partial_trace(&rho, d1, d2, keep).unwrap();
            prop_assert!((r.matrix().trace().re - 1.0).abs() < 1e-12);
        }
        Ok(())
    })
}

pub fn coherent_sz_expectation() -> Result<(), String> {
    for s in [SpinMagnitude::HALF, SpinMagnitude::from_twice(30), SpinMagnitude::from_twice(400)] {
        let sz = spin_operators(s).sz;
        check(20, complex(), |z| {
            let state = QuantumState::Pure(coherent_state(s, z.into()));
            let n = z.norm_sqr();
            let expected = s.value() * (n - 1.0) / (n + 1.0);
            prop_assert!((expectation(&sz, &state).unwrap() - expected).abs() < 1e-10);
            Ok(())
        })?;
    }
    Ok(())
}

fn small_model() -> impl Strategy<Value = ModelParams> {
    (spin(4), spin(4), -3.0..3.0f64, 0.2..2.0f64, 0.2..2.0f64).prop_map(|(s1, s2, alpha, e1, e2)| ModelParams {
        s1,
        s2,
        alpha,
        eps1_b0: e1,
        eps2_b0: e2,
    })
}

pub fn unitarity() -> Result<(), String> {
    check(30, (small_model(), any::<u64>(), prop::collection::vec(-50.0..50.0f64, 20)), |(p, seed, times)| {
        let eig = spectral_decompose(&build_hamiltonian(&p).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_ket(&mut rng, eig.dim());
        for t in times {
            let out = propagate_pure(&eig, &psi, t).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12, "norm {} at t = {t}", out.norm());
        }
        Ok(())
    })
}

pub fn group_law() -> Result<(), String> {
    check(50, (small_model(), any::<u64>(), -20.0..20.0f64, -20.0..20.0f64), |(p, seed, t1, t2)| {
        let eig = spectral_decompose(&build_hamiltonian(&p).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_ket(&mut rng, eig.dim());
        let stepwise = propagate_pure(&eig, &propagate_pure(&eig, &psi, t1).unwrap(), t2).unwrap();
        let direct = propagate_pure(&eig, &psi, t1 + t2).unwrap();
        prop_assert!(max_abs_diff(stepwise.amplitudes(), direct.amplitudes()) < 1e-10);
        Ok(())
    })
}

pub fn quantum_energy_conservation() -> Result<(), String> {
    check(30, (small_model(), any::<u64>(), prop::collection::vec(0.0..100.0f64, 10)), |(p, seed, times)| {
        let h = build_hamiltonian(&p).unwrap();
        let eig = spectral_decompose(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_ket(&mut rng, eig.dim());
        let e0 = expectation(&h, &QuantumState::Pure(psi.clone())).unwrap();
        for t in times {
            let e = expectation(&h, &QuantumState::Pure(propagate_pure(&eig, &psi, t).unwrap())).unwrap();
            prop_assert!((e - e0).abs() < 1e-10, "drift {} at t = {t}", e - e0);
        }
        Ok(())
    })
}

pub fn analytic_spectrum() -> Result<(), String> {
    for alpha in [0.5, 1.0, 4.0, 10.0] {
        let eig = spectral_decompose(&build_hamiltonian(&ModelParams::two_qubits(alpha)).unwrap()).map_err(|e| e.to_string())?;
        let expected = closed_form_two_qubit_spectrum(alpha);
        let err = eig.eigenvalues().iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(err < 1e-12, || format!("alpha = {alpha}: eigenvalue error {err:e}"))?;
    }
    Ok(())
}

/// Angular frequencies of the significant peaks of `values` sampled at `dt`.
pub fn spectral_peaks(values: &[f64], dt: f64, relative_threshold: f64) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    // 4-term Blackman-Harris window, sidelobes below -92 dB
    let a = [0.35875, 0.48829, 0.14128, 0.01168];
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let x = 2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64;
            let w = a[0] - a[1] * x.cos() + a[2] * (2.0 * x).cos() - a[3] * (3.0 * x).cos();
            rustfft::num_complex::Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|z| z.norm()).collect();
    let top = mag.iter().copied().fold(0.0, f64::max);
    let resolution = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    (1..mag.len() - 1)
        .filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > relative_threshold * top)
        .map(|k| k as f64 * resolution)
        .collect()
}

/// Frequencies `|(E_j - E_k) + (E_l - E_m)|` available to a quantity
/// quadratic in the reduced state.
pub fn combination_frequencies(e: &[f64]) -> Vec<f64> {
    let diffs: Vec<f64> = e.iter().flat_map(|a| e.iter().map(move |b| a - b)).collect();
    diffs.iter().flat_map(|a| diffs.iter().map(move |b| (a + b).abs())).collect()
}

pub fn two_qubit_frequencies() -> Result<(), String> {
    const N: usize = 1 << 15;
    let alpha = 1.0;
    let allowed = combination_frequencies(&closed_form_two_qubit_spectrum(alpha));
    for name in TWO_QUBIT_CASES {
        let mut cfg = preset(name).unwrap();
        cfg.alpha = alpha;
        cfg.grid = TimeGrid::new(0.0, 0.05 * (N - 1) as f64, N).unwrap();
        let series = run_two_qubit_scenario(&cfg).map_err(|e| e.to_string())?;
        let dt = cfg.grid.step();
        let tolerance = 4.0 * 2.0 * std::f64::consts::PI / (N as f64 * dt);
        for w in spectral_peaks(&series.delta, dt, 1e-4) {
            let nearest = allowed.iter().map(|a| (a - w).abs()).fold(f64::INFINITY, f64::min);
            ensure(nearest <= tolerance, || format!("{name}: peak at {w:.5} is {nearest:.2e} from every allowed frequency"))?;
        }
    }
    Ok(())
}

pub fn unitary_invariance() -> Result<(), String> {
    check(20, (2..=6usize, any::<u64>()), |(d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, d);
        let (l0, v0) = (linear_entropy(&rho).unwrap(), von_neumann_entropy(&rho).unwrap());
        for _ in 0..20 {
            let u = random_unitary(&mut rng, d);
            let m = &u * rho.matrix() * u.adjoint();
            let rotated = DensityOperator::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap();
            prop_assert!((linear_entropy(&rotated).unwrap() - l0).abs() < 1e-10);
            prop_assert!((von_neumann_entropy(&rotated).unwrap() - v0).abs() < 1e-10);
        }
        Ok(())
    })
}

pub fn schmidt_symmetry() -> Result<(), String> {
    check(100, (2..=5usize, any::<u64>()), |(d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for dim in [2, d] {
            let psi = random_ket(&mut rng, dim * dim);
            let amps: Vec<C64> = psi.amplitudes().iter().copied().collect();
            let r1 = reduce_pure(&amps, dim, dim, Subsystem::First).unwrap();
            let r2 = reduce_pure(&amps, dim, dim, Subsystem::Second).unwrap();
            prop_assert!((von_neumann_entropy(&r1).unwrap() - von_neumann_entropy(&r2).unwrap()).abs() < 1e-10);
            prop_assert!((linear_entropy(&r1).unwrap() - linear_entropy(&r2).unwrap()).abs() < 1e-10);
        }
        Ok(())
    })
}

pub fn two_qubit_ordering() -> Result<(), String> {
    for name in TWO_QUBIT_CASES {
        let s = run_two_qubit_scenario(&preset(name).unwrap()).map_err(|e| e.to_string())?;
        let worst = s.delta.iter().zip(&s.delta_n).map(|(d, n)| d - n).fold(f64::NEG_INFINITY, f64::max);
        ensure(worst <= 1e-9, || format!("{name}: delta exceeds delta_N by {worst:e}"))?;
    }
    Ok(())
}

/// Largest `delta_N - delta` over the semiclassical presets, with its time.
pub fn semiclassical_ordering_excess() -> Result<Vec<(&'static str, f64, f64, f64)>, String> {
    let mut out = Vec::new();
    let sim = Simulation::new(preset("regular").unwrap().model()).map_err(|e| e.to_string())?;
    for rep in SemiclassicalRepresentative::ALL {
        let s = sim.run_semiclassical(&preset(rep.name()).unwrap()).map_err(|e| e.to_string())?.series;
        let (k, excess) = s
            .delta_n
            .iter()
            .zip(&s.delta)
            .map(|(n, d)| n - d)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, x)| if x > acc.1 { (k, x) } else { acc });
        let last = (0..s.len()).rev().find(|&k| s.delta_n[k] > s.delta[k] + 1e-9).map_or(0.0, |k| s.times[k]);
        out.push((rep.name(), excess, s.times[k], last));
    }
    Ok(out)
}

pub fn semiclassical_ordering() -> Result<(), String> {
    for (name, excess, t, last) in semiclassical_ordering_excess()? {
        ensure(excess <= 1e-9, || format!("{name}: delta_N exceeds delta by {excess:.3e} at t = {t}, last violation at t = {last}"))?;
    }
    Ok(())
}

pub fn shared_extrema() -> Result<(), String> {
    for name in TWO_QUBIT_CASES {
        let s = run_two_qubit_scenario(&preset(name).unwrap()).map_err(|e| e.to_string())?;
        let a = local_extrema(&s.delta);
        let b = local_extrema(&s.delta_n);
        let near = |k: usize, set: &[usize]| set.iter().any(|&j| j.abs_diff(k) <= 1);
        let lonely = a.iter().find(|&&k| !near(k, &b)).or_else(|| b.iter().find(|&&k| !near(k, &a)));
        ensure(lonely.is_none(), || format!("{name}: extremum at index {:?} is not shared", lonely))?;
    }
    Ok(())
}

fn s15() -> SpinMagnitude {
    SpinMagnitude::from_twice(30)
}

/// Interior canonical points with `A_i < fraction * 4 s`.
fn interior_point(fraction: f64) -> impl Strategy<Value = ClassicalState> {
    let r = (fraction * 60.0f64).sqrt();
    (0.0..r, 0.0..std::f64::consts::TAU, 0.0..r, 0.0..std::f64::consts::TAU)
        .prop_map(|(r1, a1, r2, a2)| ClassicalState::new(r1 * a1.cos(), r1 * a1.sin(), r2 * a2.cos(), r2 * a2.sin()))
}

pub fn classical_energy_drift() -> Result<(), String> {
    let params = ModelParams::new(s15(), s15(), SEMICLASSICAL_ALPHA);
    let grid = TimeGrid::new(0.0, 100.0, 101).unwrap();
    check(20, interior_point(0.5), |x0| {
        let traj = integrate_trajectory(&x0, &params, &grid, DEFAULT_STEP).map_err(|e| TestCaseError::fail(format!("{x0}: {e}")))?;
        prop_assert!(traj.max_relative_drift() < 1e-6, "drift {:e} from {x0}", traj.max_relative_drift());
        Ok(())
    })
}

pub fn time_reversal() -> Result<(), String> {
    let params = ModelParams::new(s15(), s15(), 1.0);
    check(200, interior_point(0.9), |x0| {
        let there = flow_for(&x0, &params, DEFAULT_STEP, DEFAULT_STEP).unwrap();
        let back = flow_for(&there, &params, -DEFAULT_STEP, DEFAULT_STEP).unwrap();
        let err = x0.to_array().iter().zip(back.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "round trip error {err:e}");
        Ok(())
    })
}

pub fn rhs_gradient() -> Result<(), String> {
    let params = ModelParams::new(s15(), s15(), 1.0);
    check(50, interior_point(0.95), |x| {
        let rhs = hamilton_rhs(&x, &params).unwrap().to_array();
        let h = 1e-5;
        let v = x.to_array();
        let partial = |i: usize| {
            let (mut a, mut b) = (v, v);
            a[i] += h;
            b[i] -= h;
            let f = |w| classical_hamiltonian(&ClassicalState::from_array(w), &params).unwrap();
            (f(a) - f(b)) / (2.0 * h)
        };
        // (dq1, dp1, dq2, dp2) = (dH/dp1, -dH/dq1, dH/dp2, -dH/dq2)
        let fd = [partial(1), -partial(0), partial(3), -partial(2)];
        let scale = rhs.iter().map(|r| r.abs()).fold(1.0, f64::max);
        for (a, b) in rhs.iter().zip(fd) {
            prop_assert!((a - b).abs() / scale < 1e-6, "analytic {a} vs finite difference {b} at {x}");
        }
        Ok(())
    })
}

pub fn section_reseeding() -> Result<(), String> {
    let params = ModelParams::new(s15(), s15(), SEMICLASSICAL_ALPHA);
    let opts = SectionOptions { n_crossings: 40, ..Default::default() };
    for rep in SemiclassicalRepresentative::ALL {
        let x0 = rep.point();
        let energy = classical_hamiltonian(&x0, &params).map_err(|e| e.to_string())?;
        let section = poincare_section(&x0, &params, &opts).map_err(|e| e.to_string())?;
        for p in &section.points {
            let roots = shell_q2_roots(p.q1, p.p1, energy, &params);
            let q2 = roots.iter().copied().min_by(|a, b| (a - p.q2).abs().total_cmp(&(b - p.q2).abs()));
            let q2 = q2.ok_or_else(|| format!("{}: no shell root at ({}, {})", rep.name(), p.q1, p.p1))?;
            let reseeded = ClassicalState::new(p.q1, p.p1, q2, 0.0);
            let e = classical_hamiltonian(&reseeded, &params).map_err(|e| e.to_string())?;
            ensure((e - energy).abs() < 1e-8 && (q2 - p.q2).abs() < 1e-6, || {
                format!("{}: re-seeded point off shell by {:e} (q2 {} vs {})", rep.name(), e - energy, q2, p.q2)
            })?;
        }
    }
    Ok(())
}

pub fn quantum_classical_correspondence() -> Result<(), String> {
    let sim = Simulation::new(ModelParams::new(s15(), s15(), SEMICLASSICAL_ALPHA)).map_err(|e| e.to_string())?;
    let mut starts: Vec<ClassicalState> = SemiclassicalRepresentative::ALL.iter().map(|r| r.point()).collect();
    starts.extend([ClassicalState::new(3.0, -2.0, -4.0, 1.0), ClassicalState::new(-6.0, 1.0, 0.5, 5.0)]);
    for x0 in starts {
        let mut cfg = ScenarioConfig::default_for(Regime::Semiclassical);
        cfg.initial_1 = InitialSpec::Canonical { q: x0.q1, p: x0.p1 };
        cfg.initial_2 = InitialSpec::Canonical { q: x0.q2, p: x0.p2 };
        cfg.grid = TimeGrid::new(0.0, 1.0, 101).unwrap();
        let run = sim.run_semiclassical(&cfg).map_err(|e| e.to_string())?;
        for (k, x) in run.trajectory.states.iter().enumerate() {
            let quantum = 2.0 * run.series.sigma1[k] - 1.0;
            let classical = (x.a1() / 2.0 - 15.0) / 15.0;
            ensure((quantum - classical).abs() < 0.05, || {
                format!("{x0}: <S1z>/s = {quantum:.4} vs classical {classical:.4} at t = {}", run.series.times[k])
            })?;
        }
    }
    Ok(())
}

pub fn series_ranges() -> Result<(), String> {
    let mut names: Vec<&str> = TWO_QUBIT_CASES.to_vec();
    names.extend(["env_ground", "env_uniform", "env_thermal", "regular", "chaotic"]);
    for name in names {
        let mut cfg = preset(name).unwrap();
        if cfg.regime != Regime::TwoQubits {
            cfg.grid = TimeGrid::new(0.0, 50.0, 500).unwrap();
        }
        let out = run_scenario(&cfg).map_err(|e| e.to_string())?;
        let s = out.series();
        s.validate().map_err(|e| format!("{name}: {e}"))?;
        let all = [&s.delta, &s.delta_n, &s.sigma1, &s.sigma2];
        ensure(all.iter().all(|v| v.iter().all(|x| (0.0..=1.0).contains(x))), || format!("{name}: value outside [0, 1]"))?;
    }
    Ok(())
}

pub fn series_determinism() -> Result<(), String> {
    for name in ["case_f", "env_thermal", "periodic"] {
        let mut cfg = preset(name).unwrap();
        cfg.grid = TimeGrid::new(0.0, 20.0, 300).unwrap();
        let a = run_scenario(&cfg).map_err(|e| e.to_string())?;
        let b = run_scenario(&cfg).map_err(|e| e.to_string())?;
        let bits = |s: &EntropySeries| -> Vec<u64> {
            [&s.times, &s.delta, &s.delta_n, &s.sigma1, &s.sigma2].iter().flat_map(|v| v.iter().map(|x| x.to_bits())).collect()
        };
        ensure(bits(a.series()) == bits(b.series()), || format!("{name}: repeated runs differ"))?;
    }
    Ok(())
}

/// Coherent labels away from `z = +-1`, whose states are `Sx` eigenstates
/// and start entangling only at fourth order.
fn generic_label() -> impl Strategy<Value = C64> {
    complex().prop_filter("Sx eigenstate", |z| (z - 1.0).norm() > 0.3 && (z + 1.0).norm() > 0.3)
}

pub fn short_time_growth() -> Result<(), String> {
    let regimes = prop_oneof![
        Just((Regime::TwoQubits, SpinMagnitude::HALF, SpinMagnitude::HALF)),
        Just((Regime::Environment, SpinMagnitude::from_twice(40), SpinMagnitude::HALF)),
        Just((Regime::Semiclassical, s15(), s15())),
    ];
    // the s = 15 spectrum is diagonalized once, at the default coupling
    let large = Simulation::new(ModelParams::new(s15(), s15(), SEMICLASSICAL_ALPHA)).map_err(|e| e.to_string())?;
    check(30, (regimes, generic_label(), generic_label(), 0.1..3.0f64), |((regime, s1, s2), z1, z2, alpha)| {
        let mut cfg = ScenarioConfig::default_for(regime);
        cfg.s1 = s1;
        cfg.s2 = s2;
        let alpha = if regime == Regime::Semiclassical { SEMICLASSICAL_ALPHA } else { alpha };
        cfg.alpha = alpha;
        cfg.initial_1 = InitialSpec::Coherent(z1.into());
        cfg.initial_2 = InitialSpec::Coherent(z2.into());
        let h = 1e-3 / (alpha * (s1.value() * s2.value()).sqrt());
        cfg.grid = TimeGrid::new(0.0, 10.0 * h, 11).unwrap();
        let out = if regime == Regime::Semiclassical { large.run(&cfg) } else { run_scenario(&cfg) };
        let s = out.unwrap().series().clone();
        let x: Vec<f64> = s.times[1..].iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = s.delta[1..].iter().map(|d| d.ln()).collect();
        let k = slope(&x, &y);
        prop_assert!((1.8..=2.2).contains(&k), "exponent {k} for {regime:?}, z1 = {z1}, z2 = {z2}, alpha = {alpha}");
        Ok(())
    })
}

pub fn csv_determinism() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = preset("case_g").unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let s = run_two_qubit_scenario(&cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("run{i}.csv"));
        write_series(&s, &path).map_err(|e| e.to_string())?;
        let back = read_series(&path).map_err(|e| e.to_string())?;
        ensure(back == s, || "CSV round trip changed values".to_string())?;
        ensure(s.delta[0] == 0.0 && s.delta_n[0] == 0.0, || "t = 0 row is not exactly separable".to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "repeated runs wrote different bytes".to_string())
}
