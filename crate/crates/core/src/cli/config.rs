//! Run configuration as ordered `key = value` pairs.
//!
//! A run starts from a preset (or the regime default), then applies the keys
//! of the config file, then the command-line overrides. The manifest written
//! next to the outputs lists every resolved key, so feeding it back through
//! [`resolve`] rebuilds the same configuration.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use super::CliError;
use crate::classical::{ClassicalState, CrossingDirection, LyapunovOptions, SectionOptions};
use crate::scenarios::{preset, InitialSpec, Regime, ScenarioConfig};
use crate::spin::{CoherentParam, SpinMagnitude};

/// Regime sections recognised in config files. Keys before the first
/// section apply to every regime.
const REGIME_SECTIONS: [&str; 3] = ["two_qubits", "environment", "semiclassical"];
/// Written by manifests and ignored when reading.
const RUN_SECTION: &str = "run";

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    /// Initial conditions for section and Lyapunov scans.
    pub points: Vec<ClassicalState>,
    /// Also write gnuplot scripts.
    pub plots: bool,
}

impl RunConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        RunConfig { scenario, points: Vec::new(), plots: false }
    }

    /// Points to scan, falling back to the scenario's own initial condition.
    pub fn scan_points(&self) -> Result<Vec<ClassicalState>, CliError> {
        if self.points.is_empty() {
            Ok(vec![self.scenario.classical_point()?])
        } else {
            Ok(self.points.clone())
        }
    }

    pub fn enable_section(&mut self) {
        let step = self.scenario.classical.step;
        self.scenario.classical.section.get_or_insert(SectionOptions { step, ..Default::default() });
    }

    pub fn enable_lyapunov(&mut self) {
        let step = self.scenario.classical.step;
        self.scenario.classical.lyapunov.get_or_insert(LyapunovOptions { step, ..Default::default() });
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Entry { key: key.into(), value: value.into() }
    }
}

/// Entries of an INI text that apply to `regime`, in file order.
pub fn parse_ini(text: &str, regime: Regime) -> Result<Vec<Entry>, CliError> {
    let mut section: Option<String> = None;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !REGIME_SECTIONS.contains(&name) && name != RUN_SECTION {
                return Err(CliError::config(format!("[{name}]"), format!("line {}: unknown section", k + 1)));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!("line {}", k + 1), format!("expected `key = value`, got `{line}`")));
        };
        let applies = match section.as_deref() {
            None => true,
            Some(s) => s == regime.name(),
        };
        if applies {
            out.push(Entry::new(key.trim(), value.trim()));
        }
    }
    Ok(out)
}

/// Builds the configuration from a preset or default plus `entries`.
pub fn resolve(regime: Regime, entries: &[Entry]) -> Result<RunConfig, CliError> {
    let base = match entries.iter().rev().find(|e| e.key == "preset") {
        Some(e) => {
            let cfg = preset(&e.value).map_err(|err| CliError::config("preset", err.to_string()))?;
            if cfg.regime != regime {
                return Err(CliError::config("preset", format!("`{}` is a {} preset", e.value, cfg.regime.name())));
            }
            cfg
        }
        None => ScenarioConfig::default_for(regime),
    };
    let mut cfg = RunConfig::new(base);
    for e in entries.iter().filter(|e| e.key != "preset") {
        apply(&mut cfg, &e.key, &e.value)?;
    }
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), CliError> {
    let sc = &mut cfg.scenario;
    match key {
        "alpha" => sc.alpha = number(key, value)?,
        "s1" => sc.s1 = spin(key, value)?,
        "s2" => sc.s2 = spin(key, value)?,
        "eps1_b0" => sc.eps1_b0 = number(key, value)?,
        "eps2_b0" => sc.eps2_b0 = number(key, value)?,
        "t_start" => sc.grid.t_start = number(key, value)?,
        "t_end" => sc.grid.t_end = number(key, value)?,
        "n_points" => sc.grid.n_points = count(key, value)?,
        "initial1" => sc.initial_1 = initial(key, value, sc.s1)?,
        "initial2" => sc.initial_2 = initial(key, value, sc.s2)?,
        "step" => {
            let h = positive(key, value)?;
            sc.classical.step = h;
            if let Some(o) = sc.classical.section.as_mut() {
                o.step = h;
            }
            if let Some(o) = sc.classical.lyapunov.as_mut() {
                o.step = h;
            }
        }
        "crossings" | "direction" | "max_time" => {
            cfg.enable_section();
            let o = cfg.scenario.classical.section.as_mut().expect("just enabled");
            match key {
                "crossings" => o.n_crossings = count(key, value)?,
                "direction" => o.direction = value.parse::<CrossingDirection>().map_err(|e| CliError::config(key, e.to_string()))?,
                _ => o.max_time = positive(key, value)?,
            }
        }
        "horizon" | "renorm" | "offset" => {
            cfg.enable_lyapunov();
            let o = cfg.scenario.classical.lyapunov.as_mut().expect("just enabled");
            match key {
                "horizon" => o.horizon = positive(key, value)?,
                "renorm" => o.renorm_interval = positive(key, value)?,
                _ => o.initial_offset = positive(key, value)?,
            }
        }
        "points" => {
            cfg.points = value
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| point(key, s))
                .collect::<Result<_, _>>()?;
        }
        "plots" => {
            cfg.plots = value.trim().parse().map_err(|_| CliError::config(key, format!("expected true or false, got `{value}`")))?;
        }
        _ => return Err(CliError::config(key, "unknown key")),
    }
    Ok(())
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = value.trim().parse().map_err(|_| CliError::config(key, format!("expected a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(CliError::config(key, format!("must be finite, got `{value}`")));
    }
    Ok(v)
}

fn positive(key: &str, value: &str) -> Result<f64, CliError> {
    let v = number(key, value)?;
    if v <= 0.0 {
        return Err(CliError::config(key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn count(key: &str, value: &str) -> Result<usize, CliError> {
    let n: usize = value.trim().parse().map_err(|_| CliError::config(key, format!("expected a positive integer, got `{value}`")))?;
    if n == 0 {
        return Err(CliError::config(key, "must be at least 1"));
    }
    Ok(n)
}

/// `15`, `7.5` or `15/2`.
pub fn spin(key: &str, value: &str) -> Result<SpinMagnitude, CliError> {
    let value = value.trim();
    if let Some((num, den)) = value.split_once('/') {
        let num: u32 = num.trim().parse().map_err(|_| CliError::config(key, format!("bad spin `{value}`")))?;
        return match den.trim() {
            "2" => Ok(SpinMagnitude::from_twice(num)),
            "1" => Ok(SpinMagnitude::from_twice(2 * num)),
            _ => Err(CliError::config(key, format!("`{value}` is not a multiple of 1/2"))),
        };
    }
    SpinMagnitude::from_f64(number(key, value)?).map_err(|e| CliError::config(key, e.to_string()))
}

/// Complex numbers such as `1`, `-0.5i`, `1+2i`, `2.5e-1-1e-2i`, or `inf`.
pub fn parse_complex(value: &str) -> Option<CoherentParam> {
    let t: String = value.chars().filter(|c| !c.is_whitespace()).collect();
    if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity") {
        return Some(CoherentParam::Infinity);
    }
    let z = match t.strip_suffix('i') {
        Some(body) => {
            let bytes = body.as_bytes();
            let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
            let (re, im) = match split {
                Some(k) => (&body[..k], &body[k..]),
                None => ("", body),
            };
            let im = match im {
                "" | "+" => 1.0,
                "-" => -1.0,
                x => x.parse().ok()?,
            };
            let re = if re.is_empty() { 0.0 } else { re.parse().ok()? };
            C64::new(re, im)
        }
        None => C64::new(t.parse().ok()?, 0.0),
    };
    (z.re.is_finite() && z.im.is_finite()).then_some(CoherentParam::Finite(z))
}

pub fn format_complex(z: CoherentParam) -> String {
    match z {
        CoherentParam::Infinity => "inf".to_string(),
        CoherentParam::Finite(z) => format!("{}{:+}i", z.re, z.im),
    }
}

/// `coherent <z>`, `uniform`, `thermal [T]` (default `T = s/10`) or
/// `canonical <q>,<p>`.
fn initial(key: &str, value: &str, s: SpinMagnitude) -> Result<InitialSpec, CliError> {
    let value = value.trim();
    let (kind, arg) = value.split_once(char::is_whitespace).map(|(a, b)| (a, b.trim())).unwrap_or((value, ""));
    match (kind, arg) {
        ("coherent", z) => {
            let z = if z.is_empty() { "0" } else { z };
            parse_complex(z).map(InitialSpec::Coherent).ok_or_else(|| CliError::config(key, format!("bad coherent label `{z}`")))
        }
        ("uniform", "") => Ok(InitialSpec::Uniform),
        ("thermal", "") => Ok(InitialSpec::Thermal { temperature: s.value() / 10.0 }),
        ("thermal", t) => Ok(InitialSpec::Thermal { temperature: positive(key, t)? }),
        ("canonical", qp) => {
            let v = numbers(key, qp)?;
            match v[..] {
                [q, p] => Ok(InitialSpec::Canonical { q, p }),
                _ => Err(CliError::config(key, format!("expected `canonical q,p`, got `{value}`"))),
            }
        }
        _ => Err(CliError::config(key, format!("expected coherent <z>, uniform, thermal [T] or canonical q,p; got `{value}`"))),
    }
}

fn format_initial(spec: InitialSpec) -> String {
    match spec {
        InitialSpec::Coherent(z) => format!("coherent {}", format_complex(z)),
        InitialSpec::Uniform => "uniform".to_string(),
        InitialSpec::Thermal { temperature } => format!("thermal {temperature}"),
        InitialSpec::Canonical { q, p } => format!("canonical {q},{p}"),
    }
}

fn numbers(key: &str, list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',').map(|v| number(key, v)).collect()
}

/// `q1,p1,q2,p2`.
pub fn point(key: &str, value: &str) -> Result<ClassicalState, CliError> {
    match numbers(key, value)?[..] {
        [q1, p1, q2, p2] => Ok(ClassicalState::new(q1, p1, q2, p2)),
        _ => Err(CliError::config(key, format!("expected `q1,p1,q2,p2`, got `{value}`"))),
    }
}

/// Every resolved key, under the regime's section header.
pub fn format_snapshot(cfg: &RunConfig) -> String {
    let sc = &cfg.scenario;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("s1", sc.s1.to_string());
    put("s2", sc.s2.to_string());
    put("alpha", sc.alpha.to_string());
    put("eps1_b0", sc.eps1_b0.to_string());
    put("eps2_b0", sc.eps2_b0.to_string());
    put("t_start", sc.grid.t_start.to_string());
    put("t_end", sc.grid.t_end.to_string());
    put("n_points", sc.grid.n_points.to_string());
    put("initial1", format_initial(sc.initial_1));
    put("initial2", format_initial(sc.initial_2));
    put("step", sc.classical.step.to_string());
    if let Some(o) = sc.classical.section {
        put("crossings", o.n_crossings.to_string());
        put("direction", o.direction.to_string());
        put("max_time", o.max_time.to_string());
    }
    if let Some(o) = sc.classical.lyapunov {
        put("horizon", o.horizon.to_string());
        put("renorm", o.renorm_interval.to_string());
        put("offset", o.initial_offset.to_string());
    }
    if !cfg.points.is_empty() {
        let list: Vec<String> = cfg.points.iter().map(|x| format!("{},{},{},{}", x.q1, x.p1, x.q2, x.p2)).collect();
        put("points", list.join("; "));
    }
    put("plots", cfg.plots.to_string());
    format!("[{}]\n{out}", sc.regime.name())
}
