//! CSV, manifest and gnuplot writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::CliError;
use crate::classical::{ClassicalState, Section, Trajectory};
use crate::entropy::EntropySeries;

/// 17 significant digits, enough to recover every `f64` exactly.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn series_csv(series: &EntropySeries) -> String {
    let mut out = String::from("t,delta,delta_N,sigma1,sigma2\n");
    for k in 0..series.len() {
        let row = [series.times[k], series.delta[k], series.delta_n[k], series.sigma1[k], series.sigma2[k]];
        let _ = writeln!(out, "{}", row.map(num).join(","));
    }
    out
}

/// Writes `t,delta,delta_N,sigma1,sigma2`, one row per grid point.
pub fn write_series(series: &EntropySeries, path: &Path) -> Result<(), CliError> {
    series.validate()?;
    write_text(path, &series_csv(series))
}

/// Parses a file produced by [`write_series`].
pub fn read_series(path: &Path) -> Result<EntropySeries, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let bad = |line: usize| CliError::config(path.display().to_string(), format!("line {line}: malformed series row"));
    let mut lines = text.lines();
    if lines.next() != Some("t,delta,delta_N,sigma1,sigma2") {
        return Err(bad(1));
    }
    let mut s = EntropySeries::default();
    for (k, line) in lines.enumerate() {
        let v: Vec<f64> = line.split(',').map(str::parse).collect::<Result<_, _>>().map_err(|_| bad(k + 2))?;
        let [t, d, dn, s1, s2] = v[..] else { return Err(bad(k + 2)) };
        s.times.push(t);
        s.delta.push(d);
        s.delta_n.push(dn);
        s.sigma1.push(s1);
        s.sigma2.push(s2);
    }
    Ok(s)
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let mut out = String::from("t,q1,p1,q2,p2,energy\n");
    for ((t, x), e) in traj.times.iter().zip(&traj.states).zip(&traj.energies) {
        let _ = writeln!(out, "{}", [*t, x.q1, x.p1, x.q2, x.p2, *e].map(num).join(","));
    }
    write_text(path, &out)
}

/// Writes `q1,p1,t_cross` for one initial condition.
pub fn write_section(section: &Section, path: &Path) -> Result<(), CliError> {
    let mut out = String::from("q1,p1,t_cross\n");
    for p in &section.points {
        let _ = writeln!(out, "{}", [p.q1, p.p1, p.crossing_time].map(num).join(","));
    }
    write_text(path, &out)
}

pub fn write_lyapunov(rows: &[(ClassicalState, f64)], path: &Path) -> Result<(), CliError> {
    let mut out = String::from("q1,p1,q2,p2,lyapunov\n");
    for (x, l) in rows {
        let _ = writeln!(out, "{}", [x.q1, x.p1, x.q2, x.p2, *l].map(num).join(","));
    }
    write_text(path, &out)
}

/// Output directory that remembers what was written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for `name`, recorded as an output.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.root.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.file(name);
        write_text(&path, text)
    }

    /// Config snapshot plus a `[run]` section listing every output,
    /// including the manifest itself.
    pub fn write_manifest(&mut self, snapshot: &str, seconds: f64) -> Result<(), CliError> {
        let path = self.file("manifest.ini");
        let text = format!(
            "{snapshot}\n[{}]\nversion = {}\nduration_s = {seconds:.3}\noutputs = {}\n",
            "run",
            env!("CARGO_PKG_VERSION"),
            self.files.join(", ")
        );
        write_text(&path, &text)
    }
}

pub fn entropy_plot(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 't'\n\
         set title '{title}'\n\
         set multiplot layout 2,1\n\
         set ylabel 'entropy'\n\
         plot '{csv}' using 1:2 with lines, '' using 1:3 with lines dashtype 2\n\
         set ylabel 'sigma'\n\
         plot '{csv}' using 1:4 with lines, '' using 1:5 with lines\n\
         unset multiplot\n"
    )
}

pub fn section_plot(csvs: &[String], title: &str) -> String {
    let items: Vec<String> = csvs.iter().map(|c| format!("'{c}' using 1:2 with dots title '{c}'")).collect();
    format!(
        "set datafile separator ','\n\
         set xlabel 'q1'\n\
         set ylabel 'p1'\n\
         set size square\n\
         set title '{title}'\n\
         plot {}\n",
        items.join(", ")
    )
}

pub fn trajectory_plot(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 't'\n\
         plot '{csv}' using 1:2 with lines, '' using 1:4 with lines\n"
    )
}
