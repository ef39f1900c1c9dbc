//! Entanglement measures on reduced density matrices, the two-qubit
//! concurrence, and recoherence detection on entropy time series.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spin::{hermitian_eigenvalues, DensityOperator, PSD_TOL};

/// Slack allowed outside `[0, 1]` before a measure reports an error.
pub const RANGE_TOL: f64 = 1e-9;

/// Eigenvalues of `rho` below this fraction of the largest one are dropped
/// when building the concurrence's square-root factor.
const RANK_CUTOFF: f64 = 1e-14;

fn require_dim(rho: &DensityOperator) -> Result<usize> {
    let d = rho.dim();
    if d < 2 {
        return Err(Error::param("dimension", "entropies need a reduced space of dimension >= 2"));
    }
    Ok(d)
}

fn clamp_unit(what: &'static str, value: f64) -> Result<f64> {
    if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&value) {
        return Err(Error::OutOfRange { what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `delta = d/(d-1) (1 - Tr rho^2)`.
pub fn linear_entropy(rho: &DensityOperator) -> Result<f64> {
    let d = require_dim(rho)? as f64;
    clamp_unit("linear entropy", d / (d - 1.0) * (1.0 - rho.purity()))
}

/// `delta_N = -sum_i l_i log_d l_i` over the eigenvalues of `rho`.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let d = require_dim(rho)?;
    von_neumann_from_spectrum(&hermitian_eigenvalues(rho.matrix()), d)
}

pub(crate) fn von_neumann_from_spectrum(eigenvalues: &[f64], d: usize) -> Result<f64> {
    let mut acc = 0.0;
    for &l in eigenvalues {
        if l < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:.3e} in reduced density matrix")));
        }
        if l > 0.0 {
            acc -= l * l.ln();
        }
    }
    clamp_unit("von Neumann entropy", acc / (d as f64).ln())
}

/// Binary entropy in bits.
fn binary_entropy(x: f64) -> f64 {
    [x, 1.0 - x].iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Concurrence and entanglement of formation of a two-qubit state.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Concurrence {
    pub concurrence: f64,
    pub formation: f64,
}

/// Wootters' concurrence `max(0, l1 - l2 - l3 - l4)`.
///
/// The `l_i` are the singular values of `W^T (sy (x) sy) W` for any
/// factorisation `rho = W W^dagger`; they coincide with the square roots of
/// the eigenvalues of `rho (sy (x) sy) rho* (sy (x) sy)`, but avoid taking
/// square roots of rounding noise.
pub fn concurrence(rho: &DensityOperator) -> Result<Concurrence> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let eig = rho.matrix().clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..4).filter(|&i| eig.eigenvalues[i] > RANK_CUTOFF * top).collect();
    let w = DMatrix::from_fn(4, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])] * eig.eigenvalues[cols[c]].sqrt());
    // sy (x) sy is the anti-diagonal (-1, 1, 1, -1)
    let flip = DMatrix::from_fn(4, 4, |r, c| match (r, c) {
        (0, 3) | (3, 0) => C64::new(-1.0, 0.0),
        (1, 2) | (2, 1) => C64::new(1.0, 0.0),
        _ => C64::new(0.0, 0.0),
    });
    let tau = w.transpose() * flip * &w;
    let mut sv: Vec<f64> = tau.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.resize(4, 0.0);
    let c = (sv[0] - sv[1] - sv[2] - sv[3]).clamp(0.0, 1.0);
    Ok(Concurrence { concurrence: c, formation: entanglement_of_formation(c) })
}

/// `E_F(C) = h((1 + sqrt(1 - C^2)) / 2)`.
pub fn entanglement_of_formation(c: f64) -> f64 {
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Entropies and normalised angular momenta on a time grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    /// Linear entropy of the reduced state of spin 2.
    pub delta: Vec<f64>,
    /// von Neumann entropy of the reduced state of spin 2.
    pub delta_n: Vec<f64>,
    /// `(<S1z> + s1) / (2 s1)`.
    pub sigma1: Vec<f64>,
    /// `(<S2z> + s2) / (2 s2)`.
    pub sigma2: Vec<f64>,
}

impl EntropySeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks equal lengths and the `[0, 1]` ranges (with [`RANGE_TOL`]).
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        for (what, v) in [("delta", &self.delta), ("delta_N", &self.delta_n), ("sigma1", &self.sigma1), ("sigma2", &self.sigma2)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() });
            }
            if let Some(&x) = v.iter().find(|&&x| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&x)) {
                return Err(Error::InvalidState(format!("{what} value {x} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::max)
    }
}

/// A transient entropy drop below the saturation plateau.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RecoherenceEvent {
    pub t_min: f64,
    pub index: usize,
    /// Plateau level minus the minimum.
    pub depth: f64,
    /// Duration spent below `plateau - depth / 2`.
    pub width: f64,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RecoherenceOptions {
    pub plateau_quantile: f64,
    /// Minimum depth as a fraction of the plateau level.
    pub min_depth: f64,
}

impl Default for RecoherenceOptions {
    fn default() -> Self {
        RecoherenceOptions { plateau_quantile: 0.9, min_depth: 0.2 }
    }
}

/// Linear-interpolation sample quantile.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Finds recoherences in the linear entropy of `series`.
///
/// The series is split into maximal runs below the plateau level. A run is
/// an event when its minimum is an interior local minimum (the run starting
/// at the first sample is the initial growth, not a recoherence) and lies at
/// least `min_depth * plateau` below the plateau.
pub fn detect_recoherences(series: &EntropySeries, opts: RecoherenceOptions) -> Result<Vec<RecoherenceEvent>> {
    detect_dips(&series.times, &series.delta, opts)
}

pub fn detect_dips(times: &[f64], values: &[f64], opts: RecoherenceOptions) -> Result<Vec<RecoherenceEvent>> {
    if values.len() != times.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    if values.len() < 10 {
        return Err(Error::param("series", format!("need at least 10 samples, got {}", values.len())));
    }
    if !(0.0..=1.0).contains(&opts.plateau_quantile) {
        return Err(Error::param("plateau_quantile", "must lie in [0, 1]"));
    }
    if !(opts.min_depth > 0.0) {
        return Err(Error::param("min_depth", "must be positive"));
    }
    let plateau = quantile(values, opts.plateau_quantile);
    if !(plateau > 0.0) {
        return Ok(Vec::new());
    }
    let n = values.len();
    let mut events = Vec::new();
    let mut i = 0;
    while i < n {
        if values[i] >= plateau {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && values[i] < plateau {
            i += 1;
        }
        let end = i; // exclusive
        if start == 0 {
            continue;
        }
        let (k, &vmin) = values[start..end].iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty run");
        let k = start + k;
        let depth = plateau - vmin;
        if k + 1 >= n || depth < opts.min_depth * plateau {
            continue;
        }
        let level = plateau - 0.5 * depth;
        let mut l = k;
        while l > start && values[l - 1] < level {
            l -= 1;
        }
        let mut r = k;
        while r + 1 < end && values[r + 1] < level {
            r += 1;
        }
        let cross = |a: usize, b: usize| {
            let f = (level - values[a]) / (values[b] - values[a]);
            times[a] + f * (times[b] - times[a])
        };
        // neighbours outside the run are >= plateau > level
        let t_left = cross(l - 1, l);
        let t_right = if r + 1 < n { cross(r, r + 1) } else { times[r] };
        events.push(RecoherenceEvent { t_min: times[k], index: k, depth, width: t_right - t_left });
    }
    Ok(events)
}

/// Indices of strict interior local extrema (maxima and minima).
pub fn local_extrema(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| {
            let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
            (b > a && b >= c) || (b < a && b <= c)
        })
        .collect()
}
