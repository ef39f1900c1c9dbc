//! Mixed-state propagation restricted to what the measures need: the
//! reduced density matrix of one factor and a few diagonal observables.
//!
//! Two routes are provided besides the full conjugation in the parent module:
//!
//! * [`Ensemble`] evolves each pure member and mixes the reduced matrices,
//!   `O(members * n^2)` per time point.
//! * [`ReducedMixedEvolution`] works in the eigenbasis. With
//!   `X = V^dagger rho0 V` and `p_j = e^{-iE_j t}`, every entry of the reduced
//!   matrix is a fixed quadratic form `sum_jl p_j K_jl conj(p_l)`, so a time
//!   point costs `O(d_kept^2 n^2)` whatever the rank of `rho0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{cmul, split, EigenSystem};
use crate::error::{Error, Result};
use crate::spin::{check_product_dim, reduce_pure_unchecked, thermal_populations, DensityOperator, Ket, SpinMagnitude, Subsystem};

/// Convex combination of pure states.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(f64, Ket)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, Ket)>) -> Result<Self> {
        let Some(dim) = members.first().map(|(_, k)| k.dim()) else {
            return Err(Error::InvalidState("empty ensemble".into()));
        };
        if let Some((_, k)) = members.iter().find(|(_, k)| k.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: k.dim() });
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if members.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState("ensemble weights must be non-negative and sum to 1".into()));
        }
        Ok(Ensemble { members })
    }

    /// `sum_m w_m |m><m| (x) |other><other|` with thermal weights on the first spin.
    pub fn thermal_product(s1: SpinMagnitude, temperature: f64, other: &Ket) -> Result<Self> {
        let pops = thermal_populations(s1, temperature)?;
        let members = pops
            .into_iter()
            .enumerate()
            .map(|(i, w)| Ok((w, Ket::basis(s1.dim(), i)?.tensor(other)?)))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(members)
    }

    pub fn members(&self) -> &[(f64, Ket)] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    pub fn density(&self) -> DensityOperator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (w, k) in &self.members {
            m += (k.amplitudes() * k.amplitudes().adjoint()).scale(*w);
        }
        DensityOperator::from_raw(m)
    }

    /// Reduced density matrix of the evolved ensemble at each time.
    pub fn reduced_series(&self, eig: &EigenSystem, times: &[f64], d1: usize, d2: usize, keep: Subsystem) -> Result<Vec<DensityOperator>> {
        let n = check_product_dim(d1, d2)?;
        eig.check_dim(n)?;
        eig.check_dim(self.dim())?;
        let dk = if keep == Subsystem::First { d1 } else { d2 };
        let mut acc = vec![DMatrix::<C64>::zeros(dk, dk); times.len()];
        for (w, k) in &self.members {
            let states = eig.evolve(k)?.states_at(times);
            for (col, out) in acc.iter_mut().enumerate() {
                let r = reduce_pure_unchecked(states.column(col).as_slice(), d1, d2, keep);
                *out += r.scale(*w);
            }
        }
        Ok(acc.into_iter().map(DensityOperator::from_raw).collect())
    }
}

/// One time point of a [`ReducedMixedEvolution`].
#[derive(Clone, Debug)]
pub struct ReducedSample {
    pub reduced: DensityOperator,
    /// Values of the requested diagonal observables, in request order.
    pub expectations: Vec<f64>,
}

struct Kernel {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Kernel {
    fn new(k: DMatrix<C64>) -> Self {
        let (re, im) = split(&k);
        Kernel { re, im }
    }

    /// `sum_jl p_j K_jl conj(p_l)` for every column of `p`.
    fn evaluate(&self, pr: &DMatrix<f64>, pi: &DMatrix<f64>) -> Vec<C64> {
        let yr = &self.re * pr + &self.im * pi;
        let yi = &self.im * pr - &self.re * pi;
        (0..pr.ncols())
            .map(|c| {
                let (a, b, x, y) = (pr.column(c), pi.column(c), yr.column(c), yi.column(c));
                C64::new(a.dot(&x) - b.dot(&y), a.dot(&y) + b.dot(&x))
            })
            .collect()
    }
}

/// Eigenbasis quadratic forms for the reduced matrix of an evolving mixed state.
pub struct ReducedMixedEvolution {
    eigenvalues: DVector<f64>,
    kept_dim: usize,
    /// Lower triangle `(a >= b)` of the reduced matrix, row-major.
    entries: Vec<(usize, usize, Kernel)>,
    observables: Vec<Kernel>,
}

const CHUNK: usize = 128;

impl ReducedMixedEvolution {
    /// `diagonal_observables` are operators diagonal in the product basis,
    /// given by their diagonals (e.g. `S1z (x) I`).
    pub fn new(
        eig: &EigenSystem,
        rho0: &DensityOperator,
        d1: usize,
        d2: usize,
        keep: Subsystem,
        diagonal_observables: &[DVector<f64>],
    ) -> Result<Self> {
        let n = check_product_dim(d1, d2)?;
        eig.check_dim(n)?;
        eig.check_dim(rho0.dim())?;
        if let Some(o) = diagonal_observables.iter().find(|o| o.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: o.len() });
        }
        let v = eig.eigenvectors();
        let x = cmul(&v.adjoint(), &cmul(rho0.matrix(), v));
        let (kept, traced) = match keep {
            Subsystem::First => (d1, d2),
            Subsystem::Second => (d2, d1),
        };
        let row = |a: usize, k: usize| match keep {
            Subsystem::First => a * d2 + k,
            Subsystem::Second => k * d2 + a,
        };
        // rows of V belonging to kept index `a`, as a traced x n block
        let block = |a: usize| DMatrix::from_fn(traced, n, |k, j| v[(row(a, k), j)]);
        let blocks: Vec<DMatrix<C64>> = (0..kept).map(block).collect();
        let mut entries = Vec::with_capacity(kept * (kept + 1) / 2);
        for a in 0..kept {
            for b in 0..=a {
                let w = cmul(&blocks[a].transpose(), &blocks[b].map(|c| c.conj()));
                entries.push((a, b, Kernel::new(x.component_mul(&w))));
            }
        }
        let observables = diagonal_observables
            .iter()
            .map(|o| {
                let scaled = DMatrix::from_fn(n, n, |r, c| v[(r, c)] * o[r]);
                let b = cmul(&v.adjoint(), &scaled);
                Kernel::new(x.component_mul(&b.transpose()))
            })
            .collect();
        Ok(ReducedMixedEvolution { eigenvalues: eig.eigenvalues().clone(), kept_dim: kept, entries, observables })
    }

    pub fn evaluate(&self, times: &[f64]) -> Vec<ReducedSample> {
        let chunks: Vec<Vec<ReducedSample>> = times.par_chunks(CHUNK).map(|ts| self.evaluate_chunk(ts)).collect();
        chunks.into_iter().flatten().collect()
    }

    fn evaluate_chunk(&self, times: &[f64]) -> Vec<ReducedSample> {
        let n = self.eigenvalues.len();
        let mut pr = DMatrix::<f64>::zeros(n, times.len());
        let mut pi = DMatrix::<f64>::zeros(n, times.len());
        for (c, &t) in times.iter().enumerate() {
            for j in 0..n {
                let (s, co) = (-self.eigenvalues[j] * t).sin_cos();
                pr[(j, c)] = co;
                pi[(j, c)] = s;
            }
        }
        let d = self.kept_dim;
        let mut mats = vec![DMatrix::<C64>::zeros(d, d); times.len()];
        for (a, b, k) in &self.entries {
            for (m, val) in mats.iter_mut().zip(k.evaluate(&pr, &pi)) {
                if a == b {
                    m[(*a, *a)] = C64::new(val.re, 0.0);
                } else {
                    m[(*a, *b)] = val;
                    m[(*b, *a)] = val.conj();
                }
            }
        }
        let obs: Vec<Vec<C64>> = self.observables.iter().map(|k| k.evaluate(&pr, &pi)).collect();
        mats.into_iter()
            .enumerate()
            .map(|(c, m)| ReducedSample { reduced: DensityOperator::from_raw(m), expectations: obs.iter().map(|o| o[c].re).collect() })
            .collect()
    }
}
