//! Hamiltonian construction, spectral decomposition and exact propagation.
//!
//! Everything is driven by one diagonalisation: with `H = V diag(E) V^dagger`
//! the propagator is `U(t) = V e^{-iEt} V^dagger` (hbar = 1), so each time point
//! costs a matrix-vector product rather than a matrix exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spin::{check_product_dim, spin_operators, DensityOperator, Ket, SpinMagnitude};

pub mod mixed;

/// Hermiticity tolerance (relative to `max |H_ij|`) accepted by
/// [`spectral_decompose`].
pub const SPECTRAL_HERMITIAN_TOL: f64 = 1e-10;

/// Parameters of `H = e1 B0 S1z + e2 B0 S2z + alpha S1x S2x`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub s1: SpinMagnitude,
    pub s2: SpinMagnitude,
    pub alpha: f64,
    pub eps1_b0: f64,
    pub eps2_b0: f64,
}

impl ModelParams {
    /// Unit Zeeman couplings, `e1 B0 = e2 B0 = 1`.
    pub fn new(s1: SpinMagnitude, s2: SpinMagnitude, alpha: f64) -> Self {
        ModelParams { s1, s2, alpha, eps1_b0: 1.0, eps2_b0: 1.0 }
    }

    pub fn two_qubits(alpha: f64) -> Self {
        Self::new(SpinMagnitude::HALF, SpinMagnitude::HALF, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("eps1_b0", self.eps1_b0), ("eps2_b0", self.eps2_b0)] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        check_product_dim(self.s1.dim(), self.s2.dim())?;
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.s1.dim(), self.s2.dim())
    }
}

pub fn build_hamiltonian(p: &ModelParams) -> Result<DMatrix<C64>> {
    p.validate()?;
    let (d1, d2) = p.dims();
    let o1 = spin_operators(p.s1);
    let o2 = spin_operators(p.s2);
    let i1 = DMatrix::<C64>::identity(d1, d1);
    let i2 = DMatrix::<C64>::identity(d2, d2);
    let h = o1.sz.kronecker(&i2).scale(p.eps1_b0) + i1.kronecker(&o2.sz).scale(p.eps2_b0) + o1.sx.kronecker(&o2.sx).scale(p.alpha);
    Ok(h)
}

/// Uniform time grid `t_start + k (t_end - t_start) / (n_points - 1)`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        let g = TimeGrid { t_start, t_end, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::param("t_end", "grid bounds must be finite"));
        }
        if self.t_end <= self.t_start {
            return Err(Error::param("t_end", format!("must exceed t_start = {}", self.t_start)));
        }
        if self.n_points < 2 {
            return Err(Error::param("n_points", format!("need at least 2 points, got {}", self.n_points)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n_points).map(|k| if k + 1 == self.n_points { self.t_end } else { self.t_start + k as f64 * h }).collect()
    }
}

/// Ascending eigenvalues and orthonormal eigenvectors (as columns).
#[derive(Clone, Debug)]
pub struct EigenSystem {
    eigenvalues: DVector<f64>,
    vectors: DMatrix<C64>,
    /// Set when the eigenvectors are real, which is the case for every
    /// Hamiltonian built by [`build_hamiltonian`].
    real_vectors: Option<DMatrix<f64>>,
}

pub fn spectral_decompose(h: &DMatrix<C64>) -> Result<EigenSystem> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    let n = h.nrows();
    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let dev = crate::spin::hermitian_deviation(h);
    if dev > SPECTRAL_HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let max_iter = 1000 * n.max(10);
    if h.iter().all(|c| c.im == 0.0) {
        let hr = h.map(|c| c.re);
        let eig = nalgebra::SymmetricEigen::try_new(hr, f64::EPSILON, max_iter)
            .ok_or_else(|| Error::EigenFailure(format!("real symmetric solver did not converge (n = {n})")))?;
        let order = ascending_order(eig.eigenvalues.as_slice())?;
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let real = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let vectors = real.map(|x| C64::new(x, 0.0));
        Ok(EigenSystem { eigenvalues: values, vectors, real_vectors: Some(real) })
    } else {
        let eig = nalgebra::SymmetricEigen::try_new(h.clone(), f64::EPSILON, max_iter)
            .ok_or_else(|| Error::EigenFailure(format!("Hermitian solver did not converge (n = {n})")))?;
        let order = ascending_order(eig.eigenvalues.as_slice())?;
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(EigenSystem { eigenvalues: values, vectors, real_vectors: None })
    }
}

fn ascending_order(values: &[f64]) -> Result<Vec<usize>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(order)
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn real_eigenvectors(&self) -> Option<&DMatrix<f64>> {
        self.real_vectors.as_ref()
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.vectors[(r, c)] * self.eigenvalues[c]);
        cmul(&scaled, &self.vectors.adjoint())
    }

    /// `e^{-iE_j t}` for every eigenvalue.
    pub fn phases(&self, t: f64) -> DVector<C64> {
        self.eigenvalues.map(|e| C64::from_polar(1.0, -e * t))
    }

    /// Expansion coefficients `V^dagger psi`.
    pub fn coefficients(&self, amps: &DVector<C64>) -> Result<DVector<C64>> {
        self.check_dim(amps.len())?;
        Ok(self.vectors.ad_mul(amps))
    }

    /// `U(t) = V e^{-iEt} V^dagger`.
    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let ph = self.phases(t);
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.vectors[(r, c)] * ph[c]);
        cmul(&scaled, &self.vectors.adjoint())
    }

    /// Prepares repeated propagation of `psi0`.
    pub fn evolve<'a>(&'a self, psi0: &Ket) -> Result<PureEvolution<'a>> {
        Ok(PureEvolution { eig: self, initial: psi0.amplitudes().clone(), coeffs: self.coefficients(psi0.amplitudes())? })
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }
}

/// A pure state expanded in the eigenbasis, ready to be evaluated at any
/// time. Borrowing the [`EigenSystem`] immutably lets many evolutions share
/// one decomposition across threads.
#[derive(Clone, Debug)]
pub struct PureEvolution<'a> {
    eig: &'a EigenSystem,
    initial: DVector<C64>,
    coeffs: DVector<C64>,
}

impl PureEvolution<'_> {
    pub fn coefficients(&self) -> &DVector<C64> {
        &self.coeffs
    }

    /// State at time `t`; `t = 0` returns the initial state exactly.
    pub fn state_at(&self, t: f64) -> Ket {
        if t == 0.0 {
            return Ket::from_raw(self.initial.clone());
        }
        let ph = self.eig.phases(t);
        let c = self.coeffs.component_mul(&ph);
        Ket::from_raw(&self.eig.vectors * c)
    }

    /// Amplitudes at every time in `times`, one column per time.
    pub fn states_at(&self, times: &[f64]) -> DMatrix<C64> {
        let n = self.eig.dim();
        let mut yr = DMatrix::<f64>::zeros(n, times.len());
        let mut yi = DMatrix::<f64>::zeros(n, times.len());
        for (col, &t) in times.iter().enumerate() {
            for j in 0..n {
                let v = self.coeffs[j] * C64::from_polar(1.0, -self.eig.eigenvalues[j] * t);
                yr[(j, col)] = v.re;
                yi[(j, col)] = v.im;
            }
        }
        let (re, im) = match &self.eig.real_vectors {
            Some(v) => (v * yr, v * yi),
            None => {
                let (vr, vi) = split(&self.eig.vectors);
                (&vr * &yr - &vi * &yi, &vr * &yi + &vi * &yr)
            }
        };
        let mut out = DMatrix::from_fn(n, times.len(), |r, c| C64::new(re[(r, c)], im[(r, c)]));
        for (c, _) in times.iter().enumerate().filter(|(_, &t)| t == 0.0) {
            out.set_column(c, &self.initial);
        }
        out
    }
}

/// `psi(t) = V e^{-iEt} V^dagger psi0`.
pub fn propagate_pure(eig: &EigenSystem, psi0: &Ket, t: f64) -> Result<Ket> {
    Ok(eig.evolve(psi0)?.state_at(t))
}

/// `rho(t) = U rho0 U^dagger` by full conjugation; `O(n^3)` per call.
pub fn propagate_mixed(eig: &EigenSystem, rho0: &DensityOperator, t: f64) -> Result<DensityOperator> {
    eig.check_dim(rho0.dim())?;
    let u = eig.propagator(t);
    let m = cmul(&cmul(&u, rho0.matrix()), &u.adjoint());
    Ok(DensityOperator::from_raw(m))
}

/// Real and imaginary parts of a complex matrix.
pub(crate) fn split(m: &DMatrix<C64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|c| c.re), m.map(|c| c.im))
}

/// Complex product through four real GEMMs, which reach the BLAS-like kernels
/// nalgebra only provides for real scalars.
pub(crate) fn cmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    DMatrix::from_fn(a.nrows(), b.ncols(), |r, c| C64::new(re[(r, c)], im[(r, c)]))
}

/// Closed-form two-qubit spectrum (unit Zeeman couplings).
#[derive(Clone, Debug)]
pub struct TwoQubitEigen {
    /// `(alpha/4, -alpha/4, beta, -beta)` with `beta = sqrt(alpha^2 + 16)/4`.
    pub eigenvalues: [f64; 4],
    /// Normalised eigenvectors in the ordering `{|11>, |10>, |01>, |00>}`.
    pub st_vectors: [[f64; 4]; 4],
}

impl TwoQubitEigen {
    /// Eigenvector `i` in the product basis used everywhere else
    /// (`|00>, |01>, |10>, |11>`), i.e. the reversed ordering.
    pub fn product_basis_vector(&self, i: usize) -> DVector<C64> {
        let v = &self.st_vectors[i];
        DVector::from_iterator(4, v.iter().rev().map(|&x| C64::new(x, 0.0)))
    }
}

/// Analytic eigensystem of the two-qubit Hamiltonian.
///
/// The `|11>, |00>` block vectors `(4(1 +/- beta)/alpha, 0, 0, 1)` are written
/// as `(1, alpha/(4(1+beta)))` and `(-alpha/(4(1+beta)), 1)` before
/// normalisation, which are the same rays but stay finite at `alpha = 0`.
pub fn two_qubit_analytic(alpha: f64) -> TwoQubitEigen {
    let beta = (alpha * alpha + 16.0).sqrt() / 4.0;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = alpha / (4.0 * (1.0 + beta));
    let n = (1.0 + r * r).sqrt();
    TwoQubitEigen {
        eigenvalues: [alpha / 4.0, -alpha / 4.0, beta, -beta],
        st_vectors: [
            [0.0, h, h, 0.0],
            [0.0, -h, h, 0.0],
            [1.0 / n, 0.0, 0.0, r / n],
            [-r / n, 0.0, 0.0, 1.0 / n],
        ],
    }
}
