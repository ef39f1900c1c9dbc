//! Single-spin Hilbert spaces, initial states and bipartite bookkeeping.
//!
//! Basis convention: index `i` of a spin-`s` space holds the magnetic quantum
//! number `m = -s + i`, so the qubit labels are `|0> = |m = -1/2>` and
//! `|1> = |m = +1/2>`. Two-spin product states use `k = k1 * d2 + k2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension any constructor will build.
pub const MAX_DIM: usize = 1_000_000;

/// Tolerance on `||psi|| - 1` accepted by [`Ket::new`].
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity and unit-trace tolerance for [`DensityOperator::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a density operator.
pub const PSD_TOL: f64 = 1e-10;
/// Largest imaginary part an expectation value may carry before it is
/// considered an error rather than rounding.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Spin magnitude `s`, stored exactly as the integer `2s`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinMagnitude {
    twice_s: u32,
}

impl SpinMagnitude {
    pub const HALF: SpinMagnitude = SpinMagnitude { twice_s: 1 };

    pub const fn from_twice(twice_s: u32) -> Self {
        SpinMagnitude { twice_s }
    }

    /// Parses a non-negative multiple of one half.
    pub fn from_f64(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !s.is_finite() || s < 0.0 || (twice - twice.round()).abs() > 1e-9 || twice > u32::MAX as f64 {
            return Err(Error::param("s", format!("{s} is not a non-negative half-integer")));
        }
        Ok(SpinMagnitude { twice_s: twice.round() as u32 })
    }

    pub const fn twice(self) -> u32 {
        self.twice_s
    }

    pub fn value(self) -> f64 {
        self.twice_s as f64 / 2.0
    }

    pub const fn dim(self) -> usize {
        self.twice_s as usize + 1
    }

    /// Magnetic quantum number at basis index `i`.
    pub fn m_at(self, i: usize) -> f64 {
        (2.0 * i as f64 - self.twice_s as f64) / 2.0
    }

    /// `m = -s, ..., +s` in basis order.
    pub fn m_values(self) -> impl Iterator<Item = f64> {
        (0..self.dim()).map(move |i| self.m_at(i))
    }
}

impl std::fmt::Display for SpinMagnitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice_s % 2 == 0 {
            write!(f, "{}", self.twice_s / 2)
        } else {
            write!(f, "{}/2", self.twice_s)
        }
    }
}

/// Point of the extended complex plane labelling a spin coherent state.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum CoherentParam {
    Finite(C64),
    /// The limit `z -> infinity`, i.e. the state `|m = +s>`.
    Infinity,
}

impl CoherentParam {
    pub fn real(x: f64) -> Self {
        CoherentParam::Finite(C64::new(x, 0.0))
    }
}

impl From<C64> for CoherentParam {
    fn from(z: C64) -> Self {
        CoherentParam::Finite(z)
    }
}

/// Matrices of `Sx`, `Sy`, `Sz` for one spin.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub sx: DMatrix<C64>,
    pub sy: DMatrix<C64>,
    pub sz: DMatrix<C64>,
}

/// Builds the spin matrices from the ladder elements
/// `<m+1|S+|m> = sqrt(s(s+1) - m(m+1))`.
pub fn spin_operators(s: SpinMagnitude) -> SpinOperators {
    let d = s.dim();
    let two_s = s.twice() as f64;
    let mut sz = DMatrix::zeros(d, d);
    let mut sp = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        sz[(i, i)] = C64::new(s.m_at(i), 0.0);
        if i + 1 < d {
            // 4 (s(s+1) - m(m+1)) with 2m = 2i - 2s
            let two_m = 2.0 * i as f64 - two_s;
            let v = (two_s * (two_s + 2.0) - two_m * (two_m + 2.0)) / 4.0;
            sp[(i + 1, i)] = C64::new(v.max(0.0).sqrt(), 0.0);
        }
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm).scale(0.5);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    SpinOperators { sx, sy, sz }
}

/// Diagonal of `Sz` as plain reals.
pub fn sz_diagonal(s: SpinMagnitude) -> Vec<f64> {
    s.m_values().collect()
}

/// Normalised complex state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: DVector<C64>,
}

impl Ket {
    /// Wraps `amps`, which must already have unit norm.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("empty state vector".into()));
        }
        let norm = amps.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Ket { amps })
    }

    /// Normalises `amps`; fails only for the zero or non-finite vector.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState(format!("cannot normalise vector of norm {norm}")));
        }
        Ok(Ket { amps: amps.unscale(norm) })
    }

    pub(crate) fn from_raw(amps: DVector<C64>) -> Self {
        Ket { amps }
    }

    /// Basis vector `|i>` of a `dim`-dimensional space.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: i + 1 });
        }
        let mut amps = DVector::zeros(dim);
        amps[i] = ONE;
        Ok(Ket { amps })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> DensityOperator {
        DensityOperator { matrix: &self.amps * self.amps.adjoint() }
    }

    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        check_product_dim(self.dim(), other.dim())?;
        Ok(Ket { amps: self.amps.kronecker(&other.amps) })
    }
}

/// Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityOperator { matrix })
    }

    pub(crate) fn from_raw(matrix: DMatrix<C64>) -> Self {
        DensityOperator { matrix }
    }

    /// Diagonal density operator with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let sum: f64 = populations.iter().sum();
        if populations.is_empty() || populations.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState("populations must be non-negative and sum to 1".into()));
        }
        let d = DVector::from_iterator(populations.len(), populations.iter().map(|&p| C64::new(p, 0.0)));
        Ok(DensityOperator { matrix: DMatrix::from_diagonal(&d) })
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator { matrix: DMatrix::identity(dim, dim).unscale(dim as f64) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        check_product_dim(self.dim(), other.dim())?;
        Ok(DensityOperator { matrix: self.matrix.kronecker(&other.matrix) })
    }
}

/// Either a pure or a mixed state.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(Ket),
    Mixed(DensityOperator),
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(k) => k.dim(),
            QuantumState::Mixed(r) => r.dim(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            QuantumState::Pure(k) => k.projector(),
            QuantumState::Mixed(r) => r.clone(),
        }
    }
}

impl From<Ket> for QuantumState {
    fn from(k: Ket) -> Self {
        QuantumState::Pure(k)
    }
}

impl From<DensityOperator> for QuantumState {
    fn from(r: DensityOperator) -> Self {
        QuantumState::Mixed(r)
    }
}

/// Which factor of a bipartite space to keep.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Spin coherent state `|z>`; the binomial weights are combined in log space.
pub fn coherent_state(s: SpinMagnitude, z: CoherentParam) -> Ket {
    let d = s.dim();
    let z = match z {
        CoherentParam::Infinity => return Ket::basis(d, d - 1).expect("index in range"),
        CoherentParam::Finite(z) => z,
    };
    if z.norm_sqr() == 0.0 {
        return Ket::basis(d, 0).expect("index in range");
    }
    let n = s.twice() as usize;
    let ln_abs = z.norm().ln();
    let arg = z.arg();
    let ln_norm = s.value() * z.norm_sqr().ln_1p();
    let ln_binom = ln_binomial_row(n);
    let amps = DVector::from_iterator(
        d,
        (0..d).map(|k| {
            let ln_mag = 0.5 * ln_binom[k] + k as f64 * ln_abs - ln_norm;
            C64::from_polar(ln_mag.exp(), k as f64 * arg)
        }),
    );
    // rounding in the exponentials only
    Ket::normalized(amps).expect("coherent amplitudes are finite")
}

/// `ln C(n, k)` for `k = 0..=n`.
fn ln_binomial_row(n: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    row.push(0.0);
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        row.push(acc);
    }
    row
}

/// Equal superposition of all `|m>`.
pub fn uniform_state(s: SpinMagnitude) -> Ket {
    let d = s.dim();
    let a = C64::new((d as f64).sqrt().recip(), 0.0);
    Ket::from_raw(DVector::from_element(d, a))
}

/// Populations `e^{-m/T} / N` of the thermal mixture, in basis order.
pub fn thermal_populations(s: SpinMagnitude, temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::param("temperature", format!("must be positive and finite, got {temperature}")));
    }
    // shift by m = -s so the largest weight is exp(0)
    let w: Vec<f64> = (0..s.dim()).map(|i| (-(i as f64) / temperature).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

pub fn thermal_density(s: SpinMagnitude, temperature: f64) -> Result<DensityOperator> {
    let pops = thermal_populations(s, temperature)?;
    let d = DVector::from_iterator(pops.len(), pops.into_iter().map(|p| C64::new(p, 0.0)));
    Ok(DensityOperator::from_raw(DMatrix::from_diagonal(&d)))
}

pub(crate) fn check_product_dim(d1: usize, d2: usize) -> Result<usize> {
    match d1.checked_mul(d2) {
        Some(n) if n <= MAX_DIM => Ok(n),
        Some(n) => Err(Error::DimensionOverflow(n)),
        None => Err(Error::DimensionOverflow(usize::MAX)),
    }
}

/// Product state on the two-spin basis. A pure factor paired with a mixed
/// one is promoted to its projector.
pub fn tensor(a: &QuantumState, b: &QuantumState) -> Result<QuantumState> {
    Ok(match (a, b) {
        (QuantumState::Pure(x), QuantumState::Pure(y)) => QuantumState::Pure(x.tensor(y)?),
        _ => QuantumState::Mixed(a.to_density().tensor(&b.to_density())?),
    })
}

/// Reduced density matrix of a bipartite density operator.
pub fn partial_trace(rho: &DensityOperator, d1: usize, d2: usize, keep: Subsystem) -> Result<DensityOperator> {
    let n = check_product_dim(d1, d2)?;
    if rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.dim() });
    }
    let m = rho.matrix();
    let out = match keep {
        Subsystem::Second => DMatrix::from_fn(d2, d2, |a, b| (0..d1).map(|k| m[(k * d2 + a, k * d2 + b)]).sum()),
        Subsystem::First => DMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|c| m[(i * d2 + c, j * d2 + c)]).sum()),
    };
    Ok(DensityOperator::from_raw(out))
}

/// Reduced density matrix of the pure state with amplitudes `amps`.
///
/// With `M[k1][k2] = amps[k1 * d2 + k2]`, `rho2 = M^T conj(M)` and
/// `rho1 = M M^dagger`.
pub fn reduce_pure(amps: &[C64], d1: usize, d2: usize, keep: Subsystem) -> Result<DensityOperator> {
    if amps.len() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, found: amps.len() });
    }
    Ok(DensityOperator::from_raw(reduce_pure_unchecked(amps, d1, d2, keep)))
}

pub(crate) fn reduce_pure_unchecked(amps: &[C64], d1: usize, d2: usize, keep: Subsystem) -> DMatrix<C64> {
    match keep {
        Subsystem::Second => {
            let mut out = DMatrix::zeros(d2, d2);
            for row in amps.chunks_exact(d2) {
                for b in 0..d2 {
                    let cb = row[b].conj();
                    for a in b..d2 {
                        out[(a, b)] += row[a] * cb;
                    }
                }
            }
            fill_upper(&mut out);
            out
        }
        Subsystem::First => {
            let mut out = DMatrix::zeros(d1, d1);
            for j in 0..d1 {
                let rj = &amps[j * d2..(j + 1) * d2];
                for i in j..d1 {
                    let ri = &amps[i * d2..(i + 1) * d2];
                    out[(i, j)] = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
                }
            }
            fill_upper(&mut out);
            out
        }
    }
}

fn fill_upper(m: &mut DMatrix<C64>) {
    let d = m.nrows();
    for b in 0..d {
        m[(b, b)].im = 0.0;
        for a in b + 1..d {
            m[(b, a)] = m[(a, b)].conj();
        }
    }
}

/// `Tr(op rho)` or `<psi|op|psi>`.
pub fn expectation(op: &DMatrix<C64>, state: &QuantumState) -> Result<f64> {
    if !op.is_square() || op.nrows() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: op.nrows() });
    }
    let scale = op.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let dev = hermitian_deviation(op);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let value = match state {
        QuantumState::Pure(k) => k.amplitudes().dotc(&(op * k.amplitudes())),
        QuantumState::Mixed(r) => (op * r.matrix()).trace(),
    };
    if value.im.abs() > IMAG_RESIDUE_TOL * scale {
        return Err(Error::InvalidState(format!("expectation value has imaginary part {:.3e}", value.im)));
    }
    Ok(value.re)
}

/// Largest `|A_ij - conj(A_ji)|`.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in j..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues of a Hermitian matrix, unsorted for `n > 2`.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = 0.5 * (m[(1, 0)] + m[(0, 1)].conj());
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![mean + r, mean - r]
        }
        _ => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    }
}

/// Kronecker product with the identity on the other factor.
pub fn embed(op: &DMatrix<C64>, other_dim: usize, position: Subsystem) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(other_dim, other_dim);
    match position {
        Subsystem::First => op.kronecker(&id),
        Subsystem::Second => id.kronecker(op),
    }
}
