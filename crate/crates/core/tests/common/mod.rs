#![allow(dead_code)]

pub mod props;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use spindyn::spin::{DensityOperator, Ket};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(a)` by scaling and squaring with an order-30 Taylor series.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let row_norm = (0..n).map(|r| a.row(r).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if row_norm > 0.5 { (row_norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i h t) psi` through [`expm`].
pub fn evolve_oracle(h: &DMatrix<C64>, psi: &DVector<C64>, t: f64) -> DVector<C64> {
    expm(&(h * C64::new(0.0, -t))) * psi
}

pub fn random_amplitudes<R: Rng>(rng: &mut R, dim: usize) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn random_ket<R: Rng>(rng: &mut R, dim: usize) -> Ket {
    Ket::normalized(random_amplitudes(rng, dim)).unwrap()
}

/// Mixture of `dim` random pure states with random weights.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let v = random_amplitudes(rng, dim);
        m += &v * v.adjoint() * C64::new(w / total, 0.0);
    }
    // exact Hermiticity
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityOperator::new(m).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    expm(&(random_hermitian(rng, dim) * C64::new(0.0, 3.0)))
}

/// Two-qubit spectrum `{alpha/4, -alpha/4, beta, -beta}`, sorted.
pub fn closed_form_two_qubit_spectrum(alpha: f64) -> Vec<f64> {
    let beta = (alpha * alpha + 16.0).sqrt() / 4.0;
    let mut e = vec![alpha / 4.0, -alpha / 4.0, beta, -beta];
    e.sort_by(f64::total_cmp);
    e
}

/// Reduced state of the second qubit of a pure two-qubit state, by hand.
pub fn reduced_second_qubit(psi: &DVector<C64>) -> [[C64; 2]; 2] {
    let mut r = [[c(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                r[a][b] += psi[2 * k + a] * psi[2 * k + b].conj();
            }
        }
    }
    r
}

/// Base-2 entropy of a 2x2 density matrix from its trace and determinant.
pub fn qubit_entropy(r: [[C64; 2]; 2]) -> f64 {
    let tr = r[0][0].re + r[1][1].re;
    let det = (r[0][0] * r[1][1] - r[0][1] * r[1][0]).re;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0].iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum()
}

/// Pure-state concurrence `2 |a d - b c|`.
pub fn pure_concurrence(psi: &DVector<C64>) -> f64 {
    2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()
}

pub fn max_abs_diff(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Writes a report line that is shown even when test output is captured.
pub fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}
