//! Exact Walsh–Hadamard transforms and coefficient norms for real functions
//! on the Boolean hypercube.
//!
//! Points and subsets share one bit encoding: bit `i-1` of a table index is 0
//! for `x_i = +1` and 1 for `x_i = -1`, so the character `chi_S` evaluates to
//! `(-1)^popcount(index & mask(S))` and the transform is a branch-free
//! butterfly.

use crate::error::{Error, Result};
use crate::poly::MultilinearPolynomial;

pub const MAX_VARS: usize = 24;

/// Dense truth table of a real-valued function on the n-cube.
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanFunction {
    n: usize,
    values: Vec<f64>,
}

/// Fourier coefficient table indexed by subset bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VARS {
        return Err(Error::VariableCount(n));
    }
    Ok(())
}

impl BooleanFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if values.len() != 1 << n {
            return Err(Error::TableLength { n, got: values.len() });
        }
        Ok(Self { n, values })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(n, vec![c; 1 << n])
    }

    /// The character `chi_S` for the subset bitmask `mask`.
    pub fn character(n: usize, mask: u32) -> Result<Self> {
        check_n(n)?;
        let values = (0..1u32 << n)
            .map(|x| if (x & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: u32) -> f64 {
        self.values[index as usize]
    }

    /// True if every entry lies in {-1, 0, 1}.
    pub fn is_pm01_valued(&self) -> bool {
        self.values.iter().all(|&v| v == -1.0 || v == 0.0 || v == 1.0)
    }

    /// Pointwise product, used to exercise the submultiplicative norm bound.
    pub fn pointwise_product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::MismatchedArity(self.n, other.n));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::new(self.n, values)
    }
}

impl FourierSpectrum {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if coeffs.len() != 1 << n {
            return Err(Error::TableLength { n, got: coeffs.len() });
        }
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficient(&self, mask: u32) -> f64 {
        self.coeffs[mask as usize]
    }

    /// Sparse polynomial view of the spectrum (zero coefficients dropped).
    pub fn to_polynomial(&self) -> MultilinearPolynomial {
        let mut p = MultilinearPolynomial::zero(self.n);
        for (mask, &c) in self.coeffs.iter().enumerate() {
            p.add_term(mask as u32, c);
        }
        p
    }
}

/// In-place butterfly pass shared by the forward and inverse transforms.
/// Computes, for every mask `S`, the unnormalized sum over points `x` of
/// `data[x] * (-1)^popcount(x & S)`.
pub(crate) fn wht_in_place(data: &mut [f64]) {
    let len = data.len();
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(h * 2) {
            for i in block..block + h {
                let a = data[i];
                let b = data[i + h];
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Fourier transform: coefficient at `S` is `2^{-n} <f, chi_S>`.
pub fn wht_forward(f: &BooleanFunction) -> FourierSpectrum {
    let mut data = f.values.clone();
    wht_in_place(&mut data);
    let scale = 1.0 / (1u64 << f.n) as f64;
    for v in &mut data {
        *v *= scale;
    }
    FourierSpectrum { n: f.n, coeffs: data }
}

/// Inverse transform: `f(x) = sum_S coeff(S) chi_S(x)`.
pub fn wht_inverse(s: &FourierSpectrum) -> BooleanFunction {
    let mut data = s.coeffs.clone();
    wht_in_place(&mut data);
    BooleanFunction { n: s.n, values: data }
}

/// Degree-k homogeneous part: keeps coefficients at subsets of size exactly k.
pub fn level_part(s: &FourierSpectrum, k: usize) -> Result<FourierSpectrum> {
    if k > s.n {
        return Err(Error::LevelOutOfRange { k, n: s.n });
    }
    let coeffs = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(mask, &c)| if mask.count_ones() as usize == k { c } else { 0.0 })
        .collect();
    Ok(FourierSpectrum { n: s.n, coeffs })
}

/// Sum of the absolute values of all Fourier coefficients.
pub fn fourier_weight(s: &FourierSpectrum) -> f64 {
    s.coeffs.iter().map(|c| c.abs()).sum()
}

/// Sum of the absolute values of the coefficients of order exactly k.
pub fn level_weight(s: &FourierSpectrum, k: usize) -> Result<f64> {
    if k > s.n {
        return Err(Error::LevelOutOfRange { k, n: s.n });
    }
    Ok(s.coeffs
        .iter()
        .enumerate()
        .filter(|(mask, _)| mask.count_ones() as usize == k)
        .map(|(_, c)| c.abs())
        .sum())
}
