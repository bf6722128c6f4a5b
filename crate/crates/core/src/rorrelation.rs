//! The k-fold rorrelation quantity phi, the partial function built on it,
//! and samplers for its uniform and planted input distributions.
//!
//! For an orthogonal n x n matrix U and a sign matrix x with columns
//! x_1, ..., x_k,
//!
//!   phi(x) = (1/n) 1^T D_{x_1} U D_{x_2} U ... U D_{x_k} 1,
//!
//! where D_v is the diagonal matrix of v. Evaluation runs right-to-left as
//! k - 1 matrix-vector products, with a fast-transform path when U is the
//! normalized Hadamard matrix.

use crate::error::{Error, Result};
use crate::rng::{stream, StreamLabel};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::io::{BufRead, Write};

pub const MAX_DIM: usize = 4096;

fn check_dim(n: usize) -> Result<()> {
    if !n.is_power_of_two() || n < 2 || n > MAX_DIM {
        return Err(Error::BadDimension(n));
    }
    Ok(())
}

/// Dense orthogonal matrix, with a flag marking the Hadamard special case
/// so products can use the fast transform.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    n: usize,
    /// Row-major entries.
    entries: Vec<f64>,
    is_hadamard: bool,
}

impl OrthogonalMatrix {
    /// Wraps raw entries without certifying orthogonality (an O(n^3) check);
    /// call `orthogonality_defect` to certify.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        Ok(OrthogonalMatrix { n, entries, is_hadamard: false })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_hadamard(&self) -> bool {
        self.is_hadamard
    }

    /// H[i][j] = n^{-1/2} (-1)^{popcount(i & j)}.
    pub fn hadamard(n: usize) -> Result<Self> {
        check_dim(n)?;
        let scale = 1.0 / (n as f64).sqrt();
        let entries = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if (i & j).count_ones() % 2 == 0 { scale } else { -scale }
            })
            .collect();
        Ok(OrthogonalMatrix { n, entries, is_hadamard: true })
    }

    /// Haar-distributed sample: a standard Gaussian matrix is QR-factorized
    /// by Householder reflections and Q's columns are flipped to make R's
    /// diagonal positive, which removes the factorization's sign convention
    /// from the distribution.
    pub fn haar<R: Rng>(n: usize, rng: &mut R) -> Result<Self> {
        check_dim(n)?;
        // Column-major working copy; the Gaussians are drawn sequentially so
        // the result is seed-deterministic no matter the thread count.
        let mut a: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
        let mut diag_signs = vec![1.0f64; n];
        for j in 0..n - 1 {
            let m = n - j;
            let mut v: Vec<f64> = (0..m).map(|i| a[j * n + j + i]).collect();
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            diag_signs[j] = alpha.signum();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            // Apply I - 2vv^T/(v^T v) to the trailing columns.
            a.par_chunks_mut(n).skip(j).for_each(|col| {
                let dot: f64 = (0..m).map(|i| v[i] * col[j + i]).sum();
                let s = 2.0 * dot / vnorm2;
                for i in 0..m {
                    col[j + i] -= s * v[i];
                }
            });
            reflectors.push(v);
        }
        diag_signs[n - 1] = a[(n - 1) * n + n - 1].signum();
        // Accumulate Q = H_0 H_1 ... H_{n-2} applied to the identity.
        let mut q = vec![0.0f64; n * n];
        for j in 0..n {
            q[j * n + j] = 1.0;
        }
        for (j, v) in reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let m = n - j;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            q.par_chunks_mut(n).for_each(|col| {
                let dot: f64 = (0..m).map(|i| v[i] * col[j + i]).sum();
                let s = 2.0 * dot / vnorm2;
                for i in 0..m {
                    col[j + i] -= s * v[i];
                }
            });
        }
        // Transpose the column-major Q into row-major entries, flipping
        // column j by the sign of R_jj.
        let mut entries = vec![0.0f64; n * n];
        for j in 0..n {
            for i in 0..n {
                entries[i * n + j] = diag_signs[j] * q[j * n + i];
            }
        }
        Ok(OrthogonalMatrix { n, entries, is_hadamard: false })
    }

    /// v <- U v (in place). U is symmetric in the Hadamard case, so the
    /// fast path serves both orientations.
    pub fn apply(&self, v: &mut Vec<f64>) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against dimension {}",
                v.len(),
                self.n
            )));
        }
        if self.is_hadamard {
            crate::fourier::wht_in_place(v);
            let scale = 1.0 / (self.n as f64).sqrt();
            for t in v.iter_mut() {
                *t *= scale;
            }
            return Ok(());
        }
        let n = self.n;
        let out: Vec<f64> = (0..n)
            .map(|i| {
                let row = &self.entries[i * n..(i + 1) * n];
                row.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
            })
            .collect();
        *v = out;
        Ok(())
    }

    /// v <- U^T v (in place).
    pub fn apply_transpose(&self, v: &mut Vec<f64>) -> Result<()> {
        if self.is_hadamard {
            return self.apply(v);
        }
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against dimension {}",
                v.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut out = vec![0.0f64; n];
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        *v = out;
        Ok(())
    }

    /// max |(U^T U - I)_{ij}|.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut worst = 0.0f64;
                for j in i..n {
                    let mut dot = 0.0;
                    for r in 0..n {
                        dot += self.entries[r * n + i] * self.entries[r * n + j];
                    }
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - target).abs());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// n x k sign matrix; column j is the j-th input vector. Stored
/// column-major so phi walks contiguous memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputMatrix {
    n: usize,
    k: usize,
    signs: Vec<i8>,
}

impl InputMatrix {
    pub fn new(n: usize, k: usize, signs: Vec<i8>) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InfeasibleParams(format!("need n, k >= 1; got n={n}, k={k}")));
        }
        if signs.len() != n * k {
            return Err(Error::DimensionMismatch(format!(
                "{} signs for an {n}x{k} matrix",
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Parse("sign entries must be +-1".into()));
        }
        Ok(InputMatrix { n, k, signs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column(&self, j: usize) -> &[i8] {
        &self.signs[j * self.n..(j + 1) * self.n]
    }

    pub fn sign(&self, i: usize, j: usize) -> i8 {
        self.signs[j * self.n + i]
    }

    pub fn all_ones(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, vec![1; n * k])
    }
}

/// The problem instance: a fixed orthogonal matrix and the fold count.
#[derive(Debug, Clone)]
pub struct RorrelationInstance {
    u: OrthogonalMatrix,
    k: usize,
}

impl RorrelationInstance {
    pub fn new(u: OrthogonalMatrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InfeasibleParams("fold count k must be >= 1".into()));
        }
        Ok(RorrelationInstance { u, k })
    }

    pub fn matrix(&self) -> &OrthogonalMatrix {
        &self.u
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.u.n()
    }

    /// Whether k is small enough for the query-separation regime,
    /// k <= (1/3) log2(n) - 1.
    pub fn separation_regime(&self) -> bool {
        (self.k as f64) <= (self.n() as f64).log2() / 3.0 - 1.0
    }

    pub fn phi(&self, x: &InputMatrix) -> Result<f64> {
        if x.n() != self.n() || x.k() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "input {}x{} against instance {}x{}",
                x.n(),
                x.k(),
                self.n(),
                self.k
            )));
        }
        let n = self.n();
        let mut v = vec![1.0f64; n];
        for j in (0..self.k).rev() {
            let col = x.column(j);
            for (t, &s) in v.iter_mut().zip(col) {
                *t *= s as f64;
            }
            if j > 0 {
                self.u.apply(&mut v)?;
            }
        }
        Ok(v.iter().sum::<f64>() / n as f64)
    }

    pub fn classify(&self, x: &InputMatrix) -> Result<Class> {
        Ok(classify_phi(self.phi(x)?, self.k))
    }

    /// Acceptance probability of the ideal ceil(k/2)-query protocol.
    pub fn quantum_acceptance(&self, x: &InputMatrix) -> Result<f64> {
        Ok((self.phi(x)? + 1.0) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Zero,
    One,
    Star,
}

/// 1 when phi >= 2^{-k}, 0 when |phi| <= 2^{-k-1}, star strictly between.
pub fn classify_phi(phi: f64, k: usize) -> Class {
    let upper = 2f64.powi(-(k as i32));
    if phi >= upper {
        Class::One
    } else if phi.abs() <= upper / 2.0 {
        Class::Zero
    } else {
        Class::Star
    }
}

/// Majority-vote error reduction: the damping p = (1 + 3*2^{-(k+2)})^{-1}
/// applied before voting leaves a coin with advantage gamma = 2^{-k-4}, and
/// t = ceil(ln(1/err) / (2 gamma^2)) repetitions push the majority's error
/// below `target_error` via exp(-2 t gamma^2).
pub fn amplification(k: usize, target_error: f64) -> Result<(f64, u64)> {
    if !(0.0..0.5).contains(&target_error) || target_error == 0.0 {
        return Err(Error::ProbabilityRange(target_error));
    }
    if k == 0 {
        return Err(Error::InfeasibleParams("fold count k must be >= 1".into()));
    }
    let p = 1.0 / (1.0 + 3.0 * 2f64.powi(-(k as i32 + 2)));
    let gamma = 2f64.powi(-(k as i32 + 4));
    let t = ((1.0 / target_error).ln() / (2.0 * gamma * gamma)).ceil() as u64;
    Ok((p, t))
}

/// I.i.d. uniform sign matrix.
pub fn sample_uniform<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<InputMatrix> {
    let signs = (0..n * k).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    InputMatrix::new(n, k, signs)
}

/// Planted distribution over inputs: a Gaussian seed vector is chained
/// through U^T column by column, clamped to [-1,1], rounded to signs with
/// matching expectations, and the columns are given random signs whose
/// product is +1. The chaining correlates adjacent columns through U
/// (which is what phi measures); the clamp-and-round step discretizes; the
/// sign twist kills all sign moments of order below k without moving phi,
/// since every monomial of phi uses each column exactly once.
#[derive(Debug, Clone, Copy)]
pub struct HardDistribution<'a> {
    instance: &'a RorrelationInstance,
    epsilon: f64,
}

impl<'a> HardDistribution<'a> {
    /// `epsilon` in (0, 1] scales the Gaussian amplitude (std = 8 epsilon).
    pub fn new(instance: &'a RorrelationInstance, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::ProbabilityRange(epsilon));
        }
        Ok(HardDistribution { instance, epsilon })
    }

    pub const DEFAULT_EPSILON: f64 = 0.5;

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<InputMatrix> {
        let (n, k) = (self.instance.n(), self.instance.k());
        if k == 1 {
            // With one column, phi is the column mean and the contract pins
            // its expectation at 1, so the distribution collapses to the
            // all-ones input (no moment constraints exist below order 1).
            return InputMatrix::all_ones(n, 1);
        }
        let sigma = 8.0 * self.epsilon;
        let mut z: Vec<f64> =
            (0..n).map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect();
        let mut signs = vec![0i8; n * k];
        let mut parity = 1i8;
        for j in 0..k {
            if j > 0 {
                self.instance.matrix().apply_transpose(&mut z)?;
            }
            let col_sign = if j + 1 == k {
                parity
            } else {
                let s = if rng.gen::<bool>() { 1i8 } else { -1 };
                parity *= s;
                s
            };
            for i in 0..n {
                let t = z[i].clamp(-1.0, 1.0);
                let s = if rng.gen::<f64>() < (1.0 + t) / 2.0 { 1i8 } else { -1 };
                signs[j * n + i] = s * col_sign;
            }
        }
        InputMatrix::new(n, k, signs)
    }
}

/// Derives the j-th sampling stream for a master seed.
pub fn input_stream(master_seed: u64, hard: bool, index: u64) -> rand_chacha::ChaCha12Rng {
    let label = if hard { StreamLabel::HardInput } else { StreamLabel::UniformInput };
    stream(master_seed, label, index)
}

/// Binary matrix format: text header "n n\n", then row-major little-endian
/// binary64 entries.
pub fn write_matrix_binary(w: &mut impl Write, u: &OrthogonalMatrix) -> Result<()> {
    writeln!(w, "{} {}", u.n(), u.n())?;
    for &e in u.entries() {
        w.write_all(&e.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix_binary(r: &mut impl BufRead) -> Result<OrthogonalMatrix> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse("bad matrix header".into()))?;
    let n2: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse("bad matrix header".into()))?;
    if n != n2 {
        return Err(Error::Parse(format!("non-square header {n} {n2}")));
    }
    let mut buf = vec![0u8; n * n * 8];
    r.read_exact(&mut buf)?;
    let entries = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    OrthogonalMatrix::from_entries(n, entries)
}

/// CSV alternative: one row per line, entries formatted for exact
/// round-trip.
pub fn write_matrix_csv(w: &mut impl Write, u: &OrthogonalMatrix) -> Result<()> {
    let n = u.n();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", u.entry(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv(r: &mut impl BufRead) -> Result<OrthogonalMatrix> {
    let mut entries = Vec::new();
    let mut rows = 0usize;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        for tok in line.split(',') {
            entries.push(
                tok.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad entry `{tok}`")))?,
            );
        }
    }
    if entries.len() != rows * rows {
        return Err(Error::Parse(format!(
            "{} entries in {rows} rows is not square",
            entries.len()
        )));
    }
    OrthogonalMatrix::from_entries(rows, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn mean_and_se(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn hadamard_small_values() {
        let h = OrthogonalMatrix::hadamard(2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_eq!(
            (0..2).flat_map(|i| (0..2).map(|j| h.entry(i, j)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            vec![r, r, r, -r]
        );
        // Involution: applying H twice is the identity.
        let mut v = vec![0.3, -1.7, 2.0, 0.25];
        let h4 = OrthogonalMatrix::hadamard(4).unwrap();
        let orig = v.clone();
        h4.apply(&mut v).unwrap();
        h4.apply(&mut v).unwrap();
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).abs() <= 1e-12);
        }
        // H maps the all-ones vector to sqrt(n) e_0.
        let mut ones = vec![1.0; 4];
        h4.apply(&mut ones).unwrap();
        assert!((ones[0] - 2.0).abs() <= 1e-12);
        assert!(ones[1..].iter().all(|&t| t.abs() <= 1e-12));
        assert!(h4.orthogonality_defect() <= 1e-12);
        assert!(OrthogonalMatrix::hadamard(3).is_err());
    }

    #[test]
    fn haar_matrices_are_orthogonal() {
        let mut rng = ChaCha12Rng::seed_from_u64(30);
        for _ in 0..100 {
            let u = OrthogonalMatrix::haar(64, &mut rng).unwrap();
            assert!(u.orthogonality_defect() <= 1e-10);
        }
        assert!(OrthogonalMatrix::haar(48, &mut rng).is_err());
        assert!(OrthogonalMatrix::haar(8192, &mut rng).is_err());
    }

    #[test]
    fn haar_is_deterministic_per_seed() {
        let a = OrthogonalMatrix::haar(32, &mut ChaCha12Rng::seed_from_u64(31)).unwrap();
        let b = OrthogonalMatrix::haar(32, &mut ChaCha12Rng::seed_from_u64(31)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn haar_first_coordinate_second_moment() {
        let n = 16;
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let draws = 10_000;
        let samples: Vec<f64> = (0..draws)
            .map(|_| {
                let u = OrthogonalMatrix::haar(n, &mut rng).unwrap();
                u.entry(0, 0).powi(2)
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        assert!(
            (mean - 1.0 / n as f64).abs() <= 5.0 * se,
            "mean {mean} vs 1/{n}, se {se}"
        );
    }

    #[test]
    fn haar_rotates_a_fixed_vector_isotropically() {
        let n = 16;
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let w: Vec<f64> = {
            let mut w = vec![1.0; n];
            let norm = (n as f64).sqrt();
            for t in &mut w {
                *t /= norm;
            }
            w
        };
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                let u = OrthogonalMatrix::haar(n, &mut rng).unwrap();
                let mut v = w.clone();
                u.apply(&mut v).unwrap();
                v[3].powi(2)
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        assert!((mean - 1.0 / n as f64).abs() <= 5.0 * se);
    }

    #[test]
    fn norm_preserved_by_sign_scaled_products() {
        let mut rng = ChaCha12Rng::seed_from_u64(34);
        let u = OrthogonalMatrix::haar(64, &mut rng).unwrap();
        for _ in 0..20 {
            let mut v: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let before: f64 = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            let x = sample_uniform(64, 1, &mut rng).unwrap();
            for (t, &s) in v.iter_mut().zip(x.column(0)) {
                *t *= s as f64;
            }
            u.apply(&mut v).unwrap();
            let after: f64 = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            assert!((before - after).abs() <= 1e-9 * before);
        }
    }

    #[test]
    fn phi_k1_is_the_column_mean() {
        let u = OrthogonalMatrix::hadamard(8).unwrap();
        let inst = RorrelationInstance::new(u, 1).unwrap();
        let ones = InputMatrix::all_ones(8, 1).unwrap();
        assert_eq!(inst.phi(&ones).unwrap(), 1.0);
        let mut signs = vec![1i8; 8];
        signs[0] = -1;
        signs[5] = -1;
        let x = InputMatrix::new(8, 1, signs).unwrap();
        assert_eq!(inst.phi(&x).unwrap(), 0.5);
    }

    #[test]
    fn phi_small_hadamard_value() {
        let u = OrthogonalMatrix::hadamard(2).unwrap();
        let inst = RorrelationInstance::new(u, 2).unwrap();
        let x = InputMatrix::all_ones(2, 2).unwrap();
        let phi = inst.phi(&x).unwrap();
        assert!((phi - 2f64.sqrt() / 2.0).abs() <= 1e-15);
        assert!((inst.quantum_acceptance(&x).unwrap() - (1.0 + 2f64.sqrt() / 2.0) / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn phi_agrees_between_fast_and_dense_paths() {
        let n = 16;
        let h = OrthogonalMatrix::hadamard(n).unwrap();
        let dense = OrthogonalMatrix::from_entries(
            n,
            h.entries().to_vec(),
        )
        .unwrap();
        let fast = RorrelationInstance::new(h, 3).unwrap();
        let slow = RorrelationInstance::new(dense, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(35);
        for _ in 0..200 {
            let x = sample_uniform(n, 3, &mut rng).unwrap();
            let a = fast.phi(&x).unwrap();
            let b = slow.phi(&x).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn phi_bounded_on_random_inputs() {
        let u = OrthogonalMatrix::hadamard(64).unwrap();
        let inst = RorrelationInstance::new(u, 3).unwrap();
        let mut rng = input_stream(7, false, 0);
        for _ in 0..100_000 {
            let x = sample_uniform(64, 3, &mut rng).unwrap();
            let phi = inst.phi(&x).unwrap();
            assert!(phi.abs() <= 1.0 + 1e-9, "phi {phi} escaped [-1,1]");
        }
    }

    #[test]
    fn classification_thresholds() {
        let k = 3;
        assert_eq!(classify_phi(1.0, k), Class::One);
        assert_eq!(classify_phi(0.0, k), Class::Zero);
        assert_eq!(classify_phi(2f64.powi(-3), k), Class::One);
        assert_eq!(classify_phi(2f64.powi(-4), k), Class::Zero);
        assert_eq!(classify_phi(-2f64.powi(-4), k), Class::Zero);
        assert_eq!(classify_phi(0.75 * 2f64.powi(-3), k), Class::Star);
        assert_eq!(classify_phi(-1.0, k), Class::Star);
    }

    #[test]
    fn amplification_parameters() {
        let (p, t) = amplification(1, 1.0 / 3.0).unwrap();
        assert_eq!(t, 563);
        assert!(p > 0.0 && p < 1.0);
        // Minimality of t against the stated error form.
        let gamma = 2f64.powi(-5);
        assert!((-2.0 * t as f64 * gamma * gamma).exp() <= 1.0 / 3.0);
        assert!((-2.0 * (t - 1) as f64 * gamma * gamma).exp() > 1.0 / 3.0);
        for k in 1..=8 {
            let (p, _) = amplification(k, 0.1).unwrap();
            assert!(p > 0.0 && p < 1.0);
        }
        assert!(amplification(2, 0.0).is_err());
        assert!(amplification(2, 0.5).is_err());
    }

    #[test]
    fn uniform_sampler_moments() {
        let mut rng = input_stream(11, false, 0);
        let samples = 100_000;
        let mut coord_sum = 0.0;
        let mut phi2 = Vec::with_capacity(samples);
        let u = OrthogonalMatrix::hadamard(64).unwrap();
        let inst = RorrelationInstance::new(u, 3).unwrap();
        for _ in 0..samples {
            let x = sample_uniform(64, 3, &mut rng).unwrap();
            coord_sum += x.sign(17, 1) as f64;
            let phi = inst.phi(&x).unwrap();
            phi2.push(64.0 * phi * phi);
        }
        let coord_mean = coord_sum / samples as f64;
        let coord_se = 1.0 / (samples as f64).sqrt();
        assert!(coord_mean.abs() <= 4.0 * coord_se);
        let (mean, se) = mean_and_se(&phi2);
        assert!((mean - 1.0).abs() <= 5.0 * se, "n E[phi^2] = {mean}, se {se}");
    }

    #[test]
    fn uniform_inputs_mostly_classify_zero() {
        // With k = 1 and n = 64 the zero class has mass at least
        // 1 - 4^{k+1}/n = 3/4.
        let u = OrthogonalMatrix::hadamard(64).unwrap();
        let inst = RorrelationInstance::new(u, 1).unwrap();
        let mut rng = input_stream(12, false, 0);
        let samples = 20_000;
        let zeros = (0..samples)
            .filter(|_| {
                let x = sample_uniform(64, 1, &mut rng).unwrap();
                inst.classify(&x).unwrap() == Class::Zero
            })
            .count();
        assert!(zeros as f64 / samples as f64 >= 0.75);
    }

    #[test]
    fn hard_distribution_lifts_phi() {
        let mut mrng = ChaCha12Rng::seed_from_u64(36);
        let u = OrthogonalMatrix::haar(64, &mut mrng).unwrap();
        let inst = RorrelationInstance::new(u, 2).unwrap();
        let dist = HardDistribution::new(&inst, HardDistribution::DEFAULT_EPSILON).unwrap();
        let mut rng = input_stream(13, true, 0);
        let samples: Vec<f64> = (0..20_000)
            .map(|_| {
                let x = dist.sample(&mut rng).unwrap();
                inst.phi(&x).unwrap()
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        let target = 2.0 / std::f64::consts::PI - 0.05;
        assert!(mean - 4.0 * se >= target, "E[phi] = {mean} (se {se}) below {target}");
        // And the yes class is hit often enough.
        let ones = samples.iter().filter(|&&p| classify_phi(p, 2) == Class::One).count();
        let frac = ones as f64 / samples.len() as f64;
        let frac_se = (frac * (1.0 - frac) / samples.len() as f64).sqrt();
        assert!(frac >= 0.25 - 4.0 * frac_se, "P[class 1] = {frac}");
    }

    #[test]
    fn hard_distribution_low_order_moments_vanish() {
        let mut mrng = ChaCha12Rng::seed_from_u64(37);
        let u = OrthogonalMatrix::haar(64, &mut mrng).unwrap();
        let inst = RorrelationInstance::new(u, 3).unwrap();
        let dist = HardDistribution::new(&inst, HardDistribution::DEFAULT_EPSILON).unwrap();
        let mut rng = input_stream(14, true, 0);
        let samples = 20_000;
        let mut single = 0.0;
        let mut cross = 0.0;
        let mut same = 0.0;
        for _ in 0..samples {
            let x = dist.sample(&mut rng).unwrap();
            single += x.sign(5, 1) as f64;
            cross += (x.sign(3, 0) * x.sign(9, 2)) as f64;
            same += (x.sign(2, 1) * x.sign(40, 1)) as f64;
        }
        let se = 1.0 / (samples as f64).sqrt();
        for (label, total) in [("single", single), ("cross", cross), ("same", same)] {
            let mean = total / samples as f64;
            assert!(mean.abs() <= 4.0 * se, "{label} moment {mean} exceeds 4 se");
        }
    }

    #[test]
    fn hard_sampler_is_deterministic() {
        let u = OrthogonalMatrix::hadamard(16).unwrap();
        let inst = RorrelationInstance::new(u, 2).unwrap();
        let dist = HardDistribution::new(&inst, 0.5).unwrap();
        let a = dist.sample(&mut input_stream(15, true, 3)).unwrap();
        let b = dist.sample(&mut input_stream(15, true, 3)).unwrap();
        assert_eq!(a, b);
        assert!(HardDistribution::new(&inst, 0.0).is_err());
        assert!(HardDistribution::new(&inst, 1.5).is_err());
    }

    #[test]
    fn separation_regime_threshold() {
        let u = OrthogonalMatrix::hadamard(4096).unwrap();
        // log2(4096)/3 - 1 = 3.
        assert!(RorrelationInstance::new(u.clone(), 3).unwrap().separation_regime());
        assert!(!RorrelationInstance::new(u, 4).unwrap().separation_regime());
    }

    #[test]
    fn matrix_file_round_trips() {
        let mut rng = ChaCha12Rng::seed_from_u64(38);
        let u = OrthogonalMatrix::haar(16, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &u).unwrap();
        let back = read_matrix_binary(&mut std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(u.entries(), back.entries());

        let mut csv = Vec::new();
        write_matrix_csv(&mut csv, &u).unwrap();
        let back = read_matrix_csv(&mut std::io::Cursor::new(&csv)).unwrap();
        assert_eq!(u.entries(), back.entries());
    }
}
