//! The piecewise envelope function Lambda_{m,k}(p) and the closed-form
//! level-weight bounds expressed through it, plus an empirical verifier that
//! sweeps decision trees against those bounds.

use crate::error::{Error, Result};
use crate::fourier::{level_weight, wht_forward};
use crate::tree::DecisionTree;

fn check_params(m: u64, k: u32, p: f64) -> Result<()> {
    if m == 0 || k == 0 {
        return Err(Error::InfeasibleParams(format!("need m, k >= 1; got m={m}, k={k}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityRange(p));
    }
    Ok(())
}

/// Piecewise definition, evaluated in log space:
///   0                                        at p = 0,
///   p * ((1/k) ln(e^k m^{k-1} / p))^{k/2}    on (0, 1/m],
///   p * sqrt(ln(e/p) (ln em)^{k-1})          on (1/m, 1].
pub fn lambda(m: u64, k: u32, p: f64) -> Result<f64> {
    check_params(m, k, p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    let (k_f, ln_m) = (k as f64, (m as f64).ln());
    let log_val = if p as f64 * m as f64 <= 1.0 {
        // (1/k)(k + (k-1) ln m - ln p), raised to k/2.
        let inner = (k_f + (k_f - 1.0) * ln_m - p.ln()) / k_f;
        p.ln() + 0.5 * k_f * inner.ln()
    } else {
        p.ln() + 0.5 * ((1.0 - p.ln()).ln() + (k_f - 1.0) * (1.0 + ln_m).ln())
    };
    Ok(log_val.exp())
}

/// Grid-search maximum of p * prod sqrt(ln e x_i) subject to x_i >= 1 and
/// x_1 ... x_i <= m^{i-1} / p for every prefix i. Parameterized by
/// y_i = ln x_i >= 0; the last coordinate saturates its prefix budget.
pub fn lambda_oracle(m: u64, k: u32, p: f64, grid: usize) -> Result<f64> {
    check_params(m, k, p)?;
    if !(1..=4).contains(&k) || !(2..=200).contains(&grid) {
        return Err(Error::InfeasibleParams(format!(
            "oracle supports k in 1..=4 and grid in 2..=200; got k={k}, grid={grid}"
        )));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let ln_m = (m as f64).ln();
    let budget = |i: u32| (i as f64 - 1.0) * ln_m - p.ln();

    fn go(
        i: u32,
        k: u32,
        prefix: f64,
        obj: f64,
        grid: usize,
        budget: &dyn Fn(u32) -> f64,
    ) -> f64 {
        let slack = (budget(i) - prefix).max(0.0);
        if i == k {
            return obj + 0.5 * (1.0 + slack).ln();
        }
        let mut best = f64::NEG_INFINITY;
        for step in 0..=grid {
            let y = slack * step as f64 / grid as f64;
            let val = go(
                i + 1,
                k,
                prefix + y,
                obj + 0.5 * (1.0 + y).ln(),
                grid,
                budget,
            );
            best = best.max(val);
        }
        best
    }

    Ok((p.ln() + go(1, k, 0.0, 0.0, grid, &budget)).exp())
}

/// sqrt(binom(d,k)) * (58 C c)^k * Lambda_{n^2, k}(p).
pub fn bound_main(n: u64, d: u64, k: u32, p: f64, c_big: f64, c_small: f64) -> Result<f64> {
    if n == 0 || k == 0 || k as u64 > n || c_big < 1.0 || c_small < 1.0 {
        return Err(Error::InfeasibleParams(format!(
            "need 1 <= k <= n and constants >= 1; got n={n}, k={k}, C={c_big}, c={c_small}"
        )));
    }
    if k as u64 > d {
        return Ok(0.0); // no level-k coefficients exist
    }
    let l = lambda(n * n, k, p)?;
    let log = 0.5 * crate::families::ln_binomial(d, k as u64)
        + k as f64 * (58.0 * c_big * c_small).ln();
    Ok(log.exp() * l)
}

/// C^k * sqrt(binom(d,k) (1 + ln n)^{k-1}).
pub fn bound_clean(n: u64, d: u64, k: u32, c_big: f64) -> Result<f64> {
    if n == 0 || k == 0 || k as u64 > n {
        return Err(Error::InfeasibleParams(format!("need 1 <= k <= n; got n={n}, k={k}")));
    }
    if k as u64 > d {
        return Ok(0.0);
    }
    let log = k as f64 * c_big.ln()
        + 0.5 * crate::families::ln_binomial(d, k as u64)
        + 0.5 * (k as f64 - 1.0) * (1.0 + (n as f64).ln()).ln();
    Ok(log.exp())
}

/// 2 C^k * 12^{l-1} * Lambda_{n^2, k}(p) * prod sqrt(binom(|I_i|, k_i)),
/// for a block structure given by interval sizes and per-block counts.
pub fn bound_canonical(
    interval_sizes: &[u64],
    ks: &[u32],
    p: f64,
    c_big: f64,
    n: u64,
) -> Result<f64> {
    if interval_sizes.len() != ks.len() || ks.is_empty() {
        return Err(Error::InfeasibleParams(
            "need matching, nonempty interval and count lists".into(),
        ));
    }
    if ks.iter().any(|&k| !(1..=2).contains(&k)) {
        return Err(Error::InfeasibleParams("block counts must be 1 or 2".into()));
    }
    let k: u32 = ks.iter().sum();
    let l = interval_sizes.len() as f64;
    let lam = lambda(n * n, k, p)?;
    let mut log = 2f64.ln() + k as f64 * c_big.ln() + (l - 1.0) * 12f64.ln();
    for (&sz, &ki) in interval_sizes.iter().zip(ks) {
        log += 0.5 * crate::families::ln_binomial(sz, ki as u64);
    }
    Ok(log.exp() * lam)
}

/// Base-2 entropy with the conventional zero limits at the endpoints.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ProbabilityRange(x));
    }
    let term = |t: f64| if t == 0.0 { 0.0 } else { -t * t.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// One sweep record: how a tree's exact level weight compares to the
/// closed-form bounds.
#[derive(Debug, Clone, Copy)]
pub struct WeightBoundRow {
    pub n: u64,
    pub d: u64,
    pub k: u32,
    pub p: f64,
    pub level_weight: f64,
    pub bound_main: f64,
    pub bound_clean: f64,
    /// level_weight / bound_main (0 when both vanish).
    pub ratio: f64,
    /// (level_weight / sqrt(binom(d,k) (1 + ln n)^{k-1}))^{1/k}.
    pub normalized: f64,
}

/// Row log ceiling; the maxima always cover the full sweep.
pub const MAX_REPORT_ROWS: usize = 1 << 16;

#[derive(Debug, Clone, Default)]
pub struct WeightBoundReport {
    /// First `MAX_REPORT_ROWS` rows; `truncated` flags a longer sweep.
    pub rows: Vec<WeightBoundRow>,
    pub truncated: bool,
    pub trees: u64,
    pub max_ratio: f64,
    pub max_normalized: f64,
}

/// Sweeps trees against the bounds with the supplied constants; `p` is taken
/// as the fraction of inputs on which the tree computes a nonzero value.
pub fn verify_weight_bounds<I>(trees: I, c_big: f64, c_small: f64) -> Result<WeightBoundReport>
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<DecisionTree>,
{
    use std::borrow::Borrow;
    let mut report = WeightBoundReport::default();
    for tree in trees {
        let tree = tree.borrow();
        report.trees += 1;
        let (n, d) = (tree.n() as u64, tree.depth() as u64);
        let table = tree.truth_table()?;
        let p = table.values().iter().filter(|&&v| v != 0.0).count() as f64
            / table.values().len() as f64;
        let spectrum = wht_forward(&table);
        for k in 1..=d as u32 {
            let lw = level_weight(&spectrum, k as usize)?;
            let bm = bound_main(n, d, k, p, c_big, c_small)?;
            let bc = bound_clean(n, d, k, c_big)?;
            let ratio = if lw == 0.0 { 0.0 } else { lw / bm };
            let denom = (0.5 * crate::families::ln_binomial(d, k as u64)
                + 0.5 * (k as f64 - 1.0) * (1.0 + (n as f64).ln()).ln())
            .exp();
            let normalized = if lw == 0.0 { 0.0 } else { (lw / denom).powf(1.0 / k as f64) };
            report.max_ratio = report.max_ratio.max(ratio);
            report.max_normalized = report.max_normalized.max(normalized);
            if report.rows.len() >= MAX_REPORT_ROWS {
                report.truncated = true;
                continue;
            }
            report.rows.push(WeightBoundRow {
                n,
                d,
                k,
                p,
                level_weight: lw,
                bound_main: bm,
                bound_clean: bc,
                ratio,
                normalized,
            });
        }
    }
    Ok(report)
}
