//! Set families built from blocks of consecutive integers, and the recursive
//! partition of all k-subsets of {1..n} into such families.
//!
//! An elementary family is a product binom(I_1,k_1) * ... * binom(I_l,k_l)
//! over pairwise disjoint intervals with k_j in {0,1,2}: its members are all
//! sets formed by choosing k_j elements from each I_j. The partition cost of
//! a list of families is the sum of the square roots of their sizes.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;

pub const FAMILY_ENUMERATION_CAP: u128 = 10_000_000;

/// Cap on binom(n, k) for bitmap-based cover certification.
pub const COVER_CHECK_CAP: u128 = 100_000_000;

/// Exact binomial coefficient, saturating at u128::MAX.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for j in 1..=k {
        acc = acc.saturating_mul((n - k + j) as u128) / j as u128;
    }
    acc
}

/// log of binom(n, k), evaluated term by term to dodge overflow.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|j| (((n - k + j) as f64) / j as f64).ln()).sum()
}

/// The interval {lo, ..., hi}; empty exactly when lo = hi + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IntegerInterval {
    pub lo: i64,
    pub hi: i64,
}

impl IntegerInterval {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi + 1 {
            return Err(Error::Parse(format!("bad interval [{lo}..{hi}]")));
        }
        Ok(IntegerInterval { lo, hi })
    }

    pub fn size(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi + 1
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn translate(&self, x: i64) -> Self {
        IntegerInterval { lo: self.lo + x, hi: self.hi + x }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        IntegerInterval { lo, hi: hi.max(lo - 1) }
    }

    fn overlaps(&self, other: &Self) -> bool {
        !self.intersect(other).is_empty()
    }
}

/// A product of per-interval subset choices; `blocks` pairs each interval
/// with how many of its elements every member set contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryFamily {
    blocks: Vec<(IntegerInterval, u8)>,
}

impl ElementaryFamily {
    pub fn new(blocks: Vec<(IntegerInterval, u8)>) -> Result<Self> {
        for (i, &(ival, k)) in blocks.iter().enumerate() {
            if k > 2 {
                return Err(Error::InfeasibleParams(format!(
                    "block multiplicity {k} not in {{0,1,2}}"
                )));
            }
            for &(other, _) in &blocks[..i] {
                if !ival.is_empty() && !other.is_empty() && ival.overlaps(&other) {
                    return Err(Error::OverlappingFamilies);
                }
            }
        }
        Ok(ElementaryFamily { blocks })
    }

    /// The family {emptyset}: a product over no blocks.
    pub fn trivial() -> Self {
        ElementaryFamily { blocks: Vec::new() }
    }

    pub fn single(lo: i64, hi: i64, k: u8) -> Result<Self> {
        Self::new(vec![(IntegerInterval::new(lo, hi)?, k)])
    }

    pub fn blocks(&self) -> &[(IntegerInterval, u8)] {
        &self.blocks
    }

    /// Total elements per member set.
    pub fn set_size(&self) -> u64 {
        self.blocks.iter().map(|&(_, k)| k as u64).sum()
    }

    /// Number of member sets: the product of per-block binomials.
    pub fn size(&self) -> u128 {
        self.blocks
            .iter()
            .map(|&(ival, k)| binomial(ival.size(), k as u64))
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn translate(&self, x: i64) -> Self {
        ElementaryFamily {
            blocks: self.blocks.iter().map(|&(i, k)| (i.translate(x), k)).collect(),
        }
    }

    /// Concatenation of block lists: the family of unions A cup B over
    /// members A, B of the operands (intervals must stay disjoint).
    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(&other.blocks);
        Self::new(blocks)
    }

    /// Drops elements above `hi_max` by shrinking every block interval;
    /// yields the subfamily of member sets contained in (-inf, hi_max].
    /// Returns None when some block can no longer supply its quota.
    pub fn restrict_to(&self, hi_max: i64) -> Option<Self> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for &(ival, k) in &self.blocks {
            let cut = IntegerInterval { lo: ival.lo, hi: ival.hi.min(hi_max).max(ival.lo - 1) };
            if (cut.size()) < k as u64 {
                return None;
            }
            blocks.push((cut, k));
        }
        Some(ElementaryFamily { blocks })
    }

    /// All member sets as bitmasks (element e -> bit e-1); requires the
    /// ground set to lie inside {1..64} and the size to be enumerable.
    pub fn enumerate(&self) -> Result<Vec<u64>> {
        let size = self.size();
        if size > FAMILY_ENUMERATION_CAP {
            return Err(Error::ExplosionGuard(size, FAMILY_ENUMERATION_CAP));
        }
        for &(ival, k) in &self.blocks {
            if k > 0 && (ival.lo < 1 || ival.hi > 64) {
                return Err(Error::InfeasibleParams(format!(
                    "cannot enumerate block [{}..{}] outside {{1..64}}",
                    ival.lo, ival.hi
                )));
            }
        }
        let mut masks = vec![0u64];
        for &(ival, k) in &self.blocks {
            if k == 0 {
                continue;
            }
            let choices = subset_masks(ival, k);
            let mut next = Vec::with_capacity(masks.len() * choices.len());
            for &m in &masks {
                for &c in &choices {
                    next.push(m | c);
                }
            }
            masks = next;
        }
        if self.is_empty() {
            masks.clear();
        }
        Ok(masks)
    }

    /// True when no set belongs to both families, decided symbolically by a
    /// feasibility search over interval atoms (no enumeration).
    pub fn disjoint_from(&self, other: &Self) -> bool {
        if self.is_empty() || other.is_empty() {
            return true;
        }
        if self.set_size() != other.set_size() {
            return true;
        }
        !intersects(self, other)
    }
}

fn subset_masks(ival: IntegerInterval, k: u8) -> Vec<u64> {
    let elems: Vec<i64> = (ival.lo..=ival.hi).collect();
    match k {
        1 => elems.iter().map(|&e| 1u64 << (e - 1)).collect(),
        2 => {
            let mut out = Vec::new();
            for i in 0..elems.len() {
                for j in i + 1..elems.len() {
                    out.push(1u64 << (elems[i] - 1) | 1u64 << (elems[j] - 1));
                }
            }
            out
        }
        _ => vec![0],
    }
}

/// Feasibility search: is there a set meeting both families' block quotas?
/// The line is cut into atoms on which block membership is constant; a
/// common set assigns each atom a count of elements, constrained by both
/// sides' quotas, with elements allowed only where both ground sets overlap.
fn intersects(a: &ElementaryFamily, b: &ElementaryFamily) -> bool {
    let mut cuts: BTreeSet<i64> = BTreeSet::new();
    for f in [a, b] {
        for &(ival, _) in f.blocks() {
            if !ival.is_empty() {
                cuts.insert(ival.lo);
                cuts.insert(ival.hi + 1);
            }
        }
    }
    let cuts: Vec<i64> = cuts.into_iter().collect();
    let block_of = |f: &ElementaryFamily, x: i64| -> Option<usize> {
        f.blocks().iter().position(|(ival, _)| ival.contains(x))
    };
    // (atom size, a-block index, b-block index)
    let mut atoms = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1] - 1);
        atoms.push((
            (hi - lo + 1) as u64,
            block_of(a, lo),
            block_of(b, lo),
        ));
    }
    let mut rem_a: Vec<u8> = a.blocks().iter().map(|&(_, k)| k).collect();
    let mut rem_b: Vec<u8> = b.blocks().iter().map(|&(_, k)| k).collect();
    search(&atoms, 0, &mut rem_a, &mut rem_b)
}

fn search(
    atoms: &[(u64, Option<usize>, Option<usize>)],
    pos: usize,
    rem_a: &mut [u8],
    rem_b: &mut [u8],
) -> bool {
    if pos == atoms.len() {
        return rem_a.iter().all(|&r| r == 0) && rem_b.iter().all(|&r| r == 0);
    }
    let (size, ai, bi) = atoms[pos];
    let max = match (ai, bi) {
        // Elements outside either ground set cannot be used.
        (Some(i), Some(j)) => size.min(rem_a[i] as u64).min(rem_b[j] as u64),
        _ => 0,
    };
    for c in 0..=max as u8 {
        if let Some(i) = ai {
            rem_a[i] -= c;
        }
        if let Some(j) = bi {
            rem_b[j] -= c;
        }
        let ok = search(atoms, pos + 1, rem_a, rem_b);
        if let Some(i) = ai {
            rem_a[i] += c;
        }
        if let Some(j) = bi {
            rem_b[j] += c;
        }
        if ok {
            return true;
        }
    }
    false
}

/// A set family given by explicit bitmasks over a ground set {1..n}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitFamily {
    n: usize,
    sets: BTreeSet<u64>,
}

impl ExplicitFamily {
    pub fn new(n: usize, sets: impl IntoIterator<Item = u64>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InfeasibleParams(format!("ground set size {n} not in [1, 64]")));
        }
        let bound = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let sets: BTreeSet<u64> = sets.into_iter().collect();
        for &m in &sets {
            if m & !bound != 0 {
                return Err(Error::FamilyOutOfRange { mask: m, d: n });
            }
        }
        Ok(ExplicitFamily { n, sets })
    }

    pub fn empty(n: usize) -> Self {
        ExplicitFamily { n, sets: BTreeSet::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> impl Iterator<Item = u64> + '_ {
        self.sets.iter().copied()
    }

    pub fn contains(&self, mask: u64) -> bool {
        self.sets.contains(&mask)
    }

    pub fn from_elementary(n: usize, ef: &ElementaryFamily) -> Result<Self> {
        Self::new(n, ef.enumerate()?)
    }

    /// All k-subsets of {1..n}.
    pub fn all_k_subsets(n: usize, k: usize) -> Result<Self> {
        let count = binomial(n as u64, k as u64);
        if count > FAMILY_ENUMERATION_CAP {
            return Err(Error::ExplosionGuard(count, FAMILY_ENUMERATION_CAP));
        }
        let mut sets = Vec::with_capacity(count as usize);
        if k == 0 {
            sets.push(0);
        } else if k <= n {
            // Gosper's hack over k-bit masks below 2^n.
            let mut m = (1u64 << k) - 1;
            let limit = if n == 64 { u64::MAX } else { 1u64 << n };
            while m < limit && m >> 63 == 0 {
                sets.push(m);
                let c = m & m.wrapping_neg();
                let r = m + c;
                if r >= limit || r < m {
                    break;
                }
                m = r | (((m ^ r) >> 2) / c);
            }
        }
        Self::new(n, sets)
    }

    /// The family of all unions A cup B with A from self, B from other.
    pub fn star(&self, other: &Self) -> Self {
        let mut sets = BTreeSet::new();
        for &a in &self.sets {
            for &b in &other.sets {
                sets.insert(a | b);
            }
        }
        ExplicitFamily { n: self.n.max(other.n), sets }
    }

    pub fn translate(&self, x: u32) -> Result<Self> {
        Self::new(
            self.n + x as usize,
            self.sets.iter().map(|&m| m << x).collect::<Vec<u64>>(),
        )
    }
}

/// Recursive partition of the k-subsets of {1..n} into elementary families.
///
/// On a power-of-two ground set the interval is halved and every split of k
/// across the halves is partitioned recursively; parts are emitted with the
/// left-half count ascending. Base cases (k <= 2 or interval size <= 2)
/// emit one single-block family. Other sizes run at the next power of two
/// and shrink every block back into {1..n}, dropping starved families.
pub fn partition_pnk(n: u64, k: u64) -> Vec<ElementaryFamily> {
    if k > n || n == 0 {
        return Vec::new();
    }
    if n.is_power_of_two() {
        return partition_interval(1, n as i64, k);
    }
    let big = n.next_power_of_two();
    partition_interval(1, big as i64, k)
        .into_iter()
        .filter_map(|f| f.restrict_to(n as i64))
        .collect()
}

fn partition_interval(lo: i64, hi: i64, k: u64) -> Vec<ElementaryFamily> {
    let n = (hi - lo + 1) as u64;
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![ElementaryFamily::trivial()];
    }
    if k <= 2 || n <= 2 {
        return vec![ElementaryFamily::single(lo, hi, k as u8).unwrap()];
    }
    let mid = lo + (n / 2) as i64 - 1;
    let mut out = Vec::new();
    for i in 0..=k {
        let left = partition_interval(lo, mid, i);
        let right = partition_interval(mid + 1, hi, k - i);
        for lf in &left {
            for rf in &right {
                out.push(lf.product(rf).unwrap());
            }
        }
    }
    out
}

/// Sum of square roots of family sizes.
pub fn partition_cost(parts: &[ElementaryFamily]) -> f64 {
    parts.iter().map(|f| (f.size() as f64).sqrt()).sum()
}

/// Closed-form cost bound (2+sqrt(2))^{k-1} c^{k-1} / sqrt(k) * (2n/k)^{k/2}.
pub fn pi_upper_bound(n: u64, k: u64, c: f64) -> f64 {
    let k_f = k as f64;
    let log = (k_f - 1.0) * ((2.0 + std::f64::consts::SQRT_2).ln() + c.ln())
        - 0.5 * k_f.ln()
        + 0.5 * k_f * (2.0 * n as f64 / k_f).ln();
    log.exp()
}

/// sum_{i=1}^{k-1} (k/i)^{i/2} (k/(k-i))^{(k-i)/2} / sqrt(i(k-i)),
/// evaluated in log space.
pub fn halving_cost_sum(k: u64) -> f64 {
    (1..k)
        .map(|i| {
            let (i_f, k_f) = (i as f64, k as f64);
            let j_f = (k - i) as f64;
            let log = 0.5 * i_f * (k_f / i_f).ln() + 0.5 * j_f * (k_f / j_f).ln()
                - 0.5 * (i_f * j_f).ln();
            log.exp()
        })
        .sum()
}

/// Largest observed ratio halving_cost_sum(k) / sqrt(2^k / k) over 2 <= k <= k_max.
pub fn halving_cost_ratio_sup(k_max: u64) -> f64 {
    (2..=k_max)
        .map(|k| halving_cost_sum(k) / (std::f64::consts::LN_2 * k as f64 * 0.5 - 0.5 * (k as f64).ln()).exp())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct RecurrenceRow {
    pub n: u64,
    pub k: u64,
    pub parts: usize,
    pub cost: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Runs the partition over a (power-of-two n) x k grid and compares its
/// cost against sqrt(binom(n,k)) on base cells and against the closed-form
/// recurrence bound (2+sqrt(2))^{k-1} c^{k-1} / sqrt(k) * (n/k)^{k/2}
/// elsewhere.
pub fn recurrence_bound_check(n_max: u64, k_max: u64, c: f64) -> Result<Vec<RecurrenceRow>> {
    if !n_max.is_power_of_two() || n_max > 1024 || k_max > 8 {
        return Err(Error::InfeasibleParams(format!(
            "need power-of-two n_max <= 1024 and k_max <= 8; got {n_max}, {k_max}"
        )));
    }
    let mut rows = Vec::new();
    let mut n = 2;
    while n <= n_max {
        for k in 1..=k_max.min(n) {
            let parts = partition_pnk(n, k);
            let cost = partition_cost(&parts);
            let bound = if n.min(k) <= 2 {
                (binomial(n, k) as f64).sqrt()
            } else {
                let k_f = k as f64;
                ((k_f - 1.0) * ((2.0 + std::f64::consts::SQRT_2).ln() + c.ln())
                    - 0.5 * k_f.ln()
                    + 0.5 * k_f * (n as f64 / k_f).ln())
                .exp()
            };
            rows.push(RecurrenceRow { n, k, parts: parts.len(), cost, bound, ok: cost <= bound });
        }
        n *= 2;
    }
    Ok(rows)
}

/// Certifies that `parts` are pairwise disjoint and together cover every
/// k-subset of {1..n}, by ranking each enumerated member set into a bitmap.
pub fn verify_cover(n: u64, k: u64, parts: &[ElementaryFamily]) -> Result<bool> {
    let total = binomial(n, k);
    if total > COVER_CHECK_CAP {
        return Err(Error::ExplosionGuard(total, COVER_CHECK_CAP));
    }
    let total = total as usize;
    let mut bitmap = vec![0u64; (total + 63) / 64];
    // binom table for colex ranking.
    let mut table = vec![vec![0u128; k as usize + 1]; n as usize + 1];
    for i in 0..=n as usize {
        for j in 0..=k as usize {
            table[i][j] = binomial(i as u64, j as u64);
        }
    }
    for part in parts {
        for mask in part.enumerate()? {
            if mask.count_ones() as u64 != k || (n < 64 && mask >> n != 0) {
                return Ok(false);
            }
            // Colex rank: sum over the j-th smallest element e (0-based) of
            // binom(e, j+1).
            let mut rank = 0usize;
            let mut m = mask;
            let mut j = 0usize;
            while m != 0 {
                let e = m.trailing_zeros() as usize;
                rank += table[e][j + 1] as usize;
                j += 1;
                m &= m - 1;
            }
            let (w, b) = (rank / 64, rank % 64);
            if bitmap[w] >> b & 1 == 1 {
                return Ok(false); // duplicate across families
            }
            bitmap[w] |= 1 << b;
        }
    }
    let set: u32 = bitmap.iter().map(|w| w.count_ones()).sum();
    Ok(set as usize == total)
}

/// One family per line, blocks as "[lo..hi]:k" separated by spaces; the
/// trivial family prints as "*".
pub fn partition_to_text(parts: &[ElementaryFamily]) -> String {
    let mut s = String::new();
    for part in parts {
        if part.blocks().is_empty() {
            s.push('*');
        } else {
            let mut first = true;
            for &(ival, k) in part.blocks() {
                if !first {
                    s.push(' ');
                }
                write!(s, "[{}..{}]:{}", ival.lo, ival.hi, k).unwrap();
                first = false;
            }
        }
        s.push('\n');
    }
    s
}

pub fn partition_from_text(text: &str) -> Result<Vec<ElementaryFamily>> {
    let mut parts = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "*" {
            parts.push(ElementaryFamily::trivial());
            continue;
        }
        let mut blocks = Vec::new();
        for tok in line.split_whitespace() {
            let bad = || Error::Parse(format!("bad block `{tok}`"));
            let rest = tok.strip_prefix('[').ok_or_else(bad)?;
            let (range, k) = rest.split_once("]:").ok_or_else(bad)?;
            let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
            blocks.push((
                IntegerInterval::new(
                    lo.parse().map_err(|_| bad())?,
                    hi.parse().map_err(|_| bad())?,
                )?,
                k.parse().map_err(|_| bad())?,
            ));
        }
        parts.push(ElementaryFamily::new(blocks)?);
    }
    Ok(parts)
}
