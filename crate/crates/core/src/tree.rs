//! Perfect binary decision trees with polynomial leaf labels.
//!
//! A tree of depth `d` queries one variable per internal node; along any
//! root-to-leaf path the queried variables are distinct, and the leaf
//! polynomial avoids all of them. Nodes live in flat heap-style arrays: the
//! node reached by path `v` sits at index `2^{|v|} - 1 + bits(v)`, where bit
//! `j` of `bits(v)` is 1 exactly when the `(j+1)`-st step went down the `-1`
//! branch.

use crate::error::{Error, Result};
use crate::families::ElementaryFamily;
use crate::fourier::{BooleanFunction, MAX_VARS};
use crate::poly::MultilinearPolynomial;
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt::Write as _;

pub const MAX_DEPTH: usize = 24;

/// Cap on (variable assignments) x (label assignments) for exhaustive
/// enumeration.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// A root-to-node path: `len` steps, bit `j` of `bits` set for a `-1` branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Path {
    pub len: usize,
    pub bits: u32,
}

impl Path {
    pub const ROOT: Path = Path { len: 0, bits: 0 };

    pub fn new(len: usize, bits: u32) -> Self {
        Path { len, bits }
    }

    /// Heap-array index of the node this path reaches.
    pub fn node_index(&self) -> usize {
        (1usize << self.len) - 1 + self.bits as usize
    }

    /// Signs of the branches taken, in order.
    pub fn signs(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len).map(move |j| if self.bits >> j & 1 == 1 { -1 } else { 1 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    n: usize,
    d: usize,
    /// Queried variable (1-based) per internal node, heap order; 2^d - 1 long.
    internal: Vec<usize>,
    /// Leaf labels indexed by full path bits; 2^d long.
    leaves: Vec<MultilinearPolynomial>,
}

impl DecisionTree {
    pub fn new(
        n: usize,
        d: usize,
        internal: Vec<usize>,
        leaves: Vec<MultilinearPolynomial>,
    ) -> Result<Self> {
        if n == 0 || n > u32::BITS as usize || d > MAX_DEPTH || d > n {
            return Err(Error::InvalidTree(format!(
                "need 1 <= n <= 32 and d <= min(n, {MAX_DEPTH}); got n={n}, d={d}"
            )));
        }
        if internal.len() != (1 << d) - 1 || leaves.len() != 1 << d {
            return Err(Error::InvalidTree(format!(
                "expected {} internal nodes and {} leaves, got {} and {}",
                (1 << d) - 1,
                1 << d,
                internal.len(),
                leaves.len()
            )));
        }
        let tree = DecisionTree { n, d, internal, leaves };
        tree.validate().map_err(Error::InvalidTree)?;
        Ok(tree)
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for leaf_bits in 0..1u32 << self.d {
            let mut seen = 0u32;
            for depth in 0..self.d {
                let idx = Path::new(depth, leaf_bits & ((1 << depth) - 1)).node_index();
                let var = self.internal[idx];
                if var == 0 || var > self.n {
                    return Err(format!(
                        "node at depth {depth} on path bits {leaf_bits:#b} queries x_{var}, out of range 1..={}",
                        self.n
                    ));
                }
                if seen >> (var - 1) & 1 == 1 {
                    return Err(format!(
                        "variable x_{var} queried twice on path bits {leaf_bits:#b}"
                    ));
                }
                seen |= 1 << (var - 1);
            }
            let leaf = &self.leaves[leaf_bits as usize];
            if leaf.n() != self.n {
                return Err(format!(
                    "leaf {leaf_bits:#b} is over {} variables, tree has {}",
                    leaf.n(),
                    self.n
                ));
            }
            let clash = leaf.support_mask() & seen;
            if clash != 0 {
                return Err(format!(
                    "leaf {leaf_bits:#b} mentions queried variable x_{}",
                    clash.trailing_zeros() + 1
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.d
    }

    /// Variable queried at the internal node reached by `v` (|v| < d).
    pub fn queried_variable(&self, v: Path) -> usize {
        self.internal[v.node_index()]
    }

    /// Leaf label at a full-length path.
    pub fn leaf(&self, bits: u32) -> &MultilinearPolynomial {
        &self.leaves[bits as usize]
    }

    pub fn leaves(&self) -> &[MultilinearPolynomial] {
        &self.leaves
    }

    /// Maximum leaf degree (with the zero polynomial at degree "-inf").
    pub fn degree(&self) -> crate::poly::Degree {
        self.leaves.iter().map(|p| p.degree()).max().unwrap()
    }

    /// Fraction of leaves with nonzero labels.
    pub fn density(&self) -> f64 {
        let nonzero = self.leaves.iter().filter(|p| !p.is_zero()).count();
        nonzero as f64 / (1u64 << self.d) as f64
    }

    /// Walks the path selected by `x` (table-index encoding: bit i-1 set for
    /// x_i = -1) and evaluates the reached leaf.
    pub fn evaluate_index(&self, x: u32) -> f64 {
        let mut bits = 0u32;
        for depth in 0..self.d {
            let var = self.internal[Path::new(depth, bits).node_index()];
            if x >> (var - 1) & 1 == 1 {
                bits |= 1 << depth;
            }
        }
        self.leaves[bits as usize].evaluate_index(x)
    }

    /// Dense truth table of the computed function.
    pub fn truth_table(&self) -> Result<BooleanFunction> {
        if self.n > MAX_VARS {
            return Err(Error::VariableCount(self.n));
        }
        let values = (0..1u32 << self.n).map(|x| self.evaluate_index(x)).collect();
        BooleanFunction::new(self.n, values)
    }

    /// The subtree rooted at `v`, of depth d - |v|.
    pub fn subtree(&self, v: Path) -> Result<DecisionTree> {
        if v.len > self.d || v.bits >> v.len != 0 {
            return Err(Error::InvalidPath { len: v.len, depth: self.d });
        }
        let d = self.d - v.len;
        let internal = (0..d)
            .flat_map(|j| {
                (0..1u32 << j).map(move |b| {
                    let bits = v.bits | (b << v.len);
                    self.internal[Path::new(v.len + j, bits).node_index()]
                })
            })
            .collect();
        let leaves = (0..1u32 << d)
            .map(|b| self.leaves[(v.bits | (b << v.len)) as usize].clone())
            .collect();
        // Bypasses the validating constructor only in spirit: subpaths of
        // valid paths stay valid, so validation cannot fail here.
        DecisionTree::new(self.n, d, internal, leaves)
    }

    /// The slice polynomial: for each member set S of the family and each
    /// leaf path v, adds `T(v) * 2^{-d} * prod_{i in S} v_i x_{q_i}` where
    /// `q_i` is the variable queried just before step i of the path.
    pub fn slice(&self, family: &SetFamilySpec) -> Result<MultilinearPolynomial> {
        let masks = family.masks(self.d)?;
        let scale = 1.0 / (1u64 << self.d) as f64;
        let mut out = MultilinearPolynomial::zero(self.n);
        for leaf_bits in 0..1u32 << self.d {
            let leaf = &self.leaves[leaf_bits as usize];
            if leaf.is_zero() {
                continue;
            }
            // Variables queried along this path, by step.
            let path_vars: Vec<usize> = (0..self.d)
                .map(|j| {
                    self.internal[Path::new(j, leaf_bits & ((1 << j) - 1)).node_index()]
                })
                .collect();
            for &set_mask in &masks {
                let mut var_mask = 0u32;
                let mut sign = 1.0;
                let mut m = set_mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize; // step i+1 of the path
                    var_mask |= 1 << (path_vars[i] - 1);
                    if leaf_bits >> i & 1 == 1 {
                        sign = -sign;
                    }
                    m &= m - 1;
                }
                for (term_mask, coeff) in leaf.terms() {
                    out.add_term(term_mask ^ var_mask, coeff * sign * scale);
                }
            }
        }
        Ok(out)
    }

    /// Checks that slicing is additive over a disjoint union of families.
    pub fn slice_additivity_check(
        &self,
        a: &SetFamilySpec,
        b: &SetFamilySpec,
    ) -> Result<bool> {
        let ma = a.masks(self.d)?;
        let mb = b.masks(self.d)?;
        if ma.iter().any(|m| mb.contains(m)) {
            return Err(Error::OverlappingFamilies);
        }
        let mut union = ma.clone();
        union.extend_from_slice(&mb);
        let joint = self.slice(&SetFamilySpec::Explicit(union))?;
        let split = self.slice(a)?.add(&self.slice(b)?);
        Ok(joint == split)
    }

    /// Line-based text form: "n d", internal variables in heap order, then
    /// one leaf per line as comma-separated "mask:coeff" pairs ("-" if zero).
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.d);
        let vars: Vec<String> = self.internal.iter().map(|v| v.to_string()).collect();
        s.push_str(&vars.join(" "));
        s.push('\n');
        for leaf in &self.leaves {
            if leaf.is_zero() {
                s.push_str("-\n");
            } else {
                let mut first = true;
                for (mask, coeff) in leaf.terms() {
                    if !first {
                        s.push(',');
                    }
                    write!(s, "{mask}:{coeff}").unwrap();
                    first = false;
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<DecisionTree> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty tree file".into()))?;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), "n")?;
        let d: usize = parse_field(it.next(), "d")?;
        let internal = if d == 0 {
            lines.next(); // the (empty) internal-node line
            Vec::new()
        } else {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("missing internal-node line".into()))?;
            line.split_whitespace()
                .map(|tok| parse_field(Some(tok), "variable index"))
                .collect::<Result<Vec<usize>>>()?
        };
        let mut leaves = Vec::with_capacity(1 << d);
        for _ in 0..1u32 << d {
            let line = lines.next().ok_or_else(|| Error::Parse("missing leaf line".into()))?;
            let mut p = MultilinearPolynomial::zero(n);
            if line != "-" {
                for pair in line.split(',') {
                    let (mask, coeff) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("bad term `{pair}`")))?;
                    let mask: u32 = mask
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad mask `{mask}`")))?;
                    let coeff: f64 = coeff
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad coefficient `{coeff}`")))?;
                    p.add_term(mask, coeff);
                }
            }
            leaves.push(p);
        }
        DecisionTree::new(n, d, internal, leaves)
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

/// A family of subsets of the path positions {1, ..., d}, given explicitly,
/// as all size-k subsets, or by an elementary family.
#[derive(Debug, Clone)]
pub enum SetFamilySpec {
    /// Subset bitmasks: bit i-1 stands for path position i.
    Explicit(Vec<u32>),
    /// All k-element subsets of {1, ..., d}.
    AllKSubsets { k: usize },
    Elementary(ElementaryFamily),
}

impl SetFamilySpec {
    pub fn empty() -> Self {
        SetFamilySpec::Explicit(Vec::new())
    }

    /// Member sets as bitmasks, checked against the depth of the host tree.
    pub fn masks(&self, d: usize) -> Result<Vec<u32>> {
        let masks = match self {
            SetFamilySpec::Explicit(masks) => masks.clone(),
            SetFamilySpec::AllKSubsets { k } => {
                if *k > d {
                    return Err(Error::LevelOutOfRange { k: *k, n: d });
                }
                (0..1u32 << d).filter(|m| m.count_ones() as usize == *k).collect()
            }
            SetFamilySpec::Elementary(ef) => ef
                .enumerate()?
                .into_iter()
                .map(|m| {
                    u32::try_from(m).map_err(|_| Error::FamilyOutOfRange { mask: m, d })
                })
                .collect::<Result<Vec<u32>>>()?,
        };
        let bound = if d >= 32 { u32::MAX } else { (1u32 << d) - 1 };
        for &m in &masks {
            if m & !bound != 0 {
                return Err(Error::FamilyOutOfRange { mask: m as u64, d });
            }
        }
        Ok(masks)
    }
}

/// Leaf label distributions for `random_tree`.
#[derive(Debug, Clone, Copy)]
pub enum LeafModel {
    /// Constant labels: 0 with probability 1 - density, else +-1 fairly.
    Pm01 { density: f64 },
    /// 0 with probability 1 - density, else a signed degree-k monomial in
    /// variables off the path.
    Monomial { k: usize, density: f64 },
}

/// Samples a valid tree; per-path distinctness holds by sampling without
/// replacement down each branch.
pub fn random_tree<R: Rng>(
    n: usize,
    d: usize,
    model: LeafModel,
    rng: &mut R,
) -> Result<DecisionTree> {
    if d > n || d > MAX_DEPTH || n == 0 || n > u32::BITS as usize {
        return Err(Error::InfeasibleParams(format!(
            "need 1 <= n <= 32 and d <= min(n, {MAX_DEPTH}); got n={n}, d={d}"
        )));
    }
    match model {
        LeafModel::Pm01 { density } | LeafModel::Monomial { density, .. } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(Error::ProbabilityRange(density));
            }
        }
    }
    if let LeafModel::Monomial { k, .. } = model {
        if k > n - d {
            return Err(Error::InfeasibleParams(format!(
                "monomial degree {k} exceeds the {} off-path variables",
                n - d
            )));
        }
    }

    let mut internal = vec![0usize; (1 << d) - 1];
    let mut leaves = vec![MultilinearPolynomial::zero(n); 1 << d];
    for leaf_bits in 0..1u32 << d {
        // Fill the path to this leaf; shared prefixes are overwritten with
        // the same draw order per node only when the node is first reached,
        // so check before sampling.
        let mut used = 0u32;
        for depth in 0..d {
            let idx = Path::new(depth, leaf_bits & ((1 << depth) - 1)).node_index();
            if internal[idx] == 0 {
                let avail: Vec<usize> =
                    (1..=n).filter(|v| used >> (v - 1) & 1 == 0).collect();
                internal[idx] = *avail.choose(rng).unwrap();
            }
            used |= 1 << (internal[idx] - 1);
        }
        let density = match model {
            LeafModel::Pm01 { density } | LeafModel::Monomial { density, .. } => density,
        };
        if rng.gen::<f64>() >= density {
            continue; // zero leaf
        }
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        match model {
            LeafModel::Pm01 { .. } => {
                leaves[leaf_bits as usize] = MultilinearPolynomial::constant(n, sign);
            }
            LeafModel::Monomial { k, .. } => {
                let mut avail: Vec<usize> =
                    (1..=n).filter(|v| used >> (v - 1) & 1 == 0).collect();
                avail.shuffle(rng);
                let mask = avail[..k].iter().fold(0u32, |m, v| m | 1 << (v - 1));
                leaves[leaf_bits as usize] = MultilinearPolynomial::monomial(n, mask, sign);
            }
        }
    }
    DecisionTree::new(n, d, internal, leaves)
}

/// Exhaustive generator over all valid trees with constant leaf labels drawn
/// from `labels`. Canonical order: variable indices ascending per node (root
/// most significant), then leaf labels lexicographically.
#[derive(Debug)]
pub struct TreeEnumerator {
    n: usize,
    d: usize,
    labels: Vec<f64>,
    /// Mixed-radix digits: internal choices (heap order) then leaf labels.
    digits: Vec<usize>,
    radices: Vec<usize>,
    done: bool,
}

/// Total count of valid (variables, labels) assignments, before the cap.
pub fn enumeration_count(n: usize, d: usize, labels: usize) -> u128 {
    let mut count = 1u128;
    for j in 0..d {
        count = count.saturating_mul(((n - j) as u128).saturating_pow(1 << j));
    }
    count.saturating_mul((labels as u128).saturating_pow(1 << d))
}

pub fn enumerate_trees(n: usize, d: usize, labels: &[f64]) -> Result<TreeEnumerator> {
    if d > n || d > MAX_DEPTH || n == 0 || labels.is_empty() {
        return Err(Error::InfeasibleParams(format!(
            "cannot enumerate trees with n={n}, d={d}, {} labels",
            labels.len()
        )));
    }
    let count = enumeration_count(n, d, labels.len());
    if count > ENUMERATION_CAP {
        return Err(Error::ExplosionGuard(count, ENUMERATION_CAP));
    }
    let mut radices = Vec::new();
    for j in 0..d {
        radices.extend(std::iter::repeat(n - j).take(1 << j));
    }
    radices.extend(std::iter::repeat(labels.len()).take(1 << d));
    Ok(TreeEnumerator {
        n,
        d,
        labels: labels.to_vec(),
        digits: vec![0; radices.len()],
        radices,
        done: false,
    })
}

impl TreeEnumerator {
    fn build(&self) -> DecisionTree {
        let internal_count = (1 << self.d) - 1;
        let mut internal = vec![0usize; internal_count];
        for depth in 0..self.d {
            for bits in 0..1u32 << depth {
                let idx = Path::new(depth, bits).node_index();
                // Resolve the digit as the c-th smallest unused variable on
                // this node's path.
                let mut used = 0u32;
                for j in 0..depth {
                    used |= 1 << (internal[Path::new(j, bits & ((1 << j) - 1)).node_index()] - 1);
                }
                let var = (1..=self.n)
                    .filter(|v| used >> (v - 1) & 1 == 0)
                    .nth(self.digits[idx])
                    .unwrap();
                internal[idx] = var;
            }
        }
        let leaves = (0..1usize << self.d)
            .map(|i| {
                MultilinearPolynomial::constant(self.n, self.labels[self.digits[internal_count + i]])
            })
            .collect();
        DecisionTree::new(self.n, self.d, internal, leaves).unwrap()
    }

    fn advance(&mut self) {
        for i in (0..self.digits.len()).rev() {
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                return;
            }
            self.digits[i] = 0;
        }
        self.done = true;
    }
}

impl Iterator for TreeEnumerator {
    type Item = DecisionTree;

    fn next(&mut self) -> Option<DecisionTree> {
        if self.done {
            return None;
        }
        let tree = self.build();
        self.advance();
        Some(tree)
    }
}
