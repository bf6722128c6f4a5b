use std::collections::BTreeMap;

/// Degree of a multilinear polynomial; the zero polynomial has degree
/// `MinusInfinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    MinusInfinity,
    Finite(u32),
}

/// A sparse multilinear polynomial over variables `x_1 .. x_n` in {-1, +1}.
///
/// Terms are keyed by subset bitmask: bit `i-1` of the mask selects variable
/// `x_i`. Coefficients that are exactly zero are never stored, so the zero
/// polynomial is the empty map.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearPolynomial {
    n: usize,
    terms: BTreeMap<u32, f64>,
}

impl MultilinearPolynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(0, c);
        p
    }

    /// A single signed monomial `coeff * prod_{i in mask} x_i`.
    pub fn monomial(n: usize, mask: u32, coeff: f64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(mask, coeff);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn coefficient(&self, mask: u32) -> f64 {
        self.terms.get(&mask).copied().unwrap_or(0.0)
    }

    /// Adds `coeff` to the term at `mask`, dropping the entry if the sum is
    /// exactly zero.
    pub fn add_term(&mut self, mask: u32, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(mask).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&mask);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (mask, c) in other.terms() {
            out.add_term(mask, c);
        }
        out
    }

    pub fn degree(&self) -> Degree {
        self.terms
            .keys()
            .map(|m| m.count_ones())
            .max()
            .map_or(Degree::MinusInfinity, Degree::Finite)
    }

    /// Union of the variables appearing in any term.
    pub fn support_mask(&self) -> u32 {
        self.terms.keys().fold(0, |acc, m| acc | m)
    }

    /// Evaluates at the point encoded by `index`: bit `i-1` of `index` is 0
    /// for `x_i = +1` and 1 for `x_i = -1`.
    pub fn evaluate_index(&self, index: u32) -> f64 {
        self.terms
            .iter()
            .map(|(&mask, &c)| {
                let sign = if (index & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                c * sign
            })
            .sum()
    }

    /// Sum of absolute values of the coefficients.
    pub fn weight(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }
}
