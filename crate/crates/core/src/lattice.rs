//! D-dimensional lattice graphs.
//!
//! Nodes are D-tuples of digits with digit `d` ranging over `0..M_d`; two nodes
//! are linked when their tuples differ in exactly one position, so every
//! axis-aligned line of nodes is a complete graph `K_{M_d}`.
//!
//! Node indices are 1-based at the public boundary. The first dimension is the
//! least significant digit: `x = 1 + Σ_d β(x,d) · ∏_{j<d} M_j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the node count of dense matrices.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Dimension sizes `(M_1, …, M_D)` of a lattice supergraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LatticeSpec {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl LatticeSpec {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Domain("lattice needs at least one dimension".into()));
        }
        if let Some(bad) = dims.iter().find(|&&m| m < 2) {
            return Err(Error::Domain(format!(
                "every dimension size must be at least 2, got {bad}"
            )));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc: usize = 1;
        for &m in &dims {
            strides.push(acc);
            acc = acc
                .checked_mul(m)
                .ok_or_else(|| Error::Domain("node count overflows usize".into()))?;
        }
        Ok(Self { dims, strides })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of lattice dimensions `D`.
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// `N = ∏ M_d`.
    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// `γ = Σ (M_d − 1)`, the common node degree and the adjacency scale.
    pub fn gamma(&self) -> usize {
        self.dims.iter().map(|m| m - 1).sum()
    }

    /// Number of eigen-indices `2^D`.
    pub fn eigen_index_count(&self) -> usize {
        1 << self.rank()
    }

    /// Mixed-radix digits of the 1-based node index `x`.
    pub fn index_to_tuple(&self, x: usize) -> Result<MixedRadixIndex> {
        let n = self.node_count();
        if x == 0 || x > n {
            return Err(Error::Domain(format!("node index {x} outside 1..={n}")));
        }
        Ok(MixedRadixIndex {
            digits: self.digits_of(x - 1),
        })
    }

    /// Inverse of [`index_to_tuple`](Self::index_to_tuple).
    pub fn tuple_to_index(&self, index: &MixedRadixIndex) -> Result<usize> {
        let digits = index.digits();
        if digits.len() != self.rank() {
            return Err(Error::Domain(format!(
                "expected {} digits, got {}",
                self.rank(),
                digits.len()
            )));
        }
        let mut x = 0;
        for (d, (&digit, &m)) in digits.iter().zip(&self.dims).enumerate() {
            if digit >= m {
                return Err(Error::Domain(format!(
                    "digit {digit} in dimension {} exceeds radix {m}",
                    d + 1
                )));
            }
            x += digit * self.strides[d];
        }
        Ok(x + 1)
    }

    /// True iff the digit sequences of the 1-based nodes `i` and `j` differ in
    /// exactly one position. Out-of-range indices are never adjacent.
    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        let n = self.node_count();
        if i == 0 || j == 0 || i > n || j > n {
            return false;
        }
        self.adjacent0(i - 1, j - 1)
    }

    pub(crate) fn adjacent0(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let mut differing = 0;
        for (&m, &s) in self.dims.iter().zip(&self.strides) {
            if (i / s) % m != (j / s) % m {
                differing += 1;
                if differing > 1 {
                    return false;
                }
            }
        }
        differing == 1
    }

    pub(crate) fn digits_of(&self, x0: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| (x0 / s) % m)
            .collect()
    }

    /// 0-based neighbours of the 0-based node `x0` with larger index, ascending.
    pub(crate) fn upper_neighbors(&self, x0: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.gamma());
        for (&m, &s) in self.dims.iter().zip(&self.strides) {
            let digit = (x0 / s) % m;
            for v in digit + 1..m {
                out.push(x0 + (v - digit) * s);
            }
        }
        out.sort_unstable();
        out
    }

    /// All 0-based neighbours of `x0`.
    pub(crate) fn neighbors(&self, x0: usize) -> impl Iterator<Item = usize> + '_ {
        self.dims
            .iter()
            .zip(&self.strides)
            .flat_map(move |(&m, &s)| {
                let digit = (x0 / s) % m;
                let base = x0 - digit * s;
                (0..m)
                    .filter(move |&v| v != digit)
                    .map(move |v| base + v * s)
            })
    }

    /// Fails with [`Error::ResourceCap`] when `N` exceeds `cap`.
    pub fn check_dense_cap(&self, cap: usize) -> Result<()> {
        let nodes = self.node_count();
        if nodes > cap {
            Err(Error::ResourceCap { nodes, cap })
        } else {
            Ok(())
        }
    }

    /// Dense 0/1 adjacency of the lattice, bounded by [`DEFAULT_DENSE_CAP`].
    pub fn adjacency_dense(&self) -> Result<DMatrix<f64>> {
        self.adjacency_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn adjacency_dense_capped(&self, cap: usize) -> Result<DMatrix<f64>> {
        self.check_dense_cap(cap)?;
        let n = self.node_count();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in self.neighbors(i) {
                a[(i, j)] = 1.0;
            }
        }
        Ok(a)
    }

    /// Closed-form spectrum of the lattice adjacency, one entry per eigen-index
    /// `j ∈ {0,1}^D` in lexicographic order (`j_1` most significant).
    /// Coincident eigenvalues from different indices are not merged.
    pub fn deterministic_spectrum(&self) -> Vec<SpectralAtom> {
        (0..self.eigen_index_count())
            .map(|k| {
                let bits = eigen_bits(k, self.rank());
                let mut eigenvalue = 0.0;
                let mut multiplicity = 1;
                for (&m, &b) in self.dims.iter().zip(&bits) {
                    if b == 0 {
                        eigenvalue += (m - 1) as f64;
                    } else {
                        eigenvalue -= 1.0;
                        multiplicity *= m - 1;
                    }
                }
                SpectralAtom {
                    index: bits,
                    eigenvalue,
                    multiplicity,
                }
            })
            .collect()
    }
}

impl TryFrom<Vec<usize>> for LatticeSpec {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<LatticeSpec> for Vec<usize> {
    fn from(spec: LatticeSpec) -> Self {
        spec.dims
    }
}

impl std::fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("x"))
    }
}

/// Digits `β(x, 1..=D)` of a node, least significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MixedRadixIndex {
    digits: Vec<usize>,
}

impl MixedRadixIndex {
    pub fn new(digits: impl Into<Vec<usize>>) -> Self {
        Self {
            digits: digits.into(),
        }
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// Number of positions where the two digit sequences differ.
    pub fn hamming(&self, other: &Self) -> usize {
        self.digits
            .iter()
            .zip(&other.digits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// One eigen-index of the lattice spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAtom {
    /// Bits `(j_1, …, j_D)`.
    pub index: Vec<u8>,
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

impl SpectralAtom {
    /// The index as a bit string, e.g. `"01"`.
    pub fn index_label(&self) -> String {
        self.index.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

/// Bits of eigen-index `k` for a rank-`rank` lattice, first dimension most
/// significant.
pub fn eigen_bits(k: usize, rank: usize) -> Vec<u8> {
    (0..rank)
        .map(|d| ((k >> (rank - 1 - d)) & 1) as u8)
        .collect()
}
