//! Dense complex matrices, row-major, with the tensor-product helpers the
//! rest of the toolkit is built on.
//!
//! Multipartite index convention: a composite space H_1 ⊗ H_2 ⊗ ... ⊗ H_N is
//! indexed with party 1 as the most significant digit, i.e. `kron(a, b)` puts
//! `a` on the slow index. Flat distribution/correlator indices elsewhere in
//! the crate use the opposite (party-1-fastest) order; the two conventions
//! never mix because matrices are only ever addressed through this module.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![C_ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C_ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self { rows, cols, entries }
    }

    /// Square matrix from a real diagonal.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, Complex64::new(*d, 0.0));
        }
        m
    }

    /// Real entries, row-major.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix needs {} real entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        })
    }

    /// Column vector |k> in dimension `dim`.
    pub fn basis_ket(dim: usize, k: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m.set(k, 0, C_ONE);
        m
    }

    /// Column vector with the given amplitudes.
    pub fn ket(amplitudes: &[Complex64]) -> Self {
        Self { rows: amplitudes.len(), cols: 1, entries: amplitudes.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let entries = self.entries.iter().map(|a| a * factor).collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == C_ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    /// Kronecker product; `self` occupies the slow (most significant) index.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for ra in 0..self.rows {
            for ca in 0..self.cols {
                let a = self.get(ra, ca);
                if a == C_ZERO {
                    continue;
                }
                for rb in 0..other.rows {
                    for cb in 0..other.cols {
                        out.set(ra * other.rows + rb, ca * other.cols + cb, a * other.get(rb, cb));
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, other.rows, "trace_product: inner dimension mismatch");
        assert_eq!(self.rows, other.cols, "trace_product: outer dimension mismatch");
        let mut acc = C_ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self.get(r, k) * other.get(k, r);
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Largest entry magnitude of self − other.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude of self − self†.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= tol
    }

    /// (self + self†)/2 — snaps tolerance-level asymmetry to exactly Hermitian.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        self.add(&adj).scale_re(0.5)
    }

    /// Reorders the tensor factors of a square multipartite matrix.
    /// `perm[k]` is the old position of the factor placed at new position `k`.
    pub fn permute_subsystems(&self, dims: &[usize], perm: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.rows || !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "permute_subsystems: dims product {} does not match {}x{}",
                total, self.rows, self.cols
            )));
        }
        if perm.len() != dims.len() {
            return Err(Error::ShapeMismatch("permutation length mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
            seen[p] = true;
        }
        let k = dims.len();
        let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        // map[old flat index] = new flat index
        let mut map = vec![0usize; total];
        let mut multi = vec![0usize; k];
        for (old, slot) in map.iter_mut().enumerate() {
            let mut rem = old;
            for f in (0..k).rev() {
                multi[f] = rem % dims[f];
                rem /= dims[f];
            }
            let mut new = 0usize;
            for f in 0..k {
                new = new * new_dims[f] + multi[perm[f]];
            }
            *slot = new;
        }
        let mut out = Self::zeros(total, total);
        for r in 0..total {
            for c in 0..total {
                out.set(map[r], map[c], self.get(r, c));
            }
        }
        Ok(out)
    }

    /// Traces out every tensor factor except `keep`.
    pub fn partial_trace_except(&self, dims: &[usize], keep: usize) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.rows || !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "partial_trace_except: dims product {} does not match {}x{}",
                total, self.rows, self.cols
            )));
        }
        if keep >= dims.len() {
            return Err(Error::InvalidArgument("kept subsystem out of range".into()));
        }
        let d = dims[keep];
        // Stride of the kept factor inside the flat index.
        let stride: usize = dims[keep + 1..].iter().product();
        let mut out = Self::zeros(d, d);
        for r in 0..total {
            let ik = (r / stride) % d;
            let base = r - ik * stride;
            for jk in 0..d {
                let c = base + jk * stride;
                let v = out.get(ik, jk) + self.get(r, c);
                out.set(ik, jk, v);
            }
        }
        Ok(out)
    }
}

/// Folds `kron` over the factors, first factor most significant.
pub fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty(), "kron_all of empty list");
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = acc.kron(f);
    }
    acc
}

/// Kronecker product of two matrices (spec name for `ComplexMatrix::kron`).
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// |v><v| for a column vector v.
pub fn outer(v: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(v.cols(), 1, "outer product needs a column vector");
    v.matmul(&v.adjoint())
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let e = self.get(r, c);
                write!(f, "{:+.4}{:+.4}i ", e.re, e.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = MatrixWire {
            rows: self.rows,
            cols: self.cols,
            data: self.entries.iter().map(|e| [e.re, e.im]).collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = MatrixWire::deserialize(deserializer)?;
        let entries: Vec<Complex64> =
            wire.data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        ComplexMatrix::new(wire.rows, wire.cols, entries).map_err(D::Error::custom)
    }
}
