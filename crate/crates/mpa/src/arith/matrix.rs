use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use super::{CycScalar, Rational};
use crate::{Error, Result};

/// Dense matrix over a cyclotomic field `Q(zeta_N)`. All entries share the
/// matrix conductor. Zero-sized matrices are first-class citizens: maps in
/// and out of zero-dimensional spaces appear routinely during convolution.
///
/// All eliminations are exact: rows are combined with rational-coefficient
/// normalization and the pivot is the first nonzero entry found scanning
/// down the column. No floating point anywhere.
#[derive(Clone, PartialEq, Eq)]
pub struct CycMatrix {
    conductor: u32,
    rows: usize,
    cols: usize,
    entries: Vec<CycScalar>, // row-major
}

impl CycMatrix {
    pub fn zero(conductor: u32, rows: usize, cols: usize) -> Self {
        CycMatrix {
            conductor,
            rows,
            cols,
            entries: vec![CycScalar::zero(conductor); rows * cols],
        }
    }

    pub fn identity(conductor: u32, size: usize) -> Self {
        let mut m = Self::zero(conductor, size, size);
        for i in 0..size {
            m.set(i, i, CycScalar::one(conductor));
        }
        m
    }

    /// Scalar matrix `s * I`.
    pub fn scalar(conductor: u32, size: usize, s: &CycScalar) -> Self {
        let mut m = Self::zero(conductor, size, size);
        for i in 0..size {
            m.set(i, i, s.clone());
        }
        m
    }

    pub fn from_rows(conductor: u32, rows: Vec<Vec<CycScalar>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::ShapeMismatch {
                    context: format!("row {i} has {} entries, expected {ncols}", row.len()),
                });
            }
            for (j, e) in row.into_iter().enumerate() {
                if e.conductor() != conductor {
                    return Err(Error::ShapeMismatch {
                        context: format!(
                            "entry ({i},{j}) has conductor {}, expected {conductor}",
                            e.conductor()
                        ),
                    });
                }
                entries.push(e);
            }
        }
        Ok(CycMatrix {
            conductor,
            rows: nrows,
            cols: ncols,
            entries,
        })
    }

    pub fn from_fn(
        conductor: u32,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> CycScalar,
    ) -> Self {
        let mut m = Self::zero(conductor, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert_eq!(e.conductor(), conductor, "entry conductor mismatch");
                m.set(i, j, e);
            }
        }
        m
    }

    /// Re-expresses every entry in `Q(zeta_target)`; fails unless the
    /// current conductor divides `target`.
    pub fn lift(&self, target: u32) -> Result<CycMatrix> {
        let mut m = Self::zero(target, self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c).lift(target)?);
            }
        }
        Ok(m)
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &CycScalar {
        assert!(r < self.rows && c < self.cols, "index out of range");
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: CycScalar) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        assert_eq!(v.conductor(), self.conductor, "entry conductor mismatch");
        self.entries[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let e = self.get(i, j);
                if i == j {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
        })
    }

    pub fn add(&self, rhs: &CycMatrix) -> CycMatrix {
        self.check_same_shape(rhs, "add");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        CycMatrix {
            conductor: self.conductor,
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn sub(&self, rhs: &CycMatrix) -> CycMatrix {
        self.check_same_shape(rhs, "sub");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        CycMatrix {
            conductor: self.conductor,
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn neg(&self) -> CycMatrix {
        CycMatrix {
            conductor: self.conductor,
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn mul(&self, rhs: &CycMatrix) -> CycMatrix {
        assert_eq!(self.conductor, rhs.conductor, "conductor mismatch in mul");
        assert_eq!(
            self.cols, rhs.rows,
            "shape mismatch in mul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = CycMatrix::zero(self.conductor, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn mul_scalar(&self, s: &CycScalar) -> CycMatrix {
        CycMatrix {
            conductor: self.conductor,
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.mul(s)).collect(),
        }
    }

    pub fn mul_rational(&self, r: &Rational) -> CycMatrix {
        CycMatrix {
            conductor: self.conductor,
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.mul_rational(r)).collect(),
        }
    }

    /// `I + self`; shorthand for the ubiquitous factors `1 + X_a X_a*`.
    pub fn plus_identity(&self) -> CycMatrix {
        assert_eq!(self.rows, self.cols, "plus_identity needs a square matrix");
        self.add(&CycMatrix::identity(self.conductor, self.rows))
    }

    pub fn transpose(&self) -> CycMatrix {
        CycMatrix::from_fn(self.conductor, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    /// Vertical stack (shared column count).
    pub fn vstack(conductor: u32, parts: &[&CycMatrix]) -> CycMatrix {
        let cols = parts.first().map(|m| m.cols).unwrap_or(0);
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut out = CycMatrix::zero(conductor, rows, cols);
        let mut off = 0;
        for part in parts {
            assert_eq!(part.cols, cols, "vstack column mismatch");
            assert_eq!(part.conductor, conductor, "vstack conductor mismatch");
            for i in 0..part.rows {
                for j in 0..cols {
                    out.set(off + i, j, part.get(i, j).clone());
                }
            }
            off += part.rows;
        }
        out
    }

    /// Horizontal stack (shared row count).
    pub fn hstack(conductor: u32, parts: &[&CycMatrix]) -> CycMatrix {
        let rows = parts.first().map(|m| m.rows).unwrap_or(0);
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = CycMatrix::zero(conductor, rows, cols);
        let mut off = 0;
        for part in parts {
            assert_eq!(part.rows, rows, "hstack row mismatch");
            assert_eq!(part.conductor, conductor, "hstack conductor mismatch");
            for i in 0..rows {
                for j in 0..part.cols {
                    out.set(i, off + j, part.get(i, j).clone());
                }
            }
            off += part.cols;
        }
        out
    }

    pub fn block_diag(conductor: u32, parts: &[&CycMatrix]) -> CycMatrix {
        let rows = parts.iter().map(|m| m.rows).sum();
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = CycMatrix::zero(conductor, rows, cols);
        let (mut ro, mut co) = (0, 0);
        for part in parts {
            assert_eq!(part.conductor, conductor, "block_diag conductor mismatch");
            for i in 0..part.rows {
                for j in 0..part.cols {
                    out.set(ro + i, co + j, part.get(i, j).clone());
                }
            }
            ro += part.rows;
            co += part.cols;
        }
        out
    }

    /// Copy of rows `[start, start + len)`.
    pub fn row_block(&self, start: usize, len: usize) -> CycMatrix {
        assert!(start + len <= self.rows, "row block out of range");
        CycMatrix::from_fn(self.conductor, len, self.cols, |i, j| {
            self.get(start + i, j).clone()
        })
    }

    /// Copy of columns `[start, start + len)`.
    pub fn col_block(&self, start: usize, len: usize) -> CycMatrix {
        assert!(start + len <= self.cols, "column block out of range");
        CycMatrix::from_fn(self.conductor, self.rows, len, |i, j| {
            self.get(i, start + j).clone()
        })
    }

    fn check_same_shape(&self, rhs: &CycMatrix, op: &str) {
        assert_eq!(self.conductor, rhs.conductor, "conductor mismatch in {op}");
        assert!(
            self.rows == rhs.rows && self.cols == rhs.cols,
            "shape mismatch in {op}: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            rhs.rows,
            rhs.cols
        );
    }

    /// Reduced row echelon form. Returns the reduced matrix together with
    /// the pivot column of each nonzero row.
    pub fn rref(&self) -> (CycMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            // First nonzero entry scanning down the column.
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..m.cols {
                    let a = m.get(r, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(r, j, b);
                    m.set(p, j, a);
                }
            }
            let inv = m.get(r, c).inverse();
            for j in c..m.cols {
                let v = m.get(r, j).mul(&inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in c..m.cols {
                    let v = m.get(i, j).sub(&f.mul(m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Canonical kernel basis from the reduced echelon form: one column per
    /// free variable, with a 1 in the free position. Returns a matrix whose
    /// columns span `{x : self * x = 0}`.
    pub fn kernel(&self) -> CycMatrix {
        let (rr, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = CycMatrix::zero(self.conductor, self.cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            out.set(fc, k, CycScalar::one(self.conductor));
            for (row, &pc) in pivots.iter().enumerate() {
                out.set(pc, k, rr.get(row, fc).neg());
            }
        }
        out
    }

    /// Solves `self * X = rhs` exactly. Returns `None` when inconsistent;
    /// free variables (if any) are set to zero.
    pub fn solve(&self, rhs: &CycMatrix) -> Option<CycMatrix> {
        assert_eq!(self.conductor, rhs.conductor, "conductor mismatch in solve");
        assert_eq!(self.rows, rhs.rows, "row mismatch in solve");
        let aug = CycMatrix::hstack(self.conductor, &[self, rhs]);
        let (rr, pivots) = aug.rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return None; // a pivot landed in the right-hand block
        }
        let mut x = CycMatrix::zero(self.conductor, self.cols, rhs.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(pc, j, rr.get(row, self.cols + j).clone());
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Result<CycMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let aug = CycMatrix::hstack(
            self.conductor,
            &[self, &CycMatrix::identity(self.conductor, self.rows)],
        );
        let (rr, pivots) = aug.rref();
        let rank = pivots.iter().filter(|&&c| c < self.cols).count();
        if rank < self.rows {
            return Err(Error::SingularMatrix {
                size: self.rows,
                rank,
            });
        }
        Ok(rr.col_block(self.cols, self.cols))
    }

    /// Determinant by forward elimination with exact pivoting.
    pub fn det(&self) -> CycScalar {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let mut det = CycScalar::one(self.conductor);
        for c in 0..m.cols {
            let Some(p) = (c..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                return CycScalar::zero(self.conductor);
            };
            if p != c {
                det = det.neg();
                for j in 0..m.cols {
                    let a = m.get(c, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(c, j, b);
                    m.set(p, j, a);
                }
            }
            let pivot = m.get(c, c).clone();
            det = det.mul(&pivot);
            let inv = pivot.inverse();
            for i in c + 1..m.rows {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).mul(&inv);
                for j in c..m.cols {
                    let v = m.get(i, j).sub(&f.mul(m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    /// Largest coefficient bit size across entries; for audit logging only.
    pub fn bit_size(&self) -> u64 {
        self.entries.iter().map(|e| e.bit_size()).max().unwrap_or(0)
    }
}

impl fmt::Debug for CycMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CycMatrix({}x{}; N={})", self.rows, self.cols, self.conductor)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl Serialize for CycMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<&CycScalar>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect();
        let mut st = serializer.serialize_struct("CycMatrix", 4)?;
        st.serialize_field("conductor", &self.conductor)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for CycMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            conductor: u32,
            rows: usize,
            cols: usize,
            entries: Vec<Vec<CycScalar>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.entries.len() != raw.rows {
            return Err(serde::de::Error::custom(format!(
                "expected {} rows, got {}",
                raw.rows,
                raw.entries.len()
            )));
        }
        for row in &raw.entries {
            if row.len() != raw.cols {
                return Err(serde::de::Error::custom(format!(
                    "expected {} columns, got {}",
                    raw.cols,
                    row.len()
                )));
            }
        }
        let m = CycMatrix::from_rows(raw.conductor, raw.entries).map_err(serde::de::Error::custom)?;
        if m.nrows() != raw.rows || m.ncols() != raw.cols {
            // from_rows infers 0 columns for an empty row list; trust the header.
            return Ok(CycMatrix::zero(raw.conductor, raw.rows, raw.cols));
        }
        Ok(m)
    }
}
