//! Brute-force Fock matrices built from integer basis codes.
//!
//! Fermionic modes use the Jordan-Wigner string: creation on bit `j` of code
//! `s` carries `(-1)^popcount(s & ((1 << j) - 1))`. Bosonic modes are mixed
//! radix digits and the matrices are truncated at the cutoff.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, Ket, ModeSet, OpKind, OpString, OpSum, Statistics, MAX_BASIS_DIM};

/// Column-sparse matrix over an enumerated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleMatrix {
    dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl OracleMatrix {
    fn identity(dim: usize, scalar: Complex64) -> Self {
        Self {
            dim,
            cols: (0..dim).map(|c| vec![(c, scalar)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, c: usize) -> &[(usize, Complex64)] {
        &self.cols[c]
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col]
            .iter()
            .filter(|&&(r, _)| r == row)
            .map(|&(_, v)| v)
            .sum()
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for (c, col) in self.cols.iter().enumerate() {
            let x = v[c];
            if x == Complex64::default() {
                continue;
            }
            for &(r, m) in col {
                out[r] += m * x;
            }
        }
        out
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &OracleMatrix) -> OracleMatrix {
        let cols = rhs
            .cols
            .iter()
            .map(|col| {
                let mut acc: Vec<Complex64> = vec![Complex64::default(); self.dim];
                let mut touched = Vec::new();
                for &(k, b) in col {
                    for &(r, a) in &self.cols[k] {
                        if acc[r] == Complex64::default() {
                            touched.push(r);
                        }
                        acc[r] += a * b;
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                touched.into_iter().map(|r| (r, acc[r])).collect()
            })
            .collect();
        OracleMatrix {
            dim: self.dim,
            cols,
        }
    }

    pub fn add(&self, rhs: &OracleMatrix) -> OracleMatrix {
        let cols = self
            .cols
            .iter()
            .zip(&rhs.cols)
            .map(|(a, b)| {
                let mut col = a.clone();
                col.extend_from_slice(b);
                col.sort_by_key(|&(r, _)| r);
                let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(col.len());
                for (r, v) in col {
                    match merged.last_mut() {
                        Some((lr, lv)) if *lr == r => *lv += v,
                        _ => merged.push((r, v)),
                    }
                }
                merged
            })
            .collect();
        OracleMatrix {
            dim: self.dim,
            cols,
        }
    }

    pub fn scaled(&self, s: Complex64) -> OracleMatrix {
        OracleMatrix {
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|&(r, v)| (r, v * s)).collect())
                .collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] += v;
            }
        }
        m
    }
}

/// Enumerated basis plus single-mode operator matrices for one mode set.
#[derive(Clone, Debug)]
pub struct DenseFock {
    modes: Arc<ModeSet>,
    radix: usize,
    dim: usize,
}

impl DenseFock {
    pub fn new(modes: &Arc<ModeSet>) -> Result<Self> {
        let dim = modes.basis_dimension();
        if dim > MAX_BASIS_DIM as u128 {
            return Err(Error::BasisTooLarge {
                dimension: dim,
                limit: MAX_BASIS_DIM,
            });
        }
        Ok(Self {
            modes: Arc::clone(modes),
            radix: modes.cutoff() as usize + 1,
            dim: dim as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    fn digit(&self, code: usize, pos: usize) -> usize {
        (code / self.radix.pow(pos as u32)) % self.radix
    }

    pub fn code_of(&self, state: &FockState) -> Result<usize> {
        let mut code = 0usize;
        for (mode, n) in state.occupations() {
            let pos = self.modes.position(mode).ok_or(Error::UnknownMode(mode))?;
            if n as usize >= self.radix {
                return Err(Error::CutoffOverflow {
                    mode,
                    cutoff: self.modes.cutoff(),
                });
            }
            code += n as usize * self.radix.pow(pos as u32);
        }
        Ok(code)
    }

    pub fn state_of(&self, code: usize) -> FockState {
        FockState::from_occupations(
            self.modes
                .modes()
                .iter()
                .enumerate()
                .map(|(pos, m)| (m.index, self.digit(code, pos) as u32)),
        )
    }

    pub fn vector_of(&self, ket: &Ket) -> Result<DVector<Complex64>> {
        if **ket.modes() != *self.modes {
            return Err(Error::ModeSetMismatch);
        }
        let mut v = DVector::zeros(self.dim);
        for (s, a) in ket.terms() {
            v[self.code_of(s)?] += *a;
        }
        Ok(v)
    }

    pub fn ket_of(&self, v: &DVector<Complex64>) -> Ket {
        let terms = v
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(c, a)| (self.state_of(c), *a));
        Ket::from_terms(&self.modes, terms).expect("codes map to valid states")
    }

    /// Matrix of `b^dag` (or `b`) on one mode.
    pub fn single(&self, mode: usize, kind: OpKind) -> Result<OracleMatrix> {
        let pos = self.modes.position(mode).ok_or(Error::UnknownMode(mode))?;
        let stride = self.radix.pow(pos as u32);
        let cutoff = self.radix - 1;
        let mut cols = vec![Vec::new(); self.dim];
        for (s, col) in cols.iter_mut().enumerate() {
            let d = self.digit(s, pos);
            let entry = match (self.modes.statistics(), kind) {
                (Statistics::Fermionic, OpKind::Create) if d == 0 => {
                    let below = (s & (stride - 1)).count_ones();
                    Some((s + stride, if below % 2 == 0 { 1.0 } else { -1.0 }))
                }
                (Statistics::Fermionic, OpKind::Annihilate) if d == 1 => {
                    let below = (s & (stride - 1)).count_ones();
                    Some((s - stride, if below % 2 == 0 { 1.0 } else { -1.0 }))
                }
                (Statistics::Bosonic, OpKind::Create) if d < cutoff => {
                    Some((s + stride, ((d + 1) as f64).sqrt()))
                }
                (Statistics::Bosonic, OpKind::Annihilate) if d > 0 => {
                    Some((s - stride, (d as f64).sqrt()))
                }
                _ => None,
            };
            if let Some((r, v)) = entry {
                col.push((r, Complex64::new(v, 0.0)));
            }
        }
        Ok(OracleMatrix {
            dim: self.dim,
            cols,
        })
    }

    pub fn string(&self, op: &OpString) -> Result<OracleMatrix> {
        let mut m = OracleMatrix::identity(self.dim, op.scalar);
        for &(mode, kind) in &op.factors {
            m = m.mul(&self.single(mode, kind)?);
        }
        Ok(m)
    }

    pub fn sum(&self, op: &OpSum) -> Result<OracleMatrix> {
        let mut m = OracleMatrix {
            dim: self.dim,
            cols: vec![Vec::new(); self.dim],
        };
        for t in &op.terms {
            m = m.add(&self.string(t)?);
        }
        Ok(m)
    }

    pub fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim);
        v[0] = Complex64::new(1.0, 0.0);
        v
    }
}

/// Explicit matrix of `op` over the enumerated basis of `modes`.
pub fn dense_oracle(modes: &Arc<ModeSet>, op: &OpSum) -> Result<DMatrix<Complex64>> {
    Ok(DenseFock::new(modes)?.sum(op)?.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn identity_string() {
        let modes = ModeSet::fermionic(["1", "2"]);
        let m = dense_oracle(&modes, &OpSum::identity()).unwrap();
        assert_eq!(m, DMatrix::identity(4, 4));
    }

    #[test]
    fn creation_on_one_mode() {
        let modes = ModeSet::fermionic(["1"]);
        let m = dense_oracle(&modes, &OpString::create(0).into()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        assert_eq!(m, expected);
        let n = dense_oracle(&modes, &OpString::number(0).into()).unwrap();
        assert_eq!(n, DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0), c(1.0)])));
    }

    #[test]
    fn annihilate_second_of_two() {
        let modes = ModeSet::fermionic(["1", "2"]);
        let f = DenseFock::new(&modes).unwrap();
        let b2 = f.single(1, OpKind::Annihilate).unwrap();
        // |1,2> is code 3, |1> is code 1
        assert_eq!(b2.get(1, 3), c(-1.0));
        assert_eq!(b2.column(3).len(), 1);
    }

    #[test]
    fn codes_round_trip() {
        let modes = ModeSet::bosonic(["a", "b", "c"], 3).unwrap();
        let f = DenseFock::new(&modes).unwrap();
        for code in 0..f.dim() {
            assert_eq!(f.code_of(&f.state_of(code)).unwrap(), code);
        }
    }

    #[test]
    fn too_large() {
        let modes = ModeSet::fermionic((0..13).map(|i| i.to_string()));
        assert!(matches!(
            DenseFock::new(&modes),
            Err(Error::BasisTooLarge { .. })
        ));
    }
}
