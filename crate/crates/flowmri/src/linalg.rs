//! Sparse matrix assembly and a banded LU direct solver with partial
//! pivoting. The flow discretization produces band-structured systems on
//! the 2D grid, so a banded direct solver covers every linear solve in the
//! pipeline deterministically.

use crate::error::{Error, Result};

/// Triplet (COO) accumulator; duplicate entries are summed on conversion.
#[derive(Debug, Clone)]
pub struct Triplets {
    pub n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.entries.push((i as u32, j as u32, v));
        }
    }

    pub fn transposed(&self) -> Triplets {
        Triplets {
            n: self.n,
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect(),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let n = self.n;
        let mut row_counts = vec![0usize; n + 1];
        for &(i, _, _) in &self.entries {
            row_counts[i as usize + 1] += 1;
        }
        for k in 0..n {
            row_counts[k + 1] += row_counts[k];
        }
        let mut cols = vec![0u32; self.entries.len()];
        let mut vals = vec![0.0; self.entries.len()];
        let mut cursor = row_counts.clone();
        for &(i, j, v) in &self.entries {
            let p = cursor[i as usize];
            cols[p] = j;
            vals[p] = v;
            cursor[i as usize] += 1;
        }
        // sort each row by column and merge duplicates
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        let mut out_rows = vec![0usize; n + 1];
        for i in 0..n {
            let lo = row_counts[i];
            let hi = row_counts[i + 1];
            let mut row: Vec<(u32, f64)> =
                cols[lo..hi].iter().cloned().zip(vals[lo..hi].iter().cloned()).collect();
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == c {
                    acc += row[k].1;
                    k += 1;
                }
                out_cols.push(c);
                out_vals.push(acc);
            }
            out_rows[i + 1] = out_cols.len();
        }
        CsrMatrix { n, rows: out_rows, cols: out_cols, vals: out_vals }
    }

    /// Assemble into band storage and factorize.
    pub fn factorize(&self) -> Result<BandLu> {
        let csr = self.to_csr();
        csr.factorize_band()
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    rows: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.rows[i]..self.rows[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc;
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.rows[i]..self.rows[i + 1] {
                y[self.cols[k] as usize] += self.vals[k] * x[i];
            }
        }
        y
    }

    fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0usize;
        let mut ku = 0usize;
        for i in 0..self.n {
            for k in self.rows[i]..self.rows[i + 1] {
                let j = self.cols[k] as usize;
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Band LU with partial pivoting. Row `i` of the working storage keeps
    /// columns `[i - kl, i + ku + kl]`; the extra `kl` superdiagonals hold
    /// pivoting fill.
    pub fn factorize_band(&self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = self.bandwidths();
        let w = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for k in self.rows[i]..self.rows[i + 1] {
                let j = self.cols[k] as usize;
                data[i * w + (j + kl - i)] = self.vals[k];
            }
        }
        let mut piv = vec![0u32; n];
        for k in 0..n {
            // pivot search in column k among rows k..=k+kl
            let i_hi = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = 0.0f64;
            for i in k..=i_hi {
                let off = k + kl;
                if off >= i && off - i < w {
                    let v = data[i * w + (off - i)].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
            }
            if best < 1e-300 {
                return Err(Error::SingularSystem(format!("zero pivot at row {}", k)));
            }
            piv[k] = p as u32;
            if p != k {
                // swap only the active columns j in [k, k+kl+ku]; the L
                // multipliers already stored in either row stay in place
                let shift = p - k;
                let mut row_k = vec![0.0; w];
                let mut row_p = vec![0.0; w];
                row_k.copy_from_slice(&data[k * w..(k + 1) * w]);
                row_p.copy_from_slice(&data[p * w..(p + 1) * w]);
                // row k slots o >= kl hold columns j = k + o - kl >= k,
                // previously sitting in row p storage at offset o - shift
                for o in kl..w {
                    data[k * w + o] = if o >= shift { row_p[o - shift] } else { 0.0 };
                }
                // row p slots o >= kl - shift hold columns j >= k,
                // previously sitting in row k storage at offset o + shift
                for o in (kl - shift)..w {
                    data[p * w + o] = if o + shift < w { row_k[o + shift] } else { 0.0 };
                }
            }
            let akk = data[k * w + kl];
            for i in (k + 1)..=i_hi {
                let off = k + kl - i; // position of column k in row i
                let m = data[i * w + off] / akk;
                data[i * w + off] = m; // store the multiplier
                if m != 0.0 {
                    // row_i[k+1 ..= k+kl+ku] -= m * row_k[same columns]
                    let j_hi = (k + kl + ku).min(n - 1);
                    for j in (k + 1)..=j_hi {
                        let vk = data[k * w + (j + kl - k)];
                        if vk != 0.0 {
                            data[i * w + (j + kl - i)] -= m * vk;
                        }
                    }
                }
            }
        }
        Ok(BandLu { n, kl, ku, w, data, piv })
    }
}

/// Factorized band matrix `P A = L U`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
    piv: Vec<u32>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.w);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k] as usize;
            if p != k {
                x.swap(k, p);
            }
            let i_hi = (k + kl).min(n - 1);
            for i in (k + 1)..=i_hi {
                let m = self.data[i * w + (k + kl - i)];
                if m != 0.0 {
                    x[i] -= m * x[k];
                }
            }
        }
        for k in (0..n).rev() {
            let j_hi = (k + kl + ku).min(n - 1);
            let mut acc = x[k];
            for j in (k + 1)..=j_hi {
                acc -= self.data[k * w + (j + kl - k)] * x[j];
            }
            x[k] = acc / self.data[k * w + kl];
        }
        x
    }
}
