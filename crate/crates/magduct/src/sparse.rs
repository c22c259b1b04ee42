//! Minimal complex sparse matrices (COO assembly, CSR application).
//!
//! The assembled forms are Hermitian with at most nine nonzeros per row
//! (bilinear elements on a tensor grid), so a hand-rolled CSR with a
//! straightforward matvec is both simpler and faster here than pulling in
//! a general sparse-algebra stack.

use num_complex::Complex64;

/// Triplet accumulator used during element assembly.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl CooBuilder {
    pub fn new(n: usize) -> Self {
        CooBuilder {
            n,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        CooBuilder {
            n,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: Complex64) {
        debug_assert!(r < self.n && c < self.n);
        if v != Complex64::ZERO {
            self.rows.push(r as u32);
            self.cols.push(c as u32);
            self.vals.push(v);
        }
    }

    /// Sort, merge duplicates and freeze into CSR.
    pub fn build(self) -> CsrMatrix {
        let n = self.n;
        let nnz = self.vals.len();
        // counting sort by row, then sort each row segment by column
        let mut counts = vec![0usize; n + 1];
        for &r in &self.rows {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut order: Vec<u32> = vec![0; nnz];
        let mut cursor = counts.clone();
        for (k, &r) in self.rows.iter().enumerate() {
            order[cursor[r as usize]] = k as u32;
            cursor[r as usize] += 1;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0usize);
        let mut rowbuf: Vec<(u32, Complex64)> = Vec::new();
        for r in 0..n {
            rowbuf.clear();
            for &k in &order[counts[r]..counts[r + 1]] {
                rowbuf.push((self.cols[k as usize], self.vals[k as usize]));
            }
            rowbuf.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < rowbuf.len() {
                let c = rowbuf[i].0;
                let mut v = rowbuf[i].1;
                let mut j = i + 1;
                while j < rowbuf.len() && rowbuf[j].0 == c {
                    v += rowbuf[j].1;
                    j += 1;
                }
                indices.push(c);
                values.push(v);
                i = j;
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }
}

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = Complex64::ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            y[r] = acc;
        }
    }

    /// `Y = A X` for `k` column-major vectors of length `n`.
    pub fn matmat(&self, x: &[Complex64], y: &mut [Complex64], k: usize) {
        debug_assert_eq!(x.len(), self.n * k);
        debug_assert_eq!(y.len(), self.n * k);
        for j in 0..k {
            let (xs, ys) = (&x[j * self.n..(j + 1) * self.n], &mut y[j * self.n..(j + 1) * self.n]);
            self.matvec(xs, ys);
        }
    }

    /// `max_i sum_j |A(i,j)|`, a cheap upper bound on the spectral norm.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry, `max |A(i,j) - conj(A(j,i))|`.
    pub fn hermiticity_defect(&self) -> f64 {
        // build the conjugate transpose pattern walk
        let n = self.n;
        let mut colptr = vec![0usize; n + 1];
        for &c in &self.indices {
            colptr[c as usize + 1] += 1;
        }
        for i in 0..n {
            colptr[i + 1] += colptr[i];
        }
        let mut trow = vec![0u32; self.nnz()];
        let mut tval = vec![Complex64::ZERO; self.nnz()];
        let mut cursor = colptr.clone();
        for r in 0..n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k] as usize;
                trow[cursor[c]] = r as u32;
                tval[cursor[c]] = self.values[k];
                cursor[c] += 1;
            }
        }
        // rows of the transpose are sorted because CSR rows were scanned in order
        let mut defect = 0.0f64;
        for r in 0..n {
            let a = &self.indices[self.indptr[r]..self.indptr[r + 1]];
            let av = &self.values[self.indptr[r]..self.indptr[r + 1]];
            let b = &trow[colptr[r]..colptr[r + 1]];
            let bv = &tval[colptr[r]..colptr[r + 1]];
            let (mut i, mut j) = (0usize, 0usize);
            while i < a.len() || j < b.len() {
                let ca = a.get(i).copied().unwrap_or(u32::MAX);
                let cb = b.get(j).copied().unwrap_or(u32::MAX);
                if ca == cb {
                    defect = defect.max((av[i] - bv[j].conj()).norm());
                    i += 1;
                    j += 1;
                } else if ca < cb {
                    defect = defect.max(av[i].norm());
                    i += 1;
                } else {
                    defect = defect.max(bv[j].norm());
                    j += 1;
                }
            }
        }
        defect
    }

    /// Main diagonal (zeros where absent).
    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut d = vec![Complex64::ZERO; self.n];
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.indices[k] as usize == r {
                    d[r] = self.values[k];
                }
            }
        }
        d
    }

    /// `a·A + b·B` through a COO round-trip; patterns need not match.
    pub fn linear_combination(a: f64, ma: &CsrMatrix, b: f64, mb: &CsrMatrix) -> CsrMatrix {
        assert_eq!(ma.n, mb.n);
        let mut coo = CooBuilder::with_capacity(ma.n, ma.nnz() + mb.nnz());
        for r in 0..ma.n {
            for k in ma.indptr[r]..ma.indptr[r + 1] {
                coo.add(r, ma.indices[k] as usize, a * ma.values[k]);
            }
            for k in mb.indptr[r]..mb.indptr[r + 1] {
                coo.add(r, mb.indices[k] as usize, b * mb.values[k]);
            }
        }
        coo.build()
    }

    /// Dense copy, column-major `n × n` (for oracles and the dense
    /// fallback path).
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k] as usize)] = self.values[k];
            }
        }
        m
    }

    /// Plain-text triplet lines `row col re im`, row-major order.
    pub fn write_triplets<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                writeln!(
                    w,
                    "{} {} {:.17e} {:.17e}",
                    r, self.indices[k], self.values[k].re, self.values[k].im
                )?;
            }
        }
        Ok(())
    }
}
