//! Small dense complex linear algebra: SVD, Moore-Penrose pseudo-inverse,
//! Hermitian solves.
//!
//! Matrices in this artifact are tiny (at most a few tens of rows by a few
//! columns), so the SVD is a one-sided Jacobi iteration: accurate at small
//! scale and free of external dependencies. Storage is row-major.

use num_complex::Complex64;
use thiserror::Error;

/// Iteration cap for the Jacobi SVD.
pub const SVD_SWEEP_CAP: usize = 100;

/// Convergence threshold: a sweep finishes when every normalized
/// off-diagonal column correlation is below this.
pub const SVD_OFFDIAG_TOL: f64 = 1e-14;

/// Rank decision threshold, relative to the largest singular value.
pub const RANK_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("SVD failed to converge after {0} sweeps")]
    Convergence(usize),
    #[error("Gram matrix is numerically singular (column {0})")]
    SingularGram(usize),
}

/// Dense complex matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols));
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        ComplexMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Real diagonal matrix.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermitian(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "dimension mismatch in matrix product"
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= s;
        }
        out
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(other.data.iter()) {
            *z -= w;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Squared Euclidean norm of row `r`.
    pub fn row_norm_sqr(&self, r: usize) -> f64 {
        self.row(r).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Squared Euclidean norm of column `c`.
    pub fn col_norm_sqr(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self[(r, c)].norm_sqr()).sum()
    }

    /// Stack `blocks` on top of each other (all must share the column count).
    pub fn vstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        assert!(blocks.iter().all(|b| b.cols == cols));
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Copy of rows `lo..hi`.
    pub fn row_slice(&self, lo: usize, hi: usize) -> ComplexMatrix {
        assert!(lo < hi && hi <= self.rows);
        ComplexMatrix {
            rows: hi - lo,
            cols: self.cols,
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Economy-size SVD: `H = left · diag(singular) · rightᴴ` with
/// `r = min(rows, cols)`, singular values sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    /// M×r, orthonormal columns.
    pub left: ComplexMatrix,
    /// r singular values, descending, non-negative.
    pub singular: Vec<f64>,
    /// N×r, orthonormal columns.
    pub right: ComplexMatrix,
}

/// One-sided Jacobi SVD. Columns of a working copy of `H` are rotated
/// pairwise until mutually orthogonal; their norms become the singular
/// values and the accumulated rotations the right singular vectors.
pub fn svd(h: &ComplexMatrix) -> Result<Svd, NumericsError> {
    assert!(h.is_finite(), "svd input must be finite");
    if h.rows() < h.cols() {
        // run on Hᴴ and swap the factor roles
        let s = svd(&h.hermitian())?;
        return Ok(Svd {
            left: s.right,
            singular: s.singular,
            right: s.left,
        });
    }

    let m = h.rows();
    let n = h.cols();
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);

    let mut converged = false;
    for _sweep in 0..SVD_SWEEP_CAP {
        let mut max_off = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                // 2×2 Gram block of columns p, q
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let denom = (alpha * beta).sqrt();
                if denom <= 0.0 {
                    continue;
                }
                let off = gamma.norm() / denom;
                max_off = max_off.max(off);
                if off <= SVD_OFFDIAG_TOL {
                    continue;
                }
                // unitary rotation zeroing the off-diagonal Gram entry:
                //   [c           s·e^{iφ}]
                //   [-s·e^{-iφ}  c       ]
                let g_abs = gamma.norm();
                let phase = gamma / g_abs;
                let tau = (beta - alpha) / (2.0 * g_abs);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let s_fwd = phase * s; // s·e^{iφ}
                let s_bwd = phase.conj() * s; // s·e^{-iφ}
                for r in 0..m {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)];
                    a[(r, p)] = ap * c - aq * s_bwd;
                    a[(r, q)] = ap * s_fwd + aq * c;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c - vq * s_bwd;
                    v[(r, q)] = vp * s_fwd + vq * c;
                }
            }
        }
        if max_off <= SVD_OFFDIAG_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        // a final check: single-column matrices converge trivially
        if n > 1 {
            return Err(NumericsError::Convergence(SVD_SWEEP_CAP));
        }
    }

    // column norms are the singular values
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|c| a.col_norm_sqr(c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let sigma_max = norms[order[0]];
    let mut singular = Vec::with_capacity(n);
    let mut left = ComplexMatrix::zeros(m, n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut filled: Vec<Vec<Complex64>> = Vec::new();
    for (k, &c) in order.iter().enumerate() {
        let s = norms[c];
        singular.push(s);
        let ucol: Vec<Complex64> = if s > sigma_max * f64::EPSILON && s > 0.0 {
            (0..m).map(|r| a[(r, c)] / s).collect()
        } else {
            // null column: complete the basis so `left` stays orthonormal
            orthonormal_completion(m, &filled)
        };
        for r in 0..m {
            left[(r, k)] = ucol[r];
        }
        filled.push(ucol);
        for r in 0..n {
            right[(r, k)] = v[(r, c)];
        }
    }
    Ok(Svd {
        left,
        singular,
        right,
    })
}

/// Find a unit vector of length `m` orthogonal to all vectors in `existing`.
fn orthonormal_completion(m: usize, existing: &[Vec<Complex64>]) -> Vec<Complex64> {
    for seed in 0..m {
        let mut cand = vec![Complex64::new(0.0, 0.0); m];
        cand[seed] = Complex64::new(1.0, 0.0);
        for prev in existing {
            let proj: Complex64 = prev
                .iter()
                .zip(cand.iter())
                .map(|(p, c)| p.conj() * c)
                .sum();
            for (cz, pz) in cand.iter_mut().zip(prev.iter()) {
                *cz -= proj * pz;
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for z in &mut cand {
                *z /= norm;
            }
            return cand;
        }
    }
    // existing spans the whole space; cannot happen for r ≤ m
    unreachable!("orthonormal completion requested beyond full basis");
}

/// Moore-Penrose pseudo-inverse together with the effective rank used.
#[derive(Clone, Debug)]
pub struct Pinv {
    pub matrix: ComplexMatrix,
    /// Number of singular values above `RANK_REL_TOL · σ_max`.
    pub rank: usize,
}

impl Pinv {
    /// True when the rank decision dropped at least one singular value.
    pub fn rank_deficient(&self, h: &ComplexMatrix) -> bool {
        self.rank < h.rows().min(h.cols())
    }
}

/// Moore-Penrose pseudo-inverse via the SVD, with singular values below
/// `RANK_REL_TOL · σ_max` treated as zero.
pub fn pinv(h: &ComplexMatrix) -> Result<Pinv, NumericsError> {
    let s = svd(h)?;
    let sigma_max = s.singular.first().copied().unwrap_or(0.0);
    let cut = sigma_max * RANK_REL_TOL;
    let r = s.singular.len();
    let mut inv_diag = vec![0.0; r];
    let mut rank = 0;
    for (i, &sv) in s.singular.iter().enumerate() {
        if sv > cut && sv > 0.0 {
            inv_diag[i] = 1.0 / sv;
            rank += 1;
        }
    }
    // H⁺ = V · diag(1/σ) · Uᴴ
    let matrix = s
        .right
        .mul(&ComplexMatrix::from_real_diag(&inv_diag))
        .mul(&s.left.hermitian());
    Ok(Pinv { matrix, rank })
}

/// Diagonal of `(HᴴH)⁻¹` for a full-column-rank `H`, via a Cholesky
/// factorization of the Gram matrix (independent of the SVD path).
pub fn gram_inverse_diagonal(h: &ComplexMatrix) -> Result<Vec<f64>, NumericsError> {
    let n = h.cols();
    let gram = h.hermitian().mul(h);
    let l = cholesky(&gram)?;
    // (G⁻¹)_ii = ‖L⁻¹ e_i‖²
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..n {
            let rhs = if r == i {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mut acc = rhs;
            for k in 0..r {
                acc -= l[(r, k)] * y[k];
            }
            y[r] = acc / l[(r, r)];
        }
        out.push(y.iter().map(|z| z.norm_sqr()).sum());
    }
    Ok(out)
}

/// Cholesky factor L (lower triangular) of a Hermitian positive-definite
/// matrix. Fails with `SingularGram` when a pivot falls below the
/// numerical floor.
fn cholesky(g: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    let n = g.rows();
    assert_eq!(n, g.cols());
    let max_diag = (0..n).map(|i| g[(i, i)].re).fold(0.0f64, f64::max);
    let floor = max_diag * RANK_REL_TOL;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !d.is_finite() || d <= floor || d <= 0.0 {
            return Err(NumericsError::SingularGram(j));
        }
        let lj = d.sqrt();
        l[(j, j)] = Complex64::new(lj, 0.0);
        for i in (j + 1)..n {
            let mut acc = g[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / lj;
        }
    }
    Ok(l)
}
