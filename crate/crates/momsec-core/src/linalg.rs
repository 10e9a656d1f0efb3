//! Small dense linear algebra on f64 (and jet-valued Gauss-Jordan for the
//! Cayley construction). Problem sizes here are tiny (dimensions <= 14), so
//! plain Jacobi iterations and partial-pivot elimination are enough.

use alloc::vec;
use alloc::vec::Vec;

use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows);
        let mut m = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..o.cols {
                    m[(i, j)] += a * o[(k, j)];
                }
            }
        }
        m
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&o.data) {
            *a -= b;
        }
        m
    }

    pub fn add(&self, o: &Mat) -> Mat {
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&o.data) {
            *a += b;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` when singular
    /// (pivot below `1e-12` times the largest entry).
    pub fn inverse(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let scale = self.max_abs().max(1e-300);
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[(r, col)].abs() > a[(piv, col)].abs() {
                    piv = r;
                }
            }
            if a[(piv, col)].abs() < 1e-12 * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] -= f * a[(col, j)];
                    inv[(r, j)] -= f * inv[(col, j)];
                }
            }
        }
        Some(inv)
    }

    /// Singular values via Jacobi eigen-iteration on the Gram matrix.
    pub fn singular_values(&self) -> Vec<f64> {
        let (small, _big) = if self.rows <= self.cols {
            (self.matmul(&self.transpose()), ())
        } else {
            (self.transpose().matmul(self), ())
        };
        let mut eig = sym_eigenvalues(&small);
        for v in eig.iter_mut() {
            *v = libm::sqrt(v.max(0.0));
        }
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eig
    }

    /// Numerical rank with a relative threshold on singular values.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }

    /// Least-squares solve of `self * x = b` through the normal equations.
    /// Returns `(x, residual_inf_norm)`.
    pub fn lstsq(&self, b: &[f64]) -> Option<(Vec<f64>, f64)> {
        let at = self.transpose();
        let ata = at.matmul(self);
        let mut atb = vec![0.0; self.cols];
        for j in 0..self.cols {
            for i in 0..self.rows {
                atb[j] += self[(i, j)] * b[i];
            }
        }
        let inv = ata.inverse()?;
        let mut x = vec![0.0; self.cols];
        for i in 0..self.cols {
            for j in 0..self.cols {
                x[i] += inv[(i, j)] * atb[j];
            }
        }
        let mut res = 0.0f64;
        for i in 0..self.rows {
            let mut r = -b[i];
            for j in 0..self.cols {
                r += self[(i, j)] * x[j];
            }
            res = res.max(r.abs());
        }
        Some((x, res))
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off < 1e-28 * (1.0 + a.max_abs() * a.max_abs()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Gauss-Jordan inverse over jet entries (pivot decisions on values).
pub fn jet_mat_inverse(m: &[Vec<Jet>]) -> Option<Vec<Vec<Jet>>> {
    let n = m.len();
    let dj = m[0][0].dim();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, dj))
                .collect()
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |mx, j| mx.max(j.v.abs()))
        .max(1e-300);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].v.abs() > a[piv][col].v.abs() {
                piv = r;
            }
        }
        if a[piv][col].v.abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].div(&p);
            inv[col][j] = inv[col][j].div(&p);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col].clone();
            if f.v == 0.0 && f.grad_vec().iter().all(|&g| g == 0.0) {
                continue;
            }
            for j in 0..n {
                a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Some(inv)
}
