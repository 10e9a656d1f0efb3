//! Second-order jets: value, gradient and (symmetric) Hessian of a scalar
//! quantity with respect to the chart coordinates, propagated exactly
//! through arithmetic by forward-mode rules.
//!
//! The Hessian is stored as a packed lower triangle so symmetry holds by
//! construction. Operations that consume one derivative order (see
//! [`Jet::partial`]) return jets whose own Hessian is zeroed; checks that
//! chain two derivative-consuming operations only ever read values of the
//! final result.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
fn tri(i: usize, j: usize) -> usize {
    // i >= j
    i * (i + 1) / 2 + j
}

/// Value, gradient and symmetric Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub v: f64,
    g: Vec<f64>,
    h: Vec<f64>, // packed lower triangle, len dim*(dim+1)/2
}

impl Jet {
    pub fn constant(v: f64, dim: usize) -> Self {
        Jet {
            v,
            g: vec![0.0; dim],
            h: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(0.0, dim)
    }

    /// The coordinate function `x^idx` seeded at value `v`.
    pub fn variable(v: f64, idx: usize, dim: usize) -> Self {
        let mut j = Self::constant(v, dim);
        j.g[idx] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn grad(&self, i: usize) -> f64 {
        self.g[i]
    }

    pub fn grad_vec(&self) -> &[f64] {
        &self.g
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.h[tri(i, j)]
        } else {
            self.h[tri(j, i)]
        }
    }

    /// Jet of the partial derivative along coordinate `l`: its value is
    /// `g[l]`, its gradient the `l`-th Hessian row. Third derivatives are
    /// not tracked, so the Hessian of the result is zero.
    pub fn partial(&self, l: usize) -> Jet {
        let d = self.dim();
        let mut g = vec![0.0; d];
        for i in 0..d {
            g[i] = self.hess(l, i);
        }
        Jet {
            v: self.g[l],
            g,
            h: vec![0.0; d * (d + 1) / 2],
        }
    }

    /// Directional derivative along a constant vector.
    pub fn dir(&self, dirv: &[f64]) -> f64 {
        self.g.iter().zip(dirv).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut r = self.clone();
        r.v += o.v;
        for (a, b) in r.g.iter_mut().zip(&o.g) {
            *a += b;
        }
        for (a, b) in r.h.iter_mut().zip(&o.h) {
            *a += b;
        }
        r
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut r = self.clone();
        r.v -= o.v;
        for (a, b) in r.g.iter_mut().zip(&o.g) {
            *a -= b;
        }
        for (a, b) in r.h.iter_mut().zip(&o.h) {
            *a -= b;
        }
        r
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.v *= s;
        for a in r.g.iter_mut() {
            *a *= s;
        }
        for a in r.h.iter_mut() {
            *a *= s;
        }
        r
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let d = self.dim();
        let mut r = Jet::constant(self.v * o.v, d);
        for i in 0..d {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        for i in 0..d {
            for j in 0..=i {
                r.h[tri(i, j)] = self.hess(i, j) * o.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i]
                    + self.v * o.hess(i, j);
            }
        }
        r
    }

    /// Quotient; the caller is responsible for rejecting zero denominators.
    pub fn div(&self, o: &Jet) -> Jet {
        let d = self.dim();
        let w = self.v / o.v;
        let mut r = Jet::constant(w, d);
        for i in 0..d {
            r.g[i] = (self.g[i] - w * o.g[i]) / o.v;
        }
        for i in 0..d {
            for j in 0..=i {
                r.h[tri(i, j)] = (self.hess(i, j)
                    - w * o.hess(i, j)
                    - r.g[i] * o.g[j]
                    - r.g[j] * o.g[i])
                    / o.v;
            }
        }
        r
    }

    /// Composition with a scalar function given by `(f, f', f'')` at `self.v`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let d = self.dim();
        let mut r = Jet::constant(f0, d);
        for i in 0..d {
            r.g[i] = f1 * self.g[i];
        }
        for i in 0..d {
            for j in 0..=i {
                r.h[tri(i, j)] = f1 * self.hess(i, j) + f2 * self.g[i] * self.g[j];
            }
        }
        r
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet {
        let e = libm::exp(self.v);
        self.chain(e, e, e)
    }

    /// Square root; caller rejects negative arguments.
    pub fn sqrt(&self) -> Jet {
        let s = libm::sqrt(self.v);
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    /// Integer power by repeated multiplication (exact for the AD rules).
    pub fn powi(&self, n: i32) -> Jet {
        let d = self.dim();
        if n == 0 {
            return Jet::constant(1.0, d);
        }
        let mut base = if n < 0 {
            Jet::constant(1.0, d).div(self)
        } else {
            self.clone()
        };
        let mut k = n.unsigned_abs();
        let mut acc = Jet::constant(1.0, d);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }
}

/// Seed a full coordinate environment at `point`.
pub fn seed_point(point: &[f64]) -> Vec<Jet> {
    let d = point.len();
    point
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet::variable(x, i, d))
        .collect()
}
