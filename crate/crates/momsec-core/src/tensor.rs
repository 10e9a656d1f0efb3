//! Antisymmetric tensor fields (differential forms and multivector fields)
//! in canonical sorted-index storage, and the pointwise Cartan/Schouten
//! calculus on their jet evaluations.
//!
//! Components are stored only on strictly increasing index tuples; any
//! access with permuted indices is resolved through the permutation sign,
//! so antisymmetry is structural rather than numerical.

use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{EvalError, Expr};
use crate::jet::Jet;

/// All strictly increasing `k`-tuples over `0..d`, lexicographically.
pub fn tuples(d: usize, k: usize) -> Vec<Vec<u8>> {
    if k > d {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..k as u8).collect();
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if (cur[i] as usize) < d - (k - i) {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Sort `idx` in place counting transposition parity; `None` on repeats.
pub fn sort_sign(idx: &mut [u8]) -> Option<f64> {
    let mut sign = 1.0;
    let n = idx.len();
    for i in 1..n {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for i in 1..n {
        if idx[i - 1] == idx[i] {
            return None;
        }
    }
    Some(sign)
}

/// Merge two sorted disjoint tuples, returning the interleave sign
/// (the parity of moving the concatenation `a ++ b` into sorted order).
pub fn merge_sign(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, f64)> {
    let mut idx: Vec<u8> = a.iter().chain(b.iter()).copied().collect();
    let sign = sort_sign(&mut idx)?;
    Some((idx, sign))
}

fn rank_of(d: usize, tuple: &[u8]) -> usize {
    // lexicographic rank in the enumeration of `tuples`
    let k = tuple.len();
    let mut rank = 0usize;
    let mut prev: i64 = -1;
    for (i, &t) in tuple.iter().enumerate() {
        for v in (prev + 1) as usize..t as usize {
            rank += binom(d - v - 1, k - i - 1);
        }
        prev = t as i64;
    }
    rank
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Scalar-like entries an antisymmetric table can hold.
pub trait Coeff: Clone {
    fn zero_like(&self) -> Self;
    fn neg_c(&self) -> Self;
    fn add_c(&self, o: &Self) -> Self;
}

impl Coeff for Jet {
    fn zero_like(&self) -> Self {
        Jet::zero(self.dim())
    }
    fn neg_c(&self) -> Self {
        self.neg()
    }
    fn add_c(&self, o: &Self) -> Self {
        self.add(o)
    }
}

impl Coeff for Expr {
    fn zero_like(&self) -> Self {
        Expr::zero()
    }
    fn neg_c(&self) -> Self {
        Expr::neg(self.clone())
    }
    fn add_c(&self, o: &Self) -> Self {
        Expr::add(self.clone(), o.clone())
    }
}

impl Coeff for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn neg_c(&self) -> Self {
        -self
    }
    fn add_c(&self, o: &Self) -> Self {
        self + o
    }
}

/// Totally antisymmetric degree-`k` tensor over a `d`-dimensional chart.
/// Whether it is a form or a multivector is decided by the operations
/// applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Antisym<T: Coeff> {
    dim: usize,
    degree: usize,
    zero: T,
    data: Vec<T>,
}

impl<T: Coeff> Antisym<T> {
    pub fn zeros(dim: usize, degree: usize, zero: T) -> Self {
        let n = binom(dim, degree);
        Antisym {
            dim,
            degree,
            data: vec![zero.clone(); n],
            zero,
        }
    }

    pub fn from_fn(dim: usize, degree: usize, zero: T, mut f: impl FnMut(&[u8]) -> T) -> Self {
        let data = tuples(dim, degree).iter().map(|t| f(t)).collect();
        Antisym {
            dim,
            degree,
            zero,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn comp(&self, sorted: &[u8]) -> &T {
        &self.data[rank_of(self.dim, sorted)]
    }

    pub fn comp_mut(&mut self, sorted: &[u8]) -> &mut T {
        &mut self.data[rank_of(self.dim, sorted)]
    }

    /// Set the canonical component for an arbitrary index order; the stored
    /// value absorbs the permutation sign.
    pub fn set(&mut self, idx: &[u8], value: T) {
        let mut key = idx.to_vec();
        let sign = sort_sign(&mut key).expect("repeated index");
        let v = if sign < 0.0 { value.neg_c() } else { value };
        *self.comp_mut(&key) = v;
    }

    /// Add into the component addressed by an arbitrary (possibly unsorted)
    /// index tuple; repeated indices contribute nothing.
    pub fn accumulate(&mut self, idx: &[u8], value: T) {
        let mut key = idx.to_vec();
        if let Some(sign) = sort_sign(&mut key) {
            let v = if sign < 0.0 { value.neg_c() } else { value };
            let slot = self.comp_mut(&key);
            *slot = slot.add_c(&v);
        }
    }

    /// Signed component for an arbitrary index tuple (zero on repeats).
    pub fn get(&self, idx: &[u8]) -> T {
        let mut key = idx.to_vec();
        match sort_sign(&mut key) {
            None => self.zero.clone(),
            Some(sign) => {
                let v = self.comp(&key);
                if sign < 0.0 {
                    v.neg_c()
                } else {
                    v.clone()
                }
            }
        }
    }

    pub fn map<U: Coeff>(&self, zero: U, mut f: impl FnMut(&T) -> U) -> Antisym<U> {
        Antisym {
            dim: self.dim,
            degree: self.degree,
            zero,
            data: self.data.iter().map(|t| f(t)).collect(),
        }
    }

    pub fn add(&self, o: &Antisym<T>) -> Antisym<T> {
        assert_eq!((self.dim, self.degree), (o.dim, o.degree));
        let mut r = self.clone();
        for (a, b) in r.data.iter_mut().zip(&o.data) {
            *a = a.add_c(b);
        }
        r
    }

    pub fn sub(&self, o: &Antisym<T>) -> Antisym<T> {
        self.add(&o.map(o.zero.clone(), |t| t.neg_c()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<u8>, &T)> {
        tuples(self.dim, self.degree).into_iter().zip(self.data.iter())
    }
}

impl Antisym<Expr> {
    pub fn eval(&self, env: &[Jet]) -> Result<Antisym<Jet>, EvalError> {
        let dim0 = env.first().map(|j| j.dim()).unwrap_or(0);
        let mut data = Vec::with_capacity(self.data.len());
        for e in &self.data {
            data.push(e.eval(env)?);
        }
        Ok(Antisym {
            dim: self.dim,
            degree: self.degree,
            zero: Jet::zero(dim0),
            data,
        })
    }
}

impl Antisym<Jet> {
    pub fn values(&self) -> Antisym<f64> {
        self.map(0.0, |j| j.v)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, j| m.max(j.v.abs()))
    }
}

/// Marker from the scenario format: how the component table is meant to be
/// contracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Form,
    Multivector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub variance: Variance,
    pub comps: Antisym<Expr>,
}

// ---------------------------------------------------------------------------
// pointwise calculus on jet-evaluated tables
// ---------------------------------------------------------------------------

fn jet_dim(a: &Antisym<Jet>) -> usize {
    a.zero.dim()
}

/// Exterior product. Works for two forms or two multivectors alike.
pub fn wedge(a: &Antisym<Jet>, b: &Antisym<Jet>) -> Antisym<Jet> {
    let d = a.dim();
    let k = a.degree() + b.degree();
    let mut out = Antisym::zeros(d, k, Jet::zero(jet_dim(a)));
    if k > d {
        return out;
    }
    let p = a.degree();
    for key in tuples(d, k) {
        let mut acc = Jet::zero(jet_dim(a));
        // choose which p of the k indices go to `a`
        let n = key.len();
        for mask in 0..(1u32 << n) {
            if mask.count_ones() as usize != p {
                continue;
            }
            let mut ia = Vec::with_capacity(p);
            let mut ib = Vec::with_capacity(n - p);
            for (pos, &v) in key.iter().enumerate() {
                if mask & (1 << pos) != 0 {
                    ia.push(v);
                } else {
                    ib.push(v);
                }
            }
            // shuffle sign: inversions of the concatenation (ia ++ ib)
            let mut sign = 1.0;
            let concat: Vec<u8> = ia.iter().chain(ib.iter()).copied().collect();
            for i in 0..concat.len() {
                for j in i + 1..concat.len() {
                    if concat[i] > concat[j] {
                        sign = -sign;
                    }
                }
            }
            acc = acc.add(&a.comp(&ia).mul(b.comp(&ib)).scale(sign));
        }
        *out.comp_mut(&key) = acc;
    }
    out
}

/// Interior product contracting the first slot: `(i_v a)_J = v^l a_{lJ}`.
/// `v` is a vector when `a` is a form, a 1-form when `a` is a multivector.
pub fn interior(v: &[Jet], a: &Antisym<Jet>) -> Antisym<Jet> {
    let d = a.dim();
    assert!(a.degree() >= 1);
    let mut out = Antisym::zeros(d, a.degree() - 1, Jet::zero(jet_dim(a)));
    for key in tuples(d, a.degree() - 1) {
        let mut acc = Jet::zero(jet_dim(a));
        let mut idx = Vec::with_capacity(a.degree());
        for l in 0..d as u8 {
            idx.clear();
            idx.push(l);
            idx.extend_from_slice(&key);
            acc = acc.add(&v[l as usize].mul(&a.get(&idx)));
        }
        *out.comp_mut(&key) = acc;
    }
    out
}

/// Exterior derivative of a form; the `k = d` case yields the empty
/// degree-`d+1` table, which every consumer treats as zero.
pub fn de_rham(a: &Antisym<Jet>) -> Antisym<Jet> {
    let d = a.dim();
    let k = a.degree();
    let mut out = Antisym::zeros(d, k + 1, Jet::zero(jet_dim(a)));
    if k + 1 > d {
        return out;
    }
    for key in tuples(d, k + 1) {
        let mut acc = Jet::zero(jet_dim(a));
        for (m, &i) in key.iter().enumerate() {
            let rest: Vec<u8> = key
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != m)
                .map(|(_, &v)| v)
                .collect();
            let term = a.comp(&rest).partial(i as usize);
            acc = if m % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        *out.comp_mut(&key) = acc;
    }
    out
}

/// Lie derivative of a form along a vector field (components with jets).
pub fn lie_form(x: &[Jet], a: &Antisym<Jet>) -> Antisym<Jet> {
    let d = a.dim();
    let mut out = Antisym::zeros(d, a.degree(), Jet::zero(jet_dim(a)));
    for key in tuples(d, a.degree()) {
        let mut acc = Jet::zero(jet_dim(a));
        for l in 0..d {
            acc = acc.add(&x[l].mul(&a.comp(&key).partial(l)));
        }
        for (m, &im) in key.iter().enumerate() {
            for l in 0..d as u8 {
                let mut idx = key.clone();
                idx[m] = l;
                acc = acc.add(&x[l as usize].partial(im as usize).mul(&a.get(&idx)));
            }
        }
        *out.comp_mut(&key) = acc;
    }
    out
}

/// Lie derivative of a multivector along a vector field.
pub fn lie_multivector(x: &[Jet], p: &Antisym<Jet>) -> Antisym<Jet> {
    let d = p.dim();
    let mut out = Antisym::zeros(d, p.degree(), Jet::zero(jet_dim(p)));
    for key in tuples(d, p.degree()) {
        let mut acc = Jet::zero(jet_dim(p));
        for l in 0..d {
            acc = acc.add(&x[l].mul(&p.comp(&key).partial(l)));
        }
        for (m, &im) in key.iter().enumerate() {
            for l in 0..d as u8 {
                let mut idx = key.clone();
                idx[m] = l;
                acc = acc.sub(&p.get(&idx).mul(&x[im as usize].partial(l as usize)));
            }
        }
        *out.comp_mut(&key) = acc;
    }
    out
}

/// Schouten bracket of multivector fields, evaluated at a point.
///
/// Normalization: the biderivation extending `[X,Y] =` Lie bracket and
/// `[f,Q] = -i_{df} Q`; for bivectors this gives
/// `[P,P]^{ijk} = 2 (P^{il} d_l P^{jk} + P^{jl} d_l P^{ki} + P^{kl} d_l P^{ij})`.
/// Degree-0 arguments are supported through the same code path.
pub fn schouten(p: &Antisym<Jet>, q: &Antisym<Jet>) -> Antisym<Jet> {
    let d = p.dim();
    let (pd, qd) = (p.degree(), q.degree());
    let deg = pd + qd - 1; // callers guarantee pd + qd >= 1
    let mut out = Antisym::zeros(d, deg, Jet::zero(jet_dim(p)));
    if deg > d {
        return out;
    }
    for (ti, ci) in p.iter() {
        for (tj, cj) in q.iter() {
            // term 1: (d_R P / dz_l)(d_{x^l} Q)
            for (m, &l) in ti.iter().enumerate() {
                let rest: Vec<u8> = ti
                    .iter()
                    .enumerate()
                    .filter(|(pp, _)| *pp != m)
                    .map(|(_, &v)| v)
                    .collect();
                let sign_r = if (pd - 1 - m) % 2 == 0 { 1.0 } else { -1.0 };
                if let Some((key, ms)) = merge_sign(&rest, &tj) {
                    let val = ci.mul(&cj.partial(l as usize)).scale(sign_r * ms);
                    let slot = out.comp_mut(&key);
                    *slot = slot.add(&val);
                }
            }
            // term 2: -(d_{x^l} P)(d_L Q / dz_l)
            for (m, &l) in tj.iter().enumerate() {
                let rest: Vec<u8> = tj
                    .iter()
                    .enumerate()
                    .filter(|(pp, _)| *pp != m)
                    .map(|(_, &v)| v)
                    .collect();
                let sign_l = if m % 2 == 0 { 1.0 } else { -1.0 };
                if let Some((key, ms)) = merge_sign(&ti, &rest) {
                    let val = ci.partial(l as usize).mul(cj).scale(-sign_l * ms);
                    let slot = out.comp_mut(&key);
                    *slot = slot.add(&val);
                }
            }
        }
    }
    out
}

/// Apply a degree-`k` table to `k` argument component vectors by full
/// antisymmetrized contraction (vectors into a form, covectors into a
/// multivector).
pub fn apply(a: &Antisym<Jet>, args: &[&[Jet]]) -> Jet {
    assert_eq!(args.len(), a.degree());
    let mut acc = Jet::zero(jet_dim(a));
    if a.is_empty() {
        return acc;
    }
    for (key, c) in a.iter() {
        // det of the k x k matrix args[m][key[n]]
        let k = key.len();
        let mut det = Jet::zero(jet_dim(a));
        for (perm, sign) in permutations(k) {
            let mut prod = Jet::constant(sign, jet_dim(a));
            for m in 0..k {
                prod = prod.mul(&args[m][key[perm[m]] as usize]);
            }
            det = det.add(&prod);
        }
        acc = acc.add(&c.mul(&det));
    }
    acc
}

fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    heap_perm(&mut cur, k, &mut out);
    out
}

fn heap_perm(cur: &mut Vec<usize>, k: usize, out: &mut Vec<(Vec<usize>, f64)>) {
    if k <= 1 {
        let mut sign = 1.0;
        for i in 0..cur.len() {
            for j in i + 1..cur.len() {
                if cur[i] > cur[j] {
                    sign = -sign;
                }
            }
        }
        out.push((cur.clone(), sign));
        return;
    }
    for i in 0..k {
        heap_perm(cur, k - 1, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

/// `pi_sharp(alpha)^m = alpha_l pi^{lm}` (first slot).
pub fn pi_sharp(pi: &Antisym<Jet>, alpha: &[Jet]) -> Vec<Jet> {
    let d = pi.dim();
    let dj = jet_dim(pi);
    (0..d as u8)
        .map(|m| {
            let mut acc = Jet::zero(dj);
            for l in 0..d as u8 {
                acc = acc.add(&alpha[l as usize].mul(&pi.get(&[l, m])));
            }
            acc
        })
        .collect()
}

/// `omega_flat(X)_m = omega_{ml} X^l` (second slot; the pairing that makes
/// the pre-symplectic graph membership coincide with the momentum-section
/// equations).
pub fn omega_flat(omega: &Antisym<Jet>, x: &[Jet]) -> Vec<Jet> {
    let d = omega.dim();
    let dj = jet_dim(omega);
    (0..d as u8)
        .map(|m| {
            let mut acc = Jet::zero(dj);
            for l in 0..d as u8 {
                acc = acc.add(&omega.get(&[m, l]).mul(&x[l as usize]));
            }
            acc
        })
        .collect()
}

/// Lie bracket of vector fields from jet components.
pub fn vec_bracket(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let d = x.len();
    let dj = x[0].dim();
    (0..d)
        .map(|i| {
            let mut acc = Jet::zero(dj);
            for j in 0..d {
                acc = acc.add(&x[j].mul(&y[i].partial(j)));
                acc = acc.sub(&y[j].mul(&x[i].partial(j)));
            }
            acc
        })
        .collect()
}
