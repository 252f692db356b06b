//! Truncated multivariate Taylor arithmetic up to third order.
//!
//! A [`Taylor`] value carries a scalar together with all of its partial
//! derivatives up to a fixed order with respect to `nvars` independent
//! variables. Charts written against this type yield exact derivative jets
//! (up to rounding) without any finite differencing.
//!
//! Mixed partials are computed once per sorted index tuple and mirrored, so
//! the stored second and third derivative tensors are exactly symmetric.

use std::ops::{Add, Mul, Neg, Sub};

/// Value plus partial derivatives through `order` (at most 3).
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    nvars: usize,
    order: usize,
    c: Vec<f64>,
}

fn storage_len(nvars: usize, order: usize) -> usize {
    let mut len = 1;
    let mut block = 1;
    for _ in 0..order {
        block *= nvars;
        len += block;
    }
    len
}

impl Taylor {
    pub const MAX_ORDER: usize = 3;

    pub fn constant(value: f64, nvars: usize, order: usize) -> Self {
        assert!(order <= Self::MAX_ORDER, "taylor order {order} > 3");
        let mut c = vec![0.0; storage_len(nvars, order)];
        c[0] = value;
        Self { nvars, order, c }
    }

    /// The independent variable `idx` evaluated at `value`.
    pub fn variable(value: f64, idx: usize, nvars: usize, order: usize) -> Self {
        assert!(idx < nvars);
        let mut t = Self::constant(value, nvars, order);
        if order >= 1 {
            t.c[1 + idx] = 1.0;
        }
        t
    }

    /// Seeds one variable per entry of `u`.
    pub fn variables(u: &[f64], order: usize) -> Vec<Self> {
        let n = u.len();
        u.iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(v, i, n, order))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    fn off2(&self) -> usize {
        1 + self.nvars
    }

    #[inline]
    fn off3(&self) -> usize {
        1 + self.nvars + self.nvars * self.nvars
    }

    /// First partial `∂_i`. Zero when the order is below one.
    #[inline]
    pub fn d1(&self, i: usize) -> f64 {
        if self.order < 1 {
            return 0.0;
        }
        self.c[1 + i]
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        if self.order < 2 {
            return 0.0;
        }
        self.c[self.off2() + i * self.nvars + j]
    }

    #[inline]
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        if self.order < 3 {
            return 0.0;
        }
        let n = self.nvars;
        self.c[self.off3() + (i * n + j) * n + k]
    }

    fn set2(&mut self, i: usize, j: usize, v: f64) {
        let n = self.nvars;
        let o = self.off2();
        self.c[o + i * n + j] = v;
        self.c[o + j * n + i] = v;
    }

    fn set3(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.nvars;
        let o = self.off3();
        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            self.c[o + (a * n + b) * n + c] = v;
        }
    }

    fn zero_like(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "taylor variable count mismatch");
        let order = self.order.min(other.order);
        Self::constant(0.0, self.nvars, order)
    }

    /// Applies a univariate function given its value and first three
    /// derivatives at `self.value()` (Faà di Bruno to third order).
    pub fn compose(&self, f: [f64; 4]) -> Self {
        let n = self.nvars;
        let mut out = Self::constant(f[0], n, self.order);
        if self.order >= 1 {
            for i in 0..n {
                out.c[1 + i] = f[1] * self.d1(i);
            }
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let v = f[2] * self.d1(i) * self.d1(j) + f[1] * self.d2(i, j);
                    out.set2(i, j, v);
                }
            }
        }
        if self.order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let (ai, aj, ak) = (self.d1(i), self.d1(j), self.d1(k));
                        let v = f[3] * ai * aj * ak
                            + f[2] * (self.d2(i, j) * ak + self.d2(i, k) * aj + self.d2(j, k) * ai)
                            + f[1] * self.d3(i, j, k);
                        out.set3(i, j, k, v);
                    }
                }
            }
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            c: self.c.iter().map(|v| v * k).collect(),
        }
    }

    pub fn add_scalar(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.c[0] += k;
        out
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.zero_like(other);
        let len = out.c.len();
        for (idx, slot) in out.c.iter_mut().enumerate().take(len) {
            *slot = f(self.c[idx], other.c[idx]);
        }
        // The truncated layout is a prefix, so plain indexing is valid for both
        // inputs whenever both orders are at least the output order.
        out
    }

    fn product(&self, b: &Self) -> Self {
        let a = self;
        let mut out = a.zero_like(b);
        let n = a.nvars;
        let (a0, b0) = (a.value(), b.value());
        out.c[0] = a0 * b0;
        if out.order >= 1 {
            for i in 0..n {
                out.c[1 + i] = a.d1(i) * b0 + a0 * b.d1(i);
            }
        }
        if out.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let v = a.d2(i, j) * b0
                        + a.d1(i) * b.d1(j)
                        + a.d1(j) * b.d1(i)
                        + a0 * b.d2(i, j);
                    out.set2(i, j, v);
                }
            }
        }
        if out.order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let v = a.d3(i, j, k) * b0
                            + a.d2(i, j) * b.d1(k)
                            + a.d2(i, k) * b.d1(j)
                            + a.d2(j, k) * b.d1(i)
                            + a.d1(i) * b.d2(j, k)
                            + a.d1(j) * b.d2(i, k)
                            + a.d1(k) * b.d2(i, j)
                            + a0 * b.d3(i, j, k);
                        out.set3(i, j, k, v);
                    }
                }
            }
        }
        out
    }
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        self.product(rhs)
    }
}

impl Mul<f64> for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: f64) -> Taylor {
        self.scale(rhs)
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}
