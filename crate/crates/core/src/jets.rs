//! Forward-mode truncated Taylor (jet) arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar field around a base
//! point, truncated at a total degree, in up to [`MAX_VARS`] variables. All
//! mixed partials up to the truncation order come out of a single lifted
//! evaluation; arithmetic is exact on polynomials up to that order. The
//! geometric modules lift `F^2(x, y)` to order 4 in the 2m coordinates of a
//! chart on the slit tangent bundle and read every tensor off the result.

use crate::error::JetError;
use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

/// Hard cap on the number of jet variables (m <= 4 base + fiber coordinates).
pub const MAX_VARS: usize = 8;

/// Exponent vector of one Taylor monomial.
pub type MultiIndex = [u8; MAX_VARS];

/// Dense coefficient layout for a fixed (variable count, truncation order)
/// pair: the monomial enumeration, the index lookup, and the precomputed
/// truncated-convolution table used by multiplication.
#[derive(Debug)]
pub struct JetSpace {
    pub nvars: usize,
    pub order: usize,
    exps: Vec<MultiIndex>,
    degs: Vec<u8>,
    pos: HashMap<MultiIndex, u32>,
    /// (ia, ib, ic) triples with exps[ia] + exps[ib] = exps[ic].
    mul: Vec<(u32, u32, u32)>,
    /// Per variable: (src, dst, factor) triples of the derivative map. The
    /// graded enumeration makes order-(p-1) indices a prefix of order-p ones,
    /// so `dst` is valid in the lower space directly.
    deriv: Vec<Vec<(u32, u32, f64)>>,
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> Self {
        assert!(nvars >= 1 && nvars <= MAX_VARS);
        let mut exps: Vec<MultiIndex> = Vec::new();
        // Graded order: all monomials of total degree d, lexicographic within d.
        for d in 0..=order {
            let mut cur = [0u8; MAX_VARS];
            enumerate_degree(&mut exps, &mut cur, 0, nvars, d as u8);
        }
        let degs: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let pos: HashMap<MultiIndex, u32> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i as u32))
            .collect();
        let mut mul = Vec::new();
        for (ia, ea) in exps.iter().enumerate() {
            for (ib, eb) in exps.iter().enumerate() {
                if (degs[ia] + degs[ib]) as usize > order {
                    continue;
                }
                let mut ec = [0u8; MAX_VARS];
                for v in 0..nvars {
                    ec[v] = ea[v] + eb[v];
                }
                let ic = pos[&ec];
                mul.push((ia as u32, ib as u32, ic));
            }
        }
        let mut deriv = Vec::with_capacity(nvars);
        for v in 0..nvars {
            let mut table = Vec::new();
            for (i, e) in exps.iter().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut e2 = *e;
                e2[v] -= 1;
                table.push((i as u32, pos[&e2], e[v] as f64));
            }
            deriv.push(table);
        }
        JetSpace {
            nvars,
            order,
            exps,
            degs,
            pos,
            mul,
            deriv,
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self, i: usize) -> &MultiIndex {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degs[i] as usize
    }

    pub fn index_of(&self, e: &MultiIndex) -> Option<usize> {
        self.pos.get(e).map(|&i| i as usize)
    }
}

fn enumerate_degree(out: &mut Vec<MultiIndex>, cur: &mut MultiIndex, v: usize, nvars: usize, left: u8) {
    if v + 1 == nvars {
        cur[v] = left;
        out.push(*cur);
        cur[v] = 0;
        return;
    }
    for e in (0..=left).rev() {
        cur[v] = e;
        enumerate_degree(out, cur, v + 1, nvars, left - e);
    }
    cur[v] = 0;
}

const MAX_ORDER: usize = 5;

static SPACES: [[OnceLock<Arc<JetSpace>>; MAX_ORDER + 1]; MAX_VARS + 1] =
    [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_VARS + 1];

/// Shared handle to the (nvars, order) coefficient layout.
pub fn jet_space(nvars: usize, order: usize) -> Arc<JetSpace> {
    SPACES[nvars][order]
        .get_or_init(|| Arc::new(JetSpace::build(nvars, order)))
        .clone()
}

/// Coefficient storage: jets of order <= 2 in four variables (the bulk of the
/// per-point tensor work) stay inline; the order-3/4 jets go to the heap.
#[derive(Clone, Debug)]
enum JetCoeffs {
    Inline(usize, [f64; 16]),
    Heap(Vec<f64>),
}

impl JetCoeffs {
    fn zeros(len: usize) -> JetCoeffs {
        if len <= 16 {
            JetCoeffs::Inline(len, [0.0; 16])
        } else {
            JetCoeffs::Heap(vec![0.0; len])
        }
    }

    #[inline]
    fn as_slice(&self) -> &[f64] {
        match self {
            JetCoeffs::Inline(len, a) => &a[..*len],
            JetCoeffs::Heap(v) => v,
        }
    }

    #[inline]
    fn as_mut_slice(&mut self) -> &mut [f64] {
        match self {
            JetCoeffs::Inline(len, a) => &mut a[..*len],
            JetCoeffs::Heap(v) => v,
        }
    }
}

/// Truncated multivariate Taylor expansion of a scalar field at a base point.
///
/// `coeffs[i]` is the Taylor coefficient of the monomial `space.exponents(i)`,
/// i.e. the corresponding partial derivative divided by the multi-index
/// factorial.
#[derive(Clone, Debug)]
pub struct Jet {
    space: Arc<JetSpace>,
    base: Arc<[f64]>,
    coeffs: JetCoeffs,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, base: &Arc<[f64]>, v: f64) -> Jet {
        let mut coeffs = JetCoeffs::zeros(space.len());
        coeffs.as_mut_slice()[0] = v;
        Jet {
            space: space.clone(),
            base: base.clone(),
            coeffs,
        }
    }

    /// The coordinate jet of variable `var`: value `base[var]`, unit first-order
    /// coefficient in direction `var`.
    pub fn variable(space: &Arc<JetSpace>, base: &Arc<[f64]>, var: usize) -> Jet {
        assert!(var < space.nvars);
        let mut j = Jet::constant(space, base, base[var]);
        let mut e = [0u8; MAX_VARS];
        e[var] = 1;
        if let Some(i) = space.index_of(&e) {
            j.coeffs.as_mut_slice()[i] = 1.0;
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    /// Field value at the base point (coefficient of the zero multi-index).
    pub fn value(&self) -> f64 {
        self.coeffs.as_slice()[0]
    }

    pub fn coeff(&self, e: &MultiIndex) -> f64 {
        self.space
            .index_of(e)
            .map_or(0.0, |i| self.coeffs.as_slice()[i])
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs.as_slice()
    }

    /// First-derivative value in direction `v` (degree-1 coefficients sit at
    /// positions `1 + v` in the graded layout).
    #[inline]
    pub fn d1(&self, v: usize) -> f64 {
        debug_assert!(v < self.space.nvars && self.space.order >= 1);
        self.coeffs.as_slice()[1 + v]
    }

    /// Partial derivative `∂^α f` at the base point: Taylor coefficient times α!.
    pub fn partial(&self, e: &MultiIndex) -> f64 {
        let mut fact = 1.0;
        for &k in e.iter() {
            for j in 2..=k as u64 {
                fact *= j as f64;
            }
        }
        self.coeff(e) * fact
    }

    fn same_shape(&self, other: &Jet) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.space.nvars == other.space.nvars && self.space.order == other.space.order)
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            self.same_shape(other),
            "jet space mismatch: ({},{}) vs ({},{})",
            self.space.nvars,
            self.space.order,
            other.space.nvars,
            other.space.order
        );
        debug_assert!(
            self.base.iter().zip(other.base.iter()).all(|(a, b)| a == b),
            "jet base point mismatch"
        );
    }

    pub fn scale(mut self, s: f64) -> Jet {
        for c in self.coeffs.as_mut_slice() {
            *c *= s;
        }
        self
    }

    /// First derivative with respect to one variable, as a jet one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(var < self.space.nvars);
        let new_order = self.space.order.saturating_sub(1);
        let out_space = jet_space(self.space.nvars, new_order);
        let mut out = Jet::constant(&out_space, &self.base, 0.0);
        let src = self.coeffs.as_slice();
        let dst = out.coeffs.as_mut_slice();
        let limit = dst.len() as u32;
        for &(i, k, factor) in &self.space.deriv[var] {
            if k < limit {
                dst[k as usize] += src[i as usize] * factor;
            }
        }
        out
    }

    /// The same jet re-anchored at another base point (coefficients reused;
    /// the caller asserts the new base matches how they were computed).
    pub fn with_base(&self, base: &Arc<[f64]>) -> Jet {
        Jet {
            space: self.space.clone(),
            base: base.clone(),
            coeffs: self.coeffs.clone(),
        }
    }

    /// Product without consuming the operands.
    pub fn mul_ref(&self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let mut out = JetCoeffs::zeros(self.space.len());
        {
            let a = self.coeffs.as_slice();
            let b = rhs.coeffs.as_slice();
            let o = out.as_mut_slice();
            for &(ia, ib, ic) in &self.space.mul {
                o[ic as usize] += a[ia as usize] * b[ib as usize];
            }
        }
        Jet {
            space: self.space.clone(),
            base: self.base.clone(),
            coeffs: out,
        }
    }

    /// Quotient without consuming the operands.
    pub fn div_ref(&self, rhs: &Jet) -> Jet {
        self.mul_ref(&rhs.recip())
    }

    /// In-place fused `self += s * rhs`.
    pub fn add_scaled(&mut self, rhs: &Jet, s: f64) {
        self.assert_compatible(rhs);
        for (a, b) in self
            .coeffs
            .as_mut_slice()
            .iter_mut()
            .zip(rhs.coeffs.as_slice().iter())
        {
            *a += s * b;
        }
    }

    /// Reinterprets the jet in a larger space, sending source variable `i` to
    /// target variable `var_map[i]`. Coefficients in unmapped directions stay
    /// zero; the target base point must agree on mapped variables.
    pub fn extend(&self, target: &Arc<JetSpace>, target_base: &Arc<[f64]>, var_map: &[usize]) -> Jet {
        assert_eq!(var_map.len(), self.space.nvars);
        assert!(target.order >= self.space.order);
        let mut out = Jet::constant(target, target_base, 0.0);
        let src = self.coeffs.as_slice();
        for i in 0..self.space.len() {
            let c = src[i];
            if c == 0.0 {
                continue;
            }
            let e = self.space.exps[i];
            let mut e2 = [0u8; MAX_VARS];
            for (v, &tv) in var_map.iter().enumerate() {
                e2[tv] = e[v];
            }
            if let Some(k) = target.index_of(&e2) {
                out.coeffs.as_mut_slice()[k] = c;
            }
        }
        out
    }

    /// Projects into the space of the same variables with a lower order.
    pub fn truncated(&self, order: usize) -> Jet {
        if order >= self.space.order {
            return self.clone();
        }
        let out_space = jet_space(self.space.nvars, order);
        let mut out = Jet::constant(&out_space, &self.base, 0.0);
        let n = out_space.len();
        out.coeffs.as_mut_slice()[..n].copy_from_slice(&self.coeffs.as_slice()[..n]);
        out
    }

    /// Composes a scalar series with this jet: `sum_k c[k] (self - value)^k`.
    /// `c[k]` must be the k-th derivative of the outer function at the value,
    /// divided by k!.
    fn compose(&self, c: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs.as_mut_slice()[0] = 0.0;
        let order = self.space.order;
        let mut r = Jet::constant(&self.space, &self.base, c[order]);
        for k in (0..order).rev() {
            r = r.mul_ref(&h);
            r.coeffs.as_mut_slice()[0] += c[k];
        }
        r
    }

    pub(crate) fn recip(&self) -> Jet {
        let v = self.value();
        let order = self.space.order;
        let mut c = vec![0.0; order + 1];
        let mut p = 1.0 / v;
        for ck in c.iter_mut() {
            *ck = p;
            p *= -1.0 / v;
        }
        self.compose(&c)
    }

    /// Square root by series composition. A non-positive value yields a
    /// NaN-filled jet, mirroring `f64::sqrt` semantics; use [`Jet::try_sqrt`]
    /// for a checked variant.
    pub fn sqrt(&self) -> Jet {
        let v = self.value();
        if !(v > 0.0) {
            let mut out = self.clone();
            out.coeffs.as_mut_slice().iter_mut().for_each(|c| *c = f64::NAN);
            return out;
        }
        let order = self.space.order;
        let mut c = vec![0.0; order + 1];
        // Binomial series d^k/dv^k v^(1/2) / k!.
        let mut bin = 1.0;
        let mut pw = v.sqrt();
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = bin * pw;
            bin *= (0.5 - k as f64) / (k as f64 + 1.0);
            pw /= v;
        }
        self.compose(&c)
    }

    pub fn ln(&self) -> Jet {
        let v = self.value();
        if !(v > 0.0) {
            let mut out = self.clone();
            out.coeffs.as_mut_slice().iter_mut().for_each(|c| *c = f64::NAN);
            return out;
        }
        let order = self.space.order;
        let mut c = vec![0.0; order + 1];
        c[0] = v.ln();
        let mut p = 1.0 / v;
        for k in 1..=order {
            c[k] = p * if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            p /= v;
        }
        self.compose(&c)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let v = self.value();
        if !(v > 0.0) {
            let mut out = self.clone();
            out.coeffs.as_mut_slice().iter_mut().for_each(|c| *c = f64::NAN);
            return out;
        }
        let order = self.space.order;
        let mut c = vec![0.0; order + 1];
        let mut bin = 1.0;
        let mut pw = v.powf(p);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = bin * pw;
            bin *= (p - k as f64) / (k as f64 + 1.0);
            pw /= v;
        }
        self.compose(&c)
    }

    pub fn sq(&self) -> Jet {
        self.clone() * self.clone()
    }

    pub fn try_sqrt(&self) -> Result<Jet, JetError> {
        if self.value() > 0.0 {
            Ok(self.sqrt())
        } else {
            Err(JetError::SqrtNonPositive(self.value()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.as_slice().iter().all(|c| c.is_finite())
    }

    /// First non-finite coefficient, reported as (exponents, direction name).
    pub fn first_non_finite(&self, var_names: &[String]) -> Option<(Vec<u8>, String)> {
        for i in 0..self.space.len() {
            if !self.coeffs.as_slice()[i].is_finite() {
                let e = self.space.exps[i];
                let dir = (0..self.space.nvars)
                    .filter(|&v| e[v] > 0)
                    .map(|v| var_names.get(v).cloned().unwrap_or_else(|| format!("v{v}")))
                    .collect::<Vec<_>>()
                    .join("*");
                let dir = if dir.is_empty() { "value".to_string() } else { dir };
                return Some((e[..self.space.nvars].to_vec(), dir));
            }
        }
        None
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.assert_compatible(&rhs);
        for (a, b) in self
            .coeffs
            .as_mut_slice()
            .iter_mut()
            .zip(rhs.coeffs.as_slice().iter())
        {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.assert_compatible(&rhs);
        for (a, b) in self
            .coeffs
            .as_mut_slice()
            .iter_mut()
            .zip(rhs.coeffs.as_slice().iter())
        {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in self.coeffs.as_mut_slice() {
            *c = -*c;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let r = rhs.recip();
        self * r
    }
}

/// Binary operations exposed by [`jet_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Pow(i32),
}

/// Checked jet arithmetic. `Sqrt` and `Pow` ignore `b` apart from the shared
/// shape check.
pub fn jet_arith(a: &Jet, b: &Jet, op: JetOp) -> Result<Jet, JetError> {
    if !a.same_shape(b) {
        return Err(JetError::SpaceMismatch(
            a.space.nvars,
            a.space.order,
            b.space.nvars,
            b.space.order,
        ));
    }
    if a.base.iter().zip(b.base.iter()).any(|(x, y)| x != y) {
        return Err(JetError::BasePointMismatch(
            a.base.to_vec(),
            b.base.to_vec(),
        ));
    }
    match op {
        JetOp::Add => Ok(a.clone() + b.clone()),
        JetOp::Sub => Ok(a.clone() - b.clone()),
        JetOp::Mul => Ok(a.clone() * b.clone()),
        JetOp::Div => {
            if b.value() == 0.0 {
                Err(JetError::DivisionByZero)
            } else {
                Ok(a.clone() / b.clone())
            }
        }
        JetOp::Sqrt => b.try_sqrt(),
        JetOp::Pow(k) => {
            let mut r = Jet::constant(&a.space, &a.base, 1.0);
            let mut p = a.clone();
            let mut n = k.unsigned_abs();
            while n > 0 {
                if n & 1 == 1 {
                    r = r * p.clone();
                }
                p = p.clone() * p;
                n >>= 1;
            }
            if k < 0 {
                if a.value() == 0.0 {
                    return Err(JetError::DivisionByZero);
                }
                r = r.recip();
            }
            Ok(r)
        }
    }
}

/// Generic scalar used by the metric evaluators, so one definition of `F`
/// serves plain `f64` evaluation, finite-difference oracles and jet lifting.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same shape (space/base point) as `self`.
    fn lit(&self, v: f64) -> Self;
    fn sqrt(&self) -> Self;
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    fn lit(&self, v: f64) -> f64 {
        v
    }
    fn sqrt(&self) -> f64 {
        f64::sqrt(*self)
    }
    fn value(&self) -> f64 {
        *self
    }
}

impl Scalar for Jet {
    fn lit(&self, v: f64) -> Jet {
        Jet::constant(&self.space, &self.base, v)
    }
    fn sqrt(&self) -> Jet {
        Jet::sqrt(self)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
}

/// Lifts a scalar field of the chart coordinates `(x, y)` to a jet at the
/// given base point. The closure receives one coordinate jet per variable,
/// `x` first. Rejects `y = 0` and non-finite results.
pub fn jet_lift<F>(field: F, x: &[f64], y: &[f64], order: usize) -> Result<Jet, JetError>
where
    F: FnOnce(&[Jet]) -> Jet,
{
    if y.iter().all(|&v| v == 0.0) {
        return Err(JetError::ZeroFiberVector);
    }
    let nvars = x.len() + y.len();
    let space = jet_space(nvars, order);
    let base: Arc<[f64]> = x.iter().chain(y.iter()).copied().collect();
    let vars: Vec<Jet> = (0..nvars).map(|v| Jet::variable(&space, &base, v)).collect();
    let out = field(&vars);
    if !out.is_finite() {
        let names: Vec<String> = (1..=x.len())
            .map(|i| format!("x{i}"))
            .chain((1..=y.len()).map(|i| format!("y{i}")))
            .collect();
        let (mi, dir) = out.first_non_finite(&names).unwrap();
        return Err(JetError::NonFinite {
            multi_index: mi,
            direction: dir,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mi(pairs: &[(usize, u8)]) -> MultiIndex {
        let mut e = [0u8; MAX_VARS];
        for &(v, k) in pairs {
            e[v] = k;
        }
        e
    }

    #[test]
    fn polynomial_square_in_y1() {
        // f(x, y) = (y1)^2 at y1 = 3, order 2, with one x and two y variables.
        let j = jet_lift(|v| v[1].clone() * v[1].clone(), &[0.0], &[3.0, 0.0], 2).unwrap();
        assert_abs_diff_eq!(j.value(), 9.0);
        assert_abs_diff_eq!(j.coeff(&mi(&[(1, 1)])), 6.0);
        assert_abs_diff_eq!(j.coeff(&mi(&[(1, 2)])), 1.0);
        // Second partial from the coefficient: 2! * 1 = 2.
        assert_abs_diff_eq!(j.partial(&mi(&[(1, 2)])), 2.0);
    }

    #[test]
    fn euclidean_norm_hessian() {
        // F(y) = sqrt(y1^2 + y2^2) at y = (1, 0): [F^2]_{y1 y1} = 2, [F^2]_{y1 y2} = 0.
        let f2 = jet_lift(
            |v| v[0].clone() * v[0].clone() + v[1].clone() * v[1].clone(),
            &[],
            &[1.0, 0.0],
            2,
        )
        .unwrap();
        assert_abs_diff_eq!(f2.partial(&mi(&[(0, 2)])), 2.0);
        assert_abs_diff_eq!(f2.partial(&mi(&[(0, 1), (1, 1)])), 0.0);
    }

    #[test]
    fn product_of_linear_factors() {
        // (1 + y)(1 - y) at y = 0, order 2 -> {1, 0, -1}.
        let base: Arc<[f64]> = Arc::from(vec![0.0]);
        let space = jet_space(1, 2);
        let y = Jet::variable(&space, &base, 0);
        let one = Jet::constant(&space, &base, 1.0);
        let p = (one.clone() + y.clone()) * (one - y);
        assert_abs_diff_eq!(p.value(), 1.0);
        assert_abs_diff_eq!(p.coeff(&mi(&[(0, 1)])), 0.0);
        assert_abs_diff_eq!(p.coeff(&mi(&[(0, 2)])), -1.0);
    }

    #[test]
    fn sqrt_of_square() {
        // sqrt(y^2) at y = 2, order 1: value 2, derivative 1.
        let base: Arc<[f64]> = Arc::from(vec![2.0]);
        let space = jet_space(1, 1);
        let y = Jet::variable(&space, &base, 0);
        let s = (y.clone() * y).sqrt();
        assert_abs_diff_eq!(s.value(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.coeff(&mi(&[(0, 1)])), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn division_and_log_match_series() {
        let base: Arc<[f64]> = Arc::from(vec![0.5]);
        let space = jet_space(1, 4);
        let t = Jet::variable(&space, &base, 0);
        let one = Jet::constant(&space, &base, 1.0);
        // 1/(1+t) around t0 = 0.5: k-th coefficient (-1)^k / 1.5^(k+1).
        let r = one.clone() / (one.clone() + t.clone());
        for k in 0..=4u8 {
            let expect = (-1.0f64).powi(k as i32) / 1.5f64.powi(k as i32 + 1);
            assert_abs_diff_eq!(r.coeff(&mi(&[(0, k)])), expect, epsilon = 1e-14);
        }
        let l = (one + t).ln();
        assert_abs_diff_eq!(l.value(), 1.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(l.coeff(&mi(&[(0, 1)])), 1.0 / 1.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_zero_fiber_vector() {
        let err = jet_lift(|v| v[1].clone(), &[1.0], &[0.0, 0.0], 2).unwrap_err();
        assert_eq!(err, JetError::ZeroFiberVector);
    }

    #[test]
    fn reports_non_finite_direction() {
        // 1/y1 diverges at y1 = 0 even though y = (0, 1) is nonzero.
        let err = jet_lift(
            |v| v[2].clone() / v[1].clone(),
            &[0.0],
            &[0.0, 1.0],
            2,
        )
        .unwrap_err();
        match err {
            JetError::NonFinite { direction, .. } => assert_eq!(direction, "value"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn jet_arith_checks_base_points() {
        let space = jet_space(1, 2);
        let b1: Arc<[f64]> = Arc::from(vec![0.0]);
        let b2: Arc<[f64]> = Arc::from(vec![1.0]);
        let a = Jet::variable(&space, &b1, 0);
        let b = Jet::variable(&space, &b2, 0);
        assert!(matches!(
            jet_arith(&a, &b, JetOp::Add),
            Err(JetError::BasePointMismatch(..))
        ));
        let z = Jet::constant(&space, &b1, 0.0);
        assert!(matches!(
            jet_arith(&a, &z, JetOp::Div),
            Err(JetError::DivisionByZero)
        ));
        assert!(matches!(
            jet_arith(&a, &z, JetOp::Sqrt),
            Err(JetError::SqrtNonPositive(_))
        ));
    }

    #[test]
    fn derivative_and_extend_round_trip() {
        // d/dx (x^2 y) = 2xy in a 2-var space, then extended into a 4-var space.
        let space = jet_space(2, 3);
        let base: Arc<[f64]> = Arc::from(vec![2.0, 3.0]);
        let x = Jet::variable(&space, &base, 0);
        let y = Jet::variable(&space, &base, 1);
        let f = x.clone() * x.clone() * y.clone();
        let fx = f.derivative(0);
        assert_abs_diff_eq!(fx.value(), 12.0);
        assert_abs_diff_eq!(fx.coeff(&mi(&[(0, 1)])), 6.0); // d/dx 2xy = 2y
        assert_abs_diff_eq!(fx.coeff(&mi(&[(1, 1)])), 4.0); // d/dy 2xy = 2x

        let big = jet_space(4, 2);
        let big_base: Arc<[f64]> = Arc::from(vec![2.0, 3.0, 7.0, 9.0]);
        let g = fx.extend(&big, &big_base, &[0, 1]);
        assert_abs_diff_eq!(g.value(), 12.0);
        assert_abs_diff_eq!(g.coeff(&mi(&[(1, 1)])), 4.0);
        assert_abs_diff_eq!(g.coeff(&mi(&[(2, 1)])), 0.0);
    }

    #[test]
    fn homogeneity_of_a_norm_jet() {
        // F = sqrt(y1^2 + y2^2): F(lambda y) = lambda F(y) and Euler's relation
        // y^i F_{y^i} = F, read from a single jet.
        let f = |v: &[Jet]| (v[0].clone() * v[0].clone() + v[1].clone() * v[1].clone()).sqrt();
        let y = [0.7, -1.3];
        let f0 = jet_lift(f, &[], &y, 3).unwrap();
        for lambda in [0.5, 2.0, 7.0] {
            let fl = jet_lift(f, &[], &[lambda * y[0], lambda * y[1]], 3).unwrap();
            assert_abs_diff_eq!(fl.value(), lambda * f0.value(), epsilon = 1e-12);
        }
        let euler = y[0] * f0.partial(&mi(&[(0, 1)])) + y[1] * f0.partial(&mi(&[(1, 1)]));
        assert_abs_diff_eq!(euler, f0.value(), epsilon = 1e-12);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    /// Random degree-<=2 polynomial in 3 variables, as a jet.
    fn poly(space: &Arc<JetSpace>, base: &Arc<[f64]>, cs: &[f64]) -> Jet {
        let mut j = Jet::constant(space, base, 0.0);
        let n = space.len().min(cs.len());
        for i in 0..n {
            let mut term = Jet::constant(space, base, cs[i]);
            let e = *space.exponents(i);
            for v in 0..space.nvars {
                for _ in 0..e[v] {
                    // Centered variable so coefficients are Taylor coefficients.
                    let xv = Jet::variable(space, base, v) - Jet::constant(space, base, base[v]);
                    term = term * xv;
                }
            }
            j = j + term;
        }
        j
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mul_is_associative_and_distributive(
            ca in proptest::collection::vec(-1.0f64..1.0, 10),
            cb in proptest::collection::vec(-1.0f64..1.0, 10),
            cc in proptest::collection::vec(-1.0f64..1.0, 10),
            base in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let space = jet_space(3, 4);
            let base: Arc<[f64]> = Arc::from(base);
            let a = poly(&space, &base, &ca);
            let b = poly(&space, &base, &cb);
            let c = poly(&space, &base, &cc);
            let assoc_l = (a.clone() * b.clone()) * c.clone();
            let assoc_r = a.clone() * (b.clone() * c.clone());
            let dist_l = a.clone() * (b.clone() + c.clone());
            let dist_r = a.clone() * b.clone() + a.clone() * c.clone();
            for i in 0..space.len() {
                prop_assert!((assoc_l.coeffs()[i] - assoc_r.coeffs()[i]).abs() < 1e-13);
                prop_assert!((dist_l.coeffs()[i] - dist_r.coeffs()[i]).abs() < 1e-13);
            }
        }
    }
}
