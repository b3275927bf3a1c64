//! Exterior-algebra values over a finite set of anticommuting generators.
//!
//! [`ExtForm`] is a pointwise value of a differential form: a dense table of
//! coefficients indexed by generator bitmask. The geometric pipeline uses the
//! generator order `{dx^1, dx^2, delta-y^1, delta-y^2}` on the slit tangent
//! bundle and `{dx^1, dx^2, d-theta}` after restriction to the sphere bundle;
//! the supertrace engine uses the same type for its auxiliary symbols.

/// Generator layout for forms on the slit tangent bundle of a surface chart:
/// `dx^1, dx^2, delta-y^1, delta-y^2`.
pub const TM_NGEN: usize = 4;
pub const GEN_DX: [usize; 2] = [0, 1];
pub const GEN_DY: [usize; 2] = [2, 3];

/// Generator layout after restriction to the sphere bundle: `dx^1, dx^2, d-theta`.
pub const SM_NGEN: usize = 3;
pub const GEN_DTHETA: usize = 2;

/// Sign of `e_a ∧ e_b` relative to the canonical (ascending) monomial
/// `e_{a|b}`, for disjoint masks.
pub fn wedge_sign(a: u32, b: u32) -> f64 {
    let mut parity = 0u32;
    let mut bits = b;
    while bits != 0 {
        let i = bits.trailing_zeros();
        parity += (a >> (i + 1)).count_ones();
        bits &= bits - 1;
    }
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coefficient table of an exterior form; forms over at most 4 generators
/// (the whole geometric pipeline) stay inline, larger ones (the supertrace
/// engine's auxiliary algebras) go to the heap.
#[derive(Clone, Debug, PartialEq)]
enum Coeffs {
    Inline([f64; 16]),
    Heap(Vec<f64>),
}

impl Coeffs {
    fn zeros(len: usize) -> Coeffs {
        if len <= 16 {
            Coeffs::Inline([0.0; 16])
        } else {
            Coeffs::Heap(vec![0.0; len])
        }
    }

    #[inline]
    fn as_slice(&self, len: usize) -> &[f64] {
        match self {
            Coeffs::Inline(a) => &a[..len],
            Coeffs::Heap(v) => v,
        }
    }

    #[inline]
    fn as_mut_slice(&mut self, len: usize) -> &mut [f64] {
        match self {
            Coeffs::Inline(a) => &mut a[..len],
            Coeffs::Heap(v) => v,
        }
    }
}

/// A value of a (generally inhomogeneous) exterior form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtForm {
    ngen: usize,
    coeffs: Coeffs,
}

impl ExtForm {
    pub fn zero(ngen: usize) -> ExtForm {
        assert!(ngen <= 12);
        ExtForm {
            ngen,
            coeffs: Coeffs::zeros(1 << ngen),
        }
    }

    #[inline]
    fn s(&self) -> &[f64] {
        self.coeffs.as_slice(1 << self.ngen)
    }

    #[inline]
    fn sm(&mut self) -> &mut [f64] {
        self.coeffs.as_mut_slice(1 << self.ngen)
    }

    pub fn scalar(ngen: usize, v: f64) -> ExtForm {
        let mut f = ExtForm::zero(ngen);
        f.sm()[0] = v;
        f
    }

    /// The basis one-form of generator `g`.
    pub fn generator(ngen: usize, g: usize) -> ExtForm {
        assert!(g < ngen);
        let mut f = ExtForm::zero(ngen);
        f.sm()[1 << g] = 1.0;
        f
    }

    pub fn monomial(ngen: usize, mask: u32, v: f64) -> ExtForm {
        let mut f = ExtForm::zero(ngen);
        f.sm()[mask as usize] = v;
        f
    }

    pub fn ngen(&self) -> usize {
        self.ngen
    }

    pub fn coeff(&self, mask: u32) -> f64 {
        self.s()[mask as usize]
    }

    pub fn set_coeff(&mut self, mask: u32, v: f64) {
        self.sm()[mask as usize] = v;
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.s()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(m, &c)| (m as u32, c))
    }

    pub fn add(mut self, rhs: &ExtForm) -> ExtForm {
        debug_assert_eq!(self.ngen, rhs.ngen);
        for (a, b) in self.sm().iter_mut().zip(rhs.s().iter()) {
            *a += b;
        }
        self
    }

    pub fn sub(mut self, rhs: &ExtForm) -> ExtForm {
        debug_assert_eq!(self.ngen, rhs.ngen);
        for (a, b) in self.sm().iter_mut().zip(rhs.s().iter()) {
            *a -= b;
        }
        self
    }

    pub fn scale(mut self, s: f64) -> ExtForm {
        for c in self.sm() {
            *c *= s;
        }
        self
    }

    pub fn wedge(&self, rhs: &ExtForm) -> ExtForm {
        debug_assert_eq!(self.ngen, rhs.ngen);
        let mut out = ExtForm::zero(self.ngen);
        for (ma, ca) in self.iter_nonzero() {
            for (mb, cb) in rhs.iter_nonzero() {
                if ma & mb != 0 {
                    continue;
                }
                out.sm()[(ma | mb) as usize] += ca * cb * wedge_sign(ma, mb);
            }
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.s().iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Keeps only terms of the given homogeneous degree.
    pub fn degree_part(&self, deg: usize) -> ExtForm {
        let mut out = ExtForm::zero(self.ngen);
        for (m, c) in self.iter_nonzero() {
            if m.count_ones() as usize == deg {
                out.sm()[m as usize] = c;
            }
        }
        out
    }

    /// True if every nonzero term has the given degree (zero forms pass).
    pub fn is_homogeneous(&self, deg: usize) -> bool {
        self.iter_nonzero().all(|(m, _)| m.count_ones() as usize == deg)
    }

    /// Rewrites the form in another generator set by substituting each source
    /// generator with its image one-form (an algebra homomorphism).
    pub fn substitute(&self, target_ngen: usize, images: &[ExtForm]) -> ExtForm {
        assert_eq!(images.len(), self.ngen);
        let mut out = ExtForm::zero(target_ngen);
        for (m, c) in self.iter_nonzero() {
            let mut term = ExtForm::scalar(target_ngen, c);
            let mut bits = m;
            while bits != 0 {
                let g = bits.trailing_zeros() as usize;
                term = term.wedge(&images[g]);
                bits &= bits - 1;
            }
            out = out.add(&term);
        }
        out
    }

    /// Splits off the factor `e_g`: returns `beta` with `self = e_g ∧ beta + rest`,
    /// where `rest` collects the monomials not containing `g`.
    pub fn split_generator(&self, g: usize) -> (ExtForm, ExtForm) {
        let bit = 1u32 << g;
        let low_mask = bit - 1;
        let mut with = ExtForm::zero(self.ngen);
        let mut rest = ExtForm::zero(self.ngen);
        for (m, c) in self.iter_nonzero() {
            if m & bit != 0 {
                let sign = if (m & low_mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                with.sm()[(m & !bit) as usize] += sign * c;
            } else {
                rest.sm()[m as usize] += c;
            }
        }
        (with, rest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generators_anticommute() {
        let a = ExtForm::generator(4, 0);
        let b = ExtForm::generator(4, 2);
        let ab = a.wedge(&b);
        let ba = b.wedge(&a);
        assert_abs_diff_eq!(ab.coeff(0b101), 1.0);
        assert_abs_diff_eq!(ba.coeff(0b101), -1.0);
        assert_abs_diff_eq!(a.wedge(&a).max_abs(), 0.0);
    }

    #[test]
    fn wedge_is_associative() {
        let a = ExtForm::generator(4, 0).add(&ExtForm::generator(4, 3).scale(2.0));
        let b = ExtForm::generator(4, 1).scale(-0.5);
        let c = ExtForm::generator(4, 2).add(&ExtForm::scalar(4, 3.0));
        let l = a.wedge(&b).wedge(&c);
        let r = a.wedge(&b.wedge(&c));
        for m in 0..16 {
            assert_abs_diff_eq!(l.coeff(m), r.coeff(m), epsilon = 1e-15);
        }
    }

    #[test]
    fn split_recovers_the_form() {
        // f = 3 dx1^dx2 + 2 dx1^dth + 5 dx2^dth with dth = generator 2.
        let mut f = ExtForm::zero(3);
        f.set_coeff(0b011, 3.0);
        f.set_coeff(0b101, 2.0);
        f.set_coeff(0b110, 5.0);
        let (beta, rest) = f.split_generator(2);
        // dx1^dth = -dth^dx1, dx2^dth = -dth^dx2.
        assert_abs_diff_eq!(beta.coeff(0b001), -2.0);
        assert_abs_diff_eq!(beta.coeff(0b010), -5.0);
        assert_abs_diff_eq!(rest.coeff(0b011), 3.0);
        let rebuilt = ExtForm::generator(3, 2).wedge(&beta).add(&rest);
        for m in 0..8 {
            assert_abs_diff_eq!(rebuilt.coeff(m), f.coeff(m), epsilon = 1e-15);
        }
    }

    #[test]
    fn substitution_is_a_homomorphism() {
        // Substitute dy -> a dx1 + b dx2 + c dth into dx1 ^ dy.
        let src = ExtForm::generator(3, 0).wedge(&ExtForm::generator(3, 1));
        let images = vec![
            ExtForm::generator(3, 0),
            ExtForm::generator(3, 0)
                .scale(0.3)
                .add(&ExtForm::generator(3, 1).scale(0.7))
                .add(&ExtForm::generator(3, 2).scale(-1.1)),
            ExtForm::generator(3, 2),
        ];
        let out = src.substitute(3, &images);
        assert_abs_diff_eq!(out.coeff(0b011), 0.7);
        assert_abs_diff_eq!(out.coeff(0b101), -1.1);
        assert_abs_diff_eq!(out.coeff(0b110), 0.0);
    }
}
