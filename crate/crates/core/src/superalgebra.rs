//! Exact finite-dimensional superspace engine: the exterior algebra on `V*`
//! with wedge and contraction operators, Clifford actions, liftings of
//! endomorphisms, supertraces, and the generalized-Kronecker-delta closed
//! forms they contract to.
//!
//! Everything here is dense and small (`dim V = m <= 4`, so operators are at
//! most 16x16); the module is an oracle for the integrand derivations, not a
//! hot path.

use crate::forms::ExtForm;
use crate::linalg::permutations_with_sign;
use std::collections::HashMap;

/// An operator on the `2^m`-dimensional exterior algebra `Λ*(V*)`, as a dense
/// matrix over the monomial basis (bitmask order).
#[derive(Clone, Debug)]
pub struct SuperOp {
    m: usize,
    dim: usize,
    mat: Vec<f64>,
}

impl SuperOp {
    pub fn zero(m: usize) -> SuperOp {
        assert!(m <= 4);
        let dim = 1 << m;
        SuperOp {
            m,
            dim,
            mat: vec![0.0; dim * dim],
        }
    }

    pub fn identity(m: usize) -> SuperOp {
        let mut s = SuperOp::zero(m);
        for i in 0..s.dim {
            s.mat[i * s.dim + i] = 1.0;
        }
        s
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.mat[row * self.dim + col]
    }

    /// Elementary wedge operator `v^{*,i} ∧ ·`.
    pub fn wedge(m: usize, i: usize) -> SuperOp {
        assert!(i < m, "wedge index out of range");
        let mut s = SuperOp::zero(m);
        let bit = 1usize << i;
        for b in 0..s.dim {
            if b & bit == 0 {
                let below = (b & (bit - 1)).count_ones();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                s.mat[(b | bit) * s.dim + b] = sign;
            }
        }
        s
    }

    /// Elementary contraction `i_{v_j}`.
    pub fn contract(m: usize, j: usize) -> SuperOp {
        assert!(j < m, "contraction index out of range");
        let mut s = SuperOp::zero(m);
        let bit = 1usize << j;
        for b in 0..s.dim {
            if b & bit != 0 {
                let below = (b & (bit - 1)).count_ones();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                s.mat[(b & !bit) * s.dim + b] = sign;
            }
        }
        s
    }

    /// Clifford action of the vector `v`:
    /// `c(v) = v* ∧ - i_v` (`hat = false`) or `ĉ(v) = v* ∧ + i_v` (`hat = true`),
    /// with `v*` the metric dual of `v` with respect to `g`.
    pub fn clifford(v: &[f64], g: &[Vec<f64>], hat: bool) -> SuperOp {
        let m = v.len();
        let mut s = SuperOp::zero(m);
        for i in 0..m {
            let dual: f64 = (0..m).map(|k| g[i][k] * v[k]).sum();
            s = s.add(&SuperOp::wedge(m, i).scale(dual));
            let c = SuperOp::contract(m, i).scale(if hat { v[i] } else { -v[i] });
            s = s.add(&c);
        }
        s
    }

    /// Lifting of an endomorphism `B` (with `B v_i = B^j_i v_j`, `b[j][i] = B^j_i`)
    /// to the derivation `B♮ = -Σ B^j_i v^{*,i} ∧ i_{v_j}` on `Λ*(V*)`.
    pub fn lift(b: &[Vec<f64>]) -> SuperOp {
        let m = b.len();
        let mut s = SuperOp::zero(m);
        for j in 0..m {
            for i in 0..m {
                if b[j][i] != 0.0 {
                    let wc = SuperOp::wedge(m, i).mul(&SuperOp::contract(m, j));
                    s = s.add(&wc.scale(-b[j][i]));
                }
            }
        }
        s
    }

    pub fn add(mut self, rhs: &SuperOp) -> SuperOp {
        debug_assert_eq!(self.m, rhs.m);
        for (a, b) in self.mat.iter_mut().zip(rhs.mat.iter()) {
            *a += b;
        }
        self
    }

    pub fn sub(mut self, rhs: &SuperOp) -> SuperOp {
        debug_assert_eq!(self.m, rhs.m);
        for (a, b) in self.mat.iter_mut().zip(rhs.mat.iter()) {
            *a -= b;
        }
        self
    }

    pub fn scale(mut self, s: f64) -> SuperOp {
        for a in &mut self.mat {
            *a *= s;
        }
        self
    }

    pub fn mul(&self, rhs: &SuperOp) -> SuperOp {
        debug_assert_eq!(self.m, rhs.m);
        let d = self.dim;
        let mut out = SuperOp::zero(self.m);
        for r in 0..d {
            for k in 0..d {
                let a = self.mat[r * d + k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..d {
                    out.mat[r * d + c] += a * rhs.mat[k * d + c];
                }
            }
        }
        out
    }

    /// Conjugation by the grading operator: flips the sign of the odd part.
    pub fn tau_conjugate(&self) -> SuperOp {
        let d = self.dim;
        let mut out = self.clone();
        for r in 0..d {
            for c in 0..d {
                let parity = (r.count_ones() + c.count_ones()) % 2;
                if parity == 1 {
                    out.mat[r * d + c] = -out.mat[r * d + c];
                }
            }
        }
        out
    }

    /// Supertrace `tr_s[B] = tr[τ B] = Σ_b (-1)^{deg b} B_bb`.
    pub fn supertrace(&self) -> f64 {
        (0..self.dim)
            .map(|b| {
                let sign = if b.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                sign * self.mat[b * self.dim + b]
            })
            .sum()
    }

    /// Superbracket `[A, B] = AB - (-1)^{|A||B|} BA` for homogeneous-parity
    /// operands; inhomogeneous inputs are split by parity first.
    pub fn superbracket(&self, rhs: &SuperOp) -> SuperOp {
        let mut out = SuperOp::zero(self.m);
        for a_par in 0..2 {
            for b_par in 0..2 {
                let a = self.parity_part(a_par == 1);
                let b = rhs.parity_part(b_par == 1);
                let ab = a.mul(&b);
                let ba = b.mul(&a);
                let sign = if a_par == 1 && b_par == 1 { 1.0 } else { -1.0 };
                out = out.add(&ab).add(&ba.scale(sign));
            }
        }
        out
    }

    fn parity_part(&self, odd: bool) -> SuperOp {
        let d = self.dim;
        let mut out = SuperOp::zero(self.m);
        for r in 0..d {
            for c in 0..d {
                let par = (r.count_ones() + c.count_ones()) % 2 == 1;
                if par == odd {
                    out.mat[r * d + c] = self.mat[r * d + c];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// An operator with coefficients in an auxiliary exterior algebra (modeling
/// differential-form-valued endomorphism liftings): a sparse map from
/// auxiliary monomial to [`SuperOp`].
#[derive(Clone, Debug)]
pub struct FormValuedOp {
    m: usize,
    ngen: usize,
    terms: HashMap<u32, SuperOp>,
}

impl FormValuedOp {
    pub fn zero(m: usize, ngen: usize) -> FormValuedOp {
        FormValuedOp {
            m,
            ngen,
            terms: HashMap::new(),
        }
    }

    pub fn identity(m: usize, ngen: usize) -> FormValuedOp {
        let mut t = FormValuedOp::zero(m, ngen);
        t.terms.insert(0, SuperOp::identity(m));
        t
    }

    /// A single term `form ⊗ op`, distributed over the form's monomials.
    pub fn from_term(form: &ExtForm, op: &SuperOp, m: usize) -> FormValuedOp {
        let mut t = FormValuedOp::zero(m, form.ngen());
        for (mask, c) in form.iter_nonzero() {
            t.accumulate(mask, op.clone().scale(c));
        }
        t
    }

    fn accumulate(&mut self, mask: u32, op: SuperOp) {
        match self.terms.get_mut(&mask) {
            Some(existing) => {
                *existing = existing.clone().add(&op);
            }
            None => {
                self.terms.insert(mask, op);
            }
        }
    }

    pub fn add(mut self, rhs: &FormValuedOp) -> FormValuedOp {
        debug_assert_eq!(self.ngen, rhs.ngen);
        for (&mask, op) in &rhs.terms {
            self.accumulate(mask, op.clone());
        }
        self
    }

    pub fn scale(mut self, s: f64) -> FormValuedOp {
        for op in self.terms.values_mut() {
            *op = op.clone().scale(s);
        }
        self
    }

    /// Graded product: `(φ ⊗ A)(ψ ⊗ B) = (-1)^{|A||ψ|} (φ∧ψ) ⊗ AB`, realized
    /// for inhomogeneous `A` by conjugating its odd part past odd `ψ`.
    pub fn mul(&self, rhs: &FormValuedOp) -> FormValuedOp {
        debug_assert_eq!(self.ngen, rhs.ngen);
        let mut out = FormValuedOp::zero(self.m, self.ngen);
        for (&ma, a) in &self.terms {
            for (&mb, b) in &rhs.terms {
                if ma & mb != 0 {
                    continue;
                }
                let sign = crate::forms::wedge_sign(ma, mb);
                let a_moved = if mb.count_ones() % 2 == 1 {
                    a.tau_conjugate()
                } else {
                    a.clone()
                };
                out.accumulate(ma | mb, a_moved.mul(b).scale(sign));
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> FormValuedOp {
        let mut out = FormValuedOp::identity(self.m, self.ngen);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Termwise supertrace, as an auxiliary form.
    pub fn supertrace(&self) -> ExtForm {
        let mut f = ExtForm::zero(self.ngen);
        for (&mask, op) in &self.terms {
            let t = op.supertrace();
            if t != 0.0 {
                f.set_coeff(mask, f.coeff(mask) + t);
            }
        }
        f
    }

    /// Lifting of a matrix of form coefficients: `X♮ = -Σ X^j_i ⊗ v^{*,i} ∧ i_{v_j}`,
    /// with `x[j][i] = X^j_i`.
    pub fn lift(x: &[Vec<ExtForm>], m: usize, ngen: usize) -> FormValuedOp {
        let mut out = FormValuedOp::zero(m, ngen);
        for j in 0..m {
            for i in 0..m {
                let wc = SuperOp::wedge(m, i).mul(&SuperOp::contract(m, j));
                out = out.add(&FormValuedOp::from_term(&x[j][i].clone().scale(-1.0), &wc, m));
            }
        }
        out
    }

    /// Clifford-type odd operator with form coefficients:
    /// `Σ_j wedge_coeff[j] ⊗ (v^{*,j} ∧) - Σ_i contract_coeff[i] ⊗ i_{v_i}`.
    pub fn clifford_like(
        wedge_coeff: &[ExtForm],
        contract_coeff: &[ExtForm],
        m: usize,
        ngen: usize,
    ) -> FormValuedOp {
        let mut out = FormValuedOp::zero(m, ngen);
        for j in 0..m {
            out = out.add(&FormValuedOp::from_term(
                &wedge_coeff[j],
                &SuperOp::wedge(m, j),
                m,
            ));
            out = out.add(&FormValuedOp::from_term(
                &contract_coeff[j].clone().scale(-1.0),
                &SuperOp::contract(m, j),
                m,
            ));
        }
        out
    }
}

/// Generalized Kronecker delta `δ^{i1..ip}_{j1..jp}`: the signed permutation
/// matching of upper to lower indices (0 on repeats or mismatched sets).
pub fn generalized_delta(upper: &[usize], lower: &[usize]) -> f64 {
    let p = upper.len();
    debug_assert_eq!(p, lower.len());
    let mut sum = 0.0;
    'outer: for (perm, sign) in permutations_with_sign(p) {
        for a in 0..p {
            if upper[a] != lower[perm[a]] {
                continue 'outer;
            }
        }
        sum += sign;
    }
    sum
}

/// Evaluates `δ^{i1..i_{2n}}_{j1..j_{2n}} X1^{j1}_{i1} ∧ ... ∧ Xp^{jp}_{ip}`
/// for matrix-of-form factors (`factors[a][j][i] = (X_a)^j_i`), by summing over
/// permutation pairs: indices `i = τ`, `j = ρ` contribute `sgn(τ) sgn(ρ)`.
pub fn delta_contraction(factors: &[&[Vec<ExtForm>]]) -> ExtForm {
    let p = factors.len();
    let ngen = factors[0][0][0].ngen();
    let perms = permutations_with_sign(p);
    let mut sum = ExtForm::zero(ngen);
    for (tau, s_tau) in &perms {
        for (rho, s_rho) in &perms {
            let mut term = ExtForm::scalar(ngen, s_tau * s_rho);
            for a in 0..p {
                term = term.wedge(&factors[a][rho[a]][tau[a]]);
                if term.max_abs() == 0.0 {
                    break;
                }
            }
            sum = sum.add(&term);
        }
    }
    sum
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// The closed-form contraction of the first GBC term family:
/// `(-1)^k C_{2k-2}^{k-1} δ R..R P..P Υ..Υ Ξ` with `k` factors of `R`,
/// `2n-2k` of `P` and `k-1` of `Υ`.
pub fn g1_contraction(
    r: &[Vec<ExtForm>],
    p: &[Vec<ExtForm>],
    upsilon: &[Vec<ExtForm>],
    xi: &[Vec<ExtForm>],
    n: usize,
    k: usize,
) -> ExtForm {
    assert!(k >= 1 && k <= n);
    let mut factors: Vec<&[Vec<ExtForm>]> = Vec::with_capacity(2 * n);
    for _ in 0..k {
        factors.push(r);
    }
    for _ in 0..(2 * n - 2 * k) {
        factors.push(p);
    }
    for _ in 0..(k - 1) {
        factors.push(upsilon);
    }
    factors.push(xi);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    delta_contraction(&factors).scale(sign * binomial(2 * k - 2, k - 1))
}

/// Closed form for the theta term: `δ P..P Θ` with `2n-1` factors of `P`.
pub fn theta_contraction(p: &[Vec<ExtForm>], theta: &[Vec<ExtForm>], n: usize) -> ExtForm {
    let mut factors: Vec<&[Vec<ExtForm>]> = Vec::with_capacity(2 * n);
    for _ in 0..(2 * n - 1) {
        factors.push(p);
    }
    factors.push(theta);
    delta_contraction(&factors)
}

/// Synthetic data for validating the supertrace engine against the closed
/// forms, with the exact structural relations the derivation relies on:
/// `g` symmetric positive definite, `F^2 = g(y, y)`, `(∇*ω) = g (∇e)`.
pub mod synthetic {
    use super::*;
    use rand::Rng;

    pub struct Instance {
        pub n: usize,
        pub m: usize,
        pub ngen: usize,
        pub g: Vec<Vec<f64>>,
        pub y: Vec<f64>,
        pub f: f64,
        pub nabla_e: Vec<ExtForm>,
        pub r: Vec<Vec<ExtForm>>,
        pub p: Vec<Vec<ExtForm>>,
        pub theta: Vec<Vec<ExtForm>>,
    }

    // Coefficient scale of the random forms. The identities are exact, so the
    // comparisons use an absolute 1e-12 tolerance; keeping the inputs below 1
    // in magnitude keeps the roundoff of the 576-term permutation sums at
    // n = 2 a couple of orders below that.
    const COEFF_RANGE: f64 = 0.6;

    fn random_one_form<R: Rng>(rng: &mut R, ngen: usize) -> ExtForm {
        let mut f = ExtForm::zero(ngen);
        for g in 0..ngen {
            f.set_coeff(1 << g, rng.gen_range(-COEFF_RANGE..COEFF_RANGE));
        }
        f
    }

    fn random_two_form<R: Rng>(rng: &mut R, ngen: usize) -> ExtForm {
        let mut f = ExtForm::zero(ngen);
        for a in 0..ngen {
            for b in a + 1..ngen {
                f.set_coeff((1 << a) | (1 << b), rng.gen_range(-COEFF_RANGE..COEFF_RANGE));
            }
        }
        f
    }

    impl Instance {
        /// Draws a random instance in dimension `m = 2n` with `4n - 1`
        /// auxiliary generators (the dimension of the sphere bundle).
        pub fn random<R: Rng>(n: usize, rng: &mut R) -> Instance {
            let m = 2 * n;
            let ngen = 4 * n - 1;
            // SPD metric: B B^T + I/2.
            let b: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut g = vec![vec![0.0; m]; m];
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        g[i][j] += b[i][k] * b[j][k];
                    }
                }
                g[i][i] += 0.5;
            }
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0) + 0.1).collect();
            let mut f2 = 0.0;
            for i in 0..m {
                for j in 0..m {
                    f2 += g[i][j] * y[i] * y[j];
                }
            }
            let f = f2.sqrt();
            // Random covariant-derivative forms, projected g-orthogonal to the
            // unit section: g(∇e, e) = 0 holds identically in the geometry
            // (g(e,e) = 1 plus almost-metricity) and the closed-form
            // derivation reorders c(e) past c(∇e) through it.
            let raw: Vec<ExtForm> = (0..m).map(|_| random_one_form(rng, ngen)).collect();
            let mut pairing = ExtForm::zero(ngen);
            for j in 0..m {
                let fyj: f64 = (0..m).map(|i| g[j][i] * y[i]).sum::<f64>() / f;
                pairing = pairing.add(&raw[j].clone().scale(fyj));
            }
            let nabla_e: Vec<ExtForm> = (0..m)
                .map(|j| raw[j].clone().sub(&pairing.clone().scale(y[j] / f)))
                .collect();
            let mat_of = |rng: &mut R| -> Vec<Vec<ExtForm>> {
                (0..m)
                    .map(|_| (0..m).map(|_| random_two_form(rng, ngen)).collect())
                    .collect()
            };
            let r = mat_of(rng);
            let p = mat_of(rng);
            let theta: Vec<Vec<ExtForm>> = (0..m)
                .map(|_| (0..m).map(|_| random_one_form(rng, ngen)).collect())
                .collect();
            Instance {
                n,
                m,
                ngen,
                g,
                y,
                f,
                nabla_e,
                r,
                p,
                theta,
            }
        }

        pub fn e_components(&self) -> Vec<f64> {
            self.y.iter().map(|v| v / self.f).collect()
        }

        /// `F_{y^i} = g_ij y^j / F` (the Hilbert form components).
        pub fn f_y(&self) -> Vec<f64> {
            (0..self.m)
                .map(|i| (0..self.m).map(|j| self.g[i][j] * self.y[j]).sum::<f64>() / self.f)
                .collect()
        }

        /// `(∇*ω)_i = g_ik (∇e)^k` — the duality relation of the Chern connection.
        pub fn nabla_star_omega(&self) -> Vec<ExtForm> {
            (0..self.m)
                .map(|i| {
                    let mut acc = ExtForm::zero(self.ngen);
                    for k in 0..self.m {
                        acc = acc.add(&self.nabla_e[k].clone().scale(self.g[i][k]));
                    }
                    acc
                })
                .collect()
        }

        /// `Υ^j_i = (∇*ω)_i ∧ (∇e)^j`.
        pub fn upsilon(&self) -> Vec<Vec<ExtForm>> {
            let w = self.nabla_star_omega();
            (0..self.m)
                .map(|j| {
                    (0..self.m)
                        .map(|i| w[i].wedge(&self.nabla_e[j]))
                        .collect()
                })
                .collect()
        }

        /// `Ξ^j_i = F_{y^i} (∇e)^j - (y^j/F) (∇*ω)_i`.
        pub fn xi(&self) -> Vec<Vec<ExtForm>> {
            let w = self.nabla_star_omega();
            let fy = self.f_y();
            let e = self.e_components();
            (0..self.m)
                .map(|j| {
                    (0..self.m)
                        .map(|i| {
                            self.nabla_e[j]
                                .clone()
                                .scale(fy[i])
                                .sub(&w[i].clone().scale(e[j]))
                        })
                        .collect()
                })
                .collect()
        }

        pub fn c_e_op(&self) -> FormValuedOp {
            let fy = self.f_y();
            let e = self.e_components();
            let mut out = FormValuedOp::zero(self.m, self.ngen);
            for l in 0..self.m {
                let w = ExtForm::scalar(self.ngen, fy[l]);
                out = out.add(&FormValuedOp::from_term(&w, &SuperOp::wedge(self.m, l), self.m));
                let c = ExtForm::scalar(self.ngen, -e[l]);
                out = out.add(&FormValuedOp::from_term(&c, &SuperOp::contract(self.m, l), self.m));
            }
            out
        }

        pub fn c_nabla_e_op(&self) -> FormValuedOp {
            FormValuedOp::clifford_like(
                &self.nabla_star_omega(),
                &self.nabla_e,
                self.m,
                self.ngen,
            )
        }

        /// Engine evaluation of `tr_s[c(e) c(∇e)^{2k-1} (R♮)^k (P♮)^{2n-2k}]`.
        ///
        /// For k = 1 (so in particular on surfaces) this equals the closed-form
        /// delta contraction identically. For k >= 2 the closed form keeps only
        /// the mixed wedge-contraction pairings of the `c(∇e)` powers; the
        /// remaining pairings are exercised through [`Instance::engine_chain_term1`].
        pub fn engine_term1(&self, k: usize) -> ExtForm {
            let r_nat = FormValuedOp::lift(&self.r, self.m, self.ngen);
            let p_nat = FormValuedOp::lift(&self.p, self.m, self.ngen);
            let prod = self
                .c_e_op()
                .mul(&self.c_nabla_e_op().pow(2 * k - 1))
                .mul(&r_nat.pow(k))
                .mul(&p_nat.pow(2 * self.n - 2 * k));
            prod.supertrace()
        }

        /// Engine evaluation of the dressed-chain form of the same term:
        /// `(-1)^k C_{2k-2}^{k-1} tr_s[(R-chains)(P-chains)(Υ-chains)(Ξ-chain)]`
        /// with each factor `X` entering as `Σ X^j_i ⊗ v^{*,i} ∧ i_{v_j}`. The
        /// supertrace-contraction rule turns exactly this into the closed-form
        /// delta expression, for any dressing data.
        pub fn engine_chain_term1(&self, k: usize) -> ExtForm {
            let chain = |x: &Vec<Vec<ExtForm>>| -> FormValuedOp {
                let mut out = FormValuedOp::zero(self.m, self.ngen);
                for j in 0..self.m {
                    for i in 0..self.m {
                        let wc = SuperOp::wedge(self.m, i).mul(&SuperOp::contract(self.m, j));
                        out = out.add(&FormValuedOp::from_term(&x[j][i], &wc, self.m));
                    }
                }
                out
            };
            let mut prod = FormValuedOp::identity(self.m, self.ngen);
            for _ in 0..k {
                prod = prod.mul(&chain(&self.r));
            }
            let p_chain = chain(&self.p);
            for _ in 0..(2 * self.n - 2 * k) {
                prod = prod.mul(&p_chain);
            }
            let ups = self.upsilon();
            let ups_chain = chain(&ups);
            for _ in 0..(k - 1) {
                prod = prod.mul(&ups_chain);
            }
            prod = prod.mul(&chain(&self.xi()));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prod.supertrace()
                .scale(sign * binomial(2 * k - 2, k - 1))
        }

        /// Closed-form `(-1)^k C_{2k-2}^{k-1} δ[R..R P..P Υ..Υ Ξ]`.
        pub fn closed_form_term1(&self, k: usize) -> ExtForm {
            g1_contraction(&self.r, &self.p, &self.upsilon(), &self.xi(), self.n, k)
        }

        /// Engine evaluation of `tr_s[θ♮ (P♮)^{2n-1}]`.
        pub fn engine_theta(&self) -> ExtForm {
            let t_nat = FormValuedOp::lift(&self.theta, self.m, self.ngen);
            let p_nat = FormValuedOp::lift(&self.p, self.m, self.ngen);
            t_nat.mul(&p_nat.pow(2 * self.n - 1)).supertrace()
        }

        /// Closed-form `δ[P..P Θ]`.
        pub fn closed_form_theta(&self) -> ExtForm {
            theta_contraction(&self.p, &self.theta, self.n)
        }
    }
}
