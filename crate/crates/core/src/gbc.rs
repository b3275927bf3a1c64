//! Pointwise Gauss-Bonnet-Chern integrands on the sphere bundle of a surface:
//! the two delta-contraction term families in coordinates, the three
//! special-frame surface integrands, the Berwald Pfaffian integrand, the
//! fiberwise Gaussian (Mathai-Quillen) check, and the vertical-exactness
//! probe.
//!
//! All of the theorem normalization constants live here, so the integrators
//! downstream only sum raw restricted forms.

use crate::chern::{christoffel, pfaffian_forms, special_frame, ChernData, SpecialFrame};
use crate::error::{GeometryError, Result};
use crate::finsler::{FinslerData, JET_ORDER};
use crate::forms::{ExtForm, GEN_DTHETA, GEN_DX, GEN_DY, SM_NGEN, TM_NGEN};
use crate::jets::MAX_VARS;
use crate::linalg::solve;
use crate::metric::{BaseData, ChartId, MetricSpec};
use crate::superalgebra::{delta_contraction, FormValuedOp, SuperOp};
use std::f64::consts::PI;

/// Everything needed at one point of the sphere bundle: the Finsler/Chern
/// package at the indicatrix point `y(theta) = u(theta)/F(x, u(theta))` and
/// the pullback data of the fiber parametrization.
#[derive(Clone, Debug)]
pub struct SmPoint {
    pub fd: FinslerData,
    pub cd: ChernData,
    pub frame: SpecialFrame,
    pub theta: f64,
    /// Indicatrix radius `1/F(x, u(theta))` (times the homogeneity scale).
    pub radius: f64,
    /// `d y^i / d theta` along the indicatrix.
    pub v_fiber: [f64; 2],
    /// `H^i_j = d y^i / d x^j + N^i_j`: the `dx` components of restricted `delta-y`.
    pub h_fiber: [[f64; 2]; 2],
}

impl SmPoint {
    pub fn at_angle(
        spec: &MetricSpec,
        bd: &BaseData,
        chart: ChartId,
        x: [f64; 2],
        theta: f64,
    ) -> Result<SmPoint> {
        SmPoint::at_angle_scaled(spec, bd, chart, x, theta, 1.0)
    }

    /// Same point of the projective sphere bundle represented by `scale * y`;
    /// every restricted integrand must be independent of `scale`.
    pub fn at_angle_scaled(
        spec: &MetricSpec,
        bd: &BaseData,
        chart: ChartId,
        x: [f64; 2],
        theta: f64,
        scale: f64,
    ) -> Result<SmPoint> {
        let u = [theta.cos(), theta.sin()];
        let f_at_u = spec.f_value(chart, x, u);
        let radius = scale / f_at_u;
        let y = [radius * u[0], radius * u[1]];
        let fd = FinslerData::compute(spec, bd, chart, x, y)?;
        let cd = christoffel(&fd);
        let frame = special_frame(&fd, &cd);
        // Parametrization derivatives from homogeneity:
        //   dy/dtheta = r u' - r^2/scale^2 (F_y . u') u   (F_y 0-homogeneous)
        //   dy^i/dx^j = -y^i F_{x^j}(x, y) / scale^2      (F_x 1-homogeneous)
        let du = [-theta.sin(), theta.cos()];
        let fy_du = fd.f_y[0] * du[0] + fd.f_y[1] * du[1];
        let s2 = scale * scale;
        let v_fiber = [
            radius * du[0] - radius * radius / s2 * fy_du * u[0],
            radius * du[1] - radius * radius / s2 * fy_du * u[1],
        ];
        let h_fiber = [
            [
                fd.n_conn[0][0] - y[0] * fd.f_x[0] / s2,
                fd.n_conn[0][1] - y[0] * fd.f_x[1] / s2,
            ],
            [
                fd.n_conn[1][0] - y[1] * fd.f_x[0] / s2,
                fd.n_conn[1][1] - y[1] * fd.f_x[1] / s2,
            ],
        ];
        Ok(SmPoint {
            fd,
            cd,
            frame,
            theta,
            radius,
            v_fiber,
            h_fiber,
        })
    }

    /// Images of the ambient generators `{dx^1, dx^2, delta-y^1, delta-y^2}`
    /// under restriction to the sphere bundle chart `(x, theta)`.
    pub fn restriction_images(&self) -> [ExtForm; TM_NGEN] {
        let dx1 = ExtForm::generator(SM_NGEN, 0);
        let dx2 = ExtForm::generator(SM_NGEN, 1);
        let dth = ExtForm::generator(SM_NGEN, GEN_DTHETA);
        let dy = |i: usize| -> ExtForm {
            ExtForm::generator(SM_NGEN, 0)
                .scale(self.h_fiber[i][0])
                .add(&ExtForm::generator(SM_NGEN, 1).scale(self.h_fiber[i][1]))
                .add(&dth.clone().scale(self.v_fiber[i]))
        };
        [dx1, dx2, dy(0), dy(1)]
    }

    pub fn restrict(&self, ambient: &ExtForm) -> ExtForm {
        ambient.substitute(SM_NGEN, &self.restriction_images())
    }

    /// `F_{y^i} delta-y^i` must pull back to zero on the sphere bundle.
    pub fn constraint_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let v: f64 = (0..2).map(|i| self.fd.f_y[i] * self.v_fiber[i]).sum();
        worst = worst.max(v.abs());
        for j in 0..2 {
            let h: f64 = (0..2).map(|i| self.fd.f_y[i] * self.h_fiber[i][j]).sum();
            worst = worst.max(h.abs());
        }
        worst
    }
}

/// A restricted form that is only well defined under fiber integration
/// (chart-dependent as a form on the sphere bundle); the raw form is only
/// reachable through the fiber integrator.
#[derive(Clone, Debug)]
pub struct FiberOnlyForm(pub(crate) ExtForm);

impl FiberOnlyForm {
    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// Coefficient of the top monomial, for per-node diagnostic dumps only;
    /// base integration goes through the fiber integrator.
    pub fn top_coefficient(&self) -> f64 {
        self.0.coeff(0b111)
    }
}

/// `(∇e)^i = delta-y^i/F - (y^i/F) dlogF` and its metric dual
/// `(∇*ω)_i = g_ik (∇e)^k`, as ambient form values.
pub fn nabla_e(fd: &FinslerData) -> ([ExtForm; 2], [ExtForm; 2]) {
    let mut dlog_f = ExtForm::zero(TM_NGEN);
    for k in 0..2 {
        dlog_f = dlog_f.add(&ExtForm::generator(TM_NGEN, GEN_DY[k]).scale(fd.f_y[k] / fd.f));
    }
    let grad: [ExtForm; 2] = std::array::from_fn(|i| {
        ExtForm::generator(TM_NGEN, GEN_DY[i])
            .scale(1.0 / fd.f)
            .sub(&dlog_f.clone().scale(fd.y[i] / fd.f))
    });
    let dual: [ExtForm; 2] = std::array::from_fn(|i| {
        grad[0]
            .clone()
            .scale(fd.g[i][0])
            .add(&grad[1].clone().scale(fd.g[i][1]))
    });
    (grad, dual)
}

/// The dual computed the other way: `(∇*ω)_i = dF_{y^i} - F_{y^j} varpi^j_i`,
/// with `d` expanded over `{dx, delta-y}`. Agreement with [`nabla_e`]'s dual
/// is the numerical content of the almost-metricity duality.
pub fn nabla_star_omega_direct(fd: &FinslerData, cd: &ChernData) -> [ExtForm; 2] {
    std::array::from_fn(|i| {
        let fyi_jet = fd.f_jet.derivative(2 + i);
        let mut w = ExtForm::zero(TM_NGEN);
        for k in 0..2 {
            w = w.add(
                &ExtForm::generator(TM_NGEN, GEN_DX[k]).scale(fd.delta_x(&fyi_jet, k).value()),
            );
            w = w.add(
                &ExtForm::generator(TM_NGEN, GEN_DY[k]).scale(fyi_jet.derivative(2 + k).value()),
            );
        }
        for j in 0..2 {
            w = w.sub(&cd.varpi(j, i).clone().scale(fd.f_y[j]));
        }
        w
    })
}

/// `Ξ^j_i = F_{y^i} (∇e)^j - (y^j/F) (∇*ω)_i` as a matrix of ambient 1-forms
/// (`xi[j][i]`, upper index first).
pub fn xi_matrix(fd: &FinslerData) -> Vec<Vec<ExtForm>> {
    let (grad, dual) = nabla_e(fd);
    (0..2)
        .map(|j| {
            (0..2)
                .map(|i| {
                    grad[j]
                        .clone()
                        .scale(fd.f_y[i])
                        .sub(&dual[i].clone().scale(fd.y[j] / fd.f))
                })
                .collect()
        })
        .collect()
}

/// `Υ^j_i = (∇*ω)_i ∧ (∇e)^j` (absent from the surface integrands but used by
/// the engine cross-checks).
pub fn upsilon_matrix(fd: &FinslerData) -> Vec<Vec<ExtForm>> {
    let (grad, dual) = nabla_e(fd);
    (0..2)
        .map(|j| (0..2).map(|i| dual[i].wedge(&grad[j])).collect())
        .collect()
}

fn r_form_matrix(cd: &ChernData) -> Vec<Vec<ExtForm>> {
    (0..2)
        .map(|j| {
            (0..2)
                .map(|i| {
                    let mut w = ExtForm::zero(TM_NGEN);
                    for k in 0..2 {
                        for l in 0..2 {
                            if cd.r[j][i][k][l] != 0.0 {
                                let dx = ExtForm::generator(TM_NGEN, GEN_DX[k])
                                    .wedge(&ExtForm::generator(TM_NGEN, GEN_DX[l]));
                                w = w.add(&dx.scale(0.5 * cd.r[j][i][k][l]));
                            }
                        }
                    }
                    w
                })
                .collect()
        })
        .collect()
}

fn p_form_matrix(cd: &ChernData, f: f64) -> Vec<Vec<ExtForm>> {
    (0..2)
        .map(|j| {
            (0..2)
                .map(|i| {
                    let mut w = ExtForm::zero(TM_NGEN);
                    for k in 0..2 {
                        for l in 0..2 {
                            if cd.p[j][i][k][l] != 0.0 {
                                let m = ExtForm::generator(TM_NGEN, GEN_DX[k])
                                    .wedge(&ExtForm::generator(TM_NGEN, GEN_DY[l]));
                                w = w.add(&m.scale(cd.p[j][i][k][l] / f));
                            }
                        }
                    }
                    w
                })
                .collect()
        })
        .collect()
}

fn varpi_form_matrix(cd: &ChernData) -> Vec<Vec<ExtForm>> {
    (0..2)
        .map(|j| (0..2).map(|i| cd.varpi(j, i).clone()).collect())
        .collect()
}

/// Normalization shared by both coordinate term families: `1/((2pi)^{2n} (2n)!)`.
fn t2_normalization() -> f64 {
    1.0 / ((2.0 * PI).powi(2) * 2.0)
}

/// First coordinate term family on a surface (n = 1, k = 1):
/// `-(1/(8 pi^2)) delta^{i1 i2}_{j1 j2} R^{j1}_{i1} Ξ^{j2}_{i2}`, restricted to
/// the sphere bundle. Globally defined.
pub fn theorem2_term1(pt: &SmPoint) -> Result<ExtForm> {
    let r = r_form_matrix(&pt.cd);
    let xi = xi_matrix(&pt.fd);
    let contracted = delta_contraction(&[&r, &xi]);
    expect_degree(&contracted, 3)?;
    Ok(pt.restrict(&contracted).scale(-t2_normalization()))
}

/// Second coordinate term family on a surface:
/// `(1/(8 pi^2)) delta^{i1 i2}_{j1 j2} P^{j1}_{i1} varpi^{j2}_{i2}`, restricted.
/// Chart-dependent before fiber integration, hence fiber-only.
pub fn theorem2_term2(pt: &SmPoint) -> Result<FiberOnlyForm> {
    let p = p_form_matrix(&pt.cd, pt.fd.f);
    let varpi = varpi_form_matrix(&pt.cd);
    let contracted = delta_contraction(&[&p, &varpi]);
    expect_degree(&contracted, 3)?;
    Ok(FiberOnlyForm(
        pt.restrict(&contracted).scale(t2_normalization()),
    ))
}

/// The vertical-exactness probe: the same contraction with `varpi` replaced by
/// a constant matrix. Its fiber integral must vanish identically.
pub fn theorem2_term2_constant_probe(pt: &SmPoint, theta: &[Vec<f64>]) -> FiberOnlyForm {
    let p = p_form_matrix(&pt.cd, pt.fd.f);
    let theta_forms: Vec<Vec<ExtForm>> = (0..2)
        .map(|j| {
            (0..2)
                .map(|i| ExtForm::scalar(TM_NGEN, theta[j][i]))
                .collect()
        })
        .collect();
    let contracted = delta_contraction(&[&p, &theta_forms]);
    FiberOnlyForm(pt.restrict(&contracted).scale(t2_normalization()))
}

/// Frame components of the restricted curvature in the coframe wedges:
/// `Omega_a^b = R_{a~12}^{~b} w1^w2 + P_{a~11}^{~b} w1^w3 + P_{a~21}^{~b} w2^w3`.
pub struct FrameCurvatureComponents {
    pub r_12: [[f64; 2]; 2],
    pub p_11: [[f64; 2]; 2],
    pub p_21: [[f64; 2]; 2],
}

pub fn frame_curvature_components(pt: &SmPoint) -> Result<FrameCurvatureComponents> {
    let w1 = pt.restrict(&pt.frame.omega[0]);
    let w2 = pt.restrict(&pt.frame.omega[1]);
    let w3 = pt.restrict(&pt.frame.omega3);
    let basis = [w1.wedge(&w2), w1.wedge(&w3), w2.wedge(&w3)];
    let masks: [u32; 3] = [0b011, 0b101, 0b110];
    let mut r_12 = [[0.0; 2]; 2];
    let mut p_11 = [[0.0; 2]; 2];
    let mut p_21 = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let omega_ab = pt.restrict(&pt.frame.curv[a][b]);
            let mut mat: Vec<Vec<f64>> = (0..3)
                .map(|row| (0..3).map(|col| basis[col].coeff(masks[row])).collect())
                .collect();
            let mut rhs: Vec<f64> = (0..3).map(|row| omega_ab.coeff(masks[row])).collect();
            let sol = solve(&mut mat, &mut rhs).ok_or(GeometryError::DegreeMismatch {
                expected: 3,
                got: 3,
            })?;
            r_12[a][b] = sol[0];
            p_11[a][b] = sol[1];
            p_21[a][b] = sol[2];
        }
    }
    Ok(FrameCurvatureComponents { r_12, p_11, p_21 })
}

/// The three special-frame surface integrands, normalized so that the Euler
/// characteristic is `int(r_term) + int_M int_fiber (p1_term + p2_term)`.
pub struct Corollary1Integrands {
    /// `(1/(4 pi^2)) R_{1~12}^{~2} w1 w2 w3` — global on the sphere bundle.
    pub r_term: ExtForm,
    /// `-(1/(4 pi^2)) (1/F^3)(G_1 y^1 + G_2 y^2) P_{1~11}^{~1} w1 w2 w3`.
    pub p1_term: FiberOnlyForm,
    /// `(1/(4 pi^2)) [F_{y^2}/sqrt(g) ((log F)_{x^1} - G_1/F^2)
    ///   - F_{y^1}/sqrt(g) ((log F)_{x^2} - G_2/F^2)] P_{2~11}^{~1} w1 w2 w3`,
    /// with the full-partial reading of `(log F)_x`.
    pub p2_term: FiberOnlyForm,
}

/// Spray covector `G_i = (1/4)(y^j [F^2]_{y^i x^j} - [F^2]_{x^i})`.
pub fn spray_covector(fd: &FinslerData) -> [f64; 2] {
    std::array::from_fn(|i| {
        let mut v = 0.0;
        for j in 0..2 {
            let mut e = [0u8; MAX_VARS];
            e[2 + i] += 1;
            e[j] += 1;
            v += fd.y[j] * fd.w.partial(&e);
        }
        let mut e = [0u8; MAX_VARS];
        e[i] += 1;
        (v - fd.w.partial(&e)) / 4.0
    })
}

pub fn corollary1_integrands(pt: &SmPoint) -> Result<Corollary1Integrands> {
    let comps = frame_curvature_components(pt)?;
    let w1 = pt.restrict(&pt.frame.omega[0]);
    let w2 = pt.restrict(&pt.frame.omega[1]);
    let w3 = pt.restrict(&pt.frame.omega3);
    let vol3 = w1.wedge(&w2).wedge(&w3);
    let norm = 1.0 / (2.0 * PI).powi(2);
    let fd = &pt.fd;
    let g_cov = spray_covector(fd);
    let gy = g_cov[0] * fd.y[0] + g_cov[1] * fd.y[1];

    let r_term = vol3.clone().scale(norm * comps.r_12[0][1]);
    let p1_term = vol3
        .clone()
        .scale(-norm * gy / fd.f.powi(3) * comps.p_11[0][0]);
    let log_f_x = [fd.f_x[0] / fd.f, fd.f_x[1] / fd.f];
    let f2 = fd.f * fd.f;
    let bracket = fd.f_y[1] / fd.sqrt_g * (log_f_x[0] - g_cov[0] / f2)
        - fd.f_y[0] / fd.sqrt_g * (log_f_x[1] - g_cov[1] / f2);
    let p2_term = vol3.scale(norm * bracket * comps.p_11[1][0]);
    Ok(Corollary1Integrands {
        r_term,
        p1_term: FiberOnlyForm(p1_term),
        p2_term: FiberOnlyForm(p2_term),
    })
}

/// Berwald gate threshold on `max |P|`.
pub const BERWALD_GATE: f64 = 1e-8;

/// Berwald-space integrand:
/// `(-1/(2 pi))^n (1/Vol(S^{2n-1})) Pf(skew Omega) ^ omega_1^2`, restricted.
/// Rejects inputs whose Chern-Minkowski curvature exceeds the gate.
pub fn berwald_integrand(pt: &SmPoint) -> Result<ExtForm> {
    let p_norm = pt.cd.p_norm();
    if p_norm > BERWALD_GATE {
        return Err(GeometryError::BerwaldGate {
            p_norm,
            gate: BERWALD_GATE,
        });
    }
    let skew = pt.frame.skew_curvature();
    let mat: Vec<Vec<ExtForm>> = (0..2)
        .map(|a| (0..2).map(|b| skew[a][b].clone()).collect())
        .collect();
    let pf = pfaffian_forms(&mat)?;
    // The fiber volume factor omega^{2n}_1 ... omega^{2n}_{2n-1} is just the
    // connection form omega_1^2 on a surface.
    let omega_12 = &pt.frame.conn[0][1];
    let ambient = pf.wedge(omega_12);
    let norm = -1.0 / (2.0 * PI) / vol_sphere(1);
    Ok(pt.restrict(&ambient).scale(norm))
}

/// Volume of the unit sphere `S^{2n-1}`: `2 pi^n / (n-1)!`.
pub fn vol_sphere(n: usize) -> f64 {
    let mut fact = 1.0;
    for k in 1..n {
        fact *= k as f64;
    }
    2.0 * PI.powi(n as i32) / fact
}

fn expect_degree(w: &ExtForm, deg: usize) -> Result<()> {
    if w.is_homogeneous(deg) {
        Ok(())
    } else {
        Err(GeometryError::DegreeMismatch {
            expected: deg,
            got: (0..=4)
                .find(|&d| d != deg && w.degree_part(d).max_abs() > 0.0)
                .unwrap_or(0),
        })
    }
}

/// Result of the fiberwise Mathai-Quillen Gaussian check at a base point.
pub struct MqCheck {
    /// Numerically integrated `dx^1 ^ dx^2` coefficient of the supertrace Gaussian.
    pub integral: f64,
    /// Target `(-2 pi)^n Pf(R^TM)(x)` coefficient.
    pub expected: f64,
    /// Gaussian tail bound for the truncated fiber integral.
    pub tail_bound: f64,
}

/// Evaluates the fiberwise superconnection Gaussian for a Riemannian metric:
/// the exponent `-1/4 Omega^a_b (c-hat(e_b)+c(e_b))(c-hat(e_a)-c(e_a))
/// + T dy^a c(e_a) - T^2 |y|^2` in a parallel orthonormal frame at `x`; the
/// fiber integral of the supertrace's top form must equal `(-2 pi)^n Pf(R)(x)`.
pub fn mq_fiber_check(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    t_scale: f64,
    cutoff: f64,
    radial_nodes: usize,
) -> Result<MqCheck> {
    if !spec.is_riemannian_family() {
        return Err(GeometryError::InvalidParameter {
            metric: spec.name.clone(),
            name: "family".into(),
            reason: "the fiberwise Gaussian check targets Pf(R^TM) and needs a Riemannian metric"
                .into(),
        });
    }
    let bd = spec.base_data(chart, x, JET_ORDER);
    // Any y gives the same Riemannian curvature; use a fixed direction.
    let fd = FinslerData::compute(spec, &bd, chart, x, [0.6, 0.8])?;
    let cd = christoffel(&fd);

    // g-orthonormal oriented frame at x by Gram-Schmidt on the coordinate frame.
    let g = fd.g;
    let u1 = [1.0 / g[0][0].sqrt(), 0.0];
    let w2 = [-g[0][1] / g[0][0], 1.0];
    let w2n = (g[0][0] * w2[0] * w2[0] + 2.0 * g[0][1] * w2[0] * w2[1] + g[1][1] * w2[1] * w2[1])
        .sqrt();
    let u = [u1, [w2[0] / w2n, w2[1] / w2n]];
    let det_u = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let v = [
        [u[1][1] / det_u, -u[1][0] / det_u],
        [-u[0][1] / det_u, u[0][0] / det_u],
    ];

    // Frame curvature 2-forms Omega_a^b = v^b_i R^i_j u_a^j over the auxiliary
    // generators (dx1, dx2, dy1, dy2); dy are fiber coordinates of the frame.
    let ngen = 4;
    let mut omega = vec![vec![ExtForm::zero(ngen); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut w = ExtForm::zero(ngen);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            let c = 0.5 * cd.r[i][j][k][l] * v[b][i] * u[a][j];
                            if c != 0.0 {
                                w = w.add(
                                    &ExtForm::generator(ngen, k)
                                        .wedge(&ExtForm::generator(ngen, l))
                                        .scale(c),
                                );
                            }
                        }
                    }
                }
            }
            omega[a][b] = w;
        }
    }
    // Pf(R^TM) = Omega_1^2 for an oriented orthonormal surface frame.
    let pf_coeff = omega[0][1].coeff(0b0011);

    let m = 2;
    let id_metric: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let basis = |i: usize| -> Vec<f64> { (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    // Lifting of the curvature endomorphism: R e_a = Omega_a^b e_b gives
    // R♮ = -1/4 Σ Omega_a^b (ĉ(e_a)+c(e_a)) (ĉ(e_b)-c(e_b)), wedge on `a`.
    let mut exponent = FormValuedOp::zero(m, ngen);
    for a in 0..2 {
        for b in 0..2 {
            let ha = SuperOp::clifford(&basis(a), &id_metric, true);
            let ca = SuperOp::clifford(&basis(a), &id_metric, false);
            let hb = SuperOp::clifford(&basis(b), &id_metric, true);
            let cb = SuperOp::clifford(&basis(b), &id_metric, false);
            let block = ha.add(&ca).mul(&hb.sub(&cb));
            exponent = exponent.add(&FormValuedOp::from_term(
                &omega[a][b].clone().scale(-0.25),
                &block,
                m,
            ));
        }
    }
    for a in 0..2 {
        let ca = SuperOp::clifford(&basis(a), &id_metric, false);
        exponent = exponent.add(&FormValuedOp::from_term(
            &ExtForm::generator(ngen, 2 + a).scale(t_scale),
            &ca,
            m,
        ));
    }
    // exp of the nilpotent part: the auxiliary degree caps the series at 4.
    let mut series = FormValuedOp::identity(m, ngen);
    let mut power = FormValuedOp::identity(m, ngen);
    let mut fact = 1.0;
    for j in 1..=4usize {
        power = power.mul(&exponent);
        fact *= j as f64;
        series = series.add(&power.clone().scale(1.0 / fact));
    }
    let kappa = series.supertrace().coeff(0b1111);

    // Gaussian-weighted radial quadrature over the truncated fiber.
    let radius = cutoff / t_scale;
    let (nodes, weights) = crate::quadrature::gauss_legendre(radial_nodes, 0.0, radius);
    let mut gauss = 0.0;
    for (r, w) in nodes.iter().zip(weights.iter()) {
        gauss += w * r * (-t_scale * t_scale * r * r).exp();
    }
    gauss *= 2.0 * PI;
    let tail_bound =
        kappa.abs().max(1.0) * PI / (t_scale * t_scale) * (-t_scale * t_scale * radius * radius).exp();
    if tail_bound > 1e-9 {
        return Err(GeometryError::Inconclusive {
            residual: tail_bound,
        });
    }
    Ok(MqCheck {
        integral: kappa * gauss,
        expected: (-2.0 * PI) * pf_coeff,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn sm_point(name: &str, chart: usize, x: [f64; 2], theta: f64) -> SmPoint {
        let spec = MetricSpec::catalog(name, &BTreeMap::new()).unwrap();
        let bd = spec.base_data(chart, x, JET_ORDER);
        SmPoint::at_angle(&spec, &bd, chart, x, theta).unwrap()
    }

    #[test]
    fn indicatrix_point_has_unit_norm() {
        let pt = sm_point("randers-s2", 0, [0.4, -0.3], 1.1);
        assert_abs_diff_eq!(pt.fd.f, 1.0, epsilon = 1e-14);
        assert!(pt.constraint_defect() < 1e-10);
    }

    #[test]
    fn euclidean_nabla_e_keeps_the_orthogonal_part() {
        let pt = sm_point("flat-t2", 0, [0.3, 0.3], 0.7);
        let (grad, _) = nabla_e(&pt.fd);
        for i in 0..2 {
            for k in 0..2 {
                let expect = if i == k { 1.0 } else { 0.0 };
                let got = grad[i].coeff(1 << GEN_DY[k]);
                let correction = pt.fd.y[i] * pt.fd.f_y[k];
                assert_abs_diff_eq!(got, expect - correction, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn nabla_e_contracts_to_zero_against_e() {
        let pt = sm_point("randers-s2", 0, [0.5, 0.1], 2.3);
        let (grad, _) = nabla_e(&pt.fd);
        let mut paired = ExtForm::zero(TM_NGEN);
        for i in 0..2 {
            for k in 0..2 {
                paired = paired.add(&grad[k].clone().scale(pt.fd.g[i][k] * pt.fd.y[i] / pt.fd.f));
            }
        }
        assert!(paired.max_abs() < 1e-12);
    }

    #[test]
    fn dual_computations_of_nabla_star_omega_agree() {
        for &(x, th) in &[([0.4, -0.2], 0.3), ([0.9, 0.5], 2.1), ([0.1, 0.7], 4.4)] {
            let pt = sm_point("randers-s2", 0, x, th);
            let (_, dual) = nabla_e(&pt.fd);
            let direct = nabla_star_omega_direct(&pt.fd, &pt.cd);
            for i in 0..2 {
                let diff = dual[i].clone().sub(&direct[i]).max_abs();
                assert!(diff < 1e-9, "component {i}: {diff}");
            }
        }
    }

    #[test]
    fn flat_torus_integrands_vanish() {
        let pt = sm_point("flat-t2", 0, [0.2, 0.9], 1.9);
        assert!(theorem2_term1(&pt).unwrap().max_abs() < 1e-12);
        assert!(theorem2_term2(&pt).unwrap().max_abs() < 1e-12);
        let c1 = corollary1_integrands(&pt).unwrap();
        assert!(c1.r_term.max_abs() < 1e-12);
        assert!(c1.p1_term.max_abs() < 1e-12);
        assert!(c1.p2_term.max_abs() < 1e-12);
        assert!(berwald_integrand(&pt).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn quartic_torus_passes_gate_with_zero_integrand() {
        let pt = sm_point("quartic-t2", 0, [0.6, 0.2], 0.9);
        let b = berwald_integrand(&pt).unwrap();
        assert!(b.max_abs() < 1e-10);
        let c1 = corollary1_integrands(&pt).unwrap();
        assert!(c1.r_term.max_abs() < 1e-10);
        assert!(c1.p1_term.max_abs() < 1e-10);
        assert!(c1.p2_term.max_abs() < 1e-10);
    }

    #[test]
    fn randers_fails_berwald_gate() {
        let pt = sm_point("randers-s2", 0, [0.4, 0.1], 1.2);
        assert!(matches!(
            berwald_integrand(&pt),
            Err(GeometryError::BerwaldGate { .. })
        ));
    }

    #[test]
    fn integrand_density_is_scale_invariant() {
        let spec = MetricSpec::catalog("randers-s2", &BTreeMap::new()).unwrap();
        let x = [0.35, -0.55];
        let bd = spec.base_data(0, x, JET_ORDER);
        let theta = 2.7;
        let base = SmPoint::at_angle_scaled(&spec, &bd, 0, x, theta, 1.0).unwrap();
        for lambda in [0.5, 3.0] {
            let scaled = SmPoint::at_angle_scaled(&spec, &bd, 0, x, theta, lambda).unwrap();
            let d0 = theorem2_term1(&base).unwrap();
            let d1 = theorem2_term1(&scaled).unwrap();
            assert!(d0.clone().sub(&d1).max_abs() < 1e-10, "lambda={lambda}");
            let f0 = theorem2_term2(&base).unwrap();
            let f1 = theorem2_term2(&scaled).unwrap();
            assert!(f0.0.clone().sub(&f1.0).max_abs() < 1e-10, "lambda={lambda}");
        }
    }

    #[test]
    fn riemannian_c1_p_terms_vanish_and_r_matches_t2() {
        for &(x, th) in &[([0.3, 0.2], 0.4), ([0.7, -0.4], 2.0)] {
            let pt = sm_point("round-s2", 0, x, th);
            let c1 = corollary1_integrands(&pt).unwrap();
            assert!(c1.p1_term.max_abs() < 1e-10);
            assert!(c1.p2_term.max_abs() < 1e-10);
            let t2 = theorem2_term1(&pt).unwrap();
            let diff = c1.r_term.clone().sub(&t2).max_abs();
            assert!(diff < 1e-9, "pointwise t2 vs c1 defect {diff}");
        }
    }

    #[test]
    fn round_sphere_density_matches_curvature() {
        // For the unit round sphere the full density is
        // K sqrt(det a) / (4 pi^2) in chart coordinates, with K = 1.
        let pt = sm_point("round-s2", 0, [0.25, 0.45], 1.3);
        let t2 = theorem2_term1(&pt).unwrap();
        let density = t2.coeff(0b111);
        let expect = pt.fd.g_det.sqrt() / (4.0 * PI * PI);
        assert_abs_diff_eq!(density, expect, epsilon = 1e-9);
    }

    #[test]
    fn mq_fiber_check_flat_and_round() {
        let flat = MetricSpec::catalog("flat-t2", &BTreeMap::new()).unwrap();
        let chk = mq_fiber_check(&flat, 0, [0.5, 0.5], 1.0, 6.0, 48).unwrap();
        assert_abs_diff_eq!(chk.integral, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chk.expected, 0.0, epsilon = 1e-12);

        let round = MetricSpec::catalog("round-s2", &BTreeMap::new()).unwrap();
        let chk = mq_fiber_check(&round, 0, [0.3, -0.2], 1.0, 6.0, 48).unwrap();
        assert_abs_diff_eq!(chk.integral, chk.expected, epsilon = 1e-6);
        assert!(chk.expected.abs() > 1e-3, "curvature should be visible");

        let randers = MetricSpec::catalog("randers-s2", &BTreeMap::new()).unwrap();
        assert!(mq_fiber_check(&randers, 0, [0.3, 0.0], 1.0, 6.0, 32).is_err());
    }
}
