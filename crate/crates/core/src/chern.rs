//! The Chern connection on the pull-back bundle: Christoffel coefficients,
//! structure-equation residuals, the curvature split `R + P`, the special
//! orthonormal frame with `e_2 = Y/F`, and Pfaffians.
//!
//! Conventions (pinned by the round-sphere calibration, see the crate root):
//! the curvature two-form is `Omega^i_j = d varpi^i_j + varpi^i_k ^ varpi^k_j`,
//! expanded in the `{dx, delta-y}` coframe. Its `dx^dx` block is the
//! Chern-Riemann curvature `R^i_{j kl}` and its `dx^(delta-y/F)` block the
//! Chern-Minkowski curvature `P^i_{j kl} = -F dGamma^i_{jk}/dy^l`; no
//! `delta-y ^ delta-y` block arises (torsion-freeness).

use crate::error::{GeometryError, Result};
use crate::finsler::FinslerData;
use crate::forms::{ExtForm, GEN_DX, GEN_DY, TM_NGEN};
use crate::jets::Jet;
use crate::linalg::permutations_with_sign;
use std::array::from_fn;

/// Christoffel coefficients and the curvature split at one point.
#[derive(Clone, Debug)]
pub struct ChernData {
    /// `Gamma^i_{jk}`, symmetric in `(j, k)`.
    pub gamma: [[[f64; 2]; 2]; 2],
    /// Order-1 jets of `Gamma^i_{jk}` (for the curvature derivatives).
    pub gamma_jet: [[[Jet; 2]; 2]; 2],
    /// `R^i_{j kl}`, antisymmetric in `(k, l)`.
    pub r: [[[[f64; 2]; 2]; 2]; 2],
    /// `P^i_{j kl} = -F dGamma^i_{jk}/dy^l`.
    pub p: [[[[f64; 2]; 2]; 2]; 2],
    /// Cached curvature two-forms `Omega^i_j` (entry `[i][j]`).
    curv_forms: [[ExtForm; 2]; 2],
    /// Cached connection one-forms `varpi^i_j` (entry `[i][j]`).
    varpi_forms: [[ExtForm; 2]; 2],
}

/// Unique solution of the torsion-free + almost-metric-compatible system,
/// via horizontal derivatives of `g`:
/// `Gamma^m_{jk} = (1/2) g^{mi} (dg_ij/dx^k|_h + dg_ik/dx^j|_h - dg_jk/dx^i|_h)`.
pub fn christoffel(fd: &FinslerData) -> ChernData {
    // Horizontal derivatives of g as order-1 jets, sharing the y-derivatives
    // across the two base directions and the (i, j) symmetry.
    let n1: [[Jet; 2]; 2] = from_fn(|m| from_fn(|k| fd.n_jet[m][k].truncated(1)));
    let mut dg_store: [[Option<Jet>; 2]; 3] = Default::default();
    let pair = |i: usize, j: usize| -> usize { i + j }; // (0,0)->0, (0,1)/(1,0)->1, (1,1)->2
    for i in 0..2 {
        for j in i..2 {
            let q = &fd.g_jet[i][j];
            let qy = [q.derivative(2).truncated(1), q.derivative(3).truncated(1)];
            for k in 0..2 {
                let mut d = q.derivative(k).truncated(1);
                for m in 0..2 {
                    d = d - n1[m][k].mul_ref(&qy[m]);
                }
                dg_store[pair(i, j)][k] = Some(d);
            }
        }
    }
    let dg = |i: usize, j: usize, k: usize| -> &Jet { dg_store[pair(i, j)][k].as_ref().unwrap() };
    let g_inv1: [[Jet; 2]; 2] = from_fn(|m| from_fn(|i| fd.g_inv_jet[m][i].truncated(1)));
    let mut gamma_store: [[Option<Jet>; 2]; 3] = Default::default();
    for j in 0..2 {
        for k in j..2 {
            // t_i = dg_ij;k + dg_ik;j - dg_jk;i
            let t: [Jet; 2] = from_fn(|i| {
                dg(i.min(j), i.max(j), k).clone() + dg(i.min(k), i.max(k), j).clone()
                    - dg(j, k, i).clone()
            });
            let [a, b] = from_fn(|m: usize| {
                (g_inv1[m][0].mul_ref(&t[0]) + g_inv1[m][1].mul_ref(&t[1])).scale(0.5)
            });
            gamma_store[pair(j, k)] = [Some(a), Some(b)];
        }
    }
    let gamma_jet: [[[Jet; 2]; 2]; 2] = from_fn(|m| {
        from_fn(|j| from_fn(|k| gamma_store[pair(j, k)][m].clone().unwrap()))
    });
    let gamma: [[[f64; 2]; 2]; 2] =
        from_fn(|m| from_fn(|j| from_fn(|k| gamma_jet[m][j][k].value())));

    // Curvature: R^i_{jkl} = dGamma^i_{jl}/dx^k|_h - dGamma^i_{jk}/dx^l|_h
    //                        + Gamma^i_{mk} Gamma^m_{jl} - Gamma^i_{ml} Gamma^m_{jk},
    // with the horizontal derivatives read off the order-1 coefficients.
    let hor: [[[[f64; 2]; 2]; 2]; 2] = from_fn(|i| {
        from_fn(|j| from_fn(|k| from_fn(|l| fd.delta_x_value(&gamma_jet[i][j][k], l))))
    });
    let r: [[[[f64; 2]; 2]; 2]; 2] = from_fn(|i| {
        from_fn(|j| {
            from_fn(|k| {
                from_fn(|l| {
                    let mut v = hor[i][j][l][k] - hor[i][j][k][l];
                    for m in 0..2 {
                        v += gamma[i][m][k] * gamma[m][j][l] - gamma[i][m][l] * gamma[m][j][k];
                    }
                    v
                })
            })
        })
    });
    let p: [[[[f64; 2]; 2]; 2]; 2] = from_fn(|i| {
        from_fn(|j| from_fn(|k| from_fn(|l| -fd.f * gamma_jet[i][j][k].d1(2 + l))))
    });
    let curv_forms = from_fn(|i| from_fn(|j| assemble_curvature_form(&r, &p, i, j, fd.f)));
    let varpi_forms = from_fn(|i| {
        from_fn(|j| {
            let mut w = ExtForm::zero(TM_NGEN);
            for k in 0..2 {
                w = w.add(&ExtForm::generator(TM_NGEN, GEN_DX[k]).scale(gamma[i][j][k]));
            }
            w
        })
    });
    ChernData {
        gamma,
        gamma_jet,
        r,
        p,
        curv_forms,
        varpi_forms,
    }
}

fn assemble_curvature_form(
    r: &[[[[f64; 2]; 2]; 2]; 2],
    p: &[[[[f64; 2]; 2]; 2]; 2],
    i: usize,
    j: usize,
    f: f64,
) -> ExtForm {
    let mut w = ExtForm::zero(TM_NGEN);
    for k in 0..2 {
        for l in 0..2 {
            if r[i][j][k][l] != 0.0 {
                let dx = ExtForm::generator(TM_NGEN, GEN_DX[k])
                    .wedge(&ExtForm::generator(TM_NGEN, GEN_DX[l]));
                w = w.add(&dx.scale(0.5 * r[i][j][k][l]));
            }
            if p[i][j][k][l] != 0.0 {
                let m = ExtForm::generator(TM_NGEN, GEN_DX[k])
                    .wedge(&ExtForm::generator(TM_NGEN, GEN_DY[l]));
                w = w.add(&m.scale(p[i][j][k][l] / f));
            }
        }
    }
    w
}

impl ChernData {
    /// Connection one-form `varpi^i_j = Gamma^i_{jk} dx^k`.
    pub fn varpi(&self, i: usize, j: usize) -> &ExtForm {
        &self.varpi_forms[i][j]
    }

    /// Full curvature two-form `Omega^i_j` over `{dx, delta-y}`:
    /// `(1/2) R^i_{jkl} dx^k ^ dx^l + P^i_{jkl} dx^k ^ (delta-y^l / F)`.
    pub fn curvature_form(&self, i: usize, j: usize) -> &ExtForm {
        &self.curv_forms[i][j]
    }

    /// Largest `|y^k Gamma^i_{jk} - N^i_j|` defect.
    pub fn trace_to_n_defect(&self, fd: &FinslerData) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let s: f64 = (0..2).map(|k| fd.y[k] * self.gamma[i][j][k]).sum();
                m = m.max((s - fd.n_conn[i][j]).abs());
            }
        }
        m
    }

    /// Largest `|P^i_{jkl}|`.
    pub fn p_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m = m.max(self.p[i][j][k][l].abs());
                    }
                }
            }
        }
        m
    }
}

/// Structure-equation residuals: torsion (antisymmetry defect of Gamma) and
/// almost-metricity, `dg_ij - g_ik varpi^k_j - g_jk varpi^k_i - 2A_ijk delta-y^k/F`,
/// expanded over the `{dx, delta-y}` coframe.
pub fn structure_residuals(cd: &ChernData, fd: &FinslerData) -> (f64, f64) {
    let mut torsion = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                torsion = torsion.max((cd.gamma[i][j][k] - cd.gamma[i][k][j]).abs());
            }
        }
    }
    let mut metricity = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            // Horizontal components: dg_ij/dx^l|_h - g_ik Gamma^k_{jl} - g_jk Gamma^k_{il}.
            for l in 0..2 {
                let mut v = fd.delta_x(&fd.g_jet[i][j], l).value();
                for k in 0..2 {
                    v -= fd.g[i][k] * cd.gamma[k][j][l] + fd.g[j][k] * cd.gamma[k][i][l];
                }
                metricity = metricity.max(v.abs());
            }
            // Vertical components: dg_ij/dy^k - 2 A_ijk / F.
            for k in 0..2 {
                let v = fd.g_jet[i][j].derivative(2 + k).value()
                    - 2.0 * fd.a_cartan[i][j][k] / fd.f;
                metricity = metricity.max(v.abs());
            }
        }
    }
    (torsion, metricity)
}

/// Curvature split with its structural checks: the `delta-y ^ delta-y` block of
/// the assembled two-form must vanish and the `P` block must match
/// `-F dGamma/dy` (the split is rejected otherwise).
pub fn curvature_split(
    cd: &ChernData,
    fd: &FinslerData,
) -> Result<([[[[f64; 2]; 2]; 2]; 2], [[[[f64; 2]; 2]; 2]; 2])> {
    let dydy_mask = (1u32 << GEN_DY[0]) | (1u32 << GEN_DY[1]);
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let form = cd.curvature_form(i, j);
            worst = worst.max(form.coeff(dydy_mask).abs());
            // Block extraction agrees with the direct formula.
            for k in 0..2 {
                for l in 0..2 {
                    let mask = (1u32 << GEN_DX[k]) | (1u32 << GEN_DY[l]);
                    let sign = crate::forms::wedge_sign(1 << GEN_DX[k], 1 << GEN_DY[l]);
                    let extracted = form.coeff(mask) * sign * fd.f;
                    if (extracted - cd.p[i][j][k][l]).abs() > 1e-9 {
                        return Err(GeometryError::DegreeMismatch {
                            expected: 2,
                            got: 2,
                        });
                    }
                }
            }
        }
    }
    if worst > 1e-10 {
        return Err(GeometryError::VerticalVerticalBlock(worst));
    }
    Ok((cd.r, cd.p))
}

/// The special `g_F`-orthonormal frame on a surface:
/// `e_1 = (F_{y^2} d/dx^1 - F_{y^1} d/dx^2)/sqrt(g)`, `e_2 = Y/F`,
/// with dual coframe, connection forms and curvature forms.
#[derive(Clone, Debug)]
pub struct SpecialFrame {
    /// `e_a = u[a][j] d/dx^j`.
    pub u: [[f64; 2]; 2],
    /// `d/dx^i = v[a][i] e_a`; rows are the coframe components `omega^a = v[a][i] dx^i`.
    pub v: [[f64; 2]; 2],
    /// Horizontal coframe `omega^1, omega^2` (ambient forms).
    pub omega: [ExtForm; 2],
    /// The vertical form `omega^3 = v^1_l delta-y^l / F = omega^1_2`.
    pub omega3: ExtForm,
    /// Frame connection forms `omega_a^b`.
    pub conn: [[ExtForm; 2]; 2],
    /// Frame curvature forms `Omega_a^b = v^b_j Omega^j_i u_a^i`.
    pub curv: [[ExtForm; 2]; 2],
}

pub fn special_frame(fd: &FinslerData, cd: &ChernData) -> SpecialFrame {
    let u = [
        [fd.f_y[1] / fd.sqrt_g, -fd.f_y[0] / fd.sqrt_g],
        [fd.y[0] / fd.f, fd.y[1] / fd.f],
    ];
    let v = [
        [fd.sqrt_g * fd.y[1] / fd.f, -fd.sqrt_g * fd.y[0] / fd.f],
        [fd.f_y[0], fd.f_y[1]],
    ];
    let omega: [ExtForm; 2] = from_fn(|a| {
        let mut w = ExtForm::zero(TM_NGEN);
        for i in 0..2 {
            w = w.add(&ExtForm::generator(TM_NGEN, GEN_DX[i]).scale(v[a][i]));
        }
        w
    });
    let mut omega3 = ExtForm::zero(TM_NGEN);
    for l in 0..2 {
        omega3 = omega3.add(&ExtForm::generator(TM_NGEN, GEN_DY[l]).scale(v[0][l] / fd.f));
    }

    // Frame vectors as order-1 jets, for the exterior derivative in the
    // connection forms: du = (du/dx^k|_h) dx^k + (du/dy^k) delta-y^k.
    let sqrt_g_jet = fd.g_det_jet.sqrt();
    let space = fd.w.space().clone();
    let base = std::sync::Arc::from(fd.w.base().to_vec());
    let y_jets = [
        Jet::variable(&space, &base, 2).truncated(2),
        Jet::variable(&space, &base, 3).truncated(2),
    ];
    let f_trunc = fd.f_jet.truncated(2);
    let inv_sqrt_g = sqrt_g_jet.recip();
    let inv_f = f_trunc.recip();
    let u_jet: [[Jet; 2]; 2] = [
        [
            fd.f_jet.derivative(2 + 1).truncated(2).mul_ref(&inv_sqrt_g),
            -(fd.f_jet.derivative(2).truncated(2).mul_ref(&inv_sqrt_g)),
        ],
        [y_jets[0].mul_ref(&inv_f), y_jets[1].mul_ref(&inv_f)],
    ];
    let du_form = |a: usize, j: usize| -> ExtForm {
        let mut w = ExtForm::zero(TM_NGEN);
        for k in 0..2 {
            w.set_coeff(1 << GEN_DX[k], fd.delta_x_value(&u_jet[a][j], k));
            w.set_coeff(1 << GEN_DY[k], u_jet[a][j].d1(2 + k));
        }
        w
    };
    // nabla_frame[a][j] = (du_a^j + u_a^i varpi_i^j); conn and curv are its v-
    // resp. the cached curvature's frame conjugations.
    let nabla_frame: [[ExtForm; 2]; 2] = from_fn(|a| {
        from_fn(|j| {
            let mut dj = du_form(a, j);
            for i in 0..2 {
                dj = dj.add(&cd.varpi(j, i).clone().scale(u[a][i]));
            }
            dj
        })
    });
    let conn: [[ExtForm; 2]; 2] = from_fn(|a| {
        from_fn(|b| {
            nabla_frame[a][0]
                .clone()
                .scale(v[b][0])
                .add(&nabla_frame[a][1].clone().scale(v[b][1]))
        })
    });
    let curv: [[ExtForm; 2]; 2] = from_fn(|a| {
        from_fn(|b| {
            let mut w = ExtForm::zero(TM_NGEN);
            for i in 0..2 {
                for j in 0..2 {
                    w = w.add(&cd.curvature_form(j, i).clone().scale(v[b][j] * u[a][i]));
                }
            }
            w
        })
    });
    SpecialFrame {
        u,
        v,
        omega,
        omega3,
        conn,
        curv,
    }
}

impl SpecialFrame {
    /// Orthonormality defect `max |g(e_a, e_b) - delta_ab|`.
    pub fn orthonormality_defect(&self, fd: &FinslerData) -> f64 {
        let mut m = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += fd.g[i][j] * self.u[a][i] * self.u[b][j];
                    }
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                m = m.max((s - expect).abs());
            }
        }
        m
    }

    /// Skew-symmetrized curvature `(1/2)(Omega^b_a - Omega^a_b)` as a 2x2
    /// antisymmetric matrix of form values; entry `[a][b]` is `hat-Omega_a^b`.
    pub fn skew_curvature(&self) -> [[ExtForm; 2]; 2] {
        from_fn(|a| {
            from_fn(|b| {
                self.curv[a][b]
                    .clone()
                    .sub(&self.curv[b][a])
                    .scale(0.5)
            })
        })
    }
}

/// Pfaffian of an antisymmetric scalar matrix by the epsilon-permutation sum
/// `Pf = (1/(2^n n!)) sum eps(a) M[a1][a2] ... M[a_{2n-1}][a_{2n}]`.
pub fn pfaffian_scalar(m: &[Vec<f64>]) -> Result<f64> {
    let dim = m.len();
    check_pfaffian_input(dim, |i, j| (m[i][j] + m[j][i]).abs())?;
    let n = dim / 2;
    let mut sum = 0.0;
    for (perm, sign) in permutations_with_sign(dim) {
        let mut prod = sign;
        for i in 0..n {
            prod *= m[perm[2 * i]][perm[2 * i + 1]];
        }
        sum += prod;
    }
    Ok(sum / pfaffian_normalization(n))
}

/// Pfaffian of an antisymmetric matrix of form values (entries are wedged).
pub fn pfaffian_forms(m: &[Vec<ExtForm>]) -> Result<ExtForm> {
    let dim = m.len();
    check_pfaffian_input(dim, |i, j| m[i][j].clone().add(&m[j][i]).max_abs())?;
    let ngen = m[0][0].ngen();
    let n = dim / 2;
    let mut sum = ExtForm::zero(ngen);
    for (perm, sign) in permutations_with_sign(dim) {
        let mut prod = ExtForm::scalar(ngen, sign);
        for i in 0..n {
            prod = prod.wedge(&m[perm[2 * i]][perm[2 * i + 1]]);
        }
        sum = sum.add(&prod);
    }
    Ok(sum.scale(1.0 / pfaffian_normalization(n)))
}

fn pfaffian_normalization(n: usize) -> f64 {
    // 2^n n!
    (1..=n).map(|k| 2.0 * k as f64).product::<f64>().max(1.0)
}

fn check_pfaffian_input<F>(dim: usize, sum_norm: F) -> Result<()>
where
    F: Fn(usize, usize) -> f64,
{
    if dim % 2 != 0 || dim > 6 {
        return Err(GeometryError::PfaffianInput { dim, asym: 0.0 });
    }
    let mut asym = 0.0f64;
    for i in 0..dim {
        for j in i..dim {
            asym = asym.max(sum_norm(i, j));
        }
    }
    if asym > 1e-12 {
        return Err(GeometryError::PfaffianInput { dim, asym });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::JET_ORDER;
    use crate::metric::MetricSpec;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn package(name: &str, chart: usize, x: [f64; 2], y: [f64; 2]) -> (FinslerData, ChernData) {
        let m = MetricSpec::catalog(name, &BTreeMap::new()).unwrap();
        let bd = m.base_data(chart, x, JET_ORDER);
        let fd = FinslerData::compute(&m, &bd, chart, x, y).unwrap();
        let cd = christoffel(&fd);
        (fd, cd)
    }

    #[test]
    fn flat_metric_has_zero_christoffel_and_curvature() {
        let (fd, cd) = package("flat-t2", 0, [0.3, 0.4], [0.8, -0.1]);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_abs_diff_eq!(cd.gamma[i][j][k], 0.0, epsilon = 1e-13);
                    for l in 0..2 {
                        assert_abs_diff_eq!(cd.r[i][j][k][l], 0.0, epsilon = 1e-13);
                        assert_abs_diff_eq!(cd.p[i][j][k][l], 0.0, epsilon = 1e-13);
                    }
                }
            }
        }
        let (t, m) = structure_residuals(&cd, &fd);
        assert!(t < 1e-13 && m < 1e-13);
    }

    #[test]
    fn quartic_torus_is_berwald() {
        let (_, cd) = package("quartic-t2", 0, [0.2, 0.7], [0.9, 0.4]);
        assert!(cd.p_norm() < 1e-10, "P should vanish, got {}", cd.p_norm());
    }

    #[test]
    fn gamma_contracts_to_n_on_randers_samples() {
        for &(x, y) in &[
            ([0.5, -0.2], [1.0, 0.3]),
            ([0.1, 0.8], [-0.4, 0.7]),
            ([1.0, 0.4], [0.2, -1.0]),
        ] {
            let (fd, cd) = package("randers-s2", 0, x, y);
            assert!(cd.trace_to_n_defect(&fd) < 1e-9);
        }
    }

    #[test]
    fn structure_residuals_small_and_canary_detected() {
        let (fd, mut cd) = package("randers-s2", 0, [0.4, 0.3], [0.7, -0.5]);
        let (t, m) = structure_residuals(&cd, &fd);
        assert!(t < 1e-8, "torsion residual {t}");
        assert!(m < 1e-8, "metricity residual {m}");
        // Corrupt one Christoffel entry; the metricity residual must see it.
        cd.gamma[0][1][0] += 1e-3;
        let (_, m_bad) = structure_residuals(&cd, &fd);
        assert!(m_bad >= 1e-4, "corrupted Gamma went undetected: {m_bad}");
    }

    #[test]
    fn curvature_split_passes_structural_checks() {
        let (fd, cd) = package("randers-s2", 1, [0.6, 0.1], [0.5, 0.9]);
        let (r, p) = curvature_split(&cd, &fd).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_abs_diff_eq!(r[i][j][k][l], -r[i][j][l][k], epsilon = 1e-12);
                        let _ = p;
                    }
                }
            }
        }
    }

    #[test]
    fn special_frame_is_orthonormal_with_e2_along_y() {
        let (fd, cd) = package("randers-s2", 0, [0.3, -0.7], [0.8, 0.6]);
        let fr = special_frame(&fd, &cd);
        assert!(fr.orthonormality_defect(&fd) < 1e-12);
        assert_abs_diff_eq!(fr.u[1][0], fd.y[0] / fd.f, epsilon = 1e-15);
        assert_abs_diff_eq!(fr.u[1][1], fd.y[1] / fd.f, epsilon = 1e-15);
        // Duality on the distinguished section: omega^2(e) = 1, omega^1(e) = 0.
        let e = [fd.y[0] / fd.f, fd.y[1] / fd.f];
        let w2 = fr.v[1][0] * e[0] + fr.v[1][1] * e[1];
        let w1 = fr.v[0][0] * e[0] + fr.v[0][1] * e[1];
        assert_abs_diff_eq!(w2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w1, 0.0, epsilon = 1e-12);
        // Frame is positively oriented: det u = 1/sqrt(g) > 0.
        let det = fr.u[0][0] * fr.u[1][1] - fr.u[0][1] * fr.u[1][0];
        assert!(det > 0.0);
        assert_abs_diff_eq!(det, 1.0 / fd.sqrt_g, epsilon = 1e-12);
    }

    #[test]
    fn frame_connection_is_skew_in_the_off_diagonal_pair() {
        // omega^1_2 = -omega^2_1 exactly, and omega^3 coincides with omega^1_2.
        let (fd, cd) = package("randers-s2", 0, [0.5, 0.2], [0.1, 1.1]);
        let fr = special_frame(&fd, &cd);
        let sum = fr.conn[0][1].clone().add(&fr.conn[1][0]);
        assert!(sum.max_abs() < 1e-10, "omega_1^2 + omega_2^1 = {}", sum.max_abs());
        let diff = fr.conn[1][0].clone().sub(&fr.omega3);
        assert!(
            diff.max_abs() < 1e-10,
            "omega_2^1 differs from omega^3 by {}",
            diff.max_abs()
        );
    }

    #[test]
    fn euclidean_special_frame_axes() {
        let (fd, cd) = package("flat-t2", 0, [0.0, 0.0], [1.0, 0.0]);
        let fr = special_frame(&fd, &cd);
        // F_{y^2} = 0, F_{y^1} = 1: e_1 = -d/dx^2, e_2 = d/dx^1.
        assert_abs_diff_eq!(fr.u[0][0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fr.u[0][1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fr.u[1][0], 1.0, epsilon = 1e-14);
        assert!(fr.orthonormality_defect(&fd) < 1e-14);
    }

    #[test]
    fn skew_symmetrization_is_a_projection() {
        let (fd, cd) = package("randers-s2", 0, [0.2, 0.9], [0.6, 0.3]);
        let fr = special_frame(&fd, &cd);
        let s1 = fr.skew_curvature();
        // Applying the skew-symmetrizer to an already skew matrix is the identity.
        for a in 0..2 {
            for b in 0..2 {
                let again = s1[a][b].clone().sub(&s1[b][a]).scale(0.5);
                let diff = again.sub(&s1[a][b]);
                assert!(diff.max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pfaffian_small_cases() {
        let a = vec![vec![0.0, 3.5], vec![-3.5, 0.0]];
        assert_abs_diff_eq!(pfaffian_scalar(&a).unwrap(), 3.5);
        // Block diagonal 4x4: Pf = a * b.
        let mut m = vec![vec![0.0; 4]; 4];
        m[0][1] = 2.0;
        m[1][0] = -2.0;
        m[2][3] = -0.7;
        m[3][2] = 0.7;
        assert_abs_diff_eq!(pfaffian_scalar(&m).unwrap(), -1.4, epsilon = 1e-14);
        // Odd dimension and asymmetry are rejected.
        assert!(pfaffian_scalar(&vec![vec![0.0; 3]; 3]).is_err());
        let bad = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(pfaffian_scalar(&bad).is_err());
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        use crate::linalg::det_permanent_expansion;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut m = vec![vec![0.0; 4]; 4];
            for i in 0..4 {
                for j in i + 1..4 {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    m[i][j] = v;
                    m[j][i] = -v;
                }
            }
            let pf = pfaffian_scalar(&m).unwrap();
            let det = det_permanent_expansion(&m);
            assert_abs_diff_eq!(pf * pf, det, epsilon = 1e-10 * det.abs().max(1.0));
        }
    }
}
