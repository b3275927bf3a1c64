//! The pointwise Finsler package: fundamental tensor, Cartan tensor, geodesic
//! spray, nonlinear connection, horizontal coframe and Hilbert form, all read
//! off one order-4 jet of `F^2` at a point of the slit tangent bundle.

use crate::error::{GeometryError, Result};
use crate::forms::{ExtForm, GEN_DX, GEN_DY, TM_NGEN};
use crate::jets::{jet_space, Jet, MAX_VARS};
use crate::linalg::sym2_eigenvalues;
use crate::metric::{BaseData, ChartId, MetricSpec};
use std::array::from_fn;
use std::sync::Arc;

/// Condition-number ceiling for the fundamental tensor.
pub const COND_LIMIT: f64 = 1e8;

/// Jet truncation order of `F^2`; order <= 3 in y combined with order <= 1 in x
/// is what the curvature needs, order 4 total gives headroom for residuals.
pub const JET_ORDER: usize = 4;

fn ey(i: usize) -> [u8; MAX_VARS] {
    let mut e = [0u8; MAX_VARS];
    e[2 + i] = 1;
    e
}

fn ex(i: usize) -> [u8; MAX_VARS] {
    let mut e = [0u8; MAX_VARS];
    e[i] = 1;
    e
}

/// Everything the Chern connection and the integrands need at one point
/// `(x, y)` of a chart on the slit tangent bundle.
#[derive(Clone, Debug)]
pub struct FinslerData {
    pub chart: ChartId,
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Jet of `F^2`, order 4 in `(x^1, x^2, y^1, y^2)`.
    pub w: Jet,
    /// Jet of `F`.
    pub f_jet: Jet,
    pub f: f64,
    pub f_x: [f64; 2],
    pub f_y: [f64; 2],
    /// Fundamental tensor and its inverse (values).
    pub g: [[f64; 2]; 2],
    pub g_inv: [[f64; 2]; 2],
    pub g_det: f64,
    pub sqrt_g: f64,
    /// Cartan tensor values `A_ijk = (F/4) [F^2]_{y^i y^j y^k}`.
    pub a_cartan: [[[f64; 2]; 2]; 2],
    /// Geodesic spray coefficients `G^i`.
    pub spray: [f64; 2],
    /// Nonlinear connection `N^i_j = dG^i/dy^j`.
    pub n_conn: [[f64; 2]; 2],
    /// Order-2 jets of `g_ij`, `det g` and `g^{ij}` (x-jets retained for the
    /// horizontal derivatives downstream).
    pub g_jet: [[Jet; 2]; 2],
    pub g_det_jet: Jet,
    pub g_inv_jet: [[Jet; 2]; 2],
    /// Order-1 jets of `N^i_j`.
    pub n_jet: [[Jet; 2]; 2],
}

impl FinslerData {
    pub fn compute(
        spec: &MetricSpec,
        bd: &BaseData,
        chart: ChartId,
        x: [f64; 2],
        y: [f64; 2],
    ) -> Result<FinslerData> {
        if y == [0.0, 0.0] {
            return Err(crate::error::JetError::ZeroFiberVector.into());
        }
        let w = spec.f_squared_jet(bd, x, y, JET_ORDER)?;
        Self::from_f_squared_jet(chart, x, y, w)
    }

    /// Assembles the package from a precomputed jet of `F^2`.
    pub fn from_f_squared_jet(chart: ChartId, x: [f64; 2], y: [f64; 2], w: Jet) -> Result<FinslerData> {
        let f_jet = w.try_sqrt().map_err(GeometryError::from)?;
        let f = f_jet.value();
        let f_x = [f_jet.partial(&ex(0)), f_jet.partial(&ex(1))];
        let f_y = [f_jet.partial(&ey(0)), f_jet.partial(&ey(1))];

        // g_ij = (1/2) d^2 F^2 / dy^i dy^j, kept as order-2 jets.
        let g_jet: [[Jet; 2]; 2] = from_fn(|i| {
            from_fn(|j| w.derivative(2 + i).derivative(2 + j).scale(0.5))
        });
        let g = [
            [g_jet[0][0].value(), g_jet[0][1].value()],
            [g_jet[1][0].value(), g_jet[1][1].value()],
        ];
        let (lo, hi) = sym2_eigenvalues(g);
        if lo <= 0.0 {
            return Err(GeometryError::NotPositiveDefinite {
                min_eigenvalue: lo,
                x: x.to_vec(),
                y: y.to_vec(),
            });
        }
        if hi / lo > COND_LIMIT {
            return Err(GeometryError::IllConditioned { cond: hi / lo });
        }

        let det_jet = g_jet[0][0].mul_ref(&g_jet[1][1]) - g_jet[0][1].mul_ref(&g_jet[0][1]);
        let g_det = det_jet.value();
        let sqrt_g = g_det.sqrt();
        let inv_det = det_jet.recip();
        let g_det_jet = det_jet;
        let g_inv_jet: [[Jet; 2]; 2] = [
            [
                g_jet[1][1].mul_ref(&inv_det),
                -(g_jet[0][1].mul_ref(&inv_det)),
            ],
            [
                -(g_jet[0][1].mul_ref(&inv_det)),
                g_jet[0][0].mul_ref(&inv_det),
            ],
        ];
        let g_inv = [
            [g_inv_jet[0][0].value(), g_inv_jet[0][1].value()],
            [g_inv_jet[1][0].value(), g_inv_jet[1][1].value()],
        ];

        // Cartan tensor values from the pure-y third derivatives.
        let a_cartan: [[[f64; 2]; 2]; 2] = from_fn(|i| {
            from_fn(|j| {
                from_fn(|k| {
                    let mut e = [0u8; MAX_VARS];
                    e[2 + i] += 1;
                    e[2 + j] += 1;
                    e[2 + k] += 1;
                    f / 4.0 * w.partial(&e)
                })
            })
        });

        // Spray: G^i = (1/4) g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} ),
        // built as order-2 jets so that N and dN come from the same object.
        let spray_space = jet_space(4, 2);
        let base: Arc<[f64]> = Arc::from(w.base().to_vec());
        let y_jets = [
            Jet::variable(&spray_space, &base, 2),
            Jet::variable(&spray_space, &base, 3),
        ];
        let w_x: [Jet; 2] = from_fn(|k| w.derivative(k));
        let w_xy: [[Jet; 2]; 2] = from_fn(|k| from_fn(|l| w_x[k].derivative(2 + l).truncated(2)));
        let w_x2: [Jet; 2] = from_fn(|k| w_x[k].truncated(2));
        let spray_jet: [Jet; 2] = from_fn(|i| {
            let mut acc = Jet::constant(&spray_space, &base, 0.0);
            for l in 0..2 {
                let mut bracket = w_xy[0][l].mul_ref(&y_jets[0]) + w_xy[1][l].mul_ref(&y_jets[1]);
                bracket = bracket - w_x2[l].clone();
                acc = acc + g_inv_jet[i][l].truncated(2).mul_ref(&bracket);
            }
            acc.scale(0.25)
        });
        let spray = [spray_jet[0].value(), spray_jet[1].value()];
        let n_jet: [[Jet; 2]; 2] = from_fn(|i| from_fn(|j| spray_jet[i].derivative(2 + j)));
        let n_conn = [
            [n_jet[0][0].value(), n_jet[0][1].value()],
            [n_jet[1][0].value(), n_jet[1][1].value()],
        ];

        Ok(FinslerData {
            chart,
            x,
            y,
            w,
            f_jet,
            f,
            f_x,
            f_y,
            g,
            g_inv,
            g_det,
            sqrt_g,
            a_cartan,
            spray,
            n_conn,
            g_jet,
            g_det_jet,
            g_inv_jet,
            n_jet,
        })
    }

    /// Horizontal derivative of a jet: `delta q / delta x^k = q_{x^k} - N^m_k q_{y^m}`,
    /// truncated to the order both operands support.
    pub fn delta_x(&self, q: &Jet, k: usize) -> Jet {
        let order = q
            .order()
            .saturating_sub(1)
            .min(self.n_jet[0][0].order());
        let mut out = q.derivative(k).truncated(order);
        for m in 0..2 {
            out = out
                - self
                    .n_jet[m][k]
                    .truncated(order)
                    .mul_ref(&q.derivative(2 + m).truncated(order));
        }
        out
    }

    /// Value-level horizontal derivative from first-order coefficients:
    /// `delta q/delta x^k = q_{x^k} - N^m_k q_{y^m}` at the base point.
    #[inline]
    pub fn delta_x_value(&self, q: &Jet, k: usize) -> f64 {
        q.d1(k) - self.n_conn[0][k] * q.d1(2) - self.n_conn[1][k] * q.d1(3)
    }

    /// `g_ij y^i y^j - F^2` (Euler identity defect).
    pub fn euler_defect(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.g[i][j] * self.y[i] * self.y[j];
            }
        }
        s - self.f * self.f
    }

    /// Largest `|y^i A_ijk|` contraction.
    pub fn cartan_y_contraction(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..2 {
            for k in 0..2 {
                let s: f64 = (0..2).map(|i| self.y[i] * self.a_cartan[i][j][k]).sum();
                m = m.max(s.abs());
            }
        }
        m
    }

    /// Largest antisymmetric part of the Cartan tensor under index swaps.
    pub fn cartan_asymmetry(&self) -> f64 {
        let a = &self.a_cartan;
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    m = m.max((a[i][j][k] - a[j][i][k]).abs());
                    m = m.max((a[i][j][k] - a[i][k][j]).abs());
                }
            }
        }
        m
    }

    /// `delta F / delta x^i` — vanishes identically for the true spray.
    pub fn horizontal_f_derivative(&self) -> [f64; 2] {
        from_fn(|i| self.delta_x(&self.f_jet, i).value())
    }

    /// The Hilbert form `omega = F_{y^i} dx^i` as an ambient form value.
    pub fn hilbert_form(&self) -> ExtForm {
        let mut w = ExtForm::zero(TM_NGEN);
        for i in 0..2 {
            w = w.add(&ExtForm::generator(TM_NGEN, GEN_DX[i]).scale(self.f_y[i]));
        }
        w
    }
}

/// Change of coframe from `{dx, dy}` to `{dx, delta-y}`.
#[derive(Clone, Debug)]
pub struct HorizontalFrame {
    pub n: [[f64; 2]; 2],
}

impl HorizontalFrame {
    /// Rows map `(dx^1, dx^2, dy^1, dy^2)` to `(dx^1, dx^2, delta-y^1, delta-y^2)`.
    pub fn coframe_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = 1.0;
        }
        for i in 0..2 {
            for j in 0..2 {
                m[2 + i][j] = self.n[i][j];
            }
        }
        m
    }

    /// `delta-y^i` expressed over the ambient generators (the identity map here,
    /// recorded for symmetry with the fiber restriction that replaces it).
    pub fn delta_y_form(&self, i: usize) -> ExtForm {
        ExtForm::generator(TM_NGEN, GEN_DY[i])
    }
}

/// Spec-level convenience wrappers used by the CLI and tests.
pub fn fundamental_tensor(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<[[f64; 2]; 2]> {
    let bd = spec.base_data(chart, x, JET_ORDER);
    Ok(FinslerData::compute(spec, &bd, chart, x, y)?.g)
}

pub fn cartan_tensor(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<[[[f64; 2]; 2]; 2]> {
    let bd = spec.base_data(chart, x, JET_ORDER);
    Ok(FinslerData::compute(spec, &bd, chart, x, y)?.a_cartan)
}

pub fn spray_and_connection(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let bd = spec.base_data(chart, x, JET_ORDER);
    let fd = FinslerData::compute(spec, &bd, chart, x, y)?;
    Ok((fd.spray, fd.n_conn))
}

pub fn horizontal_frame(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<HorizontalFrame> {
    let bd = spec.base_data(chart, x, JET_ORDER);
    let fd = FinslerData::compute(spec, &bd, chart, x, y)?;
    Ok(HorizontalFrame { n: fd.n_conn })
}

pub fn hilbert_form(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<ExtForm> {
    let bd = spec.base_data(chart, x, JET_ORDER);
    Ok(FinslerData::compute(spec, &bd, chart, x, y)?.hilbert_form())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn spec(name: &str) -> MetricSpec {
        MetricSpec::catalog(name, &BTreeMap::new()).unwrap()
    }

    fn package(name: &str, chart: ChartId, x: [f64; 2], y: [f64; 2]) -> FinslerData {
        let m = spec(name);
        let bd = m.base_data(chart, x, JET_ORDER);
        FinslerData::compute(&m, &bd, chart, x, y).unwrap()
    }

    #[test]
    fn euclidean_fundamental_tensor_is_identity() {
        let fd = package("flat-t2", 0, [0.2, 0.8], [0.6, -1.1]);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(fd.g[i][j], expect, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(fd.euler_defect(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn riemannian_tensor_is_y_independent_and_matches_chart_coeffs() {
        let m = spec("round-s2");
        let x = [0.3, -0.5];
        let a = crate::metric::sphere_metric_coeffs::<f64>(0, &x, [1.0, 1.0, 1.0]);
        let g1 = fundamental_tensor(&m, 0, x, [1.0, 0.3]).unwrap();
        let g2 = fundamental_tensor(&m, 0, x, [-0.2, 0.9]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(g1[i][j], a[i][j], epsilon = 1e-12);
                assert_abs_diff_eq!(g1[i][j], g2[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn riemannian_cartan_tensor_vanishes() {
        let fd = package("ellipsoid", 1, [0.4, 0.1], [0.7, 0.2]);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_abs_diff_eq!(fd.a_cartan[i][j][k], 0.0, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn cartan_contraction_with_y_vanishes() {
        for &(x, y) in &[
            ([0.25, -0.6], [0.9, 0.1]),
            ([0.8, 0.3], [-0.4, 1.2]),
            ([0.0, 0.0], [0.3, -0.5]),
        ] {
            let fd = package("randers-s2", 0, x, y);
            assert!(fd.cartan_y_contraction() < 1e-10);
            assert!(fd.cartan_asymmetry() < 1e-12);
        }
    }

    #[test]
    fn flat_metric_has_zero_spray() {
        let (g_spray, n) = spray_and_connection(&spec("flat-t2"), 0, [0.1, 0.9], [1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(g_spray[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(g_spray[1], 0.0, epsilon = 1e-13);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(n[i][j], 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn spray_is_positively_2_homogeneous() {
        let m = spec("randers-s2");
        let x = [0.45, -0.3];
        let y = [0.8, 0.35];
        let (g1, _) = spray_and_connection(&m, 0, x, y).unwrap();
        let (g2, _) = spray_and_connection(&m, 0, x, [2.0 * y[0], 2.0 * y[1]]).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(g2[i], 4.0 * g1[i], epsilon = 1e-10 * g1[i].abs().max(1.0));
        }
    }

    #[test]
    fn horizontal_derivative_of_f_vanishes() {
        for name in ["round-s2", "randers-s2", "ellipsoid"] {
            let fd = package(name, 0, [0.6, 0.2], [0.4, -0.9]);
            let d = fd.horizontal_f_derivative();
            assert!(d[0].abs() < 1e-9, "{name}: {d:?}");
            assert!(d[1].abs() < 1e-9, "{name}: {d:?}");
        }
    }

    #[test]
    fn hilbert_form_evaluates_to_f_on_y() {
        let fd = package("randers-s2", 0, [0.2, 0.7], [1.3, -0.4]);
        let omega_y = fd.f_y[0] * fd.y[0] + fd.f_y[1] * fd.y[1];
        assert_abs_diff_eq!(omega_y / fd.f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_hilbert_form_is_dx1() {
        let fd = package("flat-t2", 0, [0.0, 0.0], [1.0, 0.0]);
        let w = fd.hilbert_form();
        assert_abs_diff_eq!(w.coeff(1 << GEN_DX[0]), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.coeff(1 << GEN_DX[1]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn quartic_needs_cross_term_for_convexity() {
        // The pure quartic norm degenerates on the axes; the catalog default
        // c = 1 keeps g positive definite there.
        let fd = package("quartic-t2", 0, [0.5, 0.5], [1.0, 1e-3]);
        let (lo, _) = sym2_eigenvalues(fd.g);
        assert!(lo > 0.0);
    }

    #[test]
    fn rejects_zero_fiber_vector() {
        let m = spec("flat-t2");
        assert!(fundamental_tensor(&m, 0, [0.0, 0.0], [0.0, 0.0]).is_err());
    }
}
