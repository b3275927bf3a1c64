//! The metric catalog: chart atlases and evaluators for the built-in Finsler
//! metrics on the sphere and the torus.
//!
//! Sphere metrics use two stereographic polar-cap charts with a smooth bump
//! partition of unity across the equator band; torus metrics use one periodic
//! unit-square chart. All evaluators are generic over [`Scalar`], so the same
//! definition of `F` serves plain values, finite differences and jet lifting.

use crate::error::{GeometryError, Result};
use crate::jets::{jet_space, Jet, Scalar};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Chart index within a spec's atlas (0 = north cap / torus square, 1 = south cap).
pub type ChartId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Sphere,
    Torus,
}

/// Partition-of-unity transition band in polar angle (radians from the chart pole).
const POU_LO: f64 = PI / 3.0;
const POU_HI: f64 = 2.0 * PI / 3.0;

#[derive(Clone, Debug)]
pub enum MetricFamily {
    /// `F = sqrt(a_ij(x) y^i y^j)` with `a` induced by an embedded round sphere
    /// of radius `r`.
    RoundSphere { r: f64 },
    /// Riemannian metric induced by the embedding `diag(a,b,c)` of the unit sphere.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Flat Euclidean metric on the unit square torus.
    FlatTorus,
    /// Randers metric `alpha + eps * beta` on the unit round sphere, with `beta`
    /// the alpha-dual of the rotation field about the embedding z-axis.
    RandersSphere { eps: f64 },
    /// Locally Minkowskian quartic norm `(y1^4 + y2^4 + c y1^2 y2^2)^(1/4)`
    /// on the unit square torus.
    QuarticTorus { c: f64 },
}

#[derive(Clone, Debug)]
pub struct MetricSpec {
    pub name: String,
    pub family: MetricFamily,
}

/// Per-base-point jets of the x-dependent metric coefficients, reused across
/// all fiber directions over that point. The entries are pre-extended into
/// the 4-variable chart space (their coefficients do not involve y, so only
/// the base anchor changes per fiber direction).
#[derive(Clone, Debug)]
pub struct BaseData {
    /// Symmetric `a_ij(x)` (sphere families only).
    a: Option<[[Jet; 2]; 2]>,
    /// Randers one-form coefficients `b_i(x)`.
    b: Option<[Jet; 2]>,
}

pub const CATALOG: &[&str] = &["round-s2", "ellipsoid", "flat-t2", "randers-s2", "quartic-t2"];

impl MetricSpec {
    /// Builds a catalog metric by name with optional parameter overrides.
    pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<MetricSpec> {
        let check = |allowed: &[&str]| -> Result<()> {
            for k in params.keys() {
                if !allowed.contains(&k.as_str()) {
                    return Err(GeometryError::InvalidParameter {
                        metric: name.to_string(),
                        name: k.clone(),
                        reason: format!("unknown parameter (allowed: {})", allowed.join(", ")),
                    });
                }
            }
            Ok(())
        };
        let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        let positive = |k: &str, v: f64| -> Result<f64> {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(GeometryError::InvalidParameter {
                    metric: name.to_string(),
                    name: k.to_string(),
                    reason: format!("must be positive, got {v}"),
                })
            }
        };
        let family = match name {
            "round-s2" => {
                check(&["r"])?;
                MetricFamily::RoundSphere {
                    r: positive("r", get("r", 1.0))?,
                }
            }
            "ellipsoid" => {
                check(&["a", "b", "c"])?;
                MetricFamily::Ellipsoid {
                    a: positive("a", get("a", 1.0))?,
                    b: positive("b", get("b", 1.0))?,
                    c: positive("c", get("c", 1.5))?,
                }
            }
            "flat-t2" => {
                check(&[])?;
                MetricFamily::FlatTorus
            }
            "randers-s2" => {
                check(&["eps"])?;
                let eps = get("eps", 0.1);
                if !(0.0..1.0).contains(&eps) {
                    return Err(GeometryError::InvalidParameter {
                        metric: name.to_string(),
                        name: "eps".to_string(),
                        reason: format!("need 0 <= eps < 1 for strong convexity, got {eps}"),
                    });
                }
                MetricFamily::RandersSphere { eps }
            }
            "quartic-t2" => {
                check(&["c"])?;
                MetricFamily::QuarticTorus {
                    c: positive("c", get("c", 1.0))?,
                }
            }
            other => {
                return Err(GeometryError::UnknownMetric(
                    other.to_string(),
                    CATALOG.join(", "),
                ))
            }
        };
        Ok(MetricSpec {
            name: name.to_string(),
            family,
        })
    }

    pub fn topology(&self) -> Topology {
        match self.family {
            MetricFamily::RoundSphere { .. }
            | MetricFamily::Ellipsoid { .. }
            | MetricFamily::RandersSphere { .. } => Topology::Sphere,
            MetricFamily::FlatTorus | MetricFamily::QuarticTorus { .. } => Topology::Torus,
        }
    }

    pub fn chart_count(&self) -> usize {
        match self.topology() {
            Topology::Sphere => 2,
            Topology::Torus => 1,
        }
    }

    /// Families with vanishing Chern-Minkowski curvature.
    pub fn is_berwald_family(&self) -> bool {
        matches!(
            self.family,
            MetricFamily::RoundSphere { .. }
                | MetricFamily::Ellipsoid { .. }
                | MetricFamily::FlatTorus
                | MetricFamily::QuarticTorus { .. }
        )
    }

    pub fn is_riemannian_family(&self) -> bool {
        matches!(
            self.family,
            MetricFamily::RoundSphere { .. } | MetricFamily::Ellipsoid { .. } | MetricFamily::FlatTorus
        )
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match self.family {
            MetricFamily::RoundSphere { r } => {
                m.insert("r".into(), r);
            }
            MetricFamily::Ellipsoid { a, b, c } => {
                m.insert("a".into(), a);
                m.insert("b".into(), b);
                m.insert("c".into(), c);
            }
            MetricFamily::FlatTorus => {}
            MetricFamily::RandersSphere { eps } => {
                m.insert("eps".into(), eps);
            }
            MetricFamily::QuarticTorus { c } => {
                m.insert("c".into(), c);
            }
        }
        m
    }

    /// Axis scales of the embedded sphere (sphere families).
    fn embedding_scales(&self) -> [f64; 3] {
        match self.family {
            MetricFamily::RoundSphere { r } => [r, r, r],
            MetricFamily::Ellipsoid { a, b, c } => [a, b, c],
            MetricFamily::RandersSphere { .. } => [1.0, 1.0, 1.0],
            _ => unreachable!("no embedding for torus metrics"),
        }
    }

    /// The Finsler norm `F(x, y)` evaluated generically over a chart.
    pub fn f<T: Scalar>(&self, chart: ChartId, x: &[T; 2], y: &[T; 2]) -> T {
        match self.family {
            MetricFamily::FlatTorus => {
                (y[0].clone() * y[0].clone() + y[1].clone() * y[1].clone()).sqrt()
            }
            MetricFamily::QuarticTorus { c } => {
                let y1sq = y[0].clone() * y[0].clone();
                let y2sq = y[1].clone() * y[1].clone();
                let q = y1sq.clone() * y1sq.clone()
                    + y2sq.clone() * y2sq.clone()
                    + (y1sq * y2sq).scale_by(c);
                q.sqrt().sqrt()
            }
            MetricFamily::RoundSphere { .. } | MetricFamily::Ellipsoid { .. } => {
                let a = sphere_metric_coeffs(chart, x, self.embedding_scales());
                quadratic_form(&a, y).sqrt()
            }
            MetricFamily::RandersSphere { eps } => {
                let a = sphere_metric_coeffs(chart, x, [1.0, 1.0, 1.0]);
                let b = rotation_one_form(chart, x);
                let alpha = quadratic_form(&a, y).sqrt();
                alpha + (b[0].clone() * y[0].clone() + b[1].clone() * y[1].clone()).scale_by(eps)
            }
        }
    }

    /// Plain `f64` evaluation of `F`.
    pub fn f_value(&self, chart: ChartId, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.f(chart, &x, &y)
    }

    /// Builds the per-base-point coefficient jets used by [`Self::f_squared_jet`].
    pub fn base_data(&self, chart: ChartId, x: [f64; 2], order: usize) -> BaseData {
        match self.family {
            MetricFamily::FlatTorus | MetricFamily::QuarticTorus { .. } => {
                BaseData { a: None, b: None }
            }
            _ => {
                let space = jet_space(2, order);
                let base: Arc<[f64]> = Arc::from(x.to_vec());
                let xj = [
                    Jet::variable(&space, &base, 0),
                    Jet::variable(&space, &base, 1),
                ];
                let a2 = sphere_metric_coeffs(chart, &xj, self.embedding_scales());
                let b2 = match self.family {
                    MetricFamily::RandersSphere { .. } => Some(rotation_one_form(chart, &xj)),
                    _ => None,
                };
                let big = jet_space(4, order);
                let big_base: Arc<[f64]> = Arc::from(vec![x[0], x[1], 0.0, 0.0]);
                let ext = |j: &Jet| j.extend(&big, &big_base, &[0, 1]);
                let a = [
                    [ext(&a2[0][0]), ext(&a2[0][1])],
                    [ext(&a2[1][0]), ext(&a2[1][1])],
                ];
                let b = b2.map(|bb| [ext(&bb[0]), ext(&bb[1])]);
                BaseData { a: Some(a), b }
            }
        }
    }

    /// Jet of `F^2` at `(x, y)` in the 4-variable chart space, reusing the
    /// x-dependent coefficient jets from `base_data`.
    pub fn f_squared_jet(
        &self,
        bd: &BaseData,
        x: [f64; 2],
        y: [f64; 2],
        order: usize,
    ) -> Result<Jet> {
        let space = jet_space(4, order);
        let base: Arc<[f64]> = Arc::from(vec![x[0], x[1], y[0], y[1]]);
        let yj = [
            Jet::variable(&space, &base, 2),
            Jet::variable(&space, &base, 3),
        ];
        let out = match self.family {
            MetricFamily::FlatTorus => yj[0].sq() + yj[1].sq(),
            MetricFamily::QuarticTorus { c } => {
                let y1sq = yj[0].sq();
                let y2sq = yj[1].sq();
                let q = y1sq.sq() + y2sq.sq() + (y1sq * y2sq).scale(c);
                q.try_sqrt()?
            }
            _ => {
                let aj = bd.a.as_ref().expect("sphere family base data");
                let ext = |j: &Jet| -> Jet { j.with_base(&base) };
                let a00 = ext(&aj[0][0]);
                let a01 = ext(&aj[0][1]);
                let a11 = ext(&aj[1][1]);
                let alpha2 = a00 * yj[0].sq()
                    + (a01 * yj[0].clone() * yj[1].clone()).scale(2.0)
                    + a11 * yj[1].sq();
                match self.family {
                    MetricFamily::RandersSphere { eps } => {
                        let bj = bd.b.as_ref().expect("randers base data");
                        let beta =
                            (ext(&bj[0]) * yj[0].clone() + ext(&bj[1]) * yj[1].clone()).scale(eps);
                        let f = alpha2.try_sqrt()? + beta;
                        f.sq()
                    }
                    _ => alpha2,
                }
            }
        };
        if !out.is_finite() {
            let names = vec!["x1".into(), "x2".into(), "y1".into(), "y2".into()];
            let (mi, dir) = out.first_non_finite(&names).unwrap();
            return Err(crate::error::JetError::NonFinite {
                multi_index: mi,
                direction: dir,
            }
            .into());
        }
        Ok(out)
    }

    /// Chart transition: maps chart coordinates to the other chart where both
    /// are defined. Torus metrics have a single chart.
    pub fn transition(&self, _from: ChartId, x: [f64; 2]) -> Option<[f64; 2]> {
        match self.topology() {
            Topology::Torus => None,
            Topology::Sphere => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                if rho2 == 0.0 {
                    None
                } else {
                    Some([x[0] / rho2, -x[1] / rho2])
                }
            }
        }
    }

    /// Jacobian of [`Self::transition`] (orientation preserving by construction).
    pub fn transition_jacobian(&self, _from: ChartId, x: [f64; 2]) -> [[f64; 2]; 2] {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let r4 = rho2 * rho2;
        [
            [
                (rho2 - 2.0 * x[0] * x[0]) / r4,
                -2.0 * x[0] * x[1] / r4,
            ],
            [
                2.0 * x[0] * x[1] / r4,
                (2.0 * x[1] * x[1] - rho2) / r4,
            ],
        ]
    }

    /// Smooth partition-of-unity weight of a chart at one of its points.
    /// Sphere charts blend across an equator band; the torus chart weight is 1.
    pub fn pou_weight(&self, _chart: ChartId, x: [f64; 2]) -> f64 {
        match self.topology() {
            Topology::Torus => 1.0,
            Topology::Sphere => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                // Polar angle from this chart's own pole: cos(theta) = (1 - rho^2)/(1 + rho^2).
                let cos_t = (1.0 - rho2) / (1.0 + rho2);
                let theta = cos_t.clamp(-1.0, 1.0).acos();
                1.0 - smooth_step((theta - POU_LO) / (POU_HI - POU_LO))
            }
        }
    }

    /// Outer radius of a polar-cap chart grid (covers the transition band).
    pub fn cap_radius(&self) -> f64 {
        (POU_HI / 2.0).tan()
    }
}

/// C-infinity step: 0 for s <= 0, 1 for s >= 1, with h(s) + h(1-s) = 1.
fn smooth_step(s: f64) -> f64 {
    fn sigma(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = sigma(s);
        let b = sigma(1.0 - s);
        a / (a + b)
    }
}

trait ScaleBy: Scalar {
    fn scale_by(self, s: f64) -> Self {
        let c = self.lit(s);
        self * c
    }
}
impl<T: Scalar> ScaleBy for T {}

/// Inverse stereographic embedding of the unit sphere. Chart 0 projects from
/// the south pole (origin -> north pole); chart 1 projects from the north pole
/// with the second coordinate flipped, so the atlas is oriented.
pub fn sphere_embedding<T: Scalar>(chart: ChartId, x: &[T; 2]) -> [T; 3] {
    let rho2 = x[0].clone() * x[0].clone() + x[1].clone() * x[1].clone();
    let w = rho2.clone() + x[0].lit(1.0);
    let s1 = x[0].clone().scale_by(2.0) / w.clone();
    let s2 = x[1].clone().scale_by(2.0) / w.clone();
    let height = (x[0].lit(1.0) - rho2) / w;
    if chart == 0 {
        [s1, s2, height]
    } else {
        [s1, -s2, -height]
    }
}

/// Partial derivatives of the embedding: `jac[k][i] = d s^k / d x^i`.
pub fn sphere_embedding_jacobian<T: Scalar>(chart: ChartId, x: &[T; 2]) -> [[T; 2]; 3] {
    let one = x[0].lit(1.0);
    let rho2 = x[0].clone() * x[0].clone() + x[1].clone() * x[1].clone();
    let w = rho2 + one.clone();
    let inv_w2 = one / (w.clone() * w.clone());
    let two_w = w.scale_by(2.0);
    let j11 = (two_w.clone() - x[0].clone().sq_t().scale_by(4.0)) * inv_w2.clone();
    let j12 = -(x[0].clone() * x[1].clone()).scale_by(4.0) * inv_w2.clone();
    let j21 = j12.clone();
    let j22 = (two_w - x[1].clone().sq_t().scale_by(4.0)) * inv_w2.clone();
    let j31 = -x[0].clone().scale_by(4.0) * inv_w2.clone();
    let j32 = -x[1].clone().scale_by(4.0) * inv_w2;
    if chart == 0 {
        [[j11, j12], [j21, j22], [j31, j32]]
    } else {
        [[j11, j12], [-j21, -j22], [-j31, -j32]]
    }
}

trait SqT: Scalar {
    fn sq_t(self) -> Self {
        self.clone() * self
    }
}
impl<T: Scalar> SqT for T {}

/// Pullback metric `a_ij = sum_k d_k^2 J_ki J_kj` of `diag(d) . embedding`.
pub fn sphere_metric_coeffs<T: Scalar>(chart: ChartId, x: &[T; 2], scales: [f64; 3]) -> [[T; 2]; 2] {
    let jac = sphere_embedding_jacobian(chart, x);
    let mut a: [[Option<T>; 2]; 2] = [[None, None], [None, None]];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = (jac[0][i].clone() * jac[0][j].clone()).scale_by(scales[0] * scales[0]);
            s = s + (jac[1][i].clone() * jac[1][j].clone()).scale_by(scales[1] * scales[1]);
            s = s + (jac[2][i].clone() * jac[2][j].clone()).scale_by(scales[2] * scales[2]);
            a[i][j] = Some(s);
        }
    }
    a.map(|row| row.map(|v| v.unwrap()))
}

/// Pullback of the ambient one-form `u^1 du^2 - u^2 du^1` (the round-metric
/// dual of the rotation field about the z-axis; a global smooth one-form).
pub fn rotation_one_form<T: Scalar>(chart: ChartId, x: &[T; 2]) -> [T; 2] {
    let s = sphere_embedding(chart, x);
    let jac = sphere_embedding_jacobian(chart, x);
    [
        s[0].clone() * jac[1][0].clone() - s[1].clone() * jac[0][0].clone(),
        s[0].clone() * jac[1][1].clone() - s[1].clone() * jac[0][1].clone(),
    ]
}

fn quadratic_form<T: Scalar>(a: &[[T; 2]; 2], y: &[T; 2]) -> T {
    a[0][0].clone() * y[0].clone() * y[0].clone()
        + (a[0][1].clone() * y[0].clone() * y[1].clone()).scale_by(2.0)
        + a[1][1].clone() * y[1].clone() * y[1].clone()
}
