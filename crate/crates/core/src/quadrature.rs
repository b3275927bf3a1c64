//! Numerical integration over the sphere bundle: indicatrix fiber charts,
//! partition-of-unity base grids (Gauss-Legendre x periodic trapezoid on the
//! sphere caps, periodic trapezoid on the torus), the instrumented grid
//! survey, and the Euler-characteristic driver with its convergence ladder.

use crate::error::Result;
use crate::finsler::JET_ORDER;
use crate::forms::{ExtForm, GEN_DTHETA, SM_NGEN};
use crate::gbc::{
    berwald_integrand, corollary1_integrands, theorem2_term1, theorem2_term2,
    theorem2_term2_constant_probe, FiberOnlyForm, SmPoint,
};
use crate::metric::{ChartId, MetricSpec, Topology};
use crate::chern::{curvature_split, structure_residuals};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[a, b]` (Newton on the Legendre
/// recurrence).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            if n == 1 {
                p1 = x;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    for i in 0..n {
        nodes[i] = mid + half * nodes[i];
        weights[i] *= half;
    }
    (nodes, weights)
}

/// Deterministic pairwise summation (bit-stable regardless of thread count,
/// as long as the slice order is fixed).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// The indicatrix fiber chart at one base point: the angle grid, the periodic
/// trapezoid weights, and the sphere-bundle points built on it.
pub struct FiberChart {
    pub thetas: Vec<f64>,
    pub weight: f64,
    pub points: Vec<SmPoint>,
}

impl FiberChart {
    pub fn build(
        spec: &MetricSpec,
        chart: ChartId,
        x: [f64; 2],
        fiber_nodes: usize,
    ) -> Result<FiberChart> {
        let bd = spec.base_data(chart, x, JET_ORDER);
        let weight = 2.0 * PI / fiber_nodes as f64;
        let mut thetas = Vec::with_capacity(fiber_nodes);
        let mut points = Vec::with_capacity(fiber_nodes);
        for i in 0..fiber_nodes {
            let theta = 2.0 * PI * i as f64 / fiber_nodes as f64;
            thetas.push(theta);
            points.push(SmPoint::at_angle(spec, &bd, chart, x, theta)?);
        }
        Ok(FiberChart {
            thetas,
            weight,
            points,
        })
    }

    /// Largest defect of `F(x, r(theta) u(theta)) = 1` over the grid.
    pub fn unit_norm_defect(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p.fd.f - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Contracts the `d-theta` direction of restricted per-node forms, returning
/// the base-form value at the chart point (a form over `{dx^1, dx^2}`).
pub fn fiber_integrate(node_forms: &[ExtForm], weight: f64) -> ExtForm {
    let mut acc = ExtForm::zero(SM_NGEN);
    for w in node_forms {
        let (with_dtheta, _rest) = w.split_generator(GEN_DTHETA);
        acc = acc.add(&with_dtheta.scale(weight));
    }
    acc
}

/// Fiber integration of chart-dependent (fiber-only) forms — the only place
/// their raw values are read.
pub fn fiber_integrate_fiber_only(node_forms: &[FiberOnlyForm], weight: f64) -> ExtForm {
    let raw: Vec<ExtForm> = node_forms.iter().map(|f| f.0.clone()).collect();
    fiber_integrate(&raw, weight)
}

/// One node of a chart's base grid.
#[derive(Clone, Debug)]
pub struct BaseNode {
    pub chart: ChartId,
    pub x: [f64; 2],
    /// Quadrature weight including the polar Jacobian, without the
    /// partition-of-unity factor.
    pub weight: f64,
    /// Partition-of-unity weight of this chart at `x`.
    pub pou: f64,
}

/// Builds the base grids for every chart of the metric's atlas.
pub fn base_grid(spec: &MetricSpec, w: usize, h: usize) -> Vec<BaseNode> {
    let mut nodes = Vec::new();
    match spec.topology() {
        Topology::Torus => {
            for i in 0..w {
                for j in 0..h {
                    let x = [i as f64 / w as f64, j as f64 / h as f64];
                    nodes.push(BaseNode {
                        chart: 0,
                        x,
                        weight: 1.0 / (w as f64 * h as f64),
                        pou: 1.0,
                    });
                }
            }
        }
        Topology::Sphere => {
            let r_cap = spec.cap_radius();
            let (rho_nodes, rho_weights) = gauss_legendre(w, 0.0, r_cap);
            let phi_weight = 2.0 * PI / h as f64;
            for chart in 0..2 {
                for (ri, &rho) in rho_nodes.iter().enumerate() {
                    for j in 0..h {
                        let phi = 2.0 * PI * j as f64 / h as f64;
                        let x = [rho * phi.cos(), rho * phi.sin()];
                        let pou = spec.pou_weight(chart, x);
                        if pou == 0.0 {
                            continue;
                        }
                        nodes.push(BaseNode {
                            chart,
                            x,
                            weight: rho_weights[ri] * phi_weight * rho,
                            pou,
                        });
                    }
                }
            }
        }
    }
    nodes
}

/// Integrates a two-form field given per chart as its `dx^1 ^ dx^2`
/// coefficient function.
pub fn base_integrate<F>(spec: &MetricSpec, w: usize, h: usize, field: F) -> f64
where
    F: Fn(ChartId, [f64; 2]) -> f64 + Sync,
{
    let nodes = base_grid(spec, w, h);
    let contributions: Vec<f64> = nodes
        .par_iter()
        .map(|n| n.weight * n.pou * field(n.chart, n.x))
        .collect();
    pairwise_sum(&contributions)
}

/// `Vol(Finsler S^1)` at a base point: the fiber integral of `-omega^3`.
pub fn finsler_circle_volume(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    fiber_nodes: usize,
) -> Result<f64> {
    let fc = FiberChart::build(spec, chart, x, fiber_nodes)?;
    let forms: Vec<ExtForm> = fc
        .points
        .iter()
        .map(|p| p.restrict(&p.frame.omega3).scale(-1.0))
        .collect();
    let integral = fiber_integrate(&forms, fc.weight);
    Ok(integral.coeff(0))
}

/// Integration resolution for one ladder rung.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Resolution {
    pub fiber_nodes: usize,
    pub base_w: usize,
    pub base_h: usize,
}

/// Full scheme: the finest resolution plus the number of ladder rungs
/// (each coarser rung halves every resolution).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegrationScheme {
    pub fiber_nodes: usize,
    pub base_w: usize,
    pub base_h: usize,
    pub ladder_rungs: usize,
}

impl Default for IntegrationScheme {
    fn default() -> Self {
        IntegrationScheme {
            fiber_nodes: 128,
            base_w: 96,
            base_h: 96,
            ladder_rungs: 3,
        }
    }
}

impl IntegrationScheme {
    /// Resolutions from coarsest to finest; the last rung is the scheme itself.
    pub fn ladder(&self) -> Vec<Resolution> {
        (0..self.ladder_rungs)
            .map(|r| {
                let div = 1 << (self.ladder_rungs - 1 - r);
                Resolution {
                    fiber_nodes: (self.fiber_nodes / div).max(8),
                    base_w: (self.base_w / div).max(6),
                    base_h: (self.base_h / div).max(6),
                }
            })
            .collect()
    }
}

/// Which integrand families a survey evaluates.
#[derive(Clone, Copy, Debug, Default)]
pub struct SurveyOptions {
    pub t2: bool,
    pub c1: bool,
    pub berwald: bool,
    pub residuals: bool,
    pub equivalence: bool,
}

impl SurveyOptions {
    pub fn all() -> SurveyOptions {
        SurveyOptions {
            t2: true,
            c1: true,
            berwald: true,
            residuals: true,
            equivalence: true,
        }
    }
}

/// Worst-case pointwise diagnostics over a grid.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ResidualMaxima {
    pub torsion: f64,
    pub metricity: f64,
    pub trace_to_n: f64,
    pub euler_identity: f64,
    pub cartan_y_contraction: f64,
    pub frame_orthonormality: f64,
    pub fiber_constraint: f64,
    pub unit_norm: f64,
    pub p_norm: f64,
}

impl ResidualMaxima {
    fn merge(&mut self, other: &ResidualMaxima) {
        self.torsion = self.torsion.max(other.torsion);
        self.metricity = self.metricity.max(other.metricity);
        self.trace_to_n = self.trace_to_n.max(other.trace_to_n);
        self.euler_identity = self.euler_identity.max(other.euler_identity);
        self.cartan_y_contraction = self.cartan_y_contraction.max(other.cartan_y_contraction);
        self.frame_orthonormality = self.frame_orthonormality.max(other.frame_orthonormality);
        self.fiber_constraint = self.fiber_constraint.max(other.fiber_constraint);
        self.unit_norm = self.unit_norm.max(other.unit_norm);
        self.p_norm = self.p_norm.max(other.p_norm);
    }
}

/// Everything one full pass over a grid produces.
#[derive(Clone, Debug, Default)]
pub struct Survey {
    /// Coordinate pipeline: (global term, fiber-integrated term).
    pub t2_terms: Option<(f64, f64)>,
    /// Special-frame pipeline: (curvature term, two fiber-only terms).
    pub c1_terms: Option<(f64, f64, f64)>,
    /// Berwald pipeline value (errors at the gate for non-Berwald input).
    pub berwald: Option<f64>,
    pub residuals: ResidualMaxima,
    /// Largest pointwise difference of the two surface densities.
    pub equivalence_max: f64,
    /// Largest pointwise magnitude of any requested density.
    pub density_max: f64,
    pub nodes: usize,
}

impl Survey {
    pub fn chi_t2(&self) -> Option<f64> {
        self.t2_terms.map(|(a, b)| a + b)
    }
    pub fn chi_c1(&self) -> Option<f64> {
        self.c1_terms.map(|(a, b, c)| a + b + c)
    }
}

struct NodeOutcome {
    t2_term1: f64,
    t2_term2: f64,
    c1_r: f64,
    c1_p1: f64,
    c1_p2: f64,
    berwald: f64,
    residuals: ResidualMaxima,
    equivalence: f64,
    density_max: f64,
}

/// One full instrumented pass over the grid of a metric at a resolution.
pub fn grid_survey(
    spec: &MetricSpec,
    res: Resolution,
    opts: SurveyOptions,
) -> Result<Survey> {
    let nodes = base_grid(spec, res.base_w, res.base_h);
    let outcomes: Vec<Result<NodeOutcome>> = nodes
        .par_iter()
        .map(|node| survey_node(spec, node, res.fiber_nodes, opts))
        .collect();
    let mut per_node = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        per_node.push(o?);
    }
    let col = |f: &dyn Fn(&NodeOutcome) -> f64| -> Vec<f64> { per_node.iter().map(f).collect() };
    let mut residuals = ResidualMaxima::default();
    let mut equivalence_max = 0.0f64;
    let mut density_max = 0.0f64;
    for o in &per_node {
        residuals.merge(&o.residuals);
        equivalence_max = equivalence_max.max(o.equivalence);
        density_max = density_max.max(o.density_max);
    }
    Ok(Survey {
        t2_terms: opts.t2.then(|| {
            (
                pairwise_sum(&col(&|o| o.t2_term1)),
                pairwise_sum(&col(&|o| o.t2_term2)),
            )
        }),
        c1_terms: opts.c1.then(|| {
            (
                pairwise_sum(&col(&|o| o.c1_r)),
                pairwise_sum(&col(&|o| o.c1_p1)),
                pairwise_sum(&col(&|o| o.c1_p2)),
            )
        }),
        berwald: opts.berwald.then(|| pairwise_sum(&col(&|o| o.berwald))),
        residuals,
        equivalence_max,
        density_max,
        nodes: nodes.len() * res.fiber_nodes,
    })
}

fn survey_node(
    spec: &MetricSpec,
    node: &BaseNode,
    fiber_nodes: usize,
    opts: SurveyOptions,
) -> Result<NodeOutcome> {
    let fc = FiberChart::build(spec, node.chart, node.x, fiber_nodes)?;
    let base_w = node.weight * node.pou;
    let mut out = NodeOutcome {
        t2_term1: 0.0,
        t2_term2: 0.0,
        c1_r: 0.0,
        c1_p1: 0.0,
        c1_p2: 0.0,
        berwald: 0.0,
        residuals: ResidualMaxima::default(),
        equivalence: 0.0,
        density_max: 0.0,
    };
    let mut t2_fiber: Vec<FiberOnlyForm> = Vec::new();
    let mut c1_p1_fiber: Vec<FiberOnlyForm> = Vec::new();
    let mut c1_p2_fiber: Vec<FiberOnlyForm> = Vec::new();
    let mut t2_glob = Vec::new();
    let mut c1_glob = Vec::new();
    let mut berwald_glob = Vec::new();
    for pt in &fc.points {
        let mut density_t2 = 0.0;
        let mut density_c1 = 0.0;
        if opts.t2 || opts.equivalence {
            let t1 = theorem2_term1(pt)?;
            let t2 = theorem2_term2(pt)?;
            density_t2 = t1.coeff(0b111) + t2.0.coeff(0b111);
            if opts.t2 {
                t2_glob.push(t1);
                t2_fiber.push(t2);
            }
        }
        if opts.c1 || opts.equivalence {
            let c1 = corollary1_integrands(pt)?;
            density_c1 =
                c1.r_term.coeff(0b111) + c1.p1_term.0.coeff(0b111) + c1.p2_term.0.coeff(0b111);
            if opts.c1 {
                c1_glob.push(c1.r_term);
                c1_p1_fiber.push(c1.p1_term);
                c1_p2_fiber.push(c1.p2_term);
            }
        }
        if opts.equivalence {
            out.equivalence = out.equivalence.max((density_t2 - density_c1).abs());
        }
        out.density_max = out
            .density_max
            .max(density_t2.abs())
            .max(density_c1.abs());
        if opts.berwald {
            let b = berwald_integrand(pt)?;
            out.density_max = out.density_max.max(b.coeff(0b111).abs());
            berwald_glob.push(b);
        }
        if opts.residuals {
            let (torsion, metricity) = structure_residuals(&pt.cd, &pt.fd);
            curvature_split(&pt.cd, &pt.fd)?;
            let r = ResidualMaxima {
                torsion,
                metricity,
                trace_to_n: pt.cd.trace_to_n_defect(&pt.fd),
                euler_identity: pt.fd.euler_defect().abs(),
                cartan_y_contraction: pt.fd.cartan_y_contraction(),
                frame_orthonormality: pt.frame.orthonormality_defect(&pt.fd),
                fiber_constraint: pt.constraint_defect(),
                unit_norm: (pt.fd.f - 1.0).abs(),
                p_norm: pt.cd.p_norm(),
            };
            out.residuals.merge(&r);
        } else if opts.berwald {
            out.residuals.p_norm = out.residuals.p_norm.max(pt.cd.p_norm());
        }
    }
    // Global densities integrate over d-theta directly; fiber-only densities
    // are contracted along the fiber first, then weighted on the base.
    let sum_global = |forms: &[ExtForm]| -> f64 {
        let per: Vec<f64> = forms.iter().map(|w| w.coeff(0b111) * fc.weight).collect();
        pairwise_sum(&per) * base_w
    };
    if opts.t2 {
        out.t2_term1 = sum_global(&t2_glob);
        out.t2_term2 = fiber_integrate_fiber_only(&t2_fiber, fc.weight).coeff(0b011) * base_w;
    }
    if opts.c1 {
        out.c1_r = sum_global(&c1_glob);
        out.c1_p1 = fiber_integrate_fiber_only(&c1_p1_fiber, fc.weight).coeff(0b011) * base_w;
        out.c1_p2 = fiber_integrate_fiber_only(&c1_p2_fiber, fc.weight).coeff(0b011) * base_w;
    }
    if opts.berwald {
        out.berwald = sum_global(&berwald_glob);
    }
    Ok(out)
}

/// Fiber integral of the vertical-exactness probe at one base point:
/// the result must vanish for every constant matrix.
pub fn imp_probe_norm(
    spec: &MetricSpec,
    chart: ChartId,
    x: [f64; 2],
    fiber_nodes: usize,
    theta: &[Vec<f64>],
) -> Result<f64> {
    let fc = FiberChart::build(spec, chart, x, fiber_nodes)?;
    let forms: Vec<FiberOnlyForm> = fc
        .points
        .iter()
        .map(|p| theorem2_term2_constant_probe(p, theta))
        .collect();
    Ok(fiber_integrate_fiber_only(&forms, fc.weight).max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    T2,
    C1,
    Berwald,
}

impl std::str::FromStr for Theorem {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Theorem, String> {
        match s {
            "t2" => Ok(Theorem::T2),
            "c1" => Ok(Theorem::C1),
            "berwald" => Ok(Theorem::Berwald),
            other => Err(format!("unknown theorem `{other}` (expected t2|c1|berwald)")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermValue {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderRung {
    pub fiber_nodes: usize,
    pub base_grid: [usize; 2],
    pub chi: f64,
    pub residual: f64,
}

/// The result document of a chi computation.
#[derive(Clone, Debug, Serialize)]
pub struct ChiReport {
    pub metric: String,
    pub params: std::collections::BTreeMap<String, f64>,
    pub theorem: Theorem,
    pub scheme: IntegrationScheme,
    pub terms: Vec<TermValue>,
    pub chi: f64,
    pub chi_nearest: i64,
    pub residual: f64,
    /// False when the finest-rung residual exceeds 0.1; the nearest-integer
    /// claim is then explicitly inconclusive, never silently rounded.
    pub converged: bool,
    pub ladder: Vec<LadderRung>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u128>,
    pub ledger_hash: String,
}

/// Runs the full pipeline for one theorem over the refinement ladder.
pub fn euler_characteristic(
    spec: &MetricSpec,
    theorem: Theorem,
    scheme: IntegrationScheme,
    with_runtime: bool,
) -> Result<ChiReport> {
    let start = std::time::Instant::now();
    let opts = match theorem {
        Theorem::T2 => SurveyOptions {
            t2: true,
            ..Default::default()
        },
        Theorem::C1 => SurveyOptions {
            c1: true,
            ..Default::default()
        },
        Theorem::Berwald => SurveyOptions {
            berwald: true,
            ..Default::default()
        },
    };
    let mut ladder = Vec::new();
    let mut terms = Vec::new();
    let mut chi = f64::NAN;
    for res in scheme.ladder() {
        let survey = grid_survey(spec, res, opts)?;
        let (value, term_values) = match theorem {
            Theorem::T2 => {
                let (t1, t2) = survey.t2_terms.unwrap();
                (
                    t1 + t2,
                    vec![
                        TermValue {
                            label: "curvature-term".into(),
                            value: t1,
                        },
                        TermValue {
                            label: "minkowski-term".into(),
                            value: t2,
                        },
                    ],
                )
            }
            Theorem::C1 => {
                let (r, p1, p2) = survey.c1_terms.unwrap();
                (
                    r + p1 + p2,
                    vec![
                        TermValue {
                            label: "frame-curvature-term".into(),
                            value: r,
                        },
                        TermValue {
                            label: "p1-term".into(),
                            value: p1,
                        },
                        TermValue {
                            label: "p2-term".into(),
                            value: p2,
                        },
                    ],
                )
            }
            Theorem::Berwald => {
                let v = survey.berwald.unwrap();
                (
                    v,
                    vec![TermValue {
                        label: "pfaffian-term".into(),
                        value: v,
                    }],
                )
            }
        };
        ladder.push(LadderRung {
            fiber_nodes: res.fiber_nodes,
            base_grid: [res.base_w, res.base_h],
            chi: value,
            residual: (value - value.round()).abs(),
        });
        chi = value;
        terms = term_values;
    }
    let residual = (chi - chi.round()).abs();
    Ok(ChiReport {
        metric: spec.name.clone(),
        params: spec.params(),
        theorem,
        scheme,
        terms,
        chi,
        chi_nearest: chi.round() as i64,
        residual,
        converged: residual <= 0.1,
        ladder,
        runtime_ms: with_runtime.then(|| start.elapsed().as_millis()),
        ledger_hash: crate::conventions_hash(),
    })
}

/// Convenience: a small scheme for tests and smoke runs.
pub fn coarse_scheme() -> IntegrationScheme {
    IntegrationScheme {
        fiber_nodes: 32,
        base_w: 24,
        base_h: 24,
        ladder_rungs: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn spec(name: &str) -> MetricSpec {
        MetricSpec::catalog(name, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5, 0.0, 2.0);
        // Degree 9 is exact for 5 nodes.
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert_abs_diff_eq!(int, 2.0f64.powi(10) / 10.0, epsilon = 1e-12);
        let total: f64 = w.iter().sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn periodic_trapezoid_is_exact_on_constants() {
        let m = spec("flat-t2");
        let fc = FiberChart::build(&m, 0, [0.3, 0.4], 64).unwrap();
        let forms: Vec<ExtForm> = fc
            .points
            .iter()
            .map(|_| ExtForm::generator(SM_NGEN, GEN_DTHETA))
            .collect();
        let v = fiber_integrate(&forms, fc.weight).coeff(0);
        assert_abs_diff_eq!(v, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn indicatrix_has_unit_norm_on_grid() {
        let m = spec("randers-s2");
        let fc = FiberChart::build(&m, 0, [0.7, -0.2], 48).unwrap();
        assert!(fc.unit_norm_defect() < 1e-14);
    }

    #[test]
    fn riemannian_fiber_volume_is_two_pi() {
        for name in ["round-s2", "flat-t2", "ellipsoid"] {
            let m = spec(name);
            let v = finsler_circle_volume(&m, 0, [0.4, 0.1], 64).unwrap();
            assert_abs_diff_eq!(v, 2.0 * PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn quartic_fiber_volume_self_converges() {
        let m = spec("quartic-t2");
        let v64 = finsler_circle_volume(&m, 0, [0.5, 0.5], 64).unwrap();
        let v128 = finsler_circle_volume(&m, 0, [0.5, 0.5], 128).unwrap();
        let v256 = finsler_circle_volume(&m, 0, [0.5, 0.5], 256).unwrap();
        assert!((v128 - v256).abs() < 1e-9, "{v64} {v128} {v256}");
        assert!((v64 - v256).abs() < 1e-9);
        // A genuinely non-Euclidean circle length.
        assert!((v256 - 2.0 * PI).abs() > 1e-3);
    }

    #[test]
    fn sphere_area_form_integrates_to_4pi() {
        // The 1e-6 figure holds at the default base grid (the transition bump
        // of the partition of unity limits coarser grids).
        let m = spec("round-s2");
        let area = base_integrate(&m, 96, 96, |chart, x| {
            let a = crate::metric::sphere_metric_coeffs::<f64>(chart, &x, [1.0, 1.0, 1.0]);
            (a[0][0] * a[1][1] - a[0][1] * a[1][0]).sqrt()
        });
        assert_abs_diff_eq!(area, 4.0 * PI, epsilon = 1e-6);
    }

    #[test]
    fn torus_constant_integrates_to_area() {
        let m = spec("flat-t2");
        let v = base_integrate(&m, 16, 16, |_, _| 1.0);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn flat_torus_chi_is_zero() {
        let m = spec("flat-t2");
        let report = euler_characteristic(&m, Theorem::T2, coarse_scheme(), false).unwrap();
        assert!(report.chi.abs() < 1e-10, "chi = {}", report.chi);
        assert_eq!(report.chi_nearest, 0);
        assert!(report.converged);
    }

    #[test]
    fn round_sphere_chi_is_two_on_a_coarse_grid() {
        let m = spec("round-s2");
        let report = euler_characteristic(&m, Theorem::C1, coarse_scheme(), false).unwrap();
        assert!(
            (report.chi - 2.0).abs() < 1e-3,
            "chi = {} at coarse resolution",
            report.chi
        );
    }

    #[test]
    fn berwald_gate_rejects_randers() {
        let m = spec("randers-s2");
        let err = euler_characteristic(&m, Theorem::Berwald, coarse_scheme(), false);
        assert!(matches!(err, Err(crate::error::GeometryError::BerwaldGate { .. })));
    }

    #[test]
    fn fiber_orientation_reversal_flips_integrals() {
        let m = spec("round-s2");
        let fc = FiberChart::build(&m, 0, [0.2, 0.5], 64).unwrap();
        let forms: Vec<ExtForm> = fc
            .points
            .iter()
            .map(|p| p.restrict(&p.frame.omega3).scale(-1.0))
            .collect();
        let forward = fiber_integrate(&forms, fc.weight).coeff(0);
        // Reversing the fiber orientation means traversing theta backwards,
        // which negates the d-theta component of every restricted form.
        let reversed: Vec<ExtForm> = forms
            .iter()
            .map(|w| {
                let (with, rest) = w.split_generator(GEN_DTHETA);
                ExtForm::generator(SM_NGEN, GEN_DTHETA)
                    .wedge(&with.scale(-1.0))
                    .add(&rest)
            })
            .collect();
        let backward = fiber_integrate(&reversed, fc.weight).coeff(0);
        assert_abs_diff_eq!(forward, -backward, epsilon = 1e-12);
        assert_abs_diff_eq!(forward, 2.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn imp_probe_vanishes_on_randers() {
        let m = spec("randers-s2");
        let theta = vec![vec![0.7, -0.3], vec![0.2, 1.1]];
        let v = imp_probe_norm(&m, 0, [0.6, -0.1], 96, &theta).unwrap();
        assert!(v < 1e-8, "vertical exactness probe = {v}");
    }
}
