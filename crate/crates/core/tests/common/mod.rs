//! Shared test oracles: Richardson-extrapolated finite differences and the
//! classical Christoffel/Riemann formulas, all independent of the jet engine.

/// Central difference with one Richardson step (error order h^4).
pub fn central_diff<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Mixed partial by nested central differences. The step grows with the
/// derivative order: the subtraction noise of an order-k stencil scales like
/// eps / h^k, so the third-order oracles need a coarser step than the
/// first-order ones to stay below 1e-6.
pub fn mixed_partial<F>(f: &F, point: &[f64], orders: &[usize], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    match orders.iter().position(|&k| k > 0) {
        None => f(point),
        Some(var) => {
            let mut lower = orders.to_vec();
            lower[var] -= 1;
            let g = |t: f64| {
                let mut p = point.to_vec();
                p[var] += t;
                mixed_partial(f, &p, &lower, h)
            };
            central_diff(g, h)
        }
    }
}

/// A reasonable step for an order-k mixed partial of a smooth O(1) function.
pub fn fd_step(order: usize) -> f64 {
    match order {
        0 | 1 => 1e-4,
        2 => 1e-3,
        _ => 6e-3,
    }
}

/// Classical Christoffel symbols of a 2D Riemannian metric field `a(x)`,
/// from finite differences of the metric coefficients.
pub fn classical_christoffel<A>(a: &A, x: [f64; 2], h: f64) -> [[[f64; 2]; 2]; 2]
where
    A: Fn([f64; 2]) -> [[f64; 2]; 2],
{
    let da = |i: usize, j: usize, k: usize| -> f64 {
        central_diff(
            |t| {
                let mut p = x;
                p[k] += t;
                a(p)[i][j]
            },
            h,
        )
    };
    let am = a(x);
    let det = am[0][0] * am[1][1] - am[0][1] * am[1][0];
    let inv = [
        [am[1][1] / det, -am[0][1] / det],
        [-am[0][1] / det, am[0][0] / det],
    ];
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for m in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut s = 0.0;
                for i in 0..2 {
                    s += inv[m][i] * (da(i, j, k) + da(i, k, j) - da(j, k, i));
                }
                gamma[m][j][k] = 0.5 * s;
            }
        }
    }
    gamma
}

/// Classical Riemann tensor `R^i_{jkl}` of a 2D metric field by finite
/// differences of the Christoffel symbols.
pub fn classical_riemann<A>(a: &A, x: [f64; 2], h: f64) -> [[[[f64; 2]; 2]; 2]; 2]
where
    A: Fn([f64; 2]) -> [[f64; 2]; 2] + Copy,
{
    let dgamma = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        central_diff(
            |t| {
                let mut p = x;
                p[l] += t;
                classical_christoffel(&a, p, h)[i][j][k]
            },
            h,
        )
    };
    let gamma = classical_christoffel(&a, x, h);
    let mut r = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = dgamma(i, j, l, k) - dgamma(i, j, k, l);
                    for m in 0..2 {
                        v += gamma[i][m][k] * gamma[m][j][l] - gamma[i][m][l] * gamma[m][j][k];
                    }
                    r[i][j][k][l] = v;
                }
            }
        }
    }
    r
}

/// Gauss curvature from the finite-difference Riemann tensor:
/// `K = R_{1212} / det(a)` with `R_{ijkl} = a_im R^m_{jkl}`.
pub fn gauss_curvature<A>(a: &A, x: [f64; 2], h: f64) -> f64
where
    A: Fn([f64; 2]) -> [[f64; 2]; 2] + Copy,
{
    let r = classical_riemann(a, x, h);
    let am = a(x);
    let det = am[0][0] * am[1][1] - am[0][1] * am[1][0];
    let r_1212 = am[0][0] * r[0][1][0][1] + am[0][1] * r[1][1][0][1];
    r_1212 / det
}
