//! Small dense linear algebra helpers (dimensions here never exceed 8).

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym2_eigenvalues(a: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular pivot.
pub fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let mut p = k;
        for r in k + 1..n {
            if a[r][k].abs() > a[p][k].abs() {
                p = r;
            }
        }
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..n {
            let f = a[r][k] / a[k][k];
            for c in k..n {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k][c] * x[c];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

/// Inverse of a small square matrix; `None` if singular.
pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(&mut m, &mut e)?);
    }
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

pub fn det2(a: [[f64; 2]; 2]) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// All permutations of `0..n` with their signs (Heap's algorithm).
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    out.push((perm.clone(), sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            out.push((perm.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Determinant of a small matrix via the permutation expansion (test oracle).
pub fn det_permanent_expansion(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    permutations_with_sign(n)
        .iter()
        .map(|(p, s)| s * (0..n).map(|i| a[i][p[i]]).product::<f64>())
        .sum()
}
