//! Dense helpers for the tiny matrices this crate works with (≤ ~10 per
//! side): symmetric eigenvalues by cyclic Jacobi, singular values, and
//! numerical rank. No external linear algebra backend.

use ndarray::Array2;

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// descending. Panics if the input is not square.
pub fn symmetric_eigenvalues(sym: &Array2<f64>) -> Vec<f64> {
    let n = sym.nrows();
    assert_eq!(n, sym.ncols(), "symmetric_eigenvalues needs a square matrix");
    let mut a = sym.clone();
    // Off-diagonal Frobenius mass shrinks by each rotation; 30 full sweeps is
    // far beyond what n <= 10 needs to reach machine precision.
    for _ in 0..30 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&a)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Singular values, descending, via the eigenvalues of the smaller Gram
/// matrix.
pub fn singular_values(m: &Array2<f64>) -> Vec<f64> {
    // One-sided Jacobi (Hestenes): orthogonalize column pairs in place;
    // singular values are the column norms at convergence. Going through
    // the Gram matrix instead would square the condition number and cap
    // small-σ accuracy near √ε·σ_max, too coarse for rank tests at 1e-8.
    let mut a = if m.nrows() >= m.ncols() { m.clone() } else { m.t().to_owned() };
    let n = a.ncols();
    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (mut aii, mut ajj, mut aij) = (0.0, 0.0, 0.0);
                for r in 0..a.nrows() {
                    aii += a[(r, i)] * a[(r, i)];
                    ajj += a[(r, j)] * a[(r, j)];
                    aij += a[(r, i)] * a[(r, j)];
                }
                if aij.abs() <= 1e-30 + 1e-16 * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..a.nrows() {
                    let (x, y) = (a[(r, i)], a[(r, j)]);
                    a[(r, i)] = c * x - s * y;
                    a[(r, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|k| a.column(k).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Rank at a relative threshold: number of singular values above
/// `tol · σ_max`. A zero matrix has rank 0 for any positive `tol`.
pub fn numerical_rank(m: &Array2<f64>, tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > tol * top).count(),
        _ => 0,
    }
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}
