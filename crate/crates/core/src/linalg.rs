//! Small dense kernels: row-major matrix product, compensated dot product and
//! Jacobi singular values.

/// Dot product accurate as if computed in twice the working precision
/// (Ogita, Rump and Oishi's Dot2): each product and each partial sum carries
/// its rounding error forward exactly.
pub fn dot2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut sum, mut err) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let p_err = x.mul_add(*y, -p);
        let t = sum + p;
        let z = t - sum;
        err += (sum - (t - z)) + (p - z) + p_err;
        sum = t;
    }
    sum + err
}

/// `c = a · b` for row-major `a` (m×k) and `b` (k×n).
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    if n == 1 {
        for (ci, row) in c.iter_mut().zip(a.chunks_exact(k.max(1))) {
            *ci = row.iter().zip(b).map(|(x, y)| x * y).sum();
        }
        return c;
    }
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            let brow = &b[l * n..(l + 1) * n];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += ail * bj;
            }
        }
    }
    c
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular values of a row-major `rows × cols` matrix, descending.
///
/// One-sided (Hestenes) Jacobi: plane rotations orthogonalize the columns of
/// the narrower orientation, which diagonalizes its Gram matrix without ever
/// forming it. Column norms at convergence are the singular values, accurate
/// relative to the largest one at machine precision.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    // Store the k = min(rows, cols) vectors to orthogonalize, each of length m.
    let (k, m) = if cols <= rows { (cols, rows) } else { (rows, cols) };
    let mut vecs: Vec<Vec<f64>> = if cols <= rows {
        (0..cols).map(|j| (0..rows).map(|i| a[i * cols + j]).collect()).collect()
    } else {
        a.chunks_exact(cols).map(|r| r.to_vec()).collect()
    };
    debug_assert!(vecs.iter().all(|v| v.len() == m));

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (head, tail) = vecs.split_at_mut(q);
                let (vp, vq) = (&mut head[p], &mut tail[0]);
                let alpha: f64 = vp.iter().map(|x| x * x).sum();
                let beta: f64 = vq.iter().map(|x| x * x).sum();
                let gamma: f64 = vp.iter().zip(vq.iter()).map(|(x, y)| x * y).sum();
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = vecs.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}
