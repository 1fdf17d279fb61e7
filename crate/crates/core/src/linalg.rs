//! Small dense real eigenvalue solver: Householder reduction to upper
//! Hessenberg form followed by the Francis double-shift QR iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Reduces `a` in place to upper Hessenberg form by orthogonal similarity.
fn reduce_to_hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- H A with H = I - 2 v vᵀ / (vᵀv)
        for j in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(k + 1 + r, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= f * vr;
            }
        }
        // A <- A H
        for i in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(i, k + 1 + r)]).sum();
            let f = 2.0 * dot / vnorm2;
            for (r, vr) in v.iter().enumerate() {
                a[(i, k + 1 + r)] -= f * vr;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// All eigenvalues of a real square matrix, in no particular order.
#[allow(unused_assignments)]
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::numerical("eigenvalues", "matrix is not square"));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("eigenvalues", "matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = matrix.clone();
    reduce_to_hessenberg(&mut h);

    // Francis QR on the Hessenberg matrix; indices below are 1-based to keep
    // the classical formulation readable.
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    macro_rules! a {
        ($i:expr, $j:expr) => {
            h[(($i) - 1, ($j) - 1)]
        };
    }
    let n = n as isize;
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i - 1).max(1)..=n {
            anorm += a!(i as usize, j as usize).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z) = (0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let lu = l as usize;
                s = a!(lu - 1, lu - 1).abs() + a!(lu, lu).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a!(lu, lu - 1).abs() + s == s {
                    a!(lu, lu - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            x = a!(nu, nu);
            if l == nn {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                y = a!(nu - 1, nu - 1);
                w = a!(nu, nu - 1) * a!(nu - 1, nu);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_SWEEPS_PER_EIGENVALUE {
                        return Err(Error::numerical(
                            "eigenvalues",
                            format!("QR iteration did not converge after {its} sweeps"),
                        ));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nu {
                            a!(i, i) -= x;
                        }
                        s = a!(nu, nu - 1).abs() + a!(nu - 1, nu - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    while m >= l {
                        let mu = m as usize;
                        z = a!(mu, mu);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a!(mu + 1, mu) + a!(mu, mu + 1);
                        q = a!(mu + 1, mu + 1) - z - r - s;
                        r = a!(mu + 2, mu + 1);
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a!(mu, mu - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a!(mu - 1, mu - 1).abs() + z.abs() + a!(mu + 1, mu + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    let mu = m as usize;
                    for i in mu + 2..=nu {
                        a!(i, i - 2) = 0.0;
                        if i != mu + 2 {
                            a!(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = mu;
                    while k < nu {
                        if k != mu {
                            p = a!(k, k - 1);
                            q = a!(k + 1, k - 1);
                            r = 0.0;
                            if k != nu - 1 {
                                r = a!(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == mu {
                                if l != m {
                                    a!(k, k - 1) = -a!(k, k - 1);
                                }
                            } else {
                                a!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a!(k, j) + q * a!(k + 1, j);
                                if k != nu - 1 {
                                    p += r * a!(k + 2, j);
                                    a!(k + 2, j) -= p * z;
                                }
                                a!(k + 1, j) -= p * y;
                                a!(k, j) -= p * x;
                            }
                            let mmin = nu.min(k + 3);
                            for i in (l as usize)..=mmin {
                                p = x * a!(i, k) + y * a!(i, k + 1);
                                if k != nu - 1 {
                                    p += z * a!(i, k + 2);
                                    a!(i, k + 2) -= p * r;
                                }
                                a!(i, k + 1) -= p * q;
                                a!(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n as usize).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Largest real part among the eigenvalues.
pub fn spectral_abscissa(matrix: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(matrix)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}
