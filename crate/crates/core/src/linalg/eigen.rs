//! Dense nonsymmetric eigenvalues: balancing, Householder reduction to
//! upper Hessenberg form, then Francis double-shift QR.

use num_complex::Complex;

use super::{BandedMatrix, DenseLu, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_QR_SWEEPS: usize = 60;

/// All eigenvalues of a square matrix, sorted by real part (ties by
/// imaginary part).
pub fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h: Vec<Vec<T>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    balance(&mut h);
    hessenberg(&mut h);
    let mut ev = hqr(&mut h)?;
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

fn balance<T: Real>(a: &mut [Vec<T>]) {
    let n = a.len();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for v in a[i].iter_mut() {
                        *v *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg<T: Real>(a: &mut [Vec<T>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    let mut v = vec![T::zero(); n];
    for k in 0..n - 2 {
        let norm = (k + 1..n).map(|i| a[i][k] * a[i][k]).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[k + 1][k] > T::zero() { -norm } else { norm };
        for i in k + 1..n {
            v[i] = a[i][k];
        }
        v[k + 1] -= alpha;
        let vnorm2: T = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        // H A
        for j in k..n {
            let s: T = (k + 1..n).map(|i| v[i] * a[i][j]).sum::<T>() * two / vnorm2;
            for i in k + 1..n {
                a[i][j] -= s * v[i];
            }
        }
        // (H A) H
        for row in a.iter_mut() {
            let s: T = (k + 1..n).map(|j| row[j] * v[j]).sum::<T>() * two / vnorm2;
            for j in k + 1..n {
                row[j] -= s * v[j];
            }
        }
        a[k + 1][k] = alpha;
        for i in k + 2..n {
            a[i][k] = T::zero();
        }
    }
}

#[inline]
fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names, unused_assignments)]
fn hqr<T: Real>(a: &mut [Vec<T>]) -> Result<Vec<Complex<T>>> {
    let n = a.len();
    let eps = T::epsilon();
    let mut wr = vec![Complex::new(T::zero(), T::zero()); n];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn: isize = n as isize - 1;
    let mut t = T::zero();
    let (mut p, mut q, mut r) = (T::zero(), T::zero(), T::zero());
    let (mut x, mut y, mut z, mut w);
    let mut s;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            x = a[nu][nu];
            if l == nu {
                wr[nu] = Complex::new(x + t, T::zero());
                nn -= 1;
            } else {
                y = a[nu - 1][nu - 1];
                w = a[nu][nu - 1] * a[nu - 1][nu];
                if l + 1 == nu {
                    p = T::lit(0.5) * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wr[nu - 1] = Complex::new(x + z, T::zero());
                        wr[nu] = Complex::new(x + z, T::zero());
                        if z != T::zero() {
                            wr[nu] = Complex::new(x - w / z, T::zero());
                        }
                    } else {
                        wr[nu] = Complex::new(x + p, -z);
                        wr[nu - 1] = Complex::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_SWEEPS {
                        return Err(Error::NoConvergence {
                            what: "Hessenberg QR",
                            iterations: its,
                            residual: a[nu][nu - 1].abs().as_f64(),
                        });
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for (i, row) in a.iter_mut().enumerate().take(nu + 1) {
                            row[i] -= x;
                        }
                        s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nu - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nu - 1 {
                        a[i + 2][i] = T::zero();
                        if i != m {
                            a[i + 2][i - 1] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = T::zero();
                            if k + 1 != nu {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a[k][j] + q * a[k + 1][j];
                                if k + 1 != nu {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for row in a.iter_mut().take(mmin + 1).skip(l) {
                                p = x * row[k] + y * row[k + 1];
                                if k + 1 != nu {
                                    p += z * row[k + 2];
                                    row[k + 2] -= p * r;
                                }
                                row[k + 1] -= p * q;
                                row[k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            // keep sweeping only while nothing deflated
            if nn < 0 || !(l + 1 < nn as usize) {
                break;
            }
        }
    }
    Ok(wr)
}

/// Scaled residual `||A v - lambda v|| / (||A||_F ||v||)` of the eigenvector
/// obtained by complex inverse iteration at `lambda`.
pub fn eigenpair_residual<T: Real>(a: &Matrix<T>, lambda: Complex<T>) -> Result<T> {
    let n = a.rows();
    let anorm = a.norm().max(T::min_positive_value());
    // shift slightly off the eigenvalue so the factorization stays regular
    let shift = lambda + Complex::new(anorm * T::lit(1e-10), anorm * T::lit(1e-10));
    let mut m: Vec<Vec<Complex<T>>> = (0..n)
        .map(|i| a.row(i).iter().map(|&x| Complex::new(x, T::zero())).collect())
        .collect();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let (lu, perm) = complex_lu(m)?;
    let mut v: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(T::one() + T::count(i % 7) * T::lit(0.1), T::count(i % 3) * T::lit(0.05)))
        .collect();
    for _ in 0..4 {
        v = complex_solve(&lu, &perm, &v);
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::SingularMatrix("inverse iteration"));
        }
        for c in v.iter_mut() {
            *c /= norm;
        }
    }
    let mut res = T::zero();
    for i in 0..n {
        let mut s = Complex::new(T::zero(), T::zero());
        for (j, &x) in a.row(i).iter().enumerate() {
            s += v[j] * x;
        }
        s -= v[i] * lambda;
        res += s.norm_sqr();
    }
    Ok(res.sqrt() / anorm)
}

type ComplexLu<T> = (Vec<Vec<Complex<T>>>, Vec<usize>);

fn complex_lu<T: Real>(mut a: Vec<Vec<Complex<T>>>) -> Result<ComplexLu<T>> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                a[i][k]
                    .norm()
                    .partial_cmp(&a[j][k].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        if a[p][k].norm() == T::zero() {
            // exact singularity: nudge the pivot
            a[p][k] = Complex::new(T::epsilon(), T::zero());
        }
        a.swap(k, p);
        perm.swap(k, p);
        let pivot = a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / pivot;
            a[i][k] = f;
            for j in k + 1..n {
                let u = a[k][j];
                a[i][j] -= f * u;
            }
        }
    }
    Ok((a, perm))
}

fn complex_solve<T: Real>(lu: &[Vec<Complex<T>>], perm: &[usize], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = lu.len();
    let mut x: Vec<Complex<T>> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let t = lu[i][j] * x[j];
            x[i] -= t;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let t = lu[i][j] * x[j];
            x[i] -= t;
        }
        x[i] /= lu[i][i];
    }
    x
}

/// Smallest singular value by inverse iteration on `A^T A` (each step is
/// one solve with `A` and one with `A^T`). Returns 0 for a numerically
/// singular matrix.
pub fn smallest_singular_value<T: Real>(a: &Matrix<T>) -> T {
    match DenseLu::new(a.clone()) {
        Ok(lu) => sigma_min_by_inverse_iteration(a.rows(), |b| lu.solve(b), |b| lu.solve_transpose(b)),
        Err(_) => T::zero(),
    }
}

/// Same as [`smallest_singular_value`] for a band matrix.
pub fn smallest_singular_value_banded<T: Real>(a: &BandedMatrix<T>) -> T {
    let n = a.dim();
    match a.clone().factor() {
        Ok(lu) => sigma_min_by_inverse_iteration(n, |b| lu.solve(b), |b| lu.solve_transpose(b)),
        Err(_) => T::zero(),
    }
}

fn sigma_min_by_inverse_iteration<T: Real>(
    n: usize,
    solve: impl Fn(&[T]) -> Vec<T>,
    solve_t: impl Fn(&[T]) -> Vec<T>,
) -> T {
    let mut x: Vec<T> = (0..n).map(|i| T::one() + T::count(i % 5) * T::lit(0.01)).collect();
    let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut sigma = T::infinity();
    for _ in 0..5000 {
        let y = solve_t(&x);
        let z = solve(&y);
        let growth = z.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !growth.is_finite() {
            return T::zero();
        }
        let next = (T::one() / growth).sqrt();
        x = z.into_iter().map(|v| v / growth).collect();
        let done = (next - sigma).abs() <= T::lit(1e-13) * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_two_by_two() {
        let a = Matrix::<f64>::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert!((ev[0].re - 2.0).abs() < 1e-14 && ev[0].im == 0.0);
        assert!((ev[1].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert!(ev[0].re.abs() < 1e-14);
        assert!((ev[0].im.abs() - 1.0).abs() < 1e-14);
        assert!((ev[0].im + ev[1].im).abs() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = Matrix::<f64>::from_rows(&[vec![6.0, -11.0, 6.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let ev = eigenvalues(&a).unwrap();
        for (k, e) in ev.iter().enumerate() {
            assert!((e.re - (k + 1) as f64).abs() < 1e-10, "{e}");
            assert!(e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn smallest_singular_value_of_diagonal() {
        let a = Matrix::<f64>::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, -0.5, 0.0], vec![0.0, 0.0, 7.0]]);
        assert!((smallest_singular_value(&a) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn residual_of_exact_pair_is_small() {
        let a = Matrix::<f64>::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]);
        let ev = eigenvalues(&a).unwrap();
        for e in ev {
            assert!(eigenpair_residual(&a, e).unwrap() < 1e-10);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert!((ev[0].re - 1.0).abs() < 1e-5);
        assert!((ev[1].re - 3.0).abs() < 1e-5);
    }
}
