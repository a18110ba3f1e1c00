//! Eigenvalues of a general real matrix.
//!
//! Balancing, Householder reduction to upper Hessenberg form, then the
//! Francis double-shift QR iteration (the EISPACK `balanc`/`orthes`/`hqr`
//! sequence). Complex eigenvalues come out as exact conjugate pairs.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// QR iterations allowed per eigenvalue before giving up.
const MAX_ITERATIONS: usize = 60;

/// Eigenvalues sorted by descending magnitude, then descending real part,
/// then descending imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    values: Vec<Complex64>,
}

impl EigenSpectrum {
    pub fn new(mut values: Vec<Complex64>) -> Self {
        values.sort_by(spectral_order);
        EigenSpectrum { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.first().map_or(0.0, |v| v.norm())
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.values.iter().product()
    }
}

/// Ordering used by [`EigenSpectrum`]: "a before b" when `a` is larger.
pub fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(a: &DenseMatrix) -> Result<EigenSpectrum> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.ensure_finite("eigenvalue input")?;
    let n = a.rows();
    if n == 0 {
        return Ok(EigenSpectrum::new(Vec::new()));
    }
    let mut h = Hess::from(a);
    h.balance();
    h.reduce_to_hessenberg();
    let (wr, wi) = h.hqr()?;
    Ok(EigenSpectrum::new(
        wr.into_iter()
            .zip(wi)
            .map(|(re, im)| Complex64::new(re, im))
            .collect(),
    ))
}

/// Working copy with 1-based indexing, matching the classical formulation.
struct Hess {
    n: usize,
    a: Vec<f64>,
}

impl Hess {
    fn from(m: &DenseMatrix) -> Self {
        let n = m.rows();
        let mut a = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Hess { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (self.n + 1) + j]
    }

    /// Diagonal similarity by powers of two that equalizes row and column norms.
    fn balance(&mut self) {
        const RADIX: f64 = 2.0;
        let sqrdx = RADIX * RADIX;
        let n = self.n;
        let mut done = false;
        while !done {
            done = true;
            for i in 1..=n {
                let mut r = 0.0;
                let mut c = 0.0;
                for j in 1..=n {
                    if j != i {
                        c += self.at(j, i).abs();
                        r += self.at(i, j).abs();
                    }
                }
                if c != 0.0 && r != 0.0 {
                    let mut g = r / RADIX;
                    let mut f = 1.0;
                    let s = c + r;
                    while c < g {
                        f *= RADIX;
                        c *= sqrdx;
                    }
                    g = r * RADIX;
                    while c > g {
                        f /= RADIX;
                        c /= sqrdx;
                    }
                    if (c + r) / f < 0.95 * s {
                        done = false;
                        let g = 1.0 / f;
                        for j in 1..=n {
                            *self.at_mut(i, j) *= g;
                        }
                        for j in 1..=n {
                            *self.at_mut(j, i) *= f;
                        }
                    }
                }
            }
        }
    }

    /// Orthogonal similarity to upper Hessenberg form.
    fn reduce_to_hessenberg(&mut self) {
        let n = self.n;
        let mut ort = vec![0.0; n + 1];
        for m in 2..n {
            let scale: f64 = (m..=n).map(|i| self.at(i, m - 1).abs()).sum();
            if scale == 0.0 {
                continue;
            }
            let mut h = 0.0;
            for i in (m..=n).rev() {
                ort[i] = self.at(i, m - 1) / scale;
                h += ort[i] * ort[i];
            }
            let mut g = h.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            h -= ort[m] * g;
            ort[m] -= g;
            for j in m..=n {
                let f: f64 = (m..=n).rev().map(|i| ort[i] * self.at(i, j)).sum::<f64>() / h;
                for i in m..=n {
                    *self.at_mut(i, j) -= f * ort[i];
                }
            }
            for i in 1..=n {
                let f: f64 = (m..=n).rev().map(|j| ort[j] * self.at(i, j)).sum::<f64>() / h;
                for j in m..=n {
                    *self.at_mut(i, j) -= f * ort[j];
                }
            }
            *self.at_mut(m, m - 1) = scale * g;
            for i in (m + 1)..=n {
                *self.at_mut(i, m - 1) = 0.0;
            }
        }
    }

    /// Francis double-shift QR on the Hessenberg matrix.
    #[allow(unused_assignments)]
    fn hqr(&mut self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let mut wr = vec![0.0; n + 1];
        let mut wi = vec![0.0; n + 1];
        let mut anorm = 0.0;
        for i in 1..=n {
            for j in i.saturating_sub(1).max(1)..=n {
                anorm += self.at(i, j).abs();
            }
        }
        let mut nn = n;
        let mut t = 0.0;
        let (mut p, mut q, mut r, mut s) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        let (mut w, mut x, mut y, mut z) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        while nn >= 1 {
            let mut its = 0usize;
            loop {
                let mut l = nn;
                while l >= 2 {
                    s = self.at(l - 1, l - 1).abs() + self.at(l, l).abs();
                    if s == 0.0 {
                        s = anorm;
                    }
                    if self.at(l, l - 1).abs() + s == s {
                        *self.at_mut(l, l - 1) = 0.0;
                        break;
                    }
                    l -= 1;
                }
                x = self.at(nn, nn);
                if l == nn {
                    wr[nn] = x + t;
                    wi[nn] = 0.0;
                    nn -= 1;
                } else {
                    y = self.at(nn - 1, nn - 1);
                    w = self.at(nn, nn - 1) * self.at(nn - 1, nn);
                    if l == nn - 1 {
                        p = 0.5 * (y - x);
                        q = p * p + w;
                        z = q.abs().sqrt();
                        x += t;
                        if q >= 0.0 {
                            z = p + z.copysign(p);
                            wr[nn - 1] = x + z;
                            wr[nn] = x + z;
                            if z != 0.0 {
                                wr[nn] = x - w / z;
                            }
                            wi[nn - 1] = 0.0;
                            wi[nn] = 0.0;
                        } else {
                            wr[nn - 1] = x + p;
                            wr[nn] = x + p;
                            wi[nn - 1] = -z;
                            wi[nn] = z;
                        }
                        nn -= 2;
                    } else {
                        if its == MAX_ITERATIONS {
                            return Err(Error::EigenNoConvergence {
                                converged: n - nn,
                                total: n,
                            });
                        }
                        if its > 0 && its % 10 == 0 {
                            // Exceptional shift.
                            t += x;
                            for i in 1..=nn {
                                *self.at_mut(i, i) -= x;
                            }
                            s = self.at(nn, nn - 1).abs() + self.at(nn - 1, nn - 2).abs();
                            x = 0.75 * s;
                            y = x;
                            w = -0.4375 * s * s;
                        }
                        its += 1;
                        let mut m = nn - 2;
                        loop {
                            z = self.at(m, m);
                            r = x - z;
                            s = y - z;
                            p = (r * s - w) / self.at(m + 1, m) + self.at(m, m + 1);
                            q = self.at(m + 1, m + 1) - z - r - s;
                            r = self.at(m + 2, m + 1);
                            s = p.abs() + q.abs() + r.abs();
                            p /= s;
                            q /= s;
                            r /= s;
                            if m == l {
                                break;
                            }
                            let u = self.at(m, m - 1).abs() * (q.abs() + r.abs());
                            let v = p.abs()
                                * (self.at(m - 1, m - 1).abs() + z.abs() + self.at(m + 1, m + 1).abs());
                            if u + v == v {
                                break;
                            }
                            m -= 1;
                        }
                        for i in (m + 2)..=nn {
                            *self.at_mut(i, i - 2) = 0.0;
                            if i != m + 2 {
                                *self.at_mut(i, i - 3) = 0.0;
                            }
                        }
                        let mut k = m;
                        while k + 1 <= nn {
                            if k != m {
                                p = self.at(k, k - 1);
                                q = self.at(k + 1, k - 1);
                                r = 0.0;
                                if k != nn - 1 {
                                    r = self.at(k + 2, k - 1);
                                }
                                x = p.abs() + q.abs() + r.abs();
                                if x != 0.0 {
                                    p /= x;
                                    q /= x;
                                    r /= x;
                                }
                            }
                            s = (p * p + q * q + r * r).sqrt().copysign(p);
                            if s != 0.0 {
                                if k == m {
                                    if l != m {
                                        *self.at_mut(k, k - 1) = -self.at(k, k - 1);
                                    }
                                } else {
                                    *self.at_mut(k, k - 1) = -s * x;
                                }
                                p += s;
                                x = p / s;
                                y = q / s;
                                z = r / s;
                                q /= p;
                                r /= p;
                                for j in k..=nn {
                                    p = self.at(k, j) + q * self.at(k + 1, j);
                                    if k != nn - 1 {
                                        p += r * self.at(k + 2, j);
                                        *self.at_mut(k + 2, j) -= p * z;
                                    }
                                    *self.at_mut(k + 1, j) -= p * y;
                                    *self.at_mut(k, j) -= p * x;
                                }
                                let mmin = if nn < k + 3 { nn } else { k + 3 };
                                for i in l..=mmin {
                                    p = x * self.at(i, k) + y * self.at(i, k + 1);
                                    if k != nn - 1 {
                                        p += z * self.at(i, k + 2);
                                        *self.at_mut(i, k + 2) -= p * r;
                                    }
                                    *self.at_mut(i, k + 1) -= p * q;
                                    *self.at_mut(i, k) -= p;
                                }
                            }
                            k += 1;
                        }
                    }
                }
                if nn == 0 || l + 1 >= nn {
                    break;
                }
            }
        }
        wr.remove(0);
        wi.remove(0);
        Ok((wr, wi))
    }
}
