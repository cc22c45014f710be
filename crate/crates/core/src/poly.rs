//! Dense real polynomials in ascending coefficient order.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `Σ cₖ xᵏ` by Horner's rule.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|c| c * s).collect()
}

/// Monic polynomial `∏ (x - rᵢ)`.
pub fn from_roots(roots: &[f64]) -> Vec<f64> {
    roots.iter().fold(vec![1.0], |acc, &r| mul(&acc, &[-r, 1.0]))
}

/// Long division `a = q·b + r`, returning `(q, r)` with `deg r < deg b`.
pub fn divide(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let b = trim(b);
    assert!(!b.is_empty(), "division by the zero polynomial");
    let mut r = a.to_vec();
    if r.len() < b.len() {
        return (vec![0.0], r);
    }
    let lead = *b.last().unwrap();
    let mut q = vec![0.0; r.len() - b.len() + 1];
    for k in (0..q.len()).rev() {
        let c = r[k + b.len() - 1] / lead;
        q[k] = c;
        for (j, &bj) in b.iter().enumerate() {
            r[k + j] -= c * bj;
        }
    }
    r.truncate(b.len() - 1);
    (q, r)
}

fn trim(a: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    v
}

/// Coefficients of `det(xI − C)` for a square complex matrix, via the
/// Faddeev–LeVerrier recursion. Returned in ascending order, monic.
pub fn charpoly_complex(c: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = c.nrows();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..=n {
        m = c * &m + &id * coeffs[n + 1 - k];
        let cm = c * &m;
        coeffs[n - k] = -cm.trace() / k as f64;
    }
    coeffs
}
