//! Univariate polynomials with rational coefficients: square-free
//! factorization and numerical roots with exact multiplicities.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::sequences::rat_to_f64;

/// Highest degree accepted by [`roots_with_multiplicity`].
pub const MAX_DEGREE: usize = 64;

/// Coefficients, lowest degree first, without trailing zeros.
pub type QPoly = Vec<BigRational>;

fn trim(mut p: QPoly) -> QPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn degree(p: &QPoly) -> usize {
    p.len().saturating_sub(1)
}

fn derivative(p: &QPoly) -> QPoly {
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(i.into())).collect())
}

fn monic(p: QPoly) -> QPoly {
    match p.last().cloned() {
        Some(lead) => p.into_iter().map(|c| c / &lead).collect(),
        None => p,
    }
}

/// Quotient and remainder of `a / b`.
fn divrem(a: &QPoly, b: &QPoly) -> (QPoly, QPoly) {
    let mut r = a.clone();
    if b.is_empty() {
        panic!("division by zero polynomial");
    }
    if r.len() < b.len() {
        return (Vec::new(), trim(r));
    }
    let db = degree(b);
    let lead = b[db].clone();
    let mut q = vec![BigRational::zero(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / &lead;
        if !c.is_zero() {
            for (j, bj) in b.iter().enumerate() {
                r[i + j] -= &c * bj;
            }
        }
        q[i] = c;
    }
    r.truncate(db);
    (trim(q), trim(r))
}

fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
    let (mut x, mut y) = (trim(a.clone()), trim(b.clone()));
    while !y.is_empty() {
        let (_, r) = divrem(&x, &y);
        x = y;
        y = monic(r);
    }
    monic(x)
}

fn sub(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
                let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
                x - y
            })
            .collect(),
    )
}

/// Yun's algorithm: `p = c * prod f_i^i` with each `f_i` square-free and monic.
/// Returns `(f_i, i)` for the nonconstant factors.
pub fn square_free_factors(p: &QPoly) -> Vec<(QPoly, u32)> {
    let p = trim(p.clone());
    if degree(&p) == 0 {
        return Vec::new();
    }
    let dp = derivative(&p);
    let a0 = gcd(&p, &dp);
    let mut b = divrem(&p, &a0).0;
    let c = divrem(&dp, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while degree(&b) > 0 {
        let a = gcd(&b, &d);
        let nb = divrem(&b, &a).0;
        let nc = divrem(&d, &a).0;
        if degree(&a) > 0 {
            out.push((a, i));
        }
        d = sub(&nc, &derivative(&nb));
        b = nb;
        i += 1;
    }
    out
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dv = dv * z + v;
        v = v * z + a;
    }
    (v, dv)
}

/// Roots of a square-free polynomial: companion eigenvalues, then Newton.
fn simple_roots(p: &QPoly) -> Result<Vec<Complex64>> {
    let p = monic(trim(p.clone()));
    let n = degree(&p);
    let c: Vec<f64> = p.iter().map(rat_to_f64).collect();
    if n == 1 {
        return Ok(vec![Complex64::new(-c[0], 0.0)]);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i];
    }
    let eig = m.complex_eigenvalues();
    let mut roots = Vec::with_capacity(n);
    for z0 in eig.iter() {
        let mut z = *z0;
        for _ in 0..50 {
            let (v, dv) = horner(&c, z);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            z -= step;
            if step.norm() <= 1e-17 * z.norm().max(1.0) {
                break;
            }
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::RootFinding("non-finite root".into()));
        }
        roots.push(z);
    }
    Ok(roots)
}

/// All complex roots of a rational polynomial with exact multiplicities.
pub fn roots_with_multiplicity(p: &QPoly) -> Result<Vec<(Complex64, u32)>> {
    let p = trim(p.clone());
    if degree(&p) > MAX_DEGREE {
        return Err(Error::OutOfRange(format!("degree {} exceeds {MAX_DEGREE}", degree(&p))));
    }
    let mut out = Vec::new();
    for (f, mult) in square_free_factors(&p) {
        for z in simple_roots(&f)? {
            out.push((z, mult));
        }
    }
    Ok(out)
}

/// Evaluates a rational polynomial at a complex point in floats.
pub fn eval(p: &QPoly, z: Complex64) -> Complex64 {
    let c: Vec<f64> = p.iter().map(rat_to_f64).collect();
    horner(&c, z).0
}

/// `1 - sum z^{n_j}` as a rational polynomial.
pub fn characteristic(n: &[u32]) -> QPoly {
    let deg = n.iter().copied().max().unwrap_or(0) as usize;
    let mut c = vec![BigRational::zero(); deg + 1];
    c[0] = BigRational::one();
    for &e in n {
        c[e as usize] -= BigRational::one();
    }
    trim(c)
}
