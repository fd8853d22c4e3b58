//! Classic low-discrepancy generators on `[0,1]^d` and the Weyl-sum diagnostic.
//!
//! Van der Corput, Halton and Hammersley points are exact rationals; Kronecker
//! points are floats because `theta` is usually irrational.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A radix `b >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Base(u64);

impl Base {
    pub fn new(b: u64) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidBase(b));
        }
        Ok(Base(b))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Base {
    type Error = Error;
    fn try_from(b: u64) -> Result<Self> {
        Base::new(b)
    }
}

/// Coordinates of a point set, stored flat in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub enum Coords {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// An ordered list of points in `[0,1]^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Coords,
}

impl PointSet {
    pub fn exact(dim: usize, flat: Vec<BigRational>) -> Result<Self> {
        check_shape(dim, flat.len())?;
        let zero = BigRational::zero();
        let one = BigRational::one();
        if let Some(x) = flat.iter().find(|x| **x < zero || **x > one) {
            return Err(Error::OutOfRange(format!("coordinate {x} not in [0,1]")));
        }
        Ok(PointSet { dim, coords: Coords::Exact(flat) })
    }

    pub fn float(dim: usize, flat: Vec<f64>) -> Result<Self> {
        check_shape(dim, flat.len())?;
        if let Some(x) = flat.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OutOfRange(format!("coordinate {x} not in [0,1]")));
        }
        Ok(PointSet { dim, coords: Coords::Float(flat) })
    }

    /// Builds an exact set from a list of points.
    pub fn from_exact_points(dim: usize, points: Vec<Vec<BigRational>>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimMismatch { expected: dim, got: p.len() });
        }
        Self::exact(dim, points.into_iter().flatten().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match &self.coords {
            Coords::Exact(v) => v.len() / self.dim,
            Coords::Float(v) => v.len() / self.dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coords, Coords::Exact(_))
    }

    /// The i-th point in exact form, if the set is exact.
    pub fn point_exact(&self, i: usize) -> Option<&[BigRational]> {
        match &self.coords {
            Coords::Exact(v) => Some(&v[i * self.dim..(i + 1) * self.dim]),
            Coords::Float(_) => None,
        }
    }

    pub fn point_f64(&self, i: usize) -> Vec<f64> {
        match &self.coords {
            Coords::Exact(v) => v[i * self.dim..(i + 1) * self.dim].iter().map(rat_to_f64).collect(),
            Coords::Float(v) => v[i * self.dim..(i + 1) * self.dim].to_vec(),
        }
    }

    /// All coordinates as floats, row-major.
    pub fn to_f64_flat(&self) -> Vec<f64> {
        match &self.coords {
            Coords::Exact(v) => v.iter().map(rat_to_f64).collect(),
            Coords::Float(v) => v.clone(),
        }
    }

    /// The same points with every coordinate rounded to the nearest float.
    pub fn to_float(&self) -> PointSet {
        PointSet { dim: self.dim, coords: Coords::Float(self.to_f64_flat()) }
    }

    /// The first `n` points (all of them if `n` exceeds the length).
    pub fn prefix(&self, n: usize) -> PointSet {
        let k = n.min(self.len()) * self.dim;
        let coords = match &self.coords {
            Coords::Exact(v) => Coords::Exact(v[..k].to_vec()),
            Coords::Float(v) => Coords::Float(v[..k].to_vec()),
        };
        PointSet { dim: self.dim, coords }
    }
}

fn check_shape(dim: usize, len: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    if !len.is_multiple_of(dim) {
        return Err(Error::DimMismatch { expected: dim, got: len % dim });
    }
    Ok(())
}

/// Correctly rounded conversion of a rational to `f64`.
pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `gamma_b(n)`: the base-b digits of `n` mirrored about the radix point.
pub fn radical_inverse(n: u64, b: Base) -> BigRational {
    let (num, den) = radical_inverse_parts(n, b);
    BigRational::new(num, den)
}

/// Numerator and denominator `b^k` of `gamma_b(n)`, unreduced.
pub fn radical_inverse_parts(mut n: u64, b: Base) -> (BigInt, BigInt) {
    let base = BigInt::from(b.0);
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    while n > 0 {
        let (q, r) = n.div_rem(&b.0);
        num = num * &base + r;
        den *= &base;
        n = q;
    }
    (num, den)
}

/// First `n` van der Corput points, `x_k = gamma_b(k - 1)`.
pub fn van_der_corput(n: usize, b: Base) -> PointSet {
    let pts = (0..n as u64).map(|k| radical_inverse(k, b)).collect();
    PointSet { dim: 1, coords: Coords::Exact(pts) }
}

fn check_coprime(bases: &[Base]) -> Result<()> {
    for (i, a) in bases.iter().enumerate() {
        for c in &bases[i + 1..] {
            if a.0.gcd(&c.0) != 1 {
                return Err(Error::NonCoprimeBases(a.0, c.0));
            }
        }
    }
    Ok(())
}

/// Halton points `x_k = (gamma_{b_1}(k), ..., gamma_{b_d}(k))` for `k = 1..=n`.
pub fn halton(n: usize, bases: &[Base]) -> Result<PointSet> {
    if bases.is_empty() {
        return Err(Error::OutOfRange("halton needs at least one base".into()));
    }
    check_coprime(bases)?;
    let mut flat = Vec::with_capacity(n * bases.len());
    for k in 1..=n as u64 {
        flat.extend(bases.iter().map(|&b| radical_inverse(k, b)));
    }
    Ok(PointSet { dim: bases.len(), coords: Coords::Exact(flat) })
}

/// Hammersley points `x_k = (k/n, gamma_{b_1}(k), ...)` for `k = 1..=n`.
pub fn hammersley(n: usize, bases: &[Base]) -> Result<PointSet> {
    check_coprime(bases)?;
    let dim = bases.len() + 1;
    let mut flat = Vec::with_capacity(n * dim);
    for k in 1..=n as u64 {
        flat.push(BigRational::new(k.into(), (n as u64).into()));
        flat.extend(bases.iter().map(|&b| radical_inverse(k, b)));
    }
    Ok(PointSet { dim, coords: Coords::Exact(flat) })
}

/// Kronecker points `({k theta_1}, ..., {k theta_d})` for `k = 1..=n`.
pub fn kronecker(n: usize, theta: &[f64]) -> Result<PointSet> {
    if theta.is_empty() {
        return Err(Error::OutOfRange("theta must be nonempty".into()));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::OutOfRange("theta must be finite".into()));
    }
    let mut flat = Vec::with_capacity(n * theta.len());
    for k in 1..=n {
        for &t in theta {
            let x = k as f64 * t;
            flat.push(x - x.floor());
        }
    }
    Ok(PointSet { dim: theta.len(), coords: Coords::Float(flat) })
}

/// `|(1/N) sum exp(2 pi i <h, x_k>)|`.
pub fn weyl_sum(ps: &PointSet, h: &[i64]) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if h.len() != ps.dim() {
        return Err(Error::DimMismatch { expected: ps.dim(), got: h.len() });
    }
    if h.iter().all(|&c| c == 0) {
        return Err(Error::ZeroFrequency);
    }
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..ps.len() {
        // Reduce h.x mod 1 first; exact points keep the phase exact.
        let phase = match ps.point_exact(i) {
            Some(p) => {
                let s: BigRational = p.iter().zip(h).map(|(x, &c)| x * BigInt::from(c)).sum();
                rat_to_f64(&(&s - s.floor()))
            }
            None => {
                let s: f64 = ps.point_f64(i).iter().zip(h).map(|(x, &c)| x * c as f64).sum();
                s - s.floor()
            }
        };
        re += (TAU * phase).cos();
        im += (TAU * phase).sin();
    }
    let n = ps.len() as f64;
    Ok(((re / n).hypot(im / n)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn b(n: u64) -> Base {
        Base::new(n).unwrap()
    }

    #[test]
    fn radical_inverse_examples() {
        assert_eq!(radical_inverse(5, b(2)), r(5, 8));
        assert_eq!(radical_inverse(0, b(7)), r(0, 1));
        assert_eq!(radical_inverse(4, b(3)), r(4, 9));
    }

    #[test]
    fn base_rejects_small() {
        assert_eq!(Base::new(1), Err(Error::InvalidBase(1)));
    }

    #[test]
    fn vdc_table() {
        let ps = van_der_corput(8, b(2));
        let want: Vec<_> =
            [(0, 1), (1, 2), (1, 4), (3, 4), (1, 8), (5, 8), (3, 8), (7, 8)].iter().map(|&(p, q)| r(p, q)).collect();
        assert_eq!(ps.coords(), &Coords::Exact(want));
        assert_eq!(van_der_corput(1, b(2)).point_exact(0).unwrap(), &[r(0, 1)]);
        let three = van_der_corput(3, b(3));
        assert_eq!(three.coords(), &Coords::Exact(vec![r(0, 1), r(1, 3), r(2, 3)]));
    }

    #[test]
    fn halton_examples() {
        let h = halton(7, &[b(2), b(3)]).unwrap();
        assert_eq!(h.point_exact(0).unwrap(), &[r(1, 2), r(1, 3)]);
        assert_eq!(h.point_exact(1).unwrap(), &[r(1, 4), r(2, 3)]);
        assert_eq!(h.point_exact(6).unwrap(), &[r(7, 8), r(5, 9)]);
        assert_eq!(halton(1, &[b(2)]).unwrap().point_exact(0).unwrap(), &[r(1, 2)]);
        assert_eq!(halton(3, &[b(2), b(4)]), Err(Error::NonCoprimeBases(2, 4)));
    }

    #[test]
    fn hammersley_examples() {
        let h = hammersley(4, &[b(2)]).unwrap();
        let want = [(r(1, 4), r(1, 2)), (r(2, 4), r(1, 4)), (r(3, 4), r(3, 4)), (r(1, 1), r(1, 8))];
        for (i, (x, y)) in want.iter().enumerate() {
            assert_eq!(h.point_exact(i).unwrap(), &[x.clone(), y.clone()]);
        }
        let one = hammersley(1, &[]).unwrap();
        assert_eq!((one.dim(), one.point_exact(0).unwrap()), (1, &[r(1, 1)][..]));
        let h3 = hammersley(2, &[b(3)]).unwrap();
        assert_eq!(h3.point_exact(1).unwrap(), &[r(1, 1), r(2, 3)]);
        assert!(hammersley(2, &[b(6), b(9)]).is_err());
    }

    #[test]
    fn kronecker_examples() {
        let k = kronecker(3, &[0.5]).unwrap();
        assert_eq!(k.to_f64_flat(), vec![0.5, 0.0, 0.5]);
        let s = kronecker(2, &[2f64.sqrt()]).unwrap().to_f64_flat();
        assert!((s[0] - 0.41421356).abs() < 1e-8 && (s[1] - 0.82842712).abs() < 1e-8);
        assert_eq!(kronecker(1, &[0.0]).unwrap().to_f64_flat(), vec![0.0]);
    }

    #[test]
    fn weyl_examples() {
        let same = PointSet::exact(1, vec![r(1, 3); 5]).unwrap();
        assert!((weyl_sum(&same, &[1]).unwrap() - 1.0).abs() < 1e-12);
        let two = PointSet::exact(1, vec![r(0, 1), r(1, 2)]).unwrap();
        assert!(weyl_sum(&two, &[1]).unwrap() < 1e-15);
        assert!(weyl_sum(&van_der_corput(1024, b(2)), &[1]).unwrap() < 0.01);
        assert_eq!(weyl_sum(&two, &[0]), Err(Error::ZeroFrequency));
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::float(1, vec![1.5]).is_err());
        assert!(PointSet::exact(2, vec![r(1, 2)]).is_err());
        assert!(PointSet::float(0, vec![]).is_err());
    }
}
