//! Exact discrepancy of finite point sets and partitions.
//!
//! In one dimension both suprema are read off the sorted sample. With
//! `g(t) = #{x < t}/N - t`, every interval deviation is a difference of two
//! values of `g` or of its right limits, and anchored ones compare against
//! `g(0) = 0`. So the extreme discrepancy is `max - min` and the star
//! discrepancy is `max(|max|, |min|)` over the one-sided values of `g` at each
//! order statistic together with `0` and `g(1)`.
//!
//! Exact inputs are rescaled to integers over a common denominator, which keeps
//! the arithmetic in `i128` whenever it fits and in `BigInt` otherwise.

use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sequences::{rat_to_f64, Coords, PointSet};

/// Default point caps for the exact d-dimensional enumeration.
pub const CAP_2D: usize = 256;
pub const CAP_3D: usize = 64;

/// A discrepancy value, with its exact rational form when the input was exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Discrepancy {
    fn from_exact(q: BigRational) -> Self {
        Discrepancy { value: rat_to_f64(&q), exact: Some(q) }
    }

    fn from_float(value: f64) -> Self {
        Discrepancy { value, exact: None }
    }
}

/// Sorted one-dimensional sample, rescaled when exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Breakpoints {
    Exact(Vec<BigRational>),
    /// Values `numerators[i] / denominator` with a positive common denominator.
    Scaled {
        numerators: Vec<BigInt>,
        denominator: BigInt,
    },
    Float(Vec<f64>),
}

impl Breakpoints {
    pub fn len(&self) -> usize {
        match self {
            Breakpoints::Exact(v) => v.len(),
            Breakpoints::Scaled { numerators, .. } => numerators.len(),
            Breakpoints::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Breakpoints::Exact(v) => v.iter().map(rat_to_f64).collect(),
            Breakpoints::Scaled { numerators, denominator } => {
                numerators.iter().map(|a| rat_to_f64(&BigRational::new(a.clone(), denominator.clone()))).collect()
            }
            Breakpoints::Float(v) => v.clone(),
        }
    }

    pub fn to_exact(&self) -> Option<Vec<BigRational>> {
        match self {
            Breakpoints::Exact(v) => Some(v.clone()),
            Breakpoints::Scaled { numerators, denominator } => {
                Some(numerators.iter().map(|a| BigRational::new(a.clone(), denominator.clone())).collect())
            }
            Breakpoints::Float(_) => None,
        }
    }
}

/// Common-denominator form of a list of rationals.
pub(crate) fn rescale(xs: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let den = xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let nums = xs.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    (nums, den)
}

/// Minimal arithmetic needed by the scans.
trait Scalar: Clone + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn from_count(n: usize) -> Self;
}

impl Scalar for i128 {
    fn from_count(n: usize) -> Self {
        n as i128
    }
}

impl Scalar for BigInt {
    fn from_count(n: usize) -> Self {
        BigInt::from(n)
    }
}

impl Scalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }
}

fn max_of<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

fn min_of<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

/// Max and min of `N * D * g` over the critical set, for sorted values
/// `y_i / D` in `[0,1]`. For floats pass `den = 1` and the values themselves.
fn scan_sorted<T: Scalar>(sorted: &[T], den: &T) -> (T, T) {
    let n = sorted.len();
    let nt = T::from_count(n);
    let zero = T::from_count(0);
    let (mut hi, mut lo) = (zero.clone(), zero);
    let mut s = 0;
    while s < n {
        let y = &sorted[s];
        let mut e = s + 1;
        while e < n && sorted[e] == *y {
            e += 1;
        }
        let ny = nt.clone() * y.clone();
        let left = T::from_count(s) * den.clone() - ny.clone();
        hi = max_of(hi, left.clone());
        lo = min_of(lo, left);
        if *y < *den {
            let right = T::from_count(e) * den.clone() - ny;
            hi = max_of(hi, right.clone());
            lo = min_of(lo, right);
        }
        s = e;
    }
    // g(1): every point below 1 counts.
    let below_one = sorted.iter().filter(|y| **y < *den).count();
    let g1 = T::from_count(below_one) * den.clone() - nt * den.clone();
    (max_of(hi, g1.clone()), min_of(lo, g1))
}

#[derive(Clone, Copy)]
enum Kind {
    Star,
    Extreme,
}

fn combine<T: Scalar>((hi, lo): (T, T), kind: Kind) -> T {
    match kind {
        Kind::Extreme => hi - lo,
        Kind::Star => {
            let neg = T::from_count(0) - lo;
            max_of(hi, neg)
        }
    }
}

fn fits_i128(xs: &[BigInt], den: &BigInt, n: usize) -> bool {
    let bound: BigInt = den * BigInt::from(n.max(1)) * 4;
    bound.bits() < 120 && xs.iter().all(|x| x.bits() < 120)
}

fn scaled_1d(nums: &[BigInt], den: &BigInt, kind: Kind) -> BigRational {
    let n = nums.len();
    let scale = den * BigInt::from(n);
    if fits_i128(nums, den, n) {
        let mut v: Vec<i128> = nums.iter().map(|x| x.to_i128().unwrap()).collect();
        v.sort_unstable();
        let d = den.to_i128().unwrap();
        let r = combine(scan_sorted(&v, &d), kind);
        BigRational::new(BigInt::from(r), scale)
    } else {
        let mut v = nums.to_vec();
        v.sort();
        let r = combine(scan_sorted(&v, den), kind);
        BigRational::new(r, scale)
    }
}

fn float_1d(xs: &[f64], kind: Kind) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    // Work in units of 1/N so the float path never scales by N first.
    let n = v.len() as f64;
    let mut hi: f64 = 0.0;
    let mut lo: f64 = 0.0;
    let mut s = 0;
    while s < v.len() {
        let y = v[s];
        let mut e = s + 1;
        while e < v.len() && v[e] == y {
            e += 1;
        }
        let left = s as f64 / n - y;
        hi = hi.max(left);
        lo = lo.min(left);
        if y < 1.0 {
            let right = e as f64 / n - y;
            hi = hi.max(right);
            lo = lo.min(right);
        }
        s = e;
    }
    let g1 = v.iter().filter(|y| **y < 1.0).count() as f64 / n - 1.0;
    hi = hi.max(g1);
    lo = lo.min(g1);
    match kind {
        Kind::Extreme => hi - lo,
        Kind::Star => hi.max(-lo),
    }
}

fn one_dim(ps: &PointSet, kind: Kind) -> Result<Discrepancy> {
    if ps.dim() != 1 {
        return Err(Error::DimMismatch { expected: 1, got: ps.dim() });
    }
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(match ps.coords() {
        Coords::Exact(v) => {
            let (nums, den) = rescale(v);
            Discrepancy::from_exact(scaled_1d(&nums, &den, kind))
        }
        Coords::Float(v) => Discrepancy::from_float(float_1d(v, kind)),
    })
}

/// `sup_{0 < a <= 1} |#{x_i < a}/N - a|`.
pub fn star_discrepancy_1d(ps: &PointSet) -> Result<Discrepancy> {
    one_dim(ps, Kind::Star)
}

/// `sup_{0 <= a < b <= 1} |#{a <= x_i < b}/N - (b - a)|`.
pub fn extreme_discrepancy_1d(ps: &PointSet) -> Result<Discrepancy> {
    one_dim(ps, Kind::Extreme)
}

/// Extreme discrepancy of the right endpoints `t_1 < ... < t_k = 1` of a partition.
pub fn partition_discrepancy(breaks: &Breakpoints) -> Result<Discrepancy> {
    if breaks.is_empty() {
        return Err(Error::EmptyPartition);
    }
    match breaks {
        Breakpoints::Exact(v) => {
            check_breaks(v, &BigRational::zero(), &BigRational::one())?;
            let (nums, den) = rescale(v);
            Ok(Discrepancy::from_exact(scaled_1d(&nums, &den, Kind::Extreme)))
        }
        Breakpoints::Scaled { numerators, denominator } => {
            if !denominator.is_positive_int() {
                return Err(Error::OutOfRange("denominator must be positive".into()));
            }
            check_breaks(numerators, &BigInt::zero(), denominator)?;
            Ok(Discrepancy::from_exact(scaled_1d(numerators, denominator, Kind::Extreme)))
        }
        Breakpoints::Float(v) => {
            check_breaks(v, &0.0, &1.0)?;
            Ok(Discrepancy::from_float(float_1d(v, Kind::Extreme)))
        }
    }
}

trait PositiveInt {
    fn is_positive_int(&self) -> bool;
}

impl PositiveInt for BigInt {
    fn is_positive_int(&self) -> bool {
        *self > BigInt::zero()
    }
}

fn check_breaks<T: PartialOrd>(v: &[T], zero: &T, one: &T) -> Result<()> {
    let mut prev = zero;
    for (i, t) in v.iter().enumerate() {
        if t <= prev {
            return Err(Error::Unsorted(i));
        }
        prev = t;
    }
    if prev != one {
        return Err(Error::Unsorted(v.len() - 1));
    }
    Ok(())
}

/// Exact star discrepancy in dimension `d <= 3` over the critical grid.
///
/// `max_n` overrides the default caps ([`CAP_2D`], [`CAP_3D`]).
pub fn star_discrepancy_dd(ps: &PointSet, max_n: Option<usize>) -> Result<Discrepancy> {
    let d = ps.dim();
    if d == 1 {
        return star_discrepancy_1d(ps);
    }
    if d > 3 {
        return Err(Error::UnsupportedDim(d));
    }
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n = ps.len();
    let cap = max_n.unwrap_or(if d == 2 { CAP_2D } else { CAP_3D });
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    match ps.coords() {
        Coords::Float(v) => {
            let cols: Vec<Vec<f64>> = (0..d).map(|j| v.iter().skip(j).step_by(d).copied().collect()).collect();
            let r = grid_star(&cols, &vec![1.0; d]);
            Ok(Discrepancy::from_float(r / n as f64))
        }
        Coords::Exact(v) => {
            let mut cols = Vec::with_capacity(d);
            let mut dens = Vec::with_capacity(d);
            for j in 0..d {
                let col: Vec<BigRational> = v.iter().skip(j).step_by(d).cloned().collect();
                let (nums, den) = rescale(&col);
                cols.push(nums);
                dens.push(den);
            }
            let dprod: BigInt = dens.iter().product();
            let scale = &dprod * BigInt::from(n);
            let small =
                (&scale * BigInt::from(4)).bits() < 120 && cols.iter().zip(&dens).all(|(c, den)| fits_i128(c, den, n));
            let r = if small {
                let c: Vec<Vec<i128>> = cols.iter().map(|c| c.iter().map(|x| x.to_i128().unwrap()).collect()).collect();
                let ds: Vec<i128> = dens.iter().map(|x| x.to_i128().unwrap()).collect();
                BigInt::from(grid_star(&c, &ds))
            } else {
                grid_star(&cols, &dens)
            };
            Ok(Discrepancy::from_exact(BigRational::new(r, scale)))
        }
    }
}

/// Per-dimension critical grid: sorted distinct coordinates plus `1`, and
/// each point's rank in it.
fn grid_axis<T: Scalar>(col: &[T], one: &T) -> (Vec<T>, Vec<usize>) {
    let mut g: Vec<T> = col.to_vec();
    g.push(one.clone());
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup_by(|a, b| a == b);
    let ranks = col.iter().map(|x| g.partition_point(|y| y < x)).collect();
    (g, ranks)
}

/// `N * prod(D_j) * D*` for scaled columns; the caller divides.
fn grid_star<T: Scalar>(cols: &[Vec<T>], dens: &[T]) -> T {
    let n = cols[0].len();
    let nt = T::from_count(n);
    let dprod = dens.iter().skip(1).fold(dens[0].clone(), |a, b| a * b.clone());
    let axes: Vec<(Vec<T>, Vec<usize>)> = cols.iter().zip(dens).map(|(c, one)| grid_axis(c, one)).collect();
    let mut best = T::from_count(0);
    let mut consider = |vol: T, open: usize, closed: usize| {
        let nv = nt.clone() * vol;
        let a = nv.clone() - T::from_count(open) * dprod.clone();
        let b = T::from_count(closed) * dprod.clone() - nv;
        best = max_of(best.clone(), max_of(a, b));
    };
    if cols.len() == 2 {
        // Sweep the first axis, keeping per-rank histograms of the second.
        let (gx, rx) = &axes[0];
        let (gy, ry) = &axes[1];
        let lx = gx.len() - 1;
        let ly = gy.len() - 1;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| rx[i]);
        let mut h_open = vec![0usize; gy.len()];
        let mut h_closed = vec![0usize; gy.len()];
        let (mut po, mut pc) = (0, 0);
        for (ix, bx) in gx.iter().enumerate() {
            let closed_lim = if ix == lx { lx as isize - 1 } else { ix as isize };
            while po < n && rx[order[po]] < ix {
                h_open[ry[order[po]]] += 1;
                po += 1;
            }
            while pc < n && (rx[order[pc]] as isize) <= closed_lim {
                h_closed[ry[order[pc]]] += 1;
                pc += 1;
            }
            let (mut co, mut cc) = (0, 0);
            for (iy, by) in gy.iter().enumerate() {
                if iy == ly {
                    consider(bx.clone() * by.clone(), co, cc);
                } else {
                    cc += h_closed[iy];
                    consider(bx.clone() * by.clone(), co, cc);
                }
                co += h_open[iy];
            }
        }
    } else {
        let (g0, r0) = &axes[0];
        let (g1, r1) = &axes[1];
        let (g2, r2) = &axes[2];
        let lims = |g: &Vec<T>, i: usize| -> (isize, isize) {
            let last = g.len() - 1;
            let c = if i == last { last as isize - 1 } else { i as isize };
            (i as isize - 1, c)
        };
        for (i0, b0) in g0.iter().enumerate() {
            let (o0, c0) = lims(g0, i0);
            for (i1, b1) in g1.iter().enumerate() {
                let (o1, c1) = lims(g1, i1);
                let v01 = b0.clone() * b1.clone();
                for (i2, b2) in g2.iter().enumerate() {
                    let (o2, c2) = lims(g2, i2);
                    let (mut open, mut closed) = (0, 0);
                    for p in 0..n {
                        let (a, b, c) = (r0[p] as isize, r1[p] as isize, r2[p] as isize);
                        if a <= o0 && b <= o1 && c <= o2 {
                            open += 1;
                        }
                        if a <= c0 && b <= c1 && c <= c2 {
                            closed += 1;
                        }
                    }
                    consider(v01.clone() * b2.clone(), open, closed);
                }
            }
        }
    }
    best
}

/// Exact star discrepancy of every prefix of a growing 1-D sequence whose
/// points are `numerator / denominator` for one fixed denominator.
///
/// Each push costs one sorted insertion and one linear scan.
#[derive(Clone, Debug)]
pub struct PrefixStarSweep {
    den: i128,
    sorted: Vec<i128>,
}

impl PrefixStarSweep {
    pub fn new(denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::OutOfRange("denominator must be positive".into()));
        }
        Ok(PrefixStarSweep { den: denominator as i128, sorted: Vec::new() })
    }

    /// Adds `numerator / denominator` and returns `N * D*_N` as an exact rational.
    pub fn push(&mut self, numerator: u64) -> Result<BigRational> {
        let x = numerator as i128;
        if x > self.den {
            return Err(Error::OutOfRange(format!("{numerator}/{} exceeds 1", self.den)));
        }
        let at = self.sorted.partition_point(|y| *y <= x);
        self.sorted.insert(at, x);
        let r = combine(scan_sorted(&self.sorted, &self.den), Kind::Star);
        Ok(BigRational::new(BigInt::from(r), BigInt::from(self.den)))
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}
