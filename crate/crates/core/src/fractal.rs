//! IFS attractors: Moran dimension, van der Corput points on self-similar
//! sets, Khodak-driven partitions for unequal ratios, and elementary
//! discrepancy.
//!
//! Words are stored in application order: `[j_1, ..., j_k]` stands for
//! `psi_{j_k} o ... o psi_{j_1}`, letters are 1-based. The elementary set
//! containing a point is found from the last letters of its word, so all
//! membership tests are symbolic.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::discrepancy::Discrepancy;
use crate::error::{Error, Result};
use crate::khodak::{detect_rational_relation, khodak_step_leaves};
use crate::probs::{Length, ProbabilityVector};
use crate::refine::DEFAULT_BUDGET;
use crate::sequences::{rat_to_f64, PointSet};

/// A point of `R^dim`, exact when every map and the start point are rational.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Point {
    pub fn dim(&self) -> usize {
        match self {
            Point::Exact(v) => v.len(),
            Point::Float(v) => v.len(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Point::Exact(v) => v.iter().map(rat_to_f64).collect(),
            Point::Float(v) => v.clone(),
        }
    }

    pub fn origin(dim: usize) -> Self {
        Point::Exact(vec![BigRational::zero(); dim])
    }

    pub fn from_ints(v: &[(i64, i64)]) -> Self {
        Point::Exact(v.iter().map(|&(a, b)| BigRational::new(a.into(), b.into())).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Affine {
    Exact { a: Vec<BigRational>, t: Vec<BigRational> },
    Float { a: Vec<f64>, t: Vec<f64> },
}

/// `x -> A x + t` with `A = c Q`, `Q` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    dim: usize,
    ratio: f64,
    map: Affine,
}

impl Similarity {
    /// Exact map; `linear` is row-major `dim x dim`.
    pub fn exact(linear: Vec<BigRational>, translation: Vec<BigRational>) -> Result<Self> {
        let dim = translation.len();
        if dim == 0 || linear.len() != dim * dim {
            return Err(Error::InvalidMap("linear part must be dim x dim".into()));
        }
        // A^T A must be c^2 I.
        let mut c2 = None;
        for i in 0..dim {
            for j in 0..dim {
                let s: BigRational = (0..dim).map(|k| &linear[k * dim + i] * &linear[k * dim + j]).sum();
                if i == j {
                    match &c2 {
                        None => c2 = Some(s),
                        Some(c) if *c != s => return Err(Error::InvalidMap("not a similarity".into())),
                        _ => {}
                    }
                } else if !s.is_zero() {
                    return Err(Error::InvalidMap("not a similarity".into()));
                }
            }
        }
        let ratio = rat_to_f64(&c2.expect("dim > 0")).sqrt();
        check_ratio(ratio)?;
        Ok(Similarity { dim, ratio, map: Affine::Exact { a: linear, t: translation } })
    }

    pub fn float(linear: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let dim = translation.len();
        if dim == 0 || linear.len() != dim * dim {
            return Err(Error::InvalidMap("linear part must be dim x dim".into()));
        }
        let c2: f64 = (0..dim).map(|k| linear[k * dim] * linear[k * dim]).sum();
        for i in 0..dim {
            for j in 0..dim {
                let s: f64 = (0..dim).map(|k| linear[k * dim + i] * linear[k * dim + j]).sum();
                let want = if i == j { c2 } else { 0.0 };
                if (s - want).abs() > 1e-12 {
                    return Err(Error::InvalidMap("not a similarity".into()));
                }
            }
        }
        let ratio = c2.sqrt();
        check_ratio(ratio)?;
        Ok(Similarity { dim, ratio, map: Affine::Float { a: linear, t: translation } })
    }

    /// `x -> c x + t` in one dimension, exact.
    pub fn scale_shift(c: BigRational, t: BigRational) -> Result<Self> {
        Self::exact(vec![c], vec![t])
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.map, Affine::Exact { .. })
    }

    pub fn apply(&self, x: &Point) -> Point {
        let d = self.dim;
        match (&self.map, x) {
            (Affine::Exact { a, t }, Point::Exact(v)) => Point::Exact(
                (0..d).map(|i| (0..d).map(|j| &a[i * d + j] * &v[j]).sum::<BigRational>() + &t[i]).collect(),
            ),
            _ => {
                let (a, t) = self.float_parts();
                let v = x.to_f64();
                Point::Float((0..d).map(|i| (0..d).map(|j| a[i * d + j] * v[j]).sum::<f64>() + t[i]).collect())
            }
        }
    }

    fn float_parts(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.map {
            Affine::Exact { a, t } => (a.iter().map(rat_to_f64).collect(), t.iter().map(rat_to_f64).collect()),
            Affine::Float { a, t } => (a.clone(), t.clone()),
        }
    }

    fn exact_ratio(&self) -> Option<BigRational> {
        match &self.map {
            Affine::Exact { a, .. } => {
                let c2: BigRational = (0..self.dim).map(|k| &a[k * self.dim] * &a[k * self.dim]).sum();
                exact_sqrt(&c2)
            }
            Affine::Float { .. } => None,
        }
    }
}

fn exact_sqrt(x: &BigRational) -> Option<BigRational> {
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| BigRational::new(n, d))
}

fn check_ratio(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidMap(format!("ratio {c} not in (0,1)")));
    }
    Ok(())
}

/// A finite family of contracting similarities.
#[derive(Clone, Debug, PartialEq)]
pub struct IFSSystem {
    dim: usize,
    maps: Vec<Similarity>,
    name: Option<String>,
}

impl IFSSystem {
    pub fn new(maps: Vec<Similarity>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidMap("need at least 2 maps".into()));
        }
        let dim = maps[0].dim;
        if let Some(s) = maps.iter().find(|s| s.dim != dim) {
            return Err(Error::DimMismatch { expected: dim, got: s.dim });
        }
        Ok(IFSSystem { dim, maps, name: None })
    }

    fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|s| s.ratio).collect()
    }

    pub fn is_equal_ratio(&self) -> bool {
        let exact: Option<Vec<BigRational>> = self.maps.iter().map(|s| s.exact_ratio()).collect();
        match exact {
            Some(v) => v.iter().all(|c| *c == v[0]),
            None => self.maps.iter().all(|s| (s.ratio - self.maps[0].ratio).abs() <= 1e-15),
        }
    }

    /// A preset system and its documented start point (the fixed point of `psi_1`).
    ///
    /// Names: `cantor`, `sierpinski-right`, `sierpinski-equilateral`, `koch`,
    /// `unit-interval:m`.
    pub fn preset(name: &str) -> Result<(IFSSystem, Point)> {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        let half = r(1, 2);
        let diag2 = |c: BigRational| vec![c.clone(), BigRational::zero(), BigRational::zero(), c];
        let s3 = 3f64.sqrt();
        let sys = match name {
            "cantor" => IFSSystem::new(vec![
                Similarity::scale_shift(r(1, 3), r(0, 1))?,
                Similarity::scale_shift(r(1, 3), r(2, 3))?,
            ])?,
            "sierpinski-right" => IFSSystem::new(vec![
                Similarity::exact(diag2(half.clone()), vec![r(0, 1), r(0, 1)])?,
                Similarity::exact(diag2(half.clone()), vec![r(0, 1), r(1, 2)])?,
                Similarity::exact(diag2(half.clone()), vec![r(1, 2), r(1, 2)])?,
            ])?,
            "sierpinski-equilateral" => IFSSystem::new(vec![
                Similarity::float(vec![0.5, 0.0, 0.0, 0.5], vec![0.0, 0.0])?,
                Similarity::float(vec![0.5, 0.0, 0.0, 0.5], vec![0.25, s3 / 4.0])?,
                Similarity::float(vec![0.5, 0.0, 0.0, 0.5], vec![0.5, 0.0])?,
            ])?,
            "koch" => {
                let (a, b) = (1.0 / 6.0, s3 / 6.0);
                IFSSystem::new(vec![
                    Similarity::float(vec![1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0], vec![0.0, 0.0])?,
                    Similarity::float(vec![a, -b, b, a], vec![1.0 / 3.0, 0.0])?,
                    Similarity::float(vec![-a, b, b, a], vec![2.0 / 3.0, 0.0])?,
                    Similarity::float(vec![1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0], vec![2.0 / 3.0, 0.0])?,
                ])?
            }
            _ => match name.strip_prefix("unit-interval:").map(str::parse::<usize>) {
                Some(Ok(m)) => unit_interval(m)?,
                _ => return Err(Error::InvalidMap(format!("unknown preset {name}"))),
            },
        };
        let x0 = Point::origin(sys.dim);
        Ok((sys.named(name), x0))
    }
}

/// `phi_k(x) = (k-1)/m + x/m`, `k = 1..m`; the attractor is `[0,1]`.
pub fn unit_interval(m: usize) -> Result<IFSSystem> {
    if m < 2 {
        return Err(Error::InvalidMap("need m >= 2".into()));
    }
    let maps = (0..m)
        .map(|k| Similarity::scale_shift(BigRational::new(1.into(), m.into()), BigRational::new(k.into(), m.into())))
        .collect::<Result<Vec<_>>>()?;
    IFSSystem::new(maps)
}

/// Unique `s` with `sum c_i^s = 1`.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() || ratios.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
        return Err(Error::OutOfRange("ratios must lie in (0,1)".into()));
    }
    let f = |s: f64| ratios.iter().map(|c| c.powf(s)).sum::<f64>() - 1.0;
    if ratios.len() == 1 {
        return Err(Error::OutOfRange("a single map has an empty dimension equation".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d: f64 = ratios.iter().map(|c| c.powf(s) * c.ln()).sum();
        let step = f(s) / d;
        if !step.is_finite() {
            break;
        }
        s -= step;
    }
    Ok(s)
}

/// A finite word over `{1..m}` in application order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AddressWord {
    letters: Vec<u16>,
}

impl AddressWord {
    pub fn new(letters: Vec<u16>, m: usize) -> Result<Self> {
        if let Some(l) = letters.iter().find(|&&l| l == 0 || l as usize > m) {
            return Err(Error::InvalidAddress(format!("letter {l} not in 1..={m}")));
        }
        Ok(AddressWord { letters })
    }

    pub fn empty() -> Self {
        AddressWord { letters: Vec::new() }
    }

    pub fn letters(&self) -> &[u16] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The word of generated point `i` (0-based): base-m digits of `i`,
    /// leading letter-1 padding dropped.
    pub fn of_index(mut i: u64, m: usize) -> Self {
        let mut letters = Vec::new();
        while i > 0 {
            letters.push((i % m as u64) as u16 + 1);
            i /= m as u64;
        }
        letters.reverse();
        AddressWord { letters }
    }

    /// Outermost map first, the order in which elementary sets nest.
    pub fn nesting(&self) -> Vec<u16> {
        self.letters.iter().rev().copied().collect()
    }

    /// Base-m code of the last `depth` letters (missing letters are 1).
    fn code(&self, m: usize, depth: usize) -> u64 {
        let mut c = 0u64;
        let mut w = 1u64;
        for &l in self.letters.iter().rev().take(depth) {
            c += (l as u64 - 1) * w;
            w *= m as u64;
        }
        c
    }
}

impl fmt::Display for AddressWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.iter().any(|&l| l > 9) {
            let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join("."))
        } else {
            for l in &self.letters {
                write!(f, "{l}")?;
            }
            Ok(())
        }
    }
}

/// `psi_{w_k} o ... o psi_{w_1}(x)`.
pub fn apply_address(sys: &IFSSystem, w: &AddressWord, x: &Point) -> Result<Point> {
    if x.dim() != sys.dim {
        return Err(Error::DimMismatch { expected: sys.dim, got: x.dim() });
    }
    let mut p = x.clone();
    for &l in &w.letters {
        let map = sys.maps.get(l as usize - 1).ok_or_else(|| Error::InvalidAddress(format!("letter {l}")))?;
        p = map.apply(&p);
    }
    Ok(p)
}

/// Generated points with their words.
#[derive(Clone, Debug, PartialEq)]
pub struct FractalPoints {
    pub points: PointSet,
    pub addresses: Vec<AddressWord>,
    pub m: usize,
}

fn is_fixed(sys: &IFSSystem, x0: &Point) -> bool {
    let y = sys.maps[0].apply(x0);
    match (&y, x0) {
        (Point::Exact(a), Point::Exact(b)) => a == b,
        _ => y.to_f64().iter().zip(x0.to_f64()).all(|(a, b)| (a - b).abs() <= 1e-12),
    }
}

/// The first `n` points of the van der Corput sequence generated by `sys`
/// from `x0`: level by level, every map applied to every earlier point.
pub fn vdc_fractal_points(sys: &IFSSystem, x0: &Point, n: usize) -> Result<FractalPoints> {
    if !sys.is_equal_ratio() {
        return Err(Error::UnequalRatios);
    }
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    if x0.dim() != sys.dim {
        return Err(Error::DimMismatch { expected: sys.dim, got: x0.dim() });
    }
    if !is_fixed(sys, x0) {
        return Err(Error::StartNotFixed);
    }
    let mut level = vec![x0.clone()];
    while level.len() < n {
        let mut next = Vec::with_capacity(level.len() * sys.m());
        'outer: for p in &level {
            for map in &sys.maps {
                next.push(map.apply(p));
                if next.len() == n {
                    break 'outer;
                }
            }
        }
        level = next;
    }
    level.truncate(n);
    let points = if level.iter().all(|p| matches!(p, Point::Exact(_))) {
        let flat = level
            .into_iter()
            .flat_map(|p| match p {
                Point::Exact(v) => v,
                Point::Float(_) => unreachable!(),
            })
            .collect();
        PointSet::exact(sys.dim, flat)?
    } else {
        PointSet::float(sys.dim, level.iter().flat_map(|p| p.to_f64()).collect())?
    };
    let addresses = (0..n as u64).map(|i| AddressWord::of_index(i, sys.m())).collect();
    Ok(FractalPoints { points, addresses, m: sys.m() })
}

/// A partition of the attractor into elementary sets.
#[derive(Clone, Debug, PartialEq)]
pub struct FractalPartition {
    pub m: usize,
    pub step: usize,
    /// Words in application order.
    pub sets: Vec<AddressWord>,
    /// `P(E)` for each set.
    pub probabilities: Vec<f64>,
    /// Letter probabilities `c_i^s`.
    pub letter_probs: ProbabilityVector,
    lengths: Vec<Length>,
}

impl FractalPartition {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `P(E)` in the exact representation of the letter probabilities.
    pub fn lengths(&self) -> &[Length] {
        &self.lengths
    }
}

/// The `m^k` level-k elementary sets in algorithm order, each with `P = m^{-k}`.
pub fn vdc_fractal_partition(sys: &IFSSystem, k: usize) -> Result<FractalPartition> {
    if !sys.is_equal_ratio() {
        return Err(Error::UnequalRatios);
    }
    let m = sys.m();
    let count = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count > DEFAULT_BUDGET as u128 {
        return Err(Error::BudgetExceeded { needed: count, cap: DEFAULT_BUDGET as u128 });
    }
    let pv = ProbabilityVector::from_rationals(vec![BigRational::new(1.into(), m.into()); m])?;
    let mut sets = Vec::with_capacity(count as usize);
    for i in 0..count as u64 {
        let mut letters = vec![1u16; k];
        let mut x = i;
        for slot in letters.iter_mut().rev() {
            *slot = (x % m as u64) as u16 + 1;
            x /= m as u64;
        }
        sets.push(AddressWord { letters });
    }
    // Every level-k set has k letters, and all letters weigh 1/m.
    let mut exps = vec![0u32; m];
    exps[0] = k as u32;
    let len = pv.length_of(&exps);
    let p = pv.len_f64(&len);
    Ok(FractalPartition {
        m,
        step: k,
        probabilities: vec![p; sets.len()],
        lengths: vec![len; sets.len()],
        sets,
        letter_probs: pv,
    })
}

/// Letter probabilities `c_i^s`, single-base when the ratios are rationally related.
pub fn fractal_probabilities(sys: &IFSSystem) -> Result<ProbabilityVector> {
    let ratios = sys.ratios();
    let s = moran_dimension(&ratios)?;
    let raw: Vec<f64> = ratios.iter().map(|c| c.powf(s)).collect();
    let total: f64 = raw.iter().sum();
    let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let fv = ProbabilityVector::from_f64(p)?;
    match detect_rational_relation(&fv, 40) {
        Some(rel) => ProbabilityVector::solve_single_base(rel.n),
        None => Ok(fv),
    }
}

/// `pi_n`: repeatedly apply all maps to the sets of highest probability.
/// The sets are the leaves of the Khodak tree for `p_i = c_i^s`, in tree order.
pub fn khodak_fractal_partition(sys: &IFSSystem, n: usize) -> Result<FractalPartition> {
    let pv = fractal_probabilities(sys)?;
    let leaves = khodak_step_leaves(&pv, n, DEFAULT_BUDGET)?;
    let sets = leaves.iter().map(|l| AddressWord { letters: l.path.iter().rev().map(|&j| j + 1).collect() }).collect();
    let lengths: Vec<Length> = leaves.into_iter().map(|l| l.length).collect();
    let probabilities = lengths.iter().map(|l| pv.len_f64(l)).collect();
    Ok(FractalPartition { m: sys.m(), step: n, sets, probabilities, letter_probs: pv, lengths })
}

fn default_depth(n: usize, m: usize) -> usize {
    ((n as f64).ln() / (m as f64).ln()).ceil() as usize + 1
}

fn pow_u128(m: usize, l: usize) -> u128 {
    (m as u128).checked_pow(l as u32).unwrap_or(u128::MAX)
}

/// Elementary discrepancy of the first `n` generated points over all sets of
/// level `<= max_depth` (default `ceil(log n / log m) + 1`).
pub fn elementary_discrepancy_points(fp: &FractalPoints, n: usize, max_depth: Option<usize>) -> Result<Discrepancy> {
    if n == 0 || n > fp.addresses.len() {
        return Err(Error::OutOfRange(format!("prefix {n} not in 1..={}", fp.addresses.len())));
    }
    let m = fp.m;
    let depth = max_depth.unwrap_or_else(|| default_depth(n, m));
    if pow_u128(m, depth) <= n as u128 {
        return Err(Error::DepthTooShallow { depth, n });
    }
    let mut sweep = ElementarySweep::new(m, depth)?;
    for w in &fp.addresses[..n] {
        sweep.push(w)?;
    }
    sweep.value(depth)
}

/// Incremental elementary discrepancy for equal-ratio sequences: per-level
/// counts plus a histogram of counts, so adding a point costs `O(depth)`.
#[derive(Clone, Debug)]
pub struct ElementarySweep {
    m: usize,
    depth: usize,
    n: u64,
    counts: Vec<Vec<u64>>,
    freq: Vec<Vec<u64>>,
    max_count: Vec<u64>,
    min_count: Vec<u64>,
}

impl ElementarySweep {
    pub fn new(m: usize, depth: usize) -> Result<Self> {
        let size = pow_u128(m, depth);
        if size > 1u128 << 26 {
            return Err(Error::BudgetExceeded { needed: size, cap: 1 << 26 });
        }
        let counts = (0..=depth).map(|l| vec![0; m.pow(l as u32)]).collect();
        let freq = (0..=depth).map(|l| vec![m.pow(l as u32) as u64]).collect();
        Ok(ElementarySweep {
            m,
            depth,
            n: 0,
            counts,
            freq,
            max_count: vec![0; depth + 1],
            min_count: vec![0; depth + 1],
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn push(&mut self, w: &AddressWord) -> Result<()> {
        if w.letters.iter().any(|&l| l == 0 || l as usize > self.m) {
            return Err(Error::InvalidAddress(w.to_string()));
        }
        let code = w.code(self.m, self.depth);
        self.n += 1;
        for l in 0..=self.depth {
            let key = (code % self.m.pow(l as u32) as u64) as usize;
            let c = self.counts[l][key];
            self.counts[l][key] = c + 1;
            let f = &mut self.freq[l];
            f[c as usize] -= 1;
            if f.len() <= c as usize + 1 {
                f.push(0);
            }
            f[c as usize + 1] += 1;
            self.max_count[l] = self.max_count[l].max(c + 1);
            while f[self.min_count[l] as usize] == 0 {
                self.min_count[l] += 1;
            }
        }
        Ok(())
    }

    /// `D_N` over levels `0..=depth`, exact.
    pub fn value(&self, depth: usize) -> Result<Discrepancy> {
        if depth > self.depth {
            return Err(Error::OutOfRange(format!("depth {depth} > tracked {}", self.depth)));
        }
        if self.n == 0 {
            return Err(Error::EmptyPointSet);
        }
        // N * dev at level l is max(max m^l - N, N - min m^l) / m^l.
        let n = self.n as i128;
        let mut best = BigRational::zero();
        for l in 0..=depth {
            let ml = self.m.pow(l as u32) as i128;
            let hi = self.max_count[l] as i128 * ml - n;
            let lo = n - self.min_count[l] as i128 * ml;
            let v = BigRational::new(hi.max(lo).into(), (ml * n).into());
            if v > best {
                best = v;
            }
        }
        Ok(Discrepancy { value: rat_to_f64(&best), exact: Some(best) })
    }
}

/// `sup_E |N_E / k - P(E)|` where `N_E` counts partition sets whose word
/// extends the word of `E`, over sets of level `<= max_depth`.
pub fn elementary_discrepancy_partition(fp: &FractalPartition, max_depth: Option<usize>) -> Result<Discrepancy> {
    if fp.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let k = fp.len();
    let pv = &fp.letter_probs;
    let pmax = pv.p_max();
    let depth = match max_depth {
        Some(d) => d,
        None => {
            let mut d = 1;
            while pmax.powi(d as i32) >= 1.0 / k as f64 {
                d += 1;
            }
            d
        }
    };
    if pmax.powi(depth as i32) > 1.0 / k as f64 * (1.0 + 1e-12) {
        return Err(Error::DepthTooShallow { depth, n: k });
    }
    let mut counts: HashMap<Vec<u16>, u64> = HashMap::new();
    for w in &fp.sets {
        let nest = w.nesting();
        for l in 0..=nest.len().min(depth) {
            *counts.entry(nest[..l].to_vec()).or_insert(0) += 1;
        }
    }
    let kf = k as f64;
    let mut best: f64 = 0.0;
    for (word, &c) in &counts {
        let len = word.iter().fold(pv.unit(), |acc, &j| pv.child(&acc, j as usize - 1));
        let p = pv.len_f64(&len);
        best = best.max((c as f64 / kf - p).abs());
        if word.len() < depth {
            for j in 1..=fp.m as u16 {
                let mut child = word.clone();
                child.push(j);
                if !counts.contains_key(&child) {
                    best = best.max(pv.len_f64(&pv.child(&len, j as usize - 1)));
                }
            }
        }
    }
    Ok(Discrepancy { value: best, exact: None })
}

/// True if every coordinate lies in `[0,1]` (needed to wrap points in a [`PointSet`]).
pub fn in_unit_cube(p: &Point) -> bool {
    match p {
        Point::Exact(v) => v.iter().all(|x| !x.is_negative() && *x <= BigRational::one()),
        Point::Float(v) => v.iter().all(|x| (0.0..=1.0).contains(x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::{ls_rule, rho_refine_n};
    use crate::sequences::{van_der_corput, Base, Coords};

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn moran_examples() {
        let s = moran_dimension(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        let s = moran_dimension(&[0.5; 3]).unwrap();
        assert!((s - 3f64.ln() / 2f64.ln()).abs() < 1e-12);
        let s = moran_dimension(&[1.0 / 3.0; 4]).unwrap();
        assert!((s - 4f64.ln() / 3f64.ln()).abs() < 1e-12);
        let s = moran_dimension(&[0.5, 0.25]).unwrap();
        assert!((0.5f64.powf(s) - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn apply_address_examples() {
        let (cantor, x0) = IFSSystem::preset("cantor").unwrap();
        let x = apply_address(&cantor, &AddressWord::empty(), &x0).unwrap();
        assert_eq!(x, x0);
        let w2 = AddressWord::new(vec![2], 2).unwrap();
        assert_eq!(apply_address(&cantor, &w2, &x0).unwrap(), Point::from_ints(&[(2, 3)]));
        let w12 = AddressWord::new(vec![1, 2], 2).unwrap();
        assert_eq!(apply_address(&cantor, &w12, &x0).unwrap(), Point::from_ints(&[(2, 3)]));
        let w21 = AddressWord::new(vec![2, 1], 2).unwrap();
        assert_eq!(apply_address(&cantor, &w21, &x0).unwrap(), Point::from_ints(&[(2, 9)]));
        assert!(AddressWord::new(vec![3], 2).is_err());
    }

    #[test]
    fn sierpinski_golden() {
        let (sys, x0) = IFSSystem::preset("sierpinski-right").unwrap();
        let fp = vdc_fractal_points(&sys, &x0, 27).unwrap();
        let want = [
            (0, 1, 0, 1),
            (0, 1, 1, 2),
            (1, 2, 1, 2),
            (0, 1, 1, 4),
            (0, 1, 3, 4),
            (1, 2, 3, 4),
            (1, 4, 1, 4),
            (1, 4, 3, 4),
            (3, 4, 3, 4),
        ];
        for (i, &(a, b, c, d)) in want.iter().enumerate() {
            assert_eq!(fp.points.point_exact(i).unwrap(), &[r(a, b), r(c, d)], "x{}", i + 1);
        }
        assert_eq!(fp.points.point_exact(26).unwrap(), &[r(7, 8), r(7, 8)]);
        assert_eq!(fp.points.point_exact(9).unwrap(), &[r(0, 1), r(1, 8)]);
        assert_eq!(fp.addresses[5].to_string(), "23");
        let one = vdc_fractal_points(&sys, &x0, 1).unwrap();
        assert_eq!(one.points.point_exact(0).unwrap(), &[r(0, 1), r(0, 1)]);
    }

    #[test]
    fn unit_interval_is_vdc() {
        let sys = unit_interval(2).unwrap();
        let fp = vdc_fractal_points(&sys, &Point::origin(1), 8).unwrap();
        assert_eq!(fp.points, van_der_corput(8, Base::new(2).unwrap()));
        let sys3 = unit_interval(3).unwrap();
        let fp = vdc_fractal_points(&sys3, &Point::origin(1), 27).unwrap();
        assert_eq!(fp.points, van_der_corput(27, Base::new(3).unwrap()));
    }

    #[test]
    fn start_must_be_fixed() {
        let (sys, _) = IFSSystem::preset("sierpinski-right").unwrap();
        let x = Point::from_ints(&[(1, 2), (1, 2)]);
        assert_eq!(vdc_fractal_points(&sys, &x, 3), Err(Error::StartNotFixed));
    }

    #[test]
    fn unequal_rejected() {
        let sys = IFSSystem::new(vec![
            Similarity::scale_shift(r(1, 2), r(0, 1)).unwrap(),
            Similarity::scale_shift(r(1, 4), r(3, 4)).unwrap(),
        ])
        .unwrap();
        assert_eq!(vdc_fractal_points(&sys, &Point::origin(1), 3), Err(Error::UnequalRatios));
        assert_eq!(vdc_fractal_partition(&sys, 1), Err(Error::UnequalRatios));
    }

    #[test]
    fn each_level_set_holds_one_point() {
        let (sys, x0) = IFSSystem::preset("sierpinski-right").unwrap();
        let fp = vdc_fractal_points(&sys, &x0, 81).unwrap();
        for k in 0..=4usize {
            let n = 3usize.pow(k as u32);
            let mut seen = std::collections::HashSet::new();
            for w in &fp.addresses[..n] {
                assert!(seen.insert(w.code(3, k)));
            }
            // The word really does place the point in that set.
            for (i, w) in fp.addresses[..n].iter().enumerate() {
                let x = apply_address(&sys, w, &x0).unwrap();
                assert_eq!(x, Point::Exact(fp.points.point_exact(i).unwrap().to_vec()));
            }
        }
    }

    #[test]
    fn partitions_equal_ratio() {
        let (cantor, _) = IFSSystem::preset("cantor").unwrap();
        let p = vdc_fractal_partition(&cantor, 2).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.probabilities.iter().all(|&x| x == 0.25));
        let (sier, _) = IFSSystem::preset("sierpinski-right").unwrap();
        let p = vdc_fractal_partition(&sier, 1).unwrap();
        assert_eq!((p.len(), p.probabilities[0]), (3, 1.0 / 3.0));
        let p = vdc_fractal_partition(&sier, 0).unwrap();
        assert_eq!((p.len(), p.probabilities[0]), (1, 1.0));
        let p3 = vdc_fractal_partition(&sier, 3).unwrap();
        assert_eq!(elementary_discrepancy_partition(&p3, Some(3)).unwrap().value, 0.0);
        assert!(elementary_discrepancy_partition(&p3, Some(2)).is_err());
    }

    #[test]
    fn khodak_partition_golden() {
        let sys = IFSSystem::new(vec![
            Similarity::scale_shift(r(1, 2), r(0, 1)).unwrap(),
            Similarity::scale_shift(r(1, 4), r(3, 4)).unwrap(),
        ])
        .unwrap();
        let p1 = khodak_fractal_partition(&sys, 1).unwrap();
        let a = (5f64.sqrt() - 1.0) / 2.0;
        assert!((p1.probabilities[0] - a).abs() < 1e-15 && (p1.probabilities[1] - a * a).abs() < 1e-15);
        // Against the LS(1,1) refinement.
        let ls = ls_rule(1, 1).unwrap();
        for n in 0..=8 {
            let fp = khodak_fractal_partition(&sys, n).unwrap();
            let mut got: Vec<Length> = fp.lengths().to_vec();
            let mut want = rho_refine_n(&ls, n).unwrap().lengths();
            let key = |l: &Length| match l {
                Length::Weight(w) => *w,
                _ => panic!("expected weights"),
            };
            got.sort_by_key(key);
            want.sort_by_key(key);
            assert_eq!(got, want);
            let s: f64 = fp.probabilities.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let p0 = khodak_fractal_partition(&sys, 0).unwrap();
        let d = elementary_discrepancy_partition(&p0, None).unwrap().value;
        assert!((d - (1.0 - a * a)).abs() < 1e-12);
    }

    #[test]
    fn equal_ratio_khodak_matches_levels() {
        let (sier, _) = IFSSystem::preset("sierpinski-right").unwrap();
        for n in 1..=4 {
            let kp = khodak_fractal_partition(&sier, n).unwrap();
            let vp = vdc_fractal_partition(&sier, n).unwrap();
            let mut a: Vec<_> = kp.sets.clone();
            let mut b: Vec<_> = vp.sets.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn elementary_points_examples() {
        let (sys, x0) = IFSSystem::preset("sierpinski-right").unwrap();
        let fp = vdc_fractal_points(&sys, &x0, 729).unwrap();
        let d1 = elementary_discrepancy_points(&fp, 1, Some(1)).unwrap();
        assert_eq!(d1.exact, Some(r(2, 3)));
        for k in 1..=6u32 {
            let n = 3usize.pow(k);
            let d = elementary_discrepancy_points(&fp, n, None).unwrap();
            assert!(d.value * n as f64 <= 1.0);
        }
        assert!(matches!(elementary_discrepancy_points(&fp, 9, Some(2)), Err(Error::DepthTooShallow { .. })));
    }

    #[test]
    fn presets_are_similarities() {
        for name in ["cantor", "sierpinski-right", "sierpinski-equilateral", "koch", "unit-interval:5"] {
            let (sys, x0) = IFSSystem::preset(name).unwrap();
            assert!(sys.is_equal_ratio(), "{name}");
            let fp = vdc_fractal_points(&sys, &x0, 50).unwrap();
            assert_eq!(fp.points.len(), 50);
            let exact = matches!(fp.points.coords(), Coords::Exact(_));
            assert_eq!(exact, !matches!(name, "sierpinski-equilateral" | "koch"));
        }
        assert!(IFSSystem::preset("nope").is_err());
        assert!(Similarity::float(vec![0.5, 0.1, 0.0, 0.5], vec![0.0, 0.0]).is_err());
    }
}
