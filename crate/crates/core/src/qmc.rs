//! Quasi-Monte Carlo integration, Koksma-Hlawka certificates and the
//! sequential random reordering of partitions into sequences.
//!
//! Every random stream uses ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. Shuffles are the descending Fisher-Yates walk with an
//! unbiased bounded draw (`next_u64` with rejection), so streams are
//! reproducible on any platform.

use num_rational::BigRational;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use twofloat::TwoFloat;

use crate::discrepancy::{star_discrepancy_dd, Breakpoints};
use crate::error::{Error, Result};
use crate::refine::{RefinedPartition, RefinementRule};
use crate::sequences::PointSet;

/// Slack added to the bound before comparing.
pub const KH_SLACK: f64 = 1e-12;

/// Integrands with known integral and Hardy-Krause variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestIntegrand {
    /// `f(x) = x`, `I = 1/2`, `V = 1`.
    Identity,
    /// `f(x) = x^2`, `I = 1/3`, `V = 1`.
    Square,
    /// `f(x) = clamp(2(x - 1/4), 0, 1)`, `I = 1/2`, `V = 1`.
    Ramp,
    /// `f(x, y) = x y`, `I = 1/4`, `V = 3` (variation anchored at 1:
    /// one for each margin plus one for the mixed term).
    Product2,
    /// `f = c` in any dimension, `V = 0`.
    Constant { dim: usize, c: f64 },
}

impl TestIntegrand {
    pub const SHIPPED: [TestIntegrand; 4] =
        [TestIntegrand::Identity, TestIntegrand::Square, TestIntegrand::Ramp, TestIntegrand::Product2];

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "id" => TestIntegrand::Identity,
            "sq" => TestIntegrand::Square,
            "ramp" => TestIntegrand::Ramp,
            "prod2" => TestIntegrand::Product2,
            _ => return Err(Error::OutOfRange(format!("unknown integrand {name}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestIntegrand::Identity => "id",
            TestIntegrand::Square => "sq",
            TestIntegrand::Ramp => "ramp",
            TestIntegrand::Product2 => "prod2",
            TestIntegrand::Constant { .. } => "const",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestIntegrand::Product2 => 2,
            TestIntegrand::Constant { dim, .. } => *dim,
            _ => 1,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            TestIntegrand::Identity => x[0],
            TestIntegrand::Square => x[0] * x[0],
            TestIntegrand::Ramp => (2.0 * (x[0] - 0.25)).clamp(0.0, 1.0),
            TestIntegrand::Product2 => x[0] * x[1],
            TestIntegrand::Constant { c, .. } => *c,
        }
    }

    pub fn exact_integral(&self) -> f64 {
        match self {
            TestIntegrand::Identity | TestIntegrand::Ramp => 0.5,
            TestIntegrand::Square => 1.0 / 3.0,
            TestIntegrand::Product2 => 0.25,
            TestIntegrand::Constant { c, .. } => *c,
        }
    }

    pub fn hk_variation(&self) -> f64 {
        match self {
            TestIntegrand::Product2 => 3.0,
            TestIntegrand::Constant { .. } => 0.0,
            _ => 1.0,
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = TwoFloat::from(0.0);
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    f64::from(sum / n as f64)
}

/// `(1/N) sum f(x_i)`.
pub fn qmc_integrate(ps: &PointSet, f: &TestIntegrand) -> Result<f64> {
    if ps.dim() != f.dim() {
        return Err(Error::DimMismatch { expected: f.dim(), got: ps.dim() });
    }
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(mean((0..ps.len()).map(|i| f.evaluate(&ps.point_f64(i)))))
}

/// Both sides of the Koksma-Hlawka inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct KhReport {
    pub estimate: f64,
    pub exact: f64,
    pub error: f64,
    pub dstar: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Checks `|I_N - I| <= V D*_N`; `max_n` is passed on to the discrepancy cap.
pub fn koksma_hlawka_check(ps: &PointSet, f: &TestIntegrand, max_n: Option<usize>) -> Result<KhReport> {
    let estimate = qmc_integrate(ps, f)?;
    let dstar = star_discrepancy_dd(ps, max_n)?.value;
    let exact = f.exact_integral();
    let error = (estimate - exact).abs();
    let bound = f.hk_variation() * dstar;
    Ok(KhReport { estimate, exact, error, dstar, bound, satisfied: error <= bound + KH_SLACK })
}

/// Uniform integer in `[0, bound)` by rejection, so no residue is favoured.
pub fn bounded(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    assert!(bound > 0);
    let rem = ((u64::MAX % bound) + 1) % bound;
    let limit = (1u128 << 64) - rem as u128;
    loop {
        let x = rng.next_u64();
        if (x as u128) < limit {
            return x % bound;
        }
    }
}

/// In-place Fisher-Yates, `i` from the top down.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, v: &mut [T]) {
    for i in (1..v.len()).rev() {
        let j = bounded(rng, i as u64 + 1) as usize;
        v.swap(i, j);
    }
}

/// Uniform double in `[0,1)` with 53 random bits.
pub fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Emits each block as a fresh random permutation, blocks in order.
#[derive(Clone, Debug)]
pub struct ReorderingStream<T> {
    blocks: std::vec::IntoIter<Vec<T>>,
    current: std::vec::IntoIter<T>,
    rng: ChaCha8Rng,
    emitted: usize,
}

impl<T> ReorderingStream<T> {
    pub fn new(blocks: Vec<Vec<T>>, seed: u64) -> Self {
        ReorderingStream {
            blocks: blocks.into_iter(),
            current: Vec::new().into_iter(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            emitted: 0,
        }
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }
}

impl<T> Iterator for ReorderingStream<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        loop {
            if let Some(x) = self.current.next() {
                self.emitted += 1;
                return Some(x);
            }
            let mut block = self.blocks.next()?;
            shuffle(&mut self.rng, &mut block);
            self.current = block.into_iter();
        }
    }
}

/// Concatenated random permutations of the breakpoints of each partition.
/// Exact when every block is exact.
pub fn sequential_random_reordering(partitions: &[Breakpoints], seed: u64) -> Result<PointSet> {
    if partitions.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let exact: Option<Vec<Vec<BigRational>>> = partitions.iter().map(|b| b.to_exact()).collect();
    match exact {
        Some(blocks) => PointSet::exact(1, ReorderingStream::new(blocks, seed).collect()),
        None => {
            let blocks = partitions.iter().map(|b| b.to_f64()).collect();
            PointSet::float(1, ReorderingStream::new(blocks, seed).collect())
        }
    }
}

/// The first `count` points of the reordered sequence built from
/// `rho^1 omega, rho^2 omega, ...`.
pub fn reordered_refinement(rule: &RefinementRule, count: usize, seed: u64) -> Result<PointSet> {
    let mut p = RefinedPartition::trivial(rule);
    let mut blocks = Vec::new();
    let mut total = 0;
    while total < count {
        p.refine_in_place()?;
        total += p.k();
        blocks.push(p.breakpoints());
    }
    Ok(sequential_random_reordering(&blocks, seed)?.prefix(count))
}

/// Plain Monte Carlo mean over `n` pseudorandom points.
pub fn mc_baseline(n: usize, seed: u64, f: &TestIntegrand) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = f.dim();
    let mut x = vec![0.0; d];
    Ok(mean((0..n).map(|_| {
        for c in x.iter_mut() {
            *c = unit_f64(&mut rng);
        }
        f.evaluate(&x)
    })))
}
