//! Kakutani α-refinement and general ρ-refinement of `[0,1]`.
//!
//! A partition is stored as a list of length-class ids. A class is an
//! exponent vector `(k_1..k_m)` (plus a starting-interval index), its length
//! is `base * prod p_i^{k_i}`, and every interval of the same class has the
//! same length, so finding and splitting the maximal intervals only touches
//! the class table. Breakpoints are produced on demand.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use twofloat::TwoFloat;

use crate::discrepancy::{partition_discrepancy, Breakpoints, Discrepancy};
use crate::error::{Error, Result};
use crate::probs::{dd_to_f64, rat_to_dd, solve_alpha, Length, ProbKind, ProbabilityVector};
use crate::sequences::rat_to_f64;

/// Default cap on the number of intervals.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// The fixed partition `rho = {p_1, ..., p_m}` used to split intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementRule {
    probs: ProbabilityVector,
}

impl RefinementRule {
    pub fn new(probs: ProbabilityVector) -> Self {
        RefinementRule { probs }
    }

    pub fn from_rationals(p: Vec<BigRational>) -> Result<Self> {
        Ok(Self::new(ProbabilityVector::from_rationals(p)?))
    }

    pub fn from_f64(p: Vec<f64>) -> Result<Self> {
        Ok(Self::new(ProbabilityVector::from_f64(p)?))
    }

    pub fn m(&self) -> usize {
        self.probs.m()
    }

    pub fn probabilities(&self) -> &ProbabilityVector {
        &self.probs
    }

    /// `alpha` for single-base rules.
    pub fn alpha(&self) -> Option<f64> {
        match self.probs.kind() {
            ProbKind::SingleBase { alpha, .. } => Some(dd_to_f64(*alpha)),
            _ => None,
        }
    }
}

/// Kakutani parameter, exact or float.
#[derive(Clone, Debug, PartialEq)]
pub enum Alpha {
    Exact(BigRational),
    Float(f64),
}

impl From<f64> for Alpha {
    fn from(a: f64) -> Self {
        Alpha::Float(a)
    }
}

impl From<BigRational> for Alpha {
    fn from(a: BigRational) -> Self {
        Alpha::Exact(a)
    }
}

/// `rho = {[0, alpha], [alpha, 1]}`.
pub fn kakutani_rule(alpha: impl Into<Alpha>) -> Result<RefinementRule> {
    match alpha.into() {
        Alpha::Exact(a) => {
            if a <= BigRational::zero() || a >= BigRational::one() {
                return Err(Error::OutOfRange(format!("alpha {a} not in (0,1)")));
            }
            let b = BigRational::one() - &a;
            RefinementRule::from_rationals(vec![a, b])
        }
        Alpha::Float(a) => {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::OutOfRange(format!("alpha {a} not in (0,1)")));
            }
            RefinementRule::from_f64(vec![a, 1.0 - a])
        }
    }
}

/// LS rule: `L` parts of length `alpha`, then `S` of length `alpha^2`,
/// with `L alpha + S alpha^2 = 1`.
pub fn ls_rule(l: u32, s: u32) -> Result<RefinementRule> {
    if l == 0 || s == 0 {
        return Err(Error::InvalidRule("L and S must be positive".into()));
    }
    let (lf, sf) = (TwoFloat::from(l as f64), TwoFloat::from(s as f64));
    let disc = (lf * lf + sf * 4.0).sqrt();
    let mut alpha = (disc - lf) / (sf * 2.0);
    // One Newton step removes the cancellation error of the closed form.
    let f = lf * alpha + sf * alpha * alpha - 1.0;
    alpha -= f / (lf + sf * alpha * 2.0);
    let mut exps = vec![1; l as usize];
    exps.extend(std::iter::repeat_n(2, s as usize));
    Ok(RefinementRule::new(ProbabilityVector::single_base(alpha, exps)?))
}

/// Pisot rule for `z^k - a_1 z^{k-1} - ... - a_k`: `a_j` parts of length `alpha^j`.
pub fn pisot_rule(a: &[u32]) -> Result<RefinementRule> {
    if a.is_empty() || a.contains(&0) {
        return Err(Error::InvalidRule("coefficients must be positive".into()));
    }
    if a.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidRule("coefficients must be nonincreasing".into()));
    }
    let exps: Vec<u32> =
        a.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(j as u32 + 1, c as usize)).collect();
    if exps.len() < 2 {
        return Err(Error::DegenerateRule("a = [1] gives alpha = 1".into()));
    }
    let alpha = solve_alpha(&exps)?;
    Ok(RefinementRule::new(ProbabilityVector::single_base(alpha, exps)?))
}

#[derive(Clone, Debug)]
struct Classes {
    /// `[start, k_1, ..., k_m]`.
    keys: Vec<Vec<u32>>,
    lens: Vec<Length>,
    index: HashMap<Vec<u32>, u32>,
    children: Vec<Option<Vec<u32>>>,
    counts: Vec<u64>,
}

impl Classes {
    fn intern(&mut self, key: Vec<u32>, len: Length) -> u32 {
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.index.insert(key.clone(), id);
        self.keys.push(key);
        self.lens.push(len);
        self.children.push(None);
        self.counts.push(0);
        id
    }
}

/// An ordered partition of `[0,1]` reached by repeated ρ-refinement.
#[derive(Clone, Debug)]
pub struct RefinedPartition {
    rule: RefinementRule,
    step: usize,
    /// Lengths of the starting intervals (exact rules only).
    starts: Vec<BigRational>,
    classes: Classes,
    intervals: Vec<u32>,
    budget: u64,
}

impl RefinedPartition {
    /// The trivial partition `omega = {[0,1]}`.
    pub fn trivial(rule: &RefinementRule) -> Self {
        Self::with_starts(rule, vec![BigRational::one()], DEFAULT_BUDGET)
    }

    /// An arbitrary starting partition given by its interval lengths.
    /// Only exact rules are supported here.
    pub fn from_partition(rule: &RefinementRule, lengths: Vec<BigRational>) -> Result<Self> {
        if !rule.probabilities().is_exact() {
            return Err(Error::InvalidRule("custom starting partitions need an exact rule".into()));
        }
        if lengths.is_empty() {
            return Err(Error::EmptyPartition);
        }
        if let Some(i) = lengths.iter().position(|l| *l <= BigRational::zero()) {
            return Err(Error::Unsorted(i));
        }
        let sum: BigRational = lengths.iter().sum();
        if sum != BigRational::one() {
            return Err(Error::SumNotOne { deficit: BigRational::one() - sum });
        }
        Ok(Self::with_starts(rule, lengths, DEFAULT_BUDGET))
    }

    fn with_starts(rule: &RefinementRule, starts: Vec<BigRational>, budget: u64) -> Self {
        let m = rule.m();
        let mut classes = Classes {
            keys: Vec::new(),
            lens: Vec::new(),
            index: HashMap::new(),
            children: Vec::new(),
            counts: Vec::new(),
        };
        let mut intervals = Vec::with_capacity(starts.len());
        for (i, s) in starts.iter().enumerate() {
            let mut key = vec![0; m + 1];
            key[0] = i as u32;
            let len = match rule.probabilities().kind() {
                ProbKind::Exact(_) => Length::Exact(s.clone()),
                _ => rule.probabilities().unit(),
            };
            let id = classes.intern(key, len);
            classes.counts[id as usize] += 1;
            intervals.push(id);
        }
        RefinedPartition { rule: rule.clone(), step: 0, starts, classes, intervals, budget }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn rule(&self) -> &RefinementRule {
        &self.rule
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Lengths of the starting partition (`[1]` for `omega`).
    pub fn starting_lengths(&self) -> &[BigRational] {
        &self.starts
    }

    /// Number of intervals `k(n)`.
    pub fn k(&self) -> usize {
        self.intervals.len()
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.classes.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i)
    }

    fn extreme_class(&self, longest: bool) -> usize {
        let p = self.rule.probabilities();
        let mut best: Option<usize> = None;
        for c in self.active() {
            best = Some(match best {
                None => c,
                Some(b) => {
                    let ord = p.cmp_len(&self.classes.lens[c], &self.classes.lens[b]);
                    if (longest && ord.is_gt()) || (!longest && ord.is_lt()) {
                        c
                    } else {
                        b
                    }
                }
            });
        }
        best.expect("partition is never empty")
    }

    /// `A_n`, the maximal interval length.
    pub fn max_length(&self) -> f64 {
        self.class_len_f64(self.extreme_class(true))
    }

    /// `a_n`, the minimal interval length.
    pub fn min_length(&self) -> f64 {
        self.class_len_f64(self.extreme_class(false))
    }

    pub fn max_length_exact(&self) -> Option<BigRational> {
        match &self.classes.lens[self.extreme_class(true)] {
            Length::Exact(x) => Some(x.clone()),
            _ => None,
        }
    }

    fn class_len_f64(&self, c: usize) -> f64 {
        self.rule.probabilities().len_f64(&self.classes.lens[c])
    }

    fn class_len_dd(&self, c: usize) -> TwoFloat {
        match &self.classes.lens[c] {
            Length::Exact(x) => rat_to_dd(x),
            _ => self.rule.probabilities().length_dd(&self.classes.keys[c][1..]),
        }
    }

    /// Exponent vector `(k_1..k_m)` of the i-th interval.
    pub fn exponents(&self, i: usize) -> &[u32] {
        &self.classes.keys[self.intervals[i] as usize][1..]
    }

    /// Index of the starting interval the i-th interval descends from.
    pub fn start_of(&self, i: usize) -> usize {
        self.classes.keys[self.intervals[i] as usize][0] as usize
    }

    /// Interval lengths in the representation of the rule, left to right.
    pub fn lengths(&self) -> Vec<Length> {
        self.intervals.iter().map(|&c| self.classes.lens[c as usize].clone()).collect()
    }

    pub fn lengths_f64(&self) -> Vec<f64> {
        self.intervals.iter().map(|&c| self.class_len_f64(c as usize)).collect()
    }

    /// Sum of all lengths in double-double (exactly 1 up to rounding).
    pub fn total_length_dd(&self) -> TwoFloat {
        let mut s = TwoFloat::from(0.0);
        for c in self.active() {
            s += self.class_len_dd(c) * self.classes.counts[c] as f64;
        }
        s
    }

    /// Right endpoints `t_1 < ... < t_k = 1`.
    pub fn breakpoints(&self) -> Breakpoints {
        if self.rule.probabilities().is_exact() {
            let active: Vec<usize> = self.active().collect();
            let den = active.iter().fold(BigInt::one(), |acc, &c| match &self.classes.lens[c] {
                Length::Exact(x) => acc.lcm(x.denom()),
                _ => unreachable!(),
            });
            let mut scaled: HashMap<u32, BigInt> = HashMap::with_capacity(active.len());
            for &c in &active {
                if let Length::Exact(x) = &self.classes.lens[c] {
                    scaled.insert(c as u32, x.numer() * (&den / x.denom()));
                }
            }
            let mut acc = BigInt::zero();
            let numerators = self
                .intervals
                .iter()
                .map(|c| {
                    acc += &scaled[c];
                    acc.clone()
                })
                .collect();
            Breakpoints::Scaled { numerators, denominator: den }
        } else {
            let lens: HashMap<u32, TwoFloat> = self.active().map(|c| (c as u32, self.class_len_dd(c))).collect();
            let mut acc = TwoFloat::from(0.0);
            let mut out: Vec<f64> = self
                .intervals
                .iter()
                .map(|c| {
                    acc += lens[c];
                    dd_to_f64(acc)
                })
                .collect();
            if let Some(last) = out.last_mut() {
                *last = 1.0;
            }
            Breakpoints::Float(out)
        }
    }

    pub fn breakpoints_exact(&self) -> Option<Vec<BigRational>> {
        self.breakpoints().to_exact()
    }

    pub fn breakpoints_f64(&self) -> Vec<f64> {
        self.breakpoints().to_f64()
    }

    /// `D_n`, the extreme discrepancy of the right endpoints.
    pub fn discrepancy(&self) -> Discrepancy {
        partition_discrepancy(&self.breakpoints()).expect("breakpoints are valid by construction")
    }

    fn children_of(&mut self, c: usize) -> Vec<u32> {
        if let Some(ch) = &self.classes.children[c] {
            return ch.clone();
        }
        let m = self.rule.m();
        let mut ch = Vec::with_capacity(m);
        for j in 0..m {
            let mut key = self.classes.keys[c].clone();
            key[j + 1] += 1;
            let len = self.rule.probabilities().child(&self.classes.lens[c], j);
            ch.push(self.classes.intern(key, len));
        }
        self.classes.children[c] = Some(ch.clone());
        ch
    }

    fn split(&mut self, which: &[bool]) -> Result<()> {
        let m = self.rule.m() as u64;
        let extra: u64 =
            which.iter().enumerate().filter(|(_, &w)| w).map(|(c, _)| self.classes.counts[c] * (m - 1)).sum();
        let needed = self.k() as u64 + extra;
        if needed > self.budget {
            return Err(Error::BudgetExceeded { needed: needed as u128, cap: self.budget as u128 });
        }
        let mut kids: HashMap<u32, Vec<u32>> = HashMap::new();
        for (c, _) in which.iter().enumerate().filter(|(_, &w)| w) {
            let ch = self.children_of(c);
            kids.insert(c as u32, ch);
        }
        let mut next = Vec::with_capacity(needed as usize);
        for &c in &self.intervals {
            match kids.get(&c) {
                Some(ch) => next.extend_from_slice(ch),
                None => next.push(c),
            }
        }
        for (&c, ch) in &kids {
            let n = std::mem::take(&mut self.classes.counts[c as usize]);
            for &x in ch {
                self.classes.counts[x as usize] += n;
            }
        }
        self.intervals = next;
        self.step += 1;
        Ok(())
    }

    /// Splits every interval of maximal length, in place.
    pub fn refine_in_place(&mut self) -> Result<()> {
        let top = self.extreme_class(true);
        let p = self.rule.probabilities().clone();
        let mut which = vec![false; self.classes.keys.len()];
        let active: Vec<usize> = self.active().collect();
        for c in active {
            which[c] = p.cmp_len(&self.classes.lens[c], &self.classes.lens[top]).is_eq();
        }
        self.split(&which)
    }

    /// Splits every interval, in place.
    pub fn split_all_in_place(&mut self) -> Result<()> {
        let which: Vec<bool> = self.classes.counts.iter().map(|&c| c > 0).collect();
        self.split(&which)
    }
}

/// One ρ-refinement step.
pub fn rho_refine(p: &RefinedPartition) -> Result<RefinedPartition> {
    let mut q = p.clone();
    q.refine_in_place()?;
    Ok(q)
}

/// `rho^n omega` with the default interval cap.
pub fn rho_refine_n(rule: &RefinementRule, n: usize) -> Result<RefinedPartition> {
    rho_refine_n_with_budget(rule, n, DEFAULT_BUDGET)
}

pub fn rho_refine_n_with_budget(rule: &RefinementRule, n: usize, budget: u64) -> Result<RefinedPartition> {
    let mut p = RefinedPartition::trivial(rule).with_budget(budget);
    for _ in 0..n {
        p.refine_in_place()?;
    }
    Ok(p)
}

/// Kakutani `kappa_n = alpha^n omega`.
pub fn alpha_refine_n(alpha: impl Into<Alpha>, n: usize) -> Result<RefinedPartition> {
    rho_refine_n(&kakutani_rule(alpha)?, n)
}

/// The n-th ρ-adic partition: every interval split at every step, `m^n` intervals
/// in lexicographic address order.
pub fn rho_adic_partition(rule: &RefinementRule, n: usize) -> Result<RefinedPartition> {
    rho_adic_partition_with_budget(rule, n, DEFAULT_BUDGET)
}

pub fn rho_adic_partition_with_budget(rule: &RefinementRule, n: usize, budget: u64) -> Result<RefinedPartition> {
    let needed = (rule.m() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, cap: budget as u128 });
    }
    let mut p = RefinedPartition::trivial(rule).with_budget(budget);
    for _ in 0..n {
        p.split_all_in_place()?;
    }
    Ok(p)
}

/// Helper for examples and tests: exact lengths to f64.
pub fn lengths_exact_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(rat_to_f64).collect()
}
