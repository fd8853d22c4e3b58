//! Probability vectors `p_1..p_m` and the length algebra built on them.
//!
//! Three representations keep tie detection as exact as the input allows:
//! exact rationals, a single base `alpha` with integer exponents (lengths are
//! `alpha^w` and compare by the integer weight `w`), and plain floats compared
//! through log-lengths with a relative tolerance.

use std::cmp::Ordering;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::sequences::rat_to_f64;

/// Relative tolerance for comparing float log-lengths.
pub const LOG_TIE_TOL: f64 = 1e-12;

/// Tolerance on `sum p_i = 1` for the non-rational representations.
pub const SUM_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub enum ProbKind {
    Exact(Vec<BigRational>),
    SingleBase { alpha: TwoFloat, exponents: Vec<u32> },
    Float(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector {
    kind: ProbKind,
    /// `ln p_i`, cached.
    logs: Vec<f64>,
    probs: Vec<f64>,
}

/// A length (probability of a node or interval) in the representation of its vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Length {
    Exact(BigRational),
    /// `alpha^w`.
    Weight(u64),
    /// Natural log of the length.
    Log(f64),
}

pub fn dd_to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

impl ProbabilityVector {
    pub fn from_rationals(p: Vec<BigRational>) -> Result<Self> {
        check_m(p.len())?;
        let zero = BigRational::zero();
        let one = BigRational::one();
        if let Some(x) = p.iter().find(|x| **x <= zero || **x >= one) {
            return Err(Error::InvalidRule(format!("probability {x} not in (0,1)")));
        }
        let sum: BigRational = p.iter().sum();
        if sum != one {
            return Err(Error::SumNotOne { deficit: one - sum });
        }
        let probs: Vec<f64> = p.iter().map(rat_to_f64).collect();
        let logs = p.iter().map(exact_ln).collect();
        Ok(ProbabilityVector { kind: ProbKind::Exact(p), logs, probs })
    }

    pub fn from_f64(p: Vec<f64>) -> Result<Self> {
        check_m(p.len())?;
        if let Some(x) = p.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(Error::InvalidRule(format!("probability {x} not in (0,1)")));
        }
        let sum = p.iter().fold(TwoFloat::from(0.0), |a, &x| a + x);
        if (dd_to_f64(sum) - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidRule(format!("probabilities sum to {}", dd_to_f64(sum))));
        }
        let logs = p.iter().map(|x| x.ln()).collect();
        Ok(ProbabilityVector { kind: ProbKind::Float(p.clone()), logs, probs: p })
    }

    /// `p_i = alpha^{e_i}`; `alpha` must already satisfy `sum alpha^{e_i} = 1`.
    pub fn single_base(alpha: TwoFloat, exponents: Vec<u32>) -> Result<Self> {
        check_m(exponents.len())?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidRule(format!("alpha {} not in (0,1)", dd_to_f64(alpha))));
        }
        if exponents.contains(&0) {
            return Err(Error::InvalidRule("exponents must be positive".into()));
        }
        let sum = exponents.iter().fold(TwoFloat::from(0.0), |a, &e| a + alpha.powi(e as i32));
        if (dd_to_f64(sum) - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidRule(format!("sum alpha^e = {}", dd_to_f64(sum))));
        }
        let la = dd_to_f64(alpha.ln());
        let logs = exponents.iter().map(|&e| e as f64 * la).collect();
        let probs = exponents.iter().map(|&e| dd_to_f64(alpha.powi(e as i32))).collect();
        Ok(ProbabilityVector { kind: ProbKind::SingleBase { alpha, exponents }, logs, probs })
    }

    /// Solves `sum alpha^{e_i} = 1` for `alpha` in `(0,1)` and builds the vector.
    pub fn solve_single_base(exponents: Vec<u32>) -> Result<Self> {
        check_m(exponents.len())?;
        let alpha = solve_alpha(&exponents)?;
        Self::single_base(alpha, exponents)
    }

    pub fn kind(&self) -> &ProbKind {
        &self.kind
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs_f64(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.logs
    }

    pub fn p_min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn p_max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, ProbKind::Exact(_))
    }

    /// `H = sum p_i ln(1/p_i)`.
    pub fn entropy(&self) -> f64 {
        self.probs.iter().zip(&self.logs).map(|(p, l)| -p * l).sum()
    }

    /// Length of the i-th part.
    pub fn part(&self, i: usize) -> Length {
        match &self.kind {
            ProbKind::Exact(p) => Length::Exact(p[i].clone()),
            ProbKind::SingleBase { exponents, .. } => Length::Weight(exponents[i] as u64),
            ProbKind::Float(_) => Length::Log(self.logs[i]),
        }
    }

    pub fn unit(&self) -> Length {
        match &self.kind {
            ProbKind::Exact(_) => Length::Exact(BigRational::one()),
            ProbKind::SingleBase { .. } => Length::Weight(0),
            ProbKind::Float(_) => Length::Log(0.0),
        }
    }

    /// Length `prod p_i^{k_i}` of an exponent vector.
    pub fn length_of(&self, k: &[u32]) -> Length {
        match &self.kind {
            ProbKind::Exact(p) => Length::Exact(
                p.iter().zip(k).filter(|(_, &e)| e > 0).map(|(x, &e)| num_traits::pow(x.clone(), e as usize)).product(),
            ),
            ProbKind::SingleBase { exponents, .. } => {
                Length::Weight(exponents.iter().zip(k).map(|(&e, &c)| e as u64 * c as u64).sum())
            }
            ProbKind::Float(_) => Length::Log(self.logs.iter().zip(k).map(|(l, &c)| l * c as f64).sum()),
        }
    }

    /// Length of a child `j` of a node with length `parent`.
    pub fn child(&self, parent: &Length, j: usize) -> Length {
        match (parent, &self.kind) {
            (Length::Exact(x), ProbKind::Exact(p)) => Length::Exact(x * &p[j]),
            (Length::Weight(w), ProbKind::SingleBase { exponents, .. }) => Length::Weight(w + exponents[j] as u64),
            (Length::Log(l), ProbKind::Float(_)) => Length::Log(l + self.logs[j]),
            _ => panic!("length representation does not match probability vector"),
        }
    }

    /// Orders lengths, longer is greater. Float log-lengths within the
    /// relative tolerance compare equal.
    pub fn cmp_len(&self, a: &Length, b: &Length) -> Ordering {
        match (a, b) {
            (Length::Exact(x), Length::Exact(y)) => x.cmp(y),
            (Length::Weight(x), Length::Weight(y)) => y.cmp(x),
            (Length::Log(x), Length::Log(y)) => {
                let scale = x.abs().max(y.abs()).max(1.0);
                if (x - y).abs() <= LOG_TIE_TOL * scale {
                    Ordering::Equal
                } else {
                    x.partial_cmp(y).unwrap_or(Ordering::Equal)
                }
            }
            _ => panic!("mixed length representations"),
        }
    }

    /// Threshold length for a real `r > 0`: a node is internal iff its length
    /// compares `>=` to the result. Integer weights within 1e-9 snap.
    pub fn threshold(&self, r: f64) -> Result<Length> {
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::OutOfRange(format!("threshold {r} must be positive")));
        }
        Ok(match &self.kind {
            ProbKind::Exact(_) => Length::Exact(BigRational::from_float(r).expect("finite")),
            _ => self.threshold_ln(r.ln()),
        })
    }

    /// Threshold from `ln r` for the single-base and float representations.
    pub fn threshold_ln(&self, ln_r: f64) -> Length {
        match &self.kind {
            ProbKind::SingleBase { alpha, .. } => {
                if ln_r > 0.0 {
                    // Only the empty product could qualify, and it is 1 < r.
                    return Length::Weight(u64::MAX);
                }
                let t = ln_r / dd_to_f64(alpha.ln());
                let near = t.round();
                let w = if (t - near).abs() < 1e-9 { near } else { t.floor() };
                Length::Weight(w.max(0.0) as u64)
            }
            ProbKind::Float(_) => Length::Log(ln_r),
            ProbKind::Exact(_) => Length::Exact(BigRational::from_float(ln_r.exp()).expect("finite")),
        }
    }

    /// True when `len >= thr`.
    pub fn at_least(&self, len: &Length, thr: &Length) -> bool {
        if let (Length::Weight(_), Length::Weight(u64::MAX)) = (len, thr) {
            return false;
        }
        self.cmp_len(len, thr) != Ordering::Less
    }

    pub fn len_f64(&self, len: &Length) -> f64 {
        match (len, &self.kind) {
            (Length::Exact(x), _) => rat_to_f64(x),
            (Length::Weight(w), ProbKind::SingleBase { alpha, .. }) => dd_to_f64(alpha_pow(*alpha, *w)),
            (Length::Log(l), _) => l.exp(),
            _ => panic!("length representation does not match probability vector"),
        }
    }

    /// Length of an exponent vector in double-double precision.
    pub fn length_dd(&self, k: &[u32]) -> TwoFloat {
        match &self.kind {
            ProbKind::Exact(_) => match self.length_of(k) {
                Length::Exact(x) => rat_to_dd(&x),
                _ => unreachable!(),
            },
            ProbKind::SingleBase { alpha, exponents } => {
                alpha_pow(*alpha, exponents.iter().zip(k).map(|(&e, &c)| e as u64 * c as u64).sum())
            }
            ProbKind::Float(p) => p
                .iter()
                .zip(k)
                .filter(|(_, &c)| c > 0)
                .fold(TwoFloat::from(1.0), |acc, (&x, &c)| acc * dd_pow(TwoFloat::from(x), c as u64)),
        }
    }

    /// `(Lambda, n_j)` when the structure is known exactly (single base).
    pub fn single_base_structure(&self) -> Option<(f64, Vec<u32>)> {
        match &self.kind {
            ProbKind::SingleBase { alpha, exponents } => {
                let g = exponents.iter().copied().fold(0, |a: u32, b| a.gcd(&b));
                let lambda = -(g as f64) * dd_to_f64(alpha.ln());
                Some((lambda, exponents.iter().map(|e| e / g).collect()))
            }
            _ => None,
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::DegenerateRule(format!("need at least 2 parts, got {m}")));
    }
    Ok(())
}

/// `ln x` for a positive rational without overflowing on huge parts.
pub(crate) fn exact_ln(x: &BigRational) -> f64 {
    let ln_big = |n: &num_bigint::BigInt| -> f64 {
        let bits = n.bits();
        if bits < 1000 {
            rat_to_f64(&BigRational::from_integer(n.clone())).ln()
        } else {
            let shift = bits - 64;
            rat_to_f64(&BigRational::from_integer(n.abs() >> shift)).ln() + shift as f64 * std::f64::consts::LN_2
        }
    };
    ln_big(x.numer()) - ln_big(x.denom())
}

pub(crate) fn rat_to_dd(x: &BigRational) -> TwoFloat {
    let hi = rat_to_f64(x);
    let rest = x - BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
    TwoFloat::new_add(hi, rat_to_f64(&rest))
}

pub(crate) fn dd_pow(x: TwoFloat, mut e: u64) -> TwoFloat {
    let mut result = TwoFloat::from(1.0);
    let mut base = x;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
        }
        base *= base;
        e >>= 1;
    }
    result
}

fn alpha_pow(alpha: TwoFloat, w: u64) -> TwoFloat {
    dd_pow(alpha, w)
}

/// Root in `(0,1)` of `sum alpha^{e_i} = 1`: bisection then Newton in double-double.
pub(crate) fn solve_alpha(exponents: &[u32]) -> Result<TwoFloat> {
    if exponents.len() < 2 || exponents.contains(&0) {
        return Err(Error::DegenerateRule("need at least 2 positive exponents".into()));
    }
    let f = |a: f64| exponents.iter().map(|&e| a.powi(e as i32)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let mut a = TwoFloat::from(0.5 * (lo + hi));
    for _ in 0..4 {
        let mut val = TwoFloat::from(-1.0);
        let mut der = TwoFloat::from(0.0);
        for &e in exponents {
            val += a.powi(e as i32);
            der += a.powi(e as i32 - 1) * e as f64;
        }
        a -= val / der;
    }
    Ok(a)
}
