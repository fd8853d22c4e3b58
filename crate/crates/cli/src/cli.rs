//! Argument definitions and command dispatch.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};
use udk_core::discrepancy::{
    extreme_discrepancy_1d, partition_discrepancy, star_discrepancy_dd, Breakpoints, Discrepancy,
};
use udk_core::fractal::{
    elementary_discrepancy_partition, elementary_discrepancy_points, khodak_fractal_partition, vdc_fractal_points,
    IFSSystem, Similarity,
};
use udk_core::khodak::{dirichlet_zeros, m_of_r, predicted_mr_rational, spectral_analysis};
use udk_core::qmc::{koksma_hlawka_check, reordered_refinement, TestIntegrand};
use udk_core::refine::{kakutani_rule, RefinedPartition, RefinementRule, DEFAULT_BUDGET};
use udk_core::sequences::{halton, hammersley, kronecker, van_der_corput, Base, Coords, PointSet};

use crate::error::{CliError, CliResult};
use crate::experiments::run_experiment;
use crate::io::{fmt17, fmt_frac, num, read_points, to_json_line, write_points, write_rows, Format};
use crate::rho::{parse_fraction, parse_fraction_list, parse_rho};

/// Version of every JSON document the tool prints.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "udk", version, about = "Uniform distribution, discrepancy, Khodak trees and fractal sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a low-discrepancy point set.
    Gen(GenArgs),
    /// Discrepancy of a point set read from CSV.
    Disc(DiscArgs),
    /// Refine [0,1) with a splitting rule.
    Refine(RefineArgs),
    /// Khodak trees and the constants of their counting function.
    #[command(subcommand)]
    Khodak(KhodakCmd),
    /// Sequences and partitions on self-similar sets.
    #[command(subcommand)]
    Fractal(FractalCmd),
    /// QMC estimate with its Koksma-Hlawka bound.
    Qmc(QmcArgs),
    /// Regenerate an experiment table and check it.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Vdc,
    Halton,
    Hammersley,
    Kronecker,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub count: usize,
    /// Base for vdc.
    #[arg(long)]
    pub base: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub bases: Vec<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Drop the leading 0 of the vdc sequence.
    #[arg(long)]
    pub skip_zero: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DiscKind {
    Star,
    Extreme,
    Partition,
}

#[derive(Debug, Args)]
pub struct DiscArgs {
    #[arg(value_enum)]
    pub kind: DiscKind,
    /// CSV file, `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Raise the size cap of the 2-D and 3-D routines.
    #[arg(long)]
    pub max_n: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
#[group(required = true, multiple = false)]
pub struct RuleArgs {
    /// Exact probabilities, e.g. `1/4,1/4,1/2`.
    #[arg(long)]
    pub rho: Option<String>,
    /// LS(L,S) rule.
    #[arg(long)]
    pub ls: Option<String>,
    /// Pisot rule with exponents a1,a2,...
    #[arg(long)]
    pub pisot: Option<String>,
    /// Kakutani rule with exact alpha.
    #[arg(long)]
    pub alpha: Option<String>,
}

impl RuleArgs {
    pub fn resolve(&self) -> CliResult<RefinementRule> {
        if let Some(s) = &self.rho {
            return parse_rho(s);
        }
        if let Some(s) = &self.ls {
            return parse_rho(&format!("ls:{s}"));
        }
        if let Some(s) = &self.pisot {
            return parse_rho(&format!("pisot:{s}"));
        }
        if let Some(s) = &self.alpha {
            return Ok(kakutani_rule(parse_fraction(s, 0)?)?);
        }
        Err(CliError::Usage("one of --rho, --ls, --pisot, --alpha is required".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Breaks,
    Counts,
    Disc,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "counts")]
    pub emit: Emit,
    /// Breakpoint encoding (`csv` or `frac`).
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum KhodakCmd {
    /// Spectral data of the characteristic polynomial.
    Analyze(RuleArgs),
    /// M_r and its rational-case prediction.
    Count {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        r: f64,
    },
    /// Zeros of 1 - p^{-s} - q^{-s} in the first boxes.
    Zeros {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 50)]
        boxes: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartitionEmit {
    Sets,
    Disc,
}

#[derive(Debug, Subcommand)]
pub enum FractalCmd {
    /// Points of the fractal van der Corput sequence with their addresses.
    Gen {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        points: usize,
        /// Also print coordinates.
        #[arg(long)]
        coords: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Elementary discrepancy of the first N points.
    Disc {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Khodak partition pi_n of an attractor.
    Partition {
        /// Contraction ratios, exact fractions.
        #[arg(long, conflicts_with = "preset")]
        ratios: Option<String>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "sets")]
        emit: PartitionEmit,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum QmcSequence {
    Vdc,
    Halton,
    Reorder,
}

#[derive(Debug, Args)]
pub struct QmcArgs {
    #[arg(long, value_enum)]
    pub sequence: QmcSequence,
    /// id, sq, ramp or prod2.
    #[arg(long)]
    pub integrand: String,
    #[arg(long)]
    pub count: usize,
    /// Seed of the reordering stream.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Halton bases; defaults to the first primes.
    #[arg(long, value_delimiter = ',')]
    pub bases: Vec<u64>,
    /// Rule for `reorder` (default Kakutani 1/2).
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub max_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub name: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Interval cap, overridable through `UDK_BUDGET`.
pub fn budget() -> CliResult<u64> {
    match std::env::var("UDK_BUDGET") {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("UDK_BUDGET=`{s}` is not an integer"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn bases(v: &[u64]) -> CliResult<Vec<Base>> {
    Ok(v.iter().map(|&b| Base::new(b)).collect::<Result<_, _>>()?)
}

fn disc_json(kind: &str, ps_len: usize, dim: usize, d: &Discrepancy) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": kind,
        "n": ps_len,
        "dim": dim,
        "value": d.value,
        "exact": d.exact.as_ref().map(fmt_frac),
    })
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Disc(a) => disc(a, out),
        Command::Refine(a) => refine(a, out),
        Command::Khodak(c) => khodak(c, out),
        Command::Fractal(c) => fractal(c, out),
        Command::Qmc(a) => qmc(a, out),
        Command::Experiment(a) => {
            let report = run_experiment(&a.name, &a.out_dir)?;
            to_json_line(&report.summary_json(), out)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::ExperimentFailed(a.name))
            }
        }
    }
}

pub fn generate(a: &GenArgs) -> CliResult<PointSet> {
    Ok(match a.kind {
        GenKind::Vdc => {
            let b = Base::new(a.base.or(a.bases.first().copied()).unwrap_or(2))?;
            if a.skip_zero {
                let ps = van_der_corput(a.count + 1, b);
                match ps.coords() {
                    Coords::Exact(v) => PointSet::exact(1, v[1..].to_vec())?,
                    Coords::Float(v) => PointSet::float(1, v[1..].to_vec())?,
                }
            } else {
                van_der_corput(a.count, b)
            }
        }
        GenKind::Halton => {
            let bs = if a.bases.is_empty() { a.base.into_iter().collect() } else { a.bases.clone() };
            halton(a.count, &bases(&bs)?)?
        }
        GenKind::Hammersley => hammersley(a.count, &bases(&a.bases)?)?,
        GenKind::Kronecker => kronecker(a.count, &a.theta)?,
    })
}

fn gen(a: GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let ps = generate(&a)?;
    match &a.output {
        Some(p) => write_points(&ps, a.format, &mut File::create(p)?),
        None => write_points(&ps, a.format, out),
    }
}

fn disc(a: DiscArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut input: Box<dyn Read> =
        if a.input.as_os_str() == "-" { Box::new(io::stdin().lock()) } else { Box::new(File::open(&a.input)?) };
    let ps = read_points(&mut input, a.dim)?;
    let d = match a.kind {
        DiscKind::Star => star_discrepancy_dd(&ps, a.max_n)?,
        DiscKind::Extreme => {
            if ps.dim() != 1 {
                return Err(udk_core::Error::UnsupportedDim(ps.dim()).into());
            }
            extreme_discrepancy_1d(&ps)?
        }
        DiscKind::Partition => {
            if ps.dim() != 1 {
                return Err(udk_core::Error::UnsupportedDim(ps.dim()).into());
            }
            let b = match ps.coords() {
                Coords::Exact(v) => Breakpoints::Exact(v.clone()),
                Coords::Float(v) => Breakpoints::Float(v.clone()),
            };
            partition_discrepancy(&b)?
        }
    };
    let kind = match a.kind {
        DiscKind::Star => "star",
        DiscKind::Extreme => "extreme",
        DiscKind::Partition => "partition",
    };
    to_json_line(&disc_json(kind, ps.len(), ps.dim(), &d), out)
}

fn breakpoint_rows(p: &RefinedPartition, format: Format) -> Vec<Vec<String>> {
    match (format, p.breakpoints_exact()) {
        (Format::Frac, Some(v)) => v.iter().map(|x| vec![fmt_frac(x)]).collect(),
        _ => p.breakpoints_f64().into_iter().map(|x| vec![fmt17(x)]).collect(),
    }
}

fn refine(a: RefineArgs, out: &mut dyn Write) -> CliResult<()> {
    let rule = a.rule.resolve()?;
    let mut p = RefinedPartition::trivial(&rule).with_budget(budget()?);
    let mut steps = Vec::new();
    for n in 0..=a.steps {
        if n > 0 {
            p.refine_in_place()?;
        }
        if a.emit != Emit::Breaks {
            let mut rec = json!({ "n": n, "k": p.k(), "A_n": p.max_length(), "a_n": p.min_length() });
            if a.emit == Emit::Disc {
                rec["D_n"] = json!(p.discrepancy().value);
            }
            steps.push(rec);
        }
    }
    match a.emit {
        Emit::Breaks => {
            if a.format == Format::Frac && p.breakpoints_exact().is_none() {
                return Err(CliError::Usage("frac output needs an exact rule".into()));
            }
            write_rows(&breakpoint_rows(&p, a.format), out)
        }
        _ => to_json_line(
            &json!({ "schema": SCHEMA, "probabilities": rule.probabilities().probs_f64(), "steps": steps }),
            out,
        ),
    }
}

fn khodak(c: KhodakCmd, out: &mut dyn Write) -> CliResult<()> {
    match c {
        KhodakCmd::Analyze(rule) => {
            let rule = rule.resolve()?;
            let sd = spectral_analysis(rule.probabilities())?;
            let roots: Vec<Value> =
                sd.roots.iter().map(|(z, m)| json!({ "re": z.re, "im": z.im, "multiplicity": m })).collect();
            to_json_line(
                &json!({
                    "schema": SCHEMA,
                    "lambda": sd.lambda,
                    "n": sd.n,
                    "entropy": sd.entropy,
                    "c_prime": sd.c_prime,
                    "eta": num(sd.eta),
                    "d": sd.d,
                    "roots": roots,
                }),
                out,
            )
        }
        KhodakCmd::Count { rule, r } => {
            let rule = rule.resolve()?;
            let pv = rule.probabilities();
            let m_r = m_of_r(pv, r)?;
            let pred = spectral_analysis(pv).ok().map(|sd| predicted_mr_rational(&sd, pv.m(), r));
            let rel = pred.map(|p| (m_r as f64 - p).abs() / m_r as f64);
            to_json_line(&json!({ "schema": SCHEMA, "r": r, "M_r": m_r, "prediction": pred, "rel_error": rel }), out)
        }
        KhodakCmd::Zeros { p, boxes } => {
            let rep = dirichlet_zeros(p, boxes)?;
            let mut rows = vec![vec!["k".to_string(), "re".into(), "im".into()]];
            rows.extend(rep.zeros.iter().map(|(k, z)| vec![k.to_string(), fmt17(z.re), fmt17(z.im)]));
            write_rows(&rows, out)
        }
    }
}

fn ratio_system(spec: &str) -> CliResult<IFSSystem> {
    let ratios = parse_fraction_list(spec, 0)?;
    let mut shift = BigRational::from_integer(0.into());
    let mut maps = Vec::with_capacity(ratios.len());
    for c in ratios {
        maps.push(Similarity::scale_shift(c.clone(), shift.clone())?);
        shift += c;
    }
    Ok(IFSSystem::new(maps)?)
}

fn fractal(c: FractalCmd, out: &mut dyn Write) -> CliResult<()> {
    match c {
        FractalCmd::Gen { preset, points, coords, format } => {
            let (sys, x0) = IFSSystem::preset(&preset)?;
            let fp = vdc_fractal_points(&sys, &x0, points)?;
            let rows: Vec<Vec<String>> = (0..points)
                .map(|i| {
                    let mut row = Vec::new();
                    if coords {
                        match (format, fp.points.point_exact(i)) {
                            (Format::Frac, Some(p)) => row.extend(p.iter().map(fmt_frac)),
                            _ => row.extend(fp.points.point_f64(i).into_iter().map(fmt17)),
                        }
                    }
                    row.push(fp.addresses[i].to_string());
                    row
                })
                .collect();
            write_rows(&rows, out)
        }
        FractalCmd::Disc { preset, points, depth } => {
            let (sys, x0) = IFSSystem::preset(&preset)?;
            let fp = vdc_fractal_points(&sys, &x0, points)?;
            let d = elementary_discrepancy_points(&fp, points, depth)?;
            to_json_line(
                &json!({
                    "schema": SCHEMA,
                    "preset": preset,
                    "n": points,
                    "value": d.value,
                    "n_times_value": d.value * points as f64,
                    "exact": d.exact.as_ref().map(fmt_frac),
                }),
                out,
            )
        }
        FractalCmd::Partition { ratios, preset, steps, emit } => {
            let sys = match (ratios, preset) {
                (Some(r), _) => ratio_system(&r)?,
                (None, Some(p)) => IFSSystem::preset(&p)?.0,
                (None, None) => return Err(CliError::Usage("one of --ratios, --preset is required".into())),
            };
            let fp = khodak_fractal_partition(&sys, steps)?;
            match emit {
                PartitionEmit::Sets => {
                    let rows: Vec<Vec<String>> =
                        fp.sets.iter().zip(&fp.probabilities).map(|(w, p)| vec![w.to_string(), fmt17(*p)]).collect();
                    write_rows(&rows, out)
                }
                PartitionEmit::Disc => {
                    let d = elementary_discrepancy_partition(&fp, None)?;
                    to_json_line(&json!({ "schema": SCHEMA, "n": steps, "k": fp.len(), "value": d.value }), out)
                }
            }
        }
    }
}

pub fn qmc_points(a: &QmcArgs, f: &TestIntegrand) -> CliResult<PointSet> {
    Ok(match a.sequence {
        QmcSequence::Vdc => van_der_corput(a.count, Base::new(2)?),
        QmcSequence::Halton => {
            let bs = if a.bases.is_empty() { [2u64, 3, 5][..f.dim().min(3)].to_vec() } else { a.bases.clone() };
            halton(a.count, &bases(&bs)?)?
        }
        QmcSequence::Reorder => {
            let rule = match &a.rho {
                Some(s) => parse_rho(s)?,
                None => kakutani_rule(BigRational::new(1.into(), 2.into()))?,
            };
            reordered_refinement(&rule, a.count, a.seed)?
        }
    })
}

fn qmc(a: QmcArgs, out: &mut dyn Write) -> CliResult<()> {
    let f = TestIntegrand::from_name(&a.integrand)?;
    let ps = qmc_points(&a, &f)?;
    let rep = koksma_hlawka_check(&ps, &f, a.max_n)?;
    to_json_line(
        &json!({
            "schema": SCHEMA,
            "integrand": f.name(),
            "n": ps.len(),
            "estimate": rep.estimate,
            "exact": rep.exact,
            "error": rep.error,
            "dstar": rep.dstar,
            "kh_bound": rep.bound,
            "satisfied": rep.satisfied,
        }),
        out,
    )
}
