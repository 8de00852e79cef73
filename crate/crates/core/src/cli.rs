//! `mirint` command-line front end.
//!
//! Every command returns an [`Outcome`]: the rendered report and whether the
//! checks it asserts passed. `main` maps that to exit status 0 or 1 and any
//! error to status 2 with a JSON description on stderr.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::Serialize;

use crate::brane::{
    curve_series, extend, open_closed_map, superpotential, theta_superpotential, BraneKind,
    BraneSystem, SignConvention,
};
use crate::congruence::{conjecture_probe, reports_to_csv, sweep, PropositionId, SweepRanges};
use crate::dwork::{certify_theorem, dwork_certify, Generator};
use crate::geometry::{
    check_condition_a, check_condition_b, mirror_exponents, ChargeSystem, ConditionReport,
};
use crate::inversion::{compose, invert_iterative, invert_lagrange_good, inverse_units, UnitMapFamily};
use crate::padic::{
    digit_sum, factorial_ratio_unit, ordp_factorial, ordp_u64_valuation, Prime, Valuation,
};
use crate::series::{IntegralityCertificate, TruncatedSeries};

#[derive(Debug, Parser)]
#[command(name = "mirint", version, about = "Integrality checks for mirror maps and p-adic congruences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Digit sums, valuations and factorial-ratio units.
    Padic(PadicArgs),
    Congruence {
        #[command(subcommand)]
        action: CongruenceAction,
    },
    Conjecture {
        #[command(subcommand)]
        action: ConjectureAction,
    },
    Dwork {
        #[command(subcommand)]
        action: DworkAction,
    },
    /// Closed-string mirror maps q_i/z_i with integrality certificates.
    MirrorMap(MirrorArgs),
    /// Open-closed mirror maps Q_i/z_i of a brane-extended system.
    OpenClosed(BraneArgs),
    Superpotential(BraneArgs),
    /// Mirror-curve series exp(-theta W).
    Curve(BraneArgs),
    /// Inverse of a (open-closed) mirror map.
    Invert(InvertArgs),
    /// Conditions (A) and (B) up to a degree.
    Conditions(ConditionArgs),
}

#[derive(Debug, Subcommand)]
pub enum CongruenceAction {
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum ConjectureAction {
    Probe(ProbeArgs),
}

#[derive(Debug, Subcommand)]
pub enum DworkAction {
    Certify(CertifyArgs),
}

/// Comma list of integers or inclusive ranges, e.g. `2,3,5`, `2..6`, `1,4..6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumList(pub Vec<u64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((lo, hi)) = part.split_once("..") {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                let lo: u64 = lo.trim().parse().map_err(|e| format!("'{part}': {e}"))?;
                let hi: u64 = hi.trim().parse().map_err(|e| format!("'{part}': {e}"))?;
                if lo > hi {
                    return Err(format!("empty range '{part}'"));
                }
                out.extend(lo..=hi);
            } else {
                out.push(part.parse().map_err(|e| format!("'{part}': {e}"))?);
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(NumList(out))
    }
}

fn primes(list: &NumList) -> anyhow::Result<Vec<Prime>> {
    Ok(list.0.iter().map(|&p| Prime::new(p)).collect::<Result<_, _>>()?)
}

#[derive(Debug, Args)]
pub struct PadicArgs {
    #[arg(long)]
    pub p: u64,
    /// Integers whose digit sum and valuations are reported.
    #[arg(long)]
    pub n: Option<NumList>,
    /// With --r: unit part of (p^r a)!/(p^(r-1) a)!.
    #[arg(long, requires = "r")]
    pub a: Option<NumList>,
    #[arg(long, requires = "a")]
    pub r: Option<NumList>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Proposition id, or `all`.
    #[arg(long, default_value = "all")]
    pub prop: String,
    #[arg(long, default_value = "2,3,5,7")]
    pub primes: NumList,
    #[arg(long, default_value = "1..5")]
    pub m: NumList,
    #[arg(long, default_value = "1..4")]
    pub parts: NumList,
    #[arg(long, default_value = "0..12")]
    pub k: NumList,
    /// Enumerate every ordering of the parts.
    #[arg(long)]
    pub ordered: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub p: NumList,
    #[arg(long)]
    pub r: NumList,
    #[arg(long)]
    pub a: NumList,
    #[arg(long)]
    pub m: NumList,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// T41, T42, T43, T44a, T44b or T45.
    #[arg(long, conflicts_with = "series")]
    pub theorem: Option<String>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Parts for T44a/T44b.
    #[arg(long)]
    pub k: Option<NumList>,
    /// Series file in the `e0 e1 : num/den` text format.
    #[arg(long, requires = "nvars")]
    pub series: Option<PathBuf>,
    #[arg(long)]
    pub nvars: Option<usize>,
    #[arg(long, default_value_t = 12)]
    pub degree: u32,
    #[arg(long, default_value = "2,3,5,7")]
    pub primes: NumList,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    /// Built-in charge system: local-p2 or conifold.
    #[arg(long, conflicts_with = "geometry")]
    pub preset: Option<String>,
    /// JSON file `{"name": .., "vectors": [[..]]}`.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
}

impl GeometryArgs {
    fn load(&self) -> anyhow::Result<ChargeSystem> {
        match (&self.preset, &self.geometry) {
            (Some(name), _) => {
                ChargeSystem::preset(name).ok_or_else(|| anyhow!("unknown preset '{name}'"))
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Ok(ChargeSystem::from_json(&text)?)
            }
            (None, None) => bail!("one of --preset or --geometry is required"),
        }
    }
}

#[derive(Debug, Args)]
pub struct MirrorArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 12)]
    pub degree: u32,
    /// Charge-vector label i in 1..=N; all maps when omitted.
    #[arg(long)]
    pub index: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BraneArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// outer, inner, or phase:<labels>.
    #[arg(long, default_value = "outer")]
    pub brane: String,
    #[arg(long, default_value_t = 10)]
    pub degree: u32,
    /// Row label i in 0..=N; all rows when omitted (open-closed only).
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long, default_value = "printed")]
    pub sign_convention: String,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Invert the open-closed map of this brane instead of the closed map.
    #[arg(long)]
    pub brane: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub degree: u32,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Check the brane-extended system instead.
    #[arg(long)]
    pub brane: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub degree: u32,
}

/// Rendered report plus the verdict of the checks it asserts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub passed: bool,
}

fn json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn unsupported(format: Format, command: &str) -> anyhow::Error {
    anyhow!("--format {format:?} is not supported by {command}").context("usage")
}

pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let format = cli.format;
    match &cli.command {
        Command::Padic(a) => run_padic(a, format.unwrap_or(Format::Json)),
        Command::Congruence {
            action: CongruenceAction::Sweep(a),
        } => run_sweep(a, format.unwrap_or(Format::Csv)),
        Command::Conjecture {
            action: ConjectureAction::Probe(a),
        } => run_probe(a, format.unwrap_or(Format::Text)),
        Command::Dwork {
            action: DworkAction::Certify(a),
        } => run_certify(a, format.unwrap_or(Format::Json)),
        Command::MirrorMap(a) => run_mirror_map(a, format.unwrap_or(Format::Json)),
        Command::OpenClosed(a) => run_open_closed(a, format.unwrap_or(Format::Json)),
        Command::Superpotential(a) => run_superpotential(a, format.unwrap_or(Format::Json)),
        Command::Curve(a) => run_curve(a, format.unwrap_or(Format::Json)),
        Command::Invert(a) => run_invert(a, format.unwrap_or(Format::Json)),
        Command::Conditions(a) => run_conditions(a, format.unwrap_or(Format::Json)),
    }
}

#[derive(Serialize)]
struct PadicRow {
    n: u64,
    digit_sum: u64,
    ord_n: Valuation,
    ord_n_factorial: u64,
}

#[derive(Serialize)]
struct RatioRow {
    a: u64,
    r: u32,
    residue: u64,
    modulus: u64,
    valuation: u64,
}

#[derive(Serialize)]
struct PadicReport {
    p: Prime,
    integers: Vec<PadicRow>,
    ratios: Vec<RatioRow>,
}

fn run_padic(args: &PadicArgs, format: Format) -> anyhow::Result<Outcome> {
    let p = Prime::new(args.p)?;
    let mut integers = Vec::new();
    for &n in args.n.iter().flat_map(|l| &l.0) {
        integers.push(PadicRow {
            n,
            digit_sum: digit_sum(n, p)?,
            ord_n: ordp_u64_valuation(n, p),
            ord_n_factorial: ordp_factorial(n, p),
        });
    }
    let mut ratios = Vec::new();
    if let (Some(a_list), Some(r_list)) = (&args.a, &args.r) {
        for &a in &a_list.0 {
            for &r in &r_list.0 {
                let r = u32::try_from(r).context("r out of range")?;
                let u = factorial_ratio_unit(a, r, p)?;
                ratios.push(RatioRow {
                    a,
                    r,
                    residue: u.residue,
                    modulus: u.modulus,
                    valuation: u.valuation,
                });
            }
        }
    }
    let report = PadicReport { p, integers, ratios };
    let output = match format {
        Format::Json => json(&report)?,
        Format::Text => {
            let mut s = format!("p = {p}\n");
            for row in &report.integers {
                writeln!(
                    s,
                    "n={} S_p={} ord_p(n)={} ord_p(n!)={}",
                    row.n, row.digit_sum, row.ord_n, row.ord_n_factorial
                )?;
            }
            for row in &report.ratios {
                writeln!(
                    s,
                    "a={} r={} unit={} mod {} ord={}",
                    row.a, row.r, row.residue, row.modulus, row.valuation
                )?;
            }
            s
        }
        Format::Csv => return Err(unsupported(format, "padic")),
    };
    Ok(Outcome {
        output,
        passed: true,
    })
}

#[derive(Serialize)]
struct SweepSummary {
    prop: PropositionId,
    tuples: usize,
    skipped: usize,
    failures: Vec<crate::congruence::MarginReport>,
}

#[derive(Serialize)]
struct SweepReport {
    primes: Vec<Prime>,
    m: Vec<u64>,
    parts: Vec<u64>,
    k: Vec<u64>,
    ordered: bool,
    results: Vec<SweepSummary>,
}

fn run_sweep(args: &SweepArgs, format: Format) -> anyhow::Result<Outcome> {
    let props: Vec<PropositionId> = if args.prop == "all" {
        PropositionId::ALL.to_vec()
    } else {
        args.prop
            .split(',')
            .map(|s| s.trim().parse::<PropositionId>())
            .collect::<Result<_, _>>()?
    };
    let ranges = SweepRanges {
        primes: primes(&args.primes)?,
        m: args.m.0.clone(),
        parts: args.parts.0.iter().map(|&n| n as usize).collect(),
        k: args.k.0.clone(),
        ordered: args.ordered,
    };
    let outcomes = props
        .iter()
        .map(|&prop| sweep(prop, &ranges))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = outcomes.iter().all(|o| o.failures().next().is_none());
    let output = match format {
        Format::Csv => {
            let all: Vec<_> = outcomes.iter().flat_map(|o| o.reports.iter().cloned()).collect();
            reports_to_csv(&all)?
        }
        Format::Json => json(&SweepReport {
            primes: ranges.primes.clone(),
            m: ranges.m.clone(),
            parts: args.parts.0.clone(),
            k: ranges.k.clone(),
            ordered: ranges.ordered,
            results: outcomes
                .iter()
                .map(|o| SweepSummary {
                    prop: o.prop,
                    tuples: o.reports.len(),
                    skipped: o.skipped,
                    failures: o.failures().cloned().collect(),
                })
                .collect(),
        })?,
        Format::Text => {
            let mut s = format!(
                "primes {:?} m {:?} parts {:?} k {:?}\n",
                args.primes.0, args.m.0, args.parts.0, args.k.0
            );
            for o in &outcomes {
                writeln!(
                    s,
                    "{:<14} tuples {:>7} skipped {:>6} failures {}",
                    o.prop.as_str(),
                    o.reports.len(),
                    o.skipped,
                    o.failures().count()
                )?;
            }
            s
        }
    };
    Ok(Outcome { output, passed })
}

fn run_probe(args: &ProbeArgs, format: Format) -> anyhow::Result<Outcome> {
    let mut rows = Vec::new();
    for p in primes(&args.p)? {
        for &r in &args.r.0 {
            let r = u32::try_from(r).context("r out of range")?;
            for &a in &args.a.0 {
                for &m in &args.m.0 {
                    rows.push(conjecture_probe(p, r, a, m)?);
                }
            }
        }
    }
    let output = match format {
        Format::Json => json(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "p", "r", "a", "m", "observed", "predicted", "degenerate", "lower_bound",
                "bound_holds", "matches",
            ])?;
            for row in &rows {
                w.write_record([
                    row.p.to_string(),
                    row.r.to_string(),
                    row.a.to_string(),
                    row.m.to_string(),
                    row.observed.to_string(),
                    row.predicted.to_string(),
                    row.degenerate.to_string(),
                    row.lower_bound.to_string(),
                    row.bound_holds.to_string(),
                    row.matches.map(|b| b.to_string()).unwrap_or_default(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            let mut s = String::from(" p  r  a  m  observed  predicted  lower  bound_ok  match\n");
            for row in &rows {
                let matches = match row.matches {
                    Some(true) => "yes",
                    Some(false) => "no",
                    None => "-",
                };
                writeln!(
                    s,
                    "{:>2} {:>2} {:>2} {:>2} {:>9} {:>10} {:>6} {:>9} {:>6}",
                    row.p, row.r, row.a, row.m, row.observed, row.predicted, row.lower_bound,
                    row.bound_holds, matches
                )?;
            }
            s
        }
    };
    // the probe reports, it does not assert
    Ok(Outcome {
        output,
        passed: true,
    })
}

fn generator(args: &CertifyArgs, theorem: &str) -> anyhow::Result<Generator> {
    let m = || args.m.ok_or_else(|| anyhow!("{theorem} needs --m"));
    let n = || args.n.ok_or_else(|| anyhow!("{theorem} needs --n"));
    let ks = || {
        args.k
            .as_ref()
            .map(|k| k.0.clone())
            .ok_or_else(|| anyhow!("{theorem} needs --k"))
    };
    Ok(match theorem {
        "T41" => Generator::T41 { m: m()? },
        "T42" => Generator::T42 { m: m()? },
        "T43" => Generator::T43 { m: m()?, n: n()? },
        "T44a" => Generator::T44a { ks: ks()? },
        "T44b" => Generator::T44b { ks: ks()? },
        "T45" => Generator::T45 { m: m()?, n: n()? },
        other => bail!("unknown theorem '{other}'"),
    })
}

#[derive(Serialize)]
struct SeriesCertification {
    series: String,
    bound: u32,
    direct: IntegralityCertificate,
    per_prime: std::collections::BTreeMap<Prime, crate::dwork::PrimeCongruence>,
}

fn run_certify(args: &CertifyArgs, format: Format) -> anyhow::Result<Outcome> {
    let ps = primes(&args.primes)?;
    let (value, passed, summary) = if let Some(theorem) = &args.theorem {
        let g = generator(args, theorem)?;
        let cert = certify_theorem(&g, args.degree, &ps)?;
        let passed = cert.passes();
        let summary = format!("{g} bound {}: direct {}", args.degree, cert.direct.integral);
        (serde_json::to_value(&cert)?, passed, (summary, cert.per_prime))
    } else if let Some(path) = &args.series {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let f = TruncatedSeries::from_text(&text, args.nvars.unwrap_or(1), args.degree)?;
        let report = dwork_certify(&f, &ps)?;
        let passed = report.direct.integral && report.all_congruences_hold();
        let summary = format!(
            "{} bound {}: direct {}",
            path.display(),
            args.degree,
            report.direct.integral
        );
        let cert = SeriesCertification {
            series: path.display().to_string(),
            bound: args.degree,
            direct: report.direct,
            per_prime: report.per_prime,
        };
        let per_prime = cert.per_prime.clone();
        (serde_json::to_value(&cert)?, passed, (summary, per_prime))
    } else {
        bail!("one of --theorem or --series is required");
    };
    let output = match format {
        Format::Json => json(&value)?,
        Format::Text => {
            let (head, per_prime) = summary;
            let mut s = head + "\n";
            for (p, c) in &per_prime {
                writeln!(
                    s,
                    "p={p} congruence {} to degree {}",
                    c.congruence_holds, c.reliable_degree
                )?;
            }
            s
        }
        Format::Csv => return Err(unsupported(format, "dwork certify")),
    };
    Ok(Outcome { output, passed })
}

#[derive(Serialize)]
struct MapEntry {
    label: usize,
    series: String,
    certificate: IntegralityCertificate,
}

#[derive(Serialize)]
struct MapReport {
    geometry: String,
    vectors: Vec<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    brane: Option<String>,
    degree: u32,
    conditions: Vec<ConditionReport>,
    maps: Vec<MapEntry>,
}

fn conditions(cs: &ChargeSystem, degree: u32) -> Vec<ConditionReport> {
    vec![check_condition_a(cs, degree), check_condition_b(cs, degree)]
}

fn render_maps(report: &MapReport, format: Format, prefix: &str) -> anyhow::Result<String> {
    match format {
        Format::Json => json(report),
        Format::Text => {
            let mut s = String::new();
            for c in &report.conditions {
                writeln!(s, "# {}", c.summary())?;
            }
            for e in &report.maps {
                writeln!(
                    s,
                    "# {prefix}_{l}/z_{l} integral {} to degree {}",
                    e.certificate.integral,
                    e.certificate.degree_checked,
                    l = e.label
                )?;
                s.push_str(&e.series);
            }
            Ok(s)
        }
        Format::Csv => Err(unsupported(format, "map reports")),
    }
}

/// When both conditions hold, integrality is asserted; otherwise the
/// certificate is informational.
fn maps_pass(report: &MapReport) -> bool {
    let asserted = report.conditions.iter().all(|c| c.holds);
    !asserted || report.maps.iter().all(|e| e.certificate.integral)
}

fn run_mirror_map(args: &MirrorArgs, format: Format) -> anyhow::Result<Outcome> {
    let cs = args.geometry.load()?;
    let labels: Vec<usize> = match args.index {
        Some(i) if i == 0 || i > cs.rows() => bail!("--index must lie in 1..={}", cs.rows()),
        Some(i) => vec![i],
        None => (1..=cs.rows()).collect(),
    };
    let mut maps = Vec::new();
    for label in labels {
        let qz = crate::geometry::mirror_map(&cs, label - 1, args.degree)?;
        maps.push(MapEntry {
            label,
            certificate: qz.is_integral(),
            series: qz.to_text(),
        });
    }
    let report = MapReport {
        geometry: cs.name.clone(),
        vectors: cs.vectors().to_vec(),
        brane: None,
        degree: args.degree,
        conditions: conditions(&cs, args.degree),
        maps,
    };
    Ok(Outcome {
        output: render_maps(&report, format, "q")?,
        passed: maps_pass(&report),
    })
}

fn brane_system(geometry: &GeometryArgs, brane: &str) -> anyhow::Result<BraneSystem> {
    let cs = geometry.load()?;
    Ok(extend(&cs, brane.parse::<BraneKind>()?)?)
}

fn run_open_closed(args: &BraneArgs, format: Format) -> anyhow::Result<Outcome> {
    let bs = brane_system(&args.geometry, &args.brane)?;
    let labels: Vec<usize> = match args.index {
        Some(i) if i >= bs.nvars() => bail!("--index must lie in 0..={}", bs.nvars() - 1),
        Some(i) => vec![i],
        None => (0..bs.nvars()).collect(),
    };
    let mut maps = Vec::new();
    for label in labels {
        let qz = open_closed_map(&bs, label, args.degree)?;
        maps.push(MapEntry {
            label,
            certificate: qz.is_integral(),
            series: qz.to_text(),
        });
    }
    let report = MapReport {
        geometry: bs.base.name.clone(),
        vectors: bs.extended.vectors().to_vec(),
        brane: Some(bs.kind.to_string()),
        degree: args.degree,
        conditions: conditions(&bs.extended, args.degree),
        maps,
    };
    Ok(Outcome {
        output: render_maps(&report, format, "Q")?,
        passed: maps_pass(&report),
    })
}

#[derive(Serialize)]
struct SuperpotentialReport {
    geometry: String,
    brane: String,
    vectors: Vec<Vec<i64>>,
    degree: u32,
    sign_convention: SignConvention,
    support_ok: bool,
    theta_cancels_weights: bool,
    series: String,
}

fn run_superpotential(args: &BraneArgs, format: Format) -> anyhow::Result<Outcome> {
    let bs = brane_system(&args.geometry, &args.brane)?;
    let convention: SignConvention = args.sign_convention.parse()?;
    let sp = superpotential(&bs, args.degree, convention)?;
    let tw = theta_superpotential(&bs, &sp)?;
    // theta W has the same support as W, weights divided out
    let theta_ok = tw.len() == sp.w.len()
        && sp.w.terms().all(|(m, _)| !tw.coefficient(m.as_slice()).is_zero());
    let report = SuperpotentialReport {
        geometry: bs.base.name.clone(),
        brane: bs.kind.to_string(),
        vectors: bs.extended.vectors().to_vec(),
        degree: args.degree,
        sign_convention: convention,
        support_ok: sp.support_ok(),
        theta_cancels_weights: theta_ok,
        series: sp.w.to_text(),
    };
    let output = match format {
        Format::Json => json(&report)?,
        Format::Text => format!(
            "# W for {} {} to degree {}\n{}",
            report.geometry, report.brane, report.degree, report.series
        ),
        Format::Csv => return Err(unsupported(format, "superpotential")),
    };
    Ok(Outcome {
        output,
        passed: report.support_ok && report.theta_cancels_weights,
    })
}

#[derive(Serialize)]
struct CurveReport {
    geometry: String,
    brane: String,
    vectors: Vec<Vec<i64>>,
    degree: u32,
    sign_convention: SignConvention,
    conditions: Vec<ConditionReport>,
    certificate: IntegralityCertificate,
    series: String,
}

fn run_curve(args: &BraneArgs, format: Format) -> anyhow::Result<Outcome> {
    let bs = brane_system(&args.geometry, &args.brane)?;
    let convention: SignConvention = args.sign_convention.parse()?;
    let y = curve_series(&bs, args.degree, convention)?;
    let report = CurveReport {
        geometry: bs.base.name.clone(),
        brane: bs.kind.to_string(),
        vectors: bs.extended.vectors().to_vec(),
        degree: args.degree,
        sign_convention: convention,
        conditions: conditions(&bs.extended, args.degree),
        certificate: y.is_integral(),
        series: y.to_text(),
    };
    let asserted = report.conditions.iter().all(|c| c.holds);
    let passed = !asserted || report.certificate.integral;
    let output = match format {
        Format::Json => json(&report)?,
        Format::Text => format!(
            "# exp(-theta W) for {} {}: integral {} to degree {}\n{}",
            report.geometry,
            report.brane,
            report.certificate.integral,
            report.degree,
            report.series
        ),
        Format::Csv => return Err(unsupported(format, "curve")),
    };
    Ok(Outcome { output, passed })
}

#[derive(Serialize)]
struct InvertReport {
    geometry: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    brane: Option<String>,
    degree: u32,
    forward_integral: bool,
    oracle_agrees: bool,
    round_trip: bool,
    inverse: Vec<MapEntry>,
}

fn run_invert(args: &InvertArgs, format: Format) -> anyhow::Result<Outcome> {
    let (name, system, brane) = match &args.brane {
        Some(b) => {
            let bs = brane_system(&args.geometry, b)?;
            (bs.base.name.clone(), bs.extended, Some(bs.kind.to_string()))
        }
        None => {
            let cs = args.geometry.load()?;
            (cs.name.clone(), cs, None)
        }
    };
    let fam = UnitMapFamily::new(mirror_exponents(&system, args.degree)?)?;
    let forward_integral = fam
        .exponents()
        .iter()
        .map(|f| f.exp().map(|u| u.is_integral().integral))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .all(|b| b);
    let inv = invert_lagrange_good(&fam, args.degree)?;
    let oracle_agrees = inv == invert_iterative(&fam, args.degree)?;
    let fwd = fam.forward()?;
    let mut round_trip = true;
    for i in 0..fam.nvars() {
        let zi = TruncatedSeries::variable(fam.nvars(), args.degree, i)?;
        round_trip &= compose(&fwd[i], &inv, args.degree)? == zi;
        round_trip &= compose(&inv[i], &fwd, args.degree)? == zi;
    }
    let offset = usize::from(brane.is_none());
    let inverse = inverse_units(&inv)?
        .into_iter()
        .enumerate()
        .map(|(i, u)| MapEntry {
            label: i + offset,
            certificate: u.is_integral(),
            series: u.to_text(),
        })
        .collect::<Vec<_>>();
    let inverse_integral = inverse.iter().all(|e| e.certificate.integral);
    let report = InvertReport {
        geometry: name,
        brane,
        degree: args.degree,
        forward_integral,
        oracle_agrees,
        round_trip,
        inverse,
    };
    let passed = oracle_agrees && round_trip && (!forward_integral || inverse_integral);
    let output = match format {
        Format::Json => json(&report)?,
        Format::Text => {
            let mut s = format!(
                "# oracle agrees {} round trip {} forward integral {}\n",
                report.oracle_agrees, report.round_trip, report.forward_integral
            );
            for e in &report.inverse {
                writeln!(
                    s,
                    "# z_{l}/Z_{l} integral {} to degree {}",
                    e.certificate.integral,
                    e.certificate.degree_checked,
                    l = e.label
                )?;
                s.push_str(&e.series);
            }
            s
        }
        Format::Csv => return Err(unsupported(format, "invert")),
    };
    Ok(Outcome { output, passed })
}

#[derive(Serialize)]
struct ConditionsOutput {
    geometry: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    brane: Option<String>,
    vectors: Vec<Vec<i64>>,
    degree: u32,
    conditions: Vec<ConditionReport>,
}

fn run_conditions(args: &ConditionArgs, format: Format) -> anyhow::Result<Outcome> {
    let (name, system, brane) = match &args.brane {
        Some(b) => {
            let bs = brane_system(&args.geometry, b)?;
            (bs.base.name.clone(), bs.extended, Some(bs.kind.to_string()))
        }
        None => {
            let cs = args.geometry.load()?;
            (cs.name.clone(), cs, None)
        }
    };
    let report = ConditionsOutput {
        geometry: name,
        brane,
        vectors: system.vectors().to_vec(),
        degree: args.degree,
        conditions: conditions(&system, args.degree),
    };
    let passed = report.conditions.iter().all(|c| c.holds);
    let output = match format {
        Format::Json => json(&report)?,
        Format::Text => {
            let mut s = String::new();
            for c in &report.conditions {
                writeln!(s, "{}", c.summary())?;
            }
            s
        }
        Format::Csv => return Err(unsupported(format, "conditions")),
    };
    Ok(Outcome { output, passed })
}

#[derive(Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
}

/// Machine-readable description of a failed run.
pub fn error_report(err: &anyhow::Error) -> ErrorReport {
    let error = match err.downcast_ref::<crate::Error>() {
        Some(e) => {
            let debug = format!("{e:?}");
            debug
                .split(|c: char| !c.is_alphanumeric())
                .next()
                .unwrap_or("Error")
                .to_string()
        }
        None if err.downcast_ref::<std::io::Error>().is_some() => "Io".into(),
        None => "Usage".into(),
    };
    ErrorReport {
        error,
        message: format!("{err:#}"),
    }
}
