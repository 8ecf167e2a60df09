//! Command-line front end: energy scans, spectral tables, range certification,
//! reference-table reproduction, verification suites and potential profiles.

pub mod config;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use ptws::amplitudes::{amplitudes, channel_params, potential_profile, AmplitudeError};
use ptws::special::{SingularValue, INT_SNAP_TOL};
use ptws::spectral::{family, scan_ranges, RangeCriterion, ScanError, SpectralKind, DEFAULT_GRID_POINTS};
use ptws::units::{energy_to, EnergyScale, ParamError};
use ptws::validation::{reference_table, verify_all, RowCheck, ValidationError, DEFAULT_SEED};
use ptws::{Kind, PotentialSpec, Variant};

pub use table::{fmt_num, Cell, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Exit status of a successful run: everything passed, or an acceptance mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Mismatch,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ptws", version, about = "Scattering analysis for the gain/loss-symmetric complex Woods-Saxon potential")]
#[command(args_override_self = true)]
pub struct Cli {
    /// `key = value` file supplying defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Amplitudes on a uniform energy grid.
    Scan(ScanArgs),
    /// Enumerated critical energies by family.
    Spectrum(SpectrumArgs),
    /// Certified absorption ranges between spectral singularities.
    Ranges(RangesArgs),
    /// Recompute the reference energy table and compare.
    Table1(OutputArgs),
    /// Run the seeded invariant suites.
    Verify(VerifyArgs),
    /// Potential along the imaginary shift at fixed x.
    Potential(PotentialArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Forward,
    #[value(alias = "time_reversed", alias = "reversed")]
    TimeReversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Internal,
    Ev,
    Mev,
}

impl UnitsArg {
    fn scale(self) -> EnergyScale {
        match self {
            UnitsArg::Internal => EnergyScale::Internal,
            UnitsArg::Ev => EnergyScale::ElectronVolt,
            UnitsArg::Mev => EnergyScale::MegaElectronVolt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    #[value(alias = "cc_left", alias = "cc")]
    CcLeft,
    Cpa,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub v0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub mass: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub zeta: f64,
    #[arg(long, value_enum, default_value = "forward")]
    pub variant: VariantArg,
    /// Display unit for energies.
    #[arg(long, value_enum, default_value = "ev")]
    pub units: UnitsArg,
}

impl SpecArgs {
    fn spec(&self) -> Result<PotentialSpec, CliError> {
        let variant = match self.variant {
            VariantArg::Forward => Variant::Forward,
            VariantArg::TimeReversed => Variant::TimeReversed,
        };
        Ok(PotentialSpec::new(self.v0, self.rho, self.mass)
            .with_zeta(self.zeta)
            .with_variant(variant)
            .validate()?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub emin: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub emax: f64,
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Comma-separated family names, `all`, or empty for none.
    #[arg(long, default_value = "all")]
    pub families: String,
    #[arg(long, default_value_t = ptws::spectral::DEFAULT_MAX_COUNT)]
    pub max_count: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RangesArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum, default_value = "cc-left")]
    pub criterion: CriterionArg,
    #[arg(long, allow_negative_numbers = true)]
    pub emin: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub emax: f64,
    #[arg(long, default_value_t = ptws::spectral::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Grid samples per bracket.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Real positions; comma-separated or repeated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub zeta_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub zeta_max: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Inclusive uniform grid; the last point is `hi` exactly.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect()
}

fn check_window(lo: f64, hi: f64, points: usize, positive: bool) -> Result<(), CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || (positive && lo <= 0.0) {
        return Err(CliError::Usage(format!("invalid window [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(CliError::Usage(format!("need at least 2 points, got {points}")));
    }
    Ok(())
}

/// `log10` column value: zeros and underflow below 1e-300 read `-inf`, poles `inf`.
pub fn log10_cell(v: &SingularValue) -> f64 {
    match v.kind {
        Kind::Zero(_) => f64::NEG_INFINITY,
        Kind::Pole(_) => f64::INFINITY,
        Kind::Finite => {
            let l = v.log10_abs();
            if l < -300.0 {
                f64::NEG_INFINITY
            } else {
                l
            }
        }
    }
}

fn near_positive_integer(x: f64) -> bool {
    let r = x.round();
    r >= 1.0 && (x - r).abs() <= INT_SNAP_TOL
}

/// Spectral flags for one energy, from the integer conditions of its channel.
pub fn row_flags(spec: &PotentialSpec, energy: f64) -> Result<Vec<&'static str>, CliError> {
    let ch = channel_params(spec, energy)?;
    let (a2, a3) = (ch.a2.abs(), ch.a3.abs());
    let (left, right) = (near_positive_integer(2.0 * a3), near_positive_integer(2.0 * a2));
    let mut flags = Vec::new();
    match spec.variant {
        Variant::Forward => {
            if left {
                flags.push("CC_L");
            }
            if right {
                flags.push("CC_R");
            }
            if (left || right) && amplitudes(spec, energy)?.det_s.kind.is_zero() {
                flags.push("CPA");
            }
            if left && right {
                flags.push("DEGENERATE");
            }
        }
        Variant::TimeReversed => {
            let sum = near_positive_integer(a2 + a3);
            if left || right {
                flags.push("SS");
            }
            if sum && !left && !right {
                flags.push("CPA");
            }
            if (left && right) || (sum && (left || right)) {
                flags.push("DEGENERATE");
            }
        }
    }
    Ok(flags)
}

pub fn scan_table(args: &ScanArgs) -> Result<Table, CliError> {
    let spec = args.spec.spec()?;
    check_window(args.emin, args.emax, args.points, true)?;
    let scale = args.spec.units.scale();
    let mut t = Table::new(&[
        "energy_internal",
        "energy_display",
        "log10_Rl",
        "log10_Rr",
        "log10_T",
        "log10_absdetS",
        "flags",
    ]);
    for e in grid(args.emin, args.emax, args.points) {
        let a = amplitudes(&spec, e)?;
        t.push(vec![
            e.into(),
            energy_to(e, scale).into(),
            log10_cell(&a.refl_left).into(),
            log10_cell(&a.refl_right).into(),
            log10_cell(&a.trans).into(),
            log10_cell(&a.det_s).into(),
            row_flags(&spec, e)?.join("|").into(),
        ]);
    }
    Ok(t)
}

pub fn parse_families(s: &str) -> Result<Vec<SpectralKind>, CliError> {
    let s = s.trim();
    if s == "all" {
        return Ok(SpectralKind::ALL.to_vec());
    }
    let mut out: Vec<SpectralKind> = s
        .split(',')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .map(|n| {
            SpectralKind::from_name(&n.replace('-', "_"))
                .ok_or_else(|| CliError::Usage(format!("unknown family '{n}'")))
        })
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn spectrum_table(args: &SpectrumArgs) -> Result<Table, CliError> {
    let spec = args.spec.spec()?;
    let scale = args.spec.units.scale();
    let mut t = Table::new(&["family", "index", "energy_internal", "energy_display", "degenerate"]);
    for kind in parse_families(&args.families)? {
        for p in family(&spec, kind, args.max_count)? {
            t.push(vec![
                kind.name().into(),
                p.index.into(),
                p.energy.into(),
                energy_to(p.energy, scale).into(),
                p.degenerate.into(),
            ]);
        }
    }
    Ok(t)
}

pub fn ranges_table(args: &RangesArgs) -> Result<Table, CliError> {
    let spec = args.spec.spec()?;
    let scale = args.spec.units.scale();
    let criterion = match args.criterion {
        CriterionArg::CcLeft => RangeCriterion::CcLeftRange,
        CriterionArg::Cpa => RangeCriterion::CpaRange,
    };
    let mut t = Table::new(&[
        "lo_internal",
        "hi_internal",
        "lo_display",
        "hi_display",
        "width_display",
        "threshold",
        "ss_lo_index",
        "ss_hi_index",
        "interior_zeros",
    ]);
    for r in scan_ranges(&spec, criterion, (args.emin, args.emax), args.threshold, args.points)? {
        let zeros: Vec<String> = r.interior_zeros.iter().map(|z| z.index.to_string()).collect();
        let (lo, hi) = (energy_to(r.lo, scale), energy_to(r.hi, scale));
        t.push(vec![
            r.lo.into(),
            r.hi.into(),
            lo.into(),
            hi.into(),
            (hi - lo).into(),
            r.threshold.into(),
            r.bracketing_ss.0.index.into(),
            r.bracketing_ss.1.index.into(),
            zeros.join(";").into(),
        ]);
    }
    Ok(t)
}

pub fn table1_table() -> Result<(Table, Outcome), CliError> {
    let rows = reference_table(DEFAULT_GRID_POINTS)?;
    let mut t = Table::new(&[
        "label",
        "v0",
        "rho",
        "unit",
        "check",
        "computed_lo",
        "computed_hi",
        "reference_lo",
        "reference_hi",
        "deviation",
        "threshold",
        "pass",
    ]);
    let mut outcome = Outcome::Ok;
    for r in rows {
        if !r.pass {
            outcome = Outcome::Mismatch;
        }
        let check = match r.check {
            RowCheck::Discrete => "discrete",
            RowCheck::Overlap => "overlap",
        };
        t.push(vec![
            r.label.into(),
            r.v0.into(),
            r.rho.into(),
            r.scale.symbol().into(),
            check.into(),
            r.computed.0.into(),
            r.computed.1.into(),
            r.reference.0.into(),
            r.reference.1.into(),
            r.deviation.into(),
            r.threshold.map_or(Cell::Text(String::new()), Cell::Num),
            r.pass.into(),
        ]);
    }
    Ok((t, outcome))
}

pub fn verify_table(seed: u64) -> Result<(Table, Outcome), CliError> {
    let mut t = Table::new(&["suite", "samples", "max_deviation", "tolerance", "pass", "detail"]);
    let mut outcome = Outcome::Ok;
    for s in verify_all(seed)? {
        if !s.pass {
            outcome = Outcome::Mismatch;
        }
        t.push(vec![
            s.name.into(),
            (s.samples as u64).into(),
            s.max_deviation.into(),
            s.tolerance.into(),
            s.pass.into(),
            s.detail.into(),
        ]);
    }
    Ok((t, outcome))
}

pub fn potential_table(args: &PotentialArgs) -> Result<Table, CliError> {
    let spec = args.spec.spec()?;
    check_window(args.zeta_min, args.zeta_max, args.points, false)?;
    let zetas = grid(args.zeta_min, args.zeta_max, args.points);
    let mut t = Table::new(&["x", "zeta", "re_v", "im_v"]);
    for &x in &args.x {
        for (z, v) in zetas.iter().zip(potential_profile(&spec, x, &zetas)) {
            t.push(vec![x.into(), (*z).into(), v.re.into(), v.im.into()]);
        }
    }
    Ok(t)
}

fn emit(table: &Table, out: &OutputArgs) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match &out.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match out.format {
        Format::Csv => table.write_csv(&mut w)?,
        Format::Json => table.write_json(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Scan(a) => emit(&scan_table(a)?, &a.output).map(|_| Outcome::Ok),
        Command::Spectrum(a) => emit(&spectrum_table(a)?, &a.output).map(|_| Outcome::Ok),
        Command::Ranges(a) => emit(&ranges_table(a)?, &a.output).map(|_| Outcome::Ok),
        Command::Table1(o) => {
            let (t, outcome) = table1_table()?;
            emit(&t, o)?;
            Ok(outcome)
        }
        Command::Verify(a) => {
            let (t, outcome) = verify_table(a.seed)?;
            emit(&t, &a.output)?;
            Ok(outcome)
        }
        Command::Potential(a) => emit(&potential_table(a)?, &a.output).map(|_| Outcome::Ok),
    }
}

/// Parses, runs and maps the result to a process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    let args = match config::expand(args, &Cli::command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Mismatch) => EXIT_MISMATCH,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
