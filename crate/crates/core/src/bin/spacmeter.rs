//! `spacmeter`: weak-to-strong measurement toolkit for a qubit coupled to a
//! photon-added coherent pointer.
//!
//! Exit codes: 0 success, 1 invariant failure or runtime error, 2 invalid
//! configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spac_core::analytic;
use spac_core::fock;
use spac_core::metrology;
use spac_core::model::{abl_conditional, weak_value};
use spac_core::sweep::audit::{audit_table, default_points};
use spac_core::sweep::config::{Endpoint, Overrides, RunConfig};
use spac_core::sweep::output::{
    format_float, series_for, svg_line_plot, write_audit_csv, write_csv,
};
use spac_core::sweep::verify::{verify, Level};
use spac_core::sweep::{
    configure_threads, run_sweep, Axis, Output, Preset, SweepSpec, DEFAULT_POINTS,
};
use spac_core::{ComplexValue, Error};

#[derive(Parser, Debug)]
#[command(
    name = "spacmeter",
    version,
    about = "Postselected pointer shifts, SNR and quantum Fisher information for a photon-added coherent pointer"
)]
struct Cli {
    #[command(flatten)]
    params: ParamArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// TOML configuration file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preselection angle; accepts pi expressions such as "pi/3".
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Relative phase of the preselected state.
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Coherent amplitude modulus.
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Coherent amplitude phase.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Pointer width.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Coupling Gamma = g / sigma.
    #[arg(long = "gamma", global = true)]
    gamma: Option<f64>,
    /// Number of trials N.
    #[arg(long = "trials", global = true)]
    n_trials: Option<u64>,
    /// Finite-difference step for the QFI.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Largest Fock dimension the truncation may grow to.
    #[arg(long, global = true)]
    max_n_max: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weak value, transition value and pointer shifts from both engines.
    Transition,
    /// Ratio chi of postselected to nonpostselected SNR.
    Snr,
    /// Quantum Fisher information and Cramer-Rao bound.
    Qfi,
    /// Parameter sweep to CSV (a preset or the [sweep] config section).
    Sweep(SweepArgs),
    /// Run the invariant suites; exits 1 if any authoritative check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        /// Also write the printed-formula audit table as CSV.
        #[arg(long)]
        audit_out: Option<PathBuf>,
    },
    /// Printed closed-form shifts versus both engines, as CSV.
    Audit {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Grid points per series for presets.
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    /// Custom sweep axis: phi, Gamma or r.
    #[arg(long)]
    axis: Option<String>,
    /// First grid value of the custom axis.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Last grid value of the custom axis.
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<String>,
    /// Number of evenly spaced grid points (at least 2).
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated outputs: dx, dp, transition, chi, qfi, crb.
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<String>>,
    /// CSV destination (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG line plot destination.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Column to plot (default: the first requested output).
    #[arg(long)]
    plot: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Fig1,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig1 => Preset::Fig1,
            PresetArg::Fig3a => Preset::Fig3a,
            PresetArg::Fig3b => Preset::Fig3b,
            PresetArg::Fig4 => Preset::Fig4,
            PresetArg::Fig5 => Preset::Fig5,
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::OrthogonalSelection { .. }
            | Error::DegenerateReference { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("spacmeter: invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg) | Failure::Invariant(msg)) => {
            eprintln!("spacmeter: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_config(p: &ParamArgs) -> Result<RunConfig, Failure> {
    let overrides = Overrides {
        phi: p.phi.clone(),
        delta: p.delta.clone(),
        r: p.r,
        theta: p.theta.clone(),
        sigma: p.sigma,
        gamma: p.gamma,
        n_trials: p.n_trials,
        step: p.step,
        max_n_max: p.max_n_max,
    };
    Ok(match &p.config {
        Some(path) => RunConfig::from_path(path, &overrides)?,
        None => RunConfig::from_overrides(&overrides)?,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let cfg = load_config(&cli.params)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Transition => transition(&cfg, &mut out)?,
        Command::Snr => snr(&cfg, &mut out)?,
        Command::Qfi => qfi(&cfg, &mut out)?,
        Command::Sweep(args) => sweep(&cfg, &args, &mut out)?,
        Command::Verify { level, audit_out } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            run_verify(&cfg, level, audit_out.as_deref(), &mut out)?
        }
        Command::Audit { out: path } => {
            let table = audit_table(&default_points(), &cfg.policy)?;
            match path {
                Some(p) => write_audit_csv(&table, BufWriter::new(File::create(p)?))?,
                None => write_audit_csv(&table, &mut out)?,
            }
        }
    }
    Ok(())
}

fn complex(z: ComplexValue) -> String {
    format!(
        "{} {} {}i",
        format_float(z.re),
        if z.im < 0.0 { '-' } else { '+' },
        format_float(z.im.abs())
    )
}

fn header(cfg: &RunConfig, out: &mut impl Write) -> io::Result<()> {
    let p = &cfg.point;
    writeln!(
        out,
        "# phi = {}, delta = {}, r = {}, theta = {}, sigma = {}, Gamma = {}, N = {}",
        p.sel.phi(),
        p.sel.delta(),
        p.pointer.r(),
        p.pointer.theta(),
        p.pointer.sigma(),
        p.coupling.strength(),
        p.n_trials
    )
}

fn transition(cfg: &RunConfig, out: &mut impl Write) -> Result<(), Failure> {
    let p = &cfg.point;
    let closed = analytic::pointer_shifts(&p.sel, &p.pointer, &p.coupling)?;
    let oracle = fock::evaluate(&p.sel, &p.pointer, &p.coupling, &cfg.policy)?;
    let (wx, wp) = analytic::weak_limit_shifts(&p.sel, &p.pointer, &p.coupling)?;
    let g = p.coupling.g(&p.pointer);
    header(cfg, out)?;
    let rows: Vec<(&str, String)> = vec![
        ("weak_value", complex(weak_value(&p.sel)?)),
        ("abl_conditional", format_float(abl_conditional(&p.sel))),
        ("transition", complex(closed.transition_value)),
        ("transition_oracle", complex(oracle.transition_value)),
        ("dx", format_float(closed.dx)),
        ("dx_oracle", format_float(oracle.dx)),
        (
            "dx_over_g",
            if g > 0.0 {
                format_float(closed.dx / g)
            } else {
                "-".into()
            },
        ),
        ("dp", format_float(closed.dp)),
        ("dp_oracle", format_float(oracle.dp)),
        ("weak_limit_dx", format_float(wx)),
        ("weak_limit_dp", format_float(wp)),
        ("beta_inv_sq", format_float(closed.beta_sq_inv)),
        (
            "beta_inv_sq_oracle",
            format_float(oracle.final_state.beta_inv_sq),
        ),
        ("n_max", oracle.n_max.to_string()),
        ("tail_mass", format_float(oracle.tail_mass)),
    ];
    for (k, v) in rows {
        writeln!(out, "{k:<20} {v}")?;
    }
    Ok(())
}

fn snr(cfg: &RunConfig, out: &mut impl Write) -> Result<(), Failure> {
    let p = &cfg.point;
    let rep = metrology::snr_ratio(&p.sel, &p.pointer, &p.coupling, p.n_trials, &cfg.policy)?;
    header(cfg, out)?;
    for (k, v) in [
        ("chi", rep.chi),
        ("R_p", rep.r_p),
        ("R_n", rep.r_n),
        ("P_s", rep.p_s),
        ("dx", rep.dx),
        ("dx_spread", rep.dx_spread),
        ("dx_reference", rep.dx_reference),
        ("dx_reference_spread", rep.dx_reference_spread),
        ("dx_residual", rep.dx_residual),
    ] {
        writeln!(out, "{k:<20} {}", format_float(v))?;
    }
    Ok(())
}

fn qfi(cfg: &RunConfig, out: &mut impl Write) -> Result<(), Failure> {
    let p = &cfg.point;
    let rep = metrology::qfi(
        &p.sel,
        &p.pointer,
        &p.coupling,
        cfg.step,
        p.n_trials,
        &cfg.policy,
    )?;
    header(cfg, out)?;
    for (k, v) in [
        ("F", rep.f),
        ("F_fidelity", rep.f_fidelity),
        ("F_Q", rep.f_q),
        ("crb", rep.crb),
        ("P_s", rep.p_s),
        ("P_success_exact", rep.exact_success_probability),
        ("step", rep.step),
    ] {
        writeln!(out, "{k:<20} {}", format_float(v))?;
    }
    writeln!(out, "{:<20} {}", "n_max", rep.n_max)?;
    Ok(())
}

fn sweep_specs(cfg: &RunConfig, args: &SweepArgs) -> Result<Vec<SweepSpec>, Failure> {
    if let Some(preset) = args.preset {
        return Ok(Preset::from(preset).specs(args.points)?);
    }
    if let Some(name) = cfg.sweep.preset.as_deref() {
        let preset: Preset = name.parse()?;
        return Ok(preset.specs(cfg.sweep.points.unwrap_or(args.points))?);
    }
    let mut section = cfg.sweep.clone();
    if let Some(a) = &args.axis {
        section.axis = Some(a.clone());
    }
    if let Some(s) = &args.start {
        section.start = Some(Endpoint::parse(s)?);
    }
    if let Some(s) = &args.stop {
        section.stop = Some(Endpoint::parse(s)?);
    }
    if args.count.is_some() {
        section.count = args.count;
    }
    if args.outputs.is_some() {
        section.outputs = args.outputs.clone();
    }
    let custom = RunConfig {
        sweep: section,
        ..cfg.clone()
    };
    match custom.custom_sweep()? {
        Some(spec) => Ok(vec![spec]),
        None => Err(Failure::Config(
            "sweep needs --preset or an axis (--axis or [sweep] axis)".into(),
        )),
    }
}

fn sweep(cfg: &RunConfig, args: &SweepArgs, out: &mut impl Write) -> Result<(), Failure> {
    let specs = sweep_specs(cfg, args)?;
    let table = run_sweep(&specs, &cfg.policy, cfg.step)?;
    match &args.out {
        Some(p) => write_csv(&table, BufWriter::new(File::create(p)?))?,
        None => write_csv(&table, &mut *out)?,
    }
    if let Some(path) = &args.svg {
        let column = match &args.plot {
            Some(c) => c.clone(),
            None => match table.outputs.first() {
                Some(Output::Qfi) => "F_Q".into(),
                Some(o) => o.name().to_owned(),
                None => "dx".into(),
            },
        };
        let series = series_for(&table, &column)
            .ok_or_else(|| Failure::Config(format!("no column `{column}` in this sweep")))?;
        let axis: Axis = specs[0].axis;
        std::fs::write(path, svg_line_plot(&series, axis.name(), &column))?;
    }
    let flagged = table.rows.iter().filter(|r| !r.is_ok()).count();
    if flagged > 0 {
        eprintln!(
            "spacmeter: {flagged} of {} rows flagged (see status column)",
            table.rows.len()
        );
    }
    Ok(())
}

fn run_verify(
    cfg: &RunConfig,
    level: Level,
    audit_out: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let report = verify(level, &cfg.policy)?;
    writeln!(out, "checks ({:?}):", level)?;
    for c in &report.checks {
        writeln!(out, "  {c}")?;
    }
    writeln!(out, "findings (reported, never fatal):")?;
    for f in &report.findings {
        writeln!(
            out,
            "  {} {:<22} {}",
            if f.holds { "HOLDS " } else { "ABSENT" },
            f.name,
            f.detail
        )?;
    }
    writeln!(
        out,
        "printed-formula audit (discrepancy = |printed - oracle|):"
    )?;
    writeln!(
        out,
        "  {:<3} {:>6} {:>22} {:>22} {:>22} {:>10}",
        "q", "Gamma", "printed", "first_principles", "oracle", "discrep"
    )?;
    for r in &report.audit {
        writeln!(
            out,
            "  {:<3} {:>6} {:>22} {:>22} {:>22} {:>10.3e}",
            r.quantity,
            r.point.coupling.strength(),
            format_float(r.printed),
            format_float(r.first_principles),
            format_float(r.oracle),
            r.discrepancy
        )?;
    }
    if let Some(path) = audit_out {
        write_audit_csv(&report.audit, BufWriter::new(File::create(path)?))?;
    }
    if report.passed() {
        writeln!(out, "all authoritative checks passed")?;
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        Err(Failure::Invariant(format!(
            "authoritative checks failed: {}",
            failed.join(", ")
        )))
    }
}
