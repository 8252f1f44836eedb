use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use levinson_core::export::{self, BoxColumns, DensitySidecar};
use levinson_core::levinson::{self as lev, VerdictConfig};
use levinson_core::potentials::PotentialSpec;
use levinson_core::solver::{SolverOptions, MATCH_TOL, TIME_REVERSAL_TOL, UNITARITY_TOL};
use levinson_core::suite::{self, SuiteOptions};
use levinson_core::{smatrix, spectral, Potential};

/// Scattering data, spectral densities and Levinson counts for 1D potentials.
#[derive(Parser)]
#[command(name = "levinson", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitudes and unwrapped phases over a k-grid.
    Scatter(RunArgs),
    /// Smooth spectral density, optionally with box densities at given L.
    Density {
        #[command(flatten)]
        run: RunArgs,
        /// Box half-width for a ρ_L column (repeatable).
        #[arg(long = "L", value_name = "L")]
        box_sizes: Vec<f64>,
    },
    /// Bound-state count from the phase drop, checked against an oracle.
    Levinson {
        #[command(flatten)]
        run: RunArgs,
        /// Allowed distance of n_levinson from an integer.
        #[arg(long, default_value_t = lev::ROUND_TOL)]
        round_tol: f64,
    },
    /// Run the built-in fixture suite.
    Verify {
        /// Subset that finishes in seconds.
        #[arg(long)]
        fast: bool,
        /// Multiply every suite tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Also write the outcomes as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Built-in potential: free, poschl-teller, delta, square-well, gaussian, asym-double-gaussian.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    potential: Option<String>,
    /// Pöschl–Teller ℓ.
    #[arg(long)]
    l: Option<u32>,
    /// Delta coupling g.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<f64>,
    /// Potential spec file (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    k_min: f64,
    #[arg(long, default_value_t = 50.0)]
    k_max: f64,
    #[arg(long, default_value_t = 400)]
    n_k: usize,
    /// Integration box half-width (default: support + 5 wavelengths per k).
    #[arg(long)]
    l_box: Option<f64>,
    /// Relative matching residual allowed per solve.
    #[arg(long, default_value_t = MATCH_TOL)]
    match_tol: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl RunArgs {
    fn validate(&self) -> Result<()> {
        ensure!(self.k_min > 0.0, "--k-min must be positive");
        ensure!(self.k_min < self.k_max, "--k-min must be below --k-max");
        ensure!(self.n_k >= 16, "--n-k must be at least 16");
        ensure!(self.match_tol > 0.0, "--match-tol must be positive");
        if self.l.is_some() && self.potential.as_deref() != Some("poschl-teller") {
            bail!("--l applies only to --potential poschl-teller");
        }
        if self.g.is_some() && self.potential.as_deref() != Some("delta") {
            bail!("--g applies only to --potential delta");
        }
        Ok(())
    }

    fn potential(&self) -> Result<Potential> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec = PotentialSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            return Ok(spec.build()?);
        }
        let name = self.potential.as_deref().expect("clap enforces --potential or --spec");
        Ok(suite::fixture(name, self.l, self.g)?)
    }

    fn verdict_config(&self, round_tol: f64) -> VerdictConfig {
        VerdictConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            n_k: self.n_k,
            round_tol,
            l_box: self.l_box,
            match_tol: self.match_tol,
            ..VerdictConfig::default()
        }
    }

    fn solver_options(&self) -> SolverOptions {
        self.verdict_config(lev::ROUND_TOL).solver_options()
    }

    fn curve(&self, p: &Potential) -> Result<smatrix::PhaseCurve> {
        let grid = smatrix::geometric_grid(self.k_min, self.k_max, self.n_k);
        let opts = smatrix::CurveOptions {
            solver: self.solver_options(),
            ..Default::default()
        };
        Ok(smatrix::build_phase_curve(p, &grid, &opts)?)
    }
}

/// Writes every file or none: each goes to a temporary name first.
fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    let mut staged = Vec::new();
    for (path, body) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let mut tmp = path.clone().into_os_string();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, body).with_context(|| format!("writing {}", tmp.display()))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    }
    Ok(())
}

fn out_file(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}", if format == Format::Csv { "csv" } else { "json" }))
}

fn cmd_scatter(args: &RunArgs) -> Result<bool> {
    args.validate()?;
    let p = args.potential()?;
    let curve = args.curve(&p)?;
    let body = match args.format {
        Format::Csv => export::phase_curve_csv(&curve)?,
        Format::Json => export::to_json(&curve)?,
    };
    let path = out_file(&args.out, "scatter", args.format);
    write_all(&[(path.clone(), body)])?;

    let unitarity = curve.max_unitarity_residual();
    let reversal = curve.max_time_reversal_residual();
    let det = curve.det_residuals().into_iter().fold(0.0, f64::max);
    println!("potential            {}", p.label());
    println!("grid points          {}", curve.len());
    println!("unitarity residual   {unitarity:.3e} (tol {UNITARITY_TOL:.0e})");
    println!("time reversal        {reversal:.3e} (tol {TIME_REVERSAL_TOL:.0e})");
    println!("det S residual       {det:.3e}");
    println!("max match residual   {:.3e}", curve.max_match_residual);
    println!("wrote                {}", path.display());
    Ok(unitarity < UNITARITY_TOL && reversal < TIME_REVERSAL_TOL)
}

fn cmd_density(args: &RunArgs, box_sizes: &[f64]) -> Result<bool> {
    args.validate()?;
    let p = args.potential()?;
    let cfg = args.verdict_config(lev::ROUND_TOL);
    let curve = args.curve(&p)?;
    let class = lev::classify_b0(&p, &cfg.probe, &args.solver_options())?;
    let density = spectral::density_from_phase(&curve, class.b0);
    let boxes = if box_sizes.is_empty() {
        None
    } else {
        Some(BoxColumns::compute(&p, &density.k, box_sizes, &args.solver_options())?)
    };
    let sidecar = DensitySidecar {
        potential: p.label(),
        delta_weight: density.delta_weight,
        b0: density.b0,
        moment0: density.moment0,
        sum_rule_integral: lev::sum_rule_integral(&density),
        box_sizes: box_sizes.to_vec(),
    };
    let files = match args.format {
        Format::Csv => vec![
            (args.out.join("density.csv"), export::density_csv(&density, boxes.as_ref())?),
            (args.out.join("density.json"), export::density_sidecar_json(&sidecar)?),
        ],
        Format::Json => {
            let all = serde_json::json!({ "sidecar": sidecar, "density": density, "boxes": boxes });
            vec![(args.out.join("density.json"), serde_json::to_string_pretty(&all)?)]
        }
    };
    write_all(&files)?;

    println!("potential            {}", p.label());
    println!("b(0)                 {}", density.b0);
    println!("delta weight         {:.6}", density.delta_weight);
    println!("sum rule integral    {:.6}", sidecar.sum_rule_integral);
    if let Some(bx) = &boxes {
        let worst = bx.identity_residual.iter().copied().fold(0.0, f64::max);
        println!("identity residual    {worst:.3e}");
    }
    for (path, _) in &files {
        println!("wrote                {}", path.display());
    }
    Ok(true)
}

fn cmd_levinson(args: &RunArgs, round_tol: f64) -> Result<bool> {
    args.validate()?;
    ensure!(round_tol > 0.0 && round_tol < 0.5, "--round-tol must lie in (0, 0.5)");
    let p = args.potential()?;
    let cfg = args.verdict_config(round_tol);
    let report = lev::levinson_verdict(&p, &cfg)?;
    let body = export::report_json(&report)?;
    write_all(&[(args.out.join("levinson.json"), body.clone())])?;
    println!("{body}");
    if report.near_threshold_warning {
        eprintln!("warning: an eigenvalue lies within {:.0e} of threshold", lev::THRESHOLD_EPS);
    }
    Ok(report.verdict == lev::Verdict::Pass)
}

fn cmd_verify(fast: bool, tol_scale: f64, json: Option<&Path>) -> Result<bool> {
    ensure!(tol_scale > 0.0, "--tol-scale must be positive");
    let outcomes = suite::run_suite(&SuiteOptions { tol_scale, fast });
    print!("{}", export::outcome_table(&outcomes));
    if let Some(path) = json {
        write_all(&[(path.to_path_buf(), export::to_json(&outcomes)?)])?;
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LEVINSON_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("LEVINSON_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.cmd {
        Command::Scatter(a) => cmd_scatter(&a),
        Command::Density { run, box_sizes } => cmd_density(&run, &box_sizes),
        Command::Levinson { run, round_tol } => cmd_levinson(&run, round_tol),
        Command::Verify { fast, tol_scale, json } => cmd_verify(fast, tol_scale, json.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
