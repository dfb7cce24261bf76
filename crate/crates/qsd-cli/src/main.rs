//! qsd: command-line laboratory for minimal-information market strategies.
//!
//! Every invocation runs one pipeline from the core crate and writes its
//! results into a fresh `<command>-<timestamp>` directory under the output
//! root (`--out`, else `QSD_OUT_DIR`, else the working directory): CSV/JSON
//! data artifacts, optional SVG plots, and a `manifest.json` echoing the
//! resolved parameter set, the seed when one was consumed, and the crate
//! versions. The run directory path is printed on stdout.
//!
//! Exit codes: 0 success; 1 invalid input or environment; 2 numerical
//! failure. Failures print one JSON object on stderr:
//! `{"error": kind, "message": text, "exit": code}`.

mod artifacts;
mod plot;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qsd_core::curves::{
    cdf_demand, cdf_supply, conditional_demand_curve, conditional_supply_curve,
    monotonicity_report, Curve,
};
use qsd_core::duality::{
    fourier_transform_dense, fourier_transform_grid, ft_eigen_defect, uncertainty_product,
    TRANSFORM_SPAN_SIGMAS,
};
use qsd_core::error::CoreError;
use qsd_core::estimation::{
    cramer_rao_monte_carlo, estimate_moments, fit_minimal_strategy, parse_transactions,
};
use qsd_core::fisher::{
    cramer_rao_product, fisher_information_closed, fisher_information_grid, surprisal_derivative,
};
use qsd_core::grid::trapezoid;
use qsd_core::solver::{build_hamiltonian, el_residual, lowest_eigenpairs};
use qsd_core::strategy::{DEFAULT_GRID_POINTS, DEFAULT_SPAN_SIGMAS};
use qsd_core::wigner::{
    default_phase_grid, negative_regions, wigner_marginal_defect, wigner_numeric, PhaseGridSpec,
    DEFAULT_PHASE_POINTS, DEFAULT_PHASE_SPAN_SIGMAS,
};
use qsd_core::{GridFunction, GridSpec, Strategy};

use artifacts::RunArtifacts;

/// Core failures plus the CLI's own environment errors.
#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn io(source: std::io::Error, path: &Path) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "IoFailure",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io { path, source } => format!("{path}: {source}"),
        }
    }

    /// 2 for failures of the numerics themselves, 1 for everything the run
    /// could have rejected up front.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(
    name = "qsd",
    version,
    about = "Minimal-information strategy laboratory: spectra, transforms, phase functions, market curves and estimator checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output root for run directories (default: QSD_OUT_DIR, then ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Render SVG plots for commands with plottable artifacts.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a strategy: amplitude, density and moments.
    Strategy(StrategyArgs),
    /// Fisher information of the strategy density, quadrature against the
    /// closed form.
    Fisher(StrategyArgs),
    /// Lowest eigenpairs of the discretized risk-balance operator.
    Eigensolve(EigensolveArgs),
    /// Fourier-dual amplitude and the transform invariants.
    Duality(StrategyArgs),
    /// Phase-space quasidensity with marginals and negative regions.
    Wigner(StrategyArgs),
    /// Supply/demand curves, conditional slices and a monotonicity audit.
    Curves(CurvesArgs),
    /// Fit a minimal strategy to a transaction CSV.
    Fit(FitArgs),
    /// Monte-Carlo check of the estimator-variance bound.
    Montecarlo(MontecarloArgs),
}

#[derive(Args)]
struct StrategyArgs {
    /// Scale parameter (inverse variance of the ground state).
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Center (mean log-price).
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    /// Basis order of a pure strategy.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Comma-separated basis coefficients (normalized here); overrides --n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Option<Vec<f64>>,
    /// Grid resolution.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Grid half-width in deviations of the highest occupied order.
    #[arg(long)]
    grid_span_sigmas: Option<f64>,
}

impl StrategyArgs {
    fn build(&self) -> Result<Strategy, CliError> {
        let s = match &self.coeffs {
            Some(raw) => {
                let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
                if !norm.is_finite() || norm <= 0.0 {
                    return Err(CoreError::InvalidParameter(
                        "coefficients must have a positive finite norm".into(),
                    )
                    .into());
                }
                Strategy::new(self.mu, self.m, raw.iter().map(|c| c / norm).collect())?
            }
            None => Strategy::pure(self.n, self.mu, self.m)?,
        };
        Ok(s)
    }

    /// Grid resolved from the flags, with a per-command default span.
    fn grid(&self, s: &Strategy, default_span: f64) -> Result<(GridSpec, usize, f64), CliError> {
        let span = self.grid_span_sigmas.unwrap_or(default_span);
        let points = self.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        let half = span * s.sigma();
        Ok((GridSpec::new(s.m() - half, s.m() + half, points)?, points, span))
    }

    /// Echoes the strategy inputs; grid flags are echoed by the callers
    /// because their resolved defaults differ per command.
    fn record(&self, s: &Strategy, params: &mut BTreeMap<String, Value>) {
        params.insert("mu".into(), json!(self.mu));
        params.insert("m".into(), json!(self.m));
        if self.coeffs.is_some() {
            params.insert("coeffs".into(), json!(s.coeffs()));
        } else {
            params.insert("n".into(), json!(self.n));
        }
    }
}

#[derive(Args)]
struct EigensolveArgs {
    /// Scale parameter of the risk potential.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Center of the risk potential.
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    /// Number of eigenpairs from the bottom of the spectrum.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Grid resolution.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Grid half-width in deviations of the highest requested level.
    #[arg(long)]
    grid_span_sigmas: Option<f64>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Buying-side log-price of the conditional demand slice
    /// (default: the strategy center).
    #[arg(long, allow_hyphen_values = true)]
    x_fixed: Option<f64>,
    /// Selling-side coordinate of the conditional supply slice.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    y_fixed: f64,
}

#[derive(Args)]
struct FitArgs {
    /// Transaction CSV with header `log_price,side`.
    #[arg(long)]
    input: PathBuf,
    /// Basis order of the fitted strategy.
    #[arg(long, default_value_t = 0)]
    n: usize,
}

#[derive(Args)]
struct MontecarloArgs {
    /// Scale parameter of the sampled strategy.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Center of the sampled strategy.
    #[arg(long, default_value_t = 0.0)]
    m: f64,
    /// Basis order of the sampled strategy.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Trials, each yielding one sample-mean estimate.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Draws per trial.
    #[arg(long, default_value_t = 100)]
    n_per_trial: usize,
    /// Generator seed; trial t derives its own stream from seed + t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let payload = json!({
                "error": "InvalidParameter",
                "message": e.to_string(),
                "exit": 1,
            });
            eprintln!("{payload}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = err.exit_code();
            let payload = json!({
                "error": err.kind(),
                "message": err.message(),
                "exit": code,
            });
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let out_root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("QSD_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut art = RunArtifacts::new();
    let mut params = BTreeMap::new();
    params.insert("plot".into(), json!(cli.plot));
    let (name, seed) = match &cli.command {
        Command::Strategy(a) => ("strategy", run_strategy(a, cli.plot, &mut art, &mut params)?),
        Command::Fisher(a) => ("fisher", run_fisher(a, &mut art, &mut params)?),
        Command::Eigensolve(a) => ("eigensolve", run_eigensolve(a, &mut art, &mut params)?),
        Command::Duality(a) => ("duality", run_duality(a, &mut art, &mut params)?),
        Command::Wigner(a) => ("wigner", run_wigner(a, cli.plot, &mut art, &mut params)?),
        Command::Curves(a) => ("curves", run_curves(a, cli.plot, &mut art, &mut params)?),
        Command::Fit(a) => ("fit", run_fit(a, &mut art, &mut params)?),
        Command::Montecarlo(a) => ("montecarlo", run_montecarlo(a, &mut art, &mut params)?),
    };
    art.write(&out_root, name, &params, seed)
}

fn grid_csv(header: &str, f: &GridFunction) -> String {
    let mut out = String::with_capacity(f.spec().points * 24);
    out.push_str(header);
    out.push('\n');
    for (i, v) in f.values().iter().enumerate() {
        let _ = writeln!(out, "{},{v}", f.spec().x(i));
    }
    out
}

fn curve_csv(header: &str, c: &Curve) -> String {
    let mut out = String::with_capacity(c.len() * 24);
    out.push_str(header);
    out.push('\n');
    for (a, o) in c.abscissa().iter().zip(c.ordinate()) {
        let _ = writeln!(out, "{a},{o}");
    }
    out
}

fn run_strategy(
    a: &StrategyArgs,
    plot: bool,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    let s = a.build()?;
    let (grid, points, span) = a.grid(&s, DEFAULT_SPAN_SIGMAS)?;
    a.record(&s, params);
    params.insert("grid_points".into(), json!(points));
    params.insert("grid_span_sigmas".into(), json!(span));

    let pdf = s.pdf(grid)?;
    let moments = s.moments()?;
    art.push_json(
        "strategy.json",
        &json!({
            "mu": s.mu(),
            "m": s.m(),
            "coeffs": s.coeffs(),
            "max_order": s.max_order(),
            "pure_order": s.pure_order(),
            "eigenvalue": s.eigenvalue(),
            "mean": moments.mean,
            "risk": moments.risk,
        }),
    );
    art.push_text("amplitude.csv", grid_csv("x,psi", &s.amplitude(grid)?));
    art.push_text("pdf.csv", grid_csv("x,f", &pdf));
    if plot {
        let supply = cdf_supply(&pdf)?;
        let demand = cdf_demand(&pdf)?;
        art.push_text(
            "cdf.svg",
            plot::curve_chart(&[("supply", &supply), ("demand", &demand)], "ln c")?,
        );
    }
    Ok(None)
}

fn run_fisher(
    a: &StrategyArgs,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    let s = a.build()?;
    let (grid, points, span) = a.grid(&s, DEFAULT_SPAN_SIGMAS)?;
    a.record(&s, params);
    params.insert("grid_points".into(), json!(points));
    params.insert("grid_span_sigmas".into(), json!(span));

    let pdf = s.pdf(grid)?;
    let quad = fisher_information_grid(&pdf)?;
    let closed = match s.pure_order() {
        Some(_) => Some(fisher_information_closed(&s)?),
        None => None,
    };
    let mut csv = String::from("x,ds_dx\n");
    for (x, v) in surprisal_derivative(&pdf)?.points() {
        let _ = writeln!(csv, "{x},{v}");
    }
    art.push_text("surprisal.csv", csv);
    art.push_json(
        "fisher.json",
        &json!({
            "quadrature": quad.value,
            "closed_form": closed.as_ref().map(|r| r.value),
            "relative_defect": closed.as_ref().map(|r| (quad.value - r.value).abs() / r.value),
            "cramer_rao_product": cramer_rao_product(&pdf)?,
        }),
    );
    Ok(None)
}

fn run_eigensolve(
    a: &EigensolveArgs,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    if a.k == 0 {
        return Err(CoreError::InvalidParameter("need at least one eigenpair".into()).into());
    }
    // tie the default window to the highest requested level so the solver's
    // span requirement is met for every k
    let sigma_top = ((a.k as f64 - 0.5) / a.mu).sqrt();
    let span = a.grid_span_sigmas.unwrap_or(DEFAULT_SPAN_SIGMAS);
    let points = a.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
    let half = span * sigma_top;
    let grid = GridSpec::new(a.m - half, a.m + half, points)?;
    params.insert("mu".into(), json!(a.mu));
    params.insert("m".into(), json!(a.m));
    params.insert("k".into(), json!(a.k));
    params.insert("grid_points".into(), json!(points));
    params.insert("grid_span_sigmas".into(), json!(span));

    let op = build_hamiltonian(grid, a.mu, a.m)?;
    let pairs = lowest_eigenpairs(&op, a.k)?;
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.eigenvalue).collect();
    art.push_json("eigenvalues.json", &eigenvalues);
    let residuals: Vec<f64> = pairs
        .iter()
        .map(|p| el_residual(&p.eigenvector, p.eigenvalue, a.mu, a.m))
        .collect();
    art.push_json("residuals.json", &residuals);

    let mut csv = String::from("x");
    for i in 0..a.k {
        let _ = write!(csv, ",v{i}");
    }
    csv.push('\n');
    for j in 0..grid.points {
        let _ = write!(csv, "{}", grid.x(j));
        for p in &pairs {
            let _ = write!(csv, ",{}", p.eigenvector.values()[j]);
        }
        csv.push('\n');
    }
    art.push_text("eigenvectors.csv", csv);
    Ok(None)
}

fn run_duality(
    a: &StrategyArgs,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    let s = a.build()?;
    let (grid, points, span) = a.grid(&s, TRANSFORM_SPAN_SIGMAS)?;
    a.record(&s, params);
    params.insert("grid_points".into(), json!(points));
    params.insert("grid_span_sigmas".into(), json!(span));

    let psi = s.amplitude(grid)?;
    let dual = fourier_transform_grid(&psi)?;
    let mut csv = String::from("y,re,im,modulus\n");
    for j in 0..dual.spec().points {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            dual.spec().x(j),
            dual.values_re()[j],
            dual.values_im()[j],
            dual.modulus(j)
        );
    }
    art.push_text("dual.csv", csv);

    let primal_mass = psi.map(|v| v * v)?.integral();
    let moduli_sq: Vec<f64> = (0..dual.spec().points)
        .map(|j| dual.modulus(j).powi(2))
        .collect();
    let dual_mass = trapezoid(&moduli_sq, dual.spec().h());

    let primal_fisher = fisher_information_grid(&s.pdf(grid)?)?.value;
    // derivative functionals need finer dual sampling than the conjugate
    // grid offers, so take the transform densely over eight dual deviations
    let sigma_y = ((s.max_order() as f64 + 0.5) * s.mu()).sqrt();
    let dense_spec = GridSpec::new(
        -DEFAULT_SPAN_SIGMAS * sigma_y,
        DEFAULT_SPAN_SIGMAS * sigma_y,
        DEFAULT_GRID_POINTS,
    )?;
    let dual_fisher =
        fisher_information_grid(&fourier_transform_dense(&psi, dense_spec)?.modulus_squared())?
            .value;

    // the eigenfunction identity |psihat_n| = psi_n holds at the self-dual
    // scale only
    let eigen_defect = match s.pure_order() {
        Some(n) if s.mu() == 1.0 && s.m() == 0.0 => Some(ft_eigen_defect(n, grid)?),
        _ => None,
    };
    art.push_json(
        "invariants.json",
        &json!({
            "uncertainty_product": uncertainty_product(&s)?,
            "parseval": {"primal_mass": primal_mass, "dual_mass": dual_mass},
            "fisher": {"primal": primal_fisher, "dual": dual_fisher},
            "eigen_defect": eigen_defect,
        }),
    );
    Ok(None)
}

fn run_wigner(
    a: &StrategyArgs,
    plot: bool,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    let s = a.build()?;
    let spec = if a.grid_points.is_none() && a.grid_span_sigmas.is_none() {
        default_phase_grid(&s)?
    } else {
        let points = a.grid_points.unwrap_or(DEFAULT_PHASE_POINTS);
        let span = a.grid_span_sigmas.unwrap_or(DEFAULT_PHASE_SPAN_SIGMAS);
        let sigma_y = ((s.max_order() as f64 + 0.5) * s.mu()).sqrt();
        PhaseGridSpec::new(
            GridSpec::new(s.m() - span * s.sigma(), s.m() + span * s.sigma(), points)?,
            GridSpec::new(-span * sigma_y, span * sigma_y, points)?,
        )
    };
    a.record(&s, params);
    params.insert("grid_points".into(), json!(spec.x.points));
    params.insert(
        "grid_span_sigmas".into(),
        json!(a.grid_span_sigmas.unwrap_or(DEFAULT_PHASE_SPAN_SIGMAS)),
    );

    let f = wigner_numeric(&s, &spec)?;
    let mut csv = String::with_capacity(spec.x.points * spec.y.points * 24);
    csv.push_str("x,y,f\n");
    for ix in 0..spec.x.points {
        for iy in 0..spec.y.points {
            let _ = writeln!(csv, "{},{},{}", spec.x.x(ix), spec.y.x(iy), f.value(ix, iy));
        }
    }
    art.push_text("phase.csv", csv);

    let (defect_x, defect_y) = wigner_marginal_defect(&f, &s)?;
    art.push_json(
        "marginals.json",
        &json!({
            "defect_x": defect_x,
            "defect_y": defect_y,
            "min_value": f.min_value(),
            "integral": f.integral(),
        }),
    );
    if let Some(n) = s.pure_order() {
        art.push_json("negative_regions.json", &negative_regions(n));
    }
    if plot {
        art.push_text("phase.svg", plot::phase_heatmap(&f)?);
    }
    Ok(None)
}

fn run_curves(
    a: &CurvesArgs,
    plot: bool,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    let s = a.strategy.build()?;
    let (grid, points, span) = a.strategy.grid(&s, DEFAULT_SPAN_SIGMAS)?;
    let x_fixed = a.x_fixed.unwrap_or(s.m());
    a.strategy.record(&s, params);
    params.insert("grid_points".into(), json!(points));
    params.insert("grid_span_sigmas".into(), json!(span));
    params.insert("x_fixed".into(), json!(x_fixed));
    params.insert("y_fixed".into(), json!(a.y_fixed));

    let pdf = s.pdf(grid)?;
    let supply = cdf_supply(&pdf)?;
    let demand = cdf_demand(&pdf)?;
    art.push_text("supply.csv", curve_csv("ln_c,cdf", &supply));
    art.push_text("demand.csv", curve_csv("ln_c,cdf", &demand));

    let f = wigner_numeric(&s, &default_phase_grid(&s)?)?;
    let cond_demand = conditional_demand_curve(&f, x_fixed)?;
    let cond_supply = conditional_supply_curve(&f, a.y_fixed)?;
    art.push_text("conditional_demand.csv", curve_csv("y,cdf", &cond_demand));
    art.push_text("conditional_supply.csv", curve_csv("ln_c,cdf", &cond_supply));
    art.push_json(
        "giffen.json",
        &json!({
            "x_fixed": x_fixed,
            "y_fixed": a.y_fixed,
            "conditional_demand": monotonicity_report(&cond_demand),
            "conditional_supply": monotonicity_report(&cond_supply),
        }),
    );
    if plot {
        art.push_text(
            "curves.svg",
            plot::curve_chart(&[("supply", &supply), ("demand", &demand)], "ln c")?,
        );
        art.push_text(
            "conditional_supply.svg",
            plot::curve_chart(&[("conditional supply", &cond_supply)], "ln c")?,
        );
        art.push_text(
            "conditional_demand.svg",
            plot::curve_chart(&[("conditional demand", &cond_demand)], "y")?,
        );
    }
    Ok(None)
}

fn run_fit(
    a: &FitArgs,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    params.insert("input".into(), json!(a.input.display().to_string()));
    params.insert("n".into(), json!(a.n));
    let file = File::open(&a.input).map_err(|e| CliError::io(e, &a.input))?;
    let sample = parse_transactions(file)?;
    let est = estimate_moments(&sample)?;
    let s = fit_minimal_strategy(est.mean, est.risk, a.n)?;
    art.push_json(
        "fit.json",
        &json!({
            "records": sample.len(),
            "mean": est.mean,
            "risk": est.risk,
            "se_mean": est.se_mean,
            "n": a.n,
            "mu": s.mu(),
            "m": s.m(),
            "eigenvalue": s.eigenvalue(),
        }),
    );
    Ok(None)
}

fn run_montecarlo(
    a: &MontecarloArgs,
    art: &mut RunArtifacts,
    params: &mut BTreeMap<String, Value>,
) -> Result<Option<u64>, CliError> {
    params.insert("mu".into(), json!(a.mu));
    params.insert("m".into(), json!(a.m));
    params.insert("n".into(), json!(a.n));
    params.insert("trials".into(), json!(a.trials));
    params.insert("n_per_trial".into(), json!(a.n_per_trial));
    params.insert("seed".into(), json!(a.seed));
    let s = Strategy::pure(a.n, a.mu, a.m)?;
    let report = cramer_rao_monte_carlo(&s, a.n_per_trial, a.trials, a.seed)?;
    art.push_json("report.json", &report);
    Ok(Some(a.seed))
}
