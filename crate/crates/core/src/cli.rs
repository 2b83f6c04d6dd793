//! Command-line pipeline: estimation, discretization, pricing, solver
//! diagnostics, measurement, and ambiguity scans.
//!
//! Every subcommand reads the same TOML run configuration and writes its
//! outputs atomically under the configured output directory. CSV bodies are
//! deterministic for a fixed seed regardless of `--jobs`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{BaseUtility, HhlMode, ModelConfig, ModelKind, RunConfig};
use crate::error::{Error, Result};
use crate::estimation::{self, EstimationResult};
use crate::markov::{self, Ar1Params};
use crate::measurement::{self, MixMode, MixedState};
use crate::models::{self, RareDisasterSpec, SdfSpec, SvSpec, UtilityKind, UtilitySpec};
use crate::qsolver::{self, HhlConfig};
use crate::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(
    name = "qap",
    about = "Discrete-state asset pricing with quantum measurement"
)]
pub struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    pub config: PathBuf,
    /// Override the ensemble seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread count (default: all cores). Output is identical for any
    /// value.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Override the output directory from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the latent AR(1) dividend-growth model by maximum likelihood.
    Estimate,
    /// Discretize the fitted AR(1) and write the shock-extended chain.
    Discretize,
    /// Solve each configured model's price-dividend system.
    Solve,
    /// Report sparsity and condition numbers at growing grid sizes.
    Diagnose,
    /// Evaluate measurement operators on each model's pricing-error state.
    Measure,
    /// Sweep mixture weights and report the inconclusive-region boundaries.
    Scan,
    /// Draw a parameter ensemble and report divergences and weights.
    Ensemble,
}

/// Map an error to the process exit code: 2 for configuration problems,
/// 3 for data problems, 4 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Data(_) | Error::DegenerateData(_) | Error::Io(_) => 3,
        _ => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| dispatch(&cfg, &cli.command))
}

fn dispatch(cfg: &RunConfig, cmd: &Command) -> Result<()> {
    match cmd {
        Command::Estimate => cmd_estimate(cfg),
        Command::Discretize => cmd_discretize(cfg),
        Command::Solve => cmd_solve(cfg),
        Command::Diagnose => cmd_diagnose(cfg),
        Command::Measure => cmd_measure(cfg),
        Command::Scan => cmd_scan(cfg),
        Command::Ensemble => cmd_ensemble(cfg),
    }
}

// ---------------------------------------------------------------------------
// data loading and output helpers

/// A dated observation series read from a `date,value` CSV.
#[derive(Debug, Clone)]
pub struct Series {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
}

/// Read a two-column `date,value` CSV. Malformed rows are reported with their
/// 1-based line number.
pub fn read_series(path: &Path) -> Result<Series> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "value" {
        return Err(Error::Data(format!(
            "{}: line 1: expected header `date,value`, found {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record =
            record.map_err(|e| Error::Data(format!("{}: line {line}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(Error::Data(format!(
                "{}: line {line}: expected 2 fields, found {}",
                path.display(),
                record.len()
            )));
        }
        let value: f64 = record[1].trim().parse().map_err(|_| {
            Error::Data(format!(
                "{}: line {line}: cannot parse value {:?} as a number",
                path.display(),
                &record[1]
            ))
        })?;
        if !value.is_finite() {
            return Err(Error::Data(format!(
                "{}: line {line}: non-finite value",
                path.display()
            )));
        }
        dates.push(record[0].to_string());
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Data(format!("{}: no observations", path.display())));
    }
    Ok(Series { dates, values })
}

/// Write a file atomically: write to a sibling temp path, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, &text)
}

// ---------------------------------------------------------------------------
// shared pipeline stages

struct Prepared {
    est: EstimationResult,
    filtered: Vec<f64>,
    alpha0: f64,
    alpha1: f64,
    dividends: Series,
    price_dividend: Series,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let dividends = read_series(&cfg.data.dividends)?;
    let est = estimation::mle_fit(&dividends.values)?;
    let filtered = estimation::kalman_filter(&est.theta_hat, &dividends.values)?;
    let riskfree = read_series(&cfg.data.riskfree)?;
    if riskfree.values.len() != filtered.len() {
        return Err(Error::Data(format!(
            "risk-free series has {} observations but dividends have {}",
            riskfree.values.len(),
            filtered.len()
        )));
    }
    let (alpha0, alpha1) = estimation::calibrate_sdf(&filtered, &riskfree.values)?;
    let price_dividend = read_series(&cfg.data.price_dividend)?;
    Ok(Prepared {
        est,
        filtered,
        alpha0,
        alpha1,
        dividends,
        price_dividend,
    })
}

fn utility_of(mc: &ModelConfig) -> Result<UtilitySpec> {
    let gamma = mc
        .gamma
        .ok_or_else(|| Error::Config(format!("model {:?} needs gamma", mc.name)))?;
    let kind = match mc.kind {
        ModelKind::Crra => UtilityKind::Crra,
        ModelKind::RecursiveIes1 => UtilityKind::RecursiveIesOne,
        ModelKind::Sv => match mc.utility {
            BaseUtility::Crra => UtilityKind::Crra,
            BaseUtility::RecursiveIes1 => UtilityKind::RecursiveIesOne,
        },
        ModelKind::RareDisaster => {
            return Err(Error::Config(
                "rare-disaster models have no utility spec".into(),
            ))
        }
    };
    match mc.beta {
        Some(beta) => UtilitySpec::new(kind, gamma, beta),
        None => match kind {
            UtilityKind::Crra => UtilitySpec::crra(gamma),
            UtilityKind::RecursiveIesOne => UtilitySpec::recursive_ies_one(gamma),
        },
    }
}

fn rd_spec_of(mc: &ModelConfig) -> RareDisasterSpec {
    let rd = mc.rd.clone().unwrap_or_default();
    let mut spec = RareDisasterSpec::default();
    spec.delta = rd.delta;
    spec.gamma = rd.gamma;
    spec.g_d = rd.g_d;
    spec.p_dis = rd.p;
    spec.b_recov = rd.b_recov;
    spec.phi_h = rd.phi_h;
    spec.sigma_h = rd.sigma_h;
    if let Some(n) = rd.n_states {
        spec.n_states = n;
    }
    spec
}

/// The linear system a model hands to the solver, plus its classical solution.
struct ModelSystem {
    /// Row-scaled matrix actually inverted (C for consumption models).
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Unscaled system matrix A, used for feasibility diagnostics.
    raw: DMatrix<f64>,
    nu: DVector<f64>,
}

fn build_model_system(
    mc: &ModelConfig,
    ar1: &Ar1Params,
    alpha0: f64,
    alpha1: f64,
    n_abscissa: usize,
) -> Result<ModelSystem> {
    match mc.kind {
        ModelKind::RareDisaster => {
            let spec = rd_spec_of(mc);
            let (_, a, rhs) = models::rare_disaster_system(&spec)?;
            let (_, nu) = models::solve_rare_disaster(&spec)?;
            Ok(ModelSystem {
                matrix: a.clone(),
                rhs,
                raw: a,
                nu,
            })
        }
        _ => {
            let utility = utility_of(mc)?;
            let sdf = SdfSpec::from_utility(alpha0, alpha1, &utility, ar1)?;
            let base = markov::discretize_ar1(ar1, n_abscissa)?;
            let (shock_probs, sv_spec) = match mc.kind {
                ModelKind::Sv => {
                    let sv = mc.sv.as_ref().ok_or_else(|| {
                        Error::Config(format!("model {:?} needs [models.sv]", mc.name))
                    })?;
                    let spec = SvSpec::new(sv.pi_g, sv.gamma_g, ar1.obs_sd)?;
                    (vec![sv.pi_g, 1.0 - sv.pi_g], Some(spec))
                }
                _ => (vec![0.5, 0.5], None),
            };
            let chain = markov::kron_extend(&base, &[1.0, -1.0], &shock_probs)?;
            let sys = models::build_system(&chain, ar1, &sdf, &utility, sv_spec.as_ref())?;
            let nu = models::solve_classical(&sys)?;
            Ok(ModelSystem {
                matrix: sys.c.clone(),
                rhs: sys.unit_rhs(),
                raw: sys.a.clone(),
                nu,
            })
        }
    }
}

fn sorted_nu(nu: &DVector<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = nu.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite solution"));
    v
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    let prep = prepare(cfg)?;
    let out = &cfg.output.dir;
    let mut json = prep.est.to_json();
    json["schema_version"] = serde_json::json!(SCHEMA_VERSION);
    json["alpha0"] = serde_json::json!(prep.alpha0);
    json["alpha1"] = serde_json::json!(prep.alpha1);
    write_json(&out.join("estimation.json"), &json)?;
    let mut csv = String::from("date,value\n");
    for (date, x) in prep.dividends.dates.iter().zip(&prep.filtered) {
        csv.push_str(&format!("{date},{}\n", fmt(*x)));
    }
    write_atomic(&out.join("filtered_states.csv"), &csv)?;
    Ok(())
}

fn cmd_discretize(cfg: &RunConfig) -> Result<()> {
    let prep = prepare(cfg)?;
    let base = markov::discretize_ar1(&prep.est.theta_hat, cfg.discretization.n_abscissa)?;
    let extended = markov::kron_extend(&base, &[1.0, -1.0], &[0.5, 0.5])?;
    let json = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "n_abscissa": cfg.discretization.n_abscissa,
        "shock_scheme": cfg.discretization.shock_scheme,
        "base": base.to_json(),
        "extended": extended.to_json(),
    });
    write_json(&cfg.output.dir.join("chain.json"), &json)
}

fn cmd_solve(cfg: &RunConfig) -> Result<()> {
    let prep = prepare(cfg)?;
    let mode = cfg.hhl.mode;
    let results: Vec<Result<(serde_json::Value, String)>> = cfg
        .models
        .par_iter()
        .map(|mc| {
            let sys = build_model_system(
                mc,
                &prep.est.theta_hat,
                prep.alpha0,
                prep.alpha1,
                cfg.discretization.n_abscissa,
            )?;
            let nu: Vec<f64> = sys.nu.iter().copied().collect();
            let mut json = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "model": mc.name,
                "mode": match mode {
                    HhlMode::Classical => "classical",
                    HhlMode::Ideal => "ideal",
                    HhlMode::Circuit => "circuit",
                },
                "dimension": nu.len(),
                "nu": nu,
            });
            let mut fidelity_field = String::new();
            let mut success_field = String::new();
            if mode != HhlMode::Classical {
                let embed = qsolver::hermitian_embed(&sys.matrix, &sys.rhs)?;
                let n = sys.nu.len();
                let mut reference = vec![0.0; embed.matrix.nrows()];
                for (i, &v) in sys.nu.iter().enumerate() {
                    reference[n + i] = v;
                }
                let reference = qsolver::prepare_state(&reference)?;
                let (state, success) = match mode {
                    HhlMode::Ideal => (qsolver::ideal_hhl(&embed)?, None),
                    _ => {
                        let hhl_cfg = HhlConfig {
                            clock_qubits: cfg.hhl.clock_qubits,
                            ..HhlConfig::default()
                        };
                        let (s, p) = qsolver::circuit_hhl(&embed, &hhl_cfg)?;
                        (s, Some(p))
                    }
                };
                let fid = qsolver::fidelity(&state, &reference)?;
                json["fidelity"] = serde_json::json!(fid);
                fidelity_field = fmt(fid);
                if let Some(p) = success {
                    json["success_probability"] = serde_json::json!(p);
                    success_field = fmt(p);
                }
            }
            let row = format!(
                "{},{},{},{}\n",
                mc.name,
                match mode {
                    HhlMode::Classical => "classical",
                    HhlMode::Ideal => "ideal",
                    HhlMode::Circuit => "circuit",
                },
                fidelity_field,
                success_field
            );
            Ok((json, row))
        })
        .collect();

    let mut csv = String::from("model,mode,fidelity,success_probability\n");
    for (mc, res) in cfg.models.iter().zip(results) {
        let (json, row) = res?;
        write_json(
            &cfg.output.dir.join(format!("solution_{}.json", mc.name)),
            &json,
        )?;
        csv.push_str(&row);
    }
    write_atomic(&cfg.output.dir.join("fidelity.csv"), &csv)
}

fn cmd_diagnose(cfg: &RunConfig) -> Result<()> {
    let prep = prepare(cfg)?;
    let sizes = [32usize, 64usize];
    let jobs: Vec<(&ModelConfig, usize)> = cfg
        .models
        .iter()
        .flat_map(|mc| sizes.iter().map(move |&n| (mc, n)))
        .collect();
    let rows: Vec<Result<String>> = jobs
        .par_iter()
        .map(|&(mc, n)| {
            let (matrix, rhs) = match mc.kind {
                ModelKind::RareDisaster => {
                    let mut spec = rd_spec_of(mc);
                    spec.n_states = n;
                    let (_, a, rhs) = models::rare_disaster_system(&spec)?;
                    (a, rhs)
                }
                _ => {
                    let sys =
                        build_model_system(mc, &prep.est.theta_hat, prep.alpha0, prep.alpha1, n)?;
                    let rhs = sys.rhs.clone();
                    (sys.raw, rhs)
                }
            };
            // feasibility is assessed on the Hermitian embedding the solver
            // would consume
            let embed = qsolver::hermitian_embed(&matrix, &rhs)?;
            let sparsity = qsolver::sparsity(&embed.matrix, 1e-5);
            let condition = qsolver::condition_number(&embed.matrix)?;
            Ok(format!(
                "{},{},{},{}\n",
                mc.name,
                n,
                sparsity,
                fmt(condition)
            ))
        })
        .collect();
    let mut csv = String::from("model,n,sparsity,condition\n");
    for row in rows {
        csv.push_str(&row?);
    }
    write_atomic(&cfg.output.dir.join("diagnostics.csv"), &csv)
}

/// Tail expectation `⟨e|P₀|e⟩` of a model's pricing-error state, where the
/// worst data outcome is the lowest observed price-dividend grid point.
fn tail_value(mc: &ModelConfig, prep: &Prepared, n_abscissa: usize) -> Result<f64> {
    let sys = build_model_system(
        mc,
        &prep.est.theta_hat,
        prep.alpha0,
        prep.alpha1,
        n_abscissa,
    )?;
    let nu = sorted_nu(&sys.nu);
    let d = measurement::data_state(&prep.price_dividend.values, nu.len())?;
    let error = measurement::pricing_error_state(&d, &nu)?;
    let tail = measurement::tail_operator_unit(error.state.dim(), &[0])?;
    measurement::expectation(&tail, &error.state)
}

fn cmd_measure(cfg: &RunConfig) -> Result<()> {
    let prep = prepare(cfg)?;
    let sv_specs = &cfg.measure.sv_specs;
    // one table row per configured model; SV config entries already carry
    // their own regime, so only non-SV models get the extra regime columns
    let rows: Vec<Result<String>> = cfg
        .models
        .par_iter()
        .map(|mc| {
            let mut fields = vec![mc.name.clone()];
            fields.push(fmt(tail_value(mc, &prep, cfg.discretization.n_abscissa)?));
            for spec in sv_specs {
                match mc.kind {
                    ModelKind::Crra | ModelKind::RecursiveIes1 => {
                        let mut variant = mc.clone();
                        variant.kind = ModelKind::Sv;
                        variant.utility = match mc.kind {
                            ModelKind::Crra => BaseUtility::Crra,
                            _ => BaseUtility::RecursiveIes1,
                        };
                        variant.sv = Some(crate::config::SvConfig {
                            pi_g: spec[0],
                            gamma_g: spec[1],
                        });
                        fields.push(fmt(tail_value(
                            &variant,
                            &prep,
                            cfg.discretization.n_abscissa,
                        )?));
                    }
                    _ => fields.push(String::new()),
                }
            }
            Ok(fields.join(",") + "\n")
        })
        .collect();
    let mut header = String::from("model,constant_vol");
    for spec in sv_specs {
        header.push_str(&format!(",sv_pi{}_g{}", spec[0], spec[1]));
    }
    header.push('\n');
    let mut csv = header;
    for row in rows {
        csv.push_str(&row?);
    }
    write_atomic(&cfg.output.dir.join("tail_table.csv"), &csv)
}

fn cmd_scan(cfg: &RunConfig) -> Result<()> {
    let scan_cfg = cfg
        .scan
        .as_ref()
        .ok_or_else(|| Error::Config("no [scan] section in config".into()))?;
    let bench_cfg = cfg
        .models
        .iter()
        .find(|m| m.name == scan_cfg.benchmark)
        .ok_or_else(|| Error::Config(format!("unknown benchmark {:?}", scan_cfg.benchmark)))?;
    if bench_cfg.kind == ModelKind::RareDisaster {
        return Err(Error::Config(
            "the scan benchmark must be a consumption model; its ensemble varies the AR(1) draw"
                .into(),
        ));
    }
    let delta_range = match (scan_cfg.delta_lo, scan_cfg.delta_hi) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "scan.delta_lo and scan.delta_hi must be set together".into(),
            ))
        }
    };
    let prep = prepare(cfg)?;
    let ensemble = estimation::draw_ensemble_with_rule(
        &prep.est,
        cfg.ensemble.count,
        cfg.ensemble.seed,
        cfg.ensemble.weight_rule,
    )?;

    // dimension fixed by the benchmark model's grid
    let bench_dim = build_model_system(
        bench_cfg,
        &prep.est.theta_hat,
        prep.alpha0,
        prep.alpha1,
        cfg.discretization.n_abscissa,
    )?
    .nu
    .len();
    let d = measurement::data_state(&prep.price_dividend.values, bench_dim)?;

    // benchmark and targets all carry the parameter uncertainty: each becomes
    // the weighted superposition of its per-draw error states
    let superposed_error = |mc: &ModelConfig| -> Result<measurement::PricingErrorState> {
        let states: Vec<Result<crate::qsolver::QuantumState>> = ensemble
            .draws
            .par_iter()
            .map(|theta| {
                let sys = build_model_system(
                    mc,
                    theta,
                    prep.alpha0,
                    prep.alpha1,
                    cfg.discretization.n_abscissa,
                )?;
                let nu = sorted_nu(&sys.nu);
                Ok(measurement::pricing_error_state(&d, &nu)?.state)
            })
            .collect();
        let states: Vec<crate::qsolver::QuantumState> =
            states.into_iter().collect::<Result<Vec<_>>>()?;
        let raw_norm = {
            let mut v = nalgebra::DVector::from_element(
                states[0].dim(),
                num_complex::Complex::new(0.0, 0.0),
            );
            for (s, &w) in states.iter().zip(&ensemble.weights) {
                v += s.amplitudes.map(|a| a * num_complex::Complex::new(w, 0.0));
            }
            v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
        };
        match measurement::mixed_state(&states, &ensemble.weights, MixMode::Superposed)? {
            MixedState::Superposed(state) => Ok(measurement::PricingErrorState { state, raw_norm }),
            MixedState::Density(_) => unreachable!("superposed mode requested"),
        }
    };

    let bench_error = superposed_error(bench_cfg)?;
    let benchmark = bench_error.state.clone();

    let targets: Vec<&ModelConfig> = cfg
        .models
        .iter()
        .filter(|m| m.name != scan_cfg.benchmark)
        .collect();
    let mut summaries = Vec::new();
    for mc in &targets {
        let error = superposed_error(mc)?;
        let scan = measurement::ambiguity_scan(
            &error,
            &d,
            &benchmark,
            scan_cfg.reference_p,
            scan_cfg.grid_points,
            delta_range,
        )?;
        let mut csv = String::from("p,classical,envelope_low,envelope_high,reference\n");
        for k in 0..scan.p_grid.len() {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(scan.p_grid[k]),
                fmt(scan.classical_loss[k]),
                fmt(scan.envelope_low[k]),
                fmt(scan.envelope_high[k]),
                fmt(scan.reference_level)
            ));
        }
        write_atomic(&cfg.output.dir.join(format!("scan_{}.csv", mc.name)), &csv)?;
        let mut panels = Vec::new();
        for &p_ref in scan_cfg
            .reference_grid
            .iter()
            .filter(|&&p| (p - scan_cfg.reference_p).abs() > 1e-12)
        {
            let extra = measurement::ambiguity_scan(
                &error,
                &d,
                &benchmark,
                p_ref,
                scan_cfg.grid_points,
                delta_range,
            )?;
            panels.push(serde_json::json!({
                "reference_p": p_ref,
                "p_l": extra.p_l,
                "p_c": extra.p_c,
                "p_u": extra.p_u,
                "clamped_low": extra.clamped_low,
                "clamped_high": extra.clamped_high,
                "clamped_center": extra.clamped_center,
            }));
        }
        summaries.push(serde_json::json!({
            "target": mc.name,
            "benchmark": scan_cfg.benchmark,
            "p_l": scan.p_l,
            "p_c": scan.p_c,
            "p_u": scan.p_u,
            "reference_level": scan.reference_level,
            "delta_range": scan.delta_range.map(|(lo, hi)| vec![lo, hi]),
            "clamped_low": scan.clamped_low,
            "clamped_high": scan.clamped_high,
            "clamped_center": scan.clamped_center,
            "target_raw_norm": error.raw_norm,
            "benchmark_superposition_norm": bench_error.raw_norm,
            "panels": panels,
        }));
    }
    let json = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "benchmark": scan_cfg.benchmark,
        "reference_p": scan_cfg.reference_p,
        "ensemble_count": cfg.ensemble.count,
        "seed": cfg.ensemble.seed,
        "scans": summaries,
    });
    write_json(&cfg.output.dir.join("scan_summary.json"), &json)
}

fn cmd_ensemble(cfg: &RunConfig) -> Result<()> {
    let prep = prepare(cfg)?;
    let ensemble = estimation::draw_ensemble_with_rule(
        &prep.est,
        cfg.ensemble.count,
        cfg.ensemble.seed,
        cfg.ensemble.weight_rule,
    )?;
    let mut csv = String::from("index,mean_level,obs_sd,innov_sd,rho,kl,weight\n");
    for (i, theta) in ensemble.draws.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            fmt(theta.mean_level),
            fmt(theta.obs_sd),
            fmt(theta.innov_sd),
            fmt(theta.rho),
            fmt(ensemble.kl_divergences[i]),
            fmt(ensemble.weights[i])
        ));
    }
    write_atomic(&cfg.output.dir.join("ensemble.csv"), &csv)
}
