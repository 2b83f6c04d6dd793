//! End-to-end acceptance gate.
//!
//! Thirteen pipeline-level checks, one printed PASS/FAIL line each. The test
//! fails if any check fails or the whole gate exceeds its wall-clock budget.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qap::cli::read_series;
use qap::config::{BaseUtility, ModelConfig, ModelKind, RunConfig};
use qap::estimation::{self, EstimationResult};
use qap::markov::{self, Ar1Params};
use qap::measurement::{self, PricingErrorState};
use qap::models::{self, RareDisasterSpec, SdfSpec, SvSpec, UtilitySpec};
use qap::qsolver::{self, HermitianSystem, HhlConfig};

type CheckResult = Result<(bool, String), qap::Error>;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("repository root")
}

/// Reference calibration of the dividend-growth state space, used by the
/// fixture-based checks (published point estimates for quarterly data).
fn reference_ar1() -> Ar1Params {
    Ar1Params::new(0.01037, 0.64079, 0.01520, 0.03630).expect("valid calibration")
}

/// Reference log-SDF level and slope paired with the calibration above.
const REF_ALPHA0: f64 = -0.8974;
const REF_ALPHA1: f64 = 1.2038;

struct Pipeline {
    cfg: RunConfig,
    est: EstimationResult,
    alpha0: f64,
    alpha1: f64,
    price_dividend: Vec<f64>,
}

fn load_pipeline() -> Result<Pipeline, qap::Error> {
    let cfg = RunConfig::load(&repo_root().join("config.toml"))?;
    let dividends = read_series(&cfg.data.dividends)?;
    let est = estimation::mle_fit(&dividends.values)?;
    let filtered = estimation::kalman_filter(&est.theta_hat, &dividends.values)?;
    let riskfree = read_series(&cfg.data.riskfree)?;
    let (alpha0, alpha1) = estimation::calibrate_sdf(&filtered, &riskfree.values)?;
    let price_dividend = read_series(&cfg.data.price_dividend)?.values;
    Ok(Pipeline {
        cfg,
        est,
        alpha0,
        alpha1,
        price_dividend,
    })
}

fn utility_for(mc: &ModelConfig) -> Result<UtilitySpec, qap::Error> {
    let gamma = mc.gamma.expect("configured consumption model has gamma");
    match mc.kind {
        ModelKind::Crra => UtilitySpec::crra(gamma),
        ModelKind::RecursiveIes1 => UtilitySpec::recursive_ies_one(gamma),
        ModelKind::Sv => match mc.utility {
            BaseUtility::Crra => UtilitySpec::crra(gamma),
            BaseUtility::RecursiveIes1 => UtilitySpec::recursive_ies_one(gamma),
        },
        ModelKind::RareDisaster => unreachable!("rare-disaster has no utility"),
    }
}

fn rd_spec_for(mc: &ModelConfig) -> RareDisasterSpec {
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

/// Solver-facing view of one configured model: the row-scaled matrix handed
/// to the quantum solver, its right-hand side, the unscaled matrix used for
/// feasibility diagnostics, and the classical solution.
struct SolverSystem {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    raw: DMatrix<f64>,
    nu: DVector<f64>,
}

fn solver_system(
    mc: &ModelConfig,
    ar1: &Ar1Params,
    alpha0: f64,
    alpha1: f64,
    n_abscissa: usize,
) -> Result<SolverSystem, qap::Error> {
    match mc.kind {
        ModelKind::RareDisaster => {
            let spec = rd_spec_for(mc);
            let (_, a, rhs) = models::rare_disaster_system(&spec)?;
            let (_, nu) = models::solve_rare_disaster(&spec)?;
            Ok(SolverSystem {
                matrix: a.clone(),
                rhs,
                raw: a,
                nu,
            })
        }
        _ => {
            let utility = utility_for(mc)?;
            let sdf = SdfSpec::from_utility(alpha0, alpha1, &utility, ar1)?;
            let base = markov::discretize_ar1(ar1, n_abscissa)?;
            let (shock_probs, sv_spec) = match mc.kind {
                ModelKind::Sv => {
                    let sv = mc.sv.as_ref().expect("SV model has [models.sv]");
                    (
                        vec![sv.pi_g, 1.0 - sv.pi_g],
                        Some(SvSpec::new(sv.pi_g, sv.gamma_g, ar1.obs_sd)?),
                    )
                }
                _ => (vec![0.5, 0.5], None),
            };
            let chain = markov::kron_extend(&base, &[1.0, -1.0], &shock_probs)?;
            let sys = models::build_system(&chain, ar1, &sdf, &utility, sv_spec.as_ref())?;
            let nu = models::solve_classical(&sys)?;
            Ok(SolverSystem {
                matrix: sys.c.clone(),
                rhs: sys.unit_rhs(),
                raw: sys.a.clone(),
                nu,
            })
        }
    }
}

/// The classical solution expressed in the embedded register layout, for
/// fidelity comparison against solver output.
fn embedded_reference(
    embed: &HermitianSystem,
    nu: &DVector<f64>,
) -> Result<qsolver::QuantumState, qap::Error> {
    let mut v = vec![0.0; embed.matrix.nrows()];
    for (i, &x) in nu.iter().enumerate() {
        v[nu.len() + i] = x;
    }
    qsolver::prepare_state(&v)
}

fn run_cli(args: &[&str]) -> Result<(), qap::Error> {
    let out = Command::new(env!("CARGO_BIN_EXE_qap"))
        .current_dir(repo_root())
        .args(args)
        .output()
        .map_err(|e| qap::Error::Io(e))?;
    if !out.status.success() {
        return Err(qap::Error::Config(format!(
            "CLI {:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// individual checks

fn check_solver_equivalence(pipe: &Pipeline) -> CheckResult {
    let started = Instant::now();
    let mut worst: f64 = 1.0;
    for mc in &pipe.cfg.models {
        let sys = solver_system(
            mc,
            &pipe.est.theta_hat,
            pipe.alpha0,
            pipe.alpha1,
            pipe.cfg.discretization.n_abscissa,
        )?;
        let embed = qsolver::hermitian_embed(&sys.matrix, &sys.rhs)?;
        let ideal = qsolver::ideal_hhl(&embed)?;
        let reference = embedded_reference(&embed, &sys.nu)?;
        let fid = qsolver::fidelity(&ideal, &reference)?;
        worst = worst.min(fid);
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst >= 1.0 - 1e-9 && elapsed < 5.0;
    Ok((
        pass,
        format!("five bundled specs, worst ideal-vs-classical fidelity {worst:.2e} shy of 1 by {:.2e}, {elapsed:.2}s", 1.0 - worst),
    ))
}

fn check_dyadic_fixture() -> CheckResult {
    let started = Instant::now();
    // eigenvalues ±1/4 with evolution time 2π give eigenphases ±1/4: exactly
    // representable with two clock qubits in the two's-complement window
    let sys = HermitianSystem {
        matrix: DMatrix::from_diagonal(&DVector::from_row_slice(&[0.25, -0.25])),
        rhs: DVector::from_row_slice(&[3.0, 1.0]),
        original_dim: 2,
    };
    let ideal = qsolver::ideal_hhl(&sys)?;
    let mut fids = Vec::new();
    for n_c in 1..=5usize {
        let cfg = HhlConfig {
            clock_qubits: n_c,
            evolution_time: Some(2.0 * std::f64::consts::PI),
            rotation_constant: Some(0.2),
            shots: None,
        };
        let (state, _) = qsolver::circuit_hhl(&sys, &cfg)?;
        fids.push(qsolver::fidelity(&state, &ideal)?);
    }
    let exact = fids[1] >= 1.0 - 1e-9;
    let monotone = fids.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let elapsed = started.elapsed().as_secs_f64();
    Ok((
        exact && monotone && elapsed < 5.0,
        format!(
            "2-clock fidelity {:.12}, clock sweep {:?} monotone: {monotone}, {elapsed:.2}s",
            fids[1],
            fids.iter()
                .map(|f| (f * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ),
    ))
}

fn check_circuit_at_scale(pipe: &Pipeline) -> CheckResult {
    let started = Instant::now();
    // reference calibration at 4 abscissa: 8-state logical systems, 16-dim
    // Hermitian embeddings
    let ar1 = reference_ar1();
    let hhl = HhlConfig {
        clock_qubits: 4,
        ..HhlConfig::default()
    };
    let mut best_consumption: f64 = 0.0;
    let mut worst_consumption: f64 = 1.0;
    let mut rd_fid = 1.0;
    let mut details = Vec::new();
    for mc in &pipe.cfg.models {
        let mut mc = mc.clone();
        if mc.kind == ModelKind::RareDisaster {
            // same disaster calibration, sized to the 16-dim embedding
            if let Some(rd) = &mut mc.rd {
                rd.n_states = Some(8);
            }
        }
        let sys = solver_system(&mc, &ar1, REF_ALPHA0, REF_ALPHA1, 4)?;
        let embed = qsolver::hermitian_embed(&sys.matrix, &sys.rhs)?;
        let (state, _) = qsolver::circuit_hhl(&embed, &hhl)?;
        let reference = embedded_reference(&embed, &sys.nu)?;
        let fid = qsolver::fidelity(&state, &reference)?;
        details.push(format!("{} {:.3}", mc.name, fid));
        if mc.kind == ModelKind::RareDisaster {
            rd_fid = fid;
        } else {
            best_consumption = best_consumption.max(fid);
            worst_consumption = worst_consumption.min(fid);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst_consumption >= 0.75 && rd_fid <= best_consumption - 0.3 && elapsed < 60.0;
    Ok((pass, format!("{}; {elapsed:.2}s", details.join(", "))))
}

fn check_gordon_growth() -> CheckResult {
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 0.9, 0.96] {
        let sys = models::assemble_system(
            DMatrix::from_element(1, 1, kappa),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )?;
        let nu = models::solve_classical(&sys)?;
        worst = worst.max((nu[0] - kappa / (1.0 - kappa)).abs());
    }
    Ok((
        worst <= 1e-12,
        format!("constant-kernel solution error {worst:.2e}"),
    ))
}

fn check_h_star() -> CheckResult {
    let h = models::compute_h_star(0.0363, 0.66, 4.0);
    Ok(((h - 0.09).abs() <= 1e-3, format!("H* = {h:.5}")))
}

fn check_ambiguity_identity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let obs: Vec<f64> = (0..8).map(|_| rng.gen_range(0.5..5.0)).collect();
        let d = measurement::data_state(&obs, 8)?;
        let cvec: Vec<Complex<f64>> = (0..8)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let benchmark = qsolver::prepare_state_complex(&cvec)?;
        let evec: Vec<Complex<f64>> = (0..8)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let error = PricingErrorState {
            state: qsolver::prepare_state_complex(&evec)?,
            raw_norm: 1.0,
        };
        let alpha: f64 = rng.gen_range(0.0..1.0);
        let delta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let dec = measurement::ambiguity_decomposition(alpha, delta, &d, &benchmark, &error)?;
        let (s, _) = measurement::superposition_state(alpha, delta, &d, &benchmark)?;
        let direct: Complex<f64> = s
            .iter()
            .zip(error.state.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        worst = worst.max((direct.norm_sqr() - dec.total).abs());
    }
    Ok((
        worst <= 1e-12,
        format!("1000 randomized instances, worst identity gap {worst:.2e}"),
    ))
}

#[derive(Debug)]
struct ScanSummary {
    p_l: f64,
    p_c: f64,
    p_u: f64,
    clamped: bool,
}

fn parse_scan_summary(dir: &Path, target: &str) -> Result<ScanSummary, qap::Error> {
    let text = std::fs::read_to_string(dir.join("scan_summary.json"))?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| qap::Error::Data(format!("scan summary parse: {e}")))?;
    let entry = json["scans"]
        .as_array()
        .and_then(|arr| arr.iter().find(|s| s["target"] == target))
        .ok_or_else(|| qap::Error::Data(format!("no scan entry for {target}")))?;
    Ok(ScanSummary {
        p_l: entry["p_l"].as_f64().unwrap_or(f64::NAN),
        p_c: entry["p_c"].as_f64().unwrap_or(f64::NAN),
        p_u: entry["p_u"].as_f64().unwrap_or(f64::NAN),
        clamped: entry["clamped_low"].as_bool().unwrap_or(true)
            || entry["clamped_high"].as_bool().unwrap_or(true)
            || entry["clamped_center"].as_bool().unwrap_or(true),
    })
}

fn check_scan_reproduction(tmp: &Path) -> CheckResult {
    let root = repo_root();
    let full_dir = tmp.join("scan_full");
    run_cli(&["scan", "--out", full_dir.to_str().unwrap()])?;
    let full = parse_scan_summary(&full_dir, "ies1_g2")?;

    // same configuration with the phase restricted to [3π/8, 5π/8]
    let base = std::fs::read_to_string(root.join("config.toml"))?;
    let restricted_cfg = base
        .replace("\"data/", &format!("\"{}/data/", root.display()))
        .replace(
            "reference_p = 0.5",
            "reference_p = 0.5\ndelta_lo = 1.1780972450961724\ndelta_hi = 1.9634954084936207",
        );
    let cfg_path = tmp.join("config_restricted.toml");
    std::fs::write(&cfg_path, restricted_cfg)?;
    let restr_dir = tmp.join("scan_restricted");
    run_cli(&[
        "scan",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        restr_dir.to_str().unwrap(),
    ])?;
    let restr = parse_scan_summary(&restr_dir, "ies1_g2")?;

    let pass = (0.44..=0.54).contains(&full.p_c)
        && full.p_l < 0.2
        && full.p_u > 0.8
        && !full.clamped
        && !restr.clamped
        && restr.p_l > full.p_l
        && restr.p_u < full.p_u;
    Ok((
        pass,
        format!(
            "full [p_L, p_C, p_U] = [{:.3}, {:.3}, {:.3}], restricted [{:.3}, {:.3}] strictly inside",
            full.p_l, full.p_c, full.p_u, restr.p_l, restr.p_u
        ),
    ))
}

fn check_tail_ordering(tmp: &Path) -> CheckResult {
    let dir = tmp.join("measure");
    run_cli(&["measure", "--out", dir.to_str().unwrap()])?;
    let text = std::fs::read_to_string(dir.join("tail_table.csv"))?;
    let mut tails = std::collections::HashMap::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() >= 2 {
            if let Ok(v) = fields[1].parse::<f64>() {
                tails.insert(fields[0].to_string(), v);
            }
        }
    }
    let rd = *tails
        .get("rare_disaster")
        .ok_or_else(|| qap::Error::Data("tail table lacks rare_disaster".into()))?;
    let consumption = ["crra_g10", "ies1_g2", "ies1_g10", "sv_crra_g10"];
    let min_consumption = consumption
        .iter()
        .map(|m| tails[*m])
        .fold(f64::INFINITY, f64::min);
    let pass = rd < 0.2 * min_consumption && tails["ies1_g10"] > tails["crra_g10"];
    Ok((
        pass,
        format!(
            "rare-disaster {rd:.2e} vs 0.2×min-consumption {:.2e}; IES γ=10 {:.3} > CRRA {:.3}",
            0.2 * min_consumption,
            tails["ies1_g10"],
            tails["crra_g10"]
        ),
    ))
}

fn check_feasibility_diagnostics(pipe: &Pipeline) -> CheckResult {
    // reference calibration; feasibility is assessed on the embedding the
    // solver would consume
    let ar1 = reference_ar1();
    let mut max_consumption_64: f64 = 0.0;
    let mut crra_sparsity = (0usize, 0usize);
    for mc in &pipe.cfg.models {
        if mc.kind == ModelKind::RareDisaster {
            continue;
        }
        for n in [32usize, 64] {
            let sys = solver_system(mc, &ar1, REF_ALPHA0, REF_ALPHA1, n)?;
            let embed = qsolver::hermitian_embed(&sys.raw, &sys.rhs)?;
            if n == 64 {
                max_consumption_64 =
                    max_consumption_64.max(qsolver::condition_number(&embed.matrix)?);
            }
            if mc.name == "crra_g10" {
                let s = qsolver::sparsity(&embed.matrix, 1e-5);
                if n == 32 {
                    crra_sparsity.0 = s;
                } else {
                    crra_sparsity.1 = s;
                }
            }
        }
    }
    let rd_cfg = pipe
        .cfg
        .models
        .iter()
        .find(|m| m.kind == ModelKind::RareDisaster)
        .ok_or_else(|| qap::Error::Config("no rare-disaster model configured".into()))?;
    let mut rd_spec = rd_spec_for(rd_cfg);
    rd_spec.n_states = 64;
    let (_, a, rhs) = models::rare_disaster_system(&rd_spec)?;
    let embed = qsolver::hermitian_embed(&a, &rhs)?;
    let rd_kappa = qsolver::condition_number(&embed.matrix)?;
    let growth = crra_sparsity.1 as f64 / crra_sparsity.0 as f64;
    let pass = rd_kappa > 10.0 * max_consumption_64 && growth < 1.8;
    Ok((
        pass,
        format!(
            "κ at 64 abscissa: rare-disaster {rd_kappa:.1} vs max consumption {max_consumption_64:.2}; sparsity {} → {} (growth {growth:.2})",
            crra_sparsity.0, crra_sparsity.1
        ),
    ))
}

fn check_sv_degeneracy(pipe: &Pipeline) -> CheckResult {
    let ar1 = reference_ar1();
    let utility = UtilitySpec::crra(10.0)?;
    let sdf = SdfSpec::from_utility(REF_ALPHA0, REF_ALPHA1, &utility, &ar1)?;
    let base = markov::discretize_ar1(&ar1, 4)?;
    let chain = markov::kron_extend(&base, &[1.0, -1.0], &[0.8, 0.2])?;
    let sv_unit = SvSpec::new(0.8, 1.0, ar1.obs_sd)?;
    let sys_sv = models::build_system(&chain, &ar1, &sdf, &utility, Some(&sv_unit))?;
    let sys_cv = models::build_system(&chain, &ar1, &sdf, &utility, None)?;
    let mat_gap = (&sys_sv.h - &sys_cv.h)
        .abs()
        .max()
        .max((&sys_sv.m - &sys_cv.m).abs().max())
        .max((&sys_sv.a - &sys_cv.a).abs().max());

    let nu_sv: Vec<f64> = {
        let mut v: Vec<f64> = models::solve_classical(&sys_sv)?.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let nu_cv: Vec<f64> = {
        let mut v: Vec<f64> = models::solve_classical(&sys_cv)?.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let d = measurement::data_state(&pipe.price_dividend, nu_cv.len())?;
    let benchmark = measurement::model_state(&nu_cv)?;
    let scan_of = |nu: &[f64]| -> Result<measurement::AmbiguityScan, qap::Error> {
        let err = measurement::pricing_error_state(&d, nu)?;
        measurement::ambiguity_scan(&err, &d, &benchmark, 0.5, 201, None)
    };
    let scan_sv = scan_of(&nu_sv)?;
    let scan_cv = scan_of(&nu_cv)?;
    let curve_gap = scan_sv
        .classical_loss
        .iter()
        .zip(&scan_cv.classical_loss)
        .chain(scan_sv.envelope_low.iter().zip(&scan_cv.envelope_low))
        .chain(scan_sv.envelope_high.iter().zip(&scan_cv.envelope_high))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let pass = mat_gap <= 1e-14 && curve_gap <= 1e-12;
    Ok((
        pass,
        format!("unit volatility ratio: matrix gap {mat_gap:.2e}, scan-curve gap {curve_gap:.2e}"),
    ))
}

fn check_estimation_recovery() -> CheckResult {
    let truth = reference_ar1();
    let series = estimation::simulate_series(&truth, 5000, 20240229);
    let est = estimation::mle_fit(&series)?;
    let diffs = [
        est.theta_hat.mean_level - truth.mean_level,
        est.theta_hat.obs_sd - truth.obs_sd,
        est.theta_hat.innov_sd - truth.innov_sd,
        est.theta_hat.rho - truth.rho,
    ];
    let ses = [
        est.standard_errors[0],
        est.standard_errors[1],
        est.standard_errors[2],
        est.standard_errors[3],
    ];
    let worst_z = diffs
        .iter()
        .zip(&ses)
        .map(|(d, s)| (d / s).abs())
        .fold(0.0f64, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let theta_hat = DVector::zeros(4);
    let identity = DMatrix::identity(4, 4);
    let mut total = 0.0;
    const DRAWS: usize = 100_000;
    for _ in 0..DRAWS {
        let z = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
        total += estimation::kl_divergence(&z, &theta_hat, &identity);
    }
    let kl_mean = total / DRAWS as f64;
    let pass = worst_z <= 3.0 && (kl_mean - 2.0).abs() <= 0.05;
    Ok((
        pass,
        format!("worst |estimate − truth|/SE = {worst_z:.2}; KL mean over 1e5 draws {kl_mean:.4}"),
    ))
}

fn check_determinism(tmp: &Path) -> CheckResult {
    let dir1 = tmp.join("jobs1");
    let dir8 = tmp.join("jobs8");
    for (jobs, dir) in [("1", &dir1), ("8", &dir8)] {
        run_cli(&["solve", "--jobs", jobs, "--out", dir.to_str().unwrap()])?;
        run_cli(&["scan", "--jobs", jobs, "--out", dir.to_str().unwrap()])?;
    }
    let mut compared = 0usize;
    for name in [
        "fidelity.csv",
        "scan_ies1_g2.csv",
        "scan_ies1_g10.csv",
        "scan_sv_crra_g10.csv",
        "scan_rare_disaster.csv",
    ] {
        let a = std::fs::read(dir1.join(name))?;
        let b = std::fs::read(dir8.join(name))?;
        if a != b {
            return Ok((
                false,
                format!("{name} differs between --jobs 1 and --jobs 8"),
            ));
        }
        compared += 1;
    }
    Ok((
        true,
        format!("{compared} CSV bodies byte-identical across --jobs 1 and --jobs 8"),
    ))
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_gate() {
    let suite_started = Instant::now();
    let tmp = tempfile::tempdir().expect("temp dir");
    let pipeline = load_pipeline().expect("bundled configuration loads");

    let checks: Vec<(&str, CheckResult)> = vec![
        ("solver equivalence", check_solver_equivalence(&pipeline)),
        ("dyadic circuit fixture", check_dyadic_fixture()),
        ("circuit solver at scale", check_circuit_at_scale(&pipeline)),
        ("constant-kernel closed form", check_gordon_growth()),
        ("resilience constant", check_h_star()),
        ("ambiguity identity", check_ambiguity_identity()),
        ("scan reproduction", check_scan_reproduction(tmp.path())),
        ("tail-table ordering", check_tail_ordering(tmp.path())),
        (
            "feasibility diagnostics",
            check_feasibility_diagnostics(&pipeline),
        ),
        (
            "volatility-regime degeneracy",
            check_sv_degeneracy(&pipeline),
        ),
        ("estimation recovery", check_estimation_recovery()),
        (
            "determinism across thread counts",
            check_determinism(tmp.path()),
        ),
    ];

    let mut all_pass = true;
    for (idx, (name, outcome)) in checks.iter().enumerate() {
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (*pass, detail.clone()),
            Err(e) => (false, format!("errored: {e}")),
        };
        all_pass &= pass;
        println!(
            "criterion {:2} [{}]: {} — {}",
            idx + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            detail
        );
    }

    let elapsed = suite_started.elapsed().as_secs_f64();
    let runtime_ok = elapsed < 300.0;
    all_pass &= runtime_ok;
    println!(
        "criterion 13 [suite runtime]: {} — {elapsed:.1}s (budget 300s)",
        if runtime_ok { "PASS" } else { "FAIL" }
    );

    assert!(
        all_pass,
        "one or more acceptance checks failed (see lines above)"
    );
}
