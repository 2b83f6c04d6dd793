//! Kalman-filter maximum likelihood for the dividend-growth state-space
//! model, SDF calibration from risk-free rates, and the parameter-uncertainty
//! ensemble with Kullback-Leibler weights.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::Ar1Params;

const LN_2PI: f64 = 1.8378770664093453;

/// MLE output: point estimate, asymptotic covariance, and standard errors in
/// the canonical `(a, b, c, ρ₁)` ordering.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub theta_hat: Ar1Params,
    pub covariance: DMatrix<f64>,
    pub loglik: f64,
    pub standard_errors: [f64; 4],
    /// Set when any variance estimate sits at its lower bound or ρ̂ at the
    /// edge of (0, 1).
    pub boundary_warning: bool,
}

impl EstimationResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean_level": self.theta_hat.mean_level,
            "obs_sd": self.theta_hat.obs_sd,
            "innov_sd": self.theta_hat.innov_sd,
            "rho": self.theta_hat.rho,
            "loglik": self.loglik,
            "standard_errors": self.standard_errors,
            "covariance": (0..4).map(|i| (0..4).map(|j| self.covariance[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "boundary_warning": self.boundary_warning,
        })
    }
}

/// How ensemble weights are derived from the per-draw KL divergences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `p_j = KL_j / Σ KL_j` (more divergent draws weigh more).
    #[default]
    Kl,
    InverseKl,
    Uniform,
}

/// Parameter draws with their divergences and mixture weights.
#[derive(Debug, Clone)]
pub struct ModelEnsemble {
    pub draws: Vec<Ar1Params>,
    pub kl_divergences: Vec<f64>,
    pub weights: Vec<f64>,
}

fn filter_pass(
    params: &Ar1Params,
    series: &[f64],
    mut record: Option<&mut Vec<f64>>,
) -> Result<f64> {
    if series.iter().any(|v| !v.is_finite()) {
        let pos = series.iter().position(|v| !v.is_finite()).unwrap();
        return Err(Error::Data(format!(
            "non-finite observation at index {pos}"
        )));
    }
    let (a, b, c, rho) = (
        params.mean_level,
        params.obs_sd,
        params.innov_sd,
        params.rho,
    );
    let mut x = 0.0_f64;
    let mut p = 0.0_f64;
    let mut loglik = 0.0;
    for &y in series {
        let x_pred = rho * x;
        let p_pred = rho * rho * p + c * c;
        let s = p_pred + b * b;
        if s <= 1e-300 {
            return Err(Error::DegenerateVariance(
                "innovation variance collapsed to zero; b and c cannot both vanish".into(),
            ));
        }
        let v = y - a - x_pred;
        loglik += -0.5 * (LN_2PI + s.ln() + v * v / s);
        let k = p_pred / s;
        x = x_pred + k * v;
        p = (1.0 - k) * p_pred;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(x);
        }
    }
    Ok(loglik)
}

/// Gaussian log-likelihood of the state-space model
/// (`Δd_t = a + x_t + b e_t`, `x_t = ρ x_{t−1} + c ε_t`), filter initialized
/// at state 0 and covariance 0.
pub fn kalman_loglik(params: &Ar1Params, series: &[f64]) -> Result<f64> {
    if series.len() < 8 {
        return Err(Error::Data("need at least 8 observations".into()));
    }
    filter_pass(params, series, None)
}

/// Kalman-filtered state estimates `x̂_t`.
pub fn kalman_filter(params: &Ar1Params, series: &[f64]) -> Result<Vec<f64>> {
    let mut states = Vec::with_capacity(series.len());
    filter_pass(params, series, Some(&mut states))?;
    Ok(states)
}

/// Simulate a series from the state-space model (used for fixtures and the
/// bundled sample data).
pub fn simulate_series(params: &Ar1Params, len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let eps: f64 = rng.sample(StandardNormal);
        x = params.rho * x + params.innov_sd * eps;
        let e: f64 = rng.sample(StandardNormal);
        out.push(params.mean_level + x + params.obs_sd * e);
    }
    out
}

const B_FLOOR: f64 = 1e-8;
const RHO_EDGE: f64 = 1e-8;

fn neg_loglik(theta: &[f64; 4], series: &[f64]) -> f64 {
    let (a, b, c, rho) = (theta[0], theta[1], theta[2], theta[3]);
    let mut penalty = 0.0;
    if b < B_FLOOR {
        penalty += 1.0 + (B_FLOOR - b);
    }
    if c < B_FLOOR {
        penalty += 1.0 + (B_FLOOR - c);
    }
    if rho < RHO_EDGE {
        penalty += 1.0 + (RHO_EDGE - rho);
    }
    if rho > 1.0 - RHO_EDGE {
        penalty += 1.0 + (rho - 1.0 + RHO_EDGE);
    }
    if penalty > 0.0 {
        return 1e12 * penalty;
    }
    let p = Ar1Params {
        mean_level: a,
        obs_sd: b,
        innov_sd: c,
        rho,
    };
    match filter_pass(&p, series, None) {
        Ok(ll) if ll.is_finite() => -ll,
        _ => 1e12,
    }
}

/// Standard Nelder-Mead simplex minimization.
fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(
    f: &F,
    start: [f64; 4],
    scale: [f64; 4],
) -> ([f64; 4], f64) {
    let n = 4;
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(n + 1);
    simplex.push((start, f(&start)));
    for i in 0..n {
        let mut v = start;
        v[i] += scale[i];
        simplex.push((v, f(&v)));
    }
    let (alpha, gamma, rho_c, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..4000 {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if (simplex[n].1 - simplex[0].1).abs() < 1e-10 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [0.0; 4];
        for s in simplex.iter().take(n) {
            for j in 0..4 {
                centroid[j] += s.0[j] / n as f64;
            }
        }
        let worst = simplex[n];
        let mut refl = [0.0; 4];
        for j in 0..4 {
            refl[j] = centroid[j] + alpha * (centroid[j] - worst.0[j]);
        }
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let mut exp = [0.0; 4];
            for j in 0..4 {
                exp[j] = centroid[j] + gamma * (refl[j] - centroid[j]);
            }
            let f_exp = f(&exp);
            simplex[n] = if f_exp < f_refl {
                (exp, f_exp)
            } else {
                (refl, f_refl)
            };
        } else if f_refl < simplex[n - 1].1 {
            simplex[n] = (refl, f_refl);
        } else {
            let mut con = [0.0; 4];
            for j in 0..4 {
                con[j] = centroid[j] + rho_c * (worst.0[j] - centroid[j]);
            }
            let f_con = f(&con);
            if f_con < worst.1 {
                simplex[n] = (con, f_con);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    for j in 0..4 {
                        s.0[j] = best[j] + sigma * (s.0[j] - best[j]);
                    }
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex[0]
}

/// Maximum-likelihood fit by derivative-free simplex search from 8 spread
/// starting points; covariance from the inverse numerical Hessian.
pub fn mle_fit(series: &[f64]) -> Result<EstimationResult> {
    if series.len() < 40 {
        return Err(Error::Data("need at least 40 observations for MLE".into()));
    }
    let mean: f64 = series.iter().sum::<f64>() / series.len() as f64;
    let var: f64 =
        series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / series.len() as f64;
    let sd = var.sqrt().max(1e-6);
    let obj = |theta: &[f64; 4]| neg_loglik(theta, series);

    let mut best: Option<([f64; 4], f64)> = None;
    for &rho0 in &[0.2, 0.4, 0.6, 0.8] {
        for &(fb, fc) in &[(0.8, 0.4), (0.4, 0.8)] {
            let start = [mean, fb * sd, fc * sd, rho0];
            let scale = [0.5 * sd.max(1e-3), 0.3 * sd, 0.3 * sd, 0.1];
            let (theta, f_val) = nelder_mead(&obj, start, scale);
            if f_val < 1e11 && best.as_ref().map_or(true, |b| f_val < b.1) {
                best = Some((theta, f_val));
            }
        }
    }
    let (theta, f_best) = best.ok_or_else(|| {
        Error::EstimationFailure("no starting point produced a finite likelihood".into())
    })?;

    let boundary_warning = theta[1] < 10.0 * B_FLOOR
        || theta[2] < 10.0 * B_FLOOR
        || theta[3] < 1e-4
        || theta[3] > 1.0 - 1e-4;

    // Numerical Hessian of the negative log-likelihood (central differences).
    let mut hess = DMatrix::<f64>::zeros(4, 4);
    let step: Vec<f64> = theta.iter().map(|&t| 1e-4 * (t.abs() + 1e-3)).collect();
    let f0 = f_best;
    for i in 0..4 {
        for j in i..4 {
            let val = if i == j {
                let mut tp = theta;
                tp[i] += step[i];
                let mut tm = theta;
                tm[i] -= step[i];
                (obj(&tp) - 2.0 * f0 + obj(&tm)) / (step[i] * step[i])
            } else {
                let mut tpp = theta;
                tpp[i] += step[i];
                tpp[j] += step[j];
                let mut tpm = theta;
                tpm[i] += step[i];
                tpm[j] -= step[j];
                let mut tmp = theta;
                tmp[i] -= step[i];
                tmp[j] += step[j];
                let mut tmm = theta;
                tmm[i] -= step[i];
                tmm[j] -= step[j];
                (obj(&tpp) - obj(&tpm) - obj(&tmp) + obj(&tmm)) / (4.0 * step[i] * step[j])
            };
            hess[(i, j)] = val;
            hess[(j, i)] = val;
        }
    }
    let covariance = invert_psd(&hess).ok_or_else(|| {
        Error::EstimationFailure("Hessian at the optimum is not invertible".into())
    })?;
    let mut standard_errors = [0.0; 4];
    for i in 0..4 {
        standard_errors[i] = covariance[(i, i)].max(0.0).sqrt();
    }
    let theta_hat = Ar1Params {
        mean_level: theta[0],
        obs_sd: theta[1],
        innov_sd: theta[2],
        rho: theta[3],
    };
    Ok(EstimationResult {
        theta_hat,
        covariance,
        loglik: -f_best,
        standard_errors,
        boundary_warning,
    })
}

fn invert_psd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.inverse());
    }
    // fall back to a jittered inverse for near-singular Hessians
    let scale = m.abs().max().max(1.0);
    let jittered = m + DMatrix::identity(m.nrows(), m.ncols()) * (1e-10 * scale);
    jittered
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| m.clone().try_inverse())
}

/// SDF intercept/slope: `α₀` = time-average of `−log r_f`, `α₁` = OLS slope of
/// the demeaned target on the filtered state.
pub fn calibrate_sdf(filtered_states: &[f64], riskfree_log: &[f64]) -> Result<(f64, f64)> {
    let n = filtered_states.len();
    if n != riskfree_log.len() || n < 8 {
        return Err(Error::Dimension(
            "need equal-length series of at least 8".into(),
        ));
    }
    let y: Vec<f64> = riskfree_log.iter().map(|r| -r).collect();
    let alpha0 = y.iter().sum::<f64>() / n as f64;
    let x_mean = filtered_states.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = filtered_states[i] - x_mean;
        sxx += dx * dx;
        sxy += dx * (y[i] - alpha0);
    }
    let scale: f64 = filtered_states.iter().map(|v| v * v).sum();
    if sxx <= 1e-20 * scale.max(1e-300) {
        return Err(Error::Regression(
            "filtered states have zero variance".into(),
        ));
    }
    Ok((alpha0, sxy / sxx))
}

/// One multivariate-normal draw `θ̂ + L z` using the Cholesky factor `L`.
/// Candidate `j` uses ChaCha stream `j` of the seed, so draws are
/// order-independent and parallel-deterministic.
pub fn mvn_draw(
    mean: &DVector<f64>,
    chol_l: &DMatrix<f64>,
    seed: u64,
    candidate: u64,
) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(candidate);
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + chol_l * z
}

/// `KL(θ ‖ θ̂) = ½ (θ−θ̂)ᵀ Σ̂⁻¹ (θ−θ̂)` between the draw's implied Gaussian
/// and the estimate's, for fixed covariance.
pub fn kl_divergence(
    theta: &DVector<f64>,
    theta_hat: &DVector<f64>,
    cov_inv: &DMatrix<f64>,
) -> f64 {
    let d = theta - theta_hat;
    0.5 * (d.transpose() * cov_inv * &d)[(0, 0)]
}

/// Draw `count` accepted parameter vectors from `N(θ̂, Σ̂)`, rejecting
/// ρ₁ ∉ (0, 1), and attach KL divergences and mixture weights.
pub fn draw_ensemble(result: &EstimationResult, count: usize, seed: u64) -> Result<ModelEnsemble> {
    draw_ensemble_with_rule(result, count, seed, WeightRule::Kl)
}

pub fn draw_ensemble_with_rule(
    result: &EstimationResult,
    count: usize,
    seed: u64,
    rule: WeightRule,
) -> Result<ModelEnsemble> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let cov = &result.covariance;
    if cov.abs().max() == 0.0 {
        return Err(Error::ZeroDivergence(
            "degenerate covariance: every draw equals the point estimate with KL 0".into(),
        ));
    }
    let chol = cov
        .clone()
        .cholesky()
        .or_else(|| (cov + DMatrix::identity(4, 4) * 1e-12).cholesky())
        .ok_or_else(|| Error::InvalidParameter("covariance is not PSD".into()))?;
    let l = chol.l();
    let cov_inv = invert_psd(cov)
        .ok_or_else(|| Error::InvalidParameter("covariance is not invertible".into()))?;
    let mean = result.theta_hat.as_vector();

    let mut draws = Vec::with_capacity(count);
    let mut kls = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    while draws.len() < count {
        if attempts >= 1_000_000 {
            return Err(Error::InfeasibleRegion(format!(
                "acceptance rate {} after {attempts} attempts",
                draws.len() as f64 / attempts as f64
            )));
        }
        let theta = mvn_draw(&mean, &l, seed, attempts);
        attempts += 1;
        // reject draws that violate the parameter invariants; ρ₁ outside
        // (0, 1) is the dominant case, but c ≤ 0 or b < 0 draws are equally
        // unusable
        let params = match Ar1Params::from_slice(theta.as_slice()) {
            Ok(p) => p,
            Err(_) => continue,
        };
        kls.push(kl_divergence(&theta, &mean, &cov_inv));
        draws.push(params);
        if attempts >= 10_000 && (draws.len() as f64) < 0.01 * attempts as f64 {
            return Err(Error::InfeasibleRegion("acceptance rate below 1%".into()));
        }
    }
    let weights = match rule {
        WeightRule::Kl => {
            let total: f64 = kls.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroDivergence("all KL divergences are zero".into()));
            }
            kls.iter().map(|k| k / total).collect()
        }
        WeightRule::InverseKl => {
            let inv: Vec<f64> = kls.iter().map(|k| 1.0 / k.max(1e-300)).collect();
            let total: f64 = inv.iter().sum();
            inv.iter().map(|v| v / total).collect()
        }
        WeightRule::Uniform => vec![1.0 / count as f64; count],
    };
    Ok(ModelEnsemble {
        draws,
        kl_divergences: kls,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table_params() -> Ar1Params {
        Ar1Params::new(0.01037, 0.64079, 0.01520, 0.03630).unwrap()
    }

    #[test]
    fn zero_variance_raises() {
        let p = Ar1Params {
            mean_level: 0.01,
            obs_sd: 0.0,
            innov_sd: 0.0,
            rho: 0.5,
        };
        let series = vec![0.01; 50];
        assert!(matches!(
            kalman_loglik(&p, &series),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn loglik_peaks_near_truth() {
        let p = table_params();
        let series = simulate_series(&p, 200, 1);
        let ll_true = kalman_loglik(&p, &series).unwrap();
        let p_off = Ar1Params {
            rho: p.rho + 0.2,
            ..p
        };
        let ll_off = kalman_loglik(&p_off, &series).unwrap();
        assert!(ll_true > ll_off, "{ll_true} vs {ll_off}");
    }

    #[test]
    fn near_iid_matches_gaussian_loglik() {
        let p = Ar1Params {
            mean_level: 0.0,
            obs_sd: 0.02,
            innov_sd: 0.015,
            rho: 1e-6,
        };
        let series = simulate_series(&Ar1Params::new(0.0, 1e-3, 0.015, 0.02).unwrap(), 300, 3)
            .into_iter()
            .collect::<Vec<_>>();
        let ll = kalman_loglik(&p, &series).unwrap();
        // iid Gaussian with variance b^2 + c^2
        let var = p.obs_sd * p.obs_sd + p.innov_sd * p.innov_sd;
        let iid: f64 = series
            .iter()
            .map(|&y| -0.5 * (LN_2PI + var.ln() + y * y / var))
            .sum();
        assert!(
            (ll - iid).abs() < 1e-6 * iid.abs().max(1.0),
            "{ll} vs {iid}"
        );
    }

    #[test]
    fn filter_is_pure() {
        let p = table_params();
        let series = simulate_series(&p, 100, 9);
        let ll1 = kalman_loglik(&p, &series).unwrap();
        let mut longer = series.clone();
        longer.push(0.01);
        let _ = kalman_loglik(&p, &longer).unwrap();
        let ll2 = kalman_loglik(&p, &series).unwrap();
        assert_abs_diff_eq!(ll1, ll2, epsilon = 0.0);
    }

    #[test]
    fn non_finite_observation_names_data_error() {
        let p = table_params();
        let mut series = simulate_series(&p, 50, 2);
        series[12] = f64::NAN;
        assert!(matches!(kalman_loglik(&p, &series), Err(Error::Data(_))));
    }

    #[test]
    fn mle_recovers_truth_on_long_series() {
        let p = table_params();
        let series = simulate_series(&p, 5000, 17);
        let fit = mle_fit(&series).unwrap();
        let truth = [p.mean_level, p.obs_sd, p.innov_sd, p.rho];
        let est = [
            fit.theta_hat.mean_level,
            fit.theta_hat.obs_sd,
            fit.theta_hat.innov_sd,
            fit.theta_hat.rho,
        ];
        for i in 0..4 {
            let dev = (est[i] - truth[i]).abs();
            assert!(
                dev < 3.0 * fit.standard_errors[i],
                "param {i}: est {} truth {} se {}",
                est[i],
                truth[i],
                fit.standard_errors[i]
            );
        }
        assert!(!fit.boundary_warning);
    }

    #[test]
    fn mle_loglik_beats_every_start() {
        let p = table_params();
        let series = simulate_series(&p, 400, 23);
        let fit = mle_fit(&series).unwrap();
        // spot-check against a few plausible parameter points
        for &rho in &[0.2, 0.5, 0.8] {
            let cand = Ar1Params {
                rho,
                ..table_params()
            };
            let ll = kalman_loglik(&cand, &series).unwrap();
            assert!(fit.loglik >= ll - 1e-9);
        }
    }

    #[test]
    fn constant_series_hits_boundary() {
        let series = vec![0.013; 60];
        let fit = mle_fit(&series).unwrap();
        assert!(fit.boundary_warning);
    }

    #[test]
    fn calibrate_constant_riskfree() {
        let x: Vec<f64> = (0..50).map(|i| 0.01 * ((i as f64 * 0.7).sin())).collect();
        let rf = vec![(1.008f64).ln(); 50];
        let (a0, a1) = calibrate_sdf(&x, &rf).unwrap();
        assert_abs_diff_eq!(a0, -(1.008f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(a1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn calibrate_recovers_exact_linear_target() {
        // zero-mean filtered states so the intercept is identified exactly
        let mut x: Vec<f64> = (0..60).map(|i| ((i as f64) * 0.37).sin() * 0.02).collect();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        for v in &mut x {
            *v -= m;
        }
        let rf: Vec<f64> = x.iter().map(|&xi| -(1.2038 * xi - 0.8974)).collect();
        let (a0, a1) = calibrate_sdf(&x, &rf).unwrap();
        assert_abs_diff_eq!(a0, -0.8974, epsilon = 1e-10);
        assert_abs_diff_eq!(a1, 1.2038, epsilon = 1e-10);
    }

    #[test]
    fn calibrate_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..80)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.02)
            .collect();
        let rf: Vec<f64> = x
            .iter()
            .map(|&xi| -(1.1 * xi - 0.9 + 0.05 * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let (a0, a1) = calibrate_sdf(&x, &rf).unwrap();
        // normal equations on the demeaned problem
        let y: Vec<f64> = rf.iter().map(|r| -r - a0).collect();
        let xm = x.iter().sum::<f64>() / x.len() as f64;
        let sxx: f64 = x.iter().map(|&v| (v - xm) * (v - xm)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(&v, &u)| (v - xm) * u).sum();
        assert_abs_diff_eq!(a1, sxy / sxx, epsilon = 1e-12);
    }

    #[test]
    fn calibrate_rejects_flat_states() {
        let x = vec![0.01; 20];
        let rf = vec![0.008; 20];
        assert!(matches!(calibrate_sdf(&x, &rf), Err(Error::Regression(_))));
    }

    fn dummy_result() -> EstimationResult {
        let p = table_params();
        let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&[1e-5, 4e-6, 4e-6, 4e-3]));
        EstimationResult {
            theta_hat: p,
            covariance: cov,
            loglik: 0.0,
            standard_errors: [3.2e-3, 2e-3, 2e-3, 6.3e-2],
            boundary_warning: false,
        }
    }

    #[test]
    fn ensemble_is_seed_deterministic() {
        let r = dummy_result();
        let e1 = draw_ensemble(&r, 200, 42).unwrap();
        let e2 = draw_ensemble(&r, 200, 42).unwrap();
        assert_eq!(e1.draws.len(), 200);
        for (a, b) in e1.draws.iter().zip(&e2.draws) {
            assert_eq!(a, b);
        }
        assert_eq!(e1.weights, e2.weights);
    }

    #[test]
    fn ensemble_weights_sum_to_one_and_rho_in_range() {
        let r = dummy_result();
        let e = draw_ensemble(&r, 500, 7).unwrap();
        let s: f64 = e.weights.iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert!(e.weights.iter().all(|&w| w >= 0.0));
        assert!(e.draws.iter().all(|d| d.rho > 0.0 && d.rho < 1.0));
        assert!(e.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn degenerate_covariance_raises_zero_divergence() {
        let mut r = dummy_result();
        r.covariance = DMatrix::zeros(4, 4);
        assert!(matches!(
            draw_ensemble(&r, 10, 1),
            Err(Error::ZeroDivergence(_))
        ));
    }

    #[test]
    fn uniform_rule_gives_equal_weights() {
        let r = dummy_result();
        let e = draw_ensemble_with_rule(&r, 50, 11, WeightRule::Uniform).unwrap();
        for &w in &e.weights {
            assert_abs_diff_eq!(w, 0.02, epsilon = 1e-15);
        }
    }

    #[test]
    fn unfiltered_identity_kl_has_chi_square_mean() {
        // KL of identity-covariance draws is ½·χ²(4) with mean 2
        let mean = DVector::zeros(4);
        let l = DMatrix::<f64>::identity(4, 4);
        let cov_inv = DMatrix::<f64>::identity(4, 4);
        let n = 100_000u64;
        let mut acc = 0.0;
        for j in 0..n {
            let theta = mvn_draw(&mean, &l, 5, j);
            acc += kl_divergence(&theta, &mean, &cov_inv);
        }
        let avg = acc / n as f64;
        assert!((avg - 2.0).abs() < 0.05, "mean KL {avg}");
    }

    #[test]
    fn kl_histogram_right_skewed() {
        let r = dummy_result();
        let e = draw_ensemble(&r, 1000, 13).unwrap();
        let mut sorted = e.kl_divergences.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[500];
        let mean: f64 = sorted.iter().sum::<f64>() / 1000.0;
        assert!(mean > median, "right skew: mean {mean} median {median}");
    }
}
