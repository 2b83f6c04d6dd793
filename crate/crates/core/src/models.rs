//! Discrete pricing systems for the five model families (CRRA, recursive
//! utility with unit IES, their stochastic-volatility variants, and rare
//! disasters), classical solves, the Nystrom off-grid extension, and the
//! long-run Perron eigenpair.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Ar1Params, DiscreteMarkovChain};

/// Preference family behind the stochastic discount factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    Crra,
    /// Recursive utility with intertemporal elasticity of substitution 1.
    RecursiveIesOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub kind: UtilityKind,
    /// Relative risk aversion γ.
    pub gamma: f64,
    /// Subjective discount factor β.
    pub beta: f64,
}

impl UtilitySpec {
    pub fn new(kind: UtilityKind, gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be > 0".into()));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter("beta must be in (0, 1)".into()));
        }
        Ok(UtilitySpec { kind, gamma, beta })
    }

    pub fn crra(gamma: f64) -> Result<Self> {
        UtilitySpec::new(UtilityKind::Crra, gamma, 0.99)
    }

    pub fn recursive_ies_one(gamma: f64) -> Result<Self> {
        UtilitySpec::new(UtilityKind::RecursiveIesOne, gamma, 0.99)
    }
}

/// Log SDF coefficients: `m = α₀ + α₁ x_t + ξ w_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdfSpec {
    pub alpha0: f64,
    pub alpha1: f64,
    /// Loading on the dividend shock, derived from the utility spec.
    pub xi: f64,
}

impl SdfSpec {
    pub fn new(alpha0: f64, alpha1: f64, xi: f64) -> Result<Self> {
        if ![alpha0, alpha1, xi].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite SDF coefficient".into()));
        }
        Ok(SdfSpec { alpha0, alpha1, xi })
    }

    /// Derive the shock loading from preferences and attach it to the
    /// calibrated intercept/slope.
    pub fn from_utility(
        alpha0: f64,
        alpha1: f64,
        utility: &UtilitySpec,
        ar1: &Ar1Params,
    ) -> Result<Self> {
        SdfSpec::new(alpha0, alpha1, xi_from_utility(utility, ar1)?)
    }
}

/// Two-regime stochastic-volatility specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvSpec {
    /// Ergodic weight of the good regime.
    pub pi_g: f64,
    /// Good-regime volatility fraction `b_G / b`.
    pub gamma_g: f64,
    /// Good-regime shock volatility.
    pub b_g: f64,
    /// Bad-regime shock volatility.
    pub b_b: f64,
}

impl SvSpec {
    /// Derive regime volatilities so that `b = π_G b_G + (1−π_G) b_B` holds.
    pub fn new(pi_g: f64, gamma_g: f64, b: f64) -> Result<Self> {
        if !(pi_g > 0.0 && pi_g < 1.0) {
            return Err(Error::InvalidParameter("pi_g must be in (0, 1)".into()));
        }
        // gamma_g = 1 is the degenerate constant-volatility case (b_G = b_B = b)
        if !(gamma_g > 0.0 && gamma_g <= 1.0) {
            return Err(Error::InvalidParameter("gamma_g must be in (0, 1]".into()));
        }
        if b <= 0.0 {
            return Err(Error::InvalidParameter(
                "base volatility b must be > 0".into(),
            ));
        }
        let b_g = gamma_g * b;
        let b_b = b * (1.0 - gamma_g * pi_g) / (1.0 - pi_g);
        Ok(SvSpec {
            pi_g,
            gamma_g,
            b_g,
            b_b,
        })
    }
}

/// Shock loading ξ implied by preferences at base volatility `b = ar1.obs_sd`.
pub fn xi_from_utility(spec: &UtilitySpec, ar1: &Ar1Params) -> Result<f64> {
    xi_with_vol(spec, ar1, ar1.obs_sd)
}

/// Shock loading ξ with the shock volatility replaced by `b_vol`
/// (regime-specific volatility under SV).
pub fn xi_with_vol(spec: &UtilitySpec, ar1: &Ar1Params, b_vol: f64) -> Result<f64> {
    match spec.kind {
        UtilityKind::Crra => Ok(-b_vol * spec.gamma),
        UtilityKind::RecursiveIesOne => {
            let denom = 1.0 - spec.beta * ar1.rho;
            if denom <= 0.0 {
                return Err(Error::SingularSystem(format!(
                    "beta*rho = {} >= 1 in the recursive-utility loading",
                    spec.beta * ar1.rho
                )));
            }
            let cb = ar1.innov_sd * spec.beta / denom;
            Ok(cb - (cb + b_vol) * spec.gamma)
        }
    }
}

/// The assembled discrete pricing system for one model/parameter draw.
#[derive(Debug, Clone)]
pub struct PricingSystem {
    pub h: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    /// `A = I − (H∘M)∘Π`.
    pub a: DMatrix<f64>,
    /// `b_j = Σ_k Ψ_{jk} Π_{jk}`.
    pub b: DVector<f64>,
    /// Diagonal of the row scaling `B`, entries `√N · b_j`.
    pub bdiag: DVector<f64>,
    /// `C = B⁻¹ A`.
    pub c: DMatrix<f64>,
}

impl PricingSystem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// The unit-norm right-hand side `B⁻¹ b` (all entries `1/√N`).
    pub fn unit_rhs(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| self.b[j] / self.bdiag[j])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mat = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| m.row(i).iter().cloned().collect())
                .collect()
        };
        serde_json::json!({
            "H": mat(&self.h),
            "M": mat(&self.m),
            "Pi": mat(&self.pi),
            "A": mat(&self.a),
            "b": self.b.as_slice(),
            "Bdiag": self.bdiag.as_slice(),
            "C": mat(&self.c),
        })
    }
}

/// Assemble a system from explicit growth, SDF, and transition matrices.
pub fn assemble_system(
    h: DMatrix<f64>,
    m: DMatrix<f64>,
    pi: DMatrix<f64>,
) -> Result<PricingSystem> {
    let n = h.nrows();
    if h.ncols() != n || m.nrows() != n || m.ncols() != n || pi.nrows() != n || pi.ncols() != n {
        return Err(Error::Dimension(
            "H, M, Pi must be square and same size".into(),
        ));
    }
    let psi = h.component_mul(&m);
    let a = DMatrix::identity(n, n) - psi.component_mul(&pi);
    let b = DVector::from_fn(n, |j, _| psi.row(j).component_mul(&pi.row(j)).sum());
    let sqrt_n = (n as f64).sqrt();
    let bdiag = b.map(|bj| sqrt_n * bj);
    for j in 0..n {
        if !(b[j] > 0.0) {
            return Err(Error::DegenerateSystem(format!(
                "row sum b[{j}] = {} not strictly positive; B is not invertible",
                b[j]
            )));
        }
    }
    let mut c = a.clone();
    for j in 0..n {
        let inv = 1.0 / bdiag[j];
        for k in 0..n {
            c[(j, k)] *= inv;
        }
    }
    Ok(PricingSystem {
        h,
        m,
        pi,
        psi,
        a,
        b,
        bdiag,
        c,
    })
}

/// Build the pricing system on a shock-extended chain.
///
/// Constant volatility when `sv` is `None`: both shock rows use `ar1.obs_sd`
/// and the single loading `sdf.xi`. Under SV the row regime selects `b_G`/`b_B`
/// and the regime-specific loading derived from `utility`.
pub fn build_system(
    chain: &DiscreteMarkovChain,
    ar1: &Ar1Params,
    sdf: &SdfSpec,
    utility: &UtilitySpec,
    sv: Option<&SvSpec>,
) -> Result<PricingSystem> {
    let s_count = chain.n_shocks();
    if s_count != 2 {
        return Err(Error::Dimension(format!(
            "chain must carry exactly 2 shock states, found {s_count}"
        )));
    }
    let w = chain
        .shock_values()
        .ok_or_else(|| Error::Dimension("chain has no shock extension".into()))?
        .to_vec();
    let (b_row, xi_row) = match sv {
        None => ([ar1.obs_sd, ar1.obs_sd], [sdf.xi, sdf.xi]),
        Some(sv) => (
            [sv.b_g, sv.b_b],
            [
                xi_with_vol(utility, ar1, sv.b_g)?,
                xi_with_vol(utility, ar1, sv.b_b)?,
            ],
        ),
    };
    let n = chain.len();
    let x = chain.abscissa();
    let mut h = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let (i, s) = chain.split_state(k);
        let growth = (ar1.mean_level + x[k]).exp();
        let sdf_level = (sdf.alpha0 + sdf.alpha1 * x[k]).exp();
        let _ = i;
        for l in 0..n {
            let (_, sp) = chain.split_state(l);
            h[(k, l)] = growth * (b_row[s] * w[sp]).exp();
            m[(k, l)] = sdf_level * (xi_row[s] * w[sp]).exp();
        }
    }
    assemble_system(h, m, chain.transition())
}

/// Solve `A ν̄ = b` by pivoted dense elimination with iterative refinement.
pub fn solve_classical(sys: &PricingSystem) -> Result<DVector<f64>> {
    let lu = sys.a.clone().lu();
    let mut nu = lu
        .solve(&sys.b)
        .ok_or_else(|| Error::SingularSystem("LU solve failed on A".into()))?;
    let scale = sys.b.abs().max();
    // refine until the residual stops improving (ill-conditioned systems need
    // a couple of correction passes to reach backward-stable accuracy)
    let mut resid = (&sys.a * &nu - &sys.b).abs().max();
    for _ in 0..3 {
        if resid < 1e-13 * scale.max(1.0) {
            break;
        }
        let r = &sys.b - &sys.a * &nu;
        if let Some(corr) = lu.solve(&r) {
            let cand = &nu + corr;
            let cand_resid = (&sys.a * &cand - &sys.b).abs().max();
            if cand_resid < resid {
                nu = cand;
                resid = cand_resid;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    if !nu.iter().all(|v| v.is_finite()) || resid >= 1e-10 * scale.max(1.0) {
        return Err(Error::SingularSystem(format!(
            "residual {resid} too large relative to rhs scale {scale}"
        )));
    }
    Ok(nu)
}

/// Nystrom extension of the solved price-dividend ratio to an off-grid point
/// `x`, for constant-volatility systems on a shock-extended chain:
/// `ν̃(x) = Σ_k (1+ν̄_k) ψ_k(x) π_k(x)`.
pub fn nystrom_extend(
    sys: &PricingSystem,
    chain: &DiscreteMarkovChain,
    ar1: &Ar1Params,
    sdf: &SdfSpec,
    nu: &DVector<f64>,
    x: f64,
) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain("off-grid point must be finite".into()));
    }
    let sig = ar1.stationary_sd();
    if x.abs() > 8.0 * sig {
        return Err(Error::Domain(format!("x = {x} beyond 8 stationary s.d.")));
    }
    let s_count = chain.n_shocks();
    let n = chain.len();
    if nu.len() != n || sys.dim() != n {
        return Err(Error::Dimension("solution/chain size mismatch".into()));
    }
    let w = chain.shock_values().unwrap_or(&[1.0]);
    let probs = chain.shock_probs().unwrap_or(&[1.0]);
    let abscissa = chain.abscissa();
    let weights = chain.quadrature_weights();

    // Rebuild the quadrature transition row at the off-grid point: the
    // conditional-to-stationary density ratio times the unconditional weight,
    // renormalized. Weights on the extended chain already carry shock_probs.
    let pdf = |y: f64, mean: f64, sd: f64| {
        let z = (y - mean) / sd;
        (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let mut trans: Vec<f64> = (0..n)
        .map(|k| {
            let ratio = pdf(abscissa[k], ar1.rho * x, ar1.innov_sd) / pdf(abscissa[k], 0.0, sig);
            ratio * weights[k]
        })
        .collect();
    let s: f64 = trans.iter().sum();
    for p in &mut trans {
        *p /= s;
    }
    let _ = probs;
    let growth = (ar1.mean_level + x).exp();
    let sdf_level = (sdf.alpha0 + sdf.alpha1 * x).exp();
    let mut acc = 0.0;
    for k in 0..n {
        let shock = if s_count > 1 {
            let (_, sp) = chain.split_state(k);
            w[sp]
        } else {
            0.0
        };
        let psi = growth * sdf_level * (ar1.obs_sd * shock).exp() * (sdf.xi * shock).exp();
        acc += (1.0 + nu[k]) * psi * trans[k];
    }
    Ok(acc)
}

/// Perron eigenpair of `M∘Π` by power iteration to 1e-13 relative change.
pub fn long_run_eigenpair(m: &DMatrix<f64>, pi: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    if m.ncols() != n || pi.nrows() != n || pi.ncols() != n {
        return Err(Error::Dimension(
            "M and Pi must be square and same size".into(),
        ));
    }
    let k = m.component_mul(pi);
    if k.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("M∘Π must be nonnegative".into()));
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for _ in 0..1_000_000 {
        let kv = &k * &v;
        let norm = kv.norm();
        if norm == 0.0 {
            return Err(Error::Convergence(
                "operator annihilated the iterate".into(),
            ));
        }
        let next = kv / norm;
        let change = (&next - &v).norm() / next.norm();
        v = next;
        let rho = norm;
        if change < 1e-13 {
            // fix the sign so the Perron vector is positive
            if v.sum() < 0.0 {
                v = -v;
            }
            return Ok((rho, v));
        }
    }
    Err(Error::Convergence(
        "Perron power iteration did not converge".into(),
    ))
}

/// Rare-disaster model calibration and discretization controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RareDisasterSpec {
    /// Discount rate δ.
    pub delta: f64,
    /// Relative risk aversion γ.
    pub gamma: f64,
    /// Dividend growth rate g_D.
    pub g_d: f64,
    /// Disaster probability per period.
    pub p_dis: f64,
    /// Recovery rate B.
    pub b_recov: f64,
    /// Mean-reversion speed φ_H of resilience.
    pub phi_h: f64,
    /// Resilience innovation s.d.; `None` defaults to 0.1·H*.
    pub sigma_h: Option<f64>,
    pub n_states: usize,
}

impl Default for RareDisasterSpec {
    fn default() -> Self {
        RareDisasterSpec {
            delta: 0.0657,
            gamma: 4.0,
            g_d: 0.025,
            p_dis: 0.0363,
            b_recov: 0.66,
            phi_h: 0.13,
            sigma_h: None,
            n_states: 11,
        }
    }
}

impl RareDisasterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_dis > 0.0 && self.p_dis < 1.0) {
            return Err(Error::InvalidParameter(
                "disaster probability must be in (0, 1)".into(),
            ));
        }
        if self.b_recov <= 0.0 {
            return Err(Error::InvalidParameter("recovery rate must be > 0".into()));
        }
        if self.phi_h <= 0.0 {
            return Err(Error::InvalidParameter("phi_h must be > 0".into()));
        }
        if self.n_states < 3 {
            return Err(Error::InvalidParameter("n_states must be >= 3".into()));
        }
        if let Some(s) = self.sigma_h {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter("sigma_h must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn h_star(&self) -> f64 {
        compute_h_star(self.p_dis, self.b_recov, self.gamma)
    }

    fn sigma_h_effective(&self) -> Result<f64> {
        match self.sigma_h {
            Some(s) => Ok(s),
            None => {
                let hs = self.h_star();
                if hs <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "default sigma_h requires H* > 0; set sigma_h explicitly".into(),
                    ));
                }
                Ok(0.1 * hs)
            }
        }
    }
}

/// Resilience constant `H* = p (B^{1−γ} − 1)`.
pub fn compute_h_star(p: f64, b_recov: f64, gamma: f64) -> f64 {
    p * (b_recov.powf(1.0 - gamma) - 1.0)
}

/// Discretize centered resilience and build the discounted system
/// `(I − e^{−δ+g_D} diag(1+ĥ) Π)`, returning `(chain, A, rhs)`.
pub fn rare_disaster_system(
    spec: &RareDisasterSpec,
) -> Result<(DiscreteMarkovChain, DMatrix<f64>, DVector<f64>)> {
    spec.validate()?;
    let n = spec.n_states;
    let h_star = spec.h_star();
    let sigma_h = spec.sigma_h_effective()?;
    let phi = spec.phi_h;
    let sigma_stat = sigma_h / (1.0 - (-2.0 * phi).exp()).sqrt();
    let lo = -3.0 * sigma_stat;
    let hi = 3.0 * sigma_stat;
    let grid: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let pdf = |y: f64, mean: f64, sd: f64| {
        let z = (y - mean) / sd;
        (-0.5 * z * z).exp()
    };
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        let hj = grid[j];
        let mean = (1.0 + h_star) / (1.0 + h_star + hj) * (-phi).exp() * hj;
        let mut row: Vec<f64> = grid.iter().map(|&g| pdf(g, mean, sigma_h)).collect();
        let s: f64 = row.iter().sum();
        for p in &mut row {
            *p /= s;
        }
        rows[j] = row;
    }
    let chain = DiscreteMarkovChain::new(grid.clone(), rows, vec![1.0 / n as f64; n])?;
    let kappa = (-spec.delta + spec.g_d).exp();
    let pi = chain.transition();
    let mut a = DMatrix::identity(n, n);
    for j in 0..n {
        let factor = kappa * (1.0 + grid[j]);
        for k in 0..n {
            a[(j, k)] -= factor * pi[(j, k)];
        }
    }
    Ok((chain, a, DVector::from_element(n, 1.0)))
}

/// Solve the rare-disaster price-dividend fixed point
/// `ν̄ = 1 + e^{−δ+g_D} diag(1+ĥ) Π ν̄` on an `n_states` resilience grid.
pub fn solve_rare_disaster(spec: &RareDisasterSpec) -> Result<(DiscreteMarkovChain, DVector<f64>)> {
    let (chain, a, rhs) = rare_disaster_system(spec)?;
    let nu = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("rare-disaster solve failed".into()))?;
    if !nu.iter().all(|&v| v.is_finite() && v > 0.0) {
        return Err(Error::NoSolution(
            "discounted operator has spectral radius >= 1; price-dividend ratio diverges".into(),
        ));
    }
    Ok((chain, nu))
}
