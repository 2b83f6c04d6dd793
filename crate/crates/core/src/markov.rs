//! Quadrature discretization of continuous driving processes into finite
//! Markov chains, composition with independent shocks, and ergodic
//! distributions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const PROB_SUM_TOL: f64 = 1e-10;

/// Parameters of the AR(1) state process driving log dividend growth:
/// observation `Δd = a + x' + b e`, state `x' = ρ x + c ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Params {
    /// Intercept `a` of dividend growth (per-period log units).
    pub mean_level: f64,
    /// Persistence `ρ₁` of the latent state.
    pub rho: f64,
    /// Innovation standard deviation `c` of the latent state.
    pub innov_sd: f64,
    /// Observation shock standard deviation `b`.
    pub obs_sd: f64,
}

impl Ar1Params {
    pub fn new(mean_level: f64, rho: f64, innov_sd: f64, obs_sd: f64) -> Result<Self> {
        let p = Ar1Params {
            mean_level,
            rho,
            innov_sd,
            obs_sd,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.mean_level, self.rho, self.innov_sd, self.obs_sd];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite AR(1) parameter".into()));
        }
        if self.innov_sd <= 0.0 {
            return Err(Error::InvalidParameter("innov_sd must be > 0".into()));
        }
        if self.obs_sd < 0.0 {
            return Err(Error::InvalidParameter("obs_sd must be >= 0".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Domain(format!("rho = {} outside (0, 1)", self.rho)));
        }
        Ok(())
    }

    /// Stationary standard deviation `c/√(1−ρ²)` of the latent state.
    pub fn stationary_sd(&self) -> f64 {
        self.innov_sd / (1.0 - self.rho * self.rho).sqrt()
    }

    /// Parameter vector in the canonical `(a, b, c, ρ₁)` ordering.
    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.mean_level, self.obs_sd, self.innov_sd, self.rho])
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 4 {
            return Err(Error::Dimension("Ar1Params requires 4 entries".into()));
        }
        Ar1Params::new(v[0], v[3], v[2], v[1])
    }
}

/// A finite-state Markov chain obtained from a quadrature rule, optionally
/// extended with an independent shock dimension.
///
/// State ordering after [`kron_extend`] is chain-major, shock-minor: state
/// `k = i·S + s` pairs abscissa `i` with shock `s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteMarkovChain {
    abscissa: Vec<f64>,
    transition: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Shock values per shock state (`None` for a bare quadrature chain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shock_values: Option<Vec<f64>>,
    /// Shock probabilities, parallel to `shock_values`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shock_probs: Option<Vec<f64>>,
}

impl DiscreteMarkovChain {
    /// Validating constructor for a bare chain (strictly ascending abscissa).
    pub fn new(abscissa: Vec<f64>, transition: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let chain = DiscreteMarkovChain {
            abscissa,
            transition,
            weights,
            shock_values: None,
            shock_probs: None,
        };
        chain.validate(true)?;
        Ok(chain)
    }

    fn validate(&self, strict_ascending: bool) -> Result<()> {
        let n = self.abscissa.len();
        if self.transition.len() != n || self.weights.len() != n {
            return Err(Error::Dimension(
                "abscissa/transition/weights length mismatch".into(),
            ));
        }
        for w in self.abscissa.windows(2) {
            let ok = if strict_ascending {
                w[1] > w[0]
            } else {
                w[1] >= w[0]
            };
            if !ok {
                return Err(Error::InvalidParameter("abscissa not ascending".into()));
            }
        }
        for row in &self.transition {
            if row.len() != n {
                return Err(Error::Dimension("transition matrix not square".into()));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) {
                    return Err(Error::InvalidDistribution(format!(
                        "transition entry {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidDistribution(format!("row sum {sum} != 1")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn transition(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.transition[i][j])
    }

    pub fn transition_rows(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Shock values per shock state, when this chain was built by [`kron_extend`].
    pub fn shock_values(&self) -> Option<&[f64]> {
        self.shock_values.as_deref()
    }

    pub fn shock_probs(&self) -> Option<&[f64]> {
        self.shock_probs.as_deref()
    }

    pub fn n_shocks(&self) -> usize {
        self.shock_values.as_ref().map_or(1, |s| s.len())
    }

    /// (abscissa index, shock index) of extended state `k`.
    pub fn split_state(&self, k: usize) -> (usize, usize) {
        let s = self.n_shocks();
        (k / s, k % s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "abscissa": self.abscissa,
            "transition": self.transition,
            "weights": self.weights,
        })
    }
}

/// Gauss-Hermite nodes and weights (physicists' convention, weight `e^{-t²}`)
/// via the Golub-Welsch eigenproblem on the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "need at least one quadrature point".into(),
        ));
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Enforce the exact node symmetry of the Hermite rule.
    for i in 0..n / 2 {
        let mag = 0.5 * (pairs[i].0.abs() + pairs[n - 1 - i].0.abs());
        pairs[i].0 = -mag;
        pairs[n - 1 - i].0 = mag;
        let w = 0.5 * (pairs[i].1 + pairs[n - 1 - i].1);
        pairs[i].1 = w;
        pairs[n - 1 - i].1 = w;
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Ok(pairs.into_iter().unzip())
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Discretize the latent AR(1) process on an `n_points` Gauss-Hermite grid
/// scaled to the stationary distribution, with transition rows
/// `π_k(x) = [f(ȳ_k|x) / (s(x) ω(ȳ_k))] w_k` for the stationary weight
/// density ω.
pub fn discretize_ar1(params: &Ar1Params, n_points: usize) -> Result<DiscreteMarkovChain> {
    params.validate()?;
    if n_points < 2 {
        return Err(Error::InvalidParameter("n_points must be >= 2".into()));
    }
    let (nodes, gh_weights) = gauss_hermite(n_points)?;
    let sig = params.stationary_sd();
    let abscissa: Vec<f64> = nodes
        .iter()
        .map(|t| std::f64::consts::SQRT_2 * sig * t)
        .collect();
    let pi_sqrt = std::f64::consts::PI.sqrt();
    let weights: Vec<f64> = gh_weights.iter().map(|w| w / pi_sqrt).collect();

    let mut transition = vec![vec![0.0; n_points]; n_points];
    for j in 0..n_points {
        let x = abscissa[j];
        let mut row: Vec<f64> = (0..n_points)
            .map(|k| {
                let ratio = normal_pdf(abscissa[k], params.rho * x, params.innov_sd)
                    / normal_pdf(abscissa[k], 0.0, sig);
                ratio * weights[k]
            })
            .collect();
        let s: f64 = row.iter().sum();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "degenerate row normalizer s = {s}"
            )));
        }
        for p in &mut row {
            *p /= s;
        }
        transition[j] = row;
    }
    DiscreteMarkovChain::new(abscissa, transition, weights)
}

/// Extend a chain with an independent shock: the product chain has
/// `N·|shocks|` states in chain-major order and transition
/// `chain.transition ⊗ (1 × shock_probs)`.
pub fn kron_extend(
    chain: &DiscreteMarkovChain,
    shock_values: &[f64],
    shock_probs: &[f64],
) -> Result<DiscreteMarkovChain> {
    if shock_values.len() != shock_probs.len() || shock_values.is_empty() {
        return Err(Error::Dimension(
            "shock values/probs length mismatch".into(),
        ));
    }
    let psum: f64 = shock_probs.iter().sum();
    if (psum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "shock probs sum to {psum}"
        )));
    }
    if shock_probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidDistribution(
            "negative shock probability".into(),
        ));
    }
    let n = chain.len();
    let s = shock_values.len();
    let m = n * s;
    let mut abscissa = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for i in 0..n {
        for q in 0..s {
            abscissa.push(chain.abscissa[i]);
            weights.push(chain.weights[i] * shock_probs[q]);
        }
    }
    let mut transition = vec![vec![0.0; m]; m];
    for i in 0..n {
        for q in 0..s {
            let row = i * s + q;
            for j in 0..n {
                for r in 0..s {
                    transition[row][j * s + r] = chain.transition[i][j] * shock_probs[r];
                }
            }
        }
    }
    let out = DiscreteMarkovChain {
        abscissa,
        transition,
        weights,
        shock_values: Some(shock_values.to_vec()),
        shock_probs: Some(shock_probs.to_vec()),
    };
    out.validate(false)?;
    Ok(out)
}

/// Stationary distribution by power iteration on the transpose, to 1e-13 in
/// max norm.
pub fn ergodic_distribution(chain: &DiscreteMarkovChain) -> Result<Vec<f64>> {
    ergodic_with_cap(chain, 1_000_000)
}

pub fn ergodic_with_cap(chain: &DiscreteMarkovChain, max_iter: usize) -> Result<Vec<f64>> {
    let n = chain.len();
    let pt = chain.transition().transpose();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..max_iter {
        let mut next = &pt * &v;
        let sum: f64 = next.iter().sum();
        next /= sum;
        let diff = (&next - &v).abs().max();
        v = next;
        if diff < 1e-13 {
            let out: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
            let s: f64 = out.iter().sum();
            return Ok(out.into_iter().map(|x| x / s).collect());
        }
    }
    Err(Error::Convergence(
        "power iteration for the ergodic distribution did not converge; \
         the chain may be reducible or periodic"
            .into(),
    ))
}
