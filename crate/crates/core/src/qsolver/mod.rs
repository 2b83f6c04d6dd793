//! Dense statevector circuit engine, ideal and gate-level HHL linear solvers,
//! and feasibility diagnostics (sparsity, condition number).
//!
//! Qubit 0 is the least significant amplitude-index bit everywhere.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// A pure state over `2^n_qubits` basis states.
#[derive(Debug, Clone)]
pub struct QuantumState {
    pub amplitudes: DVector<C64>,
    pub n_qubits: usize,
    /// Valid prefix length before zero padding.
    pub logical_dim: usize,
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Real part of the logical prefix (for comparing against classical
    /// solution vectors).
    pub fn logical_re(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .take(self.logical_dim)
            .map(|a| a.re)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n_qubits": self.n_qubits,
            "logical_dim": self.logical_dim,
            "re": self.amplitudes.iter().map(|a| a.re).collect::<Vec<_>>(),
            "im": self.amplitudes.iter().map(|a| a.im).collect::<Vec<_>>(),
        })
    }
}

/// Hermitian block embedding `[[0, A], [Aᵀ, 0]]` of a general real system.
#[derive(Debug, Clone)]
pub struct HermitianSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub original_dim: usize,
}

/// HHL hyperparameters. `evolution_time`/`rotation_constant` default to
/// spectrum-derived values when unset.
#[derive(Debug, Clone, Copy)]
pub struct HhlConfig {
    pub clock_qubits: usize,
    pub evolution_time: Option<f64>,
    pub rotation_constant: Option<f64>,
    pub shots: Option<u64>,
}

impl Default for HhlConfig {
    fn default() -> Self {
        HhlConfig {
            clock_qubits: 4,
            evolution_time: None,
            rotation_constant: None,
            shots: None,
        }
    }
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two().max(1)
}

/// Normalize and zero-pad a real vector to the next power of two.
pub fn prepare_state(v: &[f64]) -> Result<QuantumState> {
    let cv: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    prepare_state_complex(&cv)
}

pub fn prepare_state_complex(v: &[C64]) -> Result<QuantumState> {
    if v.is_empty() {
        return Err(Error::DegenerateState("empty vector".into()));
    }
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateState(
            "cannot normalize the zero vector".into(),
        ));
    }
    let dim = next_pow2(v.len());
    let n_qubits = dim.trailing_zeros() as usize;
    let mut amplitudes = DVector::from_element(dim, C64::new(0.0, 0.0));
    for (i, &a) in v.iter().enumerate() {
        amplitudes[i] = a / norm;
    }
    Ok(QuantumState {
        amplitudes,
        n_qubits: n_qubits.max(1),
        logical_dim: v.len(),
    })
    .map(|mut s| {
        // a 1-dim input still occupies one qubit
        if s.amplitudes.len() == 1 {
            let mut amp = DVector::from_element(2, C64::new(0.0, 0.0));
            amp[0] = s.amplitudes[0];
            s.amplitudes = amp;
            s.n_qubits = 1;
        }
        s
    })
}

fn check_unitary(u: &DMatrix<C64>) -> Result<()> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::Dimension("gate matrix must be square".into()));
    }
    let prod = u * u.adjoint();
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (prod[(i, j)] - C64::new(expect, 0.0)).norm() > 1e-10 {
                return Err(Error::NotUnitary(format!(
                    "U·U† deviates from identity at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn apply_controlled(
    state: &QuantumState,
    u: &DMatrix<C64>,
    targets: &[usize],
    controls: &[usize],
) -> Result<QuantumState> {
    check_unitary(u)?;
    let n = state.n_qubits;
    let k = targets.len();
    if u.nrows() != 1 << k {
        return Err(Error::Dimension(format!(
            "gate dimension {} does not match {} target qubits",
            u.nrows(),
            k
        )));
    }
    let mut seen = vec![false; n];
    for &q in targets.iter().chain(controls) {
        if q >= n {
            return Err(Error::Dimension(format!("qubit index {q} out of range")));
        }
        if seen[q] {
            return Err(Error::Dimension(format!("qubit index {q} repeated")));
        }
        seen[q] = true;
    }
    let dim = state.dim();
    let target_mask: usize = targets.iter().map(|&q| 1usize << q).sum();
    let control_mask: usize = controls.iter().map(|&q| 1usize << q).sum();
    let mut amps = state.amplitudes.clone();
    let sub = 1usize << k;
    let mut gathered = vec![C64::new(0.0, 0.0); sub];
    for base in 0..dim {
        if base & target_mask != 0 {
            continue;
        }
        if base & control_mask != control_mask {
            continue;
        }
        for s in 0..sub {
            let mut idx = base;
            for (j, &q) in targets.iter().enumerate() {
                if s >> j & 1 == 1 {
                    idx |= 1 << q;
                }
            }
            gathered[s] = state.amplitudes[idx];
        }
        for (s2, row) in (0..sub).zip(u.row_iter()) {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..sub {
                acc += row[s] * gathered[s];
            }
            let mut idx = base;
            for (j, &q) in targets.iter().enumerate() {
                if s2 >> j & 1 == 1 {
                    idx |= 1 << q;
                }
            }
            amps[idx] = acc;
        }
    }
    let out = QuantumState {
        amplitudes: amps,
        n_qubits: n,
        logical_dim: state.logical_dim,
    };
    debug_assert!((out.norm() - 1.0).abs() < 1e-12);
    Ok(out)
}

/// Apply a unitary on `targets` (ascending significance within the gate's
/// index space: `targets[0]` is the least significant gate bit).
pub fn apply_unitary(
    state: &QuantumState,
    u: &DMatrix<C64>,
    targets: &[usize],
) -> Result<QuantumState> {
    apply_controlled(state, u, targets, &[])
}

fn dft_matrix(dim: usize, inverse: bool) -> DMatrix<C64> {
    let sign = if inverse { -1.0 } else { 1.0 };
    let scale = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |j, k| {
        let phase = sign * 2.0 * std::f64::consts::PI * (j as f64) * (k as f64) / dim as f64;
        C64::new(phase.cos() * scale, phase.sin() * scale)
    })
}

/// Quantum Fourier transform on a contiguous register (as the full DFT on the
/// register's amplitude index).
pub fn qft(state: &QuantumState, qubits: std::ops::Range<usize>) -> Result<QuantumState> {
    let targets: Vec<usize> = qubits.collect();
    let dim = 1usize << targets.len();
    apply_unitary(state, &dft_matrix(dim, false), &targets)
}

pub fn inverse_qft(state: &QuantumState, qubits: std::ops::Range<usize>) -> Result<QuantumState> {
    let targets: Vec<usize> = qubits.collect();
    let dim = 1usize << targets.len();
    apply_unitary(state, &dft_matrix(dim, true), &targets)
}

/// Overlap squared `|⟨a|b⟩|²`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(
            "states have different register sizes".into(),
        ));
    }
    let inner: C64 = a
        .amplitudes
        .iter()
        .zip(b.amplitudes.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(inner.norm_sqr())
}

/// Block embedding `[[0, A], [Aᵀ, 0]]` with rhs `(b, 0)`; the solution of the
/// embedded system is `(0, ν̄)` and its spectrum is `{±σ_i(A)}`.
pub fn hermitian_embed(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<HermitianSystem> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::Dimension(
            "A must be square with matching rhs".into(),
        ));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite entries in the system".into(),
        ));
    }
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, n + j)] = a[(i, j)];
            m[(n + j, i)] = a[(i, j)];
        }
    }
    let mut rhs = DVector::zeros(2 * n);
    for i in 0..n {
        rhs[i] = b[i];
    }
    Ok(HermitianSystem {
        matrix: m,
        rhs,
        original_dim: n,
    })
}

fn eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    (vals, eig.eigenvectors)
}

/// Noiseless, infinite-precision HHL: exact eigendecomposition, exact
/// inversion of the eigen-coefficients, renormalized.
pub fn ideal_hhl(sys: &HermitianSystem) -> Result<QuantumState> {
    let (vals, vecs) = eigen_sorted(&sys.matrix);
    let max_abs = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min_abs = vals.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if min_abs < 1e-12 * max_abs {
        return Err(Error::IllConditioned(format!(
            "|λ|_min/|λ|_max = {} below 1e-12",
            min_abs / max_abs
        )));
    }
    let b_norm = sys.rhs.norm();
    if b_norm == 0.0 {
        return Err(Error::DegenerateState("zero right-hand side".into()));
    }
    let b_unit = &sys.rhs / b_norm;
    let mut x = DVector::zeros(sys.matrix.nrows());
    for (i, &lam) in vals.iter().enumerate() {
        let a_i = vecs.column(i);
        let beta = a_i.dot(&b_unit);
        x += a_i * (beta / lam);
    }
    prepare_state(x.as_slice())
}

/// Largest per-row count of entries exceeding `threshold` in absolute value.
pub fn sparsity(a: &DMatrix<f64>, threshold: f64) -> usize {
    (0..a.nrows())
        .map(|i| a.row(i).iter().filter(|v| v.abs() > threshold).count())
        .max()
        .unwrap_or(0)
}

/// Condition number `σ_max / σ_min`.
pub fn condition_number(a: &DMatrix<f64>) -> Result<f64> {
    let svd = a.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let (max, min) = (sv[0], *sv.last().unwrap());
    if min <= 1e-300 * max.max(1.0) {
        return Err(Error::SingularSystem(
            "smallest singular value is zero".into(),
        ));
    }
    Ok(max / min)
}

/// Pad the embedded system to a power-of-two dimension. Padded rows carry
/// `pad_value` on the diagonal (spectrally inert: the rhs is zero there).
fn pad_system(sys: &HermitianSystem, pad_value: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = sys.matrix.nrows();
    let d = next_pow2(n);
    if d == n {
        return (sys.matrix.clone(), sys.rhs.clone());
    }
    let mut m = DMatrix::zeros(d, d);
    m.view_mut((0, 0), (n, n)).copy_from(&sys.matrix);
    for i in n..d {
        m[(i, i)] = pad_value;
    }
    let mut rhs = DVector::zeros(d);
    rhs.rows_mut(0, n).copy_from(&sys.rhs);
    (m, rhs)
}

/// Gate-level HHL on the statevector engine.
///
/// Registers: solution qubits `0..n_b`, clock `n_b..n_b+n_c`, ancilla last.
/// Clock values decode eigenvalues in two's complement, so eigenphases must
/// satisfy `|λt/2π| < 1/2`. Returns the post-selected solution-register state
/// (ancilla 1, clock 0) and the pre-projection probability of ancilla 1.
pub fn circuit_hhl(sys: &HermitianSystem, cfg: &HhlConfig) -> Result<(QuantumState, f64)> {
    if cfg.clock_qubits == 0 {
        return Err(Error::InvalidParameter(
            "need at least one clock qubit".into(),
        ));
    }
    let (vals_raw, _) = eigen_sorted(&sys.matrix);
    let max_abs = vals_raw.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min_abs = vals_raw.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if min_abs < 1e-12 * max_abs {
        return Err(Error::IllConditioned(
            "embedded system is numerically singular".into(),
        ));
    }
    let n_c = cfg.clock_qubits;
    let t = cfg
        .evolution_time
        .unwrap_or_else(|| std::f64::consts::PI * (1.0 - 2f64.powi(1 - n_c as i32)) / max_abs);
    if t <= 0.0 {
        return Err(Error::InvalidParameter("evolution time must be > 0".into()));
    }
    let c_rot = cfg.rotation_constant.unwrap_or(0.9 * min_abs);
    if !(c_rot > 0.0) {
        return Err(Error::InvalidParameter(
            "rotation constant must be > 0".into(),
        ));
    }

    let (m_pad, rhs_pad) = pad_system(sys, max_abs);
    let (vals, vecs) = eigen_sorted(&m_pad);
    for &lam in &vals {
        if (lam * t / (2.0 * std::f64::consts::PI)).abs() >= 0.5 {
            return Err(Error::PhaseAliasing(format!(
                "eigenphase {} outside the two's-complement window (−1/2, 1/2)",
                lam * t / (2.0 * std::f64::consts::PI)
            )));
        }
    }
    let d = m_pad.nrows();
    let n_b = d.trailing_zeros() as usize;
    let n_total = n_b + n_c + 1;

    // |b> on the solution register, clock and ancilla |0>
    let b_state = prepare_state(rhs_pad.as_slice())?;
    let full_dim = 1usize << n_total;
    let mut amps = DVector::from_element(full_dim, C64::new(0.0, 0.0));
    for i in 0..d {
        amps[i] = b_state.amplitudes[i];
    }
    let mut state = QuantumState {
        amplitudes: amps,
        n_qubits: n_total,
        logical_dim: full_dim,
    };

    let h_gate = {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(2, 2, &[s, s, s, -s]).map(|v| C64::new(v, 0.0))
    };
    for q in n_b..n_b + n_c {
        state = apply_unitary(&state, &h_gate, &[q])?;
    }

    // controlled powers of e^{iAt} from the exact eigendecomposition
    let sol_targets: Vec<usize> = (0..n_b).collect();
    let evolution = |power: f64| -> DMatrix<C64> {
        let mut u = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for (i, &lam) in vals.iter().enumerate() {
            let phase = lam * t * power;
            let factor = C64::new(phase.cos(), phase.sin());
            let a_i = vecs.column(i);
            for r in 0..d {
                for c in 0..d {
                    u[(r, c)] += factor * C64::new(a_i[r] * a_i[c], 0.0);
                }
            }
        }
        u
    };
    for j in 0..n_c {
        let u = evolution(2f64.powi(j as i32));
        state = apply_controlled(&state, &u, &sol_targets, &[n_b + j])?;
    }

    state = inverse_qft(&state, n_b..n_b + n_c)?;

    // ancilla rotation conditioned on the decoded clock eigenvalue
    let m_clock = 1usize << n_c;
    let anc_bit = 1usize << (n_b + n_c);
    let clock_shift = n_b;
    let mut new_amps = state.amplitudes.clone();
    for idx in 0..full_dim {
        if idx & anc_bit != 0 {
            continue;
        }
        let m = (idx >> clock_shift) & (m_clock - 1);
        if m == 0 {
            continue;
        }
        let m_signed = if m >= m_clock / 2 {
            m as i64 - m_clock as i64
        } else {
            m as i64
        };
        let lam_tilde = 2.0 * std::f64::consts::PI * m_signed as f64 / (t * m_clock as f64);
        let ratio = (c_rot / lam_tilde).clamp(-1.0, 1.0);
        let half = ratio.asin();
        let a0 = state.amplitudes[idx];
        new_amps[idx] = a0 * C64::new(half.cos(), 0.0);
        new_amps[idx | anc_bit] = a0 * C64::new(half.sin(), 0.0);
    }
    state = QuantumState {
        amplitudes: new_amps,
        n_qubits: n_total,
        logical_dim: full_dim,
    };

    // uncompute QPE
    state = qft(&state, n_b..n_b + n_c)?;
    for j in (0..n_c).rev() {
        let u = evolution(-(2f64.powi(j as i32)));
        state = apply_controlled(&state, &u, &sol_targets, &[n_b + j])?;
    }
    for q in n_b..n_b + n_c {
        state = apply_unitary(&state, &h_gate, &[q])?;
    }

    // post-select ancilla = 1
    let success: f64 = (0..full_dim)
        .filter(|i| i & anc_bit != 0)
        .map(|i| state.amplitudes[i].norm_sqr())
        .sum();
    if success < 1e-12 {
        return Err(Error::PostSelectionFailure(format!(
            "ancilla-1 probability {success} below 1e-12"
        )));
    }
    // keep the clock = 0 block of the ancilla-1 branch
    let mut sol = DVector::from_element(d, C64::new(0.0, 0.0));
    for i in 0..d {
        sol[i] = state.amplitudes[i | anc_bit];
    }
    let norm = sol.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::PostSelectionFailure(
            "clock register failed to uncompute".into(),
        ));
    }
    let solution = QuantumState {
        amplitudes: sol / C64::new(norm, 0.0),
        n_qubits: n_b,
        logical_dim: sys.matrix.nrows(),
    };
    Ok((solution, success))
}

/// Sample measurement outcomes (basis-state indices) from a state,
/// reproducibly by seed.
pub fn sample_counts(state: &QuantumState, shots: u64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<f64> = state.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let mut out = Vec::with_capacity(shots as usize);
    for _ in 0..shots {
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if r < acc {
                chosen = i;
                break;
            }
        }
        out.push(chosen);
    }
    out
}
