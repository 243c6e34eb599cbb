//! Monopartite embezzlement errors, the brute-force unitary oracle that
//! validates them, bipartite lifting, and embezzling-family scans.
//!
//! The error of embezzling a d-dimensional target ψ from a resource with
//! density-operator spectrum ρ is min_u ‖ρ⊗ψ − u(ρ⊗|0⟩⟨0|)u*‖₁. Both
//! operators have known spectra, so the minimum over unitaries is attained
//! by aligning decreasingly sorted spectra; that realization is *validated*,
//! not assumed: `bruteforce_unitary_oracle` minimizes the same trace norm
//! over explicit unitaries and must reproduce the sorted-alignment value
//! before any scan result is trusted.
//!
//! Norm convention: errors are trace norms of density-operator differences
//! and range in [0, 2]. The √ε bipartite lift refers to the vector norm on
//! the purified side.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finchain::{ground_projection_with_kernel, halfchain_modes, open_chain_hamiltonian, KernelFill};
use crate::hopping::HoppingModel;
use crate::linalg;
use crate::quasifree::{product_spectrum_topk, TruncatedSpectrum};
use crate::spectral::Tolerances;

/// A d-dimensional pure target, represented by its Schmidt squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetState {
    dimension: usize,
    schmidt_squares: Vec<f64>,
}

impl TargetState {
    /// Validates non-negativity and unit sum, sorts descending.
    pub fn new(mut schmidt_squares: Vec<f64>) -> Result<Self> {
        if schmidt_squares.is_empty() {
            return Err(Error::Validation("target needs at least one Schmidt coefficient".into()));
        }
        if schmidt_squares.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation("Schmidt squares must be nonnegative".into()));
        }
        let total: f64 = schmidt_squares.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "Schmidt squares must sum to 1, got {total}"
            )));
        }
        schmidt_squares.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            dimension: schmidt_squares.len(),
            schmidt_squares,
        })
    }

    /// ψ = (1/d, …, 1/d).
    pub fn maximally_entangled(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: "must be >= 1".into(),
            });
        }
        Self::new(vec![1.0 / dimension as f64; dimension])
    }

    /// Product target (1, 0, …, 0).
    pub fn pure_product(dimension: usize) -> Result<Self> {
        let mut squares = vec![0.0; dimension];
        squares[0] = 1.0;
        Self::new(squares)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn schmidt_squares(&self) -> &[f64] {
        &self.schmidt_squares
    }
}

/// ℓ¹ distance of two descending spectra after zero-padding the shorter:
/// the trace-norm distance of their commuting alignments.
pub fn spectrum_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    for (label, v) in [("first", a), ("second", b)] {
        if v.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation(format!(
                "{label} spectrum has a negative entry"
            )));
        }
        if v.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return Err(Error::Validation(format!(
                "{label} spectrum is not sorted descending"
            )));
        }
        let total: f64 = v.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::Validation(format!(
                "{label} spectrum sums to {total} > 1"
            )));
        }
    }
    let len = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    Ok((0..len).map(|i| (get(a, i) - get(b, i)).abs()).sum())
}

/// Monopartite embezzlement error of a truncated resource spectrum against
/// a target, with the rigor interval contributed by the discarded mass.
///
/// Returns (value, uncertainty): the ℓ¹ alignment distance between
/// sorted {ρ_i·s_k} and sorted {ρ_i} zero-padded to K·d, and twice the
/// discarded mass (truncation can misstate the error by at most the
/// discarded mass on each side).
pub fn monopartite_error(rho: &TruncatedSpectrum, psi: &TargetState) -> (f64, f64) {
    let entries = rho.entries();
    let mut products = Vec::with_capacity(entries.len() * psi.dimension());
    for &p in entries {
        for &s in psi.schmidt_squares() {
            products.push(p * s);
        }
    }
    products.sort_by(|a, b| b.total_cmp(a));
    let value = products
        .iter()
        .enumerate()
        .map(|(i, &p)| (p - entries.get(i).copied().unwrap_or(0.0)).abs())
        .sum();
    (value, 2.0 * rho.discarded_mass())
}

/// √ε upper bound on the bipartite vector-norm error.
pub fn bipartite_bound(epsilon_mono: f64) -> f64 {
    debug_assert!(epsilon_mono >= -1e-12);
    epsilon_mono.max(0.0).sqrt()
}

fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller on open-interval uniforms
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_unitary(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(standard_normal(rng), standard_normal(rng)));
    g.qr().q()
}

fn conjugated_diagonal_distance(d1: &[f64], d2: &[f64], u: &DMatrix<C64>) -> f64 {
    let n = d1.len();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(d1[i], 0.0);
    }
    for i in 0..n {
        if d2[i] == 0.0 {
            continue;
        }
        let col = u.column(i);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] -= col[r] * col[c].conj() * C64::new(d2[i], 0.0);
            }
        }
    }
    linalg::trace_norm_hermitian(&m)
}

/// Numerically minimizes ‖diag(ρ⊗ψ) − u·diag(ρ⊗e₁)·u*‖₁ over unitaries:
/// random starts followed by accept-if-better rotations in random 2-planes
/// with decreasing step size. Deterministic in the seed.
///
/// Independent oracle for the sorted-alignment identity; capped at total
/// dimension 8 where the search space is still tractable.
pub fn bruteforce_unitary_oracle(
    rho_spectrum: &[f64],
    psi: &TargetState,
    seed: u64,
    iterations: usize,
) -> Result<f64> {
    let n = rho_spectrum.len() * psi.dimension();
    if n == 0 || n > 8 {
        return Err(Error::InvalidParameter {
            name: "rho_spectrum",
            reason: format!("total dimension {n} exceeds the oracle cap of 8"),
        });
    }
    if iterations < 1000 {
        return Err(Error::InvalidParameter {
            name: "iterations",
            reason: format!("need at least 1000 iterations, got {iterations}"),
        });
    }
    if rho_spectrum.iter().any(|&p| p < 0.0) {
        return Err(Error::Validation("rho_spectrum has a negative entry".into()));
    }

    let d = psi.dimension();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for (i, &p) in rho_spectrum.iter().enumerate() {
        for (k, &s) in psi.schmidt_squares().iter().enumerate() {
            d1[i * d + k] = p * s;
        }
        d2[i * d] = p;
    }

    if n == 1 {
        // U(1) conjugation fixes a 1x1 diagonal
        return Ok((d1[0] - d2[0]).abs());
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let restarts = 6;
    let per_restart = (iterations / restarts).max(200);
    let mut best = f64::INFINITY;
    for restart in 0..restarts {
        let mut u = if restart == 0 {
            DMatrix::identity(n, n)
        } else {
            random_unitary(n, &mut rng)
        };
        let mut cost = conjugated_diagonal_distance(&d1, &d2, &u);
        let mut step = 0.6;
        let mut stall = 0usize;
        for _ in 0..per_restart {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let theta = standard_normal(&mut rng) * step;
            let phase = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * std::f64::consts::PI));
            let mut candidate = u.clone();
            // rows i, j mixed by a Givens-type rotation
            for c in 0..n {
                let a = u[(i, c)];
                let b = u[(j, c)];
                candidate[(i, c)] = a * theta.cos() - b * phase * theta.sin();
                candidate[(j, c)] = a * phase.conj() * theta.sin() + b * theta.cos();
            }
            let candidate_cost = conjugated_diagonal_distance(&d1, &d2, &candidate);
            if candidate_cost < cost - 1e-15 {
                u = candidate;
                cost = candidate_cost;
                stall = 0;
            } else {
                stall += 1;
                if stall >= 30 {
                    step *= 0.7;
                    stall = 0;
                    if step < 1e-9 {
                        break;
                    }
                }
            }
        }
        best = best.min(cost);
    }
    Ok(best)
}

/// Deterministic ε/4-net of descending Schmidt spectra in dimension d:
/// all descending integer compositions of T = ⌈d/mesh⌉ scaled by 1/T.
/// Covering radius ≤ d/T ≤ mesh in ℓ¹.
pub fn cover_net(dimension: usize, mesh: f64) -> Result<Vec<TargetState>> {
    if dimension == 0 {
        return Err(Error::InvalidParameter {
            name: "dimension",
            reason: "must be >= 1".into(),
        });
    }
    if !(mesh > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mesh",
            reason: format!("must be positive, got {mesh}"),
        });
    }
    let t = (dimension as f64 / mesh).ceil() as u64;
    let mut out = Vec::new();
    let mut parts: Vec<u64> = Vec::with_capacity(dimension);
    fn descend(
        remaining: u64,
        slots: usize,
        max_part: u64,
        t: u64,
        parts: &mut Vec<u64>,
        out: &mut Vec<TargetState>,
    ) {
        if slots == 1 {
            if remaining <= max_part {
                parts.push(remaining);
                let squares: Vec<f64> = parts.iter().map(|&x| x as f64 / t as f64).collect();
                out.push(TargetState {
                    dimension: squares.len(),
                    schmidt_squares: squares,
                });
                parts.pop();
            }
            return;
        }
        // descending parts, each at least the average of what remains
        let lo = remaining.div_ceil(slots as u64);
        let hi = remaining.min(max_part);
        for part in (lo..=hi).rev() {
            parts.push(part);
            descend(remaining - part, slots - 1, part, t, parts, out);
            parts.pop();
        }
    }
    descend(t, dimension, t, t, &mut parts, &mut out);
    Ok(out)
}

/// Which targets a scan cell is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPolicy {
    /// ψ = (1/d, …, 1/d).
    MaxEnt,
    /// Worst case over a deterministic ε/4-net with ε = min of the ε grid.
    Cover,
}

/// Scan parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ScanConfig {
    pub lengths: Vec<usize>,
    pub dims: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub policy: TargetPolicy,
    pub top_k: usize,
    pub mass_floor: f64,
    #[serde(skip)]
    pub tolerances: Tolerances,
}

impl ScanConfig {
    pub fn new(lengths: Vec<usize>, dims: Vec<usize>, eps_grid: Vec<f64>) -> Self {
        Self {
            lengths,
            dims,
            eps_grid,
            policy: TargetPolicy::MaxEnt,
            top_k: 4096,
            mass_floor: 1e-6,
            tolerances: Tolerances::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ascending = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if self.lengths.is_empty() || !ascending(&self.lengths) {
            return Err(Error::Validation("lengths must be nonempty and ascending".into()));
        }
        if self.lengths.iter().any(|&n| n % 2 != 0 || n < 2) {
            return Err(Error::Validation(
                "lengths must be even (scans cut at n/2; odd XX chains are kernel-degenerate)".into(),
            ));
        }
        if self.dims.is_empty() || !ascending(&self.dims) || self.dims[0] == 0 {
            return Err(Error::Validation("dims must be nonempty, positive, ascending".into()));
        }
        if self.eps_grid.is_empty() || self.eps_grid.iter().any(|&e| !(e > 0.0 && e <= 2.0)) {
            return Err(Error::Validation("eps grid must be nonempty with entries in (0, 2]".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Validation("top_k must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.mass_floor) {
            return Err(Error::Validation("mass_floor must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One scan cell.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub uncertainty: f64,
    pub bipartite_bound: f64,
}

/// Threshold length n(ε, d): smallest listed n with ε + uncertainty < ε_target.
#[derive(Debug, Clone, Serialize)]
pub struct Threshold {
    pub eps: f64,
    pub d: usize,
    pub n: Option<usize>,
}

/// Scan output: per-cell errors, threshold lengths, kernel bookkeeping,
/// and cells where the error failed to decrease with n.
#[derive(Debug, Clone, Serialize)]
pub struct EmbezzleReport {
    pub rows: Vec<ScanRow>,
    pub thresholds: Vec<Threshold>,
    pub kernel_dims: Vec<(usize, usize)>,
    pub non_monotone: Vec<(usize, usize)>,
}

/// Half-chain truncated product spectrum of the open n-chain ground state,
/// plus the kernel dimension encountered.
pub fn halfchain_truncated(
    model: &HoppingModel,
    n: usize,
    cfg: &ScanConfig,
) -> Result<(TruncatedSpectrum, usize)> {
    let chain = open_chain_hamiltonian(model, n, n / 2)?;
    let (p, kernel_dim) = ground_projection_with_kernel(&chain, KernelFill::Empty, cfg.tolerances.zero_tol);
    let modes = halfchain_modes(&chain, &p)?;
    let spectrum = product_spectrum_topk(&modes, cfg.top_k, cfg.mass_floor)?;
    Ok((spectrum, kernel_dim))
}

/// Targets a cell is measured against under the given policy.
pub fn cell_targets(cfg: &ScanConfig, d: usize) -> Result<Vec<TargetState>> {
    match cfg.policy {
        TargetPolicy::MaxEnt => Ok(vec![TargetState::maximally_entangled(d)?]),
        TargetPolicy::Cover => {
            let min_eps = cfg.eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
            cover_net(d, min_eps / 4.0)
        }
    }
}

/// Worst-case monopartite error of one (n, d) cell.
pub fn scan_row(spectrum: &TruncatedSpectrum, n: usize, d: usize, targets: &[TargetState]) -> ScanRow {
    let mut epsilon = 0.0f64;
    let mut uncertainty = 0.0f64;
    for target in targets {
        let (value, unc) = monopartite_error(spectrum, target);
        if value > epsilon {
            epsilon = value;
        }
        uncertainty = unc;
    }
    ScanRow {
        n,
        d,
        epsilon,
        uncertainty,
        bipartite_bound: bipartite_bound(epsilon + uncertainty),
    }
}

/// Assembles rows into a report: sorted rows, ε-thresholds, monotonicity flags.
pub fn assemble_report(
    cfg: &ScanConfig,
    mut rows: Vec<ScanRow>,
    kernel_dims: Vec<(usize, usize)>,
) -> EmbezzleReport {
    rows.sort_by(|a, b| (a.n, a.d).cmp(&(b.n, b.d)));
    let mut thresholds = Vec::new();
    for &eps in &cfg.eps_grid {
        for &d in &cfg.dims {
            let n = rows
                .iter()
                .find(|r| r.d == d && r.epsilon + r.uncertainty < eps)
                .map(|r| r.n);
            thresholds.push(Threshold { eps, d, n });
        }
    }
    let mut non_monotone = Vec::new();
    for &d in &cfg.dims {
        let mut previous: Option<f64> = None;
        for row in rows.iter().filter(|r| r.d == d) {
            if let Some(prev) = previous {
                if row.epsilon > prev + 1e-12 {
                    non_monotone.push((row.n, d));
                }
            }
            previous = Some(row.epsilon);
        }
    }
    EmbezzleReport {
        rows,
        thresholds,
        kernel_dims,
        non_monotone,
    }
}

/// Full scan over the (n, d) grid: open-chain ground states, half-chain
/// spectra, per-cell worst-case errors, thresholds.
pub fn family_scan(model: &HoppingModel, cfg: &ScanConfig) -> Result<EmbezzleReport> {
    cfg.validate()?;
    let mut spectra = Vec::with_capacity(cfg.lengths.len());
    let mut kernel_dims = Vec::with_capacity(cfg.lengths.len());
    for &n in &cfg.lengths {
        let (spectrum, kernel_dim) = halfchain_truncated(model, n, cfg)?;
        kernel_dims.push((n, kernel_dim));
        spectra.push((n, spectrum));
    }
    let mut rows = Vec::new();
    for &d in &cfg.dims {
        let targets = cell_targets(cfg, d)?;
        for (n, spectrum) in &spectra {
            rows.push(scan_row(spectrum, *n, d, &targets));
        }
    }
    Ok(assemble_report(cfg, rows, kernel_dims))
}
