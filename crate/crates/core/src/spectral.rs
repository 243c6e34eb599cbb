//! Positive spectral projector symbols, their discontinuities, and the
//! criticality decision.
//!
//! The ground-state symbol of a hopping model is p̂(k), the orthogonal
//! projector onto the strictly positive eigenvalues of ĥ(k) (plus, under the
//! `Full` kernel policy, the kernel of ĥ(k)). A model is critical when p̂ has
//! at least one jump on the circle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hopping::{build_symbol, BlockSymbol, HoppingModel};
use crate::linalg;

/// What to do with the kernel of ĥ(k) when assembling p̂(k).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelPolicy {
    /// p̂ = p̂₊ (the default, p₀ = 0).
    Empty,
    /// p̂ = p̂₊ + projector onto ker ĥ(k).
    Full,
}

/// Numerical knobs for projector construction and jump detection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Eigenvalues in [-zero_tol, zero_tol] are assigned to the kernel.
    pub zero_tol: f64,
    /// Scan grid size for discontinuity detection.
    pub grid_size: usize,
    /// Frobenius distance of adjacent projectors above which an interval
    /// is treated as a jump candidate.
    pub jump_threshold: f64,
    /// Abort when the scan sees more candidates than this.
    pub max_jumps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero_tol: 1e-10,
            grid_size: 4096,
            jump_threshold: 1e-3,
            max_jumps: 64,
        }
    }
}

/// One jump of a projector symbol.
#[derive(Debug, Clone)]
pub struct Discontinuity {
    /// Jump location k₀ ∈ [0, 2π).
    pub location: f64,
    /// Left limit p̂(k₀⁻), evaluated at k₀ - 1e-6.
    pub left: DMatrix<C64>,
    /// Right limit p̂(k₀⁺), evaluated at k₀ + 1e-6.
    pub right: DMatrix<C64>,
    /// ‖left - right‖_F.
    pub jump_size: f64,
}

impl Serialize for Discontinuity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Discontinuity", 4)?;
        s.serialize_field("k0", &self.location)?;
        s.serialize_field("jump_size", &self.jump_size)?;
        s.serialize_field("left", &matrix_rows(&self.left))?;
        s.serialize_field("right", &matrix_rows(&self.right))?;
        s.end()
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

/// Offset used for the stored one-sided limits at a jump.
pub const LIMIT_OFFSET: f64 = 1e-6;

enum Evaluator {
    Spectral {
        symbol: BlockSymbol,
        zero_tol: f64,
        policy: KernelPolicy,
    },
    Custom(Arc<dyn Fn(f64) -> DMatrix<C64> + Send + Sync>),
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluator::Spectral { zero_tol, policy, .. } => f
                .debug_struct("Spectral")
                .field("zero_tol", zero_tol)
                .field("policy", policy)
                .finish(),
            Evaluator::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A projector-valued symbol with its jump list.
///
/// `eval` returns the left-continuous representative: at a detected jump it
/// returns the stored left limit, elsewhere the pointwise spectral projector.
#[derive(Debug)]
pub struct ProjectorSymbol {
    bands: usize,
    evaluator: Evaluator,
    discontinuities: Vec<Discontinuity>,
}

impl ProjectorSymbol {
    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn discontinuities(&self) -> &[Discontinuity] {
        &self.discontinuities
    }

    /// Pointwise value ignoring the left-continuity convention.
    pub(crate) fn eval_raw(&self, k: f64) -> DMatrix<C64> {
        match &self.evaluator {
            Evaluator::Spectral {
                symbol,
                zero_tol,
                policy,
            } => projector_with_policy(symbol, k, *zero_tol, *policy)
                .expect("symbol eigendecomposition cannot fail on finite input"),
            Evaluator::Custom(f) => f(k),
        }
    }

    /// Pointwise value with an overridden kernel tolerance; `None` for
    /// custom evaluators. The quadrature layer uses a near-machine
    /// tolerance to locate the underlying jump without the O(zero_tol)
    /// bias the configured kernel band puts on band crossings.
    pub(crate) fn eval_with_kernel_tol(&self, k: f64, tol: f64) -> Option<DMatrix<C64>> {
        match &self.evaluator {
            Evaluator::Spectral { symbol, policy, .. } => Some(
                projector_with_policy(symbol, k, tol, *policy)
                    .expect("symbol eigendecomposition cannot fail on finite input"),
            ),
            Evaluator::Custom(_) => None,
        }
    }

    /// Left-continuous representative.
    pub fn eval(&self, k: f64) -> DMatrix<C64> {
        let k = k.rem_euclid(2.0 * PI);
        for d in &self.discontinuities {
            if (k - d.location).abs() < 1e-9 {
                return d.left.clone();
            }
        }
        self.eval_raw(k)
    }

    /// Wraps an arbitrary evaluator, detecting its jumps and checking the
    /// projector property on the scan grid.
    pub fn from_custom<F>(bands: usize, f: F, tols: &Tolerances) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<C64> + Send + Sync + 'static,
    {
        let psym = Self::from_custom_unchecked(bands, f, tols)?;
        for j in 0..64 {
            let k = 2.0 * PI * (j as f64 + 0.5) / 64.0;
            let p = psym.eval_raw(k);
            linalg::check_projector(&p, 1e-9)
                .map_err(|e| Error::Validation(format!("custom symbol at k={k:.6}: {e}")))?;
        }
        Ok(psym)
    }

    /// Same as [`ProjectorSymbol::from_custom`] but skips the projector
    /// check, so downstream range errors can be exercised.
    pub fn from_custom_unchecked<F>(bands: usize, f: F, tols: &Tolerances) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<C64> + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        let discontinuities = detect_discontinuities(
            |k| f(k),
            tols.grid_size,
            tols.jump_threshold,
            tols.max_jumps,
        )?;
        Ok(Self {
            bands,
            evaluator: Evaluator::Custom(f),
            discontinuities,
        })
    }
}

/// Orthogonal projector onto the eigenvalues of ĥ(k) above `zero_tol`.
///
/// Eigenvalues within [-zero_tol, zero_tol] count as kernel.
pub fn positive_projector_at(symbol: &BlockSymbol, k: f64, zero_tol: f64) -> Result<DMatrix<C64>> {
    projector_with_policy(symbol, k, zero_tol, KernelPolicy::Empty)
}

fn projector_with_policy(
    symbol: &BlockSymbol,
    k: f64,
    zero_tol: f64,
    policy: KernelPolicy,
) -> Result<DMatrix<C64>> {
    if !(zero_tol > 0.0 && zero_tol <= 1e-3) {
        return Err(Error::InvalidParameter {
            name: "zero_tol",
            reason: format!("must lie in (0, 1e-3], got {zero_tol}"),
        });
    }
    let h = symbol.eval(k);
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigensolverFailure { k });
    }
    let (values, vectors) = linalg::eigh(&h);
    let selected: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| match policy {
            KernelPolicy::Empty => v > zero_tol,
            KernelPolicy::Full => v > -zero_tol,
        })
        .map(|(j, _)| j)
        .collect();
    Ok(linalg::projector_from_columns(&vectors, &selected))
}

/// Builds the ground-state projector symbol p̂ of a model and populates its
/// jump list.
pub fn ground_state_symbol(
    symbol: &BlockSymbol,
    policy: KernelPolicy,
    tols: &Tolerances,
) -> Result<ProjectorSymbol> {
    // validates zero_tol once; later evaluations cannot fail
    projector_with_policy(symbol, 0.0, tols.zero_tol, policy)?;
    let discontinuities = detect_discontinuities(
        |k| {
            projector_with_policy(symbol, k, tols.zero_tol, policy)
                .expect("zero_tol validated above and symbol entries are finite")
        },
        tols.grid_size,
        tols.jump_threshold,
        tols.max_jumps,
    )?;
    Ok(ProjectorSymbol {
        bands: symbol.bands(),
        evaluator: Evaluator::Spectral {
            symbol: symbol.clone(),
            zero_tol: tols.zero_tol,
            policy,
        },
        discontinuities,
    })
}

/// Scans a projector-valued function for jumps and refines each candidate
/// by bisection.
///
/// The scan uses midpoint-offset nodes k_j = 2π(j+½)/G so that jump points
/// sitting at round fractions of 2π are never sampled directly. Candidates
/// are refined to sub-1e-12 width, then the one-sided limits are taken at
/// k₀ ∓ 1e-6 and the candidate is kept when they still differ by more than
/// `jump_threshold`.
pub fn detect_discontinuities<F>(
    eval: F,
    grid_size: usize,
    jump_threshold: f64,
    max_jumps: usize,
) -> Result<Vec<Discontinuity>>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    if grid_size < 256 {
        return Err(Error::GridTooSmall {
            grid: grid_size,
            reason: "discontinuity scan needs at least 256 nodes".into(),
        });
    }
    if !(jump_threshold > 0.0 && jump_threshold < 1.0) {
        return Err(Error::InvalidParameter {
            name: "jump_threshold",
            reason: format!("must lie in (0, 1), got {jump_threshold}"),
        });
    }

    let g = grid_size as f64;
    let node = |j: usize| 2.0 * PI * (j as f64 + 0.5) / g;
    let values: Vec<DMatrix<C64>> = (0..grid_size).map(|j| eval(node(j))).collect();

    let mut candidates = Vec::new();
    for j in 0..grid_size {
        let next = (j + 1) % grid_size;
        if linalg::fro_distance(&values[next], &values[j]) > jump_threshold {
            // unwrapped interval; may extend past 2π at the seam
            let a = node(j);
            let b = if next == 0 { node(0) + 2.0 * PI } else { node(next) };
            candidates.push((a, b));
            if candidates.len() > max_jumps {
                return Err(Error::TooManyJumps { max_jumps });
            }
        }
    }

    let mut found: Vec<Discontinuity> = Vec::new();
    for (mut a, mut b) in candidates {
        let mut left_value = eval(a.rem_euclid(2.0 * PI));
        let mut right_value = eval(b.rem_euclid(2.0 * PI));
        for _ in 0..64 {
            if b - a <= 1e-12 {
                break;
            }
            let m = 0.5 * (a + b);
            let mid_value = eval(m.rem_euclid(2.0 * PI));
            let da = linalg::fro_distance(&mid_value, &left_value);
            let db = linalg::fro_distance(&right_value, &mid_value);
            if da >= db {
                b = m;
                right_value = mid_value;
            } else {
                a = m;
                left_value = mid_value;
            }
        }
        let location = (0.5 * (a + b)).rem_euclid(2.0 * PI);
        let left = eval((location - LIMIT_OFFSET).rem_euclid(2.0 * PI));
        let right = eval((location + LIMIT_OFFSET).rem_euclid(2.0 * PI));
        let jump_size = linalg::fro_distance(&left, &right);
        if jump_size <= jump_threshold {
            continue;
        }
        if found.iter().any(|d| {
            let delta = (d.location - location).abs();
            delta < 1e-7 || (2.0 * PI - delta) < 1e-7
        }) {
            continue;
        }
        found.push(Discontinuity {
            location,
            left,
            right,
            jump_size,
        });
    }
    found.sort_by(|x, y| x.location.total_cmp(&y.location));
    Ok(found)
}

/// Criticality verdict with the jumps as evidence.
#[derive(Debug, Serialize)]
pub struct CriticalityReport {
    pub critical: bool,
    pub evidence: Vec<Discontinuity>,
}

/// A model is critical iff its ground-state symbol (empty kernel policy)
/// has at least one discontinuity.
pub fn is_critical(model: &HoppingModel, tols: &Tolerances) -> Result<CriticalityReport> {
    let symbol = build_symbol(model)?;
    let psym = ground_state_symbol(&symbol, KernelPolicy::Empty, tols)?;
    Ok(CriticalityReport {
        critical: !psym.discontinuities().is_empty(),
        evidence: psym.discontinuities.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopping::{model_zoo, ZooModel};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn xx_symbol() -> BlockSymbol {
        build_symbol(&model_zoo(ZooModel::Xx).unwrap()).unwrap()
    }

    fn ssh_symbol() -> BlockSymbol {
        build_symbol(&model_zoo(ZooModel::Ssh).unwrap()).unwrap()
    }

    /// ĥ(k) = diag(1+cos k, -(1+cos k)): gapless but not critical.
    fn diag_band_model() -> HoppingModel {
        let d = |a: f64, b: f64| {
            DMatrix::from_row_slice(2, 2, &[re(a), re(0.0), re(0.0), re(b)])
        };
        let coefficients = BTreeMap::from([
            (0, d(1.0, -1.0)),
            (1, d(0.5, -0.5)),
            (-1, d(0.5, -0.5)),
        ]);
        HoppingModel::new(2, coefficients, "diag(1+cos k, -(1+cos k))").unwrap()
    }

    #[test]
    fn xx_projector_values() {
        let s = xx_symbol();
        let at_zero = positive_projector_at(&s, 0.0, 1e-10).unwrap();
        assert!((at_zero[(0, 0)] - re(1.0)).norm() < 1e-12);
        let at_pi = positive_projector_at(&s, PI, 1e-10).unwrap();
        assert!(at_pi[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn ssh_projector_at_quarter_turn() {
        // positive eigenvector (e^{iπ/4}, 1)/√2
        let p = positive_projector_at(&ssh_symbol(), PI / 2.0, 1e-10).unwrap();
        let phase = C64::from_polar(1.0, PI / 4.0);
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[re(0.5), phase * 0.5, phase.conj() * 0.5, re(0.5)],
        );
        assert!(linalg::fro_distance(&p, &expected) < 1e-12);
    }

    #[test]
    fn zero_tol_is_validated() {
        let s = xx_symbol();
        assert!(positive_projector_at(&s, 0.0, 0.0).is_err());
        assert!(positive_projector_at(&s, 0.0, 1e-2).is_err());
    }

    #[test]
    fn xx_ground_state_symbol_is_fermi_indicator() {
        let psym =
            ground_state_symbol(&xx_symbol(), KernelPolicy::Empty, &Tolerances::default()).unwrap();
        for &(k, inside) in &[(0.1, true), (1.2, true), (2.0, false), (PI, false), (5.0, true)] {
            let v = psym.eval(k)[(0, 0)].re;
            assert_relative_eq!(v, if inside { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
        let jumps: Vec<f64> = psym.discontinuities().iter().map(|d| d.location).collect();
        assert_eq!(jumps.len(), 2);
        assert_relative_eq!(jumps[0], PI / 2.0, epsilon = 1e-9);
        assert_relative_eq!(jumps[1], 3.0 * PI / 2.0, epsilon = 1e-9);
        // scalar limits: 1 on the left of π/2, 0 on the right
        assert_relative_eq!(psym.discontinuities()[0].left[(0, 0)].re, 1.0, epsilon = 1e-9);
        assert_relative_eq!(psym.discontinuities()[0].right[(0, 0)].re, 0.0, epsilon = 1e-9);
        assert_relative_eq!(psym.discontinuities()[1].left[(0, 0)].re, 0.0, epsilon = 1e-9);
        assert_relative_eq!(psym.discontinuities()[1].right[(0, 0)].re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn gapped_symbol_is_constant_identity() {
        let symbol = build_symbol(&model_zoo(ZooModel::GappedShiftedXx { mu: 3.0 }).unwrap()).unwrap();
        let psym =
            ground_state_symbol(&symbol, KernelPolicy::Empty, &Tolerances::default()).unwrap();
        assert!(psym.discontinuities().is_empty());
        for j in 0..32 {
            let k = 2.0 * PI * (j as f64 + 0.5) / 32.0;
            assert!((psym.eval(k)[(0, 0)] - re(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn diag_band_symbol_is_constant_despite_gaplessness() {
        let model = diag_band_model();
        let symbol = build_symbol(&model).unwrap();
        let psym =
            ground_state_symbol(&symbol, KernelPolicy::Empty, &Tolerances::default()).unwrap();
        assert!(psym.discontinuities().is_empty());
        let expected = DMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)]);
        for j in 0..64 {
            let k = 2.0 * PI * (j as f64 + 0.5) / 64.0;
            assert!(linalg::fro_distance(&psym.eval(k), &expected) < 1e-12);
        }
        let report = is_critical(&model, &Tolerances::default()).unwrap();
        assert!(!report.critical);
    }

    #[test]
    fn ssh_jump_at_pi_with_chiral_limits() {
        let psym =
            ground_state_symbol(&ssh_symbol(), KernelPolicy::Empty, &Tolerances::default()).unwrap();
        assert_eq!(psym.discontinuities().len(), 1);
        let d = &psym.discontinuities()[0];
        assert_relative_eq!(d.location, PI, epsilon = 1e-9);
        // projectors onto (i,1)/√2 and (-i,1)/√2
        let i = C64::new(0.0, 1.0);
        let proj = |v0: C64| {
            DMatrix::from_row_slice(2, 2, &[re(0.5), v0 * 0.5, v0.conj() * 0.5, re(0.5)])
        };
        assert!(linalg::fro_distance(&d.left, &proj(i)) < 1e-6);
        assert!(linalg::fro_distance(&d.right, &proj(-i)) < 1e-6);
        assert_relative_eq!(d.jump_size, 2.0f64.sqrt(), epsilon = 1e-5);
    }

    #[test]
    fn criticality_verdicts() {
        let tols = Tolerances::default();
        assert!(is_critical(&model_zoo(ZooModel::Xx).unwrap(), &tols).unwrap().critical);
        assert!(is_critical(&model_zoo(ZooModel::Ssh).unwrap(), &tols).unwrap().critical);
        assert!(
            !is_critical(&model_zoo(ZooModel::GappedShiftedXx { mu: 3.0 }).unwrap(), &tols)
                .unwrap()
                .critical
        );
    }

    #[test]
    fn constant_custom_symbol_has_no_jumps() {
        let tols = Tolerances::default();
        let psym = ProjectorSymbol::from_custom(
            2,
            |_k| DMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)]),
            &tols,
        )
        .unwrap();
        assert!(psym.discontinuities().is_empty());
    }

    #[test]
    fn too_many_jumps_is_reported() {
        let tols = Tolerances::default();
        let err = ProjectorSymbol::from_custom(
            1,
            |k| DMatrix::from_element(1, 1, re(if (80.0 * k).sin() > 0.0 { 1.0 } else { 0.0 })),
            &tols,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooManyJumps { .. }));
    }

    #[test]
    fn projector_invariants_on_grid() {
        for symbol in [xx_symbol(), ssh_symbol()] {
            let psym =
                ground_state_symbol(&symbol, KernelPolicy::Empty, &Tolerances::default()).unwrap();
            for j in 0..256 {
                let k = 2.0 * PI * (j as f64 + 0.5) / 256.0;
                let p = psym.eval(k);
                assert!(linalg::projector_deviation(&p) < 1e-9);
                assert!(linalg::hermiticity_deviation(&p) < 1e-12);
                // rank split: positive + kernel + negative = b
                let h = symbol.eval(k);
                let n_pos = linalg::eigvalsh(&h).iter().filter(|&&v| v > 1e-10).count();
                let rank = linalg::eigvalsh(&p).iter().filter(|&&v| v > 0.5).count();
                assert_eq!(rank, n_pos);
            }
        }
    }

    #[test]
    fn shift_below_spectral_gap_preserves_jump_list() {
        // diag(2+cos k, -(2+cos k)) has |eigenvalues| >= 1 everywhere, so any
        // |c| < 1 keeps the sign structure and hence the (empty) jump list
        let d = |a: f64, b: f64| {
            DMatrix::from_row_slice(2, 2, &[re(a), re(0.0), re(0.0), re(b)])
        };
        let base = HoppingModel::new(
            2,
            BTreeMap::from([(0, d(2.0, -2.0)), (1, d(0.5, -0.5)), (-1, d(0.5, -0.5))]),
            "diag(2+cos k, -(2+cos k))",
        )
        .unwrap();
        let shift = HoppingModel::new(
            2,
            BTreeMap::from([(0, d(0.9, 0.9))]),
            "shift",
        )
        .unwrap();
        let tols = Tolerances::default();
        let a = is_critical(&base, &tols).unwrap();
        let b = is_critical(&base.sum(&shift).unwrap(), &tols).unwrap();
        assert!(!a.critical && !b.critical);
        assert_eq!(a.evidence.len(), b.evidence.len());
    }
}
