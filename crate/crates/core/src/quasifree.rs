//! Quasi-free correlators and the spectrum of the half-chain density
//! operator.
//!
//! A mode spectrum {λ_j} fully determines the reduced state: it factorizes
//! into uncorrelated two-level modes diag(λ_j, 1-λ_j), so the many-body
//! spectrum is the multiset of products ∏_j μ_j with μ_j ∈ {λ_j, 1-λ_j}.
//! The top-K slice of that multiset, with exact bookkeeping of the mass it
//! leaves behind, is what the embezzlement layer consumes.

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Modes below this distance from {0,1} are collapsed before enumeration.
pub const COLLAPSE_TOL: f64 = 1e-14;

/// Eigenvalues λ_j ∈ [0,1] of a half-chain correlation operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    values: Vec<f64>,
    source: String,
}

impl ModeSpectrum {
    /// Sorts ascending and validates the [0,1] range.
    pub fn new(mut values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "mode eigenvalue {v} outside [0,1]"
                )));
            }
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            values,
            source: source.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Top-K probabilities of ⊗_j diag(λ_j, 1-λ_j) with the exact mass of
/// everything discarded.
#[derive(Debug, Clone)]
pub struct TruncatedSpectrum {
    entries: Vec<f64>,
    discarded_mass: f64,
}

impl TruncatedSpectrum {
    /// Entries must be positive and nonincreasing.
    pub fn new(entries: Vec<f64>, discarded_mass: f64) -> Result<Self> {
        if entries.windows(2).any(|w| w[1] > w[0]) || entries.iter().any(|&e| e <= 0.0) {
            return Err(Error::Validation(
                "spectrum entries must be positive and sorted descending".into(),
            ));
        }
        if discarded_mass < 0.0 {
            return Err(Error::Validation("discarded_mass must be >= 0".into()));
        }
        Ok(Self {
            entries,
            discarded_mass,
        })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }

    pub fn retained_mass(&self) -> f64 {
        self.entries.iter().sum()
    }
}

/// Wick / determinant formula for a quasi-free state with covariance s:
/// ω_s(a(ξ_1)⋯a(ξ_m) a†(η_n)⋯a†(η_1)) = δ_{mn} det[⟨ξ_j|s|η_k⟩].
pub fn wick_correlator(
    s: &DMatrix<C64>,
    xi: &[DVector<C64>],
    eta: &[DVector<C64>],
) -> Result<C64> {
    let dim = s.nrows();
    if s.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "covariance matrix must be square".into(),
        });
    }
    for v in xi.iter().chain(eta) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("vector length {} vs covariance dimension {dim}", v.len()),
            });
        }
    }
    if xi.len() != eta.len() {
        return Ok(C64::new(0.0, 0.0));
    }
    let m = xi.len();
    if m == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let s_eta: Vec<DVector<C64>> = eta.iter().map(|e| s * e).collect();
    let gram = DMatrix::from_fn(m, m, |j, k| xi[j].dotc(&s_eta[k]));
    Ok(gram.determinant())
}

#[derive(PartialEq)]
struct Node {
    value: f64,
    last: usize,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.last.cmp(&self.last))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first enumeration of the K largest products ∏_j μ_j,
/// μ_j ∈ {λ_j, 1-λ_j}.
///
/// States are subsets of "flipped" modes keyed by their last flip, so each
/// subset is generated exactly once; flip ratios are sorted descending,
/// which makes the heap emit products in nonincreasing order. Stops early
/// once the accumulated mass reaches 1 - mass_floor.
pub fn product_spectrum_topk(
    modes: &ModeSpectrum,
    k: usize,
    mass_floor: f64,
) -> Result<TruncatedSpectrum> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be >= 1".into(),
        });
    }
    if !(0.0..1.0).contains(&mass_floor) {
        return Err(Error::InvalidParameter {
            name: "mass_floor",
            reason: format!("must lie in [0, 1), got {mass_floor}"),
        });
    }
    if modes.is_empty() {
        return Err(Error::Validation("mode spectrum is empty".into()));
    }

    let mut base = 1.0f64;
    let mut ratios: Vec<f64> = Vec::new();
    for &lambda in modes.values() {
        let hi = lambda.max(1.0 - lambda);
        let lo = lambda.min(1.0 - lambda);
        base *= hi;
        if lo >= COLLAPSE_TOL {
            ratios.push(lo / hi);
        }
    }
    ratios.sort_by(|a, b| b.total_cmp(a));

    let target_mass = 1.0 - mass_floor;
    let mut entries = Vec::with_capacity(k.min(4096));
    let mut accumulated = 0.0f64;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    entries.push(base);
    accumulated += base;
    if !ratios.is_empty() {
        heap.push(Node {
            value: base * ratios[0],
            last: 0,
        });
    }
    while entries.len() < k && accumulated < target_mass {
        let Some(Node { value, last }) = heap.pop() else {
            break;
        };
        entries.push(value);
        accumulated += value;
        if last + 1 < ratios.len() {
            heap.push(Node {
                value: value * ratios[last + 1],
                last: last + 1,
            });
            heap.push(Node {
                value: value / ratios[last] * ratios[last + 1],
                last: last + 1,
            });
        }
    }

    let discarded_mass = (1.0 - accumulated).max(0.0);
    TruncatedSpectrum::new(entries, discarded_mass)
}

fn h2_bits(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Entanglement entropy in bits, Σ_j H₂(λ_j).
pub fn entanglement_entropy(modes: &ModeSpectrum) -> f64 {
    modes.values().iter().map(|&l| h2_bits(l)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn spectrum(values: &[f64]) -> ModeSpectrum {
        ModeSpectrum::new(values.to_vec(), "test").unwrap()
    }

    #[test]
    fn wick_single_pair_is_matrix_element() {
        let s = DMatrix::from_row_slice(2, 2, &[re(0.3), re(0.1), re(0.1), re(0.9)]);
        let e0 = DVector::from_vec(vec![re(1.0), re(0.0)]);
        let e1 = DVector::from_vec(vec![re(0.0), re(1.0)]);
        let got = wick_correlator(&s, &[e0.clone()], &[e1.clone()]).unwrap();
        assert!((got - re(0.1)).norm() < 1e-15);
        // mismatched counts vanish
        let zero = wick_correlator(&s, &[e0.clone()], &[e0.clone(), e1.clone()]).unwrap();
        assert_eq!(zero, re(0.0));
    }

    #[test]
    fn wick_two_pair_determinant() {
        let s = DMatrix::from_row_slice(2, 2, &[re(0.7), re(0.0), re(0.0), re(0.2)]);
        let e0 = DVector::from_vec(vec![re(1.0), re(0.0)]);
        let e1 = DVector::from_vec(vec![re(0.0), re(1.0)]);
        let got = wick_correlator(&s, &[e0.clone(), e1.clone()], &[e0, e1]).unwrap();
        assert!((got - re(0.14)).norm() < 1e-15);
    }

    #[test]
    fn wick_rejects_mismatched_dimensions() {
        let s = DMatrix::from_element(2, 2, re(0.0));
        let bad = DVector::from_vec(vec![re(1.0)]);
        assert!(wick_correlator(&s, &[bad.clone()], &[bad]).is_err());
    }

    #[test]
    fn topk_enumerates_two_modes() {
        let t = product_spectrum_topk(&spectrum(&[0.9, 0.8]), 4, 0.0).unwrap();
        let expected = [0.72, 0.18, 0.08, 0.02];
        assert_eq!(t.entries().len(), 4);
        for (got, want) in t.entries().iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(t.discarded_mass() < 1e-12);
    }

    #[test]
    fn flat_modes_give_uniform_products() {
        let n = 6;
        let t = product_spectrum_topk(&spectrum(&vec![0.5; n]), 1 << n, 0.0).unwrap();
        assert_eq!(t.entries().len(), 1 << n);
        assert!(t.entries().iter().all(|&e| e == 0.5f64.powi(n as i32)));
        assert_eq!(t.discarded_mass(), 0.0);
    }

    #[test]
    fn deterministic_modes_collapse() {
        let t = product_spectrum_topk(&spectrum(&[1.0, 0.6]), 2, 0.0).unwrap();
        assert_relative_eq!(t.entries()[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(t.entries()[1], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn oversized_k_returns_everything() {
        let t = product_spectrum_topk(&spectrum(&[0.3, 0.4, 0.25]), 1000, 0.0).unwrap();
        assert_eq!(t.entries().len(), 8);
        assert!((t.retained_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_floor_stops_early() {
        let t = product_spectrum_topk(&spectrum(&[0.9, 0.9, 0.9]), 8, 0.2).unwrap();
        assert!(t.entries().len() < 8);
        assert!(t.retained_mass() >= 0.8 - 1e-12);
        assert_relative_eq!(t.retained_mass() + t.discarded_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn topk_matches_brute_force() {
        let modes = spectrum(&[0.12, 0.37, 0.5, 0.68, 0.93, 0.21, 0.44]);
        let t = product_spectrum_topk(&modes, 40, 0.0).unwrap();
        let mut all = vec![1.0f64];
        for &l in modes.values() {
            let mut next = Vec::with_capacity(all.len() * 2);
            for v in &all {
                next.push(v * l.max(1.0 - l));
                next.push(v * l.min(1.0 - l));
            }
            all = next;
        }
        all.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in t.entries().iter().zip(&all) {
            assert_relative_eq!(*got, *want, epsilon = 1e-13);
        }
    }

    #[test]
    fn entropy_examples() {
        assert_relative_eq!(entanglement_entropy(&spectrum(&[0.5])), 1.0, epsilon = 1e-15);
        assert_eq!(entanglement_entropy(&spectrum(&[0.0, 1.0, 0.0])), 0.0);
        let s = entanglement_entropy(&spectrum(&[0.9, 0.8]));
        assert_relative_eq!(s, 1.1909, epsilon = 5e-5);
    }

    #[test]
    fn entropy_matches_full_product_spectrum() {
        let modes = spectrum(&[0.9, 0.42, 0.5, 0.17, 0.66]);
        let t = product_spectrum_topk(&modes, 1 << 5, 0.0).unwrap();
        let direct: f64 = t
            .entries()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum();
        assert_relative_eq!(entanglement_entropy(&modes), direct, epsilon = 1e-9);
    }

    #[test]
    fn entropy_invariant_under_mode_flip() {
        let a = spectrum(&[0.9, 0.42, 0.17]);
        let b = spectrum(&[0.1, 0.58, 0.83]);
        assert_relative_eq!(
            entanglement_entropy(&a),
            entanglement_entropy(&b),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mode_spectrum_validates_range() {
        assert!(ModeSpectrum::new(vec![0.5, 1.2], "bad").is_err());
        assert!(ModeSpectrum::new(vec![-0.1], "bad").is_err());
    }
}
