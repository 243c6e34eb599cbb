//! Finite open-boundary chains, their quasi-free ground states, and
//! half-chain mode spectra.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hopping::HoppingModel;
use crate::linalg;
use crate::quasifree::ModeSpectrum;

/// How to fill the kernel of the finite single-particle Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFill {
    /// Leave the kernel out (the infinite-volume p₀ = 0 choice).
    Empty,
    /// Occupy the whole kernel.
    Full,
    /// Occupy the lowest ⌈dim/2⌉ kernel vectors in the ascending
    /// eigenvalue order; a deterministic tie-break for degenerate chains.
    Half,
}

/// An open chain of n sites with a cut at site index c.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    sites: usize,
    bands: usize,
    cut: usize,
    single_particle_h: DMatrix<C64>,
}

impl FiniteChain {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn single_particle_h(&self) -> &DMatrix<C64> {
        &self.single_particle_h
    }
}

/// Truncates the hopping model to n sites with open boundaries:
/// block (x, y) = h(x-y) for 0 ≤ x, y < n, nothing wraps around.
pub fn open_chain_hamiltonian(model: &HoppingModel, sites: usize, cut: usize) -> Result<FiniteChain> {
    if sites < 2 {
        return Err(Error::InvalidParameter {
            name: "sites",
            reason: format!("need at least 2 sites, got {sites}"),
        });
    }
    if cut == 0 || cut >= sites {
        return Err(Error::InvalidParameter {
            name: "cut",
            reason: format!("cut must satisfy 1 <= cut <= {}, got {cut}", sites - 1),
        });
    }
    let radius = model.support_radius();
    if radius >= sites as i64 {
        return Err(Error::InvalidParameter {
            name: "sites",
            reason: format!("hopping support radius {radius} does not fit into {sites} sites"),
        });
    }
    let b = model.bands();
    let mut h = DMatrix::<C64>::zeros(sites * b, sites * b);
    for (&offset, block) in model.coefficients() {
        for y in 0..sites as i64 {
            let x = y + offset;
            if x < 0 || x >= sites as i64 {
                continue;
            }
            h.view_mut(((x as usize) * b, (y as usize) * b), (b, b))
                .copy_from(block);
        }
    }
    Ok(FiniteChain {
        sites,
        bands: b,
        cut,
        single_particle_h: h,
    })
}

pub(crate) fn ground_projection_with_kernel(
    chain: &FiniteChain,
    policy: KernelFill,
    zero_tol: f64,
) -> (DMatrix<C64>, usize) {
    let (values, vectors) = linalg::eigh(&chain.single_particle_h);
    let kernel: Vec<usize> = (0..values.len())
        .filter(|&j| values[j].abs() <= zero_tol)
        .collect();
    let mut selected: Vec<usize> = (0..values.len())
        .filter(|&j| values[j] > zero_tol)
        .collect();
    match policy {
        KernelFill::Empty => {}
        KernelFill::Full => selected.extend(&kernel),
        KernelFill::Half => selected.extend(&kernel[..kernel.len().div_ceil(2)]),
    }
    (
        linalg::projector_from_columns(&vectors, &selected),
        kernel.len(),
    )
}

/// Ground-state projector p_n of the open chain: eigenvectors with
/// eigenvalue > zero_tol, plus kernel vectors per policy.
pub fn finite_ground_projection(
    chain: &FiniteChain,
    policy: KernelFill,
    zero_tol: f64,
) -> DMatrix<C64> {
    ground_projection_with_kernel(chain, policy, zero_tol).0
}

/// Kernel dimension of the chain Hamiltonian at the given tolerance.
pub fn kernel_dimension(chain: &FiniteChain, zero_tol: f64) -> usize {
    linalg::eigvalsh(&chain.single_particle_h)
        .iter()
        .filter(|v| v.abs() <= zero_tol)
        .count()
}

/// Eigenvalues of the A-side corner of p_n: the half-chain mode spectrum.
pub fn halfchain_modes(chain: &FiniteChain, p_n: &DMatrix<C64>) -> Result<ModeSpectrum> {
    let dim = chain.sites * chain.bands;
    if p_n.nrows() != dim || p_n.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: format!(
                "projector is {}x{}, chain needs {dim}x{dim}",
                p_n.nrows(),
                p_n.ncols()
            ),
        });
    }
    let corner_dim = chain.cut * chain.bands;
    let corner = p_n.view((0, 0), (corner_dim, corner_dim)).into_owned();
    let values = linalg::eigvalsh(&corner);
    for &v in &values {
        if !(-1e-8..=1.0 + 1e-8).contains(&v) {
            return Err(Error::SpectrumOutOfRange {
                value: v,
                lo: -1e-8,
                hi: 1.0 + 1e-8,
            });
        }
    }
    ModeSpectrum::new(
        values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        format!("chain(n={}, cut={}, b={})", chain.sites, chain.cut, chain.bands),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopping::{model_zoo, HoppingModel, ZooModel};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn xx_two_sites_is_single_bond() {
        let chain = open_chain_hamiltonian(&model_zoo(ZooModel::Xx).unwrap(), 2, 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]);
        assert_eq!(chain.single_particle_h().as_slice(), expected.as_slice());
    }

    #[test]
    fn xx_three_sites_is_tridiagonal() {
        let chain = open_chain_hamiltonian(&model_zoo(ZooModel::Xx).unwrap(), 3, 1).unwrap();
        let h = chain.single_particle_h();
        for r in 0..3usize {
            for c in 0..3usize {
                let want = if r.abs_diff(c) == 1 { 1.0 } else { 0.0 };
                assert_eq!(h[(r, c)], re(want));
            }
        }
    }

    #[test]
    fn ssh_two_cells_has_no_dangling_bond() {
        let chain = open_chain_hamiltonian(&model_zoo(ZooModel::Ssh).unwrap(), 2, 1).unwrap();
        // sites (cell, band): 0=(0,1), 1=(0,2), 2=(1,1), 3=(1,2)
        // bonds: intra-cell (0,1), (2,3); inter-cell a1†(0)a2(1): (0,3)
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                re(0.0), re(1.0), re(0.0), re(1.0),
                re(1.0), re(0.0), re(0.0), re(0.0),
                re(0.0), re(0.0), re(0.0), re(1.0),
                re(1.0), re(0.0), re(1.0), re(0.0),
            ],
        );
        assert_eq!(chain.single_particle_h().as_slice(), expected.as_slice());
    }

    #[test]
    fn support_must_fit() {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(3, DMatrix::from_element(1, 1, re(1.0)));
        coefficients.insert(-3, DMatrix::from_element(1, 1, re(1.0)));
        let model = HoppingModel::new(1, coefficients, "long").unwrap();
        assert!(open_chain_hamiltonian(&model, 3, 1).is_err());
        assert!(open_chain_hamiltonian(&model, 4, 2).is_ok());
    }

    #[test]
    fn xx_two_site_ground_projection() {
        let chain = open_chain_hamiltonian(&model_zoo(ZooModel::Xx).unwrap(), 2, 1).unwrap();
        let p = finite_ground_projection(&chain, KernelFill::Empty, 1e-10);
        let expected = DMatrix::from_row_slice(2, 2, &[re(0.5), re(0.5), re(0.5), re(0.5)]);
        assert!(linalg::fro_distance(&p, &expected) < 1e-12);
        let modes = halfchain_modes(&chain, &p).unwrap();
        assert_eq!(modes.len(), 1);
        assert_relative_eq!(modes.values()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gapped_chain_projects_onto_everything() {
        let model = model_zoo(ZooModel::GappedShiftedXx { mu: 3.0 }).unwrap();
        let chain = open_chain_hamiltonian(&model, 8, 4).unwrap();
        let p = finite_ground_projection(&chain, KernelFill::Empty, 1e-10);
        assert!(linalg::fro_distance(&p, &DMatrix::identity(8, 8)) < 1e-10);
        let modes = halfchain_modes(&chain, &p).unwrap();
        assert!(modes.values().iter().all(|&l| (l - 1.0).abs() < 1e-10));
    }

    #[test]
    fn zero_hamiltonian_policies() {
        let model = HoppingModel::new(1, BTreeMap::new(), "zero").unwrap();
        let chain = open_chain_hamiltonian(&model, 4, 2).unwrap();
        let empty = finite_ground_projection(&chain, KernelFill::Empty, 1e-10);
        assert_eq!(linalg::fro_norm(&empty), 0.0);
        let full = finite_ground_projection(&chain, KernelFill::Full, 1e-10);
        assert!(linalg::fro_distance(&full, &DMatrix::identity(4, 4)) < 1e-12);
        let half = finite_ground_projection(&chain, KernelFill::Half, 1e-10);
        let trace: f64 = (0..4).map(|i| half[(i, i)].re).sum();
        assert_relative_eq!(trace, 2.0, epsilon = 1e-12);
        assert_eq!(kernel_dimension(&chain, 1e-10), 4);
    }

    #[test]
    fn modes_of_identity_and_zero_projectors() {
        let chain = open_chain_hamiltonian(&model_zoo(ZooModel::Xx).unwrap(), 6, 3).unwrap();
        let modes = halfchain_modes(&chain, &DMatrix::identity(6, 6)).unwrap();
        assert!(modes.values().iter().all(|&l| l == 1.0));
        let modes = halfchain_modes(&chain, &DMatrix::zeros(6, 6)).unwrap();
        assert!(modes.values().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn out_of_range_projector_is_reported() {
        let chain = open_chain_hamiltonian(&model_zoo(ZooModel::Xx).unwrap(), 4, 2).unwrap();
        let bad = DMatrix::from_diagonal_element(4, 4, re(1.5));
        assert!(matches!(
            halfchain_modes(&chain, &bad),
            Err(Error::SpectrumOutOfRange { .. })
        ));
    }

    #[test]
    fn xx_halfchain_is_particle_hole_symmetric() {
        let model = model_zoo(ZooModel::Xx).unwrap();
        for n in [8usize, 16, 32] {
            let chain = open_chain_hamiltonian(&model, n, n / 2).unwrap();
            let p = finite_ground_projection(&chain, KernelFill::Empty, 1e-10);
            let modes = halfchain_modes(&chain, &p).unwrap();
            let v = modes.values();
            for j in 0..v.len() {
                let mirrored = 1.0 - v[v.len() - 1 - j];
                assert!((v[j] - mirrored).abs() < 1e-9, "n={n}, j={j}");
            }
        }
    }

    #[test]
    fn even_xx_chains_have_no_kernel() {
        let model = model_zoo(ZooModel::Xx).unwrap();
        for n in [4usize, 8, 12] {
            let chain = open_chain_hamiltonian(&model, n, n / 2).unwrap();
            assert_eq!(kernel_dimension(&chain, 1e-10), 0, "n={n}");
        }
        // odd chains hit the band centre
        let chain = open_chain_hamiltonian(&model, 5, 2).unwrap();
        assert_eq!(kernel_dimension(&chain, 1e-10), 1);
    }
}
