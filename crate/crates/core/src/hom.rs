//! Homogeneous homomorphisms between Carnot groups, stored as graded
//! block-diagonal matrices.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::group::CarnotGroup;
use crate::linalg;
use crate::norm::BoxNorm;
use crate::sample;
use crate::scalar::{Exact, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum HomError {
    /// A block or the full matrix has the wrong shape.
    Shape { stratum: usize, expected: (usize, usize), found: (usize, usize) },
    /// Nonzero entry mapping stratum `from` of the source to another stratum.
    OffStratum { row: usize, col: usize, value: f64 },
    /// The horizontal block does not extend to a morphism; `defect` is the
    /// largest bracket-compatibility error at `stratum`.
    NonExtendable { stratum: usize, defect: f64 },
}

impl fmt::Display for HomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomError::Shape { stratum, expected, found } => write!(
                f,
                "block {stratum} has shape {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            HomError::OffStratum { row, col, value } => {
                write!(f, "entry ({row},{col}) = {value} mixes strata")
            }
            HomError::NonExtendable { stratum, defect } => write!(
                f,
                "horizontal block does not extend to a morphism: defect {defect:e} at stratum {stratum}"
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HomogeneousHom {
    source: CarnotGroup,
    target: CarnotGroup,
    matrix: DMatrix<f64>,
}

/// Residuals of the morphism and homogeneity identities on random samples.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HomValidation {
    /// Max of `∥L(p·q)⁻¹·(L(p)·L(q))∥`.
    pub morphism_residual: f64,
    /// Max of `∥L(δ_λp)⁻¹·δ_λ(L(p))∥`.
    pub homogeneity_residual: f64,
    pub samples: usize,
    pub seed: u64,
    pub valid: bool,
}

/// Threshold below which both residuals count as zero.
pub const VALIDITY_TOL: f64 = 1e-8;

impl HomogeneousHom {
    fn common_step(source: &CarnotGroup, target: &CarnotGroup) -> usize {
        source.step().min(target.step())
    }

    /// Builds the map from its graded blocks `A_j: V_j(G) → V_j(H)`,
    /// `j = 1..=min(s_G, s_H)`.
    pub fn from_blocks(
        source: &CarnotGroup,
        target: &CarnotGroup,
        blocks: &[DMatrix<f64>],
    ) -> Result<Self, HomError> {
        let s = Self::common_step(source, target);
        if blocks.len() != s {
            return Err(HomError::Shape {
                stratum: blocks.len().min(s) + 1,
                expected: (s, 0),
                found: (blocks.len(), 0),
            });
        }
        let mut matrix = DMatrix::zeros(target.dim(), source.dim());
        for (idx, block) in blocks.iter().enumerate() {
            let j = idx + 1;
            let rows = target.stratum_range(j);
            let cols = source.stratum_range(j);
            let expected = (rows.len(), cols.len());
            if block.shape() != expected {
                return Err(HomError::Shape { stratum: j, expected, found: block.shape() });
            }
            matrix.view_mut((rows.start, cols.start), expected).copy_from(block);
        }
        Ok(HomogeneousHom { source: source.clone(), target: target.clone(), matrix })
    }

    /// Builds the map from a full `n_H × n_G` matrix, rejecting entries that mix strata.
    pub fn from_matrix(
        source: &CarnotGroup,
        target: &CarnotGroup,
        matrix: DMatrix<f64>,
    ) -> Result<Self, HomError> {
        let expected = (target.dim(), source.dim());
        if matrix.shape() != expected {
            return Err(HomError::Shape { stratum: 0, expected, found: matrix.shape() });
        }
        for r in 0..expected.0 {
            for c in 0..expected.1 {
                let v = matrix[(r, c)];
                if v != 0.0 && target.weights()[r] != source.weights()[c] {
                    return Err(HomError::OffStratum { row: r, col: c, value: v });
                }
            }
        }
        Ok(HomogeneousHom { source: source.clone(), target: target.clone(), matrix })
    }

    pub fn identity(group: &CarnotGroup) -> Self {
        let n = group.dim();
        HomogeneousHom {
            source: group.clone(),
            target: group.clone(),
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn zero(source: &CarnotGroup, target: &CarnotGroup) -> Self {
        HomogeneousHom {
            source: source.clone(),
            target: target.clone(),
            matrix: DMatrix::zeros(target.dim(), source.dim()),
        }
    }

    /// The dilation `δ_λ` as an endomorphism.
    pub fn dilation(group: &CarnotGroup, lambda: f64) -> Self {
        let diag: Vec<f64> = group.weights().iter().map(|&w| libm::pow(lambda, w as f64)).collect();
        HomogeneousHom {
            source: group.clone(),
            target: group.clone(),
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)),
        }
    }

    /// Extends a horizontal block `V₁(G) → V₁(H)` by `A_{j+1}[X_a, X_b] = [A₁X_a, A_jX_b]`.
    /// Fails when the bracket images are inconsistent beyond `tol`.
    pub fn from_horizontal(
        source: &CarnotGroup,
        target: &CarnotGroup,
        a1: &DMatrix<f64>,
        tol: f64,
    ) -> Result<Self, HomError> {
        let expected = (target.rank(), source.rank());
        if a1.shape() != expected {
            return Err(HomError::Shape { stratum: 1, expected, found: a1.shape() });
        }
        let mut map = HomogeneousHom::zero(source, target);
        map.matrix.view_mut((0, 0), expected).copy_from(a1);
        let (ga, ha) = (source.algebra(), target.algebra());
        for j in 1..=source.step() {
            let next = j + 1;
            let cols_g = if next <= source.step() { source.stratum_range(next) } else { 0..0 };
            let rows_h = if next <= target.step() { target.stratum_range(next) } else { 0..0 };
            let mut w_cols = Vec::new();
            let mut img_cols = Vec::new();
            for a in source.stratum_range(1) {
                for b in source.stratum_range(j) {
                    let mut ea = source.identity();
                    ea[a] = 1.0;
                    let mut eb = source.identity();
                    eb[b] = 1.0;
                    let br = ga.bracket_generic(&ea, &eb);
                    let la = map.apply(&ea);
                    let lb = map.apply(&eb);
                    let img = ha.bracket_generic(&la, &lb);
                    w_cols.push(br[cols_g.clone()].to_vec());
                    img_cols.push(img[rows_h.clone()].to_vec());
                }
            }
            let p = w_cols.len();
            let w = DMatrix::from_fn(cols_g.len(), p, |r, c| w_cols[c][r]);
            let img = DMatrix::from_fn(rows_h.len(), p, |r, c| img_cols[c][r]);
            let block = if cols_g.is_empty() || rows_h.is_empty() {
                DMatrix::zeros(rows_h.len(), cols_g.len())
            } else {
                linalg::least_squares(&w.transpose(), &img.transpose()).transpose()
            };
            let fitted = &block * &w;
            let defect = if img.is_empty() { 0.0 } else { (&fitted - &img).abs().max() };
            if defect > tol {
                return Err(HomError::NonExtendable { stratum: next, defect });
            }
            if !cols_g.is_empty() && !rows_h.is_empty() {
                map.matrix.view_mut((rows_h.start, cols_g.start), block.shape()).copy_from(&block);
            }
        }
        Ok(map)
    }

    pub fn source(&self) -> &CarnotGroup {
        &self.source
    }

    pub fn target(&self) -> &CarnotGroup {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Block `A_j` (zero-sized when stratum `j` is missing on either side).
    pub fn block(&self, j: usize) -> DMatrix<f64> {
        if j > Self::common_step(&self.source, &self.target) {
            return DMatrix::zeros(0, 0);
        }
        let rows = self.target.stratum_range(j);
        let cols = self.source.stratum_range(j);
        self.matrix.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.target.dim();
        let mut out = alloc::vec![0.0; n];
        self.apply_into(p, &mut out);
        out
    }

    pub fn apply_into(&self, p: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, x) in p.iter().enumerate() {
                let m = self.matrix[(r, c)];
                if m != 0.0 {
                    acc += m * x;
                }
            }
            *o = acc;
        }
    }

    pub fn apply_generic<S: Scalar>(&self, p: &[S]) -> Vec<S> {
        (0..self.target.dim())
            .map(|r| {
                let mut acc = S::zero();
                for (c, x) in p.iter().enumerate() {
                    let m = self.matrix[(r, c)];
                    if m != 0.0 {
                        acc = acc + S::from_f64(m) * x.clone();
                    }
                }
                acc
            })
            .collect()
    }

    /// Composition `self ∘ inner`.
    pub fn compose(&self, inner: &HomogeneousHom) -> HomogeneousHom {
        HomogeneousHom {
            source: inner.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix * &inner.matrix,
        }
    }

    /// Checks the morphism and homogeneity identities on `samples` random
    /// unit-box inputs. Group arithmetic is exact, so the residuals measure
    /// the stored matrix and not rounding in the check itself.
    pub fn validate(&self, norm_target: &BoxNorm, samples: usize, seed: u64) -> HomValidation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, h) = (&self.source, &self.target);
        let exact = |v: &[f64]| v.iter().map(|&x| Exact::from_f64(x)).collect::<Vec<Exact>>();
        let to_f64 = |v: &[Exact]| v.iter().map(Scalar::to_f64).collect::<Vec<f64>>();
        let neg = |v: Vec<Exact>| v.into_iter().map(|x| -x).collect::<Vec<Exact>>();
        let mut morph = 0.0f64;
        let mut homog = 0.0f64;
        for _ in 0..samples {
            let p = exact(&sample::unit_box(g, &mut rng));
            let q = exact(&sample::unit_box(g, &mut rng));
            let lambda = Exact::from_f64(rng.gen_range(0.1..4.0));
            let lpq = self.apply_generic(&g.mul_generic(&p, &q));
            let lp = self.apply_generic(&p);
            let lq = self.apply_generic(&q);
            let r = h.mul_generic(&neg(lpq), &h.mul_generic(&lp, &lq));
            morph = morph.max(norm_target.norm(&to_f64(&r)));
            let ld = self.apply_generic(&g.dilate_generic(&lambda, &p));
            let dl = h.dilate_generic(&lambda, &lp);
            let r = h.mul_generic(&neg(ld), &dl);
            homog = homog.max(norm_target.norm(&to_f64(&r)));
        }
        HomValidation {
            morphism_residual: morph,
            homogeneity_residual: homog,
            samples,
            seed,
            valid: morph < VALIDITY_TOL && homog < VALIDITY_TOL,
        }
    }

    /// Sampled `sup ∥Lv∥_H` over the unit sphere of `norm_source`. The
    /// horizontal basis vectors come first, then seeded random sphere
    /// points, so more samples never lower the estimate.
    pub fn norm(&self, norm_source: &BoxNorm, norm_target: &BoxNorm, samples: usize, seed: u64) -> f64 {
        let g = &self.source;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0f64;
        for i in 0..samples {
            let v = if i < 2 * g.rank() {
                let mut e = g.identity();
                e[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                e
            } else {
                sample::unit_sphere(norm_source, &mut rng)
            };
            best = best.max(norm_target.norm(&self.apply(&v)));
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn h1() -> CarnotGroup {
        CarnotGroup::new(catalog::heisenberg(1)).unwrap()
    }

    #[test]
    fn identity_and_dilation_validate_exactly() {
        let g = h1();
        let n = BoxNorm::new(&g, &[1.0]).unwrap();
        for l in [HomogeneousHom::identity(&g), HomogeneousHom::dilation(&g, 2.0)] {
            let v = l.validate(&n, 50, 3);
            assert_eq!((v.morphism_residual, v.homogeneity_residual), (0.0, 0.0));
            assert!(v.valid);
        }
        assert!((HomogeneousHom::identity(&g).norm(&n, &n, 200, 1) - 1.0).abs() < 1e-6);
        assert!((HomogeneousHom::dilation(&g, 2.0).norm(&n, &n, 200, 1) - 2.0).abs() < 1e-6);
        assert_eq!(HomogeneousHom::zero(&g, &g).norm(&n, &n, 200, 1), 0.0);
    }

    #[test]
    fn wrong_vertical_block_is_not_a_morphism() {
        let g = h1();
        let n = BoxNorm::new(&g, &[1.0]).unwrap();
        let l = HomogeneousHom::from_blocks(
            &g,
            &g,
            &[DMatrix::identity(2, 2), DMatrix::from_element(1, 1, 3.0)],
        )
        .unwrap();
        let v = l.validate(&n, 50, 3);
        assert!(v.morphism_residual > 0.1 && !v.valid);
    }

    #[test]
    fn horizontal_extension_uses_the_determinant() {
        let g = h1();
        let a1 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let l = HomogeneousHom::from_horizontal(&g, &g, &a1, 1e-12).unwrap();
        assert_eq!(l.block(2)[(0, 0)], 5.5);
        let r2 = CarnotGroup::new(catalog::euclidean(2)).unwrap();
        let to_plane = HomogeneousHom::from_horizontal(&g, &r2, &DMatrix::identity(2, 2), 1e-12);
        assert!(to_plane.is_ok());
        let from_plane = HomogeneousHom::from_horizontal(&r2, &g, &DMatrix::identity(2, 2), 1e-12);
        assert!(matches!(from_plane, Err(HomError::NonExtendable { stratum: 2, .. })));
    }

    #[test]
    fn shape_and_stratum_checks() {
        let g = h1();
        assert!(matches!(
            HomogeneousHom::from_blocks(&g, &g, &[DMatrix::identity(2, 2)]),
            Err(HomError::Shape { .. })
        ));
        let mut m = DMatrix::identity(3, 3);
        m[(2, 0)] = 1.0;
        assert!(matches!(HomogeneousHom::from_matrix(&g, &g, m), Err(HomError::OffStratum { .. })));
    }
}
