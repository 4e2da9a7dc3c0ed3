//! The direct image bundle `E_k` over the base chart: its L² metric as a
//! family of Gram matrices and its Chern curvature by finite differences.
//!
//! With `⟨u, v⟩ = v* H u` the Chern connection in the monomial frame is
//! `H^{-1} ∂_w H`, and the curvature coefficient against `(i/2π) dw ∧ dw̄` is
//!
//! ```text
//! A = -(1/2π) ∂_w̄ (H^{-1} ∂_w H) = -(1/2π) H^{-1} (∂_w ∂_w̄ H - ∂_w̄ H H^{-1} ∂_w H)
//! ```
//!
//! acting on coefficient vectors. The split-off base factor `e^{-k β}`
//! contributes `k β_{ww̄}/2π · Id`.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::bergman::{gram_from_samples, BergmanError, FiberQuadrature, FiberSamples, GramMatrix};
use crate::geometry::{schur_horizontal, FiberedWeight};
use crate::numerics::{
    eig_hermitian_unchecked, max_abs, operator_norm, richardson, CMatrix, CompensatedSum,
    NumericsError, PlaneDerivatives, PlaneRule, PlaneStencil, C64,
};

/// Largest tolerated `‖HA - A*H‖ / ‖HA‖` before a sample is rejected.
pub const SELF_ADJOINT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum DirectImageError {
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("curvature at w = {w} is not self-adjoint (residual {residual:.3e}); finite differences unstable")]
    Unstable { w: C64, residual: f64 },
    #[error("frame change must be an invertible {expected}x{expected} matrix")]
    Frame { expected: usize },
}

/// Quadrature nodes on the base chart, with `dA` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseGrid {
    pub points: Vec<(C64, f64)>,
}

impl BaseGrid {
    pub fn new(radial: usize, angular: usize) -> Result<Self, NumericsError> {
        Ok(Self::from_rule(&PlaneRule::new(radial, angular)?))
    }

    pub fn from_rule(rule: &PlaneRule) -> Self {
        Self { points: rule.points().collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `∫_B` of the (1,1)-form with coefficient `values[i]` at point `i`:
    /// `Σ 2 dA_i values[i]`.
    pub fn integrate_form(&self, values: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(values)
            .map(|(&(_, da), v)| 2.0 * da * v)
            .collect::<CompensatedSum>()
            .value()
    }
}

/// Finite-difference scheme for the curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureScheme {
    pub step: f64,
    pub extrapolate: bool,
}

impl Default for CurvatureScheme {
    fn default() -> Self {
        Self { step: 1e-2, extrapolate: true }
    }
}

/// Gram matrices of `E_k` at arbitrary base points, in the monomial frame or
/// a constant change of it.
#[derive(Debug, Clone)]
pub struct FamilyGram {
    pub weight: FiberedWeight,
    pub quadrature: FiberQuadrature,
    rule: PlaneRule,
    frame: Option<CMatrix>,
}

impl FamilyGram {
    pub fn new(weight: &FiberedWeight) -> Result<Self, DirectImageError> {
        Self::with_quadrature(weight, FiberQuadrature::for_degree(weight.section_degree()))
    }

    pub fn with_quadrature(weight: &FiberedWeight, quadrature: FiberQuadrature) -> Result<Self, DirectImageError> {
        Ok(Self { weight: *weight, quadrature, rule: quadrature.rule()?, frame: None })
    }

    /// Use the frame `f_j = Σ_i C_ij z^i` instead of the monomials.
    pub fn with_frame(mut self, c: CMatrix) -> Result<Self, DirectImageError> {
        let n = self.weight.section_degree() + 1;
        if c.nrows() != n || c.ncols() != n || c.clone().try_inverse().is_none() {
            return Err(DirectImageError::Frame { expected: n });
        }
        self.frame = Some(c);
        Ok(self)
    }

    pub fn samples_at(&self, w: C64) -> FiberSamples {
        FiberSamples::new(&self.weight, w, &self.rule)
    }

    pub fn gram_at(&self, w: C64) -> Result<GramMatrix, DirectImageError> {
        let gram = gram_from_samples(&self.weight, &self.samples_at(w))?;
        match &self.frame {
            None => Ok(gram),
            Some(c) => Ok(GramMatrix::new(w, c.adjoint() * &gram.matrix * c, gram.base_log_weight)?),
        }
    }

    /// `e^{k β(w)}` times the moment matrix of `f` over `w`, in the family frame.
    pub fn moments_at(&self, w: C64, f: impl Fn(C64) -> f64) -> CMatrix {
        let m = self.samples_at(w).moment_matrix(f);
        match &self.frame {
            None => m,
            Some(c) => c.adjoint() * m * c,
        }
    }
}

/// `-(1/2π) H^{-1}(H_{ww̄} - H_w̄ H^{-1} H_w)` from stencil derivatives.
fn curvature_from_derivatives(d: &PlaneDerivatives) -> Result<CMatrix, NumericsError> {
    let chol = crate::numerics::cholesky(&d.value)?;
    let inner = &d.d_w_wbar - &d.d_wbar * chol.solve(&d.d_w);
    Ok(chol.solve(&inner).scale(-1.0 / (2.0 * PI)))
}

/// Curvature coefficient of a matrix family `h(w)` at `center`. With
/// extrapolation, one Richardson level combines spacings `step` and `2 step`.
pub fn curvature_of_family<E: From<NumericsError>>(
    center: C64,
    scheme: CurvatureScheme,
    h: impl FnMut(C64) -> Result<CMatrix, E>,
) -> Result<CMatrix, E> {
    let stencil = PlaneStencil::sample(center, scheme.step, h)??;
    let fine = curvature_from_derivatives(&stencil.derivatives(1))?;
    if scheme.extrapolate {
        let coarse = curvature_from_derivatives(&stencil.derivatives(2))?;
        Ok(richardson(&fine, &coarse))
    } else {
        Ok(fine)
    }
}

/// `Θ^{E_k}(∂_w, ∂_w̄)/2π` at one base point.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub w: C64,
    /// Curvature acting on frame coefficient vectors.
    pub a: CMatrix,
    pub gram: GramMatrix,
    /// `‖HA - A*H‖ / ‖HA‖`
    pub residual: f64,
}

impl CurvatureSample {
    /// Hermitian part of `L* A L^{-*}`, the curvature in an orthonormal basis.
    pub fn orthonormal(&self) -> CMatrix {
        let b = self.gram.to_orthonormal(&self.a);
        (&b + b.adjoint()).scale(0.5)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian_unchecked(&self.orthonormal())
    }

    pub fn trace(&self) -> f64 {
        self.a.trace().re
    }

    /// `ln det A`, or `None` when `A` is not positive.
    pub fn log_det(&self) -> Option<f64> {
        let eigen = self.eigenvalues();
        if eigen[0] <= 0.0 {
            return None;
        }
        Some(eigen.iter().map(|l| l.ln()).collect::<CompensatedSum>().value())
    }

    /// Size of the anti-Hermitian part of the curvature in an orthonormal
    /// basis, zero for an exact Chern curvature.
    pub fn anti_hermitian_size(&self) -> f64 {
        let b = self.gram.to_orthonormal(&self.a);
        max_abs(&(&b - b.adjoint()).scale(0.5))
    }
}

pub fn curvature_at(
    family: &FamilyGram,
    w: C64,
    scheme: CurvatureScheme,
) -> Result<CurvatureSample, DirectImageError> {
    let a_fd = curvature_of_family(w, scheme, |v| family.gram_at(v).map(|g| g.matrix))?;
    let gram = family.gram_at(w)?;
    let (_, beta_ww) = family.weight.potential.base_reference(w);
    let n = gram.dimension();
    let a = a_fd + CMatrix::identity(n, n).scale(family.weight.k as f64 * beta_ww / (2.0 * PI));
    let ha = &gram.matrix * &a;
    let residual = max_abs(&(&ha - ha.adjoint())) / max_abs(&ha);
    if !(residual <= SELF_ADJOINT_TOLERANCE) {
        return Err(DirectImageError::Unstable { w, residual });
    }
    Ok(CurvatureSample { w, a, gram, residual })
}

/// `‖A_h - A_{h/2}‖ / ‖A_{h/2} - A_{h/4}‖` without extrapolation: close to 4
/// for a second-order scheme.
pub fn step_refinement_ratio(family: &FamilyGram, w: C64, step: f64) -> Result<f64, DirectImageError> {
    let a = |h: f64| curvature_at(family, w, CurvatureScheme { step: h, extrapolate: false }).map(|s| s.a);
    let (a1, a2, a4) = (a(step)?, a(step / 2.0)?, a(step / 4.0)?);
    Ok((a1 - &a2).norm() / (a2 - a4).norm())
}

/// Curvature samples over a base grid, in grid order.
#[derive(Debug, Clone)]
pub struct CurvatureFamily {
    pub k: u32,
    pub grid: BaseGrid,
    pub samples: Vec<CurvatureSample>,
}

impl CurvatureFamily {
    /// Evaluates the base points in parallel; results keep grid order.
    pub fn compute(family: &FamilyGram, grid: &BaseGrid, scheme: CurvatureScheme) -> Result<Self, DirectImageError> {
        let samples = grid
            .points
            .par_iter()
            .map(|&(w, _)| curvature_at(family, w, scheme))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { k: family.weight.k, grid: grid.clone(), samples })
    }

    pub fn rank(&self) -> usize {
        self.samples.first().map_or(0, |s| s.gram.dimension())
    }

    /// `∫_B tr(A)`, the degree of `E_k`.
    pub fn degree(&self) -> f64 {
        let traces: Vec<f64> = self.samples.iter().map(CurvatureSample::trace).collect();
        self.grid.integrate_form(&traces)
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaZhangReport {
    pub k: u32,
    pub gaps: Vec<f64>,
    pub sup: f64,
}

/// `‖A - k T_{ω_H}‖` at one sample, in the L² operator norm.
pub fn ma_zhang_gap_at(family: &FamilyGram, sample: &CurvatureSample) -> Result<f64, DirectImageError> {
    let potential = family.weight.potential;
    let w = sample.w;
    let f = family.moments_at(w, |z| schur_horizontal(&potential.jet(z, w)));
    let kt = sample.gram.compress(&f).scale(family.weight.k as f64);
    Ok(operator_norm(&(sample.orthonormal() - kt))?)
}

pub fn ma_zhang_gap(family: &FamilyGram, curvature: &CurvatureFamily) -> Result<MaZhangReport, DirectImageError> {
    let gaps = curvature
        .samples
        .par_iter()
        .map(|s| ma_zhang_gap_at(family, s))
        .collect::<Result<Vec<_>, _>>()?;
    let sup = gaps.iter().copied().fold(0.0, f64::max);
    Ok(MaZhangReport { k: curvature.k, gaps, sup })
}

/// Minimum of the dual Nakano form. Over a one-dimensional base it is the
/// smallest eigenvalue of `A^T` with respect to `H`, which equals the
/// smallest eigenvalue of `A`.
pub fn dual_nakano_check(sample: &CurvatureSample) -> f64 {
    sample.eigenvalues()[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankC1Report {
    pub k: u32,
    pub rank: usize,
    /// `k a + 1`
    pub expected_rank: usize,
    pub degree: f64,
    /// `k^2 ∫_Y c_1(L)^2 / 2`
    pub leading_degree: f64,
    pub rank_ratio: f64,
    pub degree_relative_gap: f64,
    /// Distance of the degree to the nearest integer.
    pub integrality_gap: f64,
}

pub fn rank_c1_check(weight: &FiberedWeight, curvature: &CurvatureFamily) -> RankC1Report {
    let k = weight.k;
    let a = weight.potential.fiber_degree() as usize;
    let degree = curvature.degree();
    let leading = (k as f64).powi(2) * weight.potential.self_intersection() / 2.0;
    RankC1Report {
        k,
        rank: curvature.rank(),
        expected_rank: k as usize * a + 1,
        degree,
        leading_degree: leading,
        rank_ratio: curvature.rank() as f64 / (k as f64 * a as f64),
        degree_relative_gap: (degree - leading).abs() / leading,
        integrality_gap: (degree - degree.round()).abs(),
    }
}
