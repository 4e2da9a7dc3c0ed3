//! Deterministic numerical kernel: quadrature rules, Hermitian spectra,
//! log-determinants, operator norms and plane finite-difference stencils.
//!
//! Every reduction in this module runs in a fixed order, and scalar sums go
//! through [`CompensatedSum`], so results do not depend on thread count.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use thiserror::Error;

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Smallest finite-difference step accepted by the plane stencils.
pub const MIN_FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("quadrature order {0} is below the minimum of 2")]
    QuadratureOrder(usize),
    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite (smallest pivot or eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("finite-difference step {0:e} is below the guard {MIN_FD_STEP:e}")]
    StepTooSmall(f64),
    #[error("shape mismatch: expected a square matrix, got {0}x{1}")]
    NotSquare(usize, usize),
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated complex accumulator (real and imaginary parts tracked separately).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureDomain {
    /// Closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

/// One-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: QuadratureDomain,
}

/// Gauss-Legendre rule of the given order on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule, NumericsError> {
    if order < 2 {
        return Err(NumericsError::QuadratureOrder(order));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order >= 2"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(QuadratureRule {
        nodes,
        weights,
        domain: QuadratureDomain::Interval { lo: -1.0, hi: 1.0 },
    })
}

impl QuadratureRule {
    /// Affine image of the rule on `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> QuadratureRule {
        let QuadratureDomain::Interval { lo: a, hi: b } = self.domain;
        let scale = (hi - lo) / (b - a);
        QuadratureRule {
            nodes: self.nodes.iter().map(|x| lo + (x - a) * scale).collect(),
            weights: self.weights.iter().map(|w| w * scale).collect(),
            domain: QuadratureDomain::Interval { lo, hi },
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect::<CompensatedSum>()
            .value()
    }
}

/// One radial ring of a [`PlaneRule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    /// Substitution variable `t = r^2 / (1 + r^2)` in `(0, 1)`.
    pub t: f64,
    pub r: f64,
    /// `ln r`, kept separately so monomial powers can be formed in log space.
    pub ln_r: f64,
    /// Area weight of one angular node on this ring (Lebesgue `dA`).
    pub area_weight: f64,
}

/// Product rule on the affine chart of the Riemann sphere: Gauss-Legendre in
/// `t = r^2/(1+r^2)` times the uniform trapezoid rule in the angle.
///
/// The point at infinity is never a node.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneRule {
    pub rings: Vec<Ring>,
    pub angles: Vec<f64>,
}

impl PlaneRule {
    pub fn new(radial_order: usize, angular_nodes: usize) -> Result<Self, NumericsError> {
        Self::with_offset(radial_order, angular_nodes, 0.0)
    }

    /// Same rule with every angular node rotated by `offset`.
    pub fn with_offset(
        radial_order: usize,
        angular_nodes: usize,
        offset: f64,
    ) -> Result<Self, NumericsError> {
        if angular_nodes < 2 {
            return Err(NumericsError::QuadratureOrder(angular_nodes));
        }
        let radial = gauss_legendre(radial_order)?.mapped(0.0, 1.0);
        let dtheta = 2.0 * PI / angular_nodes as f64;
        let rings = radial
            .nodes
            .iter()
            .zip(&radial.weights)
            .map(|(&t, &wt)| {
                let r2 = t / (1.0 - t);
                // dA = r dr dθ = dt dθ / (2 (1-t)^2)
                let area_weight = wt * dtheta / (2.0 * (1.0 - t) * (1.0 - t));
                Ring {
                    t,
                    r: r2.sqrt(),
                    ln_r: 0.5 * (t.ln() - (-t).ln_1p()),
                    area_weight,
                }
            })
            .collect();
        let angles = (0..angular_nodes)
            .map(|j| offset + dtheta * j as f64)
            .collect();
        Ok(Self { rings, angles })
    }

    pub fn len(&self) -> usize {
        self.rings.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All nodes as `(point, dA weight)` pairs, ring-major.
    pub fn points(&self) -> impl Iterator<Item = (C64, f64)> + '_ {
        self.rings.iter().flat_map(move |ring| {
            self.angles
                .iter()
                .map(move |&theta| (C64::from_polar(ring.r, theta), ring.area_weight))
        })
    }

    /// Integral of `f` against Lebesgue measure `dA`.
    pub fn integrate(&self, f: impl Fn(C64) -> f64) -> f64 {
        self.points()
            .map(|(z, w)| w * f(z))
            .collect::<CompensatedSum>()
            .value()
    }
}

/// Unit-mass Fubini-Study area density `1 / (pi (1+|u|^2)^2)` with respect to `dA`.
pub fn fs_density(u: C64) -> f64 {
    let s = 1.0 + u.norm_sqr();
    1.0 / (PI * s * s)
}

/// Maximum-modulus entry, used as a cheap matrix scale.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn hermitian_residual(h: &CMatrix) -> f64 {
    let scale = max_abs(h);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(h - h.adjoint())) / scale
}

fn ensure_square(a: &CMatrix) -> Result<(), NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NotSquare(a.nrows(), a.ncols()));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eig_hermitian(h: &CMatrix) -> Result<Vec<f64>, NumericsError> {
    ensure_square(h)?;
    let residual = hermitian_residual(h);
    if residual > 1e-12 {
        return Err(NumericsError::NotHermitian(residual));
    }
    Ok(eig_hermitian_unchecked(h))
}

/// Eigenvalues of the Hermitian part `(h + h*)/2`, ascending.
pub(crate) fn eig_hermitian_unchecked(h: &CMatrix) -> Vec<f64> {
    let sym = (h + h.adjoint()).scale(0.5);
    let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `ln det H` for a Hermitian positive definite matrix, via Cholesky.
pub fn log_det_posdef(h: &CMatrix) -> Result<f64, NumericsError> {
    let chol = cholesky(h)?;
    let l = chol.l_dirty();
    Ok(2.0 * compensated_sum((0..l.nrows()).map(|i| l[(i, i)].re.ln())))
}

/// Cholesky factorization of the Hermitian part, failing on a non-positive pivot.
pub fn cholesky(h: &CMatrix) -> Result<Cholesky<C64, nalgebra::Dyn>, NumericsError> {
    ensure_square(h)?;
    let sym = (h + h.adjoint()).scale(0.5);
    match Cholesky::new(sym.clone()) {
        Some(chol) => {
            let l = chol.l_dirty();
            // complex Cholesky does not fail on negative pivots, it takes an
            // imaginary square root instead
            let min_pivot = (0..l.nrows())
                .map(|i| {
                    let p = l[(i, i)];
                    if p.im.abs() > 1e-12 * p.re.abs() { -p.norm() } else { p.re }
                })
                .fold(f64::INFINITY, f64::min);
            if !(min_pivot > 0.0) || !min_pivot.is_finite() {
                return Err(NumericsError::NotPositiveDefinite(min_pivot));
            }
            Ok(chol)
        }
        None => {
            let smallest = eig_hermitian_unchecked(&sym).first().copied().unwrap_or(f64::NAN);
            Err(NumericsError::NotPositiveDefinite(smallest))
        }
    }
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> Result<f64, NumericsError> {
    ensure_square(a)?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let svd = a.clone().svd(false, false);
    Ok(svd.singular_values.iter().copied().fold(0.0, f64::max))
}

/// First and second Wirtinger derivatives of a matrix-valued map of one
/// complex variable, estimated on a plane stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneDerivatives {
    pub value: CMatrix,
    /// `∂_w`
    pub d_w: CMatrix,
    /// `∂_{\bar w}`
    pub d_wbar: CMatrix,
    /// `∂_w ∂_{\bar w}` (a quarter of the Laplacian)
    pub d_w_wbar: CMatrix,
}

/// Samples of a matrix-valued map on the 5x5 plane stencil around `center`.
///
/// Only the nine nodes on the two axes carry information for the central
/// differences used here, so only those are evaluated: the centre, the
/// four neighbours at distance `step` and the four at `2 step`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStencil {
    pub center: C64,
    pub step: f64,
    /// `[c, +h, -h, +ih, -ih, +2h, -2h, +2ih, -2ih]`
    pub samples: Vec<CMatrix>,
}

impl PlaneStencil {
    /// Offsets of the sampled nodes, in the order of `samples`.
    pub fn offsets(step: f64) -> [C64; 9] {
        let h = step;
        [
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
            C64::new(0.0, h),
            C64::new(0.0, -h),
            C64::new(2.0 * h, 0.0),
            C64::new(-2.0 * h, 0.0),
            C64::new(0.0, 2.0 * h),
            C64::new(0.0, -2.0 * h),
        ]
    }

    pub fn sample<E>(
        center: C64,
        step: f64,
        mut f: impl FnMut(C64) -> Result<CMatrix, E>,
    ) -> Result<Result<Self, NumericsError>, E> {
        if !(step >= MIN_FD_STEP) {
            return Ok(Err(NumericsError::StepTooSmall(step)));
        }
        let mut samples = Vec::with_capacity(9);
        for off in Self::offsets(step) {
            samples.push(f(center + off)?);
        }
        Ok(Ok(Self { center, step, samples }))
    }

    /// Build from already evaluated samples (order as in [`PlaneStencil::offsets`]).
    pub fn from_samples(center: C64, step: f64, samples: Vec<CMatrix>) -> Result<Self, NumericsError> {
        if !(step >= MIN_FD_STEP) {
            return Err(NumericsError::StepTooSmall(step));
        }
        assert_eq!(samples.len(), 9, "plane stencil needs nine samples");
        Ok(Self { center, step, samples })
    }

    /// Second-order central differences using the arm at distance
    /// `spacing * step`, `spacing` in {1, 2}.
    pub fn derivatives(&self, spacing: usize) -> PlaneDerivatives {
        let (p, m, pi, mi) = match spacing {
            1 => (1, 2, 3, 4),
            2 => (5, 6, 7, 8),
            _ => panic!("stencil spacing must be 1 or 2"),
        };
        let h = self.step * spacing as f64;
        let s = &self.samples;
        let dx = (&s[p] - &s[m]).scale(0.5 / h);
        let dy = (&s[pi] - &s[mi]).scale(0.5 / h);
        let lap = (&s[p] + &s[m] + &s[pi] + &s[mi] - s[0].scale(4.0)).scale(1.0 / (h * h));
        let i = C64::new(0.0, 1.0);
        PlaneDerivatives {
            value: s[0].clone(),
            d_w: (&dx - &dy * i).scale(0.5),
            d_wbar: (&dx + &dy * i).scale(0.5),
            d_w_wbar: lap.scale(0.25),
        }
    }
}

/// One Richardson step for a second-order quantity: `(4 fine - coarse) / 3`.
pub fn richardson(fine: &CMatrix, coarse: &CMatrix) -> CMatrix {
    (fine.scale(4.0) - coarse).scale(1.0 / 3.0)
}

/// `∂_w ∂_{\bar w}` of the sampled map. With `extrapolate` the step-`h` and
/// step-`2h` estimates are combined by one Richardson level.
pub fn fd_mixed_second(stencil: &PlaneStencil, extrapolate: bool) -> CMatrix {
    let fine = stencil.derivatives(1).d_w_wbar;
    if extrapolate {
        richardson(&fine, &stencil.derivatives(2).d_w_wbar)
    } else {
        fine
    }
}
