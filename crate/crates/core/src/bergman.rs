//! Holomorphic sections of `L^k ⊗ G` on one fiber, their L² Gram matrices
//! and the Bergman kernel.
//!
//! Sections are written in the monomial frame `z^0, …, z^d`. Gram matrices
//! use the convention `H_ij = ∫ conj(z^i) z^j e^{-Φ} ρ dA`, so that the L²
//! product of coefficient vectors is `<u, v> = v* H u`.
//!
//! The base factor `e^{-k β(w)}` of the weight (see
//! [`Potential::base_reference`](crate::geometry::Potential::base_reference))
//! is split off: stored matrices hold `e^{k β(w)} H`. Everything computed on a
//! single fiber (kernels, Toeplitz spectra) is unaffected by the split.

use nalgebra::{Cholesky, DVector, Dyn};
use thiserror::Error;

use crate::geometry::{FiberVolume, FiberedWeight};
use crate::numerics::{
    cholesky, hermitian_residual, CMatrix, CompensatedComplexSum, CompensatedSum, NumericsError,
    PlaneRule, C64,
};

#[derive(Debug, Error)]
pub enum BergmanError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("Gram matrix over w = {w} is not positive definite (quadrature under-resolved)")]
    Underresolved { w: C64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// The monomial frame `z^0, …, z^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionBasis {
    pub degree: usize,
}

impl SectionBasis {
    pub fn for_weight(weight: &FiberedWeight) -> Self {
        Self { degree: weight.section_degree() }
    }

    /// `N_k = d + 1`.
    pub fn dimension(&self) -> usize {
        self.degree + 1
    }
}

/// Orders of the fiber product rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiberQuadrature {
    pub radial: usize,
    pub angular: usize,
}

impl FiberQuadrature {
    /// Default rule for sections of degree `d`: `2(d+4)` radial nodes and
    /// `4(d+4)` angles.
    pub fn for_degree(d: usize) -> Self {
        Self { radial: 2 * (d + 4), angular: 4 * (d + 4) }
    }

    pub fn doubled(self) -> Self {
        Self { radial: 2 * self.radial, angular: 2 * self.angular }
    }

    /// A rule sharing no nodes with the default one, for independent checks.
    pub fn shifted(self) -> Self {
        Self { radial: self.radial + 3, angular: self.angular + 3 }
    }

    pub fn rule(self) -> Result<PlaneRule, NumericsError> {
        PlaneRule::new(self.radial, self.angular)
    }
}

#[derive(Debug, Clone)]
struct Node {
    z: C64,
    /// `e^{iθ}`
    unit: C64,
    /// Relative weight `Φ_k - k β(w)` at the node.
    phi: f64,
    /// Fiber volume times area weight, `ρ(z) dA`.
    mass: f64,
}

#[derive(Debug, Clone)]
struct RingSamples {
    ln_r: f64,
    /// Minimum of `phi` over the ring, factored out before exponentiating.
    shift: f64,
    nodes: Vec<Node>,
}

/// Weight and volume evaluated on every node of a fiber rule over one base
/// point.
///
/// For the projectivized family the rule is laid out in the rescaled
/// coordinate `z / s(w)` (see
/// [`Potential::fiber_scale`](crate::geometry::Potential::fiber_scale)).
#[derive(Debug, Clone)]
pub struct FiberSamples {
    pub w: C64,
    pub degree: usize,
    rings: Vec<RingSamples>,
}

impl FiberSamples {
    pub fn new(weight: &FiberedWeight, w: C64, rule: &PlaneRule) -> Self {
        let s = weight.potential.fiber_scale(w);
        let (ln_s, jac) = (s.ln(), s * s);
        let units: Vec<C64> = rule.angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let rings = rule
            .rings
            .iter()
            .map(|ring| {
                let r = ring.r * s;
                let nodes: Vec<Node> = units
                    .iter()
                    .map(|&unit| {
                        let z = unit * r;
                        Node {
                            z,
                            unit,
                            phi: weight.relative_weight(z, w),
                            mass: weight.volume_density(z, w) * ring.area_weight * jac,
                        }
                    })
                    .collect();
                let shift = nodes.iter().map(|n| n.phi).fold(f64::INFINITY, f64::min);
                RingSamples { ln_r: ring.ln_r + ln_s, shift, nodes }
            })
            .collect();
        Self { w, degree: weight.section_degree(), rings }
    }

    pub fn dimension(&self) -> usize {
        self.degree + 1
    }

    /// `M_ij = ∫ conj(z^i) z^j f(z) e^{-Φ} ρ dA` on this fiber (base factor
    /// split off). With `f ≡ 1` this is the Gram matrix.
    pub fn moment_matrix(&self, f: impl Fn(C64) -> f64) -> CMatrix {
        let n = self.dimension();
        let mut acc: Vec<CompensatedComplexSum> = vec![CompensatedComplexSum::default(); n * n];
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for ring in &self.rings {
            coeffs.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            for node in &ring.nodes {
                let value = (-(node.phi - ring.shift)).exp() * node.mass * f(node.z);
                let mut p = C64::new(value, 0.0);
                for c in coeffs.iter_mut() {
                    *c += p;
                    p *= node.unit;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let radial = (((i + j) as f64) * ring.ln_r - ring.shift).exp();
                    let c = if j >= i { coeffs[j - i] } else { coeffs[i - j].conj() };
                    acc[i * n + j].add(c * radial);
                }
            }
        }
        CMatrix::from_fn(n, n, |i, j| acc[i * n + j].value())
    }

    /// `∫ f dμ` for the fiber volume `μ = ρ dA`, ignoring the weight.
    pub fn integrate_volume(&self, f: impl Fn(C64) -> f64) -> f64 {
        self.rings
            .iter()
            .flat_map(|r| r.nodes.iter())
            .map(|n| n.mass * f(n.z))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Nodes as `(z, ρ dA)` pairs.
    pub fn volume_nodes(&self) -> impl Iterator<Item = (C64, f64)> + '_ {
        self.rings.iter().flat_map(|r| r.nodes.iter().map(|n| (n.z, n.mass)))
    }
}

/// L² metric of the direct image at one base point, in the monomial frame.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub w: C64,
    pub matrix: CMatrix,
    /// `k β(w)`; the true Gram matrix is `e^{-k β(w)}` times `matrix`.
    pub base_log_weight: f64,
    chol: Cholesky<C64, Dyn>,
}

impl GramMatrix {
    pub fn new(w: C64, matrix: CMatrix, base_log_weight: f64) -> Result<Self, BergmanError> {
        let chol = cholesky(&matrix).map_err(|e| match e {
            NumericsError::NotPositiveDefinite(_) => BergmanError::Underresolved { w },
            other => other.into(),
        })?;
        Ok(Self { w, matrix, base_log_weight, chol })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hermitian_residual(&self) -> f64 {
        hermitian_residual(&self.matrix)
    }

    /// Lower Cholesky factor `L` with `H = L L*`.
    pub fn factor(&self) -> CMatrix {
        self.chol.l()
    }

    /// `H^{-1} X`.
    pub fn solve(&self, x: &CMatrix) -> CMatrix {
        self.chol.solve(x)
    }

    pub fn inverse(&self) -> CMatrix {
        self.chol.inverse()
    }

    /// `ln det` of the stored (base-factored) matrix.
    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        CompensatedSum::from_iter((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln())).value()
    }

    /// `L^{-1} F L^{-*}`: the Hermitian matrix similar to `H^{-1} F`.
    pub fn compress(&self, f: &CMatrix) -> CMatrix {
        let l = self.chol.l();
        let y = l.solve_lower_triangular(f).expect("Cholesky factor is invertible");
        let z = l
            .solve_lower_triangular(&y.adjoint())
            .expect("Cholesky factor is invertible");
        z.adjoint()
    }

    /// `L* X L^{-*}`: an operator written in the monomial frame expressed in
    /// an orthonormal basis, so matrix norms become L² operator norms.
    pub fn to_orthonormal(&self, x: &CMatrix) -> CMatrix {
        let l = self.chol.l();
        let lx = l.adjoint() * x;
        // (L* X) L^{-*} = (L^{-1} (L* X)*)*
        l.solve_lower_triangular(&lx.adjoint())
            .expect("Cholesky factor is invertible")
            .adjoint()
    }
}

/// Gram matrix of `weight` over the base point `w`.
pub fn gram_matrix(
    weight: &FiberedWeight,
    w: C64,
    quadrature: FiberQuadrature,
) -> Result<GramMatrix, BergmanError> {
    let samples = FiberSamples::new(weight, w, &quadrature.rule()?);
    gram_from_samples(weight, &samples)
}

pub fn gram_from_samples(
    weight: &FiberedWeight,
    samples: &FiberSamples,
) -> Result<GramMatrix, BergmanError> {
    let base = weight.k as f64 * weight.potential.base_reference(samples.w).0;
    GramMatrix::new(samples.w, samples.moment_matrix(|_| 1.0), base)
}

/// Sections over one base point together with the quadrature used to build
/// their Gram matrix, so further fiber integrals reuse the same nodes.
#[derive(Debug, Clone)]
pub struct FiberSpace {
    pub weight: FiberedWeight,
    pub samples: FiberSamples,
    pub gram: GramMatrix,
}

impl FiberSpace {
    /// Default quadrature for the section degree of `weight`.
    pub fn new(weight: &FiberedWeight, w: C64) -> Result<Self, BergmanError> {
        Self::with_quadrature(weight, w, FiberQuadrature::for_degree(weight.section_degree()))
    }

    pub fn with_quadrature(
        weight: &FiberedWeight,
        w: C64,
        quadrature: FiberQuadrature,
    ) -> Result<Self, BergmanError> {
        let samples = FiberSamples::new(weight, w, &quadrature.rule()?);
        let gram = gram_from_samples(weight, &samples)?;
        Ok(Self { weight: *weight, samples, gram })
    }

    pub fn dimension(&self) -> usize {
        self.gram.dimension()
    }

    pub fn kernel(&self) -> BergmanKernel {
        BergmanKernel::new(&self.weight, &self.gram)
    }
}

/// Largest entry change between the default rule and the doubled rule,
/// relative to `sqrt(H_ii H_jj)`.
pub fn gram_doubling_change(weight: &FiberedWeight, w: C64) -> Result<f64, BergmanError> {
    let quad = FiberQuadrature::for_degree(weight.section_degree());
    let coarse = gram_matrix(weight, w, quad)?.matrix;
    let fine = gram_matrix(weight, w, quad.doubled())?.matrix;
    let n = coarse.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let scale = (fine[(i, i)].re * fine[(j, j)].re).sqrt();
            worst = worst.max((coarse[(i, j)] - fine[(i, j)]).norm() / scale);
        }
    }
    Ok(worst)
}

/// Reproducing kernel of the section space on one fiber, in the unit-norm
/// trivialization: `P(x, y) = e^{-Φ(x)/2} v(x)^T H^{-1} conj(v(y)) e^{-Φ(y)/2}`
/// with `v = (1, z, …, z^d)`.
#[derive(Debug, Clone)]
pub struct BergmanKernel {
    weight: FiberedWeight,
    w: C64,
    inverse: CMatrix,
}

impl BergmanKernel {
    pub fn new(weight: &FiberedWeight, gram: &GramMatrix) -> Self {
        Self { weight: *weight, w: gram.w, inverse: gram.inverse() }
    }

    pub fn dimension(&self) -> usize {
        self.inverse.nrows()
    }

    /// `(z^i e^{-Φ(z)/2})_i`, formed in log space.
    pub fn section_values(&self, z: C64) -> DVector<C64> {
        let n = self.dimension();
        let half = 0.5 * self.weight.relative_weight(z, self.w);
        if z.norm() == 0.0 {
            let mut v = DVector::zeros(n);
            v[0] = C64::new((-half).exp(), 0.0);
            return v;
        }
        let (ln_r, unit) = (z.norm().ln(), z / z.norm());
        let mut phase = C64::new(1.0, 0.0);
        DVector::from_fn(n, |i, _| {
            let value = phase * (i as f64 * ln_r - half).exp();
            phase *= unit;
            value
        })
    }

    pub fn value(&self, x: C64, y: C64) -> C64 {
        let vx = self.section_values(x);
        let vy = self.section_values(y).map(|c| c.conj());
        (vx.transpose() * &self.inverse * vy)[(0, 0)]
    }

    /// `P(x, x)`, real and nonnegative.
    pub fn density(&self, x: C64) -> f64 {
        let v = self.section_values(x);
        let hv = &self.inverse * v.map(|c| c.conj());
        v.iter().zip(hv.iter()).map(|(a, b)| (a * b).re).sum()
    }

    /// `∫ P(x, x) dμ(x)` on the nodes of `samples`.
    pub fn trace(&self, samples: &FiberSamples) -> f64 {
        samples
            .volume_nodes()
            .map(|(z, m)| m * self.density(z))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Worst residual of the reproducing property `∫ P(x, y) s(y) dμ(y) = s(x)`
    /// over basis sections `s` and the given points, with the integral taken
    /// on `samples`. Residuals are relative to the L² norm of `s`.
    pub fn reproducing_residual(&self, samples: &FiberSamples, points: &[C64]) -> f64 {
        let moments = samples.moment_matrix(|_| 1.0);
        let transfer = &self.inverse * &moments;
        let mut worst = 0.0_f64;
        for &x in points {
            let v = self.section_values(x);
            let reproduced = v.transpose() * &transfer;
            for j in 0..self.dimension() {
                let err = (reproduced[(0, j)] - v[j]).norm() / moments[(j, j)].re.sqrt();
                worst = worst.max(err);
            }
        }
        worst
    }
}

pub fn bergman_kernel(weight: &FiberedWeight, gram: &GramMatrix, x: C64, y: C64) -> C64 {
    BergmanKernel::new(weight, gram).value(x, y)
}

/// Density of the normalized `ω|_X` measure with respect to the fiber
/// volume: the expected leading profile of `P_k(x, x) / N_k`.
fn limit_profile(weight: &FiberedWeight, z: C64, w: C64) -> f64 {
    let degree = weight.potential.fiber_degree() as f64;
    let omega = weight.with_volume(FiberVolume::Omega).volume_density(z, w);
    omega / (degree * weight.volume_density(z, w))
}

/// Slopes `ln(y_{i+1}/y_i) / ln(k_{i+1}/k_i)` between consecutive entries.
pub fn log_log_slopes(ks: &[u32], values: &[f64]) -> Vec<f64> {
    ks.windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| (v[1] / v[0]).ln() / (k[1] as f64 / k[0] as f64).ln())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalRow {
    pub k: u32,
    pub n: usize,
    /// `sup_x |P_k(x,x) / (N_k c(x)) - 1|`
    pub sup_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalReport {
    pub rows: Vec<DiagonalRow>,
    /// Empirical decay orders in `1/k` between consecutive rows.
    pub orders: Vec<f64>,
    pub passed: bool,
}

/// Deviation of the Bergman density from its leading profile
/// `N_k c(x)`, where `c` is the normalized `ω|_X` density, over a fiber grid.
/// Passes when the deviation is at rounding level, or strictly decreases
/// with `k · deviation` staying within a factor 2 over the ladder.
pub fn diagonal_expansion_check(
    weight: &FiberedWeight,
    ks: &[u32],
    w: C64,
    grid: &[C64],
) -> Result<DiagonalReport, BergmanError> {
    if ks.windows(2).any(|p| p[1] <= p[0]) {
        return Err(BergmanError::InvalidArgument("k list must increase".into()));
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let wk = weight.with_k(k);
        let gram = gram_matrix(&wk, w, FiberQuadrature::for_degree(wk.section_degree()))?;
        let kernel = BergmanKernel::new(&wk, &gram);
        let n = kernel.dimension();
        let sup = grid
            .iter()
            .map(|&x| (kernel.density(x) / (n as f64 * limit_profile(&wk, x, w)) - 1.0).abs())
            .fold(0.0, f64::max);
        rows.push(DiagonalRow { k, n, sup_deviation: sup });
    }
    let devs: Vec<f64> = rows.iter().map(|r| r.sup_deviation).collect();
    let orders: Vec<f64> = log_log_slopes(ks, &devs).into_iter().map(|s| -s).collect();
    let exact = devs.iter().all(|&d| d <= 1e-10);
    let scaled: Vec<f64> = rows.iter().map(|r| r.k as f64 * r.sup_deviation).collect();
    let spread = scaled.iter().copied().fold(0.0, f64::max)
        / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let decreasing = devs.windows(2).all(|p| p[1] < p[0]);
    let passed = exact || (decreasing && spread <= 2.0);
    Ok(DiagonalReport { rows, orders, passed })
}

/// Sine of half the spherical angle between two chart points.
pub fn chordal_distance(x: C64, y: C64) -> f64 {
    (x - y).norm() / ((1.0 + x.norm_sqr()) * (1.0 + y.norm_sqr())).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalReport {
    pub ks: Vec<u32>,
    pub sup: Vec<f64>,
    /// `log2` of the ratio between consecutive sups.
    pub slopes: Vec<f64>,
    pub passed: bool,
}

/// `sup |P_k(x, y)|` over grid pairs at chordal distance at least
/// `separation`. Passes when every slope is negative and each one is at
/// least 1.5 times steeper than the previous, the signature of decay faster
/// than any power of `k`.
pub fn offdiag_decay_check(
    weight: &FiberedWeight,
    ks: &[u32],
    w: C64,
    grid: &[C64],
    separation: f64,
) -> Result<OffDiagonalReport, BergmanError> {
    if !(separation > 0.0) {
        return Err(BergmanError::InvalidArgument(format!(
            "separation must be positive, got {separation}"
        )));
    }
    let pairs: Vec<(C64, C64)> = grid
        .iter()
        .flat_map(|&x| grid.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| chordal_distance(x, y) >= separation)
        .collect();
    if pairs.is_empty() {
        return Err(BergmanError::InvalidArgument("no separated pairs on the grid".into()));
    }
    let mut sup = Vec::with_capacity(ks.len());
    for &k in ks {
        let wk = weight.with_k(k);
        let gram = gram_matrix(&wk, w, FiberQuadrature::for_degree(wk.section_degree()))?;
        let kernel = BergmanKernel::new(&wk, &gram);
        let values: Vec<DVector<C64>> = grid.iter().map(|&x| kernel.section_values(x)).collect();
        let index = |z: C64| grid.iter().position(|&g| g == z).expect("pair point on grid");
        let s = pairs
            .iter()
            .map(|&(x, y)| {
                let vx = &values[index(x)];
                let vy = values[index(y)].map(|c| c.conj());
                (vx.transpose() * &kernel.inverse * vy)[(0, 0)].norm()
            })
            .fold(0.0, f64::max);
        sup.push(s);
    }
    let slopes: Vec<f64> = sup.windows(2).map(|p| (p[1] / p[0]).log2()).collect();
    let steepening = slopes.windows(2).all(|p| p[1] <= 1.5 * p[0]);
    let passed = slopes.len() >= 2 && slopes.iter().all(|&s| s < 0.0) && steepening;
    Ok(OffDiagonalReport { ks: ks.to_vec(), sup, slopes, passed })
}
