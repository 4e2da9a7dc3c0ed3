//! Toeplitz operators `T_{f,k}` on fiber section spaces.
//!
//! A Toeplitz matrix is `H^{-1} F` with `F_ij = ∫ conj(z^i) z^j f e^{-Φ} ρ dA`.
//! Spectra and operator norms are taken after the similarity by the Cholesky
//! factor of `H`, which turns every operator into its matrix in an
//! L²-orthonormal basis.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::bergman::{BergmanError, FiberQuadrature, FiberSamples, FiberSpace};
use crate::geometry::{sphere_points, FiberVolume, FiberedWeight};
use crate::numerics::{
    eig_hermitian_unchecked, log_det_posdef, operator_norm, CMatrix, CompensatedSum,
    NumericsError, C64,
};

#[derive(Debug, Error)]
pub enum ToeplitzError {
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("spectrum [{lo}, {hi}] leaves the symbol range [{min}, {max}]")]
    SymbolRange { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("test function {g} is not defined on the symbol range [{min}, {max}]")]
    TestDomain { g: &'static str, min: f64, max: f64 },
    #[error("symbol matrix is not positive definite at z = {z}")]
    NotPositive { z: C64 },
    #[error("symbol matrix size {0} is outside 1..=3")]
    SymbolMatrixSize(usize),
    #[error("unknown catalog id {0:?}")]
    UnknownId(String),
}

/// `x(z) = |z|^2/(1+|z|^2)`
pub fn fs_ratio(z: C64) -> f64 {
    z.norm_sqr() / (1.0 + z.norm_sqr())
}

/// `Re(z)/(1+|z|^2)`, with range `[-1/2, 1/2]`.
pub fn fs_real(z: C64) -> f64 {
    z.re / (1.0 + z.norm_sqr())
}

/// Catalog symbol `c0 + cx x(z) + cre Re(z)/(1+|z|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolFunction {
    pub c0: f64,
    pub cx: f64,
    pub cre: f64,
}

impl SymbolFunction {
    pub const CATALOG: [&'static str; 5] = ["one", "x", "one-plus-half-x", "re", "shifted-re"];

    pub fn constant(c: f64) -> Self {
        Self { c0: c, cx: 0.0, cre: 0.0 }
    }

    pub fn affine(c0: f64, cx: f64, cre: f64) -> Self {
        Self { c0, cx, cre }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Some(match id {
            "one" => Self::constant(1.0),
            "x" => Self::affine(0.0, 1.0, 0.0),
            "one-plus-half-x" => Self::affine(1.0, 0.5, 0.0),
            "re" => Self::affine(0.0, 0.0, 1.0),
            "shifted-re" => Self::affine(1.0, 0.0, 1.0),
            _ => return None,
        })
    }

    pub fn eval(&self, z: C64) -> f64 {
        self.c0 + self.cx * fs_ratio(z) + self.cre * fs_real(z)
    }

    /// Declared range `[f_min, f_max]`, attained or bounding.
    pub fn range(&self) -> (f64, f64) {
        let spread = 0.5 * self.cre.abs();
        (self.c0 + self.cx.min(0.0) - spread, self.c0 + self.cx.max(0.0) + spread)
    }

    pub fn is_constant(&self) -> bool {
        self.cx == 0.0 && self.cre == 0.0
    }
}

impl fmt::Display for SymbolFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {} x + {} re", self.c0, self.cx, self.cre)
    }
}

/// Test function `g` applied to a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    One,
    Identity,
    Square,
    /// `log(1 + x)`
    Log1p,
    Log,
}

impl TestFunction {
    pub const ALL: [TestFunction; 5] = [
        TestFunction::One,
        TestFunction::Identity,
        TestFunction::Square,
        TestFunction::Log1p,
        TestFunction::Log,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Identity => "x",
            TestFunction::Square => "x2",
            TestFunction::Log1p => "log1p",
            TestFunction::Log => "log",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.id() == id)
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Identity => x,
            TestFunction::Square => x * x,
            TestFunction::Log1p => x.ln_1p(),
            TestFunction::Log => x.ln(),
        }
    }

    /// Whether `g` is continuous on a neighbourhood of `[min, max]`.
    pub fn admits(self, min: f64, max: f64) -> bool {
        debug_assert!(min <= max);
        match self {
            TestFunction::Log1p => min > -1.0,
            TestFunction::Log => min > 0.0,
            _ => true,
        }
    }
}

/// `T_{f,k}` in the monomial frame.
#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    pub k: u32,
    /// `F_ij = ∫ conj(z^i) z^j f e^{-Φ} ρ dA`
    pub moments: CMatrix,
    /// `H^{-1} F`
    pub matrix: CMatrix,
    /// `L^{-1} F L^{-*}`, Hermitian and similar to `matrix`.
    pub orthonormal: CMatrix,
}

impl ToeplitzMatrix {
    /// Real spectrum in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian_unchecked(&self.orthonormal)
    }

    /// `‖F - F*‖ / ‖F‖` in max-entry norm.
    pub fn self_adjoint_residual(&self) -> f64 {
        crate::numerics::hermitian_residual(&self.moments)
    }
}

/// Toeplitz matrix of an arbitrary real function, without range checks.
pub fn toeplitz_from_fn(space: &FiberSpace, f: impl Fn(C64) -> f64) -> ToeplitzMatrix {
    let moments = space.samples.moment_matrix(f);
    let matrix = space.gram.solve(&moments);
    let orthonormal = space.gram.compress(&moments);
    ToeplitzMatrix { k: space.weight.k, moments, matrix, orthonormal }
}

/// Toeplitz matrix of a catalog symbol, checking that its spectrum lies in
/// the declared range up to `1e-8`.
pub fn toeplitz_matrix(space: &FiberSpace, f: &SymbolFunction) -> Result<ToeplitzMatrix, ToeplitzError> {
    let t = toeplitz_from_fn(space, |z| f.eval(z));
    let spectrum = t.eigenvalues();
    let (min, max) = f.range();
    let (lo, hi) = (spectrum[0], spectrum[spectrum.len() - 1]);
    if lo < min - 1e-8 || hi > max + 1e-8 {
        return Err(ToeplitzError::SymbolRange { lo, hi, min, max });
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasureReport {
    pub k: u32,
    pub g: TestFunction,
    /// `(1/N_k) Σ g(λ)`
    pub empirical: f64,
    /// `∫_X g(f) ω / ∫_X c_1(L)`
    pub limit: f64,
    /// `empirical - limit`
    pub gap: f64,
}

/// `∫_X g(f) ω / ∫_X c_1(L)` on the fiber over `w`, by a fixed high-order
/// rule.
pub fn spectral_limit(weight: &FiberedWeight, w: C64, f: &SymbolFunction, g: TestFunction) -> Result<f64, ToeplitzError> {
    let omega = weight.with_volume(FiberVolume::Omega);
    let rule = FiberQuadrature { radial: 96, angular: 192 }.rule()?;
    let samples = FiberSamples::new(&omega, w, &rule);
    let degree = weight.potential.fiber_degree() as f64;
    Ok(samples.integrate_volume(|z| g.eval(f.eval(z))) / degree)
}

pub fn spectral_measure_gap(
    space: &FiberSpace,
    f: &SymbolFunction,
    g: TestFunction,
) -> Result<SpectralMeasureReport, ToeplitzError> {
    let (min, max) = f.range();
    if !g.admits(min, max) {
        return Err(ToeplitzError::TestDomain { g: g.id(), min, max });
    }
    let t = toeplitz_matrix(space, f)?;
    let spectrum = t.eigenvalues();
    let empirical =
        spectrum.iter().map(|&l| g.eval(l)).collect::<CompensatedSum>().value() / spectrum.len() as f64;
    let limit = if g == TestFunction::One {
        1.0
    } else {
        spectral_limit(&space.weight, space.gram.w, f, g)?
    };
    Ok(SpectralMeasureReport { k: space.weight.k, g, empirical, limit, gap: empirical - limit })
}

/// `‖T_f T_g - T_{fg}‖` in the L² operator norm.
pub fn product_defect(space: &FiberSpace, f: &SymbolFunction, g: &SymbolFunction) -> Result<f64, ToeplitzError> {
    let tf = toeplitz_from_fn(space, |z| f.eval(z)).orthonormal;
    let tg = toeplitz_from_fn(space, |z| g.eval(z)).orthonormal;
    let tfg = toeplitz_from_fn(space, |z| f.eval(z) * g.eval(z)).orthonormal;
    Ok(operator_norm(&(&tf * &tg - &tfg))?)
}

/// Real symmetric `l × l` matrix of catalog symbols, `l ≤ 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    entries: Vec<Vec<SymbolFunction>>,
}

impl SymbolMatrix {
    /// Entries above the diagonal are mirrored from below.
    pub fn from_lower(rows: Vec<Vec<SymbolFunction>>) -> Result<Self, ToeplitzError> {
        let l = rows.len();
        if !(1..=3).contains(&l) || rows.iter().enumerate().any(|(i, r)| r.len() != i + 1) {
            return Err(ToeplitzError::SymbolMatrixSize(l));
        }
        let entries = (0..l)
            .map(|i| (0..l).map(|j| if j <= i { rows[i][j] } else { rows[j][i] }).collect())
            .collect();
        Ok(Self { entries })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self, ToeplitzError> {
        let rows = (0..values.len())
            .map(|i| {
                (0..=i)
                    .map(|j| SymbolFunction::constant(if i == j { values[i] } else { 0.0 }))
                    .collect()
            })
            .collect();
        Self::from_lower(rows)
    }

    /// Catalog: `chol2` is `[[1 + x/2, x/4], [x/4, 1]]`.
    pub fn from_id(id: &str) -> Result<Self, ToeplitzError> {
        match id {
            "chol2" => Self::from_lower(vec![
                vec![SymbolFunction::affine(1.0, 0.5, 0.0)],
                vec![SymbolFunction::affine(0.0, 0.25, 0.0), SymbolFunction::constant(1.0)],
            ]),
            "diag2" => Self::diagonal(&[2.0, 0.5]),
            "scalar" => Self::from_lower(vec![vec![SymbolFunction::affine(1.0, 0.5, 0.0)]]),
            other => Err(ToeplitzError::UnknownId(other.to_string())),
        }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &SymbolFunction {
        &self.entries[i][j]
    }

    pub fn eval(&self, z: C64) -> Vec<Vec<f64>> {
        self.entries.iter().map(|r| r.iter().map(|f| f.eval(z)).collect()).collect()
    }

    /// Pointwise determinant.
    pub fn det(&self, z: C64) -> f64 {
        let m = self.eval(z);
        match m.len() {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Pointwise lower Cholesky factor `g` with `f = g g^T`, or `None` when
    /// not positive definite.
    pub fn cholesky_at(&self, z: C64) -> Option<Vec<Vec<f64>>> {
        let m = self.eval(z);
        let l = m.len();
        let mut g = vec![vec![0.0; l]; l];
        for i in 0..l {
            for j in 0..=i {
                let s: f64 = (0..j).map(|p| g[i][p] * g[j][p]).sum();
                if i == j {
                    let pivot = m[i][i] - s;
                    if !(pivot > 0.0) {
                        return None;
                    }
                    g[i][i] = pivot.sqrt();
                } else {
                    g[i][j] = (m[i][j] - s) / g[j][j];
                }
            }
        }
        Some(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyDiagnostic {
    /// Sample points and the pointwise factor `g(z)` there.
    pub factors: Vec<(C64, Vec<Vec<f64>>)>,
    /// `‖T_{(f_ij)} - T_g T_g^*‖` in the L² operator norm on `E^l`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetLemmaReport {
    pub k: u32,
    /// `|det T_{(f_ij)}|^{1/N_k} / |det T_{det f}|^{1/N_k}`
    pub ratio: f64,
    pub diagnostic: Option<CholeskyDiagnostic>,
}

fn block_matrix(blocks: &[Vec<CMatrix>]) -> CMatrix {
    let l = blocks.len();
    let n = blocks[0][0].nrows();
    CMatrix::from_fn(l * n, l * n, |r, c| blocks[r / n][c / n][(r % n, c % n)])
}

/// Determinant lemma ratio for a symbol matrix that must be positive
/// definite on an audit grid of the fiber.
pub fn det_lemma_ratio(
    space: &FiberSpace,
    symbols: &SymbolMatrix,
    with_diagnostic: bool,
) -> Result<DetLemmaReport, ToeplitzError> {
    let audit = sphere_points(16, 16);
    if !symbol_matrix_is_positive(symbols, &audit) {
        let z = *audit.iter().find(|&&z| symbols.cholesky_at(z).is_none()).expect("failing point");
        return Err(ToeplitzError::NotPositive { z });
    }
    let l = symbols.size();
    let n = space.dimension();
    let moments: Vec<Vec<CMatrix>> = (0..l)
        .map(|i| (0..l).map(|j| space.samples.moment_matrix(|z| symbols.entry(i, j).eval(z))).collect())
        .collect();
    let block = block_matrix(&moments);
    let det_moments = space.samples.moment_matrix(|z| symbols.det(z));
    let ld_h = space.gram.log_det();
    let ld_block = log_det_posdef(&block)? - l as f64 * ld_h;
    let ld_det = log_det_posdef(&det_moments)? - ld_h;
    let ratio = ((ld_block - ld_det) / n as f64).exp();

    let diagnostic = if with_diagnostic {
        let factors = sphere_points(3, 4)
            .into_iter()
            .map(|z| (z, symbols.cholesky_at(z).expect("audited")))
            .collect();
        let g_entry = |i: usize, j: usize| {
            move |z: C64| symbols.cholesky_at(z).map_or(f64::NAN, |g| g[i][j])
        };
        let tg: Vec<Vec<CMatrix>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        if j <= i {
                            space.gram.compress(&space.samples.moment_matrix(g_entry(i, j)))
                        } else {
                            CMatrix::zeros(n, n)
                        }
                    })
                    .collect()
            })
            .collect();
        let tf: Vec<Vec<CMatrix>> =
            moments.iter().map(|row| row.iter().map(|m| space.gram.compress(m)).collect()).collect();
        let tg = block_matrix(&tg);
        let residual = operator_norm(&(block_matrix(&tf) - &tg * tg.adjoint()))?;
        Some(CholeskyDiagnostic { factors, residual })
    } else {
        None
    };
    Ok(DetLemmaReport { k: space.weight.k, ratio, diagnostic })
}

/// `Σ λ^2` from the spectrum, and the double fiber integral
/// `∫∫ f(x) f(y) |P_k(x, y)|^2 dμ(x) dμ(y)` on a rule sharing no nodes with
/// the one used for the Gram matrix.
pub fn trace_power_crosscheck(space: &FiberSpace, f: &SymbolFunction) -> Result<(f64, f64), ToeplitzError> {
    let t = toeplitz_matrix(space, f)?;
    let trace: f64 = t.eigenvalues().iter().map(|l| l * l).collect::<CompensatedSum>().value();

    let d = space.weight.section_degree();
    let rule = FiberQuadrature::for_degree(d).shifted().rule()?;
    let other = FiberSamples::new(&space.weight, space.gram.w, &rule);
    let kernel = space.kernel();
    let inverse = space.gram.inverse();
    let nodes: Vec<(f64, nalgebra::DVector<C64>)> = other
        .volume_nodes()
        .map(|(z, m)| (m * f.eval(z), kernel.section_values(z)))
        .collect();
    let conj: Vec<nalgebra::DVector<C64>> = nodes.iter().map(|(_, v)| v.map(|c| c.conj())).collect();
    let rows: Vec<f64> = nodes
        .par_iter()
        .map(|(fx, vx)| {
            let row = vx.transpose() * &inverse;
            let inner = nodes
                .iter()
                .zip(&conj)
                .map(|((fy, _), vy)| fy * (&row * vy)[(0, 0)].norm_sqr())
                .collect::<CompensatedSum>()
                .value();
            fx * inner
        })
        .collect();
    let double = rows.into_iter().collect::<CompensatedSum>().value();
    Ok((trace, double))
}

/// Whether the symbol matrix is positive definite at every grid point.
pub fn symbol_matrix_is_positive(symbols: &SymbolMatrix, grid: &[C64]) -> bool {
    grid.iter().all(|&z| symbols.cholesky_at(z).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Perturbation, Potential};

    fn space(k: u32, p: Perturbation, eps: f64) -> FiberSpace {
        let weight = FiberedWeight::new(Potential::model(1, 1, p, eps).unwrap(), k);
        FiberSpace::new(&weight, C64::new(0.3, -0.4)).unwrap()
    }

    fn x() -> SymbolFunction {
        SymbolFunction::from_id("x").unwrap()
    }

    #[test]
    fn constant_symbol_gives_identity() {
        let s = space(6, Perturbation::Cross, 0.1);
        let t = toeplitz_matrix(&s, &SymbolFunction::constant(1.0)).unwrap();
        assert!((t.matrix - CMatrix::identity(7, 7)).norm() < 1e-11);
    }

    #[test]
    fn fs_eigenvalues_are_beta_ratios() {
        for k in [8, 16] {
            let s = space(k, Perturbation::None, 0.0);
            let t = toeplitz_matrix(&s, &x()).unwrap();
            for (i, l) in t.eigenvalues().iter().enumerate() {
                assert!((l - (i + 1) as f64 / (k + 2) as f64).abs() < 1e-12);
            }
            assert!(t.self_adjoint_residual() < 1e-12);
        }
    }

    #[test]
    fn spectra_stay_in_symbol_range() {
        let s = space(10, Perturbation::Cross, 0.1);
        for id in SymbolFunction::CATALOG {
            let f = SymbolFunction::from_id(id).unwrap();
            let t = toeplitz_matrix(&s, &f).unwrap();
            let spec = t.eigenvalues();
            let (lo, hi) = f.range();
            assert!(spec[0] >= lo - 1e-8 && spec[spec.len() - 1] <= hi + 1e-8, "{id}");
            assert!(t.self_adjoint_residual() < 1e-10);
        }
    }

    #[test]
    fn fs_spectral_gaps_match_closed_forms() {
        for k in [8u32, 16] {
            let s = space(k, Perturbation::None, 0.0);
            let mean = spectral_measure_gap(&s, &x(), TestFunction::Identity).unwrap();
            assert!(mean.gap.abs() < 1e-12);
            let sq = spectral_measure_gap(&s, &x(), TestFunction::Square).unwrap();
            assert!((sq.gap + 1.0 / (6.0 * (k + 2) as f64)).abs() < 1e-12);
            let one = spectral_measure_gap(&s, &x(), TestFunction::One).unwrap();
            assert_eq!(one.gap, 0.0);
        }
    }

    #[test]
    fn log_requires_positive_symbol() {
        let s = space(4, Perturbation::None, 0.0);
        assert!(matches!(
            spectral_measure_gap(&s, &x(), TestFunction::Log),
            Err(ToeplitzError::TestDomain { .. })
        ));
        let shifted = SymbolFunction::from_id("shifted-re").unwrap();
        assert!(spectral_measure_gap(&s, &shifted, TestFunction::Log).is_ok());
    }

    #[test]
    fn fs_product_defect_closed_form() {
        let s = space(10, Perturbation::None, 0.0);
        let defect = product_defect(&s, &x(), &x()).unwrap();
        assert!((defect - 36.0 / 1872.0).abs() < 1e-12);
        let constant = product_defect(&s, &SymbolFunction::constant(2.0), &x()).unwrap();
        assert!(constant < 1e-12);
    }

    #[test]
    fn det_lemma_trivial_cases() {
        let s = space(8, Perturbation::Cross, 0.1);
        let scalar = det_lemma_ratio(&s, &SymbolMatrix::from_id("scalar").unwrap(), false).unwrap();
        assert!((scalar.ratio - 1.0).abs() < 1e-12);
        let diag = det_lemma_ratio(&s, &SymbolMatrix::diagonal(&[2.0, 0.5]).unwrap(), false).unwrap();
        assert!((diag.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn det_lemma_chol2_approaches_one() {
        let symbols = SymbolMatrix::from_id("chol2").unwrap();
        let r16 = det_lemma_ratio(&space(16, Perturbation::None, 0.0), &symbols, true).unwrap();
        let r32 = det_lemma_ratio(&space(32, Perturbation::None, 0.0), &symbols, false).unwrap();
        assert!((r32.ratio - 1.0).abs() <= (r16.ratio - 1.0).abs());
        assert!((r16.ratio - 1.0).abs() < 1e-2);
        let diag = r16.diagnostic.unwrap();
        assert!(diag.residual < 0.1, "{}", diag.residual);
        let (z, g) = &diag.factors[0];
        let f = symbols.eval(*z);
        assert!((g[1][0] * g[0][0] - f[1][0]).abs() < 1e-14);
    }

    #[test]
    fn det_lemma_rejects_indefinite_symbols() {
        let bad = SymbolMatrix::from_lower(vec![
            vec![SymbolFunction::constant(1.0)],
            vec![SymbolFunction::constant(2.0), SymbolFunction::constant(1.0)],
        ])
        .unwrap();
        let s = space(4, Perturbation::None, 0.0);
        assert!(matches!(det_lemma_ratio(&s, &bad, false), Err(ToeplitzError::NotPositive { .. })));
    }

    #[test]
    fn trace_power_fs_closed_form() {
        let s = space(8, Perturbation::None, 0.0);
        let (trace, double) = trace_power_crosscheck(&s, &x()).unwrap();
        assert!((trace - 2.85).abs() < 1e-12);
        assert!((double / trace - 1.0).abs() < 1e-6);
        let (n, n2) = trace_power_crosscheck(&s, &SymbolFunction::constant(1.0)).unwrap();
        assert!((n - 9.0).abs() < 1e-10 && (n2 - 9.0).abs() < 1e-8);
    }

    #[test]
    fn catalog_ids_roundtrip() {
        for id in SymbolFunction::CATALOG {
            assert!(SymbolFunction::from_id(id).is_some());
        }
        for g in TestFunction::ALL {
            assert_eq!(TestFunction::from_id(g.id()), Some(g));
        }
        assert!(SymbolMatrix::from_id("nope").is_err());
    }
}
