//! Symmetric powers of split bundles `F = O(a_1) ⊕ … ⊕ O(a_r)` on the
//! projective line with Fubini-Study metrics.
//!
//! The curvature of `S^k F` is diagonal with entries `d ĉ(w)`, `d` running
//! over the multidegrees, so its rescaled Monge-Ampère volume is the ratio
//! of the geometric and arithmetic means of the degree multiset.

use thiserror::Error;

use crate::bergman::{gram_matrix, BergmanError, FiberQuadrature};
use crate::geometry::{fs_coefficient, schur_horizontal, FiberedWeight, Potential};
use crate::numerics::{CompensatedSum, C64};

/// Largest `k` accepted by [`projectivized_crosscheck`].
pub const CROSSCHECK_MAX_K: u32 = 6;

#[derive(Debug, Error)]
pub enum SympowError {
    #[error("split bundle needs at least one summand")]
    Empty,
    #[error("degree {0} is not positive; the bundle is not ample")]
    NotAmple(u32),
    #[error("this check needs a rank-2 bundle, got rank {0}")]
    Rank(usize),
    #[error("k = {k} exceeds the cost guard {CROSSCHECK_MAX_K}")]
    CostGuard { k: u32 },
    #[error("k must be at least 1")]
    ZeroPower,
    #[error(transparent)]
    Bergman(#[from] BergmanError),
}

/// Degrees of the line-bundle summands, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitBundle {
    degrees: Vec<u32>,
}

impl SplitBundle {
    pub fn new(mut degrees: Vec<u32>) -> Result<Self, SympowError> {
        if degrees.is_empty() {
            return Err(SympowError::Empty);
        }
        if let Some(&d) = degrees.iter().find(|&&d| d == 0) {
            return Err(SympowError::NotAmple(d));
        }
        degrees.sort_unstable();
        Ok(Self { degrees })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn rank(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_projectively_flat(&self) -> bool {
        self.degrees.iter().all(|&d| d == self.degrees[0])
    }
}

/// Multiset of multidegrees `Σ m_i a_i` with `Σ m_i = k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPowerSpectrum {
    pub k: u32,
    /// `(degree, multiplicity)` in increasing degree.
    pub entries: Vec<(u64, u128)>,
}

impl SymPowerSpectrum {
    /// `C(k + r - 1, r - 1)`
    pub fn cardinality(&self) -> u128 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Sum of all degrees with multiplicity.
    pub fn total_degree(&self) -> u128 {
        self.entries.iter().map(|&(d, m)| d as u128 * m).sum()
    }

    pub fn arithmetic_mean(&self) -> f64 {
        self.total_degree() as f64 / self.cardinality() as f64
    }

    pub fn log_geometric_mean(&self) -> f64 {
        let n = self.cardinality() as f64;
        self.entries
            .iter()
            .map(|&(d, m)| m as f64 * (d as f64).ln())
            .collect::<CompensatedSum>()
            .value()
            / n
    }

    pub fn geometric_mean(&self) -> f64 {
        self.log_geometric_mean().exp()
    }

    /// Whether all degrees coincide, i.e. GM = AM exactly.
    pub fn is_constant(&self) -> bool {
        self.entries.len() == 1
    }
}

/// Enumerates `S^k F` by distributing `k` over the summands one at a time.
pub fn sym_power_weights(bundle: &SplitBundle, k: u32) -> Result<SymPowerSpectrum, SympowError> {
    if k == 0 {
        return Err(SympowError::ZeroPower);
    }
    let k = k as usize;
    // counts[j][d]: ways to reach total power j and degree d
    let max_degree = k * *bundle.degrees.last().expect("nonempty") as usize;
    let mut counts = vec![vec![0u128; max_degree + 1]; k + 1];
    counts[0][0] = 1;
    for &a in &bundle.degrees {
        let a = a as usize;
        for j in 1..=k {
            for d in a..=max_degree {
                let prev = counts[j - 1][d - a];
                counts[j][d] += prev;
            }
        }
    }
    let entries = counts[k]
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0)
        .map(|(d, &m)| (d as u64, m))
        .collect();
    Ok(SymPowerSpectrum { k: k as u32, entries })
}

/// `GM / AM` of the spectrum of `S^k F`; exactly 1 when all degrees agree.
pub fn sympow_mavol_rescaled(bundle: &SplitBundle, k: u32) -> Result<f64, SympowError> {
    let spectrum = sym_power_weights(bundle, k)?;
    if spectrum.is_constant() {
        return Ok(1.0);
    }
    Ok((spectrum.log_geometric_mean() - spectrum.arithmetic_mean().ln()).exp())
}

/// `(4/e) / 1.5`, the large-`k` limit for the bundle `(1, 2)`.
pub fn sympow_limit_one_two() -> f64 {
    4.0 / std::f64::consts::E / 1.5
}

fn rank_two(bundle: &SplitBundle) -> Result<(u32, u32), SympowError> {
    match bundle.degrees() {
        &[a1, a2] => Ok((a1, a2)),
        other => Err(SympowError::Rank(other.len())),
    }
}

/// `⟨Θ^F u, u⟩ / 2π` at the unit vector `u` matching the point `ζ` of the
/// projectivized dual over `w`.
pub fn griffiths_expected(a1: u32, a2: u32, zeta: C64, w: C64) -> f64 {
    let s = 1.0 + w.norm_sqr();
    let p1 = s.powi(a1 as i32);
    let p2 = zeta.norm_sqr() * s.powi(a2 as i32);
    fs_coefficient(w) * (a1 as f64 * p1 + a2 as f64 * p2) / (p1 + p2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriffithsReport {
    /// Largest `|ω_H - ⟨Θ^F u, u⟩/2π|` relative to the right-hand side.
    pub residual: f64,
    pub worst: (C64, C64),
}

/// Compares the horizontal part of `c_1(O(1))` on `P(F^*)` with the
/// curvature of `F` at the matching unit vector, at the given `(ζ, w)`.
pub fn griffiths_check(bundle: &SplitBundle, points: &[(C64, C64)]) -> Result<GriffithsReport, SympowError> {
    let (a1, a2) = rank_two(bundle)?;
    let potential = Potential::Projectivized { a1, a2 };
    let mut report = GriffithsReport { residual: 0.0, worst: (C64::new(0.0, 0.0), C64::new(0.0, 0.0)) };
    for &(zeta, w) in points {
        let lhs = schur_horizontal(&potential.jet(zeta, w));
        let rhs = griffiths_expected(a1, a2, zeta, w);
        let r = (lhs - rhs).abs() / rhs;
        if r > report.residual {
            report = GriffithsReport { residual: r, worst: (zeta, w) };
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckReport {
    pub k: u32,
    /// Calibrated ratio between the direct-image and the algebraic metric.
    pub scale: f64,
    /// Largest entry deviation after calibration, relative to
    /// `sqrt(S_ii S_jj)`.
    pub gap: f64,
}

/// Metric of `S^k F` on the monomials `e_1^{k-j} e_2^j`, diagonal entries.
pub fn algebraic_sym_metric(a1: u32, a2: u32, k: u32, w: C64) -> Vec<f64> {
    let s = 1.0 + w.norm_sqr();
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    (0..=k)
        .map(|j| {
            s.powi(-((a1 * (k - j)) as i32)) * s.powi(-((a2 * j) as i32)) * fact(k - j) * fact(j) / fact(k)
        })
        .collect()
}

/// L² Gram matrix of `O(k)` on the projectivized dual (ω-induced fiber
/// volume) against the algebraic metric of `S^k F`, at the given base
/// points, after one global scale.
pub fn projectivized_crosscheck(bundle: &SplitBundle, k: u32, points: &[C64]) -> Result<CrosscheckReport, SympowError> {
    let (a1, a2) = rank_two(bundle)?;
    if k > CROSSCHECK_MAX_K {
        return Err(SympowError::CostGuard { k });
    }
    if k == 0 {
        return Err(SympowError::ZeroPower);
    }
    let weight = FiberedWeight::new(Potential::Projectivized { a1, a2 }, k);
    let quad = FiberQuadrature::for_degree(k as usize);
    let mut pairs = Vec::with_capacity(points.len());
    for &w in points {
        let gram = gram_matrix(&weight, w, quad)?;
        let factor = (-gram.base_log_weight).exp();
        pairs.push((gram.matrix.scale(factor), algebraic_sym_metric(a1, a2, k, w)));
    }
    let scale = pairs[0].0[(0, 0)].re / pairs[0].1[0];
    let mut gap = 0.0_f64;
    for (g, s) in &pairs {
        for i in 0..=k as usize {
            for j in 0..=k as usize {
                let expected = if i == j { scale * s[i] } else { 0.0 };
                let dev = (g[(i, j)] - C64::new(expected, 0.0)).norm() / (scale * (s[i] * s[j]).sqrt());
                gap = gap.max(dev);
            }
        }
    }
    Ok(CrosscheckReport { k, scale, gap })
}
