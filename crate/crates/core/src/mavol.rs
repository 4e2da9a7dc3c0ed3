//! Monge-Ampère volumes of direct images and their asymptotic counterparts.
//!
//! Over a one-dimensional base the determinant over `TB ⊗ E*` is the
//! determinant of the curvature endomorphism `A`, so
//! `MAVol(E_k) = ∫_B (det A)^{1/N_k}` with the root taken in log space. For a
//! line bundle this is `∫_B c_1`.

use std::cell::Cell;
use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::directimage::{BaseGrid, CurvatureFamily};
use crate::geometry::{fiber_omega_integral, fiber_pushforward, schur_horizontal, GeometryError, Potential};
use crate::numerics::{CompensatedSum, PlaneRule, C64};

/// Slack allowed above 1 for the rescaled volume before it is treated as a
/// numerical fault.
pub const DEMAILLY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MavolError {
    #[error("curvature is not positive at w = {w} (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { w: C64, min_eigenvalue: f64 },
    #[error("horizontal form is not positive at (z, w) = ({z}, {w})")]
    HorizontalNotPositive { z: C64, w: C64 },
    #[error("rescaled volume {value} exceeds 1 + {DEMAILLY_TOLERANCE:e}")]
    DemaillyViolation { value: f64 },
    #[error("degree of the direct image is not positive ({0})")]
    Degree(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Volume form `ν_B` on the base, as a (1,1)-form coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseVolume {
    /// Unit-mass Fubini-Study form.
    Fs,
    /// `1/(2π(1+|w|^2)^3)`, a non-homogeneous alternative of mass 1/2.
    FsCubed,
}

impl BaseVolume {
    pub fn id(self) -> &'static str {
        match self {
            BaseVolume::Fs => "fs",
            BaseVolume::FsCubed => "fs-cubed",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "fs" => Some(BaseVolume::Fs),
            "fs-cubed" => Some(BaseVolume::FsCubed),
            _ => None,
        }
    }

    pub fn coefficient(self, w: C64) -> f64 {
        let s = 1.0 + w.norm_sqr();
        match self {
            BaseVolume::Fs => 1.0 / (2.0 * PI * s * s),
            BaseVolume::FsCubed => 1.0 / (2.0 * PI * s * s * s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MAVolReport {
    pub k: u32,
    pub mavol: f64,
    pub rescaled: f64,
    /// Asymptotic right-hand side without the factor `k`.
    pub rhs: f64,
    /// `MAVol / (k · rhs)`
    pub ratio: f64,
    pub base_volume: BaseVolume,
}

/// `∫_B exp(ln det A / N_k)`.
pub fn mavol(curvature: &CurvatureFamily) -> Result<f64, MavolError> {
    let n = curvature.rank() as f64;
    let values = curvature
        .samples
        .iter()
        .map(|s| match s.log_det() {
            // a 1x1 determinant is the entry itself, no root needed
            Some(_) if n == 1.0 => Ok(s.trace()),
            Some(ld) => Ok((ld / n).exp()),
            None => Err(MavolError::NotPositive { w: s.w, min_eigenvalue: s.eigenvalues()[0] }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(curvature.grid.integrate_form(&values))
}

/// `MAVol / (rk^{-1} ∫_B c_1(E_k))`, failing above `1 + DEMAILLY_TOLERANCE`.
pub fn mavol_rescaled(mavol: f64, curvature: &CurvatureFamily) -> Result<f64, MavolError> {
    let degree = curvature.degree();
    if !(degree > 0.0) {
        return Err(MavolError::Degree(degree));
    }
    let value = mavol * curvature.rank() as f64 / degree;
    if value > 1.0 + DEMAILLY_TOLERANCE {
        return Err(MavolError::DemaillyViolation { value });
    }
    Ok(value)
}

/// Fiber average `∫_X log(ω_H/ν_B) ω / ∫_X c_1(L)` over `w`.
fn log_horizontal_mean(potential: &Potential, w: C64, nu: f64, fiber: &PlaneRule) -> Result<f64, MavolError> {
    let degree = potential.fiber_degree() as f64;
    let bad = Cell::new(None);
    let mean = fiber_omega_integral(potential, w, fiber, |z, jet| {
        let h = schur_horizontal(jet);
        if !(h > 0.0) {
            bad.set(Some(z));
            return 0.0;
        }
        (h / nu).ln()
    }) / degree;
    match bad.get() {
        Some(z) => Err(MavolError::HorizontalNotPositive { z, w }),
        None => Ok(mean),
    }
}

/// `∫_B exp(∫_X log(ω_H/ν_B) ω / ∫_X c_1(L)) dν_B` by nested quadrature.
pub fn asymptotic_rhs(
    potential: &Potential,
    nu: BaseVolume,
    base: &BaseGrid,
    fiber: &PlaneRule,
) -> Result<f64, MavolError> {
    let values = base
        .points
        .par_iter()
        .map(|&(w, _)| {
            let c = nu.coefficient(w);
            log_horizontal_mean(potential, w, c, fiber).map(|m| m.exp() * c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(base.integrate_form(&values))
}

pub fn theorem11_ratio(mavol: f64, k: u32, rhs: f64) -> f64 {
    mavol / (k as f64 * rhs)
}

/// Full report for one `k`.
pub fn mavol_report(curvature: &CurvatureFamily, rhs: f64, base_volume: BaseVolume) -> Result<MAVolReport, MavolError> {
    let value = mavol(curvature)?;
    let rescaled = mavol_rescaled(value, curvature)?;
    Ok(MAVolReport {
        k: curvature.k,
        mavol: value,
        rescaled,
        rhs,
        ratio: theorem11_ratio(value, curvature.k, rhs),
        base_volume,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationReport {
    /// `sup_{w} sup_{z} |ω_H/p - g(w)|`
    pub residual: f64,
    /// Fiberwise mean `g(w)` of `ω_H/p` with respect to `ω|_X / ∫_X c_1(L)`.
    pub density: Vec<(C64, f64)>,
}

/// Deviation of `ω_H` from `g · π^* π_*(ω^2)` with `g` the fiber mean.
///
/// The supremum over each fiber is taken on `fiber_grid` (points of the
/// rescaled fiber coordinate) together with the nodes of `fiber`.
pub fn saturation_residual(
    potential: &Potential,
    base: &BaseGrid,
    fiber: &PlaneRule,
    fiber_grid: &[C64],
) -> Result<SaturationReport, MavolError> {
    let degree = potential.fiber_degree() as f64;
    let per_point = base
        .points
        .par_iter()
        .map(|&(w, _)| {
            let p = fiber_pushforward(potential, w, fiber)?;
            let g = fiber_omega_integral(potential, w, fiber, |_, jet| schur_horizontal(jet) / p) / degree;
            let s = potential.fiber_scale(w);
            let sup = fiber_grid
                .iter()
                .map(|&u| u * s)
                .chain(fiber.points().map(|(u, _)| u * s))
                .map(|z| (schur_horizontal(&potential.jet(z, w)) / p - g).abs())
                .fold(0.0, f64::max);
            Ok::<_, MavolError>((w, g, sup))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let residual = per_point.iter().map(|t| t.2).fold(0.0, f64::max);
    Ok(SaturationReport { residual, density: per_point.into_iter().map(|(w, g, _)| (w, g)).collect() })
}

/// Both sides of `∫_B exp(∫_X log(ω_H/ν_B) ω/d) dν_B ≤ ∫_B π_*(ω^2) / (2d)`,
/// `d = ∫_X c_1(L)`. The right side is the fiberwise Jensen bound.
pub fn demailly_gap(
    potential: &Potential,
    nu: BaseVolume,
    base: &BaseGrid,
    fiber: &PlaneRule,
) -> Result<(f64, f64), MavolError> {
    let lhs = asymptotic_rhs(potential, nu, base, fiber)?;
    let pushed = base
        .points
        .par_iter()
        .map(|&(w, _)| fiber_pushforward(potential, w, fiber))
        .collect::<Result<Vec<_>, _>>()?;
    let rhs = base.integrate_form(&pushed) / (2.0 * potential.fiber_degree() as f64);
    Ok((lhs, rhs))
}

/// `ln(x_i)` fitted against `ln k`: slope of the least-squares line.
pub fn fitted_order(ks: &[u32], values: &[f64]) -> f64 {
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect::<CompensatedSum>().value();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -cov / var
}

/// Limit of `a_k` assuming `a_k = L + C/k`, from the two largest `k`.
pub fn extrapolated_limit(ks: &[u32], values: &[f64]) -> f64 {
    let n = ks.len();
    if n < 2 {
        return values[n - 1];
    }
    let (k1, k2) = (ks[n - 2] as f64, ks[n - 1] as f64);
    (k2 * values[n - 1] - k1 * values[n - 2]) / (k2 - k1)
}
