//! Model fibrations over the projective line and their Kähler data.
//!
//! The total space is covered by one affine chart with fiber coordinate `z`
//! and base coordinate `w`. A weight is the Kähler potential `φ(z, w)` of
//! `c_1(L, h^L)`, so `h^L = e^{-φ}` and `ω = (i/2π) ∂∂̄ φ`.
//!
//! Coefficient convention: the scalar coefficient of a (1,1)-form along a
//! coordinate `u` is `φ_{uū}/2π`, taken against `i du∧dū`, and the induced
//! area measure on a coordinate curve is `(φ_{uū}/π) dA`. With it
//! `∫_{P^1} c_1(O(a)) = a` holds exactly.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::Matrix2;
use thiserror::Error;

use crate::numerics::{compensated_sum, PlaneRule, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("Kähler form is not positive at z={z}, w={w} (minimum normalized eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { z: C64, w: C64, min_eigenvalue: f64 },
    #[error("fiber quadrature not converged: doubling changed the result by {0:.3e}")]
    QuadratureNotConverged(f64),
    #[error("invalid weight parameter: {0}")]
    InvalidParameter(String),
}

/// Real-valued function of `(z, w)` together with its first Wirtinger
/// derivatives and its mixed (complex Hessian) second derivatives.
///
/// Holomorphic second derivatives are never needed downstream, and the
/// mixed Hessian is closed under sums, products and composition with smooth
/// scalar functions, so they are not tracked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    /// `∂_z f`
    pub dz: C64,
    /// `∂_w f`
    pub dw: C64,
    /// `∂_z ∂_{\bar z} f`
    pub zz: f64,
    /// `∂_w ∂_{\bar w} f`
    pub ww: f64,
    /// `∂_z ∂_{\bar w} f`
    pub zw: C64,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self { value, dz: zero, dw: zero, zz: 0.0, ww: 0.0, zw: zero }
    }

    /// `|z|^2`
    pub fn abs2_z(z: C64) -> Self {
        Self { value: z.norm_sqr(), dz: z.conj(), zz: 1.0, ..Self::constant(0.0) }
    }

    /// `|w|^2`
    pub fn abs2_w(w: C64) -> Self {
        Self { value: w.norm_sqr(), dw: w.conj(), ww: 1.0, ..Self::constant(0.0) }
    }

    /// `Re(z w̄)`
    pub fn re_z_wbar(z: C64, w: C64) -> Self {
        Self {
            value: (z * w.conj()).re,
            dz: w.conj() * 0.5,
            dw: z.conj() * 0.5,
            zz: 0.0,
            ww: 0.0,
            zw: C64::new(0.5, 0.0),
        }
    }

    /// `g ∘ self` given `g`, `g'`, `g''` at `self.value`.
    pub fn compose(self, g: f64, g1: f64, g2: f64) -> Self {
        Self {
            value: g,
            dz: self.dz * g1,
            dw: self.dw * g1,
            zz: g2 * self.dz.norm_sqr() + g1 * self.zz,
            ww: g2 * self.dw.norm_sqr() + g1 * self.ww,
            zw: self.dz * self.dw.conj() * g2 + self.zw * g1,
        }
    }

    pub fn ln(self) -> Self {
        let v = self.value;
        self.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn recip(self) -> Self {
        let v = self.value;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powf(self, p: f64) -> Self {
        let v = self.value;
        self.compose(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            value: c * self.value,
            dz: self.dz * c,
            dw: self.dw * c,
            zz: c * self.zz,
            ww: c * self.ww,
            zw: self.zw * c,
        }
    }

    /// `x(u) = |u|^2/(1+|u|^2)` in the fiber variable.
    pub fn fs_ratio_z(z: C64) -> Self {
        (Self::abs2_z(z) + 1.0).recip().scale(-1.0) + 1.0
    }

    /// `x(u) = |u|^2/(1+|u|^2)` in the base variable.
    pub fn fs_ratio_w(w: C64) -> Self {
        (Self::abs2_w(w) + 1.0).recip().scale(-1.0) + 1.0
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            dz: self.dz + o.dz,
            dw: self.dw + o.dw,
            zz: self.zz + o.zz,
            ww: self.ww + o.ww,
            zw: self.zw + o.zw,
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { value: self.value + c, ..self }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            dz: self.dz * o.value + o.dz * self.value,
            dw: self.dw * o.value + o.dw * self.value,
            zz: self.zz * o.value
                + 2.0 * (self.dz * o.dz.conj()).re
                + self.value * o.zz,
            ww: self.ww * o.value
                + 2.0 * (self.dw * o.dw.conj()).re
                + self.value * o.ww,
            zw: self.zw * o.value
                + self.dz * o.dw.conj()
                + self.dw.conj() * o.dz
                + o.zw * self.value,
        }
    }
}

/// Bounded perturbation `ψ` of the product weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Perturbation {
    None,
    /// `ψ = x(z) x(w)`
    Sep,
    /// `ψ = Re(z w̄) / ((1+|z|^2)(1+|w|^2))`
    Cross,
    /// `ψ = x(z)`
    FiberOnly,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] =
        [Perturbation::None, Perturbation::Sep, Perturbation::Cross, Perturbation::FiberOnly];

    pub fn id(self) -> &'static str {
        match self {
            Perturbation::None => "none",
            Perturbation::Sep => "sep",
            Perturbation::Cross => "cross",
            Perturbation::FiberOnly => "fiber-only",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.id() == id)
    }

    pub fn jet(self, z: C64, w: C64) -> Jet {
        match self {
            Perturbation::None => Jet::constant(0.0),
            Perturbation::Sep => Jet::fs_ratio_z(z) * Jet::fs_ratio_w(w),
            Perturbation::Cross => {
                let denom = (Jet::abs2_z(z) + 1.0) * (Jet::abs2_w(w) + 1.0);
                Jet::re_z_wbar(z, w) * denom.recip()
            }
            Perturbation::FiberOnly => Jet::fs_ratio_z(z),
        }
    }

    /// True when `∂_z ∂_{\bar w} ψ` vanishes identically.
    pub fn is_separated(self) -> bool {
        matches!(self, Perturbation::None | Perturbation::FiberOnly)
    }
}

/// Weight `ψ_G` of the auxiliary line bundle `G` (topologically trivial).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxWeight {
    None,
    /// `ψ_G = c x(z)`
    Fiber(f64),
    /// `ψ_G = c x(z) x(w)`
    Mixed(f64),
}

impl AuxWeight {
    pub fn id(self) -> &'static str {
        match self {
            AuxWeight::None => "none",
            AuxWeight::Fiber(_) => "fiber",
            AuxWeight::Mixed(_) => "mixed",
        }
    }

    pub fn from_id(id: &str, coefficient: f64) -> Option<Self> {
        match id {
            "none" => Some(AuxWeight::None),
            "fiber" => Some(AuxWeight::Fiber(coefficient)),
            "mixed" => Some(AuxWeight::Mixed(coefficient)),
            _ => None,
        }
    }

    pub fn value(self, z: C64, w: C64) -> f64 {
        let x = |u: C64| u.norm_sqr() / (1.0 + u.norm_sqr());
        match self {
            AuxWeight::None => 0.0,
            AuxWeight::Fiber(c) => c * x(z),
            AuxWeight::Mixed(c) => c * x(z) * x(w),
        }
    }
}

/// Relative volume form used in the L² product on each fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiberVolume {
    /// Restriction of `ω` to the fiber, density `φ_{zz̄}/π`.
    Omega,
    /// Unit-mass unperturbed Fubini-Study form, density `1/(π(1+|z|^2)^2)`.
    Reference,
}

impl FiberVolume {
    pub fn id(self) -> &'static str {
        match self {
            FiberVolume::Omega => "omega",
            FiberVolume::Reference => "reference",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "omega" => Some(FiberVolume::Omega),
            "reference" => Some(FiberVolume::Reference),
            _ => None,
        }
    }
}

/// The k-independent Kähler potential of `(L, h^L)` on a model fibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `P^1 × P^1` with `φ = a log(1+|z|^2) + b log(1+|w|^2) + ε ψ(z, w)`.
    Model { a: u32, b: u32, perturbation: Perturbation, eps: f64 },
    /// `P(F^*)` for `F = O(a1) ⊕ O(a2)` with Fubini-Study metrics, and
    /// `L = O(1)` with the induced metric:
    /// `φ = log((1+|w|^2)^{a1} + |ζ|^2 (1+|w|^2)^{a2})`.
    Projectivized { a1: u32, a2: u32 },
}

impl Potential {
    pub fn model(a: u32, b: u32, perturbation: Perturbation, eps: f64) -> Result<Self, GeometryError> {
        if a == 0 || b == 0 {
            return Err(GeometryError::InvalidParameter(format!(
                "degrees must be positive, got a={a}, b={b}"
            )));
        }
        if !eps.is_finite() {
            return Err(GeometryError::InvalidParameter(format!("ε must be finite, got {eps}")));
        }
        Ok(Potential::Model { a, b, perturbation, eps })
    }

    pub fn jet(&self, z: C64, w: C64) -> Jet {
        match *self {
            Potential::Model { a, b, perturbation, eps } => {
                let fiber = (Jet::abs2_z(z) + 1.0).ln().scale(a as f64);
                let base = (Jet::abs2_w(w) + 1.0).ln().scale(b as f64);
                let mut phi = fiber + base;
                if eps != 0.0 && perturbation != Perturbation::None {
                    phi = phi + perturbation.jet(z, w).scale(eps);
                }
                phi
            }
            Potential::Projectivized { a1, a2 } => {
                let s = Jet::abs2_w(w) + 1.0;
                let p1 = s.powf(a1 as f64);
                let p2 = s.powf(a2 as f64);
                (p1 + Jet::abs2_z(z) * p2).ln()
            }
        }
    }

    /// `∫_X c_1(L)` on one fiber.
    pub fn fiber_degree(&self) -> u32 {
        match *self {
            Potential::Model { a, .. } => a,
            Potential::Projectivized { .. } => 1,
        }
    }

    /// `∫_Y c_1(L)^2`.
    pub fn self_intersection(&self) -> f64 {
        match *self {
            Potential::Model { a, b, .. } => 2.0 * a as f64 * b as f64,
            Potential::Projectivized { a1, a2 } => (a1 + a2) as f64,
        }
    }

    /// Radius around which the fiber mass over `w` concentrates. Fiber
    /// quadrature is run in the rescaled coordinate `z / fiber_scale(w)`.
    pub fn fiber_scale(&self, w: C64) -> f64 {
        match *self {
            Potential::Model { .. } => 1.0,
            Potential::Projectivized { a1, a2 } => {
                (1.0 + w.norm_sqr()).powf(0.5 * (a1 as f64 - a2 as f64))
            }
        }
    }

    /// `φ(z, w) - β(w)`, evaluated without forming either term separately.
    pub fn relative_value(&self, z: C64, w: C64) -> f64 {
        match *self {
            Potential::Model { a, perturbation, eps, .. } => {
                let mut v = a as f64 * z.norm_sqr().ln_1p();
                if eps != 0.0 && perturbation != Perturbation::None {
                    v += eps * perturbation.jet(z, w).value;
                }
                v
            }
            Potential::Projectivized { .. } => {
                let s = self.fiber_scale(w);
                (z.norm_sqr() / (s * s)).ln_1p()
            }
        }
    }

    /// Reference base potential `β(w)` whose `k`-th power is split off the
    /// Gram matrices; returns `(β, β_{ww̄})`.
    pub fn base_reference(&self, w: C64) -> (f64, f64) {
        let s = 1.0 + w.norm_sqr();
        let deg = match *self {
            Potential::Model { b, .. } => b,
            Potential::Projectivized { a1, .. } => a1,
        } as f64;
        (deg * s.ln(), deg / (s * s))
    }
}

/// Metric weight of `(L^k ⊗ G, h)` on a model fibration, plus the fiber
/// volume choice used for L² products.
///
/// The total weight is `Φ_k = k φ + ψ_G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberedWeight {
    pub potential: Potential,
    pub k: u32,
    pub aux: AuxWeight,
    pub volume: FiberVolume,
}

impl FiberedWeight {
    pub fn new(potential: Potential, k: u32) -> Self {
        Self { potential, k, aux: AuxWeight::None, volume: FiberVolume::Omega }
    }

    pub fn with_aux(mut self, aux: AuxWeight) -> Self {
        self.aux = aux;
        self
    }

    pub fn with_volume(mut self, volume: FiberVolume) -> Self {
        self.volume = volume;
        self
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    /// Degree of the fiber section space; sections are `z^0, …, z^d`.
    pub fn section_degree(&self) -> usize {
        self.k as usize * self.potential.fiber_degree() as usize
    }

    /// `Φ_k(z, w) - k β(w)`, the weight left after splitting off the base
    /// reference factor (see [`Potential::base_reference`]).
    pub fn relative_weight(&self, z: C64, w: C64) -> f64 {
        self.k as f64 * self.potential.relative_value(z, w) + self.aux.value(z, w)
    }

    /// Total weight `Φ_k(z, w)`.
    pub fn total_weight(&self, z: C64, w: C64) -> f64 {
        self.k as f64 * self.potential.jet(z, w).value + self.aux.value(z, w)
    }

    /// Fiber volume density with respect to `dA(z)`.
    pub fn volume_density(&self, z: C64, w: C64) -> f64 {
        match self.volume {
            FiberVolume::Omega => self.potential.jet(z, w).zz / PI,
            FiberVolume::Reference => {
                let s = self.potential.fiber_scale(w);
                crate::numerics::fs_density(z / s) / (s * s)
            }
        }
    }
}

/// Coefficient matrix of `ω` at a point: entries `φ_{jk̄}/2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahlerCoefficients {
    pub z: C64,
    pub w: C64,
    /// Rows/columns ordered `(z, w)`; `m[(0,1)] = φ_{z w̄}/2π`.
    pub m: Matrix2<C64>,
}

impl KahlerCoefficients {
    pub fn from_jet(z: C64, w: C64, jet: &Jet) -> Self {
        let s = 1.0 / (2.0 * PI);
        let m = Matrix2::new(
            C64::new(jet.zz * s, 0.0),
            jet.zw * s,
            jet.zw.conj() * s,
            C64::new(jet.ww * s, 0.0),
        );
        Self { z, w, m }
    }

    /// `det M`, real for a Hermitian 2x2 matrix.
    pub fn det(&self) -> f64 {
        self.m[(0, 0)].re * self.m[(1, 1)].re - self.m[(0, 1)].norm_sqr()
    }

    /// Smallest eigenvalue of `2π D M D` with `D = diag(1+|z|^2, 1+|w|^2)`:
    /// the Hessian measured in the Fubini-Study unit frames, equal to
    /// `min(a, b)` for the product weight.
    pub fn normalized_min_eigenvalue(&self) -> f64 {
        let dz = 1.0 + self.z.norm_sqr();
        let dw = 1.0 + self.w.norm_sqr();
        let p = 2.0 * PI * self.m[(0, 0)].re * dz * dz;
        let q = 2.0 * PI * self.m[(1, 1)].re * dw * dw;
        let c = 2.0 * PI * self.m[(0, 1)].norm() * dz * dw;
        let mean = 0.5 * (p + q);
        let radius = (0.25 * (p - q) * (p - q) + c * c).sqrt();
        mean - radius
    }

    pub fn is_positive(&self) -> bool {
        self.m[(0, 0)].re > 0.0 && self.det() > 0.0
    }
}

/// Coefficients of `ω` at `(z, w)`; fails where `ω` is not positive.
pub fn eval_kahler(potential: &Potential, z: C64, w: C64) -> Result<KahlerCoefficients, GeometryError> {
    let coeffs = KahlerCoefficients::from_jet(z, w, &potential.jet(z, w));
    if !coeffs.is_positive() {
        return Err(GeometryError::NotPositive { z, w, min_eigenvalue: coeffs.normalized_min_eigenvalue() });
    }
    Ok(coeffs)
}

/// Schur complement `(φ_{ww̄} - |φ_{zw̄}|^2/φ_{zz̄})/2π` of the jet; no positivity check.
pub fn schur_horizontal(jet: &Jet) -> f64 {
    (jet.ww - jet.zw.norm_sqr() / jet.zz) / (2.0 * PI)
}

/// `ω_H(∂_w, ∂_{\bar w})` at `(z, w)`.
pub fn horizontal_form(potential: &Potential, z: C64, w: C64) -> Result<f64, GeometryError> {
    eval_kahler(potential, z, w)?;
    Ok(schur_horizontal(&potential.jet(z, w)))
}

/// Coefficient of `π_*(ω^2)` against `i dw∧dw̄` at the base point `w`.
///
/// `ω^2 = 2 det(M) (i dz∧dz̄)∧(i dw∧dw̄)` and `i dz∧dz̄ = 2 dA`, so the
/// coefficient is `4 ∫ det M dA(z)`. The rule is checked against the one
/// with doubled orders.
pub fn fiber_pushforward(potential: &Potential, w: C64, rule: &PlaneRule) -> Result<f64, GeometryError> {
    let value = pushforward_with(potential, w, rule);
    let fine = PlaneRule::new(2 * rule.rings.len(), 2 * rule.angles.len())
        .expect("doubling a valid rule stays valid");
    let check = pushforward_with(potential, w, &fine);
    let change = (check - value).abs() / value.abs().max(f64::MIN_POSITIVE);
    if change > 1e-8 {
        return Err(GeometryError::QuadratureNotConverged(change));
    }
    Ok(value)
}

pub(crate) fn pushforward_with(potential: &Potential, w: C64, rule: &PlaneRule) -> f64 {
    let s = potential.fiber_scale(w);
    let jac = s * s;
    4.0 * jac * rule.integrate(|u| {
        let z = u * s;
        KahlerCoefficients::from_jet(z, w, &potential.jet(z, w)).det()
    })
}

/// Unit-mass base Fubini-Study coefficient `ĉ(w) = 1/(2π(1+|w|^2)^2)`.
pub fn fs_coefficient(w: C64) -> f64 {
    let s = 1.0 + w.norm_sqr();
    1.0 / (2.0 * PI * s * s)
}

/// Points of one Riemann sphere chart: `n` midpoint levels in
/// `t = r^2/(1+r^2)` times `m` angles.
pub fn sphere_points(n: usize, m: usize) -> Vec<C64> {
    (0..n)
        .flat_map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let r = (t / (1.0 - t)).sqrt();
            (0..m).map(move |j| C64::from_polar(r, 2.0 * PI * (j as f64 + 0.25) / m as f64))
        })
        .collect()
}

/// Points `(z, w)` on which positivity is audited.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditGrid {
    pub points: Vec<(C64, C64)>,
}

impl AuditGrid {
    /// Product of two [`sphere_points`] grids.
    pub fn sphere_product(n: usize, m: usize) -> Self {
        let sphere = sphere_points(n, m);
        let points = sphere.iter().flat_map(|&z| sphere.iter().map(move |&w| (z, w))).collect();
        Self { points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub location: (C64, C64),
    pub margin: f64,
    pub passed: bool,
}

/// Minimum of the normalized eigenvalue of `ω` over the grid, passed when it
/// exceeds `margin`.
pub fn check_positivity(potential: &Potential, grid: &AuditGrid, margin: f64) -> PositivityReport {
    let mut best = (f64::INFINITY, (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    for &(z, w) in &grid.points {
        let ev = KahlerCoefficients::from_jet(z, w, &potential.jet(z, w)).normalized_min_eigenvalue();
        if ev < best.0 || ev.is_nan() {
            best = (ev, (z, w));
        }
    }
    PositivityReport {
        min_eigenvalue: best.0,
        location: best.1,
        margin,
        passed: best.0 > margin,
    }
}

/// `∫_X` of the ω-induced fiber volume over the fiber above `w`.
pub fn fiber_omega_mass(potential: &Potential, w: C64, rule: &PlaneRule) -> f64 {
    fiber_omega_integral(potential, w, rule, |_, _| 1.0)
}

/// `∫_X f ω|_X` over the fiber above `w`. The integrand receives the point
/// and the jet of `φ` there.
pub fn fiber_omega_integral(
    potential: &Potential,
    w: C64,
    rule: &PlaneRule,
    f: impl Fn(C64, &Jet) -> f64,
) -> f64 {
    let s = potential.fiber_scale(w);
    s * s * rule.integrate(|u| {
        let z = u * s;
        let jet = potential.jet(z, w);
        f(z, &jet) * jet.zz / PI
    })
}

/// Base integral `∫_B π_*(ω^2)` using the product of two plane rules.
pub fn total_pushforward(potential: &Potential, base: &PlaneRule, fiber: &PlaneRule) -> f64 {
    compensated_sum(base.points().map(|(w, dw)| 2.0 * dw * pushforward_with(potential, w, fiber)))
}
