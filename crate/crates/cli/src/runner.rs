//! Executes validated plans: one report row per `k`, then the gates.

use std::time::Instant;

use mavol_core::directimage::{ma_zhang_gap, BaseGrid, CurvatureFamily, CurvatureScheme, FamilyGram};
use mavol_core::geometry::{check_positivity, sphere_points, AuditGrid, AuxWeight, FiberedWeight, Potential};
use mavol_core::mavol::{asymptotic_rhs, demailly_gap, mavol, saturation_residual, theorem11_ratio};
use mavol_core::numerics::PlaneRule;
use mavol_core::sympow::{
    griffiths_check, projectivized_crosscheck, sym_power_weights, sympow_mavol_rescaled, SplitBundle,
    CROSSCHECK_MAX_K,
};
use mavol_core::toeplitz::{det_lemma_ratio, product_defect};
use mavol_core::bergman::FiberSpace;
use mavol_core::C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Family, Plan};
use crate::report::{sig12, GateResult, Report, ReportRow};

/// Base point whose fiber carries the Toeplitz columns. Away from `w = 0`,
/// where the `sep` and `cross` perturbations vanish identically.
pub const FIBER_PROBE: C64 = C64::new(0.6, 0.3);

/// A computation that cannot produce a trustworthy number: loss of
/// positivity, an unstable finite-difference curvature, or an unresolved
/// quadrature.
#[derive(Debug, Error)]
#[error("numerical abort in scenario {scenario}{}: {message}", .k.map(|k| format!(" at k={k}")).unwrap_or_default())]
pub struct NumericalAbort {
    pub scenario: String,
    pub k: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock seconds per row; otherwise the column is 0 so that
    /// reports are byte-identical across runs.
    pub timings: bool,
}

struct Context<'a> {
    label: &'a str,
    plan: &'a Plan,
}

impl Context<'_> {
    fn abort(&self, k: Option<u32>, e: impl std::fmt::Display) -> NumericalAbort {
        NumericalAbort { scenario: self.label.to_string(), k, message: e.to_string() }
    }

    fn gate(&self, gate: &str, k: Option<u32>, passed: bool, detail: String) -> GateResult {
        GateResult { gate: gate.to_string(), scenario: self.label.to_string(), k, passed, detail }
    }
}

fn potential_of(family: &Family) -> Potential {
    match family {
        Family::Model(m) => m.potential,
        Family::Bundle(b) => {
            let d = b.degrees();
            Potential::Projectivized { a1: d[0], a2: d[1] }
        }
    }
}

/// The `k`-independent columns.
struct Shared {
    rhs: f64,
    saturation: f64,
    demailly: (f64, f64),
}

fn shared_quantities(cx: &Context, base: &BaseGrid) -> Result<Shared, NumericalAbort> {
    let plan = cx.plan;
    let potential = potential_of(&plan.family);
    let n = plan.grid.integration_radial;
    let fiber = PlaneRule::new(n, 2 * n).map_err(|e| cx.abort(None, e))?;
    let rhs = asymptotic_rhs(&potential, plan.base_volume, base, &fiber).map_err(|e| cx.abort(None, e))?;
    let saturation = saturation_residual(&potential, base, &fiber, &sphere_points(8, 8))
        .map_err(|e| cx.abort(None, e))?
        .residual;
    let demailly = demailly_gap(&potential, plan.base_volume, base, &fiber).map_err(|e| cx.abort(None, e))?;
    Ok(Shared { rhs, saturation, demailly })
}

/// Per-`k` values that feed gates but are not report columns.
struct Cell {
    row: ReportRow,
    /// Rescaled volume from the quadrature pipeline, without the Demailly
    /// guard applied.
    pipeline_rescaled: f64,
    /// Exact GM/AM for split bundles.
    exact_rescaled: Option<f64>,
}

fn compute_cell(cx: &Context, base: &BaseGrid, shared: &Shared, k: u32, options: RunOptions) -> Result<Cell, NumericalAbort> {
    let start = Instant::now();
    let plan = cx.plan;
    let err = |e: &dyn std::fmt::Display| cx.abort(Some(k), e);
    let potential = potential_of(&plan.family);
    let aux = match &plan.family {
        Family::Model(m) => m.aux,
        Family::Bundle(_) => AuxWeight::None,
    };
    let weight = FiberedWeight::new(potential, k).with_aux(aux).with_volume(plan.fiber_volume);
    let quadrature = plan.grid.fiber_quadrature(weight.section_degree());
    let family = FamilyGram::with_quadrature(&weight, quadrature).map_err(|e| err(&e))?;
    let scheme = CurvatureScheme { step: plan.grid.fd_step, extrapolate: true };
    let curvature = CurvatureFamily::compute(&family, base, scheme).map_err(|e| err(&e))?;
    let pipeline_mavol = mavol(&curvature).map_err(|e| err(&e))?;
    let degree = curvature.degree();
    if !(degree > 0.0) {
        return Err(err(&format!("degree of the direct image is {degree}")));
    }
    let rank = curvature.rank();
    let pipeline_rescaled = pipeline_mavol * rank as f64 / degree;
    let mz = ma_zhang_gap(&family, &curvature).map_err(|e| err(&e))?.sup;
    let space = FiberSpace::with_quadrature(&weight, FIBER_PROBE, quadrature).map_err(|e| err(&e))?;
    let defect = product_defect(&space, &plan.defect_symbol, &plan.defect_symbol).map_err(|e| err(&e))?;
    let det = det_lemma_ratio(&space, &plan.det_symbols, false).map_err(|e| err(&e))?.ratio;

    let (value, rescaled, exact_rescaled) = match &plan.family {
        Family::Model(_) => (pipeline_mavol, pipeline_rescaled, None),
        Family::Bundle(bundle) => {
            // the base integral of the unit-mass form is 1, so MAVol is the GM
            let spectrum = sym_power_weights(bundle, k).map_err(|e| err(&e))?;
            let exact = sympow_mavol_rescaled(bundle, k).map_err(|e| err(&e))?;
            (spectrum.geometric_mean(), exact, Some(exact))
        }
    };
    let runtime = if options.timings { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(Cell {
        row: ReportRow {
            scenario: cx.label.to_string(),
            k,
            n_k: rank,
            mavol: value,
            mavol_rescaled: rescaled,
            rhs_thm11: shared.rhs,
            ratio_thm11: theorem11_ratio(value, k, shared.rhs),
            mz_gap: mz,
            bms_defect_times_k: k as f64 * defect,
            det_lemma_ratio: det,
            sat_residual: shared.saturation,
            demailly_lhs: shared.demailly.0,
            demailly_rhs: shared.demailly.1,
            runtime_seconds: runtime,
        },
        pipeline_rescaled,
        exact_rescaled,
    })
}

/// Runs one plan under `label`, cells in parallel, rows in ladder order.
pub fn run_plan(label: &str, plan: &Plan, options: RunOptions) -> Result<Report, NumericalAbort> {
    let cx = Context { label, plan };
    let audit = check_positivity(&potential_of(&plan.family), &AuditGrid::sphere_product(12, 12), 0.0);
    if !audit.passed {
        let (z, w) = audit.location;
        return Err(cx.abort(None, format!("Kähler form not positive at z={z}, w={w} (min eigenvalue {:.3e})", audit.min_eigenvalue)));
    }
    let base = BaseGrid::new(plan.grid.base_radial, plan.grid.base_angular).map_err(|e| cx.abort(None, e))?;
    let shared = shared_quantities(&cx, &base)?;
    let ladder = plan.effective_ladder();
    let cells = ladder
        .par_iter()
        .map(|&k| compute_cell(&cx, &base, &shared, k, options))
        .collect::<Result<Vec<_>, _>>()?;
    let mut gates = match &plan.family {
        Family::Model(m) => model_gates(&cx, &cells, &shared, m.is_exact_product()),
        Family::Bundle(b) => bundle_gates(&cx, &cells, &shared, b)?,
    };
    gates.extend(common_gates(&cx, &cells, &shared));
    Ok(Report { rows: cells.into_iter().map(|c| c.row).collect(), gates })
}

/// Runs several plans and concatenates their reports in the given order.
pub fn run_plans(plans: &[(String, Plan)], options: RunOptions) -> Result<Report, NumericalAbort> {
    let reports = plans
        .par_iter()
        .map(|(label, plan)| run_plan(label, plan, options))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Report { rows: Vec::new(), gates: Vec::new() };
    for r in reports {
        out.rows.extend(r.rows);
        out.gates.extend(r.gates);
    }
    Ok(out)
}

/// Observed orders `ln(g_i/g_{i+1}) / ln(k_{i+1}/k_i)` of consecutive pairs.
pub fn pairwise_orders(ks: &[u32], values: &[f64]) -> Vec<f64> {
    ks.windows(2)
        .zip(values.windows(2))
        .map(|(k, g)| (g[0].abs() / g[1].abs()).ln() / (k[1] as f64 / k[0] as f64).ln())
        .collect()
}

/// Decay of `values` in `1/k`. With three or more levels the finest pair
/// must reach `threshold` and every pair must decay; with two levels the
/// sequence must decrease.
fn order_gate(cx: &Context, name: &str, ks: &[u32], values: &[f64], threshold: f64) -> Option<GateResult> {
    if ks.len() < 2 {
        return None;
    }
    let orders = pairwise_orders(ks, values);
    let listed = orders.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", ");
    let all_decay = orders.iter().all(|&p| p > 0.0);
    let passed = if ks.len() >= 3 {
        all_decay && *orders.last().expect("nonempty") >= threshold
    } else {
        all_decay
    };
    let detail = format!(
        "deviations [{}], pairwise orders [{listed}], finest-pair threshold {threshold}",
        values.iter().map(|v| sig12(*v)).collect::<Vec<_>>().join(", ")
    );
    Some(cx.gate(name, None, passed, detail))
}

fn spread_gate(cx: &Context, name: &str, values: &[f64], limit: f64) -> Option<GateResult> {
    if values.len() < 2 {
        return None;
    }
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    let spread = max / min;
    Some(cx.gate(name, None, min > 0.0 && spread <= limit, format!("max/min = {} (limit {limit})", sig12(spread))))
}

fn common_gates(cx: &Context, cells: &[Cell], shared: &Shared) -> Vec<GateResult> {
    let g = &cx.plan.gates;
    let mut out = Vec::new();
    for c in cells {
        let v = c.pipeline_rescaled;
        out.push(cx.gate(
            "demailly-bound",
            Some(c.row.k),
            v <= 1.0 + g.demailly,
            format!("rescaled MAVol {} vs bound 1 + {}", sig12(v), g.demailly),
        ));
    }
    let (lhs, rhs) = shared.demailly;
    out.push(cx.gate(
        "demailly-sides",
        None,
        lhs <= rhs * (1.0 + g.demailly),
        format!("lhs {} vs rhs {}", sig12(lhs), sig12(rhs)),
    ));
    let ks: Vec<u32> = cells.iter().map(|c| c.row.k).collect();
    let defects: Vec<f64> = cells.iter().map(|c| c.row.bms_defect_times_k).collect();
    out.extend(spread_gate(cx, "defect-bounded", &defects, g.defect_spread));
    let det: Vec<f64> = cells.iter().map(|c| (c.row.det_lemma_ratio - 1.0).abs()).collect();
    out.extend(order_gate(cx, "det-lemma-order", &ks, &det, g.order));
    out
}

fn model_gates(cx: &Context, cells: &[Cell], shared: &Shared, exact_product: bool) -> Vec<GateResult> {
    let g = &cx.plan.gates;
    let mut out = Vec::new();
    let ks: Vec<u32> = cells.iter().map(|c| c.row.k).collect();
    if exact_product {
        for c in cells {
            let k = Some(c.row.k);
            let r = &c.row;
            out.push(cx.gate(
                "product-ratio",
                k,
                (r.ratio_thm11 - 1.0).abs() <= g.product,
                format!("ratio {} vs 1 ± {}", sig12(r.ratio_thm11), g.product),
            ));
            out.push(cx.gate(
                "product-rescaled",
                k,
                (r.mavol_rescaled - 1.0).abs() <= g.product,
                format!("rescaled {} vs 1 ± {}", sig12(r.mavol_rescaled), g.product),
            ));
            out.push(cx.gate(
                "ma-zhang-product",
                k,
                r.mz_gap <= g.mz_product,
                format!("gap {} vs {}", sig12(r.mz_gap), g.mz_product),
            ));
        }
        out.push(cx.gate(
            "saturation-product",
            None,
            shared.saturation <= g.saturation,
            format!("residual {} vs {}", sig12(shared.saturation), g.saturation),
        ));
    } else {
        for c in cells {
            out.push(saturation_consistency(cx, c.row.k, shared.saturation, c.pipeline_rescaled));
        }
        let mz: Vec<f64> = cells.iter().map(|c| c.row.mz_gap).collect();
        out.extend(spread_gate(cx, "ma-zhang-bounded", &mz, g.mz_spread));
        let dev: Vec<f64> = cells.iter().map(|c| (c.row.ratio_thm11 - 1.0).abs()).collect();
        out.extend(order_gate(cx, "thm11-order", &ks, &dev, g.order));
    }
    out
}

/// A saturated form has rescaled volume 1; an unsaturated one has it
/// strictly below 1.
fn saturation_consistency(cx: &Context, k: u32, residual: f64, rescaled: f64) -> GateResult {
    let g = &cx.plan.gates;
    let (passed, expectation) = if residual > g.saturation {
        (rescaled < 1.0, "< 1")
    } else {
        ((rescaled - 1.0).abs() <= g.product, "= 1")
    };
    cx.gate(
        "saturation-consistency",
        Some(k),
        passed,
        format!("residual {} so rescaled {} must be {expectation}", sig12(residual), sig12(rescaled)),
    )
}

/// Deterministic sample of the projectivized dual: 100 pairs `(ζ, w)`.
pub fn griffiths_points() -> Vec<(C64, C64)> {
    let zeta = sphere_points(10, 10);
    let w = sphere_points(5, 20);
    zeta.into_iter().zip(w.into_iter().rev()).collect()
}

fn bundle_gates(cx: &Context, cells: &[Cell], shared: &Shared, bundle: &SplitBundle) -> Result<Vec<GateResult>, NumericalAbort> {
    let g = &cx.plan.gates;
    let mut out = Vec::new();
    let flat = bundle.is_projectively_flat();
    for c in cells {
        let k = Some(c.row.k);
        let exact = c.exact_rescaled.expect("bundle rows carry the exact value");
        out.push(cx.gate(
            "sympow-pipeline",
            k,
            (c.pipeline_rescaled - exact).abs() <= g.sympow,
            format!("quadrature {} vs GM/AM {}", sig12(c.pipeline_rescaled), sig12(exact)),
        ));
        let (passed, expectation) = if flat { (exact == 1.0, "exactly 1") } else { (exact < 1.0, "< 1") };
        out.push(cx.gate("sympow-gm-am", k, passed, format!("GM/AM {} must be {expectation}", sig12(exact))));
        out.push(saturation_consistency(cx, c.row.k, shared.saturation, c.pipeline_rescaled));
    }
    let griffiths = griffiths_check(bundle, &griffiths_points()).map_err(|e| cx.abort(None, e))?;
    out.push(cx.gate(
        "griffiths",
        None,
        griffiths.residual <= g.griffiths,
        format!("max relative residual {} over 100 points (limit {})", sig12(griffiths.residual), g.griffiths),
    ));
    let probe = [C64::new(0.0, 0.0), C64::new(0.7, -0.4), C64::new(-1.8, 1.1), C64::new(3.0, 0.5)];
    let mut worst = 0.0_f64;
    let mut scales = Vec::new();
    for k in 1..=CROSSCHECK_MAX_K {
        let r = projectivized_crosscheck(bundle, k, &probe).map_err(|e| cx.abort(Some(k), e))?;
        worst = worst.max(r.gap);
        scales.push(sig12(r.scale));
    }
    out.push(cx.gate(
        "projectivized-crosscheck",
        None,
        worst <= g.crosscheck,
        format!(
            "max gap {} for k = 1..{CROSSCHECK_MAX_K} (limit {}), calibrated scales [{}]",
            sig12(worst),
            g.crosscheck,
            scales.join(", ")
        ),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_power_laws() {
        let ks = [8, 16, 32];
        let p = pairwise_orders(&ks, &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]);
        assert!(p.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let p = pairwise_orders(&[10, 30], &[9.0, 1.0]);
        assert!((p[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn griffiths_points_are_distinct() {
        let pts = griffiths_points();
        assert_eq!(pts.len(), 100);
        for (i, a) in pts.iter().enumerate() {
            assert!(pts[i + 1..].iter().all(|b| a != b));
        }
    }
}
