//! Figure-level studies built on the circuit pipeline.

use crate::circuits::{builtin, run_model, CircuitSpec, Detector, HeraldSelection, OutputKind, RunOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::schur::{leakage_report, reduce_schur, schur_fidelity, SectorPopulations};
use crate::sources::{rs_purity, schmidt_from_jsa, uhlmann_fidelity, JsaGrid, JsaParams, SourceModel};
use crate::tomography::{
    entanglement_of_formation, fidelity, logical_density, postselected_density, reconstruct, QubitDensity,
};
use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Source families parameterised by the pairwise visibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ideal,
    Obb,
    /// Two Schmidt modes.
    Rs,
}

impl Family {
    pub fn min_visibility(self) -> f64 {
        match self {
            Family::Ideal => 1.0,
            Family::Obb => 0.0,
            Family::Rs => 0.5,
        }
    }

    pub fn model(self, v: f64) -> Result<SourceModel> {
        if !(self.min_visibility()..=1.0).contains(&v) {
            return invalid(format!("visibility {v} outside [{}, 1] for {self:?}", self.min_visibility()));
        }
        match self {
            Family::Ideal => Ok(SourceModel::Ideal),
            Family::Obb => Ok(SourceModel::Obb { visibility: v }),
            Family::Rs => SourceModel::rs_two_schmidt(v),
        }
    }
}

pub fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return invalid(format!("{name}: empty grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("{name}: grid must be strictly increasing"));
    }
    Ok(())
}

fn target_of(circuit: &CircuitSpec) -> Result<CVec> {
    circuit.target.state().ok_or_else(|| Error::Invalid(format!("{} has no target state", circuit.name)))
}

#[derive(Clone, Debug, Serialize)]
pub struct HbsgPoint {
    pub visibility: f64,
    pub fidelity: f64,
    pub schur_fidelity: Option<f64>,
    pub eof: Option<f64>,
    pub success_probability: f64,
    pub sectors: Option<SectorPopulations>,
    pub clipped: f64,
    #[serde(skip)]
    pub rho: QubitDensity,
}

/// Two-photon Schur state of a two-qubit circuit.
pub fn schur_point(circuit: &CircuitSpec, model: &SourceModel, opts: &RunOptions) -> Result<crate::schur::SchurState> {
    let o = RunOptions { output: OutputKind::Photons { total: 2, cutoff: 2 }, rotations: None, ..opts.clone() };
    let out = run_model(circuit, model, &o)?;
    if out.density.is_empty() {
        return Err(Error::Numerical("zero two-photon herald probability".into()));
    }
    reduce_schur(&out.density, out.d)
}

pub fn hbsg_point(circuit: &CircuitSpec, family: Family, v: f64, opts: &RunOptions) -> Result<HbsgPoint> {
    let model = family.model(v)?;
    let target = target_of(circuit)?;
    let rec = reconstruct(circuit, &model, opts)?;
    let two = circuit.n_qubits() == 2;
    let (schur_f, sectors) = if two {
        let s = schur_point(circuit, &model, opts)?;
        (Some(schur_fidelity(&s)), Some(leakage_report(&s)))
    } else {
        (None, None)
    };
    Ok(HbsgPoint {
        visibility: v,
        fidelity: fidelity(&rec.density, &target),
        schur_fidelity: schur_f,
        eof: if two { Some(entanglement_of_formation(&rec.density)?) } else { None },
        success_probability: rec.success_probability,
        sectors,
        clipped: rec.clipped,
        rho: rec.density,
    })
}

pub fn hbsg_sweep(circuit: &CircuitSpec, family: Family, grid: &[f64], opts: &RunOptions) -> Result<Vec<HbsgPoint>> {
    check_grid(grid, "visibility")?;
    grid.iter().map(|&v| hbsg_point(circuit, family, v, opts)).collect()
}

/// Named single-qubit states: `0`, `1`, `+`, `-`, `+i`, `-i`.
pub fn named_state(name: &str) -> Result<CVec> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match name {
        "0" => (c(1.0, 0.0), c(0.0, 0.0)),
        "1" => (c(0.0, 0.0), c(1.0, 0.0)),
        "+" => (c(h, 0.0), c(h, 0.0)),
        "-" => (c(h, 0.0), c(-h, 0.0)),
        "+i" => (c(h, 0.0), c(0.0, h)),
        "-i" => (c(h, 0.0), c(0.0, -h)),
        _ => return invalid(format!("unknown input state {name}")),
    };
    Ok(CVec::from_vec(vec![a, b]))
}

/// Unitary whose first column is `psi`.
fn preparation(psi: &CVec) -> Result<CMat> {
    if psi.len() != 2 || psi.norm() == 0.0 {
        return invalid("input must be a non-zero single-qubit vector");
    }
    let v = psi.normalize();
    let (a, b) = (v[0], v[1]);
    Ok(CMat::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()]))
}

#[derive(Clone, Debug, Serialize)]
pub struct TeleportResult {
    pub fidelity: f64,
    pub per_pattern: Vec<f64>,
    pub success_probability: f64,
}

/// Teleports `input` through a BSA against one half of a 4P8M pair,
/// averaging the corrected output fidelity uniformly over the BSA patterns.
pub fn teleport(family: Family, v: f64, input: &CVec, opts: &RunOptions) -> Result<TeleportResult> {
    let model = family.model(v)?;
    let spec = builtin("TELEPORT")?.with_preparation(&preparation(input)?, &[0, 1]);
    let psi = input.normalize();
    let parts: Vec<Result<(f64, f64)>> = (0..spec.heralds.len())
        .into_par_iter()
        .map(|i| {
            let o = RunOptions { heralds: HeraldSelection::Indices(vec![i]), ..opts.clone() };
            let (rho, p) = postselected_density(&spec, &model, &o)?;
            Ok((fidelity(&rho, &psi), p))
        })
        .collect();
    let mut per_pattern = Vec::new();
    let mut success = 0.0;
    for p in parts {
        let (f, s) = p?;
        per_pattern.push(f);
        success += s;
    }
    let mean = per_pattern.iter().sum::<f64>() / per_pattern.len() as f64;
    Ok(TeleportResult { fidelity: mean, per_pattern, success_probability: success })
}

/// Default squeezing of the threshold studies.
pub const THRESHOLD_KAPPA: f64 = 0.2;

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdPoint {
    pub eta_s: f64,
    pub eta_h: f64,
    pub fidelity: f64,
    pub success_probability: f64,
}

pub fn threshold_point(circuit: &CircuitSpec, eta_s: f64, eta_h: f64, kappa: f64) -> Result<ThresholdPoint> {
    let opts = RunOptions {
        detector: Detector::Threshold,
        eta_s,
        eta_h,
        kappa,
        heralds: HeraldSelection::Fixed,
        ..RunOptions::default()
    };
    let rec = reconstruct(circuit, &SourceModel::Ideal, &opts)?;
    Ok(ThresholdPoint { eta_s, eta_h, fidelity: fidelity(&rec.density, &target_of(circuit)?), success_probability: rec.success_probability })
}

/// Row-major over `(eta_s, eta_h)`.
pub fn threshold_scan(circuit: &CircuitSpec, eta_s: &[f64], eta_h: &[f64], kappa: f64) -> Result<Vec<ThresholdPoint>> {
    check_grid(eta_s, "eta_s")?;
    check_grid(eta_h, "eta_h")?;
    let mut out = Vec::new();
    for &s in eta_s {
        for &h in eta_h {
            out.push(threshold_point(circuit, s, h, kappa)?);
        }
    }
    Ok(out)
}

/// Loss rate of the independently-degraded GHZ model.
pub fn loss_rate(eta_s: f64, eta_h: f64) -> f64 {
    1.0 - eta_s / (2.0 - eta_s * eta_h)
}

/// Weight `(1-f)^3` of the GHZ component of the independently-degraded state.
pub fn id_ghz_population(eta_s: f64, eta_h: f64) -> f64 {
    (1.0 - loss_rate(eta_s, eta_h)).powi(3)
}

#[derive(Clone, Debug, Serialize)]
pub struct GhzIdPoint {
    pub eta_s: f64,
    pub eta_h: f64,
    pub loss_rate: f64,
    pub p_id: f64,
    pub p_thr: f64,
    pub deviation: f64,
}

/// GHZ population of the 6P12M output conditioned on threshold heralds,
/// relative to all output photon numbers.
pub fn ghz_threshold_population(eta_s: f64, eta_h: f64, kappa: f64) -> Result<f64> {
    let spec = builtin("6P12M")?;
    let opts = RunOptions { detector: Detector::Threshold, eta_s, eta_h, kappa, ..RunOptions::default() };
    let out = run_model(&spec, &SourceModel::Ideal, &opts)?;
    let click = out.click_probability.ok_or_else(|| Error::Numerical("missing click probability".into()))?;
    if out.density.is_empty() || click <= 0.0 {
        return Err(Error::Numerical("zero herald probability".into()));
    }
    let (m, tr) = logical_density(&out.density, 3, out.d)?;
    let rho = QubitDensity { n_qubits: 3, matrix: m.unscale(tr) };
    Ok(fidelity(&rho, &target_of(&spec)?) * out.herald_probability / click)
}

pub fn ghz_id_compare(eta_s: &[f64], eta_h: &[f64], kappa: f64) -> Result<Vec<GhzIdPoint>> {
    check_grid(eta_s, "eta_s")?;
    check_grid(eta_h, "eta_h")?;
    let mut out = Vec::new();
    for &s in eta_s {
        for &h in eta_h {
            let p_id = id_ghz_population(s, h);
            let p_thr = ghz_threshold_population(s, h, kappa)?;
            out.push(GhzIdPoint { eta_s: s, eta_h: h, loss_rate: loss_rate(s, h), p_id, p_thr, deviation: (p_thr - p_id).abs() / p_id });
        }
    }
    Ok(out)
}

/// Closed-form postselected 4P8M states before (stage 0) and after (stage 1) one fusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum AnalyticModel {
    Obb { v: f64 },
    /// `y = Tr(rho_int^4)`.
    Rs { v: f64, y: f64 },
}

impl AnalyticModel {
    /// Two-Schmidt RS with larger probability `p0`.
    pub fn rs_from_p0(p0: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&p0) {
            return invalid(format!("p0 {p0} outside [0.5, 1]"));
        }
        let p1 = 1.0 - p0;
        Ok(AnalyticModel::Rs { v: p0 * p0 + p1 * p1, y: p0.powi(4) + p1.powi(4) })
    }
}

pub fn analytic_fusion(model: AnalyticModel, stage: u8) -> Result<QubitDensity> {
    let (v, inner, corner) = match (model, stage) {
        (AnalyticModel::Obb { v }, 0 | 1) => {
            if !(0.0..=1.0).contains(&v) {
                return invalid("visibility outside [0,1]");
            }
            let v = if stage == 1 { v * v } else { v };
            (v, 0.0, 2.0 * v * v)
        }
        (AnalyticModel::Rs { v, y }, 0 | 1) => {
            if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&y) {
                return invalid("visibility or Y outside [0,1]");
            }
            let (v, y) = if stage == 1 { (v * v, y * y) } else { (v, y) };
            (v, v * v - y, v * v + y)
        }
        _ => return invalid(format!("unknown fusion stage {stage}")),
    };
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = c((1.0 + v) / 4.0, 0.0);
    m[(3, 3)] = c((1.0 + v) / 4.0, 0.0);
    m[(1, 1)] = c((1.0 - v) / 4.0, 0.0);
    m[(2, 2)] = c((1.0 - v) / 4.0, 0.0);
    m[(0, 3)] = c(corner / 4.0, 0.0);
    m[(3, 0)] = c(corner / 4.0, 0.0);
    m[(1, 2)] = c(inner / 4.0, 0.0);
    m[(2, 1)] = c(inner / 4.0, 0.0);
    QubitDensity::new(2, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Search {
    /// Nelder-Mead over the closed-form stage-0 states.
    NelderMead,
    /// Grid over backend-simulated 4P8M states.
    BackendGrid,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosestResult {
    pub fidelity: f64,
    /// Source visibility (OBB) or `p0` (RS) at the optimum.
    pub parameter: f64,
    pub converged: bool,
    pub iterations: u64,
    /// Best fidelity after each iteration (Nelder-Mead) or per grid point.
    pub trace: Vec<f64>,
    #[serde(skip)]
    pub rho: Option<QubitDensity>,
}

/// Reflects `x` into `[lo, hi]`.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut y = (x - lo).rem_euclid(2.0 * w);
    if y > w {
        y = 2.0 * w - y;
    }
    lo + y
}

struct ClosestCost<'a> {
    target: &'a QubitDensity,
    family: Family,
}

impl ClosestCost<'_> {
    fn bounds(&self) -> (f64, f64) {
        match self.family {
            Family::Rs => (0.5, 1.0),
            _ => (0.0, 1.0),
        }
    }

    fn state(&self, x: f64) -> Result<QubitDensity> {
        match self.family {
            Family::Rs => analytic_fusion(AnalyticModel::rs_from_p0(x)?, 0),
            _ => analytic_fusion(AnalyticModel::Obb { v: x }, 0),
        }
    }
}

impl CostFunction for ClosestCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let (lo, hi) = self.bounds();
        let rho = self.state(reflect(p[0], lo, hi)).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        Ok(1.0 - uhlmann_fidelity(&self.target.matrix, &rho.matrix))
    }
}

pub const NM_TOLERANCE: f64 = 1e-8;
pub const NM_MAX_ITERS: u64 = 500;

/// Backend grid resolution: a coarse pass then a refinement around the best point.
pub const GRID_POINTS: usize = 21;

pub fn closest_hbsg_state(target: &QubitDensity, family: Family, search: Search) -> Result<ClosestResult> {
    if target.n_qubits != 2 {
        return invalid("closest-state search needs a two-qubit target");
    }
    if family == Family::Ideal {
        return invalid("closest-state search needs an OBB or RS family");
    }
    let cost = ClosestCost { target, family };
    let (lo, hi) = cost.bounds();
    match search {
        Search::NelderMead => {
            let err = |e: argmin::core::Error| Error::Numerical(e.to_string());
            let solver = NelderMead::new(vec![vec![hi - 0.05 * (hi - lo)], vec![hi - 0.3 * (hi - lo)]])
                .with_alpha(1.0)
                .and_then(|s| s.with_gamma(2.0))
                .and_then(|s| s.with_rho(0.5))
                .and_then(|s| s.with_sigma(0.5))
                .and_then(|s| s.with_sd_tolerance(NM_TOLERANCE))
                .map_err(err)?;
            let mut trace = Vec::new();
            let res = Executor::new(ClosestCost { target, family }, solver)
                .configure(|s| s.max_iters(NM_MAX_ITERS))
                .run()
                .map_err(err)?;
            let state = res.state();
            let x = reflect(state.get_best_param().map_or(hi, |p| p[0]), lo, hi);
            trace.push(1.0 - state.get_best_cost());
            let converged =
                matches!(state.get_termination_status(), TerminationStatus::Terminated(TerminationReason::SolverConverged));
            let rho = cost.state(x)?;
            Ok(ClosestResult {
                fidelity: uhlmann_fidelity(&target.matrix, &rho.matrix),
                parameter: x,
                converged,
                iterations: state.get_iter(),
                trace,
                rho: Some(rho),
            })
        }
        Search::BackendGrid => {
            let circuit = builtin("4P8M")?;
            let eval = |x: f64| -> Result<(f64, QubitDensity)> {
                let model = match family {
                    Family::Rs => SourceModel::Rs { q: vec![x, 1.0 - x] },
                    _ => SourceModel::Obb { visibility: x },
                };
                let (rho, _) = postselected_density(&circuit, &model, &RunOptions::default())?;
                Ok((uhlmann_fidelity(&target.matrix, &rho.matrix), rho))
            };
            let scan = |a: f64, b: f64| -> Result<Vec<(f64, f64, QubitDensity)>> {
                let pts: Vec<f64> = (0..GRID_POINTS).map(|i| a + (b - a) * i as f64 / (GRID_POINTS - 1) as f64).collect();
                pts.par_iter().map(|&x| eval(x).map(|(f, r)| (x, f, r))).collect()
            };
            let mut trace = Vec::new();
            let coarse = scan(lo, hi)?;
            trace.extend(coarse.iter().map(|p| p.1));
            let best = coarse.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("grid is non-empty");
            let step = (hi - lo) / (GRID_POINTS - 1) as f64;
            let fine = scan((best.0 - step).max(lo), (best.0 + step).min(hi))?;
            trace.extend(fine.iter().map(|p| p.1));
            let best = fine.into_iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("grid is non-empty");
            Ok(ClosestResult {
                fidelity: best.1,
                parameter: best.0,
                converged: true,
                iterations: (2 * GRID_POINTS) as u64,
                trace,
                rho: Some(best.2),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FusionPoint {
    pub visibility: f64,
    pub f_stage0: f64,
    pub f_stage1: f64,
    pub f_schur_stage0: f64,
    pub f_schur_stage1: f64,
    pub f_analytic_stage1: f64,
    pub success_probability: f64,
}

/// Simulates the 4P8M resource and the fused 8P16M state with two-Schmidt RS photons.
pub fn fusion_characterize(grid: &[f64]) -> Result<Vec<FusionPoint>> {
    let hbsg = builtin("4P8M")?;
    let fused = builtin("8P16M")?;
    let phi = target_of(&hbsg)?;
    grid.iter()
        .map(|&v| {
            let model = Family::Rs.model(v)?;
            let SourceModel::Rs { q } = &model else { unreachable!() };
            let opts = RunOptions::default();
            let (rho0, _) = postselected_density(&hbsg, &model, &opts)?;
            let s0 = schur_point(&hbsg, &model, &opts)?;
            let all = RunOptions { heralds: HeraldSelection::All, ..opts.clone() };
            let (rho1, p1) = postselected_density(&fused, &model, &all)?;
            let s1 = schur_point(&fused, &model, &all)?;
            let analytic = analytic_fusion(AnalyticModel::rs_from_p0(q[0])?, 1)?;
            Ok(FusionPoint {
                visibility: v,
                f_stage0: fidelity(&rho0, &phi),
                f_stage1: fidelity(&rho1, &phi),
                f_schur_stage0: schur_fidelity(&s0),
                f_schur_stage1: schur_fidelity(&s1),
                f_analytic_stage1: fidelity(&analytic, &phi),
                success_probability: p1,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct JsaPoint {
    pub filter_width: f64,
    pub purity: f64,
    pub k_trunc: usize,
    pub truncation_fidelity: f64,
    /// Postselected fidelity per circuit, in the order requested.
    pub fidelities: Vec<f64>,
}

/// Filter-width sweep: JSA -> truncated Schmidt spectrum -> RS photons -> HBSG fidelities.
pub fn jsa_sweep(widths: &[f64], eps: f64, circuits: &[CircuitSpec]) -> Result<Vec<JsaPoint>> {
    check_grid(widths, "filter_width")?;
    widths
        .iter()
        .map(|&w| {
            let jsa = JsaGrid::model(&JsaParams { filter_width: w, ..JsaParams::default() })?;
            let t = schmidt_from_jsa(&jsa, eps)?;
            let full: Vec<f64> = t.spectrum.iter().map(|s| s * s).collect();
            let q = t.probabilities();
            let model = SourceModel::Rs { q };
            let fidelities = circuits
                .iter()
                .map(|cir| {
                    let (rho, _) = postselected_density(cir, &model, &RunOptions::default())?;
                    Ok(fidelity(&rho, &target_of(cir)?))
                })
                .collect::<Result<_>>()?;
            Ok(JsaPoint {
                filter_width: w,
                purity: rs_purity(&full)?,
                k_trunc: t.k_trunc,
                truncation_fidelity: t.fidelity,
                fidelities,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_rate_values() {
        assert_eq!(loss_rate(1.0, 1.0), 0.0);
        assert!((loss_rate(0.8, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(id_ghz_population(1.0, 1.0), 1.0);
    }

    #[test]
    fn analytic_stage_one_relabels() {
        let v = 0.7;
        let a = analytic_fusion(AnalyticModel::Obb { v }, 1).unwrap();
        let b = analytic_fusion(AnalyticModel::Obb { v: v * v }, 0).unwrap();
        assert!((a.matrix - b.matrix).norm() < 1e-15);
        let rs = analytic_fusion(AnalyticModel::Rs { v: 0.8, y: 0.5 }, 1).unwrap();
        assert!((rs.matrix[(1, 2)].re - (0.8f64.powi(4) - 0.25) / 4.0).abs() < 1e-15);
        assert!((rs.matrix[(0, 3)].re - (0.8f64.powi(4) + 0.25) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn reflection_stays_in_bounds() {
        for x in [-1.3, -0.2, 0.4, 1.2, 2.7] {
            let y = reflect(x, 0.5, 1.0);
            assert!((0.5..=1.0).contains(&y));
        }
        assert!((reflect(1.1, 0.0, 1.0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn grids_must_increase() {
        assert!(check_grid(&[0.1, 0.1], "v").is_err());
        assert!(check_grid(&[], "v").is_err());
        assert!(check_grid(&[0.1, 0.2], "v").is_ok());
    }

    #[test]
    fn family_ranges() {
        assert!(Family::Rs.model(0.4).is_err());
        assert!(Family::Obb.model(1.2).is_err());
        assert!(Family::Obb.model(0.0).is_ok());
    }
}
