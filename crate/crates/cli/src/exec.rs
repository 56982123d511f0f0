//! Experiment dispatch and tabular output.

use crate::config::{ConfigError, DetectorTag, Experiment, FamilyTag, RunConfig, SearchTag, SCHEMA_VERSION};
use heralded::error::Error;
use heralded::experiments::{
    analytic_fusion, closest_hbsg_state, fusion_characterize, ghz_id_compare, hbsg_sweep, jsa_sweep, named_state,
    teleport, threshold_scan, AnalyticModel, Family, Search,
};
use heralded::circuits::{builtin, RunOptions};
use heralded::linalg::CMat;
use heralded::sources::SourceModel;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Desk-scale fusion grid used when the config gives none.
pub const FUSION_GRID: [f64; 3] = [0.9, 0.95, 1.0];
/// Largest fusion grid run without `--long`.
pub const FUSION_DESK_POINTS: usize = 3;

pub enum Failure {
    Config(String),
    Core(Error),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Core(Error::Invalid(_) | Error::Definition(_)) => 1,
            Failure::Core(Error::Numerical(_)) => 2,
            Failure::Core(Error::Resource(_)) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Io(m) => format!("io error: {m}"),
            Failure::Core(e) => format!("{e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Per-row records and matrices for the JSON sidecar.
    pub records: Vec<Value>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), records: Vec::new() }
    }

    pub fn csv(&self, hash: &str) -> String {
        let mut out = format!("# schema_version={SCHEMA_VERSION} config_hash={hash}\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

fn matrix_json(m: &CMat) -> Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    json!(rows)
}

fn rs_p0(v: f64) -> Result<f64, Failure> {
    match SourceModel::rs_two_schmidt(v)? {
        SourceModel::Rs { q } => Ok(q[0]),
        _ => unreachable!(),
    }
}

pub fn execute(cfg: &RunConfig, base: &Path, long: bool) -> Result<Table, Failure> {
    cfg.validate(base)?;
    match cfg.experiment {
        Experiment::HbsgSweep => {
            let circuit = cfg.circuit_spec(base)?;
            let src = cfg.source.as_ref().expect("validated");
            let family: Family = src.family.into();
            let pts = hbsg_sweep(&circuit, family, &src.visibilities, &RunOptions::default())?;
            let mut t = Table::new(&[
                "circuit",
                "family",
                "visibility",
                "fidelity",
                "schur_fidelity",
                "eof",
                "success_probability",
                "computational_symmetric",
                "computational_antisymmetric",
                "noncomputational_symmetric",
                "noncomputational_antisymmetric",
                "clipped",
            ]);
            for p in pts {
                let s = p.sectors;
                t.rows.push(vec![
                    Cell::Text(circuit.name.clone()),
                    Cell::Text(family_name(src.family).into()),
                    p.visibility.into(),
                    p.fidelity.into(),
                    p.schur_fidelity.into(),
                    p.eof.into(),
                    p.success_probability.into(),
                    s.map(|s| s.computational_symmetric).into(),
                    s.map(|s| s.computational_antisymmetric).into(),
                    s.map(|s| s.noncomputational_symmetric).into(),
                    s.map(|s| s.noncomputational_antisymmetric).into(),
                    p.clipped.into(),
                ]);
                t.records.push(json!({ "point": p, "rho": matrix_json(&p.rho.matrix) }));
            }
            Ok(t)
        }
        Experiment::Teleport => {
            let src = cfg.source.as_ref().expect("validated");
            let inputs = &cfg.teleport.as_ref().expect("validated").inputs;
            let family: Family = src.family.into();
            let mut t = Table::new(&["family", "visibility", "input", "fidelity", "success_probability"]);
            for &v in &src.visibilities {
                for name in inputs {
                    let r = teleport(family, v, &named_state(name)?, &RunOptions::default())?;
                    t.rows.push(vec![
                        Cell::Text(family_name(src.family).into()),
                        v.into(),
                        Cell::Text(name.clone()),
                        r.fidelity.into(),
                        r.success_probability.into(),
                    ]);
                    t.records.push(json!({ "visibility": v, "input": name, "result": r }));
                }
            }
            Ok(t)
        }
        Experiment::ThresholdScan => {
            let circuit = cfg.circuit_spec(base)?;
            let d = cfg.detector.as_ref().expect("validated");
            debug_assert_eq!(d.mode, DetectorTag::Threshold);
            let pts = threshold_scan(&circuit, &d.eta_s, &d.eta_h, d.kappa)?;
            let mut t = Table::new(&["circuit", "kappa", "eta_s", "eta_h", "fidelity", "success_probability"]);
            for p in pts {
                t.rows.push(vec![
                    Cell::Text(circuit.name.clone()),
                    d.kappa.into(),
                    p.eta_s.into(),
                    p.eta_h.into(),
                    p.fidelity.into(),
                    p.success_probability.into(),
                ]);
                t.records.push(json!(p));
            }
            Ok(t)
        }
        Experiment::GhzId => {
            let d = cfg.detector.as_ref().expect("validated");
            let pts = ghz_id_compare(&d.eta_s, &d.eta_h, d.kappa)?;
            let mut t = Table::new(&["eta_s", "eta_h", "loss_rate", "p_id", "p_thr", "deviation"]);
            for p in pts {
                t.rows.push(vec![
                    p.eta_s.into(),
                    p.eta_h.into(),
                    p.loss_rate.into(),
                    p.p_id.into(),
                    p.p_thr.into(),
                    p.deviation.into(),
                ]);
                t.records.push(json!(p));
            }
            Ok(t)
        }
        Experiment::Fusion => {
            let grid: Vec<f64> = match &cfg.source {
                Some(s) => s.visibilities.clone(),
                None if long => (0..=10).map(|k| 0.5 + 0.05 * k as f64).collect(),
                None => FUSION_GRID.to_vec(),
            };
            if grid.len() > FUSION_DESK_POINTS && !long {
                return Err(Failure::Core(Error::Resource(format!(
                    "fusion grid has {} points; more than {FUSION_DESK_POINTS} requires --long",
                    grid.len()
                ))));
            }
            let pts = fusion_characterize(&grid)?;
            let mut t = Table::new(&[
                "visibility",
                "f_stage0",
                "f_stage1",
                "f_schur_stage0",
                "f_schur_stage1",
                "f_analytic_stage1",
                "success_probability",
            ]);
            for p in pts {
                t.rows.push(vec![
                    p.visibility.into(),
                    p.f_stage0.into(),
                    p.f_stage1.into(),
                    p.f_schur_stage0.into(),
                    p.f_schur_stage1.into(),
                    p.f_analytic_stage1.into(),
                    p.success_probability.into(),
                ]);
                t.records.push(json!(p));
            }
            Ok(t)
        }
        Experiment::ClosestState => {
            let c = cfg.closest.as_ref().expect("validated");
            let v = c.target_visibility;
            let model = match c.target_model {
                FamilyTag::Obb => AnalyticModel::Obb { v },
                _ => AnalyticModel::rs_from_p0(rs_p0(v)?)?,
            };
            let target = analytic_fusion(model, c.stage)?;
            let search = match c.search {
                SearchTag::NelderMead => Search::NelderMead,
                SearchTag::BackendGrid => Search::BackendGrid,
            };
            let r = closest_hbsg_state(&target, c.family.into(), search)?;
            let mut t = Table::new(&[
                "target_model",
                "target_visibility",
                "stage",
                "family",
                "search",
                "fidelity",
                "parameter",
                "converged",
                "iterations",
            ]);
            t.rows.push(vec![
                Cell::Text(family_name(c.target_model).into()),
                v.into(),
                Cell::Int(c.stage as u64),
                Cell::Text(family_name(c.family).into()),
                Cell::Text(search_name(c.search).into()),
                r.fidelity.into(),
                r.parameter.into(),
                Cell::Text(r.converged.to_string()),
                Cell::Int(r.iterations),
            ]);
            t.records.push(json!({
                "result": r,
                "target": matrix_json(&target.matrix),
                "rho": r.rho.as_ref().map(|q| matrix_json(&q.matrix)),
            }));
            Ok(t)
        }
        Experiment::JsaSweep => {
            let j = cfg.jsa.as_ref().expect("validated");
            let circuits = j.circuits.iter().map(|n| builtin(n)).collect::<Result<Vec<_>, _>>()?;
            let pts = jsa_sweep(&j.filter_widths, j.epsilon, &circuits)?;
            let mut cols: Vec<String> =
                ["filter_width", "purity", "k_trunc", "truncation_fidelity"].iter().map(|s| s.to_string()).collect();
            cols.extend(j.circuits.iter().map(|n| format!("fidelity_{n}")));
            let mut t = Table { columns: cols, rows: Vec::new(), records: Vec::new() };
            for p in pts {
                let mut row = vec![
                    p.filter_width.into(),
                    p.purity.into(),
                    Cell::Int(p.k_trunc as u64),
                    p.truncation_fidelity.into(),
                ];
                row.extend(p.fidelities.iter().map(|&f| Cell::Num(f)));
                t.rows.push(row);
                t.records.push(json!(p));
            }
            Ok(t)
        }
    }
}

fn family_name(f: FamilyTag) -> &'static str {
    match f {
        FamilyTag::Ideal => "ideal",
        FamilyTag::Obb => "obb",
        FamilyTag::Rs => "rs",
    }
}

fn search_name(s: SearchTag) -> &'static str {
    match s {
        SearchTag::NelderMead => "nelder_mead",
        SearchTag::BackendGrid => "backend_grid",
    }
}

/// Writes `<experiment>.csv` and `<experiment>.json` into `out`.
pub fn write_outputs(cfg: &RunConfig, table: &Table, out: &Path) -> Result<(PathBuf, PathBuf), Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let hash = cfg.hash();
    let id = cfg.experiment.id();
    let csv = out.join(format!("{id}.csv"));
    let side = out.join(format!("{id}.json"));
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config_hash": hash,
        "experiment": id,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "columns": table.columns,
        "records": table.records,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))? + "\n";
    std::fs::write(&csv, table.csv(&hash)).map_err(|e| Failure::Io(format!("{}: {e}", csv.display())))?;
    std::fs::write(&side, text).map_err(|e| Failure::Io(format!("{}: {e}", side.display())))?;
    Ok((csv, side))
}
