//! The subcommands. Each writes `{"config": ..., "result": ...}` (or a CSV for
//! `trace`) and reports certificate failures as exit code 1 after writing.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use qhardy::blaschke::{default_truncation, finite_blaschke, prescribed_zero_blaschke};
use qhardy::factor::{extract_zeros, outer_inner_split};
use qhardy::hardy::{boundary_trace, hardy_norm, NodeStatus};
use qhardy::quat::exp_on_slice;
use qhardy::{find_zeros, ImaginaryUnit, Quaternion, RegularSeries, ZeroRecord, ZeroSequence};
use serde::{Deserialize, Serialize};

use crate::config::{BlaschkeMode, Command, JobConfig};
use crate::CliError;

/// Relative coefficient residual accepted for `f = h * g`.
const EXTRACTION_TOL: f64 = 1e-7;
/// Accepted `| |B| - 1 |` on the boundary and `|B(a)|` at the targets.
const BLASCHKE_TOL: f64 = 1e-6;
const BLASCHKE_CHECK_NODES: usize = 256;

pub fn run(cfg: &JobConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Eval => eval(cfg),
        Command::Norm => norm(cfg),
        Command::Zeros => zeros(cfg),
        Command::Blaschke => blaschke(cfg),
        Command::Factor => factor(cfg),
        Command::Trace => trace(cfg),
    }
}

fn read_input(cfg: &JobConfig) -> Result<String, CliError> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Input("no input file (use --input)".into()))?;
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_series(cfg: &JobConfig) -> Result<RegularSeries, CliError> {
    let text = read_input(cfg)?;
    let path = cfg.input.as_deref().unwrap_or(Path::new("-"));
    qhardy::io::series_from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn open_output(cfg: &JobConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("write failed: {e}"))
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a JobConfig,
    result: T,
}

fn emit<T: Serialize>(cfg: &JobConfig, result: T) -> Result<(), CliError> {
    let mut out = open_output(cfg)?;
    serde_json::to_writer_pretty(&mut out, &Report { config: cfg, result }).map_err(io_error)?;
    writeln!(out).and_then(|_| out.flush()).map_err(io_error)
}

fn unit_or_i(cfg: &JobConfig) -> ImaginaryUnit {
    cfg.unit.unwrap_or_else(|| ImaginaryUnit::new(Quaternion::I).expect("i is a unit"))
}

#[derive(Serialize)]
struct PointValue {
    point: Quaternion,
    value: Quaternion,
    truncation_error: f64,
    beyond_radius: bool,
}

fn eval(cfg: &JobConfig) -> Result<(), CliError> {
    let f = load_series(cfg)?;
    if cfg.points.is_empty() {
        return Err(CliError::Input("no evaluation points (use --at w,x,y,z)".into()));
    }
    let values: Vec<PointValue> = cfg
        .points
        .iter()
        .map(|&q| {
            let e = f.eval_checked(q, 1.0);
            PointValue {
                point: q,
                value: e.value,
                truncation_error: e.truncation_error,
                beyond_radius: e.beyond_radius,
            }
        })
        .collect();
    emit(cfg, values)
}

fn norm(cfg: &JobConfig) -> Result<(), CliError> {
    let p = cfg.p.ok_or_else(|| CliError::Input("no exponent (use --p)".into()))?;
    let f = load_series(cfg)?;
    let est = hardy_norm(&f, p, &cfg.quadrature);
    let divergent = est.divergent;
    emit(cfg, est)?;
    if divergent {
        return Err(CliError::Numerical(format!("the norm estimate for p = {p} diverges")));
    }
    Ok(())
}

fn zeros(cfg: &JobConfig) -> Result<(), CliError> {
    let f = load_series(cfg)?;
    let report = find_zeros(&f)?;
    let unclassified = report.unclassified.len();
    emit(cfg, report)?;
    if unclassified > 0 {
        return Err(CliError::Numerical(format!("{unclassified} zero candidate(s) left unclassified")));
    }
    Ok(())
}

/// A zero list: bare points, or records as written by `zeros`.
#[derive(Deserialize)]
#[serde(untagged)]
enum ZeroList {
    Points(Vec<Quaternion>),
    Records(Vec<ZeroRecord>),
}

#[derive(Serialize)]
struct BlaschkeCheck {
    boundary_modulus_gap: f64,
    target_residual: Option<f64>,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct BlaschkeReport {
    product: qhardy::BlaschkeProduct,
    check: BlaschkeCheck,
}

fn boundary_modulus_gap(b: &RegularSeries) -> f64 {
    let units = [Quaternion::I, Quaternion::J, Quaternion::new(0.0, 1.0, 1.0, 1.0)];
    let mut gap: f64 = 0.0;
    for u in units {
        let unit = ImaginaryUnit::from_direction(u).expect("nonzero direction");
        for k in 0..BLASCHKE_CHECK_NODES {
            let t = std::f64::consts::TAU * k as f64 / BLASCHKE_CHECK_NODES as f64;
            gap = gap.max((b.eval(exp_on_slice(unit, t)).norm() - 1.0).abs());
        }
    }
    gap
}

fn blaschke(cfg: &JobConfig) -> Result<(), CliError> {
    let text = read_input(cfg)?;
    let list: ZeroList = qhardy::io::from_json(&text)?;
    let seq = match list {
        ZeroList::Points(p) => ZeroSequence::new(p),
        ZeroList::Records(r) => ZeroSequence::from_records(&r),
    };
    let n = cfg.truncation.unwrap_or_else(|| default_truncation(seq.points()));
    let product = match cfg.mode {
        BlaschkeMode::Product => finite_blaschke(&seq, n)?,
        BlaschkeMode::Prescribed => prescribed_zero_blaschke(&seq, n)?,
    };
    let target_residual = (cfg.mode == BlaschkeMode::Prescribed)
        .then(|| seq.points().iter().map(|&a| product.eval(a).norm()).fold(0.0, f64::max));
    let gap = boundary_modulus_gap(&product.series);
    let passed = gap <= BLASCHKE_TOL && target_residual.is_none_or(|r| r <= BLASCHKE_TOL);
    let check = BlaschkeCheck { boundary_modulus_gap: gap, target_residual, tolerance: BLASCHKE_TOL, passed };
    emit(cfg, BlaschkeReport { product, check })?;
    if !passed {
        return Err(CliError::Numerical("Blaschke product failed its checks".into()));
    }
    Ok(())
}

fn factor(cfg: &JobConfig) -> Result<(), CliError> {
    let f = load_series(cfg)?;
    match cfg.unit {
        Some(unit) => {
            let split = outer_inner_split(&f, unit, cfg.truncation, &cfg.quadrature)?;
            let failed: Vec<String> = split.certificates.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
            emit(cfg, split)?;
            if !failed.is_empty() {
                return Err(CliError::Numerical(format!("failed certificates: {}", failed.join(", "))));
            }
        }
        None => {
            let ext = extract_zeros(&f, cfg.truncation)?;
            let residual = ext.residual;
            emit(cfg, ext)?;
            if residual > EXTRACTION_TOL {
                return Err(CliError::Numerical(format!("factor residual {residual:e} exceeds {EXTRACTION_TOL:e}")));
            }
        }
    }
    Ok(())
}

fn status_name(s: NodeStatus) -> &'static str {
    match s {
        NodeStatus::Converged => "converged",
        NodeStatus::NotConverged => "not_converged",
        NodeStatus::Skipped => "skipped",
    }
}

fn trace(cfg: &JobConfig) -> Result<(), CliError> {
    let f = load_series(cfg)?;
    let tr = boundary_trace(&f, unit_or_i(cfg), &cfg.quadrature)?;
    let mut out = open_output(cfg)?;
    let header = serde_json::to_string(cfg).map_err(io_error)?;
    writeln!(out, "# config {header}").map_err(io_error)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "w", "x", "y", "z", "abs", "status"]).map_err(io_error)?;
    for (row, s) in tr.rows().iter().zip(&tr.status) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        rec.push(status_name(*s).into());
        w.write_record(&rec).map_err(io_error)?;
    }
    w.flush().map_err(io_error)?;
    let bad = tr.status.iter().filter(|s| **s != NodeStatus::Converged).count();
    if bad > 0 {
        return Err(CliError::Numerical(format!("{bad} of {} trace nodes did not converge", tr.len())));
    }
    Ok(())
}
