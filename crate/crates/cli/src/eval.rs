use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use cadgym_core::config::Config;
use cadgym_core::geometry::CsgSolid;
use cadgym_core::gym::{bundled_tasks, load_trajectories, replay, replay_lenient, split_parts, Task, Termination, TrajectoryRecord};
use cadgym_core::metrics::{
    chamfer, classify_conversion, cov, invalidity_ratio, iou, jsd_report, mmd, normalized_cloud, parameter_density, ConversionOutcome,
    PointCloud, VoxelDistribution, JSD_SMOOTHING,
};
use cadgym_core::protocol::ToolCall;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::settings::{load_config, output_path, usage, write_output};

#[derive(clap::Args)]
pub struct Args {
    /// Directory of generated programs, tasks or trajectory files.
    generated: PathBuf,
    /// Directory of reference programs or tasks; `bundled` selects the
    /// built-in task set.
    reference: String,
    /// Multiplier applied to CD and MMD in the report.
    #[arg(long)]
    scale: Option<f64>,
    /// Report output file (JSON lines: one record per pair, then a summary).
    #[arg(long)]
    report: Option<PathBuf>,
}

/// A program read from disk, keyed by id.
struct Entry {
    id: String,
    program: Vec<ToolCall>,
    completed: bool,
}

fn entries_from_file(path: &Path) -> Result<Vec<Entry>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
    if path.extension().is_some_and(|e| e == "jsonl") {
        let records = load_trajectories(&text).with_context(|| format!("loading {}", path.display()))?;
        return Ok(records.iter().map(entry_from_record).collect());
    }
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let entry = match &value {
        Value::Array(_) => Entry {
            id: stem,
            program: serde_json::from_value(value).with_context(|| format!("{}: expected a list of tool calls", path.display()))?,
            completed: true,
        },
        Value::Object(obj) if obj.contains_key("ground_truth_program") => {
            let task = Task::from_json(&text).with_context(|| format!("loading task {}", path.display()))?;
            Entry { id: task.id, program: task.ground_truth_program, completed: true }
        }
        Value::Object(obj) if obj.contains_key("turns") => {
            let record: TrajectoryRecord = serde_json::from_value(value.clone()).with_context(|| format!("loading {}", path.display()))?;
            entry_from_record(&record)
        }
        Value::Object(obj) if obj.contains_key("program") => Entry {
            id: obj.get("id").and_then(Value::as_str).map(str::to_string).unwrap_or(stem),
            program: serde_json::from_value(obj["program"].clone()).with_context(|| format!("{}: bad program", path.display()))?,
            completed: obj.get("completed").and_then(Value::as_bool).unwrap_or(true),
        },
        _ => bail!("{}: not a program, task or trajectory", path.display()),
    };
    Ok(vec![entry])
}

fn entry_from_record(r: &TrajectoryRecord) -> Entry {
    Entry {
        id: r.task_id.clone(),
        program: r.tool_calls().into_iter().cloned().collect(),
        completed: r.termination == Termination::Completed,
    }
}

fn load_dir(dir: &Path) -> Result<BTreeMap<String, Entry>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| usage(format!("cannot read directory {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json" || e == "jsonl"))
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for p in paths {
        for e in entries_from_file(&p)? {
            if out.contains_key(&e.id) {
                bail!("duplicate id {:?} in {}", e.id, dir.display());
            }
            out.insert(e.id.clone(), e);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct PairRecord {
    id: String,
    outcome: ConversionOutcome,
    iou: Option<f64>,
    cd: Option<f64>,
    pd: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    pairs: usize,
    valid: usize,
    ir: f64,
    cd: Option<f64>,
    mmd: Option<f64>,
    iou: Option<f64>,
    cov: Option<f64>,
    jsd: Option<f64>,
    jsd_scaled: Option<f64>,
    pd: Option<f64>,
    distance_scale: f64,
}

struct Evaluated {
    record: PairRecord,
    cloud: Option<PointCloud>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn evaluate(id: &str, gen: Option<&Entry>, reference: &CsgSolid, ref_cloud: &PointCloud, seed: u64, cfg: &Config, scale: f64) -> Result<Evaluated> {
    let m = &cfg.metrics;
    let Some(gen) = gen else {
        let record = PairRecord { id: id.into(), outcome: ConversionOutcome::NotCompleted, iou: None, cd: None, pd: None };
        return Ok(Evaluated { record, cloud: None });
    };
    let (_, _, solid) = replay_lenient(&gen.program, &cfg.geometry);
    let outcome = classify_conversion(gen.completed, solid.as_deref(), m.resolution, seed);
    let parts = split_parts(&gen.program).len();
    let pd = if parts > 0 { Some(parameter_density(&gen.program, parts)?) } else { None };
    let (iou_v, cd, cloud) = match (outcome, solid) {
        (ConversionOutcome::Valid, Some(s)) => {
            let cloud = normalized_cloud(&s, m.points, seed, m.resolution)?;
            let cd = chamfer(&cloud, ref_cloud) * scale;
            (Some(iou(&s, reference, m.resolution)?), Some(cd), Some(cloud))
        }
        _ => (None, None, None),
    };
    Ok(Evaluated {
        record: PairRecord { id: id.into(), outcome, iou: iou_v, cd, pd },
        cloud,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

pub fn run(config: Option<&Path>, args: Args) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let scale = args.scale.unwrap_or(cfg.metrics.distance_scale);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(usage("--scale must be positive"));
    }
    let generated = load_dir(&args.generated)?;
    let references: BTreeMap<String, Entry> = if args.reference == "bundled" {
        bundled_tasks()
            .into_iter()
            .map(|t| (t.id.clone(), Entry { id: t.id, program: t.ground_truth_program, completed: true }))
            .collect()
    } else {
        load_dir(Path::new(&args.reference))?
    };
    if references.is_empty() {
        return Err(usage("reference set is empty"));
    }
    for id in generated.keys().filter(|id| !references.contains_key(*id)) {
        eprintln!("warning: generated {id:?} has no reference; skipped");
    }
    let m = &cfg.metrics;
    let refs: Vec<(&String, u64, Arc<CsgSolid>, PointCloud)> = references
        .iter()
        .enumerate()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(i, (id, e))| {
            let out = replay(&e.program, &cfg.geometry).with_context(|| format!("reference {id} does not replay"))?;
            let seed = cfg.seeds.sampling.wrapping_add(*i as u64);
            let cloud = normalized_cloud(&out.final_solid, m.points, seed, m.resolution)?;
            Ok((*id, seed, out.final_solid, cloud))
        })
        .collect::<Result<_>>()?;
    let evaluated: Vec<Evaluated> = refs
        .par_iter()
        .map(|(id, seed, solid, cloud)| evaluate(id, generated.get(*id), solid, cloud, *seed, &cfg, scale))
        .collect::<Result<_>>()?;

    let outcomes: Vec<ConversionOutcome> = evaluated.iter().map(|e| e.record.outcome).collect();
    let gen_clouds: Vec<PointCloud> = evaluated.iter().filter_map(|e| e.cloud.clone()).collect();
    let ref_clouds: Vec<PointCloud> = refs.iter().map(|r| r.3.clone()).collect();
    let (set_mmd, set_cov, js) = if gen_clouds.is_empty() {
        (None, None, None)
    } else {
        let p = VoxelDistribution::from_clouds(&gen_clouds, m.jsd_resolution, JSD_SMOOTHING)?;
        let q = VoxelDistribution::from_clouds(&ref_clouds, m.jsd_resolution, JSD_SMOOTHING)?;
        (Some(mmd(&gen_clouds, &ref_clouds)? * scale), Some(cov(&gen_clouds, &ref_clouds)?), Some(jsd_report(&p, &q)?))
    };
    let summary = Summary {
        pairs: evaluated.len(),
        valid: gen_clouds.len(),
        ir: invalidity_ratio(&outcomes),
        cd: mean(evaluated.iter().filter_map(|e| e.record.cd)),
        mmd: set_mmd,
        iou: mean(evaluated.iter().filter_map(|e| e.record.iou)),
        cov: set_cov,
        jsd: js.map(|r| r.raw),
        jsd_scaled: js.map(|r| r.scaled),
        pd: mean(evaluated.iter().filter_map(|e| e.record.pd)),
        distance_scale: scale,
    };

    println!("{:<28} {:<14} {:>10} {:>10} {:>10}", "id", "outcome", "iou", "cd", "pd");
    for e in &evaluated {
        let r = &e.record;
        let outcome = serde_json::to_value(r.outcome)?.as_str().unwrap_or_default().to_string();
        println!("{:<28} {:<14} {:>10} {:>10} {:>10}", r.id, outcome, opt(r.iou), opt(r.cd), opt(r.pd));
    }
    println!();
    println!("pairs {} valid {}", summary.pairs, summary.valid);
    println!("IR   {:.6}", summary.ir);
    println!("CD   {}", opt(summary.cd));
    println!("MMD  {}", opt(summary.mmd));
    println!("IoU  {}", opt(summary.iou));
    println!("COV  {}", opt(summary.cov));
    println!("JSD  {} (x100: {})", opt(summary.jsd), opt(summary.jsd_scaled));
    println!("PD   {}", opt(summary.pd));

    let mut report = String::new();
    for e in &evaluated {
        report.push_str(&serde_json::to_string(&e.record)?);
        report.push('\n');
    }
    report.push_str(&serde_json::to_string(&serde_json::json!({ "summary": summary }))?);
    report.push('\n');
    if let Some(path) = output_path(args.report, &cfg, "eval_report.jsonl") {
        write_output(&path, &report)?;
    }
    Ok(ExitCode::SUCCESS)
}
