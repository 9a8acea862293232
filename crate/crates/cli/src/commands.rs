//! Command implementations. Each returns the process exit code on the Ok
//! path; errors are classified by `main` into exit 1 (domain) or 2 (usage,
//! I/O).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use dimpute::eval::{
    is_eligible, run_trials, write_breakdown_csv, write_results_csv, EvalOptions, GroundTruth,
};
use dimpute::fill::{write_fill_log, DonorMode, FillRecord, FillSource};
use dimpute::inter::{discover_links, links_to_json};
use dimpute::pipeline::{run_strategy, Strategy};
use dimpute::schema::{
    load_model, validate_schema, DimensionConfig, FactConfig, HierarchyConfig, WarehouseConfig,
    WarehouseModel,
};
use dimpute::synth::{generate_synthetic, Strictness, SyntheticSpec};
use dimpute::table::write_table;

use crate::config::{parse_rates, parse_target, parse_usize_list, resolve, RunConfig};
use crate::RunFlags;

/// Files written so far, removed together if the command fails midway.
struct OutputTracker {
    created_dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl OutputTracker {
    fn prepare(out: &Path) -> Result<Self> {
        let created_dir = if out.exists() {
            None
        } else {
            std::fs::create_dir_all(out)
                .with_context(|| format!("creating output directory {}", out.display()))?;
            Some(out.to_path_buf())
        };
        Ok(Self {
            created_dir,
            files: Vec::new(),
        })
    }

    fn file(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn discard_outputs(self) {
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
        if let Some(dir) = &self.created_dir {
            let _ = std::fs::remove_dir(dir);
        }
    }
}

fn with_outputs<T>(
    out: &Path,
    body: impl FnOnce(&mut OutputTracker) -> Result<T>,
) -> Result<T> {
    let mut tracker = OutputTracker::prepare(out)?;
    match body(&mut tracker) {
        Ok(value) => Ok(value),
        Err(err) => {
            tracker.discard_outputs();
            Err(err)
        }
    }
}

pub fn validate(schema: &Path) -> Result<u8> {
    let model = load_model(schema, &Default::default())?;
    let report = validate_schema(&model);
    if report.is_valid() {
        println!("schema `{}` is valid ({} dimensions)", model.name, model.dimensions.len());
        Ok(0)
    } else {
        for violation in &report.violations {
            println!("{violation}");
        }
        Ok(1)
    }
}

/// Serializes the model back to a self-contained directory: one CSV per
/// dimension plus a schema.json referencing them.
fn write_model(model: &WarehouseModel, out: &Path, tracker: &mut OutputTracker) -> Result<()> {
    let config = WarehouseConfig {
        name: model.name.clone(),
        dimensions: model
            .dimensions
            .iter()
            .map(|d| DimensionConfig {
                name: d.name.clone(),
                id: d.id_attribute.clone(),
                attributes: d.attributes.clone(),
                hierarchies: d
                    .hierarchies
                    .iter()
                    .map(|h| HierarchyConfig {
                        name: h.name.clone(),
                        parameters: h.parameters.clone(),
                        weak: h.weak.clone(),
                    })
                    .collect(),
                table: format!("{}.csv", d.name),
            })
            .collect(),
        facts: model
            .facts
            .iter()
            .map(|f| FactConfig {
                name: f.name.clone(),
                dimensions: model
                    .star
                    .get(&f.name)
                    .map(|dims| dims.iter().cloned().collect())
                    .unwrap_or_default(),
            })
            .collect(),
    };
    let schema_path = tracker.file(out.join("schema.json"));
    std::fs::write(&schema_path, serde_json::to_string_pretty(&config)?)
        .with_context(|| format!("writing {}", schema_path.display()))?;
    for d in &model.dimensions {
        let table_path = tracker.file(out.join(format!("{}.csv", d.name)));
        write_table(&d.table, &table_path)?;
    }
    Ok(())
}

fn fill_summary_json(fills: &[FillRecord], cfg: &RunConfig) -> String {
    let mut by_source: BTreeMap<String, usize> = BTreeMap::new();
    let mut by_attribute: BTreeMap<String, usize> = BTreeMap::new();
    for f in fills {
        *by_source.entry(f.source.to_string()).or_default() += 1;
        *by_attribute
            .entry(format!("{}.{}", f.target.dimension, f.target.attribute))
            .or_default() += 1;
    }
    let summary = serde_json::json!({
        "total_fills": fills.len(),
        "by_source": by_source,
        "by_attribute": by_attribute,
        "strategy": cfg.strategy.to_string(),
        "policy": match cfg.policy.mode { DonorMode::First => "first", DonorMode::Majority => "majority" },
        "passes": cfg.passes,
    });
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}

pub fn impute(schema: &Path, out: &Path, flags: &RunFlags) -> Result<u8> {
    let cfg = resolve(flags)?;
    let mut model = load_model(schema, &cfg.null_tokens)?;
    with_outputs(out, |tracker| {
        let fills = run_strategy(
            &mut model,
            cfg.strategy,
            &cfg.match_config,
            cfg.policy,
            cfg.passes,
        )?;
        write_model(&model, out, tracker)?;
        write_fill_log(&fills, &tracker.file(out.join("fill_log.csv")))?;
        let summary_path = tracker.file(out.join("summary.json"));
        std::fs::write(&summary_path, fill_summary_json(&fills, &cfg))
            .with_context(|| format!("writing {}", summary_path.display()))?;
        if cfg.strategy != Strategy::Intra {
            let links = discover_links(&model, &cfg.match_config);
            let links_path = tracker.file(out.join("links.json"));
            std::fs::write(&links_path, links_to_json(&links))
                .with_context(|| format!("writing {}", links_path.display()))?;
        }
        let intra = fills.iter().filter(|f| f.source == FillSource::Intra).count();
        let inter = fills.len() - intra;
        println!(
            "{} fills ({intra} intra, {inter} inter) -> {}",
            fills.len(),
            out.display()
        );
        Ok(0)
    })
}

pub fn inject(
    schema: &Path,
    attr: &str,
    rate: f64,
    seed: u64,
    out: &Path,
    null_tokens: &[String],
) -> Result<u8> {
    let tokens = null_tokens.iter().cloned().collect();
    let mut model = load_model(schema, &tokens)?;
    let report = validate_schema(&model);
    if !report.is_valid() {
        return Err(dimpute::Error::InvalidSchema(report).into());
    }
    let (dim_name, attribute) = parse_target(attr)?;
    let dim = model.dimension_mut(&dim_name)?;
    let truth = dimpute::eval::inject(dim, &attribute, rate, seed)?;
    with_outputs(out, |tracker| {
        write_model(&model, out, tracker)?;
        let truth_path = tracker.file(out.join("truth.csv"));
        write_truth(&truth, &truth_path)?;
        println!(
            "nulled {} cells of {dim_name}.{attribute} -> {}",
            truth.len(),
            out.display()
        );
        Ok(0)
    })
}

fn write_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    writer.write_record(["dimension", "row", "attribute", "original_value"])?;
    for (address, value) in &truth.entries {
        writer.write_record([
            address.dimension.as_str(),
            &address.row.to_string(),
            address.attribute.as_str(),
            value.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn eligible_targets(model: &WarehouseModel) -> Vec<(String, String)> {
    let mut targets = Vec::new();
    for dim in &model.dimensions {
        for attr in &dim.attributes {
            if is_eligible(dim, attr) {
                targets.push((dim.name.clone(), attr.clone()));
            }
        }
    }
    targets
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "n/a".into())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    schema: &Path,
    rates: &str,
    trials: usize,
    seed: u64,
    out: &Path,
    attrs: &[String],
    jobs: usize,
    per_attribute: bool,
    flags: &RunFlags,
) -> Result<u8> {
    let cfg = resolve(flags)?;
    let model = load_model(schema, &cfg.null_tokens)?;
    let report = validate_schema(&model);
    if !report.is_valid() {
        return Err(dimpute::Error::InvalidSchema(report).into());
    }
    let targets = if attrs.is_empty() {
        eligible_targets(&model)
    } else {
        attrs
            .iter()
            .map(|a| parse_target(a))
            .collect::<Result<Vec<_>>>()?
    };
    if targets.is_empty() {
        bail!("no eligible attributes to evaluate; declare hierarchies with at least three levels or a weak attribute above the identifier");
    }
    let opts = EvalOptions {
        rates: parse_rates(rates)?,
        trials,
        seed,
        strategy: cfg.strategy,
        policy: cfg.policy,
        match_config: cfg.match_config.clone(),
        passes: cfg.passes,
        jobs: jobs.max(1),
    };
    let summaries = run_trials(&model, &targets, &opts)?;

    with_outputs(out, |tracker| {
        write_results_csv(
            &summaries,
            cfg.strategy,
            cfg.policy,
            &tracker.file(out.join("results.csv")),
        )?;
        if per_attribute {
            write_breakdown_csv(&summaries, &tracker.file(out.join("breakdown.csv")))?;
        }
        println!("rate\ttrials\timputation_rate\taccuracy\truntime_s");
        for s in &summaries {
            println!(
                "{}\t{}\t{}\t{}\t{:.3}",
                s.rate,
                s.trials,
                fmt_opt(s.mean_imputation_rate),
                fmt_opt(s.mean_accuracy),
                s.mean_runtime_s
            );
        }
        Ok(0)
    })
}

#[allow(clippy::too_many_arguments)]
pub fn generate(
    levels: usize,
    fanout: &str,
    rows: usize,
    weak: Option<&str>,
    non_strict: f64,
    seed: u64,
    name: &str,
    out: &Path,
) -> Result<u8> {
    let fanout = parse_usize_list(fanout, "fanout")?;
    let weak_counts = match weak {
        Some(list) => parse_usize_list(list, "weak count")?,
        None => vec![0; levels],
    };
    let strictness = if non_strict > 0.0 {
        Strictness::NonStrict {
            fraction: non_strict,
        }
    } else {
        Strictness::Strict
    };
    let spec = SyntheticSpec {
        dimension: name.to_string(),
        levels,
        fanout,
        rows,
        weak_counts,
        strictness,
        seed,
    };
    let data = generate_synthetic(&spec)?;
    with_outputs(out, |tracker| {
        write_model(&data.model, out, tracker)?;
        println!(
            "generated dimension `{name}` with {rows} rows and {levels} levels -> {}",
            out.display()
        );
        Ok(0)
    })
}
