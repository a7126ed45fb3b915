//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use streetcrime::eval::{
    evaluate, importance_report, run_suite, run_sweep, summarize, with_param, SweepResult, SweepSpec,
    NAMED_SWEEPS, PAPER_SUITE,
};
use streetcrime::features::{
    aggregate_features, build_dataset, compute_crime_rate, count_crimes, descriptive_stats,
    parse_population_csv, Dataset, RateDenominator,
};
use streetcrime::geo::{
    length_inside, sample_equidistant, spatial_join, subsample_per_community, CommunityDistrict,
    SamplePoint,
};
use streetcrime::ingest::{
    api_key_from_env, build_image_manifest, fetch_images, parse_boundaries, parse_centerlines,
    parse_crime_csv, parse_feature_csv, read_manifest, write_manifest, ClassSchema, FetchOptions,
    FetchStatus,
};
use streetcrime::models::{
    fit, DesignMatrix, ForestConfig, GbtConfig, Kernel, ModelSpec, SavedModel, XgbConfig,
};
use streetcrime::Error;

use crate::config::{require, ModeName, PipelineConfig};
use crate::points::{point_communities, read_points, write_points};
use crate::{
    AggregateArgs, CliError, Command, Common, FetchArgs, ImportanceArgs, ModelArgs, ReportArgs,
    SampleArgs, SweepArgs, TrainArgs,
};

pub const MODEL_KINDS: [&str; 9] = [
    "mean",
    "linear",
    "polynomial",
    "ridge",
    "svr",
    "decision_tree",
    "random_forest",
    "gradient_boosting",
    "xgboost",
];

type Res<T = ()> = Result<T, CliError>;

pub fn dispatch(command: Command, quiet: bool) -> Res {
    let log = |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match command {
        Command::Sample(a) => sample(a, &log),
        Command::Fetch(a) => fetch(a, &log),
        Command::Aggregate(a) => aggregate(a, &log),
        Command::Train(a) => train(a, &log),
        Command::Sweep(a) => sweep(a, &log),
        Command::Importance(a) => importance(a, &log),
        Command::Report(a) => report(a, &log),
    }
}

fn load(common: &Common) -> Res<PipelineConfig> {
    match &common.config {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// Creates the output directory and echoes the effective config into it.
fn prepare_out(cfg: &mut PipelineConfig, common: &Common) -> Res<PathBuf> {
    set_opt(&mut cfg.paths.out, common.out.clone());
    cfg.validate()?;
    let out = cfg
        .paths
        .out
        .clone()
        .ok_or_else(|| CliError::Config("no output directory (set paths.out or pass --out)".into()))?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_text(&out.join("effective_config.toml"), &cfg.to_toml())?;
    Ok(out)
}

fn write_text(path: &Path, body: &str) -> Res {
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn open(path: &Path) -> Res<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Prefixes core errors with the file they came from.
fn in_file<T>(path: &Path, r: streetcrime::Result<T>) -> Res<T> {
    r.map_err(|e| match e {
        Error::Io { .. } => CliError::Core(e),
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

fn load_boundaries(cfg: &PipelineConfig) -> Res<Vec<CommunityDistrict>> {
    let path = require(&cfg.paths.boundaries, "boundaries")?;
    in_file(&path, parse_boundaries(open(&path)?, &cfg.sampling.boundary_id_property))
}

fn sample(a: SampleArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    set_opt(&mut cfg.paths.centerlines, a.centerlines);
    set_opt(&mut cfg.paths.boundaries, a.boundaries);
    set(&mut cfg.sampling.spacing_m, a.spacing);
    set(&mut cfg.sampling.per_community, a.per_community);
    set(&mut cfg.sampling.seed, a.seed);
    let out = prepare_out(&mut cfg, &a.common)?;

    let lines_path = require(&cfg.paths.centerlines, "centerlines")?;
    let lines = in_file(
        &lines_path,
        parse_centerlines(open(&lines_path)?, cfg.sampling.centerline_id_property.as_deref()),
    )?;
    for (i, reason) in &lines.skipped {
        log(&format!("{}: skipped feature {i}: {reason}", lines_path.display()));
    }
    let districts = load_boundaries(&cfg)?;
    let spacing = cfg.sampling.spacing_m;
    let candidates: Vec<SamplePoint> = lines
        .lines
        .par_iter()
        .map(|l| sample_equidistant(l, spacing))
        .collect::<streetcrime::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let joined = spatial_join(candidates, &districts);
    let unassigned = joined.unassigned.len();
    let mut assigned = Vec::new();
    let mut available = BTreeMap::new();
    for (community, pts) in joined.buckets {
        available.insert(community.clone(), pts.len());
        assigned.extend(pts.into_iter().map(|mut p| {
            p.community_id = Some(community.clone());
            p
        }));
    }
    let picked = subsample_per_community(&assigned, cfg.sampling.per_community, cfg.sampling.seed);

    let points_path = out.join("points.csv");
    write_points(create(&points_path)?, &picked)?;
    let mut sampled: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &picked {
        *sampled.entry(p.community_id.as_deref().unwrap_or("")).or_default() += 1;
    }
    let mut summary = String::from("community_id,candidates,sampled\n");
    for d in &districts {
        let id = d.community_id();
        let _ = writeln!(
            summary,
            "{id},{},{}",
            available.get(id).copied().unwrap_or(0),
            sampled.get(id).copied().unwrap_or(0)
        );
    }
    write_text(&out.join("sample_summary.csv"), &summary)?;
    for d in &districts {
        let n = sampled.get(d.community_id()).copied().unwrap_or(0);
        if n < cfg.sampling.per_community {
            log(&format!(
                "community {} has only {n} of {} requested points",
                d.community_id(),
                cfg.sampling.per_community
            ));
        }
    }
    log(&format!(
        "sampled {} points in {} communities ({} candidates, {unassigned} outside every district) -> {}",
        picked.len(),
        sampled.len(),
        assigned.len() + unassigned,
        points_path.display()
    ));
    Ok(())
}

fn fetch(a: FetchArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    set_opt(&mut cfg.paths.points, a.points);
    set_opt(&mut cfg.paths.manifest, a.manifest);
    set(&mut cfg.fetch.max_concurrent, a.max_concurrent);
    let out = prepare_out(&mut cfg, &a.common)?;
    let manifest_path = cfg.paths.manifest.clone().unwrap_or_else(|| out.join("manifest.jsonl"));

    let mut entries = if manifest_path.exists() {
        let e = in_file(&manifest_path, read_manifest(open(&manifest_path)?))?;
        log(&format!("resuming {} ({} entries)", manifest_path.display(), e.len()));
        e
    } else {
        let points_path = require(&cfg.paths.points, "points")?;
        let points = in_file(&points_path, read_points(open(&points_path)?))?;
        build_image_manifest(&points, (cfg.fetch.width, cfg.fetch.height), &cfg.fetch.endpoint)
    };
    let save = |entries: &[_]| -> Res {
        let mut w = create(&manifest_path)?;
        write_manifest(&mut w, entries)?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(&manifest_path, e))?;
        Ok(())
    };
    if a.offline {
        save(&entries)?;
        log(&format!("wrote manifest with {} entries -> {}", entries.len(), manifest_path.display()));
        return Ok(());
    }
    let key = api_key_from_env()?;
    save(&entries)?;
    let opts = FetchOptions {
        max_concurrent: cfg.fetch.max_concurrent,
        retries: cfg.fetch.retries,
        backoff: Duration::from_millis(cfg.fetch.backoff_ms),
        timeout: Duration::from_secs(cfg.fetch.timeout_s),
        manifest_path: Some(manifest_path.clone()),
        checkpoint_every: cfg.fetch.checkpoint_every,
        ..FetchOptions::new(key)
    };
    let summary = fetch_images(&mut entries, &out.join("images"), &opts)?;
    save(&entries)?;
    for (id, reason) in &summary.failures {
        log(&format!("point {id}: {reason}"));
    }
    let pending = entries.iter().filter(|e| e.status != FetchStatus::Fetched).count();
    log(&format!(
        "fetched {}, already present {}, failed {} ({} not yet fetched) -> {}",
        summary.fetched,
        summary.skipped,
        summary.failed,
        pending,
        manifest_path.display()
    ));
    Ok(())
}

fn parse_choice<T: serde::de::DeserializeOwned>(what: &str, s: &str, options: &str) -> Res<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| CliError::Config(format!("unknown {what} {s:?} (expected {options})")))
}

fn aggregate(a: AggregateArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    set_opt(&mut cfg.paths.boundaries, a.boundaries);
    set_opt(&mut cfg.paths.centerlines, a.centerlines);
    set_opt(&mut cfg.paths.crime_csv, a.crime);
    set_opt(&mut cfg.paths.feature_csv, a.features);
    set_opt(&mut cfg.paths.population, a.population);
    set_opt(&mut cfg.paths.points, a.points);
    set_opt(&mut cfg.paths.schema, a.schema);
    set_opt(&mut cfg.crime.year, a.year);
    if let Some(m) = a.mode {
        cfg.features.mode = parse_choice("aggregation mode", &m, "pixel_fraction or image_presence")?;
    }
    if let Some(d) = a.denominator {
        cfg.features.denominator = parse_choice("rate denominator", &d, "population, area_km2 or road_length_km")?;
    }
    let out = prepare_out(&mut cfg, &a.common)?;
    let mut report = String::new();

    let mut districts = load_boundaries(&cfg)?;
    let _ = writeln!(report, "communities: {}", districts.len());
    if let Some(path) = &cfg.paths.centerlines {
        let path = require(&Some(path.clone()), "centerlines")?;
        let lines = in_file(&path, parse_centerlines(open(&path)?, cfg.sampling.centerline_id_property.as_deref()))?;
        districts = districts
            .into_par_iter()
            .map(|d| {
                let km = lines.lines.iter().map(|l| length_inside(l, &d)).sum::<f64>() / 1000.0;
                d.with_road_length_km(km)
            })
            .collect();
        let _ = writeln!(report, "centerlines: {} polylines", lines.lines.len());
    } else if cfg.features.denominator == RateDenominator::RoadLengthKm {
        return Err(CliError::Config("road_length_km rates need paths.centerlines".into()));
    }

    let crime_path = require(&cfg.paths.crime_csv, "crime_csv")?;
    let (crimes, drops) = in_file(&crime_path, parse_crime_csv(open(&crime_path)?, &cfg.crime.csv, cfg.crime.year))?;
    let joined = spatial_join(crimes, &districts);
    let counts = count_crimes(&joined, &districts);
    let _ = writeln!(
        report,
        "crime rows: {} read, {} kept, {} bad date, {} bad coordinate, {} outside bbox, {} other year, {} outside every district",
        drops.rows,
        joined.total(),
        drops.bad_date,
        drops.bad_coord,
        drops.outside_bbox,
        drops.other_year,
        joined.unassigned.len()
    );
    let population = match &cfg.paths.population {
        Some(p) => {
            let p = require(&Some(p.clone()), "population")?;
            Some(in_file(&p, parse_population_csv(open(&p)?))?)
        }
        None => None,
    };
    let rates = compute_crime_rate(&counts, &districts, cfg.features.denominator, population.as_ref())?;

    let schema = match &cfg.paths.schema {
        Some(p) => {
            let p = require(&Some(p.clone()), "schema")?;
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            in_file(&p, ClassSchema::from_text(&text))?
        }
        None => ClassSchema::voc21(),
    };
    let feature_path = require(&cfg.paths.feature_csv, "feature_csv")?;
    let features = in_file(&feature_path, parse_feature_csv(open(&feature_path)?, &schema))?;
    for (row, reason) in &features.rejected {
        log(&format!("{}: row {row} rejected: {reason}", feature_path.display()));
    }
    let _ = writeln!(
        report,
        "feature rows: {} accepted, {} rejected",
        features.vectors.len(),
        features.rejected.len()
    );
    let points_path = require(&cfg.paths.points, "points")?;
    let points = in_file(&points_path, read_points(open(&points_path)?))?;
    let lookup = point_communities(&points);

    let mut chosen = None;
    for name in [ModeName::PixelFraction, ModeName::ImagePresence] {
        let mode = cfg.features.mode_for(name);
        let agg = aggregate_features(&features.vectors, &lookup, schema.len(), mode)?;
        let (dataset, excluded) = build_dataset(&agg.communities, &counts, &rates, &schema, cfg.features.denominator)?;
        let path = out.join(format!("dataset_{}.csv", mode.name()));
        dataset.write_csv(create(&path)?)?;
        if name == cfg.features.mode {
            let _ = writeln!(report, "images without a sampled point: {}", agg.unmatched.len());
            let _ = writeln!(report, "dataset rows: {} ({})", dataset.len(), mode.name());
            if !excluded.without_images.is_empty() {
                let _ = writeln!(report, "excluded, no images: {}", excluded.without_images.join(", "));
            }
            if !excluded.without_rate.is_empty() {
                let _ = writeln!(report, "excluded, no crime rate: {}", excluded.without_rate.join(", "));
            }
            chosen = Some(dataset);
        }
    }
    let dataset = chosen.expect("configured mode is one of the two written");
    dataset.write_csv(create(&out.join("dataset.csv"))?)?;
    let stats = descriptive_stats(&dataset, &districts);
    write_text(&out.join("stats.csv"), &stats.to_csv())?;
    write_text(&out.join("stats.txt"), &stats.to_text())?;
    write_text(&out.join("aggregate_report.txt"), &report)?;
    log(report.trim_end());
    log(&format!("wrote {}", out.join("dataset.csv").display()));
    Ok(())
}

fn load_dataset(cfg: &PipelineConfig, flag: Option<PathBuf>) -> Res<DesignMatrix> {
    let path = require(&flag.or_else(|| cfg.paths.dataset.clone()), "dataset")?;
    let dataset = in_file(&path, Dataset::read_csv(open(&path)?))?;
    in_file(&path, DesignMatrix::from_dataset(&dataset))
}

/// Default spec for a model kind.
pub fn default_spec(kind: &str, seed: u64) -> Res<ModelSpec> {
    Ok(match kind {
        "mean" => ModelSpec::Mean,
        "linear" => ModelSpec::Linear,
        "polynomial" => ModelSpec::Polynomial { degree: 2 },
        "ridge" => ModelSpec::Ridge { alpha: 1.0 },
        "svr" => ModelSpec::Svr {
            epsilon: 0.1,
            c: 1.0,
            kernel: Kernel::default(),
        },
        "decision_tree" => ModelSpec::DecisionTree {
            max_depth: None,
            min_samples_leaf: 1,
        },
        "random_forest" => ModelSpec::RandomForest(ForestConfig {
            seed,
            ..ForestConfig::default()
        }),
        "gradient_boosting" => ModelSpec::GradientBoosting(GbtConfig {
            seed,
            ..GbtConfig::default()
        }),
        "xgboost" => ModelSpec::Xgboost(XgbConfig::default()),
        other => {
            return Err(CliError::Config(format!(
                "unknown model kind {other:?}; supported kinds: {}",
                MODEL_KINDS.join(", ")
            )))
        }
    })
}

fn model_spec(m: &ModelArgs, seed: u64) -> Res<ModelSpec> {
    let mut spec = match &m.spec {
        Some(json) => serde_json::from_str(json).map_err(|e| {
            CliError::Config(format!("bad --spec: {e}; supported kinds: {}", MODEL_KINDS.join(", ")))
        })?,
        None => default_spec(&m.model, seed)?,
    };
    for s in &m.set {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects NAME=VALUE, got {s:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::Config(format!("--set {name}: {value:?} is not a number")))?;
        spec = with_param(&spec, name, value)?;
    }
    Ok(spec)
}

fn apply_eval(cfg: &mut PipelineConfig, protocol: Option<String>, seed: Option<u64>) {
    set(&mut cfg.eval.protocol, protocol);
    set(&mut cfg.eval.seed, seed);
}

fn train(a: TrainArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    apply_eval(&mut cfg, a.model.protocol.clone(), a.model.seed);
    set_opt(&mut cfg.paths.dataset, a.model.dataset.clone());
    let spec = model_spec(&a.model, cfg.eval.seed)?;
    let out = prepare_out(&mut cfg, &a.common)?;
    let data = load_dataset(&cfg, None)?;
    let protocol = cfg.eval.protocol()?;
    let ev = evaluate(&data, &spec, &protocol)?;
    let model = fit(&spec, &data)?;
    let saved = SavedModel::new(spec.clone(), data.feature_names().to_vec(), model);
    write_text(&out.join("model.json"), &saved.to_json()?)?;
    let mut csv = String::from("split,mse,r2,n,degenerate_target\n");
    let mut txt = format!("Model: {spec}\n\n{:<12}  {:>14}  {:>14}  {:>5}\n", "split", "MSE", "R2", "n");
    for m in [&ev.train, &ev.validation] {
        let _ = writeln!(csv, "{},{},{},{},{}", m.split, m.mse, m.r2, m.n, m.degenerate_target);
        let _ = writeln!(txt, "{:<12}  {:>14.6e}  {:>14.6}  {:>5}", m.split.to_string(), m.mse, m.r2, m.n);
    }
    write_text(&out.join("metrics.csv"), &csv)?;
    write_text(&out.join("metrics.txt"), &txt)?;
    log(txt.trim_end());
    Ok(())
}

fn write_sweep(out: &Path, r: &SweepResult) -> Res {
    write_text(&out.join(format!("{}.csv", r.name)), &r.to_csv())?;
    write_text(&out.join(format!("{}.txt", r.name)), &r.to_text())?;
    write_text(&out.join(format!("{}.svg", r.name)), &r.to_svg())?;
    write_text(
        &out.join(format!("{}.json", r.name)),
        &serde_json::to_string_pretty(r).map_err(Error::from)?,
    )?;
    Ok(())
}

fn sweep(a: SweepArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    apply_eval(&mut cfg, a.protocol, a.seed);
    set_opt(&mut cfg.eval.top_n, a.top);
    set_opt(&mut cfg.paths.dataset, a.dataset);
    let out = prepare_out(&mut cfg, &a.common)?;
    let data = load_dataset(&cfg, None)?;
    let protocol = cfg.eval.protocol()?;
    let seed = cfg.eval.seed;
    if a.sweep == "paper-suite" {
        if a.values.is_some() {
            return Err(CliError::Config("--values cannot be combined with paper-suite".into()));
        }
        let suite = run_suite(&data, &PAPER_SUITE, &protocol, seed, cfg.eval.top_n)?;
        let files = suite.write_to(&out)?;
        for r in &suite.sweeps {
            write_text(
                &out.join(format!("{}.json", r.name)),
                &serde_json::to_string_pretty(r).map_err(Error::from)?,
            )?;
        }
        log(suite.summary().trim_end());
        log(&format!("wrote {} report files to {}", files.len(), out.display()));
        return Ok(());
    }
    let mut spec = SweepSpec::named(&a.sweep, seed).map_err(|_| {
        CliError::Config(format!(
            "unknown sweep {:?}; expected paper-suite or one of {}",
            a.sweep,
            NAMED_SWEEPS.join(", ")
        ))
    })?;
    if let Some(v) = a.values {
        spec.values = v;
    }
    let result = run_sweep(&data, &spec, &protocol)?;
    write_sweep(&out, &result)?;
    log(result.to_text().trim_end());
    Ok(())
}

fn importance(a: ImportanceArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    apply_eval(&mut cfg, a.model.protocol.clone(), a.model.seed);
    set_opt(&mut cfg.eval.top_n, a.top);
    set_opt(&mut cfg.paths.dataset, a.model.dataset.clone());
    let spec = model_spec(&a.model, cfg.eval.seed)?;
    if !spec.is_tree_based() {
        return Err(Error::UnsupportedModel(spec.kind().to_string()).into());
    }
    let out = prepare_out(&mut cfg, &a.common)?;
    let data = load_dataset(&cfg, None)?;
    let model = fit(&spec, &data)?;
    let table = importance_report(&model, data.feature_names(), &spec.to_string(), cfg.eval.top_n)?;
    write_text(&out.join(format!("importance_{}.csv", spec.kind())), &table.to_csv())?;
    write_text(&out.join(format!("importance_{}.txt", spec.kind())), &table.to_text())?;
    log(table.to_text().trim_end());
    Ok(())
}

fn report(a: ReportArgs, log: &dyn Fn(&str)) -> Res {
    let mut cfg = load(&a.common)?;
    let out = prepare_out(&mut cfg, &a.common)?;
    let from = a.from.unwrap_or_else(|| out.clone());
    let mut found: Vec<SweepResult> = Vec::new();
    let listing = fs::read_dir(&from).map_err(|e| Error::io(&from, e))?;
    let mut paths: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        if let Ok(r) = serde_json::from_str::<SweepResult>(&text) {
            found.push(r);
        }
    }
    if found.is_empty() {
        return Err(CliError::Config(format!("no sweep results (*.json) in {}", from.display())));
    }
    let rank = |name: &str| NAMED_SWEEPS.iter().position(|n| *n == name).unwrap_or(usize::MAX);
    found.sort_by(|a, b| rank(&a.name).cmp(&rank(&b.name)).then_with(|| a.name.cmp(&b.name)));
    let text = summarize(&found);
    write_text(&out.join("report.txt"), &text)?;
    log(text.trim_end());
    Ok(())
}
