use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rbfpca::model::fmt_f64;
use rbfpca::outlier::{detect as detect_outliers, mahalanobis_distances, outlier_probability, robust_location_scatter, top_k};
use rbfpca::sim::bench::{preset, run_bench};
use rbfpca::sim::{generate, SimTruth};
use rbfpca::{FpcaResult, FunctionalDataset, ModelSpec, OutlierReport, PriorCovSpec, Variant};
use serde::Serialize;

use crate::config::{parse_prior, parse_study, ModelSection, RunConfig};
use crate::{Common, ModelFlags, Usage};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.clone());
    }
    if let Some(s) = common.seed {
        cfg.asmc.seed = s;
    }
    if let Some(n) = common.particles {
        cfg.asmc.n_particles = n;
    }
    Ok(cfg)
}

fn apply_model_flags(cfg: &mut RunConfig, flags: &ModelFlags) -> Result<()> {
    if let Some(d) = &flags.data {
        cfg.data = Some(d.clone());
    }
    let m = cfg.model.get_or_insert_with(ModelSection::default);
    if let Some(v) = &flags.variant {
        m.variant = v.parse()?;
    }
    if let Some(p) = flags.p {
        m.p = p;
    }
    if let Some(k) = flags.k {
        m.k = k;
    }
    if let Some(name) = &flags.prior {
        m.prior_cov = parse_prior(name)?;
    }
    if let Some(path) = &flags.prior_file {
        m.prior_cov = PriorCovSpec::FromFile { path: path.clone() };
    }
    Ok(())
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return usage(format!("level must lie strictly between 0 and 1, got {level}"));
    }
    Ok(())
}

fn read_data(cfg: &RunConfig) -> Result<FunctionalDataset> {
    let Some(path) = &cfg.data else {
        return usage("no dataset: pass --data or set `data` in the config");
    };
    Ok(FunctionalDataset::read_csv(path)?)
}

fn out_dir(cfg: &RunConfig) -> Result<std::path::PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn header(seed: u64, hash: &str) -> String {
    format!("# rbfpca {VERSION} seed={seed} config={hash}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct DiagnosticLine<'a> {
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    record: &'a rbfpca::IterationRecord,
}

pub fn fit(common: &Common, flags: &ModelFlags, level: Option<f64>, serial: bool) -> Result<()> {
    let mut cfg = load(common)?;
    apply_model_flags(&mut cfg, flags)?;
    if let Some(l) = level {
        cfg.detect.level = Some(l);
    }
    let level = cfg.detect.level.unwrap_or(0.99);
    check_level(level)?;
    let data = read_data(&cfg)?;
    let mut spec = cfg.spec();
    if serial {
        spec.asmc.parallel = false;
    }
    let hash = cfg.hash();
    let dir = out_dir(&cfg)?;

    let out = rbfpca::fit(&spec, &data)?;
    let mut result = out.result.clone();
    result.config_hash = hash.clone();
    write_json(&dir.join("fpca_result.json"), &result)?;

    let report = detect_outliers(&result.ids, &result.scores_matrix(), level)?;
    let prob = outlier_probability(&out.run, &out.model, &out.centered, level)?;
    let mut f = fs::File::create(dir.join("outliers.tsv"))?;
    writeln!(f, "{} level={level} threshold={}", header(spec.asmc.seed, &hash), fmt_f64(report.threshold.unwrap_or(f64::NAN)))?;
    writeln!(f, "curve_id\tdistance\tflag\tprobability")?;
    for i in 0..report.ids.len() {
        writeln!(f, "{}\t{}\t{}\t{}", report.ids[i], fmt_f64(report.distances[i]), report.flags[i] as u8, fmt_f64(prob[i]))?;
    }

    let mut f = std::io::BufWriter::new(fs::File::create(dir.join("diagnostics.ndjson"))?);
    for record in &out.run.diagnostics {
        let line = DiagnosticLine { config_hash: &hash, seed: spec.asmc.seed, record };
        writeln!(f, "{}", serde_json::to_string(&line)?)?;
    }
    f.flush()?;

    fs::write(dir.join("evidence.txt"), format!("{}\n{}\n", header(spec.asmc.seed, &hash), fmt_f64(result.log_evidence)))?;
    println!("log evidence {:.6} ({} iterations)", result.log_evidence, result.n_iterations);
    println!("{} of {} curves flagged at level {level}", report.flags.iter().filter(|&&f| f).count(), report.ids.len());
    Ok(())
}

pub fn compare(common: &Common, flags: &ModelFlags, variants: &[String], serial: bool) -> Result<()> {
    let mut cfg = load(common)?;
    apply_model_flags(&mut cfg, flags)?;
    if !variants.is_empty() {
        cfg.compare.variants = variants.iter().map(|v| v.parse::<Variant>()).collect::<Result<_, _>>()?;
    }
    if cfg.compare.variants.len() < 2 {
        return usage(format!("compare needs at least two variants, got {}", cfg.compare.variants.len()));
    }
    let data = read_data(&cfg)?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg)?;

    let mut rows: Vec<(Variant, Result<f64, String>)> = Vec::new();
    for &v in &cfg.compare.variants {
        let mut spec: ModelSpec = cfg.spec();
        spec.variant = v;
        if serial {
            spec.asmc.parallel = false;
        }
        let res = rbfpca::fit(&spec, &data).map(|o| o.result.log_evidence).map_err(|e| e.to_string());
        if let Err(e) = &res {
            log::warn!("variant {v} failed: {e}");
        }
        rows.push((v, res));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let key = |i: usize| rows[i].1.as_ref().copied().unwrap_or(f64::NEG_INFINITY);
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let winner = order.first().copied().filter(|&i| rows[i].1.is_ok());

    let mut f = fs::File::create(dir.join("comparison.tsv"))?;
    writeln!(f, "{}", header(cfg.asmc.seed, &hash))?;
    writeln!(f, "rank\tvariant\tlog_evidence\tstatus\tselected")?;
    println!("{:<5} {:<8} {:>20}  status", "rank", "variant", "log evidence");
    for (rank, &i) in order.iter().enumerate() {
        let (v, res) = &rows[i];
        let mark = if Some(i) == winner { "*" } else { "" };
        let (value, status) = match res {
            Ok(x) => (fmt_f64(*x), "ok".to_string()),
            Err(e) => ("NaN".into(), format!("failed: {e}")),
        };
        writeln!(f, "{}\t{v}\t{value}\t{status}\t{mark}", rank + 1)?;
        let shown = res.as_ref().map(|x| format!("{x:.4}")).unwrap_or_else(|_| "-".into());
        println!("{:<5} {:<8} {:>20}  {status} {mark}", rank + 1, v.to_string(), shown);
    }
    if winner.is_none() {
        bail!("every variant failed");
    }
    Ok(())
}

pub fn detect(common: &Common, result: &Path, level: Option<f64>, k: Option<usize>) -> Result<()> {
    let mut cfg = load(common)?;
    if level.is_some() || k.is_some() {
        cfg.detect.level = level;
        cfg.detect.top_k = k;
    }
    let (level, k) = (cfg.detect.level, cfg.detect.top_k);
    if level.is_none() && k.is_none() {
        return usage("detect needs --level or --top-k");
    }
    if let Some(l) = level {
        check_level(l)?;
    }
    if !result.is_file() {
        return usage(format!("no fit result at {}", result.display()));
    }
    let text = fs::read_to_string(result)?;
    let fitted: FpcaResult = serde_json::from_str(&text).with_context(|| format!("parsing {}", result.display()))?;
    let scores = fitted.scores_matrix();
    let n = scores.nrows();
    if let Some(k) = k {
        if k == 0 || k > n {
            return usage(format!("top_k must lie in 1..={n}, got {k}"));
        }
    }
    let mut report = match level {
        Some(l) => detect_outliers(&fitted.ids, &scores, l)?,
        None => {
            let est = robust_location_scatter(&scores)?;
            let d = mahalanobis_distances(&scores, &est.location, &est.scatter)?;
            OutlierReport {
                ids: fitted.ids.clone(),
                distances: d.iter().copied().collect(),
                threshold: None,
                level: None,
                flags: vec![false; n],
                probabilities: None,
                location: est.location.iter().copied().collect(),
                scatter: est.scatter.transpose().iter().copied().collect(),
                ranking: None,
            }
        }
    };
    if let Some(k) = k {
        let d = nalgebra::DVector::from_vec(report.distances.clone());
        report.ranking = Some(top_k(&d, k));
    }

    let dir = out_dir(&cfg)?;
    write_json(&dir.join("outliers.json"), &report)?;
    let mut f = fs::File::create(dir.join("outliers.tsv"))?;
    let mut head = header(fitted.seed, &fitted.config_hash);
    if let (Some(l), Some(t)) = (report.level, report.threshold) {
        head += &format!(" level={l} threshold={}", fmt_f64(t));
    }
    writeln!(f, "{head}")?;
    writeln!(f, "rank\tcurve_id\tdistance\tflag")?;
    let rows: Vec<usize> = report.ranking.clone().unwrap_or_else(|| (0..n).collect());
    for (r, &i) in rows.iter().enumerate() {
        let rank = if report.ranking.is_some() { (r + 1).to_string() } else { "-".into() };
        writeln!(f, "{rank}\t{}\t{}\t{}", report.ids[i], fmt_f64(report.distances[i]), report.flags[i] as u8)?;
    }
    if let Some(t) = report.threshold {
        println!("threshold {t:.4}: {} curves flagged", report.flags.iter().filter(|&&x| x).count());
    }
    if let Some(r) = &report.ranking {
        let ids: Vec<&str> = r.iter().map(|&i| report.ids[i].as_str()).collect();
        println!("top {}: {}", r.len(), ids.join(", "));
    }
    Ok(())
}

#[derive(Serialize)]
struct TruthFile<'a> {
    version: &'a str,
    config_hash: &'a str,
    #[serde(flatten)]
    truth: &'a SimTruth,
}

pub fn simulate(common: &Common, study: Option<&str>) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(s) = study {
        cfg.simulate.study = parse_study(s)?;
        cfg.simulate.design = None;
    }
    if let Some(s) = common.seed {
        cfg.simulate.seed = s;
    }
    let mut design = cfg.simulate.design.clone().unwrap_or_else(|| preset(cfg.simulate.study, cfg.simulate.seed).0);
    design.seed = cfg.simulate.seed;
    design.validate()?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg)?;
    let (data, truth) = generate(&design)?;
    data.write_csv(&dir.join("data.csv"))?;
    write_json(&dir.join("truth.json"), &TruthFile { version: VERSION, config_hash: &hash, truth: &truth })?;
    println!("wrote {} curves to {}", data.n(), dir.join("data.csv").display());
    Ok(())
}

pub fn bench(
    common: &Common,
    study: Option<&str>,
    replicates: Option<usize>,
    level: Option<f64>,
    serial: bool,
) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(s) = study {
        cfg.bench.study = parse_study(s)?;
        cfg.bench.design = None;
    }
    if let Some(r) = replicates {
        cfg.bench.replicates = r;
    }
    if let Some(l) = level {
        cfg.bench.level = l;
    }
    check_level(cfg.bench.level)?;
    if cfg.bench.replicates == 0 {
        return usage("replicates must be at least 1");
    }
    let (preset_design, preset_spec) = preset(cfg.bench.study, cfg.asmc.seed);
    if cfg.model.is_none() {
        cfg.model = Some(ModelSection::from_spec(&preset_spec));
    }
    let mut design = cfg.bench.design.clone().unwrap_or(preset_design);
    design.seed = cfg.asmc.seed;
    design.validate()?;
    let mut spec = cfg.spec();
    if serial {
        spec.asmc.parallel = false;
    }
    let hash = cfg.hash();
    let dir = out_dir(&cfg)?;
    let rows = run_bench(&design, &spec, cfg.bench.replicates, cfg.bench.level)?;

    let mut f = fs::File::create(dir.join("results.tsv"))?;
    writeln!(f, "{}", header(cfg.asmc.seed, &hash))?;
    writeln!(f, "study\treplicate\tmethod\tmetric\tvalue")?;
    for r in &rows {
        writeln!(f, "{}\t{}\t{}\t{}\t{}", r.study, r.replicate, r.method, r.metric, fmt_f64(r.value))?;
    }
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &rows {
        let key = (r.method.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (method, metric) in keys {
        let v: Vec<f64> = rows.iter().filter(|r| r.method == method && r.metric == metric).map(|r| r.value).collect();
        println!("{method:<8} {metric:<14} mean {:.4} over {}", v.iter().sum::<f64>() / v.len() as f64, v.len());
    }
    Ok(())
}
