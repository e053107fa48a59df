use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use modalmatrix::datagen::presets::PRESET_VERSION;
use modalmatrix::mvd::{self, format_f64};
use modalmatrix::rng::RNG_ALGORITHM;
use modalmatrix::{
    confusion_table, fit, fowlkes_mallows, generate as draw, standardize, Dataset, GenConfig,
    MeanShiftConfig, Partition, Setting,
};

use crate::bench::{self, BenchSpec};
use crate::estimator::{resolve, Resolved};
use crate::{
    BenchArgs, CliError, CliResult, ClusterArgs, DensityArgs, EstimatorArgs, EvaluateArgs, GenerateArgs,
};

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Default)]
struct GenerateKeys {
    preset: Option<String>,
    n: Option<usize>,
    p: Option<usize>,
    t: Option<usize>,
    rho: Option<f64>,
    sigma: Option<f64>,
    seed: Option<u64>,
}

fn read_generate_config(path: &Path) -> CliResult<GenerateKeys> {
    let text = fs::read_to_string(path)?;
    let mut keys = GenerateKeys::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: String| modalmatrix::Error::Parse {
            line: i + 1,
            message: m,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key = value, got '{line}'")))?;
        let v = v.trim();
        let num_err = |_| bad(format!("bad value '{v}' for '{}'", k.trim()));
        match k.trim() {
            "preset" => keys.preset = Some(v.to_string()),
            "n" => keys.n = Some(v.parse().map_err(num_err)?),
            "p" => keys.p = Some(v.parse().map_err(num_err)?),
            "t" => keys.t = Some(v.parse().map_err(num_err)?),
            "rho" => keys.rho = Some(v.parse().map_err(|_| bad(format!("bad rho '{v}'")))?),
            "sigma" => keys.sigma = Some(v.parse().map_err(|_| bad(format!("bad sigma '{v}'")))?),
            "seed" => keys.seed = Some(v.parse().map_err(num_err)?),
            other => return Err(bad(format!("unknown key '{other}'")).into()),
        }
    }
    Ok(keys)
}

pub(crate) fn generate(a: GenerateArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let file = match &a.config {
        Some(path) => read_generate_config(path)?,
        None => GenerateKeys::default(),
    };
    let preset = a
        .preset
        .or(file.preset)
        .ok_or_else(|| usage("--preset is required (single, two-balanced, two-imbalanced)"))?;
    let setting: Setting = preset.parse()?;
    let n = a.n.or(file.n).unwrap_or(200);
    let (p, t) = (a.p.or(file.p).unwrap_or(5), a.t.or(file.t).unwrap_or(5));
    let rho = a.rho.or(file.rho).unwrap_or(1.0);
    let sigma = a.sigma.or(file.sigma).unwrap_or(1.0);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let cfg = GenConfig::from_setting(setting, p, t, n, rho, sigma, seed)?;
    let g = draw(&cfg)?;
    let labels: Vec<i64> = g.labels.iter().map(|&l| l as i64).collect();
    let meta: Vec<(String, String)> = [
        ("preset", setting.name().to_string()),
        ("preset_version", PRESET_VERSION.to_string()),
        ("rho", rho.to_string()),
        ("sigma", sigma.to_string()),
        ("seed", seed.to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    mvd::write_mvd_path(&a.output, &g.data, Some(&labels), &meta)?;
    let counts: Vec<String> = g
        .counts(cfg.prototypes.len())
        .iter()
        .map(usize::to_string)
        .collect();
    writeln!(
        out,
        "wrote {}: N={n} P={p} T={t} counts={}",
        a.output.display(),
        counts.join(",")
    )?;
    Ok(())
}

/// Loads the data (standardized if requested) and resolves the estimator.
fn prepare(
    path: &Path,
    e: &EstimatorArgs,
) -> CliResult<(Dataset, Option<modalmatrix::Standardization>, Resolved)> {
    let file = mvd::read_mvd_path(path)?;
    let (data, scaling) = if e.standardize {
        let (z, s) = standardize(&file.data)?;
        (z, Some(s))
    } else {
        (file.data, None)
    };
    let resolved = resolve(e.estimator, e.h, e.k, &data)?;
    Ok((data, scaling, resolved))
}

fn estimator_name(kind: crate::EstimatorKind) -> &'static str {
    match kind {
        crate::EstimatorKind::Fixed => "fixed",
        crate::EstimatorKind::Balloon => "balloon",
        crate::EstimatorKind::Samplepoint => "samplepoint",
    }
}

pub(crate) fn cluster(a: ClusterArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let start = Instant::now();
    let (data, scaling, resolved) = prepare(&a.input, &a.estimator)?;
    let ms = MeanShiftConfig {
        tol: a.tol,
        max_iter: a.max_iter,
        merge_radius_factor: a.merge_factor,
    };
    let result = modalmatrix::cluster(&data, &resolved.config, &ms)?;
    let modes = Dataset::new(result.modes.clone())?;
    let modes = match &scaling {
        Some(s) => s.invert_dataset(&modes)?,
        None => modes,
    };
    let labels: Vec<i64> = result.labels.iter().map(|&l| l as i64).collect();
    let labels_path = a.labels.unwrap_or_else(|| with_suffix(&a.input, ".labels"));
    let modes_path = a.modes.unwrap_or_else(|| with_suffix(&a.input, ".modes.mvd"));
    mvd::write_labels(BufWriter::new(File::create(&labels_path)?), &labels)?;
    mvd::write_mvd_path(&modes_path, &modes, None, &[])?;

    let sizes: Vec<String> = result.cluster_sizes().iter().map(usize::to_string).collect();
    let (rows, cols) = data.shape();
    let mut report = vec![
        (
            "estimator".to_string(),
            estimator_name(a.estimator.estimator).to_string(),
        ),
        ("kernel".into(), resolved.config.kernel.to_string()),
        ("n".into(), data.len().to_string()),
        ("p".into(), rows.to_string()),
        ("t".into(), cols.to_string()),
        ("standardized".into(), a.estimator.standardize.to_string()),
    ];
    if let Some(h) = resolved.h {
        report.push(("h".into(), format_f64(h)));
    }
    if let Some(k) = resolved.k {
        report.push(("k".into(), k.to_string()));
    }
    report.extend([
        ("bandwidth_scale".into(), format_f64(result.bandwidth_scale)),
        ("merge_radius".into(), format_f64(result.merge_radius)),
        ("M".into(), result.n_clusters().to_string()),
        ("cluster_sizes".into(), sizes.join(",")),
        (
            "converged".into(),
            result.converged.iter().filter(|c| **c).count().to_string(),
        ),
        (
            "max_iterations".into(),
            result.iterations.iter().max().copied().unwrap_or(0).to_string(),
        ),
        ("labels".into(), labels_path.display().to_string()),
        ("modes".into(), modes_path.display().to_string()),
        (
            "wall_seconds".into(),
            format!("{:.6}", start.elapsed().as_secs_f64()),
        ),
    ]);
    let text: String = report.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    if let Some(path) = &a.report {
        fs::write(path, &text)?;
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub(crate) fn evaluate(a: EvaluateArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let la = Partition::new(mvd::read_labels_path(&a.labels_a)?);
    let lb = Partition::new(mvd::read_labels_path(&a.labels_b)?);
    let fm = fowlkes_mallows(&la, &lb)?;
    let table = confusion_table(&la, &lb)?;
    writeln!(out, "FM={fm:.6}")?;
    writeln!(out, "{table}")?;
    Ok(())
}

pub(crate) fn bench(a: BenchArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let spec = BenchSpec::parse(&fs::read_to_string(&a.spec)?)?;
    let rows = bench::run_bench(&spec);
    let summary = bench::summarize(&rows);
    match &a.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            bench::write_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => bench::write_csv(&rows, out)?,
    }
    match &a.summary {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            bench::write_summary(&summary, &mut w)?;
            w.flush()?;
        }
        None => bench::write_summary(&summary, &mut std::io::stderr())?,
    }
    Ok(())
}

pub(crate) fn density(a: DensityArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let (data, scaling, resolved) = prepare(&a.input, &a.estimator)?;
    let queries = mvd::read_mvd_path(&a.query)?.data;
    let queries: Vec<_> = match &scaling {
        Some(s) => queries
            .iter()
            .map(|q| s.apply(q))
            .collect::<modalmatrix::Result<_>>()?,
        None => queries.into_observations(),
    };
    let est = fit(&resolved.config, &data)?;
    for v in est.log_density_batch(&queries)? {
        writeln!(out, "{}", format_f64(v))?;
    }
    Ok(())
}
