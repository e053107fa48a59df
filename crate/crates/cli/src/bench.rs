//! Monte Carlo benchmark grid.
//!
//! A spec file is flat `key = value` lines grouped into `[setting <name>]`
//! sections. Keys placed before the first section are defaults for every
//! setting.
//!
//! ```text
//! replicates = 20
//! seed = 2024
//! methods = fixed, balloon-5, kmeans-silhouette
//!
//! [setting balanced]
//! preset = two-balanced      # or: prototypes = B, C / weights = 0.5, 0.5
//! n = 200
//! p = 5
//! t = 5
//! rho = 1
//! sigma = 1
//! ```
//!
//! Replicate `r` of a setting draws its data with seed
//! `split_seed(seed, r)`; every method of that replicate sees the same data.
//!
//! CSV columns: `setting,method,replicate,fm,n_clusters,status,seconds`.
//! `fm` and `n_clusters` are empty when `status` is not `ok`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use modalmatrix::density::normal_scale_gradient_bandwidth;
use modalmatrix::evaluation::DEFAULT_RESTARTS;
use modalmatrix::rng::split_seed;
use modalmatrix::{
    choose_k, cluster, fowlkes_mallows, generate, select_k_silhouette, EstimatorConfig, GenConfig, KRule,
    MeanShiftConfig, Partition, PresetName, Setting,
};
use rayon::prelude::*;

use crate::{CliError, CliResult};

pub const CSV_HEADER: &str = "setting,method,replicate,fm,n_clusters,status,seconds";
pub const SUMMARY_HEADER: &str = "setting,method,n_ok,fm_median,fm_q1,fm_q3,fm_iqr,n_clusters_median";
const KMEANS_K_MAX: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodSpec {
    Fixed,
    Balloon(KRule),
    SamplePoint(KRule),
    KMeansSilhouette,
}

impl MethodSpec {
    pub const ALL: [MethodSpec; 8] = [
        MethodSpec::Fixed,
        MethodSpec::Balloon(KRule::Half),
        MethodSpec::Balloon(KRule::One),
        MethodSpec::Balloon(KRule::Five),
        MethodSpec::SamplePoint(KRule::Half),
        MethodSpec::SamplePoint(KRule::One),
        MethodSpec::SamplePoint(KRule::Five),
        MethodSpec::KMeansSilhouette,
    ];
}

fn rule_suffix(rule: KRule) -> &'static str {
    match rule {
        KRule::Half => "0.5",
        KRule::One => "1",
        KRule::Five => "5",
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Fixed => f.write_str("fixed"),
            MethodSpec::Balloon(r) => write!(f, "balloon-{}", rule_suffix(*r)),
            MethodSpec::SamplePoint(r) => write!(f, "samplepoint-{}", rule_suffix(*r)),
            MethodSpec::KMeansSilhouette => f.write_str("kmeans-silhouette"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MethodSpec::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| {
                let names: Vec<String> = MethodSpec::ALL.iter().map(|m| m.to_string()).collect();
                format!("unknown method '{s}' (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SettingSpec {
    pub name: String,
    pub prototypes: Vec<PresetName>,
    pub weights: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub t: usize,
    pub rho: f64,
    pub sigma: f64,
    pub replicates: usize,
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
}

impl SettingSpec {
    fn defaults(name: String) -> Self {
        let preset = Setting::TwoBalanced;
        Self {
            name,
            prototypes: preset.presets().to_vec(),
            weights: preset.weights().to_vec(),
            n: 200,
            p: 5,
            t: 5,
            rho: 1.0,
            sigma: 1.0,
            replicates: 20,
            methods: MethodSpec::ALL.to_vec(),
            seed: 0,
        }
    }

    pub fn gen_config(&self, seed: u64) -> modalmatrix::Result<GenConfig> {
        let prototypes = self
            .prototypes
            .iter()
            .map(|&p| modalmatrix::datagen::preset_prototypes(p, self.p, self.t))
            .collect::<modalmatrix::Result<Vec<_>>>()?;
        let cfg = GenConfig {
            prototypes,
            weights: self.weights.clone(),
            rho: self.rho,
            sigma: self.sigma,
            n: self.n,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        if self.replicates == 0 {
            return Err(spec_err(
                0,
                format!("setting '{}': replicates must be >= 1", self.name),
            ));
        }
        if self.methods.is_empty() {
            return Err(spec_err(0, format!("setting '{}': no methods", self.name)));
        }
        if self.n < 4 {
            return Err(spec_err(0, format!("setting '{}': n must be >= 4", self.name)));
        }
        self.gen_config(self.seed)
            .map_err(|e| spec_err(0, format!("setting '{}': {e}", self.name)))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub settings: Vec<SettingSpec>,
}

fn spec_err(line: usize, message: String) -> CliError {
    CliError::Core(modalmatrix::Error::Parse { line, message })
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| e.to_string()))
        .collect()
}

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("bad number '{v}'"))
}

fn apply_key(s: &mut SettingSpec, key: &str, value: &str) -> Result<(), String> {
    match key {
        "preset" => {
            let setting: Setting = value.parse().map_err(|e: modalmatrix::Error| e.to_string())?;
            s.prototypes = setting.presets().to_vec();
            s.weights = setting.weights().to_vec();
        }
        "prototypes" => s.prototypes = list(value)?,
        "weights" => s.weights = list(value)?,
        "n" => s.n = num(value)?,
        "p" => s.p = num(value)?,
        "t" => s.t = num(value)?,
        "rho" => s.rho = num(value)?,
        "sigma" => s.sigma = num(value)?,
        "replicates" => s.replicates = num(value)?,
        "seed" => s.seed = num(value)?,
        "methods" => s.methods = list(value)?,
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// (line number, key, value)
type Entry = (usize, String, String);

impl BenchSpec {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut defaults: Vec<Entry> = Vec::new();
        let mut sections: Vec<(String, Vec<Entry>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(head) = line.strip_prefix('[') {
                let head = head
                    .strip_suffix(']')
                    .ok_or_else(|| spec_err(i + 1, "unterminated section header".into()))?
                    .trim();
                let name = head.strip_prefix("setting").unwrap_or(head).trim();
                if name.is_empty() || name.contains(',') {
                    return Err(spec_err(i + 1, format!("bad setting name '{name}'")));
                }
                if sections.iter().any(|(n, _)| n == name) {
                    return Err(spec_err(i + 1, format!("duplicate setting '{name}'")));
                }
                sections.push((name.to_string(), Vec::new()));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| spec_err(i + 1, format!("expected key = value, got '{line}'")))?;
            let entry = (i + 1, k.trim().to_string(), v.trim().to_string());
            match sections.last_mut() {
                Some((_, keys)) => keys.push(entry),
                None => defaults.push(entry),
            }
        }
        if sections.is_empty() {
            return Err(spec_err(0, "spec defines no [setting] sections".into()));
        }
        let mut settings = Vec::new();
        for (name, keys) in sections {
            let mut s = SettingSpec::defaults(name);
            for (line, k, v) in defaults.iter().chain(&keys) {
                apply_key(&mut s, k, v).map_err(|m| spec_err(*line, m))?;
            }
            s.validate()?;
            settings.push(s);
        }
        Ok(Self { settings })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub setting: String,
    pub method: MethodSpec,
    pub replicate: usize,
    pub fm: Option<f64>,
    pub n_clusters: Option<usize>,
    pub status: String,
    pub seconds: f64,
}

fn status_of(e: &modalmatrix::Error) -> &'static str {
    match e {
        modalmatrix::Error::DegenerateBandwidth { .. } => "degenerate",
        modalmatrix::Error::Isolated(_) => "isolated",
        _ => "error",
    }
}

fn run_method(
    method: MethodSpec,
    data: &modalmatrix::Dataset,
    truth: &Partition,
    seed: u64,
) -> modalmatrix::Result<(f64, usize)> {
    let n = data.len();
    let ms = MeanShiftConfig::default();
    let labels = match method {
        MethodSpec::KMeansSilhouette => {
            let kmax = KMEANS_K_MAX.min(n - 1);
            select_k_silhouette(data, 2, kmax, seed, DEFAULT_RESTARTS)?.partition
        }
        _ => {
            let config = match method {
                MethodSpec::Fixed => EstimatorConfig::fixed(normal_scale_gradient_bandwidth(data)?),
                MethodSpec::Balloon(rule) => EstimatorConfig::balloon(choose_k(rule, n)),
                MethodSpec::SamplePoint(rule) => {
                    EstimatorConfig::sample_point(choose_k(rule, n), normal_scale_gradient_bandwidth(data)?)
                }
                MethodSpec::KMeansSilhouette => unreachable!(),
            };
            Partition::from(cluster(data, &config, &ms)?.labels)
        }
    };
    Ok((fowlkes_mallows(&labels, truth)?, labels.n_clusters()))
}

fn run_replicate(s: &SettingSpec, replicate: usize) -> Vec<BenchRow> {
    let seed = split_seed(s.seed, replicate as u64);
    let generated = s.gen_config(seed).and_then(|cfg| generate(&cfg));
    s.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = generated.as_ref().map_err(|e| status_of(e)).and_then(|g| {
                let truth = Partition::from(g.labels.as_slice());
                run_method(method, &g.data, &truth, seed).map_err(|e| status_of(&e))
            });
            let seconds = start.elapsed().as_secs_f64();
            let (fm, n_clusters, status) = match outcome {
                Ok((fm, m)) => (Some(fm), Some(m), "ok"),
                Err(status) => (None, None, status),
            };
            BenchRow {
                setting: s.name.clone(),
                method,
                replicate,
                fm,
                n_clusters,
                status: status.to_string(),
                seconds,
            }
        })
        .collect()
}

/// Runs every cell. Rows come back in (setting, replicate, method) order
/// regardless of thread count.
pub fn run_bench(spec: &BenchSpec) -> Vec<BenchRow> {
    spec.settings
        .iter()
        .flat_map(|s| {
            (0..s.replicates)
                .into_par_iter()
                .map(|r| run_replicate(s, r))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
        })
        .collect()
}

pub fn write_csv(rows: &[BenchRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let fm = r.fm.map(|v| format!("{v:.6}")).unwrap_or_default();
        let m = r.n_clusters.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{fm},{m},{},{:.6}",
            r.setting, r.method, r.replicate, r.status, r.seconds
        )?;
    }
    Ok(())
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub setting: String,
    pub method: MethodSpec,
    pub n_ok: usize,
    pub fm_median: f64,
    pub fm_q1: f64,
    pub fm_q3: f64,
    pub n_clusters_median: f64,
}

/// Median and quartiles of FM per (setting, method), over successful cells.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, MethodSpec)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(s, m)| *s == r.setting && *m == r.method) {
            keys.push((r.setting.clone(), r.method));
        }
    }
    keys.into_iter()
        .map(|(setting, method)| {
            let cell = rows.iter().filter(|r| r.setting == setting && r.method == method);
            let mut fm: Vec<f64> = cell.clone().filter_map(|r| r.fm).collect();
            let mut m: Vec<f64> = cell.filter_map(|r| r.n_clusters.map(|v| v as f64)).collect();
            fm.sort_by(f64::total_cmp);
            m.sort_by(f64::total_cmp);
            let q = |v: &[f64], p| if v.is_empty() { f64::NAN } else { quantile(v, p) };
            SummaryRow {
                setting,
                method,
                n_ok: fm.len(),
                fm_median: q(&fm, 0.5),
                fm_q1: q(&fm, 0.25),
                fm_q3: q(&fm, 0.75),
                n_clusters_median: q(&m, 0.5),
            }
        })
        .collect()
}

pub fn write_summary(rows: &[SummaryRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.setting,
            r.method,
            r.n_ok,
            r.fm_median,
            r.fm_q1,
            r.fm_q3,
            r.fm_q3 - r.fm_q1,
            r.n_clusters_median
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_sections() {
        let spec = BenchSpec::parse(
            "replicates = 3\nmethods = fixed, balloon-5\n\n[setting a]\npreset = single\nn = 50 # small\n[b]\nprototypes = B, C\nweights = 0.1, 0.9\nmethods = kmeans-silhouette\n",
        )
        .unwrap();
        assert_eq!(spec.settings.len(), 2);
        let a = &spec.settings[0];
        assert_eq!((a.name.as_str(), a.n, a.replicates), ("a", 50, 3));
        assert_eq!(a.prototypes, vec![PresetName::A]);
        assert_eq!(
            a.methods,
            vec![MethodSpec::Fixed, MethodSpec::Balloon(KRule::Five)]
        );
        let b = &spec.settings[1];
        assert_eq!(b.weights, vec![0.1, 0.9]);
        assert_eq!(b.methods, vec![MethodSpec::KMeansSilhouette]);
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "n = 5\n",
            "[s]\nreplicates = 0\n",
            "[s]\nmethods = balloon-2\n",
            "[s]\nbogus = 1\n",
            "[s]\nn\n",
            "[s]\n[s]\n",
            "[s]\nweights = 0.5, 0.6\n",
            "[s\n",
        ] {
            assert!(BenchSpec::parse(text).is_err(), "accepted {text:?}");
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodSpec::ALL {
            assert_eq!(m.to_string().parse::<MethodSpec>().unwrap(), m);
        }
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }
}
