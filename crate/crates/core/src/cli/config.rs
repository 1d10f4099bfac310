use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::io::{format_sig, KvDocument, KvSection};
use crate::signals::{DEFAULT_BLOCK_THRESHOLD, DEFAULT_CANTOR_DEPTH};
use crate::solver::{Loss, DEFAULT_MAX_ITER, DEFAULT_TOL};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Synth,
    Denoise,
    Denoise2d,
    Sweep,
    Eval,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Synth => "synth",
            Task::Denoise => "denoise",
            Task::Denoise2d => "denoise2d",
            Task::Sweep => "sweep",
            Task::Eval => "eval",
        }
    }
}

impl FromStr for Task {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "synth" => Task::Synth,
            "denoise" | "denoise1d" => Task::Denoise,
            "denoise2d" => Task::Denoise2d,
            "sweep" => Task::Sweep,
            "eval" => Task::Eval,
            other => return Err(CliError::Usage(format!("unknown task `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Proposed,
    Tv,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::Tv => "tv",
        })
    }
}

impl FromStr for Method {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "tv" => Ok(Method::Tv),
            other => Err(CliError::Usage(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    /// Impulses at 0 and 1; meant for unit-scaled images.
    SaltPepper,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::SaltPepper => "salt-pepper",
        })
    }
}

/// Every key a config file or report may carry, in report order.
pub const KEYS: &[&str] = &[
    "task",
    "input",
    "output",
    "series",
    "image_out",
    "n",
    "depth",
    "crop",
    "loss",
    "methods",
    "lambda",
    "tv_lambda",
    "alpha",
    "noise",
    "noise_snr_db",
    "density",
    "trials",
    "seed",
    "tau1",
    "tau2",
    "max_iter",
    "tol",
    "block_threshold",
    "reference",
    "estimate",
];

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    /// Clean signal (CSV) or image (PGM). Without it the 1D tasks use the
    /// Cantor signal of length `n`.
    pub input: Option<PathBuf>,
    /// Report path, or the CSV written by `synth`. Stdout when absent.
    pub output: Option<PathBuf>,
    pub series: Option<PathBuf>,
    /// Prefix for the PGM files written by `denoise2d`.
    pub image_out: Option<PathBuf>,
    pub n: usize,
    pub depth: u32,
    pub crop: Option<(usize, usize)>,
    pub loss: Loss,
    pub methods: Vec<Method>,
    pub lambda: Vec<f64>,
    pub tv_lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub noise: NoiseKind,
    pub noise_snr_db: Vec<f64>,
    pub density: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub block_threshold: f64,
    pub reference: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Resolves raw `key -> value` settings for `task`. Grids are sorted and
    /// deduplicated so reports come out in a fixed order.
    pub fn from_map(task: Task, map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key `{bad}`")));
        }
        let get = |k: &str| {
            map.get(k)
                .map(String::as_str)
                .filter(|v| *v != "none" && !v.is_empty())
        };
        let path = |k: &str| get(k).map(PathBuf::from);

        let image = task == Task::Denoise2d;
        let lambda = match get("lambda") {
            Some(v) => grid(v, "lambda")?,
            None if image => vec![0.15],
            None => vec![0.5],
        };
        let tv_lambda = match get("tv_lambda") {
            Some(v) => grid(v, "tv_lambda")?,
            None => lambda.clone(),
        };
        let alpha = match get("alpha") {
            Some(v) => grid(v, "alpha")?,
            None if image => vec![1000.0],
            None => vec![0.1],
        };
        let noise = match get("noise").unwrap_or("gaussian") {
            "gaussian" => NoiseKind::Gaussian,
            "salt-pepper" | "salt_pepper" => NoiseKind::SaltPepper,
            other => return Err(CliError::Usage(format!("unknown noise `{other}`"))),
        };
        let noise_snr_db = match get("noise_snr_db") {
            Some(v) => grid(v, "noise_snr_db")?,
            None if image => vec![5.0],
            None => vec![10.0],
        };
        let density = match get("density") {
            Some(v) => grid(v, "density")?,
            None => vec![0.1],
        };
        let mut methods = match get("methods") {
            Some(v) => v
                .split(',')
                .map(|m| m.trim().parse())
                .collect::<Result<Vec<Method>, _>>()?,
            None => vec![Method::Proposed, Method::Tv],
        };
        methods.sort();
        methods.dedup();

        let cfg = Self {
            task,
            input: path("input"),
            output: path("output"),
            series: path("series"),
            image_out: path("image_out"),
            n: scalar(get("n"), "n")?.unwrap_or(1000),
            depth: scalar(get("depth"), "depth")?.unwrap_or(DEFAULT_CANTOR_DEPTH),
            crop: get("crop").map(parse_crop).transpose()?,
            loss: match get("loss") {
                Some(v) => v
                    .parse()
                    .map_err(|e: crate::Error| CliError::Usage(e.to_string()))?,
                None => Loss::Quadratic,
            },
            methods,
            lambda,
            tv_lambda,
            alpha,
            noise,
            noise_snr_db,
            density,
            trials: scalar(get("trials"), "trials")?.unwrap_or(1),
            seed: scalar(get("seed"), "seed")?.unwrap_or(0),
            tau1: scalar(get("tau1"), "tau1")?,
            tau2: scalar(get("tau2"), "tau2")?,
            max_iter: scalar(get("max_iter"), "max_iter")?.unwrap_or(DEFAULT_MAX_ITER),
            tol: scalar(get("tol"), "tol")?.unwrap_or(DEFAULT_TOL),
            block_threshold: scalar(get("block_threshold"), "block_threshold")?
                .unwrap_or(DEFAULT_BLOCK_THRESHOLD),
            reference: path("reference"),
            estimate: path("estimate"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.trials < 1 {
            return usage("trials must be >= 1".into());
        }
        if self.methods.is_empty() {
            return usage("at least one method is required".into());
        }
        for (name, g) in [("lambda", &self.lambda), ("tv_lambda", &self.tv_lambda)] {
            if let Some(v) = g.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return usage(format!("{name} values must be finite and >= 0, got {v}"));
            }
        }
        if let Some(v) = self.alpha.iter().find(|v| !(**v >= 0.0)) {
            return usage(format!("alpha values must be >= 0, got {v}"));
        }
        if let Some(v) = self.noise_snr_db.iter().find(|v| !v.is_finite()) {
            return usage(format!("noise_snr_db must be finite, got {v}"));
        }
        if let Some(v) = self.density.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return usage(format!("density must be in [0, 1], got {v}"));
        }
        if !(self.tol >= 0.0) {
            return usage(format!("tol must be >= 0, got {}", self.tol));
        }
        for (name, t) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if let Some(t) = t.filter(|t| !(*t > 0.0 && t.is_finite())) {
                return usage(format!("{name} must be positive, got {t}"));
            }
        }
        if !(self.block_threshold > 0.0) {
            return usage(format!(
                "block_threshold must be > 0, got {}",
                self.block_threshold
            ));
        }
        if self.depth < 1 {
            return usage("depth must be >= 1".into());
        }
        let single = self.lambda.len() == 1 && self.alpha.len() == 1 && self.tv_lambda.len() == 1;
        if matches!(self.task, Task::Denoise | Task::Denoise2d) && !single {
            return usage(format!(
                "{} takes single lambda/alpha values; use sweep for grids",
                self.task.name()
            ));
        }
        match self.task {
            Task::Denoise2d if self.input.is_none() => {
                usage("denoise2d needs an input image".into())
            }
            Task::Eval if self.reference.is_none() || self.estimate.is_none() => {
                usage("eval needs reference and estimate".into())
            }
            Task::Synth if self.n < 2 => usage(format!("n must be >= 2, got {}", self.n)),
            _ => Ok(()),
        }
    }

    /// Noise levels in dB, or impulse densities for salt-and-pepper noise.
    pub fn levels(&self) -> &[f64] {
        match self.noise {
            NoiseKind::Gaussian => &self.noise_snr_db,
            NoiseKind::SaltPepper => &self.density,
        }
    }

    pub fn level_key(&self) -> &'static str {
        match self.noise {
            NoiseKind::Gaussian => "noise_snr_db",
            NoiseKind::SaltPepper => "density",
        }
    }

    /// The `[config]` section; feeding it back through `--config`
    /// reproduces this run.
    pub fn to_section(&self) -> KvSection {
        let mut s = KvSection::new("config");
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        };
        let opt = |v: Option<f64>| v.map_or("none".to_string(), num);
        s.push("task", self.task.name());
        s.push("input", path(&self.input));
        s.push("output", path(&self.output));
        s.push("series", path(&self.series));
        s.push("image_out", path(&self.image_out));
        s.push("n", self.n);
        s.push("depth", self.depth);
        s.push(
            "crop",
            self.crop
                .map_or("none".to_string(), |(h, w)| format!("{h}x{w}")),
        );
        s.push("loss", self.loss);
        s.push("methods", join(self.methods.iter().map(Method::to_string)));
        s.push("lambda", join(self.lambda.iter().map(|v| num(*v))));
        s.push("tv_lambda", join(self.tv_lambda.iter().map(|v| num(*v))));
        s.push("alpha", join(self.alpha.iter().map(|v| num(*v))));
        s.push("noise", self.noise);
        s.push(
            "noise_snr_db",
            join(self.noise_snr_db.iter().map(|v| num(*v))),
        );
        s.push("density", join(self.density.iter().map(|v| num(*v))));
        s.push("trials", self.trials);
        s.push("seed", self.seed);
        s.push("tau1", opt(self.tau1));
        s.push("tau2", opt(self.tau2));
        s.push("max_iter", self.max_iter);
        s.push("tol", num(self.tol));
        s.push("block_threshold", num(self.block_threshold));
        s.push("reference", path(&self.reference));
        s.push("estimate", path(&self.estimate));
        s
    }
}

/// Settings from a config file. A report is accepted too, in which case
/// its `[config]` section is used.
pub fn load_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let doc = KvDocument::parse(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    let section = doc
        .section("config")
        .or_else(|| doc.sections.iter().find(|s| s.name.is_empty()))
        .cloned()
        .unwrap_or_default();
    Ok(section.entries.into_iter().collect())
}

/// Numbers as they appear in reports: 12 significant digits.
pub fn num(v: f64) -> String {
    format_sig(v, 12)
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}

fn grid(text: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        let v = match item {
            "inf" | "+inf" | "infinity" => f64::INFINITY,
            _ => item
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{name}: `{item}` is not a number")))?,
        };
        if v.is_nan() {
            return Err(CliError::Usage(format!("{name}: NaN is not allowed")));
        }
        out.push(v);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

fn scalar<T: FromStr>(v: Option<&str>, name: &str) -> Result<Option<T>, CliError> {
    v.map(|s| {
        s.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{name}: cannot parse `{s}`")))
    })
    .transpose()
}

fn parse_crop(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("crop must look like HxW, got `{s}`"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        h.trim().parse().map_err(|_| bad())?,
        w.trim().parse().map_err(|_| bad())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn grids_sort_and_accept_inf() {
        let c = ExperimentConfig::from_map(Task::Sweep, &map(&[("alpha", "inf, 0.3,0.1,0.3")]))
            .unwrap();
        assert_eq!(c.alpha, vec![0.1, 0.3, f64::INFINITY]);
        assert!(ExperimentConfig::from_map(Task::Sweep, &map(&[("alpha", "x")])).is_err());
        assert!(ExperimentConfig::from_map(Task::Sweep, &map(&[("trials", "0")])).is_err());
        assert!(ExperimentConfig::from_map(Task::Sweep, &map(&[("bogus", "1")])).is_err());
        assert!(ExperimentConfig::from_map(Task::Denoise, &map(&[("lambda", "1,2")])).is_err());
    }

    #[test]
    fn section_round_trips() {
        let c = ExperimentConfig::from_map(
            Task::Sweep,
            &map(&[
                ("lambda", "0.2,0.5"),
                ("crop", "8x9"),
                ("tau1", "0.5"),
                ("output", "r.txt"),
            ]),
        )
        .unwrap();
        let mut doc = KvDocument::default();
        doc.sections.push(c.to_section());
        let back = load_config_text(&doc.render()).unwrap();
        let task: Task = back["task"].parse().unwrap();
        assert_eq!(ExperimentConfig::from_map(task, &back).unwrap(), c);
    }
}
