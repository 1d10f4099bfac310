use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::Error;
use crate::io::{
    read_csv, read_pgm, write_csv, write_pgm, write_series, GrayImage, KvDocument, KvSection,
};
use crate::signals::{
    add_awgn, add_salt_and_pepper, cantor_signal, extract_blocks, snr, SNR_CAP_DB,
};
use crate::solver::{check_convergence_condition, solve, LopAltProblem, SolverParams};

use super::config::{num, ExperimentConfig, Method, NoiseKind, Task};
use super::CliError;

/// Header of the trailing section that holds wall-clock times. Everything
/// before it is the deterministic report body.
pub const TIMING_SECTION: &str = "timing";

/// The part of a rendered report that reruns must reproduce exactly.
pub fn report_body(text: &str) -> &str {
    let marker = format!("[{TIMING_SECTION}]");
    match text.find(&marker) {
        Some(i) => &text[..i],
        None => text,
    }
}

/// Outcome of one (method, noise level, λ, α) cell over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: Method,
    pub level: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub snr: Vec<f64>,
    pub input_snr: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: usize,
    pub failures: Vec<String>,
    /// Blocks found in trial 0's `σ̂` (proposed method only).
    pub blocks: Option<usize>,
    pub seconds: f64,
}

impl ResultRecord {
    pub fn mean_snr(&self) -> f64 {
        mean(&self.snr)
    }

    fn to_section(&self, level_key: &str) -> KvSection {
        let mut s = KvSection::new("record");
        s.push("method", self.method);
        s.push(level_key, num(self.level));
        s.push("lambda", num(self.lambda));
        s.push("alpha", num(self.alpha));
        s.push("trials", self.snr.len() + self.failures.len());
        s.push(
            "snr",
            self.snr
                .iter()
                .map(|v| num(*v))
                .collect::<Vec<_>>()
                .join(","),
        );
        s.push("mean_snr", num(self.mean_snr()));
        s.push("input_snr", num(mean(&self.input_snr)));
        s.push(
            "iterations",
            self.iterations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        s.push("converged", self.converged);
        s.push("failed", self.failures.len());
        if let Some(b) = self.blocks {
            s.push("blocks", b);
        }
        if let Some(f) = self.failures.first() {
            s.push("failure", f);
        }
        s
    }
}

/// Records of a run in report order, plus the best cell per noise level
/// and method.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub records: Vec<ResultRecord>,
    pub best: Vec<usize>,
    pub failed: bool,
}

/// Clean data and how to build problems on it.
enum Data {
    Signal(Vec<f64>),
    Image(GrayImage),
}

impl Data {
    fn load(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        if cfg.task == Task::Denoise2d {
            let path = cfg.input.as_ref().expect("validated");
            let mut img = read_pgm(path).map_err(|e| CliError::io(path, e))?;
            if let Some((h, w)) = cfg.crop {
                img = img.crop(h, w).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            return Ok(Data::Image(img));
        }
        let x = match &cfg.input {
            Some(p) => read_csv(p).map_err(|e| CliError::io(p, e))?,
            None => cantor_signal(cfg.n, cfg.depth).map_err(|e| CliError::Usage(e.to_string()))?,
        };
        Ok(Data::Signal(x))
    }

    fn clean(&self) -> Vec<f64> {
        match self {
            Data::Signal(x) => x.clone(),
            Data::Image(img) => img.to_unit(),
        }
    }

    fn problem(
        &self,
        y: Vec<f64>,
        cfg: &ExperimentConfig,
        lambda: f64,
        alpha: f64,
    ) -> crate::Result<LopAltProblem> {
        match self {
            Data::Signal(_) => LopAltProblem::denoise_1d(y, cfg.loss, lambda, alpha),
            Data::Image(img) => {
                LopAltProblem::denoise_2d(y, img.height, img.width, cfg.loss, lambda, alpha)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: Method,
    level: usize,
    lambda: f64,
    alpha: f64,
}

struct Trial {
    snr: f64,
    input_snr: f64,
    iterations: usize,
    converged: bool,
    seconds: f64,
    /// Kept for trial 0 only.
    x_hat: Option<Vec<f64>>,
    sigma: Option<Vec<f64>>,
}

/// Step sizes from the configured operators, with any overrides applied.
/// The operators do not depend on `λ, α` or the data, so one set serves
/// every cell.
fn solver_params(sample: &LopAltProblem, cfg: &ExperimentConfig) -> Result<SolverParams, CliError> {
    let mut p = SolverParams::for_problem(sample).map_err(CliError::Solver)?;
    let prod = p.tau1 * p.tau2;
    match (cfg.tau1, cfg.tau2) {
        (Some(a), Some(b)) => (p.tau1, p.tau2) = (a, b),
        (Some(a), None) => (p.tau1, p.tau2) = (a, prod / a),
        (None, Some(b)) => (p.tau1, p.tau2) = (prod / b, b),
        (None, None) => {}
    }
    p.seed = cfg.seed;
    let p = p.with_budget(cfg.max_iter, cfg.tol);
    if cfg.tau1.is_some() || cfg.tau2.is_some() {
        let check = check_convergence_condition(sample, &p).map_err(CliError::Solver)?;
        if !check.satisfied {
            return Err(CliError::Usage(format!(
                "tau1 * tau2 * |H|^2 = {} exceeds 1; reduce tau1 or tau2",
                num(check.product)
            )));
        }
    }
    Ok(p)
}

fn corrupt(cfg: &ExperimentConfig, x: &[f64], level: f64, seed: u64) -> crate::Result<Vec<f64>> {
    match cfg.noise {
        NoiseKind::Gaussian => add_awgn(x, level, seed),
        NoiseKind::SaltPepper => add_salt_and_pepper(x, level, 0.0, 1.0, seed),
    }
}

fn capped_snr(x: &[f64], est: &[f64]) -> crate::Result<f64> {
    Ok(snr(x, est)?.min(SNR_CAP_DB))
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs every (noise level, method, λ, α, trial) combination. Trial `t`
/// uses noise seed `seed + t`, shared by all cells.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<(Outcome, Artifacts), CliError> {
    let data = Data::load(cfg)?;
    let x = data.clean();
    let levels = cfg.levels().to_vec();

    let noisy: Vec<Vec<Vec<f64>>> = levels
        .iter()
        .map(|&lv| {
            (0..cfg.trials)
                .map(|t| corrupt(cfg, &x, lv, cfg.seed.wrapping_add(t as u64)))
                .collect::<crate::Result<Vec<_>>>()
        })
        .collect::<crate::Result<_>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let sample = data
        .problem(x.clone(), cfg, 1.0, 1.0)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let params = solver_params(&sample, cfg)?;

    let mut cells = Vec::new();
    for level in 0..levels.len() {
        for &method in &cfg.methods {
            match method {
                Method::Proposed => {
                    for &lambda in &cfg.lambda {
                        for &alpha in &cfg.alpha {
                            cells.push(Cell {
                                method,
                                level,
                                lambda,
                                alpha,
                            });
                        }
                    }
                }
                Method::Tv => {
                    for &lambda in &cfg.tv_lambda {
                        cells.push(Cell {
                            method,
                            level,
                            lambda,
                            alpha: f64::INFINITY,
                        });
                    }
                }
            }
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<Result<Trial, String>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let cell = cells[c];
            let y = &noisy[cell.level][t];
            run_trial(&data, cfg, &params, &x, y, cell, t == 0).map_err(|e| e.to_string())
        })
        .collect();

    let mut records = Vec::with_capacity(cells.len());
    let mut artifacts = Artifacts {
        clean: x.clone(),
        noisy: noisy.iter().map(|n| n[0].clone()).collect(),
        ..Default::default()
    };
    for (c, cell) in cells.iter().enumerate() {
        let mut rec = ResultRecord {
            method: cell.method,
            level: levels[cell.level],
            lambda: cell.lambda,
            alpha: cell.alpha,
            snr: Vec::new(),
            input_snr: Vec::new(),
            iterations: Vec::new(),
            converged: 0,
            failures: Vec::new(),
            blocks: None,
            seconds: 0.0,
        };
        for t in 0..cfg.trials {
            match &results[c * cfg.trials + t] {
                Ok(tr) => {
                    rec.snr.push(tr.snr);
                    rec.input_snr.push(tr.input_snr);
                    rec.iterations.push(tr.iterations);
                    rec.converged += usize::from(tr.converged);
                    rec.seconds += tr.seconds;
                    if let Some(sigma) = &tr.sigma {
                        if cell.method == Method::Proposed {
                            rec.blocks = extract_blocks(sigma, cfg.block_threshold)
                                .ok()
                                .map(|b| b.num_blocks());
                        }
                    }
                    if let Some(xh) = &tr.x_hat {
                        artifacts.first.push((c, xh.clone(), tr.sigma.clone()));
                    }
                }
                Err(msg) => rec.failures.push(format!("trial {t}: {msg}")),
            }
        }
        records.push(rec);
    }
    artifacts.cells = cells.iter().map(|c| (c.method, c.level)).collect();

    let best = best_cells(&records, levels.len(), &cfg.methods, &levels);
    let failed = records.iter().any(|r| !r.failures.is_empty());
    Ok((
        Outcome {
            records,
            best,
            failed,
        },
        artifacts,
    ))
}

/// Trial-0 estimates, used for series and image outputs.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub clean: Vec<f64>,
    /// Trial-0 observation per noise level.
    pub noisy: Vec<Vec<f64>>,
    /// `(cell index, x̂, σ̂)`.
    pub first: Vec<(usize, Vec<f64>, Option<Vec<f64>>)>,
    /// `(method, level index)` per cell.
    pub cells: Vec<(Method, usize)>,
}

impl Artifacts {
    fn estimate(
        &self,
        method: Method,
        level: usize,
    ) -> Option<&(usize, Vec<f64>, Option<Vec<f64>>)> {
        self.first
            .iter()
            .find(|(c, ..)| self.cells[*c] == (method, level))
    }
}

fn run_trial(
    data: &Data,
    cfg: &ExperimentConfig,
    params: &SolverParams,
    x: &[f64],
    y: &[f64],
    cell: Cell,
    keep: bool,
) -> crate::Result<Trial> {
    let start = Instant::now();
    let input_snr = capped_snr(x, y)?;
    // λ = 0 leaves the data term alone, whose minimizer is y itself.
    let (x_hat, sigma, iterations, converged) = if cell.lambda == 0.0 {
        (y.to_vec(), None, 0, true)
    } else {
        let problem = data.problem(y.to_vec(), cfg, cell.lambda, cell.alpha)?;
        let rep = solve(&problem, params, None)?;
        (
            rep.x_hat,
            Some(rep.sigma_hat),
            rep.iterations,
            rep.converged,
        )
    };
    Ok(Trial {
        snr: capped_snr(x, &x_hat)?,
        input_snr,
        iterations,
        converged,
        seconds: start.elapsed().as_secs_f64(),
        x_hat: keep.then_some(x_hat),
        sigma: if keep { sigma } else { None },
    })
}

/// Highest mean SNR per (level, method); ties go to the smaller λ, then
/// the smaller α. Cells with failed trials are skipped.
fn best_cells(
    records: &[ResultRecord],
    n_levels: usize,
    methods: &[Method],
    levels: &[f64],
) -> Vec<usize> {
    let mut best = Vec::new();
    for lv in 0..n_levels {
        for &m in methods {
            let pick = records
                .iter()
                .enumerate()
                .filter(|(_, r)| r.method == m && r.level == levels[lv] && r.failures.is_empty())
                .max_by(|(_, a), (_, b)| {
                    a.mean_snr()
                        .total_cmp(&b.mean_snr())
                        .then(b.lambda.total_cmp(&a.lambda))
                        .then(b.alpha.total_cmp(&a.alpha))
                });
            if let Some((i, _)) = pick {
                best.push(i);
            }
        }
    }
    best
}

/// Report document: `[config]`, one `[record]` per cell, `[best]` blocks
/// and a trailing `[timing]` section.
pub fn build_report(cfg: &ExperimentConfig, out: &Outcome, total_seconds: f64) -> KvDocument {
    let mut doc = KvDocument::default();
    doc.sections.push(cfg.to_section());
    let key = cfg.level_key();
    for r in &out.records {
        doc.sections.push(r.to_section(key));
    }
    for &i in &out.best {
        let r = &out.records[i];
        let mut s = KvSection::new("best");
        s.push(key, num(r.level));
        s.push("method", r.method);
        s.push("lambda", num(r.lambda));
        s.push("alpha", num(r.alpha));
        s.push("mean_snr", num(r.mean_snr()));
        doc.sections.push(s);
    }
    let mut t = KvSection::new(TIMING_SECTION);
    for (i, r) in out.records.iter().enumerate() {
        t.push(&format!("record_{i}"), format!("{:.3}", r.seconds));
    }
    t.push("total", format!("{total_seconds:.3}"));
    doc.sections.push(t);
    doc
}

/// Writes series (1D) or images (2D) for the first noise level.
pub fn write_artifacts(cfg: &ExperimentConfig, art: &Artifacts) -> Result<(), CliError> {
    if let Some(path) = &cfg.series {
        let mut cols: Vec<(String, Vec<f64>)> = vec![
            ("clean".into(), art.clean.clone()),
            ("noisy".into(), art.noisy[0].clone()),
        ];
        let mut sigma = None;
        for &m in &cfg.methods {
            if let Some((_, xh, sg)) = art.estimate(m, 0) {
                cols.push((m.to_string(), xh.clone()));
                if m == Method::Proposed {
                    sigma = sg.clone();
                }
            }
        }
        let refs: Vec<(&str, &[f64])> = cols
            .iter()
            .map(|(n, v)| (n.as_str(), v.as_slice()))
            .collect();
        write_series(path, &refs).map_err(|e| CliError::io(path, e))?;
        if let Some(sg) = sigma {
            let spath = sibling(path, "_sigma");
            write_series(&spath, &[("sigma", &sg)]).map_err(|e| CliError::io(&spath, e))?;
        }
    }
    if let (Some(prefix), Task::Denoise2d) = (&cfg.image_out, cfg.task) {
        let img = match cfg.input.as_ref().map(|p| read_pgm(p)) {
            Some(Ok(img)) => match cfg.crop {
                Some((h, w)) => img.crop(h, w).map_err(|e| CliError::Usage(e.to_string()))?,
                None => img,
            },
            Some(Err(e)) => return Err(CliError::io(cfg.input.as_ref().expect("some"), e)),
            None => return Ok(()),
        };
        let save = |suffix: &str, v: &[f64]| -> Result<(), CliError> {
            let path = sibling(&prefix.with_extension("pgm"), suffix);
            let out = GrayImage::from_unit(img.width, img.height, img.maxval, v)
                .map_err(CliError::Solver)?;
            write_pgm(&path, &out).map_err(|e| CliError::io(&path, e))
        };
        save("_noisy", &art.noisy[0])?;
        for &m in &cfg.methods {
            if let Some((_, xh, _)) = art.estimate(m, 0) {
                save(&format!("_{m}"), xh)?;
            }
        }
    }
    Ok(())
}

/// `dir/name.ext` -> `dir/name<suffix>.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

/// Writes the Cantor signal as CSV.
pub fn synth(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    let x = cantor_signal(cfg.n, cfg.depth).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = &cfg.output {
        write_csv(path, &x).map_err(|e| CliError::io(path, e))?;
    }
    Ok(x)
}

/// SNR of an estimate against a reference; CSV, or PGM by extension.
pub fn eval(cfg: &ExperimentConfig) -> Result<KvDocument, CliError> {
    let load = |p: &PathBuf| -> Result<Vec<f64>, CliError> {
        let is_pgm = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm {
            read_pgm(p)
                .map(|img| img.to_unit())
                .map_err(|e| CliError::io(p, e))
        } else {
            read_csv(p).map_err(|e| CliError::io(p, e))
        }
    };
    let reference = load(cfg.reference.as_ref().expect("validated"))?;
    let estimate = load(cfg.estimate.as_ref().expect("validated"))?;
    let value = capped_snr(&reference, &estimate).map_err(|e| CliError::Usage(e.to_string()))?;
    let max_err = reference
        .iter()
        .zip(&estimate)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut doc = KvDocument::default();
    doc.sections.push(cfg.to_section());
    let mut s = KvSection::new("eval");
    s.push("length", reference.len());
    s.push("snr", num(value));
    s.push("max_abs_error", num(max_err));
    doc.sections.push(s);
    Ok(doc)
}

impl CliError {
    pub(crate) fn io(path: &Path, e: Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
