//! Selection and prediction metrics, the replication experiment and the
//! comparison report.
//!
//! Each replication tunes every method on its training/validation split and
//! scores it on the test split. Aggregates are the median over replications
//! and the standard error `sd / √R` (sample standard deviation).

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::baseline::enet_path;
use crate::error::{Error, Result};
use crate::lasso::lambda_max;
use crate::model::ActiveSet;
use crate::pipeline::{
    default_lambda1_grid, default_lambda2_grid, log_grid, tune_dlselect_ridge, tune_lasso,
    tune_ridge, PipelineOptions, DEFAULT_GRID_SIZE,
};
use crate::sim::{DesignSpec, FixedDesign, ReplicationData};

/// `|Ŝ ∩ S| / |S|`.
pub fn tpr(selected: &ActiveSet, truth: &ActiveSet) -> Result<f64> {
    same_dimension(selected, truth)?;
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    Ok(selected.intersection_len(truth) as f64 / truth.len() as f64)
}

/// `|Ŝ ∩ Sᶜ| / |Ŝ|`, zero when nothing is selected.
pub fn fdr(selected: &ActiveSet, truth: &ActiveSet) -> Result<f64> {
    same_dimension(selected, truth)?;
    if selected.is_empty() {
        return Ok(0.0);
    }
    let false_hits = selected.len() - selected.intersection_len(truth);
    Ok(false_hits as f64 / selected.len() as f64)
}

fn same_dimension(a: &ActiveSet, b: &ActiveSet) -> Result<()> {
    if a.p() != b.p() {
        return Err(Error::DimensionMismatch(format!(
            "sets over p = {} and p = {}",
            a.p(),
            b.p()
        )));
    }
    Ok(())
}

/// `(1/n)‖Y − Ŷ‖²`.
pub fn mse(y: &DVector<f64>, yhat: &DVector<f64>) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch(format!(
            "Y has length {}, prediction has length {}",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok((y - yhat).norm_squared() / y.len() as f64)
}

/// `(median, sd / √R)`. The standard error of a single value is 0.
///
/// Works on a sorted copy, so the result does not depend on the order of
/// `values` even in the last bit.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let r = v.len();
    let median = if r % 2 == 1 {
        v[r / 2]
    } else {
        0.5 * (v[r / 2 - 1] + v[r / 2])
    };
    if r == 1 {
        return Ok((median, 0.0));
    }
    let mean = v.iter().sum::<f64>() / r as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    Ok((median, (var / r as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Lasso,
    Ridge,
    Enet,
    DlselectRidge,
}

impl Method {
    /// Report order.
    pub const ALL: [Method; 4] = [
        Method::Lasso,
        Method::Ridge,
        Method::Enet,
        Method::DlselectRidge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lasso => "Lasso",
            Method::Ridge => "Ridge",
            Method::Enet => "Enet",
            Method::DlselectRidge => "DLSelect+Ridge",
        }
    }

    /// Ridge keeps every column, so it has no selection to score.
    pub fn selects(self) -> bool {
        self != Method::Ridge
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(Method::Lasso),
            "ridge" => Ok(Method::Ridge),
            "enet" | "elastic-net" | "elasticnet" => Ok(Method::Enet),
            "dlselect+ridge" | "dlselect" | "dlselect-ridge" => Ok(Method::DlselectRidge),
            _ => Err(Error::InvalidSpec(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    /// Test MSE per successful replication, in replication order.
    pub mse: Vec<f64>,
    /// `None` for Ridge.
    pub tpr: Option<Vec<f64>>,
    pub fdr: Option<Vec<f64>>,
    pub mse_median: f64,
    pub mse_se: f64,
    pub tpr_median: Option<f64>,
    pub fdr_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedReplication {
    pub rep_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Training sample size.
    pub n: usize,
    /// Successful replications.
    pub reps: usize,
    pub methods: Vec<MethodResult>,
    pub failed: Vec<FailedReplication>,
    /// Replications where the Lasso support was not inside the dual active
    /// set at the tuned `λ₁`.
    pub containment_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    /// Size of the `λ₁` grid, built per replication from the training `λ_max`.
    pub grid1_size: usize,
    pub grid2: Vec<f64>,
    /// `λ₂` grid for the Elastic-Net, whose two-dimensional search costs
    /// `|grid₁| · |enet_grid2|` fits.
    pub enet_grid2: Vec<f64>,
    pub pipeline: PipelineOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            grid1_size: DEFAULT_GRID_SIZE,
            grid2: default_lambda2_grid(DEFAULT_GRID_SIZE),
            enet_grid2: log_grid(1e4, 1e-4, 10),
            pipeline: PipelineOptions::default(),
        }
    }
}

/// Scores of one method on one replication.
#[derive(Debug, Clone, Copy)]
struct Score {
    method: Method,
    mse: f64,
    tpr: Option<f64>,
    fdr: Option<f64>,
}

struct RepOutcome {
    scores: Vec<Score>,
    containment_ok: bool,
}

fn score_selection(
    method: Method,
    data: &ReplicationData,
    beta: &DVector<f64>,
    selected: &ActiveSet,
) -> Result<Score> {
    Ok(Score {
        method,
        mse: mse(data.test.y(), &(data.test.x() * beta))?,
        tpr: Some(tpr(selected, &data.support)?),
        fdr: Some(fdr(selected, &data.support)?),
    })
}

fn run_replication(data: &ReplicationData, config: &ExperimentConfig) -> Result<RepOutcome> {
    let grid1 = default_lambda1_grid(lambda_max(&data.train), config.grid1_size);
    let opts = &config.pipeline;
    let wants = |m| config.methods.contains(&m);
    let mut scores = Vec::new();
    let mut containment_ok = true;

    let dl = if wants(Method::DlselectRidge) {
        Some(tune_dlselect_ridge(
            &data.train,
            &data.val,
            &grid1,
            &config.grid2,
            opts,
        )?)
    } else {
        None
    };
    if let Some(res) = &dl {
        containment_ok = res.lasso.support().is_subset(&res.selected);
    }

    for &method in &Method::ALL {
        if !wants(method) {
            continue;
        }
        let score = match method {
            Method::Lasso => {
                let fit = match &dl {
                    Some(res) => res.lasso.clone(),
                    None => tune_lasso(&data.train, &data.val, &grid1, opts)?.0,
                };
                score_selection(method, data, &fit.beta, &fit.support())?
            }
            Method::Ridge => {
                let (fit, _) = tune_ridge(&data.train, &data.val, &config.grid2)?;
                Score {
                    method,
                    mse: mse(data.test.y(), &(data.test.x() * &fit.beta))?,
                    tpr: None,
                    fdr: None,
                }
            }
            Method::Enet => {
                let beta = tune_enet(data, &grid1, &config.enet_grid2, opts)?;
                score_selection(method, data, &beta, &ActiveSet::support(&beta))?
            }
            Method::DlselectRidge => {
                let res = dl.as_ref().expect("fitted above");
                score_selection(method, data, &res.beta, &res.selected)?
            }
        };
        scores.push(score);
    }
    Ok(RepOutcome {
        scores,
        containment_ok,
    })
}

/// Joint grid search over `(λ₂, λ₁)`; ties go to the larger `λ₂`, then the
/// larger `λ₁`.
fn tune_enet(
    data: &ReplicationData,
    grid1: &[f64],
    grid2: &[f64],
    opts: &PipelineOptions,
) -> Result<DVector<f64>> {
    let grid2 = crate::pipeline::normalize_grid(grid2)?;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for &l2 in &grid2 {
        for fit in enet_path(&data.train, grid1, l2, &opts.solver)? {
            let err = mse(data.val.y(), &(data.val.x() * &fit.beta))?;
            if best.as_ref().is_none_or(|(b, _)| err < b - 1e-12) {
                best = Some((err, fit.beta));
            }
        }
    }
    Ok(best.expect("grids are nonempty").1)
}

/// Run `spec.reps` replications in parallel and aggregate per method.
///
/// A replication in which any method fails is excluded from every method's
/// sequence and listed in [`ExperimentResult::failed`]. If every
/// replication fails the first error is returned.
pub fn run_experiment(spec: &DesignSpec, config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.methods.is_empty() {
        return Err(Error::InvalidSpec("no methods requested".into()));
    }
    if spec.s == 0 && config.methods.iter().any(|m| m.selects()) {
        return Err(Error::EmptyTruth);
    }
    let design = FixedDesign::new(spec)?;
    let outcomes: Vec<Result<RepOutcome>> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| run_replication(&design.replicate(rep)?, config))
        .collect();

    let mut ok = Vec::new();
    let mut failed = Vec::new();
    let mut first_error = None;
    for (rep_index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => ok.push(o),
            Err(e) => {
                log::warn!("replication {rep_index} failed and is excluded: {e}");
                failed.push(FailedReplication {
                    rep_index,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        return Err(first_error.expect("at least one replication ran"));
    }

    let containment_violations = ok.iter().filter(|o| !o.containment_ok).count();
    let mut methods = Vec::new();
    for &method in Method::ALL.iter().filter(|m| config.methods.contains(m)) {
        let scores: Vec<Score> = ok
            .iter()
            .map(|o| {
                *o.scores
                    .iter()
                    .find(|s| s.method == method)
                    .expect("scored")
            })
            .collect();
        methods.push(method_result(method, &scores)?);
    }
    Ok(ExperimentResult {
        n: spec.n_train,
        reps: ok.len(),
        methods,
        failed,
        containment_violations,
    })
}

fn method_result(method: Method, scores: &[Score]) -> Result<MethodResult> {
    let mse: Vec<f64> = scores.iter().map(|s| s.mse).collect();
    let tpr: Option<Vec<f64>> = scores.iter().map(|s| s.tpr).collect();
    let fdr: Option<Vec<f64>> = scores.iter().map(|s| s.fdr).collect();
    let (mse_median, mse_se) = aggregate(&mse)?;
    let tpr_median = tpr.as_deref().map(aggregate).transpose()?.map(|a| a.0);
    let fdr_median = fdr.as_deref().map(aggregate).transpose()?.map(|a| a.0);
    Ok(MethodResult {
        method,
        mse,
        tpr,
        fdr,
        mse_median,
        mse_se,
        tpr_median,
        fdr_median,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidSpec(format!("unknown report format {s:?}"))),
        }
    }
}

const CSV_HEADER: [&str; 11] = [
    "n",
    "method",
    "mse(se)",
    "tpr",
    "fdr",
    "mse_median",
    "mse_se",
    "tpr_median",
    "fdr_median",
    "reps",
    "failed",
];

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))
}

fn full(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// One table row per `(experiment, method)`, methods in report order.
///
/// CSV carries the rounded table cells followed by full-precision values so
/// it can be parsed back with [`parse_csv_report`].
pub fn write_report<W: Write>(
    results: &[ExperimentResult],
    format: ReportFormat,
    out: W,
) -> Result<()> {
    let rows: Vec<ReportRow> = results
        .iter()
        .flat_map(|r| {
            r.methods.iter().map(|m| ReportRow {
                n: r.n,
                method: m.method,
                mse_median: m.mse_median,
                mse_se: m.mse_se,
                tpr_median: m.tpr_median,
                fdr_median: m.fdr_median,
                reps: r.reps,
                failed: r.failed.len(),
            })
        })
        .collect();
    write_report_rows(&rows, format, out)
}

/// [`write_report`] for rows already reduced to medians, such as those read
/// back by [`parse_csv_report`]. Writing parsed rows reproduces the
/// original output byte for byte.
pub fn write_report_rows<W: Write>(rows: &[ReportRow], format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in rows {
                w.write_record([
                    r.n.to_string(),
                    r.method.to_string(),
                    format!("{:.2}({:.2})", r.mse_median, r.mse_se),
                    fmt2(r.tpr_median),
                    fmt2(r.fdr_median),
                    r.mse_median.to_string(),
                    r.mse_se.to_string(),
                    full(r.tpr_median),
                    full(r.fdr_median),
                    r.reps.to_string(),
                    r.failed.to_string(),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Markdown => {
            let mut out = out;
            writeln!(out, "| n | Method | MSE(SE) | TPR | FDR |")?;
            writeln!(out, "|---|---|---|---|---|")?;
            for r in rows {
                writeln!(
                    out,
                    "| {} | {} | {:.2}({:.2}) | {} | {} |",
                    r.n,
                    r.method,
                    r.mse_median,
                    r.mse_se,
                    fmt2(r.tpr_median),
                    fmt2(r.fdr_median)
                )?;
            }
        }
    }
    Ok(())
}

/// A row of a report table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub method: Method,
    pub mse_median: f64,
    pub mse_se: f64,
    pub tpr_median: Option<f64>,
    pub fdr_median: Option<f64>,
    pub reps: usize,
    pub failed: usize,
}

pub fn parse_csv_report<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let bad = |m: String| Error::InvalidSpec(format!("report: {m}"));
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(format!("bad number {s:?}")))
    };
    let opt = |s: &str| {
        if s == "NA" {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| bad(format!("bad count {s:?}")))
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(ReportRow {
            n: count(&rec[0])?,
            method: rec[1].parse()?,
            mse_median: num(&rec[5])?,
            mse_se: num(&rec[6])?,
            tpr_median: opt(&rec[7])?,
            fdr_median: opt(&rec[8])?,
            reps: count(&rec[9])?,
            failed: count(&rec[10])?,
        });
    }
    Ok(rows)
}
