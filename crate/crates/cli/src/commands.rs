use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dlselect::baseline::fit_enet;
use dlselect::conditions::{CandidateMargin, ConditionReport, Witness};
use dlselect::dual::dual_vector_with;
use dlselect::eval::{parse_csv_report, write_report, write_report_rows};
use dlselect::fixtures::{duplicated_active_covariance, equicorrelated_noise_covariance};
use dlselect::io::{read_csv_table, read_data_csv, read_matrix_csv, write_matrix_csv};
use dlselect::pipeline::{default_lambda1_grid, default_lambda2_grid, tune_dlselect_ridge};
use dlselect::sim::{derive_seed, DesignSpec, FixedDesign, SplitTag};
use dlselect::{
    check_ic, check_pic, check_psd, dlselect_ridge, empirical_covariance, fit_lasso, fit_ridge,
    lambda_max, run_experiment, standardize, ActiveSet, DMatrix, DVector, Dataset, Error,
    PipelineResult, ReportFormat, SignVector,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{DataSource, Example, FitPenalty, MatrixSource, RunConfig, SelectMode};
use crate::CliError;

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match config {
        RunConfig::Generate { spec, rep, out_dir } => generate(spec, *rep, out_dir),
        RunConfig::Fit {
            data,
            penalty,
            solver,
            out,
        } => fit(data, penalty, solver, out.as_deref()),
        RunConfig::Select {
            data,
            mode,
            pipeline,
            out,
        } => select(data, mode, pipeline, out.as_deref()),
        RunConfig::Check {
            source,
            has_header,
            rho,
            support,
            signs,
            pic,
            candidates_out,
        } => check(
            source,
            *has_header,
            *rho,
            support.as_deref(),
            signs.as_deref(),
            pic,
            candidates_out.as_deref(),
        ),
        RunConfig::Benchmark {
            specs,
            experiment,
            out,
            jobs,
        } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {jobs:?} workers: {e}")))?;
            pool.install(|| benchmark(specs, experiment, out.as_deref()))
        }
        RunConfig::Report {
            inputs,
            format,
            out,
        } => report(inputs, *format, out.as_deref()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        CliError::Core(Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    })
}

/// Writer for `path`, or standard output.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Short decimal form for reports: up to ten decimals with trailing zeros
/// dropped, scientific notation for very small or large magnitudes.
fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    if v.abs() < 1e-4 || v.abs() >= 1e10 {
        return format!("{v:.6e}");
    }
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

// ---- generate ---------------------------------------------------------

fn generate(spec: &DesignSpec, rep: usize, out_dir: &Path) -> Result<(), CliError> {
    let design = FixedDesign::new(spec)?;
    let data = design.replicate(rep)?;
    fs::create_dir_all(out_dir).map_err(|e| {
        CliError::Core(Error::Input {
            path: out_dir.to_path_buf(),
            message: e.to_string(),
        })
    })?;
    let mut header: Vec<String> = (1..=spec.p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    for (name, ds) in [
        ("train", &data.train),
        ("val", &data.val),
        ("test", &data.test),
    ] {
        let mut table = ds.x().clone().insert_column(spec.p, 0.0);
        table.column_mut(spec.p).copy_from(ds.y());
        let path = out_dir.join(format!("{name}.csv"));
        write_matrix_csv(create(&path)?, Some(&header), &table)?;
    }

    let mut w = csv::Writer::from_writer(create(&out_dir.join("truth.csv"))?);
    w.write_record(["column", "beta", "active"])
        .map_err(Error::from)?;
    for (j, b) in data.beta.iter().enumerate() {
        w.write_record([
            (j + 1).to_string(),
            b.to_string(),
            u8::from(data.support.contains(j)).to_string(),
        ])
        .map_err(Error::from)?;
    }
    w.flush()?;

    let mut m = toml::Table::new();
    let int = |v: usize| toml::Value::Integer(v as i64);
    m.insert("design".into(), spec.kind.name().into());
    m.insert("p".into(), int(spec.p));
    m.insert("rho".into(), spec.rho.into());
    m.insert("block_size".into(), int(spec.block_size));
    m.insert("num_blocks".into(), int(spec.num_blocks));
    m.insert("s".into(), int(spec.s));
    m.insert("sigma".into(), spec.sigma.into());
    m.insert("n_train".into(), int(spec.n_train));
    m.insert("n_val".into(), int(spec.n_val));
    m.insert("n_test".into(), int(spec.n_test));
    m.insert("design_seed".into(), spec.design_seed.to_string().into());
    m.insert("rep".into(), int(rep));
    m.insert("standardized".into(), true.into());
    m.insert(
        "support".into(),
        toml::Value::Array(data.support.iter().map(|j| int(j + 1)).collect()),
    );
    let mut seeds = toml::Table::new();
    let stream = data.replication_seed;
    for (key, s, tag) in [
        ("design_train", 0, SplitTag::DesignTrain),
        ("design_val", 0, SplitTag::DesignVal),
        ("design_test", 0, SplitTag::DesignTest),
        ("noise_train", stream, SplitTag::NoiseTrain),
        ("noise_val", stream, SplitTag::NoiseVal),
        ("noise_test", stream, SplitTag::NoiseTest),
    ] {
        // as strings: TOML integers are signed 64-bit
        seeds.insert(
            key.into(),
            derive_seed(spec.design_seed, s, tag).to_string().into(),
        );
    }
    m.insert("seeds".into(), seeds.into());
    let mut f = create(&out_dir.join("manifest.toml"))?;
    write!(f, "{m}")?;
    f.flush()?;
    log::info!("wrote replication {rep} to {}", out_dir.display());
    Ok(())
}

// ---- fit / select -----------------------------------------------------

fn load(data: &DataSource) -> Result<(Dataset, Vec<String>), CliError> {
    let raw = read_data_csv(&data.path, data.has_header, &data.response)?;
    Ok((standardize(raw.x, raw.y)?, raw.names))
}

/// Extra CSV column names and a per-column value builder.
type ExtraColumns<'a> = (&'a [&'a str], &'a dyn Fn(usize) -> Vec<String>);

/// A design and its response.
type Part = (DMatrix<f64>, DVector<f64>);

fn write_coefficients(
    out: Option<&Path>,
    ds: &Dataset,
    names: &[String],
    beta: &DVector<f64>,
    extra: Option<ExtraColumns<'_>>,
) -> Result<(), CliError> {
    let record = ds.std_record().expect("loaded data is standardized");
    let (intercept, original) = record.to_original(beta);
    let mut w = csv::Writer::from_writer(output(out)?);
    let mut header = vec!["index", "name", "coef", "coef_original"];
    if let Some((cols, _)) = extra {
        header.extend_from_slice(cols);
    }
    w.write_record(&header).map_err(Error::from)?;
    let blanks = extra.map_or(0, |(cols, _)| cols.len());
    let mut first = vec![
        "0".to_string(),
        "(intercept)".into(),
        "0".into(),
        intercept.to_string(),
    ];
    first.extend(std::iter::repeat_n(String::new(), blanks));
    w.write_record(&first).map_err(Error::from)?;
    for j in 0..beta.len() {
        let mut row = vec![
            (j + 1).to_string(),
            names[j].clone(),
            beta[j].to_string(),
            original[j].to_string(),
        ];
        if let Some((_, f)) = extra {
            row.extend(f(j));
        }
        w.write_record(&row).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn fit(
    data: &DataSource,
    penalty: &FitPenalty,
    solver: &dlselect::SolverOptions,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (ds, names) = load(data)?;
    let lmax = lambda_max(&ds);
    let beta = match *penalty {
        FitPenalty::Lasso { lambda1 } => {
            let f = fit_lasso(&ds, lambda1, solver)?;
            eprintln!(
                "lasso: lambda1 {}, lambda_max {}, sweeps {}, kkt_residual {}, objective {}, nonzero {}",
                num(lambda1),
                num(lmax),
                f.iterations,
                num(f.kkt_residual),
                num(f.objective),
                f.support().len()
            );
            if f.non_unique {
                log::warn!("least-squares solution is not unique; returned the minimum-norm one");
            }
            f.beta
        }
        FitPenalty::Ridge { lambda2 } => {
            let f = fit_ridge(&ds, lambda2)?;
            eprintln!(
                "ridge: lambda2 {}, normal_residual {}",
                num(lambda2),
                num(f.normal_residual)
            );
            f.beta
        }
        FitPenalty::Enet { lambda1, lambda2 } => {
            let f = fit_enet(&ds, lambda1, lambda2, solver)?;
            eprintln!(
                "enet: lambda1 {}, lambda2 {}, lambda_max {}, sweeps {}, kkt_residual {}, nonzero {}",
                num(lambda1),
                num(lambda2),
                num(lmax),
                f.iterations,
                num(f.kkt_residual),
                f.support().len()
            );
            f.beta
        }
    };
    write_coefficients(out, &ds, &names, &beta, None)
}

/// Rows of `x` and `y` split into a training part and a validation part of
/// about `val_frac · n` rows, by a seeded shuffle. Both parts keep the
/// original row order.
fn split_rows(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    val_frac: f64,
    seed: u64,
) -> Result<(Part, Part), CliError> {
    let n = x.nrows();
    if n < 4 {
        return Err(CliError::Usage(format!(
            "need at least 4 rows to tune, got {n}"
        )));
    }
    let n_val = ((n as f64 * val_frac).round() as usize).clamp(2, n - 2);
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut val, mut train) = (rows[..n_val].to_vec(), rows[n_val..].to_vec());
    val.sort_unstable();
    train.sort_unstable();
    let take = |r: &[usize]| (x.select_rows(r), y.select_rows(r));
    Ok((take(&train), take(&val)))
}

fn select(
    data: &DataSource,
    mode: &SelectMode,
    opts: &dlselect::PipelineOptions,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let raw = read_data_csv(&data.path, data.has_header, &data.response)?;
    let (train, res, n_val) = match *mode {
        SelectMode::Fixed { lambda1, lambda2 } => {
            let ds = standardize(raw.x, raw.y)?;
            let res = dlselect_ridge(&ds, lambda1, lambda2, opts)?;
            (ds, res, 0)
        }
        SelectMode::Tune {
            grid_size,
            seed,
            val_frac,
        } => {
            let ((xt, yt), (xv, yv)) = split_rows(&raw.x, &raw.y, val_frac, seed)?;
            let n_val = xv.nrows();
            let train = standardize(xt, yt)?;
            let val = standardize(xv, yv)?;
            let grid1 = default_lambda1_grid(lambda_max(&train), grid_size);
            let grid2 = default_lambda2_grid(grid_size);
            let res = tune_dlselect_ridge(&train, &val, &grid1, &grid2, opts)?;
            (train, res, n_val)
        }
    };
    let dual = dual_vector_with(&train, &res.lasso, opts.tol_active)?;
    let lambda1 = res.lambda1;
    summarize_selection(&train, &raw.names, &res, n_val);

    let margin = |j: usize| 1.0 - dual.correlations[j].abs() / lambda1;
    let extra = |j: usize| {
        vec![
            u8::from(res.selected.contains(j)).to_string(),
            res.lasso.beta[j].to_string(),
            margin(j).to_string(),
        ]
    };
    write_coefficients(
        out,
        &train,
        &raw.names,
        &res.beta,
        Some((&["selected", "lasso_coef", "dual_margin"], &extra)),
    )
}

fn summarize_selection(train: &Dataset, names: &[String], res: &PipelineResult, n_val: usize) {
    let d = &res.diagnostics;
    let chosen: Vec<String> = res
        .selected
        .iter()
        .map(|j| format!("{} ({})", j + 1, names[j]))
        .collect();
    eprintln!(
        "lambda1: {} (lambda_max {})",
        num(res.lambda1),
        num(lambda_max(train))
    );
    eprintln!("lambda2: {}", num(res.lambda2));
    if n_val > 0 {
        eprintln!("rows: {} train, {} validation", train.n(), n_val);
    }
    eprintln!("selected {}: {}", res.selected.len(), chosen.join(", "));
    eprintln!("lasso support size: {}", res.lasso.support().len());
    eprintln!(
        "dual margins: feasibility {}, separation {}, tol_active {}",
        num(d.feasibility_margin),
        num(d.separation_margin),
        num(d.tol_active)
    );
    eprintln!("lasso kkt residual: {}", num(d.lasso_kkt_residual));
    if d.fallback {
        eprintln!("note: dual selection was empty; used the most correlated column");
    }
}

// ---- check ------------------------------------------------------------

fn check(
    source: &MatrixSource,
    has_header: bool,
    rho: Option<f64>,
    support: Option<&[usize]>,
    signs: Option<&[i8]>,
    pic_opts: &dlselect::PicOptions,
    candidates_out: Option<&Path>,
) -> Result<(), CliError> {
    let (c, default_support): (DMatrix<f64>, Vec<usize>) = match source {
        MatrixSource::Covariance(path) => (read_matrix_csv(path, has_header, rho)?, vec![]),
        MatrixSource::Design(path) => {
            let x = read_csv_table(path, has_header, None)?.values;
            let n = x.nrows();
            (
                empirical_covariance(&standardize(x, DVector::zeros(n))?),
                vec![],
            )
        }
        MatrixSource::Example(e) => {
            let rho = rho.expect("validated: examples need rho");
            match e {
                Example::FiveByFive => (equicorrelated_noise_covariance(rho), (0..4).collect()),
                Example::SevenBySeven => (duplicated_active_covariance(rho), (0..6).collect()),
            }
        }
    };
    let p = c.nrows();
    let indices = support.map_or(default_support, <[usize]>::to_vec);
    let support = ActiveSet::new(indices, p)?;
    let signs = match signs {
        None => SignVector::positive_on(&support),
        Some(s) if s.len() == support.len() => {
            let mut v = vec![0i8; p];
            for (j, &sign) in support.iter().zip(s) {
                v[j] = sign;
            }
            SignVector::new(v)?
        }
        Some(s) => {
            return Err(CliError::Usage(format!(
                "{} signs for a support of size {}",
                s.len(),
                support.len()
            )))
        }
    };

    let mut out = BufWriter::new(io::stdout().lock());
    let psd = check_psd(&c)?;
    writeln!(
        out,
        "PSD: {}; min_eigenvalue={}",
        holds(&psd),
        num(psd.margin)
    )?;
    match check_ic(&c, &support, &signs) {
        Ok(ic) => {
            let worst = match &ic.witness {
                Some(Witness::Row(j)) => format!("; worst_row={}", j + 1),
                _ => String::new(),
            };
            writeln!(out, "IC: {}; margin={}{worst}", holds(&ic), num(ic.margin))?;
        }
        Err(Error::SingularC11(cond)) => {
            writeln!(out, "IC: SingularC11; condition={}", num(cond))?;
        }
        Err(e) => return Err(e.into()),
    }
    let pic = check_pic(&c, &support, &signs, pic_opts)?;
    writeln!(
        out,
        "PIC: {}; margin={}; rank={}; candidates={}",
        holds(&pic),
        num(pic.margin),
        pic.rank.unwrap_or(0),
        pic.details.len()
    )?;
    for d in &pic.details {
        writeln!(
            out,
            "candidate {}: margin={}",
            one_based(d, ","),
            num(d.margin)
        )?;
    }
    out.flush()?;

    if let Some(path) = candidates_out {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["candidate", "indices", "margin"])
            .map_err(Error::from)?;
        for (k, d) in pic.details.iter().enumerate() {
            w.write_record([(k + 1).to_string(), one_based(d, " "), d.margin.to_string()])
                .map_err(Error::from)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn holds(r: &ConditionReport) -> &'static str {
    if r.holds {
        "holds"
    } else {
        "fails"
    }
}

fn one_based(d: &CandidateMargin, sep: &str) -> String {
    d.indices
        .iter()
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

// ---- benchmark / report -----------------------------------------------

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{ext}"));
    PathBuf::from(s)
}

fn benchmark(
    specs: &[DesignSpec],
    config: &dlselect::ExperimentConfig,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut results = Vec::with_capacity(specs.len());
    for spec in specs {
        log::info!(
            "{} p={} n={} rho={} reps={}",
            spec.kind,
            spec.p,
            spec.n_train,
            spec.rho,
            spec.reps
        );
        let r = run_experiment(spec, config)?;
        if !r.failed.is_empty() {
            eprintln!(
                "n={}: {} of {} replications failed and were excluded",
                r.n,
                r.failed.len(),
                spec.reps
            );
        }
        if r.containment_violations > 0 {
            eprintln!(
                "n={}: Lasso support outside the dual active set in {} replications",
                r.n, r.containment_violations
            );
        }
        results.push(r);
    }
    match out {
        Some(prefix) => {
            let mut csv = create(&with_suffix(prefix, "csv"))?;
            write_report(&results, ReportFormat::Csv, &mut csv)?;
            csv.flush()?;
            let mut md = create(&with_suffix(prefix, "md"))?;
            write_report(&results, ReportFormat::Markdown, &mut md)?;
            md.flush()?;
        }
        None => {
            let mut o = output(None)?;
            write_report(&results, ReportFormat::Markdown, &mut o)?;
            o.flush()?;
        }
    }
    Ok(())
}

fn report(inputs: &[PathBuf], format: ReportFormat, out: Option<&Path>) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for path in inputs {
        let f = File::open(path).map_err(|e| {
            CliError::Core(Error::Input {
                path: path.clone(),
                message: e.to_string(),
            })
        })?;
        rows.extend(parse_csv_report(f).map_err(|e| {
            CliError::Core(Error::Input {
                path: path.clone(),
                message: e.to_string(),
            })
        })?);
    }
    let mut o = output(out)?;
    write_report_rows(&rows, format, &mut o)?;
    o.flush()?;
    Ok(())
}
