use std::fmt;
use std::io::Write;
use std::process::ExitCode;

use serde::Serialize;

use dustcoal::analysis::{
    self, closed_form, dirac_rates, mcs_records, nonmarkov_atom, nonmarkov_mc, reports_to_csv, reports_to_json,
    t0_dependence_reports, AnalysisError, CheckReport, ClosedForm, McsRecord, SampleStats, Times, VerifyConfig,
};
use dustcoal::dirac_exact::{DiracLaw, ExactError};
use dustcoal::engine::{simulate_f1_with, EngineError, EngineOptions, F1Path, Horizon};
use dustcoal::stream::{derive_stream, subseed};
use dustcoal::{format_rational, replicate, MeasureSpec, Weight};

use crate::args::{Cli, Command, Common, Format, McsArgs, NonmarkovArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ExactModeUnsupported(_) | EngineError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Engine(e) => e.into(),
            AnalysisError::Exact(e) => e.into(),
            AnalysisError::InvalidArgument(_) | AnalysisError::Degenerate(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

const DEFAULT_REPS: u64 = 1000;
const DEFAULT_VERIFY_REPS: u64 = 100_000;
const DEFAULT_NONMARKOV_REPS: u64 = 1_000_000;

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let common = &cli.common;
    configure_threads(common.threads)?;
    let seed = announce_seed(common.seed);
    let spec = &common.measure;
    match &cli.command {
        Command::MeasureInfo => emit(common, &measure_info(spec, common.format))?,
        Command::SimulateF1(a) => emit(common, &simulate_f1(spec, a.jumps as usize, common.reps.unwrap_or(DEFAULT_REPS), seed, common.format)?)?,
        Command::Mcs(a) => emit(common, &mcs(spec, a, common.reps.unwrap_or(DEFAULT_REPS), seed, common.format)?)?,
        Command::ExactDirac(a) => emit(common, &exact_dirac(spec, a.depth as usize, common.format)?)?,
        Command::Nonmarkov(a) => emit(common, &nonmarkov(spec, a, common.reps.unwrap_or(DEFAULT_NONMARKOV_REPS), seed, common)?)?,
        Command::Verify => {
            let mut config = VerifyConfig::new(common.reps.unwrap_or(DEFAULT_VERIFY_REPS), seed);
            config.z_max = common.zmax;
            let reports = analysis::run_verify(spec, &config)?;
            emit(common, &render_reports(&reports, common.format))?;
            let failed: Vec<&CheckReport> = reports.iter().filter(|r| !r.pass).collect();
            eprintln!("dustcoal: {} checks, {} failed", reports.len(), failed.len());
            for r in &failed {
                eprintln!("dustcoal: FAILED {} (target {}, estimate {}, z {})", r.name, r.target, r.estimate, r.z);
            }
            if !failed.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn configure_threads(threads: Option<u64>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot start {n} worker threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some_and(|n| n > 1) {
        eprintln!("dustcoal: built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

fn announce_seed(flag_or_env: Option<u64>) -> u64 {
    let from_flag = std::env::args().any(|a| a == "--seed" || a.starts_with("--seed="));
    let (seed, source) = match flag_or_env {
        Some(s) if from_flag => (s, "--seed"),
        Some(s) => (s, "DUSTCOAL_SEED"),
        None => (0, "default"),
    };
    eprintln!("dustcoal: seed = {seed} ({source})");
    seed
}

fn emit(common: &Common, text: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).expect("writing to memory");
    }
    for row in rows {
        w.serialize(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn render_reports(reports: &[CheckReport], format: Format) -> String {
    match format {
        Format::Csv => reports_to_csv(reports),
        Format::Json => to_json(&reports_to_json(reports)),
    }
}

#[derive(Serialize)]
struct Quantity {
    quantity: &'static str,
    value: f64,
    exact: String,
}

fn measure_info(spec: &MeasureSpec, format: Format) -> String {
    let m = spec.moments();
    let exact = m.exact.as_ref();
    let ex = |f: fn(&dustcoal::measures::ExactMoments) -> &dustcoal::BigRational| exact.map(|e| format_rational(f(e))).unwrap_or_default();
    let rows = vec![
        Quantity { quantity: "mu1", value: m.mu1, exact: ex(|e| &e.mu1) },
        Quantity { quantity: "mu2", value: m.mu2, exact: ex(|e| &e.mu2) },
        Quantity { quantity: "gamma", value: m.gamma, exact: ex(|e| &e.gamma) },
        Quantity { quantity: "alpha", value: m.alpha, exact: ex(|e| &e.alpha) },
        Quantity { quantity: "total_mass", value: m.total_mass, exact: ex(|e| &e.total_mass) },
        Quantity { quantity: "tau", value: m.tau, exact: ex(|e| &e.mu1) },
        Quantity { quantity: "rho", value: m.rho, exact: ex(|e| &e.rho) },
    ];
    match format {
        Format::Csv => to_csv(&rows, &[]),
        Format::Json => {
            let mut obj = serde_json::to_value(&m).expect("moments serialize");
            obj["measure"] = spec.to_string().into();
            if exact.is_some() {
                obj["exact"] = rows.iter().map(|r| (r.quantity.to_string(), serde_json::Value::from(r.exact.clone()))).collect();
            }
            to_json(&obj)
        }
    }
}

#[derive(Serialize)]
struct F1Row {
    replicate: u64,
    k: usize,
    merger: usize,
    jump_time: f64,
    f1_value: f64,
    f1_exact: String,
    stick: f64,
    stick_exact: String,
}

const F1_HEADER: &[&str] = &["replicate", "k", "merger", "jump_time", "f1_value", "f1_exact", "stick", "stick_exact"];

fn simulate_f1(spec: &MeasureSpec, jumps: usize, reps: u64, seed: u64, format: Format) -> Result<String, CliError> {
    let stream_seed = subseed(seed, "simulate-f1");
    let options = EngineOptions::checked();
    let rows: Vec<Vec<F1Row>> = dustcoal::with_weight!(spec, W => {
        replicate::collect(reps, |r| {
            let path: F1Path<W> = simulate_f1_with(spec, Horizon::Jumps(jumps), &options, &mut derive_stream(stream_seed, r))?;
            Ok::<_, EngineError>(
                (0..path.len())
                    .map(|k| F1Row {
                        replicate: r,
                        k: k + 1,
                        merger: path.jump_mergers[k],
                        jump_time: path.jump_times[k],
                        f1_value: path.values[k].to_f64(),
                        f1_exact: path.values[k].render(),
                        stick: path.sticks[k].to_f64(),
                        stick_exact: path.sticks[k].render(),
                    })
                    .collect(),
            )
        })?
    });
    let rows: Vec<F1Row> = rows.into_iter().flatten().collect();
    Ok(match format {
        Format::Csv => to_csv(&rows, F1_HEADER),
        Format::Json => to_json(&rows),
    })
}

const MCS_HEADER: &[&str] = &["replicate", "n", "M_n", "M_n_over_n", "f1_first", "f1_first_exact"];

fn mcs(spec: &MeasureSpec, a: &McsArgs, reps: u64, seed: u64, format: Format) -> Result<String, CliError> {
    if a.n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("--n values must be strictly increasing".into()));
    }
    let mut all: Vec<McsRecord> = Vec::new();
    for &n in &a.n {
        let records = mcs_records(spec, n, reps, seed)?;
        let gaps = SampleStats::from_slice(&records.iter().map(|r| (r.ratio - r.f1_first).abs()).collect::<Vec<_>>());
        eprintln!("dustcoal: n = {n}: mean |M_n/n - f1[1]| = {} (stderr {})", gaps.mean(), gaps.stderr());
        all.extend(records);
    }
    Ok(match format {
        Format::Csv => to_csv(&all, MCS_HEADER),
        Format::Json => to_json(&all),
    })
}

fn exact_dirac(spec: &MeasureSpec, depth: usize, format: Format) -> Result<String, CliError> {
    let p = spec
        .exact_dirac()
        .ok_or_else(|| CliError::Usage(format!("exact-dirac needs --measure dirac:<rational p>, got {spec}")))?;
    let dirac = DiracLaw::new(p)?;
    let law = dirac.enumerate(depth)?;
    eprintln!(
        "dustcoal: {} values from {} index sets, total mass {}",
        law.atoms.len(),
        law.representations().count(),
        format_rational(&law.total_mass)
    );
    Ok(match format {
        Format::Csv => law.to_csv(),
        Format::Json => to_json(&law.to_json()),
    })
}

#[derive(Serialize)]
struct NonmarkovOutput {
    tau: f64,
    rho: f64,
    p: f64,
    closed_form: Vec<ClosedFormRow>,
    reports: serde_json::Value,
}

#[derive(Serialize)]
struct ClosedFormRow {
    form: ClosedForm,
    t0: f64,
    t1: f64,
    t2: f64,
    joint2: f64,
    joint3: f64,
    conditional: f64,
}

fn nonmarkov(spec: &MeasureSpec, a: &NonmarkovArgs, reps: u64, seed: u64, common: &Common) -> Result<String, CliError> {
    if a.t0.is_empty() || a.t0.len() > 2 {
        return Err(CliError::Usage("--t0 takes one or two values".into()));
    }
    let times: Vec<Times> = a.t0.iter().map(|&t0| Times::new(t0, a.t1, a.t2)).collect::<Result<_, _>>()?;
    let p = nonmarkov_atom(spec)?;
    let (tau, rho, pf) = dirac_rates(&p);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut counts = Vec::new();
    for &t in &times {
        let mc = nonmarkov_mc(spec, t, reps, seed)?;
        for form in [ClosedForm::Derived, ClosedForm::Displayed] {
            let v = closed_form(form, tau, rho, pf, t)?;
            rows.push(ClosedFormRow { form, t0: t.t0, t1: t.t1, t2: t.t2, joint2: v.joint2, joint3: v.joint3, conditional: v.conditional });
            eprintln!("dustcoal: {} closed form at t0 = {}: conditional {}", form.label(), t.t0, v.conditional);
            reports.extend(mc.reports(&v, form.label(), common.zmax)?);
        }
        counts.push(mc);
    }
    if let [a0, b0] = counts.as_slice() {
        for form in [ClosedForm::Derived, ClosedForm::Displayed] {
            let va = closed_form(form, tau, rho, pf, a0.times)?;
            let vb = closed_form(form, tau, rho, pf, b0.times)?;
            let mut r = t0_dependence_reports(a0, b0, va.conditional - vb.conditional, form.label(), common.zmax)?;
            if form == ClosedForm::Displayed {
                r.remove(0);
            }
            reports.extend(r);
        }
    }
    Ok(match common.format {
        Format::Csv => reports_to_csv(&reports),
        Format::Json => to_json(&NonmarkovOutput { tau, rho, p: pf, closed_form: rows, reports: reports_to_json(&reports) }),
    })
}
