use std::time::Instant;

use rayon::prelude::*;

use ergopath::engine::{ErgodicEngine, HistogramSpec, MarginalStats, NoFunctional, RunOptions};
use ergopath::models::{HestonParams, PriceModel};
use ergopath::oracles::{cir_direct_stationary_price, levy_moment_oracle, ou_stationary_check, OracleEstimate};
use ergopath::pricing::{implied_vol, price_grid, AsianSpec, GridEstimate, GridRequest, OptionKind, Payoff};
use ergopath::rng::stream_rng;

use crate::config::{ConfigError, ModelConfig, RunConfig};
use crate::csv::{fmt_num, Table};

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(ergopath::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<ergopath::Error> for CliError {
    fn from(e: ergopath::Error) -> Self {
        match e {
            ergopath::Error::Domain { .. } => CliError::Config(e.into()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Runtime knobs that are not part of the simulated model.
#[derive(Debug, Clone, Copy)]
pub struct Runtime {
    pub threads: usize,
    pub timing: bool,
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool")
}

/// Stream number of replication `rep` at maturity index `m`.
pub fn job_stream(maturity_index: usize, replications: usize, rep: usize) -> u64 {
    (maturity_index * replications + rep) as u64
}

fn run_job<M: PriceModel>(model: &M, cfg: &RunConfig, request: &GridRequest<'_>, stream: u64) -> CliResult<GridEstimate> {
    let mut driver = model.driver(stream_rng(cfg.seed, stream))?;
    Ok(price_grid(model, &mut driver, cfg.schedule.build(), request, cfg.iters)?)
}

/// One reduced price per (maturity, strike).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRow {
    pub maturity: f64,
    pub strike: f64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Price the whole (maturity × strike) grid. Replications run in parallel
/// and are reduced in job order, so the result does not depend on the
/// number of threads.
pub fn price_rows(cfg: &RunConfig, payoff: Payoff, rt: Runtime) -> CliResult<Vec<PriceRow>> {
    let jobs: Vec<(usize, usize)> = (0..cfg.maturities.len()).flat_map(|m| (0..cfg.replications).map(move |r| (m, r))).collect();
    let results: Vec<CliResult<GridEstimate>> = pool(rt.threads).install(|| {
        jobs.par_iter()
            .map(|&(m, rep)| {
                let request = GridRequest {
                    strikes: &cfg.strikes,
                    maturity: cfg.maturities[m],
                    kind: cfg.kind,
                    payoff,
                    use_parity: cfg.parity,
                };
                let stream = job_stream(m, cfg.replications, rep);
                match &cfg.model {
                    ModelConfig::Heston(p) => run_job(p, cfg, &request, stream),
                    ModelConfig::Bns(p) => run_job(p, cfg, &request, stream),
                }
            })
            .collect()
    });
    let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let reps = cfg.replications as f64;
    let mut rows = Vec::new();
    for (m, &maturity) in cfg.maturities.iter().enumerate() {
        let group = &results[m * cfg.replications..(m + 1) * cfg.replications];
        for (j, &strike) in cfg.strikes.iter().enumerate() {
            let estimate = group.iter().map(|g| g.prices[j].value).sum::<f64>() / reps;
            let var = group.iter().map(|g| g.prices[j].std_error.powi(2)).sum::<f64>();
            rows.push(PriceRow {
                maturity,
                strike,
                estimate,
                std_error: var.sqrt() / reps,
            });
        }
    }
    Ok(rows)
}

fn kind_name(kind: OptionKind) -> &'static str {
    match kind {
        OptionKind::Call => "call",
        OptionKind::Put => "put",
    }
}

pub fn warn_about(cfg: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    if let ModelConfig::Heston(p) = &cfg.model {
        if !p.sufficient_condition_holds() {
            let (shape, _) = p.invariant_gamma();
            out.push(format!(
                "warning: 2kθ/ς² = {} does not exceed 1 + 2√6/ς = {}; the scheme's convergence is not guaranteed, proceeding",
                fmt_num(shape),
                fmt_num(1.0 + 2.0 * 6f64.sqrt() / p.sigma_v)
            ));
        }
    }
    out
}

pub fn cmd_price(cfg: &RunConfig, payoff: Payoff, rt: Runtime) -> CliResult<String> {
    let start = Instant::now();
    let rows = price_rows(cfg, payoff, rt)?;
    let wall = start.elapsed().as_secs_f64();
    let mut header = vec!["model", "maturity", "strike", "kind", "estimate", "std_error", "n", "seed", "replications"];
    if rt.timing {
        header.push("wall_seconds");
    }
    let mut t = Table::new(&header);
    for r in rows {
        let mut row = vec![
            cfg.model.name().to_string(),
            fmt_num(r.maturity),
            fmt_num(r.strike),
            kind_name(cfg.kind).to_string(),
            fmt_num(r.estimate),
            fmt_num(r.std_error),
            cfg.iters.to_string(),
            cfg.seed.to_string(),
            cfg.replications.to_string(),
        ];
        if rt.timing {
            row.push(fmt_num(wall));
        }
        t.push(row);
    }
    Ok(t.render())
}

pub fn cmd_vol_surface(cfg: &RunConfig, rt: Runtime) -> CliResult<String> {
    let call_cfg = RunConfig {
        kind: OptionKind::Call,
        ..cfg.clone()
    };
    let rows = price_rows(&call_cfg, Payoff::European, rt)?;
    let (s0, r) = (cfg.model.s0(), cfg.model.rate());
    let mut t = Table::new(&["model", "maturity", "strike", "european_call", "std_error", "implied_vol", "status"]);
    for row in rows {
        let (vol, status) = match implied_vol(row.estimate, s0, row.strike, row.maturity, r) {
            Ok(v) => (fmt_num(v), "ok"),
            Err(ergopath::Error::BandViolation { .. }) => (String::new(), "band-violation"),
            Err(e) => return Err(e.into()),
        };
        t.push(vec![
            cfg.model.name().to_string(),
            fmt_num(row.maturity),
            fmt_num(row.strike),
            fmt_num(row.estimate),
            fmt_num(row.std_error),
            vol,
            status.to_string(),
        ]);
    }
    Ok(t.render())
}

/// Weighted marginal of the variance coordinate at every checkpoint, and
/// the final histogram when bins are configured.
pub fn stationary_stats(cfg: &RunConfig) -> CliResult<(Vec<(usize, MarginalStats<2>)>, usize)> {
    let coordinate = match cfg.model {
        ModelConfig::Heston(_) => 0,
        ModelConfig::Bns(_) => 1,
    };
    let histogram = match cfg.histogram {
        Some((bins, lo, hi)) => Some(HistogramSpec::with_bins(coordinate, bins, lo, hi)?),
        None => None,
    };
    let options = RunOptions {
        marginals: true,
        histogram,
        ..RunOptions::default()
    };
    // Marginals need no window, so the horizon is only a placeholder.
    let horizon = 1e-12;
    let rng = stream_rng(cfg.seed, 0);
    let summary = match &cfg.model {
        ModelConfig::Heston(p) => {
            let mut e = ErgodicEngine::new(cfg.schedule.build(), p.initial_state(), horizon)?;
            e.run(&mut p.driver(rng)?, &mut NoFunctional, cfg.iters, options)?
        }
        ModelConfig::Bns(p) => {
            let mut e = ErgodicEngine::new(cfg.schedule.build(), p.initial_state(), horizon)?;
            e.run(&mut p.driver(rng)?, &mut NoFunctional, cfg.iters, options)?
        }
    };
    let checkpoints = summary
        .checkpoints
        .into_iter()
        .map(|c| (c.n, c.marginal.expect("marginals were requested")))
        .collect();
    Ok((checkpoints, coordinate))
}

pub fn cmd_stationary_stats(cfg: &RunConfig) -> CliResult<(String, Option<String>)> {
    let (checkpoints, i) = stationary_stats(cfg)?;
    let mut t = Table::new(&["model", "n", "total_weight", "mean", "variance", "skewness"]);
    for (n, s) in &checkpoints {
        t.push(vec![
            cfg.model.name().to_string(),
            n.to_string(),
            fmt_num(s.total_weight),
            fmt_num(s.mean[i]),
            fmt_num(s.variance[i]),
            fmt_num(s.skewness[i]),
        ]);
    }
    let hist = checkpoints.last().and_then(|(_, s)| s.histogram.as_ref()).map(|h| {
        let mut ht = Table::new(&["bin_lo", "bin_hi", "mass"]);
        ht.push(vec!["-inf".into(), fmt_num(h.spec.min), fmt_num(h.underflow)]);
        let w = h.spec.bin_width();
        for (b, m) in h.mass.iter().enumerate() {
            ht.push(vec![fmt_num(h.spec.min + b as f64 * w), fmt_num(h.spec.min + (b + 1) as f64 * w), fmt_num(*m)]);
        }
        ht.push(vec![fmt_num(h.spec.max), "inf".into(), fmt_num(h.overflow)]);
        ht.render()
    });
    Ok((t.render(), hist))
}

pub fn cmd_check_schedule(cfg: &RunConfig) -> CliResult<String> {
    let mut s = cfg.schedule.build();
    let horizon = cfg.maturities[0];
    let mut t = Table::new(&["condition", "passes", "quantity", "value"]);
    let yes = |b: bool| if b { "yes" } else { "no" }.to_string();

    let w = s.check_weight_step_condition(cfg.eps, cfg.scan_to)?;
    for (q, v) in [
        ("eps", w.eps),
        ("sup_ratio", w.sup_constant),
        ("sup_ratio_first_half", w.sup_first_half),
        ("final_ratio", w.final_ratio),
    ] {
        t.push(vec!["weight_step".into(), yes(w.passes), q.into(), fmt_num(v)]);
    }
    let inv = s.check_invariance_condition(cfg.scan_to);
    t.push(vec!["invariance".into(), yes(inv.passes), "cesaro_average".into(), fmt_num(inv.cesaro_average)]);
    match s.check_series_condition(cfg.series_s, cfg.eps, horizon, cfg.scan_to) {
        Ok(d) => {
            for (q, v) in [
                ("s", d.s),
                ("threshold", d.threshold),
                ("partial_sum", d.partial_sum),
                ("second_half_increment", d.second_half_increment),
            ] {
                t.push(vec!["series".into(), yes(d.passes), q.into(), fmt_num(v)]);
            }
        }
        Err(e) => t.push(vec!["series".into(), "n/a".into(), "reason".into(), e.to_string().replace(',', ";")]),
    }
    Ok(t.render())
}

/// Number of independent chunks the CIR oracle is split into. Fixed, so
/// the result depends on the seed only.
pub const ORACLE_CHUNKS: u64 = 64;

pub fn cir_oracle(p: &HestonParams, cfg: &RunConfig, threads: usize) -> CliResult<Vec<OracleEstimate>> {
    let spec = AsianSpec::new(cfg.strikes[0], cfg.maturities[0], cfg.kind, p.r)?;
    let paths = cfg.oracle_paths;
    let chunks: Vec<u64> = (0..ORACLE_CHUNKS.min(paths.max(1))).collect();
    let per = paths / chunks.len() as u64;
    let extra = paths % chunks.len() as u64;
    let parts: Vec<CliResult<Vec<OracleEstimate>>> = pool(threads).install(|| {
        chunks
            .par_iter()
            .map(|&c| {
                let n = per + u64::from(c < extra);
                let mut rng = stream_rng(cfg.seed, c);
                Ok(cir_direct_stationary_price(p, &spec, &cfg.strikes, n, cfg.fine_step, &mut rng)?)
            })
            .collect()
    });
    let mut total = vec![OracleEstimate::default(); cfg.strikes.len()];
    for part in parts {
        for (acc, e) in total.iter_mut().zip(part?) {
            acc.merge(&e);
        }
    }
    Ok(total)
}

pub fn cmd_oracle(which: &str, cfg: &RunConfig, rt: Runtime) -> CliResult<String> {
    match which {
        "cir-asian" => {
            let ModelConfig::Heston(p) = &cfg.model else {
                return Err(ConfigError {
                    key: "model".into(),
                    reason: "the cir-asian oracle needs model = heston".into(),
                }
                .into());
            };
            let est = cir_oracle(p, cfg, rt.threads)?;
            let mut t = Table::new(&["maturity", "strike", "kind", "estimate", "std_error", "n_paths", "seed"]);
            for (k, e) in cfg.strikes.iter().zip(est) {
                t.push(vec![
                    fmt_num(cfg.maturities[0]),
                    fmt_num(*k),
                    kind_name(cfg.kind).into(),
                    fmt_num(e.value()),
                    fmt_num(e.std_error()),
                    e.n_paths.to_string(),
                    cfg.seed.to_string(),
                ]);
            }
            Ok(t.render())
        }
        "ou" => {
            let mut rng = stream_rng(cfg.seed, 0);
            let rep = ou_stationary_check(cfg.ou_sigma, cfg.schedule.build(), cfg.iters, &mut rng)?;
            let mut t = Table::new(&["sigma", "n", "mean", "variance", "skewness", "target_variance"]);
            t.push(vec![
                fmt_num(rep.sigma),
                cfg.iters.to_string(),
                fmt_num(rep.stats.mean[0]),
                fmt_num(rep.stats.variance[0]),
                fmt_num(rep.stats.skewness[0]),
                fmt_num(rep.target_variance),
            ]);
            Ok(t.render())
        }
        "levy-moment" => {
            let m = match &cfg.model {
                ModelConfig::Bns(p) => p.jump,
                ModelConfig::Heston(_) => ergopath::models::BnsParams::reference().jump,
            };
            let (u, order) = (cfg.levy_u, cfg.levy_order);
            let (tail, head) = levy_moment_oracle(&m, u, order)?;
            let lib_tail = m.tail_moment(u, order)?;
            let lib_head = m.head_moment(u, order)?;
            let mut t = Table::new(&[
                "u",
                "order",
                "oracle_tail",
                "oracle_head",
                "levy_tail",
                "levy_head",
                "rel_diff_tail",
                "rel_diff_head",
            ]);
            t.push(vec![
                fmt_num(u),
                order.to_string(),
                fmt_num(tail),
                fmt_num(head),
                fmt_num(lib_tail),
                fmt_num(lib_head),
                fmt_num(((lib_tail - tail) / tail).abs()),
                fmt_num(((lib_head - head) / head).abs()),
            ]);
            Ok(t.render())
        }
        other => Err(ConfigError {
            key: "oracle".into(),
            reason: format!("expected cir-asian, ou or levy-moment, got `{other}`"),
        }
        .into()),
    }
}

/// Header-and-rows rendering helper used by tests.
pub fn lines(csv: &str) -> Vec<Vec<String>> {
    csv.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}
