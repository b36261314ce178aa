use crate::args::*;
use crate::error::{CliError, Result};
use crate::record::{self, Cache, Comparison, InputSummary, Quantity, ResultRecord, TableRow, SCHEMA};
use dlab_core::abscissa::{self, CoefficientEnsemble, SignStrategy};
use dlab_core::bohr;
use dlab_core::extremal::{self, GapParams, MassSchedule};
use dlab_core::{jsonl, CoefficientSpaceSpec, DirichletTruncation, NormTag};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

/// What a finished job reports back to the caller.
#[derive(Debug)]
pub struct JobOutcome {
    pub record: ResultRecord,
    pub out_dir: PathBuf,
    pub cache_hit: bool,
}

pub fn ingest(path: &Path) -> Result<DirichletTruncation> {
    let file = File::open(path).map_err(CliError::io(path))?;
    jsonl::read(BufReader::new(file)).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

/// The validated series together with its canonical serialization.
struct Loaded {
    series: DirichletTruncation,
    canonical: Vec<u8>,
    summary: InputSummary,
}

fn load(path: &Path) -> Result<Loaded> {
    let series = ingest(path)?;
    let mut canonical = Vec::new();
    jsonl::write(&series, &mut canonical).map_err(CliError::io(path))?;
    let space = series.space();
    let summary = InputSummary {
        sha256: record::sha256_hex(&[&canonical]),
        kind: if space.is_scalar() { "scalar" } else { "vector" }.into(),
        dim: space.dim(),
        q: space.q(),
        n_max: series.n_max(),
        support: series.support_len(),
    };
    Ok(Loaded {
        series,
        canonical,
        summary,
    })
}

/// Hashes `(input, config)`, returns the cached record when present and
/// otherwise runs `compute` and stores its result.
fn run_job<C: Serialize>(
    command: &str,
    job: &JobArgs,
    config: &C,
    input: Option<&Loaded>,
    compute: impl FnOnce() -> Result<(Vec<Quantity>, Value, Vec<TableRow>)>,
) -> Result<JobOutcome> {
    let config = serde_json::to_value(config).expect("configs serialize");
    let seed = job.seed();
    let key = serde_json::to_vec(&json!({ "command": command, "seed": seed, "config": config }))
        .expect("configs serialize");
    let hash = record::sha256_hex(&[&key, input.map_or(&[][..], |l| &l.canonical)]);
    let cache = Cache::in_dir(&job.out);
    if !job.no_cache {
        if let Some(record) = cache.get(&hash) {
            record::emit(&job.out, &record)?;
            return Ok(JobOutcome {
                record,
                out_dir: job.out.clone(),
                cache_hit: true,
            });
        }
    }
    let (quantities, estimates, table) = compute()?;
    let record = ResultRecord {
        schema: SCHEMA.into(),
        command: command.into(),
        content_hash: hash,
        seed,
        config,
        input: input.map(|l| l.summary.clone()),
        quantities,
        estimates,
        table,
    };
    cache.put(&record)?;
    record::emit(&job.out, &record)?;
    Ok(JobOutcome {
        record,
        out_dir: job.out.clone(),
        cache_hit: false,
    })
}

fn schedule_for(kmax: u32, d: &DirichletTruncation) -> Vec<u64> {
    abscissa::dyadic_schedule(kmax, d.n_max())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

#[derive(Serialize)]
struct EstimateConfig<'a> {
    norm: String,
    schedule: u32,
    method: &'a str,
    sigma0: Option<f64>,
    bracket: &'a [f64],
    iters: usize,
    growth_tol: f64,
    target: Option<f64>,
    samplers: dlab_core::Samplers,
}

pub fn estimate(a: &EstimateArgs) -> Result<JobOutcome> {
    let tag = a.norm.tag()?;
    let input = load(&a.input)?;
    let samplers = a.samplers.samplers(a.job.seed());
    let method = match a.method {
        EstimateMethod::BohrCahen => "bohr_cahen",
        EstimateMethod::Bisection => "bisection",
    };
    let config = EstimateConfig {
        norm: tag.to_string(),
        schedule: a.schedule,
        method,
        sigma0: a.sigma0,
        bracket: &a.bracket,
        iters: a.iters,
        growth_tol: a.growth_tol,
        target: a.target,
        samplers,
    };
    run_job("estimate", &a.job, &config, Some(&input), || {
        let d = &input.series;
        let schedule = schedule_for(a.schedule, d);
        let est = match a.method {
            EstimateMethod::BohrCahen => {
                abscissa::bohr_cahen_recentered(d, tag, &schedule, &samplers, a.sigma0.unwrap_or(0.0))?
            }
            EstimateMethod::Bisection => abscissa::bounded_bisection(
                d,
                tag,
                a.bracket[0],
                a.bracket[1],
                a.iters,
                a.growth_tol,
                &schedule,
                &samplers,
            )?,
        };
        let label = format!("sigma[{tag}]");
        let q = Quantity::new(&label, est.value).target(a.target, Comparison::Equal);
        Ok((vec![q], to_value(&est), TableRow::from_estimate(&label, &est)))
    })
}

#[derive(Serialize)]
struct WeakConfig {
    norm: String,
    schedule: u32,
    target: Option<f64>,
    samplers: dlab_core::Samplers,
}

pub fn weak(a: &WeakArgs) -> Result<JobOutcome> {
    let tag = a.norm.tag()?.weak();
    let input = load(&a.input)?;
    let samplers = a.samplers.samplers(a.job.seed());
    let config = WeakConfig {
        norm: tag.to_string(),
        schedule: a.schedule,
        target: a.target,
        samplers,
    };
    run_job("weak", &a.job, &config, Some(&input), || {
        let d = &input.series;
        let est = abscissa::weak_abscissa(d, tag, &samplers, &schedule_for(a.schedule, d))?;
        let label = format!("sigma[{tag}]");
        let q = Quantity::new(&label, est.value).target(a.target, Comparison::Equal);
        Ok((vec![q], to_value(&est), TableRow::from_estimate(&label, &est)))
    })
}

#[derive(Serialize)]
struct UnconditionalConfig {
    strategy: &'static str,
    trials: usize,
    schedule: u32,
    target: Option<f64>,
    samplers: dlab_core::Samplers,
}

pub fn unconditional(a: &UnconditionalArgs) -> Result<JobOutcome> {
    let input = load(&a.input)?;
    let samplers = a.samplers.samplers(a.job.seed());
    let (strategy, name) = match a.strategy {
        Strategy::Random => (SignStrategy::Random, "random"),
        Strategy::Exhaustive => (SignStrategy::Exhaustive, "exhaustive"),
    };
    let config = UnconditionalConfig {
        strategy: name,
        trials: a.trials,
        schedule: a.schedule,
        target: a.target,
        samplers,
    };
    run_job("unconditional", &a.job, &config, Some(&input), || {
        let d = &input.series;
        let est =
            abscissa::unconditional_abscissa(d, strategy, a.trials, a.job.seed(), &schedule_for(a.schedule, d), &samplers)?;
        let q = Quantity::new("sigma_unc", est.value).target(a.target, Comparison::Equal);
        Ok((vec![q], to_value(&est), TableRow::from_estimate("sigma_unc", &est)))
    })
}

#[derive(Serialize)]
struct StripConfig<'a> {
    norm_a: String,
    norm_b: String,
    schedule: Option<u32>,
    n_list: Option<&'a [u64]>,
    trials: Option<usize>,
    ensemble: Option<&'static str>,
    target: Option<f64>,
    samplers: dlab_core::Samplers,
}

fn parse_tag(s: &str) -> Result<NormTag> {
    s.parse().map_err(|e: dlab_core::Error| CliError::Usage(e.to_string()))
}

pub fn strip(a: &StripArgs) -> Result<JobOutcome> {
    let (tag_a, tag_b) = (parse_tag(&a.norm_a)?, parse_tag(&a.norm_b)?);
    let samplers = a.samplers.samplers(a.job.seed());
    let input = a.input.as_deref().map(load).transpose()?;
    let (ensemble, name) = match a.ensemble {
        Ensemble::Signs => (CoefficientEnsemble::Signs, "signs"),
        Ensemble::Phases => (CoefficientEnsemble::Phases, "phases"),
    };
    let with_input = input.is_some();
    let config = StripConfig {
        norm_a: tag_a.to_string(),
        norm_b: tag_b.to_string(),
        schedule: with_input.then_some(a.schedule),
        n_list: (!with_input).then_some(&a.n_list[..]),
        trials: (!with_input).then_some(a.trials),
        ensemble: (!with_input).then_some(name),
        target: a.target,
        samplers,
    };
    run_job("strip", &a.job, &config, input.as_ref(), || match &input {
        Some(l) => {
            let d = &l.series;
            let rep = abscissa::strip_report(d, tag_a, tag_b, &schedule_for(a.schedule, d), &samplers)?;
            let (la, lb) = (format!("sigma[{tag_a}]"), format!("sigma[{tag_b}]"));
            let quantities = vec![
                Quantity::new(&la, rep.sigma_a.value),
                Quantity::new(&lb, rep.sigma_b.value),
                Quantity::new("width", rep.width).target(a.target, Comparison::Equal),
            ];
            let mut table = TableRow::from_estimate(&la, &rep.sigma_a);
            table.extend(TableRow::from_estimate(&lb, &rep.sigma_b));
            Ok((quantities, to_value(&rep), table))
        }
        None => {
            let rep = abscissa::strip_exponent(tag_a, tag_b, &a.n_list, a.trials, a.job.seed(), ensemble, &samplers)?;
            let series = format!("max {tag_a}/{tag_b}");
            let table = rep.ratios.iter().map(|&(n, r)| TableRow::new(&series, n, r, 0.0)).collect();
            let q = Quantity::new("strip_exponent", rep.exponent).target(a.target, Comparison::Equal);
            Ok((vec![q], to_value(&rep), table))
        }
    })
}

/// `l<q>` (`l1`, `l1.5`, `linf`) or `scalar`.
fn parse_space_q(s: &str) -> Result<Option<f64>> {
    let t = s.trim().to_ascii_lowercase();
    if t == "scalar" {
        return Ok(None);
    }
    t.strip_prefix('l')
        .and_then(dlab_core::ext::parse)
        .filter(|q| *q >= 1.0)
        .map(Some)
        .ok_or_else(|| CliError::Usage(format!("unknown space {s:?}; expected scalar or l<q> with q >= 1")))
}

#[derive(Serialize)]
struct EcoConfig<'a> {
    space: String,
    q_schedule: Vec<f64>,
    mass_target: &'a [f64],
    prime_budget: u64,
    schedule: u32,
    sign_trials: usize,
    samplers: dlab_core::Samplers,
}

pub fn eco(a: &EcoArgs) -> Result<JobOutcome> {
    let q = parse_space_q(&a.space)?;
    let probe = match q {
        Some(q) => CoefficientSpaceSpec::lq(1, q)?,
        None => CoefficientSpaceSpec::scalar(),
    };
    let cot = extremal::cotype_of(&probe);
    let q_schedule = match &a.q_schedule {
        Some(v) => v.clone(),
        None => extremal::default_q_schedule(cot, a.blocks)?,
    };
    let mass = match a.mass_target.as_slice() {
        [t] => MassSchedule::Uniform(*t),
        v => MassSchedule::PerBlock(v.to_vec()),
    };
    let samplers = a.samplers.samplers(a.job.seed());
    let config = EcoConfig {
        space: a.space.trim().to_ascii_lowercase(),
        q_schedule: q_schedule.clone(),
        mass_target: &a.mass_target,
        prime_budget: a.prime_budget,
        schedule: a.schedule,
        sign_trials: a.sign_trials,
        samplers,
    };
    run_job("eco", &a.job, &config, None, || {
        let Some(q) = q else {
            return Err(dlab_core::Error::Domain("the construction needs an l_q coefficient space".into()).into());
        };
        let plan = extremal::build_blocks(&q_schedule, a.prime_budget, &mass)?;
        let space = CoefficientSpaceSpec::lq(extremal::required_dim(q, &plan).max(1), q)?;
        let d = extremal::build_eco(&space, &plan)?;
        let params = GapParams {
            kmax: a.schedule,
            sign_trials: a.sign_trials,
            seed: a.job.seed(),
            samplers,
        };
        let gap = extremal::verify_gap(&d, &plan, &params)?;
        let quantities = vec![
            Quantity::new("sigma_a", gap.sigma_a_est.value).target(Some(gap.predicted_gap), Comparison::Equal),
            Quantity::new("sigma_unc", gap.sigma_unc_est.value).target(Some(0.0), Comparison::Equal),
            Quantity::new("clauses_hold", if gap.clauses_hold { 1.0 } else { 0.0 }).target(Some(1.0), Comparison::AtLeast),
        ];
        let mut table = TableRow::from_estimate("sigma_a", &gap.sigma_a_est);
        table.extend(TableRow::from_estimate("sigma_unc", &gap.sigma_unc_est));
        Ok((quantities, json!({ "plan": plan, "gap": gap, "dim": space.dim() }), table))
    })
}

#[derive(Serialize)]
struct WeisslerConfig {
    p: f64,
    q: f64,
    r: f64,
    trials: usize,
    mc_samples: usize,
}

pub fn weissler(a: &WeisslerArgs) -> Result<JobOutcome> {
    let r = a.r.unwrap_or_else(|| (a.p / a.q).sqrt());
    let config = WeisslerConfig {
        p: a.p,
        q: a.q,
        r,
        trials: a.trials,
        mc_samples: a.mc_samples,
    };
    run_job("weissler", &a.job, &config, None, || {
        let rep = bohr::weissler_check(a.p, a.q, r, a.trials, a.mc_samples, a.job.seed())?;
        let contracting = r <= rep.critical_radius;
        let q = Quantity::new("max_ratio", rep.max_ratio)
            .with_se(rep.max_ratio_se)
            .target(contracting.then_some(1.0), Comparison::AtMost);
        Ok((vec![q], to_value(&rep), Vec::new()))
    })
}

#[derive(Serialize)]
struct MoinConfig<'a> {
    p: f64,
    q: f64,
    n_list: &'a [u64],
    iters: usize,
}

pub fn moin(a: &MoinArgs) -> Result<JobOutcome> {
    let config = MoinConfig {
        p: a.p,
        q: a.q,
        n_list: &a.n_list,
        iters: a.iters,
    };
    run_job("moin", &a.job, &config, None, || {
        let bounds = bohr::moin_growth(a.p, a.q, &a.n_list, a.iters, a.job.seed())?;
        let series = format!("C({}, {}, N)", a.q, a.p);
        let table = bounds
            .iter()
            .map(|b| TableRow::new(&series, b.n, b.best_ratio, b.standard_error))
            .collect();
        let quantities = bounds
            .iter()
            .map(|b| Quantity::new(format!("C(N={})", b.n), b.best_ratio).with_se(b.standard_error))
            .collect();
        Ok((quantities, to_value(&bounds), table))
    })
}
