//! Abscissa estimates from the growth of partial-sum norms.
//!
//! For a norm `||.||` on Dirichlet polynomials and a non-negative abscissa,
//! `sigma(D) = limsup_N log ||sum_{n<=N} a_n n^{-s}|| / log N`. On a finite
//! truncation the limsup is replaced by a least-squares slope of
//! `log ||P_N||` against `log N` over the running maxima of the last half of
//! an increasing schedule of cut points.

use crate::error::{Error, Result};
use crate::norms::{self, NormEstimate, NormTag, Samplers};
use crate::rng;
use crate::series::{lq_norm, DirichletTruncation, DualVector, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;

const SALT_SIGNS: u64 = 0x7369_676e;

/// Default threshold on the fitted log-log slope below which partial sums
/// count as bounded.
pub const DEFAULT_GROWTH_TOL: f64 = 0.02;

/// Largest length for which all sign patterns are enumerated.
pub const EXHAUSTIVE_LIMIT: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    BohrCahen,
    BoundedBisection,
    WeakSup,
    SignSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbscissaEstimate {
    /// `-inf` when every partial sum on the fit window is final (a
    /// polynomial) or zero; `+inf` is reserved for `inf(empty)`.
    #[serde(with = "crate::ext")]
    pub value: f64,
    pub method: Method,
    pub schedule: Vec<u64>,
    /// Partial-sum norms at each schedule point (empty for bisection).
    pub norms: Vec<NormEstimate>,
    pub fit_residual: f64,
    pub diagnostics: BTreeMap<String, Value>,
}

/// One CSV row per schedule point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub norm: f64,
    pub standard_error: f64,
    pub log_norm_over_log_n: f64,
    pub tag: String,
    pub seed: u64,
}

impl AbscissaEstimate {
    pub fn is_sentinel(&self) -> bool {
        self.value.is_infinite()
    }

    pub fn rows(&self, tag: &str, seed: u64) -> Vec<ScheduleRow> {
        self.schedule
            .iter()
            .zip(&self.norms)
            .map(|(&n, e)| ScheduleRow {
                n,
                norm: e.value,
                standard_error: e.standard_error,
                log_norm_over_log_n: e.value.ln() / (n as f64).ln(),
                tag: tag.to_string(),
                seed,
            })
            .collect()
    }
}

/// `2, 4, ..., 2^kmax`, keeping the points `<= n_max`.
pub fn dyadic_schedule(kmax: u32, n_max: u64) -> Vec<u64> {
    (1..=kmax.min(63))
        .map(|k| 1u64 << k)
        .take_while(|&n| n <= n_max)
        .collect()
}

fn check_schedule(schedule: &[u64], n_max: u64) -> Result<()> {
    if schedule.len() < 4 {
        return Err(Error::Domain(format!("schedule needs at least 4 points, got {}", schedule.len())));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("schedule must be strictly increasing".into()));
    }
    if schedule[0] < 2 || *schedule.last().unwrap() > n_max {
        return Err(Error::Range(format!("schedule must lie in [2, {n_max}]")));
    }
    Ok(())
}

/// Least-squares slope with intercept; returns `(slope, rms residual)`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EnvelopeFit {
    pub value: f64,
    pub residual: f64,
    pub reason: Option<&'static str>,
    pub window_start: usize,
}

/// Slope of the running-maximum envelope of `log norms` over the last half
/// of the schedule. `support_max` is the largest index with a nonzero
/// coefficient (`None` for the zero series).
pub(crate) fn envelope_fit(schedule: &[u64], norms: &[f64], support_max: Option<u64>) -> EnvelopeFit {
    let start = schedule.len() / 2;
    let sentinel = |reason| EnvelopeFit {
        value: f64::NEG_INFINITY,
        residual: 0.0,
        reason: Some(reason),
        window_start: start,
    };
    let Some(top) = support_max else {
        return sentinel("zero series");
    };
    if top < schedule[start] {
        return sentinel("polynomial: partial sums constant on the fit window");
    }
    let mut env = f64::NEG_INFINITY;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&n, &v) in schedule[start..].iter().zip(&norms[start..]) {
        env = env.max(v.ln());
        if env.is_finite() {
            x.push((n as f64).ln());
            y.push(env);
        }
    }
    if x.len() < 2 {
        return sentinel("zero norms on the fit window");
    }
    let (slope, residual) = ls_slope(&x, &y);
    EnvelopeFit {
        value: slope,
        residual,
        reason: None,
        window_start: start,
    }
}

fn fit_estimate(
    method: Method,
    schedule: &[u64],
    norms: Vec<NormEstimate>,
    support_max: Option<u64>,
    mut diagnostics: BTreeMap<String, Value>,
) -> AbscissaEstimate {
    let values: Vec<f64> = norms.iter().map(|e| e.value).collect();
    let fit = envelope_fit(schedule, &values, support_max);
    diagnostics.insert("window_start".into(), json!(schedule[fit.window_start]));
    if let Some(r) = fit.reason {
        diagnostics.insert("sentinel".into(), json!(r));
    }
    AbscissaEstimate {
        value: fit.value,
        method,
        schedule: schedule.to_vec(),
        norms,
        fit_residual: fit.residual,
        diagnostics,
    }
}

/// Growth-rate estimate of the abscissa of `d` for `tag`.
pub fn bohr_cahen(d: &DirichletTruncation, tag: NormTag, schedule: &[u64], samplers: &Samplers) -> Result<AbscissaEstimate> {
    bohr_cahen_recentered(d, tag, schedule, samplers, 0.0)
}

/// Estimate through the translate `D(s + sigma0)`, shifted back by `sigma0`.
///
/// The growth formula only sees non-negative abscissas; choosing
/// `sigma0 < 0` moves an abscissa suspected to be negative into range.
pub fn bohr_cahen_recentered(
    d: &DirichletTruncation,
    tag: NormTag,
    schedule: &[u64],
    samplers: &Samplers,
    sigma0: f64,
) -> Result<AbscissaEstimate> {
    check_schedule(schedule, d.n_max())?;
    let shifted;
    let target = if sigma0 == 0.0 {
        d
    } else {
        shifted = d.translate(sigma0);
        &shifted
    };
    let norms = norms::partial_norms(target, tag, schedule, samplers)?;
    let mut diag = BTreeMap::new();
    diag.insert("tag".into(), json!(tag.to_string()));
    if sigma0 != 0.0 {
        diag.insert("recenter".into(), json!(sigma0));
    }
    let mut est = fit_estimate(Method::BohrCahen, schedule, norms, d.support_max(), diag);
    est.value += sigma0;
    Ok(est)
}

/// Bisection on `sigma` for the point where the partial sums of
/// `D(s + sigma)` stop growing (fitted slope `<= growth_tol`).
#[allow(clippy::too_many_arguments)]
pub fn bounded_bisection(
    d: &DirichletTruncation,
    tag: NormTag,
    sigma_lo: f64,
    sigma_hi: f64,
    iters: usize,
    growth_tol: f64,
    schedule: &[u64],
    samplers: &Samplers,
) -> Result<AbscissaEstimate> {
    if !(sigma_lo < sigma_hi) || iters == 0 {
        return Err(Error::Domain("need sigma_lo < sigma_hi and iters >= 1".into()));
    }
    check_schedule(schedule, d.n_max())?;
    let slope = |sigma: f64| -> Result<f64> {
        let t = d.translate(sigma);
        let norms: Vec<f64> = norms::partial_norms(&t, tag, schedule, samplers)?
            .iter()
            .map(|e| e.value)
            .collect();
        Ok(envelope_fit(schedule, &norms, d.support_max()).value)
    };
    let (mut lo, mut hi) = (sigma_lo, sigma_hi);
    let (mut s_lo, mut s_hi) = (slope(lo)?, slope(hi)?);
    if (s_lo <= growth_tol) == (s_hi <= growth_tol) {
        return Err(Error::Bracket {
            lo_slope: s_lo,
            hi_slope: s_hi,
            growth_tol,
        });
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let s = slope(mid)?;
        if s <= growth_tol {
            hi = mid;
            s_hi = s;
        } else {
            lo = mid;
            s_lo = s;
        }
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("tag".into(), json!(tag.to_string()));
    diagnostics.insert("growth_tol".into(), json!(growth_tol));
    diagnostics.insert("bracket".into(), json!([lo, hi]));
    diagnostics.insert("slope_lo".into(), json!(s_lo));
    diagnostics.insert("slope_hi".into(), json!(s_hi));
    Ok(AbscissaEstimate {
        value: 0.5 * (lo + hi),
        method: Method::BoundedBisection,
        schedule: schedule.to_vec(),
        norms: Vec::new(),
        fit_residual: 0.5 * (hi - lo),
        diagnostics,
    })
}

/// `sup_{x*} sigma(D_{x*})` over the sampled dual unit ball.
pub fn weak_abscissa(d: &DirichletTruncation, tag: NormTag, samplers: &Samplers, schedule: &[u64]) -> Result<AbscissaEstimate> {
    if d.space().is_scalar() {
        return Err(Error::Domain("weak abscissas need vector coefficients".into()));
    }
    check_schedule(schedule, d.n_max())?;
    let inner = tag.strong();
    let candidates = norms::dual_candidates(d, &samplers.dual);
    let mut best: Option<(AbscissaEstimate, &DualVector)> = None;
    for x in &candidates {
        let e = bohr_cahen(&d.apply_functional(x)?, inner, schedule, samplers)?;
        if best.as_ref().is_none_or(|(b, _)| e.value > b.value) {
            best = Some((e, x));
        }
    }
    let (mut est, x) = best.expect("at least one dual candidate");
    est.method = Method::WeakSup;
    est.diagnostics.insert("tag".into(), json!(tag.weak().to_string()));
    est.diagnostics.insert("candidates".into(), json!(candidates.len()));
    est.diagnostics.insert("maximizer".into(), dual_json(x));
    Ok(est)
}

fn dual_json(x: &DualVector) -> Value {
    const SHOWN: usize = 16;
    let head: Vec<[f64; 2]> = x.entries.iter().take(SHOWN).map(|z| [z.re, z.im]).collect();
    json!({ "dim": x.entries.len(), "head": head })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignStrategy {
    Exhaustive,
    Random,
}

/// Signs `eps_n`, one per index `1..=n_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPattern {
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("signs must be +1 or -1".into()));
        }
        Ok(SignPattern { signs })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `sum eps_n a_n n^{-s}`.
    pub fn apply(&self, d: &DirichletTruncation) -> Result<DirichletTruncation> {
        if self.signs.len() as u64 != d.n_max() {
            return Err(Error::DimensionMismatch {
                expected: d.n_max() as usize,
                found: self.signs.len(),
            });
        }
        let mut out = DirichletTruncation::new(*d.space(), d.n_max())?;
        for (n, c) in d.iter() {
            let s = self.signs[n as usize - 1] as f64;
            out.insert(n, c.scale(C64::new(s, 0.0)))?;
        }
        Ok(out)
    }
}

/// Worst-case sign search for the abscissa of unconditional convergence:
/// the largest `c`-norm abscissa of `sum eps_n a_n n^{-s}` over the explored
/// sign patterns. For vector coefficients the weak `l_1` abscissa is computed
/// as a cross-check and the larger value is returned.
pub fn unconditional_abscissa(
    d: &DirichletTruncation,
    strategy: SignStrategy,
    trials: usize,
    seed: u64,
    schedule: &[u64],
    samplers: &Samplers,
) -> Result<AbscissaEstimate> {
    check_schedule(schedule, d.n_max())?;
    let n_max = d.n_max();
    let support: Vec<u64> = d.iter().map(|(n, _)| n).collect();
    let mut patterns: Vec<(String, SignPattern)> = Vec::new();
    match strategy {
        SignStrategy::Exhaustive => {
            if n_max > EXHAUSTIVE_LIMIT {
                return Err(Error::SizeLimit(format!(
                    "exhaustive sign search is limited to n_max <= {EXHAUSTIVE_LIMIT}, got {n_max}"
                )));
            }
            // a global sign flip leaves every norm unchanged
            let free = support.len().saturating_sub(1);
            for mask in 0u64..(1 << free) {
                let mut signs = vec![1i8; n_max as usize];
                for (bit, &n) in support.iter().skip(1).enumerate() {
                    if mask >> bit & 1 == 1 {
                        signs[n as usize - 1] = -1;
                    }
                }
                patterns.push((format!("mask {mask}"), SignPattern { signs }));
            }
        }
        SignStrategy::Random => {
            let base = rng::derive(seed, SALT_SIGNS);
            for i in 0..trials {
                let mut r = rng::stream(base, i as u64);
                let signs = (0..n_max).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect();
                patterns.push((format!("random {i}"), SignPattern { signs }));
            }
            let greedy = greedy_alignment(d);
            patterns.push(("greedy".into(), flip_ascent(d, greedy.clone(), 8)));
            patterns.push(("greedy-prefix".into(), greedy));
        }
    }
    let mut best: Option<(AbscissaEstimate, String)> = None;
    for (label, pattern) in &patterns {
        let e = bohr_cahen(&pattern.apply(d)?, NormTag::CSUP, schedule, samplers)?;
        if best.as_ref().is_none_or(|(b, _)| e.value > b.value) {
            best = Some((e, label.clone()));
        }
    }
    let (mut est, label) = best.expect("at least one sign pattern");
    est.method = Method::SignSearch;
    est.diagnostics.insert("tag".into(), json!("csup"));
    est.diagnostics.insert("patterns".into(), json!(patterns.len()));
    est.diagnostics.insert("best_pattern".into(), json!(label));
    est.diagnostics.insert("sign_search_value".into(), ext_json(est.value));
    if !d.space().is_scalar() {
        let weak = weak_abscissa(d, NormTag::ELL1, samplers, schedule)?;
        est.diagnostics.insert("weak_ell1_value".into(), ext_json(weak.value));
        if weak.value > est.value {
            est.diagnostics.insert("selected".into(), json!("weak_ell1"));
            est.value = weak.value;
            est.norms = weak.norms;
            est.fit_residual = weak.fit_residual;
        } else {
            est.diagnostics.insert("selected".into(), json!("sign_search"));
        }
    }
    Ok(est)
}

pub(crate) fn ext_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Chooses each sign in turn to maximize the norm of the running sum.
fn greedy_alignment(d: &DirichletTruncation) -> SignPattern {
    let q = d.space().q();
    let mut acc = vec![C64::default(); d.space().dim()];
    let mut signs = vec![1i8; d.n_max() as usize];
    let mut trial = acc.clone();
    for (n, c) in d.iter() {
        trial.copy_from_slice(&acc);
        c.add_scaled_into(C64::new(1.0, 0.0), &mut trial);
        let plus = lq_norm(&trial, q);
        trial.copy_from_slice(&acc);
        c.add_scaled_into(C64::new(-1.0, 0.0), &mut trial);
        let minus = lq_norm(&trial, q);
        let s = if minus > plus { -1.0 } else { 1.0 };
        signs[n as usize - 1] = s as i8;
        c.add_scaled_into(C64::new(s, 0.0), &mut acc);
    }
    SignPattern { signs }
}

/// Single-sign flips that increase the norm of the full signed sum.
fn flip_ascent(d: &DirichletTruncation, mut pattern: SignPattern, sweeps: usize) -> SignPattern {
    let q = d.space().q();
    let mut acc = vec![C64::default(); d.space().dim()];
    for (n, c) in d.iter() {
        c.add_scaled_into(C64::new(pattern.signs[n as usize - 1] as f64, 0.0), &mut acc);
    }
    let mut current = lq_norm(&acc, q);
    let mut trial = acc.clone();
    for _ in 0..sweeps {
        let mut improved = false;
        for (n, c) in d.iter() {
            let s = pattern.signs[n as usize - 1] as f64;
            trial.copy_from_slice(&acc);
            c.add_scaled_into(C64::new(-2.0 * s, 0.0), &mut trial);
            let v = lq_norm(&trial, q);
            if v > current * (1.0 + 1e-12) {
                pattern.signs[n as usize - 1] = -(s as i8);
                std::mem::swap(&mut acc, &mut trial);
                current = v;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    pattern
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub sigma_a: AbscissaEstimate,
    pub sigma_b: AbscissaEstimate,
    /// `sigma_a - sigma_b` (signed).
    #[serde(with = "crate::ext")]
    pub width: f64,
}

/// Both growth estimates on a shared schedule and their signed difference.
pub fn strip_report(
    d: &DirichletTruncation,
    tag_a: NormTag,
    tag_b: NormTag,
    schedule: &[u64],
    samplers: &Samplers,
) -> Result<StripReport> {
    let sigma_a = bohr_cahen(d, tag_a, schedule, samplers)?;
    let sigma_b = bohr_cahen(d, tag_b, schedule, samplers)?;
    let width = sigma_a.value - sigma_b.value;
    Ok(StripReport { sigma_a, sigma_b, width })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientEnsemble {
    Signs,
    Phases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripExponent {
    pub exponent: f64,
    pub fit_residual: f64,
    /// `(N, largest observed ratio)`.
    pub ratios: Vec<(u64, f64)>,
    pub trials: usize,
    pub ensemble: CoefficientEnsemble,
    /// The comparison presumes the weaker space satisfies Bohr's theorem
    /// (membership forces a non-positive abscissa); this is not checked.
    pub assumption: String,
}

/// Slope of `log max ||P||_strong / ||P||_weak` against `log N` over random
/// scalar polynomials `P = sum_{n<=N} a_n n^{-s}` with unimodular
/// coefficients.
pub fn strip_exponent(
    tag_strong: NormTag,
    tag_weak: NormTag,
    n_list: &[u64],
    trials: usize,
    seed: u64,
    ensemble: CoefficientEnsemble,
    samplers: &Samplers,
) -> Result<StripExponent> {
    if trials == 0 || n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Domain(
            "strip exponent needs trials >= 1 and at least two increasing N".into(),
        ));
    }
    let mut ratios = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let mut best = 0.0f64;
        for i in 0..trials {
            let stream = (k * trials + i) as u64;
            let mut r = rng::stream(seed, stream);
            let p = DirichletTruncation::scalar_from_fn(n, |_| match ensemble {
                CoefficientEnsemble::Signs => C64::new(rng::sign(&mut r), 0.0),
                CoefficientEnsemble::Phases => rng::unit_phase(&mut r),
            })?;
            let s = samplers.seeded(rng::derive(seed, stream));
            let strong = norms::norm(&p, tag_strong, &s)?.value;
            let weak = norms::norm(&p, tag_weak, &s)?.value;
            best = best.max(strong / weak);
        }
        ratios.push((n, best));
    }
    let x: Vec<f64> = ratios.iter().map(|r| (r.0 as f64).ln()).collect();
    let y: Vec<f64> = ratios.iter().map(|r| r.1.ln()).collect();
    let (exponent, fit_residual) = ls_slope(&x, &y);
    Ok(StripExponent {
        exponent,
        fit_residual,
        ratios,
        trials,
        ensemble,
        assumption: format!("{tag_weak} assumed to satisfy Bohr's theorem"),
    })
}
