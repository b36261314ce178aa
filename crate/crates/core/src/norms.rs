//! Norms of Dirichlet polynomials: `l_1`, `l_inf`, `c` (partial coefficient
//! sums), the sup norm `D_inf` on vertical lines, the Hardy norms `H_p`, and
//! their weak versions `sup_{||x*|| <= 1} ||D_{x*}||`.

use crate::error::{Error, Result};
use crate::rng;
use crate::series::{lq_norm, Coefficient, CoefficientSpaceSpec, DirichletTruncation, DualVector, C64};
use crate::torus::{Ascent, Lift};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const SALT_DUAL: u64 = 0x6475_616c;
const SALT_ADMISSIBLE: u64 = 0x6164_6d69;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormFamily {
    Ell1,
    EllInf,
    Csup,
    Dinf,
    /// `H_p`, `1 <= p < inf`.
    Hp(f64),
}

/// A norm family, optionally wrapped as its weak version.
///
/// Text form: `ell1`, `ellinf`, `csup`, `dinf`, `hp(p)`, with a `weak:`
/// prefix for weak norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NormTag {
    pub family: NormFamily,
    pub weak: bool,
}

impl NormTag {
    pub const ELL1: NormTag = NormTag::plain(NormFamily::Ell1);
    pub const ELLINF: NormTag = NormTag::plain(NormFamily::EllInf);
    pub const CSUP: NormTag = NormTag::plain(NormFamily::Csup);
    pub const DINF: NormTag = NormTag::plain(NormFamily::Dinf);

    pub const fn plain(family: NormFamily) -> Self {
        NormTag { family, weak: false }
    }

    /// `H_p`; `p = inf` is the sup norm and maps to `D_inf`.
    pub fn hp(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(NormTag::DINF)
        } else if p.is_nan() || p < 1.0 {
            Err(Error::Domain(format!("H_p needs p >= 1, got {p}")))
        } else {
            Ok(NormTag::plain(NormFamily::Hp(p)))
        }
    }

    pub fn weak(self) -> Self {
        NormTag { weak: true, ..self }
    }

    pub fn strong(self) -> Self {
        NormTag { weak: false, ..self }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.family, NormFamily::Dinf | NormFamily::Hp(_))
    }
}

impl fmt::Display for NormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weak {
            f.write_str("weak:")?;
        }
        match self.family {
            NormFamily::Ell1 => f.write_str("ell1"),
            NormFamily::EllInf => f.write_str("ellinf"),
            NormFamily::Csup => f.write_str("csup"),
            NormFamily::Dinf => f.write_str("dinf"),
            NormFamily::Hp(p) => write!(f, "hp({p})"),
        }
    }
}

impl FromStr for NormTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (weak, body) = match lower.strip_prefix("weak:") {
            Some(rest) => (true, rest),
            None => (false, lower.as_str()),
        };
        let tag = match body {
            "ell1" | "l1" => NormTag::ELL1,
            "ellinf" | "linf" => NormTag::ELLINF,
            "csup" | "c" => NormTag::CSUP,
            "dinf" => NormTag::DINF,
            _ => {
                let p = body
                    .strip_prefix("hp(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| body.strip_prefix("hp"))
                    .and_then(crate::ext::parse)
                    .ok_or_else(|| Error::Domain(format!("unknown norm {s:?}")))?;
                NormTag::hp(p)?
            }
        };
        Ok(if weak { tag.weak() } else { tag })
    }
}

impl TryFrom<String> for NormTag {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormTag> for String {
    fn from(t: NormTag) -> String {
        t.to_string()
    }
}

/// Sampling plan for the sup norm over vertical lines.
///
/// Grid points are the first `grid_points` terms of the base-2 van der
/// Corput sequence scaled to `[0, t_span]` (the uniform grid when
/// `grid_points` is a power of two), so a larger grid always contains a
/// smaller one. Ascent starts at `t = 0` and at `torus_samples` random torus
/// points, point `i` drawn from stream `i` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DinfSampler {
    pub t_span: f64,
    pub grid_points: usize,
    pub refine_steps: usize,
    pub torus_samples: usize,
    pub seed: u64,
}

impl Default for DinfSampler {
    fn default() -> Self {
        DinfSampler {
            t_span: 1.0e4,
            grid_points: 256,
            refine_steps: 3,
            torus_samples: 16,
            seed: 0,
        }
    }
}

impl DinfSampler {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 || self.torus_samples < 1 || !(self.t_span > 0.0) {
            return Err(Error::Domain(
                "D_inf sampler needs grid_points >= 2, torus_samples >= 1, t_span > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn grid_t(&self, i: usize) -> f64 {
        van_der_corput(i as u64) * self.t_span
    }
}

fn van_der_corput(mut i: u64) -> f64 {
    let mut x = 0.0;
    let mut scale = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            x += scale;
        }
        i >>= 1;
        scale *= 0.5;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpSampler {
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for HpSampler {
    fn default() -> Self {
        HpSampler {
            mc_samples: 4096,
            seed: 0,
        }
    }
}

/// Functionals tried by the weak norms: deterministic candidates plus
/// `samples` random points of the dual unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSampler {
    pub samples: usize,
    pub seed: u64,
}

impl Default for DualSampler {
    fn default() -> Self {
        DualSampler { samples: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Samplers {
    pub dinf: DinfSampler,
    pub hp: HpSampler,
    pub dual: DualSampler,
}

impl Samplers {
    /// The same sampler settings with every seed replaced by `seed`.
    pub fn seeded(mut self, seed: u64) -> Self {
        self.dinf.seed = seed;
        self.hp.seed = seed;
        self.dual.seed = seed;
        self
    }
}

/// `(estimate, standard_error, samples)`; deterministic norms have zero
/// error and zero samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
}

impl NormEstimate {
    pub fn exact(value: f64) -> Self {
        NormEstimate {
            value,
            standard_error: 0.0,
            samples: 0,
        }
    }
}

pub fn norm_ell1(d: &DirichletTruncation) -> f64 {
    d.coefficient_norms().map(|(_, x)| x).sum()
}

pub fn norm_ellinf(d: &DirichletTruncation) -> f64 {
    d.coefficient_norms().map(|(_, x)| x).fold(0.0, f64::max)
}

pub fn norm_csup(d: &DirichletTruncation) -> f64 {
    csup_partial(d, &[d.n_max()])[0]
}

/// Lower-bound estimate of `sup_t ||sum a_n n^{-it}||`.
pub fn norm_dinf(d: &DirichletTruncation, sampler: &DinfSampler) -> Result<NormEstimate> {
    sampler.validate()?;
    let lift = Lift::new(d)?;
    Ok(dinf_of_lift(&lift, sampler))
}

fn dinf_of_lift(lift: &Lift, sampler: &DinfSampler) -> NormEstimate {
    let samples = (sampler.grid_points + sampler.torus_samples) as u64;
    if lift.terms.is_empty() {
        return NormEstimate {
            value: 0.0,
            standard_error: 0.0,
            samples,
        };
    }
    let q = lift.q();
    let grid_best = (0..sampler.grid_points)
        .into_par_iter()
        .map(|i| lq_norm(&lift.value(&lift.vertical_point(sampler.grid_t(i))), q))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    let starts = sampler.torus_samples + 1;
    let ascent_best = (0..starts)
        .into_par_iter()
        .map(|i| {
            let w = if i == 0 {
                lift.vertical_point(0.0)
            } else {
                let mut r = rng::stream(sampler.seed, (i - 1) as u64);
                (0..lift.var_count()).map(|_| rng::unit_phase(&mut r)).collect()
            };
            let mut a = Ascent::new(lift, w);
            a.sweeps(sampler.refine_steps);
            a.exact_value()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    NormEstimate {
        value: grid_best.max(ascent_best),
        standard_error: 0.0,
        samples,
    }
}

/// `H_p` norm; Monte Carlo over the torus except for the exact
/// `p = 2` Hilbert-space case.
pub fn norm_hp(d: &DirichletTruncation, p: f64, sampler: &HpSampler) -> Result<NormEstimate> {
    Ok(hp_partial(d, p, &[d.n_max()], sampler)?.remove(0))
}

fn parseval_applies(space: &CoefficientSpaceSpec, p: f64) -> bool {
    p == 2.0 && (space.is_scalar() || space.q() == 2.0)
}

fn hp_partial(d: &DirichletTruncation, p: f64, schedule: &[u64], sampler: &HpSampler) -> Result<Vec<NormEstimate>> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Domain(format!("H_p Monte Carlo needs 1 <= p < inf, got {p}")));
    }
    if parseval_applies(d.space(), p) {
        let mut out = Vec::with_capacity(schedule.len());
        let mut norms = d.coefficient_norms().peekable();
        let mut acc = 0.0;
        for &cut in schedule {
            while let Some((_, x)) = norms.next_if(|(n, _)| *n <= cut) {
                acc += x * x;
            }
            out.push(NormEstimate::exact(acc.sqrt()));
        }
        return Ok(out);
    }
    if sampler.mc_samples == 0 {
        return Err(Error::Domain("mc_samples must be positive".into()));
    }
    let lift = Lift::new(d)?;
    let k = schedule.len();
    let per_sample: Vec<Vec<f64>> = (0..sampler.mc_samples)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(z, acc), i| {
                let mut r = rng::stream(sampler.seed, i as u64);
                let w: Vec<C64> = (0..lift.var_count()).map(|_| rng::unit_phase(&mut r)).collect();
                let mut out = vec![0.0; k];
                lift.partial_norms(&w, schedule, z, acc, &mut out);
                out.iter_mut().for_each(|x| *x = x.powf(p));
                out
            },
        )
        .collect();
    let m = sampler.mc_samples as f64;
    Ok((0..k)
        .map(|j| {
            let mean = per_sample.iter().map(|v| v[j]).sum::<f64>() / m;
            let var = if sampler.mc_samples > 1 {
                per_sample.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            let value = mean.powf(1.0 / p);
            let se = if mean > 0.0 {
                value / (p * mean) * (var / m).sqrt()
            } else {
                0.0
            };
            NormEstimate {
                value,
                standard_error: se,
                samples: sampler.mc_samples as u64,
            }
        })
        .collect())
}

fn csup_partial(d: &DirichletTruncation, schedule: &[u64]) -> Vec<f64> {
    let q = d.space().q();
    let mut acc = vec![C64::default(); d.space().dim()];
    let mut best = 0.0f64;
    let mut out = Vec::with_capacity(schedule.len());
    let mut terms = d.iter().peekable();
    for &cut in schedule {
        while let Some((_, c)) = terms.next_if(|(n, _)| *n <= cut) {
            for &(j, z) in c.entries() {
                acc[j] += z;
            }
            // only touched coordinates change; for sparse coefficients in high
            // dimension the full norm is still the simplest exact choice
            best = best.max(lq_norm(&acc, q));
        }
        out.push(best);
    }
    out
}

fn cumulative(d: &DirichletTruncation, schedule: &[u64], fold: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut norms = d.coefficient_norms().peekable();
    schedule
        .iter()
        .map(|&cut| {
            while let Some((_, x)) = norms.next_if(|(n, _)| *n <= cut) {
                acc = fold(acc, x);
            }
            acc
        })
        .collect()
}

/// The plain (non-weak) norm of `d`.
pub fn norm(d: &DirichletTruncation, tag: NormTag, samplers: &Samplers) -> Result<NormEstimate> {
    Ok(partial_norms(d, tag, &[d.n_max()], samplers)?.remove(0))
}

/// Norms of the partial sums `sum_{n <= N} a_n n^{-s}` for every `N` of an
/// increasing schedule. Weak tags take the elementwise maximum over the
/// sampled functionals.
pub fn partial_norms(
    d: &DirichletTruncation,
    tag: NormTag,
    schedule: &[u64],
    samplers: &Samplers,
) -> Result<Vec<NormEstimate>> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("schedule must be strictly increasing".into()));
    }
    if tag.weak {
        return Ok(weak_partial_norms(d, tag, schedule, samplers)?.norms);
    }
    let exact = |v: Vec<f64>| v.into_iter().map(NormEstimate::exact).collect();
    Ok(match tag.family {
        NormFamily::Ell1 => exact(cumulative(d, schedule, |a, x| a + x)),
        NormFamily::EllInf => exact(cumulative(d, schedule, f64::max)),
        NormFamily::Csup => exact(csup_partial(d, schedule)),
        NormFamily::Hp(p) => hp_partial(d, p, schedule, &samplers.hp)?,
        NormFamily::Dinf => {
            samplers.dinf.validate()?;
            schedule
                .iter()
                .map(|&cut| Ok(dinf_of_lift(&Lift::new(&d.truncate(cut))?, &samplers.dinf)))
                .collect::<Result<_>>()?
        }
    })
}

/// Result of a weak-norm search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakNorm {
    pub estimate: NormEstimate,
    pub maximizer: DualVector,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakPartialNorms {
    pub norms: Vec<NormEstimate>,
    /// Functional attaining the maximum at the last schedule point.
    pub maximizer: DualVector,
    pub candidates: usize,
}

/// `sup_{x*} ||D_{x*}||` over the sampled dual unit ball; a lower bound.
pub fn weak_norm(d: &DirichletTruncation, tag: NormTag, samplers: &Samplers) -> Result<WeakNorm> {
    let r = weak_partial_norms(d, tag, &[d.n_max()], samplers)?;
    Ok(WeakNorm {
        estimate: r.norms[0],
        maximizer: r.maximizer,
        candidates: r.candidates,
    })
}

pub fn weak_partial_norms(
    d: &DirichletTruncation,
    tag: NormTag,
    schedule: &[u64],
    samplers: &Samplers,
) -> Result<WeakPartialNorms> {
    if d.space().is_scalar() {
        return Err(Error::Domain(
            "weak norms need vector coefficients; on scalars they equal the plain norm".into(),
        ));
    }
    let inner = tag.strong();
    let candidates = dual_candidates(d, &samplers.dual);
    let results: Vec<Vec<NormEstimate>> = candidates
        .iter()
        .map(|x| partial_norms(&d.apply_functional(x)?, inner, schedule, samplers))
        .collect::<Result<_>>()?;
    let mut norms = results[0].clone();
    let mut arg_last = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        for (best, e) in norms.iter_mut().zip(r) {
            if e.value > best.value {
                *best = *e;
            }
        }
        if r.last().map(|e| e.value) > results[arg_last].last().map(|e| e.value) {
            arg_last = i;
        }
    }
    Ok(WeakPartialNorms {
        norms,
        maximizer: candidates[arg_last].clone(),
        candidates: candidates.len(),
    })
}

/// Functionals of the dual unit ball `B_{l_{q'}^d}` tried by the weak norms.
///
/// All norms here are invariant under unimodular rescaling of the series, so
/// extreme points are needed only up to a global phase:
/// * `q' = 1`: the canonical directions `e_j` (the complete list);
/// * `q' = inf`: every real sign vector when `d <= 16`, the functional that
///   aligns each coordinate with the phase of its largest entry, the norming
///   functional of the largest coefficient, and random unimodular vectors;
/// * otherwise: norming functionals of the largest coefficient and of the
///   total coefficient sum, and random Gaussian vectors normalized to the
///   unit sphere.
pub fn dual_candidates(d: &DirichletTruncation, sampler: &DualSampler) -> Vec<DualVector> {
    let space = *d.space();
    let dim = space.dim();
    let qd = space.dual_exponent();
    let mk = |v: Vec<C64>| DualVector::new(v, qd);
    let mut out = Vec::new();
    if qd == 1.0 {
        for j in 0..dim {
            let mut v = vec![C64::default(); dim];
            v[j] = C64::new(1.0, 0.0);
            out.push(mk(v));
        }
        return out;
    }
    let largest = d
        .iter()
        .map(|(_, c)| c)
        .max_by(|a, b| space.norm(a).total_cmp(&space.norm(b)));
    let total = d.iter().fold(Coefficient::zero(), |acc, (_, c)| acc.add(c));
    if qd.is_infinite() {
        if dim <= 16 {
            for mask in 0u32..(1 << (dim - 1)) {
                let v = (0..dim)
                    .map(|j| {
                        let neg = j > 0 && mask >> (j - 1) & 1 == 1;
                        C64::new(if neg { -1.0 } else { 1.0 }, 0.0)
                    })
                    .collect();
                out.push(mk(v));
            }
        }
        let mut column_max = vec![C64::default(); dim];
        for (_, c) in d.iter() {
            for &(j, z) in c.entries() {
                if z.norm() > column_max[j].norm() {
                    column_max[j] = z;
                }
            }
        }
        out.push(mk(column_max.iter().map(|z| phase_conj(*z)).collect()));
    }
    for c in largest.into_iter().chain(std::iter::once(&total)) {
        if !c.is_zero() {
            out.push(norming_functional(&c.to_dense(dim), space.q()));
        }
    }
    for i in 0..sampler.samples {
        let mut r = rng::stream(rng::derive(sampler.seed, SALT_DUAL), i as u64);
        let v: Vec<C64> = if qd.is_infinite() {
            (0..dim).map(|_| rng::unit_phase(&mut r)).collect()
        } else {
            (0..dim).map(|_| rng::complex_gaussian(&mut r)).collect()
        };
        out.push(mk(v).normalized());
    }
    out
}

fn phase_conj(z: C64) -> C64 {
    if z.norm() > 0.0 {
        z.conj() / z.norm()
    } else {
        C64::new(1.0, 0.0)
    }
}

/// `x*` with `||x*||_{q'} = 1` and `x*(v) = ||v||_q`.
pub fn norming_functional(v: &[C64], q: f64) -> DualVector {
    let qd = crate::series::dual_exponent(q);
    let entries: Vec<C64> = if q.is_infinite() {
        let (j, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("nonempty vector");
        let mut e = vec![C64::default(); v.len()];
        e[j] = phase_conj(v[j]);
        e
    } else if q == 1.0 {
        v.iter()
            .map(|z| if z.norm() > 0.0 { phase_conj(*z) } else { C64::default() })
            .collect()
    } else {
        v.iter().map(|z| z.conj() * z.norm().powf(q - 2.0)).collect()
    };
    DualVector::new(entries, qd).normalized()
}

/// Smallest observed `||D|| / sup ||a_n||` and largest observed
/// `||D|| / sum ||a_n||` over `trials` random polynomials with coefficients
/// in `space`.
///
/// Fails with an admissibility error when the first ratio drops below
/// `1/2` or the second exceeds `1`, beyond three standard errors for sampled
/// norms.
pub fn admissibility_check(
    tag: NormTag,
    space: CoefficientSpaceSpec,
    trials: usize,
    seed: u64,
    samplers: &Samplers,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for i in 0..trials {
        let d = random_polynomial(space, rng::derive(seed, SALT_ADMISSIBLE), i as u64)?;
        let est = norm(&d, tag, &samplers.seeded(rng::derive(seed, i as u64)))?;
        let sup = norm_ellinf(&d);
        let sum = norm_ell1(&d);
        let slack = 3.0 * est.standard_error + 1e-12 * sum;
        let (r1, r2) = (est.value / sup, est.value / sum);
        c1 = c1.min(r1);
        c2 = c2.max(r2);
        if est.value + slack < 0.5 * sup || est.value - slack > sum {
            return Err(Error::Admissibility {
                norm: tag.to_string(),
                detail: format!(
                    "trial {i}: ||D|| = {} (se {}), sup ||a_n|| = {sup}, sum ||a_n|| = {sum}, series {}",
                    est.value,
                    est.standard_error,
                    serde_json::to_string(&d).unwrap_or_default()
                ),
            });
        }
    }
    Ok((c1, c2))
}

/// Random polynomial for stream `index`: length in `1..=24`, each
/// coefficient present with probability 3/4, complex Gaussian entries.
pub fn random_polynomial(space: CoefficientSpaceSpec, seed: u64, index: u64) -> Result<DirichletTruncation> {
    let mut r = rng::stream(seed, index);
    let n_max = r.random_range(1..=24u64);
    let mut d = DirichletTruncation::new(space, n_max)?;
    let draw = |r: &mut rand_chacha::ChaCha8Rng| {
        let v: Vec<C64> = (0..space.dim()).map(|_| rng::complex_gaussian(r)).collect();
        Coefficient::from_dense(&v)
    };
    for n in 1..=n_max {
        if r.random_bool(0.75) {
            d.insert(n, draw(&mut r))?;
        }
    }
    if d.is_zero() {
        d.insert(n_max, draw(&mut r))?;
    }
    Ok(d)
}
