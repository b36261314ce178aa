//! The Bohr transform `n = p^alpha <-> z^alpha` between Dirichlet
//! polynomials and polynomials on the torus, the radial multipliers
//! `T_r f(w) = f(r w)` and `M_eps = T_{(p_k^{-eps})}`, and numerical checks of
//! the Weissler contraction and of the constants comparing `H_q` and `H_p`
//! norms of Dirichlet polynomials.

use crate::error::{Error, Result};
use crate::norms::{self, HpSampler};
use crate::prime_index::{MultiIndex, PrimeTable};
use crate::rng;
use crate::series::{Coefficient, CoefficientSpaceSpec, DirichletTruncation, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// `sum_alpha c_alpha z^alpha`, variable `k` standing for the `k`-th prime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPolynomial {
    space: CoefficientSpaceSpec,
    var_count: usize,
    terms: BTreeMap<MultiIndex, Coefficient>,
}

impl TorusPolynomial {
    pub fn new(space: CoefficientSpaceSpec) -> Self {
        TorusPolynomial {
            space,
            var_count: 0,
            terms: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, alpha: MultiIndex, c: Coefficient) -> Result<()> {
        if c.min_dim() > self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: c.min_dim(),
            });
        }
        if c.is_zero() {
            self.terms.remove(&alpha);
        } else {
            self.var_count = self.var_count.max(alpha.len());
            self.terms.insert(alpha, c);
        }
        Ok(())
    }

    pub fn space(&self) -> &CoefficientSpaceSpec {
        &self.space
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&Coefficient> {
        self.terms.get(alpha)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Product of two scalar polynomials.
    pub fn mul(&self, other: &TorusPolynomial) -> Result<TorusPolynomial> {
        if !self.space.is_scalar() || !other.space.is_scalar() {
            return Err(Error::Domain("polynomial product is implemented for scalar coefficients".into()));
        }
        let mut acc: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                *acc.entry(a.add(b)).or_default() += x.as_scalar() * y.as_scalar();
            }
        }
        let mut out = TorusPolynomial::new(self.space);
        for (alpha, z) in acc {
            out.insert(alpha, Coefficient::scalar(z))?;
        }
        Ok(out)
    }
}

/// Radii `r_k in [0, 1)`, one per torus variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusVector {
    radii: Vec<f64>,
}

impl RadiusVector {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if let Some(r) = radii.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::Domain(format!("radius {r} outside [0, 1)")));
        }
        Ok(RadiusVector { radii })
    }

    pub fn uniform(r: f64, count: usize) -> Result<Self> {
        RadiusVector::new(vec![r; count])
    }

    /// `r_k = p_k^{-eps}` for the first `count` primes.
    pub fn prime_powers(eps: f64, count: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        let table = PrimeTable::global();
        let radii = (1..=count)
            .map(|k| Ok((-(eps) * (table.nth_prime(k)? as f64).ln()).exp()))
            .collect::<Result<Vec<f64>>>()?;
        RadiusVector::new(radii)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Entrywise product (composition of the multipliers).
    pub fn compose(&self, other: &RadiusVector) -> RadiusVector {
        let n = self.radii.len().max(other.radii.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(1.0);
        RadiusVector {
            radii: (0..n).map(|k| get(&self.radii, k) * get(&other.radii, k)).collect(),
        }
    }
}

/// `sum a_n n^{-s} -> sum a_{p^alpha} z^alpha`.
pub fn bohr_lift(d: &DirichletTruncation) -> Result<TorusPolynomial> {
    let table = PrimeTable::global();
    let mut out = TorusPolynomial::new(*d.space());
    for (n, c) in d.iter() {
        out.insert(table.factorize(n)?, c.clone())?;
    }
    Ok(out)
}

/// Inverse of [`bohr_lift`]; `n_max` is the largest `p^alpha` present (at
/// least 1).
pub fn bohr_project(q: &TorusPolynomial) -> Result<DirichletTruncation> {
    let table = PrimeTable::global();
    let pairs = q
        .terms
        .iter()
        .map(|(alpha, c)| Ok((table.compose(alpha)?, c)))
        .collect::<Result<Vec<_>>>()?;
    let n_max = pairs.iter().map(|p| p.0).max().unwrap_or(1);
    let mut d = DirichletTruncation::new(q.space, n_max)?;
    for (n, c) in pairs {
        d.insert(n, c.clone())?;
    }
    Ok(d)
}

/// `T_r`: the coefficient at `alpha` is multiplied by `r^alpha`.
pub fn apply_tr(q: &TorusPolynomial, r: &RadiusVector) -> Result<TorusPolynomial> {
    if r.radii.len() < q.var_count {
        return Err(Error::Domain(format!(
            "radius vector has {} entries, polynomial uses {} variables",
            r.radii.len(),
            q.var_count
        )));
    }
    let mut out = TorusPolynomial::new(q.space);
    for (alpha, c) in &q.terms {
        let factor: f64 = alpha
            .exponents()
            .iter()
            .zip(&r.radii)
            .map(|(&e, &rk)| rk.powi(e as i32))
            .product();
        out.insert(alpha.clone(), c.scale(C64::new(factor, 0.0)))?;
    }
    Ok(out)
}

/// `M_eps`, computed through the lift as `B o T_r o B^{-1}` with
/// `r_k = p_k^{-eps}`; equals the translate `D(s + eps)`.
pub fn apply_m_eps(d: &DirichletTruncation, eps: f64) -> Result<DirichletTruncation> {
    let lifted = bohr_lift(d)?;
    let r = RadiusVector::prime_powers(eps, lifted.var_count())?;
    let projected = bohr_project(&apply_tr(&lifted, &r)?)?;
    let mut out = DirichletTruncation::new(*d.space(), d.n_max())?;
    for (n, c) in projected.iter() {
        out.insert(n, c.clone())?;
    }
    Ok(out)
}

/// `H_p` norm of a one-variable polynomial `sum_k c_k z^k` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleNorm {
    pub value: f64,
    pub standard_error: f64,
    pub exact: bool,
}

/// Exact for even integer `p` (`||f||_{2m}^{2m} = ||f^m||_2^2`), Monte Carlo
/// over `mc_samples` uniform angles otherwise.
pub fn circle_hp_norm(coeffs: &[C64], p: f64, mc_samples: usize, seed: u64) -> Result<CircleNorm> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Domain(format!("need 1 <= p < inf, got {p}")));
    }
    if let Some(m) = even_half(p) {
        let power = poly_pow(coeffs, m);
        let l2sq: f64 = power.iter().map(|z| z.norm_sqr()).sum();
        return Ok(CircleNorm {
            value: l2sq.powf(1.0 / p),
            standard_error: 0.0,
            exact: true,
        });
    }
    if mc_samples < 2 {
        return Err(Error::Domain("Monte Carlo needs at least 2 samples".into()));
    }
    let mut r = rng::stream(seed, 0);
    let draws: Vec<f64> = (0..mc_samples)
        .map(|_| {
            let w = C64::from_polar(1.0, TAU * r.random::<f64>());
            horner(coeffs, w).norm().powf(p)
        })
        .collect();
    Ok(moment_to_norm(&draws, p))
}

fn moment_to_norm(draws: &[f64], p: f64) -> CircleNorm {
    let m = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let value = mean.powf(1.0 / p);
    let standard_error = if mean > 0.0 { value / (p * mean) * (var / m).sqrt() } else { 0.0 };
    CircleNorm {
        value,
        standard_error,
        exact: false,
    }
}

/// `Some(m)` when `p = 2m` for a positive integer `m` (capped to keep the
/// convolution powers small).
fn even_half(p: f64) -> Option<u32> {
    let m = p / 2.0;
    (m.fract() == 0.0 && (1.0..=8.0).contains(&m)).then_some(m as u32)
}

fn horner(coeffs: &[C64], w: C64) -> C64 {
    coeffs.iter().rev().fold(C64::default(), |acc, c| acc * w + c)
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::default(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[C64], m: u32) -> Vec<C64> {
    (1..m).fold(a.to_vec(), |acc, _| poly_mul(&acc, a))
}

/// `||T_r f||_q / ||f||_p` with its propagated standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub coefficients: Vec<C64>,
    pub ratio: f64,
    pub standard_error: f64,
}

fn tr_ratio(coeffs: &[C64], r: f64, p: f64, q: f64, mc_samples: usize, seed: u64) -> Result<RatioSample> {
    let scaled: Vec<C64> = coeffs.iter().enumerate().map(|(k, c)| c * r.powi(k as i32)).collect();
    let num = circle_hp_norm(&scaled, q, mc_samples, rng::derive(seed, 1))?;
    let den = circle_hp_norm(coeffs, p, mc_samples, rng::derive(seed, 2))?;
    let ratio = num.value / den.value;
    let rel = ((num.standard_error / num.value).powi(2) + (den.standard_error / den.value).powi(2)).sqrt();
    Ok(RatioSample {
        coefficients: coeffs.to_vec(),
        ratio,
        standard_error: ratio * rel,
    })
}

/// Trial polynomials: trial 0 is `1 + z`, the others have degree uniform in
/// `0..=8` and independent standard complex Gaussian coefficients.
fn trial_polynomial(seed: u64, trial: usize) -> Vec<C64> {
    if trial == 0 {
        return vec![C64::new(1.0, 0.0); 2];
    }
    let mut r = rng::stream(seed, trial as u64);
    let degree = r.random_range(0..=8usize);
    (0..=degree).map(|_| rng::complex_gaussian(&mut r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeisslerReport {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// `sqrt(p / q)`: at or below it the multiplier should contract.
    pub critical_radius: f64,
    pub max_ratio: f64,
    pub max_ratio_se: f64,
    /// First trial whose ratio exceeds `1 + 3 se`.
    pub violation: Option<RatioSample>,
    /// True unless `r <= sqrt(p/q)` and a violation was found.
    pub within_contract: bool,
    pub trials: usize,
}

/// Largest `||T_r f||_{H_q} / ||f||_{H_p}` over random one-variable
/// polynomials.
pub fn weissler_check(p: f64, q: f64, r: f64, trials: usize, mc_samples: usize, seed: u64) -> Result<WeisslerReport> {
    if !(1.0 <= p && p <= q && q.is_finite()) {
        return Err(Error::Domain(format!("need 1 <= p <= q < inf, got p = {p}, q = {q}")));
    }
    if !(0.0..1.0).contains(&r) || trials == 0 {
        return Err(Error::Domain("need r in [0, 1) and trials >= 1".into()));
    }
    let mut best: Option<RatioSample> = None;
    let mut violation = None;
    for t in 0..trials {
        let s = tr_ratio(&trial_polynomial(seed, t), r, p, q, mc_samples, rng::derive(seed, t as u64))?;
        if violation.is_none() && s.ratio > 1.0 + 3.0 * s.standard_error + 1e-12 {
            violation = Some(s.clone());
        }
        if best.as_ref().is_none_or(|b| s.ratio > b.ratio) {
            best = Some(s);
        }
    }
    let best = best.expect("trials >= 1");
    let critical_radius = (p / q).sqrt();
    Ok(WeisslerReport {
        p,
        q,
        r,
        critical_radius,
        max_ratio: best.ratio,
        max_ratio_se: best.standard_error,
        within_contract: r > critical_radius || violation.is_none(),
        violation,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrBoundReport {
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub bound: f64,
    pub max_ratio: f64,
    pub max_ratio_se: f64,
    pub within_bound: bool,
    pub trials: usize,
}

/// Largest observed `||T_r f||_q / ||f||_p` against `1 / (1 - r)`. Besides
/// the random trials, the truncated geometric series `sum_{k<=8} z^k` is
/// always included.
pub fn one_var_tr_norm_bound(r: f64, p: f64, q: f64, trials: usize, mc_samples: usize, seed: u64) -> Result<TrBoundReport> {
    if !(0.0..1.0).contains(&r) || trials == 0 || !(1.0 <= p && p.is_finite() && 1.0 <= q && q.is_finite()) {
        return Err(Error::Domain("need r in [0, 1), finite p, q >= 1 and trials >= 1".into()));
    }
    let bound = 1.0 / (1.0 - r);
    let geometric = vec![C64::new(1.0, 0.0); 9];
    let mut best = tr_ratio(&geometric, r, p, q, mc_samples, rng::derive(seed, u64::MAX))?;
    let mut within = best.ratio <= bound + 3.0 * best.standard_error;
    for t in 0..trials {
        let s = tr_ratio(&trial_polynomial(seed, t), r, p, q, mc_samples, rng::derive(seed, t as u64))?;
        within &= s.ratio <= bound + 3.0 * s.standard_error;
        if s.ratio > best.ratio {
            best = s;
        }
    }
    Ok(TrBoundReport {
        r,
        p,
        q,
        bound,
        max_ratio: best.ratio,
        max_ratio_se: best.standard_error,
        within_bound: within,
        trials,
    })
}

/// Best observed `||D||_{H_q} / ||D||_{H_p}` over Dirichlet polynomials of
/// length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoinBound {
    pub p: f64,
    pub q: f64,
    pub n: u64,
    pub best_ratio: f64,
    pub standard_error: f64,
    /// Both norms evaluated exactly (even integer exponents).
    pub exact: bool,
    pub coefficients: Vec<C64>,
    pub evaluations: usize,
}

/// Exact `H_p` norm of a scalar Dirichlet polynomial for `p = 2m`:
/// `||D||_{2m}^{2m} = ||D^m||_2^2`, with `D^m` computed by Dirichlet
/// convolution (the torus monomials are orthonormal).
pub fn dirichlet_even_norm(d: &DirichletTruncation, p: f64) -> Option<f64> {
    let m = even_half(p)?;
    if !d.space().is_scalar() {
        return None;
    }
    let top = d.support_max().unwrap_or(1).checked_pow(m)?;
    let mut power = d.clone();
    for _ in 1..m {
        power = power.dirichlet_product(d, top).ok()?;
    }
    let l2sq: f64 = power.iter().map(|(_, c)| c.as_scalar().norm_sqr()).sum();
    Some(l2sq.powf(1.0 / p))
}

struct MoinObjective {
    p: f64,
    q: f64,
    sampler: HpSampler,
}

impl MoinObjective {
    fn exact(&self) -> bool {
        even_half(self.p).is_some() && even_half(self.q).is_some()
    }

    fn norm(&self, d: &DirichletTruncation, p: f64) -> Result<(f64, f64)> {
        if let Some(v) = dirichlet_even_norm(d, p) {
            return Ok((v, 0.0));
        }
        let e = norms::norm_hp(d, p, &self.sampler)?;
        Ok((e.value, e.standard_error))
    }

    fn ratio(&self, a: &[C64]) -> Result<(f64, f64)> {
        let d = DirichletTruncation::scalar_from_slice(a)?;
        let (num, se_num) = self.norm(&d, self.q)?;
        let (den, se_den) = self.norm(&d, self.p)?;
        if den == 0.0 {
            return Ok((0.0, 0.0));
        }
        let ratio = num / den;
        let rel = ((se_num / num).powi(2) + (se_den / den).powi(2)).sqrt();
        Ok((ratio, ratio * rel))
    }
}

/// Lower bound for the best constant `C(q, p, N)` in
/// `||D||_{H_q} <= C ||D||_{H_p}` over Dirichlet polynomials of length `N`.
///
/// Multi-start search: the candidates `e_1` and `(1, ..., 1)` plus random
/// complex Gaussian starts, each improved by coordinate ascent over phase
/// rotations and magnitude rescalings of single coefficients. The search
/// stops after `search_iters` objective evaluations.
pub fn moin_lower_bound(p: f64, q: f64, n: u64, search_iters: usize, seed: u64) -> Result<MoinBound> {
    moin_lower_bound_from(p, q, n, search_iters, seed, None)
}

/// As [`moin_lower_bound`], optionally warm-started from a shorter
/// coefficient vector (padded with zeros), so that bounds for increasing `N`
/// never decrease.
pub fn moin_lower_bound_from(
    p: f64,
    q: f64,
    n: u64,
    search_iters: usize,
    seed: u64,
    warm: Option<&[C64]>,
) -> Result<MoinBound> {
    if n < 2 {
        return Err(Error::Domain("N must be at least 2".into()));
    }
    if !(1.0 <= p && p <= q && q.is_finite()) {
        return Err(Error::Domain(format!("need 1 <= p <= q < inf, got p = {p}, q = {q}")));
    }
    let len = n as usize;
    let obj = MoinObjective {
        p,
        q,
        sampler: HpSampler {
            mc_samples: 4096,
            seed: rng::derive(seed, 0x6d6f_696e),
        },
    };
    let mut starts: Vec<Vec<C64>> = Vec::new();
    let mut unit = vec![C64::default(); len];
    unit[0] = C64::new(1.0, 0.0);
    starts.push(unit);
    starts.push(vec![C64::new(1.0, 0.0); len]);
    if let Some(w) = warm {
        let mut v = w.to_vec();
        v.resize(len, C64::default());
        starts.push(v);
    }
    let random_starts = 3;
    for i in 0..random_starts {
        let mut r = rng::stream(seed, i);
        starts.push((0..len).map(|_| rng::complex_gaussian(&mut r)).collect());
    }

    let mut evaluations = 0usize;
    let mut best: Option<(f64, f64, Vec<C64>)> = None;
    let budget_per_start = (search_iters / starts.len()).max(1);
    for (si, start) in starts.into_iter().enumerate() {
        let (mut cur_ratio, mut cur_se) = obj.ratio(&start)?;
        evaluations += 1;
        let mut cur = start;
        let mut used = 1usize;
        let mut r = rng::stream(seed, 1000 + si as u64);
        let moves: [C64; 6] = [
            C64::from_polar(1.0, TAU / 4.0),
            C64::new(-1.0, 0.0),
            C64::from_polar(1.0, -TAU / 4.0),
            C64::new(2.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.0),
        ];
        'search: while used < budget_per_start {
            let mut improved = false;
            for _ in 0..len {
                let k = r.random_range(0..len);
                for mv in moves {
                    if used >= budget_per_start {
                        break 'search;
                    }
                    let mut cand = cur.clone();
                    cand[k] = if cand[k] == C64::default() && mv.norm() > 0.0 {
                        rng::complex_gaussian(&mut r)
                    } else {
                        cand[k] * mv
                    };
                    let (ratio, se) = obj.ratio(&cand)?;
                    used += 1;
                    evaluations += 1;
                    if ratio > cur_ratio * (1.0 + 1e-12) {
                        cur = cand;
                        cur_ratio = ratio;
                        cur_se = se;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| cur_ratio > b.0) {
            best = Some((cur_ratio, cur_se, cur));
        }
    }
    let (best_ratio, standard_error, coefficients) = best.expect("at least one start");
    Ok(MoinBound {
        p,
        q,
        n,
        best_ratio,
        standard_error,
        exact: obj.exact(),
        coefficients,
        evaluations,
    })
}

/// Bounds for an increasing list of lengths, each search warm-started from
/// the previous maximizer.
pub fn moin_growth(p: f64, q: f64, n_list: &[u64], search_iters: usize, seed: u64) -> Result<Vec<MoinBound>> {
    let mut out: Vec<MoinBound> = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let warm = out.last().map(|b| b.coefficients.clone());
        out.push(moin_lower_bound_from(p, q, n, search_iters, rng::derive(seed, i as u64), warm.as_deref())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn random_scalar(len: u64, seed: u64, density: f64) -> DirichletTruncation {
        let mut r = rng::stream(seed, 0);
        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), len).unwrap();
        for n in 1..=len {
            if r.random_bool(density) {
                d.insert(n, Coefficient::scalar(rng::complex_gaussian(&mut r))).unwrap();
            }
        }
        d
    }

    #[test]
    fn lift_examples() {
        let d = DirichletTruncation::scalar_from_reals(&[7.0]).unwrap();
        let q = bohr_lift(&d).unwrap();
        assert_eq!(q.var_count(), 0);
        assert_eq!(q.get(&mi(&[])).unwrap().as_scalar(), c(7.0));

        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), 12).unwrap();
        d.insert(2, Coefficient::real(2.0)).unwrap();
        d.insert(3, Coefficient::real(3.0)).unwrap();
        let q = bohr_lift(&d).unwrap();
        assert_eq!(q.get(&mi(&[1])).unwrap().as_scalar(), c(2.0));
        assert_eq!(q.get(&mi(&[0, 1])).unwrap().as_scalar(), c(3.0));
        assert_eq!(q.var_count(), 2);

        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), 12).unwrap();
        d.insert(12, Coefficient::real(1.0)).unwrap();
        assert_eq!(bohr_lift(&d).unwrap().get(&mi(&[2, 1])).unwrap().as_scalar(), c(1.0));
    }

    #[test]
    fn project_examples() {
        let mut q = TorusPolynomial::new(CoefficientSpaceSpec::scalar());
        q.insert(mi(&[]), Coefficient::real(4.0)).unwrap();
        let d = bohr_project(&q).unwrap();
        assert_eq!(d.n_max(), 1);
        assert_eq!(d.get(1).unwrap().as_scalar(), c(4.0));

        let mut q = TorusPolynomial::new(CoefficientSpaceSpec::scalar());
        q.insert(mi(&[1, 1]), Coefficient::real(1.0)).unwrap();
        let d = bohr_project(&q).unwrap();
        assert_eq!((d.n_max(), d.support_len()), (6, 1));

        let mut q = TorusPolynomial::new(CoefficientSpaceSpec::scalar());
        q.insert(mi(&[64]), Coefficient::real(1.0)).unwrap();
        assert!(matches!(bohr_project(&q), Err(Error::Overflow(_))));
    }

    #[test]
    fn round_trip_random() {
        for seed in 0..100 {
            let d = random_scalar(500, seed, 0.3);
            let back = bohr_project(&bohr_lift(&d).unwrap()).unwrap();
            // projection trims n_max to the support; compare coefficients
            assert!(d.iter().eq(back.iter()));
        }
    }

    #[test]
    fn tr_examples() {
        let mut q = TorusPolynomial::new(CoefficientSpaceSpec::scalar());
        q.insert(mi(&[]), Coefficient::real(1.0)).unwrap();
        q.insert(mi(&[1]), Coefficient::real(1.0)).unwrap();
        q.insert(mi(&[0, 3]), Coefficient::real(1.0)).unwrap();
        let zero = apply_tr(&q, &RadiusVector::uniform(0.0, 2).unwrap()).unwrap();
        assert_eq!(zero.len(), 1);
        assert!(zero.get(&mi(&[])).is_some());

        let mut q = TorusPolynomial::new(CoefficientSpaceSpec::scalar());
        q.insert(mi(&[]), Coefficient::real(1.0)).unwrap();
        q.insert(mi(&[1]), Coefficient::real(1.0)).unwrap();
        let half = apply_tr(&q, &RadiusVector::new(vec![0.5]).unwrap()).unwrap();
        assert_eq!(half.get(&mi(&[1])).unwrap().as_scalar(), c(0.5));

        let mut q = TorusPolynomial::new(CoefficientSpaceSpec::scalar());
        q.insert(mi(&[2, 1]), Coefficient::real(6.0)).unwrap();
        let t = apply_tr(&q, &RadiusVector::new(vec![0.5, 1.0 / 3.0]).unwrap()).unwrap();
        assert!((t.get(&mi(&[2, 1])).unwrap().as_scalar() - c(0.5)).norm() < 1e-15);

        assert!(RadiusVector::new(vec![1.0]).is_err());
        assert!(RadiusVector::new(vec![-0.1]).is_err());
        assert!(apply_tr(&q, &RadiusVector::new(vec![0.5]).unwrap()).is_err());
    }

    #[test]
    fn m_eps_examples() {
        let d = random_scalar(300, 5, 0.8);
        let tiny = apply_m_eps(&d, 1e-9).unwrap();
        for (n, a) in d.iter() {
            let b = tiny.get(n).unwrap();
            assert!((a.as_scalar() - b.as_scalar()).norm() <= 1e-6 * a.as_scalar().norm());
        }
        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), 12).unwrap();
        d.insert(12, Coefficient::real(1.0)).unwrap();
        let m = apply_m_eps(&d, 1.0).unwrap();
        assert!((m.get(12).unwrap().as_scalar() - c(1.0 / 12.0)).norm() < 1e-15);
        assert!(apply_m_eps(&d, 0.0).is_err());
    }

    #[test]
    fn m_eps_matches_translate() {
        for seed in 0..100 {
            let d = random_scalar(400, 100 + seed, 0.5);
            let eps = 0.05 + 0.01 * seed as f64;
            let a = apply_m_eps(&d, eps).unwrap();
            let b = d.translate(eps);
            assert_eq!(a.n_max(), b.n_max());
            for (n, x) in b.iter() {
                let y = a.get(n).unwrap().as_scalar();
                assert!((x.as_scalar() - y).norm() <= 1e-12 * x.as_scalar().norm().max(1e-300));
            }
        }
    }

    #[test]
    fn lift_is_multiplicative() {
        for seed in 0..10 {
            let a = random_scalar(40, seed, 0.6);
            let b = random_scalar(40, 50 + seed, 0.6);
            let n_max = 200;
            let prod = a.dirichlet_product(&b, n_max).unwrap();
            let lifted = bohr_lift(&a).unwrap().mul(&bohr_lift(&b).unwrap()).unwrap();
            let table = PrimeTable::global();
            let mut count = 0;
            for (alpha, z) in lifted.terms() {
                let n = table.compose(alpha).unwrap();
                if n <= n_max {
                    count += 1;
                    let w = prod.get(n).map_or(C64::default(), |c| c.as_scalar());
                    assert!((w - z.as_scalar()).norm() < 1e-12);
                }
            }
            assert_eq!(count, prod.support_len());
        }
    }

    proptest! {
        #[test]
        fn tr_composes(r1 in proptest::collection::vec(0.0f64..0.999, 4), r2 in proptest::collection::vec(0.0f64..0.999, 4), seed in 0u64..50) {
            let d = random_scalar(60, seed, 0.7);
            let q = bohr_lift(&d).unwrap();
            let pad = |v: Vec<f64>| { let mut v = v; v.resize(q.var_count().max(4), 0.5); RadiusVector::new(v).unwrap() };
            let (a, b) = (pad(r1), pad(r2));
            let twice = apply_tr(&apply_tr(&q, &b).unwrap(), &a).unwrap();
            let once = apply_tr(&q, &a.compose(&b)).unwrap();
            for (alpha, x) in once.terms() {
                let y = twice.get(alpha).map_or(C64::default(), |c| c.as_scalar());
                prop_assert!((x.as_scalar() - y).norm() <= 1e-12 * x.as_scalar().norm());
            }
            prop_assert_eq!(once.len(), twice.len());
        }
    }

    #[test]
    fn circle_norms() {
        // E|1 + z|^4 = 6 exactly, and by Monte Carlo within its error
        let f = [c(1.0), c(1.0)];
        let exact = circle_hp_norm(&f, 4.0, 0, 0).unwrap();
        assert!(exact.exact && (exact.value - 6f64.powf(0.25)).abs() < 1e-15);
        let mc = circle_hp_norm(&f, 3.0, 40_000, 1).unwrap();
        // E|1+z|^3 = E(2 + 2cos)^{3/2} = 32 / (3 pi)
        let want = (32.0 / (3.0 * std::f64::consts::PI)).powf(1.0 / 3.0);
        assert!((mc.value - want).abs() < 4.0 * mc.standard_error, "{mc:?} vs {want}");
    }

    #[test]
    fn weissler_examples() {
        let rep = weissler_check(2.0, 4.0, 0.0, 20, 0, 1).unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-12 && rep.within_contract);

        let rep = weissler_check(2.0, 4.0, 0.5f64.sqrt(), 100, 0, 2).unwrap();
        assert!(rep.violation.is_none() && rep.max_ratio <= 1.0 + 1e-12, "{rep:?}");

        let rep = weissler_check(2.0, 4.0, 0.9, 1, 0, 3).unwrap();
        let want = 4.8961f64.powf(0.25) / 2f64.sqrt();
        assert!((rep.max_ratio - want).abs() < 1e-12);
        assert!(rep.violation.is_some() && rep.within_contract);

        // p = 1.5 goes through Monte Carlo
        let rep = weissler_check(1.5, 3.0, 0.5f64.sqrt(), 10, 4000, 4).unwrap();
        assert!(rep.within_contract, "{rep:?}");
    }

    #[test]
    fn tr_bound_examples() {
        let rep = one_var_tr_norm_bound(0.0, 2.0, 2.0, 20, 0, 1).unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-12);
        for (p, q) in [(1.0, 8.0), (2.0, 4.0), (3.0, 3.0)] {
            let rep = one_var_tr_norm_bound(0.5, p, q, 30, 3000, 2).unwrap();
            assert!(rep.within_bound && rep.bound == 2.0, "{rep:?}");
        }
        let rep = one_var_tr_norm_bound(0.95, 2.0, 2.0, 1, 0, 3).unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio <= rep.bound);
    }

    #[test]
    fn even_norm_matches_closed_form() {
        let d = DirichletTruncation::scalar_from_reals(&[1.0, 1.0]).unwrap();
        assert!((dirichlet_even_norm(&d, 4.0).unwrap() - 6f64.powf(0.25)).abs() < 1e-15);
        // 1 + 2^{-s} + 3^{-s}: E|1 + z1 + z2|^4 = sum over 4-tuples = 3 + 2*3*2 = 15
        let d = DirichletTruncation::scalar_from_reals(&[1.0, 1.0, 1.0]).unwrap();
        assert!((dirichlet_even_norm(&d, 4.0).unwrap() - 15f64.powf(0.25)).abs() < 1e-14);
        assert!(dirichlet_even_norm(&d, 3.0).is_none());
    }

    #[test]
    fn moin_examples() {
        let b = moin_lower_bound(2.0, 4.0, 2, 60, 1).unwrap();
        assert!(b.exact);
        assert!(b.best_ratio >= 6f64.powf(0.25) / 2f64.sqrt() - 1e-12, "{b:?}");
        let b = moin_lower_bound(1.0, 3.0, 4, 20, 1).unwrap();
        assert!(b.best_ratio >= 1.0 - 3.0 * b.standard_error - 1e-12);
        assert!(moin_lower_bound(2.0, 4.0, 1, 10, 1).is_err());

        let growth = moin_growth(2.0, 4.0, &[2, 4, 8, 16], 120, 3).unwrap();
        for w in growth.windows(2) {
            assert!(w[1].best_ratio >= w[0].best_ratio - 1e-12);
        }
        let last = growth.last().unwrap();
        assert!(last.best_ratio.ln() / (last.n as f64).ln() < 0.5);
    }
}
