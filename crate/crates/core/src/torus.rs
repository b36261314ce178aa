//! Evaluation of a Dirichlet polynomial through its lift to a finite torus.
//!
//! The variables are the primes dividing some support index, numbered
//! locally in increasing order. A point `w` of the torus corresponds to the
//! vertical line point `s = it` when `w_k = p_k^{-it}`.

use crate::error::Result;
use crate::prime_index::PrimeTable;
use crate::series::{lq_norm, Coefficient, DirichletTruncation, C64};

#[derive(Debug, Clone)]
pub(crate) struct Term {
    pub n: u64,
    /// `(local variable, exponent)` pairs.
    pub factors: Vec<(usize, u32)>,
    pub coeff: Coefficient,
}

#[derive(Debug, Clone)]
pub struct Lift {
    primes: Vec<u64>,
    max_exp: Vec<u32>,
    pub(crate) terms: Vec<Term>,
    /// For each variable, the terms it divides with their exponents.
    pub(crate) by_var: Vec<Vec<(usize, u32)>>,
    dim: usize,
    q: f64,
}

impl Lift {
    pub fn new(d: &DirichletTruncation) -> Result<Self> {
        Self::with_table(d, PrimeTable::global())
    }

    pub fn with_table(d: &DirichletTruncation, table: &PrimeTable) -> Result<Self> {
        let mut raw = Vec::with_capacity(d.support_len());
        let mut primes = Vec::new();
        for (n, c) in d.iter() {
            let f = table.factor_pairs(n)?;
            primes.extend(f.iter().map(|&(p, _)| p));
            raw.push((n, f, c.clone()));
        }
        primes.sort_unstable();
        primes.dedup();
        let var = |p: u64| primes.binary_search(&p).expect("prime collected above");
        let mut max_exp = vec![0u32; primes.len()];
        let mut by_var = vec![Vec::new(); primes.len()];
        let terms = raw
            .into_iter()
            .enumerate()
            .map(|(i, (n, f, coeff))| {
                let factors: Vec<(usize, u32)> = f.iter().map(|&(p, e)| (var(p), e)).collect();
                for &(k, e) in &factors {
                    max_exp[k] = max_exp[k].max(e);
                    by_var[k].push((i, e));
                }
                Term { n, factors, coeff }
            })
            .collect();
        Ok(Lift {
            primes,
            max_exp,
            terms,
            by_var,
            dim: d.space().dim(),
            q: d.space().q(),
        })
    }

    pub fn var_count(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub(crate) fn max_exp(&self, k: usize) -> u32 {
        self.max_exp[k]
    }

    /// The torus point `(p_k^{-it})_k`.
    pub fn vertical_point(&self, t: f64) -> Vec<C64> {
        self.primes
            .iter()
            .map(|&p| C64::from_polar(1.0, -t * (p as f64).ln()))
            .collect()
    }

    /// `w^alpha(n)` for every support term.
    pub fn monomials(&self, w: &[C64], out: &mut Vec<C64>) {
        out.clear();
        out.extend(self.terms.iter().map(|t| {
            t.factors
                .iter()
                .fold(C64::new(1.0, 0.0), |acc, &(k, e)| acc * w[k].powu(e))
        }));
    }

    /// The value of the lifted polynomial at `w`, densely.
    pub fn value(&self, w: &[C64]) -> Vec<C64> {
        let mut z = Vec::new();
        self.monomials(w, &mut z);
        let mut acc = vec![C64::default(); self.dim];
        for (t, zi) in self.terms.iter().zip(&z) {
            t.coeff.add_scaled_into(*zi, &mut acc);
        }
        acc
    }

    /// Norms of the partial sums `sum_{n <= N} a_n w^alpha(n)` for each `N` of
    /// an increasing schedule.
    pub fn partial_norms(&self, w: &[C64], schedule: &[u64], z: &mut Vec<C64>, acc: &mut Vec<C64>, out: &mut [f64]) {
        self.monomials(w, z);
        acc.clear();
        acc.resize(self.dim, C64::default());
        let mut i = 0;
        for (slot, &cut) in out.iter_mut().zip(schedule) {
            while i < self.terms.len() && self.terms[i].n <= cut {
                self.terms[i].coeff.add_scaled_into(z[i], acc);
                i += 1;
            }
            *slot = lq_norm(acc, self.q);
        }
    }
}

/// Cyclic coordinate ascent of `w -> ||P(w)||` over the torus variables.
pub(crate) struct Ascent<'a> {
    lift: &'a Lift,
    w: Vec<C64>,
    z: Vec<C64>,
    total: Vec<C64>,
    angles: usize,
}

impl<'a> Ascent<'a> {
    pub fn new(lift: &'a Lift, w: Vec<C64>) -> Self {
        let mut z = Vec::new();
        lift.monomials(&w, &mut z);
        let mut total = vec![C64::default(); lift.dim];
        for (t, zi) in lift.terms.iter().zip(&z) {
            t.coeff.add_scaled_into(*zi, &mut total);
        }
        Ascent {
            lift,
            w,
            z,
            total,
            angles: 32,
        }
    }

    /// Exact recomputation at the current point (removes drift).
    pub fn exact_value(&self) -> f64 {
        lq_norm(&self.lift.value(&self.w), self.lift.q)
    }

    pub fn sweeps(&mut self, count: usize) {
        for _ in 0..count {
            let mut improved = false;
            for k in 0..self.lift.var_count() {
                improved |= self.update_var(k);
            }
            if !improved {
                break;
            }
        }
    }

    fn update_var(&mut self, k: usize) -> bool {
        let lift = self.lift;
        let dim = lift.dim;
        let q = lift.q;
        let m = lift.max_exp(k) as usize;
        let wk = self.w[k];
        // total = rest + sum_j c_j w_k^j
        let mut c = vec![vec![C64::default(); dim]; m + 1];
        for &(i, e) in &lift.by_var[k] {
            let unshifted = self.z[i] * wk.powi(-(e as i32));
            lift.terms[i].coeff.add_scaled_into(unshifted, &mut c[e as usize]);
        }
        let mut rest = self.total.clone();
        for (j, cj) in c.iter().enumerate().skip(1) {
            let wj = wk.powu(j as u32);
            for (r, x) in rest.iter_mut().zip(cj) {
                *r -= x * wj;
            }
        }
        let eval = |u: C64, buf: &mut Vec<C64>| {
            buf.clear();
            buf.extend_from_slice(&rest);
            for (j, cj) in c.iter().enumerate().skip(1) {
                let uj = u.powu(j as u32);
                for (b, x) in buf.iter_mut().zip(cj) {
                    *b += x * uj;
                }
            }
            lq_norm(buf, q)
        };
        let mut buf = Vec::with_capacity(dim);
        let current = eval(wk, &mut buf);
        let mut best = (current, wk);
        let mut candidates: Vec<C64> = (0..self.angles)
            .map(|a| C64::from_polar(1.0, std::f64::consts::TAU * a as f64 / self.angles as f64))
            .collect();
        if dim == 1 && m == 1 && c[1][0].norm() > 0.0 {
            // |r + c u| is maximal when c u is aligned with r
            let r = rest[0];
            let phase = if r.norm() > 0.0 { r / r.norm() } else { C64::new(1.0, 0.0) };
            candidates.push(phase * c[1][0].conj() / c[1][0].norm());
        }
        for u in candidates {
            let v = eval(u, &mut buf);
            if v > best.0 * (1.0 + 1e-13) {
                best = (v, u);
            }
        }
        if best.1 == wk {
            return false;
        }
        let ratio = best.1 / wk;
        for &(i, e) in &lift.by_var[k] {
            self.z[i] *= ratio.powu(e);
        }
        self.w[k] = best.1;
        eval(best.1, &mut buf);
        self.total = buf;
        true
    }
}
