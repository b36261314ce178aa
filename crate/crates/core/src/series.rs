//! Truncated Dirichlet series `sum a_n n^{-s}` with scalar or `l_q^d`
//! coefficients.

use crate::error::{Error, Result};
use crate::prime_index::PrimeTable;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Scalar,
    Vector,
}

/// The coefficient space: `C`, or `l_q^d` standing in for the
/// infinite-dimensional `l_q` whose cotype it carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpaceSpec {
    kind: SpaceKind,
    dim: usize,
    #[serde(with = "crate::ext")]
    q: f64,
}

impl CoefficientSpaceSpec {
    pub fn scalar() -> Self {
        CoefficientSpaceSpec {
            kind: SpaceKind::Scalar,
            dim: 1,
            q: 2.0,
        }
    }

    /// `l_q^dim`, `q` in `[1, inf]`.
    pub fn lq(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("vector space needs dim >= 1".into()));
        }
        if q.is_nan() || q < 1.0 {
            return Err(Error::Domain(format!("norm exponent {q} outside [1, inf]")));
        }
        Ok(CoefficientSpaceSpec {
            kind: SpaceKind::Vector,
            dim,
            q,
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn is_scalar(&self) -> bool {
        self.kind == SpaceKind::Scalar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Norm exponent; 2 for the scalar space (modulus).
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dual_exponent(&self) -> f64 {
        dual_exponent(self.q)
    }

    /// `cot(C) = 2`, `cot(l_q) = max(q, 2)`, `cot(l_inf) = inf`.
    pub fn nominal_cotype(&self) -> f64 {
        match self.kind {
            SpaceKind::Scalar => 2.0,
            SpaceKind::Vector if self.q.is_infinite() => f64::INFINITY,
            SpaceKind::Vector => self.q.max(2.0),
        }
    }

    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match self.kind {
            SpaceKind::Scalar if dim == 1 => Ok(*self),
            SpaceKind::Scalar => Err(Error::Domain("scalar space has dimension 1".into())),
            SpaceKind::Vector => Self::lq(dim, self.q),
        }
    }

    pub fn norm(&self, c: &Coefficient) -> f64 {
        c.norm(self.q)
    }

    /// Norm of a dense vector in this space.
    pub fn norm_dense(&self, v: &[C64]) -> f64 {
        lq_norm(v, self.q)
    }
}

/// `q' = q / (q - 1)` with `1' = inf` and `inf' = 1`.
pub fn dual_exponent(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

pub fn lq_norm(v: &[C64], q: f64) -> f64 {
    lq_norm_iter(v.iter().copied(), q)
}

pub(crate) fn lq_norm_iter(v: impl Iterator<Item = C64>, q: f64) -> f64 {
    if q.is_infinite() {
        v.map(|z| z.norm()).fold(0.0, f64::max)
    } else if q == 1.0 {
        v.map(|z| z.norm()).sum()
    } else if q == 2.0 {
        v.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    } else {
        v.map(|z| z.norm().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// A coefficient vector, stored sparsely: sorted `(coordinate, value)` pairs
/// without explicit zeros. Scalars live at coordinate 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    entries: Vec<(usize, C64)>,
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::default()
    }

    pub fn scalar(z: C64) -> Self {
        Coefficient::from_sparse(vec![(0, z)])
    }

    pub fn real(x: f64) -> Self {
        Coefficient::scalar(C64::new(x, 0.0))
    }

    pub fn basis(j: usize, z: C64) -> Self {
        Coefficient::from_sparse(vec![(j, z)])
    }

    pub fn from_dense(v: &[C64]) -> Self {
        Coefficient {
            entries: v
                .iter()
                .enumerate()
                .filter(|(_, z)| **z != C64::new(0.0, 0.0))
                .map(|(j, z)| (j, *z))
                .collect(),
        }
    }

    /// Sorts, merges duplicate coordinates by addition and drops zeros.
    pub fn from_sparse(mut entries: Vec<(usize, C64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out: Vec<(usize, C64)> = Vec::with_capacity(entries.len());
        for (j, z) in entries {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += z,
                _ => out.push((j, z)),
            }
        }
        out.retain(|e| e.1 != C64::new(0.0, 0.0));
        Coefficient { entries: out }
    }

    pub fn entries(&self) -> &[(usize, C64)] {
        &self.entries
    }

    pub fn get(&self, j: usize) -> C64 {
        self.entries
            .binary_search_by_key(&j, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or_default()
    }

    /// The value at coordinate 0; the whole coefficient for scalar spaces.
    pub fn as_scalar(&self) -> C64 {
        self.get(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest occupied coordinate.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0 + 1)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<C64> {
        let mut v = vec![C64::default(); dim];
        for &(j, z) in &self.entries {
            v[j] = z;
        }
        v
    }

    pub fn norm(&self, q: f64) -> f64 {
        lq_norm_iter(self.entries.iter().map(|e| e.1), q)
    }

    pub fn scale(&self, z: C64) -> Coefficient {
        Coefficient::from_sparse(self.entries.iter().map(|&(j, w)| (j, w * z)).collect())
    }

    pub fn add(&self, other: &Coefficient) -> Coefficient {
        let mut all = self.entries.clone();
        all.extend_from_slice(&other.entries);
        Coefficient::from_sparse(all)
    }

    /// Bilinear pairing `x*(a) = sum_j x*_j a_j`.
    pub fn pair(&self, functional: &[C64]) -> C64 {
        self.entries
            .iter()
            .filter_map(|&(j, z)| functional.get(j).map(|x| *x * z))
            .sum()
    }

    /// `acc += z * self`.
    pub fn add_scaled_into(&self, z: C64, acc: &mut [C64]) {
        for &(j, w) in &self.entries {
            acc[j] += w * z;
        }
    }
}

/// A functional from the dual unit ball, `||x*||_{q'} <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub entries: Vec<C64>,
    #[serde(with = "crate::ext")]
    pub norm_exponent: f64,
}

impl DualVector {
    pub fn new(entries: Vec<C64>, norm_exponent: f64) -> Self {
        DualVector {
            entries,
            norm_exponent,
        }
    }

    pub fn for_space(space: &CoefficientSpaceSpec, entries: Vec<C64>) -> Self {
        DualVector::new(entries, space.dual_exponent())
    }

    pub fn norm(&self) -> f64 {
        lq_norm(&self.entries, self.norm_exponent)
    }

    /// Rescaled onto the unit sphere of its norm (unchanged if zero).
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.entries {
                *z /= n;
            }
        }
        self
    }
}

/// `sum_{n <= n_max} a_n n^{-s}`; absent keys are zero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletTruncation {
    space: CoefficientSpaceSpec,
    n_max: u64,
    coeffs: BTreeMap<u64, Coefficient>,
}

impl DirichletTruncation {
    pub fn new(space: CoefficientSpaceSpec, n_max: u64) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Domain("n_max must be positive".into()));
        }
        Ok(DirichletTruncation {
            space,
            n_max,
            coeffs: BTreeMap::new(),
        })
    }

    /// Scalar series with `a_n = f(n)` for `1 <= n <= n_max`.
    pub fn scalar_from_fn(n_max: u64, mut f: impl FnMut(u64) -> C64) -> Result<Self> {
        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), n_max)?;
        for n in 1..=n_max {
            d.insert(n, Coefficient::scalar(f(n)))?;
        }
        Ok(d)
    }

    /// Scalar series from `a_1, a_2, ...`; `n_max` is the slice length.
    pub fn scalar_from_slice(a: &[C64]) -> Result<Self> {
        DirichletTruncation::scalar_from_fn(a.len() as u64, |n| a[n as usize - 1])
    }

    pub fn scalar_from_reals(a: &[f64]) -> Result<Self> {
        DirichletTruncation::scalar_from_fn(a.len() as u64, |n| C64::new(a[n as usize - 1], 0.0))
    }

    pub fn insert(&mut self, n: u64, c: Coefficient) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::Range(format!("index {n} outside 1..={}", self.n_max)));
        }
        if c.min_dim() > self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: c.min_dim(),
            });
        }
        if c.is_zero() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, c);
        }
        Ok(())
    }

    pub fn space(&self) -> &CoefficientSpaceSpec {
        &self.space
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn get(&self, n: u64) -> Option<&Coefficient> {
        self.coeffs.get(&n)
    }

    /// Nonzero coefficients in increasing `n`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &Coefficient)> + '_ {
        self.coeffs.iter().map(|(n, c)| (*n, c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn support_max(&self) -> Option<u64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn map_coeffs(&self, space: CoefficientSpaceSpec, f: impl Fn(u64, &Coefficient) -> Coefficient) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&n, c)| (n, f(n, c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        DirichletTruncation {
            space,
            n_max: self.n_max,
            coeffs,
        }
    }

    /// `sum a_n n^{-sigma} n^{-s}`.
    pub fn translate(&self, sigma: f64) -> Self {
        self.map_coeffs(self.space, |n, c| {
            c.scale(C64::new((-(sigma) * (n as f64).ln()).exp(), 0.0))
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        self.map_coeffs(self.space, |_, c| c.scale(z))
    }

    pub fn add(&self, other: &DirichletTruncation) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::Domain("adding series over different spaces".into()));
        }
        let mut out = self.clone();
        out.n_max = self.n_max.max(other.n_max);
        for (n, c) in other.iter() {
            let sum = out.coeffs.get(&n).map_or_else(|| c.clone(), |a| a.add(c));
            out.insert(n, sum)?;
        }
        Ok(out)
    }

    /// The partial sum `sum_{n <= n_cut} a_n n^{-s}` as a truncation with
    /// `n_max = n_cut`.
    pub fn truncate(&self, n_cut: u64) -> Self {
        DirichletTruncation {
            space: self.space,
            n_max: n_cut.clamp(1, self.n_max),
            coeffs: self.coeffs.range(..=n_cut).map(|(n, c)| (*n, c.clone())).collect(),
        }
    }

    /// `sum_{n <= N} a_n n^{-s}`.
    pub fn evaluate_partial(&self, s: C64, n_cut: u64) -> Result<Coefficient> {
        if n_cut == 0 || n_cut > self.n_max {
            return Err(Error::Range(format!(
                "partial sum length {n_cut} outside 1..={}",
                self.n_max
            )));
        }
        let mut acc = vec![C64::default(); self.space.dim()];
        for (&n, c) in self.coeffs.range(..=n_cut) {
            c.add_scaled_into(n_pow_neg(n, s), &mut acc);
        }
        Ok(Coefficient::from_dense(&acc))
    }

    /// Scalar series `sum x*(a_n) n^{-s}`.
    pub fn apply_functional(&self, functional: &DualVector) -> Result<Self> {
        if functional.entries.len() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                found: functional.entries.len(),
            });
        }
        Ok(self.map_coeffs(CoefficientSpaceSpec::scalar(), |_, c| {
            Coefficient::scalar(c.pair(&functional.entries))
        }))
    }

    /// Keeps the coefficients with `Omega(n) = m`.
    pub fn homogeneous_part(&self, m: u32) -> Self {
        self.homogeneous_part_with(PrimeTable::global(), m)
    }

    pub fn homogeneous_part_with(&self, table: &PrimeTable, m: u32) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(&n, _)| table.omega(n).map_or(false, |w| w == m))
            .map(|(n, c)| (*n, c.clone()))
            .collect();
        DirichletTruncation {
            space: self.space,
            n_max: self.n_max,
            coeffs,
        }
    }

    /// Dirichlet convolution of two scalar series, truncated at `n_max`.
    pub fn dirichlet_product(&self, other: &DirichletTruncation, n_max: u64) -> Result<Self> {
        if !self.space.is_scalar() || !other.space.is_scalar() {
            return Err(Error::Domain("Dirichlet product is implemented for scalar series".into()));
        }
        let mut acc: BTreeMap<u64, C64> = BTreeMap::new();
        for (m, a) in self.iter() {
            for (k, b) in other.iter() {
                match m.checked_mul(k) {
                    Some(n) if n <= n_max => *acc.entry(n).or_default() += a.as_scalar() * b.as_scalar(),
                    _ => break,
                }
            }
        }
        let mut out = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), n_max)?;
        for (n, z) in acc {
            out.insert(n, Coefficient::scalar(z))?;
        }
        Ok(out)
    }

    /// Norms `||a_n||` of the nonzero coefficients, in increasing `n`.
    pub fn coefficient_norms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.iter().map(|(n, c)| (n, self.space.norm(c)))
    }
}

/// `n^{-s}`.
pub fn n_pow_neg(n: u64, s: C64) -> C64 {
    (-s * (n as f64).ln()).exp()
}

/// `sum (a_n + lambda_n x0) n^{-s}` for `D1` with coefficients in a coordinate
/// hyperplane of `l_q^{d+1}`, a scalar `D2 = sum lambda_n n^{-s}` and a unit
/// vector `x0` supported on the coordinate `D1` avoids.
///
/// `D1`'s coordinates are used unchanged inside the ambient `l_q^{d+1}`.
pub fn combine_with_direction(
    d1: &DirichletTruncation,
    d2: &DirichletTruncation,
    x0: &Coefficient,
) -> Result<DirichletTruncation> {
    if d1.space.is_scalar() {
        return Err(Error::Domain("D1 must be vector valued".into()));
    }
    if !d2.space.is_scalar() {
        return Err(Error::Domain("D2 must be scalar".into()));
    }
    let ambient = d1.space.with_dim(d1.space.dim() + 1)?;
    let [(axis, _)] = x0.entries() else {
        return Err(Error::Precondition("x0 must be supported on a single coordinate".into()));
    };
    let axis = *axis;
    if axis >= ambient.dim() {
        return Err(Error::DimensionMismatch {
            expected: ambient.dim(),
            found: axis + 1,
        });
    }
    if (ambient.norm(x0) - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("||x0|| = {} is not 1", ambient.norm(x0))));
    }
    if let Some((n, _)) = d1.iter().find(|(_, c)| c.get(axis) != C64::default()) {
        return Err(Error::Precondition(format!(
            "D1 coefficient at n = {n} overlaps the coordinate {axis} of x0"
        )));
    }
    let mut out = DirichletTruncation::new(ambient, d1.n_max.max(d2.n_max))?;
    for (n, a) in d1.iter() {
        out.insert(n, a.clone())?;
    }
    for (n, lambda) in d2.iter() {
        let add = x0.scale(lambda.as_scalar());
        let sum = out.get(n).map_or_else(|| add.clone(), |a| a.add(&add));
        out.insert(n, sum)?;
    }
    Ok(out)
}

/// One of the three summation-by-parts identities relating partial sums of
/// a series and of its translates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbelIdentity {
    /// `sum_{M<n<=N} a_n n^{-(sigma+eps+s)}` against partial sums of
    /// `a_k k^{-(sigma+s)}` weighted by `n^{-eps}`.
    Shifted { sigma: f64, eps: f64 },
    /// The same with no shift, weights `n^{-exponent}` (`exponent = L + eps`).
    Unshifted { exponent: f64 },
    /// `sum_{n<=N} a_n n^{-s}` rebuilt from the partial sums of
    /// `a_k k^{-(sigma0+s)}` and the weights `n^{sigma0}`.
    Recentered { sigma0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbelResidual {
    /// `||lhs - rhs||_X`.
    pub residual: f64,
    /// Sum of the norms of every term on both sides.
    pub scale: f64,
}

impl AbelResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Residual of the [`AbelIdentity::Shifted`] identity.
pub fn abel_identity_residual(
    d: &DirichletTruncation,
    sigma: f64,
    eps: f64,
    m: u64,
    n: u64,
    s: C64,
) -> Result<f64> {
    Ok(abel_residual(d, AbelIdentity::Shifted { sigma, eps }, m, n, s)?.residual)
}

pub fn abel_residual(
    d: &DirichletTruncation,
    identity: AbelIdentity,
    m: u64,
    n: u64,
    s: C64,
) -> Result<AbelResidual> {
    let dim = d.space.dim();
    let q = d.space.q();
    let (shift, weight_exp) = match identity {
        AbelIdentity::Shifted { sigma, eps } => {
            if eps <= 0.0 {
                return Err(Error::Domain("eps must be positive".into()));
            }
            (sigma, eps)
        }
        AbelIdentity::Unshifted { exponent } => (0.0, exponent),
        AbelIdentity::Recentered { sigma0 } => (sigma0, -sigma0),
    };
    let recentered = matches!(identity, AbelIdentity::Recentered { .. });
    if recentered {
        if n < 2 || n > d.n_max {
            return Err(Error::Range(format!("need 2 <= N <= {}, got N = {n}", d.n_max)));
        }
    } else if !(1 <= m && m + 1 < n && n <= d.n_max) {
        return Err(Error::Range(format!(
            "need 1 <= M < N-1 <= n_max-1, got M = {m}, N = {n}, n_max = {}",
            d.n_max
        )));
    }

    // weight c_n = n^{-weight_exp}
    let weight = |k: u64| ((k as f64).ln() * -weight_exp).exp();
    let shifted_s = s + C64::new(shift, 0.0);

    let mut lhs = vec![C64::default(); dim];
    let mut rhs = vec![C64::default(); dim];
    let mut scale = 0.0;
    let lhs_from = if recentered { 1 } else { m + 1 };

    // B_k = sum_{j <= k} a_j j^{-(shift + s)}, built incrementally over k.
    let mut partial = vec![C64::default(); dim];
    let mut coeffs = d.coeffs.range(..=n).peekable();
    for k in 1..=n {
        if let Some((_, c)) = coeffs.next_if(|(&j, _)| j == k) {
            let b = n_pow_neg(k, shifted_s);
            c.add_scaled_into(b, &mut partial);
            if k >= lhs_from {
                let term = n_pow_neg(k, s + C64::new(shift + weight_exp, 0.0));
                c.add_scaled_into(term, &mut lhs);
                scale += c.norm(q) * term.norm();
            }
        }
        // Boundary terms and the summation-by-parts tail.
        let mut coef = 0.0;
        if k == n {
            coef += weight(n);
        }
        if !recentered && k == m {
            coef -= weight(m);
        }
        let tail_start = if recentered { 1 } else { m };
        if k >= tail_start && k < n {
            coef += weight(k) - weight(k + 1);
        }
        if coef != 0.0 {
            for (r, b) in rhs.iter_mut().zip(&partial) {
                *r += *b * coef;
            }
            scale += lq_norm(&partial, q) * coef.abs();
        }
    }
    let diff: Vec<C64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    Ok(AbelResidual {
        residual: lq_norm(&diff, q),
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn scalars(d: &DirichletTruncation) -> Vec<C64> {
        (1..=d.n_max())
            .map(|n| d.get(n).map_or(C64::default(), |a| a.as_scalar()))
            .collect()
    }

    fn random_scalar(len: u64, seed: u64) -> DirichletTruncation {
        let mut r = rng::stream(seed, 0);
        DirichletTruncation::scalar_from_fn(len, |_| rng::complex_gaussian(&mut r)).unwrap()
    }

    fn random_vector(len: u64, dim: usize, q: f64, seed: u64) -> DirichletTruncation {
        let mut r = rng::stream(seed, 0);
        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::lq(dim, q).unwrap(), len).unwrap();
        for n in 1..=len {
            let v: Vec<C64> = (0..dim).map(|_| rng::complex_gaussian(&mut r)).collect();
            d.insert(n, Coefficient::from_dense(&v)).unwrap();
        }
        d
    }

    #[test]
    fn space_cotypes() {
        assert_eq!(CoefficientSpaceSpec::scalar().nominal_cotype(), 2.0);
        assert_eq!(CoefficientSpaceSpec::lq(3, 1.0).unwrap().nominal_cotype(), 2.0);
        assert_eq!(CoefficientSpaceSpec::lq(3, 4.0).unwrap().nominal_cotype(), 4.0);
        assert!(CoefficientSpaceSpec::lq(3, f64::INFINITY).unwrap().nominal_cotype().is_infinite());
        assert!(CoefficientSpaceSpec::lq(0, 2.0).is_err());
        assert!(CoefficientSpaceSpec::lq(2, 0.5).is_err());
    }

    #[test]
    fn insert_validates() {
        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::lq(2, 2.0).unwrap(), 5).unwrap();
        assert!(matches!(d.insert(6, Coefficient::real(1.0)), Err(Error::Range(_))));
        assert!(matches!(d.insert(0, Coefficient::real(1.0)), Err(Error::Range(_))));
        assert!(matches!(
            d.insert(2, Coefficient::basis(2, c(1.0))),
            Err(Error::DimensionMismatch { .. })
        ));
        d.insert(3, Coefficient::zero()).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn translate_examples() {
        let d = DirichletTruncation::scalar_from_reals(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(scalars(&d.translate(0.0)), vec![c(1.0); 3]);

        let d = DirichletTruncation::scalar_from_reals(&[1.0, 1.0]).unwrap();
        assert_eq!(scalars(&d.translate(1.0)), vec![c(1.0), c(0.5)]);

        let d = DirichletTruncation::scalar_from_reals(&[1.0; 4]).unwrap();
        let t = scalars(&d.translate(0.5));
        let want = [1.0, 2f64.powf(-0.5), 3f64.powf(-0.5), 0.5];
        for (a, b) in t.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
        assert_eq!(d.translate(0.5).n_max(), 4);
    }

    #[test]
    fn evaluate_partial_examples() {
        let ones = DirichletTruncation::scalar_from_reals(&[1.0; 5]).unwrap();
        assert_eq!(ones.evaluate_partial(c(0.0), 3).unwrap().as_scalar(), c(3.0));

        let alt = DirichletTruncation::scalar_from_fn(6, |n| c(if n % 2 == 0 { 1.0 } else { -1.0 })).unwrap();
        assert_eq!(alt.evaluate_partial(c(0.0), 4).unwrap().as_scalar(), c(0.0));

        let d = DirichletTruncation::scalar_from_reals(&[1.0, 1.0]).unwrap();
        assert!((d.evaluate_partial(c(1.0), 2).unwrap().as_scalar() - c(1.5)).norm() < 1e-15);
        assert!(matches!(d.evaluate_partial(c(0.0), 3), Err(Error::Range(_))));
    }

    #[test]
    fn translate_composes() {
        let d = random_scalar(200, 4);
        let a = d.translate(0.3).translate(-0.7);
        let b = d.translate(-0.4);
        for n in 1..=200 {
            let (x, y) = (a.get(n).unwrap().as_scalar(), b.get(n).unwrap().as_scalar());
            assert!((x - y).norm() <= 1e-12 * y.norm());
        }
    }

    #[test]
    fn functional_examples() {
        let mut e = DirichletTruncation::new(CoefficientSpaceSpec::lq(3, 1.0).unwrap(), 3).unwrap();
        for n in 1..=3 {
            e.insert(n, Coefficient::basis(n as usize - 1, c(1.0))).unwrap();
        }
        let zero = e.apply_functional(&DualVector::new(vec![C64::default(); 3], f64::INFINITY)).unwrap();
        assert!(zero.is_zero());
        let ones = e.apply_functional(&DualVector::new(vec![c(1.0); 3], f64::INFINITY)).unwrap();
        assert_eq!(scalars(&ones), vec![c(1.0); 3]);

        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::lq(2, 2.0).unwrap(), 4).unwrap();
        for n in 1..=4 {
            d.insert(n, Coefficient::basis(0, c(n as f64))).unwrap();
        }
        assert!(d.apply_functional(&DualVector::new(vec![c(0.0), c(1.0)], 2.0)).unwrap().is_zero());
        assert!(matches!(
            d.apply_functional(&DualVector::new(vec![c(1.0)], 2.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn functional_is_linear() {
        let d = random_vector(50, 4, 2.0, 9);
        let mut r = rng::stream(10, 0);
        let x: Vec<C64> = (0..4).map(|_| rng::complex_gaussian(&mut r)).collect();
        let y: Vec<C64> = (0..4).map(|_| rng::complex_gaussian(&mut r)).collect();
        let xy: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let dx = d.apply_functional(&DualVector::new(x, 2.0)).unwrap();
        let dy = d.apply_functional(&DualVector::new(y, 2.0)).unwrap();
        let dxy = d.apply_functional(&DualVector::new(xy, 2.0)).unwrap();
        let sum = dx.add(&dy).unwrap();
        for n in 1..=50 {
            let a = dxy.get(n).map_or(C64::default(), |c| c.as_scalar());
            let b = sum.get(n).map_or(C64::default(), |c| c.as_scalar());
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_examples() {
        let d = DirichletTruncation::scalar_from_reals(&[1.0; 6]).unwrap();
        let keys: Vec<u64> = d.homogeneous_part(1).iter().map(|(n, _)| n).collect();
        assert_eq!(keys, vec![2, 3, 5]);
        let keys: Vec<u64> = d.homogeneous_part(0).iter().map(|(n, _)| n).collect();
        assert_eq!(keys, vec![1]);

        // oracle: enumerate Omega by repeated division
        let omega = |mut n: u64| {
            let mut k = 0;
            let mut p = 2;
            while n > 1 {
                while n % p == 0 {
                    n /= p;
                    k += 1;
                }
                p += 1;
            }
            k
        };
        let d = DirichletTruncation::scalar_from_reals(&[1.0; 12]).unwrap();
        let keys: Vec<u64> = d.homogeneous_part(2).iter().map(|(n, _)| n).collect();
        let want: Vec<u64> = (1..=12).filter(|&n| omega(n) == 2).collect();
        assert_eq!(want, vec![4, 6, 9, 10]);
        assert_eq!(keys, want);
    }

    #[test]
    fn homogeneous_parts_reconstruct() {
        let d = random_vector(300, 3, 1.5, 2);
        let top = (300f64).log2().floor() as u32;
        let mut acc = DirichletTruncation::new(*d.space(), d.n_max()).unwrap();
        for m in 0..=top {
            acc = acc.add(&d.homogeneous_part(m)).unwrap();
        }
        assert_eq!(acc, d);
    }

    #[test]
    fn combine_examples() {
        let space = CoefficientSpaceSpec::lq(3, 2.0).unwrap();
        let mut d1 = DirichletTruncation::new(space, 10).unwrap();
        for (k, p) in [2u64, 3, 5, 7].iter().enumerate() {
            if k < 3 {
                d1.insert(*p, Coefficient::basis(k, c(1.0))).unwrap();
            }
        }
        let zero2 = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), 10).unwrap();
        let x0 = Coefficient::basis(3, c(1.0));
        let emb = combine_with_direction(&d1, &zero2, &x0).unwrap();
        assert_eq!(emb.space().dim(), 4);
        assert_eq!(emb.support_len(), 3);

        let zeta = DirichletTruncation::scalar_from_reals(&[1.0; 10]).unwrap();
        let empty = DirichletTruncation::new(space, 10).unwrap();
        let e1 = Coefficient::basis(1, c(1.0));
        let d = combine_with_direction(&empty, &zeta, &e1).unwrap();
        for n in 1..=10 {
            assert_eq!(d.get(n).unwrap(), &e1);
        }

        // entrywise oracle
        let alt = DirichletTruncation::scalar_from_fn(10, |n| c(if n % 2 == 0 { 1.0 } else { -1.0 })).unwrap();
        let d = combine_with_direction(&d1, &alt, &x0).unwrap();
        for n in 1..=10u64 {
            let mut want = vec![C64::default(); 4];
            want[3] = alt.get(n).unwrap().as_scalar();
            if let Some(a) = d1.get(n) {
                for &(j, z) in a.entries() {
                    want[j] += z;
                }
            }
            assert_eq!(d.get(n).unwrap().to_dense(4), want, "n = {n}");
        }

        // overlap with the x0 axis
        assert!(matches!(
            combine_with_direction(&d1, &alt, &Coefficient::basis(1, c(1.0))),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            combine_with_direction(&d1, &alt, &Coefficient::basis(3, c(2.0))),
            Err(Error::Precondition(_))
        ));
    }

    // Exact rational evaluation of the shifted identity for a = (1,1,1,1,1),
    // sigma = 0, eps = 1, M = 1, N = 4, s = 0:
    // lhs = 1/2 + 1/3 + 1/4 = 13/12;
    // rhs = B_4/4 - B_1/1 + B_1(1 - 1/2) + B_2(1/2 - 1/3) + B_3(1/3 - 1/4)
    //     = 1 - 1 + 1/2 + 1/3 + 1/4 = 13/12.
    #[test]
    fn abel_exact_case() {
        let d = DirichletTruncation::scalar_from_reals(&[1.0; 5]).unwrap();
        let r = abel_identity_residual(&d, 0.0, 1.0, 1, 4, c(0.0)).unwrap();
        assert!(r < 1e-12, "{r}");
        let zero = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), 5).unwrap();
        assert_eq!(abel_identity_residual(&zero, 0.3, 1.0, 1, 4, c(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn abel_rejects_bad_indices() {
        let d = random_scalar(10, 1);
        assert!(abel_identity_residual(&d, 0.0, 1.0, 3, 4, c(0.0)).is_err());
        assert!(abel_identity_residual(&d, 0.0, 1.0, 0, 4, c(0.0)).is_err());
        assert!(abel_identity_residual(&d, 0.0, 1.0, 1, 11, c(0.0)).is_err());
    }

    #[test]
    fn abel_identities_on_random_vector_series() {
        let d = random_vector(60, 3, 1.0, 5);
        let s = C64::new(0.2, 3.0);
        for id in [
            AbelIdentity::Shifted { sigma: -0.3, eps: 0.4 },
            AbelIdentity::Unshifted { exponent: 0.8 },
            AbelIdentity::Recentered { sigma0: 0.6 },
        ] {
            let r = abel_residual(&d, id, 7, 60, s).unwrap();
            assert!(r.relative() < 1e-12, "{id:?}: {r:?}");
        }
    }

    proptest! {
        #[test]
        fn abel_shifted_holds(seed in 0u64..1000, m in 1u64..30, extra in 2u64..30,
                              sigma in -1.0f64..1.0, eps in 0.01f64..2.0, t in -20.0f64..20.0) {
            let n = m + extra;
            let d = random_scalar(n, seed);
            let r = abel_residual(&d, AbelIdentity::Shifted { sigma, eps }, m, n, C64::new(0.0, t)).unwrap();
            prop_assert!(r.relative() < 1e-12);
        }
    }
}
