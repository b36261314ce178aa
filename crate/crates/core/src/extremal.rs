//! Explicit series separating the absolute and unconditional abscissas.
//!
//! Prime blocks `A_1 < A_2 < ...` are chosen with
//!
//! * `max A_m < min A_{m+1}`,
//! * `sum_{p in A_m} p^{-(1 + q_m/m)} < 2^{-q_m/m}`,
//! * `sum_{p in A_m} 1/p >= mass target`,
//!
//! and the series is `D = sum_m sum_{p in A_m} x_p p^{-1/q_m} p^{-s}` with unit
//! vectors `x_p` satisfying, for all scalars `a_p`,
//! `sup |a_p| <= ||sum a_p x_p|| <= (sum |a_p|^{q_m})^{1/q_m}`.
//!
//! In `l_q^d` with `q >= q_m` the canonical basis does this. When `q < q_m`
//! (for example `l_1` with `q_m > 1`) canonical vectors would make every sign
//! pattern equally large, and the block uses normalized rows of a Sylvester
//! Hadamard matrix instead: `x_p = h_p / d^{1/q}` gives
//! `||sum a_p x_p||_q <= ||a||_2` by Hölder and Parseval, and pairing with
//! `h_p` gives the lower bound.

use crate::abscissa::{self, AbscissaEstimate, SignStrategy};
use crate::error::{Error, Result};
use crate::norms::{NormTag, Samplers};
use crate::prime_index::PrimeTable;
use crate::series::{Coefficient, CoefficientSpaceSpec, DirichletTruncation, C64};
use serde::{Deserialize, Serialize};

/// `cot(X)`: 2 for scalars, `max(q, 2)` for `l_q^d`, `inf` for `q = inf`.
pub fn cotype_of(space: &CoefficientSpaceSpec) -> f64 {
    space.nominal_cotype()
}

/// The largest possible gap `1 - 1/cot(X)` between the absolute and the
/// unconditional abscissa.
pub fn predicted_gap(space: &CoefficientSpaceSpec) -> f64 {
    1.0 - 1.0 / cotype_of(space)
}

/// `q_m = cot - (cot - 1) / 2^{m-1}` for `m = 1..=blocks`.
pub fn default_q_schedule(cotype: f64, blocks: usize) -> Result<Vec<f64>> {
    if !(cotype.is_finite() && cotype >= 2.0) {
        return Err(Error::Domain(format!("no finite cotype schedule for cot = {cotype}")));
    }
    Ok((1..=blocks)
        .map(|m| cotype - (cotype - 1.0) / 2f64.powi(m as i32 - 1))
        .collect())
}

/// Lower bounds for `sum_{p in A_m} 1/p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassSchedule {
    Uniform(f64),
    PerBlock(Vec<f64>),
}

impl MassSchedule {
    fn target(&self, m: usize) -> Result<f64> {
        let t = match self {
            MassSchedule::Uniform(t) => *t,
            MassSchedule::PerBlock(v) => *v.get(m).ok_or_else(|| {
                Error::Domain(format!("mass schedule has {} entries, block {} requested", v.len(), m + 1))
            })?,
        };
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("mass target {t} outside (0, 1]")));
        }
        Ok(t)
    }
}

/// Measured values of the three block conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockClauses {
    pub m: usize,
    pub q: f64,
    pub min_prime: u64,
    pub max_prime: u64,
    pub separated: bool,
    pub decay_sum: f64,
    pub decay_bound: f64,
    /// `decay_bound - decay_sum`.
    pub decay_slack: f64,
    pub mass: f64,
    pub mass_target: f64,
}

impl BlockClauses {
    pub fn holds(&self) -> bool {
        self.separated && self.decay_sum < self.decay_bound && self.mass >= self.mass_target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub q_schedule: Vec<f64>,
    pub blocks: Vec<Vec<u64>>,
    pub mass_targets: Vec<f64>,
    pub prime_budget: u64,
    pub clauses: Vec<BlockClauses>,
}

impl BlockPlan {
    pub fn empty() -> Self {
        BlockPlan {
            q_schedule: Vec::new(),
            blocks: Vec::new(),
            mass_targets: Vec::new(),
            prime_budget: 0,
            clauses: Vec::new(),
        }
    }

    pub fn prime_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn all_clauses_hold(&self) -> bool {
        self.clauses.iter().all(BlockClauses::holds)
    }

    /// The first `k` blocks.
    pub fn prefix(&self, k: usize) -> BlockPlan {
        let k = k.min(self.blocks.len());
        BlockPlan {
            q_schedule: self.q_schedule[..k].to_vec(),
            blocks: self.blocks[..k].to_vec(),
            mass_targets: self.mass_targets[..k].to_vec(),
            prime_budget: self.prime_budget,
            clauses: self.clauses[..k].to_vec(),
        }
    }
}

fn clauses_for(m: usize, q: f64, block: &[u64], previous_max: Option<u64>, mass_target: f64) -> BlockClauses {
    let e = q / m as f64;
    let decay_sum: f64 = block.iter().map(|&p| (p as f64).powf(-(1.0 + e))).sum();
    let decay_bound = 2f64.powf(-e);
    BlockClauses {
        m,
        q,
        min_prime: block[0],
        max_prime: *block.last().unwrap(),
        separated: previous_max.is_none_or(|prev| prev < block[0]),
        decay_sum,
        decay_bound,
        decay_slack: decay_bound - decay_sum,
        mass: block.iter().map(|&p| 1.0 / p as f64).sum(),
        mass_target,
    }
}

/// Greedy blocks of consecutive primes `<= prime_budget`: each block takes
/// primes until its reciprocal mass reaches the target, then the decay
/// condition is checked.
pub fn build_blocks(q_schedule: &[f64], prime_budget: u64, mass: &MassSchedule) -> Result<BlockPlan> {
    if q_schedule.iter().any(|q| !(q.is_finite() && *q > 0.0)) || q_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("q schedule must be positive, finite and strictly increasing".into()));
    }
    let table = PrimeTable::global();
    if prime_budget > table.bound() {
        return Err(Error::TableTooSmall {
            requested: prime_budget,
            capacity: table.bound(),
        });
    }
    let primes = table.range(2, prime_budget);
    let mut plan = BlockPlan {
        q_schedule: q_schedule.to_vec(),
        blocks: Vec::new(),
        mass_targets: Vec::new(),
        prime_budget,
        clauses: Vec::new(),
    };
    let mut next = 0usize;
    for (i, &q) in q_schedule.iter().enumerate() {
        let m = i + 1;
        let target = mass.target(i)?;
        let mut sum = 0.0;
        let start = next;
        while sum < target && next < primes.len() {
            sum += 1.0 / primes[next] as f64;
            next += 1;
        }
        if sum < target {
            return Err(Error::PartialPlan {
                failed_block: m,
                complete: plan.blocks,
            });
        }
        let block = primes[start..next].to_vec();
        let clauses = clauses_for(m, q, &block, plan.blocks.last().and_then(|b| b.last().copied()), target);
        if clauses.decay_sum >= clauses.decay_bound {
            return Err(Error::Construction {
                block: m,
                measured: clauses.decay_sum,
                bound: clauses.decay_bound,
            });
        }
        plan.blocks.push(block);
        plan.mass_targets.push(target);
        plan.clauses.push(clauses);
    }
    Ok(plan)
}

/// How block `m` realizes its unit directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    Canonical,
    Hadamard,
}

fn embedding_for(space_q: f64, block_q: f64) -> Embedding {
    if space_q >= block_q {
        Embedding::Canonical
    } else {
        Embedding::Hadamard
    }
}

fn block_width(embedding: Embedding, len: usize) -> usize {
    match embedding {
        Embedding::Canonical => len,
        Embedding::Hadamard => len.next_power_of_two(),
    }
}

/// Coordinates used by the series for `plan` in `l_q`: the blocks occupy
/// consecutive disjoint coordinate ranges.
pub fn required_dim(space_q: f64, plan: &BlockPlan) -> usize {
    plan.blocks
        .iter()
        .zip(&plan.q_schedule)
        .map(|(b, &q)| block_width(embedding_for(space_q, q), b.len()))
        .sum()
}

/// `(-1)^{popcount(i & j)}`: the Sylvester Hadamard matrix.
fn hadamard_sign(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The series `sum_m sum_{p in A_m} x_p p^{-1/q_m} p^{-s}`; `n_max` is the
/// largest prime of the plan (1 for the empty plan).
pub fn build_eco(space: &CoefficientSpaceSpec, plan: &BlockPlan) -> Result<DirichletTruncation> {
    if space.is_scalar() {
        return Err(Error::Domain("the construction needs an l_q coefficient space".into()));
    }
    let cot = cotype_of(space);
    if let Some(q) = plan.q_schedule.iter().find(|&&q| q >= cot) {
        return Err(Error::Precondition(format!("block exponent {q} is not below the cotype {cot}")));
    }
    let need = required_dim(space.q(), plan);
    if space.dim() < need {
        return Err(Error::Domain(format!(
            "dimension {} too small: the plan needs {need} coordinates",
            space.dim()
        )));
    }
    let n_max = plan.blocks.iter().flatten().copied().max().unwrap_or(1);
    let mut d = DirichletTruncation::new(*space, n_max)?;
    let mut offset = 0usize;
    for (block, &qm) in plan.blocks.iter().zip(&plan.q_schedule) {
        let embedding = embedding_for(space.q(), qm);
        let width = block_width(embedding, block.len());
        for (i, &p) in block.iter().enumerate() {
            let weight = (p as f64).powf(-1.0 / qm);
            let c = match embedding {
                Embedding::Canonical => Coefficient::basis(offset + i, C64::new(weight, 0.0)),
                Embedding::Hadamard => {
                    let scale = weight / (width as f64).powf(1.0 / space.q());
                    Coefficient::from_sparse(
                        (0..width)
                            .map(|j| (offset + j, C64::new(scale * hadamard_sign(i, j), 0.0)))
                            .collect(),
                    )
                }
            };
            d.insert(p, c)?;
        }
        offset += width;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    /// Dyadic schedule `2, 4, ..., 2^kmax`.
    pub kmax: u32,
    pub sign_trials: usize,
    pub seed: u64,
    pub samplers: Samplers,
}

impl Default for GapParams {
    fn default() -> Self {
        GapParams {
            kmax: 13,
            sign_trials: 16,
            seed: 0,
            samplers: Samplers::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sigma_a_est: AbscissaEstimate,
    pub sigma_unc_est: AbscissaEstimate,
    pub predicted_gap: f64,
    pub cotype: f64,
    /// Mass targets actually used, block by block (1 is the unrelaxed
    /// condition).
    pub mass_targets: Vec<f64>,
    pub clauses_hold: bool,
}

/// Absolute (`l_1` growth) and unconditional (sign search) abscissa estimates
/// of the constructed series. The series is padded to `2^kmax` so every plan
/// prefix is measured on the same schedule.
pub fn verify_gap(d: &DirichletTruncation, plan: &BlockPlan, params: &GapParams) -> Result<GapReport> {
    let n_max = d.n_max().max(1u64 << params.kmax.min(62));
    let mut padded = DirichletTruncation::new(*d.space(), n_max)?;
    for (n, c) in d.iter() {
        padded.insert(n, c.clone())?;
    }
    let schedule = abscissa::dyadic_schedule(params.kmax, n_max);
    let samplers = params.samplers.seeded(params.seed);
    let sigma_a_est = abscissa::bohr_cahen(&padded, NormTag::ELL1, &schedule, &samplers)?;
    let sigma_unc_est = abscissa::unconditional_abscissa(
        &padded,
        SignStrategy::Random,
        params.sign_trials,
        params.seed,
        &schedule,
        &samplers,
    )?;
    Ok(GapReport {
        sigma_a_est,
        sigma_unc_est,
        predicted_gap: predicted_gap(d.space()),
        cotype: cotype_of(d.space()),
        mass_targets: plan.mass_targets.clone(),
        clauses_hold: plan.all_clauses_hold(),
    })
}
