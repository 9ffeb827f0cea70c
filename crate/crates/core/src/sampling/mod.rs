//! Seeded Monte-Carlo sampling and estimation.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). Work is cut into chunks
//! of [`CHUNK`] draws; chunk `k` uses the generator seeded with the run's
//! seed and switched to stream `k`. Chunks run in parallel and are combined
//! in chunk order, so results do not depend on the number of threads.

pub mod dataset_io;
pub mod ipw;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::exact::EngineError;
use crate::model::{Coupling, DiscoModel, SolveError, UnitId};
use crate::pmf::FinitePmf;
use crate::query::{Event, Query, Target, UnitRef, WorldRef};
use crate::rational::{to_f64, Value};
use crate::report::ValidationReport;

pub use dataset_io::{read_csv, read_sidecar, write_csv, write_sidecar, Sidecar};

/// Draws per chunk; part of the reproducibility contract.
pub const CHUNK: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplingError {
    #[error("invalid query: {0}")]
    InvalidQuery(ValidationReport),
    #[error("no proposal out of {proposals} satisfied the evidence; use the exact engine for rare evidence")]
    NoAcceptedSamples { proposals: u64 },
    #[error("sample count must be at least 1")]
    EmptyRun,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{0}")]
    Dataset(String),
}

/// Monte-Carlo estimate with a normal-approximation standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub point: f64,
    pub stderr: f64,
    /// Draws that entered the average (accepted proposals for conditional queries).
    pub n: u64,
    pub seed: u64,
}

impl Estimate {
    /// `point ± z·stderr`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.point - z * self.stderr, self.point + z * self.stderr)
    }

    pub fn within(&self, exact: f64, z: f64) -> bool {
        (self.point - exact).abs() <= z * self.stderr + 1e-12
    }

    fn from_moments(m: Moments, seed: u64) -> Estimate {
        let n = m.count as f64;
        let var = if m.count > 1 { m.m2 / (n - 1.0) } else { 0.0 };
        Estimate { point: m.mean, stderr: (var / n).sqrt(), n: m.count, seed }
    }
}

/// Running count, mean and sum of squared deviations (Welford), mergeable
/// across chunks.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.count == 0 {
            return o;
        }
        if o.count == 0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        let (a, b) = (self.count as f64, o.count as f64);
        Moments { count, mean: self.mean + d * b / count as f64, m2: self.m2 + o.m2 + d * d * a * b / count as f64 }
    }
}

/// Generator for one chunk of a seeded run.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Chunk sizes covering `n` draws.
fn chunks(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK)).map(|k| (k, CHUNK.min(n - k * CHUNK))).collect()
}

/// Exact integer-threshold sampling when the common denominator fits in a
/// `u64`, floating-point inversion otherwise.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    values: Vec<Value>,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Exact { cumulative: Vec<u64>, total: u64 },
    Float { cumulative: Vec<f64> },
}

impl DiscreteSampler {
    pub fn new(entries: &[(Value, BigRational)]) -> DiscreteSampler {
        let live: Vec<&(Value, BigRational)> = entries.iter().filter(|(_, p)| !p.is_zero()).collect();
        let values = live.iter().map(|(v, _)| *v).collect();
        let lcd = live.iter().fold(BigInt::from(1), |acc, (_, p)| acc.lcm(p.denom()));
        let kind = match lcd.to_u64() {
            Some(total) => {
                let mut acc = 0u64;
                let cumulative = live
                    .iter()
                    .map(|(_, p)| {
                        let scaled = (p * BigRational::from_integer(lcd.clone())).to_integer();
                        acc += scaled.to_u64().expect("scaled mass fits");
                        acc
                    })
                    .collect();
                SamplerKind::Exact { cumulative, total }
            }
            None => {
                let mut acc = 0.0;
                let cumulative = live
                    .iter()
                    .map(|(_, p)| {
                        acc += to_f64(p);
                        acc
                    })
                    .collect();
                SamplerKind::Float { cumulative }
            }
        };
        DiscreteSampler { values, kind }
    }

    pub fn from_pmf(pmf: &FinitePmf) -> DiscreteSampler {
        DiscreteSampler::new(pmf.entries())
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.kind {
            SamplerKind::Exact { cumulative, total } => {
                let r = rng.random_range(0..*total);
                cumulative.partition_point(|&c| c <= r)
            }
            SamplerKind::Float { cumulative } => {
                let r: f64 = rng.random::<f64>() * cumulative.last().copied().unwrap_or(1.0);
                cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        self.values[self.sample_index(rng)]
    }
}

/// Draws units and noise vectors for one model.
pub(crate) struct ModelSampler {
    units: Vec<UnitId>,
    unit_sampler: Option<DiscreteSampler>,
    noises: Vec<DiscreteSampler>,
}

impl ModelSampler {
    /// Sampler restricted to `units`, with weights renormalized over them.
    pub(crate) fn new(model: &DiscoModel, units: Vec<UnitId>) -> ModelSampler {
        let uniform = model.spec().population.weights.is_none();
        let unit_sampler = if uniform {
            None
        } else {
            let entries: Vec<(Value, BigRational)> =
                units.iter().enumerate().map(|(i, u)| (Value::from_integer(i as i64), model.weight(*u).clone())).collect();
            Some(DiscreteSampler::new(&entries))
        };
        ModelSampler { units, unit_sampler, noises: model.noises().iter().map(|n| DiscreteSampler::from_pmf(&n.pmf)).collect() }
    }

    pub(crate) fn unit<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitId {
        let i = match &self.unit_sampler {
            None => rng.random_range(0..self.units.len()),
            Some(s) => s.sample_index(rng),
        };
        self.units[i]
    }

    pub(crate) fn noise<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Value]) {
        for (slot, s) in out.iter_mut().zip(&self.noises) {
            *slot = s.sample(rng);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Exact(String),
    Sampled { seed: u64, n: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub unit: UnitId,
    pub values: Vec<Value>,
}

/// Observed records of (unit, endogenous values).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub variables: Vec<String>,
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column(&self, var: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == var)
    }

    /// Records matching every `(variable, value)` pair.
    pub fn count(&self, filter: &[(&str, Value)]) -> usize {
        let cols: Vec<(usize, Value)> = filter.iter().map(|(n, v)| (self.column(n).expect("known column"), *v)).collect();
        self.records.iter().filter(|r| cols.iter().all(|(c, v)| r.values[*c] == *v)).count()
    }

    /// Empirical P(event | condition) as an exact fraction.
    pub fn conditional_frequency(&self, event: &[(&str, Value)], condition: &[(&str, Value)]) -> Option<BigRational> {
        let den = self.count(condition);
        if den == 0 {
            return None;
        }
        let both: Vec<(&str, Value)> = event.iter().chain(condition).copied().collect();
        Some(BigRational::new(BigInt::from(self.count(&both)), BigInt::from(den)))
    }

    /// Check values against the model's domains and population.
    pub fn check_against(&self, model: &DiscoModel) -> Result<(), SamplingError> {
        let idx: Vec<usize> = self
            .variables
            .iter()
            .map(|v| model.var_index(v).ok_or_else(|| SamplingError::Dataset(format!("column `{v}` is not a model variable"))))
            .collect::<Result<_, _>>()?;
        for (k, r) in self.records.iter().enumerate() {
            if !model.contains_unit(r.unit) {
                return Err(SamplingError::Dataset(format!("record {} names unit {} outside the population", k + 1, r.unit)));
            }
            for (c, v) in r.values.iter().enumerate() {
                if !model.in_domain(idx[c], v) {
                    return Err(SamplingError::Dataset(format!(
                        "record {}: value {} outside the domain of `{}`",
                        k + 1,
                        crate::rational::fmt_value(v),
                        self.variables[c]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `n` i.i.d. factual records: unit by weight, noise by law, then solve.
pub fn sample_dataset(model: &DiscoModel, n: u64, seed: u64) -> Result<Dataset, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyRun);
    }
    let sampler = ModelSampler::new(model, model.units().collect());
    let parts: Vec<Result<Vec<Record>, SolveError>> = chunks(n)
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = chunk_rng(seed, k);
            let mut noise = vec![Value::zero(); model.noises().len()];
            let mut out = Vec::with_capacity(len as usize);
            for _ in 0..len {
                let unit = sampler.unit(&mut rng);
                sampler.noise(&mut rng, &mut noise);
                let mut values = vec![Value::zero(); model.var_count()];
                model.solve_into(unit, &noise, &mut values)?;
                out.push(Record { unit, values });
            }
            Ok(out)
        })
        .collect();
    let mut records = Vec::with_capacity(n as usize);
    for p in parts {
        records.extend(p?);
    }
    Ok(Dataset { variables: model.variables().iter().map(|v| v.name.clone()).collect(), records, provenance: Provenance::Sampled { seed, n } })
}

struct McWorld {
    model: DiscoModel,
    bank: usize,
}

/// Compiled query for repeated simulation.
struct McPlan {
    worlds: Vec<McWorld>,
    /// Number of fresh noise banks besides the factual one (bank 0).
    banks: usize,
    /// (world index, variable index, event)
    target: Vec<(usize, usize, Event)>,
    evidence: Vec<(usize, usize, Event)>,
    expectation: Option<(usize, usize)>,
}

impl McPlan {
    fn new(model: &DiscoModel, query: &Query) -> Result<McPlan, SamplingError> {
        let report = query.validate(model);
        if !report.is_valid() {
            return Err(SamplingError::InvalidQuery(report));
        }
        let mut worlds_ref: Vec<WorldRef> = vec![WorldRef::Factual];
        let mut worlds = vec![McWorld { model: model.clone(), bank: 0 }];
        let mut banks = 0;
        let mut world_of = |w: &WorldRef| -> Result<usize, SamplingError> {
            if let Some(i) = worlds_ref.iter().position(|x| x == w) {
                return Ok(i);
            }
            let iv = w.intervention().expect("factual world is preset");
            let sub = model.apply_do(iv).map_err(EngineError::from)?;
            let bank = match model.coupling() {
                Coupling::Scm => 0,
                Coupling::Disco => {
                    banks += 1;
                    banks
                }
            };
            worlds_ref.push(w.clone());
            worlds.push(McWorld { model: sub, bank });
            Ok(worlds.len() - 1)
        };
        let var = |name: &str| model.var_index(name).expect("validated");
        let mut target = Vec::new();
        let mut expectation = None;
        match &query.target {
            Target::Probability(events) => {
                for e in events {
                    target.push((world_of(&e.world)?, var(&e.var), e.clone()));
                }
            }
            Target::Expectation { world, var: v } => expectation = Some((world_of(world)?, var(v))),
        }
        let mut evidence = Vec::new();
        for e in &query.evidence {
            evidence.push((world_of(&e.world)?, var(&e.var), e.clone()));
        }
        Ok(McPlan { worlds, banks, target, evidence, expectation })
    }
}

fn restriction_units(model: &DiscoModel, unit: Option<&UnitRef>) -> Result<Vec<UnitId>, SamplingError> {
    Ok(match unit {
        None => model.units().collect(),
        Some(UnitRef::Unit(u)) => vec![*u],
        Some(UnitRef::Group(g)) => {
            let gi = model.group_index(g).ok_or_else(|| SamplingError::Dataset(format!("unknown group `{g}`")))?;
            model.units().filter(|u| model.group_of(*u) == gi).collect()
        }
    })
}

/// Rejection-sampling estimate of a query from `n` proposals.
///
/// Each proposal draws a unit and factual noise; proposals violating the
/// evidence are discarded. Accepted proposals draw every counterfactual
/// world's noise (fresh under disco coupling, the factual draw under scm)
/// and record the target indicator or value.
pub fn mc_valuation(model: &DiscoModel, query: &Query, n: u64, seed: u64) -> Result<Estimate, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyRun);
    }
    let plan = McPlan::new(model, query)?;
    let units = restriction_units(model, query.unit.as_ref())?;
    let sampler = ModelSampler::new(model, units);
    let nn = model.noises().len();
    let nv = model.var_count();
    let parts: Vec<Result<Moments, SolveError>> = chunks(n)
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = chunk_rng(seed, k);
            let mut noise = vec![vec![Value::zero(); nn]; plan.banks + 1];
            let mut vals = vec![vec![Value::zero(); nv]; plan.worlds.len()];
            let mut m = Moments::default();
            for _ in 0..len {
                let unit = sampler.unit(&mut rng);
                sampler.noise(&mut rng, &mut noise[0]);
                plan.worlds[0].model.solve_into(unit, &noise[0], &mut vals[0])?;
                if !plan.evidence.iter().all(|(w, v, e)| e.holds(&vals[*w][*v])) {
                    continue;
                }
                for b in noise.iter_mut().skip(1) {
                    sampler.noise(&mut rng, b);
                }
                for (i, w) in plan.worlds.iter().enumerate().skip(1) {
                    w.model.solve_into(unit, &noise[w.bank], &mut vals[i])?;
                }
                let x = match plan.expectation {
                    Some((w, v)) => vals[w][v].to_f64().unwrap_or(f64::NAN),
                    None => {
                        if plan.target.iter().all(|(w, v, e)| e.holds(&vals[*w][*v])) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                m.push(x);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for p in parts {
        total = total.merge(p?);
    }
    if total.count == 0 {
        return Err(SamplingError::NoAcceptedSamples { proposals: n });
    }
    Ok(Estimate::from_moments(total, seed))
}

/// Empirical mean of a function of each record, with its standard error.
pub(crate) fn mean_estimate(values: impl Iterator<Item = f64>, seed: u64) -> Option<Estimate> {
    let mut m = Moments::default();
    values.for_each(|x| m.push(x));
    (m.count > 0).then(|| Estimate::from_moments(m, seed))
}

/// Empirical frequency table of one column.
pub fn frequencies(dataset: &Dataset, var: &str) -> BTreeMap<Value, usize> {
    let mut out = BTreeMap::new();
    if let Some(c) = dataset.column(var) {
        for r in &dataset.records {
            *out.entry(r.values[c]).or_default() += 1;
        }
    }
    out
}
