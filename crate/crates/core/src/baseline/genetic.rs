//! Population search over edge-toggle sets, scored by the target model's
//! loss.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::attack::indicator::xor_one;
use crate::attack::{AttackInstance, Attacker, Constraint, ModelHandle};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};
use crate::linalg::argmax;
use crate::seed::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Sample parents with probability proportional to fitness.
    Weighted,
    /// Breed from the fitter half only.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneticConfig {
    pub population_size: usize,
    pub rounds: usize,
    /// Keep probability of each non-shared parent edge in crossover.
    pub crossover_rate: f64,
    /// Per-edge probability of moving one endpoint.
    pub mutation_rate: f64,
    pub selection: Selection,
    pub elitism: bool,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            population_size: 100,
            rounds: 10,
            crossover_rate: 0.5,
            mutation_rate: 0.2,
            selection: Selection::Weighted,
            elitism: true,
        }
    }
}

impl GeneticConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |r: f64| (0.0..=1.0).contains(&r);
        if self.population_size < 2 || !rate(self.crossover_rate) || !rate(self.mutation_rate) {
            return Err(Error::InvalidArgument("population_size >= 2 and rates in [0, 1] required".into()));
        }
        Ok(())
    }
}

/// A candidate: sorted toggled pairs relative to the original graph.
pub type Candidate = Vec<Edge>;

/// `(A ∩ B) ∪ rp(A \ B) ∪ rp(B \ A)`, where `rp` keeps each element with
/// probability `rate`.
pub fn crossover(a: &[Edge], b: &[Edge], rate: f64, rng: &mut Rng) -> Candidate {
    let mut child = Vec::with_capacity(a.len() + b.len());
    for e in a {
        if b.binary_search(e).is_ok() || rng.gen::<f64>() < rate {
            child.push(*e);
        }
    }
    for e in b {
        if a.binary_search(e).is_err() && rng.gen::<f64>() < rate {
            child.push(*e);
        }
    }
    child.sort_unstable();
    child
}

/// With probability `rate` per edge, keeps one endpoint and replaces the
/// other by a node drawn uniformly from `region` such that the new pair is
/// allowed and not already in the set. Edges with no replacement stay.
pub fn mutate(set: &[Edge], rate: f64, region: &[NodeId], allowed: impl Fn(&Edge) -> bool, rng: &mut Rng) -> Candidate {
    let mut out = set.to_vec();
    for i in 0..out.len() {
        if rng.gen::<f64>() >= rate {
            continue;
        }
        let (u, v) = out[i].endpoints();
        let keep = if rng.gen::<bool>() { u } else { v };
        let options: Vec<Edge> = region
            .iter()
            .filter(|&&w| w != keep)
            .filter_map(|&w| Edge::new(keep, w).ok())
            .filter(|e| allowed(e) && !out.contains(e))
            .collect();
        if let Some(&e) = options.choose(rng) {
            out[i] = e;
        }
    }
    out.sort_unstable();
    out
}

/// Drops random elements until the constraint admits the set.
pub fn repair(mut set: Candidate, constraint: &Constraint, rng: &mut Rng) -> Candidate {
    set.sort_unstable();
    set.dedup();
    while !constraint.admits_toggles(&set) {
        let i = rng.gen_range(0..set.len());
        set.remove(i);
    }
    set
}

/// Trace of one genetic search.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneticRun {
    pub best: Candidate,
    pub best_fitness: f64,
    /// Best fitness seen so far, after initialization and after each round.
    pub trace: Vec<f64>,
    pub flipped: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Genetic {
    pub cfg: GeneticConfig,
}

impl Genetic {
    pub fn new(cfg: GeneticConfig) -> Self {
        Genetic { cfg }
    }

    /// Full search with its fitness trace.
    pub fn run(&self, inst: &AttackInstance<'_>, constraint: &Constraint, model: &ModelHandle<'_>, seed: u64) -> Result<GeneticRun> {
        self.cfg.validate()?;
        let mut rng = seed::rng(seed);
        let region = constraint.region();
        let mut cache: BTreeMap<Candidate, (f64, bool)> = BTreeMap::new();
        let mut evaluate = |cand: &Candidate| -> Result<(f64, bool)> {
            if let Some(&hit) = cache.get(cand) {
                return Ok(hit);
            }
            let conf = model.confidence(&constraint.original().toggled(cand), inst.target)?;
            let fitness = -libm::log(conf[inst.label].max(f64::MIN_POSITIVE));
            let flipped = argmax(&conf) != Some(inst.label);
            cache.insert(cand.clone(), (fitness, flipped));
            Ok((fitness, flipped))
        };

        let mut population: Vec<Candidate> = (0..self.cfg.population_size).map(|_| random_candidate(constraint, &mut rng)).collect();
        let mut run = GeneticRun { best: Vec::new(), best_fitness: f64::NEG_INFINITY, trace: Vec::new(), flipped: false };
        for round in 0..=self.cfg.rounds {
            let mut scored = Vec::with_capacity(population.len());
            for cand in population.drain(..) {
                let (fit, flipped) = evaluate(&cand)?;
                if flipped {
                    run.best = cand;
                    run.best_fitness = fit;
                    run.flipped = true;
                    run.trace.push(fit.max(run.trace.last().copied().unwrap_or(f64::NEG_INFINITY)));
                    return Ok(run);
                }
                if fit > run.best_fitness {
                    run.best = cand.clone();
                    run.best_fitness = fit;
                }
                scored.push((cand, fit));
            }
            run.trace.push(run.best_fitness);
            if round == self.cfg.rounds {
                break;
            }
            population = self.next_generation(scored, constraint, &region, &mut rng);
        }
        Ok(run)
    }

    fn next_generation(
        &self,
        mut scored: Vec<(Candidate, f64)>,
        constraint: &Constraint,
        region: &[NodeId],
        rng: &mut Rng,
    ) -> Vec<Candidate> {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let pool: &[(Candidate, f64)] = match self.cfg.selection {
            Selection::Greedy => &scored[..scored.len().div_ceil(2)],
            Selection::Weighted => &scored,
        };
        let total: f64 = pool.iter().map(|(_, f)| f.max(0.0)).sum();
        let pick = |rng: &mut Rng| -> &Candidate {
            if self.cfg.selection == Selection::Weighted && total > 0.0 {
                let mut x = rng.gen::<f64>() * total;
                for (c, f) in pool {
                    x -= f.max(0.0);
                    if x < 0.0 {
                        return c;
                    }
                }
            }
            &pool[rng.gen_range(0..pool.len())].0
        };
        let mut next = Vec::with_capacity(self.cfg.population_size);
        if self.cfg.elitism {
            next.push(scored[0].0.clone());
        }
        while next.len() < self.cfg.population_size {
            let a = pick(rng).clone();
            let b = pick(rng).clone();
            let child = crossover(&a, &b, self.cfg.crossover_rate, rng);
            let child = mutate(&child, self.cfg.mutation_rate, region, |e| constraint.pair_allowed(e), rng);
            next.push(repair(child, constraint, rng));
        }
        next
    }
}

/// Up to `budget` random admitted toggles, added one at a time.
pub fn random_candidate(constraint: &Constraint, rng: &mut Rng) -> Candidate {
    let mut set: Candidate = Vec::new();
    let pairs = constraint.candidate_pairs();
    for _ in 0..constraint.budget() {
        let options: Vec<Edge> =
            pairs.iter().filter(|e| set.binary_search(e).is_err() && constraint.admits_toggles(&xor_one(&set, **e))).copied().collect();
        match options.choose(rng) {
            Some(&e) => set = xor_one(&set, e),
            None => break,
        }
    }
    set
}

impl Attacker for Genetic {
    fn name(&self) -> &str {
        "genetic"
    }

    fn attack(&self, inst: &AttackInstance<'_>, constraint: &Constraint, model: &ModelHandle<'_>, seed: u64) -> Result<Graph> {
        let run = self.run(inst, constraint, model, seed)?;
        Ok(constraint.original().toggled(&run.best))
    }
}
