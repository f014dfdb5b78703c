use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::seed;

use super::config::EvolutionConfig;
use super::crossover::{compatibility_distance, crossover};
use super::genome::Genome;
use super::mutate::{initial_genome, mutate, InnovationRegistry};

/// Outcome of evaluating one genome.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub fitness: Vec<f64>,
    pub mean: f64,
    /// Goal outputs summed over every step of every episode.
    pub goal_sum: [f64; 3],
    pub steps: u64,
}

impl EvalResult {
    pub fn new(fitness: Vec<f64>, goal_sum: [f64; 3], steps: u64) -> Self {
        let mean = if fitness.is_empty() {
            0.0
        } else {
            fitness.iter().sum::<f64>() / fitness.len() as f64
        };
        EvalResult {
            fitness,
            mean,
            goal_sum,
            steps,
        }
    }

    /// Per-step mean goal output.
    pub fn mean_goal(&self) -> [f64; 3] {
        if self.steps == 0 {
            return [0.0; 3];
        }
        self.goal_sum.map(|s| s / self.steps as f64)
    }
}

/// Scores a genome. `seed` is shared by every genome of a generation.
pub trait Evaluator: Sync {
    fn evaluate(&self, genome: &Genome, seed: u64) -> EvalResult;
}

impl<F> Evaluator for F
where
    F: Fn(&Genome, u64) -> EvalResult + Sync,
{
    fn evaluate(&self, genome: &Genome, seed: u64) -> EvalResult {
        self(genome, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Population-and-lifetime mean of each goal output.
    pub mean_goal: [f64; 3],
    pub species: usize,
    /// All species had stagnated and the population was rebuilt from elites.
    pub restarted: bool,
}

#[derive(Debug, Clone)]
pub struct EvolutionRun {
    /// Highest mean fitness seen in any generation.
    pub best: Genome,
    pub log: Vec<GenerationRow>,
    pub evaluations: usize,
}

impl EvolutionRun {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "generation,best_fitness,mean_fitness,mean_goal_ammo,mean_goal_health,mean_goal_kills,species,restarted"
        )?;
        for r in &self.log {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.generation,
                r.best_fitness,
                r.mean_fitness,
                r.mean_goal[0],
                r.mean_goal[1],
                r.mean_goal[2],
                r.species,
                u8::from(r.restarted)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Species {
    representative: Genome,
    members: Vec<usize>,
    best: f64,
    last_improved: usize,
}

/// Runs NEAT for `config.generations` generations.
///
/// Every generation evaluates the whole population in parallel with one
/// shared seed, then speciates, drops stagnant species, shares fitness
/// within species and breeds the next population. `on_generation` sees each
/// log row as soon as it is complete.
pub fn evolve<E: Evaluator>(
    config: &EvolutionConfig,
    evaluator: &E,
    seed: u64,
    mut on_generation: impl FnMut(&GenerationRow),
) -> Result<EvolutionRun> {
    config.validate()?;
    let mut reg = InnovationRegistry::new();
    let mut init_rng = seed::rng(seed::derive(seed, "init", 0));
    let mut pop: Vec<Genome> = (0..config.population_size)
        .map(|_| initial_genome(config, &mut reg, &mut init_rng))
        .collect();
    let mut species: Vec<Species> = Vec::new();
    let mut best: Option<Genome> = None;
    let mut log = Vec::with_capacity(config.generations);
    let mut evaluations = 0;

    for generation in 0..config.generations {
        let gen_seed = seed::derive(seed, "generation", generation as u64);
        let results: Vec<EvalResult> = pop.par_iter().map(|g| evaluator.evaluate(g, gen_seed)).collect();
        evaluations += pop.len();
        let mut goal_sum = [0.0; 3];
        let mut steps = 0;
        for (g, r) in pop.iter_mut().zip(&results) {
            g.fitness = Some(r.mean);
            for (s, v) in goal_sum.iter_mut().zip(r.goal_sum) {
                *s += v;
            }
            steps += r.steps;
        }
        let fits: Vec<f64> = results.iter().map(|r| r.mean).collect();
        let top = argmax(&fits);
        if best
            .as_ref()
            .is_none_or(|b| fits[top] > b.fitness.unwrap_or(f64::NEG_INFINITY))
        {
            best = Some(pop[top].clone());
        }
        let mut row = GenerationRow {
            generation,
            best_fitness: fits[top],
            mean_fitness: fits.iter().sum::<f64>() / fits.len() as f64,
            mean_goal: if steps == 0 {
                [0.0; 3]
            } else {
                goal_sum.map(|s| s / steps as f64)
            },
            species: 0,
            restarted: false,
        };

        if generation + 1 < config.generations {
            let mut rng = seed::rng(seed::derive(seed, "reproduce", generation as u64));
            reg.next_generation();
            speciate(&pop, &mut species, config, &mut rng);
            row.species = species.len();
            for s in &mut species {
                let b = s.members.iter().map(|&i| fits[i]).fold(f64::NEG_INFINITY, f64::max);
                if b > s.best {
                    s.best = b;
                    s.last_improved = generation;
                }
            }
            let stale = |s: &Species| generation - s.last_improved >= config.stagnation;
            if species.iter().all(stale) {
                pop = restart(&pop, &fits, config, &mut reg, &mut rng);
                species.clear();
                row.restarted = true;
            } else {
                species.retain(|s| !stale(s) || s.members.contains(&top));
                pop = reproduce(&pop, &fits, &species, top, config, &mut reg, &mut rng);
            }
        } else {
            speciate(&pop, &mut species, config, &mut seed::rng(0));
            row.species = species.len();
        }
        on_generation(&row);
        log.push(row);
    }

    Ok(EvolutionRun {
        best: best.expect("at least one generation"),
        log,
        evaluations,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Assigns every genome to the first species whose representative is within
/// the compatibility threshold, founding new species as needed. Existing
/// species keep their history; empty ones disappear and each survivor
/// picks a random member as its next representative.
fn speciate(pop: &[Genome], species: &mut Vec<Species>, config: &EvolutionConfig, rng: &mut ChaCha8Rng) {
    for s in species.iter_mut() {
        s.members.clear();
    }
    for (i, g) in pop.iter().enumerate() {
        match species
            .iter_mut()
            .find(|s| compatibility_distance(&s.representative, g, config) < config.compatibility_threshold)
        {
            Some(s) => s.members.push(i),
            None => species.push(Species {
                representative: g.clone(),
                members: vec![i],
                best: f64::NEG_INFINITY,
                last_improved: 0,
            }),
        }
    }
    species.retain(|s| !s.members.is_empty());
    for s in species.iter_mut() {
        let pick = *s.members.choose(rng).expect("non-empty");
        s.representative = pop[pick].clone();
    }
}

/// Offspring per species, proportional to the mean fitness of its members
/// after shifting the population minimum to zero (explicit fitness sharing:
/// each member's shifted fitness divided by the species size, summed).
/// Largest remainders fill the rounding gap; the species holding the
/// population best always gets at least one slot.
fn allocate(fits: &[f64], species: &[Species], total: usize, top: usize) -> Vec<usize> {
    let floor = species
        .iter()
        .flat_map(|s| s.members.iter().map(|&i| fits[i]))
        .fold(f64::INFINITY, f64::min);
    let mut scores: Vec<f64> = species
        .iter()
        .map(|s| s.members.iter().map(|&i| fits[i] - floor).sum::<f64>() / s.members.len() as f64)
        .collect();
    if scores.iter().sum::<f64>() <= 0.0 {
        scores = species.iter().map(|s| s.members.len() as f64).collect();
    }
    let sum: f64 = scores.iter().sum();
    let exact: Vec<f64> = scores.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..species.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    if let Some(home) = species.iter().position(|s| s.members.contains(&top)) {
        if counts[home] == 0 {
            let donor = (0..counts.len())
                .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
                .expect("non-empty");
            counts[donor] -= 1;
            counts[home] += 1;
        }
    }
    counts
}

fn sorted_by_fitness(members: &[usize], fits: &[f64]) -> Vec<usize> {
    let mut m = members.to_vec();
    m.sort_by(|&a, &b| fits[b].total_cmp(&fits[a]).then(a.cmp(&b)));
    m
}

fn reproduce(
    pop: &[Genome],
    fits: &[f64],
    species: &[Species],
    top: usize,
    config: &EvolutionConfig,
    reg: &mut InnovationRegistry,
    rng: &mut ChaCha8Rng,
) -> Vec<Genome> {
    let counts = allocate(fits, species, config.population_size, top);
    let mut next = Vec::with_capacity(config.population_size);
    for (s, &count) in species.iter().zip(&counts) {
        let ranked = sorted_by_fitness(&s.members, fits);
        let elites = config.elitism.min(count).min(ranked.len());
        next.extend(ranked[..elites].iter().map(|&i| pop[i].clone()));
        let pool_len = ((config.survival_fraction * ranked.len() as f64).ceil() as usize)
            .max(ranked.len().min(2))
            .min(ranked.len());
        let pool = &ranked[..pool_len];
        for _ in elites..count {
            let a = *pool.choose(rng).expect("non-empty pool");
            let mut child = if pool.len() >= 2 && rng.gen::<f64>() < config.crossover_rate {
                let b = loop {
                    let b = *pool.choose(rng).expect("non-empty pool");
                    if b != a {
                        break b;
                    }
                };
                crossover(&pop[a], &pop[b], rng)
            } else {
                pop[a].clone()
            };
            mutate(&mut child, config, reg, rng);
            next.push(child);
        }
    }
    next
}

/// Rebuilds the population from the global elites plus mutated copies of
/// them.
fn restart(
    pop: &[Genome],
    fits: &[f64],
    config: &EvolutionConfig,
    reg: &mut InnovationRegistry,
    rng: &mut ChaCha8Rng,
) -> Vec<Genome> {
    let all: Vec<usize> = (0..pop.len()).collect();
    let ranked = sorted_by_fitness(&all, fits);
    let elites = &ranked[..config.elitism.max(1).min(ranked.len())];
    let mut next: Vec<Genome> = elites.iter().map(|&i| pop[i].clone()).collect();
    while next.len() < config.population_size {
        let mut child = pop[*elites.choose(rng).expect("non-empty")].clone();
        mutate(&mut child, config, reg, rng);
        next.push(child);
    }
    next.truncate(config.population_size);
    next
}
