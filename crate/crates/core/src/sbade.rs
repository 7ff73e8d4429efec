//! Self-balanced adaptive differential evolution (SB-ADE).
//!
//! Each generation every member picks one of four mutation strategies by
//! roulette over the adaptive probabilities `Γ`, builds a mutant, applies
//! uniform crossover with its own crossover rate and competes greedily with
//! its parent. Strategy probabilities are relearned from success/failure
//! counts every `lp_M` generations; the crossover-rate distribution is
//! relearned from surviving offspring every `lp_CR` generations.
//!
//! All random draws happen on the calling thread in a fixed order, so a run
//! is a pure function of its seed and objective.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Genome;
use crate::qubit::{phase_of, Complex};

/// Mutation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// `ω = Φ_r3 + μ(Φ_r1 − Φ_r2)`
    Rand1,
    /// `ω = Φ_best + μ(Φ_r1 − Φ_r2)`
    Best1,
    /// `ω = Φ_i + μ(Φ_best − Φ_i) + μ(Φ_r1 − Φ_r2)`
    CurrentToBest1,
    /// `ω = Φ_i + κ(Φ_r1 − Φ_i) + μ(Φ_r2 − Φ_r3)`
    CurrentToRand1,
}

/// Strategy applied in each roulette bin, i.e. the strategy governed by
/// `Γ₁..Γ₄` respectively.
pub const ROULETTE_ORDER: [Strategy; 4] = [
    Strategy::Rand1,
    Strategy::Best1,
    Strategy::CurrentToBest1,
    Strategy::CurrentToRand1,
];

/// Index (0-based) of the roulette bin containing `msp`.
pub fn roulette_bin(gamma: &[f64; 4], msp: f64) -> usize {
    let mut cumulative = 0.0;
    for (bin, g) in gamma.iter().take(3).enumerate() {
        cumulative += g;
        if msp <= cumulative {
            return bin;
        }
    }
    3
}

pub fn select_strategy(gamma: &[f64; 4], msp: f64) -> Strategy {
    ROULETTE_ORDER[roulette_bin(gamma, msp)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub cr_mean: f64,
    pub cr_sigma: f64,
    pub f_mean: f64,
    pub f_sigma: f64,
    /// Upper bound of the scale factor; draws are truncated to `(0, f_max]`.
    pub f_max: f64,
    pub mutation_learning_period: usize,
    pub crossover_learning_period: usize,
    /// Generations without validation improvement before stopping.
    /// `None` disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population_size: 15,
            max_generations: 250,
            cr_mean: 0.5,
            cr_sigma: 0.1,
            f_mean: 0.5,
            f_sigma: 0.3,
            f_max: 2.0,
            mutation_learning_period: 10,
            crossover_learning_period: 10,
            patience: Some(50),
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    /// Smallest population from which a target and three further distinct
    /// members (plus one spare) can be drawn.
    pub const MIN_POPULATION: usize = 5;

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.population_size < Self::MIN_POPULATION {
            return fail(format!(
                "population size must be at least {}, got {}",
                Self::MIN_POPULATION,
                self.population_size
            ));
        }
        if self.mutation_learning_period == 0 || self.crossover_learning_period == 0 {
            return fail("learning periods must be at least 1".into());
        }
        if !(self.cr_sigma > 0.0 && self.f_sigma > 0.0) {
            return fail("standard deviations must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.cr_mean) {
            return fail(format!("cr_mean must lie in [0, 1], got {}", self.cr_mean));
        }
        if !(self.f_max > 0.0 && self.f_mean > 0.0 && self.f_mean <= self.f_max) {
            return fail(format!(
                "f_mean must lie in (0, f_max], got {} with f_max {}",
                self.f_mean, self.f_max
            ));
        }
        if self.patience == Some(0) {
            return fail("patience must be at least 1 generation".into());
        }
        Ok(())
    }
}

/// Strategy probabilities and the success/failure counters gathered since
/// the last update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub gamma: [f64; 4],
    pub success: [u64; 4],
    pub failure: [u64; 4],
}

impl Default for StrategyStats {
    fn default() -> Self {
        StrategyStats {
            gamma: [0.25; 4],
            success: [0; 4],
            failure: [0; 4],
        }
    }
}

impl StrategyStats {
    pub const GAMMA_FLOOR: f64 = 0.01;
    pub const GAMMA_CEILING: f64 = 0.97;

    pub fn record(&mut self, bin: usize, survived: bool) {
        if survived {
            self.success[bin] += 1;
        } else {
            self.failure[bin] += 1;
        }
    }

    /// Recomputes `Γ` from the counters, then resets them.
    ///
    /// The raw probabilities follow the closed form below, which does not sum
    /// to one in general; each value is clamped to
    /// `[GAMMA_FLOOR, GAMMA_CEILING]` and the vector renormalized. With no
    /// usable evidence (`Z = 0`) the probabilities fall back to uniform.
    ///
    /// ```text
    /// Z  = 2(ξ₂ξ₃ξ₄ + ξ₁ξ₃ξ₄ + ξ₁ξ₃ξ₂ + ξ₂ξ₃ξ₄)
    ///    + Δ₁(ξ₂+ξ₃+ξ₄) + Δ₂(ξ₁+ξ₃+ξ₄) + Δ₃(ξ₁+ξ₂+ξ₄) + Δ₄(ξ₁+ξ₃+ξ₂)
    /// Γ_k = ξ_k · Σ_{l≠k}(ξ_l + Δ_l) / Z     for k = 1, 2, 3
    /// Γ₄  = 1 − (Γ₁ + Γ₂ + Γ₃)
    /// ```
    pub fn update_gammas(&mut self) {
        self.gamma = match raw_gammas(&self.success, &self.failure) {
            Some(raw) => clamp_normalize(raw),
            None => [0.25; 4],
        };
        self.success = [0; 4];
        self.failure = [0; 4];
    }
}

/// Literal closed-form probabilities; `None` when `Z` vanishes.
pub fn raw_gammas(success: &[u64; 4], failure: &[u64; 4]) -> Option<[f64; 4]> {
    let x = success.map(|v| v as f64);
    let d = failure.map(|v| v as f64);
    // The duplicated ξ₂ξ₃ξ₄ product is intentional: it is part of the formula.
    let z = 2.0
        * (x[1] * x[2] * x[3] + x[0] * x[2] * x[3] + x[0] * x[2] * x[1] + x[1] * x[2] * x[3])
        + d[0] * (x[1] + x[2] + x[3])
        + d[1] * (x[0] + x[2] + x[3])
        + d[2] * (x[0] + x[1] + x[3])
        + d[3] * (x[0] + x[2] + x[1]);
    if z <= 0.0 {
        return None;
    }
    let others = |k: usize| -> f64 { (0..4).filter(|&l| l != k).map(|l| x[l] + d[l]).sum() };
    let g1 = x[0] * others(0) / z;
    let g2 = x[1] * others(1) / z;
    let g3 = x[2] * others(2) / z;
    Some([g1, g2, g3, 1.0 - (g1 + g2 + g3)])
}

fn clamp_normalize(raw: [f64; 4]) -> [f64; 4] {
    let clamped = raw.map(|g| g.clamp(StrategyStats::GAMMA_FLOOR, StrategyStats::GAMMA_CEILING));
    let total: f64 = clamped.iter().sum();
    clamped.map(|g| g / total)
}

/// Crossover-rate distribution and the rates of offspring that survived
/// since the last update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrAdaptation {
    pub mean: f64,
    pub sigma: f64,
    pub successful: Vec<f64>,
}

impl CrAdaptation {
    pub fn new(mean: f64, sigma: f64) -> Self {
        CrAdaptation {
            mean,
            sigma,
            successful: Vec::new(),
        }
    }

    /// Moves the mean to the average successful rate (if any), clears the
    /// record and redraws every member's rate.
    pub fn update<R: Rng>(&mut self, cr_values: &mut [f64], rng: &mut R) {
        if !self.successful.is_empty() {
            self.mean = self.successful.iter().sum::<f64>() / self.successful.len() as f64;
        }
        self.successful.clear();
        self.draw_into(cr_values, rng);
    }

    pub fn draw_into<R: Rng>(&self, cr_values: &mut [f64], rng: &mut R) {
        let normal = Normal::new(self.mean, self.sigma).expect("sigma validated positive");
        for cr in cr_values {
            *cr = truncated(&normal, rng, |v| (0.0..=1.0).contains(&v));
        }
    }
}

/// Redraws until `accept` holds.
fn truncated<R: Rng>(normal: &Normal<f64>, rng: &mut R, accept: impl Fn(f64) -> bool) -> f64 {
    loop {
        let v = normal.sample(rng);
        if accept(v) {
            return v;
        }
    }
}

/// Amplitudes `(α, β) = (√rd, √(1 − rd))` of a freshly drawn qubit.
pub fn initial_amplitudes(rd: f64) -> (f64, f64) {
    (rd.sqrt(), (1.0 - rd).sqrt())
}

/// Gene value for a uniform draw `rd`: the phase of `α + iβ` scaled by
/// `π/2`, which lies in `[0, π²/4]`.
pub fn gene_from_draw(rd: f64) -> f64 {
    let (alpha, beta) = initial_amplitudes(rd);
    phase_of(Complex::new(alpha, beta)) * FRAC_PI_2
}

pub fn init_genome<R: Rng>(length: usize, rng: &mut R) -> Genome {
    let phases = (0..length)
        .map(|_| gene_from_draw(rng.random::<f64>()))
        .collect();
    Genome::new(phases).expect("initial genes are finite")
}

/// Draws three mutually distinct indices in `[0, n)`, all different from
/// `exclude`.
pub fn draw_distinct<R: Rng>(n: usize, exclude: usize, rng: &mut R) -> Result<[usize; 3]> {
    if n < 4 {
        return Err(Error::Config(format!(
            "need at least 4 population members to draw distinct donors, got {n}"
        )));
    }
    let mut picked = [usize::MAX; 3];
    for k in 0..3 {
        picked[k] = loop {
            let r = rng.random_range(0..n);
            if r != exclude && !picked[..k].contains(&r) {
                break r;
            }
        };
    }
    Ok(picked)
}

/// Builds the mutant for member `target` from donors `r = [r1, r2, r3]`.
pub fn mutate(
    genomes: &[Vec<f64>],
    best: usize,
    target: usize,
    strategy: Strategy,
    mu: f64,
    kappa: f64,
    r: [usize; 3],
) -> Vec<f64> {
    let cur = &genomes[target];
    let best = &genomes[best];
    let (r1, r2, r3) = (&genomes[r[0]], &genomes[r[1]], &genomes[r[2]]);
    (0..cur.len())
        .map(|g| match strategy {
            Strategy::Best1 => best[g] + mu * (r1[g] - r2[g]),
            Strategy::CurrentToBest1 => cur[g] + mu * (best[g] - cur[g]) + mu * (r1[g] - r2[g]),
            Strategy::CurrentToRand1 => cur[g] + kappa * (r1[g] - cur[g]) + mu * (r2[g] - r3[g]),
            Strategy::Rand1 => r3[g] + mu * (r1[g] - r2[g]),
        })
        .collect()
}

/// Uniform crossover. One uniformly drawn position always takes the mutant
/// gene; every other position takes it when its draw is `≤ cr`.
pub fn crossover<R: Rng>(target: &[f64], mutant: &[f64], cr: f64, rng: &mut R) -> Result<Vec<f64>> {
    if target.len() != mutant.len() {
        return Err(Error::Shape {
            context: "crossover parents",
            expected: target.len(),
            actual: mutant.len(),
        });
    }
    if target.is_empty() {
        return Ok(Vec::new());
    }
    let forced = rng.random_range(0..target.len());
    Ok(target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(k, (&t, &m))| {
            let draw: f64 = rng.random();
            if k == forced || draw <= cr {
                m
            } else {
                t
            }
        })
        .collect())
}

/// Greedy replacement; ties favour the offspring.
pub fn select_survivor(offspring_fitness: f64, target_fitness: f64) -> bool {
    offspring_fitness <= target_fitness
}

/// Something to minimise.
pub trait Objective {
    /// Training fitness; lower is better.
    fn fitness(&self, genome: &[f64]) -> f64;

    /// Held-out score used for early stopping and model choice.
    fn validation(&self, _genome: &[f64]) -> Option<f64> {
        None
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for F {
    fn fitness(&self, genome: &[f64]) -> f64 {
        self(genome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub genomes: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub cr_values: Vec<f64>,
    pub f_values: Vec<f64>,
    pub best_index: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    pub fn best_fitness(&self) -> f64 {
        self.fitness[self.best_index]
    }

    pub fn mean_fitness(&self) -> f64 {
        self.fitness.iter().sum::<f64>() / self.fitness.len() as f64
    }

    fn refresh_best(&mut self) {
        self.best_index = argmin(&self.fitness);
    }
}

/// Lowest index among the minima.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Snapshot taken after each generation (generation 0 is the initial
/// population).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Probabilities in force at the end of the generation.
    pub gamma: [f64; 4],
    pub cr_mean: f64,
    /// Survivors per roulette bin during this generation.
    pub successes: [u32; 4],
    pub failures: [u32; 4],
    pub validation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best genome by validation score when the objective provides one,
    /// otherwise by training fitness.
    pub best: Genome,
    pub best_fitness: f64,
    pub best_validation: Option<f64>,
    /// Generation at which `best` was found.
    pub best_generation: usize,
    pub history: Vec<GenerationRecord>,
    pub stopped_early: bool,
    pub population: Population,
    pub stats: StrategyStats,
}

/// Runs SB-ADE on `objective` over genomes of `genome_length` phases.
pub fn train<O: Objective + ?Sized>(
    objective: &O,
    genome_length: usize,
    config: &OptimizerConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if genome_length == 0 {
        return Err(Error::Config("genome length must be at least 1".into()));
    }
    let n = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let genomes: Vec<Vec<f64>> = (0..n)
        .map(|_| init_genome(genome_length, &mut rng).into_inner())
        .collect();
    let mut cr = CrAdaptation::new(config.cr_mean, config.cr_sigma);
    let mut cr_values = vec![0.0; n];
    cr.draw_into(&mut cr_values, &mut rng);
    let f_normal = Normal::new(config.f_mean, config.f_sigma).expect("sigma validated positive");
    let f_max = config.f_max;
    let draw_f = |rng: &mut ChaCha8Rng| truncated(&f_normal, rng, |v| v > 0.0 && v <= f_max);
    let f_values = (0..n).map(|_| draw_f(&mut rng)).collect();

    let fitness = genomes
        .iter()
        .enumerate()
        .map(|(i, g)| evaluate(objective, g, i))
        .collect::<Result<Vec<_>>>()?;
    let mut pop = Population {
        genomes,
        fitness,
        cr_values,
        f_values,
        best_index: 0,
    };
    pop.refresh_best();

    let mut stats = StrategyStats::default();
    let mut tracker = BestTracker::new(objective, &pop, config.patience);
    let mut history = vec![GenerationRecord {
        generation: 0,
        best_fitness: pop.best_fitness(),
        mean_fitness: pop.mean_fitness(),
        gamma: stats.gamma,
        cr_mean: cr.mean,
        successes: [0; 4],
        failures: [0; 4],
        validation: tracker.best_validation,
    }];

    let mut stopped_early = false;
    for generation in 1..=config.max_generations {
        for f in pop.f_values.iter_mut() {
            *f = draw_f(&mut rng);
        }
        let msp: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();

        let mut bins = Vec::with_capacity(n);
        let mut offspring = Vec::with_capacity(n);
        for (i, &msp_i) in msp.iter().enumerate() {
            let donors = draw_distinct(n, i, &mut rng)?;
            let bin = roulette_bin(&stats.gamma, msp_i);
            let kappa: f64 = rng.random();
            let mutant = mutate(
                &pop.genomes,
                pop.best_index,
                i,
                ROULETTE_ORDER[bin],
                pop.f_values[i],
                kappa,
                donors,
            );
            offspring.push(crossover(
                &pop.genomes[i],
                &mutant,
                pop.cr_values[i],
                &mut rng,
            )?);
            bins.push(bin);
        }

        let offspring_fitness = offspring
            .iter()
            .enumerate()
            .map(|(i, g)| evaluate(objective, g, i))
            .collect::<Result<Vec<_>>>()?;

        let mut successes = [0u32; 4];
        let mut failures = [0u32; 4];
        for (i, (child, child_fitness)) in offspring.into_iter().zip(offspring_fitness).enumerate()
        {
            let survived = select_survivor(child_fitness, pop.fitness[i]);
            stats.record(bins[i], survived);
            if survived {
                successes[bins[i]] += 1;
                cr.successful.push(pop.cr_values[i]);
                pop.genomes[i] = child;
                pop.fitness[i] = child_fitness;
            } else {
                failures[bins[i]] += 1;
            }
        }
        pop.refresh_best();

        if generation % config.mutation_learning_period == 0 {
            stats.update_gammas();
        }
        if generation % config.crossover_learning_period == 0 {
            cr.update(&mut pop.cr_values, &mut rng);
        }

        let stop = tracker.observe(objective, &pop, generation);
        history.push(GenerationRecord {
            generation,
            best_fitness: pop.best_fitness(),
            mean_fitness: pop.mean_fitness(),
            gamma: stats.gamma,
            cr_mean: cr.mean,
            successes,
            failures,
            validation: tracker.current_validation,
        });
        if stop {
            stopped_early = true;
            break;
        }
    }

    let BestTracker {
        genome,
        fitness,
        best_validation,
        generation: best_generation,
        ..
    } = tracker;
    Ok(TrainOutcome {
        best: Genome::new(genome)?,
        best_fitness: fitness,
        best_validation,
        best_generation,
        history,
        stopped_early,
        population: pop,
        stats,
    })
}

fn evaluate<O: Objective + ?Sized>(objective: &O, genome: &[f64], index: usize) -> Result<f64> {
    let value = objective.fitness(genome);
    if value.is_nan() {
        return Err(Error::Evaluation { index, value });
    }
    Ok(value)
}

/// Keeps the model to return: the validation-best population leader when a
/// validation score exists, else the training-best genome.
struct BestTracker {
    genome: Vec<f64>,
    fitness: f64,
    generation: usize,
    best_validation: Option<f64>,
    current_validation: Option<f64>,
    patience: Option<usize>,
    stale: usize,
}

impl BestTracker {
    fn new<O: Objective + ?Sized>(
        objective: &O,
        pop: &Population,
        patience: Option<usize>,
    ) -> Self {
        let leader = &pop.genomes[pop.best_index];
        let validation = objective.validation(leader);
        BestTracker {
            genome: leader.clone(),
            fitness: pop.best_fitness(),
            generation: 0,
            best_validation: validation,
            current_validation: validation,
            patience,
            stale: 0,
        }
    }

    /// Returns true when training should stop.
    fn observe<O: Objective + ?Sized>(
        &mut self,
        objective: &O,
        pop: &Population,
        generation: usize,
    ) -> bool {
        let leader = &pop.genomes[pop.best_index];
        match self.best_validation {
            None => {
                if pop.best_fitness() < self.fitness {
                    self.genome = leader.clone();
                    self.fitness = pop.best_fitness();
                    self.generation = generation;
                }
                false
            }
            Some(best_val) => {
                self.current_validation = objective.validation(leader);
                let v = self.current_validation.unwrap_or(f64::INFINITY);
                if v < best_val {
                    self.best_validation = Some(v);
                    self.genome = leader.clone();
                    self.fitness = pop.best_fitness();
                    self.generation = generation;
                    self.stale = 0;
                } else {
                    self.stale += 1;
                }
                self.patience.is_some_and(|p| self.stale >= p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::Strategy;
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn gene_from_draw_examples() {
        assert_abs_diff_eq!(gene_from_draw(0.5), PI * PI / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gene_from_draw(0.5), 1.2337, epsilon = 1e-4);
        assert_eq!(gene_from_draw(1.0), 0.0);
        assert_abs_diff_eq!(gene_from_draw(0.0), PI * PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn initial_genes_in_range() {
        let g = init_genome(500, &mut rng(3));
        assert!(g
            .phases()
            .iter()
            .all(|&x| (0.0..=PI * PI / 4.0).contains(&x)));
    }

    #[test]
    fn roulette_examples() {
        let uniform = [0.25; 4];
        assert_eq!(select_strategy(&uniform, 0.10), Strategy::Rand1);
        assert_eq!(roulette_bin(&uniform, 0.10), 0);
        assert_eq!(roulette_bin(&uniform, 0.95), 3);
        assert_eq!(select_strategy(&uniform, 0.95), Strategy::CurrentToRand1);
        assert_eq!(roulette_bin(&[0.5, 0.2, 0.2, 0.1], 0.65), 1);
        assert_eq!(roulette_bin(&uniform, 0.25), 0);
        assert_eq!(roulette_bin(&uniform, 1.0), 3);
    }

    #[test]
    fn gammas_reset_without_evidence() {
        let mut s = StrategyStats {
            gamma: [0.7, 0.1, 0.1, 0.1],
            ..Default::default()
        };
        s.update_gammas();
        assert_eq!(s.gamma, [0.25; 4]);
    }

    #[test]
    fn gammas_symmetric_counters() {
        let raw = raw_gammas(&[1; 4], &[1; 4]).unwrap();
        for g in &raw[..3] {
            assert_abs_diff_eq!(*g, 0.3, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(raw[3], 0.1, epsilon = 1e-15);

        let mut s = StrategyStats {
            success: [1; 4],
            failure: [1; 4],
            ..Default::default()
        };
        s.update_gammas();
        let expected = [0.3, 0.3, 0.3, 0.1];
        for (g, e) in s.gamma.iter().zip(expected) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-12);
        }
        assert_eq!(s.success, [0; 4]);
        assert_eq!(s.failure, [0; 4]);
    }

    #[test]
    fn gammas_single_dominant_strategy() {
        // Z = 5·10 + 5·10 + 5·10 = 150; Γ₁ = 10·15/150 = 1, the rest 0.
        let raw = raw_gammas(&[10, 0, 0, 0], &[0, 5, 5, 5]).unwrap();
        assert_eq!(raw, [1.0, 0.0, 0.0, 0.0]);
        let mut s = StrategyStats {
            success: [10, 0, 0, 0],
            failure: [0, 5, 5, 5],
            ..Default::default()
        };
        s.update_gammas();
        assert_abs_diff_eq!(s.gamma[0], 0.97, epsilon = 1e-12);
        for g in &s.gamma[1..] {
            assert_abs_diff_eq!(*g, 0.01, epsilon = 1e-12);
        }
    }

    #[test]
    fn gammas_vanishing_z() {
        // Only one strategy ever ran: every term of Z is zero.
        assert_eq!(raw_gammas(&[3, 0, 0, 0], &[2, 0, 0, 0]), None);
    }

    #[test]
    fn mutation_identical_population() {
        let genomes = vec![vec![0.3, -1.2, 4.0]; 6];
        for s in ROULETTE_ORDER {
            assert_eq!(mutate(&genomes, 0, 1, s, 0.7, 0.4, [2, 3, 4]), genomes[0]);
        }
    }

    #[test]
    fn mutation_formulas() {
        let genomes: Vec<Vec<f64>> = [1.0, 2.0, 0.5, 3.0, 7.0].iter().map(|&x| vec![x]).collect();
        // best = 0, r1 = 1, r2 = 2, r3 = 3, target = 4
        let r = [1, 2, 3];
        assert_eq!(
            mutate(&genomes, 0, 4, Strategy::Best1, 0.5, 0.0, r),
            vec![1.75]
        );
        assert_eq!(
            mutate(&genomes, 0, 4, Strategy::Rand1, 0.0, 0.0, r),
            vec![3.0]
        );
        assert_eq!(
            mutate(&genomes, 0, 4, Strategy::Rand1, 0.5, 0.0, r),
            vec![3.75]
        );
        // 7 + 0.5(1 − 7) + 0.5(2 − 0.5)
        assert_eq!(
            mutate(&genomes, 0, 4, Strategy::CurrentToBest1, 0.5, 0.0, r),
            vec![4.75]
        );
        // 7 + 0.25(2 − 7) + 0.5(0.5 − 3)
        assert_eq!(
            mutate(&genomes, 0, 4, Strategy::CurrentToRand1, 0.5, 0.25, r),
            vec![4.5]
        );
    }

    #[test]
    fn distinct_donors() {
        let mut r = rng(11);
        for target in 0..5 {
            for _ in 0..200 {
                let d = draw_distinct(5, target, &mut r).unwrap();
                assert!(!d.contains(&target));
                assert!(d[0] != d[1] && d[1] != d[2] && d[0] != d[2]);
                assert!(d.iter().all(|&x| x < 5));
            }
        }
        assert!(matches!(draw_distinct(3, 0, &mut r), Err(Error::Config(_))));
    }

    #[test]
    fn crossover_extremes() {
        let target = vec![0.0; 20];
        let mutant = vec![1.0; 20];
        let child = crossover(&target, &mutant, 1.0, &mut rng(1)).unwrap();
        assert_eq!(child, mutant);
        let child = crossover(&target, &mutant, 0.0, &mut rng(1)).unwrap();
        assert_eq!(child.iter().filter(|&&g| g == 1.0).count(), 1);
        assert!(crossover(&target, &mutant[..3], 0.5, &mut rng(1)).is_err());
    }

    #[test]
    fn crossover_reproducible() {
        let target: Vec<f64> = (0..50).map(f64::from).collect();
        let mutant: Vec<f64> = (0..50).map(|x| -f64::from(x)).collect();
        let a = crossover(&target, &mutant, 0.5, &mut rng(9)).unwrap();
        let b = crossover(&target, &mutant, 0.5, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert!(a != target && a != mutant);
    }

    #[test]
    fn survivor_rule() {
        assert!(select_survivor(0.01, 0.02));
        assert!(!select_survivor(0.02, 0.01));
        assert!(select_survivor(0.01, 0.01));
    }

    #[test]
    fn cr_update() {
        let mut r = rng(5);
        let mut cr = CrAdaptation::new(0.5, 0.1);
        cr.successful = vec![0.4, 0.6];
        let mut values = vec![0.0; 100];
        cr.update(&mut values, &mut r);
        assert_abs_diff_eq!(cr.mean, 0.5, epsilon = 1e-15);
        assert!(cr.successful.is_empty());

        cr.successful = vec![0.9, 0.95, 1.0];
        cr.update(&mut values, &mut r);
        assert_abs_diff_eq!(cr.mean, 0.95, epsilon = 1e-15);
        // mean near the edge forces many truncated redraws
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));

        let before = cr.mean;
        cr.update(&mut values, &mut r);
        assert_eq!(cr.mean, before);
    }

    #[test]
    fn config_validation() {
        let cfg = OptimizerConfig {
            population_size: 4,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let sphere = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>();
        assert!(matches!(train(&sphere, 3, &cfg), Err(Error::Config(_))));
        for bad in [
            OptimizerConfig {
                mutation_learning_period: 0,
                ..Default::default()
            },
            OptimizerConfig {
                cr_sigma: 0.0,
                ..Default::default()
            },
            OptimizerConfig {
                f_mean: 2.5,
                ..Default::default()
            },
            OptimizerConfig {
                patience: Some(0),
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(OptimizerConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_generations() {
        let sphere = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>();
        let cfg = OptimizerConfig {
            max_generations: 0,
            seed: 4,
            ..Default::default()
        };
        let out = train(&sphere, 5, &cfg).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.best_fitness, out.population.best_fitness());
        let min = out
            .population
            .fitness
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_fitness, min);
        assert_eq!(sphere(out.best.phases()), out.best_fitness);
    }

    #[test]
    fn sphere_five_dimensions() {
        let sphere = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>();
        let cfg = OptimizerConfig {
            max_generations: 100,
            seed: 17,
            ..Default::default()
        };
        let out = train(&sphere, 5, &cfg).unwrap();
        assert!(out.best_fitness <= out.history[0].best_fitness);
        assert!(out.best_fitness <= 1e-2, "best {}", out.best_fitness);
    }

    #[test]
    fn nan_fitness_names_genome() {
        let bad = |g: &[f64]| if g[0] > 1.0 { f64::NAN } else { 0.0 };
        let cfg = OptimizerConfig {
            seed: 2,
            ..Default::default()
        };
        match train(&bad, 4, &cfg) {
            Err(Error::Evaluation { index, value }) => {
                assert!(index < 15);
                assert!(value.is_nan());
            }
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn early_stopping_on_flat_validation() {
        struct Flat;
        impl Objective for Flat {
            fn fitness(&self, g: &[f64]) -> f64 {
                g.iter().map(|x| x * x).sum()
            }
            fn validation(&self, _g: &[f64]) -> Option<f64> {
                Some(1.0)
            }
        }
        let cfg = OptimizerConfig {
            patience: Some(7),
            seed: 1,
            ..Default::default()
        };
        let out = train(&Flat, 3, &cfg).unwrap();
        assert!(out.stopped_early);
        assert_eq!(out.history.len(), 8);
        assert_eq!(out.best_generation, 0);
    }

    proptest! {
        #[test]
        fn gammas_always_distribution(
            success in prop::array::uniform4(0u64..50),
            failure in prop::array::uniform4(0u64..50),
        ) {
            let mut s = StrategyStats { success, failure, ..Default::default() };
            s.update_gammas();
            let total: f64 = s.gamma.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            prop_assert!(s.gamma.iter().all(|g| (0.0..=1.0).contains(g)));
        }

        #[test]
        fn initial_amplitudes_normalised(rd in 0.0f64..1.0) {
            let (a, b) = initial_amplitudes(rd);
            // exact up to the rounding of two square roots and two squares
            prop_assert!((a * a + b * b - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
