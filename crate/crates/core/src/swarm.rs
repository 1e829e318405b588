//! Competitive swarm optimisation (CSO) and standard particle swarm
//! optimisation (SPSO) over black-box fitness functions.
//!
//! Both minimisers draw every random number on the calling thread in a
//! fixed order before any fitness evaluation of an iteration starts, so
//! evaluating particles in parallel never changes the result. Per CSO
//! iteration the order is: the pairing permutation, then for each pair
//! `R1`, `R2`, `R3` (one value per dimension each). Per SPSO iteration it
//! is `r1`, `r2` for each particle in index order.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{seeded_rng, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Fitness of `position` as last evaluated; `None` after a move.
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsoConfig {
    /// Swarm size; must be even.
    pub swarm_size: usize,
    pub iterations: usize,
    /// Weight of the swarm-mean attraction.
    pub phi: f64,
    pub seed: u64,
    /// Per-dimension `(lo, hi)` for uniform initialisation.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
    pub bounds: Vec<(f64, f64)>,
}

impl SpsoConfig {
    /// Inertia 0.6 and acceleration constants 1.7.
    pub fn standard(swarm_size: usize, iterations: usize, seed: u64, bounds: Vec<(f64, f64)>) -> Self {
        SpsoConfig {
            swarm_size,
            iterations,
            inertia: 0.6,
            cognitive: 1.7,
            social: 1.7,
            seed,
            bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness in the swarm after initialisation (index 0) and after
    /// every iteration.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

/// Hooks for progress reporting and instrumentation.
pub trait Observer {
    fn on_iteration(&mut self, _iteration: usize, _best: f64) {}
    /// Called whenever CSO computes the swarm mean.
    fn on_swarm_mean(&mut self, _iteration: usize, _mean: &[f64]) {}
}

impl Observer for () {}

impl<F: FnMut(usize, f64)> Observer for F {
    fn on_iteration(&mut self, iteration: usize, best: f64) {
        self(iteration, best)
    }
}

fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Config("search space has zero dimensions".into()));
    }
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad bounds ({lo}, {hi}) for dimension {d}")));
        }
    }
    Ok(())
}

impl CsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 || self.swarm_size % 2 == 1 {
            return Err(Error::Config(format!(
                "CSO swarm size must be positive and even, got {}",
                self.swarm_size
            )));
        }
        if !(self.phi >= 0.0) {
            return Err(Error::Config(format!("phi must be non-negative, got {}", self.phi)));
        }
        validate_bounds(&self.bounds)
    }

    /// Fitness evaluations performed by a full run.
    pub fn evaluation_budget(&self) -> u64 {
        self.swarm_size as u64 + (self.swarm_size as u64 / 2) * self.iterations as u64
    }
}

impl SpsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config(format!(
                "SPSO swarm size must be at least 2, got {}",
                self.swarm_size
            )));
        }
        validate_bounds(&self.bounds)
    }

    pub fn evaluation_budget(&self) -> u64 {
        self.swarm_size as u64 * (self.iterations as u64 + 1)
    }
}

fn init_positions(rng: &mut Rng, s: usize, bounds: &[(f64, f64)]) -> Vec<Particle> {
    (0..s)
        .map(|_| Particle {
            position: bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            velocity: vec![0.0; bounds.len()],
            fitness: None,
        })
        .collect()
}

fn draw_vector(rng: &mut Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// Evaluates every particle without a cached fitness; returns the count.
fn evaluate_pending<F>(f: &F, swarm: &mut [Particle]) -> u64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    swarm
        .par_iter_mut()
        .filter(|p| p.fitness.is_none())
        .map(|p| {
            let v = f(&p.position);
            p.fitness = Some(if v.is_nan() { f64::INFINITY } else { v });
            1u64
        })
        .sum()
}

fn best_of(swarm: &[Particle]) -> usize {
    let mut best = 0;
    for (i, p) in swarm.iter().enumerate() {
        if p.fitness.unwrap() < swarm[best].fitness.unwrap() {
            best = i;
        }
    }
    best
}

/// The CSO loser update:
/// `V <- R1*V + R2*(X_w - X_l) + phi*R3*(mean - X_l)`, then `X_l <- X_l + V`.
/// The mean term is skipped entirely when `mean` is `None`.
pub fn loser_update(
    loser: &mut Particle,
    winner: &[f64],
    mean: Option<&[f64]>,
    phi: f64,
    r1: &[f64],
    r2: &[f64],
    r3: &[f64],
) {
    let x = &mut loser.position;
    let v = &mut loser.velocity;
    for d in 0..x.len() {
        let mut nv = r1[d] * v[d] + r2[d] * (winner[d] - x[d]);
        if let Some(m) = mean {
            nv += phi * r3[d] * (m[d] - x[d]);
        }
        v[d] = nv;
        x[d] += nv;
    }
    loser.fitness = None;
}

pub fn cso_minimize<F>(f: &F, cfg: &CsoConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cso_minimize_observed(f, cfg, &mut ())
}

pub fn cso_minimize_observed<F>(f: &F, cfg: &CsoConfig, observer: &mut dyn Observer) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let s = cfg.swarm_size;
    let dim = cfg.bounds.len();
    let mut rng = seeded_rng(cfg.seed);
    let mut swarm = init_positions(&mut rng, s, &cfg.bounds);
    let mut evaluations = evaluate_pending(f, &mut swarm);
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(swarm[best_of(&swarm)].fitness.unwrap());
    observer.on_iteration(0, trace[0]);

    let mut order: Vec<usize> = (0..s).collect();
    for t in 0..cfg.iterations {
        let mean = (cfg.phi > 0.0).then(|| {
            let mut m = vec![0.0; dim];
            for p in &swarm {
                for (acc, x) in m.iter_mut().zip(&p.position) {
                    *acc += x;
                }
            }
            m.iter_mut().for_each(|v| *v /= s as f64);
            m
        });
        if let Some(m) = &mean {
            observer.on_swarm_mean(t, m);
        }

        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        order.shuffle(&mut rng);
        let draws: Vec<[Vec<f64>; 3]> = (0..s / 2)
            .map(|_| {
                [
                    draw_vector(&mut rng, dim),
                    draw_vector(&mut rng, dim),
                    draw_vector(&mut rng, dim),
                ]
            })
            .collect();

        for (pair, [r1, r2, r3]) in order.chunks_exact(2).zip(&draws) {
            let (a, b) = (pair[0], pair[1]);
            let (w, l) = if swarm[a].fitness.unwrap() <= swarm[b].fitness.unwrap() {
                (a, b)
            } else {
                (b, a)
            };
            let winner = swarm[w].position.clone();
            loser_update(&mut swarm[l], &winner, mean.as_deref(), cfg.phi, r1, r2, r3);
        }

        evaluations += evaluate_pending(f, &mut swarm);
        let best = swarm[best_of(&swarm)].fitness.unwrap();
        trace.push(best);
        observer.on_iteration(t + 1, best);
    }

    let b = best_of(&swarm);
    Ok(OptResult {
        best_position: swarm[b].position.clone(),
        best_fitness: swarm[b].fitness.unwrap(),
        trace,
        evaluations,
    })
}

pub fn spso_minimize<F>(f: &F, cfg: &SpsoConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spso_minimize_observed(f, cfg, &mut ())
}

/// Synchronous global-best PSO: velocities start at zero and are not
/// clamped; every particle moves and is re-evaluated each iteration.
pub fn spso_minimize_observed<F>(f: &F, cfg: &SpsoConfig, observer: &mut dyn Observer) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let s = cfg.swarm_size;
    let dim = cfg.bounds.len();
    let mut rng = seeded_rng(cfg.seed);
    let mut swarm = init_positions(&mut rng, s, &cfg.bounds);
    let mut evaluations = evaluate_pending(f, &mut swarm);

    let mut pbest: Vec<(Vec<f64>, f64)> = swarm
        .iter()
        .map(|p| (p.position.clone(), p.fitness.unwrap()))
        .collect();
    let mut gbest = pbest[best_of(&swarm)].clone();
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(gbest.1);
    observer.on_iteration(0, gbest.1);

    for t in 0..cfg.iterations {
        let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..s)
            .map(|_| (draw_vector(&mut rng, dim), draw_vector(&mut rng, dim)))
            .collect();
        for (i, (r1, r2)) in draws.iter().enumerate() {
            let p = &mut swarm[i];
            for d in 0..dim {
                let v = cfg.inertia * p.velocity[d]
                    + cfg.cognitive * r1[d] * (pbest[i].0[d] - p.position[d])
                    + cfg.social * r2[d] * (gbest.0[d] - p.position[d]);
                p.velocity[d] = v;
                p.position[d] += v;
            }
            p.fitness = None;
        }
        evaluations += evaluate_pending(f, &mut swarm);
        for (i, p) in swarm.iter().enumerate() {
            let fit = p.fitness.unwrap();
            if fit < pbest[i].1 {
                pbest[i] = (p.position.clone(), fit);
            }
        }
        for pb in &pbest {
            if pb.1 < gbest.1 {
                gbest = pb.clone();
            }
        }
        trace.push(gbest.1);
        observer.on_iteration(t + 1, gbest.1);
    }
    Ok(OptResult {
        best_position: gbest.0,
        best_fitness: gbest.1,
        trace,
        evaluations,
    })
}
