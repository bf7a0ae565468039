//! Bounded minimization of estimation objectives: BFGS with numeric
//! gradients, a real-coded genetic algorithm, and the hybrid GA-then-BFGS
//! method.
//!
//! All iterates stay inside the box (projection/clipping is exact), runs are
//! deterministic under a fixed stream, and the genetic algorithm evaluates
//! its population concurrently (objectives are contractually pure).

use rayon::prelude::*;

use crate::error::{KrigError, Result};
use crate::random::RandomStream;

/// A bounded minimization problem over a fixed-dimension box.
pub struct OptimProblem<'a> {
    pub objective: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub initial: Option<Vec<f64>>,
}

impl<'a> OptimProblem<'a> {
    pub fn new(
        objective: &'a (dyn Fn(&[f64]) -> f64 + Sync),
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(KrigError::Config(format!(
                "bounds must be non-empty and of equal length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        // equal bounds are allowed and pin that coordinate
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(KrigError::Config("lower bound exceeds upper bound".into()));
        }
        Ok(OptimProblem {
            objective,
            lower,
            upper,
            initial: None,
        })
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != self.lower.len() {
            return Err(KrigError::Config(format!(
                "initial point has dimension {}, bounds have {}",
                initial.len(),
                self.lower.len()
            )));
        }
        if initial
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(x, (l, u))| x < l || x > u)
        {
            return Err(KrigError::Config(
                "initial point violates the bounds".into(),
            ));
        }
        self.initial = Some(initial);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn clip(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergedBy {
    GradientTol,
    StepTol,
    MaxIter,
    GenerationStall,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub evaluations: u64,
    /// Best objective value at the end of each iteration/generation.
    pub trace: Vec<(usize, f64)>,
    pub converged_by: ConvergedBy,
}

#[derive(Debug, Clone)]
pub struct BfgsOptions {
    /// Relative step for central-difference gradients.
    pub grad_step: f64,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            grad_step: 1e-6,
            grad_tol: 1e-8,
            step_tol: 1e-11,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaOptions {
    pub pop_size: usize,
    pub max_generations: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    /// Mutation standard deviation as a fraction of each bound width.
    pub mutation_sigma_fraction: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub elite_count: usize,
    /// Stop early after this many generations without improvement.
    pub stall_generations: Option<usize>,
}

impl Default for GaOptions {
    fn default() -> Self {
        GaOptions {
            pop_size: 30,
            max_generations: 50,
            tournament_k: 3,
            crossover_rate: 0.9,
            mutation_sigma_fraction: 0.1,
            mutation_rate: 0.3,
            elite_count: 2,
            stall_generations: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HgaOptions {
    pub ga: GaOptions,
    pub bfgs: BfgsOptions,
}

struct Evaluator<'a, 'b> {
    problem: &'a OptimProblem<'b>,
    count: u64,
}

impl<'a, 'b> Evaluator<'a, 'b> {
    fn new(problem: &'a OptimProblem<'b>) -> Self {
        Evaluator { problem, count: 0 }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.count += 1;
        (self.problem.objective)(x)
    }

    fn eval_batch(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        self.count += xs.len() as u64;
        if xs.len() > 1 {
            xs.par_iter().map(|x| (self.problem.objective)(x)).collect()
        } else {
            xs.iter().map(|x| (self.problem.objective)(x)).collect()
        }
    }
}

/// Quasi-Newton minimization with central-difference gradients, backtracking
/// Armijo line search and box constraints enforced by projecting trial
/// points. Always returns the best point seen.
pub fn minimize_bfgs(problem: &OptimProblem, opts: &BfgsOptions) -> OptimResult {
    let d = problem.dim();
    let mut ev = Evaluator::new(problem);

    let mut x = problem
        .initial
        .clone()
        .unwrap_or_else(|| problem.midpoint());
    problem.clip(&mut x);
    let mut fx = ev.eval(&x);
    let (mut best_x, mut best_f) = (x.clone(), fx);
    let mut trace = vec![(0, fx)];

    // inverse Hessian approximation
    let mut h = identity(d);
    let mut g = gradient(&mut ev, problem, &x, fx, opts.grad_step);
    let mut converged_by = ConvergedBy::MaxIter;

    for iter in 1..=opts.max_iter {
        // projected-gradient stationarity test
        let pg_norm = (0..d)
            .map(|i| {
                let moved = (x[i] - g[i]).clamp(problem.lower[i], problem.upper[i]);
                (moved - x[i]).abs()
            })
            .fold(0.0_f64, f64::max);
        if pg_norm <= opts.grad_tol {
            converged_by = ConvergedBy::GradientTol;
            break;
        }

        let mut dir = neg_matvec(&h, &g);
        // fall back on steepest descent when the quasi-Newton direction fails
        if dir.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
        }

        // backtracking Armijo on the projected path
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            problem.clip(&mut trial);
            let actual_step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if actual_step.iter().all(|s| s.abs() == 0.0) {
                break;
            }
            let f_trial = ev.eval(&trial);
            if f_trial < best_f {
                best_f = f_trial;
                best_x = trial.clone();
            }
            let slope: f64 = g.iter().zip(&actual_step).map(|(gi, si)| gi * si).sum();
            if f_trial <= fx + 1e-4 * slope.min(0.0) && f_trial < fx {
                accepted = Some((trial, f_trial, actual_step));
                break;
            }
            t *= 0.5;
        }

        let Some((x_new, f_new, step)) = accepted else {
            converged_by = ConvergedBy::StepTol;
            break;
        };

        let step_norm = step.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        let g_new = gradient(&mut ev, problem, &x_new, f_new, opts.grad_step);

        // BFGS update of the inverse Hessian
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = step.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let s_norm: f64 = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            bfgs_update(&mut h, &step, &yv, sy);
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push((iter, best_f));

        if step_norm <= opts.step_tol * x.iter().fold(1.0_f64, |m, v| m.max(v.abs())) {
            converged_by = ConvergedBy::StepTol;
            break;
        }
    }

    OptimResult {
        theta: best_x,
        objective: best_f,
        evaluations: ev.count,
        trace,
        converged_by,
    }
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn neg_matvec(h: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    h.iter()
        .map(|row| -row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let d = s.len();
    let hy: Vec<f64> = h
        .iter()
        .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    let c1 = (sy + yhy) / (sy * sy);
    for i in 0..d {
        for j in 0..d {
            h[i][j] += c1 * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
    }
}

/// Central-difference gradient with per-coordinate step
/// `grad_step * max(|x_i|, 1)`; falls back to a one-sided difference at an
/// active bound when the centered probe would collapse onto the midpoint.
fn gradient(
    ev: &mut Evaluator,
    problem: &OptimProblem,
    x: &[f64],
    fx: f64,
    grad_step: f64,
) -> Vec<f64> {
    let d = x.len();
    let mut g = vec![0.0; d];
    for i in 0..d {
        if problem.lower[i] == problem.upper[i] {
            continue; // pinned coordinate
        }
        let h = grad_step * x[i].abs().max(1.0);
        let mut fwd = x.to_vec();
        fwd[i] += h;
        let mut bwd = x.to_vec();
        bwd[i] -= h;
        let f_fwd = ev.eval(&fwd);
        let f_bwd = ev.eval(&bwd);
        // guard against penalty walls distorting the slope
        if f_fwd.is_finite() && f_bwd.is_finite() {
            g[i] = (f_fwd - f_bwd) / (2.0 * h);
        } else {
            g[i] = (f_fwd.min(1e300) - fx) / h;
        }
    }
    g
}

/// Real-coded genetic algorithm: uniform initialization within bounds,
/// tournament selection, blend crossover, Gaussian mutation scaled to the
/// bound widths, and elitism. The best individual never worsens across
/// generations; the full population is evaluated each generation so the
/// evaluation count is exactly `pop_size * generations`.
pub fn minimize_ga(
    problem: &OptimProblem,
    opts: &GaOptions,
    stream: &mut RandomStream,
) -> OptimResult {
    let d = problem.dim();
    let pop_size = opts.pop_size.max(4);
    let mut ev = Evaluator::new(problem);

    let widths: Vec<f64> = problem
        .lower
        .iter()
        .zip(&problem.upper)
        .map(|(l, u)| u - l)
        .collect();

    let mut population: Vec<Vec<f64>> = (0..pop_size)
        .map(|_| {
            (0..d)
                .map(|i| stream.uniform_range(problem.lower[i], problem.upper[i]))
                .collect()
        })
        .collect();
    if let Some(init) = &problem.initial {
        population[0] = init.clone();
    }

    let mut fitness = ev.eval_batch(&population);
    let mut best_idx = argmin(&fitness);
    let mut best_x = population[best_idx].clone();
    let mut best_f = fitness[best_idx];
    let mut trace = vec![(1, best_f)];
    let mut stall = 0usize;
    let mut converged_by = ConvergedBy::MaxIter;

    for generation in 2..=opts.max_generations {
        // rank for elitism
        let mut order: Vec<usize> = (0..pop_size).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));

        let mut next: Vec<Vec<f64>> = Vec::with_capacity(pop_size);
        for &idx in order.iter().take(opts.elite_count.min(pop_size)) {
            next.push(population[idx].clone());
        }
        while next.len() < pop_size {
            let pa = tournament(&fitness, opts.tournament_k, stream);
            let pb = tournament(&fitness, opts.tournament_k, stream);
            let mut child = if stream.bernoulli(opts.crossover_rate) {
                (0..d)
                    .map(|i| {
                        let u = stream.uniform_open01();
                        u * population[pa][i] + (1.0 - u) * population[pb][i]
                    })
                    .collect()
            } else {
                population[pa].clone()
            };
            for i in 0..d {
                if stream.bernoulli(opts.mutation_rate) {
                    child[i] += opts.mutation_sigma_fraction * widths[i] * stream.standard_normal();
                }
            }
            problem.clip(&mut child);
            next.push(child);
        }

        population = next;
        fitness = ev.eval_batch(&population);
        best_idx = argmin(&fitness);
        if fitness[best_idx] < best_f {
            best_f = fitness[best_idx];
            best_x = population[best_idx].clone();
            stall = 0;
        } else {
            stall += 1;
        }
        trace.push((generation, best_f));

        if let Some(max_stall) = opts.stall_generations {
            if stall >= max_stall {
                converged_by = ConvergedBy::GenerationStall;
                break;
            }
        }
    }

    OptimResult {
        theta: best_x,
        objective: best_f,
        evaluations: ev.count,
        trace,
        converged_by,
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v < &values[best] {
            best = i;
        }
    }
    best
}

fn tournament(fitness: &[f64], k: usize, stream: &mut RandomStream) -> usize {
    let mut winner = stream.index(fitness.len());
    for _ in 1..k.max(1) {
        let challenger = stream.index(fitness.len());
        if fitness[challenger] < fitness[winner] {
            winner = challenger;
        }
    }
    winner
}

/// Hybrid method: global GA search followed by BFGS refinement from the GA
/// best; the refined objective can only improve on the GA result.
pub fn minimize_hga(
    problem: &OptimProblem,
    opts: &HgaOptions,
    stream: &mut RandomStream,
) -> OptimResult {
    let ga = minimize_ga(problem, &opts.ga, stream);
    let refine_problem = OptimProblem {
        objective: problem.objective,
        lower: problem.lower.clone(),
        upper: problem.upper.clone(),
        initial: Some(ga.theta.clone()),
    };
    let bfgs = minimize_bfgs(&refine_problem, &opts.bfgs);
    let mut trace = ga.trace.clone();
    trace.extend(
        bfgs.trace
            .iter()
            .map(|(i, v)| (ga.trace.len() + i, v.min(ga.objective))),
    );
    if bfgs.objective <= ga.objective {
        OptimResult {
            theta: bfgs.theta,
            objective: bfgs.objective,
            evaluations: ga.evaluations + bfgs.evaluations,
            trace,
            converged_by: bfgs.converged_by,
        }
    } else {
        OptimResult {
            theta: ga.theta,
            objective: ga.objective,
            evaluations: ga.evaluations + bfgs.evaluations,
            trace,
            converged_by: ga.converged_by,
        }
    }
}
