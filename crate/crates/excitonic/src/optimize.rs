//! Ensemble local optimization of on-site energies.
//!
//! The transport objective (delivered power or extracted current) is a
//! rugged function of the site energies, so the strategy is many cheap
//! local searches from slightly perturbed starts rather than any global
//! method: Nelder-Mead, a quasi-Newton method with finite-difference
//! gradients, and the two run back to back. Ensembles rank the local
//! optima against the unoptimized baseline. A grouped parameterization
//! tiles a short block of energies down a long chain so the search
//! dimension stays fixed as the chain grows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{pinned_load_rate, RatePieces};
use crate::hamiltonian::{build, diagonalize};
use crate::model::{ModelError, ModelParams, LABEL_OPTICAL, REFERENCE_CHAIN_LEN};
use crate::observables::{max_power, power_reading, steady_current};

/// Objective evaluations allowed per solver stage.
pub const EVAL_BUDGET: usize = 5000;
/// Central finite-difference step for quasi-Newton gradients, eV.
pub const FD_STEP: f64 = 1e-5;
/// Initial Nelder-Mead simplex edge per coordinate, eV.
pub const SIMPLEX_EDGE: f64 = 0.02;
/// Half-width of the uniform perturbation applied to ensemble starts, eV.
pub const START_JITTER: f64 = 0.01;
/// Box half-width around the reference energies, eV.
pub const BOUND_HALFWIDTH: f64 = 1.0;
/// Relative objective change below which an iteration counts as stalled.
pub const REL_TOL: f64 = 1e-9;
/// Consecutive stalled iterations that end a solver run.
pub const STALL_ITERS: usize = 10;
/// History length of the limited-memory quasi-Newton method.
pub const LBFGS_MEMORY: usize = 10;

pub use crate::model::Objective;

/// Local search algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    NelderMead,
    QuasiNewton,
    /// Nelder-Mead followed by quasi-Newton polish from its optimum.
    Sequential,
    /// Limited-memory quasi-Newton, the single-run demonstration method.
    SingleLbfgs,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::NelderMead,
        Method::QuasiNewton,
        Method::Sequential,
        Method::SingleLbfgs,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::NelderMead => "nelder-mead",
            Method::QuasiNewton => "quasi-newton",
            Method::Sequential => "sequential",
            Method::SingleLbfgs => "single-lbfgs",
        }
    }

    fn rank(&self) -> usize {
        match self {
            Method::NelderMead => 0,
            Method::QuasiNewton => 1,
            Method::Sequential => 2,
            Method::SingleLbfgs => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "a group of {n_group} with {n_edge} free edge site(s) per side does not tile \
         the {span} interior sites of an N = {n_sites} chain; nearest chain lengths \
         that tile are {candidates:?}"
    )]
    GroupTiling {
        n_group: usize,
        n_edge: usize,
        span: usize,
        n_sites: usize,
        candidates: Vec<usize>,
    },
    #[error("grouped optimization needs a uniformly biased base chain")]
    GroupBaseNotLinear,
    #[error("free site index {site} outside chain of {n_sites} sites")]
    BadFreeSite { site: usize, n_sites: usize },
    #[error("start vector has {got} coordinates, problem has {want}")]
    BadStart { got: usize, want: usize },
}

/// How coordinates map onto the chain's on-site energies.
#[derive(Debug, Clone)]
pub enum Parameterization {
    /// Each listed site (1-based) is an independent coordinate.
    Interior { free_sites: Vec<usize> },
    /// Coordinates are `n_edge` sites inside each end plus one block of
    /// `n_group` energies; the block repeats down the chain, each copy
    /// shifted by -n_group * delta_e.
    Grouped {
        n_group: usize,
        n_edge: usize,
        delta_e: f64,
    },
}

/// Repeated-block parameterization shape for long chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupProblem {
    pub n_group: usize,
    /// Individually free sites inside each end, beyond the pinned ends.
    pub n_edge: usize,
    pub n_sites: usize,
}

impl GroupProblem {
    pub fn new(n_group: usize, n_sites: usize) -> Self {
        GroupProblem {
            n_group,
            n_edge: 1,
            n_sites,
        }
    }
}

/// An energy-optimization problem: base model, coordinate map, objective,
/// and the search box around the reference energies.
#[derive(Debug, Clone)]
pub struct EnergyProblem {
    pub base: ModelParams,
    pub objective: Objective,
    pub parameterization: Parameterization,
    pub bound_halfwidth: f64,
    /// On-site energies of the base chain; box center and clean start.
    reference: Vec<f64>,
}

impl EnergyProblem {
    /// Default parameterization: every interior site free, ends pinned.
    pub fn interior(base: ModelParams, objective: Objective) -> Self {
        let free = (2..base.n_sites()).collect();
        Self::with_free_sites(base, objective, free).expect("interior sites are valid")
    }

    /// Explicit list of free sites (1-based). The ends may be freed by
    /// listing them, which the default deliberately does not.
    pub fn with_free_sites(
        base: ModelParams,
        objective: Objective,
        free_sites: Vec<usize>,
    ) -> Result<Self, OptimizeError> {
        for &site in &free_sites {
            if site < 1 || site > base.n_sites() {
                return Err(OptimizeError::BadFreeSite {
                    site,
                    n_sites: base.n_sites(),
                });
            }
        }
        let reference = base.chain.onsite_energies.clone();
        Ok(EnergyProblem {
            base,
            objective,
            parameterization: Parameterization::Interior { free_sites },
            bound_halfwidth: BOUND_HALFWIDTH,
            reference,
        })
    }

    /// Grouped parameterization over a uniformly biased base chain, with
    /// the per-site optical rate rescaled so total emission stays
    /// comparable across chain lengths.
    pub fn grouped(
        gp: GroupProblem,
        base: ModelParams,
        objective: Objective,
    ) -> Result<Self, OptimizeError> {
        let n = base.n_sites();
        if gp.n_sites != n {
            return Err(OptimizeError::BadFreeSite {
                site: gp.n_sites,
                n_sites: n,
            });
        }
        let span = n.saturating_sub(2 + 2 * gp.n_edge);
        if gp.n_group == 0 || span < gp.n_group || span % gp.n_group != 0 {
            let k = (span / gp.n_group.max(1)).max(1);
            let valid = |copies: usize| 2 + 2 * gp.n_edge + copies * gp.n_group;
            return Err(OptimizeError::GroupTiling {
                n_group: gp.n_group,
                n_edge: gp.n_edge,
                span,
                n_sites: n,
                candidates: vec![valid(k), valid(k + 1)],
            });
        }
        let reference = base.chain.onsite_energies.clone();
        let delta_e = reference[0] - reference[1];
        if reference
            .windows(2)
            .any(|w| (w[0] - w[1] - delta_e).abs() > 1e-9)
        {
            return Err(OptimizeError::GroupBaseNotLinear);
        }
        let mut base = base;
        let em = base.process_rate(LABEL_OPTICAL) * REFERENCE_CHAIN_LEN as f64 / n as f64;
        base.set_process_rate(LABEL_OPTICAL, em)?;
        Ok(EnergyProblem {
            base,
            objective,
            parameterization: Parameterization::Grouped {
                n_group: gp.n_group,
                n_edge: gp.n_edge,
                delta_e,
            },
            bound_halfwidth: BOUND_HALFWIDTH,
            reference,
        })
    }

    /// Number of free coordinates.
    pub fn dim(&self) -> usize {
        match &self.parameterization {
            Parameterization::Interior { free_sites } => free_sites.len(),
            Parameterization::Grouped {
                n_group, n_edge, ..
            } => n_group + 2 * n_edge,
        }
    }

    /// Clean start: the reference energies of the free coordinates.
    pub fn start_coordinates(&self) -> Vec<f64> {
        match &self.parameterization {
            Parameterization::Interior { free_sites } => free_sites
                .iter()
                .map(|&site| self.reference[site - 1])
                .collect(),
            Parameterization::Grouped {
                n_group, n_edge, ..
            } => {
                let mut x = Vec::with_capacity(n_group + 2 * n_edge);
                for site in 2..2 + n_edge {
                    x.push(self.reference[site - 1]);
                }
                for site in 2 + n_edge..2 + n_edge + n_group {
                    x.push(self.reference[site - 1]);
                }
                let n = self.reference.len();
                for site in n - n_edge..n {
                    x.push(self.reference[site - 1]);
                }
                x
            }
        }
    }

    /// Full on-site energy vector for a coordinate vector.
    pub fn energies(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        let mut onsite = self.reference.clone();
        match &self.parameterization {
            Parameterization::Interior { free_sites } => {
                for (coord, &site) in x.iter().zip(free_sites) {
                    onsite[site - 1] = *coord;
                }
            }
            Parameterization::Grouped {
                n_group,
                n_edge,
                delta_e,
            } => {
                let n = onsite.len();
                for (i, site) in (2..2 + n_edge).enumerate() {
                    onsite[site - 1] = x[i];
                }
                let group = &x[*n_edge..n_edge + n_group];
                let first = 2 + n_edge; // first tiled site, 1-based
                let copies = (n - 2 - 2 * n_edge) / n_group;
                for copy in 0..copies {
                    let shift = (copy * n_group) as f64 * delta_e;
                    for (i, g) in group.iter().enumerate() {
                        onsite[first - 1 + copy * n_group + i] = g - shift;
                    }
                }
                for (i, site) in (n - n_edge..n).enumerate() {
                    onsite[site - 1] = x[n_edge + n_group + i];
                }
            }
        }
        onsite
    }

    /// Box constraint around the reference value of each coordinate.
    pub fn in_bounds(&self, x: &[f64]) -> bool {
        let center = self.start_coordinates();
        x.iter()
            .zip(&center)
            .all(|(xi, ci)| (xi - ci).abs() <= self.bound_halfwidth)
    }

    /// Model with the coordinate vector written into the chain.
    pub fn params_for(&self, x: &[f64]) -> ModelParams {
        let mut p = self.base.clone();
        p.chain.onsite_energies = self.energies(x);
        p
    }

    /// Objective value, `None` when the point is out of bounds or the
    /// model cannot be solved there. The load rate is re-optimized per
    /// configuration unless the base model pins it.
    pub fn evaluate(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim() || !self.in_bounds(x) {
            return None;
        }
        let params = self.params_for(x);
        let basis = diagonalize(&build(&params.chain));
        let value = match self.objective {
            Objective::Power => {
                let pieces = RatePieces::new(&params, &basis);
                match pinned_load_rate(&params) {
                    Some(rate) => power_reading(&params, &basis, &pieces, rate).ok()?.power,
                    None => max_power(&params, &basis, &pieces).ok()?.power,
                }
            }
            Objective::Current => steady_current(&params, &basis).ok()?,
        };
        value.is_finite().then_some(value)
    }

    /// Problem with the chain coupling strength replaced; energies and
    /// bounds are unchanged.
    pub fn with_j_coupling(&self, j: f64) -> Self {
        let mut p = self.clone();
        p.base.chain.coupling.set_j_coupling(j);
        p
    }
}

/// One local optimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptRun {
    pub start_index: usize,
    pub method: Method,
    /// Ensemble seed the start was drawn from.
    pub seed: u64,
    /// Full on-site energy vectors, not bare coordinates.
    pub start_energies: Vec<f64>,
    pub final_energies: Vec<f64>,
    pub start_objective: f64,
    pub final_objective: f64,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    /// (evaluation index, best objective so far); nondecreasing.
    pub trace: Vec<(usize, f64)>,
    pub error: Option<String>,
}

/// Start vectors for an ensemble: the clean reference first, then
/// `count - 1` copies with independent uniform jitter on every free
/// coordinate. Drawn sequentially from one seeded generator, so a longer
/// ensemble extends a shorter one with the same seed.
pub fn perturbed_starts(problem: &EnergyProblem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let clean = problem.start_coordinates();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::with_capacity(count);
    starts.push(clean.clone());
    for _ in 1..count {
        starts.push(
            clean
                .iter()
                .map(|c| c + rng.random_range(-START_JITTER..START_JITTER))
                .collect(),
        );
    }
    starts
}

/// Records objective evaluations for one run: counts, failures, and the
/// best-so-far trace in maximization convention. Values are returned in
/// minimization convention (negated, failures as +inf) for the solvers.
struct Recorder<F> {
    objective: F,
    evals: usize,
    failed: usize,
    budget: usize,
    best: f64,
    trace: Vec<(usize, f64)>,
}

impl<F: FnMut(&[f64]) -> Option<f64>> Recorder<F> {
    fn new(objective: F, budget: usize) -> Self {
        Recorder {
            objective,
            evals: 0,
            failed: 0,
            budget,
            best: f64::NEG_INFINITY,
            trace: Vec::new(),
        }
    }

    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        match (self.objective)(x) {
            Some(f) if f.is_finite() => {
                if f > self.best {
                    self.best = f;
                    self.trace.push((self.evals, f));
                }
                -f
            }
            _ => {
                self.failed += 1;
                f64::INFINITY
            }
        }
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.budget
    }
}

/// Shared stall rule: a run ends after `STALL_ITERS` consecutive
/// iterations whose relative improvement is below `REL_TOL`.
struct StallCounter {
    prev: f64,
    stalled: usize,
}

impl StallCounter {
    fn new(initial: f64) -> Self {
        StallCounter {
            prev: initial,
            stalled: 0,
        }
    }

    /// Feed the iteration's best minimization value; true when converged.
    fn push(&mut self, value: f64) -> bool {
        let improvement = self.prev - value;
        let scale = value.abs().max(1e-300);
        if improvement.is_finite() && improvement / scale < REL_TOL {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.prev = value;
        self.stalled >= STALL_ITERS
    }
}

/// Standard Nelder-Mead on the negated objective: reflection 1,
/// expansion 2, contraction 0.5, shrink 0.5.
fn nelder_mead<F: FnMut(&[f64]) -> Option<f64>>(rec: &mut Recorder<F>, x0: &[f64]) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += SIMPLEX_EDGE;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| rec.call(v)).collect();
    if !values.iter().any(|v| v.is_finite()) {
        return x0.to_vec();
    }
    let mut stall = StallCounter::new(values.iter().cloned().fold(f64::INFINITY, f64::min));

    while !rec.exhausted() {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let permute = |src: &mut Vec<Vec<f64>>, vals: &mut Vec<f64>, order: &[usize]| {
            *src = order.iter().map(|&i| src[i].clone()).collect();
            *vals = order.iter().map(|&i| vals[i]).collect();
        };
        permute(&mut simplex, &mut values, &order);

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + a * (c - w))
                .collect()
        };

        let xr = blend(1.0);
        let fr = rec.call(&xr);
        if fr < values[0] {
            let xe = blend(2.0);
            let fe = rec.call(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let outside = fr < values[n];
            let xc = blend(if outside { 0.5 } else { -0.5 });
            let fc = rec.call(&xc);
            let accept = if outside { fc <= fr } else { fc < values[n] };
            if accept {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    values[i] = rec.call(&simplex[i]);
                }
            }
        }

        let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if stall.push(best) {
            break;
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    simplex[best].clone()
}

/// Central finite-difference gradient of the negated objective. A failed
/// side falls back to a one-sided difference; both sides failed gives a
/// zero component so the step simply ignores that direction.
fn fd_gradient<F: FnMut(&[f64]) -> Option<f64>>(
    rec: &mut Recorder<F>,
    x: &[f64],
    fx: f64,
) -> DVector<f64> {
    let n = x.len();
    let mut g = DVector::zeros(n);
    let mut probe = x.to_vec();
    for i in 0..n {
        probe[i] = x[i] + FD_STEP;
        let fp = rec.call(&probe);
        probe[i] = x[i] - FD_STEP;
        let fm = rec.call(&probe);
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * FD_STEP),
            (true, false) => (fp - fx) / FD_STEP,
            (false, true) => (fx - fm) / FD_STEP,
            (false, false) => 0.0,
        };
    }
    g
}

/// Backtracking line search with the sufficient-decrease condition.
/// Returns the accepted step point and value, or None.
fn backtrack<F: FnMut(&[f64]) -> Option<f64>>(
    rec: &mut Recorder<F>,
    x: &DVector<f64>,
    fx: f64,
    dir: &DVector<f64>,
    slope: f64,
) -> Option<(DVector<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..40 {
        let cand = x + dir * t;
        let fc = rec.call(cand.as_slice());
        if fc.is_finite() && fc <= fx + 1e-4 * t * slope {
            return Some((cand, fc));
        }
        t *= 0.5;
        if rec.exhausted() {
            break;
        }
    }
    None
}

/// Quasi-Newton descent on the negated objective. `memory = None` keeps
/// the full inverse-Hessian approximation; `Some(m)` keeps the last m
/// update pairs instead (limited-memory variant).
fn quasi_newton<F: FnMut(&[f64]) -> Option<f64>>(
    rec: &mut Recorder<F>,
    x0: &[f64],
    memory: Option<usize>,
) -> Vec<f64> {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = rec.call(x.as_slice());
    if !fx.is_finite() {
        return x0.to_vec();
    }
    let mut grad = fd_gradient(rec, x.as_slice(), fx);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut scaled = false;
    let mut pairs: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new();
    let mut stall = StallCounter::new(fx);

    while !rec.exhausted() {
        let mut dir = match memory {
            None => -(&h * &grad),
            Some(_) =>-two_loop(&pairs, &grad),
        };
        let mut slope = dir.dot(&grad);
        if !(slope < 0.0) {
            dir = -grad.clone();
            slope = dir.dot(&grad);
            if !(slope < 0.0) {
                break; // zero gradient
            }
        }
        let step = match backtrack(rec, &x, fx, &dir, slope) {
            Some(s) => Some(s),
            None => {
                // curvature model rejected everywhere: retry steepest
                h = DMatrix::identity(n, n);
                scaled = false;
                pairs.clear();
                let dir = -grad.clone();
                let slope = dir.dot(&grad);
                backtrack(rec, &x, fx, &dir, slope)
            }
        };
        let Some((x_new, f_new)) = step else {
            break;
        };

        let g_new = fd_gradient(rec, x_new.as_slice(), f_new);
        let s = &x_new - &x;
        let y = &g_new - &grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            match memory {
                None => {
                    if !scaled {
                        h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                        scaled = true;
                    }
                    let rho = 1.0 / sy;
                    let hy = &h * &y;
                    let yhy = y.dot(&hy);
                    // BFGS inverse update in outer-product form
                    h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy));
                    h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
                }
                Some(m) => {
                    pairs.push((s.clone(), y.clone(), 1.0 / sy));
                    if pairs.len() > m {
                        pairs.remove(0);
                    }
                }
            }
        }
        x = x_new;
        fx = f_new;
        grad = g_new;
        if stall.push(fx) {
            break;
        }
    }
    x.as_slice().to_vec()
}

/// Two-loop recursion: apply the limited-memory inverse Hessian.
fn two_loop(pairs: &[(DVector<f64>, DVector<f64>, f64)], grad: &DVector<f64>) -> DVector<f64> {
    let mut q = grad.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * s.dot(&q);
        q -= y * a;
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.last() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * y.dot(&q);
        q += s * (a - b);
    }
    q
}

/// One local search from one start.
pub fn run_local(
    problem: &EnergyProblem,
    start_index: usize,
    start: &[f64],
    method: Method,
    seed: u64,
) -> OptRun {
    if start.len() != problem.dim() {
        let err = OptimizeError::BadStart {
            got: start.len(),
            want: problem.dim(),
        };
        return OptRun {
            start_index,
            method,
            seed,
            start_energies: problem.reference.clone(),
            final_energies: problem.reference.clone(),
            start_objective: f64::NEG_INFINITY,
            final_objective: f64::NEG_INFINITY,
            evaluations: 0,
            failed_evaluations: 0,
            trace: Vec::new(),
            error: Some(err.to_string()),
        };
    }

    let mut rec = Recorder::new(|x: &[f64]| problem.evaluate(x), EVAL_BUDGET);
    let x = match method {
        Method::NelderMead => nelder_mead(&mut rec, start),
        Method::QuasiNewton => quasi_newton(&mut rec, start, None),
        Method::SingleLbfgs => quasi_newton(&mut rec, start, Some(LBFGS_MEMORY)),
        Method::Sequential => {
            let mid = nelder_mead(&mut rec, start);
            rec.budget = rec.evals + EVAL_BUDGET;
            quasi_newton(&mut rec, &mid, None)
        }
    };
    let error = (rec.best == f64::NEG_INFINITY).then(|| "no evaluable point".to_string());
    OptRun {
        start_index,
        method,
        seed,
        start_energies: problem.energies(start),
        final_energies: problem.energies(&x),
        start_objective: problem.evaluate(start).unwrap_or(f64::NEG_INFINITY),
        final_objective: problem.evaluate(&x).unwrap_or(f64::NEG_INFINITY),
        evaluations: rec.evals,
        failed_evaluations: rec.failed,
        trace: rec.trace,
        error,
    }
}

/// Every start crossed with every method, ranked best-first by final
/// objective (ties broken by start index, then method order). Failed runs
/// carry their error and rank last rather than aborting the ensemble.
pub fn run_ensemble(
    problem: &EnergyProblem,
    count: usize,
    seed: u64,
    methods: &[Method],
) -> Vec<OptRun> {
    let starts = perturbed_starts(problem, count, seed);
    let jobs: Vec<(usize, Method)> = starts
        .iter()
        .enumerate()
        .flat_map(|(i, _)| methods.iter().map(move |&m| (i, m)))
        .collect();
    let mut runs: Vec<OptRun> = jobs
        .par_iter()
        .map(|&(i, m)| run_local(problem, i, &starts[i], m, seed))
        .collect();
    runs.sort_by(|a, b| {
        b.final_objective
            .total_cmp(&a.final_objective)
            .then(a.start_index.cmp(&b.start_index))
            .then(a.method.rank().cmp(&b.method.rank()))
    });
    runs
}

/// Grouped-parameterization ensemble on a long chain.
pub fn run_grouped(
    gp: GroupProblem,
    base: &ModelParams,
    objective: Objective,
    count: usize,
    seed: u64,
    methods: &[Method],
) -> Result<Vec<OptRun>, OptimizeError> {
    let problem = EnergyProblem::grouped(gp, base.clone(), objective)?;
    Ok(run_ensemble(&problem, count, seed, methods))
}

/// One point of the single-run demonstration curve.
#[derive(Debug, Clone, Serialize)]
pub struct DemoPoint {
    pub j_coupling: f64,
    pub objective: f64,
    pub run: OptRun,
}

/// One gradient-based run from the clean start at each coupling value.
/// The resulting curve is a methodology demonstration: a lone local
/// search can sit on a poor branch and hop discontinuously as the
/// coupling changes, which an ensemble of starts does not.
pub fn single_lbfgs_demo(problem: &EnergyProblem, j_values: &[f64]) -> Vec<DemoPoint> {
    j_values
        .par_iter()
        .map(|&j| {
            let p = problem.with_j_coupling(j);
            let start = p.start_coordinates();
            let run = run_local(&p, 0, &start, Method::SingleLbfgs, 0);
            DemoPoint {
                j_coupling: j,
                objective: run.final_objective,
                run,
            }
        })
        .collect()
}
