//! Monte Carlo trajectory sampling.
//!
//! An operational oracle for the runtime calculus: every trial executes the
//! program small-step on a state vector, drawing measurement outcomes from
//! the Born probabilities and collapsing, while summing time costs from the
//! cost model. Mixed initial states are sampled by spectral decomposition
//! (eigenvector `i` with probability `eigenvalue_i`), which agrees with the
//! density-matrix semantics in expectation by linearity.
//!
//! Per-trial generator streams derive deterministically from
//! `(seed, trial index)`, so estimates are bit-identical across runs and
//! independent of how trials are scheduled across threads.

use crate::ert::{CostModel, ErtError};
use crate::frontend::{ElaboratedProgram, InitStep, Ir};
use crate::operators::{apply_to_vector, CVector, MeasurementSet, Pdm};
use crate::rng::SplitMix64;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub trials: u64,
    pub seed: u64,
    /// Executed statements (including guard measurements) before a trial is
    /// cut off and flagged.
    pub max_steps: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            max_steps: 1_000_000,
        }
    }
}

/// Estimate of the expected runtime from independent trials.
#[derive(Debug, Clone)]
pub struct RuntimeEstimate {
    pub mean: f64,
    /// Sample standard deviation / sqrt(trials).
    pub std_error: f64,
    pub trials: u64,
    /// Trials that hit `max_steps`; their partial costs are still included.
    pub truncated_trials: u64,
    /// Exact cost value (as f64 bits) -> frequency.
    pub histogram: BTreeMap<u64, u64>,
}

impl RuntimeEstimate {
    /// Histogram entries as `(cost, count)` pairs in increasing cost order.
    pub fn histogram_entries(&self) -> Vec<(f64, u64)> {
        self.histogram
            .iter()
            .map(|(bits, count)| (f64::from_bits(*bits), *count))
            .collect()
    }

    /// `cost,count` CSV. Costs are exact f64 values.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("cost,count\n");
        for (cost, count) in self.histogram_entries() {
            out.push_str(&format!("{cost},{count}\n"));
        }
        out
    }
}

/// Outcome of a single sampled execution.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub cost: f64,
    pub final_state: CVector,
    pub steps: u64,
    pub truncated: bool,
}

/// Executes one probabilistic run from a (pure or mixed) initial state.
pub fn sample_run(
    program: &ElaboratedProgram,
    rho: &Pdm,
    rng: &mut SplitMix64,
    cost: &CostModel,
    max_steps: u64,
) -> Result<SampleRun, ErtError> {
    if rho.layout() != &program.layout {
        return Err(ErtError::LayoutMismatch);
    }
    cost.check_program(&program.ir)?;
    let parts = rho
        .spectral_decomposition(1e-12)
        .map_err(ErtError::Operator)?;
    let psi = draw_initial(&parts, rho.trace(), rng)?;
    run_vector(program, psi, rng, cost, max_steps)
}

fn draw_initial(
    parts: &[(f64, CVector)],
    trace: f64,
    rng: &mut SplitMix64,
) -> Result<CVector, ErtError> {
    if (trace - 1.0).abs() > 1e-6 {
        return Err(ErtError::NotNormalizedState(trace));
    }
    if parts.len() == 1 {
        return Ok(parts[0].1.clone());
    }
    let u = rng.next_f64() * trace;
    let mut acc = 0.0;
    for (p, v) in parts {
        acc += p;
        if u < acc {
            return Ok(v.clone());
        }
    }
    Ok(parts.last().expect("nonempty decomposition").1.clone())
}

fn run_vector(
    program: &ElaboratedProgram,
    mut psi: CVector,
    rng: &mut SplitMix64,
    cost: &CostModel,
    max_steps: u64,
) -> Result<SampleRun, ErtError> {
    let mut run = Running {
        cost: 0.0,
        steps: 0,
        max_steps,
        rng,
        model: cost,
        program,
    };
    let completed = run.exec(&program.ir, &mut psi)?;
    Ok(SampleRun {
        cost: run.cost,
        final_state: psi,
        steps: run.steps,
        truncated: !completed,
    })
}

struct Running<'a> {
    cost: f64,
    steps: u64,
    max_steps: u64,
    rng: &'a mut SplitMix64,
    model: &'a CostModel,
    program: &'a ElaboratedProgram,
}

impl Running<'_> {
    /// Returns `Ok(false)` when the step budget ran out.
    fn exec(&mut self, ir: &Ir, psi: &mut CVector) -> Result<bool, ErtError> {
        match ir {
            Ir::Skip => {
                if !self.tick() {
                    return Ok(false);
                }
                self.cost += self.model.skip;
                Ok(true)
            }
            Ir::InitKet { steps, label } => {
                if !self.tick() {
                    return Ok(false);
                }
                self.cost += self.model.init_cost(label)?;
                for step in steps {
                    self.init_step(step, psi);
                }
                Ok(true)
            }
            Ir::Unitary(op) => {
                if !self.tick() {
                    return Ok(false);
                }
                self.cost += self.model.unitary_cost(op.label())?;
                *psi = apply_to_vector(op.matrix(), op.map(), psi);
                Ok(true)
            }
            Ir::Seq(items) => {
                for item in items {
                    if !self.exec(item, psi)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Ir::Case { mset, branches } => {
                if !self.tick() {
                    return Ok(false);
                }
                self.cost += self.model.measurement_cost(mset.label())?;
                let outcome = self.measure(mset, psi)?;
                let body = branches
                    .iter()
                    .find(|(id, _)| *id == outcome)
                    .map(|(_, b)| b)
                    .expect("elaboration guarantees coverage");
                self.exec(body, psi)
            }
            Ir::While { mset, body, .. } => loop {
                if !self.tick() {
                    return Ok(false);
                }
                self.cost += self.model.measurement_cost(mset.label())?;
                let outcome = self.measure(mset, psi)?;
                if outcome == 0 {
                    return Ok(true);
                }
                if !self.exec(body, psi)? {
                    return Ok(false);
                }
            },
        }
    }

    fn tick(&mut self) -> bool {
        if self.steps >= self.max_steps {
            return false;
        }
        self.steps += 1;
        true
    }

    /// Born-rule outcome draw followed by collapse and renormalization.
    fn measure(&mut self, mset: &MeasurementSet, psi: &mut CVector) -> Result<u32, ErtError> {
        let ids: Vec<u32> = mset.outcome_ids().collect();
        let mut collapsed: Vec<(u32, f64, CVector)> = Vec::with_capacity(ids.len());
        let mut total = 0.0;
        for id in ids {
            let m = mset.operator(id).map_err(ErtError::Operator)?;
            let post = apply_to_vector(m, mset.map(), psi);
            let p = post.norm_squared();
            total += p;
            collapsed.push((id, p, post));
        }
        let u = self.rng.next_f64() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (id, p, post) in &collapsed {
            acc += p;
            if u < acc && *p > 0.0 {
                chosen = Some((*id, *p, post.clone()));
                break;
            }
        }
        let (id, p, post) = chosen.unwrap_or_else(|| {
            let (id, p, post) = collapsed
                .into_iter()
                .rev()
                .find(|(_, p, _)| *p > 0.0)
                .expect("total outcome probability is positive");
            (id, p, post)
        });
        *psi = post.unscale(p.sqrt());
        Ok(id)
    }

    /// Basis measurement of the target, relabel to `basis`, optional H.
    fn init_step(&mut self, step: &InitStep, psi: &mut CVector) {
        let layout = &self.program.layout;
        let dq = layout.dim_of(step.var);
        let stride = layout.stride_of(step.var);
        let dim = psi.len();
        let mut probs = vec![0.0f64; dq];
        for idx in 0..dim {
            let d = (idx / stride) % dq;
            probs[d] += psi[idx].norm_sqr();
        }
        let total: f64 = probs.iter().sum();
        let u = self.rng.next_f64() * total;
        let mut acc = 0.0;
        let mut drawn = usize::MAX;
        for (d, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && *p > 0.0 {
                drawn = d;
                break;
            }
        }
        if drawn == usize::MAX {
            drawn = probs
                .iter()
                .enumerate()
                .rev()
                .find(|(_, p)| **p > 0.0)
                .map(|(d, _)| d)
                .expect("state vector is normalized");
        }
        // collapse to digit `drawn` and relabel it to `basis`
        let scale = 1.0 / probs[drawn].sqrt();
        let mut next = CVector::zeros(dim);
        for idx in 0..dim {
            let d = (idx / stride) % dq;
            if d == drawn {
                let target = idx + step.basis * stride - drawn * stride;
                next[target] = psi[idx] * Complex64::new(scale, 0.0);
            }
        }
        *psi = next;
        if let Some(h) = &step.hadamard {
            *psi = apply_to_vector(h.matrix(), h.map(), psi);
        }
    }
}

/// Averages `config.trials` independent runs.
///
/// Trials execute in parallel; the reduction runs in trial order with
/// compensated summation, so the estimate is a pure function of
/// `(program, rho, config, cost)`.
pub fn estimate(
    program: &ElaboratedProgram,
    rho: &Pdm,
    config: &TrajectoryConfig,
    cost: &CostModel,
) -> Result<RuntimeEstimate, ErtError> {
    if rho.layout() != &program.layout {
        return Err(ErtError::LayoutMismatch);
    }
    cost.check_program(&program.ir)?;
    let parts = rho
        .spectral_decomposition(1e-12)
        .map_err(ErtError::Operator)?;
    let trace = rho.trace();
    if (trace - 1.0).abs() > 1e-6 {
        return Err(ErtError::NotNormalizedState(trace));
    }

    let runs: Result<Vec<(f64, bool)>, ErtError> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = SplitMix64::stream(config.seed, trial);
            let psi = draw_initial(&parts, trace, &mut rng)?;
            let run = run_vector(program, psi, &mut rng, cost, config.max_steps)?;
            Ok((run.cost, run.truncated))
        })
        .collect();
    let runs = runs?;

    // Neumaier-compensated mean and variance, reduced in trial order.
    let n = runs.len() as f64;
    let mean = compensated_sum(runs.iter().map(|(c, _)| *c)) / n;
    let var_sum = compensated_sum(runs.iter().map(|(c, _)| (c - mean) * (c - mean)));
    let variance = if runs.len() > 1 {
        var_sum / (n - 1.0)
    } else {
        0.0
    };
    let std_error = (variance / n).sqrt();

    let mut histogram = BTreeMap::new();
    let mut truncated_trials = 0u64;
    for (c, truncated) in &runs {
        *histogram.entry(c.to_bits()).or_insert(0u64) += 1;
        if *truncated {
            truncated_trials += 1;
        }
    }
    Ok(RuntimeEstimate {
        mean,
        std_error,
        trials: config.trials,
        truncated_trials,
        histogram,
    })
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ert::{ert_of_program, ErtOptions};
    use crate::frontend::{elaborate, parse};
    use crate::tolerances::Tolerances;

    fn program(src: &str) -> ElaboratedProgram {
        elaborate(&parse(src).unwrap(), &Tolerances::default()).unwrap()
    }

    #[test]
    fn skip_costs_exactly_one() {
        let p = program("var q : bool; skip");
        let rho = Pdm::all_zero(p.layout.clone());
        let est = estimate(
            &p,
            &rho,
            &TrajectoryConfig {
                trials: 1000,
                seed: 1,
                max_steps: 100,
            },
            &CostModel::unit(),
        )
        .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.truncated_trials, 0);
        assert_eq!(est.histogram.len(), 1);
    }

    #[test]
    fn deterministic_programs_have_constant_cost() {
        let p = program("var q : bool; q := |1>; [q] *= X; skip");
        let rho = Pdm::all_zero(p.layout.clone());
        let est = estimate(
            &p,
            &rho,
            &TrajectoryConfig {
                trials: 500,
                seed: 9,
                max_steps: 100,
            },
            &CostModel::unit(),
        )
        .unwrap();
        let ert = ert_of_program(&p, &rho, &CostModel::unit(), &ErtOptions::default()).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert!((est.mean - ert.backward.value).abs() < 1e-12);
    }

    #[test]
    fn geometric_loop_has_geometric_cost_distribution() {
        let p = program(
            "var q : bool; q := |0>; [q] *= H; \
             while M_std[q] = 1 do q := |0>; [q] *= H od",
        );
        let rho = Pdm::all_zero(p.layout.clone());
        let trials = 200_000u64;
        let est = estimate(
            &p,
            &rho,
            &TrajectoryConfig {
                trials,
                seed: 42,
                max_steps: 10_000,
            },
            &CostModel::unit(),
        )
        .unwrap();
        // cost = 3n + 3 with probability 2^-(n+1); mean 6
        assert!((est.mean - 6.0).abs() <= 3.0 * est.std_error + 1e-9);
        for (cost, count) in est.histogram_entries().iter().take(4) {
            let n = ((cost - 3.0) / 3.0).round();
            let expect = 0.5f64.powi(n as i32 + 1);
            let freq = *count as f64 / trials as f64;
            assert!(
                (freq - expect).abs() < 4.0 / (trials as f64).sqrt() + 0.01,
                "cost {cost}: freq {freq} vs {expect}"
            );
        }
    }

    #[test]
    fn estimates_are_bit_identical_across_runs() {
        let p = program(
            "var q : bool; q := |0>; [q] *= H; \
             while M_std[q] = 1 do q := |0>; [q] *= H od",
        );
        let rho = Pdm::all_zero(p.layout.clone());
        let cfg = TrajectoryConfig {
            trials: 5000,
            seed: 7,
            max_steps: 1000,
        };
        let a = estimate(&p, &rho, &cfg, &CostModel::unit()).unwrap();
        let b = estimate(&p, &rho, &cfg, &CostModel::unit()).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_eq!(a.histogram, b.histogram);
    }

    #[test]
    fn mean_tracks_the_calculus_on_the_geometric_loop() {
        let p = program(
            "var q : bool; q := |0>; [q] *= H; \
             while M_std[q] = 1 do q := |0>; [q] *= H od",
        );
        let rho = Pdm::all_zero(p.layout.clone());
        let est = estimate(
            &p,
            &rho,
            &TrajectoryConfig {
                trials: 100_000,
                seed: 17,
                max_steps: 10_000,
            },
            &CostModel::unit(),
        )
        .unwrap();
        let ert = ert_of_program(&p, &rho, &CostModel::unit(), &ErtOptions::default()).unwrap();
        assert!(
            (est.mean - ert.backward.value).abs() <= 3.0 * est.std_error,
            "mean {} vs ert {} (3σ = {})",
            est.mean,
            ert.backward.value,
            3.0 * est.std_error
        );
    }

    #[test]
    fn diverging_loop_truncates_every_trial() {
        let src = "var q : bool; \
                   define M_triv := measurement { 0: [[[0,0],[0,0]],[[0,0],[0,0]]], \
                                                  1: [[[1,0],[0,0]],[[0,0],[1,0]]] } on 2; \
                   while M_triv[q] = 1 do skip od";
        let p = program(src);
        let rho = Pdm::all_zero(p.layout.clone());
        let est = estimate(
            &p,
            &rho,
            &TrajectoryConfig {
                trials: 50,
                seed: 3,
                max_steps: 64,
            },
            &CostModel::unit(),
        )
        .unwrap();
        assert_eq!(est.truncated_trials, 50);
    }

    #[test]
    fn first_measurement_frequencies_match_born_rule() {
        let p = program("var q : bool; [q] *= H; case M_std[q] of 0 -> skip; 1 -> skip end");
        let rho = Pdm::all_zero(p.layout.clone());
        let trials = 100_000u64;
        let mut zeros = 0u64;
        for trial in 0..trials {
            let mut rng = SplitMix64::stream(11, trial);
            let run = sample_run(&p, &rho, &mut rng, &CostModel::unit(), 100).unwrap();
            if run.final_state[0].norm() > 0.5 {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / trials as f64;
        assert!(
            (freq - 0.5).abs() < 4.0 / (trials as f64).sqrt(),
            "frequency {freq}"
        );
    }

    #[test]
    fn mixed_states_sample_their_spectrum() {
        let p = program("var q : bool; skip");
        let mut m = crate::operators::CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.75, 0.0);
        m[(1, 1)] = Complex64::new(0.25, 0.0);
        let rho = Pdm::from_matrix_unchecked(p.layout.clone(), m);
        let trials = 20_000u64;
        let mut ones = 0u64;
        for trial in 0..trials {
            let mut rng = SplitMix64::stream(5, trial);
            let run = sample_run(&p, &rho, &mut rng, &CostModel::unit(), 10).unwrap();
            if run.final_state[1].norm() > 0.5 {
                ones += 1;
            }
        }
        let freq = ones as f64 / trials as f64;
        assert!((freq - 0.25).abs() < 4.0 / (trials as f64).sqrt());
    }

    #[test]
    fn subnormalized_inputs_are_rejected() {
        let p = program("var q : bool; skip");
        let rho = Pdm::all_zero(p.layout.clone()).scaled(0.5);
        let cfg = TrajectoryConfig::default();
        assert!(matches!(
            estimate(&p, &rho, &cfg, &CostModel::unit()),
            Err(ErtError::NotNormalizedState(_))
        ));
    }
}
