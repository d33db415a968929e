//! Gradient-based training of attack scenarios: exact parameter-shift
//! gradients of the two fidelities, a pinned-fidelity loss, Adam updates,
//! and a fixed-step training loop with a recorded trace.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bb84::{FidelityReport, Scenario};
use crate::circuits::{GateKind, ParamCircuit};
use crate::error::{Error, Result};

/// Loss `alpha * (F_AB - target_f_ab)^2 - F_AE`: hold Bob's fidelity at the
/// target while pushing Eve's up.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub target_f_ab: f64,
}

impl LossConfig {
    pub fn value(&self, f_ab: f64, f_ae: f64) -> f64 {
        let miss = f_ab - self.target_f_ab;
        self.alpha * miss * miss - f_ae
    }
}

/// How a single flat parameter enters its circuit, which fixes the exact
/// shift rule for its derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ShiftRule {
    /// One rotation gate generated by a half Pauli: two evaluations at ±π/2.
    TwoTerm,
    /// One controlled rotation: four evaluations at ±π/2 and ±3π/2.
    FourTerm,
}

fn shift_rule_for(circuit: &ParamCircuit, local: usize) -> Result<ShiftRule> {
    let bound = circuit.gates_bound_to(local);
    match bound.len() {
        0 => Err(Error::MissingParamIndex(local)),
        1 => match circuit.gates()[bound[0]].kind {
            GateKind::RX | GateKind::RY | GateKind::RZ => Ok(ShiftRule::TwoTerm),
            GateKind::CRY => Ok(ShiftRule::FourTerm),
            kind => Err(Error::UnexpectedParameter(kind.name())),
        },
        n => Err(Error::SharedParameter { index: local, count: n }),
    }
}

fn rule_for_flat_index(scenario: &Scenario, index: usize) -> Result<ShiftRule> {
    let n_theta = scenario.attack().n_params();
    if index < n_theta {
        shift_rule_for(scenario.attack(), index)
    } else {
        let n_v = scenario.measure().n_params();
        shift_rule_for(scenario.measure(), (index - n_theta) % n_v)
    }
}

/// Exact gradients `(dF_AB/dp_i, dF_AE/dp_i)` for every flat parameter of
/// the scenario, from parameter-shift evaluations.
pub fn fidelity_gradients(scenario: &Scenario, flat: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = scenario.n_flat_params();
    if flat.len() != n {
        return Err(Error::ParamCount { expected: n, actual: flat.len() });
    }
    let mut g_ab = vec![0.0; n];
    let mut g_ae = vec![0.0; n];
    let mut shifted = flat.to_vec();
    for i in 0..n {
        let mut eval = |delta: f64| -> Result<FidelityReport> {
            shifted[i] = flat[i] + delta;
            let report = scenario.evaluate_flat(&shifted);
            shifted[i] = flat[i];
            report
        };
        match rule_for_flat_index(scenario, i)? {
            ShiftRule::TwoTerm => {
                let plus = eval(FRAC_PI_2)?;
                let minus = eval(-FRAC_PI_2)?;
                g_ab[i] = (plus.f_ab - minus.f_ab) / 2.0;
                g_ae[i] = (plus.f_ae - minus.f_ae) / 2.0;
            }
            ShiftRule::FourTerm => {
                let y1 = (2.0 + std::f64::consts::SQRT_2) / 8.0;
                let y2 = (std::f64::consts::SQRT_2 - 2.0) / 8.0;
                let p1 = eval(FRAC_PI_2)?;
                let m1 = eval(-FRAC_PI_2)?;
                let p2 = eval(3.0 * FRAC_PI_2)?;
                let m2 = eval(-3.0 * FRAC_PI_2)?;
                g_ab[i] = y1 * (p1.f_ab - m1.f_ab) + y2 * (p2.f_ab - m2.f_ab);
                g_ae[i] = y1 * (p1.f_ae - m1.f_ae) + y2 * (p2.f_ae - m2.f_ae);
            }
        }
    }
    Ok((g_ab, g_ae))
}

/// Loss value and its gradient assembled from the fidelity gradients by the
/// chain rule.
pub fn loss_gradient(
    scenario: &Scenario,
    loss: &LossConfig,
    flat: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let report = scenario.evaluate_flat(flat)?;
    let (g_ab, g_ae) = fidelity_gradients(scenario, flat)?;
    let coeff = 2.0 * loss.alpha * (report.f_ab - loss.target_f_ab);
    let grad = g_ab
        .iter()
        .zip(&g_ae)
        .map(|(ab, ae)| coeff * ab - ae)
        .collect();
    Ok((loss.value(report.f_ab, report.f_ae), grad))
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment accumulators for Adam.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::ParamCount { expected: self.m.len(), actual: grad.len() });
        }
        self.t += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        Ok(())
    }
}

/// Full training run configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub n_steps: usize,
    pub learning_rate: f64,
    pub init_std: f64,
    pub seed: u64,
}

/// Fidelities and loss at one point of a training run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainStep {
    pub step: usize,
    pub f_ab: f64,
    pub f_ae: f64,
    pub loss: f64,
}

/// Everything a training run produced: the per-step trace (step 0 is the
/// random initialization), the final flat parameters, and the final report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainTrace {
    pub steps: Vec<TrainStep>,
    pub final_params: Vec<f64>,
    pub final_report: FidelityReport,
}

/// Trains the scenario's flat parameters for a fixed number of Adam steps
/// from a seeded Gaussian initialization. No early stopping.
pub fn train(scenario: &Scenario, cfg: &TrainConfig) -> Result<TrainTrace> {
    if cfg.n_steps == 0 {
        return Err(Error::NotPositiveCount("n_steps"));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::Config(format!("learning rate {} must be positive", cfg.learning_rate)));
    }
    if !(cfg.init_std >= 0.0) {
        return Err(Error::Config(format!("init_std {} must be nonnegative", cfg.init_std)));
    }
    let normal = Normal::new(0.0, cfg.init_std)
        .map_err(|_| Error::Config(format!("invalid init_std {}", cfg.init_std)))?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let n = scenario.n_flat_params();
    let mut params: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();

    let adam_cfg = AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() };
    let mut adam = AdamState::new(n);
    let mut steps = Vec::with_capacity(cfg.n_steps + 1);

    let first = scenario.evaluate_flat(&params)?;
    steps.push(TrainStep {
        step: 0,
        f_ab: first.f_ab,
        f_ae: first.f_ae,
        loss: cfg.loss.value(first.f_ab, first.f_ae),
    });
    let mut report = first;
    for step in 1..=cfg.n_steps {
        let (_, grad) = loss_gradient(scenario, &cfg.loss, &params)?;
        adam.step(&adam_cfg, &mut params, &grad)?;
        report = scenario.evaluate_flat(&params)?;
        steps.push(TrainStep {
            step,
            f_ab: report.f_ab,
            f_ae: report.f_ae,
            loss: cfg.loss.value(report.f_ab, report.f_ae),
        });
    }
    Ok(TrainTrace { steps, final_params: params, final_report: report })
}
