//! Python bindings for the BB84 attack simulator: scenario construction and
//! evaluation, training, the two-parameter cloner closed forms, and the
//! collective pair measurement.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bb84sim::attacks;
use bb84sim::bb84;
use bb84sim::channels::{NoiseChannel, NoiseKind, Placement};
use bb84sim::collective;
use bb84sim::qcl;

fn err(e: bb84sim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type NoiseSpec = Vec<(String, f64, usize, String)>;

fn parse_noise(entries: NoiseSpec) -> PyResult<Vec<NoiseChannel>> {
    entries
        .into_iter()
        .map(|(kind, strength, target, placement)| {
            let kind = match kind.as_str() {
                "bit_flip" => NoiseKind::BitFlip,
                "phase_flip" => NoiseKind::PhaseFlip,
                "amplitude_damping" => NoiseKind::AmplitudeDamping,
                "phase_damping" => NoiseKind::PhaseDamping,
                other => {
                    return Err(PyValueError::new_err(format!("unknown noise kind: {other}")))
                }
            };
            let placement = match placement.as_str() {
                "before_attack" => Placement::BeforeAttack,
                "after_attack" => Placement::AfterAttack,
                other => {
                    return Err(PyValueError::new_err(format!("unknown placement: {other}")))
                }
            };
            NoiseChannel::new(kind, strength, target, placement).map_err(err)
        })
        .collect()
}

fn scaling_from(alpha: f64, beta: f64, gamma: f64, delta: f64) -> PyResult<attacks::NoiseScaling> {
    attacks::NoiseScaling::new(alpha, beta, gamma, delta).map_err(err)
}

/// Per-basis and average fidelities of one scenario evaluation.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Fidelities {
    #[pyo3(get)]
    f_ab_z: f64,
    #[pyo3(get)]
    f_ab_x: f64,
    #[pyo3(get)]
    f_ab: f64,
    #[pyo3(get)]
    f_ae_z: f64,
    #[pyo3(get)]
    f_ae_x: f64,
    #[pyo3(get)]
    f_ae: f64,
}

#[pymethods]
impl Fidelities {
    /// Sifted-key error rate, 1 - f_ab.
    fn qber(&self) -> f64 {
        1.0 - self.f_ab
    }

    fn __repr__(&self) -> String {
        format!("Fidelities(f_ab={:.6}, f_ae={:.6})", self.f_ab, self.f_ae)
    }
}

impl From<bb84::FidelityReport> for Fidelities {
    fn from(r: bb84::FidelityReport) -> Self {
        Self {
            f_ab_z: r.f_ab_z,
            f_ab_x: r.f_ab_x,
            f_ab: r.f_ab,
            f_ae_z: r.f_ae_z,
            f_ae_x: r.f_ae_x,
            f_ae: r.f_ae,
        }
    }
}

/// One point of a training trace.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct TrainStep {
    #[pyo3(get)]
    step: usize,
    #[pyo3(get)]
    f_ab: f64,
    #[pyo3(get)]
    f_ae: f64,
    #[pyo3(get)]
    loss: f64,
}

/// Full result of a training run.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct TrainResult {
    #[pyo3(get)]
    steps: Vec<TrainStep>,
    #[pyo3(get)]
    final_params: Vec<f64>,
    #[pyo3(get)]
    final_report: Fidelities,
}

/// Sampled-protocol statistics.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct ProtocolStats {
    #[pyo3(get)]
    n_rounds: u64,
    #[pyo3(get)]
    n_sifted: u64,
    #[pyo3(get)]
    qber_hat: f64,
    #[pyo3(get)]
    eve_match_hat: f64,
    #[pyo3(get)]
    seed: u64,
}

/// Headline numbers of a collective-attack run.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct CollectiveResult {
    #[pyo3(get)]
    f_ab: f64,
    #[pyo3(get)]
    f_ae_individual: f64,
    #[pyo3(get)]
    raw_pair: f64,
    #[pyo3(get)]
    postprocessed: f64,
    #[pyo3(get)]
    collective_success_even: f64,
    #[pyo3(get)]
    collective_success_odd: f64,
    #[pyo3(get)]
    helstrom: f64,
}

/// An attack-and-measure setup: Eve's unitary on the sent qubit plus her
/// ancilla, conditioned measurement rotations, and optional channel noise.
#[pyclass(frozen)]
struct Scenario {
    inner: bb84::Scenario,
}

#[pymethods]
impl Scenario {
    /// One-angle cloning attack with its analytic correction rotations.
    #[staticmethod]
    #[pyo3(signature = (theta, noise=Vec::new()))]
    fn pccm(theta: f64, noise: NoiseSpec) -> PyResult<Self> {
        Ok(Self { inner: attacks::pccm_attack(theta, parse_noise(noise)?).map_err(err)? })
    }

    /// Two-angle cloner whose Z- and X-basis fidelities differ.
    #[staticmethod]
    #[pyo3(signature = (psi, phi, noise=Vec::new()))]
    fn imbalanced(psi: f64, phi: f64, noise: NoiseSpec) -> PyResult<Self> {
        Ok(Self { inner: attacks::imbalanced_attack(psi, phi, parse_noise(noise)?).map_err(err)? })
    }

    /// Trainable two-qubit ansatz attack with a trainable one-qubit
    /// measurement correction per basis; 18 flat parameters.
    #[staticmethod]
    #[pyo3(signature = (noise=Vec::new()))]
    fn standard_individual(noise: NoiseSpec) -> PyResult<Self> {
        Ok(Self { inner: bb84::Scenario::standard_individual(parse_noise(noise)?).map_err(err)? })
    }

    /// Number of trainable attack parameters.
    fn n_attack_params(&self) -> usize {
        self.inner.attack().n_params()
    }

    /// Total flat parameter count: attack plus per-basis measurement weights.
    fn n_flat_params(&self) -> usize {
        self.inner.n_flat_params()
    }

    /// Evaluates with attack parameters and the stored measurement weights.
    fn evaluate(&self, theta: Vec<f64>) -> PyResult<Fidelities> {
        Ok(self.inner.evaluate(&theta).map_err(err)?.into())
    }

    /// Evaluates with a flat vector: attack parameters, then Z-basis
    /// measurement weights, then X-basis measurement weights.
    fn evaluate_flat(&self, flat: Vec<f64>) -> PyResult<Fidelities> {
        Ok(self.inner.evaluate_flat(&flat).map_err(err)?.into())
    }

    /// Samples full protocol rounds with uniform bits and bases.
    #[pyo3(signature = (n_rounds, seed, theta=Vec::new()))]
    fn monte_carlo(&self, n_rounds: u64, seed: u64, theta: Vec<f64>) -> PyResult<ProtocolStats> {
        let s = bb84::monte_carlo_protocol(&self.inner, &theta, n_rounds, seed).map_err(err)?;
        Ok(ProtocolStats {
            n_rounds: s.n_rounds,
            n_sifted: s.n_sifted,
            qber_hat: s.qber_hat,
            eve_match_hat: s.eve_match_hat,
            seed: s.seed,
        })
    }
}

/// Closed-form (f_ab, f_ae) of the one-angle cloning attack.
#[pyfunction]
fn pccm_fidelities(theta: f64) -> (f64, f64) {
    attacks::pccm_fidelities(theta)
}

/// Closed-form centered fidelities (c_ab_z, c_ab_x, c_ae_z, c_ae_x) of the
/// two-angle cloner.
#[pyfunction]
fn imbalanced_centered(psi: f64, phi: f64) -> (f64, f64, f64, f64) {
    let c = attacks::imbalanced_centered(psi, phi);
    (c.c_ab_z, c.c_ab_x, c.c_ae_z, c.c_ae_x)
}

/// Per-basis centered-fidelity scaling factors (alpha, beta, gamma, delta)
/// produced by a noise list.
#[pyfunction]
fn noise_scaling(noise: NoiseSpec) -> PyResult<(f64, f64, f64, f64)> {
    let s = attacks::NoiseScaling::from_channels(&parse_noise(noise)?).map_err(err)?;
    Ok((s.alpha, s.beta, s.gamma, s.delta))
}

/// Second cloner angle maximizing Eve's average fidelity at fixed psi under
/// the given per-basis scaling.
#[pyfunction]
fn optimal_phi(psi: f64, alpha: f64, beta: f64, gamma: f64, delta: f64) -> PyResult<f64> {
    attacks::optimal_phi(psi, &scaling_from(alpha, beta, gamma, delta)?).map_err(err)
}

/// Largest scaled Z-basis eavesdropper fidelity at a given scaled Z-basis
/// receiver fidelity (centered units).
#[pyfunction]
fn envelope_z(alpha: f64, beta: f64, gamma: f64, delta: f64, c_ab_z: f64) -> PyResult<f64> {
    attacks::envelope_z(&scaling_from(alpha, beta, gamma, delta)?, c_ab_z).map_err(err)
}

/// X-basis counterpart of envelope_z.
#[pyfunction]
fn envelope_x(alpha: f64, beta: f64, gamma: f64, delta: f64, c_ab_x: f64) -> PyResult<f64> {
    attacks::envelope_x(&scaling_from(alpha, beta, gamma, delta)?, c_ab_x).map_err(err)
}

/// Scaled one-angle-cloner average tradeoff curve (centered units).
#[pyfunction]
fn pccm_scaled_envelope(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    c_ab: f64,
) -> PyResult<f64> {
    attacks::pccm_scaled_envelope(&scaling_from(alpha, beta, gamma, delta)?, c_ab).map_err(err)
}

/// Cloner angles (psi, phi) whose scaled average centered receiver fidelity
/// matches c_ab, with phi chosen optimally.
#[pyfunction]
fn imbalanced_matched_to(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    c_ab: f64,
) -> PyResult<(f64, f64)> {
    attacks::imbalanced_matched_to(&scaling_from(alpha, beta, gamma, delta)?, c_ab).map_err(err)
}

/// Cloning-attack angle that produces the requested receiver fidelity.
#[pyfunction]
fn theta_for_f_ab(f_ab: f64) -> PyResult<f64> {
    collective::theta_for_f_ab(f_ab).map_err(err)
}

/// Independent-measurement pair baseline: (both bits right, after parity repair).
#[pyfunction]
fn individual_baseline(f_ae: f64) -> (f64, f64) {
    collective::individual_baseline(f_ae)
}

/// Gradients of (f_ab, f_ae) with respect to a flat parameter vector,
/// computed with exact shift rules.
#[pyfunction]
fn fidelity_gradients(scenario: &Scenario, flat: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    qcl::fidelity_gradients(&scenario.inner, &flat).map_err(err)
}

/// Trains a scenario's flat parameters with Adam against the loss
/// alpha * (f_ab - target_f_ab)^2 - f_ae.
#[pyfunction]
#[pyo3(signature = (scenario, target_f_ab, alpha=10.0, n_steps=100, learning_rate=0.1, init_std=0.1, seed=0))]
fn train(
    scenario: &Scenario,
    target_f_ab: f64,
    alpha: f64,
    n_steps: usize,
    learning_rate: f64,
    init_std: f64,
    seed: u64,
) -> PyResult<TrainResult> {
    let cfg = qcl::TrainConfig {
        loss: qcl::LossConfig { alpha, target_f_ab },
        n_steps,
        learning_rate,
        init_std,
        seed,
    };
    let trace = qcl::train(&scenario.inner, &cfg).map_err(err)?;
    Ok(TrainResult {
        steps: trace
            .steps
            .iter()
            .map(|s| TrainStep { step: s.step, f_ab: s.f_ab, f_ae: s.f_ae, loss: s.loss })
            .collect(),
        final_params: trace.final_params,
        final_report: trace.final_report.into(),
    })
}

/// Trains the two-copy pair measurement for both parities and reports the
/// resulting success probabilities next to the discrimination bound.
#[pyfunction]
#[pyo3(signature = (f_ab=0.892, n_steps=100, learning_rate=0.1, init_std=0.1, seed=0))]
fn train_collective(
    f_ab: f64,
    n_steps: usize,
    learning_rate: f64,
    init_std: f64,
    seed: u64,
) -> PyResult<CollectiveResult> {
    let cfg = collective::CollectiveConfig { f_ab, n_steps, learning_rate, init_std, seed };
    let outcome = collective::train_collective(&cfg).map_err(err)?;
    let r = outcome.report;
    Ok(CollectiveResult {
        f_ab: r.f_ab,
        f_ae_individual: r.f_ae_individual,
        raw_pair: r.raw_pair,
        postprocessed: r.postprocessed,
        collective_success_even: r.collective_success_even,
        collective_success_odd: r.collective_success_odd,
        helstrom: r.helstrom,
    })
}

#[pymodule]
fn bb84sim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Fidelities>()?;
    m.add_class::<TrainStep>()?;
    m.add_class::<TrainResult>()?;
    m.add_class::<ProtocolStats>()?;
    m.add_class::<CollectiveResult>()?;
    m.add_function(wrap_pyfunction!(pccm_fidelities, m)?)?;
    m.add_function(wrap_pyfunction!(imbalanced_centered, m)?)?;
    m.add_function(wrap_pyfunction!(noise_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_phi, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_z, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_x, m)?)?;
    m.add_function(wrap_pyfunction!(pccm_scaled_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(imbalanced_matched_to, m)?)?;
    m.add_function(wrap_pyfunction!(theta_for_f_ab, m)?)?;
    m.add_function(wrap_pyfunction!(individual_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_gradients, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(train_collective, m)?)?;
    Ok(())
}
