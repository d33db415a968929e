//! BB84 state preparation, the eavesdropping pipeline, fidelity evaluation
//! over the four sifted cases, and a Monte Carlo protocol sampler.
//!
//! A [`Scenario`] wires together Eve's attack unitary U(Θ) acting on Alice's
//! line qubit plus Eve's ancilla register, an optional noise list, and Eve's
//! measurement circuit V(Λ) whose weights are conditioned on information she
//! learns classically (the announced basis, optionally a parity bit).

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, NoiseChannel, Placement};
use crate::circuits::{apply_circuit, build_hea, partial_trace, ParamCircuit};
use crate::error::{Error, Result};
use crate::qmat::{fidelity_pure, PureState};

/// Measurement basis; the declaration order (Z before X) also fixes the
/// ordering of basis-keyed weight blocks in flattened parameter vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Basis::Z),
            1 => Ok(Basis::X),
            b => Err(Error::BadBit(b)),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }
}

/// One protocol round: Alice's bit and basis, Bob's basis, and the basis Eve
/// learns during sifting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub x: u8,
    pub b_a: u8,
    pub b_b: u8,
    pub b_e: u8,
}

impl Transmission {
    pub fn sifted(&self) -> bool {
        self.b_a == self.b_b
    }
}

/// Condition under which one of Eve's weight sets applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConditionKey {
    pub basis: Basis,
    pub parity: Option<u8>,
}

impl ConditionKey {
    pub fn basis_only(basis: Basis) -> Self {
        Self { basis, parity: None }
    }
}

/// `|0⟩, |1⟩, |+⟩, |−⟩` for (bit, basis) per the protocol's preparation rule.
pub fn prepare_state(bit: u8, basis: Basis) -> Result<PureState> {
    if bit > 1 {
        return Err(Error::BadBit(bit));
    }
    match basis {
        Basis::Z => PureState::basis(1, bit as usize),
        Basis::X => {
            let inv = std::f64::consts::FRAC_1_SQRT_2;
            let sign = if bit == 0 { 1.0 } else { -1.0 };
            PureState::new(vec![
                num_complex::Complex64::new(inv, 0.0),
                num_complex::Complex64::new(sign * inv, 0.0),
            ])
        }
    }
}

/// Per-basis and averaged fidelities of one attack evaluation.
///
/// `f_ab` is the probability Bob recovers Alice's bit (so the error rate is
/// `1 − f_ab`), `f_ae` the probability Eve does; the `_z`/`_x` fields are the
/// per-basis averages over Alice's two bit values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f_ab_z: f64,
    pub f_ab_x: f64,
    pub f_ab: f64,
    pub f_ae_z: f64,
    pub f_ae_x: f64,
    pub f_ae: f64,
}

impl FidelityReport {
    pub fn qber(&self) -> f64 {
        1.0 - self.f_ab
    }

    pub fn c_ab_z(&self) -> f64 {
        2.0 * self.f_ab_z - 1.0
    }

    pub fn c_ab_x(&self) -> f64 {
        2.0 * self.f_ab_x - 1.0
    }

    pub fn c_ab(&self) -> f64 {
        2.0 * self.f_ab - 1.0
    }

    pub fn c_ae_z(&self) -> f64 {
        2.0 * self.f_ae_z - 1.0
    }

    pub fn c_ae_x(&self) -> f64 {
        2.0 * self.f_ae_x - 1.0
    }

    pub fn c_ae(&self) -> f64 {
        2.0 * self.f_ae - 1.0
    }
}

/// Full description of one attack experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    n_ancilla: usize,
    attack: ParamCircuit,
    measure: ParamCircuit,
    v_weights: BTreeMap<ConditionKey, Vec<f64>>,
    noise: Vec<NoiseChannel>,
}

impl Scenario {
    /// `attack` spans Alice's line qubit (index 0) plus Eve's ancillas;
    /// `measure` spans the ancillas only; every stored weight set must match
    /// the measurement circuit's parameter count.
    pub fn new(
        attack: ParamCircuit,
        measure: ParamCircuit,
        v_weights: BTreeMap<ConditionKey, Vec<f64>>,
        noise: Vec<NoiseChannel>,
    ) -> Result<Self> {
        let n_ancilla = measure.n_qubits();
        if attack.n_qubits() != n_ancilla + 1 {
            return Err(Error::Config(format!(
                "attack circuit spans {} qubits; expected {} (line qubit + {} ancilla)",
                attack.n_qubits(),
                n_ancilla + 1,
                n_ancilla
            )));
        }
        for weights in v_weights.values() {
            if weights.len() != measure.n_params() {
                return Err(Error::ParamCount {
                    expected: measure.n_params(),
                    actual: weights.len(),
                });
            }
        }
        for ch in &noise {
            if !(0.0..=1.0).contains(&ch.strength) {
                return Err(Error::BadProbability(ch.strength));
            }
            if ch.target >= attack.n_qubits() {
                return Err(Error::QubitOutOfRange {
                    index: ch.target,
                    n_qubits: attack.n_qubits(),
                });
            }
        }
        Ok(Self { n_ancilla, attack, measure, v_weights, noise })
    }

    /// The trainable layout used throughout: a two-layer two-qubit ansatz
    /// for U (12 parameters) and a one-layer single-qubit ansatz for V
    /// (3 parameters per basis key), 18 flat parameters in total.
    pub fn standard_individual(noise: Vec<NoiseChannel>) -> Result<Self> {
        let attack = build_hea(2, 2)?;
        let measure = build_hea(1, 1)?;
        let n_v = measure.n_params();
        let mut v_weights = BTreeMap::new();
        v_weights.insert(ConditionKey::basis_only(Basis::Z), vec![0.0; n_v]);
        v_weights.insert(ConditionKey::basis_only(Basis::X), vec![0.0; n_v]);
        Self::new(attack, measure, v_weights, noise)
    }

    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }

    pub fn attack(&self) -> &ParamCircuit {
        &self.attack
    }

    pub fn measure(&self) -> &ParamCircuit {
        &self.measure
    }

    pub fn v_weights(&self) -> &BTreeMap<ConditionKey, Vec<f64>> {
        &self.v_weights
    }

    pub fn noise(&self) -> &[NoiseChannel] {
        &self.noise
    }

    /// Length of the flattened parameter vector: Θ followed by one Λ block
    /// per weight-set key in key order.
    pub fn n_flat_params(&self) -> usize {
        self.attack.n_params() + self.v_weights.len() * self.measure.n_params()
    }

    /// One sifted case: Alice prepares (x, basis), noise and the attack act,
    /// Bob's marginal is scored against Alice's state, Eve's register gets
    /// her conditioned measurement circuit and her readout qubit is scored
    /// against Alice's bit.
    fn eval_case(&self, x: u8, basis: Basis, theta: &[f64], lambda: &[f64]) -> Result<(f64, f64)> {
        let alice = prepare_state(x, basis)?;
        let ancilla = PureState::basis(self.n_ancilla, 0)?;
        let mut rho = alice.tensor(&ancilla)?.density();
        for ch in self.noise.iter().filter(|c| c.placement == Placement::BeforeAttack) {
            rho = apply_channel(&rho, ch)?;
        }
        rho = apply_circuit(&rho, &self.attack, theta)?;
        for ch in self.noise.iter().filter(|c| c.placement == Placement::AfterAttack) {
            rho = apply_channel(&rho, ch)?;
        }

        let bob = partial_trace(&rho, &[0])?;
        let f_ab = fidelity_pure(&alice, &bob)?;

        let keep: Vec<usize> = (1..=self.n_ancilla).collect();
        let mut eve = partial_trace(&rho, &keep)?;
        eve = apply_circuit(&eve, &self.measure, lambda)?;
        let readout = if self.n_ancilla > 1 { partial_trace(&eve, &[0])? } else { eve };
        let guess_target = PureState::basis(1, x as usize)?;
        let f_ae = fidelity_pure(&guess_target, &readout)?;
        Ok((f_ab, f_ae))
    }

    fn eval_with<'a, F>(&self, theta: &[f64], mut lambda_for: F) -> Result<FidelityReport>
    where
        F: FnMut(Basis) -> Result<&'a [f64]>,
    {
        let mut per_basis = [(0.0, 0.0); 2];
        for (slot, basis) in [Basis::Z, Basis::X].into_iter().enumerate() {
            let lambda = lambda_for(basis)?;
            let mut ab = 0.0;
            let mut ae = 0.0;
            for x in [0u8, 1u8] {
                let (a, e) = self.eval_case(x, basis, theta, lambda)?;
                ab += a;
                ae += e;
            }
            per_basis[slot] = (ab / 2.0, ae / 2.0);
        }
        let (f_ab_z, f_ae_z) = per_basis[0];
        let (f_ab_x, f_ae_x) = per_basis[1];
        Ok(FidelityReport {
            f_ab_z,
            f_ab_x,
            f_ab: (f_ab_z + f_ab_x) / 2.0,
            f_ae_z,
            f_ae_x,
            f_ae: (f_ae_z + f_ae_x) / 2.0,
        })
    }

    /// Evaluates with the stored basis-keyed weight sets.
    pub fn evaluate(&self, theta: &[f64]) -> Result<FidelityReport> {
        self.eval_with(theta, |basis| {
            self.v_weights
                .get(&ConditionKey::basis_only(basis))
                .map(Vec::as_slice)
                .ok_or_else(|| Error::MissingWeights(format!("{basis:?}")))
        })
    }

    /// Evaluates from a flattened vector `[Θ | Λ_key1 | Λ_key2 | ...]` with Λ
    /// blocks in weight-set key order, ignoring the stored weight values.
    pub fn evaluate_flat(&self, flat: &[f64]) -> Result<FidelityReport> {
        let blocks = self.split_flat(flat)?;
        self.eval_with(blocks.theta, |basis| {
            blocks
                .lambdas
                .get(&ConditionKey::basis_only(basis))
                .copied()
                .ok_or_else(|| Error::MissingWeights(format!("{basis:?}")))
        })
    }

    pub(crate) fn split_flat<'a>(&self, flat: &'a [f64]) -> Result<FlatBlocks<'a>> {
        if flat.len() != self.n_flat_params() {
            return Err(Error::ParamCount {
                expected: self.n_flat_params(),
                actual: flat.len(),
            });
        }
        let n_theta = self.attack.n_params();
        let n_v = self.measure.n_params();
        let mut lambdas = BTreeMap::new();
        for (i, key) in self.v_weights.keys().enumerate() {
            let start = n_theta + i * n_v;
            lambdas.insert(*key, &flat[start..start + n_v]);
        }
        Ok(FlatBlocks { theta: &flat[..n_theta], lambdas })
    }
}

pub(crate) struct FlatBlocks<'a> {
    pub theta: &'a [f64],
    pub lambdas: BTreeMap<ConditionKey, &'a [f64]>,
}

/// Empirical rates from a seeded protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSample {
    pub n_rounds: u64,
    pub n_sifted: u64,
    pub qber_hat: f64,
    pub eve_match_hat: f64,
    pub seed: u64,
}

/// Samples `n_rounds` protocol rounds: uniform bit and bases, sifting on
/// matching bases, and Bob/Eve outcomes drawn from their exact marginal
/// probabilities under the scenario's attack.
pub fn monte_carlo_protocol(
    scenario: &Scenario,
    theta: &[f64],
    n_rounds: u64,
    seed: u64,
) -> Result<ProtocolSample> {
    if n_rounds == 0 {
        return Err(Error::NotPositiveCount("n_rounds"));
    }
    // Exact per-case probabilities, computed once.
    let mut case_probs = [[(0.0_f64, 0.0_f64); 2]; 2];
    for basis in [Basis::Z, Basis::X] {
        let lambda = scenario
            .v_weights
            .get(&ConditionKey::basis_only(basis))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingWeights(format!("{basis:?}")))?;
        for x in [0u8, 1u8] {
            case_probs[basis.bit() as usize][x as usize] =
                scenario.eval_case(x, basis, theta, lambda)?;
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut n_sifted = 0u64;
    let mut bob_errors = 0u64;
    let mut eve_matches = 0u64;
    for _ in 0..n_rounds {
        let t = Transmission {
            x: rng.random_bool(0.5) as u8,
            b_a: rng.random_bool(0.5) as u8,
            b_b: rng.random_bool(0.5) as u8,
            b_e: 0,
        };
        if !t.sifted() {
            continue;
        }
        n_sifted += 1;
        let (p_bob, p_eve) = case_probs[t.b_a as usize][t.x as usize];
        if !rng.random_bool(p_bob.clamp(0.0, 1.0)) {
            bob_errors += 1;
        }
        if rng.random_bool(p_eve.clamp(0.0, 1.0)) {
            eve_matches += 1;
        }
    }
    let (qber_hat, eve_match_hat) = if n_sifted == 0 {
        (0.0, 0.0)
    } else {
        (bob_errors as f64 / n_sifted as f64, eve_matches as f64 / n_sifted as f64)
    };
    Ok(ProtocolSample { n_rounds, n_sifted, qber_hat, eve_match_hat, seed })
}
