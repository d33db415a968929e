//! Collective measurement of pairs of intercepted copies. After the public
//! parity of each sifted key pair is announced, Eve aligns her two stored
//! copies into a basis-independent form, applies a trainable two-qubit
//! circuit, measures, and repairs parity mismatches. The payoff is compared
//! against independent per-copy measurement and against the Helstrom limit
//! for distinguishing the two consistent pair states.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attacks::{pccm_fidelities, pccm_unitary};
use crate::bb84::{prepare_state, Basis};
use crate::circuits::{apply_circuit, partial_trace, GateInstance, ParamCircuit};
use crate::error::{Error, Result};
use crate::qmat::{tensor_product, trace_norm, DensityMatrix, PureState};
use crate::qcl::{AdamConfig, AdamState};

/// Solves `(1 + cos(θ/2))/2 = f_ab` for θ on [0, 2π] by bisection.
pub fn theta_for_f_ab(f_ab: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_ab) {
        return Err(Error::TargetOutOfReach { target: f_ab, bound: 1.0 });
    }
    let f = |theta: f64| (1.0 + (theta / 2.0).cos()) / 2.0;
    // f is decreasing in θ on [0, 2π].
    let (mut lo, mut hi) = (0.0_f64, 2.0 * PI);
    let mut iterations = 0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > f_ab {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eve's stored copy for each of Alice's two bit values, after the
/// basis-dependent alignment that makes the pair look the same no matter
/// which basis the round used.
#[derive(Clone, Debug)]
pub struct AlignedCopy {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
}

fn alignment_circuit(basis: Basis) -> Result<ParamCircuit> {
    let gates = match basis {
        Basis::Z => vec![GateInstance::s(0), GateInstance::z(0)],
        Basis::X => vec![GateInstance::h(0), GateInstance::s(0)],
    };
    ParamCircuit::new(1, gates)
}

/// Runs one intercepted qubit through the cloning interaction at angle θ,
/// keeps Eve's share, and applies the alignment for the given basis.
pub fn eve_aligned_copy(basis: Basis, theta: f64) -> Result<AlignedCopy> {
    let attack = pccm_unitary(theta)?;
    let align = alignment_circuit(basis)?;
    let mut copies = Vec::with_capacity(2);
    for bit in [0_u8, 1] {
        let alice = prepare_state(bit, basis)?;
        let joint = alice.tensor(&PureState::basis(1, 0)?)?.density();
        let evolved = apply_circuit(&joint, &attack, &[])?;
        let eve = partial_trace(&evolved, &[1])?;
        copies.push(apply_circuit(&eve, &align, &[])?);
    }
    let rho1 = copies.pop().unwrap();
    let rho0 = copies.pop().unwrap();
    Ok(AlignedCopy { rho0, rho1 })
}

/// Success probabilities of measuring each stored copy on its own: the
/// chance both bits of a pair come out right, and the chance after using
/// the announced parity to repair a mismatched pair.
pub fn individual_baseline(f_ae: f64) -> (f64, f64) {
    (f_ae * f_ae, f_ae)
}

fn pair_state(copy: &AlignedCopy, x1: u8, x2: u8) -> Result<DensityMatrix> {
    let pick = |x: u8| if x == 0 { &copy.rho0 } else { &copy.rho1 };
    let m = tensor_product(pick(x1).matrix(), pick(x2).matrix())?;
    Ok(DensityMatrix::new_unchecked(m))
}

/// Probability that Eve names both bits of a pair correctly, given the
/// announced parity, a trainable pre-measurement circuit `v` at parameters
/// `lambda`, and parity repair: when the measured pair has the wrong
/// parity, exactly one of the two outcomes is off, and Eve flips one of
/// them at random.
pub fn collective_success(
    copy: &AlignedCopy,
    v: &ParamCircuit,
    lambda: &[f64],
    parity: u8,
) -> Result<f64> {
    if parity > 1 {
        return Err(Error::BadBit(parity));
    }
    if v.n_qubits() != 2 {
        return Err(Error::Config(format!(
            "pair measurement circuit must act on 2 qubits, got {}",
            v.n_qubits()
        )));
    }
    let truths: [(u8, u8); 2] = if parity == 0 { [(0, 0), (1, 1)] } else { [(0, 1), (1, 0)] };
    let mut total = 0.0;
    for (x1, x2) in truths {
        let sigma = pair_state(copy, x1, x2)?;
        let rotated = apply_circuit(&sigma, v, lambda)?;
        let prob = |o1: u8, o2: u8| {
            let idx = (o1 as usize) * 2 + o2 as usize;
            rotated.matrix().get(idx, idx).re
        };
        let exact = prob(x1, x2);
        // Outcomes whose parity contradicts the announcement are one bit
        // flip away from the truth, so the random repair wins half of them.
        let wrong_parity =
            if parity == 0 { prob(0, 1) + prob(1, 0) } else { prob(0, 0) + prob(1, 1) };
        total += exact + 0.5 * wrong_parity;
    }
    Ok(total / 2.0)
}

/// Largest achievable success probability for telling two states apart
/// with equal priors: `1/2 + ||a - b||_1 / 4`.
pub fn helstrom_bound(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let diff = a.matrix().sub(b.matrix())?;
    Ok(0.5 + trace_norm(&diff)? / 4.0)
}

/// Training setup for the pair measurement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CollectiveConfig {
    pub f_ab: f64,
    pub n_steps: usize,
    pub learning_rate: f64,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for CollectiveConfig {
    fn default() -> Self {
        Self { f_ab: 0.892, n_steps: 100, learning_rate: 0.1, init_std: 0.1, seed: 0 }
    }
}

/// Headline numbers of one collective run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CollectiveReport {
    pub f_ab: f64,
    pub f_ae_individual: f64,
    pub raw_pair: f64,
    pub postprocessed: f64,
    pub collective_success_even: f64,
    pub collective_success_odd: f64,
    pub helstrom: f64,
}

/// Report plus the trained circuit parameters for each announced parity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollectiveOutcome {
    pub report: CollectiveReport,
    pub even_params: Vec<f64>,
    pub odd_params: Vec<f64>,
}

/// Trainable two-qubit measurement basis: two blocks of a CNOT entangler
/// followed by RX, RY, RZ rotations on each qubit (12 parameters). Ending
/// each block with rotations leaves the final measurement basis free; a
/// trailing CNOT would only permute computational outcomes.
pub fn pair_measurement_ansatz() -> Result<ParamCircuit> {
    let mut gates = Vec::new();
    let mut next = 0;
    for _ in 0..2 {
        gates.push(GateInstance::cnot(0, 1));
        for q in 0..2 {
            for maker in [GateInstance::rx, GateInstance::ry, GateInstance::rz] {
                gates.push(maker(q, crate::circuits::GateParam::Trainable(next)));
                next += 1;
            }
        }
    }
    ParamCircuit::new(2, gates)
}

fn success_gradient(
    copy: &AlignedCopy,
    v: &ParamCircuit,
    lambda: &[f64],
    parity: u8,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; lambda.len()];
    let mut shifted = lambda.to_vec();
    for i in 0..lambda.len() {
        shifted[i] = lambda[i] + std::f64::consts::FRAC_PI_2;
        let plus = collective_success(copy, v, &shifted, parity)?;
        shifted[i] = lambda[i] - std::f64::consts::FRAC_PI_2;
        let minus = collective_success(copy, v, &shifted, parity)?;
        shifted[i] = lambda[i];
        grad[i] = (plus - minus) / 2.0;
    }
    Ok(grad)
}

fn train_parity(
    copy: &AlignedCopy,
    v: &ParamCircuit,
    cfg: &CollectiveConfig,
    parity: u8,
    seed: u64,
) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, cfg.init_std)
        .map_err(|_| Error::Config(format!("invalid init_std {}", cfg.init_std)))?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut lambda: Vec<f64> = (0..v.n_params()).map(|_| normal.sample(&mut rng)).collect();
    let adam_cfg = AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() };
    let mut adam = AdamState::new(lambda.len());
    for _ in 0..cfg.n_steps {
        // Maximizing the success probability, so descend on its negation.
        let grad: Vec<f64> =
            success_gradient(copy, v, &lambda, parity)?.iter().map(|g| -g).collect();
        adam.step(&adam_cfg, &mut lambda, &grad)?;
    }
    Ok(lambda)
}

/// Trains one pair measurement per announced parity and assembles the
/// comparison report. Even rounds seed from `cfg.seed`, odd rounds from
/// `cfg.seed + 1`.
pub fn train_collective(cfg: &CollectiveConfig) -> Result<CollectiveOutcome> {
    if cfg.n_steps == 0 {
        return Err(Error::NotPositiveCount("n_steps"));
    }
    let theta = theta_for_f_ab(cfg.f_ab)?;
    let copy = eve_aligned_copy(Basis::Z, theta)?;
    let v = pair_measurement_ansatz()?;

    let even_params = train_parity(&copy, &v, cfg, 0, cfg.seed)?;
    let odd_params = train_parity(&copy, &v, cfg, 1, cfg.seed.wrapping_add(1))?;

    let even = collective_success(&copy, &v, &even_params, 0)?;
    let odd = collective_success(&copy, &v, &odd_params, 1)?;

    let f_ae = pccm_fidelities(theta).1;
    let (raw_pair, postprocessed) = individual_baseline(f_ae);
    let sigma00 = pair_state(&copy, 0, 0)?;
    let sigma11 = pair_state(&copy, 1, 1)?;
    let report = CollectiveReport {
        f_ab: cfg.f_ab,
        f_ae_individual: f_ae,
        raw_pair,
        postprocessed,
        collective_success_even: even,
        collective_success_odd: odd,
        helstrom: helstrom_bound(&sigma00, &sigma11)?,
    };
    Ok(CollectiveOutcome { report, even_params, odd_params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{RngExt, SeedableRng};

    const F_AB: f64 = 0.892;

    fn k_and_s() -> (f64, f64) {
        let k = 2.0 * F_AB - 1.0;
        (k, (1.0 - k * k).sqrt())
    }

    #[test]
    fn theta_calibration_inverts_the_closed_form() {
        for f_ab in [0.999, 0.892, 0.75, 0.5, 0.2] {
            let theta = theta_for_f_ab(f_ab).unwrap();
            assert_abs_diff_eq!((1.0 + (theta / 2.0).cos()) / 2.0, f_ab, epsilon = 1e-10);
        }
        let theta = theta_for_f_ab(F_AB).unwrap();
        assert_abs_diff_eq!(theta, 2.0 * (2.0 * F_AB - 1.0_f64).acos(), epsilon = 1e-9);
        assert!(theta_for_f_ab(1.2).is_err());
        assert!(theta_for_f_ab(-0.1).is_err());
    }

    #[test]
    fn aligned_copies_match_closed_form_in_both_bases() {
        let (k, s) = k_and_s();
        let theta = theta_for_f_ab(F_AB).unwrap();
        for basis in [Basis::Z, Basis::X] {
            let copy = eve_aligned_copy(basis, theta).unwrap();
            let m0 = copy.rho0.matrix();
            assert_abs_diff_eq!(m0.get(0, 0).re, (1.0 + s) / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m0.get(1, 1).re, (1.0 - s) / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m0.get(0, 1).re, k * k / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m0.get(0, 1).im, 0.0, epsilon = 1e-9);
            // The other bit value is the bit-flipped state.
            let m1 = copy.rho1.matrix();
            assert_abs_diff_eq!(m1.get(0, 0).re, (1.0 - s) / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m1.get(1, 1).re, (1.0 + s) / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m1.get(0, 1).re, k * k / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m1.get(0, 1).im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn alignment_makes_bases_agree() {
        let theta = theta_for_f_ab(F_AB).unwrap();
        let z = eve_aligned_copy(Basis::Z, theta).unwrap();
        let x = eve_aligned_copy(Basis::X, theta).unwrap();
        assert!(z.rho0.matrix().max_abs_diff(x.rho0.matrix()) < 1e-9);
        assert!(z.rho1.matrix().max_abs_diff(x.rho1.matrix()) < 1e-9);
    }

    #[test]
    fn aligned_copy_display_values() {
        let theta = theta_for_f_ab(F_AB).unwrap();
        let copy = eve_aligned_copy(Basis::Z, theta).unwrap();
        let m = copy.rho0.matrix();
        assert_abs_diff_eq!(m.get(0, 0).re, 0.810, epsilon = 5e-4);
        assert_abs_diff_eq!(m.get(0, 1).re, 0.307, epsilon = 5e-4);
        assert_abs_diff_eq!(m.get(1, 1).re, 0.190, epsilon = 5e-4);
    }

    #[test]
    fn identity_circuit_reduces_to_repaired_individual_measurement() {
        let (_, s) = k_and_s();
        let theta = theta_for_f_ab(F_AB).unwrap();
        let copy = eve_aligned_copy(Basis::Z, theta).unwrap();
        let identity = ParamCircuit::new(2, vec![]).unwrap();
        for parity in [0, 1] {
            let success = collective_success(&copy, &identity, &[], parity).unwrap();
            assert_abs_diff_eq!(success, (1.0 + s) / 2.0, epsilon = 1e-9);
        }
    }

    /// Plays the whole game by sampling: draw a parity-consistent pair,
    /// sample a measurement outcome from the rotated pair state, repair
    /// parity mismatches by flipping one outcome at random, and count wins.
    #[test]
    fn sampled_game_agrees_with_success_formula() {
        let theta = theta_for_f_ab(F_AB).unwrap();
        let copy = eve_aligned_copy(Basis::Z, theta).unwrap();
        let v = crate::circuits::build_hea(2, 1).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let lambda: Vec<f64> = (0..v.n_params()).map(|_| rng.random_range(-PI..PI)).collect();
        let parity = 1_u8;
        let expected = collective_success(&copy, &v, &lambda, parity).unwrap();

        let n = 200_000;
        let mut wins = 0_u64;
        for _ in 0..n {
            let x1 = u8::from(rng.random_bool(0.5));
            let x2 = x1 ^ parity;
            let sigma = pair_state(&copy, x1, x2).unwrap();
            let rotated = apply_circuit(&sigma, &v, &lambda).unwrap();
            let mut u: f64 = rng.random_range(0.0..1.0);
            let mut outcome = 3;
            for idx in 0..4 {
                u -= rotated.matrix().get(idx, idx).re;
                if u <= 0.0 {
                    outcome = idx;
                    break;
                }
            }
            let (mut o1, mut o2) = ((outcome >> 1) as u8, (outcome & 1) as u8);
            if o1 ^ o2 != parity {
                if rng.random_bool(0.5) {
                    o1 ^= 1;
                } else {
                    o2 ^= 1;
                }
            }
            if o1 == x1 && o2 == x2 {
                wins += 1;
            }
        }
        let rate = wins as f64 / n as f64;
        let sigma_hat = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (rate - expected).abs() <= 4.0 * sigma_hat,
            "sampled {rate} vs formula {expected}"
        );
    }

    #[test]
    fn helstrom_closed_form_for_pair_states() {
        let (k, s) = k_and_s();
        let theta = theta_for_f_ab(F_AB).unwrap();
        let copy = eve_aligned_copy(Basis::Z, theta).unwrap();
        let sigma00 = pair_state(&copy, 0, 0).unwrap();
        let sigma11 = pair_state(&copy, 1, 1).unwrap();
        let bound = helstrom_bound(&sigma00, &sigma11).unwrap();
        let w = s * (1.0 + k.powi(4)).sqrt();
        assert_abs_diff_eq!(bound, 0.5 + w / 2.0, epsilon = 1e-9);

        // Flipping the second copy maps the even problem onto the odd one.
        let sigma01 = pair_state(&copy, 0, 1).unwrap();
        let sigma10 = pair_state(&copy, 1, 0).unwrap();
        let odd = helstrom_bound(&sigma01, &sigma10).unwrap();
        assert_abs_diff_eq!(odd, bound, epsilon = 1e-12);
    }

    #[test]
    fn baseline_values_at_reference_point() {
        let (raw, repaired) = individual_baseline(0.810);
        assert_abs_diff_eq!(raw, 0.6561, epsilon = 1e-12);
        assert_abs_diff_eq!(repaired, 0.810, epsilon = 1e-12);
    }

    #[test]
    fn trained_pair_measurement_approaches_helstrom() {
        let cfg = CollectiveConfig { seed: 3, ..CollectiveConfig::default() };
        let outcome = train_collective(&cfg).unwrap();
        let r = outcome.report;
        assert_abs_diff_eq!(r.collective_success_even, r.helstrom, epsilon = 1e-3);
        assert_abs_diff_eq!(r.collective_success_odd, r.helstrom, epsilon = 1e-3);
        assert!(
            r.collective_success_even > r.postprocessed + 0.05,
            "no collective advantage: {} vs {}",
            r.collective_success_even,
            r.postprocessed
        );
        assert_abs_diff_eq!(r.f_ae_individual, 0.810, epsilon = 5e-4);
        assert_abs_diff_eq!(r.raw_pair, r.f_ae_individual * r.f_ae_individual, epsilon = 1e-12);
        assert_abs_diff_eq!(r.postprocessed, r.f_ae_individual, epsilon = 1e-12);
    }

    #[test]
    fn collective_success_validates_inputs() {
        let theta = theta_for_f_ab(F_AB).unwrap();
        let copy = eve_aligned_copy(Basis::Z, theta).unwrap();
        let identity = ParamCircuit::new(2, vec![]).unwrap();
        assert!(matches!(
            collective_success(&copy, &identity, &[], 2),
            Err(Error::BadBit(2))
        ));
        let one_qubit = ParamCircuit::new(1, vec![]).unwrap();
        assert!(collective_success(&copy, &one_qubit, &[], 0).is_err());
    }
}

