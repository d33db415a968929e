//! Reference attack circuits and their closed-form fidelity laws: the
//! phase-covariant cloning machine (PCCM) with one angle θ, and the
//! imbalanced cloner with two angles (ψ, φ) whose Z- and X-basis fidelities
//! can differ. Includes the noise-scaling model (α, β, γ, δ), the optimal-φ
//! relation, and the per-basis envelope curves.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::bb84::{Basis, ConditionKey, FidelityReport, Scenario};
use crate::channels::{basis_scaling, NoiseChannel, Placement};
use crate::circuits::{GateInstance, GateParam, ParamCircuit};
use crate::error::{Error, Result};

/// The PCCM interaction: Alice's line qubit is wire 0, Eve's copy wire 1.
pub fn pccm_unitary(theta: f64) -> Result<ParamCircuit> {
    ParamCircuit::new(
        2,
        vec![
            GateInstance::rx(0, GateParam::Fixed(FRAC_PI_2)),
            GateInstance::cry(0, 1, GateParam::Fixed(theta)),
            GateInstance::cry(1, 0, GateParam::Fixed(-PI)),
            GateInstance::rx(0, GateParam::Fixed(-FRAC_PI_2)),
            GateInstance::rx(1, GateParam::Fixed(-FRAC_PI_2)),
        ],
    )
}

/// Eve's delayed basis correction for the PCCM: an RZ, RY pair that is the
/// identity in the Z basis and composes to a Hadamard (up to global phase)
/// in the X basis.
pub fn pccm_correction() -> Result<(ParamCircuit, BTreeMap<ConditionKey, Vec<f64>>)> {
    let v = ParamCircuit::new(
        1,
        vec![
            GateInstance::rz(0, GateParam::Trainable(0)),
            GateInstance::ry(0, GateParam::Trainable(1)),
        ],
    )?;
    let mut weights = BTreeMap::new();
    weights.insert(ConditionKey::basis_only(Basis::Z), vec![0.0, 0.0]);
    weights.insert(ConditionKey::basis_only(Basis::X), vec![PI, FRAC_PI_2]);
    Ok((v, weights))
}

/// Complete PCCM attack scenario at angle θ with an optional noise list.
pub fn pccm_attack(theta: f64, noise: Vec<NoiseChannel>) -> Result<Scenario> {
    let (v, weights) = pccm_correction()?;
    Scenario::new(pccm_unitary(theta)?, v, weights, noise)
}

/// Closed-form noise-free fidelities `((1 + cos(θ/2))/2, (1 + sin(θ/2))/2)`.
pub fn pccm_fidelities(theta: f64) -> (f64, f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    ((1.0 + c) / 2.0, (1.0 + s) / 2.0)
}

/// The imbalanced cloner interaction at angles (ψ, φ); wires as in
/// [`pccm_unitary`].
pub fn imbalanced_unitary(psi: f64, phi: f64) -> Result<ParamCircuit> {
    ParamCircuit::new(
        2,
        vec![
            GateInstance::rx(0, GateParam::Fixed(-FRAC_PI_2)),
            GateInstance::rx(1, GateParam::Fixed(-FRAC_PI_2)),
            GateInstance::rz(1, GateParam::Fixed(PI)),
            GateInstance::rz(1, GateParam::Fixed(psi)),
            GateInstance::cnot(0, 1),
            GateInstance::rz(1, GateParam::Fixed(phi)),
            GateInstance::rx(0, GateParam::Fixed(FRAC_PI_2)),
            GateInstance::cnot(0, 1),
            GateInstance::rx(1, GateParam::Fixed(-FRAC_PI_2)),
        ],
    )
}

/// Eve's delayed correction for the imbalanced cloner: a single RX that is
/// the identity in the Z basis and RX(3π/2) in the X basis.
pub fn imbalanced_correction() -> Result<(ParamCircuit, BTreeMap<ConditionKey, Vec<f64>>)> {
    let v = ParamCircuit::new(1, vec![GateInstance::rx(0, GateParam::Trainable(0))])?;
    let mut weights = BTreeMap::new();
    weights.insert(ConditionKey::basis_only(Basis::Z), vec![0.0]);
    weights.insert(ConditionKey::basis_only(Basis::X), vec![3.0 * FRAC_PI_2]);
    Ok((v, weights))
}

/// Complete imbalanced-cloner attack scenario.
pub fn imbalanced_attack(psi: f64, phi: f64, noise: Vec<NoiseChannel>) -> Result<Scenario> {
    let (v, weights) = imbalanced_correction()?;
    Scenario::new(imbalanced_unitary(psi, phi)?, v, weights, noise)
}

/// Per-basis centered fidelities `C = 2F − 1` of one attack configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteredFidelities {
    pub c_ab_z: f64,
    pub c_ab_x: f64,
    pub c_ae_z: f64,
    pub c_ae_x: f64,
}

impl CenteredFidelities {
    pub fn c_ab(&self) -> f64 {
        (self.c_ab_z + self.c_ab_x) / 2.0
    }

    pub fn c_ae(&self) -> f64 {
        (self.c_ae_z + self.c_ae_x) / 2.0
    }

    /// Applies the multiplicative noise model factor by factor.
    pub fn scaled(&self, s: &NoiseScaling) -> Self {
        Self {
            c_ab_z: s.alpha * self.c_ab_z,
            c_ab_x: s.beta * self.c_ab_x,
            c_ae_z: s.gamma * self.c_ae_z,
            c_ae_x: s.delta * self.c_ae_x,
        }
    }

    pub fn to_report(&self) -> FidelityReport {
        let f = |c: f64| (1.0 + c) / 2.0;
        FidelityReport {
            f_ab_z: f(self.c_ab_z),
            f_ab_x: f(self.c_ab_x),
            f_ab: f(self.c_ab()),
            f_ae_z: f(self.c_ae_z),
            f_ae_x: f(self.c_ae_x),
            f_ae: f(self.c_ae()),
        }
    }
}

/// Closed-form centered fidelities of the imbalanced cloner:
/// `(sin ψ, cos φ, −sin φ, cos ψ)`.
pub fn imbalanced_centered(psi: f64, phi: f64) -> CenteredFidelities {
    CenteredFidelities {
        c_ab_z: psi.sin(),
        c_ab_x: phi.cos(),
        c_ae_z: -phi.sin(),
        c_ae_x: psi.cos(),
    }
}

/// Multiplicative scaling of centered fidelities under channel noise:
/// `alpha`/`beta` act on Bob's Z/X values, `gamma`/`delta` on Eve's.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseScaling {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl NoiseScaling {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("scaling factor {name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self { alpha, beta, gamma, delta })
    }

    /// Noise-free factors: everything 1.
    pub fn ideal() -> Self {
        Self { alpha: 1.0, beta: 1.0, gamma: 1.0, delta: 1.0 }
    }

    /// Predicts the four factors from a channel list. Channels placed before
    /// the attack shrink both Bob's and Eve's views; channels after it act
    /// on the forwarded qubit only, so they shrink Bob's alone. The factors
    /// assume the channels act on the transmitted qubit and are exact for
    /// Pauli (bit/phase-flip) noise.
    pub fn from_channels(noise: &[NoiseChannel]) -> Result<Self> {
        let mut s = Self::ideal();
        for ch in noise {
            let z = basis_scaling(ch, Basis::Z)?;
            let x = basis_scaling(ch, Basis::X)?;
            match ch.placement {
                Placement::BeforeAttack => {
                    s.alpha *= z;
                    s.beta *= x;
                    s.gamma *= z;
                    s.delta *= x;
                }
                Placement::AfterAttack => {
                    s.alpha *= z;
                    s.beta *= x;
                }
            }
        }
        Self::new(s.alpha, s.beta, s.gamma, s.delta)
    }
}

/// The φ at which, for fixed ψ, the noise-scaled (C̃_AB, C̃_AE) pair sits on
/// the boundary of the attainable region: `φ = −arctan((αγ/βδ)·cot ψ)`.
pub fn optimal_phi(psi: f64, s: &NoiseScaling) -> Result<f64> {
    let bd = s.beta * s.delta;
    if bd.abs() < 1e-12 {
        return Err(Error::Degenerate("beta*delta is zero"));
    }
    let sin_psi = psi.sin();
    if sin_psi.abs() < 1e-12 {
        return Err(Error::Degenerate("sin(psi) is zero"));
    }
    let ratio = s.alpha * s.gamma / bd;
    Ok(-(ratio * psi.cos() / sin_psi).atan())
}

/// Largest attainable Eve centered fidelity in the Z basis at a given Bob
/// Z-basis centered fidelity.
pub fn envelope_z(s: &NoiseScaling, c_ab_z: f64) -> Result<f64> {
    let ag = s.alpha * s.gamma;
    if ag.abs() < 1e-12 {
        return Err(Error::Degenerate("alpha*gamma is zero"));
    }
    if c_ab_z.abs() >= s.alpha {
        return Err(Error::TargetOutOfReach { target: c_ab_z, bound: s.alpha });
    }
    let ratio = s.beta * s.delta / ag;
    let c2 = c_ab_z * c_ab_z;
    Ok(s.gamma / (1.0 + ratio * ratio * c2 / (s.alpha * s.alpha - c2)).sqrt())
}

/// X-basis twin of [`envelope_z`] with the roles of (α, γ) and (β, δ)
/// exchanged.
pub fn envelope_x(s: &NoiseScaling, c_ab_x: f64) -> Result<f64> {
    let bd = s.beta * s.delta;
    if bd.abs() < 1e-12 {
        return Err(Error::Degenerate("beta*delta is zero"));
    }
    if c_ab_x.abs() >= s.beta {
        return Err(Error::TargetOutOfReach { target: c_ab_x, bound: s.beta });
    }
    let ratio = s.alpha * s.gamma / bd;
    let c2 = c_ab_x * c_ab_x;
    Ok(s.delta / (1.0 + ratio * ratio * c2 / (s.beta * s.beta - c2)).sqrt())
}

/// The PCCM's average centered tradeoff under scaling: a circle of radius
/// (α+β)/2 in C̃_AB stretched to (γ+δ)/2 in C̃_AE.
pub fn pccm_scaled_envelope(s: &NoiseScaling, c_ab: f64) -> Result<f64> {
    let reach = (s.alpha + s.beta) / 2.0;
    if c_ab.abs() >= reach {
        return Err(Error::TargetOutOfReach { target: c_ab, bound: reach });
    }
    let ratio = 2.0 * c_ab / (s.alpha + s.beta);
    Ok((s.gamma + s.delta) / 2.0 * (1.0 - ratio * ratio).sqrt())
}

/// Finds (ψ, φ) with φ chosen by [`optimal_phi`] whose scaled average
/// C̃_AB matches `c_ab`, by bisection over ψ ∈ (0, π/2].
pub fn imbalanced_matched_to(s: &NoiseScaling, c_ab: f64) -> Result<(f64, f64)> {
    let avg = |psi: f64| -> Result<f64> {
        let phi = optimal_phi(psi, s)?;
        Ok((s.alpha * psi.sin() + s.beta * phi.cos()) / 2.0)
    };
    let (mut lo, mut hi) = (1e-9_f64, FRAC_PI_2);
    if c_ab <= avg(lo)? || c_ab > avg(hi)? {
        return Err(Error::NoBracket(lo, hi));
    }
    let mut iterations = 0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if avg(mid)? < c_ab {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence);
        }
    }
    let psi = 0.5 * (lo + hi);
    Ok((psi, optimal_phi(psi, s)?))
}
