//! Single-qubit Kraus noise channels and the per-basis scaling they induce
//! on centered fidelities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bb84::Basis;
use crate::circuits::embed_single;
use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, C_ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    BitFlip,
    PhaseFlip,
    AmplitudeDamping,
    PhaseDamping,
}

/// Where the channel acts relative to Eve's attack unitary: on the qubit
/// Alice sends before Eve touches it, or on the qubit Eve forwards to Bob.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    BeforeAttack,
    AfterAttack,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseChannel {
    pub kind: NoiseKind,
    pub strength: f64,
    pub target: usize,
    pub placement: Placement,
}

impl NoiseChannel {
    pub fn new(kind: NoiseKind, strength: f64, target: usize, placement: Placement) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::BadProbability(strength));
        }
        Ok(Self { kind, strength, target, placement })
    }
}

/// The channel's 2×2 Kraus operators; they satisfy Σ K†K = I.
pub fn kraus_ops(ch: &NoiseChannel) -> Result<Vec<ComplexMatrix>> {
    let p = ch.strength;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    let re = |v: f64| Complex64::new(v, 0.0);
    let ops = match ch.kind {
        NoiseKind::BitFlip => vec![
            ComplexMatrix::new(2, vec![re((1.0 - p).sqrt()), C_ZERO, C_ZERO, re((1.0 - p).sqrt())])?,
            ComplexMatrix::new(2, vec![C_ZERO, re(p.sqrt()), re(p.sqrt()), C_ZERO])?,
        ],
        NoiseKind::PhaseFlip => vec![
            ComplexMatrix::new(2, vec![re((1.0 - p).sqrt()), C_ZERO, C_ZERO, re((1.0 - p).sqrt())])?,
            ComplexMatrix::new(2, vec![re(p.sqrt()), C_ZERO, C_ZERO, re(-(p.sqrt()))])?,
        ],
        NoiseKind::AmplitudeDamping => vec![
            ComplexMatrix::new(2, vec![re(1.0), C_ZERO, C_ZERO, re((1.0 - p).sqrt())])?,
            ComplexMatrix::new(2, vec![C_ZERO, re(p.sqrt()), C_ZERO, C_ZERO])?,
        ],
        NoiseKind::PhaseDamping => vec![
            ComplexMatrix::new(2, vec![re(1.0), C_ZERO, C_ZERO, re((1.0 - p).sqrt())])?,
            ComplexMatrix::new(2, vec![C_ZERO, C_ZERO, C_ZERO, re(p.sqrt())])?,
        ],
    };
    Ok(ops)
}

/// Applies `Σ K ρ K†` with each Kraus operator embedded at the channel's
/// target qubit.
pub fn apply_channel(rho: &DensityMatrix, ch: &NoiseChannel) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if ch.target >= n {
        return Err(Error::QubitOutOfRange { index: ch.target, n_qubits: n });
    }
    let mut out = ComplexMatrix::zeros(rho.dim())?;
    for k in kraus_ops(ch)? {
        let full = embed_single(&k, ch.target, n)?;
        let term = full.matmul(rho.matrix())?.matmul(&full.dagger())?;
        out = out.add(&term)?;
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// Average over the basis's two states ψ of the centered post-channel
/// fidelity `2⟨ψ|ch(|ψ⟩⟨ψ|)|ψ⟩ − 1`.
///
/// For Pauli channels this is exactly the multiplicative factor the channel
/// applies to centered fidelities measured in that basis.
pub fn basis_scaling(ch: &NoiseChannel, basis: Basis) -> Result<f64> {
    let local = NoiseChannel { target: 0, ..*ch };
    let mut acc = 0.0;
    for bit in [0u8, 1u8] {
        let psi = crate::bb84::prepare_state(bit, basis)?;
        let noisy = apply_channel(&psi.density(), &local)?;
        let f = crate::qmat::fidelity_pure(&psi, &noisy)?;
        acc += 2.0 * f - 1.0;
    }
    Ok(acc / 2.0)
}
