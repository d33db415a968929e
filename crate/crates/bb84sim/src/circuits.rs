//! Gate definitions, parameterised circuits, the hardware-efficient ansatz
//! builder, and application of unitaries to density matrices.
//!
//! Rotations follow the convention `R_P(θ) = exp(−iθP/2)`, which makes the
//! parameter-shift rule hold with a shift of exactly π/2. Global phase is
//! ignored throughout; density matrices make it unobservable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, C_ONE, C_ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    X,
    Z,
    S,
    CNOT,
    CRY,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::CNOT => "CNOT",
            GateKind::CRY => "CRY",
        }
    }

    pub fn takes_parameter(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRY)
    }

    pub fn takes_control(self) -> bool {
        matches!(self, GateKind::CNOT | GateKind::CRY)
    }
}

/// Rotation angle source: a literal value or a slot in a parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateParam {
    Fixed(f64),
    Trainable(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateInstance {
    pub kind: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<GateParam>,
}

impl GateInstance {
    pub fn rx(target: usize, param: GateParam) -> Self {
        Self { kind: GateKind::RX, target, control: None, param: Some(param) }
    }

    pub fn ry(target: usize, param: GateParam) -> Self {
        Self { kind: GateKind::RY, target, control: None, param: Some(param) }
    }

    pub fn rz(target: usize, param: GateParam) -> Self {
        Self { kind: GateKind::RZ, target, control: None, param: Some(param) }
    }

    pub fn h(target: usize) -> Self {
        Self { kind: GateKind::H, target, control: None, param: None }
    }

    pub fn x(target: usize) -> Self {
        Self { kind: GateKind::X, target, control: None, param: None }
    }

    pub fn z(target: usize) -> Self {
        Self { kind: GateKind::Z, target, control: None, param: None }
    }

    pub fn s(target: usize) -> Self {
        Self { kind: GateKind::S, target, control: None, param: None }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self { kind: GateKind::CNOT, target, control: Some(control), param: None }
    }

    pub fn cry(control: usize, target: usize, param: GateParam) -> Self {
        Self { kind: GateKind::CRY, target, control: Some(control), param: Some(param) }
    }

    /// Structural coherence of kind, control, and parameter fields.
    fn validate(&self) -> Result<()> {
        let name = self.kind.name();
        if self.kind.takes_control() {
            match self.control {
                None => return Err(Error::MissingControl(name)),
                Some(c) if c == self.target => {
                    return Err(Error::ControlEqualsTarget(c));
                }
                Some(_) => {}
            }
        } else if self.control.is_some() {
            return Err(Error::UnexpectedControl(name));
        }
        if self.kind.takes_parameter() {
            if self.param.is_none() {
                return Err(Error::MissingParameter(name));
            }
        } else if self.param.is_some() {
            return Err(Error::UnexpectedParameter(name));
        }
        Ok(())
    }
}

/// Ordered gate list over up to four qubits with a validated, contiguous
/// trainable-parameter index space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitData", into = "CircuitData")]
pub struct ParamCircuit {
    n_qubits: usize,
    gates: Vec<GateInstance>,
    n_params: usize,
}

#[derive(Clone, Serialize, Deserialize)]
struct CircuitData {
    n_qubits: usize,
    gates: Vec<GateInstance>,
}

impl TryFrom<CircuitData> for ParamCircuit {
    type Error = Error;

    fn try_from(d: CircuitData) -> Result<Self> {
        ParamCircuit::new(d.n_qubits, d.gates)
    }
}

impl From<ParamCircuit> for CircuitData {
    fn from(c: ParamCircuit) -> Self {
        CircuitData { n_qubits: c.n_qubits, gates: c.gates }
    }
}

impl ParamCircuit {
    pub fn new(n_qubits: usize, gates: Vec<GateInstance>) -> Result<Self> {
        let dim = 1usize.checked_shl(n_qubits as u32).unwrap_or(usize::MAX);
        if n_qubits == 0 || dim > crate::qmat::MAX_DIM {
            return Err(Error::BadDimension(dim));
        }
        let mut seen: Vec<bool> = Vec::new();
        for g in &gates {
            g.validate()?;
            if g.target >= n_qubits {
                return Err(Error::QubitOutOfRange { index: g.target, n_qubits });
            }
            if let Some(c) = g.control {
                if c >= n_qubits {
                    return Err(Error::QubitOutOfRange { index: c, n_qubits });
                }
            }
            if let Some(GateParam::Trainable(i)) = g.param {
                if i >= seen.len() {
                    seen.resize(i + 1, false);
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&used| !used) {
            return Err(Error::MissingParamIndex(missing));
        }
        let n_params = seen.len();
        Ok(Self { n_qubits, gates, n_params })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Gate positions bound to a given trainable index.
    pub(crate) fn gates_bound_to(&self, index: usize) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.param == Some(GateParam::Trainable(index)))
            .map(|(i, _)| i)
            .collect()
    }
}

fn resolve_angle(param: Option<GateParam>, params: &[f64]) -> Result<f64> {
    match param {
        None => Ok(0.0),
        Some(GateParam::Fixed(a)) => Ok(a),
        Some(GateParam::Trainable(i)) => params
            .get(i)
            .copied()
            .ok_or(Error::ParamCount { expected: i + 1, actual: params.len() }),
    }
}

fn rot_x(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::new(
        2,
        vec![
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
    )
    .expect("2x2 entries")
}

fn rot_y(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::new(
        2,
        vec![
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
    )
    .expect("2x2 entries")
}

fn rot_z(theta: f64) -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        vec![
            Complex64::from_polar(1.0, -theta / 2.0),
            C_ZERO,
            C_ZERO,
            Complex64::from_polar(1.0, theta / 2.0),
        ],
    )
    .expect("2x2 entries")
}

/// Local unitary of a gate: 2×2, or 4×4 for controlled kinds with the
/// control on the more-significant bit.
pub fn gate_unitary(g: &GateInstance, params: &[f64]) -> Result<ComplexMatrix> {
    g.validate()?;
    let angle = resolve_angle(g.param, params)?;
    let m = match g.kind {
        GateKind::RX => rot_x(angle),
        GateKind::RY => rot_y(angle),
        GateKind::RZ => rot_z(angle),
        GateKind::H => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            ComplexMatrix::new(2, vec![h, h, h, -h]).expect("2x2 entries")
        }
        GateKind::X => {
            ComplexMatrix::new(2, vec![C_ZERO, C_ONE, C_ONE, C_ZERO]).expect("2x2 entries")
        }
        GateKind::Z => {
            ComplexMatrix::new(2, vec![C_ONE, C_ZERO, C_ZERO, -C_ONE]).expect("2x2 entries")
        }
        GateKind::S => ComplexMatrix::new(
            2,
            vec![C_ONE, C_ZERO, C_ZERO, Complex64::new(0.0, 1.0)],
        )
        .expect("2x2 entries"),
        GateKind::CNOT => {
            let mut m = ComplexMatrix::zeros(4).expect("4x4");
            m.set(0, 0, C_ONE);
            m.set(1, 1, C_ONE);
            m.set(2, 3, C_ONE);
            m.set(3, 2, C_ONE);
            m
        }
        GateKind::CRY => {
            let (s, c) = (angle / 2.0).sin_cos();
            let mut m = ComplexMatrix::zeros(4).expect("4x4");
            m.set(0, 0, C_ONE);
            m.set(1, 1, C_ONE);
            m.set(2, 2, Complex64::new(c, 0.0));
            m.set(2, 3, Complex64::new(-s, 0.0));
            m.set(3, 2, Complex64::new(s, 0.0));
            m.set(3, 3, Complex64::new(c, 0.0));
            m
        }
    };
    Ok(m)
}

/// Embeds a 2×2 operator at one qubit of an `n_qubits` system.
pub(crate) fn embed_single(
    local: &ComplexMatrix,
    target: usize,
    n_qubits: usize,
) -> Result<ComplexMatrix> {
    if target >= n_qubits {
        return Err(Error::QubitOutOfRange { index: target, n_qubits });
    }
    let d = 1usize << n_qubits;
    let bit = n_qubits - 1 - target;
    let mask = 1usize << bit;
    let mut out = ComplexMatrix::zeros(d)?;
    for i in 0..d {
        for j in 0..d {
            if i & !mask == j & !mask {
                out.set(i, j, local.get((i >> bit) & 1, (j >> bit) & 1));
            }
        }
    }
    Ok(out)
}

fn embed_controlled(
    local: &ComplexMatrix,
    control: usize,
    target: usize,
    n_qubits: usize,
) -> Result<ComplexMatrix> {
    for q in [control, target] {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }
    let d = 1usize << n_qubits;
    let cbit = n_qubits - 1 - control;
    let tbit = n_qubits - 1 - target;
    let rest = !((1usize << cbit) | (1usize << tbit));
    let mut out = ComplexMatrix::zeros(d)?;
    for i in 0..d {
        for j in 0..d {
            if i & rest == j & rest {
                let ri = (((i >> cbit) & 1) << 1) | ((i >> tbit) & 1);
                let rj = (((j >> cbit) & 1) << 1) | ((j >> tbit) & 1);
                out.set(i, j, local.get(ri, rj));
            }
        }
    }
    Ok(out)
}

/// Full system-sized unitary of one gate.
pub fn embedded_unitary(
    g: &GateInstance,
    params: &[f64],
    n_qubits: usize,
) -> Result<ComplexMatrix> {
    let local = gate_unitary(g, params)?;
    match g.control {
        Some(c) => embed_controlled(&local, c, g.target, n_qubits),
        None => embed_single(&local, g.target, n_qubits),
    }
}

/// Conjugation `U ρ U†` with the gate embedded at its qubit positions.
pub fn apply_gate(rho: &DensityMatrix, g: &GateInstance, params: &[f64]) -> Result<DensityMatrix> {
    let u = embedded_unitary(g, params, rho.n_qubits())?;
    let m = u.matmul(rho.matrix())?.matmul(&u.dagger())?;
    Ok(DensityMatrix::new_unchecked(m))
}

/// Applies the circuit's gates in list order.
pub fn apply_circuit(
    rho: &DensityMatrix,
    circuit: &ParamCircuit,
    params: &[f64],
) -> Result<DensityMatrix> {
    if params.len() != circuit.n_params {
        return Err(Error::ParamCount { expected: circuit.n_params, actual: params.len() });
    }
    let mut state = rho.clone();
    for g in &circuit.gates {
        state = apply_gate(&state, g, params)?;
    }
    Ok(state)
}

/// Hardware-efficient ansatz: per layer an RX, RY, RZ triple on every qubit
/// (each rotation a fresh trainable index), then an entangling stage: a
/// single CNOT for two qubits, a CNOT ring for three or more, nothing for
/// one.
pub fn build_hea(n_qubits: usize, n_layers: usize) -> Result<ParamCircuit> {
    if n_layers == 0 {
        return Err(Error::NotPositiveCount("n_layers"));
    }
    let mut gates = Vec::new();
    let mut next = 0usize;
    for _ in 0..n_layers {
        for q in 0..n_qubits {
            gates.push(GateInstance::rx(q, GateParam::Trainable(next)));
            gates.push(GateInstance::ry(q, GateParam::Trainable(next + 1)));
            gates.push(GateInstance::rz(q, GateParam::Trainable(next + 2)));
            next += 3;
        }
        match n_qubits {
            0 | 1 => {}
            2 => gates.push(GateInstance::cnot(0, 1)),
            n => {
                for q in 0..n {
                    gates.push(GateInstance::cnot(q, (q + 1) % n));
                }
            }
        }
    }
    ParamCircuit::new(n_qubits, gates)
}

/// Reduced state over `keep`, tracing out every other qubit. The result's
/// qubit order follows the order of `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return Err(Error::BadKeepList);
    }
    for (i, &q) in keep.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n_qubits: n });
        }
        if keep[..i].contains(&q) {
            return Err(Error::BadKeepList);
        }
    }
    let k = keep.len();
    // Source bit positions of kept qubits, in keep order (result MSB first).
    let kept_bits: Vec<usize> = keep.iter().map(|&q| n - 1 - q).collect();
    let traced_bits: Vec<usize> =
        (0..n).map(|q| n - 1 - q).filter(|b| !kept_bits.contains(b)).collect();
    let dk = 1usize << k;
    let dt = 1usize << traced_bits.len();

    let compose = |kept_index: usize, traced_index: usize| -> usize {
        let mut full = 0usize;
        for (m, &b) in kept_bits.iter().enumerate() {
            full |= ((kept_index >> (k - 1 - m)) & 1) << b;
        }
        for (u, &b) in traced_bits.iter().enumerate() {
            full |= ((traced_index >> u) & 1) << b;
        }
        full
    };

    let mut out = ComplexMatrix::zeros(dk)?;
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C_ZERO;
            for t in 0..dt {
                acc += rho.matrix().get(compose(i, t), compose(j, t));
            }
            out.set(i, j, acc);
        }
    }
    Ok(DensityMatrix::new_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{fidelity_pure, hermitian_eigen, PureState};
    use approx::assert_abs_diff_eq;
    use rand::{RngExt, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn zero_state(n: usize) -> DensityMatrix {
        PureState::basis(n, 0).unwrap().density()
    }

    #[test]
    fn rotation_at_zero_is_identity() {
        let g = GateInstance::rx(0, GateParam::Fixed(0.0));
        let u = gate_unitary(&g, &[]).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).unwrap()) < 1e-15);
    }

    #[test]
    fn half_turn_ry_maps_zero_to_one() {
        let g = GateInstance::ry(0, GateParam::Fixed(PI));
        let u = gate_unitary(&g, &[]).unwrap();
        assert_abs_diff_eq!(u.get(1, 0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.get(0, 1).re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn controlled_ry_with_control_off_is_inert() {
        let g = GateInstance::cry(0, 1, GateParam::Fixed(1.23));
        let rho = zero_state(2);
        let out = apply_gate(&rho, &g, &[]).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn all_gate_kinds_are_unitary_across_angles() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let theta = rng.random_range(-10.0..10.0);
            let gates = [
                GateInstance::rx(0, GateParam::Fixed(theta)),
                GateInstance::ry(0, GateParam::Fixed(theta)),
                GateInstance::rz(0, GateParam::Fixed(theta)),
                GateInstance::h(0),
                GateInstance::x(0),
                GateInstance::z(0),
                GateInstance::s(0),
                GateInstance::cnot(0, 1),
                GateInstance::cry(0, 1, GateParam::Fixed(theta)),
            ];
            for g in &gates {
                let u = gate_unitary(g, &[]).unwrap();
                let idn = ComplexMatrix::identity(u.dim()).unwrap();
                assert!(u.matmul(&u.dagger()).unwrap().max_abs_diff(&idn) < 1e-12);
            }
        }
    }

    #[test]
    fn bit_flip_gate_flips_projector() {
        let out = apply_gate(&zero_state(1), &GateInstance::x(0), &[]).unwrap();
        let one = PureState::basis(1, 1).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&one, &out).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hadamard_prepares_plus() {
        let out = apply_gate(&zero_state(1), &GateInstance::h(0), &[]).unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(vec![
            Complex64::new(inv, 0.0),
            Complex64::new(inv, 0.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(fidelity_pure(&plus, &out).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cnot_with_msb_control_flips_target() {
        // |10⟩ is index 2 with qubit 0 most significant.
        let rho = PureState::basis(2, 2).unwrap().density();
        let out = apply_gate(&rho, &GateInstance::cnot(0, 1), &[]).unwrap();
        let expect = PureState::basis(2, 3).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&expect, &out).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = ParamCircuit::new(2, vec![]).unwrap();
        let rho = zero_state(2);
        let out = apply_circuit(&rho, &c, &[]).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn double_hadamard_is_identity() {
        let c = ParamCircuit::new(1, vec![GateInstance::h(0), GateInstance::h(0)]).unwrap();
        let rho = apply_gate(&zero_state(1), &GateInstance::rx(0, GateParam::Fixed(0.7)), &[])
            .unwrap();
        let out = apply_circuit(&rho, &c, &[]).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    /// The two-qubit cloning circuit whose keep/trace marginals reproduce the
    /// closed-form fidelities (1 ± trig(θ/2))/2; checked here at θ = π/2
    /// where both marginals read 0.8536.
    fn cloner(theta: f64) -> ParamCircuit {
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
        .unwrap()
    }

    #[test]
    fn cloner_marginals_hit_symmetric_point() {
        let out = apply_circuit(&zero_state(2), &cloner(FRAC_PI_2), &[]).unwrap();
        let zero = PureState::basis(1, 0).unwrap();

        let bob = partial_trace(&out, &[0]).unwrap();
        let f_ab = fidelity_pure(&zero, &bob).unwrap();
        assert_abs_diff_eq!(f_ab, (1.0 + (FRAC_PI_2 / 2.0).cos()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f_ab, 0.8535533905932737, epsilon = 1e-12);

        let eve = partial_trace(&out, &[1]).unwrap();
        let f_ae = fidelity_pure(&zero, &eve).unwrap();
        assert_abs_diff_eq!(f_ae, (1.0 + (FRAC_PI_2 / 2.0).sin()) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state_keeps_factor() {
        let rho = zero_state(2);
        let kept = partial_trace(&rho, &[0]).unwrap();
        let zero = PureState::basis(1, 0).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&zero, &kept).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(vec![
            Complex64::new(inv, 0.0),
            C_ZERO,
            C_ZERO,
            Complex64::new(inv, 0.0),
        ])
        .unwrap()
        .density();
        for keep in [[0usize], [1usize]] {
            let red = partial_trace(&bell, &keep).unwrap();
            let mixed = DensityMatrix::maximally_mixed(1).unwrap();
            assert!(red.matrix().max_abs_diff(mixed.matrix()) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_validates_keep_list() {
        let rho = zero_state(2);
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::BadKeepList)));
        assert!(matches!(partial_trace(&rho, &[0, 0]), Err(Error::BadKeepList)));
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn hea_shapes_match_published_counts() {
        let two = build_hea(2, 2).unwrap();
        assert_eq!(two.n_params(), 12);
        let cnots = two.gates().iter().filter(|g| g.kind == GateKind::CNOT).count();
        assert_eq!(cnots, 2);

        let one = build_hea(1, 1).unwrap();
        assert_eq!(one.n_params(), 3);
        assert!(one.gates().iter().all(|g| g.kind != GateKind::CNOT));

        let three = build_hea(3, 1).unwrap();
        assert_eq!(three.n_params(), 9);
        let ring: Vec<_> = three
            .gates()
            .iter()
            .filter(|g| g.kind == GateKind::CNOT)
            .map(|g| (g.control.unwrap(), g.target))
            .collect();
        assert_eq!(ring, vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn hea_param_count_formula_holds() {
        for n in 1..=4 {
            for layers in 1..=3 {
                let c = build_hea(n, layers).unwrap();
                assert_eq!(c.n_params(), 3 * n * layers);
            }
        }
    }

    fn random_circuit(
        n_qubits: usize,
        n_gates: usize,
        rng: &mut impl RngExt,
    ) -> (ParamCircuit, Vec<f64>) {
        let mut gates = Vec::new();
        let mut n_params = 0usize;
        for _ in 0..n_gates {
            let target = rng.random_range(0..n_qubits);
            let other = (target + rng.random_range(1..n_qubits)) % n_qubits;
            let pick = rng.random_range(0..9);
            let parametrized = matches!(pick, 0..=2 | 8);
            let param = if !parametrized || rng.random_bool(0.5) {
                GateParam::Fixed(rng.random_range(-6.0..6.0))
            } else {
                n_params += 1;
                GateParam::Trainable(n_params - 1)
            };
            let g = match pick {
                0 => GateInstance::rx(target, param),
                1 => GateInstance::ry(target, param),
                2 => GateInstance::rz(target, param),
                3 => GateInstance::h(target),
                4 => GateInstance::x(target),
                5 => GateInstance::z(target),
                6 => GateInstance::s(target),
                7 => GateInstance::cnot(other, target),
                _ => GateInstance::cry(other, target, param),
            };
            gates.push(g);
        }
        let circuit = ParamCircuit::new(n_qubits, gates).unwrap();
        let params: Vec<f64> = (0..n_params).map(|_| rng.random_range(-3.0..3.0)).collect();
        (circuit, params)
    }

    #[test]
    fn random_circuits_preserve_density_invariants() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..10 {
            let (circuit, params) = random_circuit(3, 30, &mut rng);
            let rho = zero_state(3);
            let out = apply_circuit(&rho, &circuit, &params).unwrap();
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
            assert!(out.matrix().hermiticity_defect() < 1e-10);
            let (vals, _) = hermitian_eigen(out.matrix()).unwrap();
            assert!(vals.last().copied().unwrap() > -1e-10);
        }
    }

    #[test]
    fn split_application_equals_concatenation() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(29);
        let (full, params) = random_circuit(2, 16, &mut rng);
        let half: Vec<_> = full.gates()[..8].to_vec();
        let rest: Vec<_> = full.gates()[8..].to_vec();
        let rho = zero_state(2);

        let whole = apply_circuit(&rho, &full, &params).unwrap();
        let mut staged = rho;
        for g in half.iter().chain(rest.iter()) {
            staged = apply_gate(&staged, g, &params).unwrap();
        }
        assert!(whole.matrix().max_abs_diff(staged.matrix()) < 1e-12);
    }

    #[test]
    fn circuit_serialization_round_trips() {
        let c = build_hea(2, 2).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: ParamCircuit = serde_json::from_str(&json).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn deserialization_rejects_gapped_param_indices() {
        let gates = vec![
            GateInstance::rx(0, GateParam::Trainable(0)),
            GateInstance::ry(0, GateParam::Trainable(2)),
        ];
        let data = serde_json::json!({ "n_qubits": 1, "gates": gates });
        let parsed: std::result::Result<ParamCircuit, _> =
            serde_json::from_value(data);
        assert!(parsed.is_err());
    }

    #[test]
    fn malformed_gates_rejected() {
        let no_control = GateInstance {
            kind: GateKind::CNOT,
            target: 1,
            control: None,
            param: None,
        };
        assert!(ParamCircuit::new(2, vec![no_control]).is_err());

        let self_control = GateInstance {
            kind: GateKind::CNOT,
            target: 0,
            control: Some(0),
            param: None,
        };
        assert!(matches!(
            ParamCircuit::new(2, vec![self_control]),
            Err(Error::ControlEqualsTarget(0))
        ));

        let stray_param = GateInstance {
            kind: GateKind::H,
            target: 0,
            control: None,
            param: Some(GateParam::Fixed(1.0)),
        };
        assert!(matches!(
            ParamCircuit::new(1, vec![stray_param]),
            Err(Error::UnexpectedParameter("H"))
        ));

        let bare_rotation = GateInstance {
            kind: GateKind::RX,
            target: 0,
            control: None,
            param: None,
        };
        assert!(matches!(
            ParamCircuit::new(1, vec![bare_rotation]),
            Err(Error::MissingParameter("RX"))
        ));
    }

    #[test]
    fn out_of_range_qubits_rejected() {
        let g = GateInstance::h(3);
        assert!(matches!(
            ParamCircuit::new(2, vec![g]),
            Err(Error::QubitOutOfRange { index: 3, n_qubits: 2 })
        ));
    }
}
