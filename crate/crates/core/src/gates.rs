//! Gate application on a [`QuMvN`].
//!
//! Every operation is planned against all layers first and only then applied,
//! so a failed check leaves the network untouched.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bits::RegisterRange;
use crate::error::{QumvnError, Result};
use crate::float::{narrow, widen, EdgeFloat};
use crate::layer::Layer;
use crate::network::{QuMvN, SpectrumRecord};

/// Layers below this count are processed sequentially.
const PAR_MIN: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SingleQubitGate {
    X,
    H,
    /// Phase `e^{2 pi i / 2^k}` on `|1>`, conjugated when `inverse`.
    R { k: u32, inverse: bool },
}

impl SingleQubitGate {
    /// The phase multiplied onto `|1>`, if the gate is diagonal.
    pub fn phase(&self) -> Option<Complex64> {
        match *self {
            SingleQubitGate::R { k, inverse } => Some(rk_phase(k, inverse)),
            _ => None,
        }
    }

    /// 2x2 matrix `[row][col]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let (z, o) = (Complex64::zero(), Complex64::one());
        match *self {
            SingleQubitGate::X => [[z, o], [o, z]],
            SingleQubitGate::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            SingleQubitGate::R { k, inverse } => [[o, z], [z, rk_phase(k, inverse)]],
        }
    }
}

/// `e^{+-2 pi i / 2^k}`.
pub fn rk_phase(k: u32, inverse: bool) -> Complex64 {
    let theta = 2.0 * PI * 2f64.powi(-(k as i32));
    Complex64::from_polar(1.0, if inverse { -theta } else { theta })
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Copy, Debug)]
enum Arith {
    MulMod { a: u64, modulus: u64 },
    Add { a: u64 },
    AddMod { a: u64, modulus: u64 },
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Gate(SingleQubitGate, usize),
    Arith { start: usize, end: usize, op: Arith },
    QftInv { start: usize, end: usize },
}

#[derive(Clone, Copy, Debug)]
enum Branch {
    Skip,
    InPlace,
    /// Superposed control: the original keeps the `|0>` part with weight
    /// factor `keep`, a clone takes the `|1>` part with factor `moved`.
    Split { keep: Complex64, moved: Complex64 },
}

#[derive(Clone, Copy, Debug)]
enum Plan {
    None,
    Map { from: u64, to: u64 },
    Spectrum { from: u64 },
}

impl<T: EdgeFloat> Layer<T> {
    pub(crate) fn x_at(&mut self, i: usize) {
        self.map_incoming(i, |_, r| [r[1], r[0]]);
        if let Some(link) = self.outgoing_mut(i) {
            link.swap(0, 1);
        }
    }

    pub(crate) fn phase_at(&mut self, i: usize, phase: Complex<T>) {
        self.map_incoming(i, |_, r| [r[0], r[1] * phase]);
    }

    /// H on qubit `i` needs the children of both its nodes to agree when both
    /// are reachable, otherwise the result is not expressible in one layer.
    fn h_admissible(&self, i: usize, pin: Option<(usize, bool)>, tol: f64) -> bool {
        let Some(link) = self.outgoing(i) else { return true };
        let reach = self.reach_upto(i, pin, tol);
        if !(reach[i][0] && reach[i][1]) {
            return true;
        }
        (0..2).all(|j| (widen(link[0][j]) - widen(link[1][j])).norm() <= tol)
    }

    pub(crate) fn h_at(&mut self, i: usize, tol: f64) {
        let reach = self.reach_upto(i, None, tol);
        let s = T::narrow(FRAC_1_SQRT_2);
        self.map_incoming(i, |_, r| [(r[0] + r[1]) * s, (r[0] - r[1]) * s]);
        if let Some(link) = self.outgoing_mut(i) {
            match reach[i] {
                [true, false] => link[1] = link[0],
                [false, true] => link[0] = link[1],
                _ => {}
            }
        }
    }

    /// Replaces the single register path `old` over qubits `start..=end`
    /// (0-based) with the product of `vectors`, one per register qubit, while
    /// keeping the amplitude carried along the old path.
    fn replace_register(&mut self, start: usize, end: usize, old: u64, vectors: &[[Complex<T>; 2]]) {
        let width = end - start + 1;
        let bit = |i: usize| ((old >> (end - i)) & 1) as usize;
        let carried: Vec<Complex<T>> = (start + 1..=end).map(|i| self.incoming(i, bit(i - 1), bit(i))).collect();
        let successor = self.outgoing(end).map(|link| link[bit(end)]);

        let xs = bit(start);
        let v0 = vectors[0];
        self.map_incoming(start, |_, r| [r[xs] * v0[0], r[xs] * v0[1]]);
        for (off, p) in carried.into_iter().enumerate() {
            let v = vectors[off + 1];
            let row = [v[0] * p, v[1] * p];
            self.map_incoming(start + off + 1, |_, _| row);
        }
        debug_assert_eq!(vectors.len(), width);
        if let (Some(row), Some(link)) = (successor, self.outgoing_mut(end)) {
            *link = [row, row];
        }
    }

    fn control_branch(&self, c: usize, tol: f64, layer: usize) -> Result<Branch> {
        let reach = self.reach_upto(c, None, tol);
        match reach[c] {
            [true, false] | [false, false] => Ok(Branch::Skip),
            [false, true] => Ok(Branch::InPlace),
            [true, true] => {
                let mut gamma = [Complex64::zero(); 2];
                for (j, g) in gamma.iter_mut().enumerate() {
                    if c == 0 {
                        *g = widen(self.root()[j]);
                        continue;
                    }
                    let link = &self.links()[c - 1];
                    let vals: Vec<Complex64> =
                        (0..2).filter(|&m| reach[c - 1][m]).map(|m| widen(link[m][j])).collect();
                    if vals.iter().any(|v| (v - vals[0]).norm() > tol) {
                        return Err(QumvnError::UnequalControlEdges { layer, qubit: c + 1 });
                    }
                    *g = vals.iter().sum::<Complex64>() / vals.len() as f64;
                }
                Ok(Branch::Split { keep: gamma[0], moved: gamma[1] })
            }
        }
    }
}

impl Action {
    fn plan<T: EdgeFloat>(&self, l: &Layer<T>, pin: Option<(usize, bool)>, tol: f64, layer: usize) -> Result<Plan> {
        match *self {
            Action::Gate(SingleQubitGate::H, i) => {
                if l.h_admissible(i, pin, tol) {
                    Ok(Plan::None)
                } else {
                    Err(QumvnError::UnequalChildEdges { layer, qubit: i + 1 })
                }
            }
            Action::Gate(..) => Ok(Plan::None),
            Action::Arith { start, end, op } => {
                let x = l
                    .register_value_pinned(start, end, pin, tol)
                    .ok_or(QumvnError::NonDefiniteRegister { layer, start: start + 1, end: end + 1 })?;
                let to = match op {
                    Arith::MulMod { modulus, .. } | Arith::AddMod { modulus, .. } if x >= modulus => {
                        return Err(QumvnError::ValueOutOfRange { layer, value: x, modulus });
                    }
                    Arith::MulMod { a, modulus } => ((a as u128 * x as u128) % modulus as u128) as u64,
                    Arith::AddMod { a, modulus } => ((a as u128 + x as u128) % modulus as u128) as u64,
                    Arith::Add { a } => {
                        let mask = if end - start + 1 == 64 { u64::MAX } else { (1u64 << (end - start + 1)) - 1 };
                        x.wrapping_add(a) & mask
                    }
                };
                Ok(Plan::Map { from: x, to })
            }
            Action::QftInv { start, end } => {
                let x = l
                    .register_value_pinned(start, end, pin, tol)
                    .ok_or(QumvnError::NonDefiniteRegister { layer, start: start + 1, end: end + 1 })?;
                Ok(Plan::Spectrum { from: x })
            }
        }
    }

    fn apply<T: EdgeFloat>(&self, l: &mut Layer<T>, plan: Plan, tol: f64) {
        match (*self, plan) {
            (Action::Gate(SingleQubitGate::X, i), _) => l.x_at(i),
            (Action::Gate(SingleQubitGate::H, i), _) => l.h_at(i, tol),
            (Action::Gate(g @ SingleQubitGate::R { .. }, i), _) => l.phase_at(i, narrow(g.phase().unwrap())),
            (Action::Arith { start, end, .. }, Plan::Map { from, to }) => {
                let width = end - start + 1;
                let vectors: Vec<[Complex<T>; 2]> = (0..width)
                    .map(|q| {
                        let b = (to >> (width - 1 - q)) & 1;
                        if b == 1 {
                            [Complex::zero(), Complex::one()]
                        } else {
                            [Complex::one(), Complex::zero()]
                        }
                    })
                    .collect();
                l.replace_register(start, end, from, &vectors);
            }
            (Action::QftInv { start, end }, Plan::Spectrum { from }) => {
                let width = end - start + 1;
                let s = T::narrow(FRAC_1_SQRT_2);
                // register qubit j (1-based, MSB first) picks up e^{-2 pi i (x mod 2^j) / 2^j}
                let vectors: Vec<[Complex<T>; 2]> = (1..=width)
                    .map(|j| {
                        let modulus = if j == 64 { u64::MAX as f64 + 1.0 } else { (1u64 << j) as f64 };
                        let low = if j == 64 { from } else { from & ((1u64 << j) - 1) };
                        let theta = -2.0 * PI * (low as f64 / modulus);
                        let ph: Complex<T> = narrow(Complex64::from_polar(1.0, theta));
                        [Complex::new(s, T::zero()), ph * s]
                    })
                    .collect();
                l.replace_register(start, end, from, &vectors);
            }
            _ => unreachable!("plan does not match action"),
        }
    }
}

impl<T: EdgeFloat> QuMvN<T> {
    fn run(&mut self, action: Action, control: Option<usize>) -> Result<()> {
        let tol = self.tolerances().edge;
        let pin = control.map(|c| (c, true));
        let plans: Vec<(Branch, Plan)> = self
            .layers()
            .par_iter()
            .with_min_len(PAR_MIN)
            .enumerate()
            .map(|(idx, l)| {
                let branch = match control {
                    None => Branch::InPlace,
                    Some(c) => l.control_branch(c, tol, idx)?,
                };
                let plan = match branch {
                    Branch::Skip => Plan::None,
                    _ => action.plan(l, pin, tol, idx)?,
                };
                Ok((branch, plan))
            })
            .collect::<Result<_>>()?;

        let spectrum = match action {
            Action::QftInv { start, end } => Some(SpectrumRecord {
                reg: RegisterRange::new(start + 1, end + 1)?,
                values: plans
                    .iter()
                    .map(|(_, p)| match p {
                        Plan::Spectrum { from } => *from,
                        _ => unreachable!(),
                    })
                    .collect(),
            }),
            _ => None,
        };

        let clones: Vec<Layer<T>> = self
            .layers_mut()
            .par_iter_mut()
            .with_min_len(PAR_MIN)
            .zip(plans.into_par_iter())
            .filter_map(|(l, (branch, plan))| match branch {
                Branch::Skip => None,
                Branch::InPlace => {
                    action.apply(l, plan, tol);
                    None
                }
                Branch::Split { keep, moved } => {
                    let c = control.expect("split needs a control");
                    let mut clone = l.clone();
                    clone.pin_definite(c, true);
                    clone.set_weight(l.weight() * moved);
                    l.pin_definite(c, false);
                    l.set_weight(l.weight() * keep);
                    action.apply(&mut clone, plan, tol);
                    Some(clone)
                }
            })
            .collect();
        self.layers_mut().extend(clones);
        self.set_spectrum_record(spectrum);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: SingleQubitGate, qubit: usize) -> Result<()> {
        let i = self.check_qubit(qubit)?;
        self.run(Action::Gate(gate, i), None)
    }

    pub fn apply_x(&mut self, qubit: usize) -> Result<()> {
        self.apply_gate(SingleQubitGate::X, qubit)
    }

    pub fn apply_h(&mut self, qubit: usize) -> Result<()> {
        self.apply_gate(SingleQubitGate::H, qubit)
    }

    pub fn apply_rk(&mut self, qubit: usize, k: u32, inverse: bool) -> Result<()> {
        self.apply_gate(SingleQubitGate::R { k, inverse }, qubit)
    }

    /// Applies `gate` to `target` conditioned on `control` being `|1>`. Layers
    /// where the control is superposed are split into two.
    pub fn apply_controlled(&mut self, gate: SingleQubitGate, control: usize, target: usize) -> Result<()> {
        let c = self.check_qubit(control)?;
        let t = self.check_qubit(target)?;
        if c == t {
            return Err(QumvnError::ControlIsTarget(control));
        }
        self.run(Action::Gate(gate, t), Some(c))
    }

    fn arith(&mut self, reg: RegisterRange, op: Arith, control: Option<usize>) -> Result<()> {
        reg.check_within(self.num_qubits())?;
        let c = match control {
            Some(q) => {
                let c = self.check_qubit(q)?;
                if reg.contains(q) {
                    return Err(QumvnError::ControlInRegister { control: q, start: reg.start(), end: reg.end() });
                }
                Some(c)
            }
            None => None,
        };
        self.run(Action::Arith { start: reg.start() - 1, end: reg.end() - 1, op }, c)
    }

    fn check_modulus(modulus: u64, reg: RegisterRange) -> Result<()> {
        let width = reg.width() as u32;
        if modulus < 2 || (width < 64 && modulus > 1u64 << width) {
            return Err(QumvnError::InvalidModulus { modulus, width: reg.width() });
        }
        Ok(())
    }

    /// `|x> -> |a x mod N>` on `reg`, optionally controlled. Requires
    /// `gcd(a, N) = 1` and a definite register value `x < N` in every affected layer.
    pub fn apply_cmul_mod(&mut self, a: u64, modulus: u64, reg: RegisterRange, control: Option<usize>) -> Result<()> {
        Self::check_modulus(modulus, reg)?;
        let a = a % modulus;
        if gcd(a, modulus) != 1 {
            return Err(QumvnError::NotCoprime { a, modulus });
        }
        self.arith(reg, Arith::MulMod { a, modulus }, control)
    }

    /// `|x> -> |x + a mod 2^w>` on `reg`.
    pub fn apply_add(&mut self, a: u64, reg: RegisterRange) -> Result<()> {
        self.arith(reg, Arith::Add { a }, None)
    }

    /// `|x> -> |x + a mod N>` on `reg`; requires `x < N`.
    pub fn apply_add_mod(&mut self, a: u64, modulus: u64, reg: RegisterRange) -> Result<()> {
        Self::check_modulus(modulus, reg)?;
        self.arith(reg, Arith::AddMod { a: a % modulus, modulus }, None)
    }

    /// Inverse QFT on a register that is definite in every layer. Each layer
    /// becomes the product state of the transform of its register value, and
    /// those values are recorded for terminal spectrum sampling.
    pub fn apply_qft_inv(&mut self, reg: RegisterRange) -> Result<()> {
        reg.check_within(self.num_qubits())?;
        self.run(Action::QftInv { start: reg.start() - 1, end: reg.end() - 1 }, None)
    }

    /// Definite value of `reg` in every layer, if each has one.
    pub fn register_values(&self, reg: RegisterRange) -> Option<Vec<u64>> {
        let tol = self.tolerances().edge;
        self.layers().iter().map(|l| l.register_value(reg, tol)).collect()
    }

    /// Whether `qubit` has a nonzero path to `value` in any layer.
    pub fn can_be(&self, qubit: usize, value: bool) -> Result<bool> {
        let i = self.check_qubit(qubit)?;
        let tol = self.tolerances().edge;
        Ok(self.layers().iter().any(|l| l.reach_upto(i, None, tol)[i][value as usize]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use approx::assert_relative_eq;

    fn prob<T: EdgeFloat>(q: &QuMvN<T>, s: &str) -> f64 {
        q.state_probability(&s.parse::<BitString>().unwrap()).unwrap()
    }

    #[test]
    fn x_flips() {
        let mut q = QuMvN::<f32>::new_ground_state(1).unwrap();
        q.apply_x(1).unwrap();
        assert_eq!(prob(&q, "1"), 1.0);
        assert_eq!(prob(&q, "0"), 0.0);
    }

    #[test]
    fn h_then_x_on_plus_is_plus() {
        let mut q = QuMvN::<f64>::new_ground_state(1).unwrap();
        q.apply_h(1).unwrap();
        let before = q.layers()[0].clone();
        q.apply_x(1).unwrap();
        assert!(q.layers()[0].approx_eq(&before, 1e-12));
    }

    #[test]
    fn bell_pair_has_two_layers() {
        let mut q = QuMvN::<f32>::new_ground_state(2).unwrap();
        q.apply_h(1).unwrap();
        q.apply_controlled(SingleQubitGate::X, 1, 2).unwrap();
        assert_eq!(q.num_layers(), 2);
        assert_relative_eq!(prob(&q, "00"), 0.5, epsilon = 1e-6);
        assert_relative_eq!(prob(&q, "11"), 0.5, epsilon = 1e-6);
        assert_eq!(prob(&q, "01"), 0.0);
        for l in q.layers() {
            assert_relative_eq!(l.weight().re, FRAC_1_SQRT_2, epsilon = 1e-6);
        }
    }

    #[test]
    fn controlled_on_definite_control_does_not_split() {
        let mut q = QuMvN::<f32>::new_ground_state(2).unwrap();
        q.apply_controlled(SingleQubitGate::X, 1, 2).unwrap();
        assert_eq!(prob(&q, "00"), 1.0);
        q.apply_x(1).unwrap();
        q.apply_controlled(SingleQubitGate::X, 1, 2).unwrap();
        assert_eq!(q.num_layers(), 1);
        assert_eq!(prob(&q, "11"), 1.0);
    }

    #[test]
    fn control_equal_target_rejected() {
        let mut q = QuMvN::<f32>::new_ground_state(2).unwrap();
        assert_eq!(q.apply_controlled(SingleQubitGate::X, 2, 2), Err(QumvnError::ControlIsTarget(2)));
        assert!(matches!(q.apply_x(3), Err(QumvnError::QubitOutOfRange { .. })));
    }

    #[test]
    fn h_on_entangled_control_is_rejected_atomically() {
        // after the Bell circuit, qubit 1 has children that disagree in each layer?
        // no: each layer is a basis state. Build a genuinely correlated layer instead.
        let h = Complex::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex::zero();
        let o = Complex::one();
        let l = Layer::<f64>::from_edges(Complex64::one(), [h, h], vec![[[o, z], [z, o]]]);
        let mut q = QuMvN::from_layers(2, vec![l]).unwrap();
        let snapshot = q.layers().to_vec();
        assert_eq!(q.apply_h(1), Err(QumvnError::UnequalChildEdges { layer: 0, qubit: 1 }));
        assert_eq!(q.layers(), &snapshot[..]);
        assert_eq!(
            q.apply_controlled(SingleQubitGate::X, 2, 1),
            Err(QumvnError::UnequalControlEdges { layer: 0, qubit: 2 })
        );
    }

    #[test]
    fn rk_phase_values() {
        assert_relative_eq!(rk_phase(1, false).re, -1.0, epsilon = 1e-15);
        let p = rk_phase(2, true);
        assert_relative_eq!(p.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn cmul_mod_maps_basis_value() {
        let mut q = QuMvN::<f32>::new_ground_state(4).unwrap();
        let reg = RegisterRange::new(1, 4).unwrap();
        q.apply_x(4).unwrap();
        q.apply_cmul_mod(7, 15, reg, None).unwrap();
        assert_eq!(q.register_values(reg), Some(vec![7]));
        q.apply_cmul_mod(7, 15, reg, None).unwrap();
        assert_eq!(q.register_values(reg), Some(vec![4]));
    }

    #[test]
    fn cmul_mod_errors() {
        let mut q = QuMvN::<f32>::new_ground_state(5).unwrap();
        let reg = RegisterRange::new(2, 5).unwrap();
        assert_eq!(q.apply_cmul_mod(5, 15, reg, None), Err(QumvnError::NotCoprime { a: 5, modulus: 15 }));
        assert!(matches!(q.apply_cmul_mod(7, 15, reg, Some(3)), Err(QumvnError::ControlInRegister { .. })));
        q.apply_h(5).unwrap();
        assert!(matches!(q.apply_cmul_mod(7, 15, reg, None), Err(QumvnError::NonDefiniteRegister { .. })));
        let mut q = QuMvN::<f32>::new_ground_state(4).unwrap();
        let reg = RegisterRange::new(1, 4).unwrap();
        q.apply_add(15, reg).unwrap();
        assert!(matches!(q.apply_cmul_mod(7, 15, reg, None), Err(QumvnError::ValueOutOfRange { value: 15, .. })));
    }

    #[test]
    fn add_wraps_and_add_mod_reduces() {
        let mut q = QuMvN::<f32>::new_ground_state(3).unwrap();
        let reg = RegisterRange::new(1, 3).unwrap();
        q.apply_add(6, reg).unwrap();
        q.apply_add(3, reg).unwrap();
        assert_eq!(q.register_values(reg), Some(vec![1]));
        q.apply_add_mod(4, 5, reg).unwrap();
        assert_eq!(q.register_values(reg), Some(vec![0]));
    }

    #[test]
    fn controlled_multiply_splits_on_superposed_control() {
        let mut q = QuMvN::<f32>::new_ground_state(5).unwrap();
        let lower = RegisterRange::new(2, 5).unwrap();
        q.apply_h(1).unwrap();
        q.apply_x(5).unwrap();
        q.apply_cmul_mod(7, 15, lower, Some(1)).unwrap();
        assert_eq!(q.num_layers(), 2);
        assert_relative_eq!(prob(&q, "00001"), 0.5, epsilon = 1e-6);
        assert_relative_eq!(prob(&q, "10111"), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn qft_inv_of_zero_is_uniform() {
        let mut q = QuMvN::<f64>::new_ground_state(3).unwrap();
        q.apply_qft_inv(RegisterRange::new(1, 3).unwrap()).unwrap();
        for v in 0..8 {
            assert_relative_eq!(q.state_probability(&BitString::from_value(v, 3)).unwrap(), 0.125, epsilon = 1e-12);
        }
        assert!(q.is_interference_mode());
        q.apply_x(1).unwrap();
        assert!(!q.is_interference_mode());
    }
}
