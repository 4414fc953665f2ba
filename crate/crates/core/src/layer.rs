//! A single layer: a weighted DAG over `2n + 1` nodes.
//!
//! The root feeds qubit 1 through the pair `(r0, r1)`. Every later qubit `i`
//! is fed by a 2x2 link `t[m][j]`, the amplitude of qubit `i` taking value `j`
//! given qubit `i - 1` holds `m`. The child edges of qubit `i - 1` and the
//! parent edges of qubit `i` are the same record, so a layer costs `O(n)`.

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};

use crate::bits::{BitString, RegisterRange};
use crate::error::{QumvnError, Result};
use crate::float::{widen, EdgeFloat};

/// Transition record between two adjacent qubits, indexed `[parent][child]`.
pub type Link<T> = [[Complex<T>; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T: EdgeFloat = f32> {
    weight: Complex64,
    root: [Complex<T>; 2],
    links: Vec<Link<T>>,
}

#[inline]
pub(crate) fn nonzero<T: EdgeFloat>(c: Complex<T>, tol: f64) -> bool {
    widen(c).norm_sqr() > tol * tol
}

#[inline]
fn close<T: EdgeFloat>(a: Complex<T>, b: Complex<T>, tol: f64) -> bool {
    (widen(a) - widen(b)).norm() <= tol
}

impl<T: EdgeFloat> Layer<T> {
    /// `|0...0>` with unit weight.
    pub fn ground(qubits: usize) -> Self {
        let zero_row = [Complex::one(), Complex::zero()];
        Layer {
            weight: Complex64::one(),
            root: zero_row,
            links: vec![[zero_row, zero_row]; qubits.saturating_sub(1)],
        }
    }

    /// Builds a layer from raw edge weights. No normalization is enforced, so
    /// general (non-separable) Markov layers can be expressed.
    pub fn from_edges(weight: Complex64, root: [Complex<T>; 2], links: Vec<Link<T>>) -> Self {
        Layer { weight, root, links }
    }

    pub fn num_qubits(&self) -> usize {
        self.links.len() + 1
    }

    /// Nodes in the layer, the root included.
    pub fn node_count(&self) -> usize {
        2 * self.num_qubits() + 1
    }

    pub fn edge_count(&self) -> usize {
        4 * self.num_qubits() - 2
    }

    pub fn weight(&self) -> Complex64 {
        self.weight
    }

    pub(crate) fn set_weight(&mut self, weight: Complex64) {
        self.weight = weight;
    }

    pub fn root(&self) -> [Complex<T>; 2] {
        self.root
    }

    pub fn links(&self) -> &[Link<T>] {
        &self.links
    }

    /// Link feeding `qubit` (1-based); `None` for qubit 1, which hangs off the root.
    pub fn link(&self, qubit: usize) -> Option<&Link<T>> {
        qubit.checked_sub(2).and_then(|i| self.links.get(i))
    }

    /// Edge weight into node `value` of `qubit` from node `parent` of the previous qubit.
    /// For qubit 1 the parent is the root and `parent` is ignored.
    pub fn edge(&self, qubit: usize, parent: bool, value: bool) -> Complex<T> {
        self.incoming(qubit - 1, parent as usize, value as usize)
    }

    #[inline]
    pub(crate) fn incoming(&self, i: usize, m: usize, j: usize) -> Complex<T> {
        if i == 0 {
            self.root[j]
        } else {
            self.links[i - 1][m][j]
        }
    }

    /// Applies `f(parent, [in0, in1])` to the incoming edges of 0-based qubit `i`.
    /// The root is treated as a single parent.
    pub(crate) fn map_incoming(&mut self, i: usize, mut f: impl FnMut(usize, [Complex<T>; 2]) -> [Complex<T>; 2]) {
        if i == 0 {
            self.root = f(0, self.root);
        } else {
            let link = &mut self.links[i - 1];
            for (m, row) in link.iter_mut().enumerate() {
                *row = f(m, *row);
            }
        }
    }

    pub(crate) fn outgoing_mut(&mut self, i: usize) -> Option<&mut Link<T>> {
        self.links.get_mut(i)
    }

    pub(crate) fn outgoing(&self, i: usize) -> Option<&Link<T>> {
        self.links.get(i)
    }

    pub(crate) fn amplitude_of(&self, bits: &[bool]) -> Complex64 {
        let mut amp = widen(self.root[bits[0] as usize]);
        for (i, link) in self.links.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                break;
            }
            amp *= widen(link[bits[i] as usize][bits[i + 1] as usize]);
        }
        amp
    }

    /// Product of the edges along the path spelled by `bits` (the layer weight excluded).
    pub fn path_amplitude(&self, bits: &BitString) -> Result<Complex64> {
        if bits.len() != self.num_qubits() {
            return Err(QumvnError::LengthMismatch { expected: self.num_qubits(), actual: bits.len() });
        }
        Ok(self.amplitude_of(bits.as_slice()))
    }

    /// Reachable node values of qubits `0..=upto` (0-based). An optional pin
    /// forces one qubit to a single value.
    pub(crate) fn reach_upto(&self, upto: usize, pin: Option<(usize, bool)>, tol: f64) -> Vec<[bool; 2]> {
        let mut reach = Vec::with_capacity(upto + 1);
        for i in 0..=upto {
            let mut r = [false; 2];
            for (j, slot) in r.iter_mut().enumerate() {
                *slot = if i == 0 {
                    nonzero(self.root[j], tol)
                } else {
                    let prev: &[bool; 2] = &reach[i - 1];
                    (0..2).any(|m| prev[m] && nonzero(self.links[i - 1][m][j], tol))
                };
            }
            if let Some((p, v)) = pin {
                if p == i {
                    r[!v as usize] = false;
                }
            }
            reach.push(r);
        }
        reach
    }

    /// For every qubit, which of its two nodes carry nonzero incoming amplitude.
    pub fn reachable(&self, tol: f64) -> Vec<[bool; 2]> {
        self.reach_upto(self.num_qubits() - 1, None, tol)
    }

    /// `Some(v)` for qubits whose only reachable node is `v`.
    pub fn definite_values(&self, tol: f64) -> Vec<Option<bool>> {
        self.reachable(tol)
            .into_iter()
            .map(|r| match r {
                [true, false] => Some(false),
                [false, true] => Some(true),
                _ => None,
            })
            .collect()
    }

    /// The basis state held by the layer if every qubit is definite.
    pub fn definite_bits(&self, tol: f64) -> Option<Vec<bool>> {
        self.definite_values(tol).into_iter().collect()
    }

    pub(crate) fn register_value_pinned(
        &self,
        start: usize,
        end: usize,
        pin: Option<(usize, bool)>,
        tol: f64,
    ) -> Option<u64> {
        let reach = self.reach_upto(end, pin, tol);
        reach[start..=end].iter().try_fold(0u64, |acc, r| match r {
            [true, false] => Some(acc << 1),
            [false, true] => Some((acc << 1) | 1),
            _ => None,
        })
    }

    /// Integer held by `reg` when every register qubit is definite.
    pub fn register_value(&self, reg: RegisterRange, tol: f64) -> Option<u64> {
        self.register_value_pinned(reg.start() - 1, reg.end() - 1, None, tol)
    }

    /// Outgoing edges of every reachable node sum to unit probability.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let reach = self.reachable(tol);
        let root = widen(self.root[0]).norm_sqr() + widen(self.root[1]).norm_sqr();
        if (root - 1.0).abs() > tol {
            return false;
        }
        self.links.iter().enumerate().all(|(i, link)| {
            (0..2).all(|m| {
                !reach[i][m] || {
                    let s = widen(link[m][0]).norm_sqr() + widen(link[m][1]).norm_sqr();
                    (s - 1.0).abs() <= tol
                }
            })
        })
    }

    /// Edges entering the same node agree for all reachable parents, i.e. the
    /// layer encodes a tensor-product state.
    pub fn is_separable(&self, tol: f64) -> bool {
        let reach = self.reachable(tol);
        self.links.iter().enumerate().all(|(i, link)| {
            !(reach[i][0] && reach[i][1])
                || (close(link[0][0], link[1][0], tol) && close(link[0][1], link[1][1], tol))
        })
    }

    /// `sum over bits of conj(self(bits)) * other(bits)`, restricted to bit
    /// strings consistent with `pins` (empty slice: no restriction).
    pub fn overlap(&self, other: &Self, pins: &[Option<bool>]) -> Complex64 {
        let allowed = |i: usize, j: usize| pins.get(i).copied().flatten().is_none_or(|v| v as usize == j);
        let mut g = [Complex64::zero(); 2];
        for (j, slot) in g.iter_mut().enumerate() {
            if allowed(0, j) {
                *slot = widen(self.root[j]).conj() * widen(other.root[j]);
            }
        }
        for (i, (a, b)) in self.links.iter().zip(&other.links).enumerate() {
            let mut next = [Complex64::zero(); 2];
            for (y, slot) in next.iter_mut().enumerate() {
                if !allowed(i + 1, y) {
                    continue;
                }
                for x in 0..2 {
                    *slot += g[x] * widen(a[x][y]).conj() * widen(b[x][y]);
                }
            }
            g = next;
        }
        g[0] + g[1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap(self, &[]).re
    }

    /// Edge weights agree within `tol`; the layer weight is not compared.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.links.len() == other.links.len()
            && (0..2).all(|j| close(self.root[j], other.root[j], tol))
            && self.links.iter().zip(&other.links).all(|(a, b)| {
                (0..2).all(|m| (0..2).all(|j| close(a[m][j], b[m][j], tol)))
            })
    }

    /// All bit strings with a nonzero path. Exponential; meant for small layers.
    pub fn support(&self, tol: f64) -> Vec<BitString> {
        let n = self.num_qubits();
        let mut out = Vec::new();
        let mut stack: Vec<Vec<bool>> =
            (0..2).filter(|&j| nonzero(self.root[j], tol)).map(|j| vec![j == 1]).collect();
        while let Some(prefix) = stack.pop() {
            let i = prefix.len();
            if i == n {
                out.push(BitString::new(prefix));
                continue;
            }
            let m = prefix[i - 1] as usize;
            for j in 0..2 {
                if nonzero(self.links[i - 1][m][j], tol) {
                    let mut next = prefix.clone();
                    next.push(j == 1);
                    stack.push(next);
                }
            }
        }
        out.sort();
        out
    }

    /// Sets the incoming edges of qubit `i` so that it passes through `value` with certainty.
    pub(crate) fn pin_definite(&mut self, i: usize, value: bool) {
        let v = value as usize;
        self.map_incoming(i, |_, _| {
            let mut row = [Complex::zero(); 2];
            row[v] = Complex::one();
            row
        });
    }

    /// Zeroes the incoming edges of qubit `i` that disagree with `value`.
    pub(crate) fn project(&mut self, i: usize, value: bool) {
        let other = !value as usize;
        self.map_incoming(i, |_, mut row| {
            row[other] = Complex::zero();
            row
        });
    }

    /// Restores per-node normalization by sweeping from the last qubit back to
    /// the root, pushing row norms upstream. The layer norm ends up in the
    /// weight, which is returned scaled.
    pub(crate) fn canonicalize(&mut self) -> f64 {
        for i in (1..self.num_qubits()).rev() {
            let mut scale = [0.0f64; 2];
            {
                let link = &mut self.links[i - 1];
                for (m, row) in link.iter_mut().enumerate() {
                    let s = (widen(row[0]).norm_sqr() + widen(row[1]).norm_sqr()).sqrt();
                    scale[m] = s;
                    if s > 0.0 {
                        let inv = T::narrow(1.0 / s);
                        row[0] = row[0] * inv;
                        row[1] = row[1] * inv;
                    }
                }
                match (scale[0] > 0.0, scale[1] > 0.0) {
                    (true, false) => link[1] = link[0],
                    (false, true) => link[0] = link[1],
                    (false, false) => {
                        let ground = [Complex::one(), Complex::zero()];
                        *link = [ground, ground];
                    }
                    (true, true) => {}
                }
            }
            self.map_incoming(i - 1, |_, row| {
                [row[0] * T::narrow(scale[0]), row[1] * T::narrow(scale[1])]
            });
        }
        let s = (widen(self.root[0]).norm_sqr() + widen(self.root[1]).norm_sqr()).sqrt();
        if s > 0.0 {
            let inv = T::narrow(1.0 / s);
            self.root = [self.root[0] * inv, self.root[1] * inv];
        } else {
            self.root = [Complex::one(), Complex::zero()];
        }
        self.weight *= s;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Generic two-qubit layer with root (a, b) and link rows (c, d), (e, f).
    fn generic() -> Layer<f64> {
        Layer::from_edges(
            Complex64::one(),
            [c(0.6, 0.0), c(0.0, 0.8)],
            vec![[[c(0.8, 0.0), c(0.6, 0.0)], [c(0.0, 1.0), c(0.0, 0.0)]]],
        )
    }

    #[test]
    fn ground_state_amplitudes() {
        let l = Layer::<f32>::ground(2);
        assert_eq!(l.path_amplitude(&"00".parse().unwrap()).unwrap(), Complex64::one());
        assert_eq!(l.path_amplitude(&"01".parse().unwrap()).unwrap(), Complex64::zero());
        assert_eq!(l.path_amplitude(&"10".parse().unwrap()).unwrap(), Complex64::zero());
        assert_eq!(l.node_count(), 5);
        assert_eq!(l.edge_count(), 6);
    }

    #[test]
    fn path_amplitude_chains_edges() {
        let l = generic();
        // a*c, a*d, b*e, b*f
        let expect = [c(0.48, 0.0), c(0.36, 0.0), c(-0.8, 0.0), c(0.0, 0.0)];
        for (v, e) in expect.iter().enumerate() {
            let amp = l.path_amplitude(&BitString::from_value(v as u64, 2)).unwrap();
            assert_relative_eq!(amp.re, e.re, epsilon = 1e-12);
            assert_relative_eq!(amp.im, e.im, epsilon = 1e-12);
        }
        assert!(!l.is_separable(1e-9));
        assert!(l.is_normalized(1e-9));
    }

    #[test]
    fn path_amplitude_rejects_wrong_length() {
        let l = Layer::<f32>::ground(3);
        assert_eq!(
            l.path_amplitude(&"01".parse().unwrap()),
            Err(QumvnError::LengthMismatch { expected: 3, actual: 2 })
        );
    }

    #[test]
    fn uniform_two_qubit_layer() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let l = Layer::from_edges(Complex64::one(), [h, h], vec![[[h, h], [h, h]]]);
        let amp = l.path_amplitude(&"10".parse().unwrap()).unwrap();
        assert_relative_eq!(amp.norm_sqr(), 0.25, epsilon = 1e-12);
        assert!(l.is_separable(1e-9));
        assert_eq!(l.support(1e-9).len(), 4);
    }

    #[test]
    fn overlap_with_pins_matches_enumeration() {
        let l = generic();
        let pins = [None, Some(false)];
        let brute: f64 = ["00", "10"]
            .iter()
            .map(|s| l.path_amplitude(&s.parse().unwrap()).unwrap().norm_sqr())
            .sum();
        assert_relative_eq!(l.overlap(&l, &pins).re, brute, epsilon = 1e-12);
        assert_relative_eq!(l.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn canonicalize_moves_norm_into_weight() {
        let mut l = generic();
        l.project(1, false);
        let s = l.canonicalize();
        assert_relative_eq!(s * s, 0.48f64.powi(2) + 0.8f64.powi(2), epsilon = 1e-12);
        assert!(l.is_normalized(1e-9));
        let amp = l.path_amplitude(&"00".parse().unwrap()).unwrap() * l.weight();
        assert_relative_eq!(amp.re, 0.48, epsilon = 1e-12);
    }

    #[test]
    fn definite_values_follow_reachability() {
        let mut l = Layer::<f32>::ground(3);
        l.map_incoming(1, |_, _| [Complex::zero(), Complex::one()]);
        assert_eq!(l.definite_values(1e-6), vec![Some(false), Some(true), Some(false)]);
        assert_eq!(l.definite_bits(1e-6), Some(vec![false, true, false]));
        assert_eq!(l.register_value(RegisterRange::new(1, 2).unwrap(), 1e-6), Some(1));
    }
}
