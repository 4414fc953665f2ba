//! The multiplex network: a weighted sum of layers over a fixed qubit set.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use crate::bits::{BitString, RegisterRange};
use crate::error::{QumvnError, Result};
use crate::float::{widen, EdgeFloat};
use crate::layer::Layer;

/// Numerical tolerances shared by the gate engine and the sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Edge-weight comparisons and zero tests.
    pub edge: f64,
    /// Probability sums.
    pub probability: f64,
    /// Layers whose weight magnitude falls below this are discarded.
    pub weight_floor: f64,
    /// Largest qubit count for which disjointness is decided by comparing supports.
    pub exhaustive_qubits: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { edge: 1e-5, probability: 1e-4, weight_floor: 1e-12, exhaustive_qubits: 12 }
    }
}

/// Outcome of the layer-disjointness test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disjointness {
    Disjoint,
    Overlapping,
    /// Not certified either way; callers treat this as overlapping.
    Unknown,
}

impl Disjointness {
    pub fn is_disjoint(self) -> bool {
        self == Disjointness::Disjoint
    }
}

/// Pre-transform register values recorded by the inverse QFT, one per layer.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SpectrumRecord {
    pub reg: RegisterRange,
    pub values: Vec<u64>,
}

/// Definite qubits of one layer packed as bit masks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Signature {
    mask: Vec<u64>,
    values: Vec<u64>,
    full: bool,
}

impl Signature {
    pub(crate) fn of<T: EdgeFloat>(layer: &Layer<T>, tol: f64) -> Self {
        let n = layer.num_qubits();
        let words = n.div_ceil(64);
        let mut mask = vec![0u64; words];
        let mut values = vec![0u64; words];
        let mut full = true;
        for (i, d) in layer.definite_values(tol).into_iter().enumerate() {
            match d {
                Some(v) => {
                    mask[i / 64] |= 1 << (i % 64);
                    values[i / 64] |= (v as u64) << (i % 64);
                }
                None => full = false,
            }
        }
        Signature { mask, values, full }
    }

    /// Some qubit is definite in both layers with opposite values.
    pub(crate) fn excludes(&self, other: &Signature) -> bool {
        self.mask
            .iter()
            .zip(&other.mask)
            .zip(self.values.iter().zip(&other.values))
            .any(|((ma, mb), (va, vb))| ma & mb & (va ^ vb) != 0)
    }
}

#[derive(Clone, Debug)]
pub struct QuMvN<T: EdgeFloat = f32> {
    qubits: usize,
    layers: Vec<Layer<T>>,
    tol: Tolerances,
    spectrum: Option<SpectrumRecord>,
}

impl<T: EdgeFloat> QuMvN<T> {
    /// `|0>^n` as a single layer with unit weight.
    pub fn new_ground_state(qubits: usize) -> Result<Self> {
        if qubits == 0 {
            return Err(QumvnError::ZeroQubits);
        }
        Ok(QuMvN { qubits, layers: vec![Layer::ground(qubits)], tol: Tolerances::default(), spectrum: None })
    }

    /// Assembles a network from explicit layers (weights taken from the layers).
    pub fn from_layers(qubits: usize, layers: Vec<Layer<T>>) -> Result<Self> {
        if qubits == 0 {
            return Err(QumvnError::ZeroQubits);
        }
        if layers.is_empty() {
            return Err(QumvnError::Annihilated(0.0));
        }
        if let Some(bad) = layers.iter().find(|l| l.num_qubits() != qubits) {
            return Err(QumvnError::LengthMismatch { expected: qubits, actual: bad.num_qubits() });
        }
        Ok(QuMvN { qubits, layers, tol: Tolerances::default(), spectrum: None })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Nodes per layer; identical for every layer.
    pub fn node_count(&self) -> usize {
        2 * self.qubits + 1
    }

    pub(crate) fn layers_mut(&mut self) -> &mut Vec<Layer<T>> {
        &mut self.layers
    }

    pub(crate) fn spectrum_record(&self) -> Option<&SpectrumRecord> {
        self.spectrum.as_ref()
    }

    pub(crate) fn set_spectrum_record(&mut self, record: Option<SpectrumRecord>) {
        self.spectrum = record;
    }

    /// True once the inverse QFT has spread layers over a shared register.
    pub fn is_interference_mode(&self) -> bool {
        self.spectrum.is_some()
    }

    /// `sum |w_l|^2` over layer weights.
    pub fn weight_norm_sqr(&self) -> f64 {
        self.layers.iter().map(|l| l.weight().norm_sqr()).sum()
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<usize> {
        if qubit == 0 || qubit > self.qubits {
            return Err(QumvnError::QubitOutOfRange { qubit, qubits: self.qubits });
        }
        Ok(qubit - 1)
    }

    fn check_len(&self, bits: &BitString) -> Result<()> {
        if bits.len() != self.qubits {
            return Err(QumvnError::LengthMismatch { expected: self.qubits, actual: bits.len() });
        }
        Ok(())
    }

    /// `sum_l w_l * A_l(bits)`.
    pub fn amplitude(&self, bits: &BitString) -> Result<Complex64> {
        self.check_len(bits)?;
        Ok(self.layers.iter().map(|l| l.weight() * l.amplitude_of(bits.as_slice())).sum())
    }

    /// Squared magnitude of the summed amplitude; exact whether or not layers overlap.
    pub fn state_probability(&self, bits: &BitString) -> Result<f64> {
        self.amplitude(bits).map(|a| a.norm_sqr())
    }

    /// Probability of every outcome, indexed by the big-endian value of the bit string.
    pub fn exact_distribution(&self) -> Result<Vec<f64>> {
        const MAX: usize = 20;
        if self.qubits > MAX {
            return Err(QumvnError::TooManyQubits { qubits: self.qubits, max: MAX });
        }
        Ok((0..1u64 << self.qubits)
            .into_par_iter()
            .map(|v| {
                let bits = BitString::from_value(v, self.qubits);
                self.layers
                    .iter()
                    .map(|l| l.weight() * l.amplitude_of(bits.as_slice()))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect())
    }

    pub(crate) fn signatures(&self) -> Vec<Signature> {
        self.layers.par_iter().with_min_len(256).map(|l| Signature::of(l, self.tol.edge)).collect()
    }

    /// Whether the supports of all layers are pairwise disjoint.
    ///
    /// A pair is certified disjoint when some qubit is definite in both with
    /// opposite values. Remaining pairs are compared exhaustively only for
    /// small qubit counts, otherwise the answer is `Unknown`.
    pub fn layers_disjoint(&self) -> Disjointness {
        if self.layers.len() < 2 {
            return Disjointness::Disjoint;
        }
        let sigs = self.signatures();
        if sigs.iter().all(|s| s.full) {
            let mut seen = HashSet::with_capacity(sigs.len());
            let distinct = sigs.iter().all(|s| seen.insert(&s.values));
            return if distinct { Disjointness::Disjoint } else { Disjointness::Overlapping };
        }
        let exhaustive = self.qubits <= self.tol.exhaustive_qubits;
        let mut supports: Vec<Option<HashSet<BitString>>> = vec![None; self.layers.len()];
        let mut unknown = false;
        for a in 0..self.layers.len() {
            for b in a + 1..self.layers.len() {
                if sigs[a].excludes(&sigs[b]) {
                    continue;
                }
                if !exhaustive {
                    unknown = true;
                    continue;
                }
                for idx in [a, b] {
                    if supports[idx].is_none() {
                        supports[idx] = Some(self.layers[idx].support(self.tol.edge).into_iter().collect());
                    }
                }
                let (sa, sb) = (supports[a].as_ref().unwrap(), supports[b].as_ref().unwrap());
                if sa.iter().any(|s| sb.contains(s)) {
                    return Disjointness::Overlapping;
                }
            }
        }
        if unknown {
            Disjointness::Unknown
        } else {
            Disjointness::Disjoint
        }
    }

    /// Squared norm of the represented state, `sum_{l,l'} conj(w_l) w_l' <L_l|L_l'>`.
    pub fn norm_sqr(&self) -> f64 {
        let tol = self.tol.edge;
        if self.layers.len() == 1 {
            let l = &self.layers[0];
            return l.weight().norm_sqr() * l.norm_sqr();
        }
        let sigs = self.signatures();
        if sigs.iter().all(|s| s.full) {
            let mut seen = HashSet::with_capacity(sigs.len());
            if sigs.iter().all(|s| seen.insert(&s.values)) {
                return self
                    .layers
                    .iter()
                    .map(|l| {
                        let bits = l.definite_bits(tol).expect("fully definite layer");
                        (l.weight() * l.amplitude_of(&bits)).norm_sqr()
                    })
                    .sum();
            }
        }
        let diag: f64 = self.layers.iter().map(|l| l.weight().norm_sqr() * l.norm_sqr()).sum();
        let cross: f64 = (0..self.layers.len())
            .into_par_iter()
            .map(|a| {
                let la = &self.layers[a];
                let mut acc = Complex64::zero();
                for b in a + 1..self.layers.len() {
                    if sigs[a].excludes(&sigs[b]) {
                        continue;
                    }
                    let lb = &self.layers[b];
                    acc += la.weight().conj() * lb.weight() * la.overlap(lb, &[]);
                }
                2.0 * acc.re
            })
            .sum();
        diag + cross
    }

    /// Merges layers with identical edge weights by summing their weights,
    /// drops layers below the weight floor and renormalizes the state.
    pub fn merge_equivalent_layers(&mut self) -> Result<()> {
        let tol = self.tol.edge;
        let grid = 1.0 / (10.0 * tol);
        let key = |l: &Layer<T>| -> Vec<i64> {
            let mut k = Vec::with_capacity(4 + 8 * l.links().len());
            let mut push = |c: num_complex::Complex<T>| {
                let c = widen(c);
                k.push((c.re * grid).round() as i64);
                k.push((c.im * grid).round() as i64);
            };
            l.root().iter().for_each(|&c| push(c));
            for link in l.links() {
                link.iter().flatten().for_each(|&c| push(c));
            }
            k
        };

        let values = self.spectrum.as_ref().map(|s| &s.values);
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut kept: Vec<Layer<T>> = Vec::new();
        let mut kept_values: Vec<u64> = Vec::new();
        for (idx, layer) in self.layers.drain(..).enumerate() {
            let slots = buckets.entry(key(&layer)).or_default();
            match slots.iter().find(|&&s| kept[s].approx_eq(&layer, tol)) {
                Some(&s) => {
                    let w = kept[s].weight() + layer.weight();
                    kept[s].set_weight(w);
                }
                None => {
                    slots.push(kept.len());
                    if let Some(v) = values {
                        kept_values.push(v[idx]);
                    }
                    kept.push(layer);
                }
            }
        }

        let floor = self.tol.weight_floor;
        let mut survivors = Vec::with_capacity(kept.len());
        let mut survivor_values = Vec::new();
        for (i, l) in kept.into_iter().enumerate() {
            if l.weight().norm() >= floor {
                if self.spectrum.is_some() {
                    survivor_values.push(kept_values[i]);
                }
                survivors.push(l);
            }
        }
        if survivors.is_empty() {
            return Err(QumvnError::Annihilated(0.0));
        }
        self.layers = survivors;
        if let Some(rec) = self.spectrum.as_mut() {
            rec.values = survivor_values;
        }
        self.renormalize()
    }

    /// Scales weights so the represented state has unit norm.
    pub(crate) fn renormalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr();
        if norm <= self.tol.weight_floor * self.tol.weight_floor {
            return Err(QumvnError::Annihilated(norm.max(0.0).sqrt()));
        }
        let scale = 1.0 / norm.sqrt();
        for l in &mut self.layers {
            l.set_weight(l.weight() * scale);
        }
        Ok(())
    }
}
