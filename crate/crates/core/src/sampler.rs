//! Measurement: ensemble sampling, collapse and the terminal spectrum.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_traits::Zero;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::bits::{BitString, RegisterRange};
use crate::error::{QumvnError, Result};
use crate::float::{widen, EdgeFloat};
use crate::layer::Layer;
use crate::network::QuMvN;
use crate::rng::sample_rng;

/// Largest table the interference walk may precompute, in bytes.
const GRAM_BUDGET: usize = 256 << 20;
/// Qubit limit for enumerating the full distribution.
const ENUMERATE_MAX: usize = 20;
/// Register width limit for the dense spectrum.
const SPECTRUM_MAX: usize = 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    /// Terminal spectrum when available, layer selection for disjoint layers,
    /// interference otherwise.
    #[default]
    Auto,
    /// Pick a layer by `|w|^2`, then walk it. Exact only for disjoint layers.
    LayerSelect,
    /// Exact sampling of `|sum_l w_l A_l|^2` for overlapping layers.
    Interference,
    /// Exact sampling after an inverse QFT via a dense FFT over the register.
    TerminalSpectrum,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Auto => "auto",
            SamplingMode::LayerSelect => "layer-select",
            SamplingMode::Interference => "interference",
            SamplingMode::TerminalSpectrum => "spectrum",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(SamplingMode::Auto),
            "layer-select" | "layer" => Ok(SamplingMode::LayerSelect),
            "interference" => Ok(SamplingMode::Interference),
            "spectrum" | "terminal-spectrum" => Ok(SamplingMode::TerminalSpectrum),
            other => Err(format!("unknown sampling mode `{other}`")),
        }
    }
}

/// Outcome counts keyed by bit string.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<BitString, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, bits: BitString) {
        self.add_count(bits, 1);
    }

    pub fn add_count(&mut self, bits: BitString, count: u64) {
        if count > 0 {
            *self.counts.entry(bits).or_insert(0) += count;
            self.total += count;
        }
    }

    pub fn merge(&mut self, other: FrequencyTable) {
        for (bits, count) in other.counts {
            self.add_count(bits, count);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct outcomes.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, bits: &BitString) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn frequency(&self, bits: &BitString) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(bits) as f64 / self.total as f64
        }
    }

    /// Outcomes in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&BitString, u64)> {
        self.counts.iter().map(|(b, &c)| (b, c))
    }

    /// Outcomes by descending count, ties broken lexicographically.
    pub fn sorted(&self) -> Vec<(&BitString, u64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Counts of the integer held by `reg`.
    pub fn register_counts(&self, reg: RegisterRange) -> BTreeMap<u64, u64> {
        let mut out = BTreeMap::new();
        for (bits, c) in self.iter() {
            *out.entry(bits.register_value(reg)).or_insert(0) += c;
        }
        out
    }
}

impl fmt::Display for FrequencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (bits, count) in self.sorted() {
            writeln!(f, "{bits} {count}")?;
        }
        Ok(())
    }
}

impl FromStr for FrequencyTable {
    type Err = QumvnError;

    fn from_str(s: &str) -> Result<Self> {
        let mut t = FrequencyTable::new();
        for line in s.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let (Some(bits), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(QumvnError::BadBitString(line.to_string()));
            };
            let count = count.parse().map_err(|_| QumvnError::BadBitString(line.to_string()))?;
            t.add_count(bits.parse()?, count);
        }
        Ok(t)
    }
}

/// Per-qubit probability of `0` given the row `[e0, e1]`.
fn zero_probability(row: [Complex64; 2]) -> f64 {
    let (a, b) = (row[0].norm_sqr(), row[1].norm_sqr());
    if a + b > 0.0 {
        a / (a + b)
    } else {
        1.0
    }
}

/// Walks one layer from the root, choosing each qubit with its conditional edge probability.
fn walk<T: EdgeFloat, R: Rng + ?Sized>(layer: &Layer<T>, rng: &mut R) -> BitString {
    let n = layer.num_qubits();
    let mut bits = Vec::with_capacity(n);
    let mut parent = 0;
    for i in 0..n {
        let row = [widen(layer.incoming(i, parent, 0)), widen(layer.incoming(i, parent, 1))];
        let u: f64 = rng.gen();
        let v = u > zero_probability(row);
        bits.push(v);
        parent = v as usize;
    }
    BitString::new(bits)
}

/// Suffix overlaps between every pair of layers, used to sample overlapping
/// layers one qubit at a time with exact marginals.
struct GramWalk {
    layers: usize,
    weights: Vec<Complex64>,
    /// `grams[i][j]` is the `L x L` matrix of suffix overlaps below node `(i, j)`.
    grams: Vec<[Vec<Complex64>; 2]>,
}

impl GramWalk {
    fn bytes(qubits: usize, layers: usize) -> usize {
        qubits.saturating_mul(2).saturating_mul(layers * layers).saturating_mul(16)
    }

    fn build<T: EdgeFloat>(q: &QuMvN<T>) -> Self {
        let ls = q.layers();
        let (n, l) = (q.num_qubits(), ls.len());
        let mut grams = vec![[Vec::<Complex64>::new(), Vec::new()]; n];
        grams[n - 1] = [vec![Complex64::new(1.0, 0.0); l * l], vec![Complex64::new(1.0, 0.0); l * l]];
        for i in (0..n - 1).rev() {
            let next = &grams[i + 1];
            let mut cur = [vec![Complex64::zero(); l * l], vec![Complex64::zero(); l * l]];
            for (j, g) in cur.iter_mut().enumerate() {
                g.par_chunks_mut(l).enumerate().for_each(|(a, row)| {
                    let ta = ls[a].links()[i][j];
                    for (b, slot) in row.iter_mut().enumerate() {
                        let tb = ls[b].links()[i][j];
                        *slot = (0..2)
                            .map(|y| widen(ta[y]).conj() * widen(tb[y]) * next[y][a * l + b])
                            .sum();
                    }
                });
            }
            grams[i] = cur;
        }
        GramWalk { layers: l, weights: ls.iter().map(|x| x.weight()).collect(), grams }
    }

    fn sample<T: EdgeFloat, R: Rng + ?Sized>(&self, q: &QuMvN<T>, rng: &mut R) -> BitString {
        let l = self.layers;
        let mut beta = self.weights.clone();
        let mut bits = Vec::with_capacity(q.num_qubits());
        let mut parent = 0;
        for (i, gram) in self.grams.iter().enumerate() {
            let mut cand: [Vec<Complex64>; 2] = Default::default();
            let mut p = [0.0f64; 2];
            for j in 0..2 {
                let v: Vec<Complex64> =
                    q.layers().iter().zip(&beta).map(|(x, b)| b * widen(x.incoming(i, parent, j))).collect();
                let mut acc = Complex64::zero();
                for a in 0..l {
                    if v[a] == Complex64::zero() {
                        continue;
                    }
                    let row = &gram[j][a * l..(a + 1) * l];
                    let inner: Complex64 = row.iter().zip(&v).map(|(g, vb)| g * vb).sum();
                    acc += v[a].conj() * inner;
                }
                p[j] = acc.re.max(0.0);
                cand[j] = v;
            }
            let total = p[0] + p[1];
            let u: f64 = rng.gen();
            let j = if total > 0.0 && u * total >= p[0] { 1 } else { 0 };
            bits.push(j == 1);
            parent = j;
            beta = std::mem::take(&mut cand[j]);
        }
        BitString::new(bits)
    }
}

enum Engine {
    LayerSelect(Option<WeightedIndex<f64>>),
    Gram(GramWalk),
    Table { pick: WeightedIndex<f64>, probs: Vec<f64> },
    Spectrum { pick: WeightedIndex<f64>, probs: Vec<f64>, base: BitString, reg: RegisterRange },
}

/// A prepared sampler for one network state.
pub struct Sampler<'a, T: EdgeFloat> {
    q: &'a QuMvN<T>,
    mode: SamplingMode,
    engine: Engine,
}

fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|_| QumvnError::Annihilated(0.0))
}

/// Checks the terminal-spectrum preconditions and returns the shared
/// non-register bits with the register zeroed.
fn spectrum_base<T: EdgeFloat>(q: &QuMvN<T>) -> Result<(RegisterRange, BitString)> {
    let rec = q.spectrum_record().ok_or(QumvnError::SpectrumUnavailable("no inverse QFT recorded"))?;
    if rec.values.len() != q.num_layers() {
        return Err(QumvnError::SpectrumUnavailable("layers changed since the inverse QFT"));
    }
    if rec.reg.width() > SPECTRUM_MAX {
        return Err(QumvnError::SpectrumUnavailable("register too wide for a dense spectrum"));
    }
    let tol = q.tolerances().edge;
    let mut base: Option<Vec<Option<bool>>> = None;
    for l in q.layers() {
        let mut d = l.definite_values(tol);
        for qubit in rec.reg.qubits() {
            d[qubit - 1] = Some(false);
        }
        if d.iter().any(Option::is_none) {
            return Err(QumvnError::SpectrumUnavailable("qubits outside the register are not definite"));
        }
        match &base {
            None => base = Some(d),
            Some(b) if *b != d => {
                return Err(QumvnError::SpectrumUnavailable("layers disagree outside the register"));
            }
            _ => {}
        }
    }
    let bits = base.unwrap_or_default().into_iter().map(Option::unwrap).collect();
    Ok((rec.reg, BitString::new(bits)))
}

/// Exact outcome probabilities of the register after an inverse QFT, with
/// the shared non-register bits.
pub fn spectrum_distribution<T: EdgeFloat>(q: &QuMvN<T>) -> Result<(RegisterRange, BitString, Vec<f64>)> {
    let (reg, base) = spectrum_base(q)?;
    let values = &q.spectrum_record().expect("checked").values;
    let k = reg.width();
    let size = 1usize << k;
    let scale = (size as f64).sqrt();
    let mut a = vec![Complex64::zero(); size];
    for (l, &x) in q.layers().iter().zip(values) {
        a[x as usize] += l.weight() * l.amplitude_of(base.as_slice()) * scale;
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut a);
    let probs = a.iter().map(|c| c.norm_sqr() / size as f64).collect();
    Ok((reg, base, probs))
}

/// The mode `Auto` resolves to for this state.
pub fn choose_mode<T: EdgeFloat>(q: &QuMvN<T>) -> SamplingMode {
    if spectrum_base(q).is_ok() {
        SamplingMode::TerminalSpectrum
    } else if q.num_layers() == 1 || q.layers_disjoint().is_disjoint() {
        SamplingMode::LayerSelect
    } else {
        SamplingMode::Interference
    }
}

impl<'a, T: EdgeFloat> Sampler<'a, T> {
    pub fn new(q: &'a QuMvN<T>, mode: SamplingMode) -> Result<Self> {
        let mode = match mode {
            SamplingMode::Auto => choose_mode(q),
            m => m,
        };
        let engine = match mode {
            SamplingMode::Auto => unreachable!(),
            SamplingMode::LayerSelect => {
                let pick = if q.num_layers() > 1 {
                    let w: Vec<f64> = q.layers().iter().map(|l| l.weight().norm_sqr()).collect();
                    Some(weighted(&w)?)
                } else {
                    None
                };
                Engine::LayerSelect(pick)
            }
            SamplingMode::Interference => {
                if GramWalk::bytes(q.num_qubits(), q.num_layers()) <= GRAM_BUDGET {
                    Engine::Gram(GramWalk::build(q))
                } else if q.num_qubits() <= ENUMERATE_MAX {
                    let probs = q.exact_distribution()?;
                    Engine::Table { pick: weighted(&probs)?, probs }
                } else {
                    return Err(QumvnError::SamplingBudget { layers: q.num_layers(), qubits: q.num_qubits() });
                }
            }
            SamplingMode::TerminalSpectrum => {
                let (reg, base, probs) = spectrum_distribution(q)?;
                Engine::Spectrum { pick: weighted(&probs)?, probs, base, reg }
            }
        };
        Ok(Sampler { q, mode, engine })
    }

    /// The concrete mode in use (never `Auto`).
    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    /// Exact outcome probabilities when the engine tabulates them.
    pub fn probabilities(&self) -> Option<&[f64]> {
        match &self.engine {
            Engine::Table { probs, .. } | Engine::Spectrum { probs, .. } => Some(probs),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        match &self.engine {
            Engine::LayerSelect(pick) => {
                let idx = pick.as_ref().map_or(0, |p| p.sample(rng));
                walk(&self.q.layers()[idx], rng)
            }
            Engine::Gram(g) => g.sample(self.q, rng),
            Engine::Table { pick, .. } => BitString::from_value(pick.sample(rng) as u64, self.q.num_qubits()),
            Engine::Spectrum { pick, base, reg, .. } => {
                let mut bits = base.clone();
                bits.set_register(*reg, pick.sample(rng) as u64);
                bits
            }
        }
    }

    /// `count` samples; sample `i` uses stream `i` of `seed`.
    pub fn ensemble(&self, count: u64, seed: u64) -> FrequencyTable {
        const CHUNK: u64 = 2048;
        (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut t = FrequencyTable::new();
                for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                    t.add(self.sample(&mut sample_rng(seed, i)));
                }
                t
            })
            .reduce(FrequencyTable::new, |mut a, b| {
                a.merge(b);
                a
            })
    }
}

pub fn sample_once<T: EdgeFloat, R: Rng + ?Sized>(q: &QuMvN<T>, mode: SamplingMode, rng: &mut R) -> Result<BitString> {
    Ok(Sampler::new(q, mode)?.sample(rng))
}

/// Draws `count` samples without disturbing the state. Deterministic in `seed`.
pub fn sample_ensemble<T: EdgeFloat>(q: &QuMvN<T>, count: u64, seed: u64, mode: SamplingMode) -> Result<FrequencyTable> {
    Ok(Sampler::new(q, mode)?.ensemble(count, seed))
}

impl<T: EdgeFloat> QuMvN<T> {
    /// Measures `reg`, collapses the state onto the outcome and returns it.
    pub fn measure_collapse<R: Rng + ?Sized>(&mut self, reg: RegisterRange, rng: &mut R) -> Result<u64> {
        reg.check_within(self.num_qubits())?;
        let value = sample_once(self, SamplingMode::Auto, rng)?.register_value(reg);
        self.collapse_to(reg, value)?;
        Ok(value)
    }

    /// Projects every layer onto `reg == value`, drops emptied layers,
    /// merges duplicates and renormalizes.
    pub fn collapse_to(&mut self, reg: RegisterRange, value: u64) -> Result<()> {
        reg.check_within(self.num_qubits())?;
        let floor = self.tolerances().weight_floor;
        let width = reg.width();
        let mut layers = std::mem::take(self.layers_mut());
        layers.par_iter_mut().with_min_len(256).for_each(|l| {
            for (off, qubit) in reg.qubits().enumerate() {
                l.project(qubit - 1, (value >> (width - 1 - off)) & 1 == 1);
            }
            l.canonicalize();
        });
        layers.retain(|l| l.weight().norm() >= floor);
        if layers.is_empty() {
            return Err(QumvnError::Annihilated(0.0));
        }
        *self.layers_mut() = layers;
        self.set_spectrum_record(None);
        self.merge_equivalent_layers()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::SingleQubitGate;
    use approx::assert_relative_eq;

    fn bell() -> QuMvN<f32> {
        let mut q = QuMvN::new_ground_state(2).unwrap();
        q.apply_h(1).unwrap();
        q.apply_controlled(SingleQubitGate::X, 1, 2).unwrap();
        q
    }

    #[test]
    fn table_text_round_trip() {
        let mut t = FrequencyTable::new();
        t.add_count("01".parse().unwrap(), 3);
        t.add_count("00".parse().unwrap(), 3);
        t.add_count("11".parse().unwrap(), 5);
        let text = t.to_string();
        assert_eq!(text, "11 5\n00 3\n01 3\n");
        assert_eq!(text.parse::<FrequencyTable>().unwrap(), t);
        assert_eq!(t.total(), 11);
    }

    #[test]
    fn bell_ensemble_only_correlated_outcomes() {
        let q = bell();
        assert_eq!(choose_mode(&q), SamplingMode::LayerSelect);
        let t = sample_ensemble(&q, 4000, 11, SamplingMode::Auto).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t.frequency(&"00".parse().unwrap()) - 0.5).abs() < 0.05);
        assert_eq!(t, sample_ensemble(&q, 4000, 11, SamplingMode::Auto).unwrap());
    }

    #[test]
    fn interference_handles_cancellation() {
        // |+> split into two overlapping halves that cancel on |1>
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let plus = Layer::<f64>::from_edges(h, [h, h], vec![]);
        let minus = Layer::<f64>::from_edges(h, [h, -h], vec![]);
        let q = QuMvN::from_layers(1, vec![plus, minus]).unwrap();
        assert_eq!(choose_mode(&q), SamplingMode::Interference);
        let t = sample_ensemble(&q, 500, 3, SamplingMode::Auto).unwrap();
        assert_eq!(t.count(&"0".parse().unwrap()), 500);
    }

    #[test]
    fn collapse_of_bell_pair() {
        let mut q = bell();
        let reg = RegisterRange::single(1).unwrap();
        let v = q.measure_collapse(reg, &mut sample_rng(5, 0)).unwrap();
        assert_eq!(q.num_layers(), 1);
        let bits = BitString::from_value(if v == 1 { 3 } else { 0 }, 2);
        assert_relative_eq!(q.state_probability(&bits).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn spectrum_requires_record() {
        let q = bell();
        assert!(matches!(
            Sampler::new(&q, SamplingMode::TerminalSpectrum),
            Err(QumvnError::SpectrumUnavailable(_))
        ));
        let mode: SamplingMode = "spectrum".parse().unwrap();
        assert_eq!(mode.to_string(), "spectrum");
    }
}
