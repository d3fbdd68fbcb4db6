//! A regular action of a finite abelian group on a set, simulated on dense
//! state vectors: the index-computation circuit, the refinement-phase
//! sampler built on it, and quadratic refinements of the standard
//! bicharacter.
//!
//! Group elements are indexed in mixed radix with the last factor varying
//! fastest. Two-register states are stored as `amps[x·|G| + g]`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, fabs, sin, sqrt};
pub use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Dense simulations are limited to this many amplitudes.
pub const MAX_AMPLITUDES: usize = 1 << 20;
/// Groups up to this order are checked exhaustively.
pub const EXHAUSTIVE_ORDER: usize = 64;
const RANDOM_PAIRS: usize = 10_000;

pub type GroupElem = Vec<u64>;

fn cis(turns: f64) -> Complex64 {
    let a = 2.0 * PI * turns;
    Complex64::new(cos(a), sin(a))
}

/// ℤ_{N₁} × ⋯ × ℤ_{N_k}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbelianGroupSpec {
    factors: Vec<u64>,
    order: usize,
}

impl AbelianGroupSpec {
    pub fn new(factors: Vec<u64>) -> Result<Self> {
        let mut order: usize = 1;
        for &n in &factors {
            if n == 0 {
                return Err(Error::InvalidSpec(String::from("factor 0")));
            }
            order = usize::try_from(n)
                .ok()
                .and_then(|n| order.checked_mul(n))
                .ok_or_else(|| Error::InvalidSpec(String::from("group order overflows")))?;
        }
        Ok(AbelianGroupSpec { factors, order })
    }

    /// Parse a comma-separated factor list such as `"4,3"`. The empty
    /// string is the trivial group.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Self::new(Vec::new());
        }
        let factors = text
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| Error::InvalidSpec(alloc::format!("bad factor {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contains(&self, g: &[u64]) -> bool {
        g.len() == self.factors.len() && g.iter().zip(&self.factors).all(|(a, n)| a < n)
    }

    pub fn element(&self, mut index: usize) -> GroupElem {
        let mut g = vec![0; self.factors.len()];
        for (slot, &n) in g.iter_mut().zip(&self.factors).rev() {
            *slot = (index % n as usize) as u64;
            index /= n as usize;
        }
        g
    }

    pub fn index(&self, g: &[u64]) -> usize {
        g.iter().zip(&self.factors).fold(0, |acc, (&a, &n)| acc * n as usize + a as usize)
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> GroupElem {
        a.iter().zip(b).zip(&self.factors).map(|((x, y), n)| (x + y) % n).collect()
    }

    pub fn neg(&self, a: &[u64]) -> GroupElem {
        a.iter().zip(&self.factors).map(|(x, n)| (n - x) % n).collect()
    }

    fn add_index(&self, mut a: usize, mut b: usize) -> usize {
        let (mut out, mut place) = (0, 1);
        for &n in self.factors.iter().rev() {
            let n = n as usize;
            out += (a % n + b % n) % n * place;
            place *= n;
            a /= n;
            b /= n;
        }
        out
    }

    fn neg_index(&self, a: usize) -> usize {
        self.index(&self.neg(&self.element(a)))
    }

    /// χ(a, x) as a fraction of a full turn, in [0, 1).
    fn chi_turns(&self, a: &[u64], x: &[u64]) -> f64 {
        let t: f64 = a
            .iter()
            .zip(x)
            .zip(&self.factors)
            .map(|((&a, &x), &n)| ((a as u128 * x as u128) % n as u128) as f64 / n as f64)
            .sum();
        t - libm::floor(t)
    }
}

impl core::fmt::Display for AbelianGroupSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// χ(a, x) = Π_j exp(2πi a_j x_j / N_j).
pub fn chi(spec: &AbelianGroupSpec, a: &[u64], x: &[u64]) -> Result<Complex64> {
    if !spec.contains(a) || !spec.contains(x) {
        return Err(Error::SpecMismatch);
    }
    Ok(cis(spec.chi_turns(a, x)))
}

/// A regular action of G on a set X of the same size, given as a seeded
/// random labelling x = g * x₀ ↦ labels[g].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularActionTable {
    spec: AbelianGroupSpec,
    labels: Vec<usize>,
    position: Vec<usize>,
}

impl RegularActionTable {
    pub fn random(spec: AbelianGroupSpec, seed: u64) -> Self {
        let mut labels: Vec<usize> = (0..spec.order()).collect();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut position = vec![0; labels.len()];
        for (g, &x) in labels.iter().enumerate() {
            position[x] = g;
        }
        RegularActionTable { spec, labels, position }
    }

    pub fn spec(&self) -> &AbelianGroupSpec {
        &self.spec
    }

    /// |X| = |G|.
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn basepoint(&self) -> usize {
        self.labels[0]
    }

    /// g * x, with g given by its index.
    pub fn act(&self, g: usize, x: usize) -> usize {
        self.labels[self.spec.add_index(g, self.position[x])]
    }

    /// The unique g with g * x = y.
    pub fn difference(&self, x: usize, y: usize) -> usize {
        let gx = self.spec.element(self.position[x]);
        let gy = self.spec.element(self.position[y]);
        self.spec.index(&self.spec.add(&gy, &self.spec.neg(&gx)))
    }

    /// Exhaustive check of identity, compatibility and regularity.
    pub fn is_regular(&self) -> bool {
        let n = self.size();
        let identity = (0..n).all(|x| self.act(0, x) == x);
        let compatible = (0..n).all(|g| {
            (0..n).all(|h| (0..n).all(|x| self.act(g, self.act(h, x)) == self.act(self.spec.add_index(g, h), x)))
        });
        let regular = (0..n).all(|x| {
            let mut hits = vec![0u32; n];
            for g in 0..n {
                hits[self.act(g, x)] += 1;
            }
            hits.iter().all(|&c| c == 1)
        });
        identity && compatible && regular
    }
}

/// Amplitudes over X, or over X ⊗ G.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionState {
    x_dim: usize,
    g_dim: usize,
    amps: Vec<Complex64>,
}

impl ActionState {
    pub fn new(x_dim: usize, g_dim: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != x_dim * g_dim {
            return Err(Error::SpecMismatch);
        }
        Ok(ActionState { x_dim, g_dim, amps })
    }

    /// |x⟩|0⟩ on X ⊗ G.
    pub fn basis(action: &RegularActionTable, x: usize) -> Self {
        let n = action.size();
        let mut amps = vec![Complex64::new(0.0, 0.0); n * n];
        amps[x * n] = Complex64::new(1.0, 0.0);
        ActionState { x_dim: n, g_dim: n, amps }
    }

    /// `self` ⊗ |g⟩ for a state over X alone.
    pub fn with_register(&self, g_dim: usize, g: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.x_dim * g_dim];
        for (x, a) in self.amps.iter().enumerate() {
            amps[x * g_dim + g] = *a;
        }
        ActionState { x_dim: self.x_dim, g_dim, amps }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, x: usize, g: usize) -> Complex64 {
        self.amps[x * self.g_dim + g]
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum())
    }

    /// |⟨self|other⟩|.
    pub fn overlap(&self, other: &ActionState) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm()
    }

    /// Measurement distribution of the first register.
    pub fn first_register_distribution(&self) -> Vec<f64> {
        (0..self.x_dim).map(|x| (0..self.g_dim).map(|g| self.amplitude(x, g).norm_sqr()).sum()).collect()
    }
}

/// |G^{(h)} * x⟩ = (1/√|G|) Σ_g χ(g, h) |g * x⟩.
pub fn fourier_state(action: &RegularActionTable, h: usize, x: usize) -> ActionState {
    let spec = action.spec();
    let n = action.size();
    let he = spec.element(h);
    let scale = 1.0 / sqrt(n as f64);
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    for g in 0..n {
        amps[action.act(g, x)] += cis(spec.chi_turns(&spec.element(g), &he)) * scale;
    }
    ActionState { x_dim: n, g_dim: 1, amps }
}

/// U_k on a state over X: |x⟩ ↦ |k * x⟩.
pub fn apply_action(action: &RegularActionTable, k: usize, state: &ActionState) -> ActionState {
    let mut amps = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    for x in 0..state.x_dim {
        let y = action.act(k, x);
        for g in 0..state.g_dim {
            amps[y * state.g_dim + g] = state.amps[x * state.g_dim + g];
        }
    }
    ActionState { amps, ..*state }
}

/// In-place Fourier transform on one copy of G:
/// out[h] = (1/√|G|) Σ_k exp(sign·2πi Σ_j k_j h_j / N_j) in[k],
/// done one cyclic factor at a time.
fn fourier_in_place(spec: &AbelianGroupSpec, buf: &mut [Complex64], sign: f64) {
    let mut stride = 1usize;
    let mut scratch = Vec::new();
    for &n in spec.factors().iter().rev() {
        let n = n as usize;
        if n > 1 {
            let roots: Vec<Complex64> = (0..n).map(|t| cis(sign * t as f64 / n as f64)).collect();
            let scale = 1.0 / sqrt(n as f64);
            let block = stride * n;
            for base in (0..buf.len()).step_by(block) {
                for offset in 0..stride {
                    scratch.clear();
                    scratch.extend((0..n).map(|k| buf[base + offset + k * stride]));
                    for h in 0..n {
                        let mut s = Complex64::new(0.0, 0.0);
                        for (k, v) in scratch.iter().enumerate() {
                            s += roots[(k * h) % n] * v;
                        }
                        buf[base + offset + h * stride] = s * scale;
                    }
                }
            }
        }
        stride *= n;
    }
}

fn check_dense(action: &RegularActionTable, state: &ActionState) -> Result<()> {
    let n = action.size();
    if state.x_dim != n || state.g_dim != n {
        return Err(Error::SpecMismatch);
    }
    if n.checked_mul(n).is_none_or(|t| t > MAX_AMPLITUDES) {
        return Err(Error::DomainError(alloc::format!("|G|·|X| = {n}² exceeds {MAX_AMPLITUDES}")));
    }
    let norm = state.norm();
    if fabs(norm - 1.0) > 1e-12 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

fn transform_register(spec: &AbelianGroupSpec, state: &mut ActionState, sign: f64) {
    let g = state.g_dim;
    for x in 0..state.x_dim {
        fourier_in_place(spec, &mut state.amps[x * g..(x + 1) * g], sign);
    }
}

fn controlled_action(action: &RegularActionTable, state: &ActionState, inverse: bool) -> ActionState {
    let n = action.size();
    let mut amps = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    for x in 0..n {
        for k in 0..n {
            let kk = if inverse { action.spec().neg_index(k) } else { k };
            amps[action.act(kk, x) * n + k] = state.amps[x * n + k];
        }
    }
    ActionState { amps, ..*state }
}

/// The index-computation circuit on X ⊗ G:
/// |G^{(h)} * x⟩|0⟩ ↦ |G^{(h)} * x⟩|h⟩.
///
/// The quantum Fourier transform of the first step is taken as
/// |k⟩ ↦ (1/√|G|) Σ_h χ(−k, h)|h⟩, so that the inverse transform of the
/// last step maps the kicked-back phases χ(−k, h) onto |h⟩.
pub fn comp_index(action: &RegularActionTable, state: &ActionState) -> Result<ActionState> {
    check_dense(action, state)?;
    let mut s = state.clone();
    transform_register(action.spec(), &mut s, -1.0);
    let mut s = controlled_action(action, &s, false);
    transform_register(action.spec(), &mut s, 1.0);
    Ok(s)
}

/// Inverse of [`comp_index`].
pub fn comp_index_inverse(action: &RegularActionTable, state: &ActionState) -> Result<ActionState> {
    check_dense(action, state)?;
    let mut s = state.clone();
    transform_register(action.spec(), &mut s, -1.0);
    let mut s = controlled_action(action, &s, true);
    transform_register(action.spec(), &mut s, 1.0);
    Ok(s)
}

/// Per-factor rule κ_j(h) = exp(2πi · mult · h² / modulus).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseRule {
    pub mult: u64,
    pub modulus: u64,
}

/// κ = Π_j κ_j with κ_j(h) = exp(πi h²/N_j) for even N_j and
/// exp(2πi t_j h²/N_j), t_j = (N_j+1)/2, for odd N_j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticRefinement {
    spec: AbelianGroupSpec,
    rules: Vec<PhaseRule>,
}

pub fn make_kappa(spec: &AbelianGroupSpec) -> QuadraticRefinement {
    let rules = spec
        .factors()
        .iter()
        .map(|&n| if n % 2 == 0 { PhaseRule { mult: 1, modulus: 2 * n } } else { PhaseRule { mult: n.div_ceil(2), modulus: n } })
        .collect();
    QuadraticRefinement { spec: spec.clone(), rules }
}

impl QuadraticRefinement {
    pub fn rules(&self) -> &[PhaseRule] {
        &self.rules
    }

    pub fn value(&self, h: &[u64]) -> Complex64 {
        let t: f64 = h
            .iter()
            .zip(&self.rules)
            .map(|(&x, r)| {
                let sq = (x as u128 * x as u128 % r.modulus as u128) * r.mult as u128 % r.modulus as u128;
                sq as f64 / r.modulus as f64
            })
            .sum();
        cis(t - libm::floor(t))
    }

    /// κ over element indices.
    pub fn table(&self) -> Vec<Complex64> {
        (0..self.spec.order()).map(|i| self.value(&self.spec.element(i))).collect()
    }
}

/// max |κ(g+h) − κ(g)κ(h)χ(g,h)| over all pairs when |G| ≤ 64, otherwise
/// over 10⁴ seeded random pairs.
pub fn refinement_error(spec: &AbelianGroupSpec, kappa: &[Complex64], seed: u64) -> Result<f64> {
    let n = spec.order();
    if kappa.len() != n {
        return Err(Error::SpecMismatch);
    }
    let err = |g: usize, h: usize| {
        let (ge, he) = (spec.element(g), spec.element(h));
        let lhs = kappa[spec.index(&spec.add(&ge, &he))];
        (lhs - kappa[g] * kappa[h] * cis(spec.chi_turns(&ge, &he))).norm()
    };
    if n <= EXHAUSTIVE_ORDER {
        Ok((0..n).flat_map(|g| (0..n).map(move |h| (g, h))).map(|(g, h)| err(g, h)).fold(0.0, f64::max))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..RANDOM_PAIRS).map(|_| err(rng.gen_range(0..n), rng.gen_range(0..n))).fold(0.0, f64::max))
    }
}

/// κ̂ by direct Fourier sum and by the closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    /// κ̂(g) = (1/√|G|) Σ_h χ(g,h) κ(h)
    pub hat: Vec<Complex64>,
    /// max |κ̂(g) − (1/√|G|) κ(g)⁻¹ Σ_h κ(h)|
    pub closed_form_error: f64,
    /// max_g |κ̂(g)| − min_g |κ̂(g)|
    pub spread: f64,
    /// |Σ_g |κ̂(g)|² − |G||
    pub parseval_error: f64,
}

pub fn kappa_hat_flatness(spec: &AbelianGroupSpec, kappa: &[Complex64]) -> Result<FlatnessReport> {
    let n = spec.order();
    if kappa.len() != n {
        return Err(Error::SpecMismatch);
    }
    let hat = kappa_hat(spec, kappa);
    let total: Complex64 = kappa.iter().sum();
    let scale = 1.0 / sqrt(n as f64);
    let closed_form_error =
        hat.iter().zip(kappa).map(|(h, k)| (h - total * k.inv() * scale).norm()).fold(0.0, f64::max);
    let mags: Vec<f64> = hat.iter().map(|h| h.norm()).collect();
    let spread = mags.iter().copied().fold(0.0, f64::max) - mags.iter().copied().fold(f64::INFINITY, f64::min);
    let parseval_error = fabs(mags.iter().map(|m| m * m).sum::<f64>() - n as f64);
    Ok(FlatnessReport { hat, closed_form_error, spread, parseval_error })
}

fn kappa_hat(spec: &AbelianGroupSpec, kappa: &[Complex64]) -> Vec<Complex64> {
    let mut hat = kappa.to_vec();
    fourier_in_place(spec, &mut hat, 1.0);
    hat
}

/// Exact output distribution of the refinement-phase sampler, over X.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistribution {
    pub probabilities: Vec<f64>,
    /// Total-variation distance to uniform.
    pub tv_uniform: f64,
    /// Computed by running the circuit on a dense state vector rather than
    /// from |κ̂(g)|²/|G|.
    pub statevector: bool,
}

fn finish(probabilities: Vec<f64>, statevector: bool) -> SamplingDistribution {
    let u = 1.0 / probabilities.len() as f64;
    let tv_uniform = 0.5 * probabilities.iter().map(|p| fabs(p - u)).sum::<f64>();
    SamplingDistribution { probabilities, tv_uniform, statevector }
}

/// Pr[g * x] = |κ̂(g)|²/|G|.
pub fn analytic_distribution(action: &RegularActionTable, x: usize, kappa: &[Complex64]) -> Result<SamplingDistribution> {
    let spec = action.spec();
    if kappa.len() != spec.order() || x >= action.size() {
        return Err(Error::SpecMismatch);
    }
    let n = spec.order() as f64;
    let mut probs = vec![0.0; action.size()];
    for (g, h) in kappa_hat(spec, kappa).iter().enumerate() {
        probs[action.act(g, x)] = h.norm_sqr() / n;
    }
    Ok(finish(probs, false))
}

/// The sampler's state just before the final measurement: index
/// computation on |x⟩|0⟩, the phase κ(h) on the second register, and the
/// inverse index computation.
pub fn oriented_state(action: &RegularActionTable, x: usize, kappa: &[Complex64]) -> Result<ActionState> {
    if kappa.len() != action.size() || x >= action.size() {
        return Err(Error::SpecMismatch);
    }
    let n = action.size();
    let mut s = comp_index(action, &ActionState::basis(action, x))?;
    for (i, a) in s.amps.iter_mut().enumerate() {
        *a *= kappa[i % n];
    }
    comp_index_inverse(action, &s)
}

/// Exact output distribution: on the state vector when |G|² ≤ 2²⁰,
/// otherwise from the analytic form.
pub fn oriented_sampling_exact(action: &RegularActionTable, x: usize, kappa: &[Complex64]) -> Result<SamplingDistribution> {
    let n = action.size();
    if n.checked_mul(n).is_some_and(|t| t <= MAX_AMPLITUDES) {
        let s = oriented_state(action, x, kappa)?;
        Ok(finish(s.first_register_distribution(), true))
    } else {
        analytic_distribution(action, x, kappa)
    }
}

/// Draw `shots` samples from the exact distribution; counts over X.
pub fn oriented_sampling_shots(
    action: &RegularActionTable,
    x: usize,
    kappa: &[Complex64],
    shots: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let dist = oriented_sampling_exact(action, x, kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.probabilities.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = dist.probabilities.len() - 1;
        for (i, p) in dist.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        counts[pick] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPECS: [&[u64]; 7] = [&[2], &[3], &[4], &[6], &[2, 2], &[4, 3], &[8, 5]];

    fn spec(f: &[u64]) -> AbelianGroupSpec {
        AbelianGroupSpec::new(f.to_vec()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn all_specs_up_to_64() -> Vec<AbelianGroupSpec> {
        let mut out = Vec::new();
        for n in 1..=64u64 {
            out.push(spec(&[n]));
        }
        for a in 2..=8u64 {
            for b in 2..=8u64 {
                if a * b <= 64 {
                    out.push(spec(&[a, b]));
                }
            }
        }
        out.push(spec(&[2, 2, 2]));
        out.push(spec(&[2, 3, 4]));
        out.push(spec(&[4, 4, 4]));
        out.push(spec(&[]));
        out
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(AbelianGroupSpec::parse("4, 3").unwrap().factors(), [4, 3]);
        assert_eq!(AbelianGroupSpec::parse("").unwrap().order(), 1);
        assert!(AbelianGroupSpec::parse("4,0").is_err());
        assert!(AbelianGroupSpec::parse("4,x").is_err());
        let s = spec(&[4, 3]);
        for i in 0..12 {
            assert_eq!(s.index(&s.element(i)), i);
        }
        assert_eq!(s.element(5), [1, 2]);
        assert_eq!(s.to_string(), "4,3");
    }

    #[test]
    fn chi_values() {
        let z2 = spec(&[2]);
        assert!((chi(&z2, &[1], &[1]).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(chi(&z2, &[2], &[1]), Err(Error::SpecMismatch));
        assert_eq!(chi(&z2, &[1, 0], &[1]), Err(Error::SpecMismatch));
        let s = spec(&[8, 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for x in 0..40 {
            assert_eq!(chi(&s, &[0, 0], &s.element(x)).unwrap(), c(1.0, 0.0));
        }
        for _ in 0..1000 {
            let (a, x, y) = (s.element(rng.gen_range(0..40)), s.element(rng.gen_range(0..40)), s.element(rng.gen_range(0..40)));
            let lhs = chi(&s, &a, &s.add(&x, &y)).unwrap();
            let rhs = chi(&s, &a, &x).unwrap() * chi(&s, &a, &y).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn tables_are_regular() {
        for s in all_specs_up_to_64().into_iter().filter(|s| s.order() <= 24) {
            assert!(RegularActionTable::random(s, 5).is_regular());
        }
        let t = RegularActionTable::random(spec(&[4, 3]), 1);
        for x in 0..12 {
            for y in 0..12 {
                assert_eq!(t.act(t.difference(x, y), x), y);
            }
        }
        assert_ne!(RegularActionTable::random(spec(&[8, 5]), 1), RegularActionTable::random(spec(&[8, 5]), 2));
    }

    #[test]
    fn fourier_states() {
        let t = RegularActionTable::random(spec(&[2]), 0);
        let x0 = t.basepoint();
        let x1 = t.act(1, x0);
        let f = fourier_state(&t, 1, x0);
        let r = 1.0 / sqrt(2.0);
        assert!((f.amplitudes()[x0] - c(r, 0.0)).norm() < 1e-15);
        assert!((f.amplitudes()[x1] - c(-r, 0.0)).norm() < 1e-15);
        for s in SPECS {
            let t = RegularActionTable::random(spec(s), 3);
            let n = t.size();
            let uniform = fourier_state(&t, 0, t.basepoint());
            assert!(uniform.amplitudes().iter().all(|a| (a - c(1.0 / sqrt(n as f64), 0.0)).norm() < 1e-14));
            for h in 0..n {
                let f = fourier_state(&t, h, t.basepoint());
                for k in 0..n {
                    let phase = chi(t.spec(), &t.spec().neg(&t.spec().element(k)), &t.spec().element(h)).unwrap();
                    let moved = apply_action(&t, k, &f);
                    let err = moved.amplitudes().iter().zip(f.amplitudes()).map(|(a, b)| (a - phase * b).norm()).fold(0.0, f64::max);
                    assert!(err < 1e-12);
                }
            }
        }
    }

    #[test]
    fn comp_index_hand_trace() {
        let t = RegularActionTable::random(spec(&[2]), 0);
        let x0 = t.basepoint();
        let x1 = t.act(1, x0);
        let r = 1.0 / sqrt(2.0);
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[x0 * 2] = c(r, 0.0);
        amps[x1 * 2] = c(-r, 0.0);
        let out = comp_index(&t, &ActionState::new(2, 2, amps).unwrap()).unwrap();
        assert!((out.amplitude(x0, 1) - c(r, 0.0)).norm() < 1e-15);
        assert!((out.amplitude(x1, 1) - c(-r, 0.0)).norm() < 1e-15);
        assert!(out.amplitude(x0, 0).norm() < 1e-15 && out.amplitude(x1, 0).norm() < 1e-15);
        // trivial group: identity
        let t = RegularActionTable::random(spec(&[]), 0);
        let s = ActionState::basis(&t, 0);
        assert_eq!(comp_index(&t, &s).unwrap(), s);
        let bad = ActionState::new(1, 1, vec![c(2.0, 0.0)]).unwrap();
        assert!(matches!(comp_index(&t, &bad), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn comp_index_on_fourier_basis() {
        for s in all_specs_up_to_64() {
            let t = RegularActionTable::random(s, 11);
            let n = t.size();
            for x in [t.basepoint(), n - 1] {
                for h in 0..n {
                    let f = fourier_state(&t, h, x);
                    let out = comp_index(&t, &f.with_register(n, 0)).unwrap();
                    assert!(out.overlap(&f.with_register(n, h)) >= 1.0 - 1e-10);
                    let back = comp_index_inverse(&t, &out).unwrap();
                    assert!(back.overlap(&f.with_register(n, 0)) >= 1.0 - 1e-10);
                }
            }
        }
    }

    #[test]
    fn comp_index_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for s in SPECS {
            let t = RegularActionTable::random(spec(s), 0);
            let n = t.size();
            for _ in 0..200 {
                let raw: Vec<Complex64> = (0..n * n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let norm = sqrt(raw.iter().map(|a| a.norm_sqr()).sum::<f64>());
                let st = ActionState::new(n, n, raw.into_iter().map(|a| a / norm).collect()).unwrap();
                assert!(fabs(comp_index(&t, &st).unwrap().norm() - 1.0) < 1e-12);
            }
        }
    }

    #[test]
    fn kappa_rules() {
        let z2 = make_kappa(&spec(&[2])).table();
        assert!((z2[0] - c(1.0, 0.0)).norm() < 1e-15 && (z2[1] - c(0.0, 1.0)).norm() < 1e-15);
        let z3 = make_kappa(&spec(&[3]));
        assert_eq!(z3.rules(), [PhaseRule { mult: 2, modulus: 3 }]);
        for s in all_specs_up_to_64() {
            let k = make_kappa(&s).table();
            assert!((k[0] - c(1.0, 0.0)).norm() < 1e-15);
            assert!(k.iter().all(|v| fabs(v.norm() - 1.0) < 1e-14));
            assert!(refinement_error(&s, &k, 0).unwrap() < 1e-12, "{s}");
        }
        let big = spec(&[64, 27, 10]);
        assert!(refinement_error(&big, &make_kappa(&big).table(), 1).unwrap() < 1e-12);
        let ones = vec![c(1.0, 0.0); 4];
        assert!(refinement_error(&spec(&[4]), &ones, 0).unwrap() > 0.5);
    }

    #[test]
    fn flatness() {
        let z2 = spec(&[2]);
        let rep = kappa_hat_flatness(&z2, &make_kappa(&z2).table()).unwrap();
        assert!(rep.hat.iter().all(|h| fabs(h.norm() - 1.0) < 1e-15));
        for f in [&[2u64][..], &[7], &[4, 3], &[8, 5], &[1024], &[32, 32], &[16, 8, 8], &[3, 5, 7, 9]] {
            let s = spec(f);
            let rep = kappa_hat_flatness(&s, &make_kappa(&s).table()).unwrap();
            assert!(rep.spread <= 1e-12, "{s}: {}", rep.spread);
            assert!(rep.closed_form_error <= 1e-10 && rep.parseval_error <= 1e-10);
        }
    }

    #[test]
    fn sampling_is_uniform() {
        for s in SPECS {
            let s = spec(s);
            let t = RegularActionTable::random(s.clone(), 4);
            let k = make_kappa(&s).table();
            let exact = oriented_sampling_exact(&t, t.basepoint(), &k).unwrap();
            assert!(exact.statevector);
            assert!(exact.tv_uniform <= 1e-12, "{s}");
            let analytic = analytic_distribution(&t, t.basepoint(), &k).unwrap();
            assert!(exact.probabilities.iter().zip(&analytic.probabilities).all(|(a, b)| fabs(a - b) < 1e-12));
        }
        // trivial group: point mass
        let t = RegularActionTable::random(spec(&[]), 0);
        assert_eq!(oriented_sampling_exact(&t, 0, &[c(1.0, 0.0)]).unwrap().probabilities, [1.0]);
        // constant κ collapses onto x
        let t = RegularActionTable::random(spec(&[4]), 2);
        let d = oriented_sampling_exact(&t, t.basepoint(), &[c(1.0, 0.0); 4]).unwrap();
        assert!(fabs(d.probabilities[t.basepoint()] - 1.0) < 1e-12);
        assert!(fabs(d.tv_uniform - 0.75) < 1e-12);
    }

    #[test]
    fn shots_follow_distribution() {
        let s = spec(&[4, 3]);
        let t = RegularActionTable::random(s.clone(), 0);
        let counts = oriented_sampling_shots(&t, 0, &make_kappa(&s).table(), 12_000, 3).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 12_000);
        assert!(counts.iter().all(|&c| (800..1200).contains(&c)));
        assert_eq!(counts, oriented_sampling_shots(&t, 0, &make_kappa(&s).table(), 12_000, 3).unwrap());
    }
}
