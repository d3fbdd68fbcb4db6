//! The supersingular ℓ-isogeny graph, its Brandt matrix and the symmetrized
//! Hecke operator.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use libm::{pow, sqrt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arith::{find_seed_j, phi_neighbors, FieldCtx, Fp2Elem, ReducedModPoly};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Default seed for the root-splitting RNG used while building graphs.
pub const DEFAULT_BUILD_SEED: u64 = 0x5eed_0001;

/// Which conjugation `D^{s} B D^{−s}` makes the Brandt matrix symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// s = +1/2
    PlusHalf,
    /// s = −1/2
    MinusHalf,
}

impl Orientation {
    pub fn exponent(self) -> f64 {
        match self {
            Orientation::PlusHalf => 0.5,
            Orientation::MinusHalf => -0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::PlusHalf => "plus_half",
            Orientation::MinusHalf => "minus_half",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "plus_half" => Some(Orientation::PlusHalf),
            "minus_half" => Some(Orientation::MinusHalf),
            _ => None,
        }
    }
}

/// |Aut(E)/{±1}|: 3 for j = 0, 2 for j = 1728, 1 otherwise.
pub fn automorphism_weight(j: Fp2Elem, ctx: &FieldCtx) -> u8 {
    if j.is_zero() {
        3
    } else if j == ctx.from_i64(1728) {
        2
    } else {
        1
    }
}

/// Supersingular ℓ-isogeny graph with its integer Brandt matrix.
///
/// `brandt[i][j]` counts the ℓ-isogenies out of vertex `i` landing on
/// vertex `j` (root multiplicities of Φ_ℓ(j_i, Y)), so every row sums to ℓ+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsogenyGraph {
    p: u64,
    ell: u64,
    vertices: Vec<Fp2Elem>,
    brandt: Vec<u32>,
    weights: Vec<u8>,
    orientation: Orientation,
}

impl IsogenyGraph {
    /// Assemble a graph from parts, checking every structural invariant.
    pub fn from_parts(
        p: u64,
        ell: u64,
        vertices: Vec<Fp2Elem>,
        brandt: Vec<u32>,
        weights: Vec<u8>,
    ) -> Result<Self> {
        let n = vertices.len();
        let bad = |msg: &str| Err(Error::DomainError(alloc::format!("invalid graph: {msg}")));
        if n == 0 || brandt.len() != n * n || weights.len() != n {
            return bad("dimension mismatch");
        }
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return bad("vertices not strictly sorted");
        }
        for i in 0..n {
            let row_sum: u64 = brandt[i * n..(i + 1) * n].iter().map(|&x| x as u64).sum();
            if row_sum != ell + 1 {
                return bad("row sum differs from l+1");
            }
        }
        let orientation = detect_orientation(&brandt, &weights).ok_or(Error::SymmetrizationFailed(f64::NAN))?;
        Ok(IsogenyGraph { p, ell, vertices, brandt, weights, orientation })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Fp2Elem] {
        &self.vertices
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    /// Row-major Brandt matrix.
    pub fn brandt(&self) -> &[u32] {
        &self.brandt
    }

    pub fn brandt_entry(&self, i: usize, j: usize) -> u32 {
        self.brandt[i * self.len() + j]
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn vertex_index(&self, j: Fp2Elem) -> Option<usize> {
        self.vertices.binary_search(&j).ok()
    }

    /// Σ 12/w over vertices; the mass formula says this equals p − 1.
    pub fn twelve_times_mass(&self) -> u64 {
        self.weights.iter().map(|&w| 12 / w as u64).sum()
    }

    /// Connectivity by breadth-first search over non-zero Brandt entries.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if self.brandt_entry(i, j) > 0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

// The integer identity w_i^{2s} B_ij = w_j^{2s} B_ji decides the exponent.
fn detect_orientation(brandt: &[u32], weights: &[u8]) -> Option<Orientation> {
    let n = weights.len();
    let holds = |plus: bool| {
        (0..n).all(|i| {
            (0..n).all(|j| {
                let (wi, wj) = (weights[i] as u64, weights[j] as u64);
                let (bij, bji) = (brandt[i * n + j] as u64, brandt[j * n + i] as u64);
                if plus {
                    wi * bij == wj * bji
                } else {
                    wj * bij == wi * bji
                }
            })
        })
    };
    if holds(true) {
        Some(Orientation::PlusHalf)
    } else if holds(false) {
        Some(Orientation::MinusHalf)
    } else {
        None
    }
}

/// Breadth-first closure of Φ_ℓ-neighbors from `seed_j`.
pub fn build_graph(ctx: &FieldCtx, phi: &ReducedModPoly, seed_j: Fp2Elem) -> Result<IsogenyGraph> {
    build_graph_seeded(ctx, phi, seed_j, DEFAULT_BUILD_SEED)
}

/// As [`build_graph`] with an explicit seed for the root-finding RNG.
pub fn build_graph_seeded(ctx: &FieldCtx, phi: &ReducedModPoly, seed_j: Fp2Elem, rng_seed: u64) -> Result<IsogenyGraph> {
    let p = ctx.p();
    let ell = phi.ell();
    if ell == p || phi.p() != p {
        return Err(Error::InvalidLevel(ell));
    }
    if seed_j.a >= p || seed_j.b >= p {
        return Err(Error::SeedNotSupersingular);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    // the supersingular locus has at most ⌊p/12⌋ + 2 points
    let cap = (p / 12 + 2) as usize;

    let mut index: BTreeMap<Fp2Elem, usize> = BTreeMap::new();
    let mut order: Vec<Fp2Elem> = Vec::new();
    let mut edges: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(seed_j, 0);
    order.push(seed_j);
    queue.push_back(seed_j);
    while let Some(j) = queue.pop_front() {
        let nbrs = phi_neighbors(phi, j, ctx, &mut rng);
        if nbrs.iter().map(|x| x.1 as u64).sum::<u64>() != ell + 1 {
            return Err(Error::SeedNotSupersingular);
        }
        let mut row = Vec::with_capacity(nbrs.len());
        for (nj, mult) in nbrs {
            let id = *index.entry(nj).or_insert_with(|| {
                order.push(nj);
                queue.push_back(nj);
                order.len() - 1
            });
            row.push((id, mult));
        }
        edges.push(row);
        if order.len() > cap {
            return Err(Error::SeedNotSupersingular);
        }
    }

    let n = order.len();
    let mut sorted: Vec<(Fp2Elem, usize)> = order.iter().copied().zip(0..n).collect();
    sorted.sort();
    let mut new_id = vec![0; n];
    for (pos, &(_, old)) in sorted.iter().enumerate() {
        new_id[old] = pos;
    }
    let mut brandt = vec![0u32; n * n];
    for (old, row) in edges.iter().enumerate() {
        for &(dst, mult) in row {
            brandt[new_id[old] * n + new_id[dst]] += mult as u32;
        }
    }
    let vertices: Vec<Fp2Elem> = sorted.into_iter().map(|x| x.0).collect();
    let weights = vertices.iter().map(|&j| automorphism_weight(j, ctx)).collect();
    let graph = IsogenyGraph::from_parts(p, ell, vertices, brandt, weights)?;
    if graph.twelve_times_mass() != p - 1 {
        return Err(Error::SeedNotSupersingular);
    }
    Ok(graph)
}

/// Build from the canonical F_p seed; when `seed_j` is given it must be one
/// of the resulting vertices.
pub fn build_from_seed(ctx: &FieldCtx, phi: &ReducedModPoly, seed_j: Option<Fp2Elem>) -> Result<IsogenyGraph> {
    let base = find_seed_j(ctx);
    let start = match seed_j {
        Some(j) if j.is_fp() => {
            if !crate::arith::is_supersingular_fp(j.a, ctx) {
                return Err(Error::SeedNotSupersingular);
            }
            j
        }
        _ => base,
    };
    let g = build_graph(ctx, phi, start)?;
    if let Some(j) = seed_j {
        if g.vertex_index(j).is_none() {
            return Err(Error::SeedNotSupersingular);
        }
    }
    Ok(g)
}

/// A′ = D^{s} B D^{−s}, real symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator {
    p: u64,
    ell: u64,
    matrix: Matrix,
    weights: Vec<u8>,
    orientation: Orientation,
}

impl SymmetricOperator {
    /// Wrap an arbitrary matrix; only the symmetry tolerance is checked.
    pub fn from_matrix(p: u64, ell: u64, matrix: Matrix, weights: Vec<u8>, orientation: Orientation) -> Result<Self> {
        let asym = matrix.asymmetry();
        if matrix.rows() != matrix.cols() || weights.len() != matrix.rows() || asym > 1e-12 * (ell as f64 + 1.0) {
            return Err(Error::SymmetrizationFailed(asym));
        }
        Ok(SymmetricOperator { p, ell, matrix, weights, orientation })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The unit eigenvector D^{s}𝟙/‖D^{s}𝟙‖ with eigenvalue ℓ+1.
    pub fn perron_vector(&self) -> Vec<f64> {
        let s = self.orientation.exponent();
        let raw: Vec<f64> = self.weights.iter().map(|&w| pow(w as f64, s)).collect();
        let norm = sqrt(raw.iter().map(|x| x * x).sum::<f64>());
        raw.into_iter().map(|x| x / norm).collect()
    }
}

/// Conjugate B by the automorphism weights.
///
/// Tries D^{1/2} B D^{−1/2} first and falls back to D^{−1/2} B D^{1/2};
/// the convention used is recorded on the operator.
pub fn symmetrize(g: &IsogenyGraph) -> Result<SymmetricOperator> {
    let n = g.len();
    let tol = 1e-12 * (g.ell() as f64 + 1.0);
    let conjugate = |s: f64| {
        Matrix::from_fn(n, n, |i, j| {
            let scale = pow(g.weights[i] as f64 / g.weights[j] as f64, s);
            scale * g.brandt_entry(i, j) as f64
        })
    };
    let mut worst: f64 = 0.0;
    for orientation in [Orientation::PlusHalf, Orientation::MinusHalf] {
        let m = conjugate(orientation.exponent());
        let asym = m.asymmetry();
        if asym <= tol {
            return Ok(SymmetricOperator { p: g.p(), ell: g.ell(), matrix: m, weights: g.weights.clone(), orientation });
        }
        worst = worst.max(asym);
    }
    Err(Error::SymmetrizationFailed(worst))
}

/// Graphs and symmetrized operators for several levels over one prime.
#[derive(Clone, Debug)]
pub struct HeckeFamily {
    pub graphs: Vec<IsogenyGraph>,
    pub operators: Vec<SymmetricOperator>,
}

impl HeckeFamily {
    /// Symmetrize graphs built over one prime; fails with
    /// `OperatorMismatch` if the vertex sets disagree.
    pub fn from_graphs(graphs: Vec<IsogenyGraph>) -> Result<Self> {
        let first = graphs.first().ok_or(Error::EmptyWindow)?;
        if graphs.iter().any(|g| g.p() != first.p() || g.vertices() != first.vertices()) {
            return Err(Error::OperatorMismatch);
        }
        let operators = graphs.iter().map(symmetrize).collect::<Result<Vec<_>>>()?;
        Ok(HeckeFamily { graphs, operators })
    }

    pub fn vertices(&self) -> &[Fp2Elem] {
        self.graphs[0].vertices()
    }

    pub fn levels(&self) -> Vec<u64> {
        self.graphs.iter().map(IsogenyGraph::ell).collect()
    }
}

/// Build the graph for each level in `ells` from the canonical seed, with
/// Φ_ℓ mod p supplied by `phi`.
pub fn hecke_family_with(
    ctx: &FieldCtx,
    ells: &[u64],
    mut phi: impl FnMut(u64) -> Result<ReducedModPoly>,
) -> Result<HeckeFamily> {
    let seed = find_seed_j(ctx);
    let mut graphs = Vec::with_capacity(ells.len());
    for &ell in ells {
        if ell == ctx.p() {
            return Err(Error::InvalidLevel(ell));
        }
        graphs.push(build_graph(ctx, &phi(ell)?, seed)?);
    }
    HeckeFamily::from_graphs(graphs)
}

/// [`hecke_family_with`] using the built-in Φ_ℓ where available and
/// generating Φ_ℓ mod p otherwise.
pub fn hecke_family(ctx: &FieldCtx, ells: &[u64]) -> Result<HeckeFamily> {
    hecke_family_with(ctx, ells, |ell| crate::arith::modpoly::reduced_for(ell, ctx.p()))
}
