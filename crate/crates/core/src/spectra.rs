//! Simultaneous eigenvectors of the commuting family {A′_ℓ} and the three
//! spectral statistics computed from them: sup-norm, fourth moment and
//! tag separation.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, log, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::SymmetricOperator;
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::primes::primes_in;
use crate::{Error, Result};

/// Commutator tolerance, ‖A′_ℓ A′_q − A′_q A′_ℓ‖_max.
pub const COMMUTATOR_TOL: f64 = 1e-9;
/// Eigenvalue gap below which eigenvalues of the random combination are
/// treated as one cluster.
pub const DEGENERACY_GAP: f64 = 1e-6;
/// Residual tolerance is this times (ℓ+1).
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Orthonormality tolerance on VᵀV − I.
pub const ORTHO_TOL: f64 = 1e-9;
const MAX_ATTEMPTS: usize = 5;

/// Simultaneous orthonormal eigenvectors of a family of operators.
///
/// Column `i` of `vectors` is φ_i; `raw[i][k]` is its eigenvalue under the
/// k-th operator and `tag(i)[k] = raw[i][k] / √ℓ_k`. Columns are sorted by
/// tag vector, and each column's first entry of magnitude above 1e-8 is
/// positive.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEigenbasis {
    p: u64,
    primes: Vec<u64>,
    vectors: Matrix,
    raw: Vec<Vec<f64>>,
    perron: usize,
}

impl JointEigenbasis {
    /// Build from explicit parts; used for synthetic bases in tests and by
    /// callers that already have eigenvectors.
    pub fn from_parts(p: u64, primes: Vec<u64>, vectors: Matrix, raw: Vec<Vec<f64>>, perron: usize) -> Result<Self> {
        let n = vectors.rows();
        if vectors.cols() != n || raw.len() != n || raw.iter().any(|r| r.len() != primes.len()) || perron >= n.max(1) {
            return Err(Error::DomainError(alloc::string::String::from("inconsistent eigenbasis parts")));
        }
        Ok(JointEigenbasis { p, primes, vectors, raw, perron })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    /// φ_i(x).
    pub fn amplitude(&self, i: usize, x: usize) -> f64 {
        self.vectors[(x, i)]
    }

    pub fn raw_eigenvalues(&self, i: usize) -> &[f64] {
        &self.raw[i]
    }

    pub fn tag(&self, i: usize) -> Vec<f64> {
        self.raw[i].iter().zip(&self.primes).map(|(a, &l)| a / sqrt(l as f64)).collect()
    }

    /// Index of the eigenvector with eigenvalue ℓ+1.
    pub fn perron_index(&self) -> usize {
        self.perron
    }

    /// max |VᵀV − I|.
    pub fn orthonormality_error(&self) -> f64 {
        self.vectors.transpose().mul(&self.vectors).add_scaled(&Matrix::identity(self.len()), -1.0).max_abs()
    }

    /// Worst ‖A′φ_i − a_i φ_i‖₂ / (ℓ+1) for one operator in the basis.
    pub fn residual(&self, op: &SymmetricOperator, slot: usize) -> f64 {
        let av = op.matrix().mul(&self.vectors);
        (0..self.len())
            .map(|i| {
                let a = self.raw[i][slot];
                let r: f64 = (0..self.len()).map(|x| {
                    let d = av[(x, i)] - a * self.vectors[(x, i)];
                    d * d
                }).sum();
                sqrt(r) / (op.ell() as f64 + 1.0)
            })
            .fold(0.0, f64::max)
    }
}

fn commutator_norm(a: &Matrix, b: &Matrix) -> f64 {
    a.mul(b).add_scaled(&b.mul(a), -1.0).max_abs()
}

/// Joint diagonalization of commuting symmetric operators over one graph.
///
/// A random positive combination Σ c_k A′_k (c_k uniform in [1, 2]) is
/// diagonalized; clusters of nearly equal eigenvalues are re-diagonalized
/// inside their eigenspace with fresh coefficients. The result is accepted
/// only if every column is an eigenvector of every operator to within
/// `RESIDUAL_TOL·(ℓ+1)`; otherwise up to five fresh draws are tried.
pub fn joint_diagonalize(ops: &[SymmetricOperator], seed: u64) -> Result<JointEigenbasis> {
    let first = ops.first().ok_or(Error::EmptyWindow)?;
    let n = first.len();
    for op in ops {
        if op.p() != first.p() || op.len() != n || op.weights() != first.weights() {
            return Err(Error::OperatorMismatch);
        }
    }
    for (k, a) in ops.iter().enumerate() {
        for b in &ops[k + 1..] {
            let c = commutator_norm(a.matrix(), b.matrix());
            if c > COMMUTATOR_TOL {
                return Err(Error::NotCommuting(c));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..MAX_ATTEMPTS {
        let vectors = diagonalize_combination(ops, &mut rng);
        let products: Vec<Matrix> = ops.iter().map(|op| op.matrix().mul(&vectors)).collect();
        let mut raw = vec![vec![0.0; ops.len()]; n];
        let mut attempt_worst: f64 = 0.0;
        for i in 0..n {
            let col = vectors.column(i);
            for (k, (op, av)) in ops.iter().zip(&products).enumerate() {
                let av_col = av.column(i);
                let a = dot(&col, &av_col);
                raw[i][k] = a;
                let r: f64 = av_col.iter().zip(&col).map(|(x, y)| (x - a * y) * (x - a * y)).sum();
                attempt_worst = attempt_worst.max(sqrt(r) / (op.ell() as f64 + 1.0));
            }
        }
        if attempt_worst <= RESIDUAL_TOL {
            let basis = canonicalize(first, ops, vectors, raw);
            if basis.orthonormality_error() > ORTHO_TOL {
                worst = worst.min(attempt_worst);
                continue;
            }
            check_distinct_tags(&basis)?;
            return Ok(basis);
        }
        worst = worst.min(attempt_worst);
    }
    Err(Error::JointDiagonalizationFailed(worst))
}

fn random_combination(ops: &[SymmetricOperator], rng: &mut ChaCha8Rng) -> Matrix {
    let n = ops[0].len();
    ops.iter().fold(Matrix::zeros(n, n), |acc, op| acc.add_scaled(op.matrix(), rng.gen_range(1.0..2.0)))
}

fn diagonalize_combination(ops: &[SymmetricOperator], rng: &mut ChaCha8Rng) -> Matrix {
    let m = random_combination(ops, rng);
    let (vals, mut vectors) = symmetric_eigen(&m);
    let n = vals.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            refine_cluster(ops, &mut vectors, start, end, rng);
        }
        start = end;
    }
    vectors
}

// Re-diagonalize the restriction of a fresh random combination to the
// span of columns [start, end).
fn refine_cluster(ops: &[SymmetricOperator], vectors: &mut Matrix, start: usize, end: usize, rng: &mut ChaCha8Rng) {
    let n = vectors.rows();
    let m = end - start;
    let basis = Matrix::from_fn(n, m, |x, c| vectors[(x, start + c)]);
    let combo = random_combination(ops, rng);
    let projected = basis.transpose().mul(&combo.mul(&basis));
    let sym = Matrix::from_fn(m, m, |i, j| 0.5 * (projected[(i, j)] + projected[(j, i)]));
    let (_, rot) = symmetric_eigen(&sym);
    let rotated = basis.mul(&rot);
    for x in 0..n {
        for c in 0..m {
            vectors[(x, start + c)] = rotated[(x, c)];
        }
    }
}

fn canonicalize(first: &SymmetricOperator, ops: &[SymmetricOperator], vectors: Matrix, raw: Vec<Vec<f64>>) -> JointEigenbasis {
    let n = vectors.rows();
    let primes: Vec<u64> = ops.iter().map(|op| op.ell()).collect();
    let scale: Vec<f64> = primes.iter().map(|&l| 1.0 / sqrt(l as f64)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ta = raw[a].iter().zip(&scale).map(|(x, s)| x * s);
        let tb = raw[b].iter().zip(&scale).map(|(x, s)| x * s);
        ta.partial_cmp(tb).unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut sorted = Matrix::zeros(n, n);
    let mut sorted_raw = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        let col = vectors.column(old);
        let sign = col.iter().find(|x| fabs(**x) > 1e-8).map_or(1.0, |x| x.signum());
        for x in 0..n {
            sorted[(x, new)] = sign * col[x];
        }
        sorted_raw.push(raw[old].clone());
    }
    let perron_vec = first.perron_vector();
    let perron = (0..n)
        .max_by(|&a, &b| {
            let oa = fabs(dot(&sorted.column(a), &perron_vec));
            let ob = fabs(dot(&sorted.column(b), &perron_vec));
            oa.partial_cmp(&ob).unwrap_or(core::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    JointEigenbasis { p: first.p(), primes, vectors: sorted, raw: sorted_raw, perron }
}

fn check_distinct_tags(basis: &JointEigenbasis) -> Result<()> {
    let n = basis.len();
    let tags: Vec<Vec<f64>> = (0..n).map(|i| basis.tag(i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let same = tags[i].iter().zip(&tags[j]).all(|(a, b)| fabs(a - b) < DEGENERACY_GAP);
            if same {
                return Err(Error::DegenerateJointSpectrum(i, j));
            }
        }
    }
    Ok(())
}

/// Primes ℓ with ln p < ℓ ≤ 4 ln p, ℓ ≠ p, ascending.
pub fn tag_window(p: u64) -> Result<Vec<u64>> {
    let lp = log(p as f64);
    let lo = libm::floor(lp) as u64 + 1;
    let hi = libm::floor(4.0 * lp) as u64;
    let window: Vec<u64> = primes_in(lo, hi).into_iter().filter(|&l| l != p && (l as f64) > lp).collect();
    if window.is_empty() {
        Err(Error::EmptyWindow)
    } else {
        Ok(window)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupnormReport {
    pub p: u64,
    pub n: usize,
    /// max_i ‖φ_i‖_∞
    pub supnorm: f64,
    /// supnorm · √p / ln p
    pub ratio: f64,
    pub eigenvector: usize,
    pub vertex: usize,
}

/// Largest coordinate over all eigenvectors, and its ratio to ln p / √p.
pub fn supnorm_report(basis: &JointEigenbasis) -> SupnormReport {
    let n = basis.len();
    let mut best = (0.0, 0, 0);
    for i in 0..n {
        for x in 0..n {
            let v = fabs(basis.amplitude(i, x));
            if v > best.0 {
                best = (v, i, x);
            }
        }
    }
    let p = basis.p() as f64;
    SupnormReport { p: basis.p(), n, supnorm: best.0, ratio: best.0 * sqrt(p) / log(p), eigenvector: best.1, vertex: best.2 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourthMomentReport {
    pub p: u64,
    pub n: usize,
    /// max over vertex pairs of Σ_i (φ_i(x)² − φ_i(y)²)²
    pub statistic: f64,
    /// statistic · p
    pub normalized: f64,
    pub pair: (usize, usize),
}

/// Exact maximum of the fourth-moment statistic over all vertex pairs.
pub fn fourth_moment_stat(basis: &JointEigenbasis) -> FourthMomentReport {
    let n = basis.len();
    let squares: Vec<Vec<f64>> = (0..n).map(|x| basis.vectors().row(x).iter().map(|v| v * v).collect()).collect();
    let mut best = (0.0, (0, 0));
    for x in 0..n {
        for y in x + 1..n {
            let s: f64 = squares[x].iter().zip(&squares[y]).map(|(a, b)| (a - b) * (a - b)).sum();
            if s > best.0 {
                best = (s, (x, y));
            }
        }
    }
    FourthMomentReport { p: basis.p(), n, statistic: best.0, normalized: best.0 * basis.p() as f64, pair: best.1 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationReport {
    pub p: u64,
    pub n: usize,
    pub primes: Vec<u64>,
    /// Minimum pairwise tag distance over non-Perron eigenvectors; `None`
    /// when fewer than two remain.
    pub min_distance: Option<f64>,
    /// Minimum pairwise tag distance including the Perron eigenvector.
    pub min_distance_with_perron: f64,
    /// Indices achieving `min_distance` (or the Perron-inclusive minimum when
    /// that is undefined).
    pub pair: (usize, usize),
}

/// Minimum Euclidean distance between tag vectors of distinct eigenvectors.
pub fn separation_report(basis: &JointEigenbasis) -> Result<SeparationReport> {
    let n = basis.len();
    if n < 2 {
        return Err(Error::SingleEigenvector);
    }
    let tags: Vec<Vec<f64>> = (0..n).map(|i| basis.tag(i)).collect();
    let perron = basis.perron_index();
    let mut with = (f64::INFINITY, (0, 1));
    let mut without: Option<(f64, (usize, usize))> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = sqrt(tags[i].iter().zip(&tags[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
            if d < with.0 {
                with = (d, (i, j));
            }
            if i != perron && j != perron && without.is_none_or(|w| d < w.0) {
                without = Some((d, (i, j)));
            }
        }
    }
    Ok(SeparationReport {
        p: basis.p(),
        n,
        primes: basis.primes().to_vec(),
        min_distance: without.map(|w| w.0),
        min_distance_with_perron: with.0,
        pair: without.map_or(with.1, |w| w.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{find_seed_j, modpoly::reduced_for, FieldCtx};
    use crate::graph::{build_graph, symmetrize};

    fn ops(p: u64, ells: &[u64]) -> Vec<SymmetricOperator> {
        let ctx = FieldCtx::new(p).unwrap();
        let seed = find_seed_j(&ctx);
        ells.iter()
            .map(|&l| symmetrize(&build_graph(&ctx, &reduced_for(l, p).unwrap(), seed).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn window_examples() {
        // ln 1009 ≈ 6.917, 4 ln 1009 ≈ 27.67
        assert_eq!(tag_window(1009).unwrap(), [7, 11, 13, 17, 19, 23]);
        // ln 13 ≈ 2.565, 4 ln 13 ≈ 10.26
        assert_eq!(tag_window(13).unwrap(), [3, 5, 7]);
        assert_eq!(tag_window(5).unwrap(), [2, 3]);
        assert_eq!(tag_window(2), Err(Error::EmptyWindow));
    }

    #[test]
    fn p13_single_eigenvector() {
        let basis = joint_diagonalize(&ops(13, &[2]), 1).unwrap();
        assert_eq!(basis.len(), 1);
        assert!(fabs(basis.amplitude(0, 0) - 1.0) < 1e-15);
        assert!(fabs(basis.raw_eigenvalues(0)[0] - 3.0) < 1e-12);
        assert!(fabs(basis.tag(0)[0] - 3.0 / sqrt(2.0)) < 1e-12);
        let sup = supnorm_report(&basis);
        assert_eq!(sup.supnorm, 1.0);
        assert!(fabs(sup.ratio - sqrt(13.0) / log(13.0)) < 1e-12);
        assert_eq!(fourth_moment_stat(&basis).statistic, 0.0);
        assert_eq!(separation_report(&basis), Err(Error::SingleEigenvector));
    }

    #[test]
    fn duplicated_operator_gives_equal_tags() {
        let family = ops(101, &[2, 3]);
        let doubled = [family[0].clone(), family[1].clone(), family[0].clone()];
        let basis = joint_diagonalize(&doubled, 5).unwrap();
        for i in 0..basis.len() {
            let t = basis.tag(i);
            assert!(fabs(t[0] - t[2]) < 1e-12);
        }
    }

    #[test]
    fn p101_residuals() {
        let family = ops(101, &[2, 3, 5]);
        let basis = joint_diagonalize(&family, 7).unwrap();
        assert_eq!(basis.len(), 9);
        assert!(basis.orthonormality_error() <= ORTHO_TOL);
        for (k, op) in family.iter().enumerate() {
            assert!(basis.residual(op, k) <= RESIDUAL_TOL);
        }
        let perron = basis.perron_index();
        assert!(fabs(basis.raw_eigenvalues(perron)[0] - 3.0) < 1e-9);
        for i in (0..basis.len()).filter(|&i| i != perron) {
            for t in basis.tag(i) {
                assert!(fabs(t) <= 2.0 + 1e-8);
            }
        }
        let sup = supnorm_report(&basis);
        assert!(sup.supnorm >= 1.0 / sqrt(9.0));
    }

    #[test]
    fn tags_agree_across_seeds() {
        let family = ops(337, &[2, 3, 5]);
        let reference = joint_diagonalize(&family, 0).unwrap();
        for seed in 1..5 {
            let other = joint_diagonalize(&family, seed).unwrap();
            for i in 0..reference.len() {
                for (a, b) in reference.tag(i).iter().zip(other.tag(i)) {
                    assert!(fabs(a - b) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn non_commuting_rejected() {
        let family = ops(101, &[2]);
        let a = &family[0];
        let mut m = a.matrix().clone();
        m[(0, 1)] += 0.5;
        m[(1, 0)] += 0.5;
        let perturbed = SymmetricOperator::from_matrix(a.p(), 3, m, a.weights().to_vec(), a.orientation()).unwrap();
        assert!(matches!(joint_diagonalize(&[a.clone(), perturbed], 0), Err(Error::NotCommuting(_))));
    }

    #[test]
    fn synthetic_duplicate_columns_have_zero_separation() {
        let v = Matrix::from_fn(3, 3, |i, j| if j == 2 { if i == 0 { 1.0 } else { 0.0 } } else if i == j { 1.0 } else { 0.0 });
        let basis = JointEigenbasis::from_parts(101, vec![2], v, vec![vec![1.0], vec![0.5], vec![1.0]], 1).unwrap();
        assert_eq!(separation_report(&basis).unwrap().min_distance, Some(0.0));
    }
}
