//! Projective linear algebra over ℝ^{n+1}.
//!
//! Matrices act on points of ℝPⁿ through their lifts; linear functionals
//! live in the dual space and transform by the inverse transpose. Spectral
//! analysis here is tolerance-aware: parabolic elements are defective, and
//! the eigenvalues of a perturbed Jordan block of size k scatter like
//! ε^(1/k), so eigenvalues are clustered first and each cluster is
//! represented by its mean (which is accurate to O(ε) because traces are).

use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerance::ToleranceConfig;

pub type C64 = Complex<f64>;

/// Dense square matrix with a lazily cached determinant.
#[derive(Clone, Debug)]
pub struct SquareMatrix {
    data: DMatrix<f64>,
    det: OnceLock<f64>,
}

impl SquareMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "not square: {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.nrows() < 2 {
            return Err(Error::InvalidMatrix("dimension must be at least 2".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("entries must be finite".into()));
        }
        Ok(Self {
            data,
            det: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("ragged row lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
            det: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.data[(i, j)]).collect())
            .collect()
    }

    pub fn det(&self) -> f64 {
        *self.det.get_or_init(|| self.data.determinant())
    }

    pub fn is_invertible(&self, tol: f64) -> bool {
        self.det().abs() > tol
    }

    pub fn inverse(&self, tol: f64) -> Result<SquareMatrix> {
        if !self.is_invertible(tol) {
            return Err(Error::NotInvertible { det: self.det() });
        }
        let inv = self
            .data
            .clone()
            .try_inverse()
            .ok_or(Error::NotInvertible { det: self.det() })?;
        SquareMatrix::new(inv)
    }

    pub fn transpose(&self) -> SquareMatrix {
        SquareMatrix {
            data: self.data.transpose(),
            det: self.det.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Result<SquareMatrix> {
        SquareMatrix::new(&self.data * s)
    }

    pub fn compose(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            data: &self.data * &other.data,
            det: OnceLock::new(),
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.data * v
    }

    pub fn frobenius(&self) -> f64 {
        self.data.norm()
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        (&self.data - &other.data).abs().max()
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &SquareMatrix, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }

    /// Equality up to a global sign (projective equality of the actions).
    pub fn approx_eq_projective(&self, other: &SquareMatrix, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let d = self.max_abs_diff(other);
        let s = (&self.data + &other.data).abs().max();
        d.min(s) <= tol
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SquareMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A point of ℝPⁿ stored by its canonical representative: scaled so the
/// largest-|coordinate| equals ±1 and the first nonzero coordinate is
/// positive. This makes hashing and deterministic ordering possible
/// without choosing a metric on projective space.
#[derive(Clone, Debug)]
pub struct ProjPoint {
    rep: DVector<f64>,
}

/// Entries of a canonical representative smaller than this are treated as
/// zero when fixing the overall sign.
const CANONICAL_ZERO: f64 = 1e-13;

impl ProjPoint {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::ZeroVector);
        }
        let max = v.amax();
        if max == 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut rep = v / max;
        for x in rep.iter() {
            if x.abs() > CANONICAL_ZERO {
                if *x < 0.0 {
                    rep = -rep;
                }
                break;
            }
        }
        Ok(Self { rep })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    /// Canonical representative (max-|coordinate| is ±1).
    pub fn coords(&self) -> &DVector<f64> {
        &self.rep
    }

    pub fn lift_scaled(&self, s: f64) -> DVector<f64> {
        &self.rep * s
    }

    pub fn transform(&self, g: &SquareMatrix) -> Result<ProjPoint> {
        ProjPoint::new(g.apply(&self.rep))
    }

    /// Angle between the two lines through the origin, in [0, π/2].
    ///
    /// acos loses half the significant digits near zero; prefer
    /// [`ProjPoint::distance_to`] when comparing against tight tolerances.
    pub fn angle_to(&self, other: &ProjPoint) -> f64 {
        let c = self.rep.dot(&other.rep).abs() / (self.rep.norm() * other.rep.norm());
        c.clamp(0.0, 1.0).acos()
    }

    /// Chordal distance between the lines: min over signs of the distance
    /// of unit representatives, = 2·sin(θ/2). Agrees with the angle to
    /// third order and is numerically exact near zero.
    pub fn distance_to(&self, other: &ProjPoint) -> f64 {
        let u = &self.rep / self.rep.norm();
        let v = &other.rep / other.rep.norm();
        (&u - &v).norm().min((&u + &v).norm())
    }

    /// Representatives agree within `tol` after sign alignment.
    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let d = (&self.rep - &other.rep).abs().max();
        let s = (&self.rep + &other.rep).abs().max();
        d.min(s) <= tol
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rep.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProjPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        ProjPoint::from_slice(&coords).map_err(serde::de::Error::custom)
    }
}

/// A linear functional on ℝ^{n+1}. The scale is kept as given: dual
/// lightcone points carry a meaningful scale, so normalization is opt-in
/// via [`DualFunctional::unit`].
#[derive(Clone, Debug)]
pub struct DualFunctional {
    covector: DVector<f64>,
}

impl DualFunctional {
    pub fn new(covector: DVector<f64>) -> Result<Self> {
        if covector.amax() == 0.0 || covector.iter().any(|x| !x.is_finite()) {
            return Err(Error::ZeroVector);
        }
        Ok(Self { covector })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// Standard basis covector e_i*.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        Self { covector: v }
    }

    pub fn dim(&self) -> usize {
        self.covector.len()
    }

    pub fn covector(&self) -> &DVector<f64> {
        &self.covector
    }

    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        self.covector.dot(v)
    }

    pub fn norm(&self) -> f64 {
        self.covector.norm()
    }

    pub fn unit(&self) -> DualFunctional {
        DualFunctional {
            covector: &self.covector / self.covector.norm(),
        }
    }

    pub fn scaled(&self, s: f64) -> DualFunctional {
        DualFunctional {
            covector: &self.covector * s,
        }
    }

    /// Same projective class (proportional within `tol` after unit scaling).
    pub fn approx_parallel(&self, other: &DualFunctional, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let a = self.unit().covector;
        let b = other.unit().covector;
        let d = (&a - &b).abs().max();
        let s = (&a + &b).abs().max();
        d.min(s) <= tol
    }
}

impl Serialize for DualFunctional {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.covector.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DualFunctional {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        DualFunctional::from_slice(&coords).map_err(serde::de::Error::custom)
    }
}

/// Dual action γ*(φ) = φ ∘ γ⁻¹, i.e. the inverse transpose applied to the
/// covector. Preserves the pairing: ⟨γ*φ, γv⟩ = ⟨φ, v⟩. The scale of φ is
/// kept (no renormalization).
pub fn dual_action(
    g: &SquareMatrix,
    phi: &DualFunctional,
    cfg: &ToleranceConfig,
) -> Result<DualFunctional> {
    let inv = g.inverse(cfg.eps_equal)?;
    DualFunctional::new(inv.data().transpose() * phi.covector())
}

/// Cartan involution θ(A) = (A⁻¹)ᵗ. It is an involutive automorphism and
/// realizes the dual action on functionals.
pub fn cartan_involution(g: &SquareMatrix, cfg: &ToleranceConfig) -> Result<SquareMatrix> {
    Ok(g.inverse(cfg.eps_equal)?.transpose())
}

/// Rescale to determinant of modulus one: g / |det g|^{1/dim}.
pub fn unit_determinant_lift(g: &SquareMatrix, cfg: &ToleranceConfig) -> Result<SquareMatrix> {
    let d = g.det();
    if d.abs() <= cfg.eps_equal {
        return Err(Error::NotInvertible { det: d });
    }
    let s = d.abs().powf(1.0 / g.dim() as f64);
    g.scaled(1.0 / s)
}

/// One eigenvalue cluster of a square matrix.
///
/// `value` is the cluster mean (accurate to O(machine ε) even for
/// defective eigenvalues), `algebraic` the cluster size, `geometric` the
/// kernel dimension of (g − λI), and `eigenvectors` a real orthonormal
/// kernel basis when λ is real.
#[derive(Clone, Debug)]
pub struct EigenClass {
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
    pub eigenvectors: Vec<DVector<f64>>,
}

impl EigenClass {
    pub fn is_real(&self, tol: f64) -> bool {
        self.value.im.abs() <= tol
    }
}

/// Clustering radius used to group numerically split eigenvalues of a
/// defective matrix. Jordan blocks of size ≤ 3 (the cusp-parabolic case)
/// scatter like (ε‖g‖)^{1/3}, hence the cube root.
pub fn eigen_cluster_radius(g: &SquareMatrix, cfg: &ToleranceConfig) -> f64 {
    let scale = g.frobenius().max(1.0) * g.dim() as f64;
    cfg.eps_eig.max(10.0 * (f64::EPSILON * scale).cbrt())
}

/// Eigenvalue clusters sorted by modulus (descending), with algebraic and
/// geometric multiplicities. Defective matrices are the interesting case
/// here, so geometric multiplicities come from a rank-revealing SVD of
/// (g − λI) with tolerance `eps_eig`.
pub fn spectral(g: &SquareMatrix, cfg: &ToleranceConfig) -> Vec<EigenClass> {
    let dim = g.dim();
    let eigs: Vec<C64> = g.data().clone().complex_eigenvalues().iter().copied().collect();
    let radius = eigen_cluster_radius(g, cfg);

    // Single-linkage clustering of the eigenvalue list.
    let mut cluster_of: Vec<usize> = (0..eigs.len()).collect();
    for i in 0..eigs.len() {
        for j in (i + 1)..eigs.len() {
            if (eigs[i] - eigs[j]).norm() <= radius {
                let (a, b) = (cluster_of[i], cluster_of[j]);
                if a != b {
                    let m = a.min(b);
                    for c in cluster_of.iter_mut() {
                        if *c == a || *c == b {
                            *c = m;
                        }
                    }
                }
            }
        }
    }

    let mut classes: Vec<EigenClass> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for root in cluster_of.iter().copied() {
        if seen.contains(&root) {
            continue;
        }
        seen.push(root);
        let members: Vec<C64> = eigs
            .iter()
            .zip(cluster_of.iter())
            .filter(|(_, c)| **c == root)
            .map(|(e, _)| *e)
            .collect();
        let mean = members.iter().sum::<C64>() / C64::new(members.len() as f64, 0.0);
        let real = mean.im.abs() <= radius;
        let value = if real { C64::new(mean.re, 0.0) } else { mean };

        let (geometric, eigenvectors) = if real {
            let shifted = g.data() - DMatrix::identity(dim, dim) * value.re;
            let kernel = kernel_basis(&shifted, cfg.eps_eig);
            (kernel.len(), kernel)
        } else {
            (complex_geometric_multiplicity(g.data(), value, cfg.eps_eig), Vec::new())
        };

        classes.push(EigenClass {
            value,
            algebraic: members.len(),
            geometric: geometric.max(1).min(members.len()),
            eigenvectors,
        });
    }

    classes.sort_by(|a, b| {
        b.value
            .norm()
            .partial_cmp(&a.value.norm())
            .unwrap()
            .then(b.value.re.partial_cmp(&a.value.re).unwrap())
            .then(b.value.im.partial_cmp(&a.value.im).unwrap())
    });
    classes
}

/// Orthonormal kernel basis of `m` with relative rank tolerance `tol`.
pub fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let smax = svd.singular_values.max().max(1.0);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol * smax {
            basis.push(v_t.row(i).transpose());
        }
    }
    basis
}

/// Numerical rank with relative tolerance.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max().max(1.0);
    svd.singular_values.iter().filter(|s| **s > tol * smax).count()
}

/// dim_ℂ ker(g − λI) for complex λ via the real 2n×2n embedding
/// [[g−aI, bI], [−bI, g−aI]].
fn complex_geometric_multiplicity(g: &DMatrix<f64>, lambda: C64, tol: f64) -> usize {
    let n = g.nrows();
    let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let shifted = g - DMatrix::identity(n, n) * lambda.re;
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = shifted[(i, j)];
            big[(n + i, n + j)] = shifted[(i, j)];
        }
        big[(i, n + i)] = lambda.im;
        big[(n + i, i)] = -lambda.im;
    }
    (2 * n - numerical_rank(&big, tol)) / 2
}

/// Lorentz Gram matrix diag(−1, …, −1, +1) in dimension `dim`: the form is
/// positive inside the upper cone and the last coordinate is timelike.
pub fn lorentz_gram(dim: usize) -> DMatrix<f64> {
    let mut q = DMatrix::identity(dim, dim) * -1.0;
    q[(dim - 1, dim - 1)] = 1.0;
    q
}

/// Lorentz quadratic form q(x) = x_m² − x_1² − … − x_{m−1}².
pub fn lorentz_form(x: &DVector<f64>) -> f64 {
    let m = x.len();
    let mut q = x[m - 1] * x[m - 1];
    for i in 0..m - 1 {
        q -= x[i] * x[i];
    }
    q
}

/// Embed a real 2×2 matrix of unit determinant modulus into SO(2,1): the
/// action S ↦ g S gᵀ on symmetric 2×2 matrices, written in coordinates
/// (u, v, w) with S = [[w+u, v], [v, w−u]], where det S = w² − u² − v² is
/// the Lorentz form and positive-definite S fill the upper cone.
pub fn lorentz_embedding_real(g: &[[f64; 2]; 2], cfg: &ToleranceConfig) -> Result<SquareMatrix> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if (det.abs() - 1.0).abs() > cfg.eps_equal.max(1e-12) {
        return Err(Error::NonUnitDeterminant { det });
    }
    // Images of the basis symmetric matrices for u, v, w.
    let basis = [
        [[1.0, 0.0], [0.0, -1.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[1.0, 0.0], [0.0, 1.0]],
    ];
    let mut out = DMatrix::<f64>::zeros(3, 3);
    for (col, s) in basis.iter().enumerate() {
        // h = g s gᵀ
        let mut gs = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                gs[i][j] = g[i][0] * s[0][j] + g[i][1] * s[1][j];
            }
        }
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = gs[i][0] * g[j][0] + gs[i][1] * g[j][1];
            }
        }
        out[(0, col)] = (h[0][0] - h[1][1]) / 2.0;
        out[(1, col)] = h[0][1];
        out[(2, col)] = (h[0][0] + h[1][1]) / 2.0;
    }
    let m = SquareMatrix::new(out)?;
    debug_assert!(preserves_lorentz_form(&m) < 1e-9 * m.frobenius().max(1.0));
    Ok(m)
}

/// Embed a complex 2×2 matrix of unit determinant modulus into SO(3,1):
/// the action H ↦ g H g* on Hermitian 2×2 matrices, in coordinates
/// (u, b, c, w) with H = [[w+u, b+ci], [b−ci, w−u]]; det H = w²−u²−b²−c².
pub fn lorentz_embedding_complex(
    g: &[[C64; 2]; 2],
    cfg: &ToleranceConfig,
) -> Result<SquareMatrix> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if (det.norm() - 1.0).abs() > cfg.eps_equal.max(1e-12) {
        return Err(Error::NonUnitDeterminant { det: det.norm() });
    }
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let basis = [
        [[one, zero], [zero, -one]], // u
        [[zero, one], [one, zero]],  // b
        [[zero, i], [-i, zero]],     // c
        [[one, zero], [zero, one]],  // w
    ];
    let mut out = DMatrix::<f64>::zeros(4, 4);
    for (col, s) in basis.iter().enumerate() {
        let mut gs = [[zero; 2]; 2];
        for r in 0..2 {
            for cidx in 0..2 {
                gs[r][cidx] = g[r][0] * s[0][cidx] + g[r][1] * s[1][cidx];
            }
        }
        // h = g s g*
        let mut h = [[zero; 2]; 2];
        for r in 0..2 {
            for cidx in 0..2 {
                h[r][cidx] = gs[r][0] * g[cidx][0].conj() + gs[r][1] * g[cidx][1].conj();
            }
        }
        out[(0, col)] = (h[0][0].re - h[1][1].re) / 2.0;
        out[(1, col)] = h[0][1].re;
        out[(2, col)] = h[0][1].im;
        out[(3, col)] = (h[0][0].re + h[1][1].re) / 2.0;
    }
    let m = SquareMatrix::new(out)?;
    debug_assert!(preserves_lorentz_form(&m) < 1e-9 * m.frobenius().max(1.0));
    Ok(m)
}

/// Residual ‖gᵀ Q g − Q‖ for the Lorentz Gram matrix Q.
pub fn preserves_lorentz_form(g: &SquareMatrix) -> f64 {
    let q = lorentz_gram(g.dim());
    (g.data().transpose() * &q * g.data() - &q).norm()
}
