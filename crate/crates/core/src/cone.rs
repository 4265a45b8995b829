//! Properly convex cones, their duals, characteristic functions,
//! horofunctions and horoballs.
//!
//! A properly convex open cone 𝒞 ⊂ ℝ^{n+1} carries the characteristic
//! function
//!
//! ```text
//! f(x) = ∫_{𝒞*} exp(−ψ(x)) dψ
//! ```
//!
//! integrated over the open dual cone with the standard coordinate volume
//! form. f is positive, convex, real-analytic, blows up at ∂𝒞, and is
//! homogeneous of degree −(n+1): f(tx) = t^{−(n+1)} f(x), as the orthant
//! closed form f(x) = ∏ 1/xᵢ shows. Its level set S = f⁻¹(1) (the Vinberg
//! hypersurface) is preserved by every unit-determinant linear map of the
//! cone and substitutes for the hyperboloid model: for the Lorentz cone
//! the level sets are exactly the hyperboloids of the Lorentz form.
//!
//! A dual-boundary functional φ defines the horofunction h_φ(p) = φ(lift)
//! where lift is the representative of p on S; its sublevel sets are the
//! horoballs. Different choices of volume form rescale f globally, which
//! cancels in horofunction ratios but shifts absolute horoball levels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{incremental_hull, triangulate_polytope};
use crate::linalg::{lorentz_form, DualFunctional, ProjPoint};
use crate::tolerance::ToleranceConfig;

/// Value of the characteristic function, with its gradient when requested.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharFunctionValue {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<f64>>,
}

/// Sublevel set ℬ(φ, t) of a horofunction. The functional keeps its scale:
/// rescaling φ rescales every level accordingly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Horoball {
    pub phi: DualFunctional,
    pub level: f64,
}

impl Horoball {
    pub fn new(phi: DualFunctional, level: f64) -> Result<Self> {
        if level <= 0.0 {
            return Err(Error::InvalidArgument(
                "horoball level must be positive".into(),
            ));
        }
        Ok(Self { phi, level })
    }
}

/// Simplicial cone in the dual, spanned by `dim` covectors; contributes
/// |det| / ∏ ψᵢ(x) to the characteristic function.
#[derive(Clone, Debug)]
struct DualSimplex {
    covectors: Vec<DVector<f64>>,
    absdet: f64,
}

/// Shared data of the polyhedral variants: extreme rays (unit), inward
/// facet functionals (unit, ≥ 0 on the cone), and a triangulation of the
/// dual cone for evaluating f exactly.
#[derive(Clone, Debug)]
pub struct PolyhedralData {
    dim: usize,
    rays: Vec<DVector<f64>>,
    facets: Vec<DVector<f64>>,
    dual_simplices: Vec<DualSimplex>,
}

impl PolyhedralData {
    pub fn rays(&self) -> &[DVector<f64>] {
        &self.rays
    }

    pub fn facet_functionals(&self) -> &[DVector<f64>] {
        &self.facets
    }
}

/// A properly convex open cone in ℝ^{n+1}.
#[derive(Clone, Debug)]
pub enum ConeModel {
    /// Upper cone of the Lorentz form x_m² − x_1² − … − x_{m−1}².
    Lorentz { dim: usize, constant: f64 },
    /// Positive orthant.
    Orthant { dim: usize },
    /// Cone over finitely many extreme rays.
    Polyhedral(PolyhedralData),
    /// Polyhedral approximation of an invariant cone, spanned by sampled
    /// boundary directions of a group orbit.
    OrbitHull(PolyhedralData),
}

/// π^{(m−1)/2} Γ(m) / Γ((m+1)/2): the characteristic constant of the
/// Lorentz cone in ℝ^m, from the exact radial reduction of the defining
/// integral (the radial factor is Γ(m), the cross-section a unit ball).
pub fn lorentz_constant(dim: usize) -> f64 {
    let m = dim as f64;
    std::f64::consts::PI.powf((m - 1.0) / 2.0) * gamma_integer(dim) / gamma_half(dim + 1)
}

/// Γ(n) for integer n ≥ 1.
fn gamma_integer(n: usize) -> f64 {
    (1..n).map(|k| k as f64).product()
}

/// Γ(n/2) for integer n ≥ 1.
fn gamma_half(n: usize) -> f64 {
    if n % 2 == 0 {
        gamma_integer(n / 2)
    } else {
        // Γ(k + 1/2) = √π · ∏_{j<k} (j + 1/2)
        let k = (n - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for j in 0..k {
            v *= j as f64 + 0.5;
        }
        v
    }
}

impl ConeModel {
    pub fn lorentz(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("cone dimension must be ≥ 2".into()));
        }
        Ok(ConeModel::Lorentz {
            dim,
            constant: lorentz_constant(dim),
        })
    }

    pub fn orthant(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("cone dimension must be ≥ 2".into()));
        }
        Ok(ConeModel::Orthant { dim })
    }

    pub fn polyhedral(rays: Vec<DVector<f64>>, cfg: &ToleranceConfig) -> Result<Self> {
        Ok(ConeModel::Polyhedral(polyhedral_data(rays, cfg)?))
    }

    pub fn orbit_hull(rays: Vec<DVector<f64>>, cfg: &ToleranceConfig) -> Result<Self> {
        Ok(ConeModel::OrbitHull(polyhedral_data(rays, cfg)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeModel::Lorentz { dim, .. } | ConeModel::Orthant { dim } => *dim,
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => d.dim,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            ConeModel::Lorentz { .. } => "lorentz",
            ConeModel::Orthant { .. } => "orthant",
            ConeModel::Polyhedral(_) => "polyhedral",
            ConeModel::OrbitHull(_) => "orbit_hull",
        }
    }

    pub fn is_lorentz(&self) -> bool {
        matches!(self, ConeModel::Lorentz { .. })
    }

    /// Scale-invariant membership margin: positive inside, ≈ 0 on the
    /// boundary, negative outside. Equal to the margin of x/|x|.
    pub fn margin(&self, x: &DVector<f64>) -> f64 {
        let norm = x.norm();
        if norm == 0.0 {
            return -1.0;
        }
        match self {
            ConeModel::Lorentz { dim, .. } => {
                let m = *dim;
                let spatial = x.rows(0, m - 1).norm();
                (x[m - 1] - spatial) / norm
            }
            ConeModel::Orthant { .. } => x.iter().fold(f64::INFINITY, |a, &v| a.min(v)) / norm,
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => {
                d.facets
                    .iter()
                    .map(|psi| psi.dot(x))
                    .fold(f64::INFINITY, f64::min)
                    / norm
            }
        }
    }

    pub fn contains_interior(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.margin(x) > tol
    }

    /// Membership margin of a functional in the (closed) dual cone:
    /// min over extreme rays of φ(r)/|φ|. ≈ 0 exactly when ker φ touches
    /// the lightcone, i.e. when φ defines a horofunction rather than a
    /// proper function.
    pub fn dual_margin(&self, phi: &DualFunctional) -> f64 {
        let c = phi.covector();
        let norm = c.norm();
        match self {
            // Self-dual in the standard pairing.
            ConeModel::Lorentz { dim, .. } => {
                let m = *dim;
                let spatial = c.rows(0, m - 1).norm();
                (c[m - 1] - spatial) / norm
            }
            ConeModel::Orthant { .. } => c.iter().fold(f64::INFINITY, |a, &v| a.min(v)) / norm,
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => {
                d.rays
                    .iter()
                    .map(|r| c.dot(r))
                    .fold(f64::INFINITY, f64::min)
                    / norm
            }
        }
    }

    /// The dual cone: functionals strictly positive on the cone closure
    /// minus the origin. Lorentz and orthant cones are self-dual in their
    /// standard coordinates; a polyhedral cone dualizes to the cone over
    /// its facet functionals.
    pub fn dual_cone(&self, cfg: &ToleranceConfig) -> Result<ConeModel> {
        match self {
            ConeModel::Lorentz { dim, .. } => ConeModel::lorentz(*dim),
            ConeModel::Orthant { dim } => ConeModel::orthant(*dim),
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => {
                ConeModel::polyhedral(d.facets.clone(), cfg)
            }
        }
    }

    /// Characteristic function f(x) = ∫_{𝒞*} e^{−ψ(x)} dψ.
    ///
    /// Orthant: ∏ 1/xᵢ exactly. Lorentz: c_m·q(x)^{−m/2} with the cached
    /// constant. Polyhedral: sum of |det ψ|/∏ψᵢ(x) over a triangulation of
    /// the dual cone into simplicial cones (exact evaluation).
    pub fn char_function(
        &self,
        x: &DVector<f64>,
        cfg: &ToleranceConfig,
    ) -> Result<CharFunctionValue> {
        self.char_impl(x, cfg, false)
    }

    pub fn char_function_with_gradient(
        &self,
        x: &DVector<f64>,
        cfg: &ToleranceConfig,
    ) -> Result<CharFunctionValue> {
        self.char_impl(x, cfg, true)
    }

    fn char_impl(
        &self,
        x: &DVector<f64>,
        cfg: &ToleranceConfig,
        grad: bool,
    ) -> Result<CharFunctionValue> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        let margin = self.margin(x);
        if margin <= cfg.eps_geom {
            return Err(Error::OutsideCone { margin });
        }
        match self {
            ConeModel::Orthant { .. } => {
                let value = x.iter().fold(1.0, |a, &v| a / v);
                let gradient = grad.then(|| x.iter().map(|&v| -value / v).collect());
                Ok(CharFunctionValue { value, gradient })
            }
            ConeModel::Lorentz { dim, constant } => {
                let m = *dim as f64;
                let q = lorentz_form(x);
                let value = constant * q.powf(-m / 2.0);
                let gradient = grad.then(|| {
                    let factor = constant * (-m / 2.0) * q.powf(-m / 2.0 - 1.0);
                    (0..*dim)
                        .map(|i| {
                            let dq = if i + 1 == *dim { 2.0 * x[i] } else { -2.0 * x[i] };
                            factor * dq
                        })
                        .collect()
                });
                Ok(CharFunctionValue { value, gradient })
            }
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => {
                let mut value = 0.0;
                let mut gvec = DVector::zeros(d.dim);
                for s in &d.dual_simplices {
                    let mut term = s.absdet;
                    for psi in &s.covectors {
                        term /= psi.dot(x);
                    }
                    value += term;
                    if grad {
                        for psi in &s.covectors {
                            gvec.axpy(-term / psi.dot(x), psi, 1.0);
                        }
                    }
                }
                let gradient = grad.then(|| gvec.iter().copied().collect());
                Ok(CharFunctionValue { value, gradient })
            }
        }
    }

    /// The representative of a projective point on the Vinberg hypersurface
    /// S = f⁻¹(1): the positive multiple s·x̂ with f(s·x̂) = 1, where
    /// s = f(x̂)^{1/(n+1)} by homogeneity. Independent of the chosen lift.
    pub fn vinberg_lift(&self, p: &ProjPoint, cfg: &ToleranceConfig) -> Result<DVector<f64>> {
        // The canonical representative may point out the bottom of the
        // cone; try both signs.
        let rep = p.coords().clone();
        if self.contains_interior(&rep, cfg.eps_geom) {
            self.vinberg_lift_vector(&rep, cfg)
        } else {
            self.vinberg_lift_vector(&(-rep), cfg)
        }
    }

    /// Vinberg lift of an explicit cone vector.
    pub fn vinberg_lift_vector(
        &self,
        x: &DVector<f64>,
        cfg: &ToleranceConfig,
    ) -> Result<DVector<f64>> {
        let f = self.char_function(x, cfg)?.value;
        let s = f.powf(1.0 / self.dim() as f64);
        Ok(x * s)
    }

    /// Horofunction h_φ(p) = φ(π⁻¹ p) = f(x̂)^{1/(n+1)} · φ(x̂).
    ///
    /// φ should lie on the boundary of the dual cone (check with
    /// [`ConeModel::dual_margin`]); strictly interior functionals give a
    /// proper function rather than a horofunction but evaluate fine.
    pub fn horofunction(
        &self,
        phi: &DualFunctional,
        p: &ProjPoint,
        cfg: &ToleranceConfig,
    ) -> Result<f64> {
        let lift = self.vinberg_lift(p, cfg)?;
        Ok(phi.eval(&lift))
    }

    /// Membership in the horoball ℬ(φ, t) = h_φ⁻¹(0, t]; the boundary is
    /// inclusive within eps_geom.
    pub fn horoball_contains(
        &self,
        hb: &Horoball,
        p: &ProjPoint,
        cfg: &ToleranceConfig,
    ) -> Result<bool> {
        Ok(self.horofunction(&hb.phi, p, cfg)? <= hb.level + cfg.eps_geom)
    }

    /// The supporting functional at a boundary direction: φ with φ(v) = 0
    /// and φ ≥ 0 on the cone closure, unit-normalized. Unique for the
    /// Lorentz cone; for polyhedral cones v must lie in a facet interior.
    pub fn supporting_functional(
        &self,
        v: &DVector<f64>,
        cfg: &ToleranceConfig,
    ) -> Result<DualFunctional> {
        let margin = self.margin(v);
        if margin.abs() > cfg.eps_geom {
            return Err(Error::NotOnBoundary { margin });
        }
        match self {
            ConeModel::Lorentz { dim, .. } => {
                let m = *dim;
                let mut c = DVector::zeros(m);
                for i in 0..m - 1 {
                    c[i] = -v[i];
                }
                c[m - 1] = v[m - 1];
                Ok(DualFunctional::new(c)?.unit())
            }
            ConeModel::Orthant { dim } => {
                let scale = v.norm();
                let zeros: Vec<usize> = (0..*dim)
                    .filter(|&i| v[i].abs() <= cfg.eps_geom * scale)
                    .collect();
                match zeros.len() {
                    1 => Ok(DualFunctional::basis(*dim, zeros[0])),
                    0 => Err(Error::NotOnBoundary { margin }),
                    _ => Err(Error::SupportNotUnique),
                }
            }
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => {
                let scale = v.norm();
                let touching: Vec<usize> = (0..d.facets.len())
                    .filter(|&j| d.facets[j].dot(v).abs() <= cfg.eps_geom * scale)
                    .collect();
                match touching.len() {
                    1 => Ok(DualFunctional::new(d.facets[touching[0]].clone())?),
                    0 => Err(Error::NotOnBoundary { margin }),
                    _ => Err(Error::SupportNotUnique),
                }
            }
        }
    }
}

/// Build the polyhedral cone data: validate proper convexity, compute the
/// facet functionals from the hull of {0} ∪ rays (facets through 0 are
/// exactly the supporting hyperplanes of the cone), and triangulate the
/// dual cone for characteristic-function evaluation.
fn polyhedral_data(rays: Vec<DVector<f64>>, cfg: &ToleranceConfig) -> Result<PolyhedralData> {
    if rays.is_empty() {
        return Err(Error::InvalidArgument("no rays".into()));
    }
    let dim = rays[0].len();
    if rays.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidArgument("mixed ray dimensions".into()));
    }
    let mut unit_rays: Vec<DVector<f64>> = Vec::new();
    for r in &rays {
        let n = r.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let u = r / n;
        if !unit_rays
            .iter()
            .any(|e: &DVector<f64>| (e - &u).amax() <= cfg.eps_equal)
        {
            unit_rays.push(u);
        }
    }

    // Full-dimensionality.
    let mut mat = DMatrix::zeros(unit_rays.len(), dim);
    for (i, r) in unit_rays.iter().enumerate() {
        mat.row_mut(i).copy_from(&r.transpose());
    }
    let rank = crate::linalg::numerical_rank(&mat, cfg.eps_geom);
    if rank < dim {
        return Err(Error::NotFullDimensional {
            found: rank,
            expected: dim,
        });
    }

    // Facets of the cone = hull facets of {0} ∪ rays passing through 0.
    let mut pts = vec![DVector::zeros(dim)];
    pts.extend(unit_rays.iter().cloned());
    let hull = incremental_hull(&pts, cfg.eps_geom)?;
    let mut facets: Vec<DVector<f64>> = Vec::new();
    for f in &hull.facets {
        if f.vertices.contains(&0) {
            // Inward convention means ψ ≥ K = ψ(0) = 0 on the rays already.
            facets.push(f.normal.clone());
        }
    }
    if facets.is_empty() {
        return Err(Error::NotProperlyConvex(
            "origin is not a vertex of the ray hull (cone contains a line)".into(),
        ));
    }
    let mut fmat = DMatrix::zeros(facets.len(), dim);
    for (i, f) in facets.iter().enumerate() {
        fmat.row_mut(i).copy_from(&f.transpose());
    }
    if crate::linalg::numerical_rank(&fmat, cfg.eps_geom) < dim {
        return Err(Error::NotProperlyConvex(
            "facet normals do not span; the cone contains a line".into(),
        ));
    }

    let dual_simplices = triangulate_dual(&unit_rays, &facets, dim, cfg)?;
    Ok(PolyhedralData {
        dim,
        rays: unit_rays,
        facets,
        dual_simplices,
    })
}

/// Triangulate the dual cone (spanned by the facet covectors) into
/// simplicial cones: lift the covectors to the affine slice {ψ(x₀) = 1}
/// for an interior point x₀, triangulate the boundary of the slice
/// polytope, and fan from its barycenter.
fn triangulate_dual(
    rays: &[DVector<f64>],
    facets: &[DVector<f64>],
    dim: usize,
    cfg: &ToleranceConfig,
) -> Result<Vec<DualSimplex>> {
    let x0: DVector<f64> = rays.iter().fold(DVector::zeros(dim), |a, r| a + r);
    let lifted: Vec<DVector<f64>> = facets
        .iter()
        .map(|f| {
            let s = f.dot(&x0);
            debug_assert!(s > 0.0);
            f / s
        })
        .collect();

    let make = |covs: Vec<DVector<f64>>| -> DualSimplex {
        let mut m = DMatrix::zeros(dim, dim);
        for (j, c) in covs.iter().enumerate() {
            m.column_mut(j).copy_from(c);
        }
        DualSimplex {
            absdet: m.determinant().abs(),
            covectors: covs,
        }
    };

    if lifted.len() == dim {
        return Ok(vec![make(lifted)]);
    }

    // Affine coordinates on the slice.
    let axis = &x0 / x0.norm();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        let mut r = e.clone() - &axis * axis[i];
        for b in &basis {
            let c = r.dot(b);
            r -= b * c;
        }
        if r.norm() > 1e-8 {
            basis.push(r.clone() / r.norm());
        }
        if basis.len() == dim - 1 {
            break;
        }
    }
    let center: DVector<f64> =
        lifted.iter().fold(DVector::zeros(dim), |a, f| a + f) / lifted.len() as f64;
    let coords: Vec<DVector<f64>> = lifted
        .iter()
        .map(|f| DVector::from_iterator(dim - 1, basis.iter().map(|b| b.dot(&(f - &center)))))
        .collect();

    let mut simplices = Vec::new();
    if dim - 1 == 1 {
        // Two extreme covectors span the dual cone.
        let mut idx: Vec<usize> = (0..coords.len()).collect();
        idx.sort_by(|&a, &b| coords[a][0].partial_cmp(&coords[b][0]).unwrap());
        simplices.push(make(vec![
            lifted[idx[0]].clone(),
            lifted[*idx.last().unwrap()].clone(),
        ]));
        return Ok(simplices);
    }

    let hull = incremental_hull(&coords, cfg.eps_geom)?;
    for f in &hull.facets {
        let face_pts: Vec<DVector<f64>> = f.vertices.iter().map(|&i| coords[i].clone()).collect();
        for sub in triangulate_polytope(&face_pts, cfg.eps_geom)? {
            let mut covs: Vec<DVector<f64>> = sub
                .iter()
                .map(|&j| lifted[f.vertices[j]].clone())
                .collect();
            covs.push(center.clone());
            let s = make(covs);
            if s.absdet > 1e-14 {
                simplices.push(s);
            }
        }
    }
    Ok(simplices)
}

/// JSON description of a cone model.
#[derive(Serialize, Deserialize)]
struct ConeModelJson {
    variant: String,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rays: Option<Vec<Vec<f64>>>,
}

impl Serialize for ConeModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rays = match self {
            ConeModel::Polyhedral(d) | ConeModel::OrbitHull(d) => Some(
                d.rays
                    .iter()
                    .map(|r| r.iter().copied().collect())
                    .collect(),
            ),
            _ => None,
        };
        ConeModelJson {
            variant: self.variant_name().to_string(),
            dim: self.dim(),
            rays,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConeModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ConeModelJson::deserialize(d)?;
        let cfg = ToleranceConfig::default();
        let build = || -> Result<ConeModel> {
            match j.variant.as_str() {
                "lorentz" => ConeModel::lorentz(j.dim),
                "orthant" => ConeModel::orthant(j.dim),
                "polyhedral" | "orbit_hull" => {
                    let rays = j
                        .rays
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument("missing rays".into()))?
                        .iter()
                        .map(|r| DVector::from_column_slice(r))
                        .collect();
                    if j.variant == "polyhedral" {
                        ConeModel::polyhedral(rays, &cfg)
                    } else {
                        ConeModel::orbit_hull(rays, &cfg)
                    }
                }
                other => Err(Error::InvalidArgument(format!(
                    "unknown cone variant {:?}",
                    other
                ))),
            }
        };
        build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lorentz_embedding_real;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn v(coords: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(coords)
    }

    fn random_lorentz_interior(rng: &mut StdRng, dim: usize) -> DVector<f64> {
        loop {
            let mut x = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            x[dim - 1] = rng.random_range(0.2..2.0);
            let spatial = x.rows(0, dim - 1).norm();
            if x[dim - 1] > spatial + 0.05 {
                return x;
            }
        }
    }

    #[test]
    fn lorentz_constants() {
        assert!((lorentz_constant(3) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((lorentz_constant(4) - 8.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn orthant_char_examples() {
        let cone = ConeModel::orthant(3).unwrap();
        let f = cone.char_function(&v(&[1.0, 1.0, 1.0]), &cfg()).unwrap();
        assert_eq!(f.value, 1.0);
        let f = cone.char_function(&v(&[2.0, 1.0, 1.0]), &cfg()).unwrap();
        assert_eq!(f.value, 0.5);
    }

    #[test]
    fn char_rejects_boundary() {
        let cone = ConeModel::orthant(3).unwrap();
        assert!(matches!(
            cone.char_function(&v(&[1.0, 0.0, 1.0]), &cfg()),
            Err(Error::OutsideCone { .. })
        ));
        let cone = ConeModel::lorentz(3).unwrap();
        assert!(matches!(
            cone.char_function(&v(&[1.0, 0.0, 1.0]), &cfg()),
            Err(Error::OutsideCone { .. })
        ));
    }

    #[test]
    fn orthant_as_polyhedral_matches_closed_form() {
        let rays = vec![
            v(&[1.0, 0.0, 0.0]),
            v(&[0.0, 1.0, 0.0]),
            v(&[0.0, 0.0, 1.0]),
        ];
        let cone = ConeModel::polyhedral(rays, &cfg()).unwrap();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(0.1..3.0));
            let f = cone.char_function(&x, &cfg()).unwrap().value;
            let exact = 1.0 / (x[0] * x[1] * x[2]);
            assert!((f - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn polyhedral_char_is_triangulation_independent() {
        // Square cone: fan triangulation vs. the sum over two simplicial
        // halves of the dual square split along a diagonal.
        let rays = vec![
            v(&[1.0, 0.0, 1.0]),
            v(&[-1.0, 0.0, 1.0]),
            v(&[0.0, 1.0, 1.0]),
            v(&[0.0, -1.0, 1.0]),
        ];
        let cone = ConeModel::polyhedral(rays, &cfg()).unwrap();
        let s = 1.0 / 3.0_f64.sqrt();
        let duals = [
            v(&[-s, -s, s]),
            v(&[-s, s, s]),
            v(&[s, -s, s]),
            v(&[s, s, s]),
        ];
        let split = |a: usize, b: usize, c: usize, x: &DVector<f64>| -> f64 {
            let mut m = DMatrix::zeros(3, 3);
            m.column_mut(0).copy_from(&duals[a]);
            m.column_mut(1).copy_from(&duals[b]);
            m.column_mut(2).copy_from(&duals[c]);
            m.determinant().abs() / (duals[a].dot(x) * duals[b].dot(x) * duals[c].dot(x))
        };
        let mut rng = StdRng::seed_from_u64(32);
        for _ in 0..50 {
            let x = {
                let mut x = DVector::from_fn(3, |_, _| rng.random_range(-0.5..0.5));
                x[2] = rng.random_range(0.8..2.0);
                x
            };
            let f = cone.char_function(&x, &cfg()).unwrap().value;
            let direct = split(0, 1, 2, &x) + split(1, 2, 3, &x);
            assert!(
                (f - direct).abs() <= 1e-10 * direct,
                "fan {} vs split {}",
                f,
                direct
            );
        }
    }

    #[test]
    fn dual_cone_examples() {
        let cfg = cfg();
        // Orthant and Lorentz are self-dual.
        let orth = ConeModel::orthant(3).unwrap();
        assert_eq!(orth.dual_cone(&cfg).unwrap().variant_name(), "orthant");
        let lor = ConeModel::lorentz(3).unwrap();
        assert_eq!(lor.dual_cone(&cfg).unwrap().variant_name(), "lorentz");

        // Square cone: dual rays are the primal facet normals.
        let rays = vec![
            v(&[1.0, 0.0, 1.0]),
            v(&[-1.0, 0.0, 1.0]),
            v(&[0.0, 1.0, 1.0]),
            v(&[0.0, -1.0, 1.0]),
        ];
        let cone = ConeModel::polyhedral(rays, &cfg).unwrap();
        let dual = cone.dual_cone(&cfg).unwrap();
        let expected = [
            v(&[1.0, 1.0, 1.0]),
            v(&[1.0, -1.0, 1.0]),
            v(&[-1.0, 1.0, 1.0]),
            v(&[-1.0, -1.0, 1.0]),
        ];
        if let ConeModel::Polyhedral(d) = &dual {
            assert_eq!(d.rays.len(), 4);
            for e in &expected {
                let e = e / e.norm();
                assert!(
                    d.rays.iter().any(|r| (r - &e).amax() < 1e-9),
                    "missing dual ray {:?}",
                    e.as_slice()
                );
            }
        } else {
            panic!("dual of polyhedral must be polyhedral");
        }

        // Double dual agrees with the primal on random samples.
        let ddual = dual.dual_cone(&cfg).unwrap();
        let mut rng = StdRng::seed_from_u64(33);
        let mut checked = 0;
        for _ in 0..1000 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-1.5..1.5));
            let (a, b) = (cone.margin(&x), ddual.margin(&x));
            if a.abs() < 1e-6 || b.abs() < 1e-6 {
                continue; // within tolerance of the boundary
            }
            assert_eq!(a > 0.0, b > 0.0, "membership mismatch at {:?}", x.as_slice());
            checked += 1;
        }
        assert!(checked > 800);
    }

    #[test]
    fn degenerate_rays_rejected() {
        let rays = vec![
            v(&[1.0, 0.0, 0.0]),
            v(&[0.0, 1.0, 0.0]),
            v(&[1.0, 1.0, 0.0]),
        ];
        assert!(matches!(
            ConeModel::polyhedral(rays, &cfg()),
            Err(Error::NotFullDimensional { .. })
        ));
        // Rays spanning a halfspace contain a line.
        let rays = vec![
            v(&[1.0, 0.0, 0.0]),
            v(&[-1.0, 0.0, 0.0]),
            v(&[0.0, 1.0, 0.0]),
            v(&[0.0, -1.0, 0.0]),
            v(&[0.0, 0.0, 1.0]),
        ];
        assert!(ConeModel::polyhedral(rays, &cfg()).is_err());
    }

    #[test]
    fn vinberg_lift_orthant_examples() {
        let cone = ConeModel::orthant(3).unwrap();
        let lift = cone
            .vinberg_lift(&ProjPoint::from_slice(&[1.0, 1.0, 1.0]).unwrap(), &cfg())
            .unwrap();
        assert!((lift.clone() - v(&[1.0, 1.0, 1.0])).amax() < 1e-12);

        // [8 : 1 : 1]: product of coordinates is 1 on S, so the lift is
        // (8,1,1)/2 = (4, 1/2, 1/2).
        let lift = cone
            .vinberg_lift(&ProjPoint::from_slice(&[8.0, 1.0, 1.0]).unwrap(), &cfg())
            .unwrap();
        assert!((lift.clone() - v(&[4.0, 0.5, 0.5])).amax() < 1e-12);
        let prod: f64 = lift.iter().product();
        assert!((prod - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vinberg_lift_independent_of_representative() {
        let cone = ConeModel::lorentz(3).unwrap();
        let x = v(&[0.3, -0.2, 1.1]);
        let a = cone.vinberg_lift_vector(&x, &cfg()).unwrap();
        let b = cone.vinberg_lift_vector(&(&x * 7.0), &cfg()).unwrap();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn lorentz_level_sets_are_form_level_sets() {
        // S = f⁻¹(1) is a level set of the Lorentz form.
        let cone = ConeModel::lorentz(3).unwrap();
        let mut rng = StdRng::seed_from_u64(34);
        let mut q0 = None;
        for _ in 0..50 {
            let x = random_lorentz_interior(&mut rng, 3);
            let lift = cone.vinberg_lift_vector(&x, &cfg()).unwrap();
            let f = cone.char_function(&lift, &cfg()).unwrap().value;
            assert!((f - 1.0).abs() < 1e-9);
            let q = lorentz_form(&lift);
            match q0 {
                None => q0 = Some(q),
                Some(q0) => assert!((q - q0).abs() < 1e-9 * q0),
            }
        }
    }

    #[test]
    fn orthant_level_set_is_unit_product() {
        let cone = ConeModel::orthant(3).unwrap();
        let mut rng = StdRng::seed_from_u64(35);
        for _ in 0..50 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(0.1..4.0));
            let lift = cone.vinberg_lift_vector(&x, &cfg()).unwrap();
            let prod: f64 = lift.iter().product();
            assert!((prod - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn homogeneity_degree() {
        let cfg = cfg();
        let cones = [
            ConeModel::orthant(3).unwrap(),
            ConeModel::lorentz(3).unwrap(),
            ConeModel::lorentz(4).unwrap(),
            ConeModel::polyhedral(
                vec![
                    v(&[1.0, 0.0, 1.0]),
                    v(&[-1.0, 0.0, 1.0]),
                    v(&[0.0, 1.0, 1.0]),
                    v(&[0.0, -1.0, 1.0]),
                ],
                &cfg,
            )
            .unwrap(),
        ];
        let mut rng = StdRng::seed_from_u64(36);
        for cone in &cones {
            let dim = cone.dim();
            for _ in 0..20 {
                let x = match cone {
                    ConeModel::Orthant { .. } => {
                        DVector::from_fn(dim, |_, _| rng.random_range(0.1..3.0))
                    }
                    _ => random_lorentz_interior(&mut rng, dim),
                };
                if !cone.contains_interior(&x, cfg.eps_geom) {
                    continue;
                }
                let f = cone.char_function(&x, &cfg).unwrap().value;
                for &t in &[0.5, 2.0, 10.0] {
                    let ft = cone.char_function(&(&x * t), &cfg).unwrap().value;
                    let expected = t.powi(-(dim as i32)) * f;
                    assert!(
                        (ft - expected).abs() <= 1e-10 * expected.abs(),
                        "homogeneity violated: {} vs {}",
                        ft,
                        expected
                    );
                }
            }
        }
    }

    #[test]
    fn horofunction_orthant_examples() {
        let cone = ConeModel::orthant(3).unwrap();
        let phi = DualFunctional::basis(3, 0);
        let h = cone
            .horofunction(
                &phi,
                &ProjPoint::from_slice(&[1.0, 1.0, 1.0]).unwrap(),
                &cfg(),
            )
            .unwrap();
        assert!((h - 1.0).abs() < 1e-12);

        // h([t:1:1]) = t^(2/3): monotone surjection onto (0, ∞).
        for &(t, expect) in &[(1e-3, 1e-2), (1.0, 1.0), (1e3, 1e2)] {
            let h = cone
                .horofunction(
                    &phi,
                    &ProjPoint::from_slice(&[t, 1.0, 1.0]).unwrap(),
                    &cfg(),
                )
                .unwrap();
            assert!(
                (h - expect).abs() < 1e-9 * expect,
                "h({}) = {} expected {}",
                t,
                h,
                expect
            );
        }
    }

    #[test]
    fn horofunction_equivariance() {
        let cfgv = cfg();
        let mut rng = StdRng::seed_from_u64(37);

        // Orthant: positive diagonal determinant-one matrices.
        let cone = ConeModel::orthant(3).unwrap();
        for _ in 0..30 {
            let a = rng.random_range(0.3..3.0);
            let b = rng.random_range(0.3..3.0);
            let g = crate::linalg::SquareMatrix::from_rows(&[
                vec![a, 0.0, 0.0],
                vec![0.0, b, 0.0],
                vec![0.0, 0.0, 1.0 / (a * b)],
            ])
            .unwrap();
            let phi = DualFunctional::basis(3, 0);
            let p =
                ProjPoint::new(DVector::from_fn(3, |_, _| rng.random_range(0.2..2.0))).unwrap();
            let lhs = cone
                .horofunction(
                    &crate::linalg::dual_action(&g, &phi, &cfgv).unwrap(),
                    &p.transform(&g).unwrap(),
                    &cfgv,
                )
                .unwrap();
            let rhs = cone.horofunction(&phi, &p, &cfgv).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0));
        }

        // Lorentz: transforms from the SL(2,R) embedding.
        let cone = ConeModel::lorentz(3).unwrap();
        for _ in 0..30 {
            let raw: [[f64; 2]; 2] = [
                [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
            ];
            let det = raw[0][0] * raw[1][1] - raw[0][1] * raw[1][0];
            if det.abs() < 0.1 {
                continue;
            }
            let s = det.abs().sqrt();
            let g = lorentz_embedding_real(
                &[
                    [raw[0][0] / s, raw[0][1] / s],
                    [raw[1][0] / s, raw[1][1] / s],
                ],
                &cfgv,
            )
            .unwrap();
            let phi = cone
                .supporting_functional(&v(&[1.0, 0.0, 1.0]), &cfgv)
                .unwrap();
            let p = ProjPoint::new(random_lorentz_interior(&mut rng, 3)).unwrap();
            let lhs = cone
                .horofunction(
                    &crate::linalg::dual_action(&g, &phi, &cfgv).unwrap(),
                    &p.transform(&g).unwrap(),
                    &cfgv,
                )
                .unwrap();
            let rhs = cone.horofunction(&phi, &p, &cfgv).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0));
        }
    }

    #[test]
    fn horoball_membership_and_convexity() {
        let cfgv = cfg();
        let cone = ConeModel::lorentz(3).unwrap();
        let phi = cone
            .supporting_functional(&v(&[1.0, 0.0, 1.0]), &cfgv)
            .unwrap();
        let p = ProjPoint::from_slice(&[0.1, 0.0, 1.0]).unwrap();
        let h = cone.horofunction(&phi, &p, &cfgv).unwrap();

        // Boundary inclusive; half the level excludes.
        let hb = Horoball::new(phi.clone(), h).unwrap();
        assert!(cone.horoball_contains(&hb, &p, &cfgv).unwrap());
        let hb_half = Horoball::new(phi.clone(), h / 2.0).unwrap();
        assert!(!cone.horoball_contains(&hb_half, &p, &cfgv).unwrap());

        // Midpoints of members stay inside (convexity of sublevel sets).
        let mut rng = StdRng::seed_from_u64(38);
        let hb = Horoball::new(phi.clone(), 0.8).unwrap();
        let mut inside: Vec<ProjPoint> = Vec::new();
        while inside.len() < 100 {
            let x = random_lorentz_interior(&mut rng, 3);
            let p = ProjPoint::new(x).unwrap();
            if cone.horoball_contains(&hb, &p, &cfgv).unwrap() {
                inside.push(p);
            }
        }
        let mut pairs = 0;
        'outer: for i in 0..inside.len() {
            for j in (i + 1)..inside.len() {
                let mid = ProjPoint::new(inside[i].coords() + inside[j].coords()).unwrap();
                assert!(
                    cone.horoball_contains(&hb, &mid, &cfgv).unwrap(),
                    "midpoint escaped the horoball"
                );
                pairs += 1;
                if pairs >= 500 {
                    break 'outer;
                }
            }
        }
        assert!(pairs >= 500);
    }

    #[test]
    fn supporting_functional_examples() {
        let cfgv = cfg();
        let cone = ConeModel::lorentz(3).unwrap();
        let u = v(&[1.0, 0.0, 1.0]);
        let phi = cone.supporting_functional(&u, &cfgv).unwrap();
        // Lorentz pairing with v, oriented nonnegative on the cone.
        let expected = DualFunctional::from_slice(&[-1.0, 0.0, 1.0]).unwrap();
        assert!(phi.approx_parallel(&expected, 1e-12));
        assert!(phi.eval(&u).abs() < 1e-12);
        let mut rng = StdRng::seed_from_u64(39);
        for _ in 0..100 {
            let x = random_lorentz_interior(&mut rng, 3);
            assert!(phi.eval(&x) > 0.0);
        }

        // Orthant facet interior picks the facet normal.
        let cone = ConeModel::orthant(3).unwrap();
        let phi = cone
            .supporting_functional(&v(&[1.0, 1.0, 0.0]), &cfgv)
            .unwrap();
        assert!(phi.approx_parallel(&DualFunctional::basis(3, 2), 1e-12));

        // A ridge direction has no unique support.
        assert!(matches!(
            cone.supporting_functional(&v(&[1.0, 0.0, 0.0]), &cfgv),
            Err(Error::SupportNotUnique)
        ));
    }

    #[test]
    fn simplex_comparison_bound() {
        // Inscribed simplicial cone σ of the Lorentz cone: f_σ ≥ f_Ω on σ.
        let cfgv = cfg();
        let lorentz = ConeModel::lorentz(3).unwrap();
        let rays = vec![
            v(&[1.0, 0.0, 1.0]),
            v(&[-0.5, 0.75_f64.sqrt(), 1.0]),
            v(&[-0.5, -(0.75_f64.sqrt()), 1.0]),
        ];
        let sigma = ConeModel::polyhedral(rays.clone(), &cfgv).unwrap();
        let mut rng = StdRng::seed_from_u64(40);
        let mut checked = 0;
        while checked < 100 {
            let t: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let x: DVector<f64> = rays
                .iter()
                .zip(&t)
                .fold(DVector::zeros(3), |a, (r, &w)| a + r * w);
            if !sigma.contains_interior(&x, cfgv.eps_geom) {
                continue;
            }
            let fs = sigma.char_function(&x, &cfgv).unwrap().value;
            let fl = lorentz.char_function(&x, &cfgv).unwrap().value;
            assert!(fs >= fl * (1.0 - 1e-9), "f_sigma {} < f_lorentz {}", fs, fl);
            checked += 1;
        }
    }

    #[test]
    fn horofunction_decay_along_lightcone() {
        let cfgv = cfg();
        // Lorentz: x̂ + s·v with v ∈ ker φ ∩ lightcone.
        let cone = ConeModel::lorentz(3).unwrap();
        let phi = cone
            .supporting_functional(&v(&[1.0, 0.0, 1.0]), &cfgv)
            .unwrap();
        let mut prev = f64::INFINITY;
        for &s in &[1.0, 1e2, 1e4, 1e6] {
            let x = v(&[s, 0.0, 1.0 + s]);
            let h = cone
                .horofunction(&phi, &ProjPoint::new(x).unwrap(), &cfgv)
                .unwrap();
            assert!(h < prev, "horofunction must decay");
            prev = h;
        }
        assert!(prev < 1e-3, "Lorentz decay at s=1e6: {}", prev);

        // Orthant: v interior to the facet ker(e₃*).
        let cone = ConeModel::orthant(3).unwrap();
        let phi = DualFunctional::basis(3, 2);
        let mut prev = f64::INFINITY;
        for &s in &[1.0, 1e2, 1e4, 1e6] {
            let x = v(&[1.0 + s, 1.0 + s, 1.0]);
            let h = cone
                .horofunction(&phi, &ProjPoint::new(x).unwrap(), &cfgv)
                .unwrap();
            assert!(h < prev);
            prev = h;
        }
        assert!(prev < 1e-3, "orthant decay at s=1e6: {}", prev);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfgv = cfg();
        let cones = [
            ConeModel::orthant(3).unwrap(),
            ConeModel::lorentz(3).unwrap(),
            ConeModel::polyhedral(
                vec![
                    v(&[1.0, 0.0, 1.0]),
                    v(&[-1.0, 0.0, 1.0]),
                    v(&[0.0, 1.0, 1.0]),
                    v(&[0.0, -1.0, 1.0]),
                ],
                &cfgv,
            )
            .unwrap(),
        ];
        let mut rng = StdRng::seed_from_u64(41);
        for cone in &cones {
            let mut checked = 0;
            while checked < 50 {
                let x = match cone {
                    ConeModel::Orthant { .. } => {
                        DVector::from_fn(3, |_, _| rng.random_range(0.3..2.0))
                    }
                    _ => random_lorentz_interior(&mut rng, 3),
                };
                if cone.margin(&x) < 0.05 {
                    continue;
                }
                let g = cone
                    .char_function_with_gradient(&x, &cfgv)
                    .unwrap()
                    .gradient
                    .unwrap();
                let h = 1e-5;
                for i in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fp = cone.char_function(&xp, &cfgv).unwrap().value;
                    let fm = cone.char_function(&xm, &cfgv).unwrap().value;
                    let fd = (fp - fm) / (2.0 * h);
                    assert!(
                        (g[i] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                        "gradient mismatch {} vs {}",
                        g[i],
                        fd
                    );
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn log_char_hessian_is_positive_semidefinite() {
        let cfgv = cfg();
        let cones = [
            ConeModel::orthant(3).unwrap(),
            ConeModel::lorentz(3).unwrap(),
        ];
        let mut rng = StdRng::seed_from_u64(42);
        for cone in &cones {
            let mut checked = 0;
            while checked < 20 {
                let x = match cone {
                    ConeModel::Orthant { .. } => {
                        DVector::from_fn(3, |_, _| rng.random_range(0.5..2.0))
                    }
                    _ => random_lorentz_interior(&mut rng, 3),
                };
                if cone.margin(&x) < 0.1 {
                    continue;
                }
                let h = 1e-4;
                let logf = |y: &DVector<f64>| cone.char_function(y, &cfgv).unwrap().value.ln();
                let mut hess = DMatrix::zeros(3, 3);
                for i in 0..3 {
                    for j in 0..3 {
                        let mut xpp = x.clone();
                        xpp[i] += h;
                        xpp[j] += h;
                        let mut xpm = x.clone();
                        xpm[i] += h;
                        xpm[j] -= h;
                        let mut xmp = x.clone();
                        xmp[i] -= h;
                        xmp[j] += h;
                        let mut xmm = x.clone();
                        xmm[i] -= h;
                        xmm[j] -= h;
                        hess[(i, j)] =
                            (logf(&xpp) - logf(&xpm) - logf(&xmp) + logf(&xmm)) / (4.0 * h * h);
                    }
                }
                let sym = (hess.clone() + hess.transpose()) * 0.5;
                let eig = sym.symmetric_eigen();
                let scale = eig.eigenvalues.amax().max(1.0);
                for ev in eig.eigenvalues.iter() {
                    assert!(
                        *ev > -1e-4 * scale,
                        "log f Hessian not PSD: eigenvalue {}",
                        ev
                    );
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn cone_serde_round_trip() {
        let cfgv = cfg();
        let cones = [
            ConeModel::lorentz(4).unwrap(),
            ConeModel::orthant(3).unwrap(),
            ConeModel::polyhedral(
                vec![
                    v(&[1.0, 0.0, 1.0]),
                    v(&[-1.0, 0.0, 1.0]),
                    v(&[0.0, 1.0, 1.0]),
                    v(&[0.0, -1.0, 1.0]),
                ],
                &cfgv,
            )
            .unwrap(),
        ];
        for cone in &cones {
            let s = serde_json::to_string(cone).unwrap();
            let back: ConeModel = serde_json::from_str(&s).unwrap();
            assert_eq!(back.variant_name(), cone.variant_name());
            assert_eq!(back.dim(), cone.dim());
            let mut rng = StdRng::seed_from_u64(43);
            for _ in 0..50 {
                let x = DVector::from_fn(cone.dim(), |_, _| rng.random_range(-1.5..1.5));
                assert!((cone.margin(&x) - back.margin(&x)).abs() < 1e-9);
            }
        }
    }
}
