//! Incremental convex hull in ℝ^d (2 ≤ d ≤ 6) with face output and a
//! stability certificate for facets.
//!
//! The hull is built beneath-beyond over simplicial facets and merged into
//! polytopal facets afterwards. Facets store the supporting functional in
//! the "inward" convention: ψ(x) ≥ K for every input point, with equality
//! on the facet. Facets with K > 0 therefore separate the origin from the
//! hull, which is what the lightcone-orbit pipeline selects on.
//!
//! Orientation predicates whose determinant falls below 10·tol of the
//! Hadamard scale are recomputed in double-double arithmetic: orbit points
//! near the lightcone produce nearly degenerate simplices and plain f64
//! signs are not trustworthy there.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Double-double arithmetic for robust determinant signs.
mod dd {
    #[derive(Clone, Copy, Debug)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    #[inline]
    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

        /// Exact difference of two f64 values.
        pub fn diff(a: f64, b: f64) -> Dd {
            let (s, e) = two_sum(a, -b);
            Dd { hi: s, lo: e }
        }

        pub fn add(self, other: Dd) -> Dd {
            let (s1, s2) = two_sum(self.hi, other.hi);
            let s2 = s2 + self.lo + other.lo;
            let (hi, lo) = quick_two_sum(s1, s2);
            Dd { hi, lo }
        }

        pub fn sub(self, other: Dd) -> Dd {
            self.add(Dd {
                hi: -other.hi,
                lo: -other.lo,
            })
        }

        pub fn mul(self, other: Dd) -> Dd {
            let (p1, p2) = two_prod(self.hi, other.hi);
            let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
            let (hi, lo) = quick_two_sum(p1, p2);
            Dd { hi, lo }
        }

        pub fn value(self) -> f64 {
            self.hi + self.lo
        }
    }

    /// Determinant by Laplace expansion along the first row (n ≤ 5).
    pub fn det(m: &[Vec<Dd>]) -> Dd {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut acc = Dd::ZERO;
        for j in 0..n {
            let minor: Vec<Vec<Dd>> = (1..n)
                .map(|i| {
                    (0..n)
                        .filter(|&c| c != j)
                        .map(|c| m[i][c])
                        .collect::<Vec<_>>()
                })
                .collect();
            let term = m[0][j].mul(det(&minor));
            acc = if j % 2 == 0 { acc.add(term) } else { acc.sub(term) };
        }
        acc
    }
}

/// One facet of the hull boundary.
///
/// `normal` is unit length with `normal · x ≥ offset` for every input
/// point and equality (within tolerance) on the facet's vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HullFacet {
    #[serde(with = "crate::vecjson::dvector")]
    pub normal: DVector<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
    pub neighbors: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HullComplex {
    pub dim: usize,
    #[serde(with = "crate::vecjson::dvector_list")]
    pub points: Vec<DVector<f64>>,
    pub facets: Vec<HullFacet>,
}

impl HullComplex {
    /// ψ(x) − K for facet `f`; nonnegative (within tolerance) on inputs.
    pub fn plane_eval(&self, f: usize, x: &DVector<f64>) -> f64 {
        self.facets[f].normal.dot(x) - self.facets[f].offset
    }

    /// Check the defining inequalities on a point set.
    pub fn validate_against(&self, points: &[DVector<f64>], tol: f64) -> bool {
        self.facets.iter().all(|f| {
            points
                .iter()
                .all(|p| f.normal.dot(p) - f.offset >= -tol * (1.0 + p.norm()))
        })
    }
}

/// Certificate that a facet cannot be cut by any orbit point of norm
/// greater than `r_used`.
///
/// `margin` is the sampled minimum of ψ over unit boundary directions;
/// `r_req = K / (0.9 · margin)` folds in a 10% safety factor for sampling
/// gaps. Any cone point x with |x| > r_used then has ψ(x) ≥ 0.9·margin·|x|
/// > K, so it lies strictly on the hull side of the facet's plane.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StableFacetCertificate {
    pub facet: usize,
    pub margin: f64,
    pub r_req: f64,
    pub r_used: f64,
    pub stable: bool,
}

/// Safety factor applied to the sampled boundary margin.
pub const CERTIFICATE_SAFETY: f64 = 0.9;

/// Emit a certificate per facet. Facets with K ≤ 0 or nonpositive sampled
/// margin are marked unstable.
pub fn stable_facets(
    hull: &HullComplex,
    lightcone_samples: &[DVector<f64>],
    r_used: f64,
) -> Result<Vec<StableFacetCertificate>> {
    if lightcone_samples.is_empty() {
        return Err(Error::InvalidArgument(
            "certificate requires at least one boundary sample".into(),
        ));
    }
    let units: Vec<DVector<f64>> = lightcone_samples
        .iter()
        .filter(|u| u.norm() > 0.0)
        .map(|u| u / u.norm())
        .collect();
    let mut out = Vec::with_capacity(hull.facets.len());
    for (i, f) in hull.facets.iter().enumerate() {
        let margin = units
            .iter()
            .map(|u| f.normal.dot(u))
            .fold(f64::INFINITY, f64::min);
        let (r_req, stable) = if margin > 0.0 && f.offset > 0.0 {
            let r_req = f.offset / (CERTIFICATE_SAFETY * margin);
            (r_req, r_used >= r_req)
        } else {
            (f64::INFINITY, false)
        };
        out.push(StableFacetCertificate {
            facet: i,
            margin,
            r_req,
            r_used,
            stable,
        });
    }
    Ok(out)
}

const MERGE_ANGLE: f64 = 1e-6;

struct SimpFacet {
    verts: Vec<usize>,
    normal: DVector<f64>,
    offset: f64,
    neighbors: Vec<usize>,
    alive: bool,
}

struct Builder<'a> {
    dim: usize,
    pts: &'a [DVector<f64>],
    tol: f64,
    facets: Vec<SimpFacet>,
    interior: DVector<f64>,
}

fn det_f64(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut acc = 0.0;
            for j in 0..n {
                let minor: Vec<Vec<f64>> = (1..n)
                    .map(|i| {
                        (0..n)
                            .filter(|&c| c != j)
                            .map(|c| m[i][c])
                            .collect::<Vec<_>>()
                    })
                    .collect();
                let term = m[0][j] * det_f64(&minor);
                acc += if j % 2 == 0 { term } else { -term };
            }
            acc
        }
    }
}

/// Generalized cross product: vector orthogonal to the d−1 rows, with
/// cofactor signs.
fn cofactor_normal(rows: &[&DVector<f64>], dim: usize) -> DVector<f64> {
    let mut n = DVector::zeros(dim);
    for i in 0..dim {
        let minor: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| (0..dim).filter(|&c| c != i).map(|c| r[c]).collect())
            .collect();
        let d = det_f64(&minor);
        n[i] = if i % 2 == 0 { d } else { -d };
    }
    n
}

impl<'a> Builder<'a> {
    /// Plane evaluation ψ_out·q − b with the unit outward normal,
    /// recomputed in double-double when the f64 value is within 10·tol of
    /// the decision boundary.
    ///
    /// Identity used: det[(v₁−q); …; (v_d−q)] = n_cof·(v₁−q) where n_cof
    /// is the cofactor normal of the difference rows, so the precise
    /// evaluation is ∓det/|n_cof| with the sign aligning n_cof to the
    /// cached outward normal.
    fn robust_eval(&self, f: &SimpFacet, q: &DVector<f64>) -> f64 {
        let fast = f.normal.dot(q) - f.offset;
        let band = 10.0 * self.tol * (1.0 + q.norm());
        if fast.abs() > band {
            return fast;
        }
        let diffs: Vec<DVector<f64>> = f.verts[1..]
            .iter()
            .map(|&v| &self.pts[v] - &self.pts[f.verts[0]])
            .collect();
        let refs: Vec<&DVector<f64>> = diffs.iter().collect();
        let n_cof = cofactor_normal(&refs, self.dim);
        let nn = n_cof.norm();
        if nn == 0.0 {
            return fast;
        }
        let sign = if f.normal.dot(&n_cof) >= 0.0 { 1.0 } else { -1.0 };
        let rows: Vec<Vec<dd::Dd>> = f
            .verts
            .iter()
            .map(|&v| {
                (0..self.dim)
                    .map(|c| dd::Dd::diff(self.pts[v][c], q[c]))
                    .collect()
            })
            .collect();
        let det = dd::det(&rows).value();
        -sign * det / nn
    }

    fn visible(&self, f: &SimpFacet, q: &DVector<f64>) -> bool {
        self.robust_eval(f, q) > self.tol * (1.0 + q.norm())
    }

    /// Plane through `verts`, oriented outward (interior point below).
    fn make_facet(&self, verts: Vec<usize>) -> Result<SimpFacet> {
        let diffs: Vec<DVector<f64>> = verts[1..]
            .iter()
            .map(|&v| &self.pts[v] - &self.pts[verts[0]])
            .collect();
        let refs: Vec<&DVector<f64>> = diffs.iter().collect();
        let mut n = cofactor_normal(&refs, self.dim);
        let scale: f64 = diffs.iter().map(|d| d.norm()).product();
        if n.norm() <= 1e-12 * scale.max(1e-300) {
            // Nearly degenerate simplex: retry the cofactors in dd.
            let mut hi = DVector::zeros(self.dim);
            for i in 0..self.dim {
                let minor: Vec<Vec<dd::Dd>> = diffs
                    .iter()
                    .map(|r| {
                        (0..self.dim)
                            .filter(|&c| c != i)
                            .map(|c| dd::Dd::diff(r[c], 0.0))
                            .collect()
                    })
                    .collect();
                let d = dd::det(&minor).value();
                hi[i] = if i % 2 == 0 { d } else { -d };
            }
            n = hi;
        }
        let norm = n.norm();
        if norm == 0.0 {
            return Err(Error::Degenerate(
                "facet vertices are affinely dependent".into(),
            ));
        }
        let mut normal = n / norm;
        let mut offset = normal.dot(&self.pts[verts[0]]);
        if normal.dot(&self.interior) - offset > 0.0 {
            normal = -normal;
            offset = -offset;
        }
        Ok(SimpFacet {
            verts,
            normal,
            offset,
            neighbors: Vec::new(),
            alive: true,
        })
    }
}

/// Pick d+1 affinely independent seed points, greedily maximizing the
/// distance to the affine span of the points chosen so far.
fn initial_simplex(pts: &[DVector<f64>], dim: usize, tol: f64) -> Result<Vec<usize>> {
    let first = (0..pts.len())
        .min_by(|&a, &b| {
            pts[a]
                .iter()
                .partial_cmp(pts[b].iter())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    while chosen.len() < dim + 1 {
        let origin = &pts[chosen[0]];
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in pts.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut r = p - origin;
            for b in &basis {
                let c = r.dot(b);
                r -= b * c;
            }
            let norm = r.norm();
            if best.map_or(true, |(bn, _)| norm > bn) {
                best = Some((norm, i));
            }
        }
        match best {
            Some((norm, i)) if norm > tol * (1.0 + pts[i].norm()) => {
                let origin = &pts[chosen[0]];
                let mut r = &pts[i] - origin;
                for b in &basis {
                    let c = r.dot(b);
                    r -= b * c;
                }
                basis.push(r.clone() / r.norm());
                chosen.push(i);
            }
            _ => {
                return Err(Error::NotFullDimensional {
                    found: chosen.len().saturating_sub(1),
                    expected: dim,
                })
            }
        }
    }
    Ok(chosen)
}

/// Convex hull of `points` with tolerance `tol`. Coplanar adjacent facets
/// are merged into polytopal facets; non-extreme coplanar points are not
/// reported as vertices. Facet vertex indices refer to the input slice
/// (first occurrence for duplicated points).
pub fn incremental_hull(points: &[DVector<f64>], tol: f64) -> Result<HullComplex> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points".into()));
    }
    let dim = points[0].len();
    if dim < 2 || dim > 6 {
        return Err(Error::Unsupported(format!("hull dimension {}", dim)));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("mixed point dimensions".into()));
    }
    if points.len() < dim + 1 {
        return Err(Error::NotFullDimensional {
            found: 0,
            expected: dim,
        });
    }

    // Deduplicate within tolerance; keep first occurrences.
    let mut unique: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dup = unique
            .iter()
            .any(|&j| (p - &points[j]).amax() <= tol * (1.0 + p.norm()));
        if !dup {
            unique.push(i);
        }
    }
    let pts: Vec<DVector<f64>> = unique.iter().map(|&i| points[i].clone()).collect();

    let seed = initial_simplex(&pts, dim, tol)?;
    let interior: DVector<f64> =
        seed.iter().map(|&i| &pts[i]).fold(DVector::zeros(dim), |a, p| a + p) / (dim + 1) as f64;

    let mut b = Builder {
        dim,
        pts: &pts,
        tol,
        facets: Vec::new(),
        interior,
    };

    // Initial simplex boundary: facet k omits seed[k].
    for k in 0..=dim {
        let verts: Vec<usize> = seed
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, &v)| v)
            .collect();
        let mut f = b.make_facet(verts)?;
        // Neighbor opposite vertex seed[j] (j ≠ k) is facet j.
        f.neighbors = (0..=dim).filter(|&j| j != k).collect();
        // Align neighbor order with vertex order: f.verts[i] corresponds to
        // seed index != k in order; neighbor opposite f.verts[i] is the
        // facet omitting that seed vertex.
        b.facets.push(f);
    }

    let seed_set: Vec<usize> = seed.clone();
    for (idx, p) in pts.iter().enumerate() {
        if seed_set.contains(&idx) {
            continue;
        }
        insert_point(&mut b, idx, p)?;
    }

    finalize(&b, &unique, points, tol)
}

fn insert_point(b: &mut Builder, idx: usize, p: &DVector<f64>) -> Result<()> {
    let old_len = b.facets.len();
    let mut visible_mask = vec![false; old_len];
    let mut any = false;
    for (i, f) in b.facets.iter().enumerate() {
        if f.alive && b.visible(f, p) {
            visible_mask[i] = true;
            any = true;
        }
    }
    if !any {
        return Ok(());
    }
    let visible_set: Vec<usize> = (0..old_len).filter(|&i| visible_mask[i]).collect();

    // Horizon ridges: (ridge vertex set, invisible facet behind it).
    let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
    for &fi in &visible_set {
        for k in 0..b.facets[fi].verts.len() {
            let g = b.facets[fi].neighbors[k];
            if g < old_len && visible_mask[g] {
                continue;
            }
            let ridge: Vec<usize> = b.facets[fi]
                .verts
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, &v)| v)
                .collect();
            // New facet ridge ∪ {p}; p goes last so ridge is opposite p.
            let mut verts = ridge.clone();
            verts.push(idx);
            let mut nf = b.make_facet(verts)?;
            nf.neighbors = vec![usize::MAX; b.dim];
            // Slot opposite p (= last vertex) is the old invisible facet.
            nf.neighbors[b.dim - 1] = g;
            let nf_id = b.facets.len();
            // Rewire g: the slot that pointed at fi now points at nf.
            for slot in b.facets[g].neighbors.iter_mut() {
                if *slot == fi {
                    *slot = nf_id;
                }
            }
            b.facets.push(nf);

            // Ridges among new facets: drop one ridge vertex, add p.
            for drop in 0..ridge.len() {
                let mut key: Vec<usize> = ridge
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, &v)| v)
                    .collect();
                key.sort_unstable();
                match ridge_map.remove(&key) {
                    None => {
                        ridge_map.insert(key, (nf_id, drop));
                    }
                    Some((other, other_slot)) => {
                        b.facets[nf_id].neighbors[drop] = other;
                        b.facets[other].neighbors[other_slot] = nf_id;
                    }
                }
            }
        }
    }
    if !ridge_map.is_empty() {
        return Err(Error::Degenerate(format!(
            "open horizon while inserting point {} ({} unmatched ridges)",
            idx,
            ridge_map.len()
        )));
    }
    for fi in visible_set {
        b.facets[fi].alive = false;
    }
    Ok(())
}

fn finalize(
    b: &Builder,
    unique: &[usize],
    original: &[DVector<f64>],
    tol: f64,
) -> Result<HullComplex> {
    let alive: Vec<usize> = (0..b.facets.len()).filter(|&i| b.facets[i].alive).collect();
    let index_of: HashMap<usize, usize> = alive.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    // Union-find over coplanar adjacent facets.
    let mut parent: Vec<usize> = (0..alive.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for (k, &i) in alive.iter().enumerate() {
        let fi = &b.facets[i];
        for &nb in &fi.neighbors {
            if let Some(&kn) = index_of.get(&nb) {
                let fj = &b.facets[nb];
                let same_dir = (&fi.normal - &fj.normal).norm() <= MERGE_ANGLE;
                let same_off = (fi.offset - fj.offset).abs() <= tol * (1.0 + fi.offset.abs());
                if same_dir && same_off {
                    let (a, c) = (find(&mut parent, k), find(&mut parent, kn));
                    if a != c {
                        parent[a] = c;
                    }
                }
            }
        }
    }

    let root_of: Vec<usize> = (0..alive.len())
        .map(|k| find(&mut parent, k))
        .collect();
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for k in 0..alive.len() {
        groups.entry(root_of[k]).or_default().push(k);
    }
    let mut roots: Vec<usize> = groups.keys().copied().collect();
    roots.sort_unstable();
    let group_id: HashMap<usize, usize> = roots.iter().enumerate().map(|(g, &r)| (r, g)).collect();

    let mut facets: Vec<HullFacet> = Vec::with_capacity(roots.len());
    for &r in &roots {
        let members = &groups[&r];
        // Average plane over members, then the vertex union.
        let mut normal = DVector::zeros(b.dim);
        for &k in members {
            normal += &b.facets[alive[k]].normal;
        }
        let normal = normal.clone() / normal.norm();
        let mut verts: Vec<usize> = members
            .iter()
            .flat_map(|&k| b.facets[alive[k]].verts.iter().copied())
            .collect();
        verts.sort_unstable();
        verts.dedup();
        // Non-simplicial merged facets may carry non-extreme coplanar
        // points; prune to the extreme points of the facet polytope.
        if members.len() > 1 {
            verts = extreme_subset(&verts, b.pts, &normal, b.dim, tol)?;
        }
        let offset = verts.iter().map(|&v| normal.dot(&b.pts[v])).sum::<f64>() / verts.len() as f64;
        let mut neighbors: Vec<usize> = members
            .iter()
            .flat_map(|&k| b.facets[alive[k]].neighbors.iter().copied())
            .filter_map(|nb| index_of.get(&nb).copied())
            .map(|kn| group_id[&root_of[kn]])
            .collect();
        let own = group_id[&r];
        neighbors.retain(|&g| g != own);
        neighbors.sort_unstable();
        neighbors.dedup();
        // Spec convention: inward functional, ψ(x) ≥ K on all points.
        facets.push(HullFacet {
            normal: -normal,
            offset: -offset,
            vertices: verts,
            neighbors,
        });
    }

    // Map vertex indices back to the caller's indexing and sort facets for
    // deterministic output.
    for f in facets.iter_mut() {
        for v in f.vertices.iter_mut() {
            *v = unique[*v];
        }
        f.vertices.sort_unstable();
    }
    let mut order: Vec<usize> = (0..facets.len()).collect();
    order.sort_by(|&a, &b| facets[a].vertices.cmp(&facets[b].vertices));
    let renum: HashMap<usize, usize> = order.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let mut sorted: Vec<HullFacet> = order.iter().map(|&i| facets[i].clone()).collect();
    for f in sorted.iter_mut() {
        for nb in f.neighbors.iter_mut() {
            *nb = renum[nb];
        }
        f.neighbors.sort_unstable();
    }

    Ok(HullComplex {
        dim: b.dim,
        points: original.to_vec(),
        facets: sorted,
    })
}

/// Triangulate the convex hull of `points` by the placing rule: fan from
/// the lowest-index hull vertex onto the recursively triangulated facets
/// not containing it. Returns simplices as index tuples (size = affine
/// dimension + 1). Non-extreme input points do not appear.
pub fn triangulate_polytope(points: &[DVector<f64>], tol: f64) -> Result<Vec<Vec<usize>>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to triangulate".into()));
    }
    let ambient = points[0].len();
    // Affine dimension and orthonormal basis via Gram-Schmidt.
    let origin = &points[0];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for p in points.iter() {
        let mut r = p - origin;
        for b in &basis {
            let c = r.dot(b);
            r -= b * c;
        }
        if r.norm() > tol * (1.0 + p.norm()) {
            basis.push(r.clone() / r.norm());
        }
        if basis.len() == ambient {
            break;
        }
    }
    let k = basis.len();
    if k == 0 {
        return Ok(vec![vec![0]]);
    }
    let projected: Vec<DVector<f64>> = points
        .iter()
        .map(|p| DVector::from_iterator(k, basis.iter().map(|b| b.dot(&(p - origin)))))
        .collect();
    triangulate_projected(&projected, tol)
}

fn triangulate_projected(pts: &[DVector<f64>], tol: f64) -> Result<Vec<Vec<usize>>> {
    let k = pts[0].len();
    if k == 1 {
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        idx.sort_by(|&a, &b| pts[a][0].partial_cmp(&pts[b][0]).unwrap());
        let mut seg = vec![idx[0], *idx.last().unwrap()];
        seg.sort_unstable();
        return Ok(vec![seg]);
    }
    if pts.len() == k + 1 {
        return Ok(vec![(0..pts.len()).collect()]);
    }
    let hull = incremental_hull(pts, tol)?;
    let mut verts: Vec<usize> = hull
        .facets
        .iter()
        .flat_map(|f| f.vertices.iter().copied())
        .collect();
    verts.sort_unstable();
    verts.dedup();
    let anchor = verts[0];
    let mut simplices: Vec<Vec<usize>> = Vec::new();
    for f in &hull.facets {
        if f.vertices.contains(&anchor) {
            continue;
        }
        let face_pts: Vec<DVector<f64>> = f.vertices.iter().map(|&i| pts[i].clone()).collect();
        for sub in triangulate_polytope(&face_pts, tol)? {
            let mut s: Vec<usize> = sub.iter().map(|&j| f.vertices[j]).collect();
            s.push(anchor);
            s.sort_unstable();
            simplices.push(s);
        }
    }
    simplices.sort();
    simplices.dedup();
    Ok(simplices)
}

/// Extreme points of a coplanar point set: project into the facet plane
/// and recurse into a (d−1)-dimensional hull.
fn extreme_subset(
    verts: &[usize],
    pts: &[DVector<f64>],
    normal: &DVector<f64>,
    dim: usize,
    tol: f64,
) -> Result<Vec<usize>> {
    if verts.len() <= dim {
        return Ok(verts.to_vec());
    }
    // Orthonormal basis of the plane.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        let mut r = e.clone() - normal * normal[i];
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
    let origin = pts[verts[0]].clone();
    let projected: Vec<DVector<f64>> = verts
        .iter()
        .map(|&v| {
            DVector::from_iterator(dim - 1, basis.iter().map(|b| b.dot(&(&pts[v] - &origin))))
        })
        .collect();
    if dim - 1 == 1 {
        // Segment: keep the two extremes.
        let mut idx: Vec<usize> = (0..verts.len()).collect();
        idx.sort_by(|&a, &c| projected[a][0].partial_cmp(&projected[c][0]).unwrap());
        let mut pair = vec![verts[idx[0]], verts[*idx.last().unwrap()]];
        pair.sort_unstable();
        return Ok(pair);
    }
    let sub = incremental_hull(&projected, tol)?;
    let mut keep: Vec<usize> = sub
        .facets
        .iter()
        .flat_map(|f| f.vertices.iter().copied())
        .collect();
    keep.sort_unstable();
    keep.dedup();
    Ok(keep.into_iter().map(|k| verts[k]).collect())
}
