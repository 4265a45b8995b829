//! Holonomy representations: word evaluation, breadth-first group
//! enumeration with matrix deduplication, parabolicity tests, fixed-point
//! solving and cusp validation.
//!
//! Words are strings over the generator names; an uppercase letter is the
//! inverse of the lowercase generator. Deduplication compares matrices up
//! to sign (projective equality) so user presentations need not supply
//! relators for the enumeration to collapse correctly.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dual_action, eigen_cluster_radius, kernel_basis, numerical_rank, spectral, unit_determinant_lift,
    DualFunctional, ProjPoint, SquareMatrix,
};
use crate::tolerance::ToleranceConfig;

/// Cusp data: the words generating the cusp subgroup, plus an optional
/// expected fixed point for cross-checking.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CuspSpec {
    pub name: String,
    pub words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_fixed_point: Option<Vec<f64>>,
}

/// A holonomy representation: named generator matrices (inverses are
/// derived), optional relators, and cusp specifications.
///
/// Generators are rescaled to determinant of modulus one on construction;
/// orientation-reversing (det −1) generators are accepted and flagged in
/// cusp validation reports rather than rejected.
#[derive(Clone, Debug)]
pub struct Representation {
    dim: usize,
    names: Vec<char>,
    generators: BTreeMap<char, SquareMatrix>,
    inverses: BTreeMap<char, SquareMatrix>,
    pub relators: Vec<String>,
    pub cusps: Vec<CuspSpec>,
}

#[derive(Serialize, Deserialize)]
struct RepresentationJson {
    dim: usize,
    generators: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    relators: Vec<String>,
    #[serde(default)]
    cusps: Vec<CuspSpec>,
}

impl Representation {
    pub fn new(
        dim: usize,
        generators: Vec<(char, SquareMatrix)>,
        relators: Vec<String>,
        cusps: Vec<CuspSpec>,
        cfg: &ToleranceConfig,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidArgument("no generators".into()));
        }
        let mut gens = BTreeMap::new();
        let mut invs = BTreeMap::new();
        let mut names = Vec::new();
        for (name, g) in generators {
            if !name.is_ascii_lowercase() {
                return Err(Error::InvalidArgument(format!(
                    "generator name {:?} must be a lowercase ascii letter",
                    name
                )));
            }
            if g.dim() != dim {
                return Err(Error::InvalidArgument(format!(
                    "generator {:?} has dimension {} ≠ {}",
                    name,
                    g.dim(),
                    dim
                )));
            }
            let lifted = unit_determinant_lift(&g, cfg)?;
            invs.insert(name, lifted.inverse(cfg.eps_equal)?);
            if gens.insert(name, lifted).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate generator {:?}", name)));
            }
            names.push(name);
        }
        names.sort_unstable();
        let rep = Self {
            dim,
            names,
            generators: gens,
            inverses: invs,
            relators,
            cusps,
        };
        for r in &rep.relators {
            let m = rep.evaluate_word(r)?;
            if !m.approx_eq_projective(&SquareMatrix::identity(dim), cfg.eps_equal.max(1e-9) * m.frobenius().max(1.0)) {
                return Err(Error::InvalidWord {
                    word: r.clone(),
                    reason: "relator does not evaluate to ±identity".into(),
                });
            }
        }
        for c in &rep.cusps {
            if c.words.is_empty() {
                return Err(Error::CuspValidation {
                    cusp: c.name.clone(),
                    reason: "cusp has no generator words".into(),
                });
            }
            for w in &c.words {
                rep.evaluate_word(w)?;
            }
        }
        Ok(rep)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator_names(&self) -> &[char] {
        &self.names
    }

    pub fn generator(&self, name: char) -> Option<&SquareMatrix> {
        self.generators.get(&name)
    }

    /// Matrix of a single letter (uppercase = inverse).
    pub fn letter(&self, letter: char) -> Result<&SquareMatrix> {
        let base = letter.to_ascii_lowercase();
        let table = if letter.is_ascii_uppercase() {
            &self.inverses
        } else {
            &self.generators
        };
        table.get(&base).ok_or_else(|| Error::InvalidWord {
            word: letter.to_string(),
            reason: "unknown generator letter".into(),
        })
    }

    /// Evaluate a word left-to-right. Whitespace is ignored; the empty
    /// word is the identity.
    pub fn evaluate_word(&self, word: &str) -> Result<SquareMatrix> {
        let mut m = SquareMatrix::identity(self.dim);
        for ch in word.chars() {
            if ch.is_whitespace() {
                continue;
            }
            m = m.compose(self.letter(ch)?);
        }
        Ok(m)
    }

    /// Max Frobenius distance between same-named generators.
    pub fn generator_distance(&self, other: &Representation) -> f64 {
        let mut d: f64 = 0.0;
        for (name, g) in &self.generators {
            if let Some(h) = other.generators.get(name) {
                d = d.max(g.max_abs_diff(h));
            } else {
                return f64::INFINITY;
            }
        }
        d
    }
}

impl Serialize for Representation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let generators = self
            .generators
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_rows()))
            .collect();
        RepresentationJson {
            dim: self.dim,
            generators,
            relators: self.relators.clone(),
            cusps: self.cusps.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Representation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = RepresentationJson::deserialize(d)?;
        let mut gens = Vec::new();
        for (name, rows) in &j.generators {
            let mut chars = name.chars();
            let (c, rest) = (chars.next(), chars.next());
            if c.is_none() || rest.is_some() {
                return Err(serde::de::Error::custom(format!(
                    "generator name {:?} must be a single letter",
                    name
                )));
            }
            let m = SquareMatrix::from_rows(rows).map_err(serde::de::Error::custom)?;
            gens.push((c.unwrap(), m));
        }
        Representation::new(j.dim, gens, j.relators, j.cusps, &ToleranceConfig::default())
            .map_err(serde::de::Error::custom)
    }
}

/// Invert a word: reverse it and swap case.
pub fn invert_word(word: &str) -> String {
    word.chars()
        .rev()
        .filter(|c| !c.is_whitespace())
        .map(|c| {
            if c.is_ascii_uppercase() {
                c.to_ascii_lowercase()
            } else {
                c.to_ascii_uppercase()
            }
        })
        .collect()
}

/// Cancel adjacent inverse pairs until stable.
pub fn free_reduce(word: &str) -> String {
    let mut out: Vec<char> = Vec::with_capacity(word.len());
    for c in word.chars().filter(|c| !c.is_whitespace()) {
        if let Some(&last) = out.last() {
            if last != c && last.eq_ignore_ascii_case(&c) {
                out.pop();
                continue;
            }
        }
        out.push(c);
    }
    out.into_iter().collect()
}

/// A group element reached by the enumeration: shortest word found and its
/// matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupElement {
    pub word: String,
    pub matrix: SquareMatrix,
}

/// Hash-bucketed matrix set for tolerance deduplication up to sign.
struct MatrixSet {
    grid: f64,
    tol: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    mats: Vec<DMatrix<f64>>,
}

impl MatrixSet {
    fn new(tol: f64) -> Self {
        Self {
            grid: 1e-4,
            tol,
            buckets: HashMap::new(),
            mats: Vec::new(),
        }
    }

    fn key(&self, m: &DMatrix<f64>) -> (i64, i64) {
        // Trace and Frobenius norm are sign-ambiguous under m ↦ −m; use
        // |trace| so both signs land in the same bucket.
        let t = m.trace().abs() / self.grid;
        let f = m.norm() / self.grid;
        (t.round() as i64, f.round() as i64)
    }

    /// Insert if no sign-aligned member is within tolerance; returns true
    /// when inserted.
    fn insert(&mut self, m: &DMatrix<f64>) -> bool {
        let scale = m.norm().max(1.0);
        let (kt, kf) = self.key(m);
        for dt in -1..=1 {
            for df in -1..=1 {
                if let Some(bucket) = self.buckets.get(&(kt + dt, kf + df)) {
                    for &i in bucket {
                        let o = &self.mats[i];
                        if o.nrows() != m.nrows() {
                            continue;
                        }
                        let d = (o - m).abs().max();
                        let s = (o + m).abs().max();
                        if d.min(s) <= self.tol * scale {
                            return false;
                        }
                    }
                }
            }
        }
        let idx = self.mats.len();
        self.mats.push(m.clone());
        self.buckets.entry((kt, kf)).or_default().push(idx);
        true
    }
}

/// Breadth-first closure of the generators up to `max_word_length`,
/// deduplicated by matrix (up to sign) within eps_equal. Elements whose
/// Frobenius norm exceeds `max_matrix_norm` are pruned: orbit points that
/// far out cannot affect certified facets. The identity is included.
pub fn enumerate_elements(
    rep: &Representation,
    max_word_length: usize,
    max_matrix_norm: Option<f64>,
    cfg: &ToleranceConfig,
) -> Result<Vec<GroupElement>> {
    if max_word_length == 0 {
        return Err(Error::InvalidArgument("max_word_length must be ≥ 1".into()));
    }
    let mut alphabet: Vec<(char, &SquareMatrix)> = Vec::new();
    for name in &rep.names {
        alphabet.push((*name, &rep.generators[name]));
        alphabet.push((name.to_ascii_uppercase(), &rep.inverses[name]));
    }

    let mut set = MatrixSet::new(cfg.eps_equal);
    let identity = SquareMatrix::identity(rep.dim);
    set.insert(identity.data());
    let mut out = vec![GroupElement {
        word: String::new(),
        matrix: identity,
    }];
    let mut frontier: Vec<usize> = vec![0];

    for _ in 0..max_word_length {
        let mut next = Vec::new();
        for &ei in &frontier {
            let (word, matrix) = (out[ei].word.clone(), out[ei].matrix.clone());
            for (letter, gen) in &alphabet {
                let m = matrix.compose(gen);
                if let Some(bound) = max_matrix_norm {
                    if m.frobenius() > bound {
                        continue;
                    }
                }
                if set.insert(m.data()) {
                    let mut w = word.clone();
                    w.push(*letter);
                    next.push(out.len());
                    out.push(GroupElement { word: w, matrix: m });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

/// Parabolic test: every eigenvalue modulus within eps_eig of 1 and the
/// matrix is not semisimple (some cluster has geometric < algebraic
/// multiplicity).
pub fn is_parabolic(g: &SquareMatrix, cfg: &ToleranceConfig) -> bool {
    let classes = spectral(g, cfg);
    let moduli_one = classes
        .iter()
        .all(|c| (c.value.norm() - 1.0).abs() <= cfg.eps_eig);
    let defective = classes.iter().any(|c| c.geometric < c.algebraic);
    moduli_one && defective
}

/// The fixed point of a parabolic element on the boundary: the unique
/// fixed direction inside the generalized eigenspace of the deficient
/// real eigenvalue with the largest Jordan block, computed as the image of
/// Ñ^(k−1) on that subspace.
pub fn parabolic_fixed_point(g: &SquareMatrix, cfg: &ToleranceConfig) -> Result<ProjPoint> {
    if !is_parabolic(g, cfg) {
        return Err(Error::NotParabolic);
    }
    let radius = eigen_cluster_radius(g, cfg);
    let classes = spectral(g, cfg);
    // Deficient real eigenvalues, largest block first.
    let mut best: Option<(usize, f64, usize)> = None; // (block size, |λ−?|, class idx)
    for (i, c) in classes.iter().enumerate() {
        if c.geometric >= c.algebraic || c.value.im.abs() > radius {
            continue;
        }
        let k = largest_jordan_block(g, c.value.re, c.algebraic, cfg);
        if best.map_or(true, |(bk, _, _)| k > bk) {
            best = Some((k, 0.0, i));
        }
    }
    let (k, _, ci) = best.ok_or(Error::FixedDirectionNotUnique)?;
    let lambda = classes[ci].value.re;
    let alg = classes[ci].algebraic;
    let dim = g.dim();

    // Orthonormal basis of the generalized eigenspace ker (g − λI)^alg.
    let shifted = g.data() - DMatrix::identity(dim, dim) * lambda;
    let mut power = DMatrix::identity(dim, dim);
    for _ in 0..alg {
        power = &power * &shifted;
    }
    let gen_basis = kernel_basis(&power, cfg.eps_eig);
    if gen_basis.is_empty() {
        return Err(Error::FixedDirectionNotUnique);
    }
    let m = gen_basis.len();
    let mut b = DMatrix::zeros(dim, m);
    for (j, v) in gen_basis.iter().enumerate() {
        b.column_mut(j).copy_from(v);
    }
    // Restriction Ñ of (g − λI) to the subspace.
    let n_tilde = b.transpose() * &shifted * &b;
    let mut nk = DMatrix::identity(m, m);
    for _ in 0..k.saturating_sub(1) {
        nk = &nk * &n_tilde;
    }
    if numerical_rank(&nk, cfg.eps_eig) != 1 {
        return Err(Error::FixedDirectionNotUnique);
    }
    // Image of Ñ^(k−1): apply to a probe vector.
    let mut fixed = None;
    for probe in 0..=m {
        let w = if probe == 0 {
            DVector::from_element(m, 1.0)
        } else {
            let mut e = DVector::zeros(m);
            e[probe - 1] = 1.0;
            e
        };
        let v = &nk * w;
        if v.norm() > 1e-8 {
            fixed = Some(&b * v);
            break;
        }
    }
    let v = fixed.ok_or(Error::FixedDirectionNotUnique)?;
    let residual = (g.apply(&v) - &v * lambda).norm() / v.norm();
    if residual > 1e-6 * g.frobenius().max(1.0) {
        return Err(Error::FixedDirectionNotUnique);
    }
    ProjPoint::new(v)
}

/// Size of the largest Jordan block of λ via the rank sequence of powers.
fn largest_jordan_block(g: &SquareMatrix, lambda: f64, alg: usize, cfg: &ToleranceConfig) -> usize {
    let dim = g.dim();
    let shifted = g.data() - DMatrix::identity(dim, dim) * lambda;
    let mut prev_rank = dim;
    let mut power = DMatrix::identity(dim, dim);
    let mut k = 0;
    for j in 1..=alg {
        power = &power * &shifted;
        let r = numerical_rank(&power, cfg.eps_eig);
        if prev_rank - r > 0 {
            k = j;
        }
        prev_rank = r;
    }
    k.max(1)
}

/// A common fixed direction of a family of matrices.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub point: ProjPoint,
    /// True when the fixed direction is isolated (1-dimensional solution
    /// space); a representative of a higher-dimensional family otherwise.
    pub isolated: bool,
}

/// All projective classes fixed by every matrix in the list: intersect
/// the real eigenspaces of the first matrix with those of the rest.
/// Returns representatives; `isolated` distinguishes genuine points from
/// positive-dimensional families (e.g. the identity fixes everything).
pub fn common_fixed_points(mats: &[SquareMatrix], cfg: &ToleranceConfig) -> Vec<FixedPoint> {
    if mats.is_empty() {
        return Vec::new();
    }
    let dim = mats[0].dim();
    let eigenspaces = |g: &SquareMatrix| -> Vec<DMatrix<f64>> {
        spectral(g, cfg)
            .iter()
            .filter(|c| c.is_real(eigen_cluster_radius(g, cfg)))
            .filter(|c| !c.eigenvectors.is_empty())
            .map(|c| {
                let mut b = DMatrix::zeros(dim, c.eigenvectors.len());
                for (j, v) in c.eigenvectors.iter().enumerate() {
                    b.column_mut(j).copy_from(v);
                }
                b
            })
            .collect()
    };

    let mut subspaces: Vec<DMatrix<f64>> = eigenspaces(&mats[0]);
    for g in &mats[1..] {
        let spaces = eigenspaces(g);
        let mut next = Vec::new();
        for s in &subspaces {
            for e in &spaces {
                if let Some(i) = intersect_subspaces(s, e, cfg.eps_eig) {
                    next.push(i);
                }
            }
        }
        subspaces = dedup_subspaces(next, cfg.eps_eig);
        if subspaces.is_empty() {
            return Vec::new();
        }
    }

    let mut out = Vec::new();
    for s in &subspaces {
        let point = match ProjPoint::new(s.column(0).into_owned()) {
            Ok(p) => p,
            Err(_) => continue,
        };
        // Confirm the representative really is a common eigenvector.
        let ok = mats.iter().all(|g| {
            let v = point.coords();
            let gv = g.apply(v);
            let lambda = gv.dot(v) / v.dot(v);
            (gv - v * lambda).norm() <= 1e-6 * g.frobenius().max(1.0)
        });
        if ok {
            out.push(FixedPoint {
                point,
                isolated: s.ncols() == 1,
            });
        }
    }
    out
}

/// Intersection of two subspaces given by orthonormal column bases, via
/// principal angles: directions with singular value ≈ 1 of UᵀW.
fn intersect_subspaces(u: &DMatrix<f64>, w: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let m = u.transpose() * w;
    let svd = m.clone().svd(true, false);
    let u_small = svd.u.as_ref().unwrap();
    let mut cols = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if (1.0 - s).abs() <= tol.max(1e-8) {
            cols.push(u * u_small.column(i).into_owned());
        }
    }
    if cols.is_empty() {
        return None;
    }
    let mut b = DMatrix::zeros(u.nrows(), cols.len());
    for (j, c) in cols.iter().enumerate() {
        b.column_mut(j).copy_from(&(c / c.norm()));
    }
    Some(b)
}

fn dedup_subspaces(spaces: Vec<DMatrix<f64>>, tol: f64) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = Vec::new();
    for s in spaces {
        let dup = out.iter().any(|t| {
            if t.ncols() != s.ncols() {
                return false;
            }
            // Same span iff all principal angles vanish.
            let m = t.transpose() * &s;
            let svd = m.svd(false, false);
            svd.singular_values.iter().all(|sv| (1.0 - sv).abs() <= tol.max(1e-8))
        });
        if !dup {
            out.push(s);
        }
    }
    out
}

/// Cusp validation report: parabolicity of the nontrivial elements (C5),
/// the common fixed point (C3), invariance of the supporting functional
/// under the dual action with eigenvalue exactly one (C4/C5).
#[derive(Clone, Debug, Serialize)]
pub struct CuspValidationReport {
    pub cusp: String,
    pub elements_checked: usize,
    /// Words of non-parabolic nontrivial cusp elements (C5 violations).
    pub non_parabolic: Vec<String>,
    pub fixed_point: Option<ProjPoint>,
    pub functional: Option<DualFunctional>,
    pub functional_invariant: bool,
    pub dual_eigenvalue_one: bool,
    /// Generators with negative determinant (orientation-reversing);
    /// accepted, reported for the caller to judge.
    pub orientation_reversing: Vec<String>,
    pub notes: Vec<String>,
    pub passed: bool,
}

/// Depth of the cusp-subgroup enumeration used by validation.
const CUSP_ENUM_DEPTH: usize = 3;

/// Validate a cusp specification against the axioms that are checkable
/// from matrices alone.
pub fn validate_cusp(
    rep: &Representation,
    cusp: &CuspSpec,
    cfg: &ToleranceConfig,
) -> Result<CuspValidationReport> {
    if cusp.words.is_empty() {
        return Err(Error::CuspValidation {
            cusp: cusp.name.clone(),
            reason: "no generator words".into(),
        });
    }
    let mats: Vec<SquareMatrix> = cusp
        .words
        .iter()
        .map(|w| rep.evaluate_word(w))
        .collect::<Result<_>>()?;

    let mut notes = Vec::new();
    let mut orientation_reversing = Vec::new();
    for (w, m) in cusp.words.iter().zip(&mats) {
        if m.det() < 0.0 {
            orientation_reversing.push(w.clone());
        }
    }

    // Enumerate the cusp subgroup shallowly and test parabolicity (C5).
    let sub_rep = Representation::new(
        rep.dim,
        cusp.words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let name = (b'a' + i as u8) as char;
                Ok((name, rep.evaluate_word(w)?))
            })
            .collect::<Result<Vec<_>>>()?,
        Vec::new(),
        Vec::new(),
        cfg,
    )?;
    let elements = enumerate_elements(&sub_rep, CUSP_ENUM_DEPTH, None, cfg)?;
    let identity = SquareMatrix::identity(rep.dim);
    let mut non_parabolic = Vec::new();
    for e in &elements {
        if e.word.is_empty()
            || e.matrix
                .approx_eq_projective(&identity, cfg.eps_equal * e.matrix.frobenius().max(1.0))
        {
            continue;
        }
        if !is_parabolic(&e.matrix, cfg) {
            non_parabolic.push(e.word.clone());
        }
    }
    let elements_checked = elements.len() - 1;

    // C3: a common fixed point.
    let fixed = common_fixed_points(&mats, cfg);
    let fixed_point = fixed
        .iter()
        .find(|f| f.isolated)
        .or(fixed.first())
        .map(|f| f.point.clone());
    if fixed.len() > 1 {
        notes.push(format!("{} common fixed directions found", fixed.len()));
    }

    // C4/C5: the dual-fixed functional with eigenvalue exactly 1.
    let theta: Vec<SquareMatrix> = mats
        .iter()
        .map(|m| crate::linalg::cartan_involution(m, cfg))
        .collect::<Result<_>>()?;
    let dual_fixed = common_fixed_points(&theta, cfg);
    let mut functional = None;
    if let Some(p) = &fixed_point {
        for cand in &dual_fixed {
            let phi = DualFunctional::new(cand.point.coords().clone())?;
            if phi.eval(p.coords()).abs() <= cfg.eps_geom * phi.norm() * p.coords().norm() {
                functional = Some(phi);
                break;
            }
        }
    }

    let mut functional_invariant = false;
    let mut dual_eigenvalue_one = false;
    if let Some(phi) = &functional {
        functional_invariant = mats.iter().all(|m| {
            dual_action(m, phi, cfg)
                .map(|img| img.approx_parallel(phi, cfg.eps_geom))
                .unwrap_or(false)
        });
        dual_eigenvalue_one = mats.iter().all(|m| {
            dual_action(m, phi, cfg)
                .map(|img| {
                    (img.covector() - phi.covector()).norm() <= cfg.eps_geom * phi.norm().max(1.0)
                })
                .unwrap_or(false)
        });
    } else {
        notes.push("no supporting functional vanishing on the fixed point".into());
    }

    let passed = non_parabolic.is_empty()
        && fixed_point.is_some()
        && functional.is_some()
        && functional_invariant
        && dual_eigenvalue_one;

    Ok(CuspValidationReport {
        cusp: cusp.name.clone(),
        elements_checked,
        non_parabolic,
        fixed_point,
        functional,
        functional_invariant,
        dual_eigenvalue_one,
        orientation_reversing,
        notes,
        passed,
    })
}

/// An orbit point with the word that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitPoint {
    #[serde(with = "crate::vecjson::dvector")]
    pub vector: DVector<f64>,
    pub word: String,
}

/// Apply every element to `p`, deduplicating within eps_equal. Because
/// elements are sorted by word length, the first (shortest) word for each
/// point is retained.
pub fn orbit(
    p: &DVector<f64>,
    elements: &[GroupElement],
    cfg: &ToleranceConfig,
) -> Result<Vec<OrbitPoint>> {
    if p.amax() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut out: Vec<OrbitPoint> = Vec::new();
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let cell = 1e-5;
    for e in elements {
        let v = e.matrix.apply(p);
        let scale = v.norm().max(1.0);
        let key: Vec<i64> = v.iter().map(|x| (x / (cell * scale)).round() as i64).collect();
        let mut dup = false;
        'probe: for delta in neighbor_offsets(v.len()) {
            let k: Vec<i64> = key.iter().zip(&delta).map(|(a, b)| a + b).collect();
            if let Some(bucket) = grid.get(&k) {
                for &i in bucket {
                    if (&out[i].vector - &v).amax() <= cfg.eps_equal * scale {
                        dup = true;
                        break 'probe;
                    }
                }
            }
        }
        if !dup {
            grid.entry(key).or_default().push(out.len());
            out.push(OrbitPoint {
                vector: v,
                word: e.word.clone(),
            });
        }
    }
    Ok(out)
}

/// All offsets in {−1, 0, 1}^n, n ≤ 6 here.
fn neighbor_offsets(n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * 3);
        for base in &out {
            for d in [-1i64, 0, 1] {
                let mut b = base.clone();
                b.push(d);
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// Boundary directions of the invariant domain sampled from the group:
/// attracting and repelling eigenvector directions of non-parabolic
/// elements plus all parabolic fixed points, unit-normalized and
/// deduplicated. These lie on the boundary exactly and densify as the
/// enumeration deepens.
pub fn boundary_directions(
    elements: &[GroupElement],
    cfg: &ToleranceConfig,
) -> Vec<DVector<f64>> {
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    let mut push = |v: DVector<f64>| {
        let n = v.norm();
        if n == 0.0 {
            return;
        }
        let mut u = v / n;
        // Canonical sign so dedup catches ±v.
        for x in u.iter() {
            if x.abs() > 1e-12 {
                if *x < 0.0 {
                    u = -u;
                }
                break;
            }
        }
        if !dirs.iter().any(|d| (d - &u).amax() <= 1e-9) {
            dirs.push(u);
        }
    };

    let identity_scale = |g: &SquareMatrix| g.frobenius().max(1.0);
    for e in elements {
        if e.word.is_empty() {
            continue;
        }
        let g = &e.matrix;
        if g.approx_eq_projective(&SquareMatrix::identity(g.dim()), cfg.eps_equal * identity_scale(g)) {
            continue;
        }
        if is_parabolic(g, cfg) {
            if let Ok(p) = parabolic_fixed_point(g, cfg) {
                push(p.coords().clone());
            }
            continue;
        }
        let classes = spectral(g, cfg);
        let radius = eigen_cluster_radius(g, cfg);
        // Largest and smallest modulus with a real eigenvector: the
        // attracting/repelling directions.
        for pick in [0usize, 1] {
            let it: Box<dyn Iterator<Item = &crate::linalg::EigenClass>> = if pick == 0 {
                Box::new(classes.iter())
            } else {
                Box::new(classes.iter().rev())
            };
            for c in it {
                if (c.value.norm() - 1.0).abs() <= cfg.eps_eig {
                    break; // unit-modulus directions are not boundary attractors
                }
                if c.value.im.abs() <= radius && !c.eigenvectors.is_empty() {
                    push(c.eigenvectors[0].clone());
                    break;
                }
            }
        }
    }
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lorentz_embedding_complex, lorentz_embedding_real, C64};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn sm(rows: &[Vec<f64>]) -> SquareMatrix {
        SquareMatrix::from_rows(rows).unwrap()
    }

    /// Sanov generators of a free group of rank 2.
    fn free_rep() -> Representation {
        Representation::new(
            2,
            vec![
                ('a', sm(&[vec![1.0, 2.0], vec![0.0, 1.0]])),
                ('b', sm(&[vec![1.0, 0.0], vec![2.0, 1.0]])),
            ],
            vec![],
            vec![],
            &cfg(),
        )
        .unwrap()
    }

    #[test]
    fn free_group_count_at_length_two() {
        let rep = free_rep();
        let elements = enumerate_elements(&rep, 2, None, &cfg()).unwrap();
        // 1 + 4 + 12 reduced words.
        assert_eq!(elements.len(), 17);
    }

    #[test]
    fn commuting_pair_collapses_to_lattice_count() {
        // Commuting parabolic pair generating Z²: lattice points with
        // |a| + |b| ≤ 4 number 41.
        let rep = Representation::new(
            3,
            vec![
                ('x', sm(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])),
                ('y', sm(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])),
            ],
            vec![],
            vec![],
            &cfg(),
        )
        .unwrap();
        let elements = enumerate_elements(&rep, 4, None, &cfg()).unwrap();
        assert_eq!(elements.len(), 41);
    }

    #[test]
    fn relations_shrink_the_free_count() {
        // S, T in SL(2,Z): S⁴ = 1 and (ST)⁶ = 1 force collapses, so the
        // count sits strictly below the free-group total 161 at length 4.
        let rep = Representation::new(
            2,
            vec![
                ('s', sm(&[vec![0.0, -1.0], vec![1.0, 0.0]])),
                ('t', sm(&[vec![1.0, 1.0], vec![0.0, 1.0]])),
            ],
            vec![],
            vec![],
            &cfg(),
        )
        .unwrap();
        let elements = enumerate_elements(&rep, 4, None, &cfg()).unwrap();
        assert!(elements.len() < 161, "got {}", elements.len());
    }

    #[test]
    fn enumeration_closure_property() {
        let rep = free_rep();
        let cfgv = cfg();
        let l3 = enumerate_elements(&rep, 3, None, &cfgv).unwrap();
        let l4 = enumerate_elements(&rep, 4, None, &cfgv).unwrap();
        let contains = |set: &[GroupElement], m: &SquareMatrix| {
            set.iter()
                .any(|e| e.matrix.approx_eq_projective(m, 1e-9 * m.frobenius().max(1.0)))
        };
        for e in &l3 {
            for name in rep.generator_names() {
                let prod = e.matrix.compose(rep.generator(*name).unwrap());
                assert!(contains(&l4, &prod), "closure failed for {}{}", e.word, name);
            }
        }
    }

    #[test]
    fn norm_pruning_prunes() {
        let rep = free_rep();
        let all = enumerate_elements(&rep, 4, None, &cfg()).unwrap();
        let pruned = enumerate_elements(&rep, 4, Some(6.0), &cfg()).unwrap();
        assert!(pruned.len() < all.len());
        assert!(pruned.iter().all(|e| e.matrix.frobenius() <= 6.0));
    }

    #[test]
    fn parabolic_examples() {
        let cfgv = cfg();
        assert!(!is_parabolic(&SquareMatrix::identity(3), &cfgv));
        let unipotent = sm(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert!(is_parabolic(&unipotent, &cfgv));
        let diag = sm(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.5],
        ]);
        assert!(!is_parabolic(&diag, &cfgv));
    }

    #[test]
    fn parabolic_conjugation_invariance() {
        // Conjugation spreads the defective eigenvalue like ε^(1/3); the
        // cluster mean keeps the test stable at a looser eps_eig.
        let cfgv = ToleranceConfig {
            eps_eig: 1e-4,
            ..Default::default()
        };
        let unipotent = sm(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let mut rng = StdRng::seed_from_u64(51);
        let mut done = 0;
        while done < 100 {
            let h = SquareMatrix::new(nalgebra::DMatrix::from_fn(3, 3, |_, _| {
                rng.random_range(-1.0..1.0)
            }))
            .unwrap();
            if h.det().abs() < 0.2 {
                continue;
            }
            let conj = h.compose(&unipotent).compose(&h.inverse(1e-12).unwrap());
            assert!(is_parabolic(&conj, &cfgv), "conjugate lost parabolicity");
            done += 1;
        }
    }

    #[test]
    fn parabolic_fixed_point_examples() {
        let cfgv = cfg();
        let unipotent = sm(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let p = parabolic_fixed_point(&unipotent, &cfgv).unwrap();
        assert!(p.approx_eq(&ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap(), 1e-9));

        // Lorentz translation: the unique lightlike fixed direction.
        let g = lorentz_embedding_real(&[[1.0, 1.0], [0.0, 1.0]], &cfgv).unwrap();
        let p = parabolic_fixed_point(&g, &cfgv).unwrap();
        let v = p.coords();
        assert!((g.apply(v) - v).norm() < 1e-10 * v.norm());
        assert!(crate::linalg::lorentz_form(v).abs() < 1e-9);

        assert!(matches!(
            parabolic_fixed_point(&SquareMatrix::identity(3), &cfgv),
            Err(Error::NotParabolic)
        ));
    }

    #[test]
    fn parabolic_fixed_point_conjugation_covariance() {
        let cfgv = ToleranceConfig {
            eps_eig: 1e-4,
            ..Default::default()
        };
        let g = lorentz_embedding_real(&[[1.0, 1.0], [0.0, 1.0]], &cfgv).unwrap();
        let base = parabolic_fixed_point(&g, &cfgv).unwrap();
        let mut rng = StdRng::seed_from_u64(52);
        for _ in 0..20 {
            let h = loop {
                let h = SquareMatrix::new(nalgebra::DMatrix::from_fn(3, 3, |_, _| {
                    rng.random_range(-1.0..1.0)
                }))
                .unwrap();
                if h.det().abs() > 0.2 {
                    break h;
                }
            };
            let conj = h.compose(&g).compose(&h.inverse(1e-12).unwrap());
            let p = parabolic_fixed_point(&conj, &cfgv).unwrap();
            let expected = base.transform(&h).unwrap();
            assert!(
                p.distance_to(&expected) < 1e-6,
                "fixed point not equivariant: {:?} vs {:?}",
                p.coords().as_slice(),
                expected.coords().as_slice()
            );
        }
    }

    #[test]
    fn common_fixed_points_examples() {
        let cfgv = cfg();
        // Two commuting unipotent upper-triangular matrices share [1:0:0].
        let a = sm(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let b = sm(&[
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let fps = common_fixed_points(&[a.clone(), b.clone()], &cfgv);
        assert!(!fps.is_empty());
        assert!(fps
            .iter()
            .any(|f| f.point.approx_eq(&ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap(), 1e-8)));

        // Identity alone: the whole space, flagged non-isolated.
        let fps = common_fixed_points(&[SquareMatrix::identity(3)], &cfgv);
        assert_eq!(fps.len(), 1);
        assert!(!fps[0].isolated);

        // Perturbed pair (upper-triangular noise) keeps a nearby point.
        let mut rng = StdRng::seed_from_u64(53);
        let noise = |rng: &mut StdRng, m: &SquareMatrix| {
            let mut rows = m.to_rows();
            for i in 0..3 {
                for j in (i + 1)..3 {
                    rows[i][j] += rng.random_range(-1e-3..1e-3);
                }
            }
            sm(&rows)
        };
        let ap = noise(&mut rng, &a);
        let bp = noise(&mut rng, &b);
        let fps = common_fixed_points(&[ap, bp], &cfgv);
        assert!(
            fps.iter().any(|f| f
                .point
                .distance_to(&ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap())
                < 1e-2),
            "no fixed point near the unperturbed one"
        );
    }

    /// The SO(3,1) Z² cusp pair: translations by 1 and by i.
    fn z2_cusp_rep() -> Representation {
        let cfgv = cfg();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let a = lorentz_embedding_complex(&[[one, one], [zero, one]], &cfgv).unwrap();
        let b = lorentz_embedding_complex(&[[one, i], [zero, one]], &cfgv).unwrap();
        Representation::new(
            4,
            vec![('x', a), ('y', b)],
            vec!["xyXY".into()],
            vec![CuspSpec {
                name: "c0".into(),
                words: vec!["x".into(), "y".into()],
                expected_fixed_point: None,
            }],
            &cfgv,
        )
        .unwrap()
    }

    #[test]
    fn validate_cusp_z2_pair_passes() {
        let rep = z2_cusp_rep();
        let report = validate_cusp(&rep, &rep.cusps[0], &cfg()).unwrap();
        assert!(report.non_parabolic.is_empty(), "{:?}", report.non_parabolic);
        assert!(report.fixed_point.is_some());
        assert!(report.functional.is_some());
        assert!(report.functional_invariant);
        assert!(report.dual_eigenvalue_one);
        assert!(report.passed);
    }

    #[test]
    fn validate_cusp_flags_loxodromic() {
        let cfgv = cfg();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let a = lorentz_embedding_complex(&[[one, one], [zero, one]], &cfgv).unwrap();
        let lox = lorentz_embedding_complex(
            &[[C64::new(2.0, 0.0), zero], [zero, C64::new(0.5, 0.0)]],
            &cfgv,
        )
        .unwrap();
        let rep = Representation::new(
            4,
            vec![('x', a), ('y', lox)],
            vec![],
            vec![CuspSpec {
                name: "bad".into(),
                words: vec!["x".into(), "y".into()],
                expected_fixed_point: None,
            }],
            &cfgv,
        )
        .unwrap();
        let report = validate_cusp(&rep, &rep.cusps[0], &cfgv).unwrap();
        assert!(!report.non_parabolic.is_empty());
        assert!(!report.passed);
    }

    #[test]
    fn validate_cusp_rejects_empty_words() {
        let rep = free_rep();
        let empty = CuspSpec {
            name: "none".into(),
            words: vec![],
            expected_fixed_point: None,
        };
        assert!(matches!(
            validate_cusp(&rep, &empty, &cfg()),
            Err(Error::CuspValidation { .. })
        ));
    }

    #[test]
    fn orbit_identity_and_stabilizer() {
        let cfgv = cfg();
        let rep = z2_cusp_rep();
        let p = DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]);

        // Identity only.
        let idonly = vec![GroupElement {
            word: String::new(),
            matrix: SquareMatrix::identity(4),
        }];
        let o = orbit(&p, &idonly, &cfgv).unwrap();
        assert_eq!(o.len(), 1);

        // The cusp subgroup stabilizes its own fixed lightcone lift.
        let elements = enumerate_elements(&rep, 4, None, &cfgv).unwrap();
        let o = orbit(&p, &elements, &cfgv).unwrap();
        assert_eq!(o.len(), 1, "cusp lift must be a single orbit point");
    }

    #[test]
    fn orbit_respects_group_action() {
        let cfgv = cfg();
        let rep = free_rep();
        let elements = enumerate_elements(&rep, 3, None, &cfgv).unwrap();
        let g = rep.evaluate_word("ab").unwrap();
        let p = DVector::from_column_slice(&[1.0, 0.5]);
        let base: Vec<DVector<f64>> = orbit(&p, &elements, &cfgv)
            .unwrap()
            .into_iter()
            .map(|o| o.vector)
            .collect();
        let shifted: Vec<GroupElement> = elements
            .iter()
            .map(|e| GroupElement {
                word: format!("ab{}", e.word),
                matrix: g.compose(&e.matrix),
            })
            .collect();
        let mapped: Vec<DVector<f64>> = orbit(&p, &shifted, &cfgv)
            .unwrap()
            .into_iter()
            .map(|o| o.vector)
            .collect();
        // g·(orbit under E) = orbit under gE as sets.
        for v in &base {
            let gv = g.apply(v);
            assert!(mapped.iter().any(|w| (w - &gv).amax() < 1e-9 * gv.norm().max(1.0)));
        }
        assert_eq!(base.len(), mapped.len());
    }

    #[test]
    fn word_helpers() {
        assert_eq!(invert_word("abAB"), "baBA");
        assert_eq!(free_reduce("abBA"), "");
        assert_eq!(free_reduce("abBc"), "ac");
        let rep = free_rep();
        let m = rep.evaluate_word("aA").unwrap();
        assert!(m.approx_eq(&SquareMatrix::identity(2), 1e-12));
    }

    #[test]
    fn representation_serde_round_trip() {
        let rep = z2_cusp_rep();
        let s = serde_json::to_string(&rep).unwrap();
        let back: Representation = serde_json::from_str(&s).unwrap();
        assert_eq!(back.dim(), rep.dim());
        assert_eq!(back.generator_names(), rep.generator_names());
        assert!(back.generator('x').unwrap().approx_eq(rep.generator('x').unwrap(), 1e-12));
        assert_eq!(back.cusps.len(), 1);
    }

    #[test]
    fn bad_relator_rejected() {
        let r = Representation::new(
            2,
            vec![
                ('a', sm(&[vec![1.0, 2.0], vec![0.0, 1.0]])),
                ('b', sm(&[vec![1.0, 0.0], vec![2.0, 1.0]])),
            ],
            vec!["ab".into()],
            vec![],
            &cfg(),
        );
        assert!(matches!(r, Err(Error::InvalidWord { .. })));
    }
}
