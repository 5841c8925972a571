//! Exact polytopes: convex hull and face lattice in rational arithmetic, with
//! floating caches (direction spaces, normal cones, volumes) for the
//! integrators, plus flat-to-body distance and metric projection.

mod cone;
pub(crate) mod exact;
mod nearest;
mod ops;
mod rational;

pub use cone::{solid_angle, Arc, SphericalCone};
pub use nearest::{
    flat_distance, hausdorff_distance, min_norm_point, parallel_flat_distance, point_distance,
    FlatProjection, ProjectionTriple,
};
pub use ops::{exact_volume, intersect, union_if_convex};
pub use rational::{parse_rational, rational_to_f64, Rational};

use crate::error::{domain, Error, Result};
use crate::euclid::{Rotation, Subspace, Vector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc as Shared;

/// Identifies a face by dimension and position within that dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceId {
    pub dim: usize,
    pub index: usize,
}

/// A face of a built polytope together with its floating caches.
#[derive(Debug, Clone)]
pub struct Face {
    pub id: FaceId,
    /// Sorted indices into the polytope's vertex list.
    pub vertex_ids: Vec<usize>,
    /// Direction space L(F).
    pub direction: Subspace,
    /// Orthogonal complement F^⊥ of the direction space.
    pub normal_space: Subspace,
    pub centroid: Vector,
    /// j-dimensional volume V_j(F).
    pub volume: f64,
    pub normal_cone: SphericalCone,
    /// Faces of dimension `dim + 1` containing this one.
    pub up: Vec<usize>,
    /// Faces of dimension `dim − 1` contained in this one.
    pub down: Vec<usize>,
    simplices: Vec<Vec<usize>>,
    cumulative: Vec<f64>,
}

/// A facet inequality `⟨a,x⟩ ≤ b` in exact arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub normal: Vec<BigInt>,
    pub offset: Rational,
}

#[derive(Debug, Clone)]
struct ExactData {
    vertices: Vec<Vec<Rational>>,
    /// Vertices multiplied by `scale` (all integral).
    scaled: Vec<Vec<BigInt>>,
    scale: BigInt,
    inequalities: Vec<Inequality>,
    /// Affine equations `⟨c,x⟩ = e` cutting out the affine hull.
    equations: Vec<Inequality>,
}

/// A convex polytope in R^d.
#[derive(Debug, Clone)]
pub struct Polytope {
    d: usize,
    dim: usize,
    exact: Option<Shared<ExactData>>,
    vertices: Vec<Vector>,
    faces: Vec<Vec<Face>>,
    /// Orthonormal basis of the direction space of the affine hull.
    hull_direction: Subspace,
}

fn to_f64_vec(v: &[Rational]) -> Vector {
    Vector::from_iterator(v.len(), v.iter().map(rational_to_f64))
}

fn int_diff_f64(a: &[BigInt], b: &[BigInt], scale: f64) -> Vector {
    Vector::from_iterator(
        a.len(),
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).to_f64().unwrap() / scale),
    )
}

impl Polytope {
    /// Convex hull of the given rational points in R^d with its full face lattice.
    pub fn build(points: &[Vec<Rational>], d: usize) -> Result<Polytope> {
        if points.is_empty() {
            return domain("cannot build a polytope from no points");
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return domain(format!("point of length {} in R^{d}", p.len()));
        }
        let mut pts: Vec<Vec<Rational>> = points.to_vec();
        pts.sort();
        pts.dedup();
        let mut scale = BigInt::one();
        for p in &pts {
            for x in p {
                scale = scale.lcm(x.denom());
            }
        }
        let scaled: Vec<Vec<BigInt>> = pts
            .iter()
            .map(|p| {
                p.iter()
                    .map(|x| x.numer() * (&scale / x.denom()))
                    .collect()
            })
            .collect();
        let (p, point_faces) = exact::hull_faces(&scaled);

        // Vertices are the 0-faces; keep them in input order.
        let mut vertex_of: HashMap<usize, usize> = HashMap::new();
        let mut vpoints: Vec<usize> = point_faces
            .iter()
            .filter(|f| f.0 == 0)
            .map(|f| f.1[0])
            .collect();
        vpoints.sort_unstable();
        for (vi, &pi) in vpoints.iter().enumerate() {
            vertex_of.insert(pi, vi);
        }
        let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); p + 1];
        for (dim, ids) in &point_faces {
            let mut v: Vec<usize> = ids.iter().filter_map(|i| vertex_of.get(i).copied()).collect();
            v.sort_unstable();
            by_dim[*dim].push(v);
        }
        for level in by_dim.iter_mut() {
            level.sort();
            level.dedup();
        }

        let ex_vertices: Vec<Vec<Rational>> = vpoints.iter().map(|&i| pts[i].clone()).collect();
        let ex_scaled: Vec<Vec<BigInt>> = vpoints.iter().map(|&i| scaled[i].clone()).collect();
        let vertices: Vec<Vector> = ex_vertices.iter().map(|v| to_f64_vec(v)).collect();
        let scale_f = scale.to_f64().unwrap();

        // Direction space of the whole body from exact differences.
        let (hull_basis, _) = exact::affine_basis(&ex_scaled, &(0..ex_scaled.len()).collect::<Vec<_>>())
            .expect("big integers");
        let dirs_all: Vec<Vec<BigInt>> = hull_basis[1..]
            .iter()
            .map(|&b| exact::diff(&ex_scaled[b], &ex_scaled[hull_basis[0]]).unwrap())
            .collect();
        // primitive vectors do not depend on the common denominator, so the
        // floating basis is unchanged by translations
        let hull_direction = Subspace::span(
            d,
            &dirs_all
                .iter()
                .map(|v| {
                    let mut w = v.clone();
                    exact::primitive(&mut w);
                    Vector::from_iterator(d, w.iter().map(|x| x.to_f64().unwrap()))
                })
                .collect::<Vec<_>>(),
        );

        // Exact facet inequalities and affine equations.
        let mut inequalities = Vec::new();
        if p >= 1 {
            for facet in &by_dim[p - 1] {
                let (fb, _) = exact::affine_basis(&ex_scaled, facet).unwrap();
                let f0 = &ex_scaled[fb[0]];
                let fdirs: Vec<Vec<BigInt>> =
                    fb[1..].iter().map(|&b| exact::diff(&ex_scaled[b], f0).unwrap()).collect();
                let inner = (0..ex_scaled.len())
                    .find(|i| facet.binary_search(i).is_err())
                    .unwrap();
                let a = exact::facet_normal(&dirs_all, &fdirs, f0, &ex_scaled[inner]);
                let b = exact::dot(&a, f0).unwrap();
                inequalities.push(Inequality {
                    normal: a,
                    offset: Rational::new(b, scale.clone()),
                });
            }
        }
        let equations = rational::nullspace(&dirs_all, d)
            .into_iter()
            .map(|c| {
                let e = exact::dot(&c, &ex_scaled[0]).unwrap();
                Inequality {
                    normal: c,
                    offset: Rational::new(e, scale.clone()),
                }
            })
            .collect();

        let exact = ExactData {
            vertices: ex_vertices,
            scaled: ex_scaled,
            scale,
            inequalities,
            equations,
        };
        let faces = assemble_faces(d, p, &by_dim, &exact.scaled, scale_f, &vertices, &hull_direction);
        Ok(Polytope {
            d,
            dim: p,
            exact: Some(Shared::new(exact)),
            vertices,
            faces,
            hull_direction,
        })
    }

    /// Builds from integer coordinates.
    pub fn from_integer_points(points: &[Vec<i64>]) -> Result<Polytope> {
        let d = points.first().map(|p| p.len()).unwrap_or(0);
        let pts: Vec<Vec<Rational>> = points
            .iter()
            .map(|p| p.iter().map(|&x| Rational::from_integer(x.into())).collect())
            .collect();
        Polytope::build(&pts, d)
    }

    /// The box `[0,a_1]×…×[0,a_d]`.
    pub fn cuboid(sides: &[Rational]) -> Result<Polytope> {
        let d = sides.len();
        if sides.iter().any(|s| !s.is_positive()) {
            return domain("box sides must be positive");
        }
        let pts: Vec<Vec<Rational>> = (0..1usize << d)
            .map(|m| {
                (0..d)
                    .map(|i| {
                        if m >> i & 1 == 1 {
                            sides[i].clone()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Polytope::build(&pts, d)
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit_cube(d: usize) -> Polytope {
        Polytope::cuboid(&vec![Rational::one(); d]).expect("unit cube")
    }

    /// The simplex `conv{0, e_1, …, e_d}`.
    pub fn unit_simplex(d: usize) -> Polytope {
        let mut pts = vec![vec![Rational::zero(); d]];
        for i in 0..d {
            let mut e = vec![Rational::zero(); d];
            e[i] = Rational::one();
            pts.push(e);
        }
        Polytope::build(&pts, d).expect("unit simplex")
    }

    /// Hull of `n` random points with coordinates in `[-1,1]` rounded to
    /// multiples of `1/denom`.
    pub fn random<R: Rng + ?Sized>(d: usize, n: usize, denom: i64, rng: &mut R) -> Result<Polytope> {
        let pts: Vec<Vec<Rational>> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| Rational::new(rng.random_range(-denom..=denom).into(), denom.into()))
                    .collect()
            })
            .collect();
        Polytope::build(&pts, d)
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    /// Dimension of the affine hull.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    fn exact_data(&self) -> Result<&ExactData> {
        self.exact
            .as_deref()
            .ok_or_else(|| Error::Domain("polytope has no exact representation".into()))
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn exact_vertices(&self) -> Result<&[Vec<Rational>]> {
        Ok(&self.exact_data()?.vertices)
    }

    /// Facet inequalities `⟨a,x⟩ ≤ b` (relative to the affine hull).
    pub fn facet_inequalities(&self) -> Result<&[Inequality]> {
        Ok(&self.exact_data()?.inequalities)
    }

    /// Equations `⟨c,x⟩ = e` of the affine hull (empty when full-dimensional).
    pub fn affine_equations(&self) -> Result<&[Inequality]> {
        Ok(&self.exact_data()?.equations)
    }

    /// Faces of dimension `j` (empty slice when `j > dim`).
    pub fn faces(&self, j: usize) -> &[Face] {
        self.faces.get(j).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn face(&self, id: FaceId) -> &Face {
        &self.faces[id.dim][id.index]
    }

    /// Number of faces in each dimension `0..=dim`.
    pub fn f_vector(&self) -> Vec<usize> {
        self.faces.iter().map(|l| l.len()).collect()
    }

    pub fn hull_direction(&self) -> &Subspace {
        &self.hull_direction
    }

    pub fn centroid(&self) -> Vector {
        let n = self.vertices.len() as f64;
        self.vertices.iter().fold(Vector::zeros(self.d), |a, v| a + v) / n
    }

    /// Largest distance from `c` to a vertex.
    pub fn radius_about(&self, c: &Vector) -> f64 {
        self.vertices
            .iter()
            .map(|v| (v - c).norm())
            .fold(0.0, f64::max)
    }

    /// Whether the point lies in the polytope (float test with tolerance).
    pub fn contains_approx(&self, x: &Vector, tol: f64) -> bool {
        point_distance(self, x).map(|d| d <= tol).unwrap_or(false)
    }

    /// Exact membership test.
    pub fn contains_exact(&self, x: &[Rational]) -> Result<bool> {
        let e = self.exact_data()?;
        let val = |a: &[BigInt]| -> Rational {
            a.iter()
                .zip(x)
                .fold(Rational::zero(), |s, (ai, xi)| s + xi * Rational::from_integer(ai.clone()))
        };
        Ok(e.inequalities.iter().all(|q| val(&q.normal) <= q.offset)
            && e.equations.iter().all(|q| val(&q.normal) == q.offset))
    }

    /// Uniform random point of the face (by volume).
    pub fn sample_in_face<R: Rng + ?Sized>(&self, id: FaceId, rng: &mut R) -> Vector {
        let f = self.face(id);
        let total = *f.cumulative.last().unwrap();
        let r = rng.random::<f64>() * total;
        let s = f.cumulative.partition_point(|&c| c < r).min(f.simplices.len() - 1);
        let simplex = &f.simplices[s];
        let mut w: Vec<f64> = (0..simplex.len())
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        simplex
            .iter()
            .zip(&w)
            .fold(Vector::zeros(self.d), |acc, (&v, &wi)| acc + &self.vertices[v] * wi)
    }

    /// Simplices of the pulling triangulation of a face (vertex ids).
    pub fn face_simplices(&self, id: FaceId) -> &[Vec<usize>] {
        &self.face(id).simplices
    }

    /// `P + t`, exactly.
    pub fn translate(&self, t: &[Rational]) -> Result<Polytope> {
        let v: Vec<Vec<Rational>> = self
            .exact_vertices()?
            .iter()
            .map(|p| p.iter().zip(t).map(|(a, b)| a + b).collect())
            .collect();
        Polytope::build(&v, self.d)
    }

    /// `s·P`, exactly.
    pub fn scale(&self, s: &Rational) -> Result<Polytope> {
        let v: Vec<Vec<Rational>> = self
            .exact_vertices()?
            .iter()
            .map(|p| p.iter().map(|a| a * s).collect())
            .collect();
        Polytope::build(&v, self.d)
    }

    /// Image under an exact linear map given by its rows.
    pub fn linear_image(&self, m: &[Vec<Rational>]) -> Result<Polytope> {
        let v: Vec<Vec<Rational>> = self
            .exact_vertices()?
            .iter()
            .map(|p| {
                m.iter()
                    .map(|row| row.iter().zip(p).fold(Rational::zero(), |s, (a, b)| s + a * b))
                    .collect()
            })
            .collect();
        Polytope::build(&v, m.len())
    }

    /// Image under a floating rotation. The combinatorics, volumes and
    /// vertex order are inherited; geometric caches are rotated. The result
    /// carries no exact representation.
    pub fn rotated(&self, r: &Rotation) -> Polytope {
        let m = r.matrix();
        let faces = self
            .faces
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|f| Face {
                        direction: f.direction.transform(m),
                        normal_space: f.normal_space.transform(m),
                        centroid: m * &f.centroid,
                        normal_cone: f.normal_cone.rotated(r),
                        ..f.clone()
                    })
                    .collect()
            })
            .collect();
        Polytope {
            d: self.d,
            dim: self.dim,
            exact: None,
            vertices: self.vertices.iter().map(|v| m * v).collect(),
            faces,
            hull_direction: self.hull_direction.transform(m),
        }
    }

    /// Serializable snapshot.
    pub fn to_record(&self, with_faces: bool) -> Result<PolytopeRecord> {
        let e = self.exact_data()?;
        Ok(PolytopeRecord {
            dim: self.d,
            vertices: e
                .vertices
                .iter()
                .map(|v| v.iter().map(|x| x.to_string()).collect())
                .collect(),
            faces: with_faces.then(|| {
                self.faces
                    .iter()
                    .flatten()
                    .map(|f| FaceRecord {
                        dim: f.id.dim,
                        vertices: f.vertex_ids.clone(),
                    })
                    .collect()
            }),
        })
    }

    pub fn from_record(r: &PolytopeRecord) -> Result<Polytope> {
        let pts = r
            .vertices
            .iter()
            .map(|v| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Polytope::build(&pts, r.dim)
    }

    pub fn to_toml(&self, with_faces: bool) -> Result<String> {
        toml::to_string(&self.to_record(with_faces)?).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Polytope> {
        let r: PolytopeRecord = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Polytope::from_record(&r)
    }
}

/// Structured text form of a polytope: ambient dimension, vertices as
/// `"p/q"` strings and an optional face lattice dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeRecord {
    pub dim: usize,
    pub vertices: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<FaceRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub dim: usize,
    pub vertices: Vec<usize>,
}

/// Volume of the simplex spanned by the given edge vectors from one vertex.
fn simplex_volume(edges: &[Vector]) -> f64 {
    let j = edges.len();
    if j == 0 {
        return 1.0;
    }
    let d = edges[0].len();
    let mut m = crate::euclid::Matrix::zeros(d, j);
    for (i, e) in edges.iter().enumerate() {
        m.set_column(i, e);
    }
    let g = m.transpose() * &m;
    let fact: f64 = (1..=j).map(|x| x as f64).product();
    g.determinant().max(0.0).sqrt() / fact
}

fn assemble_faces(
    d: usize,
    p: usize,
    by_dim: &[Vec<Vec<usize>>],
    scaled: &[Vec<BigInt>],
    scale: f64,
    vertices: &[Vector],
    hull_direction: &Subspace,
) -> Vec<Vec<Face>> {
    // Hasse diagram through vertex incidences.
    let mut incident: Vec<BTreeMap<usize, Vec<usize>>> = vec![BTreeMap::new(); p + 1];
    for (j, level) in by_dim.iter().enumerate() {
        for (i, f) in level.iter().enumerate() {
            incident[j].entry(f[0]).or_default();
            for &v in f {
                incident[j].entry(v).or_default().push(i);
            }
        }
    }
    let mut up: Vec<Vec<Vec<usize>>> = by_dim.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    let mut down: Vec<Vec<Vec<usize>>> = up.clone();
    for j in 0..p {
        for (i, f) in by_dim[j].iter().enumerate() {
            if let Some(cands) = incident[j + 1].get(&f[0]) {
                for &g in cands {
                    let gv = &by_dim[j + 1][g];
                    if f.iter().all(|v| gv.binary_search(v).is_ok()) {
                        up[j][i].push(g);
                        down[j + 1][g].push(i);
                    }
                }
            }
        }
    }

    // Pulling triangulations, bottom up.
    let mut simplices: Vec<Vec<Vec<Vec<usize>>>> = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let mut level = Vec::with_capacity(by_dim[j].len());
        for (i, f) in by_dim[j].iter().enumerate() {
            if j == 0 {
                level.push(vec![vec![f[0]]]);
                continue;
            }
            let apex = f[0];
            let mut s = Vec::new();
            for &g in &down[j][i] {
                if by_dim[j - 1][g].binary_search(&apex).is_ok() {
                    continue;
                }
                for t in &simplices[j - 1][g] {
                    let mut c: Vec<usize> = Vec::with_capacity(j + 1);
                    c.push(apex);
                    c.extend(t.iter().copied());
                    s.push(c);
                }
            }
            level.push(s);
        }
        simplices.push(level);
    }

    let facet_normals: Vec<Vector> = if p >= 1 {
        by_dim[p - 1]
            .iter()
            .map(|f| outward_normal(f, &by_dim[p], scaled, scale, hull_direction))
            .collect()
    } else {
        vec![]
    };
    let lineality = hull_direction.complement().columns();
    // Facets containing each face, propagated down the Hasse diagram.
    let mut containing_facets: Vec<Vec<Vec<usize>>> =
        by_dim.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    if p >= 1 {
        for i in 0..by_dim[p - 1].len() {
            containing_facets[p - 1][i] = vec![i];
        }
        for j in (0..p - 1).rev() {
            for i in 0..by_dim[j].len() {
                let mut s: Vec<usize> = up[j][i]
                    .iter()
                    .flat_map(|&g| containing_facets[j + 1][g].iter().copied())
                    .collect();
                s.sort_unstable();
                s.dedup();
                containing_facets[j][i] = s;
            }
        }
    }

    let mut faces = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let mut level = Vec::with_capacity(by_dim[j].len());
        for (i, f) in by_dim[j].iter().enumerate() {
            let v0 = &scaled[f[0]];
            let dirs: Vec<Vector> = f[1..].iter().map(|&v| int_diff_f64(&scaled[v], v0, scale)).collect();
            let direction = Subspace::span(d, &dirs);
            debug_assert_eq!(direction.dim(), j);
            let normal_space = direction.complement();
            let centroid = f.iter().fold(Vector::zeros(d), |a, &v| a + &vertices[v]) / f.len() as f64;
            let simp = std::mem::take(&mut simplices[j][i]);
            let mut cumulative = Vec::with_capacity(simp.len());
            let mut acc = 0.0;
            for s in &simp {
                // edge vectors from exact differences keep volumes translation invariant
                let edges: Vec<Vector> = s[1..]
                    .iter()
                    .map(|&v| int_diff_f64(&scaled[v], &scaled[s[0]], scale))
                    .collect();
                acc += simplex_volume(&edges);
                cumulative.push(acc);
            }
            // Dual description: one inequality per face one dimension up.
            let ineqs: Vec<Vector> = up[j][i]
                .iter()
                .map(|&g| {
                    let gv = &by_dim[j + 1][g];
                    let out = *gv.iter().find(|v| f.binary_search(v).is_err()).unwrap();
                    let w = normal_space.project(&int_diff_f64(&scaled[out], v0, scale));
                    -w.normalize()
                })
                .collect();
            let mut gens: Vec<Vector> = containing_facets[j][i]
                .iter()
                .map(|&k| facet_normals[k].clone())
                .collect();
            for l in &lineality {
                gens.push(l.clone());
                gens.push(-l);
            }
            let normal_cone = SphericalCone::new(normal_space.clone(), ineqs, gens);
            level.push(Face {
                id: FaceId { dim: j, index: i },
                vertex_ids: f.clone(),
                direction,
                normal_space,
                centroid,
                volume: if j == 0 { 1.0 } else { acc },
                normal_cone,
                up: up[j][i].clone(),
                down: down[j][i].clone(),
                simplices: simp,
                cumulative: if j == 0 { vec![1.0] } else { cumulative },
            });
        }
        faces.push(level);
    }
    faces
}

/// Outward unit normal of a facet inside the affine hull of the body.
fn outward_normal(
    facet: &[usize],
    all: &[Vec<usize>],
    scaled: &[Vec<BigInt>],
    scale: f64,
    hull_direction: &Subspace,
) -> Vector {
    let d = scaled[0].len();
    let v0 = &scaled[facet[0]];
    let dirs: Vec<Vector> = facet[1..].iter().map(|&v| int_diff_f64(&scaled[v], v0, scale)).collect();
    let fdir = Subspace::span(d, &dirs);
    let outside = *all[0].iter().find(|v| facet.binary_search(v).is_err()).unwrap();
    let w = int_diff_f64(&scaled[outside], v0, scale);
    let n = hull_direction.project(&fdir.reject(&w));
    -n.normalize()
}

#[cfg(test)]
mod tests;
