//! Conforming tetrahedral meshes of layered boxes.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::domain::{GraphFunction, PartitionedDomain, SlabExtension};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FacetTag {
    Sigma,
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 3],
    pub tag: FacetTag,
}

/// Tetrahedral mesh with per-element subdomain labels and tagged boundary
/// facets. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub labels: Vec<usize>,
    pub boundary_facets: Vec<BoundaryFacet>,
    /// Largest element diameter.
    pub h: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

pub(crate) fn signed_volume_of(p: [[f64; 3]; 4]) -> f64 {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]))
        / 6.0
}

impl Mesh {
    /// Assemble a mesh from raw parts, computing `h`.
    pub fn from_parts(
        vertices: Vec<[f64; 3]>,
        tets: Vec<[usize; 4]>,
        labels: Vec<usize>,
        boundary_facets: Vec<BoundaryFacet>,
    ) -> Mesh {
        let h = tets
            .iter()
            .map(|t| {
                let mut d = 0.0f64;
                for a in 0..4 {
                    for b in a + 1..4 {
                        d = d.max(dist(vertices[t[a]], vertices[t[b]]));
                    }
                }
                d
            })
            .fold(0.0, f64::max);
        Mesh { vertices, tets, labels, boundary_facets, h }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.vertices.len()
    }

    pub fn tet_points(&self, t: usize) -> [[f64; 3]; 4] {
        let tet = self.tets[t];
        [
            self.vertices[tet[0]],
            self.vertices[tet[1]],
            self.vertices[tet[2]],
            self.vertices[tet[3]],
        ]
    }

    pub fn signed_volume(&self, t: usize) -> f64 {
        signed_volume_of(self.tet_points(t))
    }

    pub fn centroid(&self, t: usize) -> [f64; 3] {
        let p = self.tet_points(t);
        let mut c = [0.0; 3];
        for q in p {
            for d in 0..3 {
                c[d] += 0.25 * q[d];
            }
        }
        c
    }

    pub fn facet_centroid(&self, f: &BoundaryFacet) -> [f64; 3] {
        let mut c = [0.0; 3];
        for &v in &f.vertices {
            for (cd, xd) in c.iter_mut().zip(self.vertices[v]) {
                *cd += xd / 3.0;
            }
        }
        c
    }

    /// Total volume of the elements carrying each label `0..n_labels`.
    pub fn volume_by_label(&self, n_labels: usize) -> Vec<f64> {
        let mut v = vec![0.0; n_labels];
        for (t, &l) in self.labels.iter().enumerate() {
            if l < n_labels {
                v[l] += self.signed_volume(t);
            }
        }
        v
    }

    /// Per-vertex flag: vertex lies on a boundary facet.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for f in &self.boundary_facets {
            for &v in &f.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    pub fn max_label(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }
}

/// Faces appearing in exactly one tetrahedron, in order of first appearance.
pub fn boundary_faces(tets: &[[usize; 4]]) -> Vec<[usize; 3]> {
    const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
    let key = |f: [usize; 3]| {
        let mut k = f;
        k.sort_unstable();
        k
    };
    let mut count: HashMap<[usize; 3], u32> = HashMap::with_capacity(tets.len() * 2);
    for t in tets {
        for f in FACES {
            *count.entry(key([t[f[0]], t[f[1]], t[f[2]]])).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for t in tets {
        for f in FACES {
            let face = [t[f[0]], t[f[1]], t[f[2]]];
            if count[&key(face)] == 1 {
                out.push(face);
            }
        }
    }
    out
}

/// The six tetrahedra of the Kuhn split of the unit cube, as corner offsets,
/// each positively oriented in the reference cube. Every cube of a grid
/// split this way shares face diagonals with its neighbours.
fn kuhn_offsets() -> [[[usize; 3]; 4]; 6] {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = [[[0usize; 3]; 4]; 6];
    for (n, p) in perms.iter().enumerate() {
        let mut v1 = [0usize; 3];
        v1[p[0]] = 1;
        let mut v2 = v1;
        v2[p[1]] = 1;
        let mut tet = [[0, 0, 0], v1, v2, [1, 1, 1]];
        let pts = tet.map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]);
        if signed_volume_of(pts) < 0.0 {
            tet.swap(2, 3);
        }
        out[n] = tet;
    }
    out
}

/// Tets of a structured `nx x ny x nz` grid, vertex index `i + (nx+1)(j + (ny+1)k)`.
fn grid_tets(nx: usize, ny: usize, nz: usize) -> Vec<[usize; 4]> {
    let offs = kuhn_offsets();
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for o in &offs {
                    tets.push(o.map(|c| idx(i + c[0], j + c[1], k + c[2])));
                }
            }
        }
    }
    tets
}

fn check_volumes(vertices: &[[f64; 3]], tets: &[[usize; 4]], h: f64) -> Result<()> {
    let floor = 1e-12 * h * h * h;
    for (t, tet) in tets.iter().enumerate() {
        let v = signed_volume_of(tet.map(|i| vertices[i]));
        if !(v > floor) {
            return Err(Error::DegenerateTet { tet: t, volume: v });
        }
    }
    Ok(())
}

/// Cells per axis for `n` subdivisions per `r0`.
fn cells(len: f64, r0: f64, n: usize) -> usize {
    ((len / r0 * n as f64).round() as usize).max(1)
}

/// Structured interface-conforming mesh of a layered partition.
///
/// The box is split into cubes of side about `r0 / n`, each cut into six
/// tetrahedra. For every interface the grid plane closest to its mean level
/// is moved onto the interface (nodes snapped to `phi_k`); planes in between
/// are redistributed linearly per vertical column.
pub fn generate_mesh(domain: &PartitionedDomain, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidGeometry("mesh subdivisions must be >= 1".into()));
    }
    let [a1, a2, a3] = domain.box_dims;
    let (nx, ny, nz) = (cells(a1, domain.r0, n), cells(a2, domain.r0, n), cells(a3, domain.r0, n));

    // anchor planes, bottom to top
    let mut planes: Vec<usize> = Vec::new();
    for (k, m) in domain.interface_means.iter().enumerate() {
        let l = (m / a3 * nz as f64).round() as usize;
        let prev = planes.last().copied().unwrap_or(nz);
        if l == 0 || l >= prev {
            return Err(Error::InvalidGeometry(format!(
                "mesh with {nz} layers cannot resolve interface {}",
                k + 1
            )));
        }
        planes.push(l);
    }

    let xs: Vec<f64> = (0..=nx).map(|i| a1 * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| a2 * j as f64 / ny as f64).collect();
    let mut vertices = vec![[0.0; 3]; (nx + 1) * (ny + 1) * (nz + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let (x, y) = (xs[i], ys[j]);
            // (plane, height) pairs from bottom to top
            let mut anchors = vec![(0usize, 0.0f64)];
            for (k, &l) in planes.iter().enumerate().rev() {
                anchors.push((l, domain.interfaces[k].value(x, y)));
            }
            anchors.push((nz, a3));
            for w in anchors.windows(2) {
                let ((l0, z0), (l1, z1)) = (w[0], w[1]);
                for k in l0..=l1 {
                    let t = (k - l0) as f64 / (l1 - l0) as f64;
                    let z = if k == l1 { z1 } else { z0 + t * (z1 - z0) };
                    vertices[i + (nx + 1) * (j + (ny + 1) * k)] = [x, y, z];
                }
            }
        }
    }

    let tets = grid_tets(nx, ny, nz);
    let labels = tets
        .iter()
        .map(|t| {
            let mut c = [0.0; 3];
            for &v in t {
                for d in 0..3 {
                    c[d] += 0.25 * vertices[v][d];
                }
            }
            domain.label_of(c[0], c[1], c[2])
        })
        .collect();
    let facets = boundary_faces(&tets)
        .into_iter()
        .map(|f| {
            let top = f.iter().all(|&v| vertices[v][2] == a3);
            let cx = f.iter().map(|&v| vertices[v][0]).sum::<f64>() / 3.0;
            let cy = f.iter().map(|&v| vertices[v][1]).sum::<f64>() / 3.0;
            let tag = if top && domain.sigma.contains(cx, cy) { FacetTag::Sigma } else { FacetTag::Rest };
            BoundaryFacet { vertices: f, tag }
        })
        .collect();
    let mesh = Mesh::from_parts(vertices, tets, labels, facets);
    check_volumes(&mesh.vertices, &mesh.tets, mesh.h)?;
    Ok(mesh)
}

/// Glue the slab `D0` of thickness `(2/3) r0 L` on top of the patch
/// footprint and label it 0.
///
/// The footprint must coincide with a tensor grid of top-face vertices and
/// the slab's bottom triangles must match existing top-face facets.
pub fn extend_with_d0(domain: &PartitionedDomain, mesh: &Mesh) -> Result<(PartitionedDomain, Mesh)> {
    let top = domain.top();
    let tol = 1e-9 * domain.r0;
    let fp = domain.sigma;
    let thickness = 2.0 / 3.0 * domain.r0 * domain.l_const;

    let on_top: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| {
            let p = mesh.vertices[v];
            (p[2] - top).abs() < tol
                && p[0] > fp.x[0] - tol
                && p[0] < fp.x[1] + tol
                && p[1] > fp.y[0] - tol
                && p[1] < fp.y[1] + tol
        })
        .collect();
    let distinct = |c: usize| {
        let mut v: Vec<f64> = on_top.iter().map(|&i| mesh.vertices[i][c]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < tol);
        v
    };
    let (xs, ys) = (distinct(0), distinct(1));
    let incompatible = |msg: &str| Error::IncompatibleMesh(msg.to_string());
    if xs.len() < 2 || ys.len() < 2 {
        return Err(incompatible("footprint covers fewer than 2x2 top-face vertices"));
    }
    if (xs[0] - fp.x[0]).abs() > tol
        || (xs[xs.len() - 1] - fp.x[1]).abs() > tol
        || (ys[0] - fp.y[0]).abs() > tol
        || (ys[ys.len() - 1] - fp.y[1]).abs() > tol
    {
        return Err(incompatible("footprint edges do not lie on top-face grid lines"));
    }
    if on_top.len() != xs.len() * ys.len() {
        return Err(incompatible("top-face vertices in the footprint are not a tensor grid"));
    }
    let locate = |vals: &[f64], x: f64| vals.iter().position(|&v| (v - x).abs() < tol);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut base = vec![usize::MAX; (nx + 1) * (ny + 1)];
    for &v in &on_top {
        let p = mesh.vertices[v];
        let (i, j) = (locate(&xs, p[0]).unwrap(), locate(&ys, p[1]).unwrap());
        base[i + (nx + 1) * j] = v;
    }
    if base.contains(&usize::MAX) {
        return Err(incompatible("top-face grid has holes"));
    }

    let spacing = 0.5 * ((fp.x[1] - fp.x[0]) / nx as f64 + (fp.y[1] - fp.y[0]) / ny as f64);
    let nl = ((thickness / spacing).round() as usize).max(1);
    let mut vertices = mesh.vertices.clone();
    let first_new = vertices.len();
    for l in 1..=nl {
        for &y in &ys[..=ny] {
            for &x in &xs[..=nx] {
                vertices.push([x, y, top + thickness * l as f64 / nl as f64]);
            }
        }
    }
    let idx = |i: usize, j: usize, l: usize| {
        if l == 0 {
            base[i + (nx + 1) * j]
        } else {
            first_new + (l - 1) * (nx + 1) * (ny + 1) + i + (nx + 1) * j
        }
    };

    let mut slab_tets = Vec::with_capacity(6 * nx * ny * nl);
    for l in 0..nl {
        for j in 0..ny {
            for i in 0..nx {
                for o in kuhn_offsets() {
                    slab_tets.push(o.map(|c| idx(i + c[0], j + c[1], l + c[2])));
                }
            }
        }
    }
    let existing: HashSet<[usize; 3]> = mesh
        .boundary_facets
        .iter()
        .map(|f| {
            let mut k = f.vertices;
            k.sort_unstable();
            k
        })
        .collect();
    for face in boundary_faces(&slab_tets) {
        if face.iter().all(|&v| v < first_new) {
            let mut k = face;
            k.sort_unstable();
            if !existing.contains(&k) {
                return Err(incompatible("slab triangulation does not match the top-face facets"));
            }
        }
    }

    let mut tets = mesh.tets.clone();
    let mut labels = mesh.labels.clone();
    tets.extend_from_slice(&slab_tets);
    labels.extend(std::iter::repeat_n(0, slab_tets.len()));
    let facets = boundary_faces(&tets)
        .into_iter()
        .map(|f| BoundaryFacet { vertices: f, tag: FacetTag::Rest })
        .collect();
    let extended = Mesh::from_parts(vertices, tets, labels, facets);
    check_volumes(&extended.vertices, &extended.tets, extended.h)?;

    let mut dom = domain.clone();
    dom.extension = Some(SlabExtension { footprint: fp, thickness });
    Ok((dom, extended))
}

/// Mesh of the ball of radius `radius` centred at the origin: a cube grid
/// with `2n` cells per side pushed radially onto the ball. Single label 1,
/// all boundary facets tagged REST.
pub fn ball_mesh(radius: f64, n: usize) -> Result<Mesh> {
    let m = 2 * n.max(1);
    let coord = |i: usize| -radius + 2.0 * radius * i as f64 / m as f64;
    let mut vertices = Vec::with_capacity((m + 1).pow(3));
    for k in 0..=m {
        for j in 0..=m {
            for i in 0..=m {
                let p = [coord(i), coord(j), coord(k)];
                let inf = p.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                let two = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let s = if two > 0.0 { inf / two } else { 1.0 };
                vertices.push([p[0] * s, p[1] * s, p[2] * s]);
            }
        }
    }
    let tets = grid_tets(m, m, m);
    let labels = vec![1; tets.len()];
    let facets = boundary_faces(&tets)
        .into_iter()
        .map(|f| BoundaryFacet { vertices: f, tag: FacetTag::Rest })
        .collect();
    let mesh = Mesh::from_parts(vertices, tets, labels, facets);
    check_volumes(&mesh.vertices, &mesh.tets, mesh.h)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::{build_layered_partition, DomainSpec, InterfaceShape, SigmaRegion};

    pub(crate) fn cube(interfaces: Vec<InterfaceShape>, l_const: f64) -> PartitionedDomain {
        build_layered_partition(&DomainSpec {
            box_dims: [1.0, 1.0, 1.0],
            r0: 1.0,
            interfaces,
            sigma: SigmaRegion { x: [0.0, 1.0], y: [0.0, 1.0] },
            l_const,
            alpha: 1.0,
            volume_bound: 1.0,
            regularity_grid: Some(50),
        })
        .unwrap()
    }

    #[test]
    fn counts_for_unit_cube() {
        let mesh = generate_mesh(&cube(vec![], 1.0), 2).unwrap();
        assert_eq!(mesh.tets.len(), 48);
        assert_eq!(mesh.n_vertices(), 27);
        // 6 faces x 4 squares x 2 triangles
        assert_eq!(mesh.boundary_facets.len(), 48);
        assert_eq!(mesh.boundary_facets.iter().filter(|f| f.tag == FacetTag::Sigma).count(), 8);
        let total: f64 = (0..mesh.tets.len()).map(|t| mesh.signed_volume(t)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_interface_labels() {
        let mesh = generate_mesh(&cube(vec![InterfaceShape::Flat { level: 0.5 }], 1.0), 2).unwrap();
        for t in 0..mesh.tets.len() {
            let c = mesh.centroid(t);
            assert_eq!(mesh.labels[t], if c[2] > 0.5 { 1 } else { 2 });
        }
        let v = mesh.volume_by_label(3);
        assert!((v[1] - 0.5).abs() < 1e-14 && (v[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn wavy_interface_labels_match_layers() {
        let wave = InterfaceShape::Wave { level: 0.5, amplitude: 0.05, kx: 1.0, ky: 0.0 };
        let mesh = generate_mesh(&cube(vec![wave.clone()], 2.5), 8).unwrap();
        let mut mislabeled = 0;
        for t in 0..mesh.tets.len() {
            let c = mesh.centroid(t);
            let above = c[2] - wave.value(c[0], c[1]) > 0.0;
            if above != (mesh.labels[t] == 1) {
                mislabeled += 1;
            }
            // no tet straddles the snapped interface: all nodes on one side
            // of the piecewise-linear interpolant (snapped nodes count as both)
            let pts = mesh.tet_points(t);
            let lower = pts.iter().all(|p| p[2] <= wave.value(p[0], p[1]) + 1e-12);
            let upper = pts.iter().all(|p| p[2] >= wave.value(p[0], p[1]) - 1e-12);
            assert!(lower || upper, "tet {t} straddles the interface");
        }
        assert_eq!(mislabeled, 0);
    }

    #[test]
    fn sigma_facets_inside_patch() {
        let mut d = cube(vec![], 1.0);
        d.sigma = SigmaRegion { x: [0.25, 0.75], y: [0.0, 0.5] };
        let mesh = generate_mesh(&d, 4).unwrap();
        let sig: Vec<_> = mesh.boundary_facets.iter().filter(|f| f.tag == FacetTag::Sigma).collect();
        assert_eq!(sig.len(), 2 * 2 * 2);
        for f in sig {
            let c = mesh.facet_centroid(f);
            assert!(d.sigma.contains(c[0], c[1]) && c[2] == 1.0);
        }
    }

    #[test]
    fn coarse_mesh_cannot_resolve_close_interfaces() {
        let d = cube(vec![InterfaceShape::Flat { level: 0.55 }, InterfaceShape::Flat { level: 0.45 }], 1.0);
        assert_eq!(generate_mesh(&d, 2).unwrap_err().code(), "INVALID_GEOMETRY");
        assert!(generate_mesh(&d, 20).is_ok());
    }

    #[test]
    fn slab_extension() {
        let d = cube(vec![], 0.75);
        let mesh = generate_mesh(&d, 4).unwrap();
        let (d0, ext) = extend_with_d0(&d, &mesh).unwrap();
        let slab = d0.extension.unwrap();
        assert!((slab.thickness - 0.5).abs() < 1e-15);
        let vols = ext.volume_by_label(2);
        assert!((vols[0] - 0.5).abs() < 1e-13);
        assert!((vols[1] - 1.0).abs() < 1e-13);
        // 5x5 new vertices per slab layer, 2 layers
        assert_eq!(ext.n_vertices(), mesh.n_vertices() + 2 * 25);
        assert_eq!(&ext.labels[..mesh.tets.len()], &mesh.labels[..]);
        assert!(ext.boundary_facets.iter().all(|f| f.tag == FacetTag::Rest));
        // closed surface: Euler check via facet count of the union
        assert_eq!(boundary_faces(&ext.tets).len(), ext.boundary_facets.len());
    }

    #[test]
    fn slab_needs_grid_aligned_footprint() {
        let mut d = cube(vec![], 0.75);
        d.sigma = SigmaRegion { x: [0.1, 0.9], y: [0.0, 1.0] };
        let mesh = generate_mesh(&d, 4).unwrap();
        assert_eq!(extend_with_d0(&d, &mesh).unwrap_err().code(), "INCOMPATIBLE_MESH");
    }

    #[test]
    fn ball_is_valid() {
        let mesh = ball_mesh(1.0, 4).unwrap();
        let total: f64 = (0..mesh.tets.len()).map(|t| mesh.signed_volume(t)).sum();
        let exact = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((total - exact).abs() / exact < 0.05, "{total}");
        for f in &mesh.boundary_facets {
            for &v in &f.vertices {
                let p = mesh.vertices[v];
                assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }
}
