//! Curvilinear element geometry: nodal coordinates, Jacobians and metric terms
//! in conservative curl form, plus the averaged metrics at interior flux points.

use crate::error::{Error, Result};
use crate::mesh::{FaceLink, HexMesh};
use crate::sbp::{Sbp1d, TensorOps};
use crate::thermo::Vec3;

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// Physical coordinates of the solution points.
    pub x: Vec<Vec3>,
    /// Jacobian determinant at the solution points.
    pub jac: Vec<f64>,
    /// `metric[node][l][m]` is the discrete `J dxi_l/dx_m`.
    pub metric: Vec<[Vec3; 3]>,
    /// Metric vectors at flux points: `flux_metric[l][line * (n + 1) + k]`.
    pub flux_metric: [Vec<Vec3>; 3],
}

impl ElementGeometry {
    pub fn flux_metric(&self, dir: usize, line: usize, k: usize, n: usize) -> Vec3 {
        self.flux_metric[dir][line * (n + 1) + k]
    }

    /// Quadrature volume `sum P J`.
    pub fn volume(&self, ops: &TensorOps) -> f64 {
        self.jac
            .iter()
            .enumerate()
            .map(|(a, j)| ops.volume_weight(a) * j)
            .sum()
    }
}

fn reference_coords(ops: &TensorOps, node: usize) -> [f64; 3] {
    let xi = ops.sbp().nodes();
    let [i, j, k] = ops.ijk(node);
    [xi[i], xi[j], xi[k]]
}

/// Geometry of element `e` on the LGL nodes of `ops`.
pub fn element_geometry(mesh: &HexMesh, e: usize, ops: &TensorOps) -> Result<ElementGeometry> {
    let np = ops.nodes_per_element();
    let x: Vec<Vec3> = (0..np)
        .map(|a| mesh.map_point(e, reference_coords(ops, a)))
        .collect();
    let comp = |m: usize| -> Vec<f64> { x.iter().map(|p| p[m]).collect() };
    let coords = [comp(0), comp(1), comp(2)];

    // dx[l][m] = d x_m / d xi_l
    let mut dx = [
        [vec![0.0; np], vec![0.0; np], vec![0.0; np]],
        [vec![0.0; np], vec![0.0; np], vec![0.0; np]],
        [vec![0.0; np], vec![0.0; np], vec![0.0; np]],
    ];
    for l in 0..3 {
        for m in 0..3 {
            ops.apply_d(l, &coords[m], &mut dx[l][m]);
        }
    }
    let mut jac = vec![0.0; np];
    for a in 0..np {
        let g = [
            [dx[0][0][a], dx[1][0][a], dx[2][0][a]],
            [dx[0][1][a], dx[1][1][a], dx[2][1][a]],
            [dx[0][2][a], dx[1][2][a], dx[2][2][a]],
        ];
        let d = crate::mesh::det3(&g);
        if !(d > 0.0) {
            return Err(Error::Geometry {
                element: e,
                reason: format!("non-positive Jacobian {d:e} at node {a}"),
            });
        }
        jac[a] = d;
    }

    // J dxi_l/dx_m = D_{l+2}(D_{l+1}(x_A) x_B) - D_{l+1}(D_{l+2}(x_A) x_B), (A, B) = (m+1, m+2).
    let mut metric = vec![[[0.0; 3]; 3]; np];
    let mut tmp = vec![0.0; np];
    let mut out = vec![0.0; np];
    for l in 0..3 {
        let (l1, l2) = ((l + 1) % 3, (l + 2) % 3);
        for m in 0..3 {
            let (ma, mb) = ((m + 1) % 3, (m + 2) % 3);
            for a in 0..np {
                tmp[a] = dx[l1][ma][a] * coords[mb][a];
            }
            ops.apply_d(l2, &tmp, &mut out);
            for a in 0..np {
                metric[a][l][m] = out[a];
            }
            for a in 0..np {
                tmp[a] = dx[l2][ma][a] * coords[mb][a];
            }
            ops.apply_d(l1, &tmp, &mut out);
            for a in 0..np {
                metric[a][l][m] -= out[a];
            }
        }
    }

    let n = ops.n();
    let flux_metric = std::array::from_fn(|l| {
        let st = ops.stride(l);
        let mut all = Vec::with_capacity(n * n * (n + 1));
        let mut line_vals = vec![[0.0; 3]; n];
        for line in 0..n * n {
            let s0 = ops.line_start(l, line);
            for (i, v) in line_vals.iter_mut().enumerate() {
                *v = metric[s0 + i * st][l];
            }
            all.extend(averaged_flux_metrics(ops.sbp(), &line_vals));
        }
        all
    });

    Ok(ElementGeometry {
        x,
        jac,
        metric,
        flux_metric,
    })
}

pub fn compute_metrics(mesh: &HexMesh, ops: &TensorOps) -> Result<Vec<ElementGeometry>> {
    (0..mesh.num_elements())
        .map(|e| element_geometry(mesh, e, ops))
        .collect()
}

/// Metric vectors at the `n + 1` flux points of one line.
///
/// Interior values equal `sum_{L < k <= R} q_LR (a_L + a_R)`, evaluated by a
/// running sum; the two end points take the pointwise metric.
pub fn averaged_flux_metrics(sbp: &Sbp1d, a: &[Vec3]) -> Vec<Vec3> {
    let n = sbp.n();
    assert_eq!(a.len(), n);
    let mut out = vec![[0.0; 3]; n + 1];
    out[0] = a[0];
    let mut acc = a[0];
    for k in 0..n - 1 {
        let row = sbp.q_row(k);
        let row_sum: f64 = row.iter().sum();
        for m in 0..3 {
            let qa: f64 = row.iter().zip(a).map(|(q, v)| q * v[m]).sum();
            acc[m] += qa + a[k][m] * row_sum;
        }
        out[k + 1] = acc;
    }
    out[n] = a[n - 1];
    out
}

/// Largest `|sum_l D_l a^l_m|` over nodes and components.
pub fn gcl_residual(geom: &ElementGeometry, ops: &TensorOps) -> f64 {
    let np = ops.nodes_per_element();
    let mut field = vec![0.0; np];
    let mut d = vec![0.0; np];
    let mut worst: f64 = 0.0;
    for m in 0..3 {
        let mut sum = vec![0.0; np];
        for l in 0..3 {
            for a in 0..np {
                field[a] = geom.metric[a][l][m];
            }
            ops.apply_d(l, &field, &mut d);
            for a in 0..np {
                sum[a] += d[a];
            }
        }
        worst = sum.iter().fold(worst, |w, v| w.max(v.abs()));
    }
    worst
}

/// Neighbour node coincident with face node `(a, b)` of `face`, if interior.
pub fn neighbour_face_node(
    mesh: &HexMesh,
    ops: &TensorOps,
    e: usize,
    face: usize,
    a: usize,
    b: usize,
) -> Option<(usize, usize, usize)> {
    match mesh.faces[e][face] {
        FaceLink::Interior {
            element,
            face: nf,
            orientation,
        } => {
            let (u, v) = orientation.map(a, b, ops.n());
            Some((element, nf, ops.face_node(nf, u, v)))
        }
        FaceLink::Boundary(_) => None,
    }
}

/// Outward sign of a face: `-1` on the low side, `+1` on the high side.
pub fn face_sign(face: usize) -> f64 {
    if face % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Largest mismatch between outward face metrics, and between nodal
/// coordinates up to one rigid translation per face, on every interior face.
pub fn face_mismatch(mesh: &HexMesh, geoms: &[ElementGeometry], ops: &TensorOps) -> (f64, f64) {
    let n = ops.n();
    let (mut dm, mut dx): (f64, f64) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        for f in 0..6 {
            let mut shift: Option<Vec3> = None;
            for b in 0..n {
                for a in 0..n {
                    let Some((ne, nf, nn)) = neighbour_face_node(mesh, ops, e, f, a, b) else {
                        continue;
                    };
                    let own = ops.face_node(f, a, b);
                    let m1 = geoms[e].metric[own][f / 2];
                    let m2 = geoms[ne].metric[nn][nf / 2];
                    let (s1, s2) = (face_sign(f), face_sign(nf));
                    let x1 = geoms[e].x[own];
                    let x2 = geoms[ne].x[nn];
                    let d = [x2[0] - x1[0], x2[1] - x1[1], x2[2] - x1[2]];
                    let s0 = *shift.get_or_insert(d);
                    for c in 0..3 {
                        dm = dm.max((s1 * m1[c] + s2 * m2[c]).abs());
                        dx = dx.max((d[c] - s0[c]).abs());
                    }
                }
            }
        }
    }
    (dm, dx)
}
