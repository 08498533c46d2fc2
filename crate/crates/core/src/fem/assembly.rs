//! Elemental operators and block assembly of the saddle-point system
//!
//! ```text
//! [ A  Bᵀ  Jᵀ ] [ q ]   [ g ]
//! [ B  0   0  ] [ p ] = [ h ]
//! [ J  0   0  ] [ λ ]   [ 0 ]
//! ```
//!
//! with `A` a weighted flux mass (plus optional axial stiffness),
//! `B_kj = -(∂s ψ_j, φ_k)` and `J` the vertex jump operator.

use alloc::vec;
use alloc::vec::Vec;

use super::quadrature::QuadratureRule;
use super::space::{Element, EdgeSpace};
use super::sparse::{CsrMatrix, Triplets};
use crate::error::{Error, Result};
use crate::network::{Network, VertexClassification};

/// Location of a quadrature point handed to coefficient callbacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    /// Edge index.
    pub edge: usize,
    /// Local cell index on the edge.
    pub cell: usize,
    /// Arclength from the edge's source.
    pub s: f64,
}

/// Default number of Gauss points for bilinear forms on `space`.
pub fn default_order(space: &EdgeSpace) -> usize {
    (2 * space.element.degree()).max(1)
}

fn checked(value: f64, p: &QuadPoint) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidCoefficient {
            edge: p.edge,
            s: p.s,
            value,
        })
    }
}

/// Visits every cell with its quadrature points mapped to physical
/// coordinates: `visit(edge, cell, h, [(x_ref, s, weight * h)])`.
fn for_each_cell(
    space: &EdgeSpace,
    rule: &QuadratureRule,
    mut visit: impl FnMut(usize, usize, f64, &[(f64, f64, f64)]) -> Result<()>,
) -> Result<()> {
    let mut pts = Vec::with_capacity(rule.len());
    for e in 0..space.num_edges() {
        let h = space.cell_size(e);
        for k in 0..space.cells_per_edge() {
            pts.clear();
            let s0 = k as f64 * h;
            pts.extend(rule.iter().map(|(x, w)| (x, s0 + x * h, w * h)));
            visit(e, k, h, &pts)?;
        }
    }
    Ok(())
}

/// `M_ij = ∫ c ψ_i ψ_j ds` with a pointwise coefficient `c ≥ 0`.
pub fn assemble_weighted_mass(
    space: &EdgeSpace,
    coeff: impl Fn(&QuadPoint) -> f64,
    order: usize,
) -> Result<CsrMatrix> {
    let rule = QuadratureRule::gauss_legendre(order)?;
    let nd = space.element.dofs_per_cell();
    let mut t = Triplets::new(space.dim(), space.dim());
    for_each_cell(space, &rule, |e, k, _h, pts| {
        let dofs = space.cell_dofs(e, k);
        let mut local = [[0.0; 3]; 3];
        for &(x, s, w) in pts {
            let p = QuadPoint { edge: e, cell: k, s };
            let c = checked(coeff(&p), &p)?;
            let phi = space.element.values(x);
            for i in 0..nd {
                for j in 0..nd {
                    local[i][j] += w * c * phi[i] * phi[j];
                }
            }
        }
        for i in 0..nd {
            for j in 0..nd {
                t.push(dofs[i], dofs[j], local[i][j]);
            }
        }
        Ok(())
    })?;
    Ok(t.to_csr())
}

/// `K_ij = ∫ c ∂sψ_i ∂sψ_j ds` with a pointwise coefficient `c ≥ 0`.
pub fn assemble_stiffness(
    space: &EdgeSpace,
    coeff: impl Fn(&QuadPoint) -> f64,
    order: usize,
) -> Result<CsrMatrix> {
    let rule = QuadratureRule::gauss_legendre(order)?;
    let nd = space.element.dofs_per_cell();
    let mut t = Triplets::new(space.dim(), space.dim());
    for_each_cell(space, &rule, |e, k, h, pts| {
        let dofs = space.cell_dofs(e, k);
        let mut local = [[0.0; 3]; 3];
        for &(x, s, w) in pts {
            let p = QuadPoint { edge: e, cell: k, s };
            let c = checked(coeff(&p), &p)?;
            let dphi = space.element.derivatives(x);
            for i in 0..nd {
                for j in 0..nd {
                    local[i][j] += w * c * dphi[i] * dphi[j] / (h * h);
                }
            }
        }
        for i in 0..nd {
            for j in 0..nd {
                t.push(dofs[i], dofs[j], local[i][j]);
            }
        }
        Ok(())
    })?;
    Ok(t.to_csr())
}

/// `B_kj = -∫ ∂sψ_j φ_k ds`, rows indexed by pressure dofs.
pub fn assemble_divergence(flux: &EdgeSpace, pressure: &EdgeSpace) -> Result<CsrMatrix> {
    if !flux.same_mesh(pressure) {
        return Err(Error::InvalidParameter(
            "flux and pressure spaces live on different meshes".into(),
        ));
    }
    let order = (flux.element.degree() + pressure.element.degree()).max(1);
    let rule = QuadratureRule::gauss_legendre(order)?;
    let nf = flux.element.dofs_per_cell();
    let np = pressure.element.dofs_per_cell();
    let mut t = Triplets::new(pressure.dim(), flux.dim());
    for_each_cell(flux, &rule, |e, k, h, pts| {
        let fd = flux.cell_dofs(e, k);
        let pd = pressure.cell_dofs(e, k);
        let mut local = [[0.0; 3]; 3];
        for &(x, _s, w) in pts {
            let dpsi = flux.element.derivatives(x);
            let phi = pressure.element.values(x);
            for a in 0..np {
                for b in 0..nf {
                    local[a][b] -= w * phi[a] * dpsi[b] / h;
                }
            }
        }
        for a in 0..np {
            for b in 0..nf {
                t.push(pd[a], fd[b], local[a][b]);
            }
        }
        Ok(())
    })?;
    Ok(t.to_csr())
}

/// Jump operator: row `b` holds `+1` at the target-end dof of every edge
/// entering interior vertex `b` and `-1` at the source-end dof of every
/// edge leaving it, so `(J q)_b = Σ_in q(b) - Σ_out q(b)`.
pub fn assemble_jump_matrix(
    flux: &EdgeSpace,
    net: &Network,
    cls: &VertexClassification,
) -> Result<CsrMatrix> {
    if flux.element == Element::P0 {
        return Err(Error::InvalidParameter("jump needs a space with endpoint dofs".into()));
    }
    if flux.num_edges() != net.num_edges() {
        return Err(Error::DimensionMismatch {
            what: "jump matrix edges",
            expected: net.num_edges(),
            found: flux.num_edges(),
        });
    }
    let (incoming, outgoing) = net.incidence();
    let mut t = Triplets::new(cls.bifurcations.len(), flux.dim());
    for (row, &b) in cls.bifurcations.iter().enumerate() {
        for &e in &incoming[b] {
            t.push(row, flux.last_dof(e), 1.0);
        }
        for &e in &outgoing[b] {
            t.push(row, flux.first_dof(e), -1.0);
        }
    }
    Ok(t.to_csr())
}

/// Load vector `∫ f φ_i ds`.
pub fn assemble_load(
    space: &EdgeSpace,
    f: impl Fn(&QuadPoint) -> f64,
    order: usize,
) -> Result<Vec<f64>> {
    let rule = QuadratureRule::gauss_legendre(order)?;
    let nd = space.element.dofs_per_cell();
    let mut out = vec![0.0; space.dim()];
    for_each_cell(space, &rule, |e, k, _h, pts| {
        let dofs = space.cell_dofs(e, k);
        for &(x, s, w) in pts {
            let v = f(&QuadPoint { edge: e, cell: k, s });
            if !v.is_finite() {
                return Err(Error::InvalidCoefficient { edge: e, s, value: v });
            }
            let phi = space.element.values(x);
            for i in 0..nd {
                out[dofs[i]] += w * v * phi[i];
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Assembled saddle-point system with block offsets
/// `[0, flux_end, pressure_end, total]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub offsets: [usize; 4],
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.offsets[3]
    }

    /// Fixes unknown `dof` to `value`, eliminating its row and column so
    /// the matrix stays symmetric.
    pub fn constrain(&mut self, dof: usize, value: f64) {
        self.constrain_many(&[(dof, value)]);
    }

    pub fn constrain_many(&mut self, fixed: &[(usize, f64)]) {
        if fixed.is_empty() {
            return;
        }
        let n = self.dim();
        let mut is_fixed = vec![None; n];
        for &(d, v) in fixed {
            is_fixed[d] = Some(v);
        }
        let mut t = Triplets::new(n, n);
        for (i, j, v) in self.matrix.iter() {
            match (is_fixed[i], is_fixed[j]) {
                (None, None) => t.push(i, j, v),
                (None, Some(g)) => self.rhs[i] -= v * g,
                _ => {}
            }
        }
        for &(d, v) in fixed {
            t.push(d, d, 1.0);
            self.rhs[d] = v;
        }
        self.matrix = t.to_csr();
    }
}

/// Builds `[[A, Bᵀ, Jᵀ], [B, 0, 0], [J, 0, 0]]` and the stacked right-hand
/// side `[g; h; k]`.
pub fn assemble_saddle(
    a: &CsrMatrix,
    b: &CsrMatrix,
    j: &CsrMatrix,
    g: &[f64],
    h: &[f64],
    k: &[f64],
) -> Result<BlockSystem> {
    let nq = a.nrows;
    let check = |what, expected: usize, found: usize| {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            })
        }
    };
    check("A columns", nq, a.ncols)?;
    check("B columns", nq, b.ncols)?;
    check("J columns", nq, j.ncols)?;
    check("flux right-hand side", nq, g.len())?;
    check("pressure right-hand side", b.nrows, h.len())?;
    check("multiplier right-hand side", j.nrows, k.len())?;
    let np = b.nrows;
    let nm = j.nrows;
    let n = nq + np + nm;
    let mut t = Triplets::new(n, n);
    t.push_block(0, 0, a);
    t.push_block_transposed(0, nq, b);
    t.push_block_transposed(0, nq + np, j);
    t.push_block(nq, 0, b);
    t.push_block(nq + np, 0, j);
    let mut rhs = Vec::with_capacity(n);
    rhs.extend_from_slice(g);
    rhs.extend_from_slice(h);
    rhs.extend_from_slice(k);
    Ok(BlockSystem {
        matrix: t.to_csr(),
        rhs,
        offsets: [0, nq, nq + np, n],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::space::DiscreteFunction;
    use crate::mesh::NetworkMesh;
    use crate::network::{
        classify_vertices, generate_line, generate_tree, generate_y, TreeParams,
    };

    fn one_cell(len: f64) -> NetworkMesh {
        NetworkMesh::build(&generate_line(1, len, 0.1).unwrap(), 1).unwrap()
    }

    fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
        a.iter()
            .zip(b)
            .all(|(r, s)| r.iter().zip(s).all(|(x, y)| (x - y).abs() <= tol))
    }

    #[test]
    fn p1_element_matrices() {
        let h = 0.3;
        let sp = EdgeSpace::new(&one_cell(h), Element::P1);
        let m = assemble_weighted_mass(&sp, |_| 1.0, 2).unwrap().to_dense();
        let expect = vec![vec![2.0 * h / 6.0, h / 6.0], vec![h / 6.0, 2.0 * h / 6.0]];
        assert!(close(&m, &expect, 1e-15));
        let z = assemble_weighted_mass(&sp, |_| 0.0, 2).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let m5 = assemble_weighted_mass(&sp, |_| 5.0, 2).unwrap().to_dense();
        let scaled: Vec<Vec<f64>> = expect.iter().map(|r| r.iter().map(|v| 5.0 * v).collect()).collect();
        assert!(close(&m5, &scaled, 1e-15));

        let k = assemble_stiffness(&sp, |_| 1.0, 2).unwrap().to_dense();
        let expect = vec![vec![1.0 / h, -1.0 / h], vec![-1.0 / h, 1.0 / h]];
        assert!(close(&k, &expect, 1e-13));
    }

    #[test]
    fn stiffness_kernel_is_edgewise_constants() {
        let y = generate_y([1.0, 0.5, 0.7], [1.0; 3]).unwrap();
        let mesh = NetworkMesh::build(&y, 2).unwrap();
        for el in [Element::P1, Element::P2] {
            let sp = EdgeSpace::new(&mesh, el);
            let k = assemble_stiffness(&sp, |_| 1.3, 4).unwrap();
            // piecewise constants with different values per edge
            let c = DiscreteFunction::interpolate(sp.clone(), |e, _| e as f64 + 1.0);
            assert!(k.mul_vec(&c.coeffs).iter().all(|v| v.abs() < 1e-12));
            // and nothing else: the dense kernel has dimension = number of edges
            assert_eq!(nullity(&k.to_dense()), 3);
        }
    }

    fn nullity(m: &[Vec<f64>]) -> usize {
        let mut a = m.to_vec();
        let n = a.len();
        let mut rank = 0;
        for col in 0..n {
            let piv = (rank..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()));
            let Some(p) = piv else { break };
            if a[p][col].abs() < 1e-9 {
                continue;
            }
            a.swap(rank, p);
            for i in 0..n {
                if i != rank {
                    let l = a[i][col] / a[rank][col];
                    for j in 0..n {
                        a[i][j] -= l * a[rank][j];
                    }
                }
            }
            rank += 1;
        }
        n - rank
    }

    #[test]
    fn mass_matches_analytic_integrals() {
        // P2 on one cell of length h, coefficient c(s) = 1 + s (degree 1 ≤ 2·2 − 2)
        let h = 0.7;
        let sp = EdgeSpace::new(&one_cell(h), Element::P2);
        let m = assemble_weighted_mass(&sp, |p| 1.0 + p.s, 4).unwrap();
        // high-order reference via 10-point rule on the same integrand
        let r = assemble_weighted_mass(&sp, |p| 1.0 + p.s, 10).unwrap();
        assert!(close(&m.to_dense(), &r.to_dense(), 1e-14));
        // closed form for c = 1: h/30 [[4, 2, -1], [2, 16, 2], [-1, 2, 4]]
        let m1 = assemble_weighted_mass(&sp, |_| 1.0, 4).unwrap().to_dense();
        let ref1 = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m1[i][j] - h * ref1[i][j] / 30.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        let sp = EdgeSpace::new(&one_cell(1.0), Element::P1);
        assert!(matches!(
            assemble_weighted_mass(&sp, |_| f64::NAN, 2),
            Err(Error::InvalidCoefficient { .. })
        ));
        assert!(assemble_stiffness(&sp, |_| -1.0, 2).is_err());
    }

    #[test]
    fn divergence_examples() {
        let mesh = one_cell(0.4);
        let q = EdgeSpace::new(&mesh, Element::P1);
        let p = EdgeSpace::new(&mesh, Element::P0);
        let b = assemble_divergence(&q, &p).unwrap();
        assert_eq!(b.to_dense(), vec![vec![1.0, -1.0]]);

        let y = generate_y([1.0; 3], [1.0; 3]).unwrap();
        let mesh = NetworkMesh::build(&y, 1).unwrap();
        let q = EdgeSpace::new(&mesh, Element::P1);
        let p = EdgeSpace::new(&mesh, Element::P0);
        let b = assemble_divergence(&q, &p).unwrap();
        assert_eq!((b.nrows, b.ncols), (3, 6));
        for (i, j, _) in b.iter() {
            assert_eq!(j / 2, i);
        }

        let mesh = NetworkMesh::build(&y, 3).unwrap();
        for (fe, pe) in [(Element::P1, Element::P0), (Element::P2, Element::P1)] {
            let q = EdgeSpace::new(&mesh, fe);
            let p = EdgeSpace::new(&mesh, pe);
            let b = assemble_divergence(&q, &p).unwrap();
            let c = DiscreteFunction::interpolate(q, |e, _| 2.0 + e as f64);
            assert!(b.mul_vec(&c.coeffs).iter().all(|v| v.abs() < 1e-14));
        }
        let other = EdgeSpace::new(&NetworkMesh::build(&y, 2).unwrap(), Element::P0);
        assert!(assemble_divergence(&EdgeSpace::new(&mesh, Element::P1), &other).is_err());
    }

    #[test]
    fn jump_matrix_examples() {
        let y = generate_y([1.0; 3], [1.0; 3]).unwrap();
        let cls = classify_vertices(&y).unwrap();
        let mesh = NetworkMesh::build(&y, 1).unwrap();
        let q = EdgeSpace::new(&mesh, Element::P1);
        let j = assemble_jump_matrix(&q, &y, &cls).unwrap();
        assert_eq!(j.to_dense(), vec![vec![0.0, 1.0, -1.0, 0.0, -1.0, 0.0]]);

        let path = generate_line(2, 2.0, 0.1).unwrap();
        let cls = classify_vertices(&path).unwrap();
        let q = EdgeSpace::new(&NetworkMesh::build(&path, 1).unwrap(), Element::P1);
        let j = assemble_jump_matrix(&q, &path, &cls).unwrap();
        assert_eq!(j.to_dense(), vec![vec![0.0, 1.0, -1.0, 0.0]]);

        let tree = generate_tree(&TreeParams::default()).unwrap();
        let cls = classify_vertices(&tree).unwrap();
        let q = EdgeSpace::new(&NetworkMesh::build(&tree, 3).unwrap(), Element::P2);
        let j = assemble_jump_matrix(&q, &tree, &cls).unwrap();
        assert_eq!(j.nrows, 7);
        assert!((0..7).all(|r| j.row(r).count() == 3));
    }

    #[test]
    fn saddle_layout() {
        let y = generate_y([1.0; 3], [1.0; 3]).unwrap();
        let cls = classify_vertices(&y).unwrap();
        let mesh = NetworkMesh::build(&y, 1).unwrap();
        let q = EdgeSpace::new(&mesh, Element::P1);
        let p = EdgeSpace::new(&mesh, Element::P0);
        let a = assemble_weighted_mass(&q, |_| 2.0, 2).unwrap();
        let b = assemble_divergence(&q, &p).unwrap();
        let j = assemble_jump_matrix(&q, &y, &cls).unwrap();
        let sys = assemble_saddle(&a, &b, &j, &[0.0; 6], &[0.0; 3], &[0.0]).unwrap();
        assert_eq!(sys.dim(), 10);
        assert_eq!(sys.offsets, [0, 6, 9, 10]);
        assert_eq!(sys.matrix.asymmetry(), 0.0);
        let d = sys.matrix.to_dense();
        for r in 6..10 {
            for c in 6..10 {
                assert_eq!(d[r][c], 0.0);
            }
        }
        assert_eq!(d[9][1], 1.0);
        assert_eq!(d[1][9], 1.0);
        assert!(assemble_saddle(&a, &b, &j, &[0.0; 5], &[0.0; 3], &[0.0]).is_err());
    }
}
