//! Finite-element reference solver for two-dimensional Schrödinger operators
//! `−½∇² + V` on a rectangle with homogeneous Dirichlet boundary.
//!
//! Nine-node biquadratic elements, 3×3 Gauss quadrature per element and a
//! shift-and-invert Arnoldi iteration on the generalized problem `Kψ = εMψ`.

mod eigen;
mod sparse;
mod table;

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::problems::henon_heiles_potential;
use crate::quadrature::QuadratureRule;

pub use eigen::{shift_invert_eigs, EigenOptions, EigenPair, EigenReport};
pub use sparse::{BandLu, SparseMatrix};
pub use table::{match_ordered, table1, write_table_csv, TableColumn, TABLE_MESHES};

/// Quadratic Lagrange polynomials on the nodes `{0, ½, 1}` and their slopes.
fn lagrange(t: f64) -> ([f64; 3], [f64; 3]) {
    (
        [
            2.0 * t * t - 3.0 * t + 1.0,
            4.0 * t * (1.0 - t),
            2.0 * t * t - t,
        ],
        [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
    )
}

/// Local node `i = 3b + a` sits at `(a/2, b/2)` of the unit reference square.
pub const LOCAL_NODES: usize = 9;

/// Shape function `i` at `(ξ, η)`: `(Φ, ∂Φ/∂ξ, ∂Φ/∂η)`.
pub fn basis_eval(i: usize, xi: f64, eta: f64) -> Result<(f64, f64, f64)> {
    if i >= LOCAL_NODES {
        return Err(Error::InvalidArgument(format!(
            "local node index {i} out of range 0..9"
        )));
    }
    let (a, b) = (i % 3, i / 3);
    let (lx, dx) = lagrange(xi);
    let (ly, dy) = lagrange(eta);
    Ok((lx[a] * ly[b], dx[a] * ly[b], lx[a] * dy[b]))
}

/// Structured mesh of `n_x × n_y` nine-node elements. Global nodes are
/// numbered row-major (`x` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    nx: usize,
    ny: usize,
    coords: Vec<[f64; 2]>,
    elements: Vec<[usize; LOCAL_NODES]>,
    boundary: Vec<bool>,
}

impl Mesh2D {
    pub fn rectangle(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(
                "mesh needs at least one element per axis".into(),
            ));
        }
        if !(x.0 < x.1 && y.0 < y.1) {
            return Err(Error::InvalidArgument(format!("empty box {x:?} × {y:?}")));
        }
        let (px, py) = (2 * nx + 1, 2 * ny + 1);
        let mut coords = Vec::with_capacity(px * py);
        let mut boundary = Vec::with_capacity(px * py);
        for j in 0..py {
            for i in 0..px {
                coords.push([
                    x.0 + (x.1 - x.0) * i as f64 / (px - 1) as f64,
                    y.0 + (y.1 - y.0) * j as f64 / (py - 1) as f64,
                ]);
                boundary.push(i == 0 || j == 0 || i == px - 1 || j == py - 1);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for ey in 0..ny {
            for ex in 0..nx {
                let mut conn = [0; LOCAL_NODES];
                for (l, c) in conn.iter_mut().enumerate() {
                    *c = (2 * ey + l / 3) * px + 2 * ex + l % 3;
                }
                elements.push(conn);
            }
        }
        Ok(Self {
            nx,
            ny,
            coords,
            elements,
            boundary,
        })
    }

    /// `n × n` elements on `[lo, hi]²`.
    pub fn square(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::rectangle(n, n, (lo, hi), (lo, hi))
    }

    /// Same connectivity with every node moved by `f`.
    pub fn mapped(mut self, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        for c in &mut self.coords {
            let (x, y) = f(c[0], c[1]);
            *c = [x, y];
        }
        self
    }

    pub fn elements_per_axis(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn elements(&self) -> &[[usize; LOCAL_NODES]] {
        &self.elements
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    /// `node x y boundary` per line after a header.
    pub fn write_nodes<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "node x y boundary")?;
        for (i, c) in self.coords.iter().enumerate() {
            writeln!(
                w,
                "{i} {:.16e} {:.16e} {}",
                c[0],
                c[1],
                u8::from(self.boundary[i])
            )?;
        }
        Ok(())
    }

    /// One line of nine global node ids per element.
    pub fn write_elements<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.elements {
            let ids: Vec<String> = e.iter().map(usize::to_string).collect();
            writeln!(w, "{}", ids.join(" "))?;
        }
        Ok(())
    }
}

/// Stiffness and mass matrices with Dirichlet rows and columns replaced by
/// identity rows in `K` and zero rows in `M`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub boundary: Vec<bool>,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }
}

/// Element stiffness and mass matrices, `(K_e, M_e)`, row-major 9×9.
pub fn element_matrices(
    mesh: &Mesh2D,
    element: usize,
    potential: &dyn Fn(f64, f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let conn = &mesh.elements[element];
    let gauss = QuadratureRule::gauss_legendre(3, 0.0, 1.0)?;
    let (mut ke, mut me) = (vec![0.0; 81], vec![0.0; 81]);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &n in conn {
        for d in 0..2 {
            lo[d] = lo[d].min(mesh.coords[n][d]);
            hi[d] = hi[d].max(mesh.coords[n][d]);
        }
    }
    let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    for (&xi, &wx) in gauss.nodes().iter().zip(gauss.weights()) {
        for (&eta, &wy) in gauss.nodes().iter().zip(gauss.weights()) {
            let mut phi = [0.0; LOCAL_NODES];
            let mut dref = [[0.0; 2]; LOCAL_NODES];
            let (mut x, mut y) = (0.0, 0.0);
            let mut jac = [[0.0; 2]; 2];
            for l in 0..LOCAL_NODES {
                let (v, dxi, deta) = basis_eval(l, xi, eta)?;
                phi[l] = v;
                dref[l] = [dxi, deta];
                let c = mesh.coords[conn[l]];
                x += v * c[0];
                y += v * c[1];
                jac[0][0] += dxi * c[0];
                jac[0][1] += deta * c[0];
                jac[1][0] += dxi * c[1];
                jac[1][1] += deta * c[1];
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if !(det > 1e-12 * area) {
                return Err(Error::SingularElement(element));
            }
            // ∇Φ = J^{-T} ∇_ref Φ
            let grad: Vec<[f64; 2]> = dref
                .iter()
                .map(|d| {
                    [
                        (jac[1][1] * d[0] - jac[1][0] * d[1]) / det,
                        (-jac[0][1] * d[0] + jac[0][0] * d[1]) / det,
                    ]
                })
                .collect();
            let w = wx * wy * det;
            let v = potential(x, y);
            for i in 0..LOCAL_NODES {
                for j in 0..LOCAL_NODES {
                    let pp = phi[i] * phi[j];
                    let gg = grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1];
                    ke[i * 9 + j] += w * (0.5 * gg + v * pp);
                    me[i * 9 + j] += w * pp;
                }
            }
        }
    }
    Ok((ke, me))
}

/// Global assembly without boundary conditions.
pub fn assemble_free(
    mesh: &Mesh2D,
    potential: &dyn Fn(f64, f64) -> f64,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let n_el = mesh.elements.len();
    let (mut kt, mut mt) = (Vec::with_capacity(81 * n_el), Vec::with_capacity(81 * n_el));
    for (e, conn) in mesh.elements.iter().enumerate() {
        let (ke, me) = element_matrices(mesh, e, potential)?;
        for i in 0..LOCAL_NODES {
            for j in 0..LOCAL_NODES {
                kt.push((conn[i], conn[j], ke[i * 9 + j]));
                mt.push((conn[i], conn[j], me[i * 9 + j]));
            }
        }
    }
    let n = mesh.n_nodes();
    Ok((
        SparseMatrix::from_triplets(n, kt)?,
        SparseMatrix::from_triplets(n, mt)?,
    ))
}

/// Assembled pencil with boundary nodes pinned: unit diagonal in `K`, zero
/// rows and columns in `M`.
pub fn assemble(mesh: &Mesh2D, potential: &dyn Fn(f64, f64) -> f64) -> Result<AssembledSystem> {
    let (mut stiffness, mut mass) = assemble_free(mesh, potential)?;
    stiffness.pin(&mesh.boundary, 1.0);
    mass.pin(&mesh.boundary, 0.0);
    Ok(AssembledSystem {
        stiffness,
        mass,
        boundary: mesh.boundary.clone(),
    })
}

/// Side of the square box used for the Hénon–Heiles reference runs.
pub const HENON_HEILES_BOX: (f64, f64) = (-6.0, 6.0);

/// Hénon–Heiles pencil on an `n × n` element mesh of [`HENON_HEILES_BOX`].
pub fn henon_heiles_system(n: usize) -> Result<(Mesh2D, AssembledSystem)> {
    let mesh = Mesh2D::square(n, HENON_HEILES_BOX.0, HENON_HEILES_BOX.1)?;
    let sys = assemble(&mesh, &henon_heiles_potential)?;
    Ok((mesh, sys))
}
