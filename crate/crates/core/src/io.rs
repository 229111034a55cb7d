//! Mesh and solution snapshots: VTK legacy ASCII for 2D, two-column text
//! for 1D.

use std::io::{self, Write};

use crate::fem::FeFunction;
use crate::mesh::Mesh;
use crate::scalar::Real;

/// 2D mesh as a VTK legacy unstructured grid (POINTS / CELLS / CELL_TYPES).
pub fn write_vtk_mesh<S: Real, W: Write>(mesh: &Mesh<S>, w: &mut W) -> io::Result<()> {
    assert_eq!(mesh.dim(), 2, "VTK export is the 2D format");
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "elmfem snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{:.9e} {:.9e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", mesh.n_elements(), 4 * mesh.n_elements())?;
    for e in 0..mesh.n_elements() {
        let vs = mesh.element_verts(e);
        writeln!(w, "3 {} {} {}", vs[0], vs[1], vs[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_elements())?;
    for _ in 0..mesh.n_elements() {
        writeln!(w, "5")?;
    }
    Ok(())
}

/// 2D solution: the mesh plus one scalar POINT_DATA field.
pub fn write_vtk_solution<S: Real, W: Write>(
    u: &FeFunction<S>,
    field_name: &str,
    w: &mut W,
) -> io::Result<()> {
    write_vtk_mesh(u.mesh(), w)?;
    writeln!(w, "POINT_DATA {}", u.mesh().n_vertices())?;
    writeln!(w, "SCALARS {field_name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for c in u.coeffs() {
        writeln!(w, "{c:.9e}")?;
    }
    Ok(())
}

/// Vertex ids ordered by x coordinate (1D profiles read top to bottom).
fn sorted_1d_vertices<S: Real>(mesh: &Mesh<S>) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..mesh.n_vertices()).collect();
    ids.sort_by(|&a, &b| mesh.vertex(a)[0].partial_cmp(&mesh.vertex(b)[0]).unwrap());
    ids
}

/// 1D mesh as two columns: x and the boundary marker (1 = Dirichlet).
pub fn write_1d_mesh<S: Real, W: Write>(mesh: &Mesh<S>, w: &mut W) -> io::Result<()> {
    assert_eq!(mesh.dim(), 1);
    for v in sorted_1d_vertices(mesh) {
        let marker = if mesh.is_boundary_vertex(v) { 1 } else { 0 };
        writeln!(w, "{:.12e} {marker}", mesh.vertex(v)[0])?;
    }
    Ok(())
}

/// 1D solution as two columns: x and the nodal value.
pub fn write_1d_solution<S: Real, W: Write>(u: &FeFunction<S>, w: &mut W) -> io::Result<()> {
    let mesh = u.mesh();
    assert_eq!(mesh.dim(), 1);
    for v in sorted_1d_vertices(mesh) {
        writeln!(w, "{:.12e} {:.12e}", mesh.vertex(v)[0], u.coeffs()[v])?;
    }
    Ok(())
}

/// Dimension-dispatching solution snapshot.
pub fn write_solution_snapshot<S: Real, W: Write>(
    u: &FeFunction<S>,
    field_name: &str,
    w: &mut W,
) -> io::Result<()> {
    if u.mesh().dim() == 1 {
        write_1d_solution(u, w)
    } else {
        write_vtk_solution(u, field_name, w)
    }
}

/// Dimension-dispatching mesh snapshot.
pub fn write_mesh_snapshot<S: Real, W: Write>(mesh: &Mesh<S>, w: &mut W) -> io::Result<()> {
    if mesh.dim() == 1 {
        write_1d_mesh(mesh, w)
    } else {
        write_vtk_mesh(mesh, w)
    }
}
