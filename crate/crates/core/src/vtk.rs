//! Legacy ASCII VTK output of the leaf mesh with point and cell data.

use crate::mesh::Mesh;
use std::io::Write;

/// Point data: values per mesh node (the writer maps them onto the leaf
/// corner nodes it exports). Cell data: one value per leaf, in leaf order.
#[derive(Debug, Default)]
pub struct VtkFields<'a> {
    /// (name, per-node 2-vectors) written as 3-component VECTORS.
    pub point_vectors: Vec<(&'a str, &'a [[f64; 2]])>,
    /// (name, per-node scalars or tensor components) written as SCALARS.
    pub point_scalars: Vec<(&'a str, &'a [f64])>,
    /// (name, per-leaf values).
    pub cell_scalars: Vec<(&'a str, &'a [f64])>,
}

/// Writes the leaf elements as an UNSTRUCTURED_GRID of linear quads.
pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, fields: &VtkFields) -> std::io::Result<()> {
    let leaves = mesh.leaves();
    // Compact node numbering over the leaf corners.
    let mut used = vec![usize::MAX; mesh.n_nodes()];
    let mut points: Vec<usize> = Vec::new();
    for &e in &leaves {
        for &c in &mesh.element(e).corners {
            if used[c] == usize::MAX {
                used[c] = points.len();
                points.push(c);
            }
        }
    }

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "contact-amr mesh dump")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for &n in &points {
        let p = mesh.node(n);
        writeln!(w, "{:.17e} {:.17e} 0.0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", leaves.len(), 5 * leaves.len())?;
    for &e in &leaves {
        let c = mesh.element(e).corners;
        writeln!(w, "4 {} {} {} {}", used[c[0]], used[c[1]], used[c[2]], used[c[3]])?;
    }
    writeln!(w, "CELL_TYPES {}", leaves.len())?;
    for _ in &leaves {
        writeln!(w, "9")?;
    }

    if !fields.point_vectors.is_empty() || !fields.point_scalars.is_empty() {
        writeln!(w, "POINT_DATA {}", points.len())?;
        for (name, data) in &fields.point_vectors {
            writeln!(w, "VECTORS {name} double")?;
            for &n in &points {
                let v = data.get(n).copied().unwrap_or([0.0; 2]);
                writeln!(w, "{:.17e} {:.17e} 0.0", v[0], v[1])?;
            }
        }
        for (name, data) in &fields.point_scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for &n in &points {
                writeln!(w, "{:.17e}", data.get(n).copied().unwrap_or(0.0))?;
            }
        }
    }
    if !fields.cell_scalars.is_empty() {
        writeln!(w, "CELL_DATA {}", leaves.len())?;
        for (name, data) in &fields.cell_scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for i in 0..leaves.len() {
                writeln!(w, "{:.17e}", data.get(i).copied().unwrap_or(0.0))?;
            }
        }
    }
    Ok(())
}
