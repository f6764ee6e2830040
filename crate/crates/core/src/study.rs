//! Benchmark orchestration: the half-disk contact setup, uniform and
//! adaptive solves, penalty sweeps, and energy-norm distances between
//! nested solutions.

use crate::amr::{discretize, solve_fixed, Discretization};
use crate::contact::{interpenetration, pair_nodes, ContactPairing, ContactSolution, PenaltyConfig};
use crate::error::{Error, Result};
use crate::fem::Materials;
use crate::mesh::{generate_half_disk_pair, Mesh, SPAN};
use crate::quadrature::GaussRule;
use std::collections::HashMap;

/// Geometry and material data of the half-disk contact benchmark.
#[derive(Debug, Clone)]
pub struct HertzSetup {
    pub radius: f64,
    pub gap: f64,
    /// Dirichlet factor: each flat face moves by `gap/2 + alpha * radius`
    /// toward the other solid.
    pub alpha: f64,
    pub n0: usize,
    pub geom_order: usize,
    pub materials: Materials,
}

impl HertzSetup {
    pub fn mesh(&self) -> Result<Mesh> {
        generate_half_disk_pair(self.radius, self.gap, self.n0, self.geom_order)
    }

    /// Prescribed displacement magnitude on each flat face.
    pub fn face_displacement(&self) -> f64 {
        0.5 * self.gap + self.alpha * self.radius
    }

    /// Approach axis: from solid 1 (below) into solid 2 (above).
    pub fn normal(&self) -> [f64; 2] {
        [0.0, 1.0]
    }

    /// Fully clamped flats: solid 1 moves up, solid 2 down.
    pub fn dirichlet(&self) -> impl Fn(u8, [f64; 2]) -> [Option<f64>; 2] {
        let u_d = self.face_displacement();
        move |solid, _pos| {
            let v = if solid == 1 { u_d } else { -u_d };
            [Some(0.0), Some(v)]
        }
    }
}

/// A solved contact state carrying everything needed for post-processing
/// and for energy-norm comparison against another solve.
pub struct Solved {
    pub mesh: Mesh,
    pub disc: Discretization,
    pub u_all: Vec<f64>,
    pub pairing: ContactPairing,
    pub contact: ContactSolution,
}

impl Solved {
    pub fn interpenetration(&self) -> f64 {
        interpenetration(
            &self.pairing.b_all,
            &self.pairing.gaps,
            &self.u_all,
            &self.contact.active,
        )
    }

    pub fn n_conforming_dofs(&self) -> usize {
        self.disc.dofs.n_conforming_dofs()
    }
}

/// Solves the benchmark on a given mesh. `warm_from` carries the active
/// set of a previous solve on a coarser ancestor of this mesh (node ids
/// survive refinement).
pub fn solve_hertz_on_mesh(
    setup: &HertzSetup,
    mesh: Mesh,
    order: usize,
    penalty: &PenaltyConfig,
    warm_from: Option<&Solved>,
) -> Result<Solved> {
    let disc = discretize(&mesh, order)?;
    let pairing = pair_nodes(&mesh, &disc.space, &disc.dofs, setup.normal())?;
    let mut penalty = penalty.clone();
    if let Some(prev) = warm_from {
        let index: HashMap<(usize, usize), usize> = pairing
            .pairs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        let carried: Vec<usize> = prev
            .contact
            .active
            .iter()
            .filter_map(|&i| index.get(&prev.pairing.pairs[i]).copied())
            .collect();
        penalty.initial_active = Some(carried);
    }
    let dirichlet = setup.dirichlet();
    let contact = solve_fixed(&mesh, &disc, &setup.materials, &pairing, &dirichlet, &penalty)?;
    if !contact.converged {
        return Err(Error::ContactNotConverged {
            sweeps: contact.sweeps.len(),
        });
    }
    Ok(Solved {
        u_all: contact.u_all.clone(),
        mesh,
        disc,
        pairing,
        contact,
    })
}

/// Solves the benchmark at every uniform refinement level `0..=levels`,
/// warm-starting each level from the previous one. Returns one solve per
/// level.
pub fn solve_uniform_cascade(
    setup: &HertzSetup,
    levels: usize,
    order: usize,
    penalty: &PenaltyConfig,
) -> Result<Vec<Solved>> {
    let mut out: Vec<Solved> = Vec::with_capacity(levels + 1);
    let mut mesh = setup.mesh()?;
    for level in 0..=levels {
        let solved = solve_hertz_on_mesh(setup, mesh.clone(), order, penalty, out.last())?;
        out.push(solved);
        if level < levels {
            mesh.refine_uniform()?;
        }
    }
    Ok(out)
}

/// Interpenetration against the penalty coefficient on a fixed mesh.
pub fn penalty_sweep(
    setup: &HertzSetup,
    pre_levels: usize,
    stiffness_values: &[f64],
    base: &PenaltyConfig,
) -> Result<Vec<(f64, f64)>> {
    let mut mesh = setup.mesh()?;
    for _ in 0..pre_levels {
        mesh.refine_uniform()?;
    }
    let mut out = Vec::with_capacity(stiffness_values.len());
    let mut warm: Option<Solved> = None;
    for &k_n in stiffness_values {
        let mut penalty = base.clone();
        penalty.stiffness = k_n;
        let solved = solve_hertz_on_mesh(setup, mesh.clone(), 1, &penalty, warm.as_ref())?;
        out.push((k_n, solved.interpenetration()));
        warm = Some(solved);
    }
    Ok(out)
}

// ----------------------------------------------------------------------
// Energy-norm distance between nested solutions.
// ----------------------------------------------------------------------

/// Energy norm `sqrt(int (e_a - e_b) : D : (e_a - e_b))` of the difference
/// between two solves whose meshes refine the same initial mesh. The
/// integration walks the common refinement of the two element trees, so
/// both strains are polynomial on every integration cell.
pub fn energy_norm_distance(a: &Solved, b: &Solved, materials: &Materials) -> Result<f64> {
    if a.mesh.n_roots() != b.mesh.n_roots() {
        return Err(Error::Config(
            "energy distance requires meshes from the same initial mesh".into(),
        ));
    }
    let order = a.disc.space.order.max(b.disc.space.order);
    let rule = GaussRule::new(order + 2);
    let mut total = 0.0;
    for root in 0..a.mesh.n_roots() as u32 {
        total += walk_cell(a, b, materials, &rule, root, 0, 0, 0)?;
    }
    Ok(total.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn walk_cell(
    a: &Solved,
    b: &Solved,
    materials: &Materials,
    rule: &GaussRule,
    root: u32,
    x0: u64,
    y0: u64,
    level: u8,
) -> Result<f64> {
    let size = SPAN >> level;
    let half = size / 2;
    let cx = x0 + half;
    let cy = y0 + half;
    let ea = a.mesh.locate(root, cx, cy);
    let eb = b.mesh.locate(root, cx, cy);
    if a.mesh.element(ea).level > level || b.mesh.element(eb).level > level {
        let mut sum = 0.0;
        for (dx, dy) in [(0, 0), (half, 0), (half, half), (0, half)] {
            sum += walk_cell(a, b, materials, rule, root, x0 + dx, y0 + dy, level + 1)?;
        }
        return Ok(sum);
    }
    // Both solutions are polynomial on this cell; integrate the strain
    // difference energy.
    let d = materials.of(a.mesh.solid_of(ea))?.stiffness_matrix();
    let scale = 0.5 * size as f64 / SPAN as f64;
    let mut acc = 0.0;
    for (gj, &py) in rule.points.iter().enumerate() {
        for (gi, &px) in rule.points.iter().enumerate() {
            let u = (x0 as f64 + 0.5 * (px + 1.0) * size as f64) / SPAN as f64;
            let v = (y0 as f64 + 0.5 * (py + 1.0) * size as f64) / SPAN as f64;
            let j_root = a.mesh.root_jacobian(root, u, v);
            let det_cell = (j_root[0][0] * j_root[1][1] - j_root[0][1] * j_root[1][0])
                * scale
                * scale
                * 4.0;
            if det_cell <= 0.0 {
                return Err(Error::Geometry("non-positive Jacobian in overlay".into()));
            }
            let eps_a = strain_at(a, ea, root, u, v, &j_root)?;
            let eps_b = strain_at(b, eb, root, u, v, &j_root)?;
            let de = [eps_a[0] - eps_b[0], eps_a[1] - eps_b[1], eps_a[2] - eps_b[2]];
            let sd = [
                d[0][0] * de[0] + d[0][1] * de[1],
                d[1][0] * de[0] + d[1][1] * de[1],
                d[2][2] * de[2],
            ];
            let energy = de[0] * sd[0] + de[1] * sd[1] + de[2] * sd[2];
            acc += rule.weights[gi] * rule.weights[gj] * det_cell * energy;
        }
    }
    Ok(acc)
}

/// Voigt strain (with engineering shear) of a solution at a root-frame
/// point inside leaf `e`; `j_root` is the root Jacobian at that point.
fn strain_at(
    s: &Solved,
    e: usize,
    _root: u32,
    u: f64,
    v: f64,
    j_root: &[[f64; 2]; 2],
) -> Result<[f64; 3]> {
    let el = s.mesh.element(e);
    let leaf_scale = 0.5 * el.size() as f64 / SPAN as f64;
    let j = [
        [j_root[0][0] * leaf_scale, j_root[0][1] * leaf_scale],
        [j_root[1][0] * leaf_scale, j_root[1][1] * leaf_scale],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det <= 0.0 {
        return Err(Error::Geometry("non-positive Jacobian in overlay".into()));
    }
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    // Local coordinates of (u, v) inside the leaf.
    let sz = el.size() as f64 / SPAN as f64;
    let xi = 2.0 * (u - el.x0 as f64 / SPAN as f64) / sz - 1.0;
    let eta = 2.0 * (v - el.y0 as f64 / SPAN as f64) / sz - 1.0;
    let le = s
        .disc
        .space
        .leaves
        .binary_search(&e)
        .map_err(|_| Error::Internal(format!("element {e} is not a leaf of the space")))?;
    let grads = s.disc.space.shape_gradients(xi, eta);
    let nodes = &s.disc.space.elem_nodes[le];
    let mut eps = [0.0f64; 3];
    for (idx, rg) in grads.iter().enumerate() {
        let gx = inv[0][0] * rg[0] + inv[1][0] * rg[1];
        let gy = inv[0][1] * rg[0] + inv[1][1] * rg[1];
        let ux = s.u_all[s.disc.dofs.dof(nodes[idx], 0)];
        let uy = s.u_all[s.disc.dofs.dof(nodes[idx], 1)];
        eps[0] += gx * ux;
        eps[1] += gy * uy;
        eps[2] += gy * ux + gx * uy;
    }
    Ok(eps)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
