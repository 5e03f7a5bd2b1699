//! Node-to-unknown numbering with periodic folding and Dirichlet elimination.

use super::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Homogeneous Dirichlet nodes are eliminated from the unknowns.
    DirichletRows,
    /// Periodic slaves share the unknown of their master.
    PeriodicFold,
    /// Periodic fold plus a zero-mean condition enforced by a multiplier.
    ZeroMeanLagrange,
    /// No constraints (natural boundary conditions).
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    node_base: Vec<Option<usize>>,
    n_base: usize,
    components: usize,
    mode: ConstraintMode,
}

impl DofMap {
    pub fn free(mesh: &Mesh, components: usize) -> Self {
        let n = mesh.num_nodes();
        Self { node_base: (0..n).map(Some).collect(), n_base: n, components, mode: ConstraintMode::None }
    }

    /// Folds every periodic slave onto its master.
    pub fn periodic(mesh: &Mesh, components: usize, zero_mean: bool) -> Self {
        let n = mesh.num_nodes();
        let mut master: Vec<usize> = (0..n).collect();
        for &(m, s) in &mesh.periodic_pairs {
            master[s] = m;
        }
        let mut node_base = vec![None; n];
        let mut next = 0;
        for i in 0..n {
            if master[i] == i {
                node_base[i] = Some(next);
                next += 1;
            }
        }
        for i in 0..n {
            if master[i] != i {
                node_base[i] = node_base[master[i]];
            }
        }
        let mode = if zero_mean { ConstraintMode::ZeroMeanLagrange } else { ConstraintMode::PeriodicFold };
        Self { node_base, n_base: next, components, mode }
    }

    /// Eliminates nodes on outer boundary edges (homogeneous Dirichlet).
    pub fn dirichlet(mesh: &Mesh, components: usize) -> Self {
        let fixed = mesh.outer_nodes();
        let mut next = 0;
        let node_base = fixed
            .iter()
            .map(|&f| {
                if f {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        Self { node_base, n_base: next, components, mode: ConstraintMode::DirichletRows }
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_dofs(&self) -> usize {
        self.n_base * self.components
    }

    pub fn num_nodes(&self) -> usize {
        self.node_base.len()
    }

    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.node_base[node].map(|b| b * self.components + comp)
    }

    /// Nodal values (components interleaved) from unknowns; eliminated nodes
    /// get zero.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let c = self.components;
        let mut out = vec![0.0; self.num_nodes() * c];
        for (node, b) in self.node_base.iter().enumerate() {
            if let Some(b) = b {
                out[node * c..(node + 1) * c].copy_from_slice(&x[b * c..(b + 1) * c]);
            }
        }
        out
    }

    /// Unknowns from nodal values (a representative node per unknown).
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        let c = self.components;
        let mut out = vec![0.0; self.num_dofs()];
        for (node, b) in self.node_base.iter().enumerate() {
            if let Some(b) = b {
                out[b * c..(b + 1) * c].copy_from_slice(&nodal[node * c..(node + 1) * c]);
            }
        }
        out
    }

    /// Indicator of component `comp` over all unknowns.
    pub fn component_indicator(&self, comp: usize) -> Vec<f64> {
        (0..self.num_dofs()).map(|d| if d % self.components == comp { 1.0 } else { 0.0 }).collect()
    }
}
