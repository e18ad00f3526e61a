use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{FlowRegime, PipeProblem};

pub const MIN_NODES: usize = 32;

/// Node-to-node shrink factor toward the wall for turbulent grids at 256
/// radial nodes. Other node counts use `ratio^(255 / intervals)` so that
/// refining the grid refines it everywhere.
pub const TURBULENT_WALL_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stretch {
    Uniform,
    /// Consecutive intervals shrink by `ratio` from the axis to the wall.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Radial node count including the axis and the wall.
    pub n_rho: usize,
    /// Number of implicit steps in `xi`; fields hold `n_xi + 1` layers.
    pub n_xi: usize,
    pub stretch: Stretch,
}

impl GridSpec {
    pub fn uniform(n_rho: usize, n_xi: usize) -> Result<Self> {
        let g = GridSpec { n_rho, n_xi, stretch: Stretch::Uniform };
        g.validate()?;
        Ok(g)
    }

    /// Uniform grid for laminar flow, wall-clustered grid for turbulent flow.
    pub fn for_regime(regime: &FlowRegime, n_rho: usize, n_xi: usize) -> Result<Self> {
        let stretch = match regime {
            FlowRegime::Laminar => Stretch::Uniform,
            FlowRegime::Turbulent(_) => {
                let intervals = n_rho.saturating_sub(1).max(1) as f64;
                Stretch::Geometric { ratio: TURBULENT_WALL_RATIO.powf(255.0 / intervals) }
            }
        };
        let g = GridSpec { n_rho, n_xi, stretch };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rho < MIN_NODES || self.n_xi < MIN_NODES {
            return invalid(format!(
                "grid needs at least {MIN_NODES} nodes per direction, got n_rho = {}, n_xi = {}",
                self.n_rho, self.n_xi
            ));
        }
        if let Stretch::Geometric { ratio } = self.stretch {
            if !(ratio.is_finite() && ratio >= 1.0) {
                return invalid(format!("geometric stretch ratio must be >= 1, got {ratio}"));
            }
        }
        Ok(())
    }

    pub fn with_n_xi(self, n_xi: usize) -> Self {
        GridSpec { n_xi, ..self }
    }

    /// Radial nodes, `rho_0 = 0` to `rho_{n-1} = 1`.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.n_rho - 1;
        let mut nodes = Vec::with_capacity(self.n_rho);
        nodes.push(0.0);
        match self.stretch {
            Stretch::Uniform => nodes.extend((1..=m).map(|k| k as f64 / m as f64)),
            Stretch::Geometric { ratio } if ratio == 1.0 => nodes.extend((1..=m).map(|k| k as f64 / m as f64)),
            Stretch::Geometric { ratio } => {
                let q = 1.0 / ratio;
                let h0 = (1.0 - q) / (1.0 - q.powi(m as i32));
                let mut x = 0.0;
                let mut h = h0;
                for _ in 0..m {
                    x += h;
                    nodes.push(x);
                    h *= q;
                }
            }
        }
        *nodes.last_mut().unwrap() = 1.0;
        nodes
    }

    pub fn d_xi(&self) -> f64 {
        1.0 / self.n_xi as f64
    }
}

/// Excess temperature on the `(rho, xi)` grid, stored layer by layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field2D {
    pub grid: GridSpec,
    pub zeta0: f64,
    pub problem: PipeProblem,
    pub rho: Vec<f64>,
    /// `(n_xi + 1) * n_rho` values, layer `j` at `j * n_rho..(j + 1) * n_rho`.
    pub u: Vec<f64>,
}

impl Field2D {
    pub(crate) fn with_inlet(problem: &PipeProblem, grid: GridSpec, zeta0: f64) -> Self {
        let rho = grid.nodes();
        let mut u = vec![0.0; (grid.n_xi + 1) * grid.n_rho];
        for (i, &r) in rho.iter().enumerate() {
            u[i] = problem.inlet.eval(r);
        }
        u[grid.n_rho - 1] = 0.0;
        Field2D { grid, zeta0, problem: problem.clone(), rho, u }
    }

    pub fn n_layers(&self) -> usize {
        self.grid.n_xi + 1
    }

    pub fn layer(&self, j: usize) -> &[f64] {
        let n = self.grid.n_rho;
        &self.u[j * n..(j + 1) * n]
    }

    pub(crate) fn layer_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.grid.n_rho;
        &mut self.u[j * n..(j + 1) * n]
    }

    pub fn outlet(&self) -> &[f64] {
        self.layer(self.grid.n_xi)
    }

    pub fn xi(&self, j: usize) -> f64 {
        j as f64 / self.grid.n_xi as f64
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Layer of this field nearest below `xi`, used to seed another solve.
    pub(crate) fn layer_at_xi(&self, xi: f64) -> &[f64] {
        let j = ((xi * self.grid.n_xi as f64 + 1e-9).floor() as usize).min(self.grid.n_xi);
        self.layer(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = GridSpec::uniform(33, 32).unwrap();
        let n = g.nodes();
        assert_eq!(n.len(), 33);
        assert_eq!(n[0], 0.0);
        assert_eq!(n[32], 1.0);
        assert!((n[16] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn geometric_nodes_cluster_at_wall() {
        let regime = FlowRegime::turbulent(1e5).unwrap();
        let g = GridSpec::for_regime(&regime, 256, 64).unwrap();
        let n = g.nodes();
        assert_eq!(n.len(), 256);
        assert_eq!(*n.last().unwrap(), 1.0);
        assert!(n.windows(2).all(|w| w[1] > w[0]));
        let first = n[1] - n[0];
        let last = n[255] - n[254];
        assert!((first / last / 1.05f64.powi(254) - 1.0).abs() < 1e-6);
        let fine = GridSpec::for_regime(&regime, 511, 64).unwrap().nodes();
        assert!(fine[1] < n[1]);
    }

    #[test]
    fn too_coarse_is_rejected() {
        assert!(GridSpec::uniform(16, 64).is_err());
        assert!(GridSpec::uniform(64, 8).is_err());
    }
}
