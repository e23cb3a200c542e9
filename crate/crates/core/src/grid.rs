//! Uniform structured grids on a box `[0, L_0] x ... x [0, L_{d-1}]`.
//!
//! Nodes are numbered row-major with axis 0 slowest, so in two dimensions
//! node `(i0, i1)` has index `i0 * n1 + i1`. Quadrature weights are the
//! tensor-product trapezoid rule.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::sum::compensated;

pub const MAX_DIM: usize = 2;

#[derive(Debug, Clone)]
pub struct Grid {
    nodes: Vec<usize>,
    lengths: Vec<f64>,
    weights: Vec<f64>,
}

/// Serializable description of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: Vec<usize>,
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.lengths == other.lengths
    }
}

fn trapezoid_1d(n: usize, length: f64) -> Vec<f64> {
    if n == 1 {
        return vec![length];
    }
    let h = length / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

impl Grid {
    pub fn new(nodes: &[usize], lengths: &[f64]) -> Result<Self> {
        if nodes.is_empty() || nodes.len() > MAX_DIM {
            return Err(LabError::invalid(format!(
                "grid dimension must be 1 or 2, got {}",
                nodes.len()
            )));
        }
        if lengths.len() != nodes.len() {
            return Err(LabError::shape("one box length per axis required"));
        }
        if nodes.contains(&0) {
            return Err(LabError::invalid("nodes per axis must be positive"));
        }
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(LabError::invalid("box lengths must be finite and positive"));
        }
        let per_axis: Vec<Vec<f64>> = nodes.iter().zip(lengths).map(|(&n, &l)| trapezoid_1d(n, l)).collect();
        let weights = match per_axis.as_slice() {
            [w0] => w0.clone(),
            [w0, w1] => w0.iter().flat_map(|a| w1.iter().map(move |b| a * b)).collect(),
            _ => unreachable!(),
        };
        Ok(Grid {
            nodes: nodes.to_vec(),
            lengths: lengths.to_vec(),
            weights,
        })
    }

    /// Grid on the unit box.
    pub fn unit(nodes: &[usize]) -> Result<Self> {
        Grid::new(nodes, &vec![1.0; nodes.len()])
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        if spec.n.len() != spec.d {
            return Err(LabError::shape(format!(
                "grid spec has d = {} but {} node counts",
                spec.d,
                spec.n.len()
            )));
        }
        match &spec.lengths {
            Some(l) => Grid::new(&spec.n, l),
            None => Grid::unit(&spec.n),
        }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            d: self.dim(),
            n: self.nodes.clone(),
            lengths: Some(self.lengths.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Spacing along `axis`; for a single-node axis this is the box length.
    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.nodes[axis];
        if n > 1 {
            self.lengths[axis] / (n - 1) as f64
        } else {
            self.lengths[axis]
        }
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    /// Multi-index of node `i`.
    pub fn multi_index(&self, i: usize) -> [usize; MAX_DIM] {
        match self.dim() {
            1 => [i, 0],
            _ => [i / self.nodes[1], i % self.nodes[1]],
        }
    }

    pub fn node_index(&self, idx: [usize; MAX_DIM]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] * self.nodes[1] + idx[1],
        }
    }

    /// Coordinates of node `i` (unused axes are zero).
    pub fn coords(&self, i: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(i);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            x[k] = idx[k] as f64 * self.spacing(k);
        }
        x
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.nodes.iter().map(|&n| n.saturating_sub(1)).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Whether every axis has at least one cell, i.e. gradients exist.
    pub fn has_cells(&self) -> bool {
        self.nodes.iter().all(|&n| n >= 2)
    }

    /// Corner nodes of cell `c` together with their offsets along each axis.
    /// Corners are ordered by the binary expansion of the corner number, with
    /// axis 0 the most significant bit.
    pub fn cell_corners(&self, c: usize) -> Vec<(usize, [u8; MAX_DIM])> {
        let cells = self.cells_per_axis();
        let d = self.dim();
        let base = match d {
            1 => [c, 0],
            _ => [c / cells[1], c % cells[1]],
        };
        (0..1usize << d)
            .map(|corner| {
                let mut off = [0u8; MAX_DIM];
                let mut idx = base;
                for k in 0..d {
                    let bit = ((corner >> (d - 1 - k)) & 1) as u8;
                    off[k] = bit;
                    idx[k] += bit as usize;
                }
                (self.node_index(idx), off)
            })
            .collect()
    }

    /// Cell-center coordinates of cell `c`.
    pub fn cell_center(&self, c: usize) -> [f64; MAX_DIM] {
        let corners = self.cell_corners(c);
        let first = self.coords(corners[0].0);
        let mut x = first;
        for k in 0..self.dim() {
            x[k] += 0.5 * self.spacing(k);
        }
        x
    }

    /// Sum of the quadrature weights, computed with compensated summation.
    pub fn weight_sum(&self) -> f64 {
        compensated(self.weights.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_volume() {
        for nodes in [vec![2], vec![17], vec![5, 9], vec![33, 33]] {
            let lengths: Vec<f64> = nodes.iter().map(|_| 1.7).collect();
            let g = Grid::new(&nodes, &lengths).unwrap();
            assert!((g.weight_sum() - g.volume()).abs() <= 4.0 * f64::EPSILON * g.volume());
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn corner_weights_are_quarter() {
        let g = Grid::unit(&[3, 3]).unwrap();
        assert_eq!(g.weights()[0], 0.0625);
        assert_eq!(g.weights()[1], 0.125);
        assert_eq!(g.weights()[4], 0.25);
    }

    #[test]
    fn single_node_axis_carries_full_length() {
        let g = Grid::unit(&[1]).unwrap();
        assert_eq!(g.weights(), &[1.0]);
        assert!(!g.has_cells());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Grid::unit(&[]).is_err());
        assert!(Grid::unit(&[2, 2, 2]).is_err());
        assert!(Grid::new(&[3], &[0.0]).is_err());
        assert!(Grid::unit(&[0]).is_err());
    }

    #[test]
    fn cell_corners_2d() {
        let g = Grid::unit(&[3, 4]).unwrap();
        assert_eq!(g.cell_count(), 6);
        let corners: Vec<usize> = g.cell_corners(4).into_iter().map(|c| c.0).collect();
        // cell (1, 1): nodes (1,1) (1,2) (2,1) (2,2)
        assert_eq!(corners, vec![5, 6, 9, 10]);
        let x = g.cell_center(4);
        assert!((x[0] - 0.75).abs() < 1e-15);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }
}
