//! Two-chart model of the Riemann sphere with quadrature grids.
//!
//! The sphere is covered by the closed unit discs of two affine charts whose
//! coordinates are related by w = 1/z on the overlap; the overlap of the two
//! closed discs is the measure-zero equator, so integrating a chart-wise
//! density over both discs integrates it over the sphere. Grids are tensor
//! products of Gauss-Legendre radial nodes and uniform angular nodes, with
//! the polar Jacobian folded into the weights.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Coordinate z, covering |z| <= 1.
    Zero,
    /// Coordinate w = 1/z, covering |w| <= 1.
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coord: Complex64,
}

#[derive(Debug, Clone, Copy)]
pub struct GridNode {
    pub point: ChartPoint,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub radial_order: usize,
    pub angular_order: usize,
    nodes: Vec<GridNode>,
}

/// Gauss-Legendre nodes and weights on [0, 1], found by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Gauss-Legendre radial times uniform angular nodes on the unit disc of each
/// chart; weights carry the polar Jacobian, so they sum to the disc area pi
/// per chart.
pub fn make_grid(radial_order: usize, angular_order: usize) -> SphereGrid {
    assert!(radial_order >= 2 && angular_order >= 2, "grid orders must be >= 2");
    let radial = gauss_legendre_01(radial_order);
    let dtheta = 2.0 * std::f64::consts::PI / angular_order as f64;
    let mut nodes = Vec::with_capacity(2 * radial_order * angular_order);
    for &chart in &[Chart::Zero, Chart::Infinity] {
        for &(r, wr) in &radial {
            for a in 0..angular_order {
                // offset angles keep nodes off the real axis, where several
                // catalog frames have their isolated rank drops
                let theta = dtheta * (a as f64 + 0.5);
                let coord = Complex64::from_polar(r, theta);
                nodes.push(GridNode {
                    point: ChartPoint { chart, coord },
                    weight: wr * dtheta * r,
                });
            }
        }
    }
    SphereGrid {
        radial_order,
        angular_order,
        nodes,
    }
}

impl SphereGrid {
    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Quadrature sum over both charts of a density expressed in each chart's own
/// coordinate.
pub fn integrate_sphere(grid: &SphereGrid, density: impl Fn(&ChartPoint) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for node in &grid.nodes {
        let v = density(&node.point);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                chart: match node.point.chart {
                    Chart::Zero => "0",
                    Chart::Infinity => "infinity",
                },
                coord: node.point.coord.to_string(),
            });
        }
        acc += node.weight * v;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn node_count_and_weight_sums() {
        let g = make_grid(2, 4);
        assert_eq!(g.len(), 16);
        let per_chart: f64 = g
            .nodes()
            .iter()
            .filter(|n| n.point.chart == Chart::Zero)
            .map(|n| n.weight)
            .sum();
        assert!((per_chart - PI).abs() < 1e-12, "chart weight sum {per_chart}");
    }

    #[test]
    fn constant_density_gives_sphere_area_of_cover() {
        let g = make_grid(3, 5);
        let v = integrate_sphere(&g, |_| 1.0).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn fubini_study_mass_on_one_chart() {
        let g = make_grid(20, 16);
        let mut acc = 0.0;
        for n in g.nodes() {
            if n.point.chart == Chart::Zero {
                let m = n.point.coord.norm_sqr();
                acc += n.weight / ((1.0 + m) * (1.0 + m));
            }
        }
        assert!((acc - PI / 2.0).abs() < 1e-10, "got {acc}");
    }

    #[test]
    fn inversion_symmetric_density_splits_evenly() {
        // 1/(1+|z|^2)^2 transforms into the same expression of w under
        // z = 1/w together with the |dz|^2 Jacobian, so both charts must
        // contribute the same amount
        let g = make_grid(24, 20);
        let f = |p: &ChartPoint| {
            let m = p.coord.norm_sqr();
            1.0 / ((1.0 + m) * (1.0 + m))
        };
        let chart: Vec<f64> = [Chart::Zero, Chart::Infinity]
            .iter()
            .map(|&c| {
                g.nodes()
                    .iter()
                    .filter(|n| n.point.chart == c)
                    .map(|n| n.weight * f(&n.point))
                    .sum()
            })
            .collect();
        assert!((chart[0] - chart[1]).abs() < 1e-12);
        let total = integrate_sphere(&g, f).unwrap();
        assert!((total - PI).abs() < 1e-10);
    }

    #[test]
    fn non_finite_density_is_reported() {
        let g = make_grid(2, 2);
        let r = integrate_sphere(&g, |p| 1.0 / (p.coord.norm() - p.coord.norm()));
        assert!(r.is_err());
    }

    #[test]
    fn quadrature_refinement_converges() {
        let f = |p: &ChartPoint| (3.0 * p.coord.re).cos() * (-p.coord.norm_sqr()).exp();
        let coarse = integrate_sphere(&make_grid(8, 12), f).unwrap();
        let mid = integrate_sphere(&make_grid(16, 24), f).unwrap();
        let fine = integrate_sphere(&make_grid(32, 48), f).unwrap();
        assert!((mid - fine).abs() < (coarse - fine).abs() * 0.5 + 1e-13);
    }
}
