//! Gauss-Legendre integration along straight segments in the complex plane.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::elliptic::EllipticData;
use crate::error::{Error, Result};

pub const MAX_NODES: usize = 256;
const MIN_CLEARANCE: f64 = 1e-6;

/// A directed straight segment with a starting quadrature order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Complex64,
    pub end: Complex64,
    pub nodes: usize,
}

impl Segment {
    pub fn new(start: Complex64, end: Complex64) -> Result<Self> {
        Self::with_nodes(start, end, 16)
    }

    pub fn with_nodes(start: Complex64, end: Complex64, nodes: usize) -> Result<Self> {
        if start == end {
            return Err(Error::Domain("degenerate segment".into()));
        }
        if !(1..=MAX_NODES).contains(&nodes) {
            return Err(Error::Domain(format!("quadrature order {nodes} outside 1..={MAX_NODES}")));
        }
        Ok(Self { start, end, nodes })
    }

    pub fn reversed(self) -> Self {
        Self {
            start: self.end,
            end: self.start,
            ..self
        }
    }

    pub fn point(&self, s: f64) -> Complex64 {
        self.start + s * (self.end - self.start)
    }

    /// Smallest distance from the segment to a lattice point.
    pub fn clearance(&self, data: &EllipticData) -> f64 {
        // The nearest lattice point to the closest segment point is among
        // the nearest lattice points to a dense set of samples.
        let len = (self.end - self.start).norm();
        let samples = ((len / 0.05).ceil() as usize).max(2);
        let mut best = f64::INFINITY;
        for i in 0..=samples {
            let (lp, _) = data.nearest_lattice_point(self.point(i as f64 / samples as f64));
            best = best.min(distance_to_segment(lp, self.start, self.end));
        }
        best
    }

    /// Fails with a pole error if the segment passes within `1e-6` of the lattice.
    pub fn check_clearance(&self, data: &EllipticData) -> Result<()> {
        let clearance = self.clearance(data);
        if clearance < MIN_CLEARANCE {
            let mid = self.point(0.5);
            return Err(Error::Pole {
                what: "integration segment".into(),
                lattice_point: data.nearest_lattice_point(mid).0,
                distance: clearance,
            });
        }
        Ok(())
    }
}

fn distance_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = ((p - a) * d.conj()).re / d.norm_sqr();
    (p - (a + t.clamp(0.0, 1.0) * d)).norm()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_NODES).map(|k| if k == 0 { (vec![], vec![]) } else { gauss_legendre(k) }).collect());
    &rules[n]
}

fn fixed_order<F>(f: &F, seg: &Segment, n: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let (nodes, weights) = rule(n);
    let half = (seg.end - seg.start) / 2.0;
    let mid = (seg.end + seg.start) / 2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

/// `∫ f dz` along `seg`, doubling the order until two consecutive
/// estimates agree to `tol` (absolute).
pub fn segment_integral<F>(f: F, seg: &Segment, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut n = seg.nodes;
    let mut previous = fixed_order(&f, seg, n)?;
    while 2 * n <= MAX_NODES {
        n *= 2;
        let last = fixed_order(&f, seg, n)?;
        if (last - previous).norm() <= tol {
            return Ok(last);
        }
        previous = last;
    }
    let last = previous;
    let previous = fixed_order(&f, seg, n / 2)?;
    Err(Error::Quadrature { previous, last })
}

/// Integral along a polyline, splitting each edge into panels no longer
/// than `max_panel`.
pub fn polyline_integral<F>(f: F, vertices: &[Complex64], max_panel: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for pair in vertices.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let panels = ((b - a).norm() / max_panel).ceil().max(1.0) as usize;
        for p in 0..panels {
            let s = Segment::new(a + (b - a) * (p as f64 / panels as f64), a + (b - a) * ((p + 1) as f64 / panels as f64))?;
            acc += segment_integral(&f, &s, tol / panels as f64)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{c_constants, lattice_invariants};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_over_unit_interval() {
        let seg = Segment::new(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let v = segment_integral(|_| Ok(c(1.0, 0.0)), &seg, 1e-14).unwrap();
        assert!((v - 1.0).norm() < 1e-14);
    }

    #[test]
    fn reversed_segment_negates() {
        let seg = Segment::new(c(0.1, 0.2), c(0.9, -0.4)).unwrap();
        let f = |z: Complex64| Ok(z.exp() * z.sin());
        let a = segment_integral(f, &seg, 1e-13).unwrap();
        let b = segment_integral(f, &seg.reversed(), 1e-13).unwrap();
        assert!((a + b).norm() < 1e-13);
        // Antiderivative of e^z sin z is e^z (sin z - cos z)/2.
        let prim = |z: Complex64| z.exp() * (z.sin() - z.cos()) / 2.0;
        assert!((a - (prim(seg.end) - prim(seg.start))).norm() < 1e-13);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        for n in [1, 2, 7, 16, 64, 256] {
            let (x, w) = rule(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            // exact for x^(2n-1) and x^(2n-2)
            let m = (2 * n - 2) as i32;
            let exact = 2.0 / (m as f64 + 1.0);
            let q: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(m)).sum();
            assert!((q - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn shifted_path_integral_of_wp_minus_c1_vanishes() {
        let d = lattice_invariants(c(0.2, 1.1)).unwrap();
        let (c1, _) = c_constants(&d);
        let shift = c(0.0, 0.1 * d.tau().im);
        let seg = Segment::new(shift, shift + 1.0).unwrap();
        let f = |z| Ok(d.wp(z)? - c1);
        let v = segment_integral(f, &seg, 1e-12).unwrap();
        assert!(v.norm() < 1e-10, "{v}");
        // independent composite trapezoid on the periodic integrand
        let m = 2000;
        let trap: Complex64 = (0..m).map(|j| d.wp(shift + j as f64 / m as f64).unwrap() - c1).sum::<Complex64>() / m as f64;
        assert!(trap.norm() < 1e-10, "{trap}");
    }

    #[test]
    fn non_convergence_reports_estimates() {
        let seg = Segment::new(c(-1.0, 1e-4), c(1.0, 1e-4)).unwrap();
        let r = segment_integral(|z: Complex64| Ok(1.0 / z), &seg, 1e-14);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn clearance_detects_lattice_points() {
        let d = lattice_invariants(c(0.0, 1.0)).unwrap();
        let seg = Segment::new(c(-0.5, 0.0), c(0.5, 0.0)).unwrap();
        assert!(seg.check_clearance(&d).is_err());
        let seg = Segment::new(c(-0.5, 0.1), c(0.5, 0.1)).unwrap();
        assert!((seg.clearance(&d) - 0.1).abs() < 1e-12);
    }
}
