use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{math, Vec3};

/// Deterministic near-uniform points on the unit sphere by regular ring
/// placement: each point covers area `4π/n`, rings are spaced by the square
/// root of that area and each ring holds a number of points proportional to
/// its circumference.
///
/// The returned count is close to, not exactly, `n_target`. A target of 1
/// yields the single point `+z`.
pub fn equidistributed_sphere_points(n_target: usize) -> Vec<Vec3> {
    if n_target <= 1 {
        return vec![Vec3::Z];
    }
    let area = 4.0 * PI / n_target as f64;
    let d = math::sqrt(area);
    let rings = (math::round(PI / d) as usize).max(1);
    let d_theta = PI / rings as f64;
    let d_phi = area / d_theta;
    let mut out = Vec::with_capacity(n_target + n_target / 10);
    for m in 0..rings {
        let theta = PI * (m as f64 + 0.5) / rings as f64;
        let per_ring = (math::round(2.0 * PI * math::sin(theta) / d_phi) as usize).max(1);
        for k in 0..per_ring {
            let phi = 2.0 * PI * k as f64 / per_ring as f64;
            let st = math::sin(theta);
            out.push(Vec3::new(st * math::cos(phi), st * math::sin(phi), math::cos(theta)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let p = equidistributed_sphere_points(1);
        assert_eq!(p.len(), 1);
        assert!((p[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thousand_points_unit_and_near_count() {
        let p = equidistributed_sphere_points(1000);
        assert!(p.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
        assert!((p.len() as i64 - 1000).abs() <= 100, "got {}", p.len());
    }

    #[test]
    fn counts_within_ten_percent() {
        for n in (100..=3000).step_by(37) {
            let m = equidistributed_sphere_points(n).len();
            assert!((m as f64 - n as f64).abs() <= 0.1 * n as f64, "n = {n}, m = {m}");
        }
    }

    #[test]
    fn nearest_neighbor_spacing_is_regular() {
        // brute-force nearest-neighbor angles
        let p = equidistributed_sphere_points(1000);
        let nn: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, a)| {
                p.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| a.dot(*b).clamp(-1.0, 1.0).acos())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mean = nn.iter().sum::<f64>() / nn.len() as f64;
        let var = nn.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nn.len() as f64;
        let cv = var.sqrt() / mean;
        assert!(cv < 0.35, "coefficient of variation {cv}");
    }

    #[test]
    fn deterministic() {
        assert_eq!(equidistributed_sphere_points(500), equidistributed_sphere_points(500));
    }
}
