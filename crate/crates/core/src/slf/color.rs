use core::sync::atomic::{AtomicUsize, Ordering};

use crate::math;

static CLAMPED: AtomicUsize = AtomicUsize::new(0);

/// Number of out-of-range inputs clamped by the conversions so far.
pub fn clamp_warnings() -> usize {
    CLAMPED.load(Ordering::Relaxed)
}

fn clamp_unit(c: f64) -> f64 {
    if (0.0..=1.0).contains(&c) {
        c
    } else {
        CLAMPED.fetch_add(1, Ordering::Relaxed);
        if c > 1.0 {
            1.0
        } else {
            // NaN lands here too
            0.0
        }
    }
}

/// sRGB electro-optical transfer function.
pub fn srgb_to_linear(c: f64) -> f64 {
    let c = clamp_unit(c);
    if c <= 0.04045 {
        c / 12.92
    } else {
        math::powf((c + 0.055) / 1.055, 2.4)
    }
}

/// Inverse of [`srgb_to_linear`].
pub fn linear_to_srgb(c: f64) -> f64 {
    let c = clamp_unit(c);
    if c <= 0.0031308 {
        c * 12.92
    } else if c == 1.0 {
        1.0
    } else {
        1.055 * math::powf(c, 1.0 / 2.4) - 0.055
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        assert_eq!(srgb_to_linear(0.0), 0.0);
        assert_eq!(srgb_to_linear(1.0), 1.0);
        assert_eq!(linear_to_srgb(0.0), 0.0);
        assert_eq!(linear_to_srgb(1.0), 1.0);
    }

    #[test]
    fn mid_gray_matches_piecewise_formula() {
        // ((0.5 + 0.055) / 1.055)^2.4 evaluated independently
        let expected = ((0.5f64 + 0.055) / 1.055).powf(2.4);
        assert!((srgb_to_linear(0.5) - expected).abs() < 1e-15);
        assert!((srgb_to_linear(0.5) - 0.214_041_140_5).abs() < 1e-9);
    }

    #[test]
    fn round_trip_on_grid() {
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            assert!((linear_to_srgb(srgb_to_linear(x)) - x).abs() < 1e-9, "x = {x}");
            assert!((srgb_to_linear(linear_to_srgb(x)) - x).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn monotone() {
        let mut prev = (-1.0, -1.0);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let cur = (srgb_to_linear(x), linear_to_srgb(x));
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    #[test]
    fn out_of_range_is_clamped_and_counted() {
        let before = clamp_warnings();
        assert_eq!(srgb_to_linear(1.5), 1.0);
        assert_eq!(linear_to_srgb(-0.2), 0.0);
        assert!(clamp_warnings() >= before + 2);
    }
}
