use rand::Rng;
use rand_distr::StandardNormal;

pub type Vec3 = [f64; 3];

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Mirror a coordinate back into `[0, side]`.
///
/// Equivalent to reflecting at the violated face until the point is
/// interior, done in closed form on the period-`2 side` unfolding.
#[inline]
pub fn fold(x: f64, side: f64) -> f64 {
    if (0.0..=side).contains(&x) {
        return x;
    }
    let m = x.rem_euclid(2.0 * side);
    let y = if m > side { 2.0 * side - m } else { m };
    y.clamp(0.0, side)
}

#[inline]
pub fn fold3(p: Vec3, side: f64) -> Vec3 {
    [fold(p[0], side), fold(p[1], side), fold(p[2], side)]
}

#[inline]
pub fn gaussian_step<R: Rng + ?Sized>(rng: &mut R, p: Vec3, sigma: f64) -> Vec3 {
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    let dz: f64 = rng.sample(StandardNormal);
    [p[0] + sigma * dx, p[1] + sigma * dy, p[2] + sigma * dz]
}

/// Uniformly distributed direction on the unit sphere.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = gaussian_step(rng, [0.0; 3], 1.0);
        let n = distance(v, [0.0; 3]);
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[inline]
pub fn offset(p: Vec3, dir: Vec3, len: f64) -> Vec3 {
    [p[0] + dir[0] * len, p[1] + dir[1] * len, p[2] + dir[2] * len]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fold_mirrors_at_faces() {
        assert_eq!(fold(0.5, 1.0), 0.5);
        assert!((fold(1.2, 1.0) - 0.8).abs() < 1e-15);
        assert!((fold(-0.3, 1.0) - 0.3).abs() < 1e-15);
        assert!((fold(2.3, 1.0) - 0.3).abs() < 1e-12);
        assert!((fold(-1.7, 1.0) - 0.3).abs() < 1e-12);
    }

    /// Repeated single-face mirroring, the literal rule.
    fn fold_by_mirroring(mut x: f64, side: f64) -> f64 {
        while !(0.0..=side).contains(&x) {
            x = if x < 0.0 { -x } else { 2.0 * side - x };
        }
        x
    }

    proptest! {
        #[test]
        fn fold_matches_repeated_mirroring(x in -50.0f64..50.0, side in 0.1f64..5.0) {
            let got = fold(x, side);
            prop_assert!((0.0..=side).contains(&got));
            prop_assert!((got - fold_by_mirroring(x, side)).abs() < 1e-9);
        }
    }
}
