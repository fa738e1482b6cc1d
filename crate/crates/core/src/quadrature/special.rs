//! Gamma function and sphere surface measure.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Γ(z)` for `z > 0` (Lanczos approximation, `g = 7`).
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InvalidParameter {
            name: "z",
            value: z,
            reason: "gamma function is evaluated for positive arguments only",
        });
    }
    Ok(gamma_unchecked(z))
}

fn gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        // reflection keeps the series argument above 1/2
        return PI / ((PI * z).sin() * gamma_unchecked(1.0 - z));
    }
    if z == z.floor() && z <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < z {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    let x = z - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    let tt = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * tt.powf(x + 0.5) * (-tt).exp() * a
}

/// `|S^{n-1}| = 2 π^{n/2} / Γ(n/2)`.
pub fn sphere_surface(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "dimension must be at least 1",
        });
    }
    let h = n as f64 / 2.0;
    Ok(2.0 * PI.powf(h) / gamma_unchecked(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn known_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(1.5).unwrap(), 0.5 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(2.5).unwrap(), 0.75 * PI.sqrt()) < 1e-14);
        // values from an independent arbitrary-precision evaluation
        assert!(rel(gamma_fn(0.1).unwrap(), 9.51350769866873) < 1e-13);
        assert!(rel(gamma_fn(7.3).unwrap(), 1271.423633663909) < 1e-13);
        assert!(rel(gamma_fn(29.7).unwrap(), 3.2081203700604302e30) < 1e-12);
        assert!(gamma_fn(0.0).is_err() && gamma_fn(-1.5).is_err());
    }

    #[test]
    fn recurrence() {
        let a = gamma_fn(2.5).unwrap();
        let b = gamma_fn(1.5).unwrap();
        assert!(rel(a, 1.5 * b) < 1e-13);
        for k in 1..300 {
            let z = 0.05 + 0.1 * k as f64;
            let lhs = gamma_fn(z + 1.0).unwrap();
            let rhs = z * gamma_fn(z).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn spheres() {
        assert!(rel(sphere_surface(1).unwrap(), 2.0) < 1e-15);
        assert!(rel(sphere_surface(2).unwrap(), 2.0 * PI) < 1e-15);
        assert!(rel(sphere_surface(3).unwrap(), 4.0 * PI) < 1e-15);
        assert!(rel(sphere_surface(4).unwrap(), 2.0 * PI * PI) < 1e-14);
        assert!(rel(sphere_surface(5).unwrap(), 8.0 * PI * PI / 3.0) < 1e-14);
        assert!(sphere_surface(0).is_err());
    }
}
