//! Bessel and Hankel functions of real argument.

use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn j0(x: f64) -> f64 {
    puruspe::Jn(0, x)
}

pub fn j1(x: f64) -> f64 {
    puruspe::Jn(1, x)
}

/// Integer-order Bessel function of the first kind, any sign of `n`.
pub fn jn(n: i32, x: f64) -> f64 {
    let v = puruspe::Jn(n.unsigned_abs(), x);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Integer-order Bessel function of the second kind, `x > 0`.
pub fn yn(n: i32, x: f64) -> f64 {
    let v = puruspe::Yn(n.unsigned_abs(), x);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

pub fn hankel0(x: f64) -> Complex64 {
    Complex64::new(puruspe::Jn(0, x), puruspe::Yn(0, x))
}

pub fn hankel1(x: f64) -> Complex64 {
    Complex64::new(puruspe::Jn(1, x), puruspe::Yn(1, x))
}

pub fn hankel_n(n: i32, x: f64) -> Complex64 {
    Complex64::new(jn(n, x), yn(n, x))
}

pub fn jn_prime(n: i32, x: f64) -> f64 {
    0.5 * (jn(n - 1, x) - jn(n + 1, x))
}

pub fn hankel_n_prime(n: i32, x: f64) -> Complex64 {
    0.5 * (hankel_n(n - 1, x) - hankel_n(n + 1, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wronskian_of_first_and_second_kind() {
        // J_n Y_n' - J_n' Y_n = 2 / (pi x)
        for &x in &[0.3, 1.0, 4.7, 11.0] {
            for n in -3..4 {
                let yp = 0.5 * (yn(n - 1, x) - yn(n + 1, x));
                let w = jn(n, x) * yp - jn_prime(n, x) * yn(n, x);
                assert!((w - 2.0 / (std::f64::consts::PI * x)).abs() < 1e-13, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn negative_orders_follow_reflection() {
        assert_eq!(jn(-3, 2.0), -jn(3, 2.0));
        assert_eq!(yn(-2, 2.0), yn(2, 2.0));
    }
}
