//! Fixed-step classical fourth-order Runge–Kutta.

use num_complex::Complex64;

use crate::config::{SingleState, TwoArrayState};

/// A state that can be advanced by RK4.
pub trait OdeVector: Clone {
    /// self += h·x
    fn axpy(&mut self, h: f64, x: &Self);
    /// Largest absolute component.
    fn max_norm(&self) -> f64;
}

impl OdeVector for SingleState {
    fn axpy(&mut self, h: f64, x: &Self) {
        self.sigma_minus += x.sigma_minus * h;
        self.e_pop += h * x.e_pop;
    }

    fn max_norm(&self) -> f64 {
        SingleState::max_norm(self)
    }
}

impl OdeVector for TwoArrayState {
    fn axpy(&mut self, h: f64, x: &Self) {
        self.alpha.axpy(h, &x.alpha);
        self.beta.axpy(h, &x.beta);
    }

    fn max_norm(&self) -> f64 {
        TwoArrayState::max_norm(self)
    }
}

impl OdeVector for Vec<Complex64> {
    fn axpy(&mut self, h: f64, x: &Self) {
        for (y, v) in self.iter_mut().zip(x) {
            *y += v * h;
        }
    }

    fn max_norm(&self) -> f64 {
        self.iter()
            .fold(0.0, |m, v| m.max(v.re.abs()).max(v.im.abs()))
    }
}

/// One RK4 step of size `h` for the autonomous system y' = f(y).
/// Returns the new state and f evaluated at the old one.
pub fn rk4_step<Y, F>(y: &Y, h: f64, mut f: F) -> (Y, Y)
where
    Y: OdeVector,
    F: FnMut(&Y) -> Y,
{
    let k1 = f(y);
    let mut tmp = y.clone();
    tmp.axpy(0.5 * h, &k1);
    let k2 = f(&tmp);
    let mut tmp = y.clone();
    tmp.axpy(0.5 * h, &k2);
    let k3 = f(&tmp);
    let mut tmp = y.clone();
    tmp.axpy(h, &k3);
    let k4 = f(&tmp);

    let mut next = y.clone();
    next.axpy(h / 6.0, &k1);
    next.axpy(h / 3.0, &k2);
    next.axpy(h / 3.0, &k3);
    next.axpy(h / 6.0, &k4);
    (next, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let rate = Complex64::new(-1.0, 3.0);
        let exact = (rate * 2.0).exp();
        let mut errs = Vec::new();
        for steps in [50usize, 100] {
            let h = 2.0 / steps as f64;
            let mut y = vec![Complex64::new(1.0, 0.0)];
            for _ in 0..steps {
                y = rk4_step(&y, h, |v| vec![rate * v[0]]).0;
            }
            errs.push((y[0] - exact).norm());
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn returns_derivative_at_start() {
        let s = SingleState::new(Complex64::new(0.1, 0.2), 0.3);
        let (_, k1) = rk4_step(&s, 0.1, |y| {
            let mut d = *y;
            d.e_pop *= -1.0;
            d
        });
        assert_eq!(k1.e_pop, -0.3);
    }
}
