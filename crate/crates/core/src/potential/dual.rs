//! Forward-mode automatic differentiation carriers.
//!
//! `Dual2` carries a value together with its gradient and (symmetric) Hessian
//! with respect to up to two seed variables, so a single expression-tree walk
//! yields exact first and second derivatives. `Grad` is the first-order
//! variant used in hot loops that only need the gradient.

/// Second-order dual number over at most two variables.
///
/// The Hessian block is kept symmetric by construction: every rule below
/// writes `h[i][j]` and `h[j][i]` from the same arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Dual2 {
    pub const fn constant(v: f64) -> Self {
        Dual2 {
            v,
            g: [0.0, 0.0],
            h: [[0.0, 0.0], [0.0, 0.0]],
        }
    }

    /// Seed for variable `axis` (0 = x, 1 = y).
    pub fn variable(v: f64, axis: usize) -> Self {
        let mut g = [0.0, 0.0];
        g[axis] = 1.0;
        Dual2 {
            v,
            g,
            h: [[0.0, 0.0], [0.0, 0.0]],
        }
    }

    pub fn add(self, o: Self) -> Self {
        let mut h = self.h;
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] += o.h[i][j];
            }
        }
        Dual2 {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h,
        }
    }

    pub fn sub(self, o: Self) -> Self {
        let mut h = self.h;
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] -= o.h[i][j];
            }
        }
        Dual2 {
            v: self.v - o.v,
            g: [self.g[0] - o.g[0], self.g[1] - o.g[1]],
            h,
        }
    }

    pub fn neg(self) -> Self {
        let mut h = self.h;
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = -h[i][j];
            }
        }
        Dual2 {
            v: -self.v,
            g: [-self.g[0], -self.g[1]],
            h,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        Dual2 {
            v: self.v * o.v,
            g: [
                self.v * o.g[0] + o.v * self.g[0],
                self.v * o.g[1] + o.v * self.g[1],
            ],
            h,
        }
    }

    /// Composition with a scalar function: phi(u) with first and second
    /// derivatives `d1 = phi'(u)` and `d2 = phi''(u)`.
    pub fn chain(self, v: f64, d1: f64, d2: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = d1 * self.h[i][j] + d2 * self.g[i] * self.g[j];
            }
        }
        Dual2 {
            v,
            g: [d1 * self.g[0], d1 * self.g[1]],
            h,
        }
    }

    pub fn recip(self) -> Self {
        let u = self.v;
        self.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))
    }

    pub fn div(self, o: Self) -> Self {
        self.mul(o.recip())
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let u = self.v;
        self.chain(u.ln(), 1.0 / u, -1.0 / (u * u))
    }

    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn powi(self, n: i64) -> Self {
        let u = self.v;
        let v = int_pow(u, n);
        let d1 = n as f64 * int_pow(u, n - 1);
        let d2 = (n as f64) * (n - 1) as f64 * int_pow(u, n - 2);
        self.chain(v, d1, d2)
    }

    /// Real exponent; requires a positive base.
    pub fn powf(self, p: f64) -> Self {
        let u = self.v;
        let v = u.powf(p);
        let d1 = p * u.powf(p - 1.0);
        let d2 = p * (p - 1.0) * u.powf(p - 2.0);
        self.chain(v, d1, d2)
    }
}

/// First-order dual number (value + gradient), for the sampling hot path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grad {
    pub v: f64,
    pub g: [f64; 2],
}

impl Grad {
    pub const fn constant(v: f64) -> Self {
        Grad { v, g: [0.0, 0.0] }
    }

    pub fn variable(v: f64, axis: usize) -> Self {
        let mut g = [0.0, 0.0];
        g[axis] = 1.0;
        Grad { v, g }
    }

    pub fn add(self, o: Self) -> Self {
        Grad {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
        }
    }

    pub fn sub(self, o: Self) -> Self {
        Grad {
            v: self.v - o.v,
            g: [self.g[0] - o.g[0], self.g[1] - o.g[1]],
        }
    }

    pub fn neg(self) -> Self {
        Grad {
            v: -self.v,
            g: [-self.g[0], -self.g[1]],
        }
    }

    pub fn mul(self, o: Self) -> Self {
        Grad {
            v: self.v * o.v,
            g: [
                self.v * o.g[0] + o.v * self.g[0],
                self.v * o.g[1] + o.v * self.g[1],
            ],
        }
    }

    pub fn chain(self, v: f64, d1: f64) -> Self {
        Grad {
            v,
            g: [d1 * self.g[0], d1 * self.g[1]],
        }
    }

    pub fn recip(self) -> Self {
        self.chain(1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn div(self, o: Self) -> Self {
        self.mul(o.recip())
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }

    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }

    pub fn powi(self, n: i64) -> Self {
        self.chain(int_pow(self.v, n), n as f64 * int_pow(self.v, n - 1))
    }

    pub fn powf(self, p: f64) -> Self {
        self.chain(self.v.powf(p), p * self.v.powf(p - 1.0))
    }
}

/// x^n for integer n, with the 0^0 = 1 and 0^negative guarded conventions
/// needed by the derivative rules (n * x^(n-1) must be 0 when n = 0).
fn int_pow(x: f64, n: i64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if n < 0 {
        return 1.0 / int_pow(x, -n);
    }
    let mut acc = 1.0;
    let mut base = x;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn product_rule_second_order() {
        // f(x, y) = x^2 * sin(y) at (1.3, 0.7)
        let (x, y) = (1.3_f64, 0.7_f64);
        let fx = Dual2::variable(x, 0);
        let fy = Dual2::variable(y, 1);
        let f = fx.mul(fx).mul(fy.sin());
        assert!(close(f.v, x * x * y.sin(), 1e-14));
        assert!(close(f.g[0], 2.0 * x * y.sin(), 1e-14));
        assert!(close(f.g[1], x * x * y.cos(), 1e-14));
        assert!(close(f.h[0][0], 2.0 * y.sin(), 1e-14));
        assert!(close(f.h[0][1], 2.0 * x * y.cos(), 1e-14));
        assert!(close(f.h[1][1], -x * x * y.sin(), 1e-14));
        assert_eq!(f.h[0][1], f.h[1][0]);
    }

    #[test]
    fn quartic_hand_values() {
        // f = (x^2 - 1)^2: f(1) = 0, f'(1) = 0, f''(1) = 8; f(0) = 1, f''(0) = -4
        for (x, v, d1, d2) in [(1.0, 0.0, 0.0, 8.0), (0.0, 1.0, 0.0, -4.0)] {
            let fx = Dual2::variable(x, 0);
            let f = fx.mul(fx).sub(Dual2::constant(1.0)).powi(2);
            assert!(close(f.v, v, 1e-14));
            assert!(close(f.g[0], d1, 1e-14));
            assert!(close(f.h[0][0], d2, 1e-14));
        }
    }

    #[test]
    fn division_and_tanh() {
        let x = 0.83_f64;
        let fx = Dual2::variable(x, 0);
        // f = tanh(x) / x
        let f = fx.tanh().div(fx);
        let eps = 1e-5;
        let fv = |t: f64| t.tanh() / t;
        let num1 = (fv(x + eps) - fv(x - eps)) / (2.0 * eps);
        let num2 = (fv(x + eps) - 2.0 * fv(x) + fv(x - eps)) / (eps * eps);
        assert!(close(f.g[0], num1, 1e-8));
        assert!(close(f.h[0][0], num2, 1e-4));
    }

    #[test]
    fn grad_matches_dual2() {
        let x = -0.37;
        let a = Dual2::variable(x, 0)
            .exp()
            .mul(Dual2::variable(x, 0).powi(3));
        let b = Grad::variable(x, 0).exp().mul(Grad::variable(x, 0).powi(3));
        assert_eq!(a.v, b.v);
        assert_eq!(a.g[0], b.g[0]);
    }
}
