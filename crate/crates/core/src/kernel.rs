//! Compactly supported radial kernels and their radial derivative helpers.
//!
//! A kernel is stored in the scaled variable `s = c r` as a truncated power
//! times a polynomial, `(1 - s)_+^e p(s)`. The helpers
//!
//! ```text
//! psi1(r) = psi'(r) / r
//! psi2(r) = (psi''(r) - psi'(r) / r) / r^2
//! ```
//!
//! are derived once at construction by differentiating and dividing by `s` on
//! the polynomial ring, so they are evaluated without any division by `r` and
//! remain exact at coincident points.

use crate::error::{Error, Result};

/// `(1 - s)_+^power * sum_k coeffs[k] s^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPower {
    power: u32,
    coeffs: Vec<f64>,
}

impl TruncatedPower {
    pub fn new(power: u32, coeffs: Vec<f64>) -> Self {
        Self { power, coeffs }
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluate at `s >= 0`; exactly zero for `s >= 1`.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        let poly = self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * s + a);
        (1.0 - s).powi(self.power as i32) * poly
    }

    /// d/ds: `(1-s)^(e-1) [ -e p(s) + (1-s) p'(s) ]`.
    fn derivative(&self) -> Result<Self> {
        if self.power < 2 {
            return Err(Error::InvalidParameter(format!(
                "truncated power {} too small to differentiate with a continuous result",
                self.power
            )));
        }
        let e = self.power as f64;
        let deg = self.coeffs.len();
        let mut out = vec![0.0; deg + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            out[k] -= e * a;
        }
        // (1 - s) p'(s)
        for k in 1..deg {
            let d = k as f64 * self.coeffs[k];
            out[k - 1] += d;
            out[k] -= d;
        }
        while out.len() > 1 && out.last() == Some(&0.0) {
            out.pop();
        }
        Ok(Self::new(self.power - 1, out))
    }

    /// Exact division of the polynomial factor by `s`.
    fn divide_by_s(&self) -> Result<Self> {
        match self.coeffs.first() {
            Some(&0.0) => Ok(Self::new(self.power, self.coeffs[1..].to_vec())),
            Some(&a0) => Err(Error::InvalidParameter(format!(
                "radial derivative not divisible by r (constant term {a0})"
            ))),
            None => Ok(self.clone()),
        }
    }
}

/// A scalar radial kernel `phi(x, y) = psi(|x - y|)` supported on `[0, 1/c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    c: f64,
    sigma: f64,
    base: TruncatedPower,
    first: TruncatedPower,
    second: TruncatedPower,
}

impl RadialKernel {
    /// Build a kernel from its truncated-power representation in `s = c r`.
    ///
    /// `sigma` is the Sobolev order of the native space. The derivative
    /// helpers must reduce to polynomials, which holds for any kernel that is
    /// at least C^4 at the origin.
    pub fn from_truncated_power(c: f64, sigma: f64, base: TruncatedPower) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shape parameter c must be positive, got {c}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness sigma must be positive, got {sigma}"
            )));
        }
        // w'(s)/s
        let first = base.derivative()?.divide_by_s()?;
        // (w'' - w'/s)/s^2 = (d/ds (w'/s)) / s
        let second = first.derivative()?.divide_by_s()?;
        Ok(Self {
            c,
            sigma,
            base,
            first,
            second,
        })
    }

    /// Shape parameter (inverse support radius).
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Sobolev order of the reproduced space.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support_radius(&self) -> f64 {
        1.0 / self.c
    }

    /// `psi1` and `psi2` polynomial representations, in `s = c r`, before
    /// the `c^2` / `c^4` scale factors.
    pub fn derivative_forms(&self) -> (&TruncatedPower, &TruncatedPower) {
        (&self.first, &self.second)
    }

    #[inline]
    pub fn psi(&self, r: f64) -> f64 {
        self.base.eval(self.c * r)
    }

    #[inline]
    pub fn psi1(&self, r: f64) -> f64 {
        self.c * self.c * self.first.eval(self.c * r)
    }

    #[inline]
    pub fn psi2(&self, r: f64) -> f64 {
        let c2 = self.c * self.c;
        c2 * c2 * self.second.eval(self.c * r)
    }

    /// `(psi, psi1, psi2)` at `r`, or `None` outside the support.
    #[inline]
    pub fn radial_triple(&self, r: f64) -> Option<(f64, f64, f64)> {
        let s = self.c * r;
        if s >= 1.0 {
            return None;
        }
        let c2 = self.c * self.c;
        Some((
            self.base.eval(s),
            c2 * self.first.eval(s),
            c2 * c2 * self.second.eval(s),
        ))
    }

    pub fn phi(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x, y)?;
        Ok(self.psi(distance(x, y)))
    }

    /// Gradient of `phi` in its first argument, `psi1(r) (x - y)`.
    pub fn grad1_phi(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dims(x, y)?;
        let p1 = self.psi1(distance(x, y));
        Ok(x.iter().zip(y).map(|(a, b)| p1 * (a - b)).collect())
    }

    /// Mixed Hessian `d^2 phi / dx_i dy_j = -psi2(r) d_i d_j - psi1(r) delta_ij`
    /// with `d = x - y`, row-major `d x d`.
    pub fn hess12_phi(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dims(x, y)?;
        let dim = x.len();
        let r = distance(x, y);
        let (p1, p2) = (self.psi1(r), self.psi2(r));
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut h = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                // product taken in a fixed order so the matrix is exactly symmetric
                h[i * dim + j] = -p2 * (d[i] * d[j]);
            }
            h[i * dim + i] -= p1;
        }
        Ok(h)
    }
}

/// Wendland's C^8 function in two dimensions,
/// `(1 - cr)_+^10 (2145 (cr)^4 + 2250 (cr)^3 + 1050 (cr)^2 + 250 cr + 25)`,
/// which reproduces `H^5.5(R^2)`.
pub fn wendland_c8(c: f64) -> Result<RadialKernel> {
    RadialKernel::from_truncated_power(
        c,
        5.5,
        TruncatedPower::new(10, vec![25.0, 250.0, 1050.0, 2250.0, 2145.0]),
    )
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
