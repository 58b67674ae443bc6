//! Natural cubic spline interpolation on strictly increasing knots.
//!
//! This is the envelope interpolant used by the sifting loop: second
//! derivatives vanish at both end knots, and evaluation outside the knot
//! span extrapolates the first/last cubic segment.

use crate::error::{Error, Result};

/// A natural cubic spline through `(x_i, y_i)` knots.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative of the spline at each knot (zero at the ends).
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Fits the spline. Knot abscissae must be strictly increasing and there
    /// must be at least two knots; two knots degenerate to a line.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        let n = xs.len();
        if n < 2 {
            return Err(Error::TooFewKnots(n));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "spline knots must be strictly increasing".into(),
            ));
        }

        // Solve the tridiagonal system for interior second derivatives;
        // natural boundary conditions pin m[0] = m[n-1] = 0.
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            // Thomas algorithm on the n-2 interior equations.
            let dim = n - 2;
            let mut diag = vec![0.0; dim];
            let mut rhs = vec![0.0; dim];
            for i in 0..dim {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0
                    * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
            }
            // Forward sweep: sub/super diagonals are h[1..dim] between rows.
            for i in 1..dim {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            // Back substitution.
            m[dim] = rhs[dim - 1] / diag[dim - 1];
            for i in (0..dim - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }

        Ok(NaturalCubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    /// Evaluates the spline at `x`; outside the knot span the nearest end
    /// segment's cubic polynomial is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        // Locate the segment; clamp to the end segments for extrapolation.
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Evaluates at every integer index `0..len`, the common envelope case.
    pub fn sample_indices(&self, len: usize) -> Vec<f64> {
        (0..len).map(|k| self.eval(k as f64)).collect()
    }
}
