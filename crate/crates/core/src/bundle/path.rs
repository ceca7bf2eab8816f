//! Parameter paths `chi: [t0, t1] -> Sigma`.

use crate::expr::{CompiledExpr, Expr, VariableBinding};

use super::BundleError;

/// Cubic interpolant with not-a-knot end conditions, stored as knot slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicSpline {
    /// Requires at least four strictly increasing knots.
    pub fn not_a_knot(knots: &[f64], values: &[f64]) -> Result<Self, BundleError> {
        let n = knots.len();
        if n < 4 {
            return Err(BundleError::TooFewKnots(n));
        }
        if values.len() != n {
            return Err(BundleError::DimensionMismatch(format!(
                "{} knots but {} values",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BundleError::KnotsNotIncreasing);
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();

        // Tridiagonal system for the slopes: sub, diag, sup, rhs.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = h[1];
        sup[0] = h[0] + h[1];
        rhs[0] = ((h[0] + 2.0 * sup[0]) * h[1] * delta[0] + h[0] * h[0] * delta[1]) / sup[0];
        for i in 1..n - 1 {
            sub[i] = h[i];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i - 1];
            rhs[i] = 3.0 * (h[i] * delta[i - 1] + h[i - 1] * delta[i]);
        }
        let last = n - 1;
        sub[last] = h[last - 1] + h[last - 2];
        diag[last] = h[last - 2];
        rhs[last] = (h[last - 1] * h[last - 1] * delta[last - 2]
            + (2.0 * sub[last] + h[last - 1]) * h[last - 2] * delta[last - 1])
            / sub[last];

        // Thomas algorithm.
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut slopes = vec![0.0; n];
        slopes[last] = rhs[last] / diag[last];
        for i in (0..last).rev() {
            slopes[i] = (rhs[i] - sup[i] * slopes[i + 1]) / diag[i];
        }
        Ok(CubicSpline {
            knots: knots.to_vec(),
            values: values.to_vec(),
            slopes,
        })
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.knots[i + 1] - self.knots[i];
        let s = (t - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.knots[i + 1] - self.knots[i];
        let s = (t - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let dh00 = 6.0 * s * (s - 1.0);
        let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        let dh01 = -dh00;
        let dh11 = s * (3.0 * s - 2.0);
        (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
    }
}

#[derive(Clone, Debug)]
enum PathKind {
    ClosedForm {
        components: Vec<Expr>,
        compiled: Vec<CompiledExpr>,
        velocity: Vec<CompiledExpr>,
    },
    Sampled(Vec<CubicSpline>),
    Warped {
        inner: Box<ParameterPath>,
        warp: CompiledExpr,
        rate: CompiledExpr,
    },
}

/// A parameter function on a time span, closed-form or spline-sampled.
#[derive(Clone, Debug)]
pub struct ParameterPath {
    kind: PathKind,
    dim: usize,
    span: (f64, f64),
    closed: bool,
}

fn compile_t(e: &Expr) -> Result<CompiledExpr, BundleError> {
    CompiledExpr::new(e, &["t"]).map_err(|err| BundleError::PathVariable(err.to_string()))
}

impl ParameterPath {
    /// `chi^lambda(t)` given by expressions in `t` alone.
    pub fn closed_form(components: Vec<Expr>, span: (f64, f64), closed: bool) -> Result<Self, BundleError> {
        if components.is_empty() {
            return Err(BundleError::DimensionMismatch("path has no components".into()));
        }
        let compiled = components.iter().map(compile_t).collect::<Result<Vec<_>, _>>()?;
        let velocity = components
            .iter()
            .map(|c| compile_t(&c.diff("t")))
            .collect::<Result<Vec<_>, _>>()?;
        let path = ParameterPath {
            dim: components.len(),
            kind: PathKind::ClosedForm {
                components,
                compiled,
                velocity,
            },
            span,
            closed,
        };
        path.validate()
    }

    /// Spline through `values[i]` (an m-vector) at `times[i]`.
    pub fn sampled(times: &[f64], values: &[Vec<f64>], span: (f64, f64), closed: bool) -> Result<Self, BundleError> {
        let dim = values.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(BundleError::DimensionMismatch("ragged path samples".into()));
        }
        let splines = (0..dim)
            .map(|l| {
                let ys: Vec<f64> = values.iter().map(|v| v[l]).collect();
                CubicSpline::not_a_knot(times, &ys)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let path = ParameterPath {
            kind: PathKind::Sampled(splines),
            dim,
            span,
            closed,
        };
        path.validate()
    }

    fn validate(self) -> Result<Self, BundleError> {
        if !(self.span.1 > self.span.0) {
            return Err(BundleError::EmptySpan);
        }
        if self.closed {
            let a = self.position(self.span.0)?;
            let b = self.position(self.span.1)?;
            let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if gap > 1e-12 {
                return Err(BundleError::NotClosed(gap));
            }
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Closed-form components, when the path has them.
    pub fn components(&self) -> Option<&[Expr]> {
        match &self.kind {
            PathKind::ClosedForm { components, .. } => Some(components),
            _ => None,
        }
    }

    pub fn position(&self, t: f64) -> Result<Vec<f64>, BundleError> {
        match &self.kind {
            PathKind::ClosedForm { compiled, .. } => compiled
                .iter()
                .map(|c| c.eval(&[t]).map_err(|e| BundleError::PathEval { t, source: e }))
                .collect(),
            PathKind::Sampled(s) => Ok(s.iter().map(|s| s.value(t)).collect()),
            PathKind::Warped { inner, warp, .. } => {
                let w = warp.eval(&[t]).map_err(|e| BundleError::PathEval { t, source: e })?;
                inner.position(w)
            }
        }
    }

    pub fn velocity(&self, t: f64) -> Result<Vec<f64>, BundleError> {
        match &self.kind {
            PathKind::ClosedForm { velocity, .. } => velocity
                .iter()
                .map(|c| c.eval(&[t]).map_err(|e| BundleError::PathEval { t, source: e }))
                .collect(),
            PathKind::Sampled(s) => Ok(s.iter().map(|s| s.derivative(t)).collect()),
            PathKind::Warped { inner, warp, rate } => {
                let w = warp.eval(&[t]).map_err(|e| BundleError::PathEval { t, source: e })?;
                let r = rate.eval(&[t]).map_err(|e| BundleError::PathEval { t, source: e })?;
                Ok(inner.velocity(w)?.into_iter().map(|v| v * r).collect())
            }
        }
    }

    /// `chi o warp`: same image curve, new timing. The warp must fix both
    /// endpoints and increase strictly.
    pub fn reparametrize(&self, warp: &Expr) -> Result<Self, BundleError> {
        let (t0, t1) = self.span;
        let compiled = compile_t(warp)?;
        let rate_expr = warp.diff("t");
        let rate = compile_t(&rate_expr)?;
        let at = |c: &CompiledExpr, t: f64| c.eval(&[t]).map_err(|e| BundleError::PathEval { t, source: e });
        let tol = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
        if (at(&compiled, t0)? - t0).abs() > tol || (at(&compiled, t1)? - t1).abs() > tol {
            return Err(BundleError::WarpEndpoints);
        }
        let samples = 1000;
        let mut prev = at(&compiled, t0)?;
        for i in 1..=samples {
            let t = t0 + (t1 - t0) * i as f64 / samples as f64;
            let w = at(&compiled, t)?;
            let r = at(&rate, t)?;
            let interior = i < samples;
            if !(w > prev) || r < 0.0 || (interior && !(r > 0.0)) {
                return Err(BundleError::NonMonotoneWarp(t));
            }
            prev = w;
        }
        let kind = match &self.kind {
            PathKind::ClosedForm { components, .. } => {
                let warped: Vec<Expr> = components.iter().map(|c| c.substitute("t", warp)).collect();
                return ParameterPath::closed_form(warped, self.span, self.closed);
            }
            _ => PathKind::Warped {
                inner: Box::new(self.clone()),
                warp: compiled,
                rate,
            },
        };
        Ok(ParameterPath {
            kind,
            dim: self.dim,
            span: self.span,
            closed: self.closed,
        })
    }

    /// Binding `t`, `s1..sm` at time `t` along the path.
    pub fn binding(&self, t: f64) -> Result<VariableBinding, BundleError> {
        let sigma = self.position(t)?;
        Ok(crate::coords::Dims::new(self.dim, 0).binding(t, &sigma, &[]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use std::f64::consts::PI;

    #[test]
    fn spline_reproduces_cubics() {
        let knots: Vec<f64> = (0..7).map(|i| (i as f64).powf(1.3)).collect();
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.1 * t * t * t;
        let df = |t: f64| -2.0 + t - 0.3 * t * t;
        let ys: Vec<f64> = knots.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::not_a_knot(&knots, &ys).unwrap();
        for i in 0..50 {
            let t = 0.1 * i as f64;
            assert!((s.value(t) - f(t)).abs() < 1e-10);
            assert!((s.derivative(t) - df(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn spline_needs_four_knots() {
        assert_eq!(
            CubicSpline::not_a_knot(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]),
            Err(BundleError::TooFewKnots(3))
        );
    }

    #[test]
    fn closed_flag_is_checked() {
        let c = vec![parse_expr("cos(t)", &["t"]).unwrap()];
        assert!(ParameterPath::closed_form(c.clone(), (0.0, 2.0 * PI), true).is_ok());
        assert!(matches!(
            ParameterPath::closed_form(c, (0.0, 1.0), true),
            Err(BundleError::NotClosed(_))
        ));
    }

    #[test]
    fn warp_validation() {
        let path = ParameterPath::closed_form(vec![parse_expr("t", &["t"]).unwrap()], (0.0, 2.0), false).unwrap();
        let same = path.reparametrize(&parse_expr("t", &["t"]).unwrap()).unwrap();
        assert_eq!(same.components(), path.components());
        let sq = path.reparametrize(&parse_expr("t^2/2", &["t"]).unwrap()).unwrap();
        assert_eq!(sq.position(2.0).unwrap(), vec![2.0]);
        assert!(matches!(
            path.reparametrize(&parse_expr("2 - t", &["t"]).unwrap()),
            Err(BundleError::WarpEndpoints)
        ));
        assert!(matches!(
            path.reparametrize(&parse_expr("t + 0.8*sin(3.14159265358979*t)", &["t"]).unwrap()),
            Err(BundleError::NonMonotoneWarp(_))
        ));
    }
}
