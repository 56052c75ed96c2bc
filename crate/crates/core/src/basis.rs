//! Smooth nonlinearities with closed-form first and second derivatives.
//!
//! `G1bar(y) = y·exp(-y²/2)` and `G2bar(y) = exp(-y²/2)` are the default tilt
//! basis. `G0(y) = y⁴/4` and `G1(y) = log cosh y` are the classic FastICA
//! contrasts; they also extend the tilt basis in the four-function variant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFunction {
    G1bar,
    G2bar,
    G0,
    G1,
}

/// `log cosh y` written as `|y| + ln((1 + e^{-2|y|}) / 2)`, finite for every finite `y`.
pub fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl BasisFunction {
    /// Returns `(G(y), G'(y), G''(y))`.
    #[inline]
    pub fn eval(self, y: f64) -> (f64, f64, f64) {
        match self {
            BasisFunction::G1bar => {
                let e = (-0.5 * y * y).exp();
                (y * e, (1.0 - y * y) * e, (y * y * y - 3.0 * y) * e)
            }
            BasisFunction::G2bar => {
                let e = (-0.5 * y * y).exp();
                (e, -y * e, (y * y - 1.0) * e)
            }
            BasisFunction::G0 => {
                let y2 = y * y;
                (0.25 * y2 * y2, y2 * y, 3.0 * y2)
            }
            BasisFunction::G1 => {
                let t = y.tanh();
                (log_cosh(y), t, 1.0 - t * t)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisFunction::G1bar => "g1bar",
            BasisFunction::G2bar => "g2bar",
            BasisFunction::G0 => "g0",
            BasisFunction::G1 => "g1",
        }
    }
}

/// Ordered, duplicate-free list of basis functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BasisFunction>", into = "Vec<BasisFunction>")]
pub struct BasisSet {
    functions: Vec<BasisFunction>,
}

impl BasisSet {
    pub fn new(functions: Vec<BasisFunction>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidConfig("basis set must not be empty".into()));
        }
        for (i, f) in functions.iter().enumerate() {
            if functions[..i].contains(f) {
                return Err(Error::InvalidConfig(format!(
                    "basis function `{}` listed twice",
                    f.name()
                )));
            }
        }
        Ok(Self { functions })
    }

    /// `{G1bar, G2bar}`.
    pub fn mica2() -> Self {
        Self {
            functions: vec![BasisFunction::G1bar, BasisFunction::G2bar],
        }
    }

    /// `{G1bar, G2bar, G0, G1}`.
    pub fn mica4() -> Self {
        Self {
            functions: vec![
                BasisFunction::G1bar,
                BasisFunction::G2bar,
                BasisFunction::G0,
                BasisFunction::G1,
            ],
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "mica2" => Ok(Self::mica2()),
            "mica4" => Ok(Self::mica4()),
            other => Err(Error::InvalidConfig(format!(
                "unknown basis `{other}` (expected mica2 or mica4)"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }
}

impl TryFrom<Vec<BasisFunction>> for BasisSet {
    type Error = Error;
    fn try_from(v: Vec<BasisFunction>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BasisSet> for Vec<BasisFunction> {
    fn from(b: BasisSet) -> Self {
        b.functions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

pub fn eval_basis(b: &BasisSet, y: f64) -> BasisValues {
    let p = b.len();
    let mut out = BasisValues {
        values: Vec::with_capacity(p),
        d1: Vec::with_capacity(p),
        d2: Vec::with_capacity(p),
    };
    for f in &b.functions {
        let (v, d1, d2) = f.eval(y);
        out.values.push(v);
        out.d1.push(d1);
        out.d2.push(d2);
    }
    out
}

/// `f(y) = βᵀḠ(y)` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TiltValue {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Unchecked inner loop of [`eval_tilt`]; `beta.len()` must equal `b.len()`.
#[inline]
pub(crate) fn tilt_at(beta: &[f64], b: &BasisSet, y: f64) -> TiltValue {
    let mut out = TiltValue::default();
    for (coef, g) in beta.iter().zip(&b.functions) {
        let (v, d1, d2) = g.eval(y);
        out.f += coef * v;
        out.f1 += coef * d1;
        out.f2 += coef * d2;
    }
    out
}

pub fn eval_tilt(beta: &[f64], b: &BasisSet, y: f64) -> Result<TiltValue> {
    if beta.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: beta.len(),
        });
    }
    Ok(tilt_at(beta, b, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ALL: [BasisFunction; 4] = [
        BasisFunction::G1bar,
        BasisFunction::G2bar,
        BasisFunction::G0,
        BasisFunction::G1,
    ];

    #[test]
    fn values_at_zero() {
        assert_eq!(BasisFunction::G1bar.eval(0.0), (0.0, 1.0, 0.0));
        assert_eq!(BasisFunction::G2bar.eval(0.0), (1.0, 0.0, -1.0));
    }

    #[test]
    fn log_cosh_derivatives_at_two() {
        // central differences of log cosh, h = 1e-5
        let h = 1e-5;
        let fd1 = (log_cosh(2.0 + h) - log_cosh(2.0 - h)) / (2.0 * h);
        let fd2 = (log_cosh(2.0 + h) - 2.0 * log_cosh(2.0) + log_cosh(2.0 - h)) / (h * h);
        let (_, d1, d2) = BasisFunction::G1.eval(2.0);
        assert_relative_eq!(d1, 0.9640276, epsilon = 1e-7);
        assert_relative_eq!(d2, 0.0706508, epsilon = 1e-7);
        assert_relative_eq!(d1, fd1, epsilon = 1e-8);
        assert_relative_eq!(d2, fd2, epsilon = 1e-4);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for g in ALL {
            for k in 0..=200 {
                let y = -5.0 + 0.05 * k as f64;
                let (_, d1, d2) = g.eval(y);
                let (vp, d1p, _) = g.eval(y + h);
                let (vm, d1m, _) = g.eval(y - h);
                let fd1 = (vp - vm) / (2.0 * h);
                let fd2 = (d1p - d1m) / (2.0 * h);
                let scale1 = d1.abs().max(1.0);
                let scale2 = d2.abs().max(1.0);
                assert!((d1 - fd1).abs() / scale1 < 1e-6, "{g:?} d1 at {y}");
                assert!((d2 - fd2).abs() / scale2 < 1e-6, "{g:?} d2 at {y}");
            }
        }
    }

    #[test]
    fn log_cosh_is_overflow_safe() {
        for y in [-1000.0, -50.0, 0.0, 50.0, 800.0] {
            for g in ALL {
                let (v, d1, d2) = g.eval(y);
                if y.abs() <= 50.0 {
                    assert!(v.is_finite() && d1.is_finite() && d2.is_finite());
                }
            }
            assert!(log_cosh(y).is_finite());
        }
        assert_relative_eq!(log_cosh(800.0), 800.0 - std::f64::consts::LN_2);
        assert_relative_eq!(log_cosh(0.5), 0.5f64.cosh().ln(), epsilon = 1e-15);
    }

    #[test]
    fn basis_sets() {
        assert!(BasisSet::new(vec![]).is_err());
        assert!(BasisSet::new(vec![BasisFunction::G0, BasisFunction::G0]).is_err());
        assert_eq!(BasisSet::from_name("mica4").unwrap().len(), 4);
        assert!(BasisSet::from_name("mica3").is_err());
        let parsed: BasisSet = serde_json::from_str(r#"["g1bar","g2bar"]"#).unwrap();
        assert_eq!(parsed, BasisSet::mica2());
        assert!(serde_json::from_str::<BasisSet>(r#"["g1","g1"]"#).is_err());
    }

    #[test]
    fn tilt_special_cases() {
        let b = BasisSet::mica2();
        for y in [-3.0, 0.0, 1.2] {
            assert_eq!(eval_tilt(&[0.0, 0.0], &b, y).unwrap(), TiltValue::default());
            let e1 = eval_tilt(&[1.0, 0.0], &b, y).unwrap();
            let (v, d1, d2) = BasisFunction::G1bar.eval(y);
            assert_eq!((e1.f, e1.f1, e1.f2), (v, d1, d2));
        }
        assert!(matches!(
            eval_tilt(&[1.0], &b, 0.0),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn tilt_termwise_at_one_point_five() {
        let y: f64 = 1.5;
        let e = (-0.5 * y * y).exp();
        let f = 0.3 * y * e - 0.2 * e;
        let f1 = 0.3 * (1.0 - y * y) * e - 0.2 * (-y * e);
        let f2 = 0.3 * (y.powi(3) - 3.0 * y) * e - 0.2 * (y * y - 1.0) * e;
        let t = eval_tilt(&[0.3, -0.2], &BasisSet::mica2(), y).unwrap();
        assert!((t.f - f).abs() < 1e-12);
        assert!((t.f1 - f1).abs() < 1e-12);
        assert!((t.f2 - f2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn tilt_is_linear(
            a in proptest::collection::vec(-3.0f64..3.0, 4),
            c in proptest::collection::vec(-3.0f64..3.0, 4),
            alpha in -2.0f64..2.0,
            gamma in -2.0f64..2.0,
            y in -10.0f64..10.0,
        ) {
            let b = BasisSet::mica4();
            let mixed: Vec<f64> = a.iter().zip(&c).map(|(x, z)| alpha * x + gamma * z).collect();
            let lhs = eval_tilt(&mixed, &b, y).unwrap();
            let ta = eval_tilt(&a, &b, y).unwrap();
            let tc = eval_tilt(&c, &b, y).unwrap();
            let close = |l: f64, x: f64, z: f64| (l - (alpha * x + gamma * z)).abs() <= 1e-12 * (1.0 + (alpha * x).abs() + (gamma * z).abs());
            prop_assert!(close(lhs.f, ta.f, tc.f));
            prop_assert!(close(lhs.f1, ta.f1, tc.f1));
            prop_assert!(close(lhs.f2, ta.f2, tc.f2));
        }
    }
}
