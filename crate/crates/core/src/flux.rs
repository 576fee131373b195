//! The equation family: flux `f` and source `g` with the derivatives and
//! antiderivatives the characteristic system needs.
//!
//! Every built-in instance is polynomial, so derivatives and antiderivatives
//! are exact coefficient manipulations.

use serde::Deserialize;

use crate::error::{Error, Result};

/// Dense polynomial in the monomial basis, `c[0] + c[1] u + c[2] u^2 + ...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(self.coeffs.iter().enumerate().map(|(k, &c)| c / (k as f64 + 1.0)));
        Self::new(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    /// Multiplies by `u^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![0.0; k];
        out.extend_from_slice(&self.coeffs);
        Self::new(out)
    }
}

/// Model selection as it appears in the run configuration.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    CamassaHolm,
    Rod { k: f64 },
    GeneralizedRod { k: f64, g_coeffs: Vec<f64> },
}

/// One member of the equation family
/// `u_t - u_txx + f(u)_x - f(u)_xxx + (g(u) + f''(u) u_x^2 / 2)_x = 0`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct FluxModel {
    name: String,
    f: Polynomial,
    f1: Polynomial,
    f2: Polynomial,
    f3: Polynomial,
    g: Polynomial,
    g1: Polynomial,
    big_f: Polynomial,
    big_g: Polynomial,
    big_h: Polynomial,
}

impl FluxModel {
    /// Builds a model from polynomial `f` and `g`. `g(0)` must vanish.
    pub fn from_polynomials(name: impl Into<String>, f: Polynomial, g: Polynomial) -> Result<Self> {
        if g.eval(0.0) != 0.0 {
            return Err(Error::InvalidModel(format!("g(0) must be zero, got {}", g.eval(0.0))));
        }
        if f.coeffs().iter().chain(g.coeffs()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        let f1 = f.derivative();
        let f2 = f1.derivative();
        let f3 = f2.derivative();
        let g1 = g.derivative();
        let big_f = f.antiderivative();
        let big_g = g.antiderivative();
        // H(u) = int_0^u (2 g(s) + f''(s) s^2) ds
        let big_h = g.scale(2.0).add(&f2.shift(2)).antiderivative();
        Ok(Self {
            name: name.into(),
            f,
            f1,
            f2,
            f3,
            g,
            g1,
            big_f,
            big_g,
            big_h,
        })
    }

    pub fn camassa_holm() -> Self {
        Self::from_polynomials(
            "camassa_holm",
            Polynomial::new(vec![0.0, 0.0, 0.5]),
            Polynomial::new(vec![0.0, 0.0, 1.0]),
        )
        .expect("valid built-in")
    }

    /// Hyper-elastic rod: `f = k u^2 / 2`, `g = (3 - k) u^2 / 2`.
    pub fn rod(k: f64) -> Result<Self> {
        Self::from_polynomials(
            format!("rod(k={k})"),
            Polynomial::new(vec![0.0, 0.0, k / 2.0]),
            Polynomial::new(vec![0.0, 0.0, (3.0 - k) / 2.0]),
        )
    }

    /// Generalized rod: `f = k u^2 / 2` with polynomial `g` (ascending coefficients).
    pub fn generalized_rod(k: f64, g_coeffs: &[f64]) -> Result<Self> {
        if g_coeffs.first().is_some_and(|&c| c != 0.0) {
            return Err(Error::InvalidModel(format!(
                "generalized_rod requires a zero constant coefficient in g, got {}",
                g_coeffs[0]
            )));
        }
        Self::from_polynomials(
            format!("generalized_rod(k={k})"),
            Polynomial::new(vec![0.0, 0.0, k / 2.0]),
            Polynomial::new(g_coeffs.to_vec()),
        )
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::CamassaHolm => Ok(Self::camassa_holm()),
            ModelSpec::Rod { k } => Self::rod(*k),
            ModelSpec::GeneralizedRod { k, g_coeffs } => Self::generalized_rod(*k, g_coeffs),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        self.f.eval(u)
    }
    #[inline]
    pub fn f1(&self, u: f64) -> f64 {
        self.f1.eval(u)
    }
    #[inline]
    pub fn f2(&self, u: f64) -> f64 {
        self.f2.eval(u)
    }
    #[inline]
    pub fn f3(&self, u: f64) -> f64 {
        self.f3.eval(u)
    }
    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        self.g.eval(u)
    }
    #[inline]
    pub fn g1(&self, u: f64) -> f64 {
        self.g1.eval(u)
    }
    /// `F(u) = int_0^u f`.
    #[inline]
    pub fn big_f(&self, u: f64) -> f64 {
        self.big_f.eval(u)
    }
    /// `G(u) = int_0^u g`.
    #[inline]
    pub fn big_g(&self, u: f64) -> f64 {
        self.big_g.eval(u)
    }
    /// `H(u) = int_0^u (2 g(s) + f''(s) s^2) ds`.
    #[inline]
    pub fn big_h(&self, u: f64) -> f64 {
        self.big_h.eval(u)
    }

    /// `sup |f''|` over `[-bound, bound]`, sampled. Used for diagnostics only:
    /// for polynomial `f` of degree > 2 there is no global bound.
    pub fn f2_sup_on(&self, bound: f64) -> f64 {
        (0..=200)
            .map(|k| -bound + 2.0 * bound * k as f64 / 200.0)
            .map(|u| self.f2(u).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> impl Iterator<Item = f64> {
        (0..101).map(|k| -3.0 + 6.0 * k as f64 / 100.0)
    }

    fn models() -> Vec<FluxModel> {
        vec![
            FluxModel::camassa_holm(),
            FluxModel::rod(0.8).unwrap(),
            FluxModel::rod(1.2).unwrap(),
            FluxModel::generalized_rod(0.5, &[0.0, 0.3, 1.0, -0.2]).unwrap(),
        ]
    }

    #[test]
    fn camassa_holm_values() {
        let m = FluxModel::camassa_holm();
        assert_eq!(m.f(2.0), 2.0);
        assert_eq!(m.f1(2.0), 2.0);
        assert_eq!(m.f2(-7.0), 1.0);
        assert_eq!(m.f2(2.0), 1.0);
        assert_eq!(m.f3(2.0), 0.0);
        assert_eq!(m.g(2.0), 4.0);
        assert_eq!(m.big_h(2.0), 8.0);
        assert_eq!(m.big_g(3.0), 9.0);
        assert_eq!(m.big_f(3.0), 4.5);
    }

    #[test]
    fn rod_one_is_camassa_holm() {
        let ch = FluxModel::camassa_holm();
        let rod = FluxModel::rod(1.0).unwrap();
        for u in samples() {
            assert_eq!(rod.f(u).to_bits(), ch.f(u).to_bits());
            assert_eq!(rod.g(u).to_bits(), ch.g(u).to_bits());
            assert_eq!(rod.f2(u).to_bits(), ch.f2(u).to_bits());
            assert_eq!(rod.big_h(u).to_bits(), ch.big_h(u).to_bits());
        }
    }

    #[test]
    fn zero_is_fixed_by_every_model() {
        for m in models() {
            assert_eq!(m.g(0.0), 0.0);
            assert_eq!(m.big_f(0.0), 0.0);
            assert_eq!(m.big_g(0.0), 0.0);
            assert_eq!(m.big_h(0.0), 0.0);
        }
    }

    #[test]
    fn f2_sup_of_cubic_flux() {
        // f = u^3: f'' = 6u.
        let m = FluxModel::from_polynomials("cubic", Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]), Polynomial::zero())
            .unwrap();
        assert_eq!(m.f2_sup_on(2.0), 12.0);
        assert_eq!(FluxModel::camassa_holm().f2_sup_on(5.0), 1.0);
    }

    #[test]
    fn rejects_nonzero_g_at_origin() {
        let err = FluxModel::generalized_rod(1.0, &[0.1, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
        assert!(FluxModel::from_polynomials("bad", Polynomial::zero(), Polynomial::new(vec![1.0])).is_err());
    }

    type Scalar<'a> = &'a dyn Fn(f64) -> f64;

    #[test]
    fn derivative_chain_is_consistent() {
        let h = 1e-4;
        for m in models() {
            let pairs: [(Scalar, Scalar); 7] = [
                (&|u| m.f(u), &|u| m.f1(u)),
                (&|u| m.f1(u), &|u| m.f2(u)),
                (&|u| m.f2(u), &|u| m.f3(u)),
                (&|u| m.g(u), &|u| m.g1(u)),
                (&|u| m.big_f(u), &|u| m.f(u)),
                (&|u| m.big_g(u), &|u| m.g(u)),
                (&|u| m.big_h(u), &|u| 2.0 * m.g(u) + m.f2(u) * u * u),
            ];
            for (fun, der) in pairs {
                for u in samples() {
                    let fd = (fun(u + h) - fun(u - h)) / (2.0 * h);
                    let scale = 1.0 + fun(u).abs();
                    // O(h^2) truncation plus cancellation noise ~ eps/h.
                    assert!(
                        (fd - der(u)).abs() <= 50.0 * h * h * scale + 1e-9 * scale,
                        "{}: u={u} fd={fd} exact={}",
                        m.name(),
                        der(u)
                    );
                }
            }
        }
    }

    #[test]
    fn spec_deserializes_inline_table() {
        #[derive(Deserialize)]
        struct Wrapper {
            model: ModelSpec,
        }
        let w: Wrapper = toml::from_str(r#"model = { type = "rod", k = 1.2 }"#).unwrap();
        assert_eq!(w.model, ModelSpec::Rod { k: 1.2 });
        let w: Wrapper =
            toml::from_str(r#"model = { type = "generalized_rod", k = 1.0, g_coeffs = [0.0, 0.0, 1.0] }"#).unwrap();
        assert!(FluxModel::from_spec(&w.model).is_ok());
    }
}
