//! JSON input for spectral data.
//!
//! ```json
//! {"rank": 3,
//!  "coeffs": [{"k": 2, "hbar_order": 0, "num": [3]},
//!             {"k": 3, "hbar_order": 0, "num": [0, [0, 2]]}],
//!  "hbar": [1, 0]}
//! ```
//!
//! Polynomial coefficients are listed from low to high degree. A coefficient
//! is a number, an exact string such as `"-3/4"`, or a pair `[re, im]` of
//! either. With `"form": "schrodinger"` the entries are the potential terms
//! `Q_i` and `k` is omitted.

use num::complex::Complex64 as C64;
use serde::Deserialize;
use thiserror::Error;

use crate::algfun::{AlgError, SpectralData};
use crate::exact::{ExactError, GaussRat, Poly, RationalFunction};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad coefficient: {0}")]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(serde_json::Number),
    Text(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(Scalar),
    Complex([Scalar; 2]),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    #[default]
    Charpoly,
    Schrodinger,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub k: Option<usize>,
    #[serde(default)]
    pub hbar_order: usize,
    pub num: Vec<Value>,
    #[serde(default)]
    pub den: Option<Vec<Value>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralInput {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub form: Form,
    pub rank: usize,
    pub coeffs: Vec<CoeffEntry>,
    pub hbar: [f64; 2],
    #[serde(default)]
    pub base_point: Option<[f64; 2]>,
}

fn scalar_text(s: &Scalar) -> String {
    match s {
        Scalar::Number(n) => n.to_string(),
        Scalar::Text(t) => t.clone(),
    }
}

fn exact(v: &Value) -> Result<GaussRat, InputError> {
    Ok(match v {
        Value::Real(s) => GaussRat::parse_real(&scalar_text(s))?,
        Value::Complex([a, b]) => GaussRat::from_parts_str(&scalar_text(a), &scalar_text(b))?,
    })
}

fn poly(vs: &[Value]) -> Result<Poly, InputError> {
    Ok(Poly::new(vs.iter().map(exact).collect::<Result<_, _>>()?))
}

impl CoeffEntry {
    fn function(&self) -> Result<RationalFunction, InputError> {
        let den = match &self.den {
            Some(d) => poly(d)?,
            None => Poly::one(),
        };
        Ok(RationalFunction::new(poly(&self.num)?, den)?)
    }
}

/// Place `f` at `slots[order]`, adding to anything already there.
fn put(slots: &mut Vec<RationalFunction>, order: usize, f: RationalFunction) {
    if slots.len() <= order {
        slots.resize(order + 1, RationalFunction::zero());
    }
    slots[order] = &slots[order] + &f;
}

impl SpectralInput {
    pub fn hbar(&self) -> C64 {
        C64::new(self.hbar[0], self.hbar[1])
    }

    pub fn build(&self, hbar: Option<C64>) -> Result<SpectralData, InputError> {
        let hbar = hbar.unwrap_or_else(|| self.hbar());
        let s = match self.form {
            Form::Schrodinger => {
                if self.rank != 2 {
                    return Err(InputError::Invalid(format!("Schrödinger form needs rank 2, got {}", self.rank)));
                }
                let mut q = Vec::new();
                for e in &self.coeffs {
                    if e.k.is_some() {
                        return Err(InputError::Invalid("potential entries take no 'k'".into()));
                    }
                    put(&mut q, e.hbar_order, e.function()?);
                }
                SpectralData::schrodinger(q, hbar)?
            }
            Form::Charpoly => {
                let mut b = vec![Vec::new(); self.rank];
                for e in &self.coeffs {
                    let k = e.k.ok_or_else(|| InputError::Invalid("charpoly entries need 'k' (1..=rank)".into()))?;
                    if k == 0 || k > self.rank {
                        return Err(InputError::Invalid(format!("k = {k} outside 1..={}", self.rank)));
                    }
                    put(&mut b[k - 1], e.hbar_order, e.function()?);
                }
                SpectralData::from_charpoly(self.rank, b, hbar)?
            }
        };
        match self.base_point {
            Some([x, y]) => Ok(s.with_base_point(C64::new(x, y))?),
            None => Ok(s),
        }
    }
}

pub fn parse_spectral(text: &str) -> Result<SpectralInput, InputError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algfun::{bnr, weber};

    #[test]
    fn bnr_from_json() {
        let text = r#"{"name": "bnr", "rank": 3,
            "coeffs": [{"k": 2, "hbar_order": 0, "num": [3]},
                       {"k": 3, "num": [0, [0, "2"]], "den": ["1"]}],
            "hbar": [1, 0]}"#;
        let s = parse_spectral(text).unwrap().build(None).unwrap();
        let r = bnr(C64::new(1.0, 0.0));
        assert_eq!(s.discriminant(), r.discriminant());
        assert_eq!(s.turning_points().len(), 2);
    }

    #[test]
    fn schrodinger_with_exact_decimals() {
        let text = r#"{"form": "schrodinger", "rank": 2,
            "coeffs": [{"num": ["-1", 0, 1.0]}, {"hbar_order": 2, "num": [0.1], "den": [0, 0, 1]}],
            "hbar": [0.5, 0], "base_point": [0, 2]}"#;
        let s = parse_spectral(text).unwrap().build(None).unwrap();
        let q = s.potential().unwrap();
        assert_eq!(q[0], weber(C64::new(1.0, 0.0)).potential().unwrap()[0]);
        assert!(q[1].is_zero());
        assert_eq!(q[2].num().coeff(0), GaussRat::from_ratio(1, 10));
        assert_eq!(s.labeling().base, C64::new(0.0, 2.0));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_spectral("{\"rank\": 2,"), Err(InputError::Json(_))));
        assert!(matches!(parse_spectral(r#"{"rank": 2, "coeffs": [], "hbar": [1, 0], "extra": 1}"#), Err(InputError::Json(_))));
        let no_k = parse_spectral(r#"{"rank": 2, "coeffs": [{"num": [1]}], "hbar": [1, 0]}"#).unwrap();
        assert!(matches!(no_k.build(None), Err(InputError::Invalid(_))));
        let bad = parse_spectral(r#"{"rank": 2, "coeffs": [{"k": 2, "num": ["x"]}], "hbar": [1, 0]}"#).unwrap();
        assert!(matches!(bad.build(None), Err(InputError::Exact(_))));
        let zero = parse_spectral(r#"{"rank": 2, "coeffs": [{"k": 2, "num": [1]}], "hbar": [0, 0]}"#).unwrap();
        assert!(matches!(zero.build(None), Err(InputError::Alg(AlgError::ZeroHbar))));
    }
}
