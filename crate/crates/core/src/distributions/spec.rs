//! JSON model schema: `{"family": "...", "params": {...}}`, nested for
//! `product`, `iid` and `affine`.
//!
//! One-dimensional families accept an optional `dim` (i.i.d. copies).
//! Unknown parameter keys are rejected.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::linalg::Matrix;
use super::model::ModelND;
use super::univariate::{make_standard, Density1D, Family1D};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    #[serde(default = "empty_params")]
    pub params: Value,
}

fn empty_params() -> Value {
    Value::Object(Map::new())
}

impl ModelSpec {
    pub fn new(family: impl Into<String>, params: Value) -> Self {
        Self { family: family.into(), params }
    }

    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::ModelSpec(format!("invalid model JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Shorthand used by the command line: a family name plus an optional dimension.
    ///
    /// `gaussian` with a dimension is the standard Gaussian; one-dimensional
    /// families become i.i.d. products.
    pub fn from_name(name: &str, dim: Option<usize>) -> Self {
        let mut params = Map::new();
        if let Some(d) = dim {
            params.insert("dim".into(), Value::from(d));
        }
        Self::new(name, Value::Object(params))
    }

    fn params(&self) -> Result<Params<'_>> {
        match &self.params {
            Value::Object(map) => Ok(Params { family: &self.family, map, used: Vec::new() }),
            Value::Null => Ok(Params { family: &self.family, map: empty_map(), used: Vec::new() }),
            other => Err(Error::ModelSpec(format!("params of '{}' must be an object, got {other}", self.family))),
        }
    }

    /// True for the process families consumed by the AEP simulator.
    pub fn is_process(&self) -> bool {
        self.family == "gauss_ar1"
    }

    /// Build a one-dimensional density. Rejects a `dim` other than 1.
    pub fn build_1d(&self) -> Result<Density1D> {
        let mut p = self.params()?;
        let family = family_1d(&self.family, &mut p)?
            .ok_or_else(|| Error::ModelSpec(format!("'{}' is not a one-dimensional family", self.family)))?;
        if let Some(d) = p.opt_usize("dim")? {
            if d != 1 {
                return Err(Error::ModelSpec(format!("expected a one-dimensional model, got dim {d}")));
            }
        }
        p.finish()?;
        make_standard(family)
    }

    pub fn build(&self) -> Result<ModelND> {
        let mut p = self.params()?;
        if let Some(family) = family_1d(&self.family, &mut p)? {
            let dim = p.opt_usize("dim")?.unwrap_or(1);
            p.finish()?;
            return ModelND::iid(make_standard(family)?, dim);
        }
        let model = match self.family.as_str() {
            "product" => {
                let comps = p.array("components")?;
                let densities = comps.iter().map(|c| sub_spec(c)?.build_1d()).collect::<Result<Vec<_>>>()?;
                ModelND::product(densities)?
            }
            "iid" => {
                let comp = sub_spec(p.value("component")?)?.build_1d()?;
                ModelND::iid(comp, p.usize("dim")?)?
            }
            "gaussian" => {
                let mean = p.opt_vec("mean")?;
                let cov = p.opt_matrix("cov")?;
                let factor = p.opt_matrix("factor")?;
                let dim = p.opt_usize("dim")?;
                let n = dim
                    .or(mean.as_ref().map(Vec::len))
                    .or(cov.as_ref().map(Matrix::dim))
                    .or(factor.as_ref().map(Matrix::dim))
                    .ok_or_else(|| Error::ModelSpec("gaussian needs dim, mean, cov or factor".into()))?;
                let factor = match (cov, factor) {
                    (Some(_), Some(_)) => return Err(Error::ModelSpec("gaussian takes cov or factor, not both".into())),
                    (Some(c), None) => Some(c.cholesky()?),
                    (None, f) => f,
                };
                ModelND::gaussian(mean.unwrap_or_else(|| vec![0.0; n]), factor)?
            }
            "affine" => {
                let base = sub_spec(p.value("base")?)?.build()?;
                let matrix = p.matrix("matrix")?;
                let shift = p.opt_vec("shift")?.unwrap_or_else(|| vec![0.0; base.dim()]);
                ModelND::affine(base, matrix, shift)?
            }
            "ball_uniform" => ModelND::ball_uniform(p.usize("dim")?, p.f64_or("radius", 1.0)?)?,
            "gauss_ar1" => {
                return Err(Error::ModelSpec("gauss_ar1 is a process; use it with the aep experiment".into()))
            }
            other => return Err(Error::ModelSpec(format!("unknown model family '{other}'"))),
        };
        p.finish()?;
        Ok(model)
    }

    /// Parameters of `gauss_ar1`: `(rho, innovation_sd)`.
    pub fn ar1_params(&self) -> Result<(f64, f64)> {
        if !self.is_process() {
            return Err(Error::ModelSpec(format!("'{}' is not a process family", self.family)));
        }
        let mut p = self.params()?;
        let rho = p.f64("rho")?;
        let sd = p.f64_or("sd", 1.0)?;
        p.finish()?;
        Ok((rho, sd))
    }
}

fn empty_map() -> &'static Map<String, Value> {
    static EMPTY: std::sync::OnceLock<Map<String, Value>> = std::sync::OnceLock::new();
    EMPTY.get_or_init(Map::new)
}

fn sub_spec(v: &Value) -> Result<ModelSpec> {
    serde_json::from_value(v.clone()).map_err(|e| Error::ModelSpec(format!("invalid nested model: {e}")))
}

fn family_1d(name: &str, p: &mut Params<'_>) -> Result<Option<Family1D>> {
    Ok(Some(match name {
        "exponential" => Family1D::Exponential { rate: p.f64_or("rate", 1.0)? },
        "gamma" => Family1D::Gamma { shape: p.f64("shape")? },
        "gaussian1d" | "normal" => Family1D::Gaussian1D { mean: p.f64_or("mean", 0.0)?, sd: p.f64_or("sd", 1.0)? },
        "laplace" => Family1D::Laplace { loc: p.f64_or("loc", 0.0)?, scale: p.f64_or("scale", 1.0)? },
        "uniform" => Family1D::Uniform { lo: p.f64_or("lo", 0.0)?, hi: p.f64_or("hi", 1.0)? },
        "half_normal" => Family1D::HalfNormal { sd: p.f64_or("sd", 1.0)? },
        "chi" => Family1D::Chi { dof: p.f64("dof")? },
        "beta" => Family1D::Beta { a: p.f64("a")?, b: p.f64("b")? },
        "weibull" => Family1D::Weibull { shape: p.f64("shape")? },
        _ => return Ok(None),
    }))
}

/// Parameter object with key tracking.
struct Params<'a> {
    family: &'a str,
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.map.get(key)
    }

    fn missing(&self, key: &str) -> Error {
        Error::ModelSpec(format!("'{}' requires parameter '{key}'", self.family))
    }

    fn bad(&self, key: &str, want: &str) -> Error {
        Error::ModelSpec(format!("'{}': parameter '{key}' must be {want}", self.family))
    }

    fn value(&mut self, key: &'static str) -> Result<&'a Value> {
        self.get(key).ok_or_else(|| self.missing(key))
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.bad(key, "a number")),
        }
    }

    fn f64(&mut self, key: &'static str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn opt_usize(&mut self, key: &'static str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.as_u64() {
                Some(d) if d >= 1 => Ok(Some(d as usize)),
                _ => Err(self.bad(key, "a positive integer")),
            },
        }
    }

    fn usize(&mut self, key: &'static str) -> Result<usize> {
        self.opt_usize(key)?.ok_or_else(|| self.missing(key))
    }

    fn array(&mut self, key: &'static str) -> Result<&'a Vec<Value>> {
        let v = self.value(key)?;
        v.as_array().ok_or_else(|| self.bad(key, "an array"))
    }

    fn opt_vec(&mut self, key: &'static str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|_| self.bad(key, "an array of numbers")),
        }
    }

    fn opt_matrix(&mut self, key: &'static str) -> Result<Option<Matrix>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).map_err(|_| self.bad(key, "an array of rows"))?;
                Ok(Some(Matrix::from_rows(&rows)?))
            }
        }
    }

    fn matrix(&mut self, key: &'static str) -> Result<Matrix> {
        self.opt_matrix(key)?.ok_or_else(|| self.missing(key))
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(Error::ModelSpec(format!("'{}' does not take parameter '{k}'", self.family))),
            None => Ok(()),
        }
    }
}
