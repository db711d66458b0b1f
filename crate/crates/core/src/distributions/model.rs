//! Compositional n-dimensional log-concave models with exact samplers.

use std::f64::consts::{E, PI};

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{Lu, Matrix};
use super::univariate::Density1D;
use crate::numerics::ln_gamma_positive;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    /// Independent coordinates.
    Product(Vec<Density1D>),
    /// `mean + factor * Z` with `Z` standard normal; `factor = None` means identity.
    Gaussian { mean: Vec<f64>, factor: Option<Matrix> },
    /// Pushforward `matrix * X + shift` of a base model.
    Affine { base: Box<ModelND>, matrix: Matrix, lu: Lu, shift: Vec<f64> },
    /// Uniform on the centered Euclidean ball.
    BallUniform { radius: f64 },
}

/// An n-dimensional log-concave model with exact density, sampler and entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelND {
    dim: usize,
    structure: Structure,
    entropy: f64,
    label: String,
}

impl ModelND {
    pub fn product(components: Vec<Density1D>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("product needs at least one component".into()));
        }
        let entropy = components.iter().map(Density1D::entropy).sum();
        let label = label_product(&components);
        Ok(Self { dim: components.len(), structure: Structure::Product(components), entropy, label })
    }

    pub fn iid(component: Density1D, dim: usize) -> Result<Self> {
        ModelND::product(vec![component; dim])
    }

    pub fn standard_gaussian(dim: usize) -> Result<Self> {
        ModelND::gaussian(vec![0.0; dim], None)
    }

    /// Gaussian with covariance `factor * factor^T`; `factor` must be lower triangular.
    pub fn gaussian(mean: Vec<f64>, factor: Option<Matrix>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("gaussian needs dimension >= 1".into()));
        }
        let mut log_det = 0.0;
        if let Some(l) = &factor {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.dim() });
            }
            if !l.is_lower_triangular() {
                return Err(Error::InvalidParameter("gaussian factor must be lower triangular".into()));
            }
            for i in 0..dim {
                let d = l.get(i, i);
                if d == 0.0 {
                    return Err(Error::InvalidParameter("gaussian factor is singular".into()));
                }
                log_det += d.abs().ln();
            }
        }
        let entropy = 0.5 * dim as f64 * (2.0 * PI * E).ln() + log_det;
        let label = if factor.is_none() && mean.iter().all(|m| *m == 0.0) {
            format!("gaussian(n={dim})")
        } else {
            format!("gaussian(n={dim},general)")
        };
        Ok(Self { dim, structure: Structure::Gaussian { mean, factor }, entropy, label })
    }

    pub fn affine(base: ModelND, matrix: Matrix, shift: Vec<f64>) -> Result<Self> {
        let dim = base.dim;
        if matrix.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.dim() });
        }
        if shift.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: shift.len() });
        }
        let lu = matrix.lu()?;
        let entropy = base.entropy + lu.log_abs_det();
        let label = format!("affine({})", base.label);
        Ok(Self { dim, structure: Structure::Affine { base: Box::new(base), matrix, lu, shift }, entropy, label })
    }

    pub fn ball_uniform(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball needs dim >= 1 and radius > 0, got ({dim}, {radius})")));
        }
        let entropy = log_ball_volume(dim, radius);
        Ok(Self { dim, structure: Structure::BallUniform { radius }, entropy, label: format!("ball_uniform(n={dim},r={radius})") })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Entropy `h(X)` in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `log f(x)`; `-inf` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.log_density_unchecked(x))
    }

    fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match &self.structure {
            Structure::Product(cs) => cs.iter().zip(x).map(|(c, &xi)| c.log_density(xi)).sum(),
            Structure::Gaussian { mean, factor } => {
                let centered: Vec<f64> = x.iter().zip(mean).map(|(a, m)| a - m).collect();
                let quad: f64 = match factor {
                    None => centered.iter().map(|v| v * v).sum(),
                    Some(l) => l.solve_lower(&centered).iter().map(|v| v * v).sum(),
                };
                -0.5 * self.dim as f64 * (2.0 * PI).ln() - (self.entropy - 0.5 * self.dim as f64 * (2.0 * PI * E).ln()) - 0.5 * quad
            }
            Structure::Affine { base, lu, shift, .. } => {
                let centered: Vec<f64> = x.iter().zip(shift).map(|(a, s)| a - s).collect();
                let pre = lu.solve(&centered);
                base.log_density_unchecked(&pre) - lu.log_abs_det()
            }
            Structure::BallUniform { radius } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 < radius * radius {
                    -self.entropy
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Information content `-log f(x)`.
    pub fn information(&self, x: &[f64]) -> Result<f64> {
        Ok(-self.log_density(x)?)
    }

    /// Draw one exact sample into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: out.len() });
        }
        match &self.structure {
            Structure::Product(cs) => {
                for (c, o) in cs.iter().zip(out.iter_mut()) {
                    *o = c.sample(rng)?;
                }
            }
            Structure::Gaussian { mean, factor } => {
                let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                match factor {
                    None => out.copy_from_slice(&z),
                    Some(l) => l.mul_vec_into(&z, out),
                }
                out.iter_mut().zip(mean).for_each(|(o, m)| *o += m);
            }
            Structure::Affine { base, matrix, shift, .. } => {
                let mut inner = vec![0.0; self.dim];
                base.sample_into(rng, &mut inner)?;
                matrix.mul_vec_into(&inner, out);
                out.iter_mut().zip(shift).for_each(|(o, s)| *o += s);
            }
            Structure::BallUniform { radius } => {
                // direction from a normalized Gaussian, radius ~ r * Beta(n, 1)
                let mut norm2 = 0.0;
                for o in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = z;
                    norm2 += z * z;
                }
                let u: f64 = rng.sample(Open01);
                let r = radius * u.powf(1.0 / self.dim as f64);
                let k = r / norm2.sqrt();
                out.iter_mut().for_each(|o| *o *= k);
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out)?;
        Ok(out)
    }
}

/// `log` of the volume of the n-ball of radius `r`.
pub fn log_ball_volume(n: usize, r: f64) -> f64 {
    let n = n as f64;
    0.5 * n * PI.ln() + n * r.ln() - ln_gamma_positive(0.5 * n + 1.0)
}

fn label_product(cs: &[Density1D]) -> String {
    let first = cs[0].name();
    if cs.iter().all(|c| c.name() == first) {
        if cs.len() == 1 {
            first
        } else {
            format!("{first}^{}", cs.len())
        }
    } else {
        format!("product({})", cs.iter().map(Density1D::name).collect::<Vec<_>>().join(","))
    }
}
