//! Two-class Gaussian model of image features with gridded uncertainty over
//! the triangle proportion `rho` and the sizing state `theta`.

use super::{asymptotic_law, FeatureVector, SizingModel};
use crate::gaussian::{
    posterior_label_probs, BoundLikelihood, LabelLikelihood, LabelPosterior, LabelPrior, PointSet,
};
use crate::linalg::{log_sum_exp, Mvn};
use crate::partition::LabelFunction;
use crate::{Error, Result};

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GranularConfig {
    /// Grains per image.
    pub n_grains: usize,
    /// Gamma shapes indexed `[class][primitive]`.
    pub alpha: [[f64; 2]; 2],
    /// Class scale `beta_y = offset[y] + slope[y] * theta`.
    pub beta_offset: [f64; 2],
    pub beta_slope: [f64; 2],
    /// States with uniform prior weight.
    pub theta_grid: Vec<f64>,
    /// Class-1 triangle proportions with uniform prior weight; class 2 uses
    /// `1 - rho`.
    pub rho_grid: Vec<f64>,
}

impl Default for GranularConfig {
    fn default() -> Self {
        GranularConfig {
            n_grains: 1000,
            alpha: [[1.95, 1.97], [1.97, 1.95]],
            beta_offset: [0.0, 3.75],
            beta_slope: [1.0, -1.0],
            theta_grid: linspace(1.75, 2.0, 10),
            rho_grid: linspace(0.45, 0.55, 500),
        }
    }
}

impl GranularConfig {
    pub fn sizing(&self, y: usize, theta: f64) -> Result<SizingModel> {
        SizingModel::new(
            self.alpha[y],
            self.beta_offset[y] + self.beta_slope[y] * theta,
        )
    }

    pub fn proportions(&self, y: usize, rho: f64) -> [f64; 2] {
        let b1 = if y == 0 { rho } else { 1.0 - rho };
        [b1, 1.0 - b1]
    }

    pub fn law(&self, y: usize, rho: f64, theta: f64) -> Result<Mvn> {
        let law = asymptotic_law(
            self.proportions(y, rho),
            &self.sizing(y, theta)?,
            self.n_grains as f64,
        )?;
        Mvn::new(law.mean, &law.cov)
    }
}

/// Log-likelihood of the images assigned to class `y` at fixed `(rho, theta)`.
pub fn granular_log_likelihood(
    features: &[FeatureVector],
    y: usize,
    rho: f64,
    theta: f64,
    config: &GranularConfig,
) -> Result<f64> {
    if features.is_empty() {
        return Ok(0.0);
    }
    let law = config.law(y, rho, theta)?;
    Ok(features.iter().map(|f| law.log_density(&f.x)).sum())
}

/// The effective likelihood: a uniform mixture over the `(theta, rho)` grid.
#[derive(Debug, Clone)]
pub struct GranularModel {
    config: GranularConfig,
    /// Class laws per grid cell, cell index `t * rho_grid.len() + r`.
    laws: Vec<[Mvn; 2]>,
}

impl GranularModel {
    pub fn new(config: GranularConfig) -> Result<Self> {
        if config.theta_grid.is_empty() || config.rho_grid.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut laws = Vec::with_capacity(config.theta_grid.len() * config.rho_grid.len());
        for &theta in &config.theta_grid {
            for &rho in &config.rho_grid {
                laws.push([config.law(0, rho, theta)?, config.law(1, rho, theta)?]);
            }
        }
        Ok(GranularModel { config, laws })
    }

    pub fn config(&self) -> &GranularConfig {
        &self.config
    }
}

struct BoundGranular {
    /// `table[i][y][cell]`: log density of image `i` under class `y`.
    table: Vec<[Vec<f64>; 2]>,
    log_cell_weight: f64,
}

impl BoundLikelihood for BoundGranular {
    fn log_likelihood(&self, phi: &LabelFunction) -> Result<f64> {
        if phi.len() != self.table.len() {
            return Err(Error::LengthMismatch {
                left: phi.len(),
                right: self.table.len(),
            });
        }
        let cells = self.table.first().map_or(0, |t| t[0].len());
        let mut acc = vec![self.log_cell_weight; cells];
        for (i, row) in self.table.iter().enumerate() {
            for (a, v) in acc.iter_mut().zip(&row[phi.get(i)]) {
                *a += v;
            }
        }
        if cells == 0 {
            return Ok(0.0);
        }
        Ok(log_sum_exp(&acc))
    }
}

impl LabelLikelihood for GranularModel {
    fn dim(&self) -> usize {
        4
    }

    fn num_labels(&self) -> usize {
        2
    }

    fn bind<'a>(&'a self, points: &'a PointSet) -> Result<Box<dyn BoundLikelihood + 'a>> {
        if points.dim() != 4 {
            return Err(Error::LengthMismatch {
                left: points.dim(),
                right: 4,
            });
        }
        let table = points
            .iter()
            .map(|x| [0, 1].map(|y| self.laws.iter().map(|l| l[y].log_density(x)).collect()))
            .collect();
        Ok(Box::new(BoundGranular {
            table,
            log_cell_weight: -(self.laws.len() as f64).ln(),
        }))
    }
}

/// Posterior over label functions of a set of image features.
pub fn granular_posterior(
    features: &[FeatureVector],
    prior: &LabelPrior,
    model: &GranularModel,
) -> Result<LabelPosterior> {
    let points = features_to_points(features)?;
    posterior_label_probs(&points, prior, model)
}

pub(crate) fn features_to_points(features: &[FeatureVector]) -> Result<PointSet> {
    PointSet::new(features.iter().map(|f| f.x.to_vec()).collect())
}
