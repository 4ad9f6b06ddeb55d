use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::{PointSet, RlppSampler};
use crate::linalg::cholesky;
use crate::partition::LabelFunction;
use crate::{rng, Error, Result};

/// Parameters drawn for one sample: the uncertainty-class state (if any) and
/// every label's mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub state: Option<usize>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub points: PointSet,
    pub labels: LabelFunction,
    pub state: StateRecord,
}

pub fn sample_mvn(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut dyn RngCore,
) -> Result<DVector<f64>> {
    let l = cholesky(cov, "sampling covariance")?.unpack();
    let z = DVector::from_iterator(
        mean.len(),
        (0..mean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
    );
    Ok(mean + l * z)
}

/// `Sigma ~ IW(kappa, psi)`: a Bartlett-constructed Wishart draw with scale
/// `psi^{-1}`, inverted.
pub fn sample_inverse_wishart(
    kappa: f64,
    psi: &DMatrix<f64>,
    rng: &mut dyn RngCore,
) -> Result<DMatrix<f64>> {
    let d = psi.nrows();
    if !(kappa > d as f64 - 1.0) {
        return Err(Error::Domain(format!(
            "inverse-Wishart needs kappa > d - 1, got {kappa}"
        )));
    }
    let psi_inv = cholesky(psi, "inverse-Wishart scale")?.inverse();
    let l = cholesky(&psi_inv, "inverse of the inverse-Wishart scale")?.unpack();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new(kappa - i as f64).map_err(|e| Error::Domain(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let la = l * a;
    let w = &la * la.transpose();
    let sigma = cholesky(&w, "Wishart draw")?.inverse();
    // Restore exact symmetry lost to rounding.
    Ok((&sigma + sigma.transpose()) * 0.5)
}

/// Shuffled label function with the given counts, then one point per label
/// from `N(means[y], covariances[y])`.
pub(crate) fn sample_labels(
    dim: usize,
    num_labels: usize,
    sizes: &[usize],
    state: StateRecord,
    rng: &mut dyn RngCore,
) -> Result<LabeledSample> {
    if sizes.len() > num_labels {
        return Err(Error::TooManyBlocks {
            blocks: sizes.len(),
            labels: num_labels,
        });
    }
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(y, &s)| std::iter::repeat_n(y, s))
        .collect();
    if labels.is_empty() {
        return Err(Error::invalid("cannot sample an empty point set"));
    }
    labels.shuffle(rng);
    let chols = state
        .covariances
        .iter()
        .map(|c| cholesky(c, "cluster covariance").map(|c| c.unpack()))
        .collect::<Result<Vec<_>>>()?;
    let mut coords = Vec::with_capacity(labels.len() * dim);
    for &y in &labels {
        let z = DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &state.means[y] + &chols[y] * z;
        coords.extend(x.iter());
    }
    Ok(LabeledSample {
        points: PointSet::from_flat(dim, coords)?,
        labels: LabelFunction::new(labels, num_labels)?,
        state,
    })
}

/// Draws a labeled point set with the given label counts, reproducibly from `seed`.
pub fn sample_rlpp(model: &dyn RlppSampler, sizes: &[usize], seed: u64) -> Result<LabeledSample> {
    let mut r = rng::seeded(seed);
    model.sample(sizes, &mut r)
}
