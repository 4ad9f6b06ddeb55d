//! Granulometric features of T-grain images and the granular clustering model.
//!
//! Features are `x = (x11, x21, x12, x22)` where `x_ik` is the `(k+2)`-th
//! power sum of primitive `i`'s radii over the total grain area. The raw
//! moment vector is `z = M x` with `M` built from [`primitive_constants`].

mod image;
mod model;
mod scene;

pub use image::{
    full_sweep, opening_area_sweep, pattern_spectrum_moments, sweep_csv, BinaryImage, Direction,
};
pub use model::{
    granular_log_likelihood, granular_posterior, linspace, GranularConfig, GranularModel,
};
pub use scene::{
    grain_counts, render_scene, sample_radii, sample_scene, Grain, GrainScene, Primitive, SceneSpec,
};

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::RngCore;

use crate::{Error, Result};

/// Pattern-spectrum moments of the unit-area primitives,
/// indexed `[primitive][structuring element][order - 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveConstants {
    pub mu: [[[f64; 2]; 2]; 2],
}

pub fn primitive_constants() -> PrimitiveConstants {
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    PrimitiveConstants {
        mu: [
            [
                [2.0 * 3f64.powf(-0.75), s3 / 2.0],
                [4.0 * 3f64.powf(-1.25), 2.0 / s3],
            ],
            [[s5, 5.0], [1.0 / s5, 0.2]],
        ],
    }
}

impl PrimitiveConstants {
    /// The 2x2 block mapping `(x_1k, x_2k)` to the order-`k` moments under the
    /// vertical and horizontal elements.
    fn block(&self, k: usize) -> Matrix2<f64> {
        let m = &self.mu;
        Matrix2::new(
            m[0][0][k - 1],
            m[1][0][k - 1],
            m[0][1][k - 1],
            m[1][1][k - 1],
        )
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(4, 4);
        for k in 1..=2 {
            let b = self.block(k);
            let o = 2 * (k - 1);
            out.view_mut((o, o), (2, 2)).copy_from(&b);
        }
        out
    }
}

/// Gamma sizing law of one image class: shape per primitive, common scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizingModel {
    pub alpha: [f64; 2],
    pub beta: f64,
}

impl SizingModel {
    pub fn new(alpha: [f64; 2], beta: f64) -> Result<Self> {
        if !(alpha.iter().all(|&a| a > 0.0) && beta > 0.0) {
            return Err(Error::invalid("gamma shape and scale must be positive"));
        }
        Ok(SizingModel { alpha, beta })
    }

    /// `Gamma(alpha_i + k) / Gamma(alpha_i)`, so that `E[r^k] = gamma * beta^k`.
    pub fn gamma(&self, i: usize, k: usize) -> f64 {
        (0..k).map(|j| self.alpha[i] + j as f64).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub x: [f64; 4],
    /// `(mu1 vertical, mu1 horizontal, mu2 vertical, mu2 horizontal)`.
    pub z: Option<[f64; 4]>,
}

fn z_from_x(x: &[f64; 4]) -> [f64; 4] {
    let c = primitive_constants();
    let mut z = [0.0; 4];
    for k in 1..=2 {
        let v = c.block(k) * nalgebra::Vector2::new(x[2 * (k - 1)], x[2 * (k - 1) + 1]);
        z[2 * (k - 1)] = v[0];
        z[2 * (k - 1) + 1] = v[1];
    }
    z
}

fn x_from_z(z: &[f64; 4]) -> Result<[f64; 4]> {
    let c = primitive_constants();
    let mut x = [0.0; 4];
    for k in 1..=2 {
        let inv = c
            .block(k)
            .try_inverse()
            .ok_or_else(|| Error::Domain("singular moment matrix".into()))?;
        let v = inv * nalgebra::Vector2::new(z[2 * (k - 1)], z[2 * (k - 1) + 1]);
        x[2 * (k - 1)] = v[0];
        x[2 * (k - 1) + 1] = v[1];
    }
    Ok(x)
}

/// Exact features of a scene from its grain radii, without rasterizing.
pub fn exact_features_from_radii(triangles: &[f64], rods: &[f64]) -> Result<FeatureVector> {
    let area: f64 = triangles.iter().chain(rods).map(|r| r * r).sum();
    if !(area > 0.0) {
        return Err(Error::invalid(
            "features need at least one grain of positive size",
        ));
    }
    let sum = |rs: &[f64], p: i32| rs.iter().map(|r| r.powi(p)).sum::<f64>() / area;
    let x = [
        sum(triangles, 3),
        sum(rods, 3),
        sum(triangles, 4),
        sum(rods, 4),
    ];
    Ok(FeatureVector {
        x,
        z: Some(z_from_x(&x)),
    })
}

/// Order-`k` moment under one structuring element as the ratio `u / v` of
/// per-grain averages.
pub fn moment_from_radii(triangles: &[f64], rods: &[f64], dir: Direction, k: usize) -> f64 {
    let c = primitive_constants();
    let e = match dir {
        Direction::Vertical => 0,
        Direction::Horizontal => 1,
    };
    let n = (triangles.len() + rods.len()) as f64;
    let mut u = 0.0;
    let mut v = 0.0;
    for (i, rs) in [triangles, rods].into_iter().enumerate() {
        for r in rs {
            u += c.mu[i][e][k - 1] * r.powi(k as i32 + 2);
            v += r * r;
        }
    }
    (u / n) / (v / n)
}

/// Features measured on a rendered image by linear openings.
pub fn image_features(img: &BinaryImage) -> Result<FeatureVector> {
    let v = pattern_spectrum_moments(&full_sweep(img, Direction::Vertical))?;
    let h = pattern_spectrum_moments(&full_sweep(img, Direction::Horizontal))?;
    let z = [v[0], h[0], v[1], h[1]];
    Ok(FeatureVector {
        x: x_from_z(&z)?,
        z: Some(z),
    })
}

/// Features of one simulated image computed from its radii.
pub fn simulate_features(
    n_grains: usize,
    triangle_fraction: f64,
    sizing: &SizingModel,
    rng: &mut dyn RngCore,
) -> Result<FeatureVector> {
    let (n1, n2) = grain_counts(n_grains, triangle_fraction);
    let tri = sample_radii(sizing, Primitive::Triangle, n1, rng)?;
    let rod = sample_radii(sizing, Primitive::Rod, n2, rng)?;
    exact_features_from_radii(&tri, &rod)
}

/// Large-sample normal law of the feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticLaw {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Asymptotic mean and covariance of `x` for grain proportions `b`, sizing
/// law `sizing` and `n_grains` grains per image.
pub fn asymptotic_law(b: [f64; 2], sizing: &SizingModel, n_grains: f64) -> Result<AsymptoticLaw> {
    if b.iter().any(|&v| !(v >= 0.0)) || ((b[0] + b[1]) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "grain proportions {b:?} must be non-negative and sum to 1"
        )));
    }
    if !(n_grains >= 1.0) {
        return Err(Error::invalid("grain count must be at least 1"));
    }
    let g = |k: usize, ord: usize| sizing.gamma(k, ord);
    let c = |i: usize, j: usize, k: usize| g(k, i + j + 4) - g(k, i + 2) * g(k, j + 2);
    let d = b[0] * g(0, 2) + b[1] * g(1, 2);
    let beta = sizing.beta;

    let mut mean = DVector::zeros(4);
    for ord in 1..=2 {
        for k in 0..2 {
            mean[2 * (ord - 1) + k] = b[k] * g(k, ord + 2) * beta.powi(ord as i32) / d;
        }
    }

    let mut cov = DMatrix::zeros(4, 4);
    for i in 1..=2 {
        for j in 1..=2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut a = 0.0;
                    for p in 0..2 {
                        let bb = c(0, 0, p) * g(k, i + 2) * g(l, j + 2)
                            - g(p, 2) * g(k, i + 2) * c(0, j, l)
                            - g(p, 2) * c(i, 0, k) * g(l, j + 2);
                        a += b[p] * bb;
                    }
                    a *= b[k] * b[l];
                    if k == l {
                        a += b[k] * d * d * c(i, j, k);
                    }
                    cov[(2 * (i - 1) + k, 2 * (j - 1) + l)] =
                        a * beta.powi((i + j) as i32) / (n_grains * d.powi(4));
                }
            }
        }
    }
    Ok(AsymptoticLaw { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn constants_match_closed_forms() {
        let c = primitive_constants();
        assert!((c.mu[0][0][0] - 0.877383).abs() < 1e-6);
        assert_eq!(c.mu[1][0][1], 5.0);
        assert!((c.mu[1][1][0] - 0.4472136).abs() < 1e-7);
    }

    #[test]
    fn gamma_ratios_match_log_gamma() {
        let s = SizingModel::new([1.95, 2.7], 2.0).unwrap();
        for i in 0..2 {
            for k in 0..=8 {
                let lg = (ln_gamma(s.alpha[i] + k as f64) - ln_gamma(s.alpha[i])).exp();
                assert!((s.gamma(i, k) / lg - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_triangle_features() {
        let f = exact_features_from_radii(&[3.0], &[]).unwrap();
        assert_eq!(f.x, [3.0, 0.0, 9.0, 0.0]);
    }

    #[test]
    fn equal_radii_features() {
        let r = 2.5;
        let f = exact_features_from_radii(&[r; 3], &[r; 7]).unwrap();
        let want = [0.3 * r, 0.7 * r, 0.3 * r * r, 0.7 * r * r];
        for (a, b) in f.x.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_matrix_round_trip() {
        let x = [1.3, 0.4, 2.2, 0.9];
        let back = x_from_z(&z_from_x(&x)).unwrap();
        for (a, b) in x.iter().zip(back) {
            assert!((a - b).abs() < 1e-12);
        }
        let m = primitive_constants().matrix();
        let z = &m * DVector::from_column_slice(&x);
        assert!((z[2] - z_from_x(&x)[2]).abs() < 1e-12);
    }

    #[test]
    fn symmetric_law_and_scaling() {
        let s = SizingModel::new([1.95, 1.95], 2.0).unwrap();
        let law = asymptotic_law([0.5, 0.5], &s, 1000.0).unwrap();
        assert!((law.mean[0] - law.mean[1]).abs() < 1e-12);
        assert!((law.mean[2] - law.mean[3]).abs() < 1e-12);
        let half = asymptotic_law([0.5, 0.5], &s, 2000.0).unwrap();
        for (a, b) in law.cov.iter().zip(half.cov.iter()) {
            assert!((a / 2.0 - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
        assert!((&law.cov - law.cov.transpose()).abs().max() < 1e-12);
        assert!(law.cov.clone().cholesky().is_some());
        assert!(asymptotic_law([0.6, 0.6], &s, 10.0).is_err());
    }

    /// Delta method with a numerical Jacobian of the ratio map
    /// `(S1_3, S2_3, S1_4, S2_4, S1_2, S2_2) -> x`, where `Si_k` is the mean of
    /// `r^k` over all grains restricted to primitive `i`.
    #[test]
    fn covariance_matches_numeric_delta_method() {
        let s = SizingModel::new([1.95, 2.6], 1.7).unwrap();
        let b = [0.35, 0.65];
        let n = 500.0;
        let law = asymptotic_law(b, &s, n).unwrap();
        let e = |i: usize, k: usize| s.gamma(i, k) * s.beta.powi(k as i32);
        // Per-grain contributions: grain of type i contributes r^k to S_i_k.
        let orders = [(0, 3), (1, 3), (0, 4), (1, 4), (0, 2), (1, 2)];
        let mut mu = DVector::zeros(6);
        for (a, &(i, k)) in orders.iter().enumerate() {
            mu[a] = b[i] * e(i, k);
        }
        let mut sig = DMatrix::zeros(6, 6);
        for (a, &(i, k)) in orders.iter().enumerate() {
            for (c, &(j, l)) in orders.iter().enumerate() {
                if i == j {
                    sig[(a, c)] = b[i] * (e(i, k + l) - e(i, k) * e(i, l)) / n;
                }
            }
        }
        let h = |v: &DVector<f64>| DVector::from_vec(vec![v[0], v[1], v[2], v[3]]) / (v[4] + v[5]);
        let mut jac = DMatrix::zeros(4, 6);
        for c in 0..6 {
            let step = 1e-6 * mu[c].abs().max(1.0);
            let mut up = mu.clone();
            let mut dn = mu.clone();
            up[c] += step;
            dn[c] -= step;
            jac.set_column(c, &((h(&up) - h(&dn)) / (2.0 * step)));
        }
        let want = &jac * sig * jac.transpose();
        let m = h(&mu);
        for i in 0..4 {
            assert!((m[i] / law.mean[i] - 1.0).abs() < 1e-12);
            for j in 0..4 {
                let scale = (want[(i, i)] * want[(j, j)]).sqrt();
                assert!(
                    (want[(i, j)] - law.cov[(i, j)]).abs() < 1e-6 * scale,
                    "({i},{j})"
                );
            }
        }
    }
}
