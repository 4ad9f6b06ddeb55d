use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;

use super::{
    BoundLikelihood, KnownCovModel, LabelLikelihood, LabeledSample, NiwModel, PointSet, RlppSampler,
};
use crate::linalg::log_sum_exp;
use crate::partition::LabelFunction;
use crate::{Error, Result};

/// State-conditional model of one member of an uncertainty class.
#[derive(Debug, Clone)]
pub enum StateModel {
    Niw(NiwModel),
    KnownCovariance(KnownCovModel),
}

impl StateModel {
    fn dim(&self) -> usize {
        match self {
            StateModel::Niw(m) => m.dim(),
            StateModel::KnownCovariance(m) => m.dim(),
        }
    }

    fn num_labels(&self) -> usize {
        match self {
            StateModel::Niw(m) => m.num_labels(),
            StateModel::KnownCovariance(m) => m.num_labels(),
        }
    }

    /// Fully normalised `log f(S | phi, theta)`.
    pub fn log_marginal_likelihood(&self, points: &PointSet, phi: &LabelFunction) -> Result<f64> {
        match self {
            StateModel::Niw(m) => m.log_marginal_likelihood(points, phi),
            StateModel::KnownCovariance(m) => m.log_marginal_likelihood(points, phi),
        }
    }

    fn sampler(&self) -> &dyn RlppSampler {
        match self {
            StateModel::Niw(m) => m,
            StateModel::KnownCovariance(m) => m,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UncertainState {
    pub id: String,
    pub weight: f64,
    pub model: StateModel,
}

/// Finite uncertainty class of separable RLPPs with prior weights.
#[derive(Debug, Clone)]
pub struct UncertaintyClass {
    states: Vec<UncertainState>,
}

impl UncertaintyClass {
    pub fn new(states: Vec<UncertainState>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::invalid("uncertainty class has no states"))?;
        let (dim, labels) = (first.model.dim(), first.model.num_labels());
        let mut total = 0.0;
        for s in &states {
            if !(s.weight >= 0.0) {
                return Err(Error::invalid(format!(
                    "state {}: negative weight {}",
                    s.id, s.weight
                )));
            }
            if s.model.dim() != dim || s.model.num_labels() != labels {
                return Err(Error::invalid(format!(
                    "state {}: dimension or label count differs",
                    s.id
                )));
            }
            total += s.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Unnormalized(total));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[UncertainState] {
        &self.states
    }
}

/// The effective RLPP of an uncertainty class: a separable RLPP whose
/// parameter is `[theta, rho]`. Its likelihood is the prior-weighted mixture
/// of state likelihoods; sampling draws `theta` first and delegates.
#[derive(Debug, Clone)]
pub struct EffectiveRlpp {
    class: UncertaintyClass,
    log_weights: Vec<f64>,
    picker: WeightedIndex<f64>,
}

pub fn build_effective(uc: UncertaintyClass) -> EffectiveRlpp {
    let weights: Vec<f64> = uc.states.iter().map(|s| s.weight).collect();
    let log_weights = weights.iter().map(|w| w.ln()).collect();
    let picker = WeightedIndex::new(&weights).expect("weights validated on construction");
    EffectiveRlpp {
        class: uc,
        log_weights,
        picker,
    }
}

impl EffectiveRlpp {
    pub fn class(&self) -> &UncertaintyClass {
        &self.class
    }

    /// `log sum_theta pi(theta) f(S | phi, theta)`.
    pub fn log_likelihood(&self, points: &PointSet, phi: &LabelFunction) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.log_weights.len());
        for (s, lw) in self.class.states.iter().zip(&self.log_weights) {
            if *lw == f64::NEG_INFINITY {
                continue;
            }
            terms.push(lw + s.model.log_marginal_likelihood(points, phi)?);
        }
        Ok(log_sum_exp(&terms))
    }
}

struct BoundEffective<'a> {
    eff: &'a EffectiveRlpp,
    points: &'a PointSet,
}

impl BoundLikelihood for BoundEffective<'_> {
    fn log_likelihood(&self, phi: &LabelFunction) -> Result<f64> {
        self.eff.log_likelihood(self.points, phi)
    }
}

impl LabelLikelihood for EffectiveRlpp {
    fn dim(&self) -> usize {
        self.class.states[0].model.dim()
    }

    fn num_labels(&self) -> usize {
        self.class.states[0].model.num_labels()
    }

    fn bind<'a>(&'a self, points: &'a PointSet) -> Result<Box<dyn BoundLikelihood + 'a>> {
        Ok(Box::new(BoundEffective { eff: self, points }))
    }
}

impl RlppSampler for EffectiveRlpp {
    fn dim(&self) -> usize {
        LabelLikelihood::dim(self)
    }

    fn num_labels(&self) -> usize {
        LabelLikelihood::num_labels(self)
    }

    fn sample(&self, sizes: &[usize], rng: &mut dyn RngCore) -> Result<LabeledSample> {
        let k = self.picker.sample(rng);
        let mut s = self.class.states[k].model.sampler().sample(sizes, rng)?;
        s.state.state = Some(k);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::NiwLabel;

    fn niw(psi: f64) -> StateModel {
        StateModel::Niw(NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, psi)).unwrap())
    }

    fn pts() -> (PointSet, LabelFunction) {
        (
            PointSet::new(vec![vec![0.5], vec![-1.0], vec![2.0]]).unwrap(),
            LabelFunction::new(vec![0, 1, 0], 2).unwrap(),
        )
    }

    #[test]
    fn singleton_class_is_the_state() {
        let m = niw(1.5);
        let eff = build_effective(
            UncertaintyClass::new(vec![UncertainState {
                id: "a".into(),
                weight: 1.0,
                model: m.clone(),
            }])
            .unwrap(),
        );
        let (s, phi) = pts();
        let a = eff.log_likelihood(&s, &phi).unwrap();
        let b = m.log_marginal_likelihood(&s, &phi).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn duplicated_states_are_idempotent() {
        let m = niw(0.7);
        let uc = UncertaintyClass::new(vec![
            UncertainState {
                id: "a".into(),
                weight: 0.5,
                model: m.clone(),
            },
            UncertainState {
                id: "b".into(),
                weight: 0.5,
                model: m.clone(),
            },
        ])
        .unwrap();
        let eff = build_effective(uc);
        let (s, phi) = pts();
        assert!(
            (eff.log_likelihood(&s, &phi).unwrap() - m.log_marginal_likelihood(&s, &phi).unwrap())
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn weights_must_normalise() {
        let r = UncertaintyClass::new(vec![UncertainState {
            id: "a".into(),
            weight: 0.9,
            model: niw(1.0),
        }]);
        assert!(matches!(r, Err(Error::Unnormalized(_))));
    }

    #[test]
    fn sampler_records_state() {
        let uc = UncertaintyClass::new(vec![
            UncertainState {
                id: "a".into(),
                weight: 0.25,
                model: niw(1.0),
            },
            UncertainState {
                id: "b".into(),
                weight: 0.75,
                model: niw(4.0),
            },
        ])
        .unwrap();
        let eff = build_effective(uc);
        let mut r = crate::rng::seeded(1);
        let mut hits = [0usize; 2];
        for _ in 0..4000 {
            let s = eff.sample(&[2, 2], &mut r).unwrap();
            hits[s.state.state.unwrap()] += 1;
        }
        let frac = hits[1] as f64 / 4000.0;
        assert!((frac - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 4000.0).sqrt());
    }
}
