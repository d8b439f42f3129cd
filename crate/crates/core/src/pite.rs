//! Predicted individual treatment effects from two independently fitted arm
//! models: `PITE(x) = f̂_t(x) - f̂_c(x)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::learners::{self, FittedPredictor, LearnerId, LearnerSpec};
use crate::rng::Stream;
use crate::simgen::Population;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Control,
    Treated,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Control => "control",
            Arm::Treated => "treated",
        })
    }
}

/// Training rows of one arm.
#[derive(Debug, Clone)]
pub struct ArmData {
    pub arm: Arm,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Row indices into the source population.
    pub rows: Vec<usize>,
}

impl ArmData {
    pub fn new(arm: Arm, x: DMatrix<f64>, y: DVector<f64>) -> Self {
        let rows = (0..x.nrows()).collect();
        ArmData { arm, x, y, rows }
    }
}

/// Disjoint, exhaustive partition of a population by treatment: `(control, treated)`.
pub fn split_by_arm(pop: &Population) -> Result<(ArmData, ArmData)> {
    let (treated, control): (Vec<usize>, Vec<usize>) = (0..pop.n()).partition(|&i| pop.treated[i]);
    if treated.is_empty() || control.is_empty() {
        return Err(Error::invalid("population has a single treatment arm"));
    }
    let take = |arm: Arm, rows: Vec<usize>| ArmData {
        arm,
        x: pop.x.select_rows(rows.iter()),
        y: pop.y_obs.select_rows(rows.iter()),
        rows,
    };
    Ok((take(Arm::Control, control), take(Arm::Treated, treated)))
}

/// Treatment and control predictors for one learner.
#[derive(Debug, Clone)]
pub struct FittedPair {
    model_t: FittedPredictor,
    model_c: FittedPredictor,
}

impl FittedPair {
    pub fn learner(&self) -> LearnerId {
        self.model_t.id()
    }

    pub fn model_t(&self) -> &FittedPredictor {
        &self.model_t
    }

    pub fn model_c(&self) -> &FittedPredictor {
        &self.model_c
    }
}

/// Fits the two arms on independent sub-streams of `stream`.
pub fn fit_pair(spec: &LearnerSpec, control: &ArmData, treated: &ArmData, stream: Stream) -> Result<FittedPair> {
    if control.arm != Arm::Control || treated.arm != Arm::Treated {
        return Err(Error::invalid("fit_pair needs (control, treated) arm data"));
    }
    let fit_arm = |data: &ArmData, tag: &str| {
        learners::fit(spec, &data.x, &data.y, &mut stream.tagged(tag).rng()).map_err(|e| Error::Arm {
            arm: data.arm,
            source: Box::new(e),
        })
    };
    let model_c = fit_arm(control, "arm-c")?;
    let model_t = fit_arm(treated, "arm-t")?;
    Ok(FittedPair { model_t, model_c })
}

pub fn predict_pite(pair: &FittedPair, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(pair.model_t.predict(x)? - pair.model_c.predict(x)?)
}

/// 50:50 split stratified by arm; returns sorted row indices `(train, test)`.
///
/// When an arm has an odd count the extra treated row goes to the test half
/// and the extra control row to the training half, keeping both halves equal
/// in size.
pub fn internal_split_rows<R: Rng + ?Sized>(pop: &Population, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    if pop.n() < 4 {
        return Err(Error::invalid("internal split needs at least 4 subjects"));
    }
    let (mut treated, mut control): (Vec<usize>, Vec<usize>) = (0..pop.n()).partition(|&i| pop.treated[i]);
    treated.shuffle(rng);
    control.shuffle(rng);
    let t_train = treated.len() / 2;
    let c_train = control.len().div_ceil(2);
    let mut train: Vec<usize> = treated[..t_train].iter().chain(&control[..c_train]).copied().collect();
    let mut test: Vec<usize> = treated[t_train..].iter().chain(&control[c_train..]).copied().collect();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn internal_split<R: Rng + ?Sized>(pop: &Population, rng: &mut R) -> Result<(Population, Population)> {
    let (train, test) = internal_split_rows(pop, rng)?;
    Ok((pop.select(&train), pop.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerSpec;
    use crate::simgen::{generate_population, generate_with, Mode, ScenarioConfig, Structure};

    fn pop(n: usize, p: usize, seed: u64) -> Population {
        let cfg = ScenarioConfig::new(Mode::Internal, n, p, 0.0, 0.5);
        generate_population(&cfg, &mut Stream::new(seed).rng()).unwrap()
    }

    #[test]
    fn arms_partition_population() {
        let p = pop(500, 5, 1);
        let (c, t) = split_by_arm(&p).unwrap();
        assert_eq!(c.rows.len(), 250);
        assert_eq!(t.rows.len(), 250);
        let mut all: Vec<usize> = c.rows.iter().chain(&t.rows).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..500).collect::<Vec<_>>());
        assert!(t.rows.iter().all(|&i| p.treated[i]));
    }

    #[test]
    fn single_arm_rejected() {
        let mut p = pop(20, 2, 2);
        p.treated.iter_mut().for_each(|t| *t = true);
        assert!(split_by_arm(&p).is_err());
    }

    #[test]
    fn identical_arms_give_zero_pite() {
        let p = pop(100, 3, 3);
        let (c, _) = split_by_arm(&p).unwrap();
        let t = ArmData {
            arm: Arm::Treated,
            ..c.clone()
        };
        // Learners without a searched grid do not depend on the fold draw.
        for id in [LearnerId::Ols, LearnerId::Gbm] {
            let pair = fit_pair(&LearnerSpec::with_defaults(id), &c, &t, Stream::new(4)).unwrap();
            let pite = predict_pite(&pair, &p.x).unwrap();
            assert!(pite.iter().all(|&v| v == 0.0), "{id}");
        }
    }

    #[test]
    fn pite_is_difference_of_arm_predictions() {
        let p = pop(200, 4, 6);
        let (c, t) = split_by_arm(&p).unwrap();
        let pair = fit_pair(&LearnerSpec::with_defaults(LearnerId::Lasso), &c, &t, Stream::new(7)).unwrap();
        let pite = predict_pite(&pair, &p.x).unwrap();
        let diff = pair.model_t().predict(&p.x).unwrap() - pair.model_c().predict(&p.x).unwrap();
        assert_eq!(pite, diff);
    }

    #[test]
    fn fit_pair_is_deterministic() {
        let p = pop(200, 4, 8);
        let (c, t) = split_by_arm(&p).unwrap();
        let spec = LearnerSpec::with_defaults(LearnerId::Enet);
        let a = predict_pite(&fit_pair(&spec, &c, &t, Stream::new(9)).unwrap(), &p.x).unwrap();
        let b = predict_pite(&fit_pair(&spec, &c, &t, Stream::new(9)).unwrap(), &p.x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_ols_pair_recovers_effect_coefficients() {
        let mut cfg = ScenarioConfig::new(Mode::Internal, 200, 5, 0.0, 0.5);
        cfg.noise_sd = 0.0;
        let structure = Structure {
            beta0: DVector::from_vec(vec![0.1, -0.05, 0.2, 0.0, 0.03]),
            beta_delta: DVector::from_vec(vec![0.5, 0.49, 0.51, 0.5, 0.52]),
            subset: None,
        };
        let p = generate_with(&cfg, &structure, &mut Stream::new(10).rng()).unwrap();
        let (c, t) = split_by_arm(&p).unwrap();
        let pair = fit_pair(&LearnerSpec::with_defaults(LearnerId::Ols), &c, &t, Stream::new(11)).unwrap();
        let (_, bt) = pair.model_t().linear_coefficients().unwrap();
        let (_, bc) = pair.model_c().linear_coefficients().unwrap();
        assert!((bt - bc - &structure.beta_delta).amax() < 1e-8);

        let xnew = pop(30, 5, 12).x;
        let pite = predict_pite(&pair, &xnew).unwrap();
        assert!((pite - &xnew * &structure.beta_delta).amax() < 1e-8);
    }

    #[test]
    fn wrong_arm_order_rejected() {
        let p = pop(100, 2, 13);
        let (c, t) = split_by_arm(&p).unwrap();
        assert!(fit_pair(&LearnerSpec::with_defaults(LearnerId::Ols), &t, &c, Stream::new(1)).is_err());
    }

    #[test]
    fn arm_errors_are_annotated() {
        let p = pop(40, 30, 14);
        let (c, t) = split_by_arm(&p).unwrap();
        let err = fit_pair(&LearnerSpec::with_defaults(LearnerId::Ols), &c, &t, Stream::new(1)).unwrap_err();
        assert!(err.to_string().starts_with("control arm:"), "{err}");
    }

    #[test]
    fn stratified_internal_split() {
        let p = pop(500, 3, 15);
        let (train, test) = internal_split(&p, &mut Stream::new(16).rng()).unwrap();
        assert_eq!(train.n(), 250);
        assert_eq!(test.n(), 250);
        assert_eq!(train.n_treated(), 125);
        assert_eq!(test.n_treated(), 125);

        let (a, b) = internal_split_rows(&p, &mut Stream::new(16).rng()).unwrap();
        let (a2, b2) = internal_split_rows(&p, &mut Stream::new(16).rng()).unwrap();
        assert_eq!((a.clone(), b.clone()), (a2, b2));
        let mut all: Vec<usize> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        assert_eq!(all, (0..500).collect::<Vec<_>>());
    }

    #[test]
    fn odd_arm_sizes_still_halve() {
        let p = pop(250, 3, 17);
        let (train, test) = internal_split(&p, &mut Stream::new(18).rng()).unwrap();
        assert_eq!(train.n(), 125);
        assert_eq!(test.n(), 125);
        assert!(train.n_treated() > 0 && test.n_treated() > 0);
    }

    #[test]
    fn fit_ignores_test_half() {
        let p = pop(300, 4, 19);
        let (train_rows, test_rows) = internal_split_rows(&p, &mut Stream::new(20).rng()).unwrap();
        let mut corrupted = p.clone();
        for &i in &test_rows {
            corrupted.y_obs[i] = 1e6;
            corrupted.x.row_mut(i).fill(-1e6);
        }
        let spec = LearnerSpec::with_defaults(LearnerId::Ridge);
        let (c1, t1) = split_by_arm(&p.select(&train_rows)).unwrap();
        let (c2, t2) = split_by_arm(&corrupted.select(&train_rows)).unwrap();
        let a = predict_pite(&fit_pair(&spec, &c1, &t1, Stream::new(21)).unwrap(), &p.x).unwrap();
        let b = predict_pite(&fit_pair(&spec, &c2, &t2, Stream::new(21)).unwrap(), &p.x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_outcomes_scales_pite_for_linear_learners() {
        let p = pop(200, 3, 22);
        let (c, t) = split_by_arm(&p).unwrap();
        let scale = 3.0;
        let scaled = |d: &ArmData| ArmData {
            y: &d.y * scale,
            ..d.clone()
        };
        let spec = LearnerSpec::with_defaults(LearnerId::Ols);
        let a = predict_pite(&fit_pair(&spec, &c, &t, Stream::new(23)).unwrap(), &p.x).unwrap();
        let b = predict_pite(&fit_pair(&spec, &scaled(&c), &scaled(&t), Stream::new(23)).unwrap(), &p.x).unwrap();
        assert!((a * scale - b).amax() < 1e-10);
    }
}
