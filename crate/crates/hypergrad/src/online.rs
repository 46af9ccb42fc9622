//! Online learners that drive the preconditioner.
//!
//! Each optimizer iteration hands the learner one feedback gradient; the
//! learner takes a projected step and the next iteration uses the updated
//! parameter. Two update rules are provided: projected online gradient
//! descent with a pluggable stepsize schedule, and diagonal/scalar AdaGrad
//! with per-entry stepsizes.

use serde::{Deserialize, Serialize};

use crate::feedback::FeedbackGradient;
use crate::linalg::DenseMatrix;
use crate::precond::{FeasibleSet, Preconditioner};
use crate::{Error, Result};

/// Stepsize schedule for projected online gradient descent, indexed by the
/// 1-based step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepsizeSchedule {
    /// `eta_k = eta`.
    Constant { eta: f64 },
    /// `eta_k = D / ((L D + 1) sqrt(K))` for a known horizon `K`: the
    /// regret-optimal constant for a set of diameter `D` under an
    /// `(L D + 1)`-Lipschitz loss.
    HorizonConstant {
        diameter: f64,
        smoothness: f64,
        horizon: usize,
    },
    /// `eta_k = 1 / (k mu)`, the strongly convex schedule.
    Decaying { mu: f64 },
    /// `eta_k = c / sqrt(k)`, an anytime fallback.
    Anytime { c: f64 },
}

impl StepsizeSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            StepsizeSchedule::Constant { eta } => *eta > 0.0 && eta.is_finite(),
            StepsizeSchedule::HorizonConstant {
                diameter,
                smoothness,
                horizon,
            } => *diameter > 0.0 && *smoothness > 0.0 && *horizon >= 1,
            StepsizeSchedule::Decaying { mu } => *mu > 0.0 && mu.is_finite(),
            StepsizeSchedule::Anytime { c } => *c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                "stepsize schedule has a non-positive parameter",
            ))
        }
    }

    /// Stepsize for step `k` (1-based).
    pub fn eta(&self, k: usize) -> f64 {
        debug_assert!(k >= 1, "steps are 1-based");
        match self {
            StepsizeSchedule::Constant { eta } => *eta,
            StepsizeSchedule::HorizonConstant {
                diameter,
                smoothness,
                horizon,
            } => diameter / ((smoothness * diameter + 1.0) * (*horizon as f64).sqrt()),
            StepsizeSchedule::Decaying { mu } => 1.0 / (k as f64 * mu),
            StepsizeSchedule::Anytime { c } => c / (k as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
enum LearnerRule {
    Ogd {
        schedule: StepsizeSchedule,
    },
    AdaGrad {
        eta: f64,
        epsilon: f64,
        accumulator: Option<FeedbackGradient>,
    },
}

/// Default AdaGrad denominator floor.
pub const ADAGRAD_EPSILON: f64 = 1e-12;

/// Projected online learner over a feasible set of preconditioners.
#[derive(Debug, Clone)]
pub struct OnlineLearner {
    param: Preconditioner,
    set: FeasibleSet,
    rule: LearnerRule,
    steps_taken: usize,
}

impl OnlineLearner {
    /// Projected OGD starting from `param0` (projected onto the set).
    pub fn ogd(
        param0: Preconditioner,
        set: FeasibleSet,
        schedule: StepsizeSchedule,
    ) -> Result<Self> {
        schedule.validate()?;
        let param = set.project(&param0)?;
        Ok(OnlineLearner {
            param,
            set,
            rule: LearnerRule::Ogd { schedule },
            steps_taken: 0,
        })
    }

    /// AdaGrad with entrywise stepsizes. Full-matrix sets are rejected: the
    /// accumulator semantics here are scalar/diagonal only.
    pub fn adagrad(
        param0: Preconditioner,
        set: FeasibleSet,
        eta: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config("adagrad stepsize must be positive"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("adagrad epsilon must be positive"));
        }
        if matches!(set, FeasibleSet::FullFrobeniusBall { .. }) {
            return Err(Error::config(
                "adagrad supports scalar and diagonal shapes only",
            ));
        }
        let param = set.project(&param0)?;
        Ok(OnlineLearner {
            param,
            set,
            rule: LearnerRule::AdaGrad {
                eta,
                epsilon,
                accumulator: None,
            },
            steps_taken: 0,
        })
    }

    pub fn param(&self) -> &Preconditioner {
        &self.param
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Sum-of-squares AdaGrad accumulator, if this learner is AdaGrad and
    /// has stepped at least once.
    pub fn accumulator(&self) -> Option<&FeedbackGradient> {
        match &self.rule {
            LearnerRule::AdaGrad { accumulator, .. } => accumulator.as_ref(),
            LearnerRule::Ogd { .. } => None,
        }
    }

    /// One projected update with the supplied feedback gradient.
    pub fn step(&mut self, grad: &FeedbackGradient) -> Result<()> {
        if !grad.is_finite() {
            return Err(Error::non_finite("learner gradient"));
        }
        let candidate = match &mut self.rule {
            LearnerRule::Ogd { schedule } => {
                let eta = schedule.eta(self.steps_taken + 1);
                apply_update(&self.param, grad, |g| -eta * g)?
            }
            LearnerRule::AdaGrad {
                eta,
                epsilon,
                accumulator,
            } => {
                let sq = grad.elementwise_sq();
                match accumulator {
                    Some(acc) => acc.add_assign(&sq)?,
                    None => *accumulator = Some(sq),
                }
                let acc = accumulator.as_ref().expect("accumulator just installed");
                let (eta, epsilon) = (*eta, *epsilon);
                scaled_by_accumulator(&self.param, grad, acc, eta, epsilon)?
            }
        };
        self.param = self.set.project(&candidate)?;
        self.steps_taken += 1;
        Ok(())
    }
}

/// `param + f(g)` entrywise, with shapes checked.
fn apply_update(
    param: &Preconditioner,
    grad: &FeedbackGradient,
    f: impl Fn(f64) -> f64,
) -> Result<Preconditioner> {
    match (param, grad) {
        (Preconditioner::Scalar(p), FeedbackGradient::Scalar(g)) => {
            Ok(Preconditioner::Scalar(p + f(*g)))
        }
        (Preconditioner::Diagonal(p), FeedbackGradient::Diagonal(g)) => {
            if p.len() != g.len() {
                return Err(Error::dim("learner update", p.len(), g.len()));
            }
            Ok(Preconditioner::Diagonal(
                p.iter().zip(g).map(|(pi, gi)| pi + f(*gi)).collect(),
            ))
        }
        (Preconditioner::Full(p), FeedbackGradient::Full(g)) => {
            if p.dim() != g.dim() {
                return Err(Error::dim("learner update", p.dim(), g.dim()));
            }
            let data: Vec<f64> = p
                .data()
                .iter()
                .zip(g.data())
                .map(|(pi, gi)| pi + f(*gi))
                .collect();
            Ok(Preconditioner::Full(DenseMatrix::from_rows(p.dim(), &data)))
        }
        _ => Err(Error::config(
            "learner parameter and gradient shapes differ",
        )),
    }
}

/// `param - eta * g / (sqrt(acc) + epsilon)` entrywise.
fn scaled_by_accumulator(
    param: &Preconditioner,
    grad: &FeedbackGradient,
    acc: &FeedbackGradient,
    eta: f64,
    epsilon: f64,
) -> Result<Preconditioner> {
    match (param, grad, acc) {
        (Preconditioner::Scalar(p), FeedbackGradient::Scalar(g), FeedbackGradient::Scalar(u)) => {
            Ok(Preconditioner::Scalar(p - eta * g / (u.sqrt() + epsilon)))
        }
        (
            Preconditioner::Diagonal(p),
            FeedbackGradient::Diagonal(g),
            FeedbackGradient::Diagonal(u),
        ) => {
            if p.len() != g.len() || p.len() != u.len() {
                return Err(Error::dim("adagrad update", p.len(), g.len()));
            }
            Ok(Preconditioner::Diagonal(
                p.iter()
                    .zip(g.iter().zip(u))
                    .map(|(pi, (gi, ui))| pi - eta * gi / (ui.sqrt() + epsilon))
                    .collect(),
            ))
        }
        _ => Err(Error::config(
            "adagrad shapes must be scalar or diagonal and match",
        )),
    }
}

/// Cumulative feedback minus the best fixed comparator value.
pub fn measured_regret(h_values: &[f64], hindsight_best: f64) -> f64 {
    h_values.iter().sum::<f64>() - hindsight_best
}

/// Recipe for building a learner once the initial parameter and feasible
/// set are known. Lets run configurations choose the update rule without
/// carrying learner state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LearnerKind {
    Ogd { schedule: StepsizeSchedule },
    AdaGrad { eta: f64 },
}

impl LearnerKind {
    pub fn build(&self, param0: Preconditioner, set: FeasibleSet) -> Result<OnlineLearner> {
        match self {
            LearnerKind::Ogd { schedule } => OnlineLearner::ogd(param0, set, *schedule),
            LearnerKind::AdaGrad { eta } => {
                OnlineLearner::adagrad(param0, set, *eta, ADAGRAD_EPSILON)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_values_follow_their_formulas() {
        let c = StepsizeSchedule::Constant { eta: 0.25 };
        assert_eq!(c.eta(1), 0.25);
        assert_eq!(c.eta(100), 0.25);

        let h = StepsizeSchedule::HorizonConstant {
            diameter: 2.0,
            smoothness: 3.0,
            horizon: 400,
        };
        // D / ((L D + 1) sqrt(K)) = 2 / (7 * 20)
        assert!((h.eta(1) - 2.0 / 140.0).abs() < 1e-15);
        assert_eq!(h.eta(1), h.eta(399), "horizon schedule is constant");

        let d = StepsizeSchedule::Decaying { mu: 0.5 };
        assert!((d.eta(1) - 2.0).abs() < 1e-15);
        assert!((d.eta(4) - 0.5).abs() < 1e-15);

        let a = StepsizeSchedule::Anytime { c: 3.0 };
        assert!((a.eta(9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schedules_reject_bad_parameters() {
        assert!(StepsizeSchedule::Constant { eta: 0.0 }.validate().is_err());
        assert!(StepsizeSchedule::Decaying { mu: -1.0 }.validate().is_err());
        assert!(StepsizeSchedule::HorizonConstant {
            diameter: 1.0,
            smoothness: 1.0,
            horizon: 0
        }
        .validate()
        .is_err());
        assert!(StepsizeSchedule::Anytime { c: f64::NAN }
            .validate()
            .is_err());
    }

    #[test]
    fn ogd_steps_and_projects() {
        let set = FeasibleSet::scalar_interval(0.0, 1.0, 2).unwrap();
        let mut learner = OnlineLearner::ogd(
            Preconditioner::Scalar(0.0),
            set,
            StepsizeSchedule::Constant { eta: 0.5 },
        )
        .unwrap();
        learner.step(&FeedbackGradient::Scalar(-1.0)).unwrap();
        assert_eq!(learner.param(), &Preconditioner::Scalar(0.5));
        // A large gradient pushes past the boundary and is clamped.
        learner.step(&FeedbackGradient::Scalar(-10.0)).unwrap();
        assert_eq!(learner.param(), &Preconditioner::Scalar(1.0));
        learner.step(&FeedbackGradient::Scalar(5.0)).unwrap();
        assert_eq!(learner.param(), &Preconditioner::Scalar(0.0));
        assert_eq!(learner.steps_taken(), 3);
    }

    #[test]
    fn ogd_decaying_schedule_uses_step_index() {
        let set = FeasibleSet::scalar_interval(-10.0, 10.0, 1).unwrap();
        let mut learner = OnlineLearner::ogd(
            Preconditioner::Scalar(0.0),
            set,
            StepsizeSchedule::Decaying { mu: 1.0 },
        )
        .unwrap();
        // eta_1 = 1, eta_2 = 1/2, eta_3 = 1/3 against a constant gradient -1.
        learner.step(&FeedbackGradient::Scalar(-1.0)).unwrap();
        learner.step(&FeedbackGradient::Scalar(-1.0)).unwrap();
        learner.step(&FeedbackGradient::Scalar(-1.0)).unwrap();
        let expect = 1.0 + 0.5 + 1.0 / 3.0;
        match learner.param() {
            Preconditioner::Scalar(a) => assert!((a - expect).abs() < 1e-15),
            _ => panic!(),
        }
    }

    #[test]
    fn adagrad_hand_computed_scalar_steps() {
        let set = FeasibleSet::scalar_interval(-100.0, 100.0, 1).unwrap();
        let eta = 0.3;
        let eps = 1e-12;
        let mut learner =
            OnlineLearner::adagrad(Preconditioner::Scalar(0.0), set, eta, eps).unwrap();
        learner.step(&FeedbackGradient::Scalar(2.0)).unwrap();
        // U = 4, step = -0.3 * 2 / (2 + 1e-12)
        let p1 = -eta * 2.0 / (2.0 + eps);
        match learner.param() {
            Preconditioner::Scalar(a) => assert!((a - p1).abs() < 1e-15),
            _ => panic!(),
        }
        learner.step(&FeedbackGradient::Scalar(1.0)).unwrap();
        // U = 5, step = -0.3 * 1 / (sqrt 5 + 1e-12)
        let p2 = p1 - eta / (5.0_f64.sqrt() + eps);
        match learner.param() {
            Preconditioner::Scalar(a) => assert!((a - p2).abs() < 1e-15),
            _ => panic!(),
        }
        match learner.accumulator() {
            Some(FeedbackGradient::Scalar(u)) => assert!((u - 5.0).abs() < 1e-15),
            other => panic!("expected scalar accumulator, got {other:?}"),
        }
    }

    #[test]
    fn adagrad_accumulator_is_monotone_and_param_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let set = FeasibleSet::diagonal_nonneg(2.0, 3).unwrap();
        let mut learner = OnlineLearner::adagrad(
            Preconditioner::Diagonal(vec![1.0, 1.0, 1.0]),
            set.clone(),
            0.5,
            ADAGRAD_EPSILON,
        )
        .unwrap();
        let mut prev = vec![0.0; 3];
        for _ in 0..100 {
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            learner.step(&FeedbackGradient::Diagonal(g)).unwrap();
            let acc = match learner.accumulator() {
                Some(FeedbackGradient::Diagonal(u)) => u.clone(),
                _ => panic!(),
            };
            for (u, p) in acc.iter().zip(&prev) {
                assert!(u >= p, "accumulator must never decrease");
            }
            prev = acc;
            assert!(set.contains(learner.param(), 1e-12));
        }
    }

    #[test]
    fn adagrad_rejects_full_matrix_sets() {
        let set = FeasibleSet::frobenius_ball(DenseMatrix::zeros(2), 1.0).unwrap();
        let err = OnlineLearner::adagrad(
            Preconditioner::Full(DenseMatrix::zeros(2)),
            set,
            0.1,
            ADAGRAD_EPSILON,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn ogd_stays_feasible_under_random_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let set = FeasibleSet::diagonal_box_uniform(-0.5, 1.5, 4).unwrap();
        let mut learner = OnlineLearner::ogd(
            Preconditioner::Diagonal(vec![0.0; 4]),
            set.clone(),
            StepsizeSchedule::Anytime { c: 0.7 },
        )
        .unwrap();
        for _ in 0..200 {
            let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            learner.step(&FeedbackGradient::Diagonal(g)).unwrap();
            assert!(set.contains(learner.param(), 1e-12));
        }
    }

    #[test]
    fn learner_rejects_shape_mismatch_and_nonfinite() {
        let set = FeasibleSet::scalar_interval(0.0, 1.0, 2).unwrap();
        let mut learner = OnlineLearner::ogd(
            Preconditioner::Scalar(0.5),
            set,
            StepsizeSchedule::Constant { eta: 0.1 },
        )
        .unwrap();
        assert!(learner
            .step(&FeedbackGradient::Diagonal(vec![1.0, 2.0]))
            .is_err());
        assert!(learner.step(&FeedbackGradient::Scalar(f64::NAN)).is_err());
    }

    #[test]
    fn infeasible_start_is_projected() {
        let set = FeasibleSet::scalar_interval(0.0, 1.0, 2).unwrap();
        let learner = OnlineLearner::ogd(
            Preconditioner::Scalar(7.0),
            set,
            StepsizeSchedule::Constant { eta: 0.1 },
        )
        .unwrap();
        assert_eq!(learner.param(), &Preconditioner::Scalar(1.0));
    }

    #[test]
    fn measured_regret_is_sum_minus_best() {
        let h = vec![-0.1, -0.2, 0.05];
        assert!((measured_regret(&h, -0.4) - 0.15).abs() < 1e-15);
        assert_eq!(measured_regret(&[], 0.0), 0.0);
    }
}
