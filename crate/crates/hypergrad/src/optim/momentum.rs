//! Heavy-ball hypergradient methods: the potential-based variant and the
//! practical variant.
//!
//! Both move along `x - P g + B (x - x_prev)` and learn `P` and `B` online
//! from the momentum feedback. They differ in the potential the null step
//! guards (the heavy-ball potential versus plain function values), in what
//! a rejection does to the momentum pair, and in the default learners.

use crate::error::Error;
use crate::feedback::{hb_feedback, hb_feedback_grad, HBConstants};
use crate::linalg;
use crate::online::{OnlineLearner, ADAGRAD_EPSILON};
use crate::precond::{FeasibleSet, MomentumParam, Preconditioner};
use crate::problems::Oracle;
use crate::Result;

use super::{InitInfo, Optimizer, QueryPoint, Solution, StepInfo};

/// Largest momentum magnitude the practical variant allows.
pub const MOMENTUM_CAP: f64 = 0.9995;

/// Default initial scalar momentum of the practical variant.
pub const INITIAL_MOMENTUM: f64 = 0.95;

/// What a rejected candidate does to the momentum pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullStepMode {
    /// Keep `(x, x_prev)` untouched, preserving the momentum direction.
    KeepPair,
    /// Set `x_prev = x`, so the next iteration starts without momentum.
    ResetMomentum,
}

/// Construction parameters for [`HdmHb`].
#[derive(Debug, Clone)]
pub struct HdmHbConfig {
    pub name: String,
    /// Learner maintaining the preconditioner.
    pub p_learner: OnlineLearner,
    /// Learner maintaining the momentum parameter, stored in its
    /// preconditioner embedding (scalar or full matrix).
    pub b_learner: OnlineLearner,
    pub constants: HBConstants,
    /// Use the simplified feedback gradient that ignores the potential's
    /// quadratic term.
    pub drop_omega: bool,
    pub null_step_mode: NullStepMode,
}

pub struct HdmHb {
    name: String,
    p_learner: OnlineLearner,
    b_learner: OnlineLearner,
    constants: HBConstants,
    drop_omega: bool,
    mode: NullStepMode,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    fx: f64,
    gx: Vec<f64>,
    ginf: f64,
}

impl HdmHb {
    pub fn new(config: HdmHbConfig) -> Result<Self> {
        // Reject momentum shapes with no matrix embedding up front.
        MomentumParam::from_precond(config.b_learner.param().clone())?;
        Ok(HdmHb {
            name: config.name,
            p_learner: config.p_learner,
            b_learner: config.b_learner,
            constants: config.constants,
            drop_omega: config.drop_omega,
            mode: config.null_step_mode,
            x: Vec::new(),
            x_prev: Vec::new(),
            fx: f64::NAN,
            gx: Vec::new(),
            ginf: f64::INFINITY,
        })
    }

    /// The potential-based variant: constants `omega = 3 L`, `tau = 16 L^2`,
    /// the exact feedback gradient, and a null step that keeps the pair.
    pub fn heavy_ball(
        p_learner: OnlineLearner,
        b_learner: OnlineLearner,
        smoothness: f64,
    ) -> Result<Self> {
        HdmHb::new(HdmHbConfig {
            name: "hdm-hb".to_string(),
            p_learner,
            b_learner,
            constants: HBConstants::from_smoothness(smoothness),
            drop_omega: false,
            null_step_mode: NullStepMode::KeepPair,
        })
    }

    /// Momentum pair `(x, x_prev)`; both empty before `init`.
    pub fn pair(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.x_prev)
    }

    pub fn momentum(&self) -> Result<MomentumParam> {
        MomentumParam::from_precond(self.b_learner.param().clone())
    }

    pub fn p_learner(&self) -> &OnlineLearner {
        &self.p_learner
    }

    pub fn b_learner(&self) -> &OnlineLearner {
        &self.b_learner
    }
}

/// The practical variant: a nonnegative diagonal preconditioner started at
/// `(1/L) I` and a scalar momentum started at 0.95, both learned by
/// AdaGrad; the simplified feedback gradient; and a null step on plain
/// function values that also resets the momentum pair.
pub fn hdm_best(
    smoothness: f64,
    dim: usize,
    eta_p: f64,
    eta_b: f64,
    symmetric_momentum: bool,
) -> Result<HdmHb> {
    if !(smoothness > 0.0) || !smoothness.is_finite() {
        return Err(Error::config("smoothness constant must be finite and > 0"));
    }
    let p_set = FeasibleSet::diagonal_nonneg(1e3 / smoothness, dim)?;
    let p0 = Preconditioner::Diagonal(vec![1.0 / smoothness; dim]);
    let p_learner = OnlineLearner::adagrad(p0, p_set, eta_p, ADAGRAD_EPSILON)?;
    let b_lo = if symmetric_momentum {
        -MOMENTUM_CAP
    } else {
        0.0
    };
    let b_set = FeasibleSet::scalar_interval(b_lo, MOMENTUM_CAP, dim)?;
    let b_learner = OnlineLearner::adagrad(
        Preconditioner::Scalar(INITIAL_MOMENTUM),
        b_set,
        eta_b,
        ADAGRAD_EPSILON,
    )?;
    HdmHb::new(HdmHbConfig {
        name: "hdm-best".to_string(),
        p_learner,
        b_learner,
        constants: HBConstants::new(0.0, 16.0 * smoothness * smoothness)?,
        drop_omega: true,
        null_step_mode: NullStepMode::ResetMomentum,
    })
}

impl Optimizer for HdmHb {
    fn name(&self) -> &str {
        &self.name
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        if x1.len() != self.p_learner.set().dim() {
            return Err(Error::dim(
                "preconditioner feasible set",
                x1.len(),
                self.p_learner.set().dim(),
            ));
        }
        self.fx = oracle.eval_f(&x1)?;
        self.gx = oracle.eval_grad(&x1)?;
        self.ginf = linalg::inf_norm(&self.gx);
        self.x_prev = x1.clone();
        self.x = x1;
        Ok(InitInfo {
            f: self.fx,
            grad_inf: self.ginf,
        })
    }

    fn step(&mut self, oracle: &dyn Oracle, want_query: bool) -> Result<StepInfo> {
        let query = want_query.then(|| QueryPoint {
            x: self.x.clone(),
            x_prev: Some(self.x_prev.clone()),
            gx: self.gx.clone(),
            fx: self.fx,
        });
        let b = self.momentum()?;
        let sample = hb_feedback(
            oracle,
            &self.x,
            &self.gx,
            self.fx,
            &self.x_prev,
            self.p_learner.param(),
            &b,
            self.constants,
        )?;
        let (grad_p, grad_b) = hb_feedback_grad(
            &sample,
            self.p_learner.param().shape(),
            self.b_learner.param().shape(),
            self.drop_omega,
        )?;
        self.p_learner.step(&grad_p)?;
        self.b_learner.step(&grad_b)?;

        // The feedback value is the potential difference over a positive
        // denominator, so a strictly negative value is exactly a strict
        // potential decrease.
        let accept = sample.h_value < 0.0;
        if accept {
            self.x_prev = std::mem::replace(&mut self.x, sample.candidate);
            self.fx = sample.f_candidate;
            self.gx = sample.g_candidate;
            self.ginf = linalg::inf_norm(&self.gx);
        } else if self.mode == NullStepMode::ResetMomentum {
            self.x_prev = self.x.clone();
        }
        Ok(StepInfo {
            f: self.fx,
            grad_inf: self.ginf,
            h_value: Some(sample.h_value),
            null_step: !accept,
            query,
        })
    }

    fn solution(&self) -> Solution {
        Solution {
            x: self.x.clone(),
            f: self.fx,
            grad_inf: self.ginf,
        }
    }

    fn precond(&self) -> Option<Preconditioner> {
        Some(self.p_learner.param().clone())
    }
}
