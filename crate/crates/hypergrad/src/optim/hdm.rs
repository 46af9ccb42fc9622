//! Hypergradient descent with a learned preconditioner and an optional null
//! step.
//!
//! Each iteration evaluates the candidate `x - P g`, feeds the normalized
//! progress back to the online learner, and either moves to the candidate
//! (when it strictly decreases `f`, or unconditionally in vanilla mode) or
//! keeps the iterate. Both outcomes reuse a stored gradient, so the method
//! spends exactly one gradient evaluation per iteration after the first.

use crate::error::Error;
use crate::feedback::{hyper_feedback, hyper_feedback_grad};
use crate::linalg;
use crate::online::OnlineLearner;
use crate::precond::Preconditioner;
use crate::problems::Oracle;
use crate::Result;

use super::{InitInfo, Optimizer, QueryPoint, Solution, StepInfo};

/// Construction parameters for [`Hdm`].
#[derive(Debug, Clone)]
pub struct HdmConfig {
    /// The online learner that maintains the preconditioner, already seeded
    /// with the initial `P` and its feasible set.
    pub learner: OnlineLearner,
    /// Reject candidates that do not strictly decrease `f`. Disabling this
    /// gives the vanilla variant, which moves unconditionally.
    pub null_step: bool,
}

pub struct Hdm {
    name: String,
    learner: OnlineLearner,
    null_step: bool,
    x: Vec<f64>,
    fx: f64,
    gx: Vec<f64>,
    ginf: f64,
}

impl Hdm {
    pub fn new(config: HdmConfig) -> Self {
        let name = if config.null_step {
            "hdm".to_string()
        } else {
            "hdm-vanilla".to_string()
        };
        Hdm {
            name,
            learner: config.learner,
            null_step: config.null_step,
            x: Vec::new(),
            fx: f64::NAN,
            gx: Vec::new(),
            ginf: f64::INFINITY,
        }
    }

    /// Current iterate; empty before `init`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f(&self) -> f64 {
        self.fx
    }

    pub fn learner(&self) -> &OnlineLearner {
        &self.learner
    }
}

impl Optimizer for Hdm {
    fn name(&self) -> &str {
        &self.name
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        if x1.len() != self.learner.set().dim() {
            return Err(Error::dim(
                "preconditioner feasible set",
                x1.len(),
                self.learner.set().dim(),
            ));
        }
        self.fx = oracle.eval_f(&x1)?;
        self.gx = oracle.eval_grad(&x1)?;
        self.ginf = linalg::inf_norm(&self.gx);
        self.x = x1;
        Ok(InitInfo {
            f: self.fx,
            grad_inf: self.ginf,
        })
    }

    fn step(&mut self, oracle: &dyn Oracle, want_query: bool) -> Result<StepInfo> {
        let query = want_query.then(|| QueryPoint {
            x: self.x.clone(),
            x_prev: None,
            gx: self.gx.clone(),
            fx: self.fx,
        });
        let sample = hyper_feedback(oracle, &self.x, &self.gx, self.fx, self.learner.param())?;
        let grad_h = hyper_feedback_grad(&sample, self.learner.param().shape());
        self.learner.step(&grad_h)?;

        let accept = !self.null_step || sample.f_candidate < self.fx;
        if accept {
            self.x = sample.candidate;
            self.fx = sample.f_candidate;
            self.gx = sample.g_candidate;
            self.ginf = linalg::inf_norm(&self.gx);
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
        Some(self.learner.param().clone())
    }
}
