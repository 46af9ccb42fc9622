//! Nesterov-accelerated methods: the learned-preconditioner variant and the
//! fixed-stepsize monotone AGD baseline it reduces to.
//!
//! Both share the same extrapolation sequence `A_k` and the same monotone
//! candidate selection, so pinning the preconditioner to `(1/L) I` makes the
//! learned variant reproduce the baseline trajectory exactly.

use crate::error::Error;
use crate::feedback::{hyper_feedback, hyper_feedback_grad};
use crate::linalg;
use crate::online::OnlineLearner;
use crate::precond::Preconditioner;
use crate::problems::Oracle;
use crate::Result;

use super::{InitInfo, Optimizer, QueryPoint, Solution, StepInfo};

/// Advance the extrapolation sequence: the positive root of
/// `A_next = (A_next - a)^2`, namely `a + (1 + sqrt(4 a + 1)) / 2`.
pub fn agd_sequence_next(a: f64) -> f64 {
    a + 0.5 * (1.0 + (4.0 * a + 1.0).sqrt())
}

/// Averaging weight for the dual iterate: `max{1 / (2 max{-h, 1/(2L)}),
/// L / (2 theta)}`. Larger feedback progress makes the weight smaller and
/// the dual step longer.
pub fn agd_weight(h_value: f64, smoothness: f64, theta: f64) -> f64 {
    let progress = (-h_value).max(0.5 / smoothness);
    (0.5 / progress).max(0.5 * smoothness / theta)
}

/// `x + coef * (z - x)` without disturbing the inputs.
fn extrapolate(x: &[f64], z: &[f64], coef: f64) -> Vec<f64> {
    x.iter()
        .zip(z)
        .map(|(xi, zi)| xi + coef * (zi - xi))
        .collect()
}

/// Construction parameters for [`HdmAgd`].
#[derive(Debug, Clone)]
pub struct HdmAgdConfig {
    /// Learner maintaining the preconditioner used in the accelerated step.
    pub learner: OnlineLearner,
    /// Interpolation parameter, at least 1/2. The value 1/2 recovers the
    /// fixed-stepsize baseline's dual weight.
    pub theta: f64,
    /// Smoothness constant `L` of the objective.
    pub smoothness: f64,
    /// Run this many plain accelerated iterations first, then restart the
    /// extrapolation sequence from the reached point paired with the
    /// original dual iterate. Zero disables the warm start.
    pub warm_start_iters: usize,
}

/// Which point an accelerated step moved to.
enum Pick {
    Keep,
    Learned,
    Safeguard,
}

pub struct HdmAgd {
    learner: OnlineLearner,
    theta: f64,
    l: f64,
    warm_iters: usize,
    warm_reset_done: bool,
    k: usize,
    a: f64,
    x: Vec<f64>,
    fx: f64,
    z: Vec<f64>,
    z1: Vec<f64>,
    gx: Option<Vec<f64>>,
    sol: Solution,
}

impl HdmAgd {
    pub fn new(config: HdmAgdConfig) -> Result<Self> {
        if !config.theta.is_finite() || config.theta < 0.5 {
            return Err(Error::config(
                "interpolation parameter must be at least 1/2",
            ));
        }
        if !(config.smoothness > 0.0) || !config.smoothness.is_finite() {
            return Err(Error::config("smoothness constant must be finite and > 0"));
        }
        Ok(HdmAgd {
            learner: config.learner,
            theta: config.theta,
            l: config.smoothness,
            warm_iters: config.warm_start_iters,
            warm_reset_done: false,
            k: 0,
            a: 0.0,
            x: Vec::new(),
            fx: f64::NAN,
            z: Vec::new(),
            z1: Vec::new(),
            gx: None,
            sol: Solution {
                x: Vec::new(),
                f: f64::NAN,
                grad_inf: f64::INFINITY,
            },
        })
    }

    pub fn sequence_value(&self) -> f64 {
        self.a
    }

    /// Evaluate the extrapolated point's value and gradient, reusing the
    /// starting gradient on the very first iteration where the
    /// extrapolation coincides with the iterate.
    fn query_extrapolated(&mut self, oracle: &dyn Oracle, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        if self.k == 0 {
            if let Some(g) = self.gx.take() {
                return Ok((g, self.fx));
            }
        }
        Ok((oracle.eval_grad(y)?, oracle.eval_f(y)?))
    }

    /// Track the smallest observed gradient norm for this step and return
    /// the step summary.
    #[allow(clippy::too_many_arguments)]
    fn finish_step(
        &mut self,
        y: Vec<f64>,
        fy: f64,
        ginf_y: f64,
        extra: Option<(Vec<f64>, f64, f64)>,
        h_value: Option<f64>,
        null_step: bool,
        query: Option<QueryPoint>,
    ) -> StepInfo {
        let mut sol = Solution {
            x: y,
            f: fy,
            grad_inf: ginf_y,
        };
        if let Some((cx, cf, cginf)) = extra {
            if cginf < sol.grad_inf {
                sol = Solution {
                    x: cx,
                    f: cf,
                    grad_inf: cginf,
                };
            }
        }
        if let Some(g) = &self.gx {
            let ginf = linalg::inf_norm(g);
            if ginf < sol.grad_inf {
                sol = Solution {
                    x: self.x.clone(),
                    f: self.fx,
                    grad_inf: ginf,
                };
            }
        }
        self.sol = sol;
        StepInfo {
            f: self.fx,
            grad_inf: self.sol.grad_inf,
            h_value,
            null_step,
            query,
        }
    }
}

impl Optimizer for HdmAgd {
    fn name(&self) -> &str {
        "hdm-agd"
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
        let g = oracle.eval_grad(&x1)?;
        let ginf = linalg::inf_norm(&g);
        self.sol = Solution {
            x: x1.clone(),
            f: self.fx,
            grad_inf: ginf,
        };
        self.gx = Some(g);
        self.z = x1.clone();
        self.z1 = x1.clone();
        self.x = x1;
        Ok(InitInfo {
            f: self.fx,
            grad_inf: ginf,
        })
    }

    fn step(&mut self, oracle: &dyn Oracle, want_query: bool) -> Result<StepInfo> {
        let warm = self.k < self.warm_iters;
        if !warm && self.warm_iters > 0 && !self.warm_reset_done {
            // The learned phase restarts the extrapolation sequence from the
            // reached iterate paired with the original dual point.
            self.z = self.z1.clone();
            self.a = 0.0;
            self.warm_reset_done = true;
        }

        let a_next = agd_sequence_next(self.a);
        let coef = 1.0 - self.a / a_next;
        let y = extrapolate(&self.x, &self.z, coef);
        let (gy, fy) = self.query_extrapolated(oracle, &y)?;
        let ginf_y = linalg::inf_norm(&gy);
        let inv_l = 1.0 / self.l;

        let (weight, h_value, null_step, extra, query) = if warm {
            let step = linalg::scaled(inv_l, &gy);
            let cand = linalg::sub(&y, &step);
            let f_cand = oracle.eval_f(&cand)?;
            let null = !(f_cand < self.fx);
            if !null {
                self.x = cand;
                self.fx = f_cand;
                self.gx = None;
            }
            (self.l, None, null, None, None)
        } else {
            let query = want_query.then(|| QueryPoint {
                x: y.clone(),
                x_prev: None,
                gx: gy.clone(),
                fx: fy,
            });
            let sample = hyper_feedback(oracle, &y, &gy, fy, self.learner.param())?;
            let grad_h = hyper_feedback_grad(&sample, self.learner.param().shape());
            self.learner.step(&grad_h)?;

            let safeguard = linalg::sub(&y, &linalg::scaled(inv_l, &gy));
            let f_safeguard = oracle.eval_f(&safeguard)?;
            let mut pick = Pick::Keep;
            let mut best_f = self.fx;
            if sample.f_candidate < best_f {
                pick = Pick::Learned;
                best_f = sample.f_candidate;
            }
            if f_safeguard < best_f {
                pick = Pick::Safeguard;
            }
            let ginf_cand = linalg::inf_norm(&sample.g_candidate);
            let h = sample.h_value;
            let (null, extra) = match pick {
                Pick::Keep => (
                    true,
                    Some((sample.candidate, sample.f_candidate, ginf_cand)),
                ),
                Pick::Learned => {
                    self.x = sample.candidate;
                    self.fx = sample.f_candidate;
                    self.gx = Some(sample.g_candidate);
                    (false, None)
                }
                Pick::Safeguard => {
                    self.x = safeguard;
                    self.fx = f_safeguard;
                    self.gx = None;
                    (
                        false,
                        Some((sample.candidate, sample.f_candidate, ginf_cand)),
                    )
                }
            };
            (
                agd_weight(h, self.l, self.theta),
                Some(h),
                null,
                extra,
                query,
            )
        };

        let scale = (a_next - self.a) / weight;
        linalg::axpy(-scale, &gy, &mut self.z);
        self.a = a_next;
        self.k += 1;
        Ok(self.finish_step(y, fy, ginf_y, extra, h_value, null_step, query))
    }

    fn solution(&self) -> Solution {
        self.sol.clone()
    }

    fn precond(&self) -> Option<Preconditioner> {
        Some(self.learner.param().clone())
    }
}

/// Monotone accelerated gradient descent with the fixed stepsize `1/L`:
/// the candidate is kept only when it decreases `f`, and the dual iterate
/// averages gradients with the constant weight `L`.
pub struct AgdCvx {
    l: f64,
    k: usize,
    a: f64,
    x: Vec<f64>,
    fx: f64,
    z: Vec<f64>,
    gx: Option<Vec<f64>>,
    sol: Solution,
}

impl AgdCvx {
    pub fn new(smoothness: f64) -> Result<Self> {
        if !(smoothness > 0.0) || !smoothness.is_finite() {
            return Err(Error::config("smoothness constant must be finite and > 0"));
        }
        Ok(AgdCvx {
            l: smoothness,
            k: 0,
            a: 0.0,
            x: Vec::new(),
            fx: f64::NAN,
            z: Vec::new(),
            gx: None,
            sol: Solution {
                x: Vec::new(),
                f: f64::NAN,
                grad_inf: f64::INFINITY,
            },
        })
    }
}

impl Optimizer for AgdCvx {
    fn name(&self) -> &str {
        "agd-cvx"
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        self.fx = oracle.eval_f(&x1)?;
        let g = oracle.eval_grad(&x1)?;
        let ginf = linalg::inf_norm(&g);
        self.sol = Solution {
            x: x1.clone(),
            f: self.fx,
            grad_inf: ginf,
        };
        self.gx = Some(g);
        self.z = x1.clone();
        self.x = x1;
        Ok(InitInfo {
            f: self.fx,
            grad_inf: ginf,
        })
    }

    fn step(&mut self, oracle: &dyn Oracle, _want_query: bool) -> Result<StepInfo> {
        let a_next = agd_sequence_next(self.a);
        let coef = 1.0 - self.a / a_next;
        let y = extrapolate(&self.x, &self.z, coef);
        let (gy, fy) = if self.k == 0 {
            match self.gx.take() {
                Some(g) => (g, self.fx),
                None => (oracle.eval_grad(&y)?, oracle.eval_f(&y)?),
            }
        } else {
            (oracle.eval_grad(&y)?, oracle.eval_f(&y)?)
        };
        let ginf_y = linalg::inf_norm(&gy);

        let step = linalg::scaled(1.0 / self.l, &gy);
        let cand = linalg::sub(&y, &step);
        let f_cand = oracle.eval_f(&cand)?;
        let null = !(f_cand < self.fx);
        if !null {
            self.x = cand;
            self.fx = f_cand;
            self.gx = None;
        }

        let scale = (a_next - self.a) / self.l;
        linalg::axpy(-scale, &gy, &mut self.z);
        self.a = a_next;
        self.k += 1;

        let mut sol = Solution {
            x: y,
            f: fy,
            grad_inf: ginf_y,
        };
        if let Some(g) = &self.gx {
            let ginf = linalg::inf_norm(g);
            if ginf < sol.grad_inf {
                sol = Solution {
                    x: self.x.clone(),
                    f: self.fx,
                    grad_inf: ginf,
                };
            }
        }
        self.sol = sol;
        Ok(StepInfo {
            f: self.fx,
            grad_inf: self.sol.grad_inf,
            h_value: None,
            null_step: null,
            query: None,
        })
    }

    fn solution(&self) -> Solution {
        self.sol.clone()
    }
}
