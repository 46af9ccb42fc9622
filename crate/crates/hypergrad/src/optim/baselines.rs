//! Non-learned first-order baselines: gradient descent, heavy-ball,
//! constant-momentum Nesterov for strongly convex problems, Adam, and
//! AdaGrad. The accelerated convex baseline lives next to the learned
//! variant it mirrors in `agd`.

use crate::error::Error;
use crate::linalg;
use crate::online::ADAGRAD_EPSILON;
use crate::problems::Oracle;
use crate::Result;

use super::{InitInfo, Optimizer, Solution, StepInfo};

fn check_stepsize(stepsize: f64) -> Result<()> {
    if !(stepsize > 0.0) || !stepsize.is_finite() {
        return Err(Error::config("stepsize must be finite and > 0"));
    }
    Ok(())
}

/// Shared incumbent state for methods that keep the gradient at the current
/// iterate.
struct PointState {
    x: Vec<f64>,
    fx: f64,
    gx: Vec<f64>,
    ginf: f64,
}

impl PointState {
    fn empty() -> Self {
        PointState {
            x: Vec::new(),
            fx: f64::NAN,
            gx: Vec::new(),
            ginf: f64::INFINITY,
        }
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        self.fx = oracle.eval_f(&x1)?;
        self.gx = oracle.eval_grad(&x1)?;
        self.ginf = linalg::inf_norm(&self.gx);
        self.x = x1;
        Ok(InitInfo {
            f: self.fx,
            grad_inf: self.ginf,
        })
    }

    fn move_to(&mut self, oracle: &dyn Oracle, x_new: Vec<f64>) -> Result<StepInfo> {
        self.fx = oracle.eval_f(&x_new)?;
        self.gx = oracle.eval_grad(&x_new)?;
        self.ginf = linalg::inf_norm(&self.gx);
        self.x = x_new;
        Ok(StepInfo {
            f: self.fx,
            grad_inf: self.ginf,
            h_value: None,
            null_step: false,
            query: None,
        })
    }

    fn solution(&self) -> Solution {
        Solution {
            x: self.x.clone(),
            f: self.fx,
            grad_inf: self.ginf,
        }
    }
}

/// Gradient descent with a fixed stepsize.
pub struct Gd {
    stepsize: f64,
    state: PointState,
}

impl Gd {
    pub fn new(stepsize: f64) -> Result<Self> {
        check_stepsize(stepsize)?;
        Ok(Gd {
            stepsize,
            state: PointState::empty(),
        })
    }
}

impl Optimizer for Gd {
    fn name(&self) -> &str {
        "gd"
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        self.state.init(oracle, x1)
    }

    fn step(&mut self, oracle: &dyn Oracle, _want_query: bool) -> Result<StepInfo> {
        let next = linalg::sub(
            &self.state.x,
            &linalg::scaled(self.stepsize, &self.state.gx),
        );
        self.state.move_to(oracle, next)
    }

    fn solution(&self) -> Solution {
        self.state.solution()
    }
}

/// Gradient descent with heavy-ball momentum at a fixed coefficient.
pub struct GdHb {
    stepsize: f64,
    beta: f64,
    state: PointState,
    x_prev: Vec<f64>,
}

impl GdHb {
    pub fn new(stepsize: f64, beta: f64) -> Result<Self> {
        check_stepsize(stepsize)?;
        if !beta.is_finite() {
            return Err(Error::config("momentum coefficient must be finite"));
        }
        Ok(GdHb {
            stepsize,
            beta,
            state: PointState::empty(),
            x_prev: Vec::new(),
        })
    }
}

impl Optimizer for GdHb {
    fn name(&self) -> &str {
        "gd-hb"
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        self.x_prev = x1.clone();
        self.state.init(oracle, x1)
    }

    fn step(&mut self, oracle: &dyn Oracle, _want_query: bool) -> Result<StepInfo> {
        let mut next = linalg::sub(
            &self.state.x,
            &linalg::scaled(self.stepsize, &self.state.gx),
        );
        let dx = linalg::sub(&self.state.x, &self.x_prev);
        linalg::axpy(self.beta, &dx, &mut next);
        self.x_prev = self.state.x.clone();
        self.state.move_to(oracle, next)
    }

    fn solution(&self) -> Solution {
        self.state.solution()
    }
}

/// Nesterov's method for strongly convex problems, with the constant
/// momentum `(sqrt(kappa) - 1) / (sqrt(kappa) + 1)` and stepsize `1/L`.
/// Gradients are evaluated at the extrapolated point, so the stopping
/// criterion watches that point.
pub struct AgdScvx {
    stepsize: f64,
    beta: f64,
    x: Vec<f64>,
    fx: f64,
    x_prev: Vec<f64>,
    gx1: Option<Vec<f64>>,
    sol: Solution,
}

impl AgdScvx {
    pub fn new(smoothness: f64, strong_convexity: f64) -> Result<Self> {
        if !(smoothness > 0.0) || !smoothness.is_finite() {
            return Err(Error::config("smoothness constant must be finite and > 0"));
        }
        if !(strong_convexity > 0.0) || strong_convexity > smoothness {
            return Err(Error::config(
                "momentum for strongly convex problems needs a curvature estimate in (0, L]",
            ));
        }
        let kappa = smoothness / strong_convexity;
        let root = kappa.sqrt();
        Ok(AgdScvx {
            stepsize: 1.0 / smoothness,
            beta: (root - 1.0) / (root + 1.0),
            x: Vec::new(),
            fx: f64::NAN,
            x_prev: Vec::new(),
            gx1: None,
            sol: Solution {
                x: Vec::new(),
                f: f64::NAN,
                grad_inf: f64::INFINITY,
            },
        })
    }
}

impl Optimizer for AgdScvx {
    fn name(&self) -> &str {
        "agd-scvx"
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
        self.gx1 = Some(g);
        self.x_prev = x1.clone();
        self.x = x1;
        Ok(InitInfo {
            f: self.fx,
            grad_inf: ginf,
        })
    }

    fn step(&mut self, oracle: &dyn Oracle, _want_query: bool) -> Result<StepInfo> {
        let dx = linalg::sub(&self.x, &self.x_prev);
        let mut y = self.x.clone();
        linalg::axpy(self.beta, &dx, &mut y);
        // The first extrapolation coincides with the starting point, whose
        // gradient is already stored.
        let (gy, fy) = match self.gx1.take() {
            Some(g) => (g, self.fx),
            None => (oracle.eval_grad(&y)?, oracle.eval_f(&y)?),
        };
        let ginf = linalg::inf_norm(&gy);
        let next = linalg::sub(&y, &linalg::scaled(self.stepsize, &gy));
        self.x_prev = std::mem::replace(&mut self.x, next);
        self.fx = oracle.eval_f(&self.x)?;
        self.sol = Solution {
            x: y,
            f: fy,
            grad_inf: ginf,
        };
        Ok(StepInfo {
            f: self.fx,
            grad_inf: ginf,
            h_value: None,
            null_step: false,
            query: None,
        })
    }

    fn solution(&self) -> Solution {
        self.sol.clone()
    }
}

/// Adam with bias-corrected moment estimates.
pub struct Adam {
    stepsize: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: u32,
    m: Vec<f64>,
    v: Vec<f64>,
    state: PointState,
}

impl Adam {
    pub fn new(stepsize: f64) -> Result<Self> {
        Self::with_moments(stepsize, 0.9, 0.999, 1e-8)
    }

    pub fn with_moments(stepsize: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        check_stepsize(stepsize)?;
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(epsilon > 0.0) {
            return Err(Error::config(
                "moment decays must lie in [0, 1) and epsilon must be > 0",
            ));
        }
        Ok(Adam {
            stepsize,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
            state: PointState::empty(),
        })
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &str {
        "adam"
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        self.m = vec![0.0; x1.len()];
        self.v = vec![0.0; x1.len()];
        self.t = 0;
        self.state.init(oracle, x1)
    }

    fn step(&mut self, oracle: &dyn Oracle, _want_query: bool) -> Result<StepInfo> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut next = self.state.x.clone();
        for i in 0..next.len() {
            let g = self.state.gx[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            next[i] -= self.stepsize * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        self.state.move_to(oracle, next)
    }

    fn solution(&self) -> Solution {
        self.state.solution()
    }
}

/// AdaGrad with a per-coordinate accumulator.
pub struct AdaGradBaseline {
    stepsize: f64,
    u: Vec<f64>,
    state: PointState,
}

impl AdaGradBaseline {
    pub fn new(stepsize: f64) -> Result<Self> {
        check_stepsize(stepsize)?;
        Ok(AdaGradBaseline {
            stepsize,
            u: Vec::new(),
            state: PointState::empty(),
        })
    }
}

impl Optimizer for AdaGradBaseline {
    fn name(&self) -> &str {
        "adagrad"
    }

    fn init(&mut self, oracle: &dyn Oracle, x1: Vec<f64>) -> Result<InitInfo> {
        self.u = vec![0.0; x1.len()];
        self.state.init(oracle, x1)
    }

    fn step(&mut self, oracle: &dyn Oracle, _want_query: bool) -> Result<StepInfo> {
        let mut next = self.state.x.clone();
        for i in 0..next.len() {
            let g = self.state.gx[i];
            self.u[i] += g * g;
            next[i] -= self.stepsize * g / (self.u[i].sqrt() + ADAGRAD_EPSILON);
        }
        self.state.move_to(oracle, next)
    }

    fn solution(&self) -> Solution {
        self.state.solution()
    }
}
