use serde::Serialize;

use super::{Block, Mat};

/// Current and two previous iterates of both blocks.
///
/// `iteration` counts completed outer iterations, so `x` is `x^t` with
/// `t = iteration`. `eps_x`/`eps_y` hold the lookback used to produce the
/// current iterate, `‖x^{t−1} − x^{t−2}‖`, and are `+∞` while `t < 2`.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: Mat,
    pub y: Mat,
    pub x_prev: Mat,
    pub y_prev: Mat,
    pub x_prev2: Mat,
    pub y_prev2: Mat,
    pub eps_x: f64,
    pub eps_y: f64,
    pub iteration: usize,
}

impl IterateState {
    pub fn new(x0: Mat, y0: Mat) -> Self {
        IterateState {
            x_prev: x0.clone(),
            y_prev: y0.clone(),
            x_prev2: x0.clone(),
            y_prev2: y0.clone(),
            x: x0,
            y: y0,
            eps_x: f64::INFINITY,
            eps_y: f64::INFINITY,
            iteration: 0,
        }
    }

    /// Lookback for the next x-update, `‖x^t − x^{t−1}‖`, or `+∞` before the
    /// first completed iteration.
    pub fn next_eps_x(&self) -> f64 {
        if self.iteration >= 1 {
            (&self.x - &self.x_prev).norm()
        } else {
            f64::INFINITY
        }
    }

    pub fn next_eps_y(&self) -> f64 {
        if self.iteration >= 1 {
            (&self.y - &self.y_prev).norm()
        } else {
            f64::INFINITY
        }
    }

    /// View of the x-subproblem for the next iteration (y frozen at `y^t`).
    pub fn x_subproblem(&self) -> Subproblem<'_> {
        Subproblem {
            block: Block::X,
            anchor: &self.x,
            frozen: &self.y,
            eps: self.next_eps_x(),
        }
    }

    /// View of the y-subproblem, with x frozen at the freshly computed `x_new`.
    pub fn y_subproblem<'a>(&'a self, x_new: &'a Mat) -> Subproblem<'a> {
        Subproblem {
            block: Block::Y,
            anchor: &self.y,
            frozen: x_new,
            eps: self.next_eps_y(),
        }
    }

    /// Shift every slot back by one and install the new iterates.
    pub fn advance(&mut self, x_new: Mat, y_new: Mat) {
        let x_old = std::mem::replace(&mut self.x, x_new);
        let y_old = std::mem::replace(&mut self.y, y_new);
        self.x_prev2 = std::mem::replace(&mut self.x_prev, x_old);
        self.y_prev2 = std::mem::replace(&mut self.y_prev, y_old);
        self.iteration += 1;
        if self.iteration >= 2 {
            self.eps_x = (&self.x_prev - &self.x_prev2).norm();
            self.eps_y = (&self.y_prev - &self.y_prev2).norm();
        } else {
            self.eps_x = f64::INFINITY;
            self.eps_y = f64::INFINITY;
        }
    }

    pub fn step_norm_x(&self) -> f64 {
        (&self.x - &self.x_prev).norm()
    }

    pub fn step_norm_y(&self) -> f64 {
        (&self.y - &self.y_prev).norm()
    }
}

/// One block subproblem of the cyclic scheme:
/// `min_u h(u) + H(u, frozen) + (η/2)‖u − anchor‖²`.
#[derive(Debug, Clone, Copy)]
pub struct Subproblem<'a> {
    pub block: Block,
    /// `u^{t−1}`, the starting point and proximal center.
    pub anchor: &'a Mat,
    /// The other block's latest value.
    pub frozen: &'a Mat,
    /// Error budget lookback `‖u^{t−1} − u^{t−2}‖` (`+∞` if undefined).
    pub eps: f64,
}

/// The update that actually produced a block iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AppliedUpdate {
    Proximal { zeta: f64 },
    ProxLinear { gamma: f64, lipschitz: f64 },
    Embedded { c: f64, eta: f64 },
    /// Embedded update that exhausted its inner budget and took a
    /// prox-linear step instead.
    Fallback { gamma: f64, lipschitz: f64, c: f64, eta: f64 },
    /// Heuristic update with no descent certificate (e.g. INV).
    Heuristic,
}

impl AppliedUpdate {
    /// `γ − L` for prox-linear and fallback steps.
    pub fn gamma_gap(&self) -> Option<f64> {
        match *self {
            AppliedUpdate::ProxLinear { gamma, lipschitz }
            | AppliedUpdate::Fallback {
                gamma, lipschitz, ..
            } => Some(gamma - lipschitz),
            _ => None,
        }
    }
}

/// Per-outer-iteration log entry.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    /// Lyapunov value `Φ(z^t, z^{t−1})`; equals `objective` for
    /// combinations without a correction term.
    pub phi: f64,
    pub step_norm_x: f64,
    pub step_norm_y: f64,
    pub rel_change_x: f64,
    pub rel_change_y: f64,
    pub rel_change_obj: f64,
    pub err_norm_x: f64,
    pub err_norm_y: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub inner_steps_x: usize,
    pub inner_steps_y: usize,
    pub applied_x: AppliedUpdate,
    pub applied_y: AppliedUpdate,
    pub wall_time_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn rotation_shifts_one_slot() {
        let mut st = IterateState::new(scalar(0.0), scalar(10.0));
        assert!(st.next_eps_x().is_infinite());
        st.advance(scalar(1.0), scalar(11.0));
        assert_eq!(st.iteration, 1);
        assert!(st.eps_x.is_infinite());
        assert_eq!(st.next_eps_x(), 1.0);
        st.advance(scalar(3.0), scalar(14.0));
        assert_eq!(st.x_prev2[(0, 0)], 0.0);
        assert_eq!(st.x_prev[(0, 0)], 1.0);
        assert_eq!(st.x[(0, 0)], 3.0);
        assert_eq!(st.eps_x, 1.0);
        assert_eq!(st.eps_y, 1.0);
        st.advance(scalar(4.0), scalar(14.5));
        assert_eq!(st.eps_x, 2.0);
        assert_eq!(st.eps_y, 3.0);
        assert_eq!(st.eps_x, (&st.x_prev - &st.x_prev2).norm());
    }

    #[test]
    fn subproblem_views() {
        let mut st = IterateState::new(scalar(0.0), scalar(1.0));
        st.advance(scalar(2.0), scalar(1.5));
        let sub = st.x_subproblem();
        assert_eq!(sub.block, Block::X);
        assert_eq!(sub.anchor[(0, 0)], 2.0);
        assert_eq!(sub.frozen[(0, 0)], 1.5);
        assert_eq!(sub.eps, 2.0);
        let xn = scalar(7.0);
        let sub = st.y_subproblem(&xn);
        assert_eq!(sub.frozen[(0, 0)], 7.0);
        assert_eq!(sub.eps, 0.5);
    }
}
