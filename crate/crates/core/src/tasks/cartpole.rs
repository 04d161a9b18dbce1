//! Cart-pole balancing with the classic-control dynamics and explicit Euler
//! integration. Action 0 pushes the cart left, action 1 pushes it right.

use rand::Rng;

use super::TaskError;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
/// Half the pole length.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const FORCE: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_LIMIT: f64 = 2.4;
pub const THETA_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;
pub const MAX_STEPS: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub steps: u32,
    pub done: bool,
}

impl CartPoleState {
    pub fn observation(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    fn out_of_bounds(&self) -> bool {
        self.x.abs() > X_LIMIT || self.theta.abs() > THETA_LIMIT
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CartPole;

impl CartPole {
    pub const N_ACTIONS: usize = 2;

    /// Start state with each variable drawn from `Uniform(-0.05, 0.05)`.
    pub fn reset<R: Rng + ?Sized>(rng: &mut R) -> CartPoleState {
        let mut draw = || rng.random_range(-0.05..0.05);
        CartPoleState { x: draw(), x_dot: draw(), theta: draw(), theta_dot: draw(), steps: 0, done: false }
    }

    /// One Euler step of the equations of motion under a horizontal force,
    /// without termination checks.
    pub fn integrate(state: &CartPoleState, force: f64) -> CartPoleState {
        let total_mass = CART_MASS + POLE_MASS;
        let pole_mass_length = POLE_MASS * POLE_HALF_LENGTH;
        let (sin, cos) = state.theta.sin_cos();

        let temp = (force + pole_mass_length * state.theta_dot.powi(2) * sin) / total_mass;
        let theta_acc =
            (GRAVITY * sin - cos * temp) / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;

        CartPoleState {
            x: state.x + TAU * state.x_dot,
            x_dot: state.x_dot + TAU * x_acc,
            theta: state.theta + TAU * state.theta_dot,
            theta_dot: state.theta_dot + TAU * theta_acc,
            steps: state.steps + 1,
            done: false,
        }
    }

    /// Advances one step. Every step, including the last, is worth 1.
    pub fn step(state: &CartPoleState, action: usize) -> Result<(CartPoleState, f64, bool), TaskError> {
        if state.done {
            return Err(TaskError::EpisodeDone);
        }
        if action >= Self::N_ACTIONS {
            return Err(TaskError::InvalidAction { action, n_actions: Self::N_ACTIONS });
        }
        let force = if action == 1 { FORCE } else { -FORCE };
        let mut next = Self::integrate(state, force);
        next.done = next.out_of_bounds() || next.steps >= MAX_STEPS;
        Ok((next, 1.0, next.done))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_right_from_rest_matches_hand_computation() {
        // temp = 10 / 1.1; θ̈ = -temp / (0.5 · (4/3 - 0.1/1.1)); ẍ = temp - 0.05 · θ̈ / 1.1
        let temp: f64 = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        assert!((theta_acc - -14.634).abs() < 1e-3);
        assert!((x_acc - 9.756).abs() < 1e-3);

        let (next, reward, done) = CartPole::step(&CartPoleState::default(), 1).unwrap();
        assert_eq!(reward, 1.0);
        assert!(!done);
        assert!((next.x_dot - 0.19512).abs() < 1e-5);
        assert!((next.theta_dot - 0.02 * theta_acc).abs() < 1e-12);
        assert_eq!(next.x, 0.0);
    }

    #[test]
    fn leaving_the_track_ends_the_episode() {
        let s = CartPoleState { x: 2.39, x_dot: 1.0, ..Default::default() };
        let (next, _, done) = CartPole::step(&s, 1).unwrap();
        assert!(next.x > X_LIMIT);
        assert!(done);
        assert_eq!(CartPole::step(&next, 0), Err(TaskError::EpisodeDone));
    }

    #[test]
    fn episode_is_capped_at_500_steps() {
        // keep the pole balanced by construction: restart from the upright state each step
        let mut s = CartPoleState::default();
        let mut total = 0.0;
        loop {
            let upright = CartPoleState { steps: s.steps, ..Default::default() };
            let (mut next, r, done) = CartPole::step(&upright, (s.steps % 2) as usize).unwrap();
            total += r;
            next.x = 0.0;
            s = next;
            if done {
                break;
            }
        }
        assert_eq!(s.steps, 500);
        assert_eq!(total, 500.0);
    }

    #[test]
    fn unforced_tilt_grows() {
        for tilt in [0.01, -0.03] {
            let mut s = CartPoleState { theta: tilt, ..Default::default() };
            for _ in 0..30 {
                let next = CartPole::integrate(&s, 0.0);
                assert!(next.theta.abs() >= s.theta.abs());
                s = next;
            }
            assert!(s.theta.abs() > tilt.abs() * 1.1);
        }
    }

    #[test]
    fn reset_stays_in_small_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let s = CartPole::reset(&mut rng);
            assert!(s.observation().iter().all(|v| v.abs() < 0.05));
        }
    }

    #[test]
    fn rejects_bad_action() {
        assert!(CartPole::step(&CartPoleState::default(), 2).is_err());
    }
}
