//! Deterministic FrozenLake on the standard 8x8 map.
//! Actions: 0 left, 1 down, 2 right, 3 up.

use super::TaskError;

pub const MAP: [&str; 8] = [
    "SFFFFFFF", "FFFFFFFF", "FFFHFFFF", "FFFFFHFF", "FFFHFFFF", "FHHFFFHF", "FHFFHFHF", "FFFHFFFG",
];
pub const SIDE: usize = 8;
pub const N_SQUARES: usize = SIDE * SIDE;
pub const GOAL: usize = N_SQUARES - 1;
/// Episodes are truncated after this many moves.
pub const MAX_STEPS: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrozenLakeState {
    pub square: usize,
    pub steps: u32,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenLake;

impl FrozenLake {
    pub const N_ACTIONS: usize = 4;

    pub fn reset() -> FrozenLakeState {
        FrozenLakeState::default()
    }

    pub fn tile(square: usize) -> Result<u8, TaskError> {
        if square >= N_SQUARES {
            return Err(TaskError::SquareOutOfRange(square));
        }
        Ok(MAP[square / SIDE].as_bytes()[square % SIDE])
    }

    pub fn is_hole(square: usize) -> bool {
        Self::tile(square) == Ok(b'H')
    }

    pub fn step(state: &FrozenLakeState, action: usize) -> Result<(FrozenLakeState, f64, bool), TaskError> {
        if state.done {
            return Err(TaskError::EpisodeDone);
        }
        let (row, col) = (state.square / SIDE, state.square % SIDE);
        let (row, col) = match action {
            0 => (row, col.saturating_sub(1)),
            1 => ((row + 1).min(SIDE - 1), col),
            2 => (row, (col + 1).min(SIDE - 1)),
            3 => (row.saturating_sub(1), col),
            _ => return Err(TaskError::InvalidAction { action, n_actions: Self::N_ACTIONS }),
        };
        let square = row * SIDE + col;
        let steps = state.steps + 1;
        let (reward, done) = match Self::tile(square)? {
            b'H' => (0.0, true),
            b'G' => (1.0, true),
            _ => (0.0, steps >= MAX_STEPS),
        };
        Ok((FrozenLakeState { square, steps, done }, reward, done))
    }
}
