use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

/// One stored step. `done` is the task-completed flag only; an episode cut
/// off at the step limit stores `false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Normalized action in [-1,1]².
    pub action: [f64; 2],
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_obs: Array2<f64>,
    pub done: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(items: &[&Transition]) -> Batch {
        let n = items.len();
        let dim = items.first().map_or(0, |t| t.obs.len());
        Batch {
            obs: Array2::from_shape_fn((n, dim), |(i, j)| items[i].obs[j]),
            actions: Array2::from_shape_fn((n, 2), |(i, j)| items[i].action[j]),
            rewards: Array1::from_shape_fn(n, |i| items[i].reward),
            next_obs: Array2::from_shape_fn((n, dim), |(i, j)| items[i].next_obs[j]),
            done: Array1::from_shape_fn(n, |i| items[i].done as u8 as f64),
        }
    }
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items[self.head..].iter().chain(self.items[..self.head].iter())
    }

    /// Uniform sample of `size` distinct stored transitions.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Batch> {
        if size == 0 || size > self.items.len() {
            return Err(Error::invalid(format!(
                "cannot sample {size} transitions from a buffer holding {}",
                self.items.len()
            )));
        }
        let idx = rand::seq::index::sample(rng, self.items.len(), size);
        let picked: Vec<&Transition> = idx.iter().map(|i| &self.items[i]).collect();
        Ok(Batch::from_transitions(&picked))
    }
}
