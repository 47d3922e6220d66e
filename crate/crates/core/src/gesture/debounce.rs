use serde::{Deserialize, Serialize};

use super::GestureClass;
use crate::decision::Command;

pub const DEFAULT_REQUIRED_COUNT: usize = 5;

/// Emits a command once a class has been seen `required` times in a row.
///
/// A run fires at most once; a different class must break it before the same
/// command can fire again. `Other` never fires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Debouncer {
    required: usize,
    last: Option<GestureClass>,
    run_length: usize,
    fired: bool,
}

impl Default for Debouncer {
    fn default() -> Self {
        Self::new(DEFAULT_REQUIRED_COUNT)
    }
}

impl Debouncer {
    /// `required` is clamped to at least 1.
    pub fn new(required: usize) -> Self {
        Self {
            required: required.max(1),
            last: None,
            run_length: 0,
            fired: false,
        }
    }

    pub fn required(&self) -> usize {
        self.required
    }

    pub fn run_length(&self) -> usize {
        self.run_length
    }

    pub fn last_class(&self) -> Option<GestureClass> {
        self.last
    }

    pub fn step(&mut self, class: GestureClass) -> Option<Command> {
        if self.last == Some(class) {
            self.run_length = (self.run_length + 1).min(self.required);
        } else {
            self.last = Some(class);
            self.run_length = 1;
            self.fired = false;
        }
        if self.run_length < self.required || self.fired {
            return None;
        }
        let command = match class {
            GestureClass::Wait => Command::Wait,
            GestureClass::Follow => Command::Follow,
            GestureClass::Other => return None,
        };
        self.fired = true;
        Some(command)
    }

    /// Forgets the current run, e.g. when the target's hand leaves view.
    pub fn reset(&mut self) {
        self.last = None;
        self.run_length = 0;
        self.fired = false;
    }
}
