/// 64-entry sliding bitmap anchored at the highest counter accepted so far.
///
/// Bit `i` records whether `highest - i` has been seen. Counters ahead of the
/// anchor slide the window forward; counters 64 or more behind it are refused.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayWindow {
    highest: Option<u64>,
    bitmap: u64,
}

pub const WINDOW_SIZE: u64 = 64;

impl ReplayWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn highest(&self) -> Option<u64> {
        self.highest
    }

    /// Whether `counter` would be accepted. Does not modify the window.
    pub fn check(&self, counter: u64) -> bool {
        let Some(highest) = self.highest else {
            return true;
        };
        if counter > highest {
            return true;
        }
        let behind = highest - counter;
        behind < WINDOW_SIZE && self.bitmap & (1 << behind) == 0
    }

    /// Marks `counter` as seen. Callers must `check` first.
    pub fn commit(&mut self, counter: u64) {
        match self.highest {
            None => {
                self.highest = Some(counter);
                self.bitmap = 1;
            }
            Some(highest) if counter > highest => {
                let shift = counter - highest;
                self.bitmap = if shift >= WINDOW_SIZE {
                    0
                } else {
                    self.bitmap << shift
                };
                self.bitmap |= 1;
                self.highest = Some(counter);
            }
            Some(highest) => {
                let behind = highest - counter;
                if behind < WINDOW_SIZE {
                    self.bitmap |= 1 << behind;
                }
            }
        }
    }

    pub fn check_and_commit(&mut self, counter: u64) -> bool {
        let ok = self.check(counter);
        if ok {
            self.commit(counter);
        }
        ok
    }
}
