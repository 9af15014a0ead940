//! Undo log of domain changes.

use crate::domain::FiniteDomain;

#[derive(Debug, Clone, Default)]
pub struct Trail {
    entries: Vec<(usize, FiniteDomain)>,
    marks: Vec<usize>,
}

impl Trail {
    pub fn record(&mut self, slot: usize, old: FiniteDomain) {
        self.entries.push((slot, old));
    }

    pub fn push_mark(&mut self) {
        self.marks.push(self.entries.len());
    }

    pub fn depth(&self) -> usize {
        self.marks.len()
    }

    /// Undoes everything since the newest mark. The mark stays unless
    /// `release` is set.
    pub fn restore(&mut self, doms: &mut [FiniteDomain], release: bool) {
        let mark = if release { self.marks.pop() } else { self.marks.last().copied() }.expect("no trail mark");
        for (slot, old) in self.entries.drain(mark..).rev() {
            doms[slot] = old;
        }
    }
}
