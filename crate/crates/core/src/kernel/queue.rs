use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{Message, SimTime};

struct Entry(Message);

impl Entry {
    fn key(&self) -> (SimTime, u64) {
        (self.0.deliver_at, self.0.sequence)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Min-queue of messages ordered by `(deliver_at, sequence)`.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Entry>>,
}

impl EventQueue {
    pub fn push(&mut self, msg: Message) {
        self.heap.push(Reverse(Entry(msg)));
    }

    pub fn pop(&mut self) -> Option<Message> {
        self.heap.pop().map(|Reverse(Entry(m))| m)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.0.deliver_at)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
