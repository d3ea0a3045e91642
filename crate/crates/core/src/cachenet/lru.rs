use std::collections::HashMap;
use std::hash::Hash;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Slot<K> {
    key: K,
    prev: usize,
    next: usize,
}

/// Bounded store with least-recently-used eviction.
///
/// Entries live in a slab threaded by a doubly linked recency list; the map
/// points keys at their slot. `head` is the most recent entry.
#[derive(Debug, Clone)]
pub struct LruStore<K> {
    capacity: usize,
    index: HashMap<K, usize>,
    slots: Vec<Slot<K>>,
    free: Vec<usize>,
    head: usize,
    tail: usize,
}

impl<K: Copy + Eq + Hash> LruStore<K> {
    pub fn new(capacity: usize) -> Self {
        LruStore {
            capacity,
            index: HashMap::with_capacity(capacity),
            slots: Vec::with_capacity(capacity),
            free: Vec::new(),
            head: NIL,
            tail: NIL,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, key: &K) -> bool {
        self.index.contains_key(key)
    }

    /// Marks `key` most recent. Returns false if it is not stored.
    pub fn touch(&mut self, key: &K) -> bool {
        match self.index.get(key) {
            Some(&slot) => {
                self.unlink(slot);
                self.push_front(slot);
                true
            }
            None => false,
        }
    }

    /// Stores `key` as most recent and returns the entry evicted to make
    /// room, if any. Re-inserting a stored key only touches it. A store with
    /// zero capacity keeps nothing.
    pub fn insert(&mut self, key: K) -> Option<K> {
        if self.touch(&key) || self.capacity == 0 {
            return None;
        }
        let mut evicted = None;
        if self.index.len() == self.capacity {
            let victim = self.tail;
            self.unlink(victim);
            let old = self.slots[victim].key;
            self.index.remove(&old);
            self.free.push(victim);
            evicted = Some(old);
        }
        let slot = match self.free.pop() {
            Some(slot) => {
                self.slots[slot].key = key;
                slot
            }
            None => {
                self.slots.push(Slot {
                    key,
                    prev: NIL,
                    next: NIL,
                });
                self.slots.len() - 1
            }
        };
        self.push_front(slot);
        self.index.insert(key, slot);
        evicted
    }

    /// Keys from most to least recent.
    pub fn iter(&self) -> impl Iterator<Item = K> + '_ {
        let mut cursor = self.head;
        std::iter::from_fn(move || {
            if cursor == NIL {
                return None;
            }
            let slot = &self.slots[cursor];
            cursor = slot.next;
            Some(slot.key)
        })
    }

    fn unlink(&mut self, slot: usize) {
        let Slot { prev, next, .. } = self.slots[slot];
        if prev == NIL {
            self.head = next;
        } else {
            self.slots[prev].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.slots[next].prev = prev;
        }
    }

    fn push_front(&mut self, slot: usize) {
        self.slots[slot].prev = NIL;
        self.slots[slot].next = self.head;
        if self.head != NIL {
            self.slots[self.head].prev = slot;
        }
        self.head = slot;
        if self.tail == NIL {
            self.tail = slot;
        }
    }
}
