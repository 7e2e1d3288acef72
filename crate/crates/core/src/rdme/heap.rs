/// Binary min-heap over a fixed set of items `0..n`, keyed by time, with
/// in-place key updates.
#[derive(Debug, Clone)]
pub struct IndexedHeap {
    /// Heap slot -> key.
    slot_keys: Vec<f64>,
    /// Heap slot -> item.
    heap: Vec<u32>,
    /// Item -> heap slot.
    pos: Vec<u32>,
}

impl IndexedHeap {
    pub fn new(keys: Vec<f64>) -> Self {
        let n = keys.len();
        let mut h = Self {
            slot_keys: keys,
            heap: (0..n as u32).collect(),
            pos: (0..n as u32).collect(),
        };
        for slot in (0..n / 2).rev() {
            h.sift_down(slot);
        }
        h
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Item with the smallest key, and that key.
    #[inline]
    pub fn peek(&self) -> (usize, f64) {
        (self.heap[0] as usize, self.slot_keys[0])
    }

    #[inline]
    pub fn key(&self, item: usize) -> f64 {
        self.slot_keys[self.pos[item] as usize]
    }

    #[inline]
    pub fn update(&mut self, item: usize, key: f64) {
        let slot = self.pos[item] as usize;
        let old = self.slot_keys[slot];
        self.slot_keys[slot] = key;
        if key < old {
            self.sift_up(slot);
        } else {
            self.sift_down(slot);
        }
    }

    #[inline]
    fn place(&mut self, slot: usize, item: u32, key: f64) {
        self.heap[slot] = item;
        self.slot_keys[slot] = key;
        self.pos[item as usize] = slot as u32;
    }

    fn sift_up(&mut self, mut slot: usize) {
        let item = self.heap[slot];
        let key = self.slot_keys[slot];
        while slot > 0 {
            let parent = (slot - 1) / 2;
            if key < self.slot_keys[parent] {
                self.place(slot, self.heap[parent], self.slot_keys[parent]);
                slot = parent;
            } else {
                break;
            }
        }
        self.place(slot, item, key);
    }

    fn sift_down(&mut self, mut slot: usize) {
        let n = self.heap.len();
        let item = self.heap[slot];
        let key = self.slot_keys[slot];
        loop {
            let l = 2 * slot + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n {
                l + usize::from(self.slot_keys[r] < self.slot_keys[l])
            } else {
                l
            };
            let child_key = self.slot_keys[child];
            if child_key < key {
                self.place(slot, self.heap[child], child_key);
                slot = child;
            } else {
                break;
            }
        }
        self.place(slot, item, key);
    }

    /// Heap order holds and the position index is consistent.
    pub fn is_valid(&self) -> bool {
        let n = self.heap.len();
        (0..n).all(|s| self.pos[self.heap[s] as usize] as usize == s)
            && (1..n).all(|s| self.slot_keys[(s - 1) / 2] <= self.slot_keys[s])
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn behaves_like_a_sorted_scan(
            keys in prop::collection::vec(0.0f64..100.0, 1..60),
            updates in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..100.0), 0..200),
        ) {
            let mut h = IndexedHeap::new(keys.clone());
            let mut reference = keys;
            prop_assert!(h.is_valid());
            for (i, k) in updates {
                let item = i.index(reference.len());
                h.update(item, k);
                reference[item] = k;
                prop_assert!(h.is_valid());
                let min = reference.iter().copied().fold(f64::INFINITY, f64::min);
                prop_assert_eq!(h.peek().1, min);
                prop_assert_eq!(h.key(item), k);
            }
        }
    }

    #[test]
    fn infinite_keys_sink() {
        let mut h = IndexedHeap::new(vec![f64::INFINITY, 2.0, 1.0]);
        assert_eq!(h.peek(), (2, 1.0));
        h.update(2, f64::INFINITY);
        assert_eq!(h.peek(), (1, 2.0));
        h.update(0, 0.5);
        assert_eq!(h.peek(), (0, 0.5));
    }
}
