//! Binary sum tree over leaf priorities with O(log n) point update and
//! prefix-sum descent.

/// Fixed-capacity sum tree. Leaves live at indices `capacity - 1 ..`,
/// internal node i has children 2i+1 and 2i+2. Updates recompute
/// parents bottom-up from their children (an exact re-add, not an
/// incremental delta), so the root never drifts from the true leaf sum.
#[derive(Debug, Clone)]
pub struct SumTree {
    nodes: Vec<f64>,
    capacity: usize,
    // Leaf count padded to a power of two so leaf intervals appear in
    // leaf-index order; padding leaves hold priority 0 forever.
    width: usize,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "sum tree capacity must be >= 1");
        let width = capacity.next_power_of_two();
        Self {
            nodes: vec![0.0; 2 * width - 1],
            capacity,
            width,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[0]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        assert!(leaf < self.capacity, "leaf {leaf} out of range");
        self.nodes[self.width - 1 + leaf]
    }

    pub fn set(&mut self, leaf: usize, value: f64) {
        assert!(leaf < self.capacity, "leaf {leaf} out of range");
        assert!(
            value.is_finite() && value >= 0.0,
            "priority must be finite and non-negative, got {value}"
        );
        let mut i = self.width - 1 + leaf;
        self.nodes[i] = value;
        while i > 0 {
            i = (i - 1) / 2;
            self.nodes[i] = self.nodes[2 * i + 1] + self.nodes[2 * i + 2];
        }
    }

    /// Leaf index whose cumulative-priority interval contains `prefix`.
    /// `prefix` should lie in [0, total()); values at or beyond the
    /// total clamp to the last non-empty descent path.
    pub fn find(&self, prefix: f64) -> usize {
        assert!(prefix >= 0.0 && prefix.is_finite(), "bad prefix {prefix}");
        let mut i = 0;
        let mut rem = prefix;
        while 2 * i + 1 < self.nodes.len() {
            let left = 2 * i + 1;
            if rem < self.nodes[left] {
                i = left;
            } else {
                rem -= self.nodes[left];
                i = 2 * i + 2;
            }
        }
        (i - (self.width - 1)).min(self.capacity - 1)
    }
}
