use std::collections::VecDeque;

use rand::Rng;

/// Fixed-capacity experience pool; the oldest episode is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayPool<T> {
    items: VecDeque<T>,
    capacity: usize,
}

impl<T> ReplayPool<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay pool capacity must be positive");
        ReplayPool {
            items: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn oldest(&self) -> Option<&T> {
        self.items.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Uniform sample of up to `k` distinct items.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<&T> {
        let k = k.min(self.items.len());
        rand::seq::index::sample(rng, self.items.len(), k)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn evicts_oldest_first() {
        let mut pool = ReplayPool::new(2000);
        for i in 0..2001 {
            pool.push(i);
            assert!(pool.len() <= 2000);
        }
        assert_eq!(pool.len(), 2000);
        assert_eq!(pool.oldest(), Some(&1));
        assert!(!pool.iter().any(|&x| x == 0));
    }

    #[test]
    fn samples_are_distinct() {
        let mut pool = ReplayPool::new(10);
        for i in 0..10 {
            pool.push(i);
        }
        let mut rng = seed::rng(0);
        let mut s: Vec<i32> = pool.sample(32, &mut rng).into_iter().copied().collect();
        s.sort();
        assert_eq!(s, (0..10).collect::<Vec<_>>());
        assert_eq!(pool.sample(3, &mut rng).len(), 3);
    }
}
