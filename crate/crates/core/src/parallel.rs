//! Optional fixed-size worker pool with order-preserving maps.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub struct Workers(Option<rayon::ThreadPool>);

impl Workers {
    /// One worker runs inline on the calling thread.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        if n == 1 {
            return Ok(Workers(None));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|p| Workers(Some(p)))
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))
    }

    /// Maps `f` over `items`; output order matches input order regardless
    /// of the worker count.
    pub fn map<T: Sync, U: Send>(&self, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
        match &self.0 {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let serial = Workers::new(1).unwrap().map(&items, |x| x * x);
        let parallel = Workers::new(4).unwrap().map(&items, |x| x * x);
        assert_eq!(serial, parallel);
        assert!(Workers::new(0).is_err());
    }
}
