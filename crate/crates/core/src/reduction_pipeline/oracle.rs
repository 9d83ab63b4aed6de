//! Memoizing wrapper around a fuel-model oracle.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use crate::{Domain, FuelModel, ModelSample, OperatingPoint, Result};

/// Caches oracle samples keyed by the exact bit patterns of `(v, a, θ)`, so
/// grid nodes shared between fitting steps are evaluated once.
pub struct CachedOracle<M> {
    inner: M,
    cache: RefCell<HashMap<[u64; 3], ModelSample>>,
    hits: Cell<usize>,
}

impl<M: FuelModel> CachedOracle<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            cache: RefCell::new(HashMap::new()),
            hits: Cell::new(0),
        }
    }

    /// Distinct points evaluated by the wrapped oracle.
    pub fn evaluations(&self) -> usize {
        self.cache.borrow().len()
    }

    pub fn hits(&self) -> usize {
        self.hits.get()
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: FuelModel> FuelModel for CachedOracle<M> {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        // -0.0 and 0.0 are the same point.
        let key = [pt.v + 0.0, pt.a + 0.0, pt.theta + 0.0].map(f64::to_bits);
        if let Some(s) = self.cache.borrow().get(&key) {
            self.hits.set(self.hits.get() + 1);
            return Ok(*s);
        }
        let s = self.inner.sample(pt)?;
        self.cache.borrow_mut().insert(key, s);
        Ok(s)
    }

    fn domain(&self) -> Option<Domain> {
        self.inner.domain()
    }
}
