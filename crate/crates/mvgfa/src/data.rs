//! Paired multi-view data containers.

use std::collections::HashSet;

use ndarray::Array2;

use crate::error::{GfaError, Result};
use crate::real::Real;

/// One data matrix: N samples (rows) by D_m features (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix<R: Real> {
    pub name: String,
    pub values: Array2<R>,
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl<R: Real> ViewMatrix<R> {
    pub fn new(
        name: impl Into<String>,
        values: Array2<R>,
        feature_names: Vec<String>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        let view = ViewMatrix {
            name: name.into(),
            values,
            feature_names,
            sample_ids,
        };
        view.validate()?;
        Ok(view)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.values.dim();
        if n < 2 {
            return Err(GfaError::invalid(format!(
                "view '{}' needs at least 2 samples, got {n}",
                self.name
            )));
        }
        if d < 1 {
            return Err(GfaError::invalid(format!(
                "view '{}' needs at least 1 feature",
                self.name
            )));
        }
        if self.sample_ids.len() != n {
            return Err(GfaError::invalid(format!(
                "view '{}': {} sample ids for {n} rows",
                self.name,
                self.sample_ids.len()
            )));
        }
        if self.feature_names.len() != d {
            return Err(GfaError::invalid(format!(
                "view '{}': {} feature names for {d} columns",
                self.name,
                self.feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for f in &self.feature_names {
            if !seen.insert(f.as_str()) {
                return Err(GfaError::invalid(format!(
                    "view '{}': duplicate feature name '{f}'",
                    self.name
                )));
            }
        }
        if let Some(((r, c), v)) = self
            .values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(ix, v)| (ix, *v))
        {
            return Err(GfaError::invalid(format!(
                "view '{}': non-finite value {v} at row {r}, column {c}",
                self.name
            )));
        }
        Ok(())
    }
}

/// M views over the same N samples, rows paired and identically ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset<R: Real> {
    pub views: Vec<ViewMatrix<R>>,
    pub sample_ids: Vec<String>,
}

impl<R: Real> MultiViewDataset<R> {
    pub fn new(views: Vec<ViewMatrix<R>>) -> Result<Self> {
        if views.len() < 2 {
            return Err(GfaError::invalid(format!(
                "need at least 2 views, got {}",
                views.len()
            )));
        }
        let sample_ids = views[0].sample_ids.clone();
        let dataset = MultiViewDataset { views, sample_ids };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    /// Per-view feature counts, in view order.
    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.n_features()).collect()
    }

    pub fn view_names(&self) -> Vec<String> {
        self.views.iter().map(|v| v.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.len() < 2 {
            return Err(GfaError::invalid("need at least 2 views"));
        }
        for view in &self.views {
            view.validate()?;
            if view.sample_ids != self.sample_ids {
                return Err(GfaError::invalid(format!(
                    "view '{}' is not paired: sample ids differ from the shared ordering",
                    view.name
                )));
            }
        }
        Ok(())
    }
}
