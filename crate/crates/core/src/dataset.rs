use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Labeled feature matrix, row-major with one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f32>,
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<u32>,
    pub num_classes: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(
        features: Vec<f32>,
        cols: usize,
        labels: Vec<u32>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        let rows = labels.len();
        let ds = Self {
            features,
            rows,
            cols,
            labels,
            num_classes,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.rows * self.cols {
            return Err(Error::InvalidDataset(format!(
                "{} feature values for {} rows x {} cols",
                self.features.len(),
                self.rows,
                self.cols
            )));
        }
        if self.labels.len() != self.rows {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} rows",
                self.labels.len(),
                self.rows
            )));
        }
        if self.num_classes == 0 {
            return Err(Error::InvalidDataset("num_classes is zero".into()));
        }
        if let Some(bad) = self
            .labels
            .iter()
            .find(|&&l| l as usize >= self.num_classes)
        {
            return Err(Error::InvalidDataset(format!(
                "label {bad} >= num_classes {}",
                self.num_classes
            )));
        }
        if !self.features.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }
}
