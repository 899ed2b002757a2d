use super::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::garment::SemanticLabel;
use crate::geometry::Vec3;

/// One occupancy field per semantic label; a point's label is the argmax.
pub struct SemanticFieldSet {
    labels: Vec<SemanticLabel>,
    fields: Vec<Box<dyn ScalarField>>,
}

impl SemanticFieldSet {
    pub fn new(entries: Vec<(SemanticLabel, Box<dyn ScalarField>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("semantic labels"));
        }
        let mut labels = Vec::with_capacity(entries.len());
        let mut fields = Vec::with_capacity(entries.len());
        for (label, field) in entries {
            if field.convention().kind != FieldKind::Occupancy {
                return Err(Error::InvalidScene(format!(
                    "semantic field for `{label}` must be an occupancy field"
                )));
            }
            if labels.contains(&label) {
                return Err(Error::InvalidScene(format!("duplicate semantic label `{label}`")));
            }
            labels.push(label);
            fields.push(field);
        }
        Ok(Self { labels, fields })
    }

    pub fn labels(&self) -> &[SemanticLabel] {
        &self.labels
    }

    pub fn field(&self, label: SemanticLabel) -> Option<&dyn ScalarField> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map(|i| self.fields[i].as_ref())
    }

    pub fn values(&self, p: &Vec3) -> Vec<f64> {
        self.fields.iter().map(|f| f.eval(p)).collect()
    }

    /// Label with the largest value; ties go to the earliest label.
    pub fn argmax(&self, p: &Vec3) -> SemanticLabel {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, f) in self.fields.iter().enumerate() {
            let v = f.eval(p);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        self.labels[best]
    }
}
