use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::likelihood::link_sigmoid;
use crate::error::{Error, Result};
use crate::graph::Layer;

/// Fate of a degree class.
///
/// Zero-degree and full-degree classes are removed before solving because
/// their multipliers diverge; their links are fixed to 0 or 1 against every
/// node still active at their removal `stage`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassState {
    /// Solved class carrying `ln x` (top) or `ln y` (bottom).
    Free {
        log_multiplier: f64,
    },
    Empty {
        stage: usize,
    },
    Full {
        stage: usize,
    },
}

/// Nodes of one layer sharing the same observed degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeClass {
    pub degree: usize,
    pub members: Vec<usize>,
    pub state: ClassState,
}

impl DegreeClass {
    /// `x` or `y` for a solved class.
    pub fn multiplier(&self) -> Option<f64> {
        match self.state {
            ClassState::Free { log_multiplier } => Some(log_multiplier.exp()),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    top_count: usize,
    bottom_count: usize,
    top_classes: Vec<DegreeClass>,
    bottom_classes: Vec<DegreeClass>,
    tolerance_achieved: f64,
    iterations: usize,
}

/// A fitted Bipartite Configuration Model.
#[derive(Debug, Clone, PartialEq)]
pub struct BicmModel {
    top_classes: Vec<DegreeClass>,
    bottom_classes: Vec<DegreeClass>,
    top_class_of: Vec<usize>,
    bottom_class_of: Vec<usize>,
    tolerance_achieved: f64,
    iterations: usize,
}

fn class_index(classes: &[DegreeClass], len: usize) -> Result<Vec<usize>> {
    let mut of = vec![usize::MAX; len];
    for (c, class) in classes.iter().enumerate() {
        for &m in &class.members {
            if m >= len {
                return Err(Error::IndexOutOfRange { index: m, len });
            }
            of[m] = c;
        }
    }
    if of.contains(&usize::MAX) {
        return Err(Error::InvalidArgument(
            "degree classes do not cover every node".into(),
        ));
    }
    Ok(of)
}

impl BicmModel {
    pub(crate) fn new(
        top_classes: Vec<DegreeClass>,
        bottom_classes: Vec<DegreeClass>,
        top_count: usize,
        bottom_count: usize,
        tolerance_achieved: f64,
        iterations: usize,
    ) -> Result<Self> {
        let top_class_of = class_index(&top_classes, top_count)?;
        let bottom_class_of = class_index(&bottom_classes, bottom_count)?;
        Ok(BicmModel {
            top_classes,
            bottom_classes,
            top_class_of,
            bottom_class_of,
            tolerance_achieved,
            iterations,
        })
    }

    /// Max-norm degree residual reached by the solver.
    pub fn tolerance_achieved(&self) -> f64 {
        self.tolerance_achieved
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn layer_len(&self, layer: Layer) -> usize {
        self.class_of_slice(layer).len()
    }

    pub fn classes(&self, layer: Layer) -> &[DegreeClass] {
        match layer {
            Layer::Top => &self.top_classes,
            Layer::Bottom => &self.bottom_classes,
        }
    }

    fn class_of_slice(&self, layer: Layer) -> &[usize] {
        match layer {
            Layer::Top => &self.top_class_of,
            Layer::Bottom => &self.bottom_class_of,
        }
    }

    /// Degree class of node `index`.
    pub fn class_of(&self, layer: Layer, index: usize) -> Result<usize> {
        let of = self.class_of_slice(layer);
        of.get(index).copied().ok_or(Error::IndexOutOfRange {
            index,
            len: of.len(),
        })
    }

    /// `x_i` (top) or `y_α` (bottom); `None` for removed degenerate nodes.
    pub fn multiplier(&self, layer: Layer, index: usize) -> Result<Option<f64>> {
        let c = self.class_of(layer, index)?;
        Ok(self.classes(layer)[c].multiplier())
    }

    /// Link probability between a top class and a bottom class.
    pub fn class_probability(&self, top_class: usize, bottom_class: usize) -> f64 {
        let t = self.top_classes[top_class].state;
        let b = self.bottom_classes[bottom_class].state;
        match (t, b) {
            (ClassState::Free { log_multiplier: lx }, ClassState::Free { log_multiplier: ly }) => {
                link_sigmoid(lx, ly)
            }
            (ClassState::Free { .. }, fixed) | (fixed, ClassState::Free { .. }) => {
                fixed_value(fixed)
            }
            (ta, tb) => {
                if stage(ta) < stage(tb) {
                    fixed_value(ta)
                } else {
                    fixed_value(tb)
                }
            }
        }
    }

    /// `p_iα` for top node `top` and bottom node `bottom`.
    pub fn link_probability(&self, top: usize, bottom: usize) -> Result<f64> {
        let ct = self.class_of(Layer::Top, top)?;
        let cb = self.class_of(Layer::Bottom, bottom)?;
        Ok(self.class_probability(ct, cb))
    }

    /// Probability between node `i` of `layer` and node `j` of the opposite
    /// layer.
    pub fn link_probability_in(&self, layer: Layer, i: usize, j: usize) -> Result<f64> {
        match layer {
            Layer::Top => self.link_probability(i, j),
            Layer::Bottom => self.link_probability(j, i),
        }
    }

    /// `(⟨k_i⟩, ⟨h_α⟩)` summed over every node of the opposite layer,
    /// degenerate nodes included.
    pub fn expected_degrees(&self) -> (Vec<f64>, Vec<f64>) {
        let ct = self.top_classes.len();
        let cb = self.bottom_classes.len();
        let mut top_sum = vec![0.0; ct];
        let mut bottom_sum = vec![0.0; cb];
        for t in 0..ct {
            for b in 0..cb {
                let p = self.class_probability(t, b);
                top_sum[t] += p * self.bottom_classes[b].members.len() as f64;
                bottom_sum[b] += p * self.top_classes[t].members.len() as f64;
            }
        }
        let k = self.top_class_of.iter().map(|&c| top_sum[c]).collect();
        let h = self
            .bottom_class_of
            .iter()
            .map(|&c| bottom_sum[c])
            .collect();
        (k, h)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let doc = ModelDoc {
            top_count: self.top_class_of.len(),
            bottom_count: self.bottom_class_of.len(),
            top_classes: self.top_classes.clone(),
            bottom_classes: self.bottom_classes.clone(),
            tolerance_achieved: self.tolerance_achieved,
            iterations: self.iterations,
        };
        serde_json::to_writer_pretty(writer, &doc)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_reader(reader)?;
        Self::new(
            doc.top_classes,
            doc.bottom_classes,
            doc.top_count,
            doc.bottom_count,
            doc.tolerance_achieved,
            doc.iterations,
        )
    }
}

fn stage(state: ClassState) -> usize {
    match state {
        ClassState::Empty { stage } | ClassState::Full { stage } => stage,
        ClassState::Free { .. } => usize::MAX,
    }
}

fn fixed_value(state: ClassState) -> f64 {
    match state {
        ClassState::Full { .. } => 1.0,
        _ => 0.0,
    }
}
