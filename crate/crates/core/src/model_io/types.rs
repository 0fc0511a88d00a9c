use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel coordinates, anchored at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite coordinates and non-positive extents.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::Input(format!("non-finite box ({x}, {y}, {w}, {h})")));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::Input(format!("box extent must be positive, got w={w} h={h}")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x + 0.5 * self.w, self.y + 0.5 * self.h]
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Componentwise linear blend: `self` at `t = 0`, `other` at `t = 1`.
    pub fn lerp(&self, other: &BoundingBox, t: f64) -> BoundingBox {
        BoundingBox {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
            w: self.w + (other.w - self.w) * t,
            h: self.h + (other.h - self.h) * t,
        }
    }
}

/// One observation of one object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub sequence_id: String,
    pub frame: u32,
    pub index_in_frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    /// Appearance embedding; empty until embeddings are attached.
    pub embedding: Vec<f64>,
    /// Set on boxes synthesized by gap interpolation.
    pub interpolated: bool,
}

impl Detection {
    pub fn new(frame: u32, index_in_frame: u32, bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            sequence_id: String::new(),
            frame,
            index_in_frame,
            bbox,
            confidence,
            embedding: Vec::new(),
            interpolated: false,
        }
    }

    pub fn with_embedding(mut self, embedding: Vec<f64>) -> Self {
        self.embedding = embedding;
        self
    }

    /// `(frame, index_in_frame)`, the key shared with the embedding sidecar.
    pub fn key(&self) -> (u32, u32) {
        (self.frame, self.index_in_frame)
    }
}

/// Annotated ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntry {
    pub frame: u32,
    pub identity: u32,
    pub bbox: BoundingBox,
    pub visibility: f64,
}

/// Time-ordered detections sharing one track id.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub track_id: u32,
    pub detections: Vec<Detection>,
}

impl Trajectory {
    /// Checks that frames are strictly increasing.
    pub fn validate(&self) -> Result<()> {
        for pair in self.detections.windows(2) {
            if pair[1].frame <= pair[0].frame {
                return Err(Error::Integrity(format!(
                    "track {} has frames {} then {}",
                    self.track_id, pair[0].frame, pair[1].frame
                )));
            }
        }
        Ok(())
    }
}

/// Flat `(frame, id, box)` row, the common currency of result files and metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBox {
    pub frame: u32,
    pub id: u32,
    pub bbox: BoundingBox,
}

impl From<&GroundTruthEntry> for TrackBox {
    fn from(gt: &GroundTruthEntry) -> Self {
        TrackBox { frame: gt.frame, id: gt.identity, bbox: gt.bbox }
    }
}

/// Flattens trajectories into rows sorted by `(frame, id)`.
pub fn trajectories_to_boxes(trajectories: &[Trajectory]) -> Vec<TrackBox> {
    let mut rows: Vec<TrackBox> = trajectories
        .iter()
        .flat_map(|t| {
            t.detections
                .iter()
                .map(move |d| TrackBox { frame: d.frame, id: t.track_id, bbox: d.bbox })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.id));
    rows
}
