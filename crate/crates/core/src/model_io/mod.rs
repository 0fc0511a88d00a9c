//! Domain types, configuration, and file formats.

pub mod config;
pub mod formats;
pub mod types;

pub use config::{parse_config, Config, Gating, NeighborPolicy};
pub use formats::{
    attach_embeddings, load_embeddings, load_embeddings_binary, load_embeddings_csv, parse_detections,
    parse_detections_str, parse_ground_truth, parse_tracking_output, write_detections, write_embeddings_binary,
    write_embeddings_csv, write_ground_truth, write_tracking_output, EmbeddingTable,
};
pub use types::{trajectories_to_boxes, BoundingBox, Detection, GroundTruthEntry, TrackBox, Trajectory};
