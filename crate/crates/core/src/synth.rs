//! Seeded synthetic scenarios: straight-line targets with known identities.
//!
//! Every identity moves at constant velocity between two points inside the
//! image for the whole sequence. Detections are dropped inside occlusion
//! windows; ground truth keeps every frame. Embeddings are a per-identity
//! unit base vector plus Gaussian noise, renormalized.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::affinity::cosine;
use crate::error::{Error, Result};
use crate::model_io::{
    write_detections, write_embeddings_csv, write_ground_truth, BoundingBox, Detection, EmbeddingTable,
    GroundTruthEntry,
};

/// Frames `start..=end` in which `identity` (1-based) is not detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occlusion {
    pub identity: u32,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub num_identities: usize,
    pub frames: u32,
    pub image_width: f64,
    pub image_height: f64,
    pub min_box_width: f64,
    pub max_box_width: f64,
    /// Box height over width.
    pub aspect: f64,
    /// Upper bound on speed, pixels per frame.
    pub max_speed: f64,
    /// Per-frame Gaussian jitter of the true position, pixels.
    pub jitter: f64,
    pub occlusions: Vec<Occlusion>,
    pub embedding_dim: usize,
    /// Gaussian noise added to the base embedding before renormalizing.
    pub embedding_noise: f64,
    /// Rejection bound on the cosine between any two base embeddings.
    pub max_base_cosine: f64,
    /// Expected false positives per frame.
    pub false_positive_rate: f64,
    /// Gaussian noise on detection box coordinates, pixels.
    pub box_noise: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            num_identities: 5,
            frames: 200,
            image_width: 1920.0,
            image_height: 1080.0,
            min_box_width: 40.0,
            max_box_width: 80.0,
            aspect: 2.5,
            max_speed: 4.0,
            jitter: 0.0,
            occlusions: Vec::new(),
            embedding_dim: 128,
            embedding_noise: 0.0,
            max_base_cosine: 0.2,
            false_positive_rate: 0.0,
            box_noise: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.frames < 1 || self.embedding_dim < 1 {
            return fail("frames and embedding_dim must be >= 1".into());
        }
        if !(self.min_box_width > 0.0 && self.min_box_width <= self.max_box_width && self.aspect > 0.0) {
            return fail("box widths must satisfy 0 < min_box_width <= max_box_width".into());
        }
        if self.max_box_width >= self.image_width || self.max_box_width * self.aspect >= self.image_height {
            return fail("boxes must fit inside the image".into());
        }
        for s in [self.jitter, self.embedding_noise, self.box_noise, self.false_positive_rate, self.max_speed] {
            if !(s >= 0.0 && s.is_finite()) {
                return fail("noise levels, rates and speed must be finite and >= 0".into());
            }
        }
        for o in &self.occlusions {
            if o.identity < 1 || o.identity as usize > self.num_identities {
                return fail(format!("occlusion names unknown identity {}", o.identity));
            }
            if o.start < 1 || o.start > o.end || o.end > self.frames {
                return fail(format!("occlusion window {}..{} outside [1, {}]", o.start, o.end, self.frames));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario spec is representable as TOML")
    }

    fn occluded(&self, identity: u32, frame: u32) -> bool {
        self.occlusions.iter().any(|o| o.identity == identity && (o.start..=o.end).contains(&frame))
    }
}

/// One mid-sequence window per identity; identity `k` (0-based) is hidden
/// for `lengths[k % lengths.len()]` frames.
pub fn mid_sequence_occlusions(num_identities: usize, frames: u32, lengths: &[u32]) -> Vec<Occlusion> {
    (0..num_identities)
        .map(|k| {
            let len = lengths[k % lengths.len()].clamp(1, frames);
            let start = (frames / 2).saturating_sub(len / 2).max(1);
            let end = (start + len - 1).min(frames);
            Occlusion { identity: k as u32 + 1, start, end }
        })
        .collect()
}

/// `windows` random gaps per identity, one inside each equal slice of the
/// sequence, with lengths drawn from `3..max_len`.
pub fn random_occlusions<R: Rng + ?Sized>(
    num_identities: usize,
    frames: u32,
    windows: u32,
    max_len: u32,
    rng: &mut R,
) -> Vec<Occlusion> {
    let mut out = Vec::new();
    let slice = frames / windows.max(1);
    let max_len = max_len.min(slice.saturating_sub(2));
    if max_len <= 3 {
        return out;
    }
    for k in 0..num_identities as u32 {
        for part in 0..windows {
            let len = rng.random_range(3..max_len);
            let start = part * slice + rng.random_range(1..slice - len);
            out.push(Occlusion { identity: k + 1, start, end: start + len - 1 });
        }
    }
    out
}

fn noisy_scene(seed: u64, occlusions: Vec<Occlusion>) -> ScenarioSpec {
    ScenarioSpec {
        num_identities: 8,
        frames: 200,
        jitter: 1.0,
        box_noise: 1.5,
        embedding_noise: 0.1,
        false_positive_rate: 0.02,
        occlusions,
        seed,
        ..ScenarioSpec::default()
    }
}

/// Four moderately noisy scenes used for parameter sweeps: eight identities
/// over 200 frames, each hidden once mid-sequence for 5, 15 or 30 frames,
/// with jittered boxes and a few false positives.
pub fn standard_suite() -> Vec<ScenarioSpec> {
    (0..4).map(|seed| noisy_scene(seed, mid_sequence_occlusions(8, 200, &[5, 15, 30]))).collect()
}

/// The standard suite with two extra random gaps per identity, so most
/// identities break into four or more tracklets.
pub fn fragmented_suite() -> Vec<ScenarioSpec> {
    (0..4)
        .map(|seed| {
            let mut occlusions = mid_sequence_occlusions(8, 200, &[5, 15, 30]);
            occlusions.extend(random_occlusions(8, 200, 2, 12, &mut ChaCha8Rng::seed_from_u64(1000 + seed)));
            noisy_scene(seed, occlusions)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Detections with embeddings attached, sorted by `(frame, index_in_frame)`.
    pub detections: Vec<Detection>,
    pub embeddings: EmbeddingTable,
    pub ground_truth: Vec<GroundTruthEntry>,
    /// Source identity per detection (`None` for false positives), parallel to `detections`.
    pub identities: Vec<Option<u32>>,
}

impl Scenario {
    /// Writes `det.txt`, `emb.csv` and `gt.txt` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut det = Vec::new();
        write_detections(&self.detections, &mut det)?;
        std::fs::write(dir.join("det.txt"), det)?;
        let mut emb = Vec::new();
        write_embeddings_csv(&self.embeddings, &mut emb)?;
        std::fs::write(dir.join("emb.csv"), emb)?;
        let mut gt = Vec::new();
        write_ground_truth(&self.ground_truth, &mut gt)?;
        std::fs::write(dir.join("gt.txt"), gt)?;
        Ok(())
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return v;
    }
    v.into_iter().map(|x| x / n).collect()
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    unit((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Base embeddings with pairwise cosine below `max_cos`, by rejection. After
/// many failed draws the least-correlated candidate is taken.
fn base_embeddings<R: Rng>(n: usize, dim: usize, max_cos: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..2000 {
            let v = random_unit(dim, rng);
            let worst = out.iter().map(|u| cosine(u, &v)).fold(f64::NEG_INFINITY, f64::max);
            if worst < max_cos {
                best = Some((worst, v));
                break;
            }
            if best.as_ref().is_none_or(|(b, _)| worst < *b) {
                best = Some((worst, v));
            }
        }
        out.push(best.unwrap().1);
    }
    out
}

fn noisy<R: Rng>(v: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        v
    } else {
        v + Normal::new(0.0, sigma).unwrap().sample(rng)
    }
}

struct Target {
    start: [f64; 2],
    velocity: [f64; 2],
    w: f64,
    h: f64,
    embedding: Vec<f64>,
}

/// Generates one scenario; identical specs give identical scenarios.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bases = base_embeddings(spec.num_identities, spec.embedding_dim, spec.max_base_cosine, &mut rng);

    let span = (spec.frames - 1).max(1) as f64;
    let targets: Vec<Target> = bases
        .into_iter()
        .map(|embedding| {
            let w = rng.random_range(spec.min_box_width..=spec.max_box_width);
            let h = w * spec.aspect;
            let (xmax, ymax) = (spec.image_width - w, spec.image_height - h);
            let start = [rng.random_range(0.0..=xmax), rng.random_range(0.0..=ymax)];
            let end = [rng.random_range(0.0..=xmax), rng.random_range(0.0..=ymax)];
            let mut velocity = [(end[0] - start[0]) / span, (end[1] - start[1]) / span];
            let speed = velocity[0].hypot(velocity[1]);
            if speed > spec.max_speed {
                let k = spec.max_speed / speed;
                velocity = [velocity[0] * k, velocity[1] * k];
            }
            Target { start, velocity, w, h, embedding }
        })
        .collect();

    let mut detections = Vec::new();
    let mut identities = Vec::new();
    let mut ground_truth = Vec::new();
    for frame in 1..=spec.frames {
        let t = (frame - 1) as f64;
        let mut rows: Vec<(BoundingBox, Vec<f64>, Option<u32>)> = Vec::new();
        for (k, target) in targets.iter().enumerate() {
            let identity = k as u32 + 1;
            let x = noisy(target.start[0] + target.velocity[0] * t, spec.jitter, &mut rng);
            let y = noisy(target.start[1] + target.velocity[1] * t, spec.jitter, &mut rng);
            let truth = BoundingBox::new(x, y, target.w, target.h)?;
            ground_truth.push(GroundTruthEntry { frame, identity, bbox: truth, visibility: 1.0 });

            let cx = x + 0.5 * target.w;
            let cy = y + 0.5 * target.h;
            let inside = (0.0..=spec.image_width).contains(&cx) && (0.0..=spec.image_height).contains(&cy);
            if !inside || spec.occluded(identity, frame) {
                continue;
            }
            let bbox = BoundingBox::new(
                noisy(x, spec.box_noise, &mut rng),
                noisy(y, spec.box_noise, &mut rng),
                noisy(target.w, spec.box_noise, &mut rng).max(1.0),
                noisy(target.h, spec.box_noise, &mut rng).max(1.0),
            )?;
            let emb = if spec.embedding_noise == 0.0 {
                target.embedding.clone()
            } else {
                unit(target.embedding.iter().map(|v| noisy(*v, spec.embedding_noise, &mut rng)).collect())
            };
            rows.push((bbox, emb, Some(identity)));
        }

        let mut fps = spec.false_positive_rate.floor() as usize;
        if rng.random_bool(spec.false_positive_rate.fract()) {
            fps += 1;
        }
        for _ in 0..fps {
            let w = rng.random_range(spec.min_box_width..=spec.max_box_width);
            let h = w * spec.aspect;
            let bbox = BoundingBox::new(
                rng.random_range(0.0..=spec.image_width - w),
                rng.random_range(0.0..=spec.image_height - h),
                w,
                h,
            )?;
            rows.push((bbox, random_unit(spec.embedding_dim, &mut rng), None));
        }

        rows.shuffle(&mut rng);
        for (index, (bbox, emb, identity)) in rows.into_iter().enumerate() {
            detections.push(Detection::new(frame, index as u32, bbox, 1.0).with_embedding(emb));
            identities.push(identity);
        }
    }
    let embeddings = detections.iter().map(|d| (d.key(), d.embedding.clone())).collect();
    Ok(Scenario { detections, embeddings, ground_truth, identities })
}
