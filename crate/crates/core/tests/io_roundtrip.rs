use proposal_mot::model_io::{
    load_embeddings, parse_config, parse_detections_str, parse_ground_truth, parse_tracking_output, write_detections,
    write_embeddings_binary, write_embeddings_csv, write_ground_truth, write_tracking_output, BoundingBox, Config,
    Detection, EmbeddingTable, GroundTruthEntry, TrackBox, Trajectory,
};
use proposal_mot::synth::ScenarioSpec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cents() -> impl Strategy<Value = f64> {
    (0i64..200_000).prop_map(|c| c as f64 / 100.0)
}

fn positive_cents() -> impl Strategy<Value = f64> {
    (1i64..50_000).prop_map(|c| c as f64 / 100.0)
}

fn track_strategy() -> impl Strategy<Value = Vec<Trajectory>> {
    prop::collection::vec(
        prop::collection::btree_map(1u32..500, (cents(), cents(), positive_cents(), positive_cents()), 1..20),
        0..50,
    )
    .prop_map(|tracks| {
        tracks
            .into_iter()
            .enumerate()
            .map(|(k, frames)| Trajectory {
                track_id: k as u32 + 1,
                detections: frames
                    .into_iter()
                    .map(|(f, (x, y, w, h))| Detection::new(f, 0, BoundingBox::new(x, y, w, h).unwrap(), 1.0))
                    .collect(),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn tracking_output_round_trip(tracks in track_strategy()) {
        let mut buf = Vec::new();
        write_tracking_output(&tracks, &mut buf).unwrap();
        let parsed = parse_tracking_output(buf.as_slice()).unwrap();
        let mut want: Vec<TrackBox> = tracks
            .iter()
            .flat_map(|t| t.detections.iter().map(move |d| TrackBox { frame: d.frame, id: t.track_id, bbox: d.bbox }))
            .collect();
        want.sort_by_key(|r| (r.frame, r.id));
        prop_assert_eq!(parsed, want);
    }

    #[test]
    fn detections_round_trip_at_full_precision(
        rows in prop::collection::vec((1u32..50, 0.0f64..2000.0, 0.0f64..1000.0, 0.1f64..300.0, 0.1f64..300.0, 0.0f64..1.0), 0..200)
    ) {
        let mut rows = rows;
        rows.sort_by_key(|r| r.0);
        let mut index = std::collections::BTreeMap::new();
        let dets: Vec<Detection> = rows
            .iter()
            .map(|&(f, x, y, w, h, c)| {
                let i = index.entry(f).or_insert(0u32);
                *i += 1;
                Detection::new(f, *i - 1, BoundingBox::new(x, y, w, h).unwrap(), c)
            })
            .collect();
        let mut buf = Vec::new();
        write_detections(&dets, &mut buf).unwrap();
        prop_assert_eq!(parse_detections_str(std::str::from_utf8(&buf).unwrap()).unwrap(), dets);
    }
}

/// Reordering lines across frames, with each frame's rows kept in file
/// order, gives exactly the same detections.
#[test]
fn detection_parsing_normalizes_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let lines: Vec<(u32, String)> = (0..rng.random_range(0..40))
            .map(|k| {
                let f = rng.random_range(1..8);
                (f, format!("{f},-1,{k},{},{},{},0.5", rng.random_range(0..100), rng.random_range(1..50), rng.random_range(1..50)))
            })
            .collect();
        let mut sorted = lines.clone();
        sorted.sort_by_key(|x| x.0);
        let sorted: Vec<&str> = sorted.iter().map(|x| x.1.as_str()).collect();
        let mut shuffled = lines.clone();
        shuffled.shuffle(&mut rng);
        // restore within-frame file order
        let mut by_frame: std::collections::BTreeMap<u32, Vec<String>> = std::collections::BTreeMap::new();
        for (f, l) in &lines {
            by_frame.entry(*f).or_default().push(l.clone());
        }
        let mut cursor: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
        let reordered: Vec<String> = shuffled
            .iter()
            .map(|(f, _)| {
                let k = cursor.entry(*f).or_insert(0);
                *k += 1;
                by_frame[f][*k - 1].clone()
            })
            .collect();
        let a = parse_detections_str(&sorted.join("\n")).unwrap();
        let b = parse_detections_str(&reordered.join("\n")).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].frame <= w[1].frame));
    }
}

#[test]
fn detection_line_maps_fields() {
    let d = parse_detections_str("1,-1,10,20,30,40,0.9").unwrap();
    assert_eq!(d, vec![Detection::new(1, 0, BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap(), 0.9)]);
    assert!(parse_detections_str("").unwrap().is_empty());
    assert!(parse_detections_str("1.5,-1,10,20,30,40,0.9").is_err());
}

fn random_table(rng: &mut ChaCha8Rng, records: usize, dim: usize) -> EmbeddingTable {
    let mut table = EmbeddingTable::new();
    while table.len() < records {
        let key = (rng.random_range(1..500), rng.random_range(0..20));
        table.insert(key, (0..dim).map(|_| rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-8..3))).collect());
    }
    table
}

#[test]
fn thousand_embeddings_round_trip_in_both_encodings() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let table = random_table(&mut rng, 1000, 7);
    let mut csv = Vec::new();
    write_embeddings_csv(&table, &mut csv).unwrap();
    let mut bin = Vec::new();
    write_embeddings_binary(&table, 7, &mut bin).unwrap();
    assert_eq!(load_embeddings(csv.as_slice(), 7).unwrap(), table);
    assert_eq!(load_embeddings(bin.as_slice(), 7).unwrap(), table);
}

#[test]
fn embedding_dimension_is_checked() {
    assert!(load_embeddings("1,0,0.6,0.8\n".as_bytes(), 2).is_ok());
    assert!(load_embeddings("1,0,0.6,0.8,0.1\n".as_bytes(), 2).is_err());
    let mut bin = Vec::new();
    write_embeddings_binary(&random_table(&mut ChaCha8Rng::seed_from_u64(1), 3, 4), 4, &mut bin).unwrap();
    assert!(load_embeddings(bin.as_slice(), 5).is_err());
    bin.pop();
    assert!(load_embeddings(bin.as_slice(), 4).is_err());
}

#[test]
fn ground_truth_round_trip_skips_inactive() {
    let entries = vec![
        GroundTruthEntry { frame: 1, identity: 2, bbox: BoundingBox::new(1.5, 2.25, 3.0, 4.0).unwrap(), visibility: 0.5 },
        GroundTruthEntry { frame: 2, identity: 1, bbox: BoundingBox::new(0.1, 0.2, 0.3, 0.4).unwrap(), visibility: 1.0 },
    ];
    let mut buf = Vec::new();
    write_ground_truth(&entries, &mut buf).unwrap();
    buf.extend_from_slice(b"3,4,1,1,1,1,0,1,1\n");
    assert_eq!(parse_ground_truth(buf.as_slice()).unwrap(), entries);
}

#[test]
fn config_round_trips_through_toml() {
    let c = Config { max_iterations: 7, threshold_step: 0.03, gcn_layers: 2, gcn_hidden: vec![8, 8], ..Config::default() };
    assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    assert_eq!(parse_config("").unwrap(), Config::default());
    assert!(parse_config("threshold_step = 0.0").is_err());
    assert!(parse_config("no_such_key = 1").is_err());
}

#[test]
fn scenario_round_trips_through_toml() {
    let s = ScenarioSpec { num_identities: 3, jitter: 0.5, seed: 9, ..ScenarioSpec::default() };
    assert_eq!(ScenarioSpec::from_toml(&s.to_toml()).unwrap(), s);
}
