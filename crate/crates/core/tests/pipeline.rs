use dribble_core::config::Config;
use dribble_core::explain::explain_model;
use dribble_core::features::{extract_match, read_table, write_table, Feature};
use dribble_core::ingest::{Direction, MatchBundle};
use dribble_core::model::{run_ablation, CvOptions, FeatureSet, TrainedModel};
use dribble_core::skeleton::SegmentTable;
use dribble_core::synth::{assemble_match, generate_dribble, plan_labeled_dataset, CorpusOptions, PlantedBeta};

fn corpus(n: usize, seed: u64) -> Vec<MatchBundle> {
    plan_labeled_dataset(n, &PlantedBeta::default(), seed, &CorpusOptions { dribbles_per_match: 40, ..Default::default() })
        .iter()
        .map(|p| p.render().unwrap().0)
        .collect()
}

#[test]
fn bundle_files_round_trip_through_extraction() {
    let cfg = Config::default();
    let table = SegmentTable::winter();
    let bundle = corpus(40, 1).remove(0);
    let dir = tempfile::tempdir().unwrap();
    bundle.save_dir(dir.path()).unwrap();
    let loaded = MatchBundle::load_dir(dir.path()).unwrap();
    assert_eq!(loaded.events, bundle.events);
    assert_eq!(loaded.frames.len(), bundle.frames.len());

    let a = extract_match(&bundle, &cfg, &table);
    let b = extract_match(&loaded, &cfg, &table);
    assert_eq!(a.rows.len(), 40);
    assert_eq!(b.rows.len(), 40);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.dribble_id, y.dribble_id);
        // positions are stored to the millimetre
        for f in [Feature::MaxSpeedAtt, Feature::P90TorsoLean, Feature::DefenderStanceAngle, Feature::DistGoalAtt] {
            assert!((x.get(f) - y.get(f)).abs() < 0.5, "{f:?}: {} vs {}", x.get(f), y.get(f));
        }
    }
}

#[test]
fn playing_direction_does_not_change_features() {
    let cfg = Config::default();
    let table = SegmentTable::winter();
    let plan = &plan_labeled_dataset(10, &PlantedBeta::default(), 2, &CorpusOptions::default())[0];
    let render = |d| {
        let dribbles = plan.dribbles.iter().map(|(p, s)| generate_dribble(p, *s).unwrap()).collect();
        assemble_match("m", dribbles, d).0
    };
    let plus = extract_match(&render(Direction::PlusX), &cfg, &table);
    let minus = extract_match(&render(Direction::MinusX), &cfg, &table);
    assert_eq!(plus.rows.len(), 10);
    for (x, y) in plus.rows.iter().zip(&minus.rows) {
        for (a, b) in x.values.iter().zip(&y.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((x.start - y.start).norm() < 1e-9);
    }
}

#[test]
fn table_model_and_attributions_agree() {
    let cfg = Config::default();
    let table = SegmentTable::winter();
    let rows: Vec<_> = corpus(200, 3).iter().flat_map(|b| extract_match(b, &cfg, &table).rows).collect();
    assert_eq!(rows.len(), 200);

    let mut buf = Vec::new();
    write_table(&mut buf, &rows).unwrap();
    let back = read_table(buf.as_slice()).unwrap();
    assert_eq!(back, rows);

    let opts = CvOptions::default();
    let reports = run_ablation(&rows, &opts).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(|r| r.per_fold.len() == 5));

    let model = TrainedModel::fit(&rows, FeatureSet::TwoDThreeD, &opts).unwrap();
    let reloaded = TrainedModel::from_json(&model.to_json()).unwrap();
    assert_eq!(reloaded.to_json(), model.to_json());
    let summary = explain_model(&model, &rows).unwrap();
    for (row, a) in rows.iter().zip(&summary.attributions) {
        let p = model.predict(row);
        let margin = (p / (1.0 - p)).ln();
        assert!((a.base + a.phi.iter().sum::<f64>() - margin).abs() < 1e-9);
    }
    assert!(summary.rank_of(Feature::DefenderStanceAngle.name()).unwrap() < 5);
}
