use pqc_core::datagen::{self, Dataset, DatasetId, Split, N_POINTS, POINTS_PER_CLASS};

fn class_count(points: &[pqc_core::LabeledPoint], label: i8) -> usize {
    points.iter().filter(|p| p.label == label).count()
}

#[test]
fn every_dataset_is_balanced_split_and_normalized() {
    for seed in 0..10u64 {
        for id in DatasetId::ALL {
            let ds = datagen::generate(id, seed);
            assert_eq!(ds.points.len(), N_POINTS);
            assert_eq!(class_count(&ds.points, 1), POINTS_PER_CLASS, "{id} seed {seed}");
            assert!(ds.points.iter().all(|p| p.label == 1 || p.label == -1));
            assert!(ds.points.iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));

            let views = ds.views();
            assert_eq!((views.train.len(), views.test.len(), views.val.len()), (900, 300, 300));
            let mut all: Vec<usize> = views.train.iter().chain(&views.test).chain(&views.val).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..N_POINTS).collect::<Vec<_>>());
            for which in [Split::Test, Split::Val] {
                let pos = class_count(&ds.points_in(which), 1);
                assert!(pos.abs_diff(150) <= 2, "{id} seed {seed} {which:?}: {pos}");
            }
        }
    }
}

#[test]
fn generation_is_bit_reproducible() {
    for id in DatasetId::ALL {
        assert_eq!(datagen::generate(id, 42), datagen::generate(id, 42));
        assert_ne!(datagen::generate(id, 42).points, datagen::generate(id, 43).points);
    }
}

#[test]
fn concentric_disk_geometry() {
    // Without jitter the inner class sits inside the outer one, before
    // normalization stretches the bounding box.
    let ds = datagen::generate(DatasetId::D3a, 42);
    let radius = |p: &pqc_core::LabeledPoint| ((p.x - 0.5).powi(2) + (p.y - 0.5).powi(2)).sqrt();
    let inner_max = ds.points.iter().filter(|p| p.label == 1).map(radius).fold(0.0, f64::max);
    let outer_min = ds.points.iter().filter(|p| p.label == -1).map(radius).fold(f64::INFINITY, f64::min);
    assert!(inner_max < outer_min, "{inner_max} vs {outer_min}");
}

#[test]
fn csv_round_trip_is_exact() {
    let ds = datagen::generate(DatasetId::D2c, 5);
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).unwrap();
    let back = Dataset::read_csv(DatasetId::D2c, buf.as_slice()).unwrap();
    assert_eq!(back, ds);
    assert!(Dataset::read_csv(DatasetId::D2c, "x,y,label,split\n0.1,0.2,0,train\n".as_bytes()).is_err());
}

#[test]
fn dataset_ids_parse() {
    for id in DatasetId::ALL {
        assert_eq!(id.as_str().parse::<DatasetId>().unwrap(), id);
    }
    assert!("4a".parse::<DatasetId>().is_err());
}
