use std::fs;
use std::path::Path;

use carnot_core::catalog;
use carnot_core::group::CarnotGroup;
use carnot_core::norm::{calibrate_box_norm, BoxNorm, CalibrationOptions};
use carnot_core::tiling::catalog_tile;
use carnot_kit::formats::{write_csv, CloudCsv, FragmentCsv, GroupFile, NormFile, TileFile};

fn group(name: &str) -> CarnotGroup {
    CarnotGroup::new(catalog::by_name(name).unwrap()).unwrap()
}

#[test]
fn group_file_round_trip() {
    for name in ["euclidean2", "heisenberg1", "heisenberg2", "engel", "free-2-3"] {
        let spec = catalog::by_name(name).unwrap();
        let file = GroupFile::from_spec(&spec);
        let text = serde_json::to_string(&file).unwrap();
        let back = GroupFile::parse(&text).unwrap();
        assert_eq!(back, file);
        let g = back.to_group().unwrap();
        assert_eq!(g.dim(), spec.dim());
        assert_eq!(g.homogeneous_dimension(), group(name).homogeneous_dimension());
    }
}

#[test]
fn group_file_rejects_broken_algebra() {
    // [X1, X2] lands in the first stratum.
    let bad = GroupFile { name: "bad".into(), strata: vec![2, 1], brackets: vec![(1, 2, 1, 1.0)] };
    assert!(bad.to_group().is_err());
    assert!(GroupFile::parse("{\"name\": 3}").is_err());
}

#[test]
fn tile_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["euclidean1", "euclidean2", "heisenberg1"] {
        let tile = catalog_tile(name).unwrap();
        let file = TileFile::from_spec(&tile.spec, tile.provenance);
        let path = dir.path().join(format!("{name}.json"));
        fs::write(&path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
        let back = TileFile::load(&path).unwrap();
        assert_eq!(back, file);
        let spec = back.to_spec(&group(name)).unwrap();
        assert_eq!(spec.centers(), tile.spec.centers());
    }
}

#[test]
fn norm_file_round_trip() {
    let g = group("heisenberg1");
    let opts = CalibrationOptions { samples: 2000, search_samples: 2000, ..CalibrationOptions::default() };
    let norm = calibrate_box_norm(&g, &opts).unwrap();
    let file = NormFile::from_norm(&norm);
    assert!(file.certificate.is_some());
    let text = serde_json::to_string(&file).unwrap();
    let back: NormFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, file);
    let restored = back.to_norm(&g).unwrap();
    assert_eq!(restored.epsilons(), norm.epsilons());
    let x = [0.3, -0.7, 0.125];
    assert_eq!(restored.norm(&x), norm.norm(&x));

    let plain = NormFile::from_norm(&BoxNorm::new(&g, &[0.5]).unwrap());
    assert!(plain.certificate.is_none());
    assert!(NormFile { epsilons: vec![-1.0], ..plain }.to_norm(&g).is_err());
}

fn csv_text(header: Vec<String>, rows: &[Vec<String>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, Some("seed=3"), &header, rows).unwrap();
    buf
}

#[test]
fn cloud_csv_round_trip() {
    let cloud = CloudCsv { dim: 3, points: vec![0.1, -0.2, 1.0 / 3.0, 5e-17, 2.0, -0.0], weights: vec![1.0, 0.25] };
    let buf = csv_text(CloudCsv::header(3), &cloud.rows());
    assert!(buf.starts_with(b"# seed=3\n"));
    let back = CloudCsv::read_from(buf.as_slice(), Path::new("cloud.csv")).unwrap();
    assert_eq!(back, cloud);

    let ragged = b"x1,x2,w\n1,2,3\n1,2\n";
    assert!(CloudCsv::read_from(&ragged[..], Path::new("bad.csv")).is_err());
    let no_weight = b"x1,x2\n1,2\n";
    assert!(CloudCsv::read_from(&no_weight[..], Path::new("bad.csv")).is_err());
}

#[test]
fn fragment_csv_round_trip() {
    let frag = FragmentCsv {
        times: vec![0.0, 0.5, 1.0],
        points: vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.1, -0.01], vec![1.0, 0.2, 1e-12]],
    };
    let buf = csv_text(FragmentCsv::header(3), &frag.rows());
    let back = FragmentCsv::read_from(buf.as_slice(), Path::new("fragment.csv")).unwrap();
    assert_eq!(back, frag);
    let wrong = b"x1,x2\n0,0\n";
    assert!(FragmentCsv::read_from(&wrong[..], Path::new("bad.csv")).is_err());
}
