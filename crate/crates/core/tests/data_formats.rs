use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use lsmc_core::data::{
    load_idx, load_libsvm, read_dataset, read_model_container, write_dataset, write_model_container, FeatureMatrix,
    Split,
};
use lsmc_core::Error;

fn idx_images(images: &[[u8; 4]]) -> Vec<u8> {
    let mut b = vec![0, 0, 8, 3];
    b.extend((images.len() as u32).to_be_bytes());
    b.extend(2u32.to_be_bytes());
    b.extend(2u32.to_be_bytes());
    for im in images {
        b.extend(im);
    }
    b
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut b = vec![0, 0, 8, 1];
    b.extend((labels.len() as u32).to_be_bytes());
    b.extend(labels);
    b
}

fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut e = GzEncoder::new(Vec::new(), Compression::default());
    e.write_all(bytes).unwrap();
    e.finish().unwrap()
}

#[test]
fn idx_fixture_plain_and_gzipped() {
    let dir = tempfile::tempdir().unwrap();
    let images = idx_images(&[[0, 255, 51, 102], [255, 255, 0, 0], [1, 2, 3, 4]]);
    let labels = idx_labels(&[7, 0, 9]);
    for (suffix, wrap) in [("", false), (".gz", true)] {
        let ip = dir.path().join(format!("img{suffix}"));
        let lp = dir.path().join(format!("lab{suffix}"));
        std::fs::write(&ip, if wrap { gzip(&images) } else { images.clone() }).unwrap();
        std::fs::write(&lp, if wrap { gzip(&labels) } else { labels.clone() }).unwrap();
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!((ds.n(), ds.d()), (3, 4));
        assert_eq!(ds.labels(), &[7, 0, 9]);
        let x = ds.features().to_dense();
        assert_eq!(x[[0, 1]], 1.0);
        assert!((x[[0, 2]] - 0.2).abs() < 1e-15);
        assert!((x[[2, 3]] - 4.0 / 255.0).abs() < 1e-15);
    }
}

#[test]
fn idx_count_mismatch_and_bad_magic() {
    let dir = tempfile::tempdir().unwrap();
    let ip = dir.path().join("img");
    let lp = dir.path().join("lab");
    std::fs::write(&ip, idx_images(&[[0; 4], [0; 4]])).unwrap();
    std::fs::write(&lp, idx_labels(&[1])).unwrap();
    assert!(matches!(load_idx(&ip, &lp), Err(Error::CountMismatch { .. })));
    std::fs::write(&lp, idx_images(&[[0; 4]])).unwrap();
    assert!(matches!(load_idx(&ip, &lp), Err(Error::BadMagic { .. })));
    let mut cut = idx_images(&[[0; 4]]);
    cut.pop();
    std::fs::write(&ip, cut).unwrap();
    std::fs::write(&lp, idx_labels(&[1])).unwrap();
    assert!(matches!(load_idx(&ip, &lp), Err(Error::Truncated { .. })));
}

#[test]
fn libsvm_to_container_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("tiny.svm");
    std::fs::write(&src, "# three docs\n3 1:2 4:1\n1 2:5\n3 1:1 3:3\n").unwrap();
    let ds = load_libsvm(&src, None).unwrap().with_split(Split::Train);
    assert_eq!((ds.n(), ds.d(), ds.k()), (3, 4, 2));
    assert_eq!(ds.labels(), &[1, 0, 1]);
    assert!(matches!(ds.features(), FeatureMatrix::Sparse(_)));

    let out = dir.path().join("tiny.glmd");
    write_dataset(&out, &ds).unwrap();
    let back = read_dataset(&out).unwrap();
    assert_eq!(back, ds);
    let first = std::fs::read(&out).unwrap();
    write_dataset(&out, &back).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn model_container_round_trip_and_kind_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    write_model_container(&path, 5, 3, &vec![1.5f64, -2.0]).unwrap();
    let (d, k, payload): (usize, usize, Vec<f64>) = read_model_container(&path).unwrap();
    assert_eq!((d, k, payload), (5, 3, vec![1.5, -2.0]));

    let ds_path = dir.path().join("d.glmd");
    let svm = dir.path().join("x.svm");
    std::fs::write(&svm, "0 1:1\n1 1:2\n").unwrap();
    write_dataset(&ds_path, &load_libsvm(&svm, None).unwrap()).unwrap();
    assert!(read_model_container::<Vec<f64>>(&ds_path).is_err());
}

#[test]
fn missing_files_name_the_path() {
    let err = load_libsvm("/nonexistent/news.svm", None).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/news.svm"), "{err}");
}
