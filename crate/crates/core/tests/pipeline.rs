mod common;

use std::path::Path;

use common::{synth_frame, tree_snapshot, write_clips};
use nds_core::image::io::{read_image, write_image};
use nds_core::pipeline::{
    build_dataset, collect_triplets, ingest_posed_scene, ingest_triplets, quality_report, DatasetConfig, Manifest,
    ReportConfig, SourceSpec, MANIFEST_FILE,
};
use nds_core::viewsel::{ring_rig, save_poses};
use nds_core::NdsError;

fn config(clips: &Path, out: &Path, seed: u64) -> DatasetConfig {
    DatasetConfig {
        schema: 1,
        seed,
        output_dir: out.to_path_buf(),
        sources: vec![SourceSpec::Triplets {
            name: "clips".into(),
            dir: clips.to_path_buf(),
            repeats: 1,
        }],
        recipe_ranges: Default::default(),
        global_offset_max: None,
        verify_fraction: 1.0,
        threads: Some(2),
        overwrite: false,
    }
}

#[test]
fn builds_manifest_and_verifies_every_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = write_clips(&tmp.path().join("clips"), 4, 3, 24, 32);
    let out = tmp.path().join("out");
    let report = build_dataset(&config(&clips, &out, 11)).unwrap();
    assert_eq!(report.samples, 4);
    assert_eq!(report.verified.len(), 4);

    let m = Manifest::read(out.join(MANIFEST_FILE)).unwrap();
    assert!(m.header.valid);
    assert_eq!(m.header.samples, 4);
    for s in &m.samples {
        for rel in [&s.degraded, &s.gt, &s.ref1, &s.ref2, &s.recipe_path] {
            assert!(out.join(rel).is_file(), "{rel} missing");
        }
        let f = s.source.frame_indices;
        assert!(f[0] != f[1] && f[1] != f[2] && f[0] != f[2]);
        assert!(s.ref_offsets.iter().flatten().all(|v| v.abs() <= 1));
        let gt = read_image(out.join(&s.gt)).unwrap();
        assert_eq!((gt.height(), gt.width()), (24, 32));
    }
}

#[test]
fn rerun_requires_overwrite_and_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = write_clips(&tmp.path().join("clips"), 3, 4, 20, 20);
    let out = tmp.path().join("out");
    let mut cfg = config(&clips, &out, 5);
    build_dataset(&cfg).unwrap();
    let first = tree_snapshot(&out);
    assert!(matches!(build_dataset(&cfg), Err(NdsError::Config(_))));
    cfg.overwrite = true;
    cfg.threads = Some(1);
    build_dataset(&cfg).unwrap();
    assert_eq!(first, tree_snapshot(&out));
}

#[test]
fn different_seeds_give_different_recipes() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = write_clips(&tmp.path().join("clips"), 2, 3, 16, 16);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    build_dataset(&config(&clips, &a, 1)).unwrap();
    build_dataset(&config(&clips, &b, 2)).unwrap();
    let ma = Manifest::read(a.join(MANIFEST_FILE)).unwrap();
    let mb = Manifest::read(b.join(MANIFEST_FILE)).unwrap();
    assert_ne!(ma.samples[0].recipe, mb.samples[0].recipe);
    assert_ne!(ma.header.config_hash, mb.header.config_hash);
}

#[test]
fn tampered_output_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = write_clips(&tmp.path().join("clips"), 2, 3, 16, 16);
    let out = tmp.path().join("out");
    build_dataset(&config(&clips, &out, 9)).unwrap();
    let m = Manifest::read(out.join(MANIFEST_FILE)).unwrap();
    let s = &m.samples[1];
    assert!(nds_core::pipeline::verify_sample(&out, s).unwrap());
    let mut img = read_image(out.join(&s.degraded)).unwrap();
    let v = img.get(3, 3, 0);
    img.set(3, 3, 0, if v > 0.5 { 0.0 } else { 1.0 });
    write_image(out.join(&s.degraded), &img).unwrap();
    assert!(!nds_core::pipeline::verify_sample(&out, s).unwrap());
}

#[test]
fn short_clips_are_skipped_and_empty_dirs_yield_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("clips");
    write_clips(&root, 2, 3, 12, 12);
    let short = root.join("zz_short");
    std::fs::create_dir_all(&short).unwrap();
    write_image(short.join("a.png"), &synth_frame(12, 12, 1, 0)).unwrap();
    let t = ingest_triplets(&root, "v", 2, 3, 0).unwrap();
    assert_eq!(t.len(), 4);
    assert!(t.iter().all(|t| t.source.clip != "zz_short"));

    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert!(ingest_triplets(&empty, "v", 1, 3, 0).unwrap().is_empty());
    assert!(ingest_triplets(&tmp.path().join("missing"), "v", 1, 3, 0).is_err());
}

fn write_ring_scene(dir: &Path, n: usize) {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).unwrap();
    for k in 0..n {
        write_image(images.join(format!("view{k:02}.png")), &synth_frame(24, 32, 77, k)).unwrap();
    }
    save_poses(dir.join("poses.json"), &ring_rig(n, 4.0, 30.0, 32, 24)).unwrap();
}

#[test]
fn posed_scene_pairs_neighbours_and_respects_holdout() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("ring");
    write_ring_scene(&scene, 12);
    let t = ingest_posed_scene(&scene, None, "ring", Some(8), 16, 1).unwrap();
    assert_eq!(t.len(), 10);
    for tr in &t {
        let f = tr.source.frame_indices;
        assert!(f.iter().all(|&i| i != 0 && i != 8), "{f:?} uses a held-out view");
    }
    let t1 = t.iter().find(|t| t.source.frame_indices[0] == 4).unwrap();
    let mut refs = [t1.source.frame_indices[1], t1.source.frame_indices[2]];
    refs.sort();
    assert_eq!(refs, [3, 5]);

    std::fs::remove_file(scene.join("images/view11.png")).unwrap();
    assert!(matches!(
        ingest_posed_scene(&scene, None, "ring", Some(8), 16, 1),
        Err(NdsError::Ingestion(_))
    ));
}

#[test]
fn mixed_sources_in_one_build() {
    let tmp = tempfile::tempdir().unwrap();
    let clips = write_clips(&tmp.path().join("clips"), 2, 3, 24, 32);
    let scene = tmp.path().join("ring");
    write_ring_scene(&scene, 6);
    let mut cfg = config(&clips, &tmp.path().join("out"), 4);
    cfg.sources.push(SourceSpec::Posed {
        name: "ring".into(),
        dir: scene,
        poses: None,
        holdout_every: None,
        grid: 8,
        repeats: 1,
    });
    assert_eq!(collect_triplets(&cfg).unwrap().len(), 8);
    let r = build_dataset(&cfg).unwrap();
    assert_eq!(r.samples, 8);
}

#[test]
fn config_file_paths_resolve_relative_to_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    write_clips(&tmp.path().join("clips"), 1, 3, 12, 12);
    let path = tmp.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"seed": 3, "output_dir": "out", "sources": [{"kind": "triplets", "name": "c", "dir": "clips"}]}"#,
    )
    .unwrap();
    let cfg = DatasetConfig::load(&path).unwrap();
    assert_eq!(cfg.output_dir, tmp.path().join("out"));
    build_dataset(&cfg).unwrap();
    assert!(tmp.path().join("out").join(MANIFEST_FILE).is_file());
}

#[test]
fn quality_report_over_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    write_clips(&a, 2, 2, 20, 20);
    let r = quality_report(&a, &a, &ReportConfig::default()).unwrap();
    assert_eq!(r.simulated.images, 4);
    assert_eq!(r.distances.aggregate, 0.0);
    assert!(quality_report(&a, &tmp.path().join("nope"), &ReportConfig::default()).is_err());
}
