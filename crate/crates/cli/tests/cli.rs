use std::path::Path;
use std::process::{Command, Output};

use nds_core::image::io::{read_image, write_image};
use nds_core::viewsel::{ring_rig, save_poses};
use nds_core::ImageBuffer;
use serde_json::Value;

fn nds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nds"))
        .args(args)
        .env_remove("NDS_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn frame(h: usize, w: usize, t: usize) -> ImageBuffer {
    ImageBuffer::from_fn(h, w, 3, |i, j, c| {
        0.5 + 0.3 * ((i as f64 * 0.3 + t as f64).sin() * (j as f64 * 0.2 + c as f64).cos())
    })
    .unwrap()
}

fn write_frames(dir: &Path, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for t in 0..n {
        write_image(dir.join(format!("f{t}.png")), &frame(24, 32, t)).unwrap();
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn degrade_is_reproducible_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    write_frames(tmp.path(), 3);
    let (f0, f1, f2) = (
        tmp.path().join("f0.png"),
        tmp.path().join("f1.png"),
        tmp.path().join("f2.png"),
    );
    let recipe = tmp.path().join("recipe.json");
    let run = |out: &str, extra: &[&str]| {
        let out = tmp.path().join(out);
        let mut args = vec!["degrade", "--input", p(&f0), "--refs", p(&f1), p(&f2), "--out", p(&out)];
        args.extend_from_slice(extra);
        let o = nds(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ["degraded.png", "ref1.png", "ref2.png"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = run("a", &["--seed", "17", "--recipe-out", p(&recipe)]);
    let b = run("b", &["--seed", "17"]);
    assert_eq!(a, b);
    let c = run("c", &["--recipe", p(&recipe)]);
    assert_eq!(a, c);
    assert_ne!(a, run("d", &["--seed", "18"]));
    let d = read_image(tmp.path().join("a/degraded.png")).unwrap();
    assert_ne!(d, read_image(&f0).unwrap());
}

#[test]
fn select_views_on_a_ring() {
    let tmp = tempfile::tempdir().unwrap();
    let poses = tmp.path().join("ring.json");
    save_poses(&poses, &ring_rig(8, 4.0, 40.0, 64, 48)).unwrap();
    let v = json(&nds(&["select-views", "--poses", p(&poses), "--target", "0"]));
    let mut refs: Vec<u64> = v["references"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    refs.sort();
    assert_eq!(refs, vec![1, 7]);
    let v = json(&nds(&[
        "select-views",
        "--poses",
        p(&poses),
        "--target",
        "0",
        "--k",
        "3",
        "--grid",
        "8",
        "--sphere",
        "0,0,0,1.5",
    ]));
    assert_eq!(v["references"].as_array().unwrap().len(), 3);
    let bad = nds(&["select-views", "--poses", p(&poses), "--target", "9"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn wks_eval_reports_loss_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    write_frames(tmp.path(), 3);
    let f = |n: usize| tmp.path().join(format!("f{n}.png"));
    let v = json(&nds(&[
        "wks-eval",
        "--pred",
        p(&f(0)),
        "--gt",
        p(&f(1)),
        "--real",
        p(&f(2)),
        "--patch",
        "7",
        "--stride",
        "4",
        "--k",
        "5",
    ]));
    assert!(v["loss"].as_f64().unwrap() > 0.0);
    // 24x32 frames, 7x7 patches, stride 4: 5 x 7 query positions.
    assert_eq!(v["per_patch_stats"]["count"], 35);
    let same = json(&nds(&[
        "wks-eval",
        "--pred",
        p(&f(2)),
        "--gt",
        p(&f(1)),
        "--real",
        p(&f(2)),
        "--k",
        "1",
        "--beta",
        "0",
    ]));
    assert_eq!(same["loss"].as_f64().unwrap(), 0.0);
}

fn dataset_config(root: &Path) -> std::path::PathBuf {
    for c in 0..3 {
        write_frames(&root.join("clips").join(format!("c{c}")), 3);
    }
    let cfg = root.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 1, "output_dir": "out", "verify_fraction": 0.5,
            "sources": [{"kind": "triplets", "name": "clips", "dir": "clips"}]}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn build_and_verify_dataset_with_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = dataset_config(tmp.path());
    let out = Command::new(env!("CARGO_BIN_EXE_nds"))
        .args(["build-dataset", "--config", p(&cfg)])
        .env("NDS_THREADS", "1")
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["samples"], 3);
    assert_eq!(v["threads"], 1);

    let again = nds(&["build-dataset", "--config", p(&cfg)]);
    assert_eq!(
        again.status.code(),
        Some(1),
        "existing dataset must not be clobbered silently"
    );
    assert!(nds(&["build-dataset", "--config", p(&cfg), "--overwrite"])
        .status
        .success());

    let dir = tmp.path().join("out");
    assert_eq!(json(&nds(&["verify-dataset", "--dir", p(&dir)]))["verified"], 3);
    let target = dir.join("samples/000001/degraded.png");
    let mut img = read_image(&target).unwrap();
    img.data_mut().iter_mut().for_each(|v| *v = 1.0 - *v);
    write_image(&target, &img).unwrap();
    let failed = nds(&["verify-dataset", "--dir", p(&dir)]);
    assert_eq!(failed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&failed.stderr).contains("000001"));
}

#[test]
fn bad_thread_cap_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = dataset_config(tmp.path());
    let out = Command::new(env!("CARGO_BIN_EXE_nds"))
        .args(["build-dataset", "--config", p(&cfg)])
        .env("NDS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quality_report_and_llff_import() {
    let tmp = tempfile::tempdir().unwrap();
    write_frames(&tmp.path().join("sim"), 3);
    write_frames(&tmp.path().join("real"), 4);
    let report = tmp.path().join("report.json");
    let v = json(&nds(&[
        "quality-report",
        "--sim",
        p(&tmp.path().join("sim")),
        "--real",
        p(&tmp.path().join("real")),
        "--out",
        p(&report),
    ]));
    assert_eq!(v["real_images"], 4);
    assert!(v["distances"]["aggregate"].as_f64().unwrap() >= 0.0);
    assert!(report.is_file());

    // One LLFF row: identity-like rotation columns (down, right, back), t, hwf, bounds.
    let txt = tmp.path().join("poses_bounds.txt");
    std::fs::write(
        &txt,
        "0 1 0 0 48\n1 0 0 0 64\n0 0 -1 0 50\n1 10\n".replace('\n', " ") + "\n",
    )
    .unwrap();
    let json_out = tmp.path().join("poses.json");
    let o = nds(&["import-llff", "--input", p(&txt), "--out", p(&json_out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let poses: Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(poses[0]["w"], 64);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(nds(&["degrade"]).status.code(), Some(1));
    assert_eq!(nds(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        nds(&["degrade", "--input", "/nonexistent.png", "--out", "/tmp/x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(nds(&["--help"]).status.code(), Some(0));
}
