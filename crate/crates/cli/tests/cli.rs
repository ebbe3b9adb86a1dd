use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nsrm_core::data::{read_tensor, write_canonical, write_tensor, AnnotationRecord};
use nsrm_core::{ChannelStack, Keypoint, KeypointSet};

fn nsrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsrm"))
        .args(args)
        .output()
        .expect("spawn nsrm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn hand(i: usize) -> KeypointSet {
    let mut pts = vec![Keypoint::visible(200.0, 300.0)];
    for f in 0..5 {
        let ang = -2.5 + 0.45 * f as f64;
        for j in 1..=4 {
            let r = 30.0 * j as f64 + 2.0 * i as f64;
            pts.push(Keypoint::visible(200.0 + r * ang.cos(), 300.0 + r * ang.sin()));
        }
    }
    KeypointSet::new(pts)
}

fn write_fixture(path: &Path, n: usize, bad: Option<usize>) {
    let records: Vec<_> = (0..n)
        .map(|i| AnnotationRecord {
            image_id: format!("img{i:02}"),
            image_path: format!("img{i:02}.jpg"),
            image_width: 640,
            image_height: 480,
            keypoints: if Some(i) == bad {
                // a single visible keypoint cannot be cropped
                let mut k = KeypointSet::all_invisible(21);
                k.0[0] = Keypoint::visible(10.0, 10.0);
                k
            } else {
                hand(i)
            },
        })
        .collect();
    write_canonical(path, &records).unwrap();
}

#[test]
fn synth_writes_one_stack_pair_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.tsv");
    let out = dir.path().join("out");
    write_fixture(&ann, 10, None);
    let o = nsrm(&[
        "synth", "--annotations", ann.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--repr", "LPM", "--scheme", "G1AND6", "--json-summary", "-",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..10 {
        let s = read_tensor(&out.join(format!("img{i:02}.structure.nsrm"))).unwrap();
        let k = read_tensor(&out.join(format!("img{i:02}.kcm.nsrm"))).unwrap();
        assert_eq!(s.shape(), (7, 46, 46));
        assert_eq!(k.shape(), (21, 46, 46));
    }
    let text = stdout(&o);
    assert!(text.contains("img00\t") && text.contains("records/s"), "{text}");
    let json_start = text.find('{').unwrap();
    let summary: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(summary["succeeded"], 10);
    assert_eq!(fs::read_to_string(out.join("transforms.tsv")).unwrap().lines().count(), 11);
}

#[test]
fn invalid_sigma_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.tsv");
    write_fixture(&ann, 2, None);
    let o = nsrm(&[
        "synth", "--annotations", ann.to_str().unwrap(), "--out",
        dir.path().join("o").to_str().unwrap(), "--sigma-lpm", "-1",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma_lpm"));
}

#[test]
fn bad_record_fails_unless_keep_going() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.tsv");
    write_fixture(&ann, 4, Some(2));
    let out = dir.path().join("o");
    let args = ["synth", "--annotations", ann.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = nsrm(&args);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("img02"));

    let mut keep = args.to_vec();
    keep.push("--keep-going");
    let o = nsrm(&keep);
    // still nonzero: not every record was processed
    assert!(!o.status.success());
    assert!(stdout(&o).contains("synthesized 3/4"));
    assert!(out.join("img03.kcm.nsrm").exists());
    assert!(!out.join("img02.kcm.nsrm").exists());
}

#[test]
fn eval_identical_sets_and_tensor_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.tsv");
    write_fixture(&ann, 5, None);
    let a = ann.to_str().unwrap();
    let o = nsrm(&["eval", "--preds", a, "--gts", a]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("result")).unwrap();
    assert_eq!(row.split_whitespace().skip(1).filter(|v| *v == "100.00").count(), 6, "{text}");

    let out = dir.path().join("o");
    assert!(nsrm(&["synth", "--annotations", a, "--out", out.to_str().unwrap(), "--quiet"]).status.success());
    let curve = dir.path().join("c.tsv");
    let plot = dir.path().join("p.png");
    let o = nsrm(&[
        "eval", "--preds", out.to_str().unwrap(), "--gts", a, "--preset", "panoptic",
        "--curve-out", curve.to_str().unwrap(), "--plot-out", plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<String> = fs::read_to_string(&curve).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[0], "threshold\tpck");
    assert_eq!(lines.len(), 6);
    assert_eq!(image::open(&plot).unwrap().width(), 480);
}

#[test]
fn eval_reprints_table_row_with_improvement() {
    let o = nsrm(&[
        "eval", "--preset", "panoptic",
        "--values", "59.73,76.86,84.43,88.23,90.87",
        "--baseline-values", "55.25,73.23,81.45,85.97,88.80",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("76.94"), "{text}");
    assert!(text.contains("(+4.01%)"), "{text}");

    let o = nsrm(&["eval", "--values", "78.48,84.73,88.54,90.89,92.64"]);
    assert!(stdout(&o).contains("87.06"));
}

#[test]
fn eval_count_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (p, g) = (dir.path().join("p.tsv"), dir.path().join("g.tsv"));
    write_fixture(&p, 3, None);
    write_fixture(&g, 4, None);
    let o = nsrm(&["eval", "--preds", p.to_str().unwrap(), "--gts", g.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("mismatched counts"));
}

#[test]
fn render_modes_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("z.nsrm");
    write_tensor(&ChannelStack::<f32>::zeros(7, 46, 46), &t).unwrap();
    let png = dir.path().join("z.png");
    let o = nsrm(&["render", "--tensor", t.to_str().unwrap(), "--out", png.to_str().unwrap(), "--scale", "2"]);
    assert!(o.status.success());
    let img = image::open(&png).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (92, 92));
    assert!(img.pixels().all(|p| p.0 == [0, 0, 0]));

    let o = nsrm(&["render", "--tensor", t.to_str().unwrap(), "--out", png.to_str().unwrap(), "--channel", "7"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("channel 7"));
}

#[test]
fn schedule_prints_decayed_weights() {
    let o = nsrm(&["schedule", "--epochs", "41", "--repr", "LDM", "--scheme", "G1AND6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch\tlambda1\tlambda2");
    assert_eq!(lines[1], "0\t0.2\t0.04");
    assert_eq!(lines[20], "19\t0.2\t0.04");
    assert!(lines[21].starts_with("20\t0.02"));
    assert!(!nsrm(&["schedule", "--epochs", "0"]).status.success());
}

#[test]
fn split_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("a.tsv");
    write_fixture(&ann, 20, None);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = nsrm(&[
            "split", "--annotations", ann.to_str().unwrap(), "--seed", seed,
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        ["train", "val", "test"].map(|p| fs::read(out.join(format!("{p}.tsv"))).unwrap())
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    assert_ne!(run("a", "5"), run("c", "6"));
}
