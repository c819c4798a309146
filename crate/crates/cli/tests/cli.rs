use std::path::Path;
use std::process::{Command, Output};

fn sdpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdpf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sdpf(args);
    assert!(
        out.status.success(),
        "sdpf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err(args: &[&str]) -> String {
    let out = sdpf(args);
    assert!(!out.status.success(), "sdpf {args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let csv = tmp.path().join("d.csv");
    let model = tmp.path().join("m.txt");
    ok(&[
        "synth",
        s(&data),
        "--classes",
        "3",
        "--per-class",
        "6",
        "--size",
        "64",
    ]);

    let out = ok(&["extract", s(&data), "-o", s(&csv)]);
    assert!(out.contains("18 descriptors"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("SDPF1,4,8,8,1\n"));
    assert_eq!(text.lines().count(), 19);
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 258);

    let out = ok(&[
        "train",
        s(&csv),
        "-o",
        s(&model),
        "--seed",
        "1",
        "--fraction",
        "0.5",
    ]);
    assert!(out.contains("trained on 9 descriptors, 3 classes"), "{out}");
    assert!(out.contains("SVM AP:"));
    assert!(std::fs::read_to_string(&model)
        .unwrap()
        .starts_with("SDPFSVM1\n"));

    let img = data.join("disk").join("000.png");
    let label = ok(&["classify", s(&model), s(&img)]);
    assert!(
        ["disk", "square", "triangle"].contains(&label.trim()),
        "{label}"
    );

    let out = ok(&["eval", s(&data), "--augment", "0,90,180,270", "--seed", "2"]);
    assert!(out.contains("train: 24  test: 12"), "{out}");
    assert!(out.contains("SVM AP:") && out.contains("kNN AP:"));
    // same seed, same numbers
    assert_eq!(
        out,
        ok(&["eval", s(&data), "--augment", "0,90,180,270", "--seed", "2"])
    );
}

#[test]
fn shared_flags_change_the_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let csv = tmp.path().join("d.csv");
    ok(&[
        "synth",
        s(&data),
        "--classes",
        "2",
        "--per-class",
        "2",
        "--size",
        "48",
    ]);
    ok(&[
        "--kd",
        "2",
        "--ka",
        "4",
        "--no-normalize",
        "extract",
        s(&data),
        "-o",
        s(&csv),
        "--size",
        "0",
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("SDPF1,2,4,8,0\n"));
    assert_eq!(
        text.lines().nth(1).unwrap().split(',').count(),
        2 + 2 * 4 * 8
    );
    // raw counts: every value is a whole number
    let row = text.lines().nth(1).unwrap();
    assert!(row
        .split(',')
        .skip(2)
        .all(|v| v.parse::<f64>().unwrap().fract() == 0.0));
}

#[test]
fn image_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&[
        "synth",
        s(&data),
        "--classes",
        "1",
        "--per-class",
        "1",
        "--size",
        "64",
    ]);
    let img = data.join("disk").join("000.png");

    let dithered = tmp.path().join("d.ppm");
    ok(&["dither", s(&img), s(&dithered)]);
    let bytes = std::fs::read(&dithered).unwrap();
    assert!(bytes.starts_with(b"P6\n64 64\n255\n"));
    // only cube corners survive dithering
    assert!(bytes[b"P6\n64 64\n255\n".len()..]
        .iter()
        .all(|&b| b == 0 || b == 255));

    let vis = tmp.path().join("v.png");
    let out = ok(&["visualize", s(&img), s(&vis)]);
    assert!(out.contains("salient points"), "{out}");
    assert!(std::fs::read(&vis).unwrap().starts_with(b"\x89PNG"));

    let csv = ok(&["bench", s(&img), "--reps", "100"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "stage,mean_ms");
    assert_eq!(rows.len(), 14);
    assert!(rows[1].starts_with("ED-Dithering,"));
    assert!(rows[13].starts_with("Total,"));
}

#[test]
fn errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.ppm");
    assert!(err(&["dither", s(&missing), "out.ppm"]).contains("not found"));

    let junk = tmp.path().join("junk.ppm");
    std::fs::write(&junk, b"P3\n1 1\n255\n0 0 0\n").unwrap();
    assert!(err(&["bench", s(&junk)]).contains("unsupported"));

    let bad = tmp.path().join("bad.ppm");
    std::fs::write(&bad, b"P6\n4 4\n255\nabc").unwrap();
    assert!(err(&["bench", s(&bad)]).contains("malformed"));

    let data = tmp.path().join("data");
    ok(&[
        "synth",
        s(&data),
        "--classes",
        "2",
        "--per-class",
        "3",
        "--size",
        "32",
    ]);
    assert!(err(&["eval", s(&data), "--augment", "45"]).contains("right-angle"));
    assert!(err(&["--kc", "6", "eval", s(&data)]).contains("color bins"));
    assert!(err(&["--nms-window", "4", "eval", s(&data)]).contains("window"));
    assert!(err(&["eval", s(&tmp.path().join("nothing"))]).contains("not found"));
}
