//! End-to-end runs of the binary over a miniature pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn sesdi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sesdi"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn full_pipeline_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("models")).unwrap();
    std::fs::create_dir_all(dir.join("surveys")).unwrap();

    ok(&sesdi(
        &[
            "gen-velocity",
            "--out",
            "models",
            "--count",
            "2",
            "--nz",
            "16",
            "--nx",
            "20",
            "--seed",
            "3",
        ],
        dir,
    ));

    for i in 0..2 {
        ok(&sesdi(
            &[
                "simulate",
                "--model",
                &format!("models/model_00{i}.vel"),
                "--out",
                &format!("surveys/survey_00{i}.sdi"),
                "--shots",
                "2",
                "--receivers",
                "8",
                "--total-time",
                "0.25",
                "--f0",
                "25",
            ],
            dir,
        ));
    }

    ok(&sesdi(
        &[
            "make-dataset",
            "--models",
            "models",
            "--surveys",
            "surveys",
            "--out",
            "dataset",
            "--trace-len",
            "50",
        ],
        dir,
    ));
    assert!(dir.join("dataset/dataset.manifest").exists());

    ok(&sesdi(
        &[
            "train",
            "--manifest",
            "dataset/dataset.manifest",
            "--test-manifest",
            "dataset/dataset.manifest",
            "--out",
            "run",
            "--epochs",
            "4",
            "--batch-size",
            "2",
            "--lr",
            "1e-3",
            "--eval-every",
            "2",
            "--seed",
            "9",
        ],
        dir,
    ));
    assert!(dir.join("run/last.ckpt").exists());
    assert!(dir.join("run/best.ckpt").exists());
    let csv = std::fs::read_to_string(dir.join("run/metrics.csv")).unwrap();
    assert!(csv.starts_with("epoch,split,l1,psnr,ssim"));
    assert!(csv.contains("test"));

    std::fs::create_dir_all(dir.join("preds")).unwrap();
    ok(&sesdi(
        &[
            "predict",
            "--ckpt",
            "run/last.ckpt",
            "--survey",
            "dataset/prepared_000.sdi",
            "--out",
            "preds/block_000.vel",
        ],
        dir,
    ));

    // prediction has the label's shape
    let out = sesdi(
        &[
            "evaluate",
            "--pred",
            "preds",
            "--label",
            "preds",
            "--out",
            "self.csv",
        ],
        dir,
    );
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("l1 0.0000"), "self-evaluation: {text}");
    assert!(text.contains("ssim 1.000000"), "self-evaluation: {text}");
}

#[test]
fn stitch_writes_model_and_mask() {
    use sesdi_core::io::{sdi, spk};
    use sesdi_core::model::{LocScale, SesdiParams, SesdiSpec};
    use sesdi_core::nn::MlpSpec;
    use sesdi_core::seed::rng_for;
    use sesdi_core::survey::{GeometryAwareTrace, Survey};

    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("bank")).unwrap();

    // two depth bins predicting 2x4x4 blocks
    let mut spec = SesdiSpec::tiny();
    spec.loc_dim = 6;
    spec.f_aq = MlpSpec::all_relu(&[6, 6, 6]);
    spec.rho = MlpSpec::relu_head(&[12, 14, 2 * 4 * 4]);
    spec.output_dims = vec![2, 4, 4];
    let mut rng = rng_for(77, "cli.stitch");
    for bin in 0..2 {
        let params = SesdiParams::init(&spec, LocScale::identity(), &mut rng).unwrap();
        spk::write_sesdi(&dir.join(format!("bank/bin_{bin}.ckpt")), &params).unwrap();
    }

    let mut traces = Vec::new();
    for i in 0..8u32 {
        for j in 0..8u32 {
            traces.push(GeometryAwareTrace {
                data: vec![0.3; 8],
                src: [(i as f64 + 0.5) * 10.0, (j as f64 + 0.5) * 10.0, 0.0],
                rcv: [(i as f64 + 0.5) * 10.0, (j as f64 + 0.5) * 10.0, 0.0],
                shot_id: i,
                rcv_index: j,
            });
        }
    }
    sdi::write_survey(&dir.join("s.sdi"), &Survey::new(traces, 1e-3).unwrap()).unwrap();

    ok(&sesdi(
        &[
            "stitch",
            "--bank",
            "bank",
            "--survey",
            "s.sdi",
            "--out",
            "full.vel",
            "--mask",
            "mask.csv",
            "--nz",
            "4",
            "--ny",
            "8",
            "--nx",
            "8",
            "--spacing",
            "10",
            "--wp",
            "40",
            "--d",
            "20",
            "--w0",
            "120",
        ],
        dir,
    ));
    let full = sesdi_core::io::vel::read_velocity(&dir.join("full.vel")).unwrap();
    assert_eq!(full.grid.dims, vec![4, 8, 8]);
    let mask = std::fs::read_to_string(dir.join("mask.csv")).unwrap();
    assert!(mask.starts_with("tile_z,tile_y,tile_x,empty"));
    assert_eq!(mask.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn gradcheck_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sesdi(&["gradcheck", "--seed", "7"], tmp.path());
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max rel err"));
    assert!(text.contains("PASS"));
}

#[test]
fn cfl_violation_exits_3_with_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("models")).unwrap();
    ok(&sesdi(
        &[
            "gen-velocity",
            "--out",
            "models",
            "--count",
            "1",
            "--nz",
            "16",
            "--nx",
            "20",
            "--seed",
            "1",
        ],
        dir,
    ));
    let out = sesdi(
        &[
            "simulate",
            "--model",
            "models/model_000.vel",
            "--out",
            "x.sdi",
            "--dt",
            "2e-3",
            "--record-dt",
            "2e-3",
            "--total-time",
            "0.1",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("CFL") && err.contains("limit"), "stderr: {err}");
}

#[test]
fn corrupted_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.vel"), b"VEL1 but not really a file").unwrap();
    let out = sesdi(
        &["simulate", "--model", "bad.vel", "--out", "x.sdi"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cfg"), "bogus_key=1\n").unwrap();
    let out = sesdi(
        &["gradcheck", "--config", "cfg"],
        dir,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("m1")).unwrap();
    std::fs::create_dir_all(dir.join("m2")).unwrap();
    std::fs::write(dir.join("cfg"), "count=2\nnz=16\nnx=20\nseed=5\n").unwrap();
    ok(&sesdi(
        &["gen-velocity", "--config", "cfg", "--out", "m1"],
        dir,
    ));
    assert!(dir.join("m1/model_001.vel").exists());
    // flag overrides config: only one model
    ok(&sesdi(
        &["gen-velocity", "--config", "cfg", "--out", "m2", "--count", "1"],
        dir,
    ));
    assert!(dir.join("m2/model_000.vel").exists());
    assert!(!dir.join("m2/model_001.vel").exists());
}

#[test]
fn generation_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("a")).unwrap();
    std::fs::create_dir_all(dir.join("b")).unwrap();
    for sub in ["a", "b"] {
        ok(&sesdi(
            &[
                "gen-velocity",
                "--out",
                sub,
                "--count",
                "1",
                "--nz",
                "16",
                "--nx",
                "20",
                "--seed",
                "21",
            ],
            dir,
        ));
    }
    let a = std::fs::read(dir.join("a/model_000.vel")).unwrap();
    let b = std::fs::read(dir.join("b/model_000.vel")).unwrap();
    assert_eq!(a, b);
}
