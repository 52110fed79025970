mod common;

use std::path::Path;
use std::process::Command;

use clap::Parser;
use cslf::checkpoint::Checkpoint;
use cslf::cli::{main_with, CameraArgs, Cli, Command as Cmd, EnvRenderArgs, ModeArg, ObjectArgs, RelightArgs, RenderArgs};
use cslf::config::FlatConfig;
use cslf_core::metrics::MetricRow;
use cslf_core::nets::Conditioning;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cslf"));
    c.env("RUST_LOG", "warn");
    c
}

fn camera() -> CameraArgs {
    CameraArgs {
        camera: vec![1.0, -0.6, 1.0],
        look_at: vec![0.0, 0.0, 0.0],
        fov: 60.0,
        width: 20,
        height: 16,
    }
}

fn object(ckpt: &Path, id: &str) -> ObjectArgs {
    ObjectArgs {
        checkpoint: ckpt.to_path_buf(),
        object: id.to_string(),
        latent_seed: None,
    }
}

#[test]
fn train_eval_and_render_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (data, ckpt) = common::fixture(dir.path(), Conditioning::ShapeImage, false);
    let c = Checkpoint::load(&ckpt).unwrap();
    assert_eq!(c.header.steps, 3);
    assert_eq!(c.header.arch.hidden_dim, 16);
    assert_eq!(c.header.dataset.unwrap().sampling.width, 24);
    let run: serde_json::Value =
        serde_json::from_slice(&std::fs::read(format!("{}.run.json", ckpt.display())).unwrap()).unwrap();
    assert_eq!(run["command"], "train");
    assert_eq!(run["args"]["resolved_config"]["batch_size"], 2);
    // the recorded configuration reproduces the checkpoint
    let resolved: FlatConfig = serde_json::from_value(run["args"]["resolved_config"].clone()).unwrap();
    let cfg2 = dir.path().join("resolved.json");
    cslf::store::write_json(&cfg2, &resolved).unwrap();
    let again = dir.path().join("again.cslf");
    cslf::cli::train(&common::train_args(&data, &again, Some(cfg2))).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(&ckpt).unwrap());

    let out = dir.path().join("metrics.json");
    let maps = dir.path().join("maps");
    let rows = cslf::cli::eval(&cslf::cli::EvalArgs {
        checkpoint: ckpt.clone(),
        data: data.clone(),
        out: out.clone(),
        views: Some(vec![1]),
        input_view: 0,
        error_maps: Some(maps.clone()),
    })
    .unwrap();
    assert_eq!(rows.len(), 2 * 2);
    let back: Vec<MetricRow> = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(back, rows);
    assert!(rows.iter().all(|r| r.view == 1 && r.l1 >= 0.0 && r.ssim <= 1.0));
    assert_eq!(std::fs::read_dir(&maps).unwrap().count(), 4);

    let id = cslf::store::read_manifest(&data).unwrap().objects[0].clone();
    let frames = cslf::cli::render_orbit(&RenderArgs {
        object: object(&ckpt, &id),
        orbit: 3,
        radius: 1.5,
        elevation: 30.0,
        fov: 60.0,
        width: 12,
        height: 12,
        lights: vec![String::from("4,-4,8")],
        out: dir.path().join("orbit"),
    })
    .unwrap();
    assert_eq!(frames.len(), 3);
    assert!(frames.iter().all(|f| f.is_file()));
    assert!(dir.path().join("orbit/run.json").is_file());
}

#[test]
fn relight_is_reproducible_and_env_render_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (data, ckpt) = common::fixture(dir.path(), Conditioning::ShapeImage, true);
    let id = cslf::store::read_manifest(&data).unwrap().objects[1].clone();
    let args = |out: &str| RelightArgs {
        object: ObjectArgs {
            latent_seed: Some(4),
            ..object(&ckpt, &id)
        },
        camera: camera(),
        lights: vec![String::from("3,1,9,1,0.8,0.6")],
        mode: None,
        out: dir.path().join(out),
    };
    cslf::cli::relight(&args("a.png")).unwrap();
    cslf::cli::relight(&args("b.png")).unwrap();
    let a = std::fs::read(dir.path().join("a.png")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.png")).unwrap());
    assert!(dir.path().join("a.png.run.json").is_file());
    let other = RelightArgs {
        object: object(&ckpt, &id),
        ..args("c.png")
    };
    cslf::cli::relight(&other).unwrap();
    assert_ne!(a, std::fs::read(dir.path().join("c.png")).unwrap());

    let env = dir.path().join("env.png");
    let px: Vec<[u8; 3]> = (0..32 * 16).map(|i| if i / 32 < 8 { [255, 240, 220] } else { [20, 20, 30] }).collect();
    cslf::files::write_rgb8(&env, 32, 16, &px).unwrap();
    for mode in [ModeArg::Eq4, ModeArg::Exposure] {
        let out = dir.path().join(format!("env_{mode:?}.png"));
        cslf::cli::env_render(&EnvRenderArgs {
            object: object(&ckpt, &id),
            camera: camera(),
            envmap: env.clone(),
            samples: 24,
            mode,
            out: out.clone(),
        })
        .unwrap();
        let (w, h, _) = cslf::files::read_rgb8(&out).unwrap();
        assert_eq!((w, h), (20, 16));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(main_with(["cslf", "--help"]), 0);
    assert_eq!(main_with(["cslf", "gen-data", "--preset", "bogus", "--out", d]), 1);
    assert_eq!(main_with(["cslf", "frobnicate"]), 1);
    let missing = format!("{d}/none.cslf");
    let code = main_with(["cslf", "relight", "--checkpoint", &missing, "--object", "sphere-0", "--light", "1,2,3", "--out", "x.png"]);
    assert_eq!(code, 1);

    let status = bin()
        .args(["gen-data", "--preset", "reflection", "--objects", "1", "--views", "1", "--lights", "1"])
        .args(["--resolution", "8", "--cloud-points", "8", "--out", d])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let out = bin().args(["gen-data", "--preset", "nope", "--out", d]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["relight", "--checkpoint", &missing, "--object", "sphere-0", "--light", "1,2", "--out", "x.png"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.cslf"));
    let help = bin().args(["train", "--help"]).output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("[PAPER"));
}

#[test]
fn light_specs_and_bad_configs_are_user_errors() {
    assert!(cslf::render::parse_light("1,2,3").is_ok());
    assert_eq!(cslf::render::parse_light("0,0,10,1,0.5,0").unwrap().color.y, 0.5);
    for bad in ["1,2", "1,2,3,4", "a,b,c", "1,2,3,2,0,0", "1,2,nan"] {
        let e = cslf::render::parse_light(bad).unwrap_err();
        assert_eq!(e.exit_code(), 1, "{bad}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"batch_size": 4, "learning_rat": 0.1}"#).unwrap();
    let e = FlatConfig::load(&cfg).unwrap_err();
    assert!(e.to_string().contains("learning_rat"));
    std::fs::write(&cfg, r#"{"batch_size": 4, "conditioning": "s+z", "beta": 0.5}"#).unwrap();
    let c = FlatConfig::load(&cfg).unwrap().to_train_config();
    assert_eq!((c.batch_size, c.arch.conditioning, c.beta), (4, Conditioning::ShapeImage, 0.5));
    assert_eq!(c.learning_rate, 1e-4);
}

#[test]
fn negative_coordinates_are_values() {
    let cli = Cli::try_parse_from([
        "cslf", "relight", "--checkpoint", "m.cslf", "--object", "chair-0", "--light", "-2,1,3,1,0.5,0.5",
        "--camera", "-1,-0.6,1", "--look-at", "0,0,-0.1", "--out", "x.png",
    ])
    .unwrap();
    let Cmd::Relight(a) = cli.command else { panic!("not relight") };
    assert_eq!(a.lights, ["-2,1,3,1,0.5,0.5"]);
    assert_eq!(a.camera.camera, [-1.0, -0.6, 1.0]);
    assert_eq!(a.camera.look_at, [0.0, 0.0, -0.1]);
}
