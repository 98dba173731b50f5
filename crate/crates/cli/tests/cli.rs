use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qwalk_core::io::{read_probability, read_surface};

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk")).args(args).output().expect("run qwalk")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qwalk(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn payload(path: &Path) -> Vec<u8> {
    let bytes = fs::read(path).unwrap();
    let end = bytes.windows(5).position(|w| w == b"\nend\n").unwrap() + 5;
    bytes[end..].to_vec()
}

const SMALL: &str = r#"
coin = "grover"
dim = 2
shape = [16, 16]
steps = 10
stride = 5
backend = "BACKEND"

[packet]
envelope = "gaussian"
sigma = 3.0
k0 = [0.5, 0.5]
coin = "branch:1,2"
"#;

#[test]
fn backends_write_matching_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut fields = Vec::new();
    for backend in ["spectral", "position"] {
        let cfg = write_config(dir.path(), &format!("{backend}.toml"), &SMALL.replace("BACKEND", backend));
        let out = dir.path().join(backend);
        let o = run("evolve", &cfg, &out, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        fields.push(read_probability(&out.join("prob_t000010.qwp")).unwrap());
    }
    let diff = fields[0].values.iter().zip(&fields[1].values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff:e}");
    assert_eq!(fields[0].time, 10);
}

#[test]
fn zero_steps_writes_only_the_initial_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("BACKEND", "spectral").replace("steps = 10", "steps = 0"));
    let out = dir.path().join("o");
    assert!(run("evolve", &cfg, &out, &[]).status.success());
    let snaps: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".qwp"))
        .collect();
    assert_eq!(snaps, vec!["prob_t000000.qwp".to_string()]);
    let moments = fs::read_to_string(out.join("moments.csv")).unwrap();
    assert_eq!(moments.lines().count(), 2);
    let v = qwalk(&["verify", "--out", out.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stderr(&v));
}

#[test]
fn thread_count_does_not_change_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("BACKEND", "spectral").replace("[16, 16]", "[48, 40]").replace("steps = 10", "steps = 30");
    let cfg = write_config(dir.path(), "c.toml", &(text + "\n[outputs]\nfield = true\n"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("evolve", &cfg, &a, &["--threads", "1"]).status.success());
    assert!(run("evolve", &cfg, &b, &["--threads", "3"]).status.success());
    for name in ["prob_t000030.qwp", "prob_t000015.qwp", "field_t000030.qwf"] {
        assert_eq!(payload(&a.join(name)), payload(&b.join(name)), "{name}");
    }
}

#[test]
fn manifest_catches_modified_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("BACKEND", "spectral"));
    let out = dir.path().join("o");
    assert!(run("evolve", &cfg, &out, &[]).status.success());
    let manifest = fs::read_to_string(out.join("manifest.sha256")).unwrap();
    assert!(manifest.contains("prob_t000005.qwp") && manifest.contains("diagnostics.log"));
    fs::write(out.join("moments.csv"), "t\n").unwrap();
    let v = qwalk(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = write_config(dir.path(), "bad.toml", &SMALL.replace("BACKEND", "spectral").replace("sigma = 3.0", "sigma = 3.0.0"));
    let o = run("evolve", &bad, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let stride = write_config(dir.path(), "s.toml", &SMALL.replace("BACKEND", "spectral").replace("stride = 5", "stride = 0"));
    let o = run("evolve", &stride, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stride"));

    let coin = write_config(dir.path(), "u.toml", &SMALL.replace("BACKEND", "spectral").replace("\"grover\"", "\"walsh\""));
    let o = run("evolve", &coin, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grover") && stderr(&o).contains("dft"), "{}", stderr(&o));

    let missing = dir.path().join("nope.toml");
    assert_eq!(run("evolve", &missing, &out, &[]).status.code(), Some(2));
}

#[test]
fn contract_violations_exit_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // Carrier on the conical point: branch 1 is not defined there.
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &SMALL.replace("BACKEND", "spectral").replace("[0.5, 0.5]", "[0.0, 0.0]").replace("branch:1,2", "branch:1"),
    );
    let o = run("evolve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    // Leaks out of the selected branch: the comparison is ill-posed.
    let cfg = write_config(
        dir.path(),
        "i.toml",
        &SMALL.replace("BACKEND", "spectral").replace("[0.5, 0.5]", "[0.01, 0.0]").replace("branch:1,2", "branch:1"),
    );
    let o = run("compare", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("projects only"), "{}", stderr(&o));
    // Carrier exactly on the cone: no continuum model exists there.
    let cfg = write_config(
        dir.path(),
        "r.toml",
        &SMALL
            .replace("BACKEND", "spectral")
            .replace("[16, 16]", "[128, 128]")
            .replace("sigma = 3.0", "sigma = 20.0")
            .replace("[0.5, 0.5]", "[0.0, 0.0]")
            .replace("\"branch:1,2\"", "[[0.5, 0.0], [0.5, 0.0], [-0.5, 0.0], [-0.5, 0.0]]"),
    );
    let o = run("compare", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("qwalk diabolo"), "{}", stderr(&o));
}

#[test]
fn compare_reports_ballistic_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        r#"
coin = "grover"
dim = 2
shape = [256, 256]
steps = 80
[packet]
envelope = "gaussian"
sigma = 10.0
k0 = [0.5, 0.5]
coin = "branch:1,2"
"#,
    );
    let out = dir.path().join("o");
    let o = run("compare", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.starts_with("L1="), "{report}");
    let centroid: f64 = report.split("centroid_err=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(centroid < 1.0, "{report}");
    assert_eq!(read_probability(&out.join("exact.qwp")).unwrap().time, 80);
    assert!(out.join("continuum.qwp").exists());
}

#[test]
fn dispersion_of_the_2d_grover_coin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "coin = \"grover\"\ndim = 2\n[dispersion]\nresolution = 128\nvelocity_branch = 1\n");
    let out = dir.path().join("o");
    let o = run("dispersion", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let surf = read_surface(&out.join("surface_full.qwd")).unwrap();
    assert_eq!(surf.branches, 4);
    assert_eq!(surf.shape(), vec![128, 128]);
    let report = fs::read_to_string(out.join("degeneracies.txt")).unwrap();
    assert_eq!(report.lines().filter(|l| l.contains("class=conical")).count(), 5, "{report}");
    let v = fs::read_to_string(out.join("velocity_s1_full.csv")).unwrap();
    assert_eq!(v.lines().count(), 128 * 128 + 1);
}

#[test]
fn dispersion_slices_of_the_3d_grover_coin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.toml",
        "coin = \"grover\"\ndim = 3\n[dispersion]\nresolution = 32\ndegeneracies = false\nslices = [0.0, 0.5, 1.0]\n",
    );
    let out = dir.path().join("o");
    assert!(run("dispersion", &cfg, &out, &[]).status.success());
    for (i, k3) in [0.0, 0.5, 1.0].iter().enumerate() {
        let s = read_surface(&out.join(format!("surface_slice{i}.qwd"))).unwrap();
        assert_eq!(s.branches, 6);
        assert_eq!(s.axes[2], vec![k3 * std::f64::consts::PI]);
    }
}

#[test]
fn unknown_coin_lists_the_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "coin = \"fourier\"\ndim = 2\n[dispersion]\nresolution = 32\n");
    let o = run("dispersion", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("dft") && msg.contains("grover") && msg.contains("file:<path>"), "{msg}");
}

fn features(path: &Path) -> [f64; 3] {
    let text = fs::read_to_string(path).unwrap();
    let get = |key: &str| -> f64 { text.split(&format!("{key}=")).nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap() };
    [get("xi_inner_max"), get("xi_zero"), get("xi_outer_max")]
}

const RING_FEATURES: [f64; 3] = [-1.74623, -0.765951, 0.550855];

#[test]
fn diabolo_features_at_sigma_20_t_300() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", "coin = \"grover\"\ndim = 2\n[diabolo]\nsigma = 20.0\nt = 300\n");
    let out = dir.path().join("o");
    let o = run("diabolo", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (f, tol) in [("features_quadrature.txt", 0.15), ("features_asymptotic.txt", 0.01)] {
        let got = features(&out.join(f));
        for (a, b) in got.iter().zip(&RING_FEATURES) {
            assert!((a - b).abs() <= tol, "{f}: {got:?}");
        }
    }
    let csv = fs::read_to_string(out.join("profile_quadrature.csv")).unwrap();
    assert!(csv.starts_with("xi,P\n"));
}

#[test]
fn diabolo_asymptotic_mode_and_short_times() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.toml",
        "coin = \"grover\"\ndim = 2\n[diabolo]\nsigma = 20.0\nt = 300\nmode = \"asymptotic\"\nxi_step = 0.001\n",
    );
    let out = dir.path().join("a");
    assert!(run("diabolo", &cfg, &out, &[]).status.success());
    assert!(!out.join("profile_quadrature.csv").exists());
    for (a, b) in features(&out.join("features_asymptotic.txt")).iter().zip(&RING_FEATURES) {
        assert!((a - b).abs() <= 0.01);
    }

    let cfg = write_config(dir.path(), "s.toml", "coin = \"grover\"\ndim = 2\n[diabolo]\nsigma = 20.0\nt = 100\n");
    let out = dir.path().join("s");
    let o = run("diabolo", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let diag = fs::read_to_string(out.join("diagnostics.log")).unwrap();
    assert!(diag.contains("asymptotic output suppressed"), "{diag}");
    assert!(!out.join("profile_asymptotic.csv").exists());
    assert!(out.join("profile_quadrature.csv").exists());
}

#[test]
fn projected_flat_band_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.toml",
        r#"
coin = "grover"
dim = 2
shape = [32, 32]
steps = 20
stride = 20
[packet]
envelope = "gaussian"
sigma = 3.0
k0 = [0.3, 0.2]
coin = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
[project]
branches = [4]
"#,
    );
    let out = dir.path().join("o");
    let o = run("project", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_probability(&out.join("prob_t000000.qwp")).unwrap();
    let b = read_probability(&out.join("prob_t000020.qwp")).unwrap();
    assert!(a.total() > 0.01);
    assert!(a.l1_distance(&b) < 1e-10);
    let weights = fs::read_to_string(out.join("branch_weights.csv")).unwrap();
    assert_eq!(weights.lines().count(), 5);
}

#[test]
fn presets_are_valid_configurations() {
    let list = qwalk(&["preset"]);
    let text = String::from_utf8(list.stdout).unwrap();
    for name in ["2gaussnodist", "2gausswithdist", "figsaddle", "vaso", "diabphi2pis2", "velocity3d"] {
        assert!(text.contains(name));
        let o = qwalk(&["preset", name]);
        assert!(o.status.success());
        let cfg = String::from_utf8(o.stdout).unwrap();
        assert!(cfg.starts_with(&format!("# preset {name}")));
    }
    assert_eq!(qwalk(&["preset", "nope"]).status.code(), Some(2));

    // The 2gaussnodist preset, shrunk, runs end to end.
    let dir = tempfile::tempdir().unwrap();
    let cfg = String::from_utf8(qwalk(&["preset", "2gaussnodist"]).stdout)
        .unwrap()
        .replace("[256, 256]", "[64, 64]")
        .replace("steps = 160", "steps = 16")
        .replace("stride = 40", "stride = 8")
        .replace("sigma = 10.0", "sigma = 4.0");
    let path = write_config(dir.path(), "p.toml", &cfg);
    let o = run("evolve", &path, &dir.path().join("o"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
}
