use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn densmap(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_densmap"));
    cmd.args(args).arg("--set").arg(format!("io.outdir={}", dir.display()));
    cmd.env_remove("DENSMAP_THREADS");
    cmd.output().expect("binary runs")
}

/// Column `name` of a CSV file, parsed as numbers.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let index = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader.records().map(|r| r.unwrap()[index].parse().unwrap()).collect()
}

/// Value of `quantity` in a two-column summary table.
fn quantity(path: &Path, name: &str) -> String {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let record = reader.records().map(Result::unwrap).find(|r| &r[0] == name).unwrap();
    record[1].to_string()
}

const DRIVEN: &[&str] = &[
    "--set",
    "grid.M=32",
    "--set",
    "time.steps=100",
    "--set",
    "time.sampling=midpoint",
    "--set",
    "potential.drive.shape=sine",
    "--set",
    "potential.drive.amplitude=0.3",
    "--set",
    "potential.drive.frequency=2",
];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn free_propagation_conserves_norm() {
    let dir = tempfile::tempdir().unwrap();
    let out = densmap(
        dir.path(),
        &["propagate", "--set", "potential.form=zero", "--set", "state.form=constant", "--set", "time.T=5"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let norms = column(&dir.path().join("norm.csv"), "norm");
    assert_eq!(norms.len(), 201);
    assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = ok"));
    assert!(manifest.contains("potential.form = zero"));
}

#[test]
fn uniform_ball_hartree_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = densmap(dir.path(), &["functionals"]);
    assert!(out.status.success());
    let hartree: f64 = quantity(&dir.path().join("components.csv"), "hartree").parse().unwrap();
    assert!((hartree - 0.6).abs() < 1e-4, "{hartree}");
    assert_eq!(quantity(&dir.path().join("scaling.csv"), "passes"), "true");
}

#[test]
fn density_file_round_trip_through_inversion() {
    let root = tempfile::tempdir().unwrap();
    let forward = root.path().join("forward");
    let inverse = root.path().join("inverse");
    let check = root.path().join("check");
    assert!(densmap(&forward, &with(DRIVEN, &["propagate"])).status.success());

    let density = format!("inversion.density_file={}", forward.join("density.dpmf").display());
    let args = with(
        DRIVEN,
        &["invert-fp", "--set", "inversion.target=file", "--set", &density, "--set", "inversion.restart_steps=2"],
    );
    let out = densmap(&inverse, &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["v_recovered.dpmf", "report.csv", "rho_verdict.csv", "manifest.txt"] {
        assert!(inverse.join(name).exists(), "{name}");
    }
    assert!(!inverse.join("recovery.csv").exists());

    let potential = format!("inversion.potential_file={}", inverse.join("v_recovered.dpmf").display());
    let args = with(DRIVEN, &["verify-rho", "--set", "inversion.target=file", "--set", &density, "--set", &potential]);
    assert!(densmap(&check, &args).status.success());
    let max_l1: f64 = quantity(&check.join("rho_verdict.csv"), "max_l1").parse().unwrap();
    assert!(max_l1 < 1e-4, "{max_l1}");
}

#[test]
fn generated_target_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let out = densmap(dir.path(), &with(DRIVEN, &["invert-fp", "--set", "inversion.restart_steps=2"]));
    assert!(out.status.success());
    let errors = column(&dir.path().join("recovery.csv"), "relative_error");
    assert!(errors.iter().all(|e| *e < 1e-3), "{:?}", errors.iter().fold(0.0_f64, |a, b| a.max(*b)));
}

#[test]
fn hamilton_jacobi_recovers_driven_potential() {
    let dir = tempfile::tempdir().unwrap();
    let out = densmap(dir.path(), &with(DRIVEN, &["invert-hj", "--set", "grid.M=64", "--set", "time.steps=400"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = column(&dir.path().join("recovery.csv"), "relative_error");
    assert!(errors.iter().all(|e| *e < 5e-2), "{errors:?}");
}

#[test]
fn non_convergence_exits_three_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = densmap(
        dir.path(),
        &with(DRIVEN, &["invert-fp", "--set", "inversion.max_iterations=2", "--set", "inversion.tolerance=1e-14"]),
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(column(&dir.path().join("report.csv"), "residual").len(), 2);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = numerical failure"));
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = densmap(dir.path(), &["propagate", "--set", "grid.N=12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.N"));
    assert!(!dir.path().join("manifest.txt").exists());

    let out = densmap(dir.path(), &["invert-hj", "--set", "system.particles=2", "--set", "grid.M=16"]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_densmap"))
        .args(["spectrum", "--set"])
        .arg(format!("io.outdir={}", dir.path().display()))
        .env("DENSMAP_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "# ring\ngrid.M = 24\nspectrum.count = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = densmap(&out_dir, &["spectrum", "--config", config.to_str().unwrap(), "--set", "spectrum.count=5"]);
    assert!(out.status.success());
    let energies = column(&out_dir.join("eigenvalues.csv"), "energy");
    assert_eq!(energies.len(), 5);
    assert!(energies.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn outputs_are_independent_of_thread_count() {
    let root = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for threads in ["1", "4"] {
        let dir = root.path().join(threads);
        let out = Command::new(env!("CARGO_BIN_EXE_densmap"))
            .args([
                "diagnose",
                "--set",
                "system.particles=2",
                "--set",
                "grid.M=24",
                "--set",
                "system.interaction.strength=1",
            ])
            .arg("--set")
            .arg(format!("io.outdir={}", dir.display()))
            .env("DENSMAP_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        tables.push(["diagnostics.csv", "force_balance.csv", "sobolev.csv"].map(|f| fs::read(dir.join(f)).unwrap()));
    }
    assert_eq!(tables[0], tables[1]);
}
