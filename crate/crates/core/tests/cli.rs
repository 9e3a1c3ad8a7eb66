use std::fs;
use std::path::Path;

use nneig::cli::{main_with_args, parse_settings, RunConfig, EXIT_INVALID, EXIT_OK};
use nneig::problems::{ProblemOptions, ProblemRegistry};
use nneig::snapshot::Snapshot;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["nneig"];
    full.extend_from_slice(args);
    let code = main_with_args(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn dump_config_lists_every_setting_and_reads_back() {
    let (code, text, _) = run(&[
        "run",
        "--problem",
        "henon-heiles",
        "--levels",
        "3",
        "--seed",
        "9",
        "--dump-config",
    ]);
    assert_eq!(code, EXIT_OK);
    for key in [
        "problem",
        "mode",
        "levels",
        "grid",
        "mesh",
        "seed",
        "restarts",
        "hidden_units",
        "optimizer",
        "max_iterations",
        "error_tolerance",
        "gradient_tolerance",
        "scale_penalty",
        "deterministic",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key} = "))),
            "{key} missing:\n{text}"
        );
    }
    let registry = ProblemRegistry::standard();
    let (cfg, _) = RunConfig::resolve(&parse_settings(&text).unwrap(), &registry).unwrap();
    assert_eq!(cfg.to_string(), text);
    assert_eq!(cfg.levels, 3);
    assert_eq!(cfg.solver.seed, 9);
}

#[test]
fn variational_runs_get_a_separate_quadrature() {
    let (code, text, _) = run(&[
        "run",
        "--problem",
        "henon-heiles",
        "--mode",
        "variational",
        "--dump-config",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("quadrature = 40\n"), "{text}");
    let (_, text, _) = run(&["run", "--problem", "henon-heiles", "--dump-config"]);
    assert!(text.contains("quadrature = none\n"), "{text}");
    let (_, text, _) = run(&[
        "run",
        "--problem",
        "henon-heiles",
        "--mode",
        "variational",
        "--set",
        "quadrature=none",
        "--dump-config",
    ]);
    assert!(text.contains("quadrature = none\n"), "{text}");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    fs::write(
        &file,
        "# comment\nproblem = morse\nseed = 4\nrestarts = 2\n",
    )
    .unwrap();
    let (code, text, _) = run(&[
        "run",
        "--config",
        file.to_str().unwrap(),
        "--seed",
        "5",
        "--dump-config",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(
        text.contains("seed = 5\n") && text.contains("restarts = 2\n"),
        "{text}"
    );
    fs::write(&file, "seed = 4\nseed = 5\n").unwrap();
    assert_eq!(
        run(&["run", "--config", file.to_str().unwrap()]).0,
        EXIT_INVALID
    );
}

#[test]
fn invalid_configurations_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let unwritable = blocker.join("sub");
    for args in [
        vec!["run", "--problem", "nope"],
        vec!["run", "--problem", "morse", "--mode", "fem"],
        vec!["run", "--problem", "morse", "--mode", "quantum"],
        vec!["run", "--problem", "morse", "--levels", "0"],
        vec!["run", "--problem", "morse", "--restarts", "0"],
        vec!["run", "--problem", "morse", "--set", "colour=blue"],
        vec!["run", "--problem", "morse", "--set", "seed=minus"],
        vec!["run"],
        vec!["run", "--bogus-flag"],
        vec![
            "run",
            "--problem",
            "morse",
            "--out",
            unwritable.to_str().unwrap(),
        ],
        vec!["compare", "--problem", "morse"],
        vec!["constants", "--problem", "nope"],
        vec!["run", "--problem", "harmonic", "--set", "quadrature=30"],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, EXIT_INVALID, "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn morse_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("morse");
    let (code, _, err) = run(&[
        "run",
        "--problem",
        "morse",
        "--levels",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = csv_rows(&out.join("eigenvalues.csv"));
    assert_eq!(
        rows[0],
        ["level", "eigenvalue", "error", "iterations", "converged"]
    );
    let eps: f64 = rows[1][1].parse().unwrap();
    assert!((eps - 2.8617e-4).abs() < 1e-8, "{eps}");
    for f in [
        "state_1.snapshot",
        "wavefunction_1.csv",
        "residual_1.csv",
        "iterations_1.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let wf = csv_rows(&out.join("wavefunction_1.csv"));
    assert_eq!(wf[0], ["x", "psi"]);
    assert_eq!(wf.len(), 151);
    assert_eq!(csv_rows(&out.join("residual_1.csv"))[0], ["x", "residual"]);
    // 17 significant digits
    assert_eq!(
        rows[1][1]
            .split('e')
            .next()
            .unwrap()
            .replace(['.', '-'], "")
            .len(),
        17
    );
}

#[test]
fn reruns_are_byte_identical_and_snapshots_reload() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let (code, _, err) = run(&[
            "run",
            "--problem",
            "harmonic",
            "--levels",
            "2",
            "--restarts",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 1 + 2 * 4);
    for n in &names {
        assert_eq!(
            fs::read(a.join(n)).unwrap(),
            fs::read(b.join(n)).unwrap(),
            "{n:?}"
        );
    }
    let registry = ProblemRegistry::standard();
    let p = registry
        .build("harmonic", &ProblemOptions::default())
        .unwrap();
    for (k, want) in [(1, 0.5), (2, 1.5)] {
        let s = Snapshot::load(&a.join(format!("state_{k}.snapshot"))).unwrap();
        assert_eq!(s.level, k - 1);
        let eps = s.rayleigh_quotient(p.as_ref()).unwrap();
        assert!(
            (eps - s.eigenvalue).abs() <= 1e-12 * eps.abs().max(1.0),
            "{eps} vs {}",
            s.eigenvalue
        );
        assert!((eps - want).abs() < 1e-5, "{eps}");
    }
    let (code, text, _) = run(&["eval", a.join("state_2.snapshot").to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(
        text.contains("recomputed eigenvalue = 1.5")
            || text.contains("recomputed eigenvalue = 1.4"),
        "{text}"
    );
}

#[test]
fn radial_wavefunctions_report_phi_over_r() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("na");
    let (code, _, err) = run(&[
        "run",
        "--problem",
        "n-alpha",
        "--restarts",
        "1",
        "--set",
        "max_iterations=50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(code == 0 || code == 1, "{err}");
    let wf = csv_rows(&out.join("wavefunction_1.csv"));
    assert_eq!(wf[0], ["r", "psi_over_r"]);
    // the origin row carries φ'(0), which is finite and non-zero
    let origin: f64 = wf[1][1].parse().unwrap();
    assert_eq!(wf[1][0].parse::<f64>().unwrap(), 0.0);
    assert!(origin.is_finite() && origin != 0.0);
    // the next point approaches the same limit
    let next: f64 = wf[2][1].parse().unwrap();
    assert!(
        (next - origin).abs() < 0.1 * origin.abs(),
        "{origin} {next}"
    );
}

#[test]
fn fem_mode_writes_table_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fem");
    let (code, _, err) = run(&[
        "run",
        "--problem",
        "henon-heiles",
        "--mode",
        "fem",
        "--mesh",
        "5,7",
        "--dump-matrices",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let table = csv_rows(&out.join("fem_table.csv"));
    assert_eq!(table[0], ["level", "5x5", "7x7"]);
    let first: f64 = table[1][1].parse().unwrap();
    assert!((first - 1.0075).abs() < 1e-4);
    let ev = csv_rows(&out.join("eigenvalues.csv"));
    assert!((ev[1][1].parse::<f64>().unwrap() - 0.9997).abs() < 1e-4);
    let coo = fs::read_to_string(out.join("stiffness_7.coo")).unwrap();
    let header: Vec<usize> = coo
        .lines()
        .next()
        .unwrap()
        .split(' ')
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(header[0], 15 * 15);
    assert_eq!(coo.lines().count(), header[2] + 1);
    assert_eq!(
        fs::read_to_string(out.join("mesh_7_nodes.txt"))
            .unwrap()
            .lines()
            .count(),
        226
    );
    assert!(out.join("wavefunction_1.csv").exists());
}

#[test]
fn compare_reports_resource_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text, _) = run(&[
        "compare",
        "--problem",
        "henon-heiles",
        "--levels",
        "1",
        "--restarts",
        "1",
        "--set",
        "max_iterations=200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(code == 0 || code == 1);
    assert!(text.contains("neural 33 per state"), "{text}");
    assert!(text.contains("fem 3481 unknowns"), "{text}");
    assert_eq!(
        csv_rows(&dir.path().join("compare.csv"))[0],
        ["level", "neural", "fem", "difference"]
    );
}

#[test]
fn listing_commands() {
    let (code, text, _) = run(&["problems"]);
    assert_eq!(code, EXIT_OK);
    for id in [
        "morse",
        "muonic-schrodinger",
        "muonic-dirac",
        "n-alpha",
        "henon-heiles",
        "sextic-3d",
    ] {
        assert!(text.contains(id));
    }
    let (code, text, _) = run(&["constants"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.starts_with("name,value,unit,note\n"));
    assert!(text.contains("m_muon,1.0565840000000000e2"));
    let (code, text, _) = run(&["constants", "--problem", "muonic-dirac"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.lines().count() > 2);
}
