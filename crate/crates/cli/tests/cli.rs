use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::Command as Process;

use pshlab::envelope::read_envelope_dir;
use pshlab::foliation::{read_leaf_csv, read_tubular_csv};
use pshlab::geodesic::read_ray;
use pshlab::grid::read_csv;
use pshlab::polyline::Polyline;
use pshlab_cli::{parse_config, run, CliError, Command};

fn config_error(text: &str) -> (usize, String) {
    match parse_config(text) {
        Err(CliError::Config { line, msg }) => (line, msg),
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn run_text(text: &str, command: Command, out: &Path) -> Result<pshlab_cli::run::RunReport, CliError> {
    let mut cfg = parse_config(text).unwrap();
    cfg.command = Some(command);
    run(&cfg, out)
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn builtin_with_lambda_is_valid() {
    let cfg = parse_config("potential = flat\nlambda = 0.25\n").unwrap();
    assert_eq!(cfg.lambdas, vec![0.25]);
    assert_eq!(cfg.resolution, 128);
    assert_eq!(cfg.backend.to_string(), "radial");
    // the echo parses back to the same settings
    let again = parse_config(&cfg.to_text()).unwrap();
    assert_eq!(again.to_text(), cfg.to_text());
}

#[test]
fn unknown_key_names_its_line() {
    let (line, msg) = config_error("potential = flat\n\nlambad = 0.2\n");
    assert_eq!(line, 3);
    assert!(msg.contains("unknown key"), "{msg}");
}

#[test]
fn lambda_beyond_cutoff_is_rejected() {
    let (_, msg) = config_error("potential = flat\nlambda = 0.9\ncutoff = 0.5\n");
    assert!(msg.contains("lambda exceeds cutoff"), "{msg}");
}

#[test]
fn non_psh_potential_is_rejected() {
    let (line, msg) = config_error("lambda = 0.2\n[potential]\nabs -1 1\n");
    assert_eq!(line, 2);
    assert!(msg.contains("not strictly psh"), "{msg}");
}

#[test]
fn bad_term_reports_the_term_line() {
    let (line, _) = config_error("lambda = 0.2\n[potential]\nabs 1 1\nwat 2\n");
    assert_eq!(line, 4);
}

#[test]
fn wrong_backend_for_the_potential() {
    let (line, msg) = config_error("potential = perturbed\nbackend = radial\n");
    assert_eq!(line, 2);
    assert!(msg.contains("backend"), "{msg}");
}

#[test]
fn term_list_matches_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("builtin"), dir.path().join("terms"));
    run_text("potential = flat\nresolution = 48\nlambda = 0.2\n", Command::Envelope, &a).unwrap();
    run_text("resolution = 48\nlambda = 0.2\n[potential]\nabs 1 1\n", Command::Envelope, &b).unwrap();
    for f in ["config.txt", "envelope/envelope.csv", "envelope/normalized.csv", "envelope/boundary.csv", "envelope/summary.txt"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
}

#[test]
fn envelope_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = "potential = perturbed\nresolution = 40\nlambda = 0.2\n";
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_text(text, Command::Envelope, &a).unwrap();
    run_text(text, Command::Envelope, &b).unwrap();
    for f in ["phi.csv", "pole.csv", "envelope.csv", "normalized.csv", "coincidence.csv", "boundary.csv"] {
        assert_eq!(read(&a.join("envelope").join(f)), read(&b.join("envelope").join(f)), "{f}");
    }
}

#[test]
fn flow_with_empty_lambda_list_fails() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_text("potential = flat\nresolution = 32\nlambda = \n", Command::Flow, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(dir.path().join("FAILED").exists());
}

#[test]
fn emitted_files_round_trip_through_the_readers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let text = "potential = quartic\nresolution = 48\nlambda = 0.1, 0.2\ncutoff = 0.5\nn_lambda = 32\nn_t = 128\nleaf_angles = 6\nleaf_steps = 256\n";
    for c in [Command::Envelope, Command::Flow, Command::Geodesic, Command::Foliate] {
        run_text(text, c, out).unwrap();
    }

    let e = read_envelope_dir::<f64>(&out.join("envelope")).unwrap();
    assert_eq!(e.lambda, 0.1);
    assert_eq!(e.grid().resolution(), 48);

    for k in 0..2 {
        let f = fs::File::open(out.join(format!("flow/boundary_{k:03}.csv"))).unwrap();
        let poly = Polyline::<f64>::read_csv(BufReader::new(f)).unwrap();
        assert!(poly.closed && poly.len() > 8);
    }
    let mass = fs::read_to_string(out.join("flow/mass.csv")).unwrap();
    assert_eq!(mass.lines().count(), 3);
    assert!(fs::read_to_string(out.join("flow/inclusion.txt")).unwrap().contains("violations = 0"));

    let ray = read_ray::<f64>(&out.join("geodesic")).unwrap();
    assert_eq!(ray.lambdas().len(), 32);
    assert_eq!(ray.cutoff(), 0.5);
    let h0 = read_csv::<f64, _>(BufReader::new(fs::File::open(out.join("geodesic/h0.csv")).unwrap())).unwrap();
    assert_eq!(h0.grid().len(), 48 * 48);
    read_csv::<f64, _>(BufReader::new(fs::File::open(out.join("geodesic/weak_0000.csv")).unwrap())).unwrap();
    let residuals = fs::read_to_string(out.join("geodesic/residuals.txt")).unwrap();
    let certified: f64 = residuals
        .lines()
        .find_map(|l| l.strip_prefix("lambda_certified = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(certified >= 0.2 && certified < 0.5, "{certified}");

    let leaf = fs::File::open(out.join("foliation/leaves/leaf_000.csv")).unwrap();
    let samples = read_leaf_csv::<f64, _>(BufReader::new(leaf)).unwrap();
    assert_eq!(samples.len(), 257);
    let tube = fs::File::open(out.join("foliation/tubular.csv")).unwrap();
    let map = read_tubular_csv::<f64, _>(BufReader::new(tube), 2.0 / 48.0).unwrap();
    assert_eq!(map.entries.len(), 12);
    let areas = fs::read_to_string(out.join("foliation/areas.csv")).unwrap();
    assert_eq!(areas.lines().count(), 13);
    assert!(!out.join("FAILED").exists());
}

#[test]
fn verify_passes_on_flat_at_256() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_text("potential = flat\nresolution = 256\nlambda = 0.1, 0.25\n", Command::Verify, dir.path()).unwrap();
    assert!(report.checks.len() >= 15);
    assert!(report.checks.iter().all(|c| c.pass));
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.checks.len() + 1);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "potential = flat\nfoo = 1\n").unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_pshlab"))
        .args(["envelope", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o1"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));

    let good = dir.path().join("good.cfg");
    fs::write(&good, "potential = flat\nresolution = 32\nlambda = 0.2\n").unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_pshlab"))
        .args(["envelope", "--threads", "2", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("o2"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("o2/envelope/summary.txt").exists());
}
