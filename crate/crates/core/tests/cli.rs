use std::path::Path;
use std::process::{Command, Output};

use greedy_tn::io;
use greedy_tn::network::RankMatrix;
use greedy_tn::report::Report;
use greedy_tn::targets::random_tt;
use greedy_tn::{DenseTensor, TensorNetwork};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greedy-tn"))
        .args(args)
        .env("TN_THREADS", "1")
        .output()
        .expect("spawn greedy-tn")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(path: &Path) -> Report {
    Report::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_tt(dir: &Path) -> std::path::PathBuf {
    let net = random_tt(&[3, 4, 3, 2], &[2, 2, 2], 5).unwrap();
    let path = dir.join("target.tnsr");
    io::write_tensor(&path, &net.evaluate()).unwrap();
    path
}

#[test]
fn decompose_writes_report_and_network() {
    let dir = tempfile::tempdir().unwrap();
    let target = small_tt(dir.path());
    let rep = dir.path().join("run.report");
    let net_path = dir.path().join("found.tnet");
    let stdout = ok(&[
        "decompose",
        "--target",
        s(&target),
        "--loss-threshold",
        "1e-6",
        "--seed",
        "1",
        "--report",
        s(&rep),
        "--out-network",
        s(&net_path),
    ]);
    assert!(stdout.contains("loss-threshold"), "{stdout}");
    let r = report(&rep);
    assert_eq!(r.config_value("command"), Some("decompose"));
    assert_eq!(r.config_value("seed"), Some("1"));
    assert_eq!(r.config_value("edge_search_iters"), Some("2"));
    assert_eq!(r.status_value("termination"), Some("loss-threshold"));
    let err: f64 = r.status_value("relative_error").unwrap().parse().unwrap();
    assert!(err <= 1e-6);
    assert!(!r.trace.is_empty());
    let net = io::read_network(&net_path).unwrap();
    assert_eq!(r.params, Some(net.param_count()));
    assert_eq!(r.dims[..4], [3, 4, 3, 2]);
    assert!(r.dims[4..].iter().all(|&d| d == 1));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let target = small_tt(dir.path());
    let mut traces = Vec::new();
    for name in ["a.report", "b.report"] {
        let rep = dir.path().join(name);
        ok(&["decompose", "--target", s(&target), "--max-iterations", "3", "--seed", "9", "--report", s(&rep)]);
        let r = report(&rep);
        traces.push(
            r.trace
                .iter()
                .map(|t| (t.edge, t.params, t.loss.to_bits()))
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn contract_then_inspect_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ranks = RankMatrix::from_edges(3, &[(0, 1, 2), (1, 2, 3), (0, 2, 2)]).unwrap();
    let net = TensorNetwork::random(ranks, vec![2, 3, 4], 3, 1.0).unwrap();
    let net_path = dir.path().join("ring.tnet");
    io::write_network(&net_path, &net).unwrap();

    let out = dir.path().join("full.tnsr");
    let rep = dir.path().join("contract.report");
    ok(&["contract", "--network", s(&net_path), "--out", s(&out), "--report", s(&rep)]);
    let full = io::read_tensor(&out).unwrap();
    let expected = net.evaluate();
    assert_eq!(full.dims(), expected.dims());
    assert!(full.data().iter().zip(expected.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(report(&rep).params, Some(net.param_count()));

    let stdout = ok(&["inspect", "--network", s(&net_path)]);
    assert!(stdout.contains(&format!("params {}", net.param_count())), "{stdout}");
    assert!(stdout.contains("edge 1 2 rank 3"), "{stdout}");
}

#[test]
fn complete_reports_held_out_error() {
    let dir = tempfile::tempdir().unwrap();
    let target = small_tt(dir.path());
    let rep = dir.path().join("complete.report");
    ok(&[
        "complete",
        "--observations",
        s(&target),
        "--mask-fraction",
        "0.5",
        "--max-iterations",
        "4",
        "--report",
        s(&rep),
    ]);
    let r = report(&rep);
    assert_eq!(r.config_value("edge_search_iters"), Some("10"));
    assert!(r.status_value("test_error").is_some());
    assert!(r.trace.iter().all(|t| t.test_error.is_some()));
}

#[test]
fn complete_from_index_file() {
    let dir = tempfile::tempdir().unwrap();
    let values = DenseTensor::new(vec![4], vec![1.0, 2.0, 2.0, 4.0]).unwrap();
    let vals = dir.path().join("values.tnsr");
    io::write_tensor(&vals, &values).unwrap();
    let idx = dir.path().join("idx.txt");
    std::fs::write(&idx, "0 0\n0 1\n1 0\n1 1\n").unwrap();
    let rep = dir.path().join("idx.report");
    ok(&[
        "complete",
        "--observations",
        s(&vals),
        "--indices",
        s(&idx),
        "--dims",
        "2,2",
        "--max-iterations",
        "2",
        "--report",
        s(&rep),
    ]);
    assert_eq!(report(&rep).dims[..2], [2, 2]);
}

#[test]
fn baseline_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let target = small_tt(dir.path());
    let rep = dir.path().join("tt.report");
    ok(&["baseline", "--target", s(&target), "--model", "tt", "--rank-range", "1:3", "--report", s(&rep)]);
    let r = report(&rep);
    assert_eq!(r.curve.len(), 3);
    assert!(r.curve[1].relative_error < 1e-6);
    let csv = ok(&["plot", "--report", s(&rep)]);
    assert!(csv.starts_with("params,relative_error,test_error\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn constrained_search_keeps_chain_structure() {
    let dir = tempfile::tempdir().unwrap();
    let target = small_tt(dir.path());
    let net_path = dir.path().join("tt.tnet");
    let rep = dir.path().join("tt.report");
    ok(&[
        "decompose",
        "--target",
        s(&target),
        "--constrain",
        "tt",
        "--max-iterations",
        "6",
        "--report",
        s(&rep),
        "--out-network",
        s(&net_path),
    ]);
    let net = io::read_network(&net_path).unwrap();
    assert_eq!(net.node_count(), 4);
    for (i, j, _) in net.edge_list(false) {
        assert_eq!(j, i + 1, "edge ({i},{j}) is not on the chain");
    }
}

#[test]
fn tensorize_reshapes_image() {
    let dir = tempfile::tempdir().unwrap();
    let image = DenseTensor::new(vec![6, 4, 3], (0..72).map(f64::from).collect()).unwrap();
    let img = dir.path().join("img.tnsr");
    io::write_tensor(&img, &image).unwrap();
    let out = dir.path().join("t.tnsr");
    ok(&["tensorize", "--image", s(&img), "--preset", "custom:2x3/2x2", "--out", s(&out)]);
    let t = io::read_tensor(&out).unwrap();
    assert_eq!(t.len(), 72);
    assert_eq!(t.dims().iter().product::<usize>(), 72);
}

#[test]
fn failures_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tnsr");
    let out = run(&["decompose", "--target", s(&missing), "--report", s(&dir.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let garbage = dir.path().join("garbage.tnet");
    std::fs::write(&garbage, b"not a network").unwrap();
    let out = run(&["inspect", "--network", s(&garbage)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("format error at byte"));

    let target = small_tt(dir.path());
    let out = run(&["baseline", "--target", s(&target), "--model", "tt", "--rank-range", "3", "--report", s(&dir.path().join("r"))]);
    assert!(!out.status.success());

    let out = run(&["complete", "--observations", s(&target), "--report", s(&dir.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--mask-fraction"));
}
