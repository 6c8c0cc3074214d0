use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn dynscan() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dynscan"));
    cmd.env_remove("DYNSCAN_SEED");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn dynscan");
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// A ring of `n` labelled vertices plus chords to the vertex three ahead.
fn write_graph(dir: &Path, n: usize) -> PathBuf {
    let mut text = String::from("# ring with chords\n");
    for i in 0..n {
        text.push_str(&format!("n{} n{}\n", i, (i + 1) % n));
        text.push_str(&format!("n{} n{}\n", i, (i + 3) % n));
        text.push_str(&format!("n{} n{}\n", i, (i + 2) % n));
    }
    // A duplicate and a self-loop, both dropped.
    text.push_str("n1 n0\nn5 n5\n");
    let path = dir.join("graph.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn ingest_remaps_and_counts_dropped_lines() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 30);
    let out_path = dir.path().join("dense.txt");
    let labels = dir.path().join("labels.txt");
    let out = run_ok(dynscan().arg("ingest").arg(&graph).arg("-o").arg(&out_path).arg("--labels").arg(&labels));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n=30 m=90 dropped=2"), "{stderr}");
    let dense = fs::read_to_string(&out_path).unwrap();
    assert!(dense.starts_with("# n=30 m=90\n0 1\n"), "{dense}");
    let labels = fs::read_to_string(&labels).unwrap();
    assert!(labels.starts_with("0 n0\n1 n1\n"));
}

#[test]
fn gen_stream_uses_original_labels_and_seed_env() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 40);
    let gen = |name: &str, seed: Option<&str>| {
        let path = dir.path().join(name);
        let mut cmd = dynscan();
        cmd.args(["gen-stream"]).arg(&graph).arg("-o").arg(&path).args(["--updates", "50"]);
        if let Some(s) = seed {
            cmd.env("DYNSCAN_SEED", s);
        }
        run_ok(&mut cmd);
        fs::read_to_string(path).unwrap()
    };
    let a = gen("a.txt", None);
    let b = gen("b.txt", Some("42"));
    let c = gen("c.txt", Some("7"));
    assert_eq!(a.lines().count(), 50);
    assert!(a.lines().all(|l| l.starts_with("I n") || l.starts_with("D n")), "{a}");
    assert_eq!(a, b, "default seed is 42");
    assert_ne!(a, c);
}

fn run_to_csv(dir: &Path, graph: &Path, stream: &Path, tag: &str, extra: &[&str]) -> (String, String) {
    let metrics = dir.join(format!("{tag}.csv"));
    run_ok(
        dynscan()
            .arg("run")
            .arg(graph)
            .arg("--stream")
            .arg(stream)
            .args(["--timings", "off", "--evaluate-every", "2", "--rho-star", "0.1", "--delta", "0.05"])
            .args(extra)
            .arg("-o")
            .arg(&metrics),
    );
    let perf = dir.join(format!("{tag}.perf.csv"));
    (fs::read_to_string(metrics).unwrap(), fs::read_to_string(perf).unwrap())
}

#[test]
fn run_is_byte_identical_under_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 60);
    let stream = dir.path().join("s.txt");
    run_ok(dynscan().arg("gen-stream").arg(&graph).arg("-o").arg(&stream).args(["--updates", "200"]));
    for algorithm in ["vdstar", "botbin", "gsindex"] {
        let first = run_to_csv(dir.path(), &graph, &stream, &format!("{algorithm}1"), &["--algorithm", algorithm]);
        let second = run_to_csv(dir.path(), &graph, &stream, &format!("{algorithm}2"), &["--algorithm", algorithm]);
        assert_eq!(first, second, "{algorithm}");
        let lines: Vec<_> = first.0.lines().collect();
        assert_eq!(lines[0], "update_index,eps,mu,ari,mlr,n_cr,m_cr,query_micros");
        assert_eq!(lines.len(), 1 + 10 + 1);
        assert!(lines.last().unwrap().starts_with("summary,"));
        assert!(first.1.starts_with("algorithm,measure,n,"));
    }
}

#[test]
fn botbin_with_cosine_is_rejected() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 20);
    let out = dynscan()
        .arg("run")
        .arg(&graph)
        .args(["--algorithm", "botbin", "--measure", "cosine"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("jaccard"));
}

#[test]
fn missing_graph_fails() {
    let out = dynscan().args(["run", "/nonexistent/graph.txt"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn audit_run_on_200_vertices_is_clean() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 200);
    let out = run_ok(
        dynscan()
            .arg("run")
            .arg(&graph)
            .args(["--audit", "--updates", "400", "--timings", "off"]),
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sandwich=0 audit=0 recompute=0"), "{stderr}");
}

#[test]
fn audit_subcommand_checks_every_algorithm() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 50);
    let out = run_ok(
        dynscan()
            .arg("audit")
            .arg(&graph)
            .args(["--updates", "200", "--rho-star", "0.1", "--delta", "0.05"]),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["vdstar ", "vdstar_not", "vdstar_mut", "gsindex", "botbin"] {
        assert!(stdout.lines().any(|l| l.starts_with("ok") && l.contains(name)), "{name}: {stdout}");
    }
}

#[test]
fn audit_refuses_large_graphs_without_force() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(dir.path(), 2_100);
    let out = dynscan().arg("audit").arg(&graph).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
}
