use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flowsim::topology::{build_latency_table, load_topology, NodeId};
use flowsim_cli::run::{deterministic_part, CSV_HEADER, SWEEP_HEADER};
use tempfile::TempDir;

fn flowsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowsim")).args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(file: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn gen_topology_default_and_minimal() {
    let dir = TempDir::new().unwrap();
    let out = flowsim(&["gen-topology", "-o", &path(&dir, "default.txt")]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("nodes: 600") && stdout.contains("validation: passed"), "{stdout}");
    assert_eq!(load_topology(path(&dir, "default.txt")).unwrap().node_count(), 600);

    let args = ["--transit", "1", "--transit-nodes", "1", "--stubs", "1", "--stub-routers", "1", "--hosts", "1"];
    let out = flowsim(&[&["gen-topology"][..], &args, &["-o", &path(&dir, "min.txt")]].concat());
    assert!(out.status.success());
    assert_eq!(load_topology(path(&dir, "min.txt")).unwrap().node_count(), 3);
}

#[test]
fn gen_topology_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for name in ["a.txt", "b.txt"] {
        assert!(flowsim(&["gen-topology", "--seed", "11", "--hosts", "3", "-o", &path(&dir, name)]).status.success());
    }
    assert_eq!(fs::read(path(&dir, "a.txt")).unwrap(), fs::read(path(&dir, "b.txt")).unwrap());
}

#[test]
fn single_flow_matches_analytic_value() {
    let dir = TempDir::new().unwrap();
    let topo = path(&dir, "two.txt");
    let args = ["--transit", "1", "--transit-nodes", "1", "--stubs", "1", "--stub-routers", "1", "--hosts", "2"];
    assert!(flowsim(&[&["gen-topology"][..], &args, &["--seed", "5", "-o", &topo]].concat()).status.success());
    let t = load_topology(&topo).unwrap();
    let table = build_latency_table(&t);
    let (a, b) = (table.hosts()[0], table.hosts()[1]);
    let bw = |h: NodeId| t.nodes()[h.index()].access_bandwidth.unwrap();

    let mut durations = Vec::new();
    for model in ["bandwidth-share", "naive"] {
        let cfg = write(
            &dir,
            &format!("{model}.cfg"),
            &format!("topology_file = two.txt\nmodel = {model}\nflow_count = 1\nflow_size = 150000\n"),
        );
        let out_dir = path(&dir, model);
        assert!(flowsim(&["run", "--config", &cfg, "-o", &out_dir]).status.success());
        let rows = csv_rows(&Path::new(&out_dir).join("flows.csv"));
        assert_eq!(rows.len(), 1);
        let (src, dst) = (NodeId(rows[0][1].parse().unwrap()), NodeId(rows[0][2].parse().unwrap()));
        assert!((src, dst) == (a, b) || (src, dst) == (b, a));
        let expected = table.one_way(a, b).unwrap().as_secs_f64() + 8.0 * 150_000.0 / bw(a).min(bw(b));
        assert_eq!(rows[0][6], format!("{expected:.9}"));
        durations.push(rows[0][6].clone());
    }
    assert_eq!(durations[0], durations[1]);
}

#[test]
fn run_is_deterministic_and_conserves_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "r.cfg", "seed = 4\nflow_count = 3000\nflow_size = 50000\nhosts = 4\n");
    for out in ["one", "two"] {
        let o = flowsim(&["run", "--config", &cfg, "-o", &path(&dir, out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |out: &str, f: &str| fs::read(dir.path().join(out).join(f)).unwrap();
    assert_eq!(read("one", "flows.csv"), read("two", "flows.csv"));
    let json = |out: &str| deterministic_part(serde_json::from_slice(&read(out, "stats.json")).unwrap());
    assert_eq!(json("one"), json("two"));
    assert_eq!(csv_rows(&dir.path().join("one/flows.csv")).len(), 3000);
    let stats = json("one");
    assert_eq!(stats["duration_s"]["count"], 3000);
}

#[test]
fn poisson_run_rows_match_arrivals() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "p.cfg",
        "flow_count = 100000\nflow_size = 20000\narrival = poisson\npoisson_rate = 200\npoisson_horizon = 5\n",
    );
    assert!(flowsim(&["run", "--config", &cfg, "-o", &path(&dir, "out")]).status.success());
    let rows = csv_rows(&dir.path().join("out/flows.csv"));
    assert!(rows.len() > 800 && rows.len() < 1200, "{}", rows.len());
    for r in &rows {
        let start: f64 = r[4].parse().unwrap();
        let duration: f64 = r[6].parse().unwrap();
        assert!(start > 0.0 && start <= 5.0 && duration > 0.0);
    }
}

#[test]
fn sweep_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.cfg", "flow_count = 2000\nhosts = 4\n");
    let out = flowsim(&["sweep", "--config", &cfg, "--sizes", "10000,50000,50000,200000", "-o", &path(&dir, "sw")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    // identical sizes give identical rows apart from the wall clock
    assert_eq!(rows[1][..7], rows[2][..7]);
    let means: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(means[0] < means[1] && means[2] < means[3]);
    assert!(dir.path().join("sw/run_03_200000/flows.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |o: Output| o.status.code().unwrap();

    let bad = write(&dir, "bad.cfg", "flow_count = zero\n");
    assert_eq!(code(flowsim(&["run", "--config", &bad, "-o", &path(&dir, "x")])), 1);
    assert_eq!(code(flowsim(&["run", "--config", &path(&dir, "missing.cfg"), "-o", &path(&dir, "x")])), 1);
    assert_eq!(code(flowsim(&["run"])), 1);
    assert_eq!(code(flowsim(&["--help"])), 0);

    let list = write(&dir, "list.cfg", "flow_size = 1, 2\nhosts = 2\n");
    assert_eq!(code(flowsim(&["run", "--config", &list, "-o", &path(&dir, "x")])), 1);
    let one = write(&dir, "one.cfg", "hosts = 2\n");
    assert_eq!(code(flowsim(&["sweep", "--config", &one, "--sizes", "100", "-o", &path(&dir, "x")])), 1);

    // the stub-stub link is slower than the fastest host
    write(
        &dir,
        "slow.txt",
        "flowsim-topo v1 seed=0\nnode 0 transit\nnode 1 stub\nnode 2 stub\nnode 3 host bw=10000000\nnode 4 host bw=10000000\n\
         link 0 1 bw=1000000000 lat=0.010000000\nlink 1 2 bw=1000000 lat=0.002000000\n\
         link 1 3 bw=10000000 lat=0.001000000\nlink 2 4 bw=10000000 lat=0.001000000\n",
    );
    let slow = write(&dir, "slow.cfg", "topology_file = slow.txt\nflow_count = 1\n");
    let out = flowsim(&["run", "--config", &slow, "-o", &path(&dir, "x")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("validation failed"));
}
