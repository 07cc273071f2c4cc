use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mrloglab::bench::{generate_corpus, GeneratorConfig};
use mrloglab::logformat::LogFormatDescriptor;

fn mrloglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrloglab")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_corpus(dir: &Path, name: &str, d: LogFormatDescriptor, lines: usize) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, generate_corpus(GeneratorConfig::new(4, d), lines).text).unwrap();
    path
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| e.file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn detect_reports_dialect_and_variant() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_corpus(dir.path(), "u_ex130415.log", LogFormatDescriptor::iis_full(), 200);
    let out = mrloglab(&["detect", "--input", s(&log)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "IIS_W3C\nvariant: full\n");

    let log = write_corpus(dir.path(), "access.log", LogFormatDescriptor::apache_combined(), 200);
    assert_eq!(stdout(&mrloglab(&["detect", "--input", s(&log)])), "APACHE_ACCESS\nvariant: combined\n");
}

#[test]
fn frequency_writes_six_files_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_corpus(dir.path(), "log", LogFormatDescriptor::iis_full(), 2000);
    let out_dir = dir.path().join("freq");
    let out = mrloglab(&["analyze", "frequency", "--input", s(&log), "--out", s(&out_dir), "--block-size", "16K"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        listing(&out_dir),
        [
            "_SUCCESS",
            "browser_part-00000",
            "day_part-00000",
            "hour_part-00000",
            "ip_part-00000",
            "method_part-00000",
            "page_part-00000",
        ]
    );
    let lines = fs::read_to_string(&log).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    let text = stdout(&out);
    assert!(text.contains(&format!("lines read: {lines}\n")), "{text}");
    assert!(text.contains("top day_part-00000: "), "{text}");
    let success = fs::read_to_string(out_dir.join("_SUCCESS")).unwrap();
    assert!(success.contains(&format!("lines_read\t{lines}\n")), "{success}");
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_corpus(dir.path(), "log", LogFormatDescriptor::squid(), 3000);
    let mut runs = Vec::new();
    for (i, workers) in ["1", "4"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = mrloglab(&[
            "analyze",
            "errors",
            "--input",
            s(&log),
            "--out",
            s(&out_dir),
            "--workers",
            workers,
            "--block-size",
            "8K",
        ]);
        assert!(out.status.success());
        let files: Vec<(String, Vec<u8>)> = listing(&out_dir)
            .into_iter()
            .filter(|n| n != "_SUCCESS")
            .map(|n| (n.clone(), fs::read(out_dir.join(&n)).unwrap()))
            .collect();
        runs.push(files);
    }
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn query_survives_a_node_failure() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_corpus(dir.path(), "log", LogFormatDescriptor::iis_sample(), 4000);
    let run = |name: &str, extra: &[&str]| {
        let out_dir = dir.path().join(name);
        let mut args =
            vec!["query", "busiest-day-pages", "--input", s(&log), "--out", s(&out_dir), "--block-size", "8K"];
        args.extend_from_slice(extra);
        let out = mrloglab(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (stdout(&out), fs::read_to_string(out_dir.join("part-00000")).unwrap(), out_dir)
    };
    let (plain_text, plain, plain_dir) = run("plain", &[]);
    // block 0 is read from node 0, its lowest replica
    let (failed_text, failed, _) = run("failed", &["--fail-node", "0"]);
    let (other_text, other, _) = run("other", &["--fail-node", "3"]);
    assert_eq!(plain, failed);
    assert_eq!(plain, other);
    assert!(other_text.contains("map tasks rescheduled: 0"), "{other_text}");
    assert!(plain_text.contains("max_day: 2013-04-"), "{plain_text}");
    assert!(failed_text.contains("map tasks rescheduled: 1"), "{failed_text}");
    assert!(plain_dir.join("job1").join("part-00000").exists());
    assert!(plain_dir.join("job2").join("part-00000").exists());
}

#[test]
fn grep_counts_lines() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_corpus(dir.path(), "log", LogFormatDescriptor::apache_combined(), 1500);
    let expected = fs::read_to_string(&log).unwrap().lines().filter(|l| l.contains("Googlebot")).count();
    let out_dir = dir.path().join("grep");
    let out = mrloglab(&["grep", "--word", "Googlebot", "--input", s(&log), "--out", s(&out_dir)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(out_dir.join("part-00000")).unwrap(), format!("Googlebot\t{expected}\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_corpus(dir.path(), "log", LogFormatDescriptor::iis_full(), 50);
    let out_dir = dir.path().join("out");
    let code = |args: &[&str]| mrloglab(args).status.code().unwrap();

    assert_eq!(code(&["analyze", "frequency", "--input", s(&log)]), 2);
    assert_eq!(code(&["analyze", "frequency", "--input", s(&log), "--out", s(&out_dir), "--fail-node", "9"]), 2);

    let garbage = dir.path().join("garbage");
    fs::write(&garbage, "this is not\na log file\n").unwrap();
    assert_eq!(code(&["detect", "--input", s(&garbage)]), 3);

    let comments = dir.path().join("comments");
    fs::write(&comments, "#Software: IIS\n\n#Fields: date time\n").unwrap();
    assert_eq!(code(&["detect", "--input", s(&comments)]), 6);

    let unparseable = dir.path().join("unparseable");
    fs::write(&unparseable, "x\ny\n").unwrap();
    assert_eq!(
        code(&[
            "query",
            "busiest-day-pages",
            "--input",
            s(&unparseable),
            "--out",
            s(&out_dir),
            "--format",
            "IIS_W3C:full"
        ]),
        4
    );

    assert_eq!(code(&["detect", "--input", s(&dir.path().join("missing"))]), 5);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = mrloglab(&[
        "bench",
        "--sizes",
        "0.05,0.1",
        "--job",
        "frequency",
        "--out",
        s(&csv),
        "--repetitions",
        "1",
        "--work-dir",
        s(&dir.path().join("work")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("job,size_mb,iteration,running_time_s,normalized_s_per_100mb,workers,cache"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row[0], "frequency");
        let size: f64 = row[1].parse().unwrap();
        let t: f64 = row[3].parse().unwrap();
        let normalized: f64 = row[4].parse().unwrap();
        assert!((normalized - t * 100.0 / size).abs() <= 1e-6 * normalized.max(1.0));
        assert_eq!(row[6], "false");
    }
}
