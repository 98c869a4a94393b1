//! End-to-end runs of the `cpmp-dlts` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpmp_dlts::bench::{read_oracle_csv, read_results_csv};
use cpmp_dlts::model::{read_instance, GroupClass};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmp-dlts"))
        .args(args)
        .output()
        .expect("binary runs")
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

fn fails(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

fn generate(dir: &Path, class: &str, count: usize, seed: u64) {
    ok(&[
        "generate",
        "--stacks",
        "3",
        "--tiers",
        "4",
        "--class",
        class,
        "--count",
        &count.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        p(dir),
    ]);
}

#[test]
fn generate_is_deterministic_and_balanced() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, empty, mixed) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("empty"),
        tmp.path().join("mixed"),
    );
    generate(&a, "g1", 5, 11);
    generate(&b, "g1", 5, 11);
    let instances: Vec<_> = files(&a)
        .into_iter()
        .filter(|f| f.extension().is_some_and(|e| e == "cpmp"))
        .collect();
    assert_eq!(instances.len(), 5);
    for f in &instances {
        let other = b.join(f.file_name().unwrap());
        assert_eq!(fs::read(f).unwrap(), fs::read(other).unwrap());
    }

    generate(&empty, "g1", 0, 0);
    assert_eq!(files(&empty), vec![empty.join("manifest.json")]);

    // 3 stacks of 2 generation tiers hold 6 containers, divisible by 1, 2, 3
    generate(&mixed, "g123", 6, 0);
    let mut counts = [0usize; 3];
    for f in files(&mixed) {
        if f.extension().is_some_and(|e| e == "cpmp") {
            let class = GroupClass::infer(&read_instance(&f).unwrap().bay).unwrap();
            counts[class.multiplicity() - 1] += 1;
        }
    }
    assert_eq!(counts, [2, 2, 2]);
}

#[test]
fn pipeline_runs_and_reruns_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let inst = dir.join("inst");
    let labels = dir.join("labels");
    let policy = dir.join("policy.bin");
    let value = dir.join("value.bin");
    let results = dir.join("results.csv");
    let gap = dir.join("gap.csv");
    generate(&inst, "g1", 24, 5);

    ok(&[
        "solve-exact",
        "--instances",
        p(&inst),
        "--out",
        p(&labels),
        "--reproducible",
    ]);
    let oracle = labels.join("oracle.csv");
    assert_eq!(read_oracle_csv(&oracle).unwrap().len(), 24);

    let train = |head: &str, out: &Path| {
        ok(&[
            "train",
            "--instances",
            p(&inst),
            "--labels",
            p(&labels),
            "--head",
            head,
            "--swl",
            "1",
            "--nswl",
            "2",
            "--local-width",
            "4",
            "--dense-width",
            "8",
            "--epochs",
            "5",
            "--out",
            p(out),
        ])
    };
    let summary = train("policy", &policy);
    // tier scale 4, per-stack 3*(4*4+4), hidden 12*8+8, output 8*6+6
    assert!(
        summary.starts_with(&format!("parameters: {}", 4 + 3 * 20 + 104 + 54)),
        "{summary}"
    );
    train("value", &value);

    let solve = |out: &Path| {
        ok(&[
            "solve-dlts",
            "--instances",
            p(&inst),
            "--policy",
            p(&policy),
            "--value",
            p(&value),
            "--strategy",
            "lds",
            "--no-time-limit",
            "--out",
            p(out),
            "--reproducible",
        ])
    };
    solve(&results);
    let rows = read_results_csv(&results).unwrap();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r.solved && r.class == "G1"));

    ok(&[
        "evaluate",
        "--results",
        p(&results),
        "--oracle",
        p(&oracle),
        "--out",
        p(&gap),
    ]);
    let table = fs::read_to_string(&gap).unwrap();
    assert!(table.starts_with("#schema=gap-table/1\n"));
    assert!(table.lines().any(|l| l.starts_with("G1,")));
    assert!(table.lines().any(|l| l.starts_with("all,")));

    // the tuned configuration feeds back into solve-dlts
    let board = dir.join("tune.csv");
    ok(&[
        "tune",
        "--instances",
        p(&inst),
        "--oracle",
        p(&oracle),
        "--policy",
        p(&policy),
        "--value",
        p(&value),
        "--strategies",
        "lds,wbs",
        "--prunes",
        "constant",
        "--ps",
        "0.5",
        "--ks",
        "1",
        "--ds",
        "1",
        "--no-time-limit",
        "--out",
        p(&board),
    ]);
    assert_eq!(fs::read_to_string(&board).unwrap().lines().count(), 4);
    let tuned = dir.join("tuned.csv");
    ok(&[
        "solve-dlts",
        "--instances",
        p(&inst),
        "--policy",
        p(&policy),
        "--value",
        p(&value),
        "--config",
        p(&dir.join("tune.csv.best.toml")),
        "--no-time-limit",
        "--out",
        p(&tuned),
    ]);
    assert_eq!(read_results_csv(&tuned).unwrap().len(), 24);

    // rerunning from the manifests rewrites identical bytes
    let before: Vec<Vec<u8>> = [&policy, &value, &results, &oracle]
        .iter()
        .map(|f| fs::read(f).unwrap())
        .collect();
    for m in [
        labels.join("manifest.json"),
        dir.join("policy.bin.manifest.json"),
        dir.join("value.bin.manifest.json"),
        dir.join("results.csv.manifest.json"),
    ] {
        ok(&["rerun", "--manifest", p(&m)]);
    }
    let after: Vec<Vec<u8>> = [&policy, &value, &results, &oracle]
        .iter()
        .map(|f| fs::read(f).unwrap())
        .collect();
    assert!(before == after);
}

#[test]
fn invalid_requests_fail_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let inst = dir.join("inst");
    let labels = dir.join("labels");
    let nothing = dir.join("nothing");
    fs::create_dir_all(&nothing).unwrap();
    generate(&inst, "g1", 3, 1);
    ok(&["solve-exact", "--instances", p(&inst), "--out", p(&labels)]);

    let err = fails(&[
        "train",
        "--instances",
        p(&nothing),
        "--labels",
        p(&labels),
        "--out",
        p(&dir.join("w.bin")),
    ]);
    assert!(err.to_lowercase().contains("empty"), "{err}");

    let err = fails(&[
        "solve-dlts",
        "--instances",
        p(&inst),
        "--policy",
        p(&dir.join("missing.bin")),
        "--strategy",
        "wbs",
        "--out",
        p(&dir.join("r.csv")),
    ]);
    assert!(err.contains("value"), "{err}");

    // a results file naming an instance the oracle never saw
    let results = dir.join("r.csv");
    fs::write(
        &results,
        "#schema=dlts-results/1\n\
         id,class,moves,nodes,policy_queries,value_queries,time,solved\n\
         ghost,G1,3,10,10,0,0.0,true\n",
    )
    .unwrap();
    let oracle = labels.join("oracle.csv");
    let err = fails(&[
        "evaluate",
        "--results",
        p(&results),
        "--oracle",
        p(&oracle),
        "--out",
        p(&dir.join("g.csv")),
    ]);
    assert!(err.contains("ghost"), "{err}");

    let text = fs::read_to_string(&results).unwrap();
    fs::write(&results, text.replace("dlts-results/1", "dlts-results/9")).unwrap();
    let err = fails(&[
        "evaluate",
        "--results",
        p(&results),
        "--oracle",
        p(&oracle),
        "--out",
        p(&dir.join("g.csv")),
    ]);
    assert!(err.contains("version"), "{err}");
}
