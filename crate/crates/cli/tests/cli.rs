//! End-to-end tests of the `xmlcube` binary: exit codes, the full pipeline
//! over a small dataset, and byte-determinism of re-runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xmlcube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmlcube"))
        .args(args)
        .env_remove("XMLCUBE_DATA")
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn version_exits_zero() {
    let out = xmlcube(&["--version"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("xmlcube"));
}

#[test]
fn usage_errors_exit_one() {
    // Missing required flag.
    let out = xmlcube(&["query"]);
    assert_eq!(code(&out), 1);
    // Unknown subcommand.
    let out = xmlcube(&["frobnicate"]);
    assert_eq!(code(&out), 1);
    // Out-of-range parameter.
    let dir = tempfile::tempdir().unwrap();
    let out = xmlcube(&[
        "views",
        "select",
        "--store",
        dir.path().to_str().unwrap(),
        "--workload",
        dir.path().to_str().unwrap(),
        "--theta",
        "1.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    // Missing store and no XMLCUBE_DATA.
    let out = xmlcube(&["index", "build"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let query = dir.path().join("q.xml");
    fs::write(&query, "<query><aggregate function=\"SUM\" measure=\"m\"/></query>").unwrap();
    // Store directory does not exist.
    let out = xmlcube(&[
        "query",
        "--store",
        dir.path().join("nope").to_str().unwrap(),
        "--query",
        query.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn env_var_supplies_the_store_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = Command::new(env!("CARGO_BIN_EXE_xmlcube"))
        .args(["gen", "warehouse", "--cells", "20", "--members", "4", "--out"])
        .arg(data.join("store"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_xmlcube"))
        .args(["index", "build"])
        .env("XMLCUBE_DATA", &data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("store").join("Index.xml").is_file());
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

#[test]
fn full_pipeline_on_a_small_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    // Three-dimension sample dataset.
    write(
        &base.join("mcm.xml"),
        r#"<mcm fact="Sales">
  <measure name="amount" type="decimal"/>
  <dimension name="Time"><attribute name="year" type="integer"/></dimension>
  <dimension name="Product" mandatory="false"><attribute name="sku" mandatory="false"/></dimension>
  <dimension name="Store" mandatory="false"><attribute name="city" mandatory="false"/></dimension>
</mcm>"#,
    );
    write(
        &base.join("docs/a.xml"),
        r#"<Sales amount="10.50"><Time year="1999"/><Product sku="p1"/><Store city="lyon"/></Sales>"#,
    );
    write(
        &base.join("docs/b.xml"),
        r#"<Sales amount="2.25"><Time year="1999"/><Store city="bron"/></Sales>"#,
    );
    write(
        &base.join("docs/c.xml"),
        r#"<Sales><Time year="2001"/></Sales>"#,
    );
    for (i, (year, amount, city)) in [
        (1999, "1.00", "lyon"),
        (1999, "0.50", "bron"),
        (2001, "4.00", "lyon"),
        (2001, "0.25", "bron"),
        (2001, "3.50", "lyon"),
        (2001, "1.75", "bron"),
    ]
    .iter()
    .enumerate()
    {
        write(
            &base.join(format!("docs/extra{i}.xml")),
            &format!(
                r#"<Sales amount="{amount}"><Time year="{year}"/><Store city="{city}"/></Sales>"#
            ),
        );
    }
    write(
        &base.join("query.xml"),
        r#"<query>
  <group attribute="Time.year"/>
  <aggregate function="SUM" measure="amount"/>
</query>"#,
    );

    let s = |p: &Path| p.to_str().unwrap().to_string();
    let mcm = s(&base.join("mcm.xml"));
    let docs = s(&base.join("docs"));
    let cube = s(&base.join("cube"));
    let store = s(&base.join("store"));
    let query = s(&base.join("query.xml"));

    // Ingest descriptors for the raw sources.
    assert_ok(&xmlcube(&["ingest", "--src", &docs, "--out", &s(&base.join("ods"))]));
    assert_eq!(fs::read_dir(base.join("ods")).unwrap().count(), 9);

    // Gate and build the cube: 8 facts, 1 rejection.
    let out = xmlcube(&["build-cube", "--mcm", &mcm, "--src", &docs, "--out", &cube]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("8 facts, 1 rejected"));
    assert!(base.join("cube/Schema.xml").is_file());
    let rejections = fs::read_to_string(base.join("cube/rejections.xml")).unwrap();
    assert!(rejections.contains("Sales/amount"));

    // Import into the store and index it.
    assert_ok(&xmlcube(&["import", "--cube", &cube, "--store", &store]));
    assert_ok(&xmlcube(&["index", "build", "--store", &store]));
    assert_ok(&xmlcube(&["index", "check", "--store", &store]));

    // Direct and indexed evaluation agree byte-for-byte.
    let direct = xmlcube(&["query", "--store", &store, "--query", &query]);
    assert_ok(&direct);
    let indexed = xmlcube(&[
        "query",
        "--store",
        &store,
        "--query",
        &query,
        "--via-index",
        &s(&base.join("store/Index.xml")),
    ]);
    assert_ok(&indexed);
    assert_eq!(direct.stdout, indexed.stdout);
    let text = String::from_utf8_lossy(&direct.stdout).to_string();
    assert!(text.contains(r#"value="14.25""#), "unexpected result: {text}");

    // Materialize views for a tiny workload and answer from them.
    write(&base.join("workload/q1.xml"), &fs::read_to_string(base.join("query.xml")).unwrap());
    assert_ok(&xmlcube(&[
        "views",
        "select",
        "--store",
        &store,
        "--workload",
        &s(&base.join("workload")),
        "--out",
        &s(&base.join("viewsel")),
    ]));
    assert!(base.join("viewsel/selection.xml").is_file());
    assert!(base.join("viewsel/candidates.xml").is_file());
    assert_ok(&xmlcube(&[
        "views",
        "materialize",
        "--store",
        &store,
        "--workload",
        &s(&base.join("workload")),
        "--out",
        &s(&base.join("views")),
    ]));
    let answered = xmlcube(&[
        "views",
        "answer",
        "--store",
        &store,
        "--views",
        &s(&base.join("views")),
        "--query",
        &query,
    ]);
    assert_ok(&answered);
    assert_eq!(answered.stdout, direct.stdout);

    // A query outside the views is not covered: data error.
    write(
        &base.join("outside.xml"),
        r#"<query>
  <select attribute="Product.sku" op="eq" value="p1"/>
  <aggregate function="COUNT" measure="*"/>
</query>"#,
    );
    let missed = xmlcube(&[
        "views",
        "answer",
        "--store",
        &store,
        "--views",
        &s(&base.join("views")),
        "--query",
        &s(&base.join("outside.xml")),
    ]);
    assert_eq!(code(&missed), 2);

    // Aggregation by clustering over the Time dimension.
    assert_ok(&xmlcube(&[
        "opac",
        "--store",
        &store,
        "--dimension",
        "Time",
        "--measures",
        "amount",
        "--k",
        "2",
        "--out",
        &s(&base.join("opac")),
    ]));
    for artifact in ["dendrogram.xml", "scores.xml", "aggregate-level.xml"] {
        assert!(base.join("opac").join(artifact).is_file(), "{artifact} missing");
    }
    let via_level = xmlcube(&[
        "query",
        "--store",
        &store,
        "--query",
        &query,
        "--aggregate",
        &s(&base.join("opac/aggregate-level.xml")),
    ]);
    assert_ok(&via_level);

    // Structure mining over the input documents.
    assert_ok(&xmlcube(&[
        "mine-structure",
        "--corpus",
        &docs,
        "--minsup",
        "0.5",
        "--minconf",
        "0.7",
        "--out",
        &s(&base.join("mine/rules.xml")),
    ]));
    assert!(base.join("mine/rules.xml").is_file());
    assert!(base.join("mine/minimal-dtd.xml").is_file());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();

    for run in ["one", "two"] {
        let store = s(&base.join(run).join("store"));
        assert_ok(&xmlcube(&[
            "gen", "warehouse", "--cells", "80", "--members", "8", "--seed", "5", "--out", &store,
        ]));
        assert_ok(&xmlcube(&["index", "build", "--store", &store]));
        assert_ok(&xmlcube(&[
            "gen", "workload", "--store", &store, "--queries", "4", "--seed", "9", "--out",
            &s(&base.join(run).join("workload")),
        ]));
        assert_ok(&xmlcube(&[
            "views", "materialize", "--all", "--store", &store, "--workload",
            &s(&base.join(run).join("workload")), "--out", &s(&base.join(run).join("views")),
        ]));
    }

    let mut compared = 0;
    for file in [
        "store/Dimensions.xml",
        "store/Facts.xml",
        "store/Index.xml",
        "workload/q001.xml",
    ] {
        let a = fs::read(base.join("one").join(file)).unwrap();
        let b = fs::read(base.join("two").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
        compared += 1;
    }
    // Same set of materialized views, same bytes.
    let list = |run: &str| -> Vec<String> {
        let mut names: Vec<String> = fs::read_dir(base.join(run).join("views"))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    assert_eq!(list("one"), list("two"));
    for name in list("one") {
        let a = fs::read(base.join("one/views").join(&name)).unwrap();
        let b = fs::read(base.join("two/views").join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        compared += 1;
    }
    assert!(compared >= 4);
}

#[test]
fn threads_flag_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    write(
        &base.join("mcm.xml"),
        r#"<mcm fact="F">
  <measure name="m" type="integer"/>
  <dimension name="D"><attribute name="a"/></dimension>
</mcm>"#,
    );
    for i in 0..20 {
        let body = if i % 4 == 0 {
            format!(r#"<F><D a="x{i}"/></F>"#)
        } else {
            format!(r#"<F m="{i}"><D a="x{i}"/></F>"#)
        };
        write(&base.join(format!("docs/d{i:02}.xml")), &body);
    }
    for (run, threads) in [("t1", "1"), ("t4", "4")] {
        assert_ok(&xmlcube(&[
            "--threads",
            threads,
            "build-cube",
            "--mcm",
            &s(&base.join("mcm.xml")),
            "--src",
            &s(&base.join("docs")),
            "--out",
            &s(&base.join(run)),
        ]));
    }
    let mut names: Vec<String> = fs::read_dir(base.join("t1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        let a = fs::read(base.join("t1").join(&name)).unwrap();
        let b = fs::read(base.join("t4").join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs across thread counts");
    }
}
