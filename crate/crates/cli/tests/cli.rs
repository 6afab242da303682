use std::path::PathBuf;
use std::process::{Command, Output};

const EX2: [&str; 6] = [
    "--prev-ci",
    "0.136,0.204",
    "--sens-ci",
    "0.837,0.918",
    "--spec-ci",
    "0.857,0.975",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_copula-ci"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("copula-ci-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn scenario_path() -> String {
    format!("{}/scenarios/two_proportions.toml", env!("CARGO_MANIFEST_DIR"))
}

const COMBINE: [&str; 10] = [
    "combine",
    "--dist",
    "beta:0.027:0.050",
    "--dist",
    "beta:0.036:0.057",
    "--expr",
    "x1*x2",
    "--sigma",
    "1,0.5;0.5,1",
    "--seed",
];

#[test]
fn combine_reports_interval_and_manifest() {
    let out = run(&[&COMBINE[..], &["7", "--n", "20000", "--method", "hdi"]].concat());
    let v = json(&out);
    let (low, upp) = (v["low"].as_f64().unwrap(), v["upp"].as_f64().unwrap());
    assert!(0.0008 < low && low < upp && upp < 0.0030, "{v}");
    for key in ["point", "method", "level", "n", "seed", "diagnostics", "manifest"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["method"], "hdi");
    assert_eq!(v["manifest"]["run"]["command"], "combine");
    assert!(v["manifest"].get("timestamp").is_none());
}

#[test]
fn identical_invocations_give_identical_output() {
    let args = [&COMBINE[..], &["3", "--n", "5000"]].concat();
    assert_eq!(stdout(&run(&args)), stdout(&run(&args)));
}

#[test]
fn replay_reproduces_every_command() {
    let cases: Vec<Vec<&str>> = vec![
        [&COMBINE[..], &["11", "--n", "5000"]].concat(),
        [
            &["adjust-prev"][..],
            &EX2,
            &[
                "--rho-sens-spec",
                "-0.5",
                "--n",
                "5000",
                "--prev",
                "0.168",
                "--sens",
                "0.88",
                "--spec",
                "0.93",
            ],
        ]
        .concat(),
        [
            &["sweep"][..],
            &EX2,
            &[
                "--rho-from",
                "0",
                "--rho-to",
                "-0.5",
                "--steps",
                "2",
                "--n",
                "2000",
                "--out",
                "json",
            ],
        ]
        .concat(),
        vec![
            "scatter",
            "--sens-ci",
            "0.837,0.918",
            "--spec-ci",
            "0.857,0.975",
            "--rho",
            "0.3",
            "--m",
            "20",
            "--out",
            "json",
        ],
        vec!["coverage", "--scenario", "SCENARIO", "--trials", "3", "--seed", "4"],
        [&COMBINE[..], &["1", "--n", "2000", "--timestamp"]].concat(),
    ];
    let scenario = scenario_path();
    for (k, case) in cases.iter().enumerate() {
        let case: Vec<&str> = case
            .iter()
            .map(|a| if *a == "SCENARIO" { scenario.as_str() } else { a })
            .collect();
        let first = stdout(&run(&case));
        let path = temp_path(&format!("replay{k}.json"));
        std::fs::write(&path, &first).unwrap();
        let again = stdout(&run(&["replay", path.to_str().unwrap()]));
        assert_eq!(first, again, "{case:?}");
        // A bare manifest works as well.
        let v: serde_json::Value = serde_json::from_str(&first).unwrap();
        std::fs::write(&path, v["manifest"].to_string()).unwrap();
        assert_eq!(first, stdout(&run(&["replay", path.to_str().unwrap()])));
    }
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let base = [&COMBINE[..], &["5", "--n", "5000"]].concat();
    let v = json(&run(&base));
    let csv = stdout(&run(&[&base[..], &["--out", "csv"]].concat()));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("low,upp,point,method,level,n,seed"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), v["low"].as_f64().unwrap());
    assert_eq!(row[1].parse::<f64>().unwrap(), v["upp"].as_f64().unwrap());
    assert_eq!(row[2].parse::<f64>().unwrap(), v["point"].as_f64().unwrap());
    assert_eq!(row[0].trim_start_matches("0.").trim_start_matches('0').len(), 17);
}

#[test]
fn boot_vals_dump() {
    let path = temp_path("boot.csv");
    let args = [
        &COMBINE[..],
        &["2", "--n", "1000", "--boot-vals", path.to_str().unwrap()],
    ]
    .concat();
    let v = json(&run(&args));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,value"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1000);
    for r in &rows {
        assert_eq!(r[0] * r[1], r[2]);
    }
    // Dumping does not change the estimate.
    let plain = json(&run(&[&COMBINE[..], &["2", "--n", "1000"]].concat()));
    assert_eq!(v["low"], plain["low"]);
    assert_eq!(v["manifest"], plain["manifest"]);
}

#[test]
fn adjust_prev_echoes_points() {
    let args = [
        &["adjust-prev"][..],
        &EX2,
        &[
            "--n",
            "5000",
            "--prev",
            "0.168",
            "--sens",
            "0.8814814814814815",
            "--spec",
            "0.9318181818181818",
        ],
    ]
    .concat();
    let v = json(&run(&args));
    assert!((v["point"].as_f64().unwrap() - 0.1227).abs() < 1e-4);
    assert_eq!(v["pointSource"], "supplied");
    assert_eq!(v["pointEstimates"]["prev"], 0.168);
}

#[test]
fn sweep_csv_shape() {
    let args = [
        &["sweep"][..],
        &EX2,
        &["--rho-from", "0", "--rho-to", "-0.9", "--steps", "9", "--n", "20000"],
    ]
    .concat();
    let csv = stdout(&run(&args));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rho,low,upp,width"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[9][0], "-0.9000000000");
    for r in &rows {
        let width: f64 = r[3].parse().unwrap();
        assert!((0.14..=0.17).contains(&width), "{r:?}");
        let digits = r[1]
            .trim_start_matches('-')
            .trim_start_matches("0.")
            .trim_start_matches('0');
        assert_eq!(digits.len(), 10, "{r:?}");
    }
}

#[test]
fn single_step_sweep_matches_adjustment() {
    let sweep = [
        &["sweep"][..],
        &EX2,
        &[
            "--rho-from",
            "-0.4",
            "--rho-to",
            "0.4",
            "--steps",
            "0",
            "--n",
            "5000",
            "--out",
            "json",
        ],
    ]
    .concat();
    let adjust = [&["adjust-prev"][..], &EX2, &["--rho-sens-spec", "-0.4", "--n", "5000"]].concat();
    let s = json(&run(&sweep));
    let a = json(&run(&adjust));
    assert_eq!(s["rows"].as_array().unwrap().len(), 1);
    assert_eq!(s["rows"][0]["low"], a["low"]);
    assert_eq!(s["rows"][0]["upp"], a["upp"]);
}

#[test]
fn scatter_output() {
    let csv = stdout(&run(&[
        "scatter",
        "--sens-ci",
        "0.837,0.918",
        "--spec-ci",
        "0.857,0.975",
        "--rho",
        "-1",
        "--m",
        "500",
    ]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sens,spec"));
    let mut pairs: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(pairs.len(), 500);
    // Perfectly antithetic: sorting by one column reverses the other.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(pairs.windows(2).all(|w| w[0].1 > w[1].1));
}

#[test]
fn coverage_json_fields() {
    let v = json(&run(&["coverage", "--scenario", &scenario_path(), "--trials", "4"]));
    for key in ["coverage", "meanWidth", "mcStdErr", "excludedTrials"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["manifest"]["run"]["scenario"]["trials"], 4);
}

#[test]
fn argument_errors_exit_2() {
    let out = run(&["combine", "--dist", "beta:0.5:0.4", "--combiner", "product"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("qLow must be < qUpp"));
    assert!(stderr(&out).contains("--dist"));

    let cases: Vec<Vec<&str>> = vec![
        vec!["adjust-prev", "--prev-ci", "0.1,0.2", "--sens-ci", "0.8,0.9"],
        [
            &["sweep"][..],
            &EX2,
            &["--rho-from", "0", "--rho-to", "1.5", "--steps", "3", "--n", "1000"],
        ]
        .concat(),
        vec!["scatter", "--sens-ci", "0.8,0.9", "--spec-ci", "0.85,0.95", "--m", "0"],
        vec!["coverage", "--scenario", "SCENARIO", "--trials", "0"],
        vec!["combine", "--dist", "beta:0.1:0.2", "--expr", "x1*", "--n", "1000"],
        vec![
            "combine",
            "--dist",
            "beta:0.1:0.2",
            "--dist",
            "beta:0.1:0.2",
            "--expr",
            "x1",
            "--n",
            "1000",
        ],
        vec![
            "combine",
            "--dist",
            "beta:0.1:0.2",
            "--combiner",
            "identity",
            "--n",
            "10",
        ],
        vec![
            "combine",
            "--dist",
            "beta:0.1:0.2",
            "--combiner",
            "identity",
            "--method",
            "bca",
        ],
        vec![
            "combine",
            "--dist",
            "beta:0.1:0.2",
            "--combiner",
            "identity",
            "--threads",
            "0",
        ],
    ];
    let scenario = scenario_path();
    for case in cases {
        let case: Vec<&str> = case
            .iter()
            .map(|a| if *a == "SCENARIO" { scenario.as_str() } else { a })
            .collect();
        let out = run(&case);
        assert_eq!(out.status.code(), Some(2), "{case:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn malformed_scenario_names_the_field() {
    let path = temp_path("bad.toml");
    std::fs::write(
        &path,
        "true_params = [0.1, 0.2]\nsample_sizes = [100, \"x\"]\ncombiner = \"product\"\n",
    )
    .unwrap();
    let out = run(&["coverage", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sample_sizes[1]"), "{}", stderr(&out));

    std::fs::write(
        &path,
        "true_params = [0.1]\nsample_sizes = [100]\ncombiner = \"product\"\ntrails = 5\n",
    )
    .unwrap();
    let out = run(&["coverage", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trails"), "{}", stderr(&out));
}

#[test]
fn numerical_failures_exit_3() {
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "adjust-prev",
            "--prev-ci",
            "0.1,0.2",
            "--sens-ci",
            "0.3,0.5",
            "--spec-ci",
            "0.3,0.5",
            "--n",
            "1000",
        ],
        vec!["combine", "--dist", "normal:-1:1", "--expr", "log(x)", "--n", "1000"],
        vec![
            "combine",
            "--dist",
            "beta:0.1:0.2",
            "--dist",
            "beta:0.1:0.2",
            "--combiner",
            "product",
            "--sigma",
            "1,0.5;0.4,1",
        ],
        vec![
            "combine",
            "--dist",
            "beta:0.1:0.2",
            "--dist",
            "beta:0.1:0.2",
            "--dist",
            "beta:0.1:0.2",
            "--combiner",
            "sum",
            "--sigma",
            "1,0.9,-0.9;0.9,1,0.9;-0.9,0.9,1",
        ],
    ];
    for case in cases {
        let out = run(&case);
        assert_eq!(out.status.code(), Some(3), "{case:?}: {}", stderr(&out));
    }
    let out = run(&[
        "adjust-prev",
        "--prev-ci",
        "0.1,0.2",
        "--sens-ci",
        "0.3,0.5",
        "--spec-ci",
        "0.3,0.5",
        "--n",
        "1000",
    ]);
    assert!(stderr(&out).contains("uninformative test"));
}

#[test]
fn help_documents_formats() {
    let help = stdout(&run(&["combine", "--help"]));
    assert!(help.contains("right associative"));
    let help = stdout(&run(&["coverage", "--help"]));
    assert!(help.contains("sample_sizes"));
}
