use std::io::Write;
use std::process::{Command, Output, Stdio};

use collide::ingest::{hash_token, write_binary};
use collide::report::{ReportBody, RunReport};
use collide::{DiscreteDistribution, Entropy};

fn collide(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_collide"))
        .args(args)
        .env_remove("COLLIDE_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn collide");
    // regime may stop reading early
    if let Err(e) = child.stdin.take().unwrap().write_all(stdin) {
        assert_eq!(e.kind(), std::io::ErrorKind::BrokenPipe);
    }
    child.wait_with_output().unwrap()
}

fn report(out: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("valid report")
}

fn text_lines(tokens: &[u64]) -> Vec<u8> {
    tokens.iter().map(|t| format!("sym-{t}\n")).collect::<String>().into_bytes()
}

#[test]
fn estimate_runs_planned_sample_count() {
    let samples = DiscreteDistribution::uniform(16).unwrap().sample(136, 3);
    let out = collide(
        &["estimate", "-d", "2", "--eps", "1", "--delta", "0.0996", "--entropy-bound", "4"],
        &text_lines(&samples),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let Some(ReportBody::Estimate { plan, estimate }) = r.result else {
        panic!("not an estimate report");
    };
    let plan = plan.unwrap();
    assert_eq!((plan.batch_size, plan.n_batches, plan.n_total), (17, 8, 136));
    assert_eq!((estimate.batch_size, estimate.n_batches), (17, 8));
    assert_eq!(estimate.n_dropped, 0);
}

#[test]
fn constant_input_has_zero_entropy() {
    let input = "x\n".repeat(500);
    let out = collide(&["estimate", "--eps", "0.5"], input.as_bytes());
    assert_eq!(out.status.code(), Some(0));
    let Some(ReportBody::Estimate { estimate, .. }) = report(&out).result else {
        panic!()
    };
    assert_eq!(estimate.p_hat, 1.0);
    assert_eq!(estimate.renyi_entropy_bits, Entropy::Exact(0.0));
}

#[test]
fn empty_input_is_insufficient() {
    let out = collide(&["estimate"], b"");
    assert_eq!(out.status.code(), Some(2));
    let err = report(&out).error.expect("error block");
    assert_eq!(err.kind, "insufficient_data");
    assert_eq!(err.available, Some(0));
    assert!(err.required.unwrap() > 0);
}

#[test]
fn short_planned_input_reports_required_count() {
    let out = collide(&["estimate", "--eps", "1", "--delta", "0.0996", "--entropy-bound", "4"], b"a\nb\n");
    assert_eq!(out.status.code(), Some(2));
    let err = report(&out).error.unwrap();
    assert_eq!((err.required, err.available), (Some(136), Some(2)));
}

#[test]
fn invalid_flags_use_distinct_exit_code() {
    assert_eq!(collide(&["estimate", "--eps", "1.5"], b"a\n").status.code(), Some(64));
    assert_eq!(collide(&["estimate", "-d", "1"], b"a\n").status.code(), Some(64));
    assert_eq!(collide(&["frobnicate"], b"").status.code(), Some(64));
    assert_eq!(
        collide(&["estimate", "--batch-size", "10", "--entropy-bound", "3"], b"").status.code(),
        Some(64)
    );
    assert_eq!(collide(&["bench", "--dist", "gauss:m=3", "--runs", "1"], b"").status.code(), Some(64));
    assert_eq!(collide(&["--help"], b"").status.code(), Some(0));
}

#[test]
fn malformed_binary_input() {
    let out = collide(&["estimate", "--binary"], &[1, 2, 3]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn text_and_binary_inputs_agree() {
    let samples = DiscreteDistribution::zipf(40, 1.2).unwrap().sample(3000, 9);
    let text = text_lines(&samples);
    let hashed: Vec<u64> = samples
        .iter()
        .map(|t| hash_token(format!("sym-{t}").as_bytes()))
        .collect();
    let mut bin = Vec::new();
    write_binary(&mut bin, &hashed).unwrap();
    let flags = ["estimate", "-d", "3", "--eps", "0.5", "--delta", "0.05"];
    let a = report(&collide(&flags, &text));
    let mut bflags = flags.to_vec();
    bflags.push("--binary");
    let b = report(&collide(&bflags, &bin));
    assert_eq!(a.result, b.result);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let samples = DiscreteDistribution::geometric(30, 0.8).unwrap().sample(5000, 2);
    let input = text_lines(&samples);
    let a = collide(&["estimate", "--batch-size", "40"], &input);
    let b = collide(&["estimate", "--batch-size", "40"], &input);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r.format_version, "collide-report/1");
    assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
    assert_eq!(r.to_json().as_bytes(), a.stdout.as_slice());
}

#[test]
fn plan_subcommand() {
    let out = collide(&["plan", "-d", "2", "--eps", "1", "--delta", "0.0996", "--entropy-bound", "4"], b"");
    assert_eq!(out.status.code(), Some(0));
    let Some(ReportBody::Plan(plan)) = report(&out).result else { panic!() };
    assert_eq!(plan.n_total, 136);

    let out = collide(&["plan", "-d", "3", "--entropy-bound", "0"], b"");
    let Some(ReportBody::Plan(plan)) = report(&out).result else { panic!() };
    assert_eq!(plan.batch_size, 19);
}

#[test]
fn regime_subcommand() {
    let out = collide(&["regime", "--lambda-max", "8"], "a\n".repeat(200).as_bytes());
    assert_eq!(out.status.code(), Some(0));
    let Some(ReportBody::Regime(r)) = report(&out).result else { panic!() };
    assert_eq!(r.lambda, 1);
    assert!(r.contains(1.0));

    let samples = DiscreteDistribution::uniform(256).unwrap().sample(200_000, 4);
    let out = collide(&["regime", "--lambda-max", "12", "--delta", "0.1"], &text_lines(&samples));
    assert_eq!(out.status.code(), Some(0));
    let Some(ReportBody::Regime(r)) = report(&out).result else { panic!() };
    assert!(r.contains(1.0 / 256.0), "{r:?}");

    let out = collide(&["regime", "--lambda-max", "12"], &text_lines(&samples[..300]));
    assert_eq!(out.status.code(), Some(2));
    let err = report(&out).error.unwrap();
    assert!(err.last_completed_lambda.is_some());
}

#[test]
fn bench_csv_is_deterministic() {
    let args = ["bench", "--dist", "uniform:m=64", "--runs", "20", "--seed", "5"];
    let a = collide(&args, b"");
    let b = collide(&args, b"");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("run,estimator,p_true,p_hat,rel_err,covered"));
    assert_eq!(lines.count(), 20);

    let c = collide(&args, b"");
    let mut env_seeded = Command::new(env!("CARGO_BIN_EXE_collide"));
    env_seeded
        .args(["bench", "--dist", "uniform:m=64", "--runs", "20"])
        .env("COLLIDE_SEED", "5");
    assert_eq!(env_seeded.output().unwrap().stdout, c.stdout);
}

#[test]
fn bench_point_mass_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let out = collide(
        &["bench", "--dist", "point", "--runs", "1", "--report", path.to_str().unwrap()],
        b"",
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row, "0,mean,1.0,1.0,0.0,true");
    let r = RunReport::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let Some(ReportBody::Bench(summary)) = r.result else { panic!() };
    assert_eq!((summary.runs, summary.failures), (1, 0));
}

#[test]
fn bench_median_of_means() {
    let out = collide(
        &["bench", "--dist", "uniform:m=16", "--runs", "5", "--estimator", "median-of-means", "--groups", "9"],
        b"",
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",median-of-means,")));
    let out = collide(
        &["bench", "--dist", "uniform:m=16", "--runs", "5", "--estimator", "median-of-means", "--groups", "100000"],
        b"",
    );
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn sample_subcommand_feeds_estimate() {
    let out = collide(&["sample", "--dist", "uniform:m=4", "-n", "1000", "--seed", "1", "--binary"], b"");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout.len(), 8000);
    let est = collide(&["estimate", "--binary", "--eps", "0.5"], &out.stdout);
    let Some(ReportBody::Estimate { estimate, .. }) = report(&est).result else { panic!() };
    assert!((estimate.p_hat - 0.25).abs() < 0.1);

    let text = collide(&["sample", "--dist", "point", "-n", "3"], b"");
    assert_eq!(text.stdout, b"0\n0\n0\n");
}

#[test]
fn timing_is_opt_in() {
    let input = "a\nb\n".repeat(400);
    let plain = report(&collide(&["estimate"], input.as_bytes()));
    assert!(plain.stats.wall_clock_secs.is_none());
    let timed = report(&collide(&["estimate", "--timing"], input.as_bytes()));
    assert!(timed.stats.wall_clock_secs.is_some());
    assert!(timed.stats.tokens_per_sec.is_some());
}
