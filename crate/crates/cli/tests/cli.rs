use std::process::Command;

fn cqlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cqlab"))
}

#[test]
fn analytic_prints_metrics() {
    let out = cqlab()
        .args(["analytic", "--lambda1", "50", "--mu1", "161.29"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p_empty"), "{text}");
    assert!(text.contains("e_tq1"), "{text}");
}

#[test]
fn sweep_emits_csv_and_respects_seed_override() {
    let dir = std::env::temp_dir().join("cqlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let scn = dir.join("tiny.scn");
    std::fs::write(
        &scn,
        "name = tiny\nengines = analytic,sim\nlambda1 = 1\nmu1 = 4\ngamma = 1\nn1 = 8\n\
events = 60000\nsweep = lambda1\nvalues = 0.5,1.0\n",
    )
    .unwrap();
    let run = |seed: &str| {
        let out = cqlab()
            .args(["sweep", scn.to_str().unwrap(), "--seed", seed])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run("5");
    let b = run("5");
    let c = run("6");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("scenario,engine,sweep_key,sweep_value"));
    assert_eq!(a.lines().count(), 5); // header + 2 engines x 2 points
}

#[test]
fn missing_file_is_input_error() {
    let out = cqlab().args(["sweep", "/nonexistent/x.scn"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_error_is_input_error_with_line() {
    let dir = std::env::temp_dir().join("cqlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let scn = dir.join("broken.scn");
    std::fs::write(&scn, "lambda1 = 1\nmu1 = 4\nwat = 9\n").unwrap();
    let out = cqlab().args(["sweep", scn.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn validate_passes_on_exact_engines() {
    let dir = std::env::temp_dir().join("cqlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let scn = dir.join("val.scn");
    std::fs::write(
        &scn,
        "name = val\nengines = analytic,ctmc\nlambda1 = 1\nmu1 = 4\ngamma = 1\nn1 = 8\n\
sweep = lambda1\nvalues = 0.5,1.0,2.0\n",
    )
    .unwrap();
    let out = cqlab().args(["validate", scn.to_str().unwrap()]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.contains("verdict   PASS"), "{text}");
}
