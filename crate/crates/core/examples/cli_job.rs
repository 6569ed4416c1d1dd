use g2kleinian::cli::{parse_json, run, Command, JobSpec};

const JOB: &str = r#"{
  "polynomial": [[0.7, 0], -0.2, 1.1, 0.4, -0.9, 0.3, 1.5],
  "points": [[[0.1, 0.2], [-0.3, 0.05]], [[0.0, -0.1], [0.2, 0.0]]],
  "method": "both",
  "derivatives": true,
  "seed": 11
}"#;

fn main() {
    let job: JobSpec = parse_json("job", JOB).expect("valid job");
    match run(Command::Eval, &job) {
        Ok(report) => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
