// Drives an experiment from a JSON config and writes its artifacts.

use rieszgas::cli::{execute, parse_config};

pub fn run_example() -> rieszgas::Result<()> {
    let out = std::env::temp_dir().join(format!("rieszgas-example-{}", std::process::id()));
    let text = format!(
        r#"{{
            "experiment": "contraction",
            "model": {{ "N": 16, "alpha": 1.0, "lambda": 1.0, "sigma_rule": "one_over_N" }},
            "t_end": 1.0,
            "replicas": 4,
            "seed": 11,
            "output_dir": {:?}
        }}"#,
        out
    );
    let config = parse_config(&text, None)?;
    let outcome = execute(&config)?;
    println!("wrote {:?} to {}", outcome.files, out.display());
    println!("exit status would be {}", outcome.exit_code());
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
