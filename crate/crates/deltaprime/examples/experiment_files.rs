//! Drive the file-based experiment commands the way the CLI does.

use deltaprime::experiment::{cmd_converge, cmd_design, cmd_verify, ExperimentConfig};

fn main() {
    let dir = std::env::temp_dir().join("deltaprime_experiment_demo");
    std::fs::create_dir_all(&dir).unwrap();

    let config = ExperimentConfig {
        eps: vec![0.2, 0.1, 0.05],
        ..Default::default()
    };

    let code = cmd_verify(&config, &dir).unwrap();
    println!(
        "verify   -> exit {code}, wrote {}",
        dir.join("verify.json").display()
    );

    let code = cmd_design(&config, &dir).unwrap();
    println!("design   -> exit {code}, wrote q.csv and design.json");

    let code = cmd_converge(&config, &dir, true).unwrap();
    println!("converge -> exit {code}, wrote sweep.csv and rate.json");

    let rate = std::fs::read_to_string(dir.join("rate.json")).unwrap();
    println!("\nrate.json:\n{rate}");
    std::fs::remove_dir_all(&dir).ok();
}
