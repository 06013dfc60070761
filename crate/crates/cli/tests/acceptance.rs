//! Runs every acceptance check and prints one line per check.

use brt_cli::suites;

const SEED: u64 = 20240601;

fn main() {
    let mut failed = Vec::new();
    for id in suites::ALL {
        let r = suites::run(id, SEED);
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} checks passed", suites::ALL.len());
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
