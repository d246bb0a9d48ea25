//! Checks analytic gradients against central finite differences for every
//! layer family and for whole multi-task models.
//!
//! `cargo run --release --example gradient_check -- [seed]`

use resnext_mtl::verify::{gradcheck_suite, DEFAULT_EPS, DEFAULT_TOLERANCE};

fn main() -> resnext_mtl::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let report = gradcheck_suite(seed, DEFAULT_EPS, DEFAULT_TOLERANCE)?;
    print!("{}", report.to_text());
    if report.failures() > 0 {
        std::process::exit(2);
    }
    Ok(())
}
