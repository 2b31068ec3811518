//! Finite-difference check of every parameter group on the frozen fixture.
//!
//! cargo run --release --example gradcheck

use miarec::gradcheck::{run_gradcheck, GradcheckFixture, GradcheckOptions};

fn main() -> miarec::Result<()> {
    let report = run_gradcheck(&GradcheckFixture::new(), &GradcheckOptions::default())?;
    print!("{report}");
    println!("tolerance {:e}: {}", report.tolerance, if report.all_passed() { "all groups pass" } else { "FAILED" });
    Ok(())
}
