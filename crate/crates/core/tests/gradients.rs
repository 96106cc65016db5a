//! Finite-difference sweep over every differentiable op and the full model.

use wavenet_core::diagnostics::gradcheck::{run_trials, GradOp};
use wavenet_core::Rng;

const TRIALS: usize = 20;

#[test]
fn every_op_matches_central_differences() {
    let mut rng = Rng::new(2024);
    for op in GradOp::ALL {
        let s = run_trials(op, TRIALS, &mut rng).unwrap();
        println!("{:<20} max rel err {:.3e} (tol {:.0e}, {} rejected)", op.to_string(), s.max_error, s.tolerance, s.rejected);
        assert!(s.passed(), "{op}: {:.3e} ≥ {:.0e}", s.max_error, s.tolerance);
    }
}
