//! The semidefinite machinery on its own: pose a small Hermitian SDP,
//! solve it with the interior-point method, and pull a vector solution
//! out of the matrix optimum.
//!
//!     cargo run --example sdp_playground

use relaybound::sdp::{
    extract_vector, solve, ExtractOptions, HermitianSdp, Sense, SolveOptions, TraceConstraint,
};
use relaybound::{C64, CMat};

fn main() {
    // maximize <C, X> over unit-trace PSD X: the answer is the largest
    // eigenvalue of C, attained at the rank-one projector onto its
    // eigenvector. C here has eigenvalues +sqrt(5) and -sqrt(5).
    let c = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(2.0, 1.0),
            C64::new(2.0, -1.0),
            C64::new(0.0, 0.0),
        ],
    );
    let sdp = HermitianSdp::new(
        c.clone(),
        vec![TraceConstraint { a: CMat::identity(2, 2), sense: Sense::Eq, b: 1.0 }],
    );

    let sol = solve(&sdp, &SolveOptions::default());
    println!("status {:?} after {} iterations", sol.status, sol.iterations);
    println!("objective {:.12} (exact sqrt(5) = {:.12})", sol.objective, 5f64.sqrt());
    println!("duality gap {:.2e}, primal residual {:.2e}", sol.duality_gap, sol.primal_residual);
    let eigs: Vec<String> = sol.eigenvalues().iter().map(|e| format!("{e:.3e}")).collect();
    println!("solution rank {} with eigenvalues [{}]", sol.rank, eigs.join(", "));

    let vec_sol = extract_vector(&sdp, &sol, &ExtractOptions::default()).unwrap();
    println!(
        "\nextracted vector ({}): objective {:.12}",
        vec_sol.extraction, vec_sol.objective
    );
    let v = &vec_sol.v;
    println!("v = [{:.4} {:+.4}i, {:.4} {:+.4}i]", v[0].re, v[0].im, v[1].re, v[1].im);

    // Tightening a constraint moves the optimum off rank one; extraction
    // then falls back to reduction or randomization and says so.
    let boxed = HermitianSdp::new(
        CMat::identity(2, 2),
        vec![
            TraceConstraint { a: CMat::identity(2, 2), sense: Sense::Eq, b: 1.0 },
            TraceConstraint {
                a: CMat::from_partial_diagonal(2, 2, &[C64::new(1.0, 0.0)]),
                sense: Sense::Le,
                b: 0.6,
            },
        ],
    );
    let sol = solve(&boxed, &SolveOptions::default());
    let vec_sol = extract_vector(&boxed, &sol, &ExtractOptions::default()).unwrap();
    println!(
        "\nbox-constrained problem: matrix rank {}, vector via {}, objective {:.6}",
        sol.rank, vec_sol.extraction, vec_sol.objective
    );
}
