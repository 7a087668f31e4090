//! Simulates the reference 22 kV / 400 V transformer, identifies its
//! saturation curve and prints it next to the curve the simulation used.
//!
//! cargo run --release --example reference_run [Rc_ohms]

use std::f64::consts::{FRAC_PI_2, PI};

use satcurve::estimator::{estimate, EstimationConfig};
use satcurve::report::{QualificationRule, RunReport};
use satcurve::sim::{LoadSpec, SaturationCurve, Simulation, SourceSpec, TransformerParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rc: f64 = match std::env::args().nth(1) {
        Some(a) => a.parse()?,
        None => 2000.0,
    };
    let omega = 100.0 * PI;
    let params = TransformerParams {
        r1: 48.4,
        l1: 193.6 / omega,
        r2: 0.016,
        l2: 0.064 / omega,
        rc,
        turns_ratio: 55.0,
        vb2: 400.0,
        ib2: 125.0,
        omega,
    };
    let curve = SaturationCurve::new(vec![(0.0, 0.0), (0.02, 0.6), (0.06, 0.95), (0.3, 1.25)])?;
    let source = SourceSpec {
        amplitude: 35_600.0,
        frequency: 50.0,
        phase: FRAC_PI_2,
    };
    let sim = Simulation::new(
        params.clone(),
        curve.clone(),
        LoadSpec::OpenCircuit,
        source,
        12.0,
        5e-5,
    );
    let out = sim.run()?;

    let (est, sig) = estimate(&out.record, &EstimationConfig::from_params(&params))?;
    let report = RunReport::compare(
        &est,
        &curve,
        QualificationRule::default(),
        sig.a_hat,
        sig.rc_hat,
    );
    println!("{report}\n");
    println!(
        "{:>8} {:>10} {:>10} {:>7}",
        "x_pu", "estimated", "true", "visits"
    );
    for row in &report.rows {
        println!(
            "{:>8.3} {:>10.4} {:>10.4} {:>7}{}",
            row.x_center,
            row.lambda_estimated,
            row.lambda_true,
            row.visits,
            if row.qualified {
                ""
            } else {
                "  (not qualified)"
            }
        );
    }
    Ok(())
}
