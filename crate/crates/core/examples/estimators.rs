//! Compare the conditional probability estimators on simulated data.

use catci::estimators::{fit, EstimatorKind, FitOptions};
use catci::sim::simulate_discrimination_ordinal;

fn main() -> catci::Result<()> {
    let ds = simulate_discrimination_ordinal(2, 2000, false, 7)?;
    let opts = FitOptions::default();
    for kind in [
        EstimatorKind::Saturated,
        EstimatorKind::MultinomialLogistic,
        EstimatorKind::ProportionalOdds,
        EstimatorKind::ProbabilityForest,
    ] {
        let model = fit(kind, &ds, "x", &["z1", "z2"], &opts)?;
        let p = model.fitted_proba();
        let row: Vec<String> = p.row(0).iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "{:<20} converged={} row 0: [{}]",
            model.effective_kind().name(),
            model.diagnostics().converged,
            row.join(", ")
        );
    }
    let po = fit(EstimatorKind::ProportionalOdds, &ds, "x", &["z1"], &opts)?;
    println!("proportional odds intercepts: {:?}", po.ordinal_intercepts());
    Ok(())
}
