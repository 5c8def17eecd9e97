//! Residuals of an ordinal and a categorical target, and the statistics
//! built from them.

use catci::citest::{q1, q2, q3, target_residuals};
use catci::estimators::{EstimatorKind, FitOptions};
use catci::sim::{simulate_calibration_null_variant, NullVariant};

fn main() -> catci::Result<()> {
    let ds = simulate_calibration_null_variant(1, 1000, NullVariant::Categorical { kx: 3, ky: 4 }, 3)?;
    let opts = FitOptions::default();
    let (rx, _) = target_residuals(&ds, 0, &[2], EstimatorKind::Saturated, &opts)?.expect("x varies");
    let (ry, _) = target_residuals(&ds, 1, &[2], EstimatorKind::Saturated, &opts)?.expect("y varies");
    println!("x residual columns: {}, y residual columns: {}", rx.width(), ry.width());
    let s = q3(&rx, &ry)?;
    println!("Q3 = {:.3} on {} df, p = {:.4}", s.statistic, s.df, s.p_value());

    let binary = simulate_calibration_null_variant(1, 1000, NullVariant::StrictBinary, 3)?;
    let (bx, _) = target_residuals(&binary, 0, &[2], EstimatorKind::Saturated, &opts)?.expect("x varies");
    let (by, _) = target_residuals(&binary, 1, &[2], EstimatorKind::Saturated, &opts)?.expect("y varies");
    println!("binary x: first residuals {:?}", &bx.column(0).as_slice()[..5]);
    println!("Q1 = {:.4}", q1(&bx, &by)?.statistic);

    let mixed = simulate_calibration_null_variant(1, 1000, NullVariant::Categorical { kx: 4, ky: 2 }, 3)?;
    let (mx, _) = target_residuals(&mixed, 0, &[2], EstimatorKind::Saturated, &opts)?.expect("x varies");
    let (my, _) = target_residuals(&mixed, 1, &[2], EstimatorKind::Saturated, &opts)?.expect("y varies");
    let s = q2(&mx, &my)?;
    println!("Q2 = {:.3} on {} df, p = {:.4}", s.statistic, s.df, s.p_value());
    Ok(())
}
