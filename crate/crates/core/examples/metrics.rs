//! Confusion counts, precision, recall and F1 of the Suspended class,
//! including the zero-denominator convention.
//!
//! cargo run --example metrics

use xlingual::corpus::Label::{NotSuspended as N, Suspended as S};
use xlingual::eval::{binary_metrics, chance_f1, confusion, Report};

fn main() -> xlingual::Result<()> {
    let predicted = [S, S, N, N, S, N, N, N];
    let actual = [S, N, S, N, S, N, N, S];
    let m = binary_metrics(&confusion(&predicted, &actual)?);
    println!("{:?}", m.confusion);
    println!("precision {:.3} recall {:.3} F1 {:.3}", m.precision, m.recall, m.f1);

    let silent = binary_metrics(&confusion(&[N; 8], &actual)?);
    println!("no positive predictions: F1 {} precision undefined {}", silent.f1, silent.precision_undefined);

    println!("chance F1 when 30% are positive and 30% are flagged: {:.3}", chance_f1(0.3, 0.3));

    let mut report = Report::new();
    report.push_metrics("example", &m);
    print!("{}", report.to_text());
    Ok(())
}
