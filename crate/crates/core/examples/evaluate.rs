//! CLEAR and identity metrics on a three-frame identity switch.

use contrast_mot::metrics::evaluate;
use contrast_mot::mot_io::MotRecord;

fn main() -> contrast_mot::Result<()> {
    let bbox = [10.0, 10.0, 20.0, 40.0];
    let gt: Vec<MotRecord> = (1..=3).map(|f| MotRecord::new(f, 1, bbox, 1.0)).collect();
    let pred = vec![
        MotRecord::new(1, 1, bbox, 1.0),
        MotRecord::new(2, 1, bbox, 1.0),
        MotRecord::new(3, 2, bbox, 1.0),
    ];
    let report = evaluate(&gt, &pred, 0.5)?;
    print!("{}", report.to_text());
    println!("{}", report.summary_line());
    Ok(())
}
