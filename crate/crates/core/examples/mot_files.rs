//! Writes detections and their embedding sidecar, then reads them back.

use contrast_mot::mot_io::{read_detections_with_embeddings, write_embeddings, write_records};
use contrast_mot::synth::{generate, ScenarioSpec};

fn main() -> contrast_mot::Result<()> {
    let dir = std::env::temp_dir().join("contrast-mot-files");
    std::fs::create_dir_all(&dir).map_err(|e| contrast_mot::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let s = generate(&ScenarioSpec::default())?;
    let (records, table) = s.detection_records();
    let (det, emb) = (dir.join("det.txt"), dir.join("det.emb"));
    write_records(&records, &det)?;
    write_embeddings(&table, &emb)?;

    let (back, back_table) = read_detections_with_embeddings(&det, &emb)?;
    println!("{} records, D = {}", back.len(), back_table.dim);
    println!("records identical: {}", back == records);
    println!("embeddings identical: {}", back_table == table);
    Ok(())
}
