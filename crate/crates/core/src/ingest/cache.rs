use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BlockRecord, IngestError};

/// One NDJSON line (without the trailing newline).
pub fn encode_block(block: &BlockRecord) -> String {
    serde_json::to_string(block).expect("BlockRecord serializes infallibly")
}

/// Writes one JSON object per block, each terminated by `\n`.
pub fn cache_write(path: &Path, blocks: &[BlockRecord]) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    for b in blocks {
        out.write_all(encode_block(b).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn cache_read(path: &Path) -> Result<Vec<BlockRecord>, IngestError> {
    let reader = BufReader::new(File::open(path)?);
    let mut blocks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let corrupt = |message: String| IngestError::CacheLine { line: i + 1, message };
        let block: BlockRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        block.check().map_err(corrupt)?;
        blocks.push(block);
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_blocks, SynthConfig};

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.ndjson");
        cache_write(&p, &[]).unwrap();
        assert_eq!(std::fs::read(&p).unwrap().len(), 0);
        assert!(cache_read(&p).unwrap().is_empty());
    }

    #[test]
    fn single_block_is_one_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.ndjson");
        let blocks = synth_blocks(3, 1, &SynthConfig::default());
        cache_write(&p, &blocks).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.ends_with('\n'));
        assert_eq!(cache_read(&p).unwrap(), blocks);
    }

    #[test]
    fn corrupt_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ndjson");
        let blocks = synth_blocks(3, 2, &SynthConfig::default());
        let mut text = String::new();
        text.push_str(&encode_block(&blocks[0]));
        text.push('\n');
        text.push_str("{\"number\": \"0xzz\"}\n");
        std::fs::write(&p, text).unwrap();
        match cache_read(&p) {
            Err(IngestError::CacheLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected line error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(cache_read(Path::new("/nonexistent/blocks.ndjson")), Err(IngestError::Io(_))));
    }
}
