//! Session files: a sequence of records, each a little-endian `u32` byte
//! length followed by one utterance state as JSON.

use std::io::Write;
use std::path::Path;

use super::{PipelineError, UtteranceState};

/// Write atomically: a sibling temporary file renamed over the target.
pub fn save_session(path: &Path, states: &[UtteranceState]) -> Result<(), PipelineError> {
    let mut buf = Vec::new();
    for s in states {
        let json = serde_json::to_vec(s).map_err(|e| PipelineError::Session(e.to_string()))?;
        let len = u32::try_from(json.len()).map_err(|_| PipelineError::Session("record too large".into()))?;
        buf.extend_from_slice(&len.to_le_bytes());
        buf.extend_from_slice(&json);
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_session(path: &Path) -> Result<Vec<UtteranceState>, PipelineError> {
    let bytes = std::fs::read(path)?;
    let mut out = Vec::new();
    let mut rest = &bytes[..];
    while !rest.is_empty() {
        let (len, tail) = rest
            .split_first_chunk::<4>()
            .ok_or_else(|| PipelineError::Session("truncated record header".into()))?;
        let len = u32::from_le_bytes(*len) as usize;
        if tail.len() < len {
            return Err(PipelineError::Session("truncated record".into()));
        }
        let (rec, tail) = tail.split_at(len);
        out.push(serde_json::from_slice(rec).map_err(|e| PipelineError::Session(e.to_string()))?);
        rest = tail;
    }
    Ok(out)
}
