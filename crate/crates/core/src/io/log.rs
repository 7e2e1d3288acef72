use std::io::{BufRead, Write};

use crate::dlcm::{EventLog, PopulationEvent};
use crate::error::{Error, Result};

/// One JSON object per line, in log order.
pub fn write_event_log<W: Write>(mut w: W, log: &EventLog) -> Result<()> {
    for e in &log.events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn event_log_to_string(log: &EventLog) -> String {
    let mut buf = Vec::new();
    write_event_log(&mut buf, log).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Parse a JSON-lines log. Blank lines are skipped; a malformed line or a
/// timestamp earlier than its predecessor is an error naming the line.
pub fn read_event_log<R: BufRead>(r: R) -> Result<EventLog> {
    let mut events: Vec<PopulationEvent> = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: PopulationEvent = serde_json::from_str(&line).map_err(|err| Error::Malformed {
            line: k + 1,
            message: err.to_string(),
        })?;
        if let Some(prev) = events.last() {
            if !(e.t >= prev.t) {
                return Err(Error::Malformed {
                    line: k + 1,
                    message: format!("timestamp {} precedes {}", e.t, prev.t),
                });
            }
        }
        events.push(e);
    }
    Ok(EventLog { events })
}
