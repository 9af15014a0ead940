use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use super::{EventSource, Filter, QueryError, QuerySession};
use crate::state::StateSnapshot;
use crate::trace::{TraceEvent, TraceReader};
use crate::validate::DomainReplay;

/// Events read from canonical trace text. Snapshots come from replaying
/// every event read so far.
pub struct StoredSource<R> {
    reader: TraceReader<R>,
    replay: DomainReplay,
}

impl<R: BufRead> StoredSource<R> {
    pub fn new(input: R) -> Self {
        StoredSource { reader: TraceReader::new(input), replay: DomainReplay::new() }
    }
}

impl<R: BufRead> EventSource for StoredSource<R> {
    fn next_matching(&mut self, filter: &Filter) -> Result<Option<TraceEvent>, QueryError> {
        for e in self.reader.by_ref() {
            let e = e?;
            self.replay.apply(&e);
            if filter.matches(&e) {
                return Ok(Some(e));
            }
        }
        Ok(None)
    }

    fn snapshot(&mut self) -> Result<StateSnapshot, QueryError> {
        Ok(self.replay.snapshot().clone())
    }
}

impl<R: BufRead> QuerySession<StoredSource<R>> {
    pub fn stored(input: R) -> Self {
        QuerySession::new(StoredSource::new(input))
    }
}

impl QuerySession<StoredSource<BufReader<File>>> {
    pub fn open(path: &Path) -> io::Result<Self> {
        Ok(QuerySession::stored(BufReader::new(File::open(path)?)))
    }
}

impl<'a> QuerySession<StoredSource<&'a [u8]>> {
    pub fn from_text(text: &'a str) -> Self {
        QuerySession::stored(text.as_bytes())
    }
}
