//! A session attached to a running engine.
//!
//! The engine runs on its own thread and hands each event to a sink that
//! evaluates the pending filter. On a match the sink replies and then blocks
//! inside `deliver` until the next request, so snapshots read the engine
//! state as it is right after the cursor event. Both channels are
//! rendezvous channels: exactly one side runs at a time.

use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread::{self, JoinHandle};

use super::{EventSource, Filter, QueryError, QuerySession};
use crate::engine::EngineKind;
use crate::program::{Program, Strategy};
use crate::ref_engine::EngineResult;
use crate::state::{StateSnapshot, StateView};
use crate::trace::{EmissionConfig, PortSet, SinkError, TraceError, TraceEvent, TraceSink};

enum Request {
    Fget(Filter),
    Snapshot,
    Close,
}

enum Reply {
    Event(TraceEvent),
    Snapshot(StateSnapshot),
    End,
}

struct LiveSink {
    requests: Receiver<Request>,
    replies: SyncSender<Reply>,
    filter: Option<Filter>,
}

fn closed() -> SinkError {
    SinkError::Closed("query session closed".into())
}

impl LiveSink {
    /// Serves snapshot requests until the next `fget`.
    fn wait(&mut self, state: &dyn StateView) -> Result<(), SinkError> {
        loop {
            match self.requests.recv() {
                Ok(Request::Fget(f)) => {
                    self.filter = Some(f);
                    return Ok(());
                }
                Ok(Request::Snapshot) => {
                    self.replies.send(Reply::Snapshot(StateSnapshot::capture(state))).map_err(|_| closed())?
                }
                Ok(Request::Close) | Err(_) => return Err(closed()),
            }
        }
    }

    /// After the run: every further request sees the end of the trace.
    fn drain(&mut self) {
        if self.filter.take().is_some() && self.replies.send(Reply::End).is_err() {
            return;
        }
        while let Ok(Request::Fget(_) | Request::Snapshot) = self.requests.recv() {
            if self.replies.send(Reply::End).is_err() {
                return;
            }
        }
    }
}

impl TraceSink for LiveSink {
    fn deliver(&mut self, event: &TraceEvent, state: &dyn StateView) -> Result<(), SinkError> {
        if self.filter.is_none() {
            self.wait(state)?;
        }
        if self.filter.as_ref().is_some_and(|f| f.matches(event)) {
            self.filter = None;
            self.replies.send(Reply::Event(event.clone())).map_err(|_| closed())?;
            self.wait(state)?;
        }
        Ok(())
    }
}

pub struct LiveSource {
    requests: SyncSender<Request>,
    replies: Receiver<Reply>,
    handle: Option<JoinHandle<Result<EngineResult, TraceError>>>,
}

impl LiveSource {
    pub fn spawn(engine: EngineKind, program: Program, strategy: Strategy, config: EmissionConfig) -> Self {
        let (req_tx, req_rx) = sync_channel(0);
        let (rep_tx, rep_rx) = sync_channel(0);
        let handle = thread::spawn(move || {
            let mut sink = LiveSink { requests: req_rx, replies: rep_tx, filter: None };
            let result = engine.solve(&program, strategy, config, &mut sink);
            // An error here means the session sent Close.
            if result.is_ok() {
                sink.drain();
            }
            result
        });
        LiveSource { requests: req_tx, replies: rep_rx, handle: Some(handle) }
    }

    fn ask(&mut self, req: Request) -> Result<Reply, QueryError> {
        self.requests.send(req).map_err(|_| QueryError::Live("engine thread is gone".into()))?;
        self.replies.recv().map_err(|_| QueryError::Live("engine thread is gone".into()))
    }

    /// Lets the engine run to its end, discarding the remaining events.
    pub fn finish(mut self) -> Result<EngineResult, QueryError> {
        self.ask(Request::Fget(Filter::ports(PortSet::NONE)))?;
        self.join()
    }

    fn join(&mut self) -> Result<EngineResult, QueryError> {
        let _ = self.requests.send(Request::Close);
        let handle = self.handle.take().ok_or_else(|| QueryError::Live("already joined".into()))?;
        match handle.join() {
            Ok(r) => r.map_err(|e| QueryError::Live(e.to_string())),
            Err(_) => Err(QueryError::Live("engine thread panicked".into())),
        }
    }
}

impl Drop for LiveSource {
    fn drop(&mut self) {
        if self.handle.is_some() {
            let _ = self.join();
        }
    }
}

impl EventSource for LiveSource {
    fn next_matching(&mut self, filter: &Filter) -> Result<Option<TraceEvent>, QueryError> {
        match self.ask(Request::Fget(filter.clone()))? {
            Reply::Event(e) => Ok(Some(e)),
            Reply::End => Ok(None),
            Reply::Snapshot(_) => Err(QueryError::Live("protocol error".into())),
        }
    }

    fn snapshot(&mut self) -> Result<StateSnapshot, QueryError> {
        match self.ask(Request::Snapshot)? {
            Reply::Snapshot(s) => Ok(s),
            Reply::End => Err(QueryError::NoEvent),
            Reply::Event(_) => Err(QueryError::Live("protocol error".into())),
        }
    }
}

impl QuerySession<LiveSource> {
    pub fn live(engine: EngineKind, program: Program, strategy: Strategy, config: EmissionConfig) -> Self {
        QuerySession::new(LiveSource::spawn(engine, program, strategy, config))
    }

    /// Ends the session and returns the engine's result.
    pub fn finish(self) -> Result<EngineResult, QueryError> {
        self.into_source().finish()
    }
}
