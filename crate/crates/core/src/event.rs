//! The session's model-event log.

use crate::value::ValueId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallVia {
    Hook,
    Corpus,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// A traced value depended on an unmodeled call.
    MissingModel {
        callee: String,
        call_text: String,
        line: u32,
        reported_at: u32,
    },
    Call {
        callee: String,
        args: Vec<ValueId>,
        via: CallVia,
    },
    Write {
        address: String,
        value: String,
    },
    Diagnostic {
        message: String,
    },
    UnexpandedMacro {
        name: String,
        line: u32,
    },
    /// Output of a `verbose` trace spec.
    Trace {
        line: u32,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelEvent {
    pub seq: u64,
    pub kind: EventKind,
}

#[derive(Debug, Default)]
pub struct EventLog {
    events: Vec<ModelEvent>,
    delivered: usize,
}

impl EventLog {
    pub fn push(&mut self, kind: EventKind) -> u64 {
        let seq = self.events.len() as u64;
        self.events.push(ModelEvent { seq, kind });
        seq
    }

    pub fn all(&self) -> &[ModelEvent] {
        &self.events
    }

    /// Events not yet handed out by a previous call.
    pub fn take_new(&mut self) -> Vec<ModelEvent> {
        let new = self.events[self.delivered..].to_vec();
        self.delivered = self.events.len();
        new
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Text printed for an event in a transcript, if any.
pub fn render(event: &ModelEvent) -> Option<String> {
    match &event.kind {
        EventKind::Trace { text, .. } => Some(text.clone()),
        EventKind::MissingModel {
            call_text,
            line,
            reported_at,
            ..
        } => Some(format!(
            "Line {reported_at}: Could not verbose because missing {call_text} on line {line}"
        )),
        EventKind::Diagnostic { message } => Some(format!("warning: {message}")),
        EventKind::Call { .. } | EventKind::Write { .. } | EventKind::UnexpandedMacro { .. } => None,
    }
}
