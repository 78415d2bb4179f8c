//! One solver child process and its line-oriented reply stream.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::{SolverConfig, SolverError};

pub(crate) struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    stderr: Arc<Mutex<String>>,
    sync: u64,
}

pub(crate) enum ReadFail {
    Timeout,
    Closed,
}

pub(crate) struct Request<'a> {
    pub preamble: &'a str,
    pub body: &'a str,
    pub want_model: bool,
    pub want_core: bool,
    pub timeout: Duration,
    pub grace: Duration,
}

/// What a query produced, before interpretation.
pub(crate) struct RawReply {
    pub status: String,
    /// Model, core or reason text, depending on `status`.
    pub payload: Option<String>,
}

/// Tracks parenthesis depth across reply lines, ignoring string literals
/// and quoted symbols.
fn depth_delta(line: &str, in_str: &mut bool, in_quote: &mut bool) -> i64 {
    let mut d = 0;
    for c in line.chars() {
        match c {
            '"' if !*in_quote => *in_str = !*in_str,
            '|' if !*in_str => *in_quote = !*in_quote,
            '(' if !*in_str && !*in_quote => d += 1,
            ')' if !*in_str && !*in_quote => d -= 1,
            _ => {}
        }
    }
    d
}

impl Session {
    pub fn spawn(config: &SolverConfig) -> Result<Session, SolverError> {
        let mut child = Command::new(&config.binary)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| SolverError::Spawn { binary: config.binary.clone(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut err_pipe = child.stderr.take().expect("piped stderr");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                sink.lock().unwrap().push_str(&String::from_utf8_lossy(&buf[..n]));
            }
        });
        Ok(Session { child, stdin, lines, stderr, sync: 0 })
    }

    fn crash(&mut self, detail: &str) -> SolverError {
        // Give the stderr thread a moment to drain before reporting.
        let status = self.child.try_wait().ok().flatten();
        thread::sleep(Duration::from_millis(20));
        let stderr = self.stderr.lock().unwrap().clone();
        SolverError::Crash {
            detail: match status {
                Some(s) => format!("{detail} ({s})"),
                None => detail.to_string(),
            },
            stderr,
        }
    }

    fn send(&mut self, text: &str, transcript: &mut String) -> Result<(), SolverError> {
        transcript.push_str(text);
        if self.stdin.write_all(text.as_bytes()).and_then(|_| self.stdin.flush()).is_err() {
            return Err(self.crash("solver closed its input"));
        }
        Ok(())
    }

    /// Reads one complete s-expression or atom reply.
    fn read_reply(&mut self, deadline: Instant) -> Result<String, ReadFail> {
        let mut buf = String::new();
        let (mut depth, mut in_str, mut in_quote) = (0i64, false, false);
        loop {
            let wait = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(wait) {
                Ok(l) => l,
                Err(RecvTimeoutError::Timeout) => return Err(ReadFail::Timeout),
                Err(RecvTimeoutError::Disconnected) => return Err(ReadFail::Closed),
            };
            if buf.is_empty() && (line.trim().is_empty() || line.trim_start().starts_with(';')) {
                continue;
            }
            depth += depth_delta(&line, &mut in_str, &mut in_quote);
            if !buf.is_empty() {
                buf.push('\n');
            }
            buf.push_str(&line);
            if depth <= 0 && !in_str && !in_quote {
                return Ok(buf.trim().to_string());
            }
        }
    }

    fn expect_reply(&mut self, deadline: Instant, transcript: &mut String) -> Result<Option<String>, SolverError> {
        match self.read_reply(deadline) {
            Ok(r) => {
                for l in r.lines() {
                    transcript.push_str("; ");
                    transcript.push_str(l);
                    transcript.push('\n');
                }
                Ok(Some(r))
            }
            Err(ReadFail::Timeout) => Ok(None),
            Err(ReadFail::Closed) => Err(self.crash("solver exited unexpectedly")),
        }
    }

    /// Runs one query from a clean state. Returns `Ok(None)` when the solver
    /// stopped responding within the deadline; the session must then be
    /// discarded.
    pub fn query(&mut self, req: &Request<'_>, transcript: &mut String) -> Result<Option<RawReply>, SolverError> {
        let Request { preamble, body, want_model, want_core, timeout, grace } = *req;
        self.sync += 1;
        let token = format!("__sync_{}", self.sync);
        self.send(&format!("(reset)\n{preamble}{body}(echo \"{token}\")\n"), transcript)?;
        let deadline = Instant::now() + grace;
        let quoted = format!("\"{token}\"");
        loop {
            let Some(reply) = self.expect_reply(deadline, transcript)? else { return Ok(None) };
            match reply.as_str() {
                r if r == quoted || r == token => break,
                "success" | "unsupported" => {}
                r => return Err(SolverError::Protocol { reply: r.to_string(), detail: "rejected a command".into() }),
            }
        }

        self.send("(check-sat)\n", transcript)?;
        let deadline = Instant::now() + timeout + grace;
        let Some(status) = self.expect_reply(deadline, transcript)? else { return Ok(None) };
        let follow_up = match status.as_str() {
            "sat" if want_model => Some("(get-model)\n"),
            "unsat" if want_core => Some("(get-unsat-core)\n"),
            "unknown" => Some("(get-info :reason-unknown)\n"),
            "sat" | "unsat" => None,
            other => {
                return Err(SolverError::Protocol {
                    reply: other.to_string(),
                    detail: "unexpected check-sat reply".into(),
                })
            }
        };
        let payload = match follow_up {
            Some(cmd) => {
                self.send(cmd, transcript)?;
                let deadline = Instant::now() + grace;
                let Some(p) = self.expect_reply(deadline, transcript)? else { return Ok(None) };
                if p.starts_with("(error") {
                    return Err(SolverError::Protocol { reply: p, detail: format!("reply to {}", cmd.trim()) });
                }
                Some(p)
            }
            None => None,
        };
        Ok(Some(RawReply { status, payload }))
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
