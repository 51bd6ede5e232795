//! Line-oriented debugger front end, interactive or driven by a script.

use std::io::{self, BufRead, Write};

use crate::dtsi;
use crate::event::{render, EventKind};
use crate::interp::{BranchQuery, Frontend, Resume, Session, Stop};
use crate::token::FileId;

const HELP: &str = "\
b LINE | b FILE:LINE   set a breakpoint
c                      continue after a stop
s                      step to the next statement
xc NAME                examine a variable: (region, offset) = value
trace NAME             provenance of a variable's value
verbose FN PATTERN     print FN's arguments on each call (x = show, _ = skip)
policy MODE            symbolic branches: ask, assume-true, assume-false, fail
q                      quit";

/// Counts of things that make a batch run fail.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Outcome {
    pub command_errors: usize,
    pub missing_models: usize,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.command_errors == 0 && self.missing_models == 0
    }
}

pub struct Repl<'io> {
    input: Box<dyn BufRead + 'io>,
    out: Box<dyn Write + 'io>,
    err: Box<dyn Write + 'io>,
    batch: bool,
    outcome: Outcome,
    quit: bool,
}

impl<'io> Repl<'io> {
    /// In batch mode every command read is echoed after the prompt, so the
    /// output reads like an interactive transcript.
    pub fn new(input: Box<dyn BufRead + 'io>, out: Box<dyn Write + 'io>, err: Box<dyn Write + 'io>, batch: bool) -> Self {
        Repl { input, out, err, batch, outcome: Outcome::default(), quit: false }
    }

    pub fn run(&mut self, s: &mut Session) -> io::Result<Outcome> {
        self.flush_events(s)?;
        self.banner(s)?;
        if !self.choose_device(s)? {
            return Ok(self.outcome);
        }
        while !self.quit {
            let Some(line) = self.read_command("ssi > ")? else { break };
            self.command(s, &line, false)?;
            self.flush_events(s)?;
        }
        self.out.flush()?;
        Ok(self.outcome)
    }

    fn banner(&mut self, s: &Session) -> io::Result<()> {
        let desc = s.corpus.macro_strings("MODULE_DESCRIPTION");
        let authors = s.corpus.macro_strings("MODULE_AUTHOR");
        let license = s.corpus.macro_strings("MODULE_LICENSE");
        if desc.is_empty() && authors.is_empty() && license.is_empty() {
            return Ok(());
        }
        writeln!(self.out, "Loaded driver:")?;
        if !desc.is_empty() {
            writeln!(self.out, "    Description: {}", desc.join(" "))?;
        }
        if !authors.is_empty() {
            let names: Vec<String> = authors.iter().map(|a| strip_email(a)).collect();
            writeln!(self.out, "    Author(s): {}", names.join(", "))?;
        }
        if !license.is_empty() {
            writeln!(self.out, "    License: {}", license.join(" "))?;
        }
        Ok(())
    }

    fn choose_device(&mut self, s: &mut Session) -> io::Result<bool> {
        let Some((_, tree)) = s.dtsi.first() else { return Ok(true) };
        let devices = dtsi::list_compatibles(tree);
        if devices.is_empty() {
            return Ok(true);
        }
        writeln!(self.out, "Choose device:")?;
        for (i, d) in devices.iter().enumerate() {
            writeln!(self.out, "{i} : {d}")?;
        }
        loop {
            let Some(answer) = self.read_command("Choice: ")? else { return Ok(false) };
            match answer.trim().parse::<usize>().ok().and_then(|i| devices.get(i)) {
                Some(d) => {
                    s.chosen_device = Some(d.clone());
                    return Ok(true);
                }
                None => {
                    writeln!(self.out, "invalid choice: {}", answer.trim())?;
                    if self.batch {
                        self.outcome.command_errors += 1;
                        return Ok(false);
                    }
                }
            }
        }
    }

    /// Next non-comment line, echoed after the prompt in batch mode.
    fn read_command(&mut self, prompt: &str) -> io::Result<Option<String>> {
        loop {
            if !self.batch {
                write!(self.out, "{prompt}")?;
                self.out.flush()?;
            }
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            let line = line.trim_end_matches(['\n', '\r']).to_string();
            if self.batch {
                if line.trim_start().starts_with('#') {
                    continue;
                }
                writeln!(self.out, "{prompt}{line}")?;
            }
            return Ok(Some(line));
        }
    }

    fn flush_events(&mut self, s: &mut Session) -> io::Result<()> {
        for e in s.events.take_new() {
            let Some(text) = render(&e) else { continue };
            match e.kind {
                EventKind::Diagnostic { .. } => writeln!(self.err, "{text}")?,
                EventKind::MissingModel { .. } => {
                    self.outcome.missing_models += 1;
                    writeln!(self.out, "{text}")?;
                }
                _ => writeln!(self.out, "{text}")?,
            }
        }
        self.out.flush()
    }

    fn error(&mut self, message: impl std::fmt::Display) -> io::Result<Option<Resume>> {
        self.outcome.command_errors += 1;
        writeln!(self.out, "error: {message}")?;
        Ok(None)
    }

    /// Runs one command line. While suspended, returns how to resume.
    fn command(&mut self, s: &mut Session, line: &str, suspended: bool) -> io::Result<Option<Resume>> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some((&cmd, rest)) = words.split_first() else { return Ok(None) };
        match (cmd, rest) {
            ("c" | "continue", []) | ("s" | "step", []) if !suspended => {
                writeln!(self.out, "nothing to continue")?;
                Ok(None)
            }
            ("c" | "continue", []) => Ok(Some(Resume::Continue)),
            ("s" | "step", []) => Ok(Some(Resume::Step)),
            ("q" | "quit", _) => {
                self.quit = true;
                Ok(Some(Resume::Abort))
            }
            ("help" | "?", _) => {
                writeln!(self.out, "{HELP}")?;
                let mut names: Vec<_> = s.commands.iter().map(|(n, c)| format!("{n} {}", c.params.join(" "))).collect();
                names.sort();
                for n in names {
                    writeln!(self.out, "{}", n.trim_end())?;
                }
                Ok(None)
            }
            ("b" | "break", [loc]) => match parse_location(s, loc) {
                Some((file, line)) => {
                    s.add_breakpoint(file, line);
                    Ok(None)
                }
                None => self.error(format!("bad breakpoint location `{loc}`")),
            },
            ("xc", [name]) => match s.examine(name) {
                Ok(text) => {
                    writeln!(self.out, "{text}")?;
                    Ok(None)
                }
                Err(e) => self.error(e),
            },
            ("trace", [name]) => match s.trace_value(name) {
                Ok(lines) => {
                    for l in lines {
                        writeln!(self.out, "{l}")?;
                    }
                    Ok(None)
                }
                Err(e) => self.error(e),
            },
            ("verbose", [callee, pattern @ ..]) => {
                let mut flags = Vec::new();
                for p in pattern.iter().flat_map(|p| p.chars()) {
                    match p {
                        'x' => flags.push(true),
                        '_' | '-' => flags.push(false),
                        other => return self.error(format!("bad verbose pattern character `{other}`")),
                    }
                }
                s.add_trace(callee, flags);
                Ok(None)
            }
            ("policy", [mode]) => match mode.parse() {
                Ok(p) => {
                    s.policy = p;
                    Ok(None)
                }
                Err(e) => self.error(e),
            },
            (name, args) if s.commands.contains_key(name) => {
                if suspended {
                    return self.error("cannot start a command while suspended; use c, s or q");
                }
                let mut values = Vec::new();
                for a in args {
                    match parse_int(a) {
                        Some(v) => values.push(v),
                        None => return self.error(format!("{name}: `{a}` is not an integer")),
                    }
                }
                let name = name.to_string();
                match s.run_command(&name, &values, self) {
                    Ok(_) => Ok(None),
                    Err(crate::interp::ExecError::Aborted) => Ok(None),
                    Err(e) => {
                        self.flush_events(s)?;
                        self.error(e)
                    }
                }
            }
            _ => {
                self.outcome.command_errors += 1;
                writeln!(self.out, "unknown command: {line}")?;
                Ok(None)
            }
        }
    }
}

impl Frontend for Repl<'_> {
    fn on_stop(&mut self, s: &mut Session, stop: &Stop) -> Resume {
        let r: io::Result<Resume> = (|| {
            self.flush_events(s)?;
            writeln!(self.out, "ssi :: On line {}", stop.pos.line)?;
            loop {
                let Some(line) = self.read_command("ssi > ")? else { return Ok(Resume::Abort) };
                let resume = self.command(s, &line, true)?;
                self.flush_events(s)?;
                if let Some(r) = resume {
                    return Ok(r);
                }
            }
        })();
        r.unwrap_or(Resume::Abort)
    }

    fn decide_branch(&mut self, s: &mut Session, q: &BranchQuery) -> Option<bool> {
        let r: io::Result<Option<bool>> = (|| {
            self.flush_events(s)?;
            writeln!(
                self.out,
                "line {}: `{}` depends on {}",
                q.pos.line,
                q.text,
                if q.blockers.is_empty() { "unknown values".to_string() } else { q.blockers.join(", ") }
            )?;
            loop {
                let Some(answer) = self.read_command("take branch? [y/n] ")? else { return Ok(None) };
                match answer.trim() {
                    "y" | "yes" | "t" | "true" | "1" => return Ok(Some(true)),
                    "n" | "no" | "f" | "false" | "0" => return Ok(Some(false)),
                    "q" => return Ok(None),
                    _ if self.batch => return Ok(None),
                    _ => {}
                }
            }
        })();
        r.ok().flatten()
    }
}

fn strip_email(author: &str) -> String {
    match author.find('<') {
        Some(i) => author[..i].trim().to_string(),
        None => author.trim().to_string(),
    }
}

pub fn parse_int(text: &str) -> Option<i128> {
    let (neg, t) = match text.strip_prefix('-') {
        Some(t) => (true, t),
        None => (false, text),
    };
    let v = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => i128::from_str_radix(h, 16).ok()?,
        None => t.parse().ok()?,
    };
    Some(if neg { -v } else { v })
}

/// `LINE` (first corpus file) or `FILE:LINE`.
fn parse_location(s: &Session, loc: &str) -> Option<(FileId, u32)> {
    match loc.rsplit_once(':') {
        Some((file, line)) => Some((s.corpus.file_by_name(file)?, line.parse().ok()?)),
        None => Some((s.corpus.files().next()?.id, loc.parse().ok()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hooks::Hook;
    use crate::interp::CommandSpec;

    fn run_script(s: &mut Session, script: &str) -> (String, Outcome) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let outcome = {
            let mut r = Repl::new(Box::new(script.as_bytes()), Box::new(&mut out), Box::new(&mut err), true);
            r.run(s).unwrap()
        };
        (String::from_utf8(out).unwrap(), outcome)
    }

    fn session() -> Session {
        let src = "MODULE_DESCRIPTION(\"demo\");\nMODULE_AUTHOR(\"A B <a@b>\");\nMODULE_AUTHOR(\"C D\");\nMODULE_LICENSE(\"GPL\");\n\
int go(int n)\n{\n\tint k = n * 2;\n\tpoke(k, n);\n\treturn k;\n}\n";
        let mut s = Session::from_source("m.c", src);
        s.register_hook(Hook::new("poke", "", |_| Ok(None)));
        s.commands.insert(
            "go".into(),
            CommandSpec { entry: "go".into(), params: vec!["n".into()], args: vec!["n".into()], ..Default::default() },
        );
        s
    }

    #[test]
    fn banner_trace_and_breakpoint() {
        let mut s = session();
        let (out, outcome) = run_script(&mut s, "verbose poke x _\nb 8\ngo 3\nxc k\nc\n");
        let expected = "Loaded driver:\n    Description: demo\n    Author(s): A B, C D\n    License: GPL\n\
ssi > verbose poke x _\nssi > b 8\nssi > go 3\nssi :: On line 8\nssi > xc k\n";
        assert!(out.starts_with(expected), "{out}");
        assert!(out.contains(") = 6\nssi > c\nLine 8: poke(k, n) => 6\n"), "{out}");
        assert!(outcome.success());
    }

    #[test]
    fn unknown_and_stray_continue() {
        let mut s = session();
        let (out, outcome) = run_script(&mut s, "c\nfrobnicate\n");
        assert!(out.contains("nothing to continue"));
        assert!(out.contains("unknown command: frobnicate"));
        assert_eq!(outcome.command_errors, 1);
    }

    #[test]
    fn eof_while_suspended_aborts() {
        let mut s = session();
        let (out, _) = run_script(&mut s, "b 8\ngo 1\n");
        assert!(out.ends_with("ssi :: On line 8\n"), "{out}");
        assert!(!s.is_running());
    }

    #[test]
    fn integers_parse_in_hex_and_negative() {
        assert_eq!(parse_int("0x10"), Some(16));
        assert_eq!(parse_int("-3"), Some(-3));
        assert_eq!(parse_int("x"), None);
    }
}
