//! Plain-text plan grammar: parsing and canonical serialization.
//!
//! A plan file is a sequence of parallel segments separated by semicolons,
//! each segment a comma-separated list of jobs:
//!
//! ```text
//! J1(1,0,0), J2(2,1,0);
//! J3(2,2,R1[0..5],true), J4(2,2,R1[5..10],true), J5(3,0,R1 R2);
//! J7(5,1,R2 R3 R5);
//! ```
//!
//! A job is `J<id>(<function>,<threads>,<input>[,true|false])`. The input is
//! either an integer — `0` for no input, `n > 0` to draw `n` chunks from the
//! run's initial pool — or a whitespace-separated list of result references
//! `R<id>` with an optional half-open chunk range `[start..end]`. Whitespace
//! and newlines are insignificant and `#` starts a comment to end of line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::error::ValidationError;
use crate::model::{
    AlgorithmPlan, ChunkRange, InputBinding, JobId, JobSpec, ResultRef, SegmentPlan,
};

/// Position of a syntax problem, 1-based, pointing into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("syntax error at {0}")]
    Syntax(ParseDiagnostic),
    #[error("invalid plan: {0}")]
    Validation(#[from] ValidationError),
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> PlanError {
        PlanError::Syntax(ParseDiagnostic {
            line: self.line,
            column: self.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<(), PlanError> {
        self.skip_trivia();
        match self.peek() {
            Some(got) if got == c => {
                self.bump();
                Ok(())
            }
            Some(got) => Err(self.error(format!(
                "expected '{}', found '{}'",
                c as char, got as char
            ))),
            None => Err(self.error(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_trivia();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn uint(&mut self) -> Result<u64, PlanError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {}
            Some(c) => return Err(self.error(format!("expected a number, found '{}'", c as char))),
            None => return Err(self.error("expected a number, found end of input")),
        }
        let mut value: u64 = 0;
        while let Some(c) = self.peek() {
            if !c.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((c - b'0') as u64))
                .ok_or_else(|| self.error("number too large"))?;
            self.bump();
        }
        Ok(value)
    }

    fn uint32(&mut self) -> Result<u32, PlanError> {
        let v = self.uint()?;
        u32::try_from(v).map_err(|_| self.error("number exceeds 32-bit range"))
    }

    fn keyword(&mut self) -> Result<String, PlanError> {
        self.skip_trivia();
        let mut word = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphabetic() {
                word.push(c as char);
                self.bump();
            } else {
                break;
            }
        }
        if word.is_empty() {
            return Err(self.error("expected a word"));
        }
        Ok(word)
    }

    fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.pos >= self.src.len()
    }
}

/// Parses plan text into a validated [`AlgorithmPlan`].
pub fn parse_plan(source: &str) -> Result<AlgorithmPlan, PlanError> {
    let mut s = Scanner::new(source);
    let mut segments = Vec::new();
    loop {
        segments.push(parse_segment(&mut s)?);
        if s.eat(b';') {
            if s.at_end() {
                break;
            }
            continue;
        }
        if s.at_end() {
            break;
        }
        return Err(s.error("expected ',', ';' or end of plan"));
    }
    let plan = AlgorithmPlan::new(segments);
    plan.validate()?;
    Ok(plan)
}

fn parse_segment(s: &mut Scanner) -> Result<SegmentPlan, PlanError> {
    let mut jobs = vec![parse_job(s)?];
    while s.eat(b',') {
        jobs.push(parse_job(s)?);
    }
    Ok(SegmentPlan::new(jobs))
}

fn parse_job(s: &mut Scanner) -> Result<JobSpec, PlanError> {
    s.skip_trivia();
    match s.peek() {
        Some(b'J') => {
            s.bump();
        }
        _ => return Err(s.error("expected a job ('J<id>(...)')")),
    }
    let id = s.uint()?;
    s.expect(b'(')?;
    let function_id = s.uint32()?;
    s.expect(b',')?;
    let threads = s.uint32()?;
    s.expect(b',')?;
    let input = parse_input(s)?;
    let no_send = if s.eat(b',') {
        let word = s.keyword()?;
        match word.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(s.error(format!("expected 'true' or 'false', found '{other}'"))),
        }
    } else {
        false
    };
    s.expect(b')')?;
    Ok(JobSpec {
        id: JobId(id),
        function_id,
        threads,
        input,
        no_send,
    })
}

fn parse_input(s: &mut Scanner) -> Result<InputBinding, PlanError> {
    s.skip_trivia();
    match s.peek() {
        Some(c) if c.is_ascii_digit() => {
            let count = s.uint32()?;
            if count == 0 {
                Ok(InputBinding::None)
            } else {
                Ok(InputBinding::Pool(count))
            }
        }
        Some(b'R') => {
            let mut refs = vec![parse_ref(s)?];
            loop {
                s.skip_trivia();
                if s.peek() == Some(b'R') {
                    refs.push(parse_ref(s)?);
                } else {
                    break;
                }
            }
            Ok(InputBinding::Refs(refs))
        }
        _ => Err(s.error("expected a chunk count or result references")),
    }
}

fn parse_ref(s: &mut Scanner) -> Result<ResultRef, PlanError> {
    s.expect(b'R')?;
    let producer = JobId(s.uint()?);
    if s.eat(b'[') {
        let start = s.uint32()?;
        s.expect(b'.')?;
        s.expect(b'.')?;
        let end = s.uint32()?;
        s.expect(b']')?;
        if start > end {
            return Err(PlanError::Validation(ValidationError::BadRange {
                job: producer,
                start: start as usize,
                end: end as usize,
            }));
        }
        Ok(ResultRef {
            producer,
            range: Some(ChunkRange { start, end }),
        })
    } else {
        Ok(ResultRef {
            producer,
            range: None,
        })
    }
}

/// Canonical plan text: one segment per line, a space after job commas,
/// ranges printed explicitly, the no-send flag only when set.
///
/// `parse_plan(serialize_plan(p))` is structurally equal to `p`.
pub fn serialize_plan(plan: &AlgorithmPlan) -> String {
    let mut out = String::new();
    for segment in &plan.segments {
        let mut first = true;
        for job in &segment.jobs {
            if !first {
                out.push_str(", ");
            }
            first = false;
            write!(out, "J{}({},{},", job.id.0, job.function_id, job.threads).unwrap();
            match &job.input {
                InputBinding::None => out.push('0'),
                InputBinding::Pool(n) => write!(out, "{n}").unwrap(),
                InputBinding::Refs(refs) => {
                    let mut first_ref = true;
                    for r in refs {
                        if !first_ref {
                            out.push(' ');
                        }
                        first_ref = false;
                        write!(out, "{r}").unwrap();
                    }
                }
            }
            if job.no_send {
                out.push_str(",true");
            }
            out.push(')');
        }
        out.push_str(";\n");
    }
    out.pop();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "J1(1,0,0), J2(2,1,0);\n\
                          J3(2,2,R1[0..5],true), J4(2,2,R1[5..10],true), J5(3,0,R1 R2),\n\
                          \u{20}\u{20}J6(4,0,R1 R2);\n\
                          J7(5,1, R2 R3 R4 R5);\n";

    #[test]
    fn parses_the_sample_plan() {
        let plan = parse_plan(SAMPLE).unwrap();
        let counts: Vec<usize> = plan.segments.iter().map(|s| s.jobs.len()).collect();
        assert_eq!(counts, vec![2, 4, 1]);

        let j3 = &plan.segments[1].jobs[0];
        assert_eq!(j3.id, JobId(3));
        assert_eq!(j3.function_id, 2);
        assert_eq!(j3.threads, 2);
        assert!(j3.no_send);
        assert_eq!(
            j3.input,
            InputBinding::Refs(vec![ResultRef::slice(JobId(1), 0, 5).unwrap()])
        );

        let j4 = &plan.segments[1].jobs[1];
        assert_eq!(
            j4.input,
            InputBinding::Refs(vec![ResultRef::slice(JobId(1), 5, 10).unwrap()])
        );

        let j7 = &plan.segments[2].jobs[0];
        assert_eq!(
            j7.input,
            InputBinding::Refs(vec![
                ResultRef::all(JobId(2)),
                ResultRef::all(JobId(3)),
                ResultRef::all(JobId(4)),
                ResultRef::all(JobId(5)),
            ])
        );
    }

    #[test]
    fn parses_minimal_plan() {
        let plan = parse_plan("J1(1,0,0);").unwrap();
        assert_eq!(plan.segments.len(), 1);
        let j1 = &plan.segments[0].jobs[0];
        assert_eq!(j1.input, InputBinding::None);
        assert!(!j1.no_send);
    }

    #[test]
    fn trailing_semicolon_is_optional() {
        assert_eq!(parse_plan("J1(1,0,0)").unwrap(), parse_plan("J1(1,0,0);").unwrap());
    }

    #[test]
    fn comments_and_whitespace_are_ignored() {
        let text = "# a plan\n  J1(1, 0, 0) , J2(1,0,0); # segment one\nJ3(1,0, R1 # inline\n R2);";
        let plan = parse_plan(text).unwrap();
        assert_eq!(plan.segments.len(), 2);
        assert_eq!(plan.segments[1].jobs[0].input.refs().len(), 2);
    }

    #[test]
    fn self_reference_is_rejected() {
        let err = parse_plan("J1(1,0,R1);").unwrap_err();
        assert!(matches!(
            err,
            PlanError::Validation(ValidationError::ForwardReference { .. })
        ));
    }

    #[test]
    fn reversed_range_is_rejected() {
        let err = parse_plan("J1(1,0,0); J2(1,0,R1[5..2]);").unwrap_err();
        assert!(matches!(
            err,
            PlanError::Validation(ValidationError::BadRange { .. })
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = parse_plan("J1(1,0,0); J1(1,0,0);").unwrap_err();
        assert!(matches!(
            err,
            PlanError::Validation(ValidationError::DuplicateJobId(JobId(1)))
        ));
    }

    #[test]
    fn syntax_errors_point_into_the_source() {
        let src = "J1(1,0,0);\nJ2(1,0,0,maybe);";
        match parse_plan(src).unwrap_err() {
            PlanError::Syntax(d) => {
                assert_eq!(d.line, 2);
                assert!(d.column >= 1 && d.column <= src.lines().nth(1).unwrap().len() + 1);
                assert!(d.message.contains("true"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn serialization_is_a_fixpoint_for_minimal_plan() {
        let plan = parse_plan("J1(1,0,0);").unwrap();
        assert_eq!(serialize_plan(&plan), "J1(1,0,0);");
    }

    #[test]
    fn sample_plan_round_trips() {
        let plan = parse_plan(SAMPLE).unwrap();
        let text = serialize_plan(&plan);
        let reparsed = parse_plan(&text).unwrap();
        assert_eq!(plan, reparsed);
    }

    #[test]
    fn no_send_false_is_elided() {
        let plan = parse_plan("J1(1,0,0,false);").unwrap();
        assert_eq!(serialize_plan(&plan), "J1(1,0,0);");
    }

    fn arb_plan() -> impl Strategy<Value = AlgorithmPlan> {
        // segments of 1..4 jobs; refs target earlier segments only
        proptest::collection::vec(
            proptest::collection::vec((1u32..5, 0u32..4, any::<bool>(), 0usize..3), 1..4),
            1..4,
        )
        .prop_map(|raw| {
            let mut next_id = 1u64;
            let mut earlier: Vec<JobId> = Vec::new();
            let mut segments = Vec::new();
            for seg in raw {
                let mut jobs = Vec::new();
                let mut this_segment = Vec::new();
                for (function_id, threads, no_send, shape) in seg {
                    let id = JobId(next_id);
                    next_id += 1;
                    let input = match shape {
                        0 => InputBinding::None,
                        1 => InputBinding::Pool(1 + (threads % 3)),
                        _ if !earlier.is_empty() => {
                            let producer = earlier[(threads as usize) % earlier.len()];
                            let range = if no_send {
                                Some(ChunkRange {
                                    start: 0,
                                    end: threads % 4,
                                })
                            } else {
                                None
                            };
                            InputBinding::Refs(vec![ResultRef { producer, range }])
                        }
                        _ => InputBinding::None,
                    };
                    jobs.push(JobSpec {
                        id,
                        function_id,
                        threads,
                        input,
                        no_send,
                    });
                    this_segment.push(id);
                }
                earlier.extend(this_segment);
                segments.push(SegmentPlan::new(jobs));
            }
            AlgorithmPlan::new(segments)
        })
    }

    proptest! {
        #[test]
        fn any_valid_plan_round_trips(plan in arb_plan()) {
            prop_assume!(plan.validate().is_ok());
            let text = serialize_plan(&plan);
            let reparsed = parse_plan(&text).unwrap();
            prop_assert_eq!(plan, reparsed);
        }
    }
}
