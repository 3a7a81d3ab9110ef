use std::io::{self, Write};

use serde::Serialize;

use super::types::Step;

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn steps_to_jsonl(steps: &[Step]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, steps).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ConsAccess, ConsKey, ProcessId, RegKey, Slot, StepKind, Value};

    #[test]
    fn records_only_carry_present_fields() {
        let p1 = ProcessId::new(1);
        let steps = vec![
            Step {
                t: 0,
                proc: p1,
                kind: StepKind::Write,
                reg: Some(RegKey::new(p1, Slot::Prop(2))),
                value: Some(Value::Int(1)),
                fd: None,
                cons: None,
            },
            Step {
                t: 1,
                proc: p1,
                kind: StepKind::Query,
                reg: None,
                value: None,
                fd: Some(ProcessId::new(2)),
                cons: None,
            },
            Step {
                t: 2,
                proc: p1,
                kind: StepKind::Cons,
                reg: None,
                value: None,
                fd: None,
                cons: Some(ConsAccess {
                    key: ConsKey { proc: p1, ell: 3, r: 1 },
                    proposed: 0,
                    returned: 1,
                }),
            },
        ];
        let text = steps_to_jsonl(&steps);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"t":0,"proc":1,"kind":"write","reg":"p1.prop[2]","value":1}"#);
        assert_eq!(lines[1], r#"{"t":1,"proc":1,"kind":"query","fd":2}"#);
        assert_eq!(
            lines[2],
            r#"{"t":2,"proc":1,"kind":"cons-access","cons_id":"cons[p1,3,1]","proposal":0,"value":1}"#
        );
    }
}
