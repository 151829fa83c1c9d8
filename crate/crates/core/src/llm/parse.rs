//! Lenient extraction of the JSON replies the prompt templates ask for.

use serde_json::Value;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseShape {
    /// `[{"relationships": "..."}, ...]`
    Relations,
    /// `{"distance": <number>, "reason": "..."}`
    Distance,
    /// `{"question": "..."}`
    Question,
    /// `{"answer": "..."}`
    Answer,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Structured {
    Relations(Vec<String>),
    Distance { distance: f64, reason: String },
    Question(String),
    Answer(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no structured value found in response")]
    NoStructuredValue,
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` should be {expected}")]
    WrongType { field: &'static str, expected: &'static str },
    #[error("expected a JSON {0}")]
    WrongContainer(&'static str),
}

/// Returns the first JSON value in `text` that has the expected shape.
///
/// Surrounding prose is ignored. If some JSON value is found but none has
/// the right shape, the error describes the first candidate.
pub fn parse_structured(text: &str, shape: ResponseShape) -> Result<Structured, ParseError> {
    let mut first_err = None;
    for (i, ch) in text.char_indices() {
        if ch != '{' && ch != '[' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        let Some(Ok(value)) = stream.next() else {
            continue;
        };
        match interpret(&value, shape) {
            Ok(s) => return Ok(s),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(ParseError::NoStructuredValue))
}

fn string_field(obj: &serde_json::Map<String, Value>, field: &'static str) -> Result<String, ParseError> {
    match obj.get(field) {
        None => Err(ParseError::MissingField(field)),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(ParseError::WrongType { field, expected: "a string" }),
    }
}

fn interpret(value: &Value, shape: ResponseShape) -> Result<Structured, ParseError> {
    if shape == ResponseShape::Relations {
        let items = value.as_array().ok_or(ParseError::WrongContainer("array"))?;
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            let obj = item.as_object().ok_or(ParseError::WrongContainer("array of objects"))?;
            out.push(string_field(obj, "relationships")?);
        }
        return Ok(Structured::Relations(out));
    }
    let obj = value.as_object().ok_or(ParseError::WrongContainer("object"))?;
    match shape {
        ResponseShape::Distance => {
            let distance = match obj.get("distance") {
                None => return Err(ParseError::MissingField("distance")),
                Some(v) => v.as_f64().ok_or(ParseError::WrongType { field: "distance", expected: "a number" })?,
            };
            Ok(Structured::Distance { distance, reason: string_field(obj, "reason")? })
        }
        ResponseShape::Question => Ok(Structured::Question(string_field(obj, "question")?)),
        ResponseShape::Answer => Ok(Structured::Answer(string_field(obj, "answer")?)),
        ResponseShape::Relations => unreachable!(),
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Canonical text for a structured value, formatted like the template examples.
pub fn render_structured(value: &Structured) -> String {
    match value {
        Structured::Relations(rels) => {
            let items: Vec<String> = rels.iter().map(|r| format!("{{\"relationships\": {}}}", quote(r))).collect();
            format!("[{}]", items.join(", "))
        }
        Structured::Distance { distance, reason } => {
            let num = serde_json::to_string(distance).expect("finite distance");
            format!("{{\"distance\": {}, \"reason\": {}}}", num, quote(reason))
        }
        Structured::Question(q) => format!("{{\"question\": {}}}", quote(q)),
        Structured::Answer(a) => format!("{{\"answer\": {}}}", quote(a)),
    }
}
