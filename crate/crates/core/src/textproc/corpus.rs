//! Raw review corpora: delimited text with a header row, or JSON lines.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything unknown is treated as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "tsv" || ext == "tab" => CorpusFormat::Tsv,
            Some(ext) if ext == "jsonl" || ext == "ndjson" || ext == "json" => CorpusFormat::Jsonl,
            _ => CorpusFormat::Csv,
        }
    }
}

/// Which columns (or JSON keys) hold the text, label and category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub text: String,
    pub label: String,
    pub category: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            text: "text".into(),
            label: "label".into(),
            category: "category".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// 1-based line in the source file.
    pub line: usize,
    pub text: String,
    pub label: String,
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Malformed {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<RawRecord>,
    pub malformed: Vec<Malformed>,
}

pub fn read_corpus(path: &Path, format: CorpusFormat, columns: &ColumnMap) -> Result<Corpus> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&bytes, format, columns)
}

pub fn parse_corpus(bytes: &[u8], format: CorpusFormat, columns: &ColumnMap) -> Result<Corpus> {
    match format {
        CorpusFormat::Csv => parse_delimited(bytes, b',', columns),
        CorpusFormat::Tsv => parse_delimited(bytes, b'\t', columns),
        CorpusFormat::Jsonl => Ok(parse_jsonl(bytes, columns)),
    }
}

fn parse_delimited(bytes: &[u8], delimiter: u8, columns: &ColumnMap) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(corpus);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .quoting(delimiter == b',')
        .from_reader(bytes);
    let headers = reader
        .byte_headers()
        .map_err(|e| Error::Data(format!("corpus header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name.as_bytes());
    let text_col = find(&columns.text)
        .ok_or_else(|| Error::Config(format!("corpus has no `{}` column", columns.text)))?;
    let label_col = find(&columns.label)
        .ok_or_else(|| Error::Config(format!("corpus has no `{}` column", columns.label)))?;
    let category_col = find(&columns.category);

    let mut row = csv::ByteRecord::new();
    loop {
        let line = reader.position().line() as usize;
        match reader.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                corpus.malformed.push(Malformed {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        }
        let line = row.position().map(|p| p.line() as usize).unwrap_or(line);
        if row.len() == 1 && row.get(0).is_some_and(|f| f.is_empty()) {
            continue;
        }
        let field = |i: usize| -> std::result::Result<String, String> {
            let raw = row.get(i).ok_or_else(|| format!("missing column {}", i + 1))?;
            std::str::from_utf8(raw)
                .map(str::to_owned)
                .map_err(|e| format!("invalid UTF-8 at byte {} of column {}", e.valid_up_to(), i + 1))
        };
        let parsed = (|| {
            let text = field(text_col)?;
            let label = field(label_col)?;
            if label.trim().is_empty() {
                return Err("empty label".to_string());
            }
            let category = match category_col {
                Some(c) => Some(field(c)?),
                None => None,
            };
            Ok(RawRecord {
                line,
                text,
                label: label.trim().to_owned(),
                category,
            })
        })();
        match parsed {
            Ok(r) => corpus.records.push(r),
            Err(reason) => corpus.malformed.push(Malformed { line, reason }),
        }
    }
    Ok(corpus)
}

fn parse_jsonl(bytes: &[u8], columns: &ColumnMap) -> Corpus {
    let mut corpus = Corpus::default();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = i + 1;
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let parsed = (|| {
            let text = std::str::from_utf8(raw)
                .map_err(|e| format!("invalid UTF-8 at byte {}", e.valid_up_to()))?;
            let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
            let obj = value.as_object().ok_or("record is not an object")?;
            let text = obj
                .get(&columns.text)
                .and_then(Value::as_str)
                .ok_or_else(|| format!("missing string `{}`", columns.text))?;
            let label = match obj.get(&columns.label) {
                Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_owned(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(format!("missing label `{}`", columns.label)),
            };
            let category = obj
                .get(&columns.category)
                .and_then(Value::as_str)
                .map(str::to_owned);
            Ok(RawRecord {
                line,
                text: text.to_owned(),
                label,
                category,
            })
        })();
        match parsed {
            Ok(r) => corpus.records.push(r),
            Err(reason) => corpus.malformed.push(Malformed { line, reason }),
        }
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_quotes_and_custom_columns() {
        let data = "id,comment,rating,cat\n1,\"خوب، عالی\",positive,Mobile\n2,بد,negative,Mobile\n";
        let cols = ColumnMap {
            text: "comment".into(),
            label: "rating".into(),
            category: "cat".into(),
        };
        let c = parse_corpus(data.as_bytes(), CorpusFormat::Csv, &cols).unwrap();
        assert!(c.malformed.is_empty());
        assert_eq!(c.records.len(), 2);
        assert_eq!(c.records[0].text, "خوب، عالی");
        assert_eq!(c.records[1].line, 3);
        assert_eq!(c.records[1].category.as_deref(), Some("Mobile"));
    }

    #[test]
    fn tsv_short_rows_are_malformed() {
        let data = "text\tlabel\nعالی\t1\nفقط متن\n\tneutral\n";
        let c = parse_corpus(data.as_bytes(), CorpusFormat::Tsv, &ColumnMap::default()).unwrap();
        assert_eq!(c.records.len(), 2);
        assert_eq!(c.malformed.len(), 1);
        assert_eq!(c.malformed[0].line, 3);
        assert_eq!(c.records[1].text, "");
        assert!(c.records[0].category.is_none());
    }

    #[test]
    fn missing_text_column_is_config_error() {
        let data = "body,label\nx,1\n";
        let err = parse_corpus(data.as_bytes(), CorpusFormat::Csv, &ColumnMap::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn jsonl_records_and_errors() {
        let data = b"{\"text\":\"\xd8\xae\xd9\x88\xd8\xa8\",\"label\":1,\"category\":\"IT\"}\n\nnot json\n{\"text\":\"x\"}\n{\"text\":\"\xff\",\"label\":0}\n";
        let c = parse_corpus(data, CorpusFormat::Jsonl, &ColumnMap::default()).unwrap();
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.records[0].text, "خوب");
        assert_eq!(c.records[0].label, "1");
        let lines: Vec<usize> = c.malformed.iter().map(|m| m.line).collect();
        assert_eq!(lines, [3, 4, 5]);
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        let c = parse_corpus(b"", CorpusFormat::Csv, &ColumnMap::default()).unwrap();
        assert!(c.records.is_empty() && c.malformed.is_empty());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(CorpusFormat::from_path(Path::new("a.TSV")), CorpusFormat::Tsv);
        assert_eq!(CorpusFormat::from_path(Path::new("a.jsonl")), CorpusFormat::Jsonl);
        assert_eq!(CorpusFormat::from_path(Path::new("a")), CorpusFormat::Csv);
    }
}
