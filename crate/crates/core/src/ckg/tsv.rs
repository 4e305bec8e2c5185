//! `triples.tsv` and the `id\tkind\tname` vocabulary sidecar.
//!
//! Both are UTF-8 with LF endings and a single header line. Entity kinds are
//! not stored in `triples.tsv`; they follow from each relation's signature.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::schema::{EntityKind, Relation};
use super::store::{TripleSet, Vocabulary};
use crate::error::{Error, Result};

pub const TRIPLES_HEADER: &str = "head\trelation\ttail";
pub const VOCAB_HEADER: &str = "id\tkind\tname";

fn check_name(name: &str) -> Result<()> {
    if name.contains(['\t', '\n', '\r']) || name.is_empty() {
        return Err(Error::Format(format!("entity name {name:?} cannot be written as a TSV field")));
    }
    Ok(())
}

fn expect_header(first: Option<String>, header: &str) -> Result<()> {
    match first {
        Some(line) if line == header => Ok(()),
        _ => Err(Error::Parse {
            line: 1,
            message: format!("expected header {header:?}"),
        }),
    }
}

pub fn write_triples(mut w: impl Write, set: &TripleSet) -> Result<()> {
    writeln!(w, "{TRIPLES_HEADER}")?;
    let v = set.vocab();
    for t in set.triples() {
        let (h, tl) = (v.name(t.head), v.name(t.tail));
        check_name(h)?;
        check_name(tl)?;
        writeln!(w, "{h}\t{}\t{tl}", t.relation)?;
    }
    Ok(())
}

pub fn read_triples(r: impl BufRead) -> Result<TripleSet> {
    let mut set = TripleSet::new();
    let mut lines = r.lines();
    expect_header(lines.next().transpose()?, TRIPLES_HEADER)?;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        let [head, rel, tail] = fields[..] else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        let relation = Relation::parse(rel).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("unknown relation {rel:?}"),
        })?;
        if head.is_empty() || tail.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty entity name".into(),
            });
        }
        set.insert(head, relation, tail);
    }
    Ok(set)
}

pub fn save_triples(path: impl AsRef<Path>, set: &TripleSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_triples(&mut w, set)?;
    w.flush()?;
    Ok(())
}

pub fn load_triples(path: impl AsRef<Path>) -> Result<TripleSet> {
    read_triples(BufReader::new(File::open(path)?))
}

pub fn write_vocab(mut w: impl Write, vocab: &Vocabulary) -> Result<()> {
    writeln!(w, "{VOCAB_HEADER}")?;
    for (id, kind, name) in vocab.iter() {
        check_name(name)?;
        writeln!(w, "{id}\t{kind}\t{name}")?;
    }
    Ok(())
}

pub fn read_vocab(r: impl BufRead) -> Result<Vocabulary> {
    let mut vocab = Vocabulary::new();
    let mut lines = r.lines();
    expect_header(lines.next().transpose()?, VOCAB_HEADER)?;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let bad = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, kind, name] = fields[..] else {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        };
        let id: usize = id.parse().map_err(|_| bad(format!("bad id {id:?}")))?;
        let kind = EntityKind::parse(kind).ok_or_else(|| bad(format!("unknown kind {kind:?}")))?;
        if id != vocab.len() {
            return Err(bad(format!("ids must be contiguous, expected {}", vocab.len())));
        }
        if vocab.get(kind, name).is_some() {
            return Err(bad(format!("duplicate {kind} {name:?}")));
        }
        vocab.intern(kind, name);
    }
    Ok(vocab)
}

pub fn save_vocab(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vocab(&mut w, vocab)?;
    w.flush()?;
    Ok(())
}

pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary> {
    read_vocab(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn render(set: &TripleSet) -> String {
        let mut buf = Vec::new();
        write_triples(&mut buf, set).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_set_is_header_only() {
        assert_eq!(render(&TripleSet::new()), "head\trelation\ttail\n");
    }

    #[test]
    fn one_triple_line() {
        let mut s = TripleSet::new();
        s.insert("u1", Relation::UserHasTag, "female");
        assert_eq!(render(&s), "head\trelation\ttail\nu1\tuser-has-tag\tfemale\n");
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let src = "head\trelation\ttail\nu1\tuser-has-tag\tfemale\nu2\tuser-has-tag\n";
        assert!(matches!(read_triples(src.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let src = "head\trelation\ttail\nu1\tlikes\tfemale\n";
        assert!(matches!(read_triples(src.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_triples("nope\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn vocab_round_trip() {
        let mut s = TripleSet::new();
        s.insert("u1", Relation::UserHasTag, "female");
        s.insert("i1", Relation::ItemBelongsToCategory, "dress");
        let mut buf = Vec::new();
        write_vocab(&mut buf, s.vocab()).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("id\tkind\tname\n0\tuser\tu1\n1\tuser_tag\tfemale\n"));
        assert_eq!(&read_vocab(buf.as_slice()).unwrap(), s.vocab());
    }

    proptest! {
        #[test]
        fn random_sets_round_trip(raw in prop::collection::vec((0usize..40, 0usize..9, 0usize..40), 0..300)) {
            let mut s = TripleSet::new();
            for (h, r, t) in raw {
                s.insert(&format!("h{h}"), Relation::ALL[r], &format!("t{t}"));
            }
            let text = render(&s);
            let back = read_triples(text.as_bytes()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
