//! Plain-text parameter dump of a [`ClassifierHead`].
//!
//! ```text
//! infogain-head 1
//! input_dim <d>
//! hidden_units <h, 0 for a linear head>
//! num_classes <C>
//! dropout_rate <p>
//! hidden_weights <h> <d>      (omitted when h = 0)
//! <h lines of d values>
//! hidden_bias <h>             (omitted when h = 0)
//! <1 line of h values>
//! output_weights <C> <h'>
//! <C lines of h' values, h' = h or d>
//! output_bias <C>
//! <1 line of C values>
//! ```
//!
//! Values are space separated with 17 significant digits, so a write/read
//! cycle reproduces every parameter bit for bit.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ClassifierHead, DenseLayer};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

const MAGIC: &str = "infogain-head 1";

pub fn write_checkpoint(head: &ClassifierHead, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_to(head, &mut w).map_err(|e| Error::io(path, e))
}

fn write_to(head: &ClassifierHead, w: &mut impl Write) -> std::io::Result<()> {
    let hidden_units = head.hidden().map_or(0, |h| h.outputs());
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "input_dim {}", head.input_dim())?;
    writeln!(w, "hidden_units {hidden_units}")?;
    writeln!(w, "num_classes {}", head.num_classes())?;
    writeln!(w, "dropout_rate {}", fmt_f64(head.dropout_rate()))?;
    if let Some(h) = head.hidden() {
        write_layer(w, "hidden", h)?;
    }
    write_layer(w, "output", head.output())?;
    w.flush()
}

fn write_layer(w: &mut impl Write, name: &str, layer: &DenseLayer) -> std::io::Result<()> {
    writeln!(w, "{name}_weights {} {}", layer.outputs(), layer.inputs())?;
    for o in 0..layer.outputs() {
        writeln!(w, "{}", join(layer.row(o)))?;
    }
    writeln!(w, "{name}_bias {}", layer.outputs())?;
    writeln!(w, "{}", join(layer.bias()))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::Checkpoint(e.to_string())),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Checkpoint(format!("line {}: {msg}", self.line))
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(&format!("expected `{key}`")));
        }
        Ok(parts.map(str::to_owned).collect())
    }

    fn keyed_usize(&mut self, key: &str) -> Result<Vec<usize>> {
        let parts = self.keyed(key)?;
        parts
            .iter()
            .map(|p| p.parse().map_err(|_| self.err(&format!("bad integer `{p}`"))))
            .collect()
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(&format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(self.err(&format!("expected {n} values, found {}", values.len())));
        }
        Ok(values)
    }

    fn layer(&mut self, name: &str, outputs: usize, inputs: usize) -> Result<DenseLayer> {
        if self.keyed_usize(&format!("{name}_weights"))? != [outputs, inputs] {
            return Err(self.err(&format!("{name}_weights shape does not match header")));
        }
        let mut weights = Vec::with_capacity(outputs * inputs);
        for _ in 0..outputs {
            weights.extend(self.values(inputs)?);
        }
        if self.keyed_usize(&format!("{name}_bias"))? != [outputs] {
            return Err(self.err(&format!("{name}_bias length does not match header")));
        }
        let bias = self.values(outputs)?;
        DenseLayer::from_parts(inputs, outputs, weights, bias)
    }
}

pub fn read_checkpoint(path: &Path) -> Result<ClassifierHead> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_from(BufReader::new(file))
}

fn read_from(reader: impl BufRead) -> Result<ClassifierHead> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    if lines.next()?.trim() != MAGIC {
        return Err(lines.err("not a classifier head checkpoint"));
    }
    let single = |lines: &mut Lines<_>, key: &str| -> Result<usize> {
        match lines.keyed_usize(key)?.as_slice() {
            [v] => Ok(*v),
            _ => Err(lines.err(&format!("`{key}` takes one value"))),
        }
    };
    let input_dim = single(&mut lines, "input_dim")?;
    let hidden_units = single(&mut lines, "hidden_units")?;
    let num_classes = single(&mut lines, "num_classes")?;
    let dropout_rate = match lines.keyed("dropout_rate")?.as_slice() {
        [v] => v.parse::<f64>().map_err(|_| lines.err("bad dropout_rate"))?,
        _ => return Err(lines.err("`dropout_rate` takes one value")),
    };
    let hidden = (hidden_units > 0)
        .then(|| lines.layer("hidden", hidden_units, input_dim))
        .transpose()?;
    let width = if hidden_units > 0 { hidden_units } else { input_dim };
    let output = lines.layer("output", num_classes, width)?;
    ClassifierHead::from_layers(hidden, output, dropout_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Architecture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn perturbed(arch: &Architecture) -> ClassifierHead {
        let head = ClassifierHead::initialize(3, 4, arch, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut out = head.output().clone();
        out.weights_mut().iter_mut().for_each(|w| *w = rng.random::<f64>() / 3.0);
        out.bias_mut().iter_mut().for_each(|b| *b = -rng.random::<f64>() * 1e-7);
        head.with_output(out)
    }

    #[test]
    fn round_trip_is_exact() {
        for arch in [Architecture::default(), Architecture::linear(0.0)] {
            let head = perturbed(&arch);
            let mut buf = Vec::new();
            write_to(&head, &mut buf).unwrap();
            let back = read_from(buf.as_slice()).unwrap();
            assert_eq!(back, head);
        }
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let head = perturbed(&Architecture::default());
        let mut buf = Vec::new();
        write_to(&head, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(read_from(truncated.as_bytes()).is_err());
        assert!(read_from("hello\n".as_bytes()).is_err());
    }
}
