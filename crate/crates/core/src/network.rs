//! Feed-forward ReLU networks, the `.nnet` text format, and a pointwise
//! forward evaluator.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vpolytope::{relu, LayerParams};

/// Input clamping/scaling and output rescaling from the `.nnet` header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    pub input_mean: Vec<f64>,
    pub input_range: Vec<f64>,
    pub output_mean: f64,
    pub output_range: f64,
}

impl Normalization {
    /// No clamping, zero means, unit ranges.
    pub fn identity(input_dim: usize) -> Self {
        Self {
            input_min: vec![f64::NEG_INFINITY; input_dim],
            input_max: vec![f64::INFINITY; input_dim],
            input_mean: vec![0.0; input_dim],
            input_range: vec![1.0; input_dim],
            output_mean: 0.0,
            output_range: 1.0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (name, v) in [
            ("minimums", &self.input_min),
            ("maximums", &self.input_max),
            ("means", &self.input_mean),
            ("ranges", &self.input_range),
        ] {
            if v.len() != n {
                return Err(Error::invalid(
                    "Network",
                    format!("normalization {name} has {} entries, expected {n}", v.len()),
                ));
            }
        }
        if self.input_range.iter().chain([&self.output_range]).any(|&r| r == 0.0 || !r.is_finite()) {
            return Err(Error::invalid("Network", "normalization range must be finite and nonzero"));
        }
        if self.input_min.iter().zip(&self.input_max).any(|(lo, hi)| lo > hi) {
            return Err(Error::invalid("Network", "input minimum exceeds maximum"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<LayerParams>,
    normalization: Normalization,
}

impl Network {
    pub fn new(layers: Vec<LayerParams>, normalization: Normalization) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::invalid("Network", "at least one layer required"));
        };
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(Error::invalid(
                    "Network",
                    format!(
                        "layer {} expects {} inputs but layer {} yields {}",
                        l + 2,
                        pair[1].input_dim(),
                        l + 1,
                        pair[0].output_dim()
                    ),
                ));
            }
        }
        normalization.validate(first.input_dim())?;
        Ok(Self {
            layers,
            normalization,
        })
    }

    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self> {
        let n = layers.first().map_or(0, LayerParams::input_dim);
        Self::new(layers, Normalization::identity(n))
    }

    /// Weights and biases drawn uniformly from [-scale, scale].
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], scale: f64, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::invalid("Network", "need input size and at least one layer size"));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let weights = (0..w[1])
                    .map(|_| (0..w[0]).map(|_| rng.gen_range(-scale..=scale)).collect())
                    .collect();
                let biases = (0..w[1]).map(|_| rng.gen_range(-scale..=scale)).collect();
                LayerParams::new(weights, biases)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Result<Self> {
        normalization.validate(self.input_dim())?;
        self.normalization = normalization;
        Ok(self)
    }

    pub fn normalize_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x, "normalize_input")?;
        let n = &self.normalization;
        Ok(x.iter()
            .enumerate()
            .map(|(i, &v)| (v.clamp(n.input_min[i], n.input_max[i]) - n.input_mean[i]) / n.input_range[i])
            .collect())
    }

    pub fn denormalize_output(&self, y: &[f64]) -> Vec<f64> {
        let n = &self.normalization;
        y.iter().map(|&v| v * n.output_range + n.output_mean).collect()
    }

    /// F(x). With `normalized == false`, `x` is in raw units and the result is
    /// denormalized.
    pub fn forward(&self, x: &[f64], normalized: bool) -> Result<Vec<f64>> {
        self.check_input(x, "forward")?;
        let mut h = if normalized { x.to_vec() } else { self.normalize_input(x)? };
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            h = layer.apply(&h);
            if l < last {
                h.iter_mut().for_each(|v| *v = relu(*v));
            }
        }
        Ok(if normalized { h } else { self.denormalize_output(&h) })
    }

    /// Pre-activation sign pattern at every hidden layer.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<Vec<bool>>> {
        self.check_input(x, "forward")?;
        let mut h = x.to_vec();
        let mut pattern = Vec::new();
        for layer in &self.layers[..self.layers.len() - 1] {
            h = layer.apply(&h);
            pattern.push(h.iter().map(|&v| v > 0.0).collect());
            h.iter_mut().for_each(|v| *v = relu(*v));
        }
        Ok(pattern)
    }

    fn check_input(&self, x: &[f64], op: &'static str) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_nnet(&text)
    }

    /// Serializes to `.nnet`. Values use the shortest round-tripping decimal.
    pub fn to_nnet_string(&self) -> String {
        let mut s = String::new();
        let sizes: Vec<usize> = std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(LayerParams::output_dim))
            .collect();
        let max = sizes.iter().copied().max().unwrap_or(0);
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(",") + ",";
        let n = &self.normalization;
        let _ = writeln!(s, "// written by polyreach");
        let _ = writeln!(
            s,
            "{},{},{},{},",
            self.layers.len(),
            self.input_dim(),
            self.output_dim(),
            max
        );
        let _ = writeln!(s, "{}", join(&mut sizes.iter().map(usize::to_string)));
        let _ = writeln!(s, "0,");
        for v in [&n.input_min, &n.input_max] {
            let _ = writeln!(s, "{}", join(&mut v.iter().map(|x| x.to_string())));
        }
        let _ = writeln!(
            s,
            "{}",
            join(&mut n.input_mean.iter().chain([&n.output_mean]).map(|x| x.to_string()))
        );
        let _ = writeln!(
            s,
            "{}",
            join(&mut n.input_range.iter().chain([&n.output_range]).map(|x| x.to_string()))
        );
        for layer in &self.layers {
            for row in layer.weights() {
                let _ = writeln!(s, "{}", join(&mut row.iter().map(|x| x.to_string())));
            }
            for b in layer.biases() {
                let _ = writeln!(s, "{b},");
            }
        }
        s
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut inner = text.lines().enumerate().peekable();
        while inner
            .peek()
            .is_some_and(|(_, l)| l.trim_start().starts_with("//") || l.trim().is_empty())
        {
            inner.next();
        }
        Self { inner, last: 0 }
    }

    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<f64>)> {
        loop {
            let Some((idx, line)) = self.inner.next() else {
                return Err(Error::NnetParse {
                    line: self.last + 1,
                    msg: format!("unexpected end of file while reading {what}"),
                });
            };
            self.last = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::NnetParse {
                        line: idx + 1,
                        msg: format!("non-numeric token {t:?} in {what}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((idx + 1, nums));
        }
    }

    fn exact(&mut self, what: &str, n: usize) -> Result<Vec<f64>> {
        let (line, v) = self.next_numbers(what)?;
        if v.len() < n {
            return Err(Error::NnetParse {
                line,
                msg: format!("{what}: expected {n} values, found {}", v.len()),
            });
        }
        Ok(v[..n].to_vec())
    }
}

fn as_size(x: f64, line: usize, what: &str) -> Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 && x < 1e9 {
        Ok(x as usize)
    } else {
        Err(Error::NnetParse {
            line,
            msg: format!("{what} must be a positive integer, found {x}"),
        })
    }
}

pub fn parse_nnet(text: &str) -> Result<Network> {
    let mut lines = Lines::new(text);
    let (hl, header) = lines.next_numbers("header")?;
    if header.len() < 3 {
        return Err(Error::NnetParse {
            line: hl,
            msg: "header needs numLayers, inputSize, outputSize".into(),
        });
    }
    let num_layers = as_size(header[0], hl, "numLayers")?;
    let input_size = as_size(header[1], hl, "inputSize")?;
    let output_size = as_size(header[2], hl, "outputSize")?;

    let (sl, raw_sizes) = lines.next_numbers("layer sizes")?;
    if raw_sizes.len() < num_layers + 1 {
        return Err(Error::NnetParse {
            line: sl,
            msg: format!("layer sizes: expected {} values, found {}", num_layers + 1, raw_sizes.len()),
        });
    }
    let sizes = raw_sizes[..=num_layers]
        .iter()
        .map(|&x| as_size(x, sl, "layer size"))
        .collect::<Result<Vec<_>>>()?;
    if sizes[0] != input_size || sizes[num_layers] != output_size {
        return Err(Error::NnetParse {
            line: sl,
            msg: "layer sizes inconsistent with inputSize/outputSize".into(),
        });
    }

    lines.next_numbers("unused flag")?;
    let input_min = lines.exact("input minimums", input_size)?;
    let input_max = lines.exact("input maximums", input_size)?;
    let means = lines.exact("means", input_size + 1)?;
    let (rl, ranges) = {
        let (l, v) = lines.next_numbers("ranges")?;
        if v.len() < input_size + 1 {
            return Err(Error::NnetParse {
                line: l,
                msg: format!("ranges: expected {} values, found {}", input_size + 1, v.len()),
            });
        }
        (l, v[..=input_size].to_vec())
    };
    if ranges.contains(&0.0) {
        return Err(Error::NnetParse {
            line: rl,
            msg: "zero normalization range".into(),
        });
    }

    let mut layers = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let (rows, cols) = (sizes[l + 1], sizes[l]);
        let weights = (0..rows)
            .map(|r| lines.exact(&format!("layer {} weight row {}", l + 1, r + 1), cols))
            .collect::<Result<Vec<_>>>()?;
        let biases = (0..rows)
            .map(|r| lines.exact(&format!("layer {} bias {}", l + 1, r + 1), 1).map(|v| v[0]))
            .collect::<Result<Vec<_>>>()?;
        layers.push(LayerParams::new(weights, biases)?);
    }

    let normalization = Normalization {
        input_min,
        input_max,
        input_mean: means[..input_size].to_vec(),
        input_range: ranges[..input_size].to_vec(),
        output_mean: means[input_size],
        output_range: ranges[input_size],
    };
    Network::new(layers, normalization)
}
