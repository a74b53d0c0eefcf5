use std::fmt;
use std::str::FromStr;

use super::init::{he_init, zero_bias};
use super::layers::{Conv2d, Dense, Flatten, Layer, MaxPool2d, Relu};
use super::{NnError, Tensor};
use crate::data::Prng;

/// One body layer of an architecture. The classifier head is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Dense { out: usize },
    Conv2d { out_channels: usize, kernel: usize, stride: usize, padding: usize },
    Relu,
    Flatten,
    MaxPool2d { kernel: usize, stride: usize },
}

/// Network architecture: per-sample input shape plus body layers. The head
/// `Dense(features, num_classes)` is appended when the network is built.
///
/// Text form, space separated: `in:784 dense:512 relu dense:512 relu`, or
/// `in:1x28x28 conv:8,3,1,1 relu maxpool:2,2 flatten dense:64 relu`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub input: Vec<usize>,
    pub body: Vec<LayerSpec>,
}

impl ArchSpec {
    /// `in:<input> dense:<h1> relu dense:<h2> relu ...`
    pub fn mlp(input: usize, hidden: &[usize]) -> Self {
        let body = hidden
            .iter()
            .flat_map(|&h| [LayerSpec::Dense { out: h }, LayerSpec::Relu])
            .collect();
        Self { input: vec![input], body }
    }

    pub fn input_len(&self) -> usize {
        self.input.iter().product()
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Dense { out } => write!(f, "dense:{out}"),
            LayerSpec::Conv2d { out_channels, kernel, stride, padding } => {
                write!(f, "conv:{out_channels},{kernel},{stride},{padding}")
            }
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::MaxPool2d { kernel, stride } => write!(f, "maxpool:{kernel},{stride}"),
        }
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.input.iter().map(ToString::to_string).collect();
        write!(f, "in:{}", dims.join("x"))?;
        for layer in &self.body {
            write!(f, " {layer}")?;
        }
        Ok(())
    }
}

fn parse_numbers(token: &str, args: &str, count: usize) -> Result<Vec<usize>, NnError> {
    let values: Result<Vec<usize>, _> = args.split(',').map(|v| v.trim().parse::<usize>()).collect();
    match values {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(NnError::InvalidArch(format!("`{token}` expects {count} comma-separated integers"))),
    }
}

impl FromStr for LayerSpec {
    type Err = NnError;

    fn from_str(token: &str) -> Result<Self, NnError> {
        let (kind, args) = token.split_once(':').unwrap_or((token, ""));
        match kind {
            "relu" if args.is_empty() => Ok(LayerSpec::Relu),
            "flatten" if args.is_empty() => Ok(LayerSpec::Flatten),
            "dense" => Ok(LayerSpec::Dense { out: parse_numbers(token, args, 1)?[0] }),
            "conv" => {
                let v = parse_numbers(token, args, 4)?;
                Ok(LayerSpec::Conv2d { out_channels: v[0], kernel: v[1], stride: v[2], padding: v[3] })
            }
            "maxpool" => {
                let v = parse_numbers(token, args, 2)?;
                Ok(LayerSpec::MaxPool2d { kernel: v[0], stride: v[1] })
            }
            _ => Err(NnError::InvalidArch(format!("unknown layer `{token}`"))),
        }
    }
}

impl FromStr for ArchSpec {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, NnError> {
        let mut tokens = s.split_whitespace();
        let input = tokens
            .next()
            .and_then(|t| t.strip_prefix("in:"))
            .ok_or_else(|| NnError::InvalidArch("architecture must start with `in:<dims>`".into()))?;
        let input: Vec<usize> = input
            .split('x')
            .map(|d| d.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| NnError::InvalidArch(format!("bad input dims `{input}`")))?;
        let body = tokens.map(str::parse).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { input, body })
    }
}

/// Ordered layers ending in a dense classifier head.
#[derive(Debug, Clone)]
pub struct Network {
    arch: ArchSpec,
    num_classes: usize,
    layers: Vec<Layer>,
}

/// Per-sample shape after every body layer; the last entry feeds the head.
fn body_shapes(arch: &ArchSpec) -> Result<Vec<Vec<usize>>, NnError> {
    if arch.input.is_empty() || arch.input.contains(&0) {
        return Err(NnError::InvalidArch(format!("input shape {:?}", arch.input)));
    }
    let mut shapes = vec![arch.input.clone()];
    for (i, spec) in arch.body.iter().enumerate() {
        let input = shapes.last().expect("non-empty");
        let out = match *spec {
            LayerSpec::Dense { out } => (input.len() == 1 && out > 0).then(|| vec![out]),
            LayerSpec::Conv2d { out_channels, kernel, stride, padding } => {
                if input.len() != 3 || out_channels == 0 {
                    None
                } else {
                    let oh = super::layers::window_output(input[1], kernel, stride, padding);
                    let ow = super::layers::window_output(input[2], kernel, stride, padding);
                    oh.zip(ow).map(|(h, w)| vec![out_channels, h, w])
                }
            }
            LayerSpec::MaxPool2d { kernel, stride } => {
                if input.len() != 3 {
                    None
                } else {
                    let oh = super::layers::window_output(input[1], kernel, stride, 0);
                    let ow = super::layers::window_output(input[2], kernel, stride, 0);
                    oh.zip(ow).map(|(h, w)| vec![input[0], h, w])
                }
            }
            LayerSpec::Relu => Some(input.clone()),
            LayerSpec::Flatten => Some(vec![input.iter().product()]),
        };
        let out = out.ok_or_else(|| NnError::ShapeMismatch {
            context: format!("layer {i} ({spec})"),
            expected: "an input compatible with the layer".into(),
            found: format!("per-sample shape {input:?}"),
        })?;
        shapes.push(out);
    }
    let features = shapes.last().expect("non-empty");
    if features.len() != 1 {
        return Err(NnError::ShapeMismatch {
            context: "classifier head".into(),
            expected: "flat features (add `flatten`)".into(),
            found: format!("per-sample shape {features:?}"),
        });
    }
    Ok(shapes)
}

fn dense_layer(fan_in: usize, out: usize, rng: &mut Prng) -> Result<Layer, NnError> {
    let weight = he_init(&[fan_in, out], fan_in, rng)?;
    Ok(Layer::Dense(Dense::new(weight, zero_bias(out)?)?))
}

impl Network {
    /// Builds and He-initializes a network. Body parameters draw from
    /// `body_seed`, the head from `head_seed`, so the head can be replaced
    /// without disturbing the body's initialization stream.
    pub fn new(arch: &ArchSpec, num_classes: usize, body_seed: u64, head_seed: u64) -> Result<Self, NnError> {
        if num_classes == 0 {
            return Err(NnError::InvalidArch("num_classes must be positive".into()));
        }
        let shapes = body_shapes(arch)?;
        let mut rng = Prng::new(body_seed);
        let mut layers = Vec::with_capacity(arch.body.len() + 1);
        for (spec, input) in arch.body.iter().zip(&shapes) {
            let layer = match *spec {
                LayerSpec::Dense { out } => dense_layer(input[0], out, &mut rng)?,
                LayerSpec::Conv2d { out_channels, kernel, stride, padding } => {
                    let fan_in = input[0] * kernel * kernel;
                    let weight = he_init(&[out_channels, input[0], kernel, kernel], fan_in, &mut rng)?;
                    Layer::Conv2d(Conv2d::new(weight, zero_bias(out_channels)?, stride, padding)?)
                }
                LayerSpec::Relu => Layer::Relu(Relu::default()),
                LayerSpec::Flatten => Layer::Flatten(Flatten::default()),
                LayerSpec::MaxPool2d { kernel, stride } => Layer::MaxPool2d(MaxPool2d::new(kernel, stride)),
            };
            layers.push(layer);
        }
        let features = shapes.last().expect("non-empty")[0];
        layers.push(dense_layer(features, num_classes, &mut Prng::new(head_seed))?);
        Ok(Self { arch: arch.clone(), num_classes, layers })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn feature_len(&self) -> usize {
        match self.layers.last() {
            Some(Layer::Dense(d)) => d.in_features(),
            _ => unreachable!("network always ends in a dense head"),
        }
    }

    /// All parameters in network order (weight then bias, layer by layer, head last).
    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Parameters of every layer except the head.
    pub fn body_params(&self) -> Vec<&Tensor> {
        let n = self.layers.len() - 1;
        self.layers[..n].iter().flat_map(Layer::params).collect()
    }

    /// Overwrites all parameters, in `params()` order. Shapes must match.
    pub fn load_params(&mut self, values: &[Tensor]) -> Result<(), NnError> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(NnError::ShapeMismatch {
                context: "parameter load".into(),
                expected: format!("{} tensors", params.len()),
                found: format!("{} tensors", values.len()),
            });
        }
        for (i, (p, v)) in params.iter_mut().zip(values).enumerate() {
            if p.shape() != v.shape() {
                return Err(NnError::ShapeMismatch {
                    context: format!("parameter {i}"),
                    expected: format!("{:?}", p.shape()),
                    found: format!("{:?}", v.shape()),
                });
            }
            p.data_mut().copy_from_slice(v.data());
        }
        Ok(())
    }

    /// Loads body parameters from `values` (head excluded) and replaces the
    /// head with a freshly initialized `Dense(features, num_classes)`.
    pub fn with_new_head(
        arch: &ArchSpec,
        body: &[Tensor],
        num_classes: usize,
        head_seed: u64,
    ) -> Result<Self, NnError> {
        let mut net = Network::new(arch, num_classes, 0, head_seed)?;
        let n = net.layers.len() - 1;
        let mut targets: Vec<&mut Tensor> = net.layers[..n].iter_mut().flat_map(Layer::params_mut).collect();
        if targets.len() != body.len() {
            return Err(NnError::ShapeMismatch {
                context: "feature extractor".into(),
                expected: format!("{} tensors", targets.len()),
                found: format!("{} tensors", body.len()),
            });
        }
        for (i, (t, v)) in targets.iter_mut().zip(body).enumerate() {
            if t.shape() != v.shape() {
                return Err(NnError::ShapeMismatch {
                    context: format!("feature extractor parameter {i}"),
                    expected: format!("{:?}", t.shape()),
                    found: format!("{:?}", v.shape()),
                });
            }
            t.data_mut().copy_from_slice(v.data());
        }
        Ok(net)
    }

    fn check_batch(&self, batch: &Tensor) -> Result<(), NnError> {
        if batch.shape()[1..] != self.arch.input[..] {
            return Err(NnError::ShapeMismatch {
                context: format!("layer 0 ({})", self.layers[0].name()),
                expected: format!("batch shape (n, {})", dims(&self.arch.input)),
                found: format!("{:?}", batch.shape()),
            });
        }
        Ok(())
    }

    /// Logits `(batch, num_classes)`, caching activations for `backward`.
    pub fn forward(&mut self, batch: &Tensor) -> Result<Tensor, NnError> {
        self.run(batch, true)
    }

    /// Logits without caching; leaves any cached state untouched.
    pub fn predict(&mut self, batch: &Tensor) -> Result<Tensor, NnError> {
        self.run(batch, false)
    }

    fn run(&mut self, batch: &Tensor, cache: bool) -> Result<Tensor, NnError> {
        self.check_batch(batch)?;
        let mut x = batch.clone();
        for layer in &mut self.layers {
            x = layer.forward(x, cache);
        }
        if !x.is_finite() {
            return Err(NnError::NonFinite("forward produced non-finite logits".into()));
        }
        Ok(x)
    }

    /// Backpropagates `dlogits`, overwriting every parameter's gradient.
    /// Consumes the forward cache.
    pub fn backward(&mut self, dlogits: &Tensor) -> Result<(), NnError> {
        if dlogits.shape().len() != 2 || dlogits.shape()[1] != self.num_classes {
            return Err(NnError::ShapeMismatch {
                context: "backward".into(),
                expected: format!("(batch, {})", self.num_classes),
                found: format!("{:?}", dlogits.shape()),
            });
        }
        let mut grad = dlogits.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            grad = layer.backward(&grad).ok_or(NnError::NoForwardCache { layer: i })?;
        }
        for layer in &mut self.layers {
            layer.clear_cache();
        }
        Ok(())
    }
}

fn dims(d: &[usize]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}
