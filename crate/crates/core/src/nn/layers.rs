use super::linalg::{gemm_nn, gemm_nt, gemm_tn};
use super::{NnError, Tensor};

/// Fully connected layer. `weight` is stored `(in, out)` so the forward pass
/// is a plain row-major product `x · W + b`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self, NnError> {
        if weight.shape().len() != 2 || bias.shape() != [weight.shape()[1]] {
            return Err(NnError::ShapeMismatch {
                context: "dense parameters".into(),
                expected: "weight (in, out) and bias (out)".into(),
                found: format!("weight {:?}, bias {:?}", weight.shape(), bias.shape()),
            });
        }
        Ok(Self { weight, bias, input: None })
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[1]
    }

    fn forward(&mut self, x: Tensor, cache: bool) -> Tensor {
        let (batch, fin, fout) = (x.rows(), self.in_features(), self.out_features());
        let mut out = Vec::with_capacity(batch * fout);
        for _ in 0..batch {
            out.extend_from_slice(self.bias.data());
        }
        gemm_nn(batch, fin, fout, x.data(), self.weight.data(), &mut out);
        if cache {
            self.input = Some(x);
        }
        Tensor::new(vec![batch, fout], out).expect("dense output shape")
    }

    fn backward(&mut self, dy: &Tensor) -> Option<Tensor> {
        let x = self.input.as_ref()?;
        let (batch, fin, fout) = (x.rows(), self.in_features(), self.out_features());

        let gw = self.weight.grad_mut();
        gw.fill(0.0);
        gemm_tn(fin, batch, fout, x.data(), dy.data(), gw);

        let gb = self.bias.grad_mut();
        gb.fill(0.0);
        for row in dy.data().chunks_exact(fout) {
            for (g, &d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }

        let mut dx = vec![0.0; batch * fin];
        gemm_nt(batch, fout, fin, dy.data(), self.weight.data(), &mut dx);
        Some(Tensor::new(x.shape().to_vec(), dx).expect("dense input shape"))
    }
}

/// 2-D convolution over `(batch, channels, height, width)` inputs.
/// Cross-correlation (no kernel flip), zero padding, integer stride.
#[derive(Debug, Clone)]
pub struct Conv2d {
    /// `(out_channels, in_channels, kernel, kernel)`
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
    cache: Option<ConvCache>,
}

#[derive(Debug, Clone)]
struct ConvCache {
    input_shape: Vec<usize>,
    cols: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct ConvGeometry {
    channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeometry {
    fn patch_len(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Input coordinate for output row/col `o` and kernel offset `k`, if inside the image.
    #[inline]
    fn source(&self, o: usize, k: usize, limit: usize) -> Option<usize> {
        let pos = (o * self.stride + k) as isize - self.padding as isize;
        (pos >= 0 && (pos as usize) < limit).then_some(pos as usize)
    }

    fn im2col(&self, image: &[f64], cols: &mut [f64]) {
        let positions = self.positions();
        let k = self.kernel;
        for c in 0..self.channels {
            let plane = &image[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut cols[row * positions..(row + 1) * positions];
                    for oy in 0..self.out_h {
                        let iy = self.source(oy, ki, self.height);
                        for ox in 0..self.out_w {
                            dst[oy * self.out_w + ox] = match (iy, self.source(ox, kj, self.width)) {
                                (Some(y), Some(x)) => plane[y * self.width + x],
                                _ => 0.0,
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[f64], image: &mut [f64]) {
        let positions = self.positions();
        let k = self.kernel;
        for c in 0..self.channels {
            let plane = &mut image[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src = &cols[row * positions..(row + 1) * positions];
                    for oy in 0..self.out_h {
                        let Some(y) = self.source(oy, ki, self.height) else { continue };
                        for ox in 0..self.out_w {
                            if let Some(x) = self.source(ox, kj, self.width) {
                                plane[y * self.width + x] += src[oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Output spatial size of a sliding window, or `None` if the window does not fit.
pub(crate) fn window_output(size: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = size + 2 * padding;
    (stride > 0 && kernel > 0 && padded >= kernel).then(|| (padded - kernel) / stride + 1)
}

impl Conv2d {
    pub fn new(weight: Tensor, bias: Tensor, stride: usize, padding: usize) -> Result<Self, NnError> {
        let s = weight.shape();
        if s.len() != 4 || s[2] != s[3] || bias.shape() != [s[0]] || stride == 0 {
            return Err(NnError::ShapeMismatch {
                context: "conv2d parameters".into(),
                expected: "weight (out, in, k, k), bias (out), stride > 0".into(),
                found: format!("weight {:?}, bias {:?}, stride {stride}", s, bias.shape()),
            });
        }
        Ok(Self { weight, bias, stride, padding, cache: None })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    fn geometry(&self, input_shape: &[usize]) -> ConvGeometry {
        let (h, w) = (input_shape[2], input_shape[3]);
        ConvGeometry {
            channels: self.in_channels(),
            height: h,
            width: w,
            kernel: self.kernel(),
            stride: self.stride,
            padding: self.padding,
            out_h: window_output(h, self.kernel(), self.stride, self.padding).expect("checked at construction"),
            out_w: window_output(w, self.kernel(), self.stride, self.padding).expect("checked at construction"),
        }
    }

    fn forward(&mut self, x: Tensor, cache: bool) -> Tensor {
        let g = self.geometry(x.shape());
        let batch = x.rows();
        let (patch, positions, oc) = (g.patch_len(), g.positions(), self.out_channels());
        let sample_len = x.row_len();
        let mut cols = vec![0.0; batch * patch * positions];
        let mut out = vec![0.0; batch * oc * positions];
        for b in 0..batch {
            let col = &mut cols[b * patch * positions..(b + 1) * patch * positions];
            g.im2col(&x.data()[b * sample_len..(b + 1) * sample_len], col);
            let dst = &mut out[b * oc * positions..(b + 1) * oc * positions];
            for (o, &bias) in self.bias.data().iter().enumerate() {
                dst[o * positions..(o + 1) * positions].fill(bias);
            }
            gemm_nn(oc, patch, positions, self.weight.data(), col, dst);
        }
        if cache {
            self.cache = Some(ConvCache { input_shape: x.shape().to_vec(), cols });
        }
        Tensor::new(vec![batch, oc, g.out_h, g.out_w], out).expect("conv output shape")
    }

    fn backward(&mut self, dy: &Tensor) -> Option<Tensor> {
        let cache = self.cache.as_ref()?;
        let g = self.geometry(&cache.input_shape);
        let batch = cache.input_shape[0];
        let (patch, positions, oc) = (g.patch_len(), g.positions(), self.out_channels());
        let sample_len: usize = cache.input_shape[1..].iter().product();

        let mut gw = vec![0.0; oc * patch];
        let mut gb = vec![0.0; oc];
        let mut dx = vec![0.0; batch * sample_len];
        let mut dcol = vec![0.0; patch * positions];
        for b in 0..batch {
            let d = &dy.data()[b * oc * positions..(b + 1) * oc * positions];
            let col = &cache.cols[b * patch * positions..(b + 1) * patch * positions];
            gemm_nt(oc, positions, patch, d, col, &mut gw);
            for (o, g) in gb.iter_mut().enumerate() {
                *g += d[o * positions..(o + 1) * positions].iter().sum::<f64>();
            }
            dcol.fill(0.0);
            gemm_tn(patch, oc, positions, self.weight.data(), d, &mut dcol);
            g.col2im(&dcol, &mut dx[b * sample_len..(b + 1) * sample_len]);
        }
        self.weight.grad_mut().copy_from_slice(&gw);
        self.bias.grad_mut().copy_from_slice(&gb);
        Some(Tensor::new(cache.input_shape.clone(), dx).expect("conv input shape"))
    }
}

/// Max pooling over `(batch, channels, height, width)`; ties go to the first
/// element in row-major window order.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub kernel: usize,
    pub stride: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(kernel: usize, stride: usize) -> Self {
        Self { kernel, stride, cache: None }
    }

    fn forward(&mut self, x: Tensor, cache: bool) -> Tensor {
        let s = x.shape();
        let (batch, ch, h, w) = (s[0], s[1], s[2], s[3]);
        let oh = window_output(h, self.kernel, self.stride, 0).expect("checked at construction");
        let ow = window_output(w, self.kernel, self.stride, 0).expect("checked at construction");
        let mut out = Vec::with_capacity(batch * ch * oh * ow);
        let mut argmax = Vec::with_capacity(out.capacity());
        let data = x.data();
        for plane in 0..batch * ch {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * self.stride * w + ox * self.stride;
                    for ky in 0..self.kernel {
                        for kx in 0..self.kernel {
                            let idx = base + (oy * self.stride + ky) * w + ox * self.stride + kx;
                            if data[idx] > data[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(data[best]);
                    argmax.push(best);
                }
            }
        }
        if cache {
            self.cache = Some((s.to_vec(), argmax));
        }
        Tensor::new(vec![batch, ch, oh, ow], out).expect("pool output shape")
    }

    fn backward(&mut self, dy: &Tensor) -> Option<Tensor> {
        let (shape, argmax) = self.cache.as_ref()?;
        let mut dx = vec![0.0; shape.iter().product()];
        for (&src, &d) in argmax.iter().zip(dy.data()) {
            dx[src] += d;
        }
        Some(Tensor::new(shape.clone(), dx).expect("pool input shape"))
    }
}

/// Elementwise `max(x, 0)`; the derivative at 0 is taken as 0.
#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    fn forward(&mut self, mut x: Tensor, cache: bool) -> Tensor {
        let mask = cache.then(|| x.data().iter().map(|&v| v > 0.0).collect());
        for v in x.data_mut() {
            if *v <= 0.0 {
                *v = 0.0;
            }
        }
        self.mask = mask;
        x
    }

    fn backward(&mut self, dy: &Tensor) -> Option<Tensor> {
        let mask = self.mask.as_ref()?;
        let dx = dy.data().iter().zip(mask).map(|(&d, &m)| if m { d } else { 0.0 }).collect();
        Some(Tensor::new(dy.shape().to_vec(), dx).expect("relu shape"))
    }
}

/// Collapses all non-batch dimensions.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Flatten {
    fn forward(&mut self, x: Tensor, cache: bool) -> Tensor {
        if cache {
            self.input_shape = Some(x.shape().to_vec());
        }
        let shape = vec![x.rows(), x.row_len()];
        x.reshape(shape).expect("flatten keeps element count")
    }

    fn backward(&mut self, dy: &Tensor) -> Option<Tensor> {
        let shape = self.input_shape.clone()?;
        dy.clone().reshape(shape).ok()
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Relu(Relu),
    Flatten(Flatten),
    MaxPool2d(MaxPool2d),
}

impl Layer {
    pub fn name(&self) -> String {
        match self {
            Layer::Dense(d) => format!("dense({}->{})", d.in_features(), d.out_features()),
            Layer::Conv2d(c) => format!(
                "conv2d({}->{}, k={}, s={}, p={})",
                c.in_channels(),
                c.out_channels(),
                c.kernel(),
                c.stride,
                c.padding
            ),
            Layer::Relu(_) => "relu".into(),
            Layer::Flatten(_) => "flatten".into(),
            Layer::MaxPool2d(p) => format!("maxpool2d(k={}, s={})", p.kernel, p.stride),
        }
    }

    pub(crate) fn forward(&mut self, x: Tensor, cache: bool) -> Tensor {
        match self {
            Layer::Dense(l) => l.forward(x, cache),
            Layer::Conv2d(l) => l.forward(x, cache),
            Layer::Relu(l) => l.forward(x, cache),
            Layer::Flatten(l) => l.forward(x, cache),
            Layer::MaxPool2d(l) => l.forward(x, cache),
        }
    }

    /// Propagates `dy` to the layer input, writing parameter gradients.
    /// `None` when no forward pass has been cached.
    pub(crate) fn backward(&mut self, dy: &Tensor) -> Option<Tensor> {
        match self {
            Layer::Dense(l) => l.backward(dy),
            Layer::Conv2d(l) => l.backward(dy),
            Layer::Relu(l) => l.backward(dy),
            Layer::Flatten(l) => l.backward(dy),
            Layer::MaxPool2d(l) => l.backward(dy),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Conv2d(l) => vec![&mut l.weight, &mut l.bias],
            _ => Vec::new(),
        }
    }

    pub(crate) fn clear_cache(&mut self) {
        match self {
            Layer::Dense(l) => l.input = None,
            Layer::Conv2d(l) => l.cache = None,
            Layer::Relu(l) => l.mask = None,
            Layer::Flatten(l) => l.input_shape = None,
            Layer::MaxPool2d(l) => l.cache = None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        Tensor::new(shape, data).unwrap()
    }

    #[test]
    fn conv_is_cross_correlation_with_zero_padding() {
        // 1x1x3x3 input, single 2x2 kernel [[1,2],[3,4]], stride 1, padding 0
        let w = t(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let mut conv = Conv2d::new(w, t(vec![1], vec![0.5]), 1, 0).unwrap();
        let x = t(vec![1, 1, 3, 3], (1..=9).map(f64::from).collect());
        let y = conv.forward(x, false);
        // top-left window [[1,2],[4,5]] -> 1 + 4 + 12 + 20 + 0.5
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[37.5, 47.5, 67.5, 77.5]);

        let w = t(vec![1, 1, 3, 3], vec![1.0; 9]);
        let mut conv = Conv2d::new(w, t(vec![1], vec![0.0]), 2, 1).unwrap();
        let y = conv.forward(t(vec![1, 1, 3, 3], vec![1.0; 9]), false);
        // padded corners see a 2x2 patch of ones
        assert_eq!(y.data(), &[4.0, 4.0, 4.0, 4.0]);
    }

    #[test]
    fn maxpool_ties_pick_first_element() {
        let mut pool = MaxPool2d::new(2, 2);
        let x = t(vec![1, 1, 2, 2], vec![3.0, 3.0, 3.0, 3.0]);
        let y = pool.forward(x, true);
        assert_eq!(y.data(), &[3.0]);
        let dx = pool.backward(&t(vec![1, 1, 1, 1], vec![1.0])).unwrap();
        assert_eq!(dx.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn backward_without_forward_is_none() {
        let mut relu = Layer::Relu(Relu::default());
        assert!(relu.backward(&t(vec![1, 1], vec![1.0])).is_none());
    }

    #[test]
    fn window_output_rejects_oversized_kernel() {
        assert_eq!(window_output(3, 4, 1, 0), None);
        assert_eq!(window_output(3, 4, 1, 1), Some(2));
        assert_eq!(window_output(28, 2, 2, 0), Some(14));
    }
}
