use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

use super::{Model, ParamVector};

/// Image tensor shape, channels-first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl ImageShape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Supported network families.
///
/// The two CNNs carry their channel widths so that reduced-width variants can
/// be built for gradient checks; [`ModelSpec::fmnist_cnn`] and
/// [`ModelSpec::cifar_alexnet`] give the full-size layouts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Logistic {
        d_in: usize,
        classes: usize,
    },
    Mlp {
        d_in: usize,
        hidden: Vec<usize>,
        classes: usize,
    },
    /// conv 3x3 p1 -> relu -> pool -> conv 3x3 p1 -> relu -> pool -> fc -> relu -> fc
    FmnistCnn {
        conv1: usize,
        conv2: usize,
        hidden: usize,
        classes: usize,
    },
    /// conv 11x11 s4 p5, conv 5x5 p2, three conv 3x3 p1, max-pools, one fc.
    CifarAlexnet {
        widths: [usize; 5],
        classes: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub input_shape: ImageShape,
}

/// One step of the compiled forward plan. Offsets index into the flat
/// parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Layer {
    Conv {
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        pad: usize,
        in_h: usize,
        in_w: usize,
        out_h: usize,
        out_w: usize,
        w_off: usize,
        b_off: usize,
    },
    Relu {
        len: usize,
    },
    MaxPool {
        c: usize,
        in_h: usize,
        in_w: usize,
        out_h: usize,
        out_w: usize,
    },
    Dense {
        inp: usize,
        out: usize,
        w_off: usize,
        b_off: usize,
    },
}

impl Layer {
    pub(crate) fn out_len(&self) -> usize {
        match *self {
            Layer::Conv {
                out_c, out_h, out_w, ..
            } => out_c * out_h * out_w,
            Layer::Relu { len } => len,
            Layer::MaxPool {
                c, out_h, out_w, ..
            } => c * out_h * out_w,
            Layer::Dense { out, .. } => out,
        }
    }
}

/// Human-readable record of a layer's output, used to check the layouts
/// against their reference tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub name: String,
    pub shape: Vec<usize>,
}

struct PlanBuilder {
    layers: Vec<Layer>,
    shapes: Vec<LayerShape>,
    offset: usize,
    c: usize,
    h: usize,
    w: usize,
    flat: Option<usize>,
}

impl PlanBuilder {
    fn new(input: ImageShape) -> Self {
        Self {
            layers: Vec::new(),
            shapes: Vec::new(),
            offset: 0,
            c: input.channels,
            h: input.height,
            w: input.width,
            flat: None,
        }
    }

    fn conv(&mut self, name: &str, out_c: usize, k: usize, stride: usize, pad: usize) -> Result<()> {
        if self.h + 2 * pad < k || self.w + 2 * pad < k {
            return Err(Error::input(format!("{name}: input {}x{} too small", self.h, self.w)));
        }
        let out_h = (self.h + 2 * pad - k) / stride + 1;
        let out_w = (self.w + 2 * pad - k) / stride + 1;
        let w_off = self.offset;
        let b_off = w_off + out_c * self.c * k * k;
        self.offset = b_off + out_c;
        self.layers.push(Layer::Conv {
            in_c: self.c,
            out_c,
            k,
            stride,
            pad,
            in_h: self.h,
            in_w: self.w,
            out_h,
            out_w,
            w_off,
            b_off,
        });
        self.c = out_c;
        self.h = out_h;
        self.w = out_w;
        self.layers.push(Layer::Relu {
            len: out_c * out_h * out_w,
        });
        self.shapes.push(LayerShape {
            name: name.to_string(),
            shape: vec![out_c, out_h, out_w],
        });
        Ok(())
    }

    fn pool(&mut self) -> Result<()> {
        if self.h < 2 || self.w < 2 {
            return Err(Error::input("max-pool input smaller than 2x2"));
        }
        let (out_h, out_w) = (self.h / 2, self.w / 2);
        self.layers.push(Layer::MaxPool {
            c: self.c,
            in_h: self.h,
            in_w: self.w,
            out_h,
            out_w,
        });
        self.h = out_h;
        self.w = out_w;
        self.shapes.push(LayerShape {
            name: "MaxPool".into(),
            shape: vec![self.c, out_h, out_w],
        });
        Ok(())
    }

    fn flatten(&mut self) {
        let n = self.c * self.h * self.w;
        self.flat = Some(n);
        self.shapes.push(LayerShape {
            name: "Flatten".into(),
            shape: vec![n],
        });
    }

    fn dense(&mut self, name: &str, out: usize, relu: bool) {
        let inp = self.flat.unwrap_or(self.c * self.h * self.w);
        let w_off = self.offset;
        let b_off = w_off + inp * out;
        self.offset = b_off + out;
        self.layers.push(Layer::Dense {
            inp,
            out,
            w_off,
            b_off,
        });
        if relu {
            self.layers.push(Layer::Relu { len: out });
        }
        self.flat = Some(out);
        self.shapes.push(LayerShape {
            name: name.to_string(),
            shape: vec![out],
        });
    }
}

impl ModelSpec {
    pub fn logistic(d_in: usize, classes: usize) -> Self {
        Self {
            architecture: Architecture::Logistic { d_in, classes },
            input_shape: ImageShape::new(1, 1, d_in),
        }
    }

    /// Logistic or MLP over images of `shape`, flattened.
    pub fn mlp(shape: ImageShape, hidden: Vec<usize>, classes: usize) -> Self {
        let d_in = shape.len();
        let architecture = if hidden.is_empty() {
            Architecture::Logistic { d_in, classes }
        } else {
            Architecture::Mlp {
                d_in,
                hidden,
                classes,
            }
        };
        Self {
            architecture,
            input_shape: shape,
        }
    }

    /// Full-size Fashion-MNIST CNN on 1x28x28 inputs.
    pub fn fmnist_cnn() -> Self {
        Self::fmnist_cnn_scaled(ImageShape::new(1, 28, 28), 30, 50, 100, 10)
    }

    pub fn fmnist_cnn_scaled(
        input_shape: ImageShape,
        conv1: usize,
        conv2: usize,
        hidden: usize,
        classes: usize,
    ) -> Self {
        Self {
            architecture: Architecture::FmnistCnn {
                conv1,
                conv2,
                hidden,
                classes,
            },
            input_shape,
        }
    }

    /// Full-size AlexNet variant on 3x32x32 inputs.
    pub fn cifar_alexnet() -> Self {
        Self::cifar_alexnet_scaled([64, 192, 384, 256, 256], 10)
    }

    pub fn cifar_alexnet_scaled(widths: [usize; 5], classes: usize) -> Self {
        Self {
            architecture: Architecture::CifarAlexnet { widths, classes },
            input_shape: ImageShape::new(3, 32, 32),
        }
    }

    pub fn classes(&self) -> usize {
        match &self.architecture {
            Architecture::Logistic { classes, .. }
            | Architecture::Mlp { classes, .. }
            | Architecture::FmnistCnn { classes, .. }
            | Architecture::CifarAlexnet { classes, .. } => *classes,
        }
    }

    fn build(&self) -> Result<PlanBuilder> {
        let mut b = PlanBuilder::new(self.input_shape);
        match &self.architecture {
            Architecture::Logistic { d_in, classes } => {
                self.check_flat_input(*d_in)?;
                b.flatten();
                b.dense("Linear", *classes, false);
            }
            Architecture::Mlp {
                d_in,
                hidden,
                classes,
            } => {
                self.check_flat_input(*d_in)?;
                b.flatten();
                for (i, &h) in hidden.iter().enumerate() {
                    b.dense(&format!("Hidden{}", i + 1), h, true);
                }
                b.dense("Output", *classes, false);
            }
            Architecture::FmnistCnn {
                conv1,
                conv2,
                hidden,
                classes,
            } => {
                b.conv("Conv1", *conv1, 3, 1, 1)?;
                b.pool()?;
                b.conv("Conv2", *conv2, 3, 1, 1)?;
                b.pool()?;
                b.flatten();
                b.dense("Fully Connected 1", *hidden, true);
                b.dense("Fully Connected 2", *classes, false);
            }
            Architecture::CifarAlexnet { widths, classes } => {
                b.conv("Conv1", widths[0], 11, 4, 5)?;
                b.pool()?;
                b.conv("Conv2", widths[1], 5, 1, 2)?;
                b.pool()?;
                b.conv("Conv3", widths[2], 3, 1, 1)?;
                b.conv("Conv4", widths[3], 3, 1, 1)?;
                b.conv("Conv5", widths[4], 3, 1, 1)?;
                b.pool()?;
                b.flatten();
                b.dense("Fully Connected", *classes, false);
            }
        }
        Ok(b)
    }

    fn check_flat_input(&self, d_in: usize) -> Result<()> {
        if d_in != self.input_shape.len() {
            return Err(Error::input(format!(
                "d_in {} does not match input shape {:?}",
                d_in, self.input_shape
            )));
        }
        Ok(())
    }

    pub(crate) fn plan(&self) -> Result<Vec<Layer>> {
        Ok(self.build()?.layers)
    }

    /// Output shape of every named stage, in order.
    pub fn layer_shapes(&self) -> Result<Vec<LayerShape>> {
        Ok(self.build()?.shapes)
    }

    /// Number of coordinates `K` in this model's [`ParamVector`].
    pub fn param_count(&self) -> Result<usize> {
        Ok(self.build()?.offset)
    }

    /// Kaiming-uniform-style fan-in initialisation: every weight and bias of
    /// a layer with fan-in `n` is drawn from `U(-1/sqrt(n), 1/sqrt(n))`.
    pub fn init(&self, seed: u64) -> Result<Model> {
        let b = self.build()?;
        let mut rng = rng_from(seed);
        let mut values = vec![0.0; b.offset];
        for layer in &b.layers {
            let (fan_in, start, end) = match *layer {
                Layer::Conv {
                    in_c,
                    k,
                    w_off,
                    b_off,
                    out_c,
                    ..
                } => (in_c * k * k, w_off, b_off + out_c),
                Layer::Dense {
                    inp,
                    out,
                    w_off,
                    b_off,
                } => (inp, w_off, b_off + out),
                _ => continue,
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut values[start..end] {
                *v = rng.random_range(-bound..bound);
            }
        }
        Ok(Model {
            spec: self.clone(),
            params: ParamVector::new(values),
        })
    }

    pub fn zeros(&self) -> Result<Model> {
        Ok(Model {
            spec: self.clone(),
            params: ParamVector::zeros(self.param_count()?),
        })
    }
}
