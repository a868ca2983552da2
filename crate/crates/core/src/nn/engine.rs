//! Per-sample forward and backward passes over a compiled layer plan.

use super::spec::Layer;

/// Reusable activation buffers for one sample.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Vec<f64>>,
    pool_idx: Vec<Vec<usize>>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(layers: &[Layer], input_len: usize) -> Self {
        let mut acts = vec![vec![0.0; input_len]];
        let mut pool_idx = Vec::with_capacity(layers.len());
        for l in layers {
            acts.push(vec![0.0; l.out_len()]);
            pool_idx.push(match l {
                Layer::MaxPool { .. } => vec![0; l.out_len()],
                _ => Vec::new(),
            });
        }
        Self {
            acts,
            pool_idx,
            grad_a: Vec::new(),
            grad_b: Vec::new(),
        }
    }

    pub(crate) fn logits(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) fn forward(layers: &[Layer], params: &[f64], x: &[f64], ws: &mut Workspace) {
    ws.acts[0].copy_from_slice(x);
    for (i, layer) in layers.iter().enumerate() {
        let (head, tail) = ws.acts.split_at_mut(i + 1);
        let input = &head[i];
        let out = &mut tail[0];
        match *layer {
            Layer::Dense {
                inp,
                out: n_out,
                w_off,
                b_off,
            } => {
                let w = &params[w_off..w_off + inp * n_out];
                let b = &params[b_off..b_off + n_out];
                for o in 0..n_out {
                    let row = &w[o * inp..(o + 1) * inp];
                    let mut acc = b[o];
                    for (wi, xi) in row.iter().zip(input.iter()) {
                        acc += wi * xi;
                    }
                    out[o] = acc;
                }
            }
            Layer::Relu { .. } => {
                for (o, &v) in out.iter_mut().zip(input.iter()) {
                    *o = if v > 0.0 { v } else { 0.0 };
                }
            }
            Layer::MaxPool {
                c,
                in_h,
                in_w,
                out_h,
                out_w,
            } => {
                let idx = &mut ws.pool_idx[i];
                for ch in 0..c {
                    for oy in 0..out_h {
                        for ox in 0..out_w {
                            let mut best = f64::NEG_INFINITY;
                            let mut arg = 0;
                            for dy in 0..2 {
                                for dx in 0..2 {
                                    let p = (ch * in_h + oy * 2 + dy) * in_w + ox * 2 + dx;
                                    if input[p] > best {
                                        best = input[p];
                                        arg = p;
                                    }
                                }
                            }
                            let o = (ch * out_h + oy) * out_w + ox;
                            out[o] = best;
                            idx[o] = arg;
                        }
                    }
                }
            }
            Layer::Conv {
                in_c,
                out_c,
                k,
                stride,
                pad,
                in_h,
                in_w,
                out_h,
                out_w,
                w_off,
                b_off,
            } => {
                let plane = out_h * out_w;
                for oc in 0..out_c {
                    let bias = params[b_off + oc];
                    out[oc * plane..(oc + 1) * plane].fill(bias);
                    for ic in 0..in_c {
                        for ky in 0..k {
                            for kx in 0..k {
                                let wv = params[w_off + ((oc * in_c + ic) * k + ky) * k + kx];
                                for oy in 0..out_h {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    if iy < 0 || iy >= in_h as isize {
                                        continue;
                                    }
                                    let in_row = (ic * in_h + iy as usize) * in_w;
                                    let out_row = oc * plane + oy * out_w;
                                    for ox in 0..out_w {
                                        let ix = (ox * stride + kx) as isize - pad as isize;
                                        if ix < 0 || ix >= in_w as isize {
                                            continue;
                                        }
                                        out[out_row + ox] += wv * input[in_row + ix as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Back-propagates `grad_logits` through the activations left in `ws` by the
/// last [`forward`] call, accumulating parameter gradients into `grad`.
pub(crate) fn backward(
    layers: &[Layer],
    params: &[f64],
    ws: &mut Workspace,
    grad_logits: &[f64],
    grad: &mut [f64],
) {
    let mut g_out = std::mem::take(&mut ws.grad_a);
    let mut g_in = std::mem::take(&mut ws.grad_b);
    g_out.clear();
    g_out.extend_from_slice(grad_logits);

    for (i, layer) in layers.iter().enumerate().rev() {
        let input = &ws.acts[i];
        g_in.clear();
        g_in.resize(input.len(), 0.0);
        match *layer {
            Layer::Dense {
                inp,
                out: n_out,
                w_off,
                b_off,
            } => {
                for o in 0..n_out {
                    let go = g_out[o];
                    if go == 0.0 {
                        continue;
                    }
                    grad[b_off + o] += go;
                    let row = w_off + o * inp;
                    let gw = &mut grad[row..row + inp];
                    for (g, xi) in gw.iter_mut().zip(input.iter()) {
                        *g += go * xi;
                    }
                    let w = &params[row..row + inp];
                    for (gi, wi) in g_in.iter_mut().zip(w.iter()) {
                        *gi += go * wi;
                    }
                }
            }
            Layer::Relu { .. } => {
                for ((gi, &go), &x) in g_in.iter_mut().zip(g_out.iter()).zip(input.iter()) {
                    *gi = if x > 0.0 { go } else { 0.0 };
                }
            }
            Layer::MaxPool { .. } => {
                for (o, &src) in ws.pool_idx[i].iter().enumerate() {
                    g_in[src] += g_out[o];
                }
            }
            Layer::Conv {
                in_c,
                out_c,
                k,
                stride,
                pad,
                in_h,
                in_w,
                out_h,
                out_w,
                w_off,
                b_off,
            } => {
                let plane = out_h * out_w;
                for oc in 0..out_c {
                    let go_plane = &g_out[oc * plane..(oc + 1) * plane];
                    grad[b_off + oc] += go_plane.iter().sum::<f64>();
                    for ic in 0..in_c {
                        for ky in 0..k {
                            for kx in 0..k {
                                let wi = w_off + ((oc * in_c + ic) * k + ky) * k + kx;
                                let wv = params[wi];
                                let mut gw = 0.0;
                                for oy in 0..out_h {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    if iy < 0 || iy >= in_h as isize {
                                        continue;
                                    }
                                    let in_row = (ic * in_h + iy as usize) * in_w;
                                    for ox in 0..out_w {
                                        let ix = (ox * stride + kx) as isize - pad as isize;
                                        if ix < 0 || ix >= in_w as isize {
                                            continue;
                                        }
                                        let go = go_plane[oy * out_w + ox];
                                        let p = in_row + ix as usize;
                                        gw += go * input[p];
                                        g_in[p] += go * wv;
                                    }
                                }
                                grad[wi] += gw;
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut g_out, &mut g_in);
    }
    ws.grad_a = g_out;
    ws.grad_b = g_in;
}
