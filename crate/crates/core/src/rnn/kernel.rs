//! Batched LSTM forward pass and backpropagation through time.
//!
//! Every window of a batch is processed at once: per layer and time step the gate
//! pre-activations are `Z = W_x·X_t + W_h·H_{t-1} + b` with `X_t`, `H_t` stored as
//! `units × batch` row-major matrices. Layers are processed one after another over
//! the whole sequence, so the full hidden sequence of layer `j` is the input of
//! layer `j + 1`.

use super::activation::{sigmoid_in_place, tanh_in_place, tanh_into};
use super::{Architecture, LayerSlots, Layout};
use crate::gemm::{gemm, View};

/// Values of the raw windows at step `t`, one per batch column.
fn gather_step(x: &[f64], t: usize, steps: usize, out: &mut [f64]) {
    for (b, o) in out.iter_mut().enumerate() {
        *o = x[b * steps + t];
    }
}

/// Activations of one layer. With `keep` off only the hidden sequence is retained;
/// gates and cell states are overwritten step by step.
pub(crate) struct LayerTrace {
    /// `steps × 4h × batch`, post-activation gate values.
    pub gates: Vec<f64>,
    /// `steps × h × batch`.
    pub cells: Vec<f64>,
    /// `steps × h × batch`.
    pub hidden: Vec<f64>,
}

pub(crate) struct ForwardOutput {
    pub predictions: Vec<f64>,
    pub layers: Vec<LayerTrace>,
    pub layout: Layout,
    pub batch: usize,
    pub steps: usize,
    pub keep: bool,
}

/// Input of `slot` at step `t`: the raw windows for the first layer, the hidden
/// sequence of the previous layer otherwise.
fn layer_input<'a>(
    x: &'a [f64],
    below: Option<&'a [f64]>,
    slot: &LayerSlots,
    t: usize,
    batch: usize,
    steps: usize,
) -> View<'a> {
    match below {
        None => View {
            data: &x[t..],
            rows: 1,
            cols: batch,
            row_stride: steps,
            col_stride: steps,
        },
        Some(h) => {
            let size = slot.input * batch;
            View::row_major(&h[t * size..(t + 1) * size], slot.input, batch)
        }
    }
}

/// Runs the stack over `batch` windows stored row-major in `x` (`batch × look_back`).
pub(crate) fn forward_batch(
    arch: &Architecture,
    w: &[f64],
    x: &[f64],
    batch: usize,
    keep: bool,
) -> ForwardOutput {
    let layout = arch.layout();
    let steps = arch.look_back();
    debug_assert_eq!(w.len(), layout.total);
    debug_assert_eq!(x.len(), batch * steps);

    let mut layers: Vec<LayerTrace> = Vec::with_capacity(layout.layers.len());
    for slot in &layout.layers {
        let h = slot.hidden;
        let gate_size = 4 * h * batch;
        let state_size = h * batch;
        let kept = if keep { steps } else { 1 };
        let mut gates = vec![0.0; kept * gate_size];
        let mut cells = vec![0.0; kept * state_size];
        let mut hidden = vec![0.0; steps * state_size];

        let wx = View::row_major(&w[slot.wx..slot.wh], 4 * h, slot.input);
        let wh = View::row_major(&w[slot.wh..slot.bias], 4 * h, h);
        let bias = &w[slot.bias..slot.bias + 4 * h];
        let below = layers.last().map(|l| l.hidden.as_slice());
        let mut x_t = vec![0.0; if below.is_none() { batch } else { 0 }];

        for t in 0..steps {
            let g_off = if keep { t * gate_size } else { 0 };
            let c_off = if keep { t * state_size } else { 0 };
            if keep && t > 0 {
                cells.copy_within(c_off - state_size..c_off, c_off);
            }

            let z = &mut gates[g_off..g_off + gate_size];
            match below {
                // univariate input: a rank-one update is cheaper than a GEMM call
                None => {
                    gather_step(x, t, steps, &mut x_t);
                    let w_in = &w[slot.wx..slot.wh];
                    for ((row, &b), &wr) in z.chunks_exact_mut(batch).zip(bias).zip(w_in) {
                        for (zk, &xk) in row.iter_mut().zip(&x_t) {
                            *zk = b + wr * xk;
                        }
                    }
                }
                Some(_) => {
                    for (row, &b) in z.chunks_exact_mut(batch).zip(bias) {
                        row.fill(b);
                    }
                    gemm(
                        1.0,
                        wx,
                        layer_input(x, below, slot, t, batch, steps),
                        1.0,
                        z,
                    );
                }
            }
            if t > 0 {
                let prev = View::row_major(&hidden[(t - 1) * state_size..t * state_size], h, batch);
                gemm(1.0, wh, prev, 1.0, z);
            }

            let (zi, rest) = z.split_at_mut(state_size);
            let (zf, rest) = rest.split_at_mut(state_size);
            let (zg, zo) = rest.split_at_mut(state_size);
            sigmoid_in_place(zi);
            sigmoid_in_place(zf);
            tanh_in_place(zg);
            sigmoid_in_place(zo);

            let c = &mut cells[c_off..c_off + state_size];
            if t == 0 {
                for k in 0..state_size {
                    c[k] = zi[k] * zg[k];
                }
            } else {
                for k in 0..state_size {
                    c[k] = zf[k] * c[k] + zi[k] * zg[k];
                }
            }
            let h_t = &mut hidden[t * state_size..(t + 1) * state_size];
            tanh_into(c, h_t);
            for (hk, &ok) in h_t.iter_mut().zip(zo.iter()) {
                *hk *= ok;
            }
        }
        layers.push(LayerTrace {
            gates,
            cells,
            hidden,
        });
    }

    let top = layout.layers.last().expect("at least one layer");
    let state_size = top.hidden * batch;
    let last = &layers.last().unwrap().hidden[(steps - 1) * state_size..];
    let mut predictions = vec![w[layout.dense_b]; batch];
    gemm(
        1.0,
        View::row_major(&w[layout.dense_w..layout.dense_b], 1, top.hidden),
        View::row_major(last, top.hidden, batch),
        1.0,
        &mut predictions,
    );

    ForwardOutput {
        predictions,
        layers,
        layout,
        batch,
        steps,
        keep,
    }
}

/// Gradient of `Σ_b d_pred[b] · prediction[b]` with respect to every weight.
///
/// `fwd` must come from [`forward_batch`] with `keep = true` on the same inputs.
pub(crate) fn backward_batch(
    w: &[f64],
    x: &[f64],
    fwd: &ForwardOutput,
    d_pred: &[f64],
) -> Vec<f64> {
    assert!(fwd.keep, "backward pass needs the full forward trace");
    let layout = &fwd.layout;
    let (batch, steps) = (fwd.batch, fwd.steps);
    let mut grad = vec![0.0; layout.total];

    // dense readout
    let top = layout.layers.last().unwrap();
    let top_size = top.hidden * batch;
    let last = &fwd.layers.last().unwrap().hidden[(steps - 1) * top_size..];
    gemm(
        1.0,
        View::row_major(d_pred, 1, batch),
        View::row_major(last, top.hidden, batch).t(),
        0.0,
        &mut grad[layout.dense_w..layout.dense_b],
    );
    grad[layout.dense_b] = d_pred.iter().sum();

    // gradient w.r.t. the hidden sequence of the current layer, steps × h × batch
    let mut d_hidden = vec![0.0; steps * top_size];
    let widest = layout.layers.iter().map(|l| l.hidden).max().unwrap_or(0);
    let zeros = vec![0.0; widest * batch];
    gemm(
        1.0,
        View::row_major(&w[layout.dense_w..layout.dense_b], 1, top.hidden).t(),
        View::row_major(d_pred, 1, batch),
        0.0,
        &mut d_hidden[(steps - 1) * top_size..],
    );

    for j in (0..layout.layers.len()).rev() {
        let slot = layout.layers[j];
        let trace = &fwd.layers[j];
        let h = slot.hidden;
        let state_size = h * batch;
        let gate_size = 4 * state_size;
        let below = if j > 0 {
            Some(fwd.layers[j - 1].hidden.as_slice())
        } else {
            None
        };

        let wx = View::row_major(&w[slot.wx..slot.wh], 4 * h, slot.input);
        let wh = View::row_major(&w[slot.wh..slot.bias], 4 * h, h);

        let mut d_below = if j > 0 {
            vec![0.0; steps * slot.input * batch]
        } else {
            Vec::new()
        };
        let mut dh_next = vec![0.0; state_size];
        let mut dc_next = vec![0.0; state_size];
        let mut dz = vec![0.0; gate_size];
        let mut tanh_c = vec![0.0; state_size];
        let mut x_t = vec![0.0; if below.is_none() { batch } else { 0 }];

        for t in (0..steps).rev() {
            let gates = &trace.gates[t * gate_size..(t + 1) * gate_size];
            let c_prev = if t > 0 {
                &trace.cells[(t - 1) * state_size..t * state_size]
            } else {
                &zeros[..state_size]
            };
            tanh_into(
                &trace.cells[t * state_size..(t + 1) * state_size],
                &mut tanh_c,
            );
            let ext = &d_hidden[t * state_size..(t + 1) * state_size];
            let (gi, rest) = gates.split_at(state_size);
            let (gf, rest) = rest.split_at(state_size);
            let (gg, go) = rest.split_at(state_size);
            {
                let (dzi, rest) = dz.split_at_mut(state_size);
                let (dzf, rest) = rest.split_at_mut(state_size);
                let (dzg, dzo) = rest.split_at_mut(state_size);
                for k in 0..state_size {
                    let tc = tanh_c[k];
                    let dh = ext[k] + dh_next[k];
                    let (i, f, g, o) = (gi[k], gf[k], gg[k], go[k]);
                    let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                    dzi[k] = dc * g * i * (1.0 - i);
                    dzf[k] = dc * c_prev[k] * f * (1.0 - f);
                    dzg[k] = dc * i * (1.0 - g * g);
                    dzo[k] = dh * tc * o * (1.0 - o);
                    dc_next[k] = dc * f;
                }
            }

            let dz_view = View::row_major(&dz, 4 * h, batch);
            match below {
                None => {
                    gather_step(x, t, steps, &mut x_t);
                    for (gw, row) in grad[slot.wx..slot.wh]
                        .iter_mut()
                        .zip(dz.chunks_exact(batch))
                    {
                        *gw += row.iter().zip(&x_t).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                Some(_) => {
                    let input = layer_input(x, below, &slot, t, batch, steps);
                    gemm(1.0, dz_view, input.t(), 1.0, &mut grad[slot.wx..slot.wh]);
                }
            }
            for (gb, row) in grad[slot.bias..slot.bias + 4 * h]
                .iter_mut()
                .zip(dz.chunks_exact(batch))
            {
                *gb += row.iter().sum::<f64>();
            }
            if t > 0 {
                let prev = View::row_major(
                    &trace.hidden[(t - 1) * state_size..t * state_size],
                    h,
                    batch,
                );
                gemm(1.0, dz_view, prev.t(), 1.0, &mut grad[slot.wh..slot.bias]);
                gemm(1.0, wh.t(), dz_view, 0.0, &mut dh_next);
            }
            if j > 0 {
                let size = slot.input * batch;
                gemm(
                    1.0,
                    wx.t(),
                    dz_view,
                    0.0,
                    &mut d_below[t * size..(t + 1) * size],
                );
            }
        }
        d_hidden = d_below;
    }
    grad
}
