//! The trial-function network: `1 → h → h → 1` with softplus hidden layers
//! and an affine output, evaluated on all mesh points as one batch.
//!
//! The split variant carries two such stacks side by side with no shared
//! hidden units. The first head is read like the single-head output (as
//! `F/r` or `F`); the second gives `G` itself.
//!
//! Parameters live in one flat vector so that the optimizer and gradient
//! checks can treat them uniformly. Per head the layout is
//! `w1[h] b1[h] w2[h×h] b2[h] w3[h] b3`, with `w2` row-major
//! (`w2[i·h + j]` connects hidden unit `j` of layer 1 to unit `i` of layer 2).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DiracError, Result};

pub const DEFAULT_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    FullyConnected,
    SplitTwoHead,
}

impl Architecture {
    pub fn heads(self) -> usize {
        match self {
            Architecture::FullyConnected => 1,
            Architecture::SplitTwoHead => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::FullyConnected => "fully_connected",
            Architecture::SplitTwoHead => "split_two_head",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fully_connected" => Some(Architecture::FullyConnected),
            "split_two_head" => Some(Architecture::SplitTwoHead),
            _ => None,
        }
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// Softplus and its derivative sharing one exponential.
#[inline]
fn softplus_and_slope(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let sp = x.max(0.0) + e.ln_1p();
    let slope = if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    };
    (sp, slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    architecture: Architecture,
    width: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct HeadLayout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

impl HeadLayout {
    fn new(h: usize) -> Self {
        let w1 = 0;
        let b1 = w1 + h;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + h;
        Self {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + 1,
        }
    }
}

impl NetParams {
    /// Glorot-uniform weights, zero biases; deterministic in `seed`.
    pub fn init(seed: u64, architecture: Architecture, width: usize) -> Self {
        assert!(width > 0, "hidden width must be positive");
        let layout = HeadLayout::new(width);
        let mut data = vec![0.0; layout.len * architecture.heads()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |slice: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            slice
                .iter_mut()
                .for_each(|x| *x = rng.gen_range(-limit..limit));
        };
        for head in data.chunks_mut(layout.len) {
            fill(&mut head[layout.w1..layout.b1], 1, width);
            fill(&mut head[layout.w2..layout.b2], width, width);
            fill(&mut head[layout.w3..layout.b3], width, 1);
        }
        Self {
            architecture,
            width,
            data,
        }
    }

    pub fn zeros(architecture: Architecture, width: usize) -> Self {
        let len = HeadLayout::new(width).len * architecture.heads();
        Self {
            architecture,
            width,
            data: vec![0.0; len],
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn layout(&self) -> HeadLayout {
        HeadLayout::new(self.width)
    }

    fn head(&self, k: usize) -> &[f64] {
        let len = self.layout().len;
        &self.data[k * len..(k + 1) * len]
    }

    /// Set the output bias of head `k`.
    pub fn set_output_bias(&mut self, k: usize, value: f64) {
        let layout = self.layout();
        self.data[k * layout.len + layout.b3] = value;
    }

    /// Evaluate every head at every point.
    pub fn forward(&self, r: &[f64]) -> Vec<Vec<f64>> {
        let mut cache = ForwardCache::default();
        self.forward_cached(r, &mut cache)
    }

    /// Forward pass that keeps the activations needed by [`Self::backward`].
    pub fn forward_cached(&self, r: &[f64], cache: &mut ForwardCache) -> Vec<Vec<f64>> {
        let h = self.width;
        let n = r.len();
        let l = self.layout();
        cache.resize(self.architecture.heads(), n * h);
        let mut outputs = Vec::with_capacity(self.architecture.heads());
        for k in 0..self.architecture.heads() {
            let p = self.head(k);
            let hc = &mut cache.heads[k];
            let mut out = vec![0.0; n];
            let mut z2 = vec![0.0; h];
            for (pt, &x) in r.iter().enumerate() {
                let a1 = &mut hc.a1[pt * h..(pt + 1) * h];
                let s1 = &mut hc.s1[pt * h..(pt + 1) * h];
                for j in 0..h {
                    let (a, s) = softplus_and_slope(p[l.w1 + j] * x + p[l.b1 + j]);
                    a1[j] = a;
                    s1[j] = s;
                }
                z2.copy_from_slice(&p[l.b2..l.b2 + h]);
                for (i, zi) in z2.iter_mut().enumerate() {
                    let row = &p[l.w2 + i * h..l.w2 + (i + 1) * h];
                    *zi += row.iter().zip(a1.iter()).map(|(w, a)| w * a).sum::<f64>();
                }
                let a2 = &mut hc.a2[pt * h..(pt + 1) * h];
                let s2 = &mut hc.s2[pt * h..(pt + 1) * h];
                let mut o = p[l.b3];
                for i in 0..h {
                    let (a, s) = softplus_and_slope(z2[i]);
                    a2[i] = a;
                    s2[i] = s;
                    o += p[l.w3 + i] * a;
                }
                out[pt] = o;
            }
            outputs.push(out);
        }
        outputs
    }

    /// Reverse pass: gradient of `Σ_k Σ_i grad_out[k][i] · out_k(r_i)` with
    /// respect to the flat parameter vector.
    pub fn backward(&self, r: &[f64], cache: &ForwardCache, grad_out: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(grad_out.len(), self.architecture.heads());
        let h = self.width;
        let l = self.layout();
        let mut grad = vec![0.0; self.data.len()];
        let mut gz2 = vec![0.0; h];
        for k in 0..self.architecture.heads() {
            let p = self.head(k);
            let hc = &cache.heads[k];
            let g = &mut grad[k * l.len..(k + 1) * l.len];
            for (pt, (&x, &go)) in r.iter().zip(&grad_out[k]).enumerate() {
                if go == 0.0 {
                    continue;
                }
                let a1 = &hc.a1[pt * h..(pt + 1) * h];
                let s1 = &hc.s1[pt * h..(pt + 1) * h];
                let a2 = &hc.a2[pt * h..(pt + 1) * h];
                let s2 = &hc.s2[pt * h..(pt + 1) * h];
                g[l.b3] += go;
                for i in 0..h {
                    g[l.w3 + i] += go * a2[i];
                    gz2[i] = go * p[l.w3 + i] * s2[i];
                    g[l.b2 + i] += gz2[i];
                }
                for (i, &gzi) in gz2.iter().enumerate() {
                    let row = &mut g[l.w2 + i * h..l.w2 + (i + 1) * h];
                    row.iter_mut().zip(a1).for_each(|(gw, a)| *gw += gzi * a);
                }
                for j in 0..h {
                    let mut ga1 = 0.0;
                    for (i, &gzi) in gz2.iter().enumerate() {
                        ga1 += p[l.w2 + i * h + j] * gzi;
                    }
                    let gz1 = ga1 * s1[j];
                    g[l.w1 + j] += gz1 * x;
                    g[l.b1 + j] += gz1;
                }
            }
        }
        grad
    }

    /// Text checkpoint; see the README for the format.
    pub fn to_text(&self) -> String {
        let h = self.width;
        let mut out = String::new();
        writeln!(out, "diracnet-checkpoint 1").unwrap();
        writeln!(out, "architecture {}", self.architecture.name()).unwrap();
        writeln!(out, "heads {}", self.architecture.heads()).unwrap();
        writeln!(out, "layers 1 {h} {h} 1").unwrap();
        let l = self.layout();
        for k in 0..self.architecture.heads() {
            let p = self.head(k);
            // weights row-major (out × in), then biases, per layer
            for (range, dims) in [
                (l.w1..l.b1, (h, 1)),
                (l.b1..l.w2, (h, 0)),
                (l.w2..l.b2, (h, h)),
                (l.b2..l.w3, (h, 0)),
                (l.w3..l.b3, (1, h)),
                (l.b3..l.len, (1, 0)),
            ] {
                let kind = if dims.1 == 0 { "bias" } else { "weight" };
                writeln!(out, "# head {k} {kind} {}x{}", dims.0, dims.1.max(1)).unwrap();
                for v in &p[range] {
                    writeln!(out, "{v:.17e}").unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| DiracError::InvalidConfig(format!("checkpoint: {msg}"));
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        if lines.next().map(str::trim) != Some("diracnet-checkpoint 1") {
            return Err(bad("missing header"));
        }
        let field = |line: Option<&str>, key: &str| -> Result<String> {
            let line = line.ok_or_else(|| bad("truncated header"))?;
            line.strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(&format!("expected `{key}`")))
        };
        let arch = field(lines.next(), "architecture")?;
        let architecture = Architecture::parse(&arch).ok_or_else(|| bad("unknown architecture"))?;
        let heads: usize = field(lines.next(), "heads")?
            .parse()
            .map_err(|_| bad("bad head count"))?;
        if heads != architecture.heads() {
            return Err(bad("head count does not match architecture"));
        }
        let dims: Vec<usize> = field(lines.next(), "layers")?
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| bad("bad layer dims")))
            .collect::<Result<_>>()?;
        if dims.len() != 4 || dims[0] != 1 || dims[3] != 1 || dims[1] != dims[2] || dims[1] == 0 {
            return Err(bad("layer dims must be 1 h h 1"));
        }
        let mut params = Self::zeros(architecture, dims[1]);
        let values: Vec<f64> = lines
            .map(|l| l.trim().parse().map_err(|_| bad("bad value")))
            .collect::<Result<_>>()?;
        if values.len() != params.len() {
            return Err(bad(&format!(
                "expected {} values, found {}",
                params.len(),
                values.len()
            )));
        }
        if values.iter().any(|v: &f64| !v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        params.data = values;
        Ok(params)
    }
}

#[derive(Debug, Clone, Default)]
struct HeadCache {
    a1: Vec<f64>,
    s1: Vec<f64>,
    a2: Vec<f64>,
    s2: Vec<f64>,
}

/// Hidden activations and their slopes from the last forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    heads: Vec<HeadCache>,
}

impl ForwardCache {
    fn resize(&mut self, heads: usize, len: usize) {
        self.heads.resize_with(heads, HeadCache::default);
        for hc in &mut self.heads {
            for buf in [&mut hc.a1, &mut hc.s1, &mut hc.a2, &mut hc.s2] {
                buf.resize(len, 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softplus_slope_is_logistic() {
        for x in [-30.0, -2.0, -0.1, 0.0, 0.7, 5.0, 40.0] {
            let h = 1e-6;
            let fd = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
            let s = logistic(x);
            assert!((fd - s).abs() < 1e-8);
            assert!(s > 0.0 && s < 1.0 || x.abs() > 30.0);
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = NetParams::init(7, Architecture::FullyConnected, 16);
        let b = NetParams::init(7, Architecture::FullyConnected, 16);
        let c = NetParams::init(8, Architecture::FullyConnected, 16);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16 * 16 + 4 * 16 + 1);
    }

    #[test]
    fn biases_start_at_zero() {
        let p = NetParams::init(3, Architecture::SplitTwoHead, 16);
        let l = HeadLayout::new(16);
        for k in 0..2 {
            let head = p.head(k);
            assert!(head[l.b1..l.w2].iter().all(|b| *b == 0.0));
            assert!(head[l.b2..l.w3].iter().all(|b| *b == 0.0));
            assert_eq!(head[l.b3], 0.0);
        }
    }

    #[test]
    fn constant_output_from_bias() {
        let mut p = NetParams::zeros(Architecture::FullyConnected, 16);
        p.set_output_bias(0, 0.25);
        let out = p.forward(&[0.0, 1.0, 50.0]);
        assert!(out[0].iter().all(|v| *v == 0.25));
    }

    #[test]
    fn split_heads_are_independent() {
        let p = NetParams::init(11, Architecture::SplitTwoHead, 8);
        let mut q = p.clone();
        let half = q.len() / 2;
        q.as_mut_slice()[half..].iter_mut().for_each(|x| *x *= 1.5);
        let r = [0.1, 0.5, 2.0];
        let a = p.forward(&r);
        let b = q.forward(&r);
        assert_eq!(a[0], b[0]);
        assert_ne!(a[1], b[1]);
    }

    #[test]
    fn batched_matches_pointwise() {
        let p = NetParams::init(5, Architecture::FullyConnected, 16);
        let r: Vec<f64> = (0..50).map(|i| i as f64 * 0.37).collect();
        let batch = p.forward(&r);
        for (i, x) in r.iter().enumerate() {
            let single = p.forward(&[*x]);
            assert!((single[0][0] - batch[0][i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let p = NetParams::init(9, Architecture::SplitTwoHead, 5);
        let r = [0.05, 0.4, 1.3, 3.0];
        let weights = [vec![0.3, -1.0, 0.7, 0.2], vec![1.1, 0.4, -0.5, 0.9]];
        let objective = |q: &NetParams| -> f64 {
            q.forward(&r)
                .iter()
                .zip(&weights)
                .map(|(o, w)| o.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        };
        let mut cache = ForwardCache::default();
        p.forward_cached(&r, &mut cache);
        let grad = p.backward(&r, &cache, &weights);
        for i in 0..p.len() {
            let h = 1e-6;
            let mut plus = p.clone();
            plus.as_mut_slice()[i] += h;
            let mut minus = p.clone();
            minus.as_mut_slice()[i] -= h;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() < 1e-7 * fd.abs().max(1.0),
                "param {i}: {fd} vs {}",
                grad[i]
            );
        }
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(NetParams::from_text("nonsense").is_err());
        let p = NetParams::init(1, Architecture::FullyConnected, 4);
        let text = p.to_text();
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(NetParams::from_text(&truncated).is_err());
    }

    proptest! {
        #[test]
        fn checkpoint_round_trip(seed in any::<u64>(), width in 1usize..20, split in any::<bool>()) {
            let arch = if split { Architecture::SplitTwoHead } else { Architecture::FullyConnected };
            let p = NetParams::init(seed, arch, width);
            let back = NetParams::from_text(&p.to_text()).unwrap();
            prop_assert_eq!(p, back);
        }
    }
}
