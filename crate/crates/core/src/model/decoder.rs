//! The decoder-encoder network itself: construction, forward, backward,
//! and top-k prediction.

use crate::data::atlas::Atlas;
use crate::data::scan::Scan;
use crate::error::{Error, Result};
use crate::nn::{
    accumulate_grad, dense_backward, dense_forward, softmax, softmax_backward, DenseParams,
    GradMap, Mode, Parameterized, RunningUpdate,
};
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;

use super::blocks::{BlockCache, NonLinearBlock};
use super::{ModelConfig, BN_EPSILON, BN_MOMENTUM};

#[derive(Debug, Clone)]
pub struct BrainDecoder {
    pub config: ModelConfig,
    pub(crate) total_voxels: usize,
    /// ROI-covered voxel indices in canonical atlas order — the gather map.
    pub(crate) covered: Vec<usize>,
    /// Voxel count per ROI, atlas order.
    pub(crate) roi_sizes: Vec<usize>,
    /// Output width per ROI layer: `max(floor(size/divisor), 1)`.
    pub(crate) roi_widths: Vec<usize>,
    pub(crate) roi_layers: Vec<DenseParams>,
    pub(crate) hidden1: NonLinearBlock,
    pub(crate) latent: NonLinearBlock,
    pub(crate) reg_head: Option<DenseParams>,
    pub(crate) class_block: Option<NonLinearBlock>,
    pub(crate) class_out: Option<DenseParams>,
    pub(crate) enc1: Option<NonLinearBlock>,
    pub(crate) enc2: Option<NonLinearBlock>,
    /// Per-ROI reconstruction layers; a single covered-width layer when
    /// the ROI layer is disabled.
    pub(crate) enc_roi: Vec<DenseParams>,
}

#[derive(Debug)]
pub struct ForwardActivations {
    pub roi_concat: Tensor,
    pub hidden1: Tensor,
    pub latent: Tensor,
    pub regression_out: Option<Tensor>,
    pub class_probs: Option<Tensor>,
    pub reconstruction: Option<Tensor>,
}

#[derive(Debug)]
pub struct ForwardCache {
    pub(crate) gathered: Tensor,
    pub(crate) hidden1_cache: BlockCache,
    pub(crate) latent_cache: BlockCache,
    pub(crate) latent_out: Tensor,
    pub(crate) class_cache: Option<BlockCache>,
    pub(crate) class_block_out: Option<Tensor>,
    pub(crate) class_probs: Option<Tensor>,
    pub(crate) enc1_cache: Option<BlockCache>,
    pub(crate) enc1_out: Option<Tensor>,
    pub(crate) enc2_cache: Option<BlockCache>,
    pub(crate) enc2_out: Option<Tensor>,
}

#[derive(Debug)]
pub struct ForwardPass {
    pub activations: ForwardActivations,
    /// Present in train mode only.
    pub cache: Option<ForwardCache>,
    /// Batchnorm running-stat updates to apply after the optimizer step
    /// (block-name, update) pairs; train mode only.
    pub running_updates: Vec<(String, RunningUpdate)>,
}

/// Gradients of a scalar loss w.r.t. the exposed activations. Any subset
/// may be present; shapes must match the forward activations.
#[derive(Debug, Default)]
pub struct ActivationGrads {
    pub regression_out: Option<Tensor>,
    pub class_probs: Option<Tensor>,
    pub reconstruction: Option<Tensor>,
    pub roi_concat: Option<Tensor>,
    pub hidden1: Option<Tensor>,
    pub latent: Option<Tensor>,
}

pub fn build_model(cfg: &ModelConfig, atlas: &Atlas, rng: &mut ChaCha8Rng) -> Result<BrainDecoder> {
    cfg.validate()?;
    atlas.validate("build_model")?;

    let covered = atlas.covered_indices();
    if covered.is_empty() {
        return Err(Error::Config("atlas covers no voxels".to_string()));
    }
    let roi_sizes: Vec<usize> = atlas.rois.iter().map(|r| r.voxel_indices.len()).collect();
    let roi_widths: Vec<usize> = roi_sizes
        .iter()
        .map(|&s| (s / cfg.roi_divisor).max(1))
        .collect();
    let concat_width: usize = if cfg.use_roi_layer {
        roi_widths.iter().sum()
    } else {
        covered.len()
    };

    // Parameter init order is fixed and documented: ROI layers, the two
    // trunk blocks, regression head, classification head, encoder.
    let roi_layers: Vec<DenseParams> = if cfg.use_roi_layer {
        roi_sizes
            .iter()
            .zip(&roi_widths)
            .map(|(&size, &width)| DenseParams::init(size, width, rng))
            .collect()
    } else {
        Vec::new()
    };

    let hidden1 = NonLinearBlock::init(concat_width, cfg.hidden1_size, BN_MOMENTUM, BN_EPSILON, rng);
    let latent = NonLinearBlock::init(cfg.hidden1_size, cfg.latent_size, BN_MOMENTUM, BN_EPSILON, rng);

    let reg_head = cfg
        .heads
        .regression
        .then(|| DenseParams::init(cfg.latent_size, cfg.embedding_dim, rng));

    let (class_block, class_out) = if cfg.heads.classification {
        (
            Some(NonLinearBlock::init(
                cfg.latent_size,
                cfg.embedding_dim,
                BN_MOMENTUM,
                BN_EPSILON,
                rng,
            )),
            Some(DenseParams::init(cfg.embedding_dim, cfg.vocab_size, rng)),
        )
    } else {
        (None, None)
    };

    let (enc1, enc2, enc_roi) = if cfg.autoencoder {
        let enc1 = NonLinearBlock::init(cfg.latent_size, cfg.hidden1_size, BN_MOMENTUM, BN_EPSILON, rng);
        if cfg.use_roi_layer {
            let enc2 = NonLinearBlock::init(
                cfg.hidden1_size,
                concat_width,
                BN_MOMENTUM,
                BN_EPSILON,
                rng,
            );
            let enc_roi: Vec<DenseParams> = roi_widths
                .iter()
                .zip(&roi_sizes)
                .map(|(&width, &size)| DenseParams::init(width, size, rng))
                .collect();
            (Some(enc1), Some(enc2), enc_roi)
        } else {
            // Base model mirror: one linear layer back to the covered width.
            let enc_roi = vec![DenseParams::init(cfg.hidden1_size, covered.len(), rng)];
            (Some(enc1), None, enc_roi)
        }
    } else {
        (None, None, Vec::new())
    };

    Ok(BrainDecoder {
        config: cfg.clone(),
        total_voxels: atlas.total_voxels,
        covered,
        roi_sizes,
        roi_widths,
        roi_layers,
        hidden1,
        latent,
        reg_head,
        class_block,
        class_out,
        enc1,
        enc2,
        enc_roi,
    })
}

impl BrainDecoder {
    pub fn concat_width(&self) -> usize {
        self.hidden1.in_dim()
    }

    pub fn covered_count(&self) -> usize {
        self.covered.len()
    }

    pub fn roi_widths(&self) -> &[usize] {
        &self.roi_widths
    }

    /// Gather the ROI-covered voxels of each scan into a `[batch x covered]`
    /// matrix, in canonical ROI order.
    pub fn gather(&self, scans: &[&Scan]) -> Result<Tensor> {
        if scans.is_empty() {
            return Err(Error::Contract("forward on an empty batch".to_string()));
        }
        let mut out = Tensor::zeros(&[scans.len(), self.covered.len()]);
        for (b, scan) in scans.iter().enumerate() {
            if scan.voxels.len() != self.total_voxels {
                return Err(Error::Data(format!(
                    "scan for '{}' has {} voxels, model expects {} (unpadded?)",
                    scan.subject_id,
                    scan.voxels.len(),
                    self.total_voxels
                )));
            }
            let vals = scan.voxels.values();
            for (j, &v) in self.covered.iter().enumerate() {
                out.set2(b, j, vals[v]);
            }
        }
        Ok(out)
    }

    pub fn forward(
        &self,
        scans: &[&Scan],
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<ForwardPass> {
        let gathered = self.gather(scans)?;
        self.forward_gathered(&gathered, mode, rng)
    }

    /// Forward from an already-gathered `[batch x covered]` matrix.
    pub fn forward_gathered(
        &self,
        gathered: &Tensor,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<ForwardPass> {
        let (batch, width) = gathered.dims2();
        if width != self.covered.len() {
            return Err(Error::Dimension {
                op: "forward_gathered",
                left: format!("model covered [{}]", self.covered.len()),
                right: format!("input {}", gathered.shape_string()),
            });
        }
        let cfg = &self.config;
        let mut updates: Vec<(String, RunningUpdate)> = Vec::new();

        // Per-ROI layers -> concat (or the gather itself in base mode).
        let roi_concat = if cfg.use_roi_layer {
            let mut concat = Tensor::zeros(&[batch, self.concat_width()]);
            let mut voxel_off = 0;
            let mut out_off = 0;
            for (layer, &size) in self.roi_layers.iter().zip(&self.roi_sizes) {
                let slice = cols(gathered, voxel_off, voxel_off + size);
                let out = dense_forward(layer, &slice)?;
                paste_cols(&mut concat, out_off, &out);
                voxel_off += size;
                out_off += layer.out_dim();
            }
            concat
        } else {
            gathered.clone()
        };

        let h1 = self
            .hidden1
            .forward(&roi_concat, cfg.dropout_rate, cfg.leaky_alpha, mode, rng)?;
        if let Some(u) = h1.running_update {
            updates.push(("hidden1".to_string(), u));
        }
        let lat = self
            .latent
            .forward(&h1.output, cfg.dropout_rate, cfg.leaky_alpha, mode, rng)?;
        if let Some(u) = lat.running_update {
            updates.push(("latent".to_string(), u));
        }

        let regression_out = match &self.reg_head {
            Some(head) => Some(dense_forward(head, &lat.output)?),
            None => None,
        };

        let (class_probs, class_cache, class_block_out) = match (&self.class_block, &self.class_out)
        {
            (Some(block), Some(out_layer)) => {
                let blk = block.forward(&lat.output, cfg.dropout_rate, cfg.leaky_alpha, mode, rng)?;
                if let Some(u) = blk.running_update {
                    updates.push(("class.block".to_string(), u));
                }
                let logits = dense_forward(out_layer, &blk.output)?;
                (Some(softmax(&logits)), blk.cache, Some(blk.output))
            }
            _ => (None, None, None),
        };

        let (reconstruction, enc1_cache, enc1_out, enc2_cache, enc2_out) = match &self.enc1 {
            Some(enc1) => {
                let e1 = enc1.forward(&lat.output, cfg.dropout_rate, cfg.leaky_alpha, mode, rng)?;
                if let Some(u) = e1.running_update {
                    updates.push(("enc1".to_string(), u));
                }
                if let Some(enc2) = &self.enc2 {
                    let e2 =
                        enc2.forward(&e1.output, cfg.dropout_rate, cfg.leaky_alpha, mode, rng)?;
                    if let Some(u) = e2.running_update {
                        updates.push(("enc2".to_string(), u));
                    }
                    let mut rec = Tensor::zeros(&[batch, self.covered.len()]);
                    let mut in_off = 0;
                    let mut out_off = 0;
                    for (layer, &width) in self.enc_roi.iter().zip(&self.roi_widths) {
                        let slice = cols(&e2.output, in_off, in_off + width);
                        let out = dense_forward(layer, &slice)?;
                        paste_cols(&mut rec, out_off, &out);
                        in_off += width;
                        out_off += layer.out_dim();
                    }
                    (Some(rec), e1.cache, Some(e1.output), e2.cache, Some(e2.output))
                } else {
                    let rec = dense_forward(&self.enc_roi[0], &e1.output)?;
                    (Some(rec), e1.cache, Some(e1.output), None, None)
                }
            }
            None => (None, None, None, None, None),
        };

        let cache = match mode {
            Mode::Train => Some(ForwardCache {
                gathered: gathered.clone(),
                hidden1_cache: h1.cache.unwrap(),
                latent_cache: lat.cache.unwrap(),
                latent_out: lat.output.clone(),
                class_cache,
                class_block_out,
                class_probs: class_probs.clone(),
                enc1_cache,
                enc1_out,
                enc2_cache,
                enc2_out,
            }),
            Mode::Infer => None,
        };

        Ok(ForwardPass {
            activations: ForwardActivations {
                roi_concat,
                hidden1: h1.output,
                latent: lat.output,
                regression_out,
                class_probs,
                reconstruction,
            },
            cache,
            running_updates: updates,
        })
    }

    /// Backpropagate activation gradients into a parameter-gradient map.
    pub fn backward(&self, cache: &ForwardCache, grads: &ActivationGrads) -> Result<GradMap> {
        let cfg = &self.config;
        let alpha = cfg.leaky_alpha;
        let batch = cache.latent_out.dims2().0;
        let mut gm = GradMap::new();

        let mut d_latent = match &grads.latent {
            Some(g) => g.clone(),
            None => Tensor::zeros(&[batch, cfg.latent_size]),
        };

        // Encoder path.
        if let Some(d_rec) = &grads.reconstruction {
            let enc1 = self
                .enc1
                .as_ref()
                .ok_or_else(|| Error::Contract("reconstruction grad without autoencoder".into()))?;
            let enc1_cache = cache.enc1_cache.as_ref().unwrap();
            let d_enc1_out = if let Some(enc2) = &self.enc2 {
                let enc2_out = cache.enc2_out.as_ref().unwrap();
                let mut d_enc2_out = Tensor::zeros(&[batch, self.concat_width()]);
                let mut in_off = 0;
                let mut out_off = 0;
                for (r, (layer, &width)) in
                    self.enc_roi.iter().zip(&self.roi_widths).enumerate()
                {
                    let size = self.roi_sizes[r];
                    let d_slice = cols(d_rec, out_off, out_off + size);
                    let input = cols(enc2_out, in_off, in_off + width);
                    let (d_in, d_w, d_b) = dense_backward(layer, &input, &d_slice);
                    paste_cols(&mut d_enc2_out, in_off, &d_in);
                    accumulate_grad(&mut gm, &format!("enc_roi.{r:03}.weight"), d_w);
                    accumulate_grad(&mut gm, &format!("enc_roi.{r:03}.bias"), d_b);
                    in_off += width;
                    out_off += size;
                }
                let (d_e1, bg) =
                    enc2.backward(cache.enc2_cache.as_ref().unwrap(), alpha, &d_enc2_out);
                accumulate_grad(&mut gm, "enc2.dense.weight", bg.d_weights);
                accumulate_grad(&mut gm, "enc2.dense.bias", bg.d_bias);
                accumulate_grad(&mut gm, "enc2.bn.gain", bg.d_gain);
                accumulate_grad(&mut gm, "enc2.bn.shift", bg.d_shift);
                d_e1
            } else {
                let input = cache.enc1_out.as_ref().unwrap();
                let (d_e1, d_w, d_b) = dense_backward(&self.enc_roi[0], input, d_rec);
                accumulate_grad(&mut gm, "enc_roi.000.weight", d_w);
                accumulate_grad(&mut gm, "enc_roi.000.bias", d_b);
                d_e1
            };
            let (d_lat, bg) = enc1.backward(enc1_cache, alpha, &d_enc1_out);
            accumulate_grad(&mut gm, "enc1.dense.weight", bg.d_weights);
            accumulate_grad(&mut gm, "enc1.dense.bias", bg.d_bias);
            accumulate_grad(&mut gm, "enc1.bn.gain", bg.d_gain);
            accumulate_grad(&mut gm, "enc1.bn.shift", bg.d_shift);
            d_latent.add_assign(&d_lat);
        }

        // Classification head.
        if let Some(d_probs) = &grads.class_probs {
            let block = self
                .class_block
                .as_ref()
                .ok_or_else(|| Error::Contract("class grad without classification head".into()))?;
            let probs = cache.class_probs.as_ref().unwrap();
            let d_logits = softmax_backward(probs, d_probs);
            let (d_block_out, d_w, d_b) = dense_backward(
                self.class_out.as_ref().unwrap(),
                cache.class_block_out.as_ref().unwrap(),
                &d_logits,
            );
            accumulate_grad(&mut gm, "class.out.weight", d_w);
            accumulate_grad(&mut gm, "class.out.bias", d_b);
            let (d_lat, bg) = block.backward(cache.class_cache.as_ref().unwrap(), alpha, &d_block_out);
            accumulate_grad(&mut gm, "class.block.dense.weight", bg.d_weights);
            accumulate_grad(&mut gm, "class.block.dense.bias", bg.d_bias);
            accumulate_grad(&mut gm, "class.block.bn.gain", bg.d_gain);
            accumulate_grad(&mut gm, "class.block.bn.shift", bg.d_shift);
            d_latent.add_assign(&d_lat);
        }

        // Regression head.
        if let Some(d_reg) = &grads.regression_out {
            let head = self
                .reg_head
                .as_ref()
                .ok_or_else(|| Error::Contract("regression grad without regression head".into()))?;
            let (d_lat, d_w, d_b) = dense_backward(head, &cache.latent_out, d_reg);
            accumulate_grad(&mut gm, "reg_head.weight", d_w);
            accumulate_grad(&mut gm, "reg_head.bias", d_b);
            d_latent.add_assign(&d_lat);
        }

        // Trunk.
        let (mut d_hidden1, bg) = self.latent.backward(&cache.latent_cache, alpha, &d_latent);
        accumulate_grad(&mut gm, "latent.dense.weight", bg.d_weights);
        accumulate_grad(&mut gm, "latent.dense.bias", bg.d_bias);
        accumulate_grad(&mut gm, "latent.bn.gain", bg.d_gain);
        accumulate_grad(&mut gm, "latent.bn.shift", bg.d_shift);
        if let Some(g) = &grads.hidden1 {
            d_hidden1.add_assign(g);
        }

        let (mut d_concat, bg) = self.hidden1.backward(&cache.hidden1_cache, alpha, &d_hidden1);
        accumulate_grad(&mut gm, "hidden1.dense.weight", bg.d_weights);
        accumulate_grad(&mut gm, "hidden1.dense.bias", bg.d_bias);
        accumulate_grad(&mut gm, "hidden1.bn.gain", bg.d_gain);
        accumulate_grad(&mut gm, "hidden1.bn.shift", bg.d_shift);
        if let Some(g) = &grads.roi_concat {
            d_concat.add_assign(g);
        }

        if cfg.use_roi_layer {
            let mut voxel_off = 0;
            let mut out_off = 0;
            for (r, (layer, &size)) in self.roi_layers.iter().zip(&self.roi_sizes).enumerate() {
                let width = layer.out_dim();
                let d_out = cols(&d_concat, out_off, out_off + width);
                let input = cols(&cache.gathered, voxel_off, voxel_off + size);
                let (_, d_w, d_b) = dense_backward(layer, &input, &d_out);
                accumulate_grad(&mut gm, &format!("roi.{r:03}.weight"), d_w);
                accumulate_grad(&mut gm, &format!("roi.{r:03}.bias"), d_b);
                voxel_off += size;
                out_off += width;
            }
        }

        Ok(gm)
    }

    /// Apply batchnorm running-stat updates returned by a train forward.
    pub fn apply_running_updates(&mut self, updates: &[(String, RunningUpdate)]) {
        for (name, update) in updates {
            let bn = match name.as_str() {
                "hidden1" => &mut self.hidden1.bn,
                "latent" => &mut self.latent.bn,
                "class.block" => &mut self.class_block.as_mut().unwrap().bn,
                "enc1" => &mut self.enc1.as_mut().unwrap().bn,
                "enc2" => &mut self.enc2.as_mut().unwrap().bn,
                other => panic!("unknown batchnorm block '{other}'"),
            };
            crate::nn::apply_running_update(bn, update);
        }
    }

    /// Top-k classification: k `(word_index, probability)` pairs, by
    /// descending probability, ties broken by ascending word index.
    pub fn predict_topk(
        &self,
        scan: &Scan,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<(usize, f64)>> {
        if !self.config.heads.classification {
            return Err(Error::Config(
                "predict_topk needs the classification head".to_string(),
            ));
        }
        if k == 0 || k > self.config.vocab_size {
            return Err(Error::Argument(format!(
                "k must be in 1..={}, got {k}",
                self.config.vocab_size
            )));
        }
        let pass = self.forward(&[scan], Mode::Infer, rng)?;
        let probs = pass.activations.class_probs.unwrap();
        let mut ranked: Vec<(usize, f64)> = probs.row(0).iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        ranked.truncate(k);
        Ok(ranked)
    }

    /// All batchnorm block names present on this model, canonical order.
    pub(crate) fn bn_block_names(&self) -> Vec<&'static str> {
        let mut names = vec!["hidden1", "latent"];
        if self.class_block.is_some() {
            names.push("class.block");
        }
        if self.enc1.is_some() {
            names.push("enc1");
        }
        if self.enc2.is_some() {
            names.push("enc2");
        }
        names
    }

    fn lookup(&self, name: &str) -> Option<&Tensor> {
        let (head, rest) = name.split_once('.')?;
        match head {
            "roi" => {
                let (idx, field) = rest.split_once('.')?;
                let layer = self.roi_layers.get(idx.parse::<usize>().ok()?)?;
                dense_field(layer, field)
            }
            "enc_roi" => {
                let (idx, field) = rest.split_once('.')?;
                let layer = self.enc_roi.get(idx.parse::<usize>().ok()?)?;
                dense_field(layer, field)
            }
            "hidden1" => self.hidden1.field(rest),
            "latent" => self.latent.field(rest),
            "reg_head" => dense_field(self.reg_head.as_ref()?, rest),
            "class" => match rest.split_once('.')? {
                ("block", sub) => self.class_block.as_ref()?.field(sub),
                ("out", field) => dense_field(self.class_out.as_ref()?, field),
                _ => None,
            },
            "enc1" => self.enc1.as_ref()?.field(rest),
            "enc2" => self.enc2.as_ref()?.field(rest),
            _ => None,
        }
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let (head, rest) = name.split_once('.')?;
        match head {
            "roi" => {
                let (idx, field) = rest.split_once('.')?;
                let layer = self.roi_layers.get_mut(idx.parse::<usize>().ok()?)?;
                dense_field_mut(layer, field)
            }
            "enc_roi" => {
                let (idx, field) = rest.split_once('.')?;
                let layer = self.enc_roi.get_mut(idx.parse::<usize>().ok()?)?;
                dense_field_mut(layer, field)
            }
            "hidden1" => self.hidden1.field_mut(rest),
            "latent" => self.latent.field_mut(rest),
            "reg_head" => dense_field_mut(self.reg_head.as_mut()?, rest),
            "class" => match rest.split_once('.')? {
                ("block", sub) => self.class_block.as_mut()?.field_mut(sub),
                ("out", field) => dense_field_mut(self.class_out.as_mut()?, field),
                _ => None,
            },
            "enc1" => self.enc1.as_mut()?.field_mut(rest),
            "enc2" => self.enc2.as_mut()?.field_mut(rest),
            _ => None,
        }
    }

    /// Non-trainable state (batchnorm running stats) by name.
    pub(crate) fn state(&self, name: &str) -> Option<&Tensor> {
        let (head, rest) = name.split_once('.')?;
        match head {
            "hidden1" => self.hidden1.state_field(rest),
            "latent" => self.latent.state_field(rest),
            "class" => {
                let ("block", sub) = rest.split_once('.')? else {
                    return None;
                };
                self.class_block.as_ref()?.state_field(sub)
            }
            "enc1" => self.enc1.as_ref()?.state_field(rest),
            "enc2" => self.enc2.as_ref()?.state_field(rest),
            _ => None,
        }
    }

    pub(crate) fn state_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let (head, rest) = name.split_once('.')?;
        match head {
            "hidden1" => self.hidden1.state_field_mut(rest),
            "latent" => self.latent.state_field_mut(rest),
            "class" => {
                let ("block", sub) = rest.split_once('.')? else {
                    return None;
                };
                self.class_block.as_mut()?.state_field_mut(sub)
            }
            "enc1" => self.enc1.as_mut()?.state_field_mut(rest),
            "enc2" => self.enc2.as_mut()?.state_field_mut(rest),
            _ => None,
        }
    }

    pub(crate) fn state_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .bn_block_names()
            .iter()
            .flat_map(|b| {
                NonLinearBlock::STATE_FIELDS
                    .iter()
                    .map(move |f| format!("{b}.{f}"))
            })
            .collect();
        names.sort();
        names
    }
}

fn dense_field<'a>(layer: &'a DenseParams, field: &str) -> Option<&'a Tensor> {
    match field {
        "weight" => Some(&layer.weights),
        "bias" => Some(&layer.bias),
        _ => None,
    }
}

fn dense_field_mut<'a>(layer: &'a mut DenseParams, field: &str) -> Option<&'a mut Tensor> {
    match field {
        "weight" => Some(&mut layer.weights),
        "bias" => Some(&mut layer.bias),
        _ => None,
    }
}

impl Parameterized for BrainDecoder {
    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for r in 0..self.roi_layers.len() {
            names.push(format!("roi.{r:03}.weight"));
            names.push(format!("roi.{r:03}.bias"));
        }
        for block in ["hidden1", "latent"] {
            for f in NonLinearBlock::FIELDS {
                names.push(format!("{block}.{f}"));
            }
        }
        if self.reg_head.is_some() {
            names.push("reg_head.weight".to_string());
            names.push("reg_head.bias".to_string());
        }
        if self.class_block.is_some() {
            for f in NonLinearBlock::FIELDS {
                names.push(format!("class.block.{f}"));
            }
            names.push("class.out.weight".to_string());
            names.push("class.out.bias".to_string());
        }
        if self.enc1.is_some() {
            for f in NonLinearBlock::FIELDS {
                names.push(format!("enc1.{f}"));
            }
        }
        if self.enc2.is_some() {
            for f in NonLinearBlock::FIELDS {
                names.push(format!("enc2.{f}"));
            }
        }
        for r in 0..self.enc_roi.len() {
            names.push(format!("enc_roi.{r:03}.weight"));
            names.push(format!("enc_roi.{r:03}.bias"));
        }
        names.sort();
        names
    }

    fn param(&self, name: &str) -> Option<&Tensor> {
        self.lookup(name)
    }

    fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.lookup_mut(name)
    }
}

/// Columns `[a, b)` of a `[batch x w]` tensor as a new tensor.
fn cols(t: &Tensor, a: usize, b: usize) -> Tensor {
    let (batch, w) = t.dims2();
    debug_assert!(a <= b && b <= w);
    let mut out = Tensor::zeros(&[batch, b - a]);
    for r in 0..batch {
        for (j, c) in (a..b).enumerate() {
            out.set2(r, j, t.get2(r, c));
        }
    }
    out
}

/// Write `src` into `dst` starting at column `at`.
fn paste_cols(dst: &mut Tensor, at: usize, src: &Tensor) {
    let (batch, w) = src.dims2();
    debug_assert_eq!(dst.dims2().0, batch);
    debug_assert!(at + w <= dst.dims2().1);
    for r in 0..batch {
        for j in 0..w {
            dst.set2(r, at + j, src.get2(r, j));
        }
    }
}
