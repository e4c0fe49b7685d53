use crate::error::{Error, Result};

use super::pool::pooled_len;

pub const IMAGE_SIZE: usize = 100;
pub const KERNEL_SIZE: usize = 5;
pub const CONV_LAYERS: usize = 4;

/// Convolution map counts and fully-connected widths of the ten compared
/// configurations, in table order.
pub const TABLE_CONFIGS: [([usize; 4], [usize; 2]); 10] = [
    ([16, 32, 64, 128], [1024, 256]),
    ([8, 32, 64, 128], [1024, 256]),
    ([32, 32, 64, 128], [1024, 256]),
    ([16, 16, 64, 128], [1024, 256]),
    ([16, 64, 64, 128], [1024, 256]),
    ([16, 32, 32, 128], [1024, 256]),
    ([16, 32, 128, 128], [1024, 256]),
    ([16, 32, 64, 64], [1024, 256]),
    ([16, 32, 64, 128], [512, 256]),
    ([16, 32, 64, 128], [1024, 512]),
];

/// Four conv+ReLU+pool blocks, two fully-connected ReLU layers with dropout,
/// and a linear output layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub input_depth: usize,
    pub kernel: usize,
    pub conv_maps: [usize; 4],
    pub fc_sizes: [usize; 2],
    pub num_classes: usize,
    /// Local response normalization after each pooling layer.
    pub lrn: bool,
}

impl NetworkConfig {
    /// Configuration `nr` (1-based) of the comparison table at 100x100 input.
    pub fn table(nr: usize, input_depth: usize, num_classes: usize) -> Result<Self> {
        let (conv_maps, fc_sizes) = *nr
            .checked_sub(1)
            .and_then(|i| TABLE_CONFIGS.get(i))
            .ok_or_else(|| Error::Config(format!("configuration number {nr} is not in 1..=10")))?;
        let cfg = Self {
            input_height: IMAGE_SIZE,
            input_width: IMAGE_SIZE,
            input_depth,
            kernel: KERNEL_SIZE,
            conv_maps,
            fc_sizes,
            num_classes,
            lrn: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.input_height, self.input_width, self.input_depth, self.kernel, self.num_classes];
        if counts.iter().chain(&self.conv_maps).chain(&self.fc_sizes).any(|c| *c == 0) {
            return Err(Error::Config(format!("all layer sizes must be at least 1: {self:?}")));
        }
        Ok(())
    }

    /// Spatial size after the four pooling layers.
    pub fn pooled_dims(&self) -> (usize, usize) {
        let mut h = self.input_height;
        let mut w = self.input_width;
        for _ in 0..CONV_LAYERS {
            h = pooled_len(h);
            w = pooled_len(w);
        }
        (h, w)
    }

    pub fn fc1_inputs(&self) -> usize {
        let (h, w) = self.pooled_dims();
        h * w * self.conv_maps[3]
    }

    /// Activation shapes for a batch: input, then conv and pool output of
    /// each block, the flattened features, both hidden layers and the logits.
    pub fn activation_shapes(&self, batch: usize) -> Vec<Vec<usize>> {
        let mut shapes = vec![vec![batch, self.input_height, self.input_width, self.input_depth]];
        let (mut h, mut w) = (self.input_height, self.input_width);
        for maps in self.conv_maps {
            shapes.push(vec![batch, h, w, maps]);
            h = pooled_len(h);
            w = pooled_len(w);
            shapes.push(vec![batch, h, w, maps]);
        }
        shapes.push(vec![batch, self.fc1_inputs()]);
        shapes.push(vec![batch, self.fc_sizes[0]]);
        shapes.push(vec![batch, self.fc_sizes[1]]);
        shapes.push(vec![batch, self.num_classes]);
        shapes
    }

    /// Shapes of the trainable tensors in [`super::PARAM_NAMES`] order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        let mut depth = self.input_depth;
        for maps in self.conv_maps {
            shapes.push(vec![self.kernel, self.kernel, depth, maps]);
            shapes.push(vec![maps]);
            depth = maps;
        }
        let widths = [self.fc1_inputs(), self.fc_sizes[0], self.fc_sizes[1], self.num_classes];
        for pair in widths.windows(2) {
            shapes.push(vec![pair[0], pair[1]]);
            shapes.push(vec![pair[1]]);
        }
        shapes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_configuration() {
        let cfg = NetworkConfig::table(1, 4, 91).unwrap();
        assert_eq!(cfg.conv_maps, [16, 32, 64, 128]);
        assert_eq!(cfg.fc_sizes, [1024, 256]);
        assert_eq!(cfg.pooled_dims(), (7, 7));
        assert_eq!(cfg.fc1_inputs(), 6272);
        assert_eq!(cfg.param_shapes()[0], vec![5, 5, 4, 16]);
    }

    #[test]
    fn table_bounds() {
        assert!(NetworkConfig::table(0, 4, 3).is_err());
        assert!(NetworkConfig::table(11, 4, 3).is_err());
        assert_eq!(NetworkConfig::table(9, 4, 3).unwrap().fc_sizes, [512, 256]);
        assert_eq!(NetworkConfig::table(10, 4, 3).unwrap().fc_sizes, [1024, 512]);
        assert_eq!(NetworkConfig::table(8, 4, 3).unwrap().fc1_inputs(), 7 * 7 * 64);
    }

    #[test]
    fn zero_sizes_are_rejected() {
        assert!(NetworkConfig::table(1, 0, 3).is_err());
        assert!(NetworkConfig::table(1, 4, 0).is_err());
    }
}
