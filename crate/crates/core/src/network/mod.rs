pub mod activation;
pub mod config;
pub mod conv;
pub mod dense;
pub mod lrn;
pub mod model;
pub mod params;
pub mod pool;
pub mod softmax;
pub mod tensor;

pub use config::{NetworkConfig, IMAGE_SIZE, KERNEL_SIZE, TABLE_CONFIGS};
pub use model::{backward, forward, predict_logits, ForwardCache};
pub use params::{init_params, Parameters, INIT_STD, PARAM_NAMES};
pub use softmax::{argmax_rows, cross_entropy_loss, softmax};
pub use tensor::{Scalar, Tensor};
