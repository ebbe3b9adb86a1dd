//! Dataset ingestion, hand cropping, splitting and tensor I/O.

mod annotations;
mod crop;
mod split;
mod tensor;

pub use annotations::{
    load_annotations, read_canonical, write_canonical, AnnotationFormat, AnnotationRecord,
};
pub use crop::{crop_hand, CropResult, DEFAULT_CROP_FACTOR};
pub use split::{split_dataset, SplitMix64, Splits};
pub use tensor::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, DTYPE_F32, HEADER_LEN, MAGIC,
    VERSION,
};
