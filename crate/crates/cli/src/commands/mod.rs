pub mod decode;
pub mod lm;
pub mod prep;
pub mod score;
