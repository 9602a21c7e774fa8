#![allow(dead_code)]
pub mod estoi_oracle;
