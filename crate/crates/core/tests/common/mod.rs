pub mod progen;
pub mod oracle;
pub mod soundness;
