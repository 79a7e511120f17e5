//! The guide in `book/`, compiled so that `cargo test --doc` runs every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}
#[doc = include_str!("../../../book/src/coordinates.md")]
pub mod coordinates {}
#[doc = include_str!("../../../book/src/actions.md")]
pub mod actions {}
#[doc = include_str!("../../../book/src/normal_form.md")]
pub mod normal_form {}
#[doc = include_str!("../../../book/src/whitham.md")]
pub mod whitham {}
#[doc = include_str!("../../../book/src/hill.md")]
pub mod hill {}
#[doc = include_str!("../../../book/src/settings.md")]
pub mod settings {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
