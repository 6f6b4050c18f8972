//! faintmark: embed, measure, detect, and scrub near-invisible logo payloads.
//!
//! The library covers the full life cycle of a low-contrast payload hidden in
//! an image background:
//!
//! * [`imaging`]: raster types, lossless PNG I/O, and the deterministic
//!   filters everything else is built on.
//! * [`entropy`]: Shannon-entropy maps and low-entropy placement selection.
//! * [`embed`]: attacker-side payload injection (fixed RGB offset on a mask)
//!   and the layout-steering prompt augmentation.
//! * [`jnd`]: a just-noticeable-difference model and the visibility ratio
//!   that decides whether an injected payload is humanly perceptible.
//! * [`detect`]: paired and blind payload recovery plus shape matching
//!   against a payload library.
//! * [`scrub`]: background segmentation and deterministic regeneration that
//!   destroys hidden payloads while leaving foreground pixels untouched.
//!
//! All operations are pure functions of their inputs and a [`config::Config`]
//! snapshot; values can be shared freely across threads.

pub mod config;
pub mod detect;
pub mod embed;
pub mod entropy;
pub mod error;
pub mod imaging;
pub mod jnd;
pub mod morph;
pub mod scrub;

pub use config::Config;
pub use error::{Error, Result};
