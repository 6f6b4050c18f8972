//! Attacker-side payload injection: a fixed RGB offset applied to the payload
//! pixels at a chosen placement, plus the layout-steering prompt suffix.
//!
//! The offset is applied equally to all three channels and clamped to
//! [0, 255]; wrapping would create high-contrast artifacts that destroy
//! stealth. Everything off the mask stays bit-identical.

use serde::{Deserialize, Serialize};

use crate::entropy::PlacementDecision;
use crate::error::{Error, Result};
use crate::imaging::{ImageBuffer, PayloadMask};

/// The exact layout-steering suffix appended to generation prompts.
pub const AUGMENTATION_SUFFIX: &str = "minimalist composition, objects in the corner of the \
                                       image, vast empty space, no clutter in the middle, solid background";

/// Direction of the channel offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> i32 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// Where the payload bbox goes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Use the outcome of the entropy-guided placement scan.
    Decision(PlacementDecision),
    /// Explicit top-left corner for the payload bbox.
    Origin(u32, u32),
}

/// Full description of one injection.
#[derive(Debug, Clone)]
pub struct InjectionSpec {
    /// Per-channel offset; 1, 2, 3, 4, 5 and 10 are the studied settings.
    pub strength: u8,
    pub sign: Sign,
    pub placement: Placement,
    /// Payload mask, already scaled to its final size.
    pub mask: PayloadMask,
    /// When true, a placement decision marked infeasible aborts the embed.
    pub require_feasible: bool,
}

impl InjectionSpec {
    /// Positive-sign injection at an explicit origin.
    pub fn at_origin(mask: PayloadMask, origin: (u32, u32), strength: u8) -> Self {
        InjectionSpec {
            strength,
            sign: Sign::Positive,
            placement: Placement::Origin(origin.0, origin.1),
            mask,
            require_feasible: false,
        }
    }

    /// Positive-sign injection at a placement decision.
    pub fn at_decision(mask: PayloadMask, decision: PlacementDecision, strength: u8) -> Self {
        InjectionSpec {
            strength,
            sign: Sign::Positive,
            placement: Placement::Decision(decision),
            mask,
            require_feasible: false,
        }
    }
}

/// Provenance record written next to each injected image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub payload_id: String,
    pub origin: (u32, u32),
    pub strength: u8,
    pub sign: Sign,
    /// Payload pixels where at least one channel saturated and could not
    /// move by the full offset.
    pub clipped_pixels: usize,
}

/// Applies `spec` to `image`: every payload pixel gets
/// `clamp(channel + sign * strength)` on all three channels, all other pixels
/// stay bit-identical.
pub fn embed_payload(
    image: &ImageBuffer,
    spec: &InjectionSpec,
) -> Result<(ImageBuffer, InjectionRecord)> {
    let origin = match spec.placement {
        Placement::Origin(x, y) => (x, y),
        Placement::Decision(d) => {
            if spec.require_feasible && !d.feasible {
                return Err(Error::InfeasiblePlacement {
                    entropy: d.window_entropy,
                });
            }
            d.origin
        }
    };
    let placed = spec.mask.place(image.width(), image.height(), origin)?;
    let delta = spec.sign.factor() * i32::from(spec.strength);

    let mut out = image.clone();
    let mut clipped = 0usize;
    let bbox = placed.bbox();
    for y in bbox.y..bbox.y + bbox.h {
        for x in bbox.x..bbox.x + bbox.w {
            if !placed.bit(x, y) {
                continue;
            }
            let px = image.pixel(x, y);
            let mut new_px = [0u8; 3];
            let mut saturated = false;
            for c in 0..3 {
                let moved = i32::from(px[c]) + delta;
                let clamped = moved.clamp(0, 255);
                if clamped != moved {
                    saturated = true;
                }
                new_px[c] = clamped as u8;
            }
            if saturated {
                clipped += 1;
            }
            out.set_pixel(x, y, new_px);
        }
    }

    Ok((
        out,
        InjectionRecord {
            payload_id: placed.payload_id().to_string(),
            origin,
            strength: spec.strength,
            sign: spec.sign,
            clipped_pixels: clipped,
        },
    ))
}

/// Appends the layout-steering suffix to a prompt. Idempotent: a prompt that
/// already carries the suffix is returned unchanged.
pub fn augment_prompt(prompt: &str) -> Result<String> {
    if prompt.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    if prompt.contains(AUGMENTATION_SUFFIX) {
        return Ok(prompt.to_string());
    }
    Ok(format!("{prompt}, {AUGMENTATION_SUFFIX}"))
}

/// Recovers the exact set of pixels where the two images differ in any
/// channel. This inverts a clipping-free embed.
pub fn residual_of(clean: &ImageBuffer, injected: &ImageBuffer) -> Result<PayloadMask> {
    if !clean.same_dims(injected) {
        return Err(Error::dims(
            clean.width(),
            clean.height(),
            injected.width(),
            injected.height(),
        ));
    }
    let bits = clean
        .data()
        .chunks_exact(3)
        .zip(injected.data().chunks_exact(3))
        .map(|(a, b)| a != b)
        .collect();
    PayloadMask::from_bits(clean.width(), clean.height(), bits, "residual")
}
