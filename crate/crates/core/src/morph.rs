//! Binary-mask morphology and connected-component labeling.
//!
//! The 3x3 structuring element uses clamp-to-edge coordinates like every
//! other windowed filter in the crate. Components are 8-connected.

/// Erosion with a 3x3 structuring element: a pixel survives only when its
/// whole (clamped) 3x3 neighborhood is set.
pub fn erode3x3(bits: &[bool], width: u32, height: u32) -> Vec<bool> {
    let w = width as i64;
    let h = height as i64;
    let mut out = vec![false; bits.len()];
    for y in 0..h {
        for x in 0..w {
            let mut all = true;
            'win: for dy in -1..=1 {
                for dx in -1..=1 {
                    let cx = (x + dx).clamp(0, w - 1);
                    let cy = (y + dy).clamp(0, h - 1);
                    if !bits[(cy * w + cx) as usize] {
                        all = false;
                        break 'win;
                    }
                }
            }
            out[(y * w + x) as usize] = all;
        }
    }
    out
}

/// Dilation with a 3x3 structuring element.
pub fn dilate3x3(bits: &[bool], width: u32, height: u32) -> Vec<bool> {
    let w = width as i64;
    let h = height as i64;
    let mut out = vec![false; bits.len()];
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            'win: for dy in -1..=1 {
                for dx in -1..=1 {
                    let cx = (x + dx).clamp(0, w - 1);
                    let cy = (y + dy).clamp(0, h - 1);
                    if bits[(cy * w + cx) as usize] {
                        any = true;
                        break 'win;
                    }
                }
            }
            out[(y * w + x) as usize] = any;
        }
    }
    out
}

/// Morphological opening (erosion then dilation); removes speckle and
/// structures thinner than three pixels.
pub fn open3x3(bits: &[bool], width: u32, height: u32) -> Vec<bool> {
    dilate3x3(&erode3x3(bits, width, height), width, height)
}

/// 8-connected component labeling. Labels start at 1; 0 is background.
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Vec<u32>,
    pub count: u32,
    /// Component areas indexed by `label - 1`.
    pub areas: Vec<usize>,
}

pub fn connected_components(bits: &[bool], width: u32, height: u32) -> Components {
    let w = width as i64;
    let h = height as i64;
    let mut labels = vec![0u32; bits.len()];
    let mut areas = Vec::new();
    let mut next = 1u32;
    let mut stack = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let mut area = 0usize;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            area += 1;
            let x = (i as i64) % w;
            let y = (i as i64) / w;
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if bits[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
        areas.push(area);
        next += 1;
    }

    Components {
        labels,
        count: next - 1,
        areas,
    }
}
