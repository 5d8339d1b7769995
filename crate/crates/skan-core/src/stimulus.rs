//! Seeded generation of target spike patterns, Poisson channel noise,
//! presentation schedules, and intensity-to-latency image encoding.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One spike per channel at a fixed offset inside the presentation window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub n_channels: usize,
    pub window_len: u32,
    pub offsets: Vec<u32>,
}

/// Expected noise spikes per presentation window per channel.
/// SNR notation 1:x corresponds to lambda = x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub lambda_per_channel: Vec<f64>,
}

impl NoiseSpec {
    pub fn uniform(n_channels: usize, lambda: f64) -> Self {
        NoiseSpec {
            lambda_per_channel: vec![lambda; n_channels],
        }
    }

    pub fn silent(n_channels: usize) -> Self {
        Self::uniform(n_channels, 0.0)
    }
}

/// A deterministic, seeded presentation schedule. Gaps between
/// presentations are uniform in `[window_len, 3 * window_len]` so the
/// neuron cannot learn the presentation period itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusProgram {
    /// Pattern index per slot, or `None` for a blank slot.
    pub slots: Vec<Option<usize>>,
    /// Window start time per slot.
    pub starts: Vec<u64>,
    pub window_len: u32,
    pub total_len: u64,
    pub seed: u64,
}

impl StimulusProgram {
    pub fn new(slots: Vec<Option<usize>>, window_len: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let mut starts = Vec::with_capacity(slots.len());
        let mut t = 0u64;
        for _ in &slots {
            starts.push(t);
            let gap = rng.gen_range(window_len as u64..=3 * window_len as u64);
            t += window_len as u64 + gap;
        }
        StimulusProgram {
            slots,
            starts,
            window_len,
            total_len: t,
            seed,
        }
    }

    /// Schedule repeating a single pattern.
    pub fn repeat(n_presentations: usize, window_len: u32, seed: u64) -> Self {
        Self::new(vec![Some(0); n_presentations], window_len, seed)
    }
}

/// Sparse binary spike raster, time by channel. Colliding spikes collapse
/// to a single 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Raster {
    pub n_channels: usize,
    pub len: u64,
    /// Sorted, deduplicated (timestep, channel) pairs.
    pub spikes: Vec<(u64, u32)>,
}

impl Raster {
    pub fn from_spikes(n_channels: usize, len: u64, mut spikes: Vec<(u64, u32)>) -> Self {
        spikes.sort_unstable();
        spikes.dedup();
        spikes.retain(|&(t, c)| t < len && (c as usize) < n_channels);
        Raster {
            n_channels,
            len,
            spikes,
        }
    }

    /// Visit every timestep in order with the dense input row for that step.
    pub fn scan<F: FnMut(u64, &[bool])>(&self, mut f: F) {
        let mut row = vec![false; self.n_channels];
        let mut i = 0;
        for t in 0..self.len {
            let begin = i;
            while i < self.spikes.len() && self.spikes[i].0 == t {
                row[self.spikes[i].1 as usize] = true;
                i += 1;
            }
            f(t, &row);
            for &(_, c) in &self.spikes[begin..i] {
                row[c as usize] = false;
            }
        }
    }

    pub fn spike_count(&self) -> usize {
        self.spikes.len()
    }
}

/// Draw a pattern with offsets uniform in `[0, window_len)`.
pub fn gen_pattern(n_channels: usize, window_len: u32, seed: u64) -> PatternSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets = (0..n_channels).map(|_| rng.gen_range(0..window_len)).collect();
    PatternSpec {
        n_channels,
        window_len,
        offsets,
    }
}

/// Knuth's Poisson sampler; fine for the small rates used here.
pub fn poisson<R: RngCore>(lambda: f64, rng: &mut R) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = libm::exp(-lambda);
    let mut k = 0u32;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

/// Per-channel noise spike times for one window: counts are
/// Poisson(lambda), times uniform in the window.
pub fn gen_noise(spec: &NoiseSpec, window_len: u32, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_noise_with(spec, window_len, &mut rng)
}

pub fn gen_noise_with<R: Rng>(spec: &NoiseSpec, window_len: u32, rng: &mut R) -> Vec<Vec<u32>> {
    spec.lambda_per_channel
        .iter()
        .map(|&lambda| {
            let count = poisson(lambda, rng);
            (0..count).map(|_| rng.gen_range(0..window_len)).collect()
        })
        .collect()
}

/// Union of scheduled target spikes and tiled Poisson noise over the
/// whole program duration (gaps included).
pub fn compose_stream(
    program: &StimulusProgram,
    patterns: &[PatternSpec],
    noise: &NoiseSpec,
) -> Raster {
    let n_channels = patterns
        .first()
        .map(|p| p.n_channels)
        .unwrap_or(noise.lambda_per_channel.len());
    let mut spikes: Vec<(u64, u32)> = Vec::new();

    for (slot, &start) in program.slots.iter().zip(&program.starts) {
        if let Some(pi) = slot {
            let pat = &patterns[*pi];
            for (ch, &off) in pat.offsets.iter().enumerate() {
                spikes.push((start + off as u64, ch as u32));
            }
        }
    }

    if noise.lambda_per_channel.iter().any(|&l| l > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(program.seed);
        rng.set_stream(1);
        let w = program.window_len as u64;
        let mut t0 = 0u64;
        while t0 < program.total_len {
            for (ch, times) in gen_noise_with(noise, program.window_len, &mut rng)
                .into_iter()
                .enumerate()
            {
                for time in times {
                    let t = t0 + time as u64;
                    if t < program.total_len {
                        spikes.push((t, ch as u32));
                    }
                }
            }
            t0 += w;
        }
    }

    Raster::from_spikes(n_channels, program.total_len, spikes)
}

/// Map pixel intensity to spike latency, brightest first:
/// `t = round((255 - p) * t_max / 255)`. Every pixel spikes exactly once.
pub fn encode_latency(image: &[u8], t_max: u32) -> Vec<u32> {
    image
        .iter()
        .map(|&p| {
            let a = (255 - p as u64) * t_max as u64;
            ((2 * a + 255) / 510) as u32
        })
        .collect()
}
