//! Filters, framing and 2x rate conversion.

mod filter;
pub(crate) mod frame;
mod resample;
mod window;

pub use filter::{potsband_filter, Biquad, PotsBand, SosFilter, POTS_HIGH_HZ, POTS_LOW_HZ};
pub use frame::{frame_signal, frame_start_count, preemphasize, FrameSequence, Overlap};
pub use resample::{downsample_2x, halfband_taps, upsample_2x, zero_insert_2x};
pub(crate) use resample::{upsample, zero_insert};
pub use window::{window, WindowKind};
