"""Speech enhancement workbench for first-order ambisonics (B-format) scenes.

Compares per-channel (SISO) masking, which keeps spatial cues, against
delay-and-sum (MISO) beamforming, which collapses the scene to mono.
"""
from .dsp import AudioBuffer, Spectrogram, StftConfig, fft_convolve, istft, resample, stft
from .scene import BFormatScene, Direction, RirSet, encode_plane_wave, steer_to_mono

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "BFormatScene", "Direction", "RirSet", "Spectrogram", "StftConfig",
    "encode_plane_wave", "fft_convolve", "istft", "resample", "steer_to_mono", "stft",
]
