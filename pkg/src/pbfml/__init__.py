"""Layer-wise sensor feature extraction and binary power-factor
classification for laser powder bed fusion builds."""

__version__ = "0.1.0"
