"""Nasal and temporal eye-corner localization in face images."""

from .clahe import ClaheParams, clahe
from .image import Rect, to_grayscale
from .pipeline import PipelineConfig, process_eye_crop, process_frame
from .prune import EyeCorners, prune

__all__ = ["ClaheParams", "clahe", "Rect", "to_grayscale", "PipelineConfig",
           "process_eye_crop", "process_frame", "EyeCorners", "prune"]
__version__ = "0.1.0"
