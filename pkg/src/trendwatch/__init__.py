"""Streaming weak-signal detection over time-sliced text corpora."""

__version__ = "0.1.0"

from .corpus import DocumentSlice, Granularity, RawDocument, TextUnit, ingest, preprocess, slice_units
from .engine import EngineParams, TrendEngine
from .extraction import ExtractionParams, SliceTopic, extract
from .zeroshot import ZeroShotMonitor

__all__ = [
    "DocumentSlice",
    "EngineParams",
    "ExtractionParams",
    "Granularity",
    "RawDocument",
    "SliceTopic",
    "TextUnit",
    "TrendEngine",
    "ZeroShotMonitor",
    "extract",
    "ingest",
    "preprocess",
    "slice_units",
]
