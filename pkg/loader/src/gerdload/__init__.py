"""Read GERD recording datasets for training and analysis."""

from gerdload.dataset import (
    DENSE,
    EVENT_DTYPE,
    LABEL_DTYPE,
    LABEL_FIELDS,
    MODES,
    SPARSE,
    CorruptRecording,
    DatasetHandle,
    LoaderError,
    MissingIndex,
    RecordingInfo,
    open_dataset,
    read_events,
    read_labels,
    to_dense,
)

__version__ = "0.1.0"

__all__ = [
    "DENSE",
    "EVENT_DTYPE",
    "LABEL_DTYPE",
    "LABEL_FIELDS",
    "MODES",
    "SPARSE",
    "CorruptRecording",
    "DatasetHandle",
    "LoaderError",
    "MissingIndex",
    "RecordingInfo",
    "open_dataset",
    "read_events",
    "read_labels",
    "to_dense",
]
