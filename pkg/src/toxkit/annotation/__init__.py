from .campaign import (
    AnnotationResponse,
    AnnotationTask,
    Campaign,
    EFFECTS,
    VERDICTS,
    export_labels,
)
from .service import create_app

__all__ = [
    "AnnotationResponse",
    "AnnotationTask",
    "Campaign",
    "EFFECTS",
    "VERDICTS",
    "export_labels",
    "create_app",
]
