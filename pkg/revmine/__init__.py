"""revmine - feature extraction from app reviews.

Corpus model, annotation-guideline simulation, a CRF sequence tagger and the
cross-validation procedures used to compare them.
"""

from .settings import VERSION as __version__

__all__ = ["__version__"]
