"""scikit-learn style wrappers so the core operations compose with Pipelines,
grid search, and anything else speaking the estimator protocol.

The underlying operations are stateless, so fit() only validates parameters
(the usual convention for stateless transformers); ModalityClassifier is the
exception, its fit() stores the reference embeddings.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .modality import ModalityCatalog, select_modality
from .roi import RoiConfig, extract_boxes
from .saliency import SuppressionParams, suppress_background
from .textprep import (
    Lexicon,
    LexiconKeywordExtractor,
    StaticKeywordExtractor,
    derive_background_text,
)


class SaliencySuppressor(TransformerMixin, BaseEstimator):
    """Gated background subtraction over (original, background) map pairs.

    transform accepts a single pair shaped (2, h, w) or a batch shaped
    (n, 2, h, w), returning a map or a stack of maps respectively.
    """

    def __init__(self, delta=0.6, epsilon=2.0, clamp_nonnegative=True):
        self.delta = delta
        self.epsilon = epsilon
        self.clamp_nonnegative = clamp_nonnegative

    def _params(self) -> SuppressionParams:
        return SuppressionParams(
            delta=self.delta,
            epsilon=self.epsilon,
            clamp_nonnegative=self.clamp_nonnegative,
        )

    def fit(self, X=None, y=None):
        self._params()
        return self

    def __sklearn_is_fitted__(self):
        # stateless: usable straight after construction
        return True

    def transform(self, X):
        params = self._params()
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 3 and arr.shape[0] == 2:
            return suppress_background(arr[0], arr[1], params)
        if arr.ndim == 4 and arr.shape[1] == 2:
            return np.stack([suppress_background(pair[0], pair[1], params) for pair in arr])
        raise ValueError(
            f"expected a (2, h, w) pair or an (n, 2, h, w) batch, got shape {arr.shape}"
        )


class RoiBoxExtractor(TransformerMixin, BaseEstimator):
    """Saliency maps in, selected bounding boxes out.

    transform accepts a single (h, w) map or an (n, h, w) batch and returns a
    list of BoundingBox (or a list of such lists).
    """

    def __init__(
        self,
        threshold_mode="quantile",
        threshold=0.85,
        connectivity=8,
        min_area=None,
        max_boxes=3,
    ):
        self.threshold_mode = threshold_mode
        self.threshold = threshold
        self.connectivity = connectivity
        self.min_area = min_area
        self.max_boxes = max_boxes

    def _config(self) -> RoiConfig:
        return RoiConfig(
            threshold_mode=self.threshold_mode,
            threshold=self.threshold,
            connectivity=self.connectivity,
            min_area=self.min_area,
            max_boxes=self.max_boxes,
        )

    def fit(self, X=None, y=None):
        self._config()
        return self

    def __sklearn_is_fitted__(self):
        return True

    def transform(self, X):
        config = self._config()
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 2:
            return list(extract_boxes(arr, config).boxes)
        if arr.ndim == 3:
            return [list(extract_boxes(m, config).boxes) for m in arr]
        raise ValueError(f"expected an (h, w) map or an (n, h, w) batch, got shape {arr.shape}")


class ModalityClassifier(ClassifierMixin, BaseEstimator):
    """Nearest-label classifier under cosine similarity.

    fit(X, y) takes one reference embedding per label; predict scores queries
    against every reference and returns the argmax label, ties resolving to
    the earliest fit entry. classes_ keeps fit order for that reason.
    """

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = [str(label) for label in y]
        if X.ndim != 2 or X.shape[0] != len(y):
            raise ValueError(
                f"X must be (n_labels, dim) aligned with y, got {X.shape} and {len(y)} labels"
            )
        self.catalog_ = ModalityCatalog(tuple(y), X)
        self.classes_ = np.asarray(self.catalog_.labels)
        return self

    def _as_batch(self, X) -> np.ndarray:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ValueError(f"expected a (dim,) vector or (n, dim) batch, got shape {arr.shape}")
        return arr

    def decision_function(self, X):
        check_is_fitted(self)
        batch = self._as_batch(X)
        scores = np.empty((batch.shape[0], len(self.catalog_)), dtype=np.float64)
        for i, row in enumerate(batch):
            selection = select_modality(row, self.catalog_)
            scores[i] = [s for _, s in selection.all_scores]
        return scores

    def predict(self, X):
        check_is_fitted(self)
        batch = self._as_batch(X)
        return np.asarray([select_modality(row, self.catalog_).label for row in batch])


class BackgroundTextTransformer(TransformerMixin, BaseEstimator):
    """Strip keywords from questions, yielding the background text per question.

    Exactly one keyword source applies: a Lexicon (ranked, truncated to top_k)
    or an explicit keyword list. With neither, questions pass through with
    tokens rejoined.
    """

    def __init__(self, lexicon=None, keywords=None, top_k=5):
        self.lexicon = lexicon
        self.keywords = keywords
        self.top_k = top_k

    def _extractor(self):
        if self.lexicon is not None and self.keywords is not None:
            raise ValueError("pass either lexicon or keywords, not both")
        if self.lexicon is not None:
            lexicon = self.lexicon
            if not isinstance(lexicon, Lexicon):
                lexicon = Lexicon(dict(lexicon))
            return LexiconKeywordExtractor(lexicon, top_k=self.top_k)
        return StaticKeywordExtractor(tuple(self.keywords or ()))

    def fit(self, X=None, y=None):
        self._extractor()
        return self

    def __sklearn_is_fitted__(self):
        return True

    def transform(self, X):
        extractor = self._extractor()
        return [derive_background_text(text, extractor.extract(text)) for text in X]
