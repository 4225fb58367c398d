"""Scikit-learn style estimator for Christoffel-function support scoring.

Fitting ingests a point cloud as an empirical moment sequence and
factorizes its degree-t moment matrix once; scoring evaluates the scaled
Christoffel function s(t) * Lambda_t(x), which concentrates near O(1)
inside the support of the cloud and decays rapidly outside.  Points score
as inliers when the scaled value clears the threshold (1.0 by
convention).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .christoffel import CDKernel
from .moments import empirical_moments


class ChristoffelSupportEstimator(OutlierMixin, BaseEstimator):
    """Support estimation / outlier scoring via the empirical Christoffel function.

    Parameters
    ----------
    degree : int, default=4
        Kernel degree t; the moment matrix has order C(n + t, n) and the
        fit requires empirical moments up to degree 2t.
    threshold : float, default=1.0
        Inlier cutoff on the scaled Christoffel function s(t) * Lambda_t.
    regularize : bool, default=True
        Apply the documented ridge when the empirical moment matrix is
        numerically singular (small or degenerate clouds) instead of
        raising; the ``regularized_`` attribute records whether it fired.

    Attributes
    ----------
    kernel_ : CDKernel
        Factorized kernel of the fitted cloud.
    n_features_in_ : int
    regularized_ : bool
    """

    def __init__(self, degree: int = 4, threshold: float = 1.0, regularize: bool = True):
        self.degree = degree
        self.threshold = threshold
        self.regularize = regularize

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        phi = empirical_moments(X, 2 * self.degree)
        self.kernel_ = CDKernel(phi, self.degree, regularize=self.regularize)
        self.n_features_in_ = X.shape[1]
        self.regularized_ = self.kernel_.regularized
        return self

    def score_samples(self, X) -> np.ndarray:
        """Scaled Christoffel function s(t) * Lambda_t at each row of X."""
        check_is_fitted(self, "kernel_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, estimator was fitted with "
                f"{self.n_features_in_}"
            )
        return np.array([self.kernel_.support_score(row) for row in X])

    def decision_function(self, X) -> np.ndarray:
        return self.score_samples(X) - self.threshold

    def predict(self, X) -> np.ndarray:
        """+1 for points scored inside the support, -1 outside."""
        return np.where(self.decision_function(X) >= 0, 1, -1)
