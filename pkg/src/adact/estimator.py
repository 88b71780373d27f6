"""scikit-learn compatible wrappers around :func:`adact.trainers.train`."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import fit_standardizer
from .trainers import TrainConfig, predict, train


class _AdActBase(BaseEstimator):
    def __init__(
        self,
        n_hidden=10,
        n_hinges=20,
        init_activation="sigmoid",
        trainer="adact",
        n_iter=100,
        act_optimizer="olf",
        adam_lr=0.01,
        weight_sigma=1.0,
        range_margin=0.05,
        leaky_slope=0.01,
        clamp_budget=0.0,
        standardize=True,
        random_state=0,
    ):
        self.n_hidden = n_hidden
        self.n_hinges = n_hinges
        self.init_activation = init_activation
        self.trainer = trainer
        self.n_iter = n_iter
        self.act_optimizer = act_optimizer
        self.adam_lr = adam_lr
        self.weight_sigma = weight_sigma
        self.range_margin = range_margin
        self.leaky_slope = leaky_slope
        self.clamp_budget = clamp_budget
        self.standardize = standardize
        self.random_state = random_state

    def _config(self):
        if self.random_state is not None and not isinstance(self.random_state, (int, np.integer)):
            raise ValueError("random_state must be an int or None")
        return TrainConfig(
            trainer=self.trainer,
            n_iter=self.n_iter,
            n_hidden=self.n_hidden,
            n_hinges=self.n_hinges,
            init_activation=self.init_activation,
            act_optimizer=self.act_optimizer,
            adam_lr=self.adam_lr,
            seed=0 if self.random_state is None else int(self.random_state),
            weight_sigma=self.weight_sigma,
            range_margin=self.range_margin,
            leaky_slope=self.leaky_slope,
            clamp_budget=self.clamp_budget,
        )

    def _fit_targets(self, X, T):
        # called after validate_data(reset=True) has recorded n_features_in_
        config = self._config()
        if self.standardize:
            self.scaler_ = fit_standardizer(X)
            X = self.scaler_.transform(X)
        else:
            self.scaler_ = None
        run = train(config, X, T)
        self.net_ = run.network
        self.history_ = run
        return self

    def _outputs(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        if self.scaler_ is not None:
            X = self.scaler_.transform(X)
        return predict(self.net_, X)


class AdActRegressor(RegressorMixin, _AdActBase):
    """Bypass MLP with trainable piecewise-linear hidden activations.

    >>> import numpy as np
    >>> X = np.linspace(0, 1, 50)[:, None]
    >>> reg = AdActRegressor(n_hidden=2, n_hinges=5, n_iter=5).fit(X, 3 * X[:, 0] + 1)
    >>> float(np.abs(reg.predict(X) - (3 * X[:, 0] + 1)).max()) < 1e-6
    True
    """

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.target_tags.multi_output = True
        return tags

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, multi_output=True, y_numeric=True,
                             ensure_min_samples=2)
        self.n_outputs_ = None if y.ndim == 1 else y.shape[1]
        return self._fit_targets(X, y[:, None] if y.ndim == 1 else y)

    def predict(self, X):
        Y = self._outputs(X)
        return Y[:, 0] if self.n_outputs_ is None else Y


class AdActClassifier(ClassifierMixin, _AdActBase):
    """One-hot MSE classifier; the predicted class is the largest output."""

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, ensure_min_samples=2)
        check_classification_targets(y)
        self.classes_, idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError(f"need at least two classes, got one class {self.classes_[0]!r}")
        return self._fit_targets(X, np.eye(self.classes_.size)[idx])

    def decision_function(self, X):
        """One score per class; for two classes, the score of ``classes_[1]`` over ``classes_[0]``."""
        Y = self._outputs(X)
        return Y[:, 1] - Y[:, 0] if Y.shape[1] == 2 else Y

    def predict(self, X):
        Y = self._outputs(X)
        return self.classes_[np.argmax(Y, axis=1)]
