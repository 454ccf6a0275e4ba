"""Explainer backends.

Each backend answers "how much did each string position contribute to the
positive-class probability for this instance".  The `shap` and `lime`
libraries are used when importable; otherwise a built-in computation of
the same quantity stands in, and the choice is recorded in the backend's
settings so output files say which implementation produced them.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import Ridge

# Exact coalition enumeration grows as 2^l; beyond this, install shap.
EXACT_MAX_FEATURES = 14
BACKGROUND_CAP = 100
LIME_SAMPLES = 5000
LIME_RIDGE_ALPHA = 1.0


class BackendUnavailableError(RuntimeError):
    pass


@dataclass
class Backend:
    explainer: str
    kind: str  # "library" or "builtin"
    settings: dict = field(default_factory=dict)

    def explain(self, x: np.ndarray, seed: int) -> np.ndarray:
        raise NotImplementedError


def _positive_proba(model, pos_label: int = 1):
    """Predict-function returning P(positive class), robust to single-class fits."""
    classes = list(model.classes_)
    if pos_label in classes:
        col = classes.index(pos_label)

        def predict(rows: np.ndarray) -> np.ndarray:
            return model.predict_proba(rows)[:, col]
    else:
        def predict(rows: np.ndarray) -> np.ndarray:
            return np.zeros(len(rows))
    return predict


# --- TreeSHAP ----------------------------------------------------------------


class _LibraryTreeShap(Backend):
    def __init__(self, model, background: np.ndarray):
        import shap

        super().__init__("treeshap", "library",
                         {"library": "shap", "version": shap.__version__,
                          "feature_perturbation": "interventional",
                          "background_rows": int(len(background))})
        self._explainer = shap.TreeExplainer(
            model, data=background, feature_perturbation="interventional")
        self._pos_col = list(model.classes_).index(1) if 1 in model.classes_ else None

    def explain(self, x: np.ndarray, seed: int) -> np.ndarray:
        if self._pos_col is None:
            return np.zeros(len(x))
        values = self._explainer.shap_values(x[None, :], check_additivity=False)
        if isinstance(values, list):  # one array per class
            return np.asarray(values[self._pos_col][0], dtype=float)
        values = np.asarray(values)
        if values.ndim == 3:  # (rows, features, classes)
            return values[0, :, self._pos_col].astype(float)
        return values[0].astype(float)


class _ExactTreeShap(Backend):
    """Interventional Shapley values by full coalition enumeration.

    Same estimand the library computes for a tree ensemble with a background
    dataset, evaluated directly from the model's predictions: v(S) averages
    P(positive) over hybrids taking coalition positions from x and the rest
    from each background row.  Exponential in string length, exact.
    """

    def __init__(self, model, background: np.ndarray):
        super().__init__("treeshap", "builtin",
                         {"method": "exact interventional enumeration",
                          "background_rows": int(len(background)),
                          "max_features": EXACT_MAX_FEATURES})
        self._predict = _positive_proba(model)
        self._background = np.asarray(background)

    def explain(self, x: np.ndarray, seed: int) -> np.ndarray:
        l = len(x)
        if l > EXACT_MAX_FEATURES:
            raise BackendUnavailableError(
                f"exact enumeration is capped at {EXACT_MAX_FEATURES} positions "
                f"(got {l}); install shap for longer strings")
        count = 1 << l
        idx = np.arange(count)
        masks = ((idx[:, None] >> np.arange(l)[None, :]) & 1).astype(bool)

        b = self._background
        # hybrid rows for every (coalition, background) pair, predicted in chunks
        v = np.empty(count)
        chunk = max(1, (1 << 18) // max(1, len(b)))
        for start in range(0, count, chunk):
            m = masks[start:start + chunk]
            hybrids = np.where(m[:, None, :], x[None, None, :], b[None, :, :])
            probs = self._predict(hybrids.reshape(-1, l))
            v[start:start + chunk] = probs.reshape(len(m), len(b)).mean(axis=1)

        sizes = masks.sum(axis=1)
        fact = [math.factorial(s) for s in range(l + 1)]
        weight_by_size = np.array(
            [fact[s] * fact[l - s - 1] / fact[l] for s in range(l)] + [0.0])
        scores = np.zeros(l)
        for i in range(l):
            without = ~masks[:, i]
            s_idx = idx[without]
            w = weight_by_size[sizes[without]]
            scores[i] = float(np.sum(w * (v[s_idx | (1 << i)] - v[s_idx])))
        return scores


def make_treeshap(model, background: np.ndarray) -> Backend:
    background = np.asarray(background)[:BACKGROUND_CAP]
    try:
        return _LibraryTreeShap(model, background)
    except ImportError:
        return _ExactTreeShap(model, background)


# --- LIME ---------------------------------------------------------------------


class _LibraryLime(Backend):
    def __init__(self, model, train_X: np.ndarray, alphabet_size: int):
        import lime.lime_tabular

        l = train_X.shape[1]
        super().__init__("lime", "library",
                         {"library": "lime", "num_samples": LIME_SAMPLES,
                          "num_features": l})
        self._explainer = lime.lime_tabular.LimeTabularExplainer(
            train_X, categorical_features=list(range(l)),
            discretize_continuous=False)
        self._model = model
        self._l = l

    def explain(self, x: np.ndarray, seed: int) -> np.ndarray:
        import numpy.random as npr

        npr.seed(seed % (2 ** 32))  # lime draws from the global numpy state
        exp = self._explainer.explain_instance(
            x, self._model.predict_proba, labels=(1,),
            num_features=self._l, num_samples=LIME_SAMPLES)
        scores = np.zeros(self._l)
        for feature, weight in exp.as_map()[1]:
            scores[feature] = weight
        return scores


class _BuiltinLime(Backend):
    """Local surrogate in the tabular-LIME style.

    Neighborhood rows resample every position independently from the training
    marginals; the surrogate's inputs are match indicators against the
    explained instance, weighted by an exponential kernel on indicator
    distance, fit with ridge regression.  Coefficients are the attributions.
    """

    def __init__(self, model, train_X: np.ndarray, alphabet_size: int):
        l = train_X.shape[1]
        super().__init__("lime", "builtin",
                         {"method": "marginal resampling + weighted ridge",
                          "num_samples": LIME_SAMPLES,
                          "kernel_width": round(0.75 * math.sqrt(l), 6),
                          "ridge_alpha": LIME_RIDGE_ALPHA})
        self._predict = _positive_proba(model)
        self._l = l
        counts = np.stack([np.bincount(train_X[:, j], minlength=alphabet_size)
                           for j in range(l)])
        self._marginals = counts / counts.sum(axis=1, keepdims=True)
        self._kernel_width = 0.75 * math.sqrt(l)

    def explain(self, x: np.ndarray, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        l = self._l
        samples = np.empty((LIME_SAMPLES, l), dtype=np.int64)
        samples[0] = x
        for j in range(l):
            samples[1:, j] = rng.choice(
                len(self._marginals[j]), size=LIME_SAMPLES - 1,
                p=self._marginals[j])
        indicators = (samples == x[None, :]).astype(float)
        sq_dist = (1.0 - indicators).sum(axis=1)
        weights = np.exp(-sq_dist / self._kernel_width ** 2)
        y = self._predict(samples)
        fit = Ridge(alpha=LIME_RIDGE_ALPHA)
        fit.fit(indicators, y, sample_weight=weights)
        return np.asarray(fit.coef_, dtype=float)


def make_lime(model, train_X: np.ndarray, alphabet_size: int) -> Backend:
    try:
        return _LibraryLime(model, train_X, alphabet_size)
    except ImportError:
        return _BuiltinLime(model, train_X, alphabet_size)
