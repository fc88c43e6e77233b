"""Dataset construction and ingestion.

Synthetic regression instances are built with *exact* empirical moments:
the feature matrix satisfies X'X/n == Sigma to machine precision and the
noise is exactly orthogonal to the features with mean square sigma2, so
every model cost equals (b - b*)' Sigma (b - b*) + sigma2 up to float
rounding. That makes golden-number tests exact rather than statistical.

Also provides a two-class iris subsample (petal length/width, the two
overlapping species) and a plain CSV loader with population-mean/variance
standardization.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumnError, DataError
from .linreg import RegressionInstance
from .trees import LabeledDataset2C

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ToySpec:
    """Equicorrelated regression toy: unit-variance features with common
    pairwise correlation rho, targets y = X beta_star + noise."""

    rho: float
    beta_star: tuple[float, ...]
    sigma2: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "beta_star", tuple(float(b) for b in self.beta_star))
        if not -1.0 < self.rho < 1.0:
            raise DataError(f"rho must be in (-1, 1), got {self.rho}")
        if self.sigma2 < 0:
            raise DataError(f"sigma2 must be >= 0, got {self.sigma2}")
        d = len(self.beta_star)
        if d < 1:
            raise DataError("beta_star must have at least one entry")
        if self.n < d + 1:
            raise DataError(f"need n >= d + 1 = {d + 1}, got {self.n}")

    @property
    def sigma(self) -> np.ndarray:
        d = len(self.beta_star)
        return (1.0 - self.rho) * np.eye(d) + self.rho * np.ones((d, d))


def exact_moment_instance(
    Sigma, beta_star, sigma2: float, n: int, feature_names=None, seed: int = 0
) -> RegressionInstance:
    """Regression instance with exact second moments.

    Constructs X = sqrt(n) * F L' from an orthonormal random frame F and
    the Cholesky factor L of Sigma, plus noise along one extra orthonormal
    direction. Consequently X'X/n == Sigma, X'eps == 0 and |eps|^2/n ==
    sigma2 exactly (up to machine epsilon). When n >= d + 2 the frame is
    drawn orthogonal to the all-ones vector, so every column (and the
    noise) also has exactly zero mean.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float).reshape(-1)
    d = beta_star.shape[0]
    if Sigma.shape != (d, d):
        raise DataError(f"Sigma must be {d}x{d}")
    if sigma2 < 0:
        raise DataError("sigma2 must be >= 0")
    if n < d + 1:
        raise DataError(
            f"n={n} is too small to host an orthogonal noise direction (need >= {d + 1})"
        )
    try:
        L = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError as exc:
        raise DataError("Sigma is not positive definite") from exc

    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, d + 1))
    if n >= d + 2:
        M = M - M.mean(axis=0)
    Q, R = np.linalg.qr(M)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    F, u = Q[:, :d], Q[:, d]
    X = np.sqrt(n) * (F @ L.T)
    eps = np.sqrt(n * sigma2) * u
    y = X @ beta_star + eps
    return RegressionInstance.from_data(X, y, feature_names)


def toy_dataset(spec: ToySpec, seed: int = 0) -> RegressionInstance:
    """Build the equicorrelated toy instance from its spec."""
    d = len(spec.beta_star)
    names = ("height", "weight") if d == 2 else tuple(f"x{j}" for j in range(d))
    return exact_moment_instance(
        spec.sigma, spec.beta_star, spec.sigma2, spec.n, feature_names=names, seed=seed
    )


# The two-feature/two-class toy from the paper-style tree experiments is a
# subsample of the classic iris measurements: petal length and width for
# the two overlapping species. Values are the standard public dataset.
IRIS_FEATURES = ("petal_length", "petal_width")
IRIS_CLASSES = ("versicolor", "virginica")
_IRIS_PETALS = (
    (4.7, 1.4, 0), (4.5, 1.5, 0), (4.9, 1.5, 0), (4.0, 1.3, 0), (4.6, 1.5, 0),
    (4.5, 1.3, 0), (4.7, 1.6, 0), (3.3, 1.0, 0), (4.6, 1.3, 0), (3.9, 1.4, 0),
    (3.5, 1.0, 0), (4.2, 1.5, 0), (4.0, 1.0, 0), (4.7, 1.4, 0), (3.6, 1.3, 0),
    (4.4, 1.4, 0), (4.5, 1.5, 0), (4.1, 1.0, 0), (4.5, 1.5, 0), (3.9, 1.1, 0),
    (4.8, 1.8, 0), (4.0, 1.3, 0), (4.9, 1.5, 0), (4.7, 1.2, 0), (4.3, 1.3, 0),
    (4.4, 1.4, 0), (4.8, 1.4, 0), (5.0, 1.7, 0), (4.5, 1.5, 0), (3.5, 1.0, 0),
    (3.8, 1.1, 0), (3.7, 1.0, 0), (3.9, 1.2, 0), (5.1, 1.6, 0), (4.5, 1.5, 0),
    (4.5, 1.6, 0), (4.7, 1.5, 0), (4.4, 1.3, 0), (4.1, 1.3, 0), (4.0, 1.3, 0),
    (4.4, 1.2, 0), (4.6, 1.4, 0), (4.0, 1.2, 0), (3.3, 1.0, 0), (4.2, 1.3, 0),
    (4.2, 1.2, 0), (4.2, 1.3, 0), (4.3, 1.3, 0), (3.0, 1.1, 0), (4.1, 1.3, 0),
    (6.0, 2.5, 1), (5.1, 1.9, 1), (5.9, 2.1, 1), (5.6, 1.8, 1), (5.8, 2.2, 1),
    (6.6, 2.1, 1), (4.5, 1.7, 1), (6.3, 1.8, 1), (5.8, 1.8, 1), (6.1, 2.5, 1),
    (5.1, 2.0, 1), (5.3, 1.9, 1), (5.5, 2.1, 1), (5.0, 2.0, 1), (5.1, 2.4, 1),
    (5.3, 2.3, 1), (5.5, 1.8, 1), (6.7, 2.2, 1), (6.9, 2.3, 1), (5.0, 1.5, 1),
    (5.7, 2.3, 1), (4.9, 2.0, 1), (6.7, 2.0, 1), (4.9, 1.8, 1), (5.7, 2.1, 1),
    (6.0, 1.8, 1), (4.8, 1.8, 1), (4.9, 1.8, 1), (5.6, 2.1, 1), (5.8, 1.6, 1),
    (6.1, 1.9, 1), (6.4, 2.0, 1), (5.6, 2.2, 1), (5.1, 1.5, 1), (5.6, 1.4, 1),
    (6.1, 2.3, 1), (5.6, 2.4, 1), (5.5, 1.8, 1), (4.8, 1.8, 1), (5.4, 2.1, 1),
    (5.6, 2.4, 1), (5.1, 2.3, 1), (5.1, 1.9, 1), (5.9, 2.3, 1), (5.7, 2.5, 1),
    (5.2, 2.3, 1), (5.0, 1.9, 1), (5.2, 2.0, 1), (5.4, 2.3, 1), (5.1, 1.8, 1),
)


def iris_subsample(n_points: int = 50, seed: int = 0) -> LabeledDataset2C:
    """Seeded subsample of the two overlapping iris species.

    Features are petal length and width, min-max scaled to [0, 1] over the
    subsample so thresholds land on a unit scale.
    """
    table = np.array(_IRIS_PETALS, dtype=float)
    if not 2 <= n_points <= table.shape[0]:
        raise DataError(f"n_points must be in [2, {table.shape[0]}]")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(table.shape[0], size=n_points, replace=False))
    sub = table[pick]
    feats = sub[:, :2]
    span = feats.max(axis=0) - feats.min(axis=0)
    span[span == 0] = 1.0
    feats = (feats - feats.min(axis=0)) / span
    labels = [IRIS_CLASSES[int(c)] for c in sub[:, 2]]
    return LabeledDataset2C.from_data(feats, labels, class_names=IRIS_CLASSES)


SCHOOL_FEATURES = (
    "Enrollment",
    "Teachers",
    "CalWPct",
    "MealPct",
    "Computers",
    "CompStu",
    "ExpnStu",
    "StuTeach",
    "AvgInc",
    "ELPct",
)

# Synthetic stand-in for the school test-score case study: standardized
# target (unit mean square), full least-squares MSE 0.095, MealPct-only
# MSE 0.122, true coefficients supported on four features so a four-step
# update of the MealPct-only model reaches the optimum exactly.
_SCHOOLS_FULL_MSE = 0.095
_SCHOOLS_MEALPCT_MSE = 0.122
_SCHOOLS_SUPPORT = {"MealPct": -0.60, "AvgInc": 0.25, "ELPct": -0.20, "ExpnStu": 0.15}


def schools_analogue(n: int = 420, seed: int = 7) -> RegressionInstance:
    """Seeded synthetic analogue of the school test-score dataset.

    Ten standardized features with a factor-model correlation structure.
    The coefficient vector is calibrated so that c(0) == 1 (standardized
    target), the full least-squares MSE is exactly 0.095 and the best
    MealPct-only model has MSE exactly 0.122.
    """
    d = len(SCHOOL_FEATURES)
    j = SCHOOL_FEATURES.index("MealPct")
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((d, 3))
    A = B @ B.T + d * np.eye(d)
    s = np.sqrt(np.diag(A))
    Sigma = A / np.outer(s, s)

    u = np.zeros(d)
    for name, val in _SCHOOLS_SUPPORT.items():
        u[SCHOOL_FEATURES.index(name)] = val

    # Solve beta_star = a*u + b*e_j such that (Sigma beta_star)_j = h_j and
    # beta_star' Sigma beta_star = q. Substituting the linear constraint
    # leaves a^2 (u'Su - (Su)_j^2) = q - h_j^2.
    h_j = -np.sqrt(1.0 - _SCHOOLS_MEALPCT_MSE)
    q = 1.0 - _SCHOOLS_FULL_MSE
    Su = Sigma @ u
    denom = float(u @ Su) - float(Su[j]) ** 2
    if denom <= 0 or q <= h_j**2:
        raise DataError("schools analogue calibration failed for this seed")
    a = np.sqrt((q - h_j**2) / denom)
    b = h_j - a * Su[j]
    beta_star = a * u
    beta_star[j] += b
    return exact_moment_instance(
        Sigma, beta_star, _SCHOOLS_FULL_MSE, n, feature_names=SCHOOL_FEATURES, seed=seed
    )


def load_csv(
    path,
    target_column: str,
    standardize: bool = False,
    kind: str = "regression",
):
    """Load a headered CSV into a regression or two-class tree dataset.

    Rows with missing or non-numeric feature values (or, for regression, a
    non-numeric target) are dropped with a warning that reports the count.
    Constant columns are rejected. With standardize=True, features (and
    the regression target) are centered and scaled to unit variance using
    population (1/n) statistics.

    Returns a RegressionInstance for kind="regression" or a
    LabeledDataset2C for kind="classification".
    """
    if kind not in ("regression", "classification"):
        raise ValueError(f"unknown kind {kind!r}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}: empty file")
            header = [h.strip() for h in header]
            raw_rows = [row for row in reader if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    if target_column not in header:
        raise DataError(f"target column {target_column!r} not in header {header}")
    ti = header.index(target_column)
    feat_names = tuple(h for i, h in enumerate(header) if i != ti)
    feat_idx = [i for i in range(len(header)) if i != ti]
    if not feat_names:
        raise DataError("no feature columns besides the target")

    feats, targets = [], []
    dropped = 0
    for row in raw_rows:
        if len(row) != len(header):
            dropped += 1
            continue
        try:
            x = [float(row[i]) for i in feat_idx]
        except ValueError:
            dropped += 1
            continue
        t = row[ti].strip()
        if kind == "regression":
            try:
                targets.append(float(t))
            except ValueError:
                dropped += 1
                continue
        else:
            if not t:
                dropped += 1
                continue
            targets.append(t)
        feats.append(x)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} rows with missing/non-numeric values")
    if len(feats) < 2:
        raise DataError(f"{path}: fewer than 2 usable rows")

    X = np.array(feats, dtype=float)
    for jcol, name in enumerate(feat_names):
        if np.std(X[:, jcol]) < _STD_FLOOR:
            raise ConstantColumnError(f"feature column {name!r} is constant")

    if kind == "classification":
        return LabeledDataset2C.from_data(X, targets)

    y = np.array(targets, dtype=float)
    if np.std(y) < _STD_FLOOR:
        raise ConstantColumnError(f"target column {target_column!r} is constant")
    if standardize:
        X = (X - X.mean(axis=0)) / np.sqrt(np.mean((X - X.mean(axis=0)) ** 2, axis=0))
        y = (y - y.mean()) / np.sqrt(np.mean((y - y.mean()) ** 2))
    return RegressionInstance.from_data(X, y, feat_names)
