"""Gaze-point calibration: sample design, L1-regularized fitting, prediction.

Calibration maps six features (gaze yaw/pitch plus the four face box
coordinates) to screen pixel coordinates with a separate L1-regularized
linear model per axis.  Features are z-scored before fitting so one penalty
strength applies uniformly; the strength is chosen by k-fold cross
validation with ties broken toward the sparser (larger-penalty) model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .frames import FaceBox, GazeAngles, ScreenPoint

N_FEATURES = 6
MIN_DESIGN_SAMPLES = 8
MIN_FIT_SAMPLES = 16
CD_TOL = 1e-6
CD_MAX_SWEEPS = 1000
CV_FOLDS = 5
CV_SEED = 0


@dataclass(frozen=True)
class CalibrationSample:
    """One observation: gaze + face box while the user stared at `target`."""

    gaze: GazeAngles
    box: FaceBox
    target: ScreenPoint


@dataclass(frozen=True)
class Standardization:
    """Per-feature z-score parameters.  Zero-variance features keep std 1."""

    mean: tuple[float, ...]
    std: tuple[float, ...]
    zero_variance: tuple[bool, ...]

    def transform(self, row: np.ndarray) -> np.ndarray:
        return (np.asarray(row, dtype=float) - np.asarray(self.mean)) / np.asarray(
            self.std
        )


@dataclass(frozen=True)
class LassoFit:
    coef: tuple[float, ...]
    intercept: float
    n_sweeps: int
    converged: bool
    objective_history: tuple[float, ...]


@dataclass(frozen=True)
class CalibrationModel:
    """Everything predict needs: per-axis coefficients plus standardization."""

    coef_x: tuple[float, ...]
    coef_y: tuple[float, ...]
    intercept_x: float
    intercept_y: float
    feat_mean: tuple[float, ...]
    feat_std: tuple[float, ...]
    lam: float
    cv_mse: float


def feature_row(gaze: GazeAngles, box: FaceBox) -> list[float]:
    """The fixed feature order: gaze yaw, gaze pitch, box x0, y0, x1, y1."""
    return [gaze.yaw, gaze.pitch, box.x0, box.y0, box.x1, box.y1]


def build_design(
    samples: list[CalibrationSample],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, Standardization]:
    """Assemble the standardized design matrix and target vectors.

    Features are z-scored column-wise (population std).  Columns with zero
    variance are flagged and their std forced to 1 so the transform stays
    total; fit_lasso gives such columns coefficient 0 by construction.
    """
    if len(samples) < MIN_DESIGN_SAMPLES:
        raise ValueError(
            f"need at least {MIN_DESIGN_SAMPLES} samples, got {len(samples)}"
        )
    raw = np.array([feature_row(s.gaze, s.box) for s in samples], dtype=float)
    tx = np.array([s.target.x for s in samples], dtype=float)
    ty = np.array([s.target.y for s in samples], dtype=float)
    if not (
        np.all(np.isfinite(raw)) and np.all(np.isfinite(tx)) and np.all(np.isfinite(ty))
    ):
        raise ValueError("non-finite values in calibration samples")
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    # A column is constant when max == min; the relative guard also catches
    # stds that are pure rounding residue from non-representable constants.
    zero_var = (np.ptp(raw, axis=0) == 0.0) | (
        std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    )
    std = np.where(zero_var, 1.0, std)
    X = (raw - mean) / std
    X[:, zero_var] = 0.0
    standardization = Standardization(
        mean=tuple(float(v) for v in mean),
        std=tuple(float(v) for v in std),
        zero_variance=tuple(bool(v) for v in zero_var),
    )
    return X, tx, ty, standardization


def soft_threshold(rho: float, lam: float) -> float:
    if rho > lam:
        return rho - lam
    if rho < -lam:
        return rho + lam
    return 0.0


def lasso_objective(
    X: np.ndarray, y: np.ndarray, coef: np.ndarray, intercept: float, lam: float
) -> float:
    """(1/2n)·||y − Xw − b||² + λ·||w||₁"""
    resid = y - X @ coef - intercept
    n = len(y)
    return float(resid @ resid / (2 * n) + lam * np.abs(coef).sum())


def fit_lasso(X: np.ndarray, y: np.ndarray, lam: float) -> LassoFit:
    """Cyclic coordinate descent on the L1-penalized least-squares objective.

    Minimizes (1/2n)·||y − Xw − b||² + λ·||w||₁ for one target vector.  Each
    sweep updates every coordinate with the soft-threshold rule; convergence
    is max |coefficient change| < 1e-6, capped at 1000 sweeps (the last
    iterate is returned either way, flagged unconverged).  The intercept is
    mean(y − Xw); all-zero columns never move off coefficient 0.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    col_ms = (X * X).sum(axis=0) / n
    active = col_ms > 0.0
    w = np.zeros(p)
    resid = y - y.mean()
    intercept = float(y.mean())
    objective = [lasso_objective(X, y, w, intercept, lam)]
    converged = False
    sweeps = 0
    for sweeps in range(1, CD_MAX_SWEEPS + 1):
        max_change = 0.0
        for j in range(p):
            if not active[j]:
                continue
            old = w[j]
            rho = (X[:, j] @ resid) / n + col_ms[j] * old
            new = soft_threshold(rho, lam) / col_ms[j]
            if new != old:
                resid -= X[:, j] * (new - old)
                w[j] = new
            max_change = max(max_change, abs(new - old))
        intercept = float(np.mean(y - X @ w))
        objective.append(lasso_objective(X, y, w, intercept, lam))
        if max_change < CD_TOL:
            converged = True
            break
    return LassoFit(
        coef=tuple(float(v) for v in w),
        intercept=intercept,
        n_sweeps=sweeps,
        converged=converged,
        objective_history=tuple(objective),
    )


def default_lambda_grid() -> tuple[float, ...]:
    """20 penalty strengths log-spaced over [1e-4, 1e2], ascending."""
    return tuple(float(v) for v in np.logspace(-4.0, 2.0, 20))


def cross_validate(
    samples: list[CalibrationSample],
    lambda_grid: tuple[float, ...] | None = None,
    folds: int = CV_FOLDS,
    seed: int = CV_SEED,
) -> tuple[float, dict[float, float]]:
    """Choose the penalty by k-fold CV over both output axes.

    Samples are shuffled once with a seeded generator, split into contiguous
    folds, and each fold is standardized from its training split only.  The
    score per lambda is the mean squared prediction error pooled over folds
    and both axes.  Ties go to the larger lambda (sparser model).
    """
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()
    if not lambda_grid:
        raise ValueError("empty lambda grid")
    if len(samples) < 2 * folds:
        raise ValueError(
            f"need at least {2 * folds} samples for {folds}-fold CV, got {len(samples)}"
        )
    order = np.random.default_rng(seed).permutation(len(samples))
    shuffled = [samples[i] for i in order]
    bounds = np.linspace(0, len(shuffled), folds + 1).astype(int)
    splits = []
    for k in range(folds):
        val = shuffled[bounds[k] : bounds[k + 1]]
        train = shuffled[: bounds[k]] + shuffled[bounds[k + 1] :]
        X, tx, ty, stz = build_design(train)
        val_raw = np.array([feature_row(s.gaze, s.box) for s in val], dtype=float)
        val_X = (val_raw - np.asarray(stz.mean)) / np.asarray(stz.std)
        val_tx = np.array([s.target.x for s in val], dtype=float)
        val_ty = np.array([s.target.y for s in val], dtype=float)
        splits.append((X, tx, ty, val_X, val_tx, val_ty))

    scores: dict[float, float] = {}
    best_lam = None
    best_err = math.inf
    for lam in lambda_grid:
        sq_sum = 0.0
        count = 0
        for X, tx, ty, val_X, val_tx, val_ty in splits:
            fx = fit_lasso(X, tx, lam)
            fy = fit_lasso(X, ty, lam)
            px = val_X @ np.asarray(fx.coef) + fx.intercept
            py = val_X @ np.asarray(fy.coef) + fy.intercept
            sq_sum += float(((px - val_tx) ** 2).sum() + ((py - val_ty) ** 2).sum())
            count += 2 * len(val_tx)
        err = sq_sum / count
        scores[float(lam)] = err
        if err <= best_err:
            best_err = err
            best_lam = float(lam)
    return best_lam, scores


def fit_calibration(
    samples: list[CalibrationSample],
    lambda_grid: tuple[float, ...] | None = None,
    folds: int = CV_FOLDS,
    seed: int = CV_SEED,
) -> CalibrationModel:
    """Full fit: choose lambda by CV, refit both axes on all samples."""
    if len(samples) < MIN_FIT_SAMPLES:
        raise ValueError(
            f"need at least {MIN_FIT_SAMPLES} samples to calibrate, got {len(samples)}"
        )
    lam, scores = cross_validate(samples, lambda_grid, folds=folds, seed=seed)
    X, tx, ty, stz = build_design(samples)
    fx = fit_lasso(X, tx, lam)
    fy = fit_lasso(X, ty, lam)
    return CalibrationModel(
        coef_x=fx.coef,
        coef_y=fy.coef,
        intercept_x=fx.intercept,
        intercept_y=fy.intercept,
        feat_mean=stz.mean,
        feat_std=stz.std,
        lam=lam,
        cv_mse=scores[lam],
    )


def predict_gaze_point(
    model: CalibrationModel,
    gaze: GazeAngles,
    box: FaceBox,
    screen_w: int,
    screen_h: int,
) -> ScreenPoint:
    """Linear prediction per axis, clamped into the screen rectangle."""
    row = (np.array(feature_row(gaze, box)) - np.asarray(model.feat_mean)) / np.asarray(
        model.feat_std
    )
    x = float(row @ np.asarray(model.coef_x) + model.intercept_x)
    y = float(row @ np.asarray(model.coef_y) + model.intercept_y)
    x = min(max(x, 0.0), screen_w - 1.0)
    y = min(max(y, 0.0), screen_h - 1.0)
    return ScreenPoint(x=x, y=y, screen_w=screen_w, screen_h=screen_h)


def write_samples(
    samples: list[CalibrationSample], path: str, complete: bool = True
) -> None:
    """Write a calibration sample file: one record per line plus a trailer.

    The trailer marks the session outcome; fitting refuses files whose
    trailer is missing, aborted, or disagrees with the line count.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            record = {
                "kind": "sample",
                "gaze": {"yaw": s.gaze.yaw, "pitch": s.gaze.pitch},
                "box": {"x0": s.box.x0, "y0": s.box.y0, "x1": s.box.x1, "y1": s.box.y1},
                "target": {
                    "x": s.target.x,
                    "y": s.target.y,
                    "screen_w": s.target.screen_w,
                    "screen_h": s.target.screen_h,
                },
            }
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
        trailer = {
            "kind": "complete" if complete else "aborted",
            "count": len(samples),
        }
        fh.write(json.dumps(trailer, sort_keys=True, separators=(",", ":")) + "\n")


def load_samples(path: str) -> list[CalibrationSample]:
    """Read a sample file, enforcing the completeness trailer."""
    samples: list[CalibrationSample] = []
    trailer = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if trailer is not None:
                raise ValueError(f"{path}:{lineno}: content after trailer")
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            kind = record.get("kind")
            if kind == "sample":
                try:
                    samples.append(
                        CalibrationSample(
                            gaze=GazeAngles(
                                yaw=float(record["gaze"]["yaw"]),
                                pitch=float(record["gaze"]["pitch"]),
                            ),
                            box=FaceBox(
                                x0=float(record["box"]["x0"]),
                                y0=float(record["box"]["y0"]),
                                x1=float(record["box"]["x1"]),
                                y1=float(record["box"]["y1"]),
                            ),
                            target=ScreenPoint(
                                x=float(record["target"]["x"]),
                                y=float(record["target"]["y"]),
                                screen_w=int(record["target"]["screen_w"]),
                                screen_h=int(record["target"]["screen_h"]),
                            ),
                        )
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad sample: {exc}") from None
            elif kind in ("complete", "aborted"):
                trailer = record
            else:
                raise ValueError(f"{path}:{lineno}: unknown record kind {kind!r}")
    if trailer is None:
        raise ValueError(f"{path}: missing session trailer; refusing to fit")
    if trailer["kind"] == "aborted":
        raise ValueError(f"{path}: session was aborted; refusing to fit")
    if trailer.get("count") != len(samples):
        raise ValueError(
            f"{path}: trailer count {trailer.get('count')} != {len(samples)} samples"
        )
    return samples


def save_model(model: CalibrationModel, path: str) -> None:
    record = {
        "coef_x": list(model.coef_x),
        "coef_y": list(model.coef_y),
        "intercept_x": model.intercept_x,
        "intercept_y": model.intercept_y,
        "feat_mean": list(model.feat_mean),
        "feat_std": list(model.feat_std),
        "lambda": model.lam,
        "cv_mse": model.cv_mse,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> CalibrationModel:
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    try:
        model = CalibrationModel(
            coef_x=tuple(float(v) for v in record["coef_x"]),
            coef_y=tuple(float(v) for v in record["coef_y"]),
            intercept_x=float(record["intercept_x"]),
            intercept_y=float(record["intercept_y"]),
            feat_mean=tuple(float(v) for v in record["feat_mean"]),
            feat_std=tuple(float(v) for v in record["feat_std"]),
            lam=float(record["lambda"]),
            cv_mse=float(record["cv_mse"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad calibration model file {path}: {exc}") from None
    for vec in (model.coef_x, model.coef_y, model.feat_mean, model.feat_std):
        if len(vec) != N_FEATURES:
            raise ValueError(f"bad calibration model file {path}: wrong vector length")
    if any(s <= 0 for s in model.feat_std):
        raise ValueError(f"bad calibration model file {path}: non-positive feat_std")
    return model
