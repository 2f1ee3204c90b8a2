"""Invertible transport generators and the synthesis pipeline.

Two closed-form transport families stand in for trained generative models:

* :class:`GaussianTransport` - an affine map ``G(v) = mu + L v`` with ``L``
  the Cholesky factor of a (ridge-regularized) covariance estimate; exact
  maximum likelihood for Gaussian data.
* :class:`CopulaTransport` - a Gaussian copula with smoothed empirical
  marginals: the forward map correlates a standard normal latent vector,
  pushes it through the normal CDF, and applies each coordinate's empirical
  quantile function.

Both expose the invertible pair ``forward`` (latent to data) / ``inverse``
(data to latent) plus a log-density, which is all the synthesis pipeline
needs. ``pass_synthesize`` draws a base sample, optionally permutes it to
align its multivariate ranks with a latent representation of an inference
sample, perturbs it without changing its law, and maps it through the
transport. ``sample_statistic_null`` repeats that ``D`` times to build the
Monte Carlo null distribution of any scalar statistic.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from .empirical import EmpiricalDistribution
from .errors import InputError, NumericError
from .perturb import BaseDistribution, PerturbationSpec, perturb
from .ranks import match_ranks
from .streams import PATH_PASS, derive_rng

MODEL_SCHEMA = "pai-model/1"

_DEFAULT_RIDGE = 1e-10


def _data_hash(data: np.ndarray) -> str:
    data = np.ascontiguousarray(data, dtype=np.float64)
    digest = hashlib.sha256()
    digest.update(str(data.shape).encode())
    digest.update(data.tobytes())
    return digest.hexdigest()


@dataclass(frozen=True)
class FitInfo:
    """Descriptor of the holdout sample a model was fitted on."""

    n_rows: int
    data_hash: str


def _validate_matrix(data: np.ndarray, name: str) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{name} contains non-finite entries")
    return data


@dataclass(frozen=True)
class GaussianTransport:
    """Affine transport between a standard normal latent and fitted Gaussian."""

    mean: np.ndarray
    chol: np.ndarray
    fit_info: FitInfo

    kind = "gaussian"

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def cov(self) -> np.ndarray:
        return self.chol @ self.chol.T

    def forward(self, latent: np.ndarray) -> np.ndarray:
        latent = _validate_matrix(latent, "latent")
        if latent.shape[1] != self.dim:
            raise InputError(f"latent has {latent.shape[1]} columns, model dim is {self.dim}")
        return self.mean + latent @ self.chol.T

    def inverse(self, data: np.ndarray) -> np.ndarray:
        data = _validate_matrix(data, "data")
        if data.shape[1] != self.dim:
            raise InputError(f"data has {data.shape[1]} columns, model dim is {self.dim}")
        return solve_triangular(self.chol, (data - self.mean).T, lower=True).T

    def log_density(self, data: np.ndarray) -> np.ndarray:
        latent = self.inverse(data)
        log_det = float(np.sum(np.log(np.diag(self.chol))))
        quad = 0.5 * np.einsum("ij,ij->i", latent, latent)
        return -quad - log_det - 0.5 * self.dim * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Marginal:
    """Piecewise-linear empirical CDF with Winsorized linear tails.

    ``xs`` and ``ps`` are strictly increasing grids with ``ps[0] = 0`` and
    ``ps[-1] = 1``; the end knots sit one interquartile range beyond the
    observed extremes, so the quantile function maps [0, 1] onto a bounded
    interval.
    """

    xs: np.ndarray
    ps: np.ndarray

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.xs, self.ps)

    def quantile(self, p: np.ndarray) -> np.ndarray:
        return np.interp(p, self.ps, self.xs)


def _fit_marginal(column: np.ndarray, col_index: int) -> Marginal:
    n = column.shape[0]
    order = np.sort(column)
    if order[0] == order[-1]:
        raise InputError(f"column {col_index} is constant; cannot fit a marginal CDF")
    ps = (np.arange(1, n + 1) - 0.5) / n
    unique_x = np.unique(order)
    # For tied values keep the largest plotting position (right-continuous CDF).
    last_idx = np.searchsorted(order, unique_x, side="right") - 1
    unique_p = ps[last_idx]
    q25, q75 = np.percentile(order, [25.0, 75.0])
    span = q75 - q25
    if span <= 0:
        span = float(order[-1] - order[0])
    xs = np.concatenate(([unique_x[0] - span], unique_x, [unique_x[-1] + span]))
    p_full = np.concatenate(([0.0], unique_p, [1.0]))
    xs.setflags(write=False)
    p_full.setflags(write=False)
    return Marginal(xs=xs, ps=p_full)


@dataclass(frozen=True)
class CopulaTransport:
    """Gaussian copula with smoothed empirical marginals."""

    marginals: tuple[Marginal, ...]
    latent_chol: np.ndarray
    fit_info: FitInfo

    kind = "copula"

    # Clip for CDF values before the normal quantile; keeps latents finite.
    _EPS = 1e-12

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def forward(self, latent: np.ndarray) -> np.ndarray:
        latent = _validate_matrix(latent, "latent")
        if latent.shape[1] != self.dim:
            raise InputError(f"latent has {latent.shape[1]} columns, model dim is {self.dim}")
        scores = latent @ self.latent_chol.T
        u = ndtr(scores)
        out = np.empty_like(u)
        for j, marginal in enumerate(self.marginals):
            out[:, j] = marginal.quantile(u[:, j])
        return out

    def inverse(self, data: np.ndarray) -> np.ndarray:
        data = _validate_matrix(data, "data")
        if data.shape[1] != self.dim:
            raise InputError(f"data has {data.shape[1]} columns, model dim is {self.dim}")
        u = np.empty_like(data)
        for j, marginal in enumerate(self.marginals):
            u[:, j] = marginal.cdf(data[:, j])
        scores = ndtri(np.clip(u, self._EPS, 1.0 - self._EPS))
        return solve_triangular(self.latent_chol, scores.T, lower=True).T

    def log_density(self, data: np.ndarray) -> np.ndarray:
        data = _validate_matrix(data, "data")
        u = np.empty_like(data)
        log_marg = np.zeros(data.shape[0])
        for j, marginal in enumerate(self.marginals):
            u[:, j] = marginal.cdf(data[:, j])
            slopes = np.diff(marginal.ps) / np.diff(marginal.xs)
            seg = np.clip(np.searchsorted(marginal.xs, data[:, j], side="right") - 1, 0, slopes.shape[0] - 1)
            dens = slopes[seg]
            inside = (data[:, j] > marginal.xs[0]) & (data[:, j] < marginal.xs[-1])
            log_marg += np.where(inside & (dens > 0), np.log(np.maximum(dens, 1e-300)), -np.inf)
        scores = ndtri(np.clip(u, self._EPS, 1.0 - self._EPS))
        latent = solve_triangular(self.latent_chol, scores.T, lower=True).T
        log_det = float(np.sum(np.log(np.diag(self.latent_chol))))
        copula_term = -0.5 * np.einsum("ij,ij->i", latent, latent) - log_det
        copula_term += 0.5 * np.einsum("ij,ij->i", scores, scores)
        return copula_term + log_marg


GeneratorModel = GaussianTransport | CopulaTransport


def fit_gaussian(holdout: np.ndarray, ridge: float = _DEFAULT_RIDGE) -> GaussianTransport:
    """Fit mean and ridge-regularized covariance; return the affine transport.

    The ridge is relative, ``ridge * tr(S)/d * I``; for an exactly degenerate
    sample (zero trace) the absolute fallback ``ridge * I`` keeps the factor
    positive definite.
    """
    holdout = _validate_matrix(holdout, "holdout")
    n, d = holdout.shape
    if ridge < 0 or not math.isfinite(ridge):
        raise InputError("ridge must be finite and >= 0")
    if n < d + 2:
        raise InputError(f"need at least d + 2 = {d + 2} holdout rows, got {n}")
    mean = holdout.mean(axis=0)
    centered = holdout - mean
    cov = centered.T @ centered / (n - 1)
    trace = float(np.trace(cov))
    bump = ridge * (trace / d) if trace > 0 else ridge
    cov = cov + bump * np.eye(d)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"covariance is not positive definite even after ridge {ridge}"
        ) from exc
    return GaussianTransport(
        mean=mean, chol=chol, fit_info=FitInfo(n_rows=n, data_hash=_data_hash(holdout))
    )


def gaussian_from_params(
    mean: np.ndarray, cov: np.ndarray | None = None, chol: np.ndarray | None = None
) -> GaussianTransport:
    """Build a Gaussian transport from known parameters (no fitting).

    Useful when the data-generating law is known exactly, e.g. in calibration
    experiments where estimation error must be ruled out.
    """
    mean = np.asarray(mean, dtype=np.float64).ravel()
    if (cov is None) == (chol is None):
        raise InputError("provide exactly one of cov or chol")
    if chol is None:
        cov = np.asarray(cov, dtype=np.float64)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise InputError("cov shape does not match mean")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NumericError("cov is not positive definite") from exc
    else:
        chol = np.asarray(chol, dtype=np.float64)
        if chol.shape != (mean.shape[0], mean.shape[0]):
            raise InputError("chol shape does not match mean")
        if np.any(np.diag(chol) <= 0):
            raise InputError("chol must have strictly positive diagonal")
    return GaussianTransport(
        mean=mean, chol=chol, fit_info=FitInfo(n_rows=0, data_hash="injected")
    )


def fit_copula(holdout: np.ndarray) -> CopulaTransport:
    """Fit empirical marginals and a normal-scores latent correlation."""
    holdout = _validate_matrix(holdout, "holdout")
    n, d = holdout.shape
    if n < 20:
        raise InputError(f"copula fit needs at least 20 holdout rows, got {n}")
    marginals = tuple(_fit_marginal(holdout[:, j], j) for j in range(d))
    scores = np.empty_like(holdout)
    for j in range(d):
        u = (rankdata(holdout[:, j], method="average") - 0.5) / n
        scores[:, j] = ndtri(u)
    if d == 1:
        corr = np.eye(1)
    else:
        corr = np.corrcoef(scores, rowvar=False)
        # Clamp tiny negative eigenvalues and restore unit diagonal so the
        # Cholesky factorization cannot fail on near-degenerate scores.
        eigvals, eigvecs = np.linalg.eigh(corr)
        eigvals = np.maximum(eigvals, 1e-10)
        corr = (eigvecs * eigvals) @ eigvecs.T
        scale = np.sqrt(np.diag(corr))
        corr = corr / np.outer(scale, scale)
    chol = np.linalg.cholesky(corr)
    return CopulaTransport(
        marginals=marginals,
        latent_chol=chol,
        fit_info=FitInfo(n_rows=n, data_hash=_data_hash(holdout)),
    )


@dataclass(frozen=True)
class PassConfig:
    """Synthesis configuration shared by all replicates of one experiment."""

    perturbation: PerturbationSpec = PerturbationSpec(tau=0.0)
    rank_match: bool = False
    mc_seed: int = 0

    def __post_init__(self) -> None:
        if self.mc_seed < 0:
            raise InputError("mc_seed must be non-negative")


def pass_synthesize(
    model: GeneratorModel,
    inference: np.ndarray | None,
    cfg: PassConfig,
    replicate: int,
    n: int | None = None,
) -> np.ndarray:
    """Generate one synthetic sample from the fitted transport.

    Draws a base sample ``U`` from the stream addressed by
    ``(cfg.mc_seed, PATH_PASS, replicate)``; with ``cfg.rank_match`` it is permuted so
    its multivariate ranks align with those of ``model.inverse(inference)``;
    the perturbation is applied; the transport maps the result to data space.
    Output rows are an independent sample from the model's law, and the same
    ``(mc_seed, replicate)`` pair always reproduces the same sample bit for
    bit.
    """
    if replicate < 0:
        raise InputError("replicate index must be non-negative")
    if cfg.perturbation.base is not BaseDistribution.STANDARD_GAUSSIAN:
        raise InputError(
            "pass_synthesize requires a StandardGaussian perturbation base: "
            "both transport families have standard normal latents"
        )
    if cfg.rank_match:
        if inference is None:
            raise InputError("rank matching requires an inference sample")
        inference = _validate_matrix(inference, "inference")
        if inference.shape[1] != model.dim:
            raise InputError(
                f"inference has {inference.shape[1]} columns, model dim is {model.dim}"
            )
        n_rows = inference.shape[0]
    else:
        if inference is not None:
            inference = _validate_matrix(inference, "inference")
            if inference.shape[1] != model.dim:
                raise InputError(
                    f"inference has {inference.shape[1]} columns, model dim is {model.dim}"
                )
            n_rows = inference.shape[0]
        elif n is not None:
            n_rows = int(n)
        else:
            raise InputError("provide an inference sample or an explicit n")
    if n_rows < 1:
        raise InputError("sample size must be >= 1")
    rng = derive_rng(cfg.mc_seed, PATH_PASS, replicate)
    base = rng.standard_normal((n_rows, model.dim))
    if cfg.rank_match:
        r = match_ranks(model.inverse(inference), base)
        base = base[r]
    latent = perturb(base, cfg.perturbation, rng)
    return model.forward(latent)


def sample_statistic_null(
    model: GeneratorModel,
    n: int,
    D: int,
    statistic,
    cfg: PassConfig,
) -> EmpiricalDistribution:
    """Empirical null distribution of ``statistic`` over ``D`` PASS samples.

    Replicate ``k`` uses the synthesis stream for index ``k``; rank matching is
    always disabled for null simulation (the identity permutation is a valid
    choice and needs no inference sample). The statistic must return a finite
    scalar for every replicate.
    """
    if D < 2:
        raise InputError("Monte Carlo size D must be >= 2")
    cfg_null = dataclasses.replace(cfg, rank_match=False)
    values = np.empty(D, dtype=np.float64)
    for k in range(D):
        sample = pass_synthesize(model, None, cfg_null, replicate=k, n=n)
        value = float(statistic(sample))
        if not math.isfinite(value):
            raise InputError(f"statistic returned a non-finite value on replicate {k}")
        values[k] = value
    return EmpiricalDistribution(values=values)


def save_model(model: GeneratorModel, path: str | os.PathLike) -> None:
    """Serialize a fitted model to a self-describing JSON document."""
    if isinstance(model, GaussianTransport):
        payload = {
            "schema": MODEL_SCHEMA,
            "kind": model.kind,
            "dim": model.dim,
            "mean": model.mean.tolist(),
            "chol": model.chol.tolist(),
            "fitted_on": {"n_rows": model.fit_info.n_rows, "data_hash": model.fit_info.data_hash},
        }
    elif isinstance(model, CopulaTransport):
        payload = {
            "schema": MODEL_SCHEMA,
            "kind": model.kind,
            "dim": model.dim,
            "marginals": [
                {"xs": m.xs.tolist(), "ps": m.ps.tolist()} for m in model.marginals
            ],
            "latent_chol": model.latent_chol.tolist(),
            "fitted_on": {"n_rows": model.fit_info.n_rows, "data_hash": model.fit_info.data_hash},
        }
    else:
        raise InputError(f"cannot serialize model of type {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_model(path: str | os.PathLike) -> GeneratorModel:
    """Load a model saved by :func:`save_model`."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema") != MODEL_SCHEMA:
        raise InputError(f"unrecognized model schema: {payload.get('schema')!r}")
    info = FitInfo(
        n_rows=int(payload["fitted_on"]["n_rows"]),
        data_hash=str(payload["fitted_on"]["data_hash"]),
    )
    if payload["kind"] == "gaussian":
        return GaussianTransport(
            mean=np.asarray(payload["mean"], dtype=np.float64),
            chol=np.asarray(payload["chol"], dtype=np.float64),
            fit_info=info,
        )
    if payload["kind"] == "copula":
        marginals = tuple(
            Marginal(
                xs=np.asarray(m["xs"], dtype=np.float64),
                ps=np.asarray(m["ps"], dtype=np.float64),
            )
            for m in payload["marginals"]
        )
        return CopulaTransport(
            marginals=marginals,
            latent_chol=np.asarray(payload["latent_chol"], dtype=np.float64),
            fit_info=info,
        )
    raise InputError(f"unrecognized model kind: {payload['kind']!r}")
