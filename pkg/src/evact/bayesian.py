"""Last-layer Laplace approximation, deep ensembles and Laplace ensembles.

The weight posterior around a trained head is approximated by a Gaussian
whose precision is the generalized Gauss-Newton of the cross-entropy sum
plus an isotropic prior. For a linear softmax head the GGN equals the true
Hessian of the negative log posterior at a stationary point. Pushing the
Gaussian through the (linear) logit map gives per-class logit means and
variances, which map to a Dirichlet via the bridge closed form, or to a
softmax via the multi-class probit approximation.

Weight layout is class-major: the flattened parameter vector concatenates
the K rows of the (K, dim+1) weight matrix, so the covariance decomposes
into (dim+1) x (dim+1) per-class diagonal blocks. Cross-class covariance
is dropped when pushing to logit space (the bridge consumes marginal
variances only).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import (SoftmaxHead, TrainConfig, flatten_training_set,
                         parse_model, predict_proba, softmax, train,
                         write_model, _SMX_HEADER, SMX_MAGIC,
                         MODEL_FORMAT_VERSION)
from .errors import (BadMagicError, ConfigError, EnsembleMemberError,
                     PosteriorError, TruncatedPayloadError)

DEFAULT_PRIOR_PRECISION = 1.0
DEFAULT_FULL_COV_LIMIT = 4096   # largest D stored as a dense covariance
DEFAULT_ENSEMBLE_SIZE = 32

LAP_MAGIC = b"LAP1"
_LAP_HEADER = struct.Struct("<4sBdII")


@dataclass
class GaussianPosterior:
    """Gaussian over the flattened head weights (D = K * (dim+1))."""

    mean: np.ndarray
    cov: np.ndarray                 # (D, D) full or (D,) diagonal
    prior_precision: float
    k: int
    dim: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        d = self.k * (self.dim + 1)
        if self.mean.shape != (d,):
            raise PosteriorError(f"mean shape {self.mean.shape} != ({d},)")
        if self.prior_precision <= 0:
            raise PosteriorError("prior precision must be > 0")
        if self.cov.ndim == 1:
            if self.cov.shape != (d,) or np.any(self.cov <= 0):
                raise PosteriorError("diagonal covariance must be positive length-D")
        elif self.cov.shape == (d, d):
            if np.abs(self.cov - self.cov.T).max() > 1e-10:
                raise PosteriorError("covariance not symmetric within 1e-10")
            try:
                np.linalg.cholesky(self.cov)
            except np.linalg.LinAlgError:
                raise PosteriorError("covariance is not positive definite") from None
        else:
            raise PosteriorError(f"bad covariance shape {self.cov.shape}")

    @property
    def is_diagonal(self) -> bool:
        return self.cov.ndim == 1

    def head(self) -> SoftmaxHead:
        return SoftmaxHead(self.mean.reshape(self.k, self.dim + 1))

    def class_block(self, k: int) -> np.ndarray:
        """(dim+1, dim+1) covariance block of class k (diagonal in reduced mode)."""
        m = self.dim + 1
        if self.is_diagonal:
            return np.diag(self.cov[k * m:(k + 1) * m])
        return self.cov[k * m:(k + 1) * m, k * m:(k + 1) * m]


@dataclass
class DirichletPrediction:
    """Dirichlet over class probabilities produced by the bridge."""

    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if np.any(self.alpha <= 0):
            raise PosteriorError("Dirichlet parameters must be positive")

    def predictive(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()


def _augment(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.hstack([x, np.ones((len(x), 1))])


def ggn_precision(head: SoftmaxHead, x: np.ndarray, lam: float,
                  diagonal: bool) -> np.ndarray:
    """Prior-regularized generalized Gauss-Newton of the cross-entropy sum.

    Full mode returns the (D, D) matrix with per-class blocks
    A^T diag(lambda_n[k,k']) A; diagonal mode returns only its diagonal.
    """
    k, m = head.k, head.dim + 1
    d = k * m
    a = _augment(x) if len(x) else np.empty((0, m))
    p = predict_proba(head, x) if len(x) else np.empty((0, k))
    if diagonal:
        diag = np.full(d, lam)
        if len(a):
            pq = p - p * p                      # p_nk (1 - p_nk)
            diag += (pq.T @ (a * a)).reshape(d)
        return diag
    h = np.zeros((d, d))
    h[np.diag_indices(d)] = lam
    for i in range(k):
        for j in range(i, k):
            if i == j:
                c = p[:, i] - p[:, i] * p[:, j]
            else:
                c = -p[:, i] * p[:, j]
            block = a.T @ (c[:, None] * a) if len(a) else np.zeros((m, m))
            h[i * m:(i + 1) * m, j * m:(j + 1) * m] += block
            if i != j:
                h[j * m:(j + 1) * m, i * m:(i + 1) * m] += block.T
    return h


def fit_laplace(head: SoftmaxHead, features, lam: float = DEFAULT_PRIOR_PRECISION,
                mode: str = "auto",
                full_cov_limit: int = DEFAULT_FULL_COV_LIMIT) -> GaussianPosterior:
    """Laplace posterior at the trained head: N(theta*, H^-1) with H the
    GGN of the cross-entropy sum at theta* plus lam * I.

    features may be labeled FeatureSequences or a plain (n, dim) array
    (labels are irrelevant to the GGN). mode is "full", "diag", or "auto"
    (full when D <= full_cov_limit).
    """
    if lam <= 0:
        raise ConfigError("prior precision lambda must be > 0")
    if isinstance(features, np.ndarray):
        x = features.astype(np.float64).reshape(-1, head.dim) if features.size else \
            np.empty((0, head.dim))
    else:
        x, _ = flatten_training_set(features)
    d = head.k * (head.dim + 1)
    if mode == "auto":
        mode = "full" if d <= full_cov_limit else "diag"
    if mode not in ("full", "diag"):
        raise ConfigError(f"unknown covariance mode {mode!r}")

    if mode == "diag":
        precision = ggn_precision(head, x, lam, diagonal=True)
        cov = 1.0 / precision
    else:
        precision = ggn_precision(head, x, lam, diagonal=False)
        try:
            chol = np.linalg.cholesky(precision)
            inv_chol = np.linalg.inv(chol)
        except np.linalg.LinAlgError:
            raise PosteriorError(
                "precision matrix is not positive definite; "
                "try a larger prior precision lambda") from None
        with np.errstate(over="ignore"):
            cov = inv_chol.T @ inv_chol
            cov = (cov + cov.T) / 2.0
        if not np.isfinite(cov).all():
            raise PosteriorError(
                "covariance overflowed; try a larger prior precision lambda")
    return GaussianPosterior(head.weights.ravel(), cov, lam, head.k, head.dim)


def logit_gaussian(post: GaussianPosterior, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Push the weight Gaussian through the logit map for one feature vector.

    Returns (mu, var): mu is exactly the deterministic head's logits;
    var_k is the quadratic form of the augmented feature with the class-k
    covariance block.
    """
    mu, var = logit_gaussian_batch(post, np.atleast_2d(f))
    return mu[0], var[0]


def logit_gaussian_batch(post: GaussianPosterior, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(mu, var) rows for an (n, dim) feature matrix."""
    head = post.head()
    mu = head.logits(x)
    a = _augment(x)
    m = post.dim + 1
    var = np.empty((len(a), post.k))
    if post.is_diagonal:
        diag = post.cov.reshape(post.k, m)
        var = (a * a) @ diag.T
    else:
        for k in range(post.k):
            block = post.cov[k * m:(k + 1) * m, k * m:(k + 1) * m]
            var[:, k] = np.einsum("ij,jk,ik->i", a, block, a)
    if np.any(var <= 0):
        raise PosteriorError("non-positive logit variance")
    return mu, var


def _log_bridge_alpha(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """log of the bridge Dirichlet parameters, computed fully in log space
    so extreme logit gaps cannot overflow the normalization."""
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0):
        raise PosteriorError("logit variances must be positive")
    k = mu.shape[-1]
    if k < 2:
        raise ValueError("need at least 2 classes")
    neg = -mu
    shift = neg.max(axis=-1, keepdims=True)
    log_s = shift + np.log(np.exp(neg - shift).sum(axis=-1, keepdims=True))
    g = mu + log_s - 2.0 * np.log(k)   # log of the exponential term
    const = 1.0 - 2.0 / k
    log_const = np.log(const) if const > 0 else -np.inf   # K=2: term only
    return np.logaddexp(log_const, g) - np.log(var)


def bridge_alpha(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """Dirichlet parameters from a diagonal logit Gaussian.

    alpha_j = (1/var_j) * (1 - 2/K + (e^{mu_j}/K^2) * sum_l e^{-mu_l}),
    evaluated with a max-shift in both exponent sums (the shifts cancel
    exactly, so this only guards against overflow). Values beyond float
    range saturate to inf; the predictive helpers normalize in log space
    and stay finite.
    """
    return np.exp(_log_bridge_alpha(mu, var))


def laplace_bridge(mu: np.ndarray, var: np.ndarray,
                   variant: str = "raw") -> DirichletPrediction:
    """Map a diagonal logit Gaussian to a Dirichlet.

    variant="raw" is the plain closed form above. Its predictive mean is
    invariant to scaling all variances by a common factor (the 1/var_j
    prefactors cancel in alpha / sum(alpha)), so it cannot express "large
    posterior variance, low confidence". variant="tempered" keeps the raw
    total concentration but redistributes it with the variance-tempered
    (multi-class probit) mean, which restores that response and converges
    to softmax(mu) as variances vanish.
    """
    alpha = bridge_alpha(mu, var)
    if variant == "raw":
        return DirichletPrediction(alpha)
    if variant == "tempered":
        mean = probit_predictive(mu, var)
        total = alpha.sum(axis=-1, keepdims=True)
        return DirichletPrediction(mean * total)
    raise ConfigError(f"unknown bridge variant {variant!r}")


def bridge_predictive(mu: np.ndarray, var: np.ndarray,
                      variant: str = "tempered") -> np.ndarray:
    """Bridge predictive mean alpha / sum(alpha); supports (..., K) batches.

    Prediction paths default to the tempered variant; pass variant="raw"
    for the plain closed form.
    """
    if variant == "tempered":
        return probit_predictive(mu, var)   # the tempered Dirichlet mean
    if variant == "raw":
        return softmax(_log_bridge_alpha(mu, var))
    raise ConfigError(f"unknown bridge variant {variant!r}")


def probit_predictive(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """softmax(mu_j / sqrt(1 + (pi/8) var_j)); supports (..., K) batches."""
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if np.any(var < 0):
        raise PosteriorError("logit variances must be non-negative")
    return softmax(mu / np.sqrt(1.0 + (np.pi / 8.0) * var))


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


@dataclass
class Ensemble:
    """Independently trained heads, optionally each with a Laplace posterior
    (a mixture of Gaussians)."""

    members: list
    seeds: list
    posteriors: list | None = None

    def __post_init__(self):
        if not self.members:
            raise ConfigError("ensemble needs at least one member")
        k = {m.k for m in self.members} | {m.dim for m in self.members}
        if len({m.k for m in self.members}) != 1 or len({m.dim for m in self.members}) != 1:
            raise ConfigError("ensemble members must share (K, dim)")

    def __len__(self) -> int:
        return len(self.members)


def train_ensemble(seqs, cfg: TrainConfig, s: int = DEFAULT_ENSEMBLE_SIZE,
                   base_seed: int | None = None, laplace: bool = False,
                   lam: float = DEFAULT_PRIOR_PRECISION, mode: str = "auto",
                   k: int | None = None) -> Ensemble:
    """Train s heads from seeds base_seed .. base_seed+s-1 (distinct
    initializations and shuffles); optionally fit a Laplace posterior per
    member to form a Laplace ensemble."""
    if s < 1:
        raise ConfigError("ensemble size must be >= 1")
    if base_seed is None:
        base_seed = cfg.seed
    members, posteriors, seeds = [], [], []
    for i in range(s):
        seed = base_seed + i
        member_cfg = TrainConfig(**{**cfg.__dict__, "seed": seed})
        try:
            head = train(seqs, member_cfg, k=k)
            if laplace:
                posteriors.append(fit_laplace(head, seqs, lam, mode))
        except Exception as exc:
            raise EnsembleMemberError(i, exc) from exc
        members.append(head)
        seeds.append(seed)
    return Ensemble(members, seeds, posteriors if laplace else None)


def ensemble_predict(ens: Ensemble, f: np.ndarray, mode: str = "point",
                     bridge_variant: str = "tempered") -> np.ndarray:
    """Uniform average of member predictives for one feature vector.

    mode="point" averages member softmax outputs (deep ensemble);
    mode="bridge" averages member bridge predictive means (Laplace
    ensemble, requires fitted posteriors).
    """
    return ensemble_predict_batch(ens, np.atleast_2d(f), mode, bridge_variant)[0]


def ensemble_predict_batch(ens: Ensemble, x: np.ndarray, mode: str = "point",
                           bridge_variant: str = "tempered") -> np.ndarray:
    if mode == "point":
        return np.mean([predict_proba(m, x) for m in ens.members], axis=0)
    if mode == "bridge":
        if ens.posteriors is None:
            raise PosteriorError("bridge mode requires fitted posteriors")
        preds = []
        for post in ens.posteriors:
            mu, var = logit_gaussian_batch(post, x)
            preds.append(bridge_predictive(mu, var, bridge_variant))
        return np.mean(preds, axis=0)
    raise ConfigError(f"unknown ensemble predictive mode {mode!r}")


# ---------------------------------------------------------------------------
# posterior / ensemble files
# ---------------------------------------------------------------------------
#
# A posterior file is the model block followed by a covariance block:
# magic "LAP1", u8 mode (0 diagonal / 1 full), f64 lambda, u32 K, u32 dim,
# then D or D*D little-endian float64. An ensemble is a directory of
# member_<i>/ subdirectories plus an ensemble.json with the seeds.


def write_posterior(path, post: GaussianPosterior):
    head = post.head()
    with open(path, "wb") as f:
        f.write(_SMX_HEADER.pack(SMX_MAGIC, MODEL_FORMAT_VERSION, head.k, head.dim))
        f.write(head.weights.astype("<f8").tobytes())
        f.write(_LAP_HEADER.pack(LAP_MAGIC, 0 if post.is_diagonal else 1,
                                 post.prior_precision, post.k, post.dim))
        f.write(post.cov.astype("<f8").tobytes())


def read_posterior(path) -> GaussianPosterior:
    with open(path, "rb") as f:
        data = f.read()
    head, off = parse_model(data, path)
    if len(data) < off + _LAP_HEADER.size:
        raise TruncatedPayloadError(f"{path}: truncated covariance header")
    magic, mode_flag, lam, k, dim = _LAP_HEADER.unpack_from(data, off)
    if magic != LAP_MAGIC:
        raise BadMagicError(f"{path}: bad covariance magic {magic!r}")
    if (k, dim) != (head.k, head.dim):
        raise TruncatedPayloadError(f"{path}: covariance shape disagrees with model")
    d = k * (dim + 1)
    count = d if mode_flag == 0 else d * d
    payload = np.frombuffer(data, dtype="<f8", offset=off + _LAP_HEADER.size)
    if payload.size != count:
        raise TruncatedPayloadError(
            f"{path}: expected {count} covariance floats, found {payload.size}")
    cov = payload.copy() if mode_flag == 0 else payload.reshape(d, d).copy()
    return GaussianPosterior(head.weights.ravel(), cov, lam, k, dim)


def write_ensemble(directory, ens: Ensemble):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, head in enumerate(ens.members):
        member_dir = directory / f"member_{i}"
        member_dir.mkdir(exist_ok=True)
        write_model(member_dir / "model.smx", head)
        if ens.posteriors is not None:
            write_posterior(member_dir / "posterior.lap", ens.posteriors[i])
    meta = {"size": len(ens), "seeds": list(ens.seeds),
            "has_posteriors": ens.posteriors is not None}
    (directory / "ensemble.json").write_text(json.dumps(meta, indent=2) + "\n")


def read_ensemble(directory) -> Ensemble:
    directory = Path(directory)
    meta = json.loads((directory / "ensemble.json").read_text())
    members, posteriors = [], []
    for i in range(meta["size"]):
        member_dir = directory / f"member_{i}"
        if meta["has_posteriors"]:
            post = read_posterior(member_dir / "posterior.lap")
            posteriors.append(post)
            members.append(post.head())
        else:
            from .classifier import read_model
            members.append(read_model(member_dir / "model.smx"))
    return Ensemble(members, meta["seeds"],
                    posteriors if meta["has_posteriors"] else None)
