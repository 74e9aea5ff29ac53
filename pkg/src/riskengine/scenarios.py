"""Multivariate-normal model fitting and seeded scenario generation.

Scenario draws are reproducible and order-independent: the standard-normal
variate for scenario row ``i``, asset column ``j`` under a 64-bit ``seed``
is a pure function of (seed, i, j).  The keyed construction is frozen as:

    mix(x): the splitmix64 finalizer
        x ^= x >> 30;  x *= 0xBF58476D1CE4E5B9
        x ^= x >> 27;  x *= 0x94D049BB133111EB
        x ^= x >> 31
    (all arithmetic mod 2^64)

    k    = mix(seed + GOLDEN)            GOLDEN = 0x9E3779B97F4A7C15
    h_i  = mix(k   + (i + 1) * GOLDEN)
    h_ij = mix(h_i + (j + 1) * GOLDEN)
    u    = ((h_ij >> 11) + 0.5) * 2^-53          # uniform in (0, 1)
    z    = norm_ppf(u)                           # pinned inverse CDF

Because each element is keyed independently, generating rows in chunks, in
parallel, or in any order yields bitwise-identical scenario matrices.
"""

from __future__ import annotations

import hashlib
import io
import warnings

import numpy as np

from .errors import DimensionMismatch, InsufficientData, NotPositiveSemidefinite
from .gaussian import norm_ppf_array
from .marketdata import AlignedReturnPanel
from .measures import EstimationWarning

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

PROVENANCE_HISTORICAL = "historical"


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def uniform_stream(seed: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Uniform (0,1) variates keyed on (seed, row, col); see module docstring."""
    with np.errstate(over="ignore"):  # mod-2^64 wrap is the point
        k = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + GOLDEN)
        h_i = _mix64(k + (rows.astype(np.uint64) + np.uint64(1)) * GOLDEN)
        h_ij = _mix64(h_i[:, None] + (cols.astype(np.uint64) + np.uint64(1)) * GOLDEN)
    return ((h_ij >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class NormalModel:
    """Fitted multivariate-normal return model (mu vector, covariance)."""

    def __init__(self, asset_ids, mu, sigma):
        self.asset_ids = tuple(asset_ids)
        self.mu = np.asarray(mu, dtype=np.float64).reshape(-1)
        self.sigma = np.asarray(sigma, dtype=np.float64)
        n = len(self.asset_ids)
        if self.mu.shape != (n,) or self.sigma.shape != (n, n):
            raise DimensionMismatch(
                f"model dimensions inconsistent: {n} assets, mu {self.mu.shape}, "
                f"sigma {self.sigma.shape}"
            )
        scale = max(1.0, float(np.abs(self.sigma).max(initial=0.0)))
        if float(np.abs(self.sigma - self.sigma.T).max(initial=0.0)) > 1e-12 * scale:
            raise ValueError("covariance must be symmetric")
        self._chol: np.ndarray | None = None

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)

    def index_of(self, asset_id: str) -> int:
        try:
            return self.asset_ids.index(asset_id)
        except ValueError:
            raise DimensionMismatch(f"asset {asset_id!r} not in model") from None

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update("|".join(self.asset_ids).encode())
        h.update(self.mu.tobytes())
        h.update(self.sigma.tobytes())
        return h.hexdigest()[:16]


class ScenarioSet:
    """m x n matrix of joint simple-return scenarios."""

    def __init__(self, asset_ids, matrix, provenance: str):
        self.asset_ids = tuple(asset_ids)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.provenance = provenance
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(self.asset_ids):
            raise DimensionMismatch("scenario matrix shape inconsistent with assets")
        if self.matrix.shape[0] < 1:
            raise ValueError("need at least one scenario")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("scenario matrix contains non-finite entries")

    @property
    def n_scenarios(self) -> int:
        return self.matrix.shape[0]

    def column(self, asset_id: str) -> np.ndarray:
        try:
            j = self.asset_ids.index(asset_id)
        except ValueError:
            raise DimensionMismatch(f"asset {asset_id!r} not in scenario set") from None
        return self.matrix[:, j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.asset_ids) + "\n")
        np.savetxt(buf, self.matrix, delimiter=",", fmt="%.17g")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, provenance: str = "imported") -> "ScenarioSet":
        lines = text.strip().splitlines()
        header = [c.strip() for c in lines[0].split(",")]
        matrix = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        return cls(header, matrix, provenance)


def fit_normal(panel: AlignedReturnPanel) -> NormalModel:
    """Sample mean and covariance (1/(m-1) normalization) of a return panel."""
    m = panel.n_dates
    if m < 2:
        raise InsufficientData(f"need >= 2 joint observations, have {m}")
    if m < panel.n_assets + 1:
        warnings.warn(
            f"only {m} observations for {panel.n_assets} assets: "
            "covariance will be singular",
            EstimationWarning,
            stacklevel=2,
        )
    mu = panel.matrix.mean(axis=0)
    centered = panel.matrix - mu
    sigma = centered.T @ centered / (m - 1)
    sigma = 0.5 * (sigma + sigma.T)
    return NormalModel(panel.asset_ids, mu, sigma)


def cholesky(model: NormalModel) -> np.ndarray:
    """Lower-triangular L with L L^T = sigma + jitter*I.

    Jitter escalates through {0, 1e-12, 1e-10, 1e-8} * trace/n until the
    factorization succeeds; a matrix that defeats the largest jitter is
    reported as not positive semidefinite.
    """
    sigma = model.sigma
    n = model.n_assets
    if not np.any(sigma):
        return np.zeros_like(sigma)
    base = float(np.trace(sigma)) / n
    for scale in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            return np.linalg.cholesky(sigma + scale * base * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveSemidefinite(
        f"covariance is not PSD even with jitter 1e-8 * trace/n = {1e-8 * base:.3g}"
    )


def sample(model: NormalModel, m: int, seed: int, row_offset: int = 0) -> ScenarioSet:
    """Draw m joint scenarios: row i = mu + L z_i with keyed-counter normals.

    ``row_offset`` shifts the scenario row indices so that chunked
    generation (offsets 0, m1, m1+m2, ...) concatenates to exactly the
    single-call result.
    """
    if m < 1:
        raise ValueError("need m >= 1 scenarios")
    if model._chol is None:
        model._chol = cholesky(model)
    chol = model._chol
    rows = np.arange(row_offset, row_offset + m, dtype=np.uint64)
    cols = np.arange(model.n_assets, dtype=np.uint64)
    u = uniform_stream(seed, rows, cols)
    z = norm_ppf_array(u)
    matrix = z @ chol.T + model.mu
    return ScenarioSet(
        model.asset_ids,
        matrix,
        provenance=f"monte_carlo(seed={seed}, model={model.digest()})",
    )


def portfolio_scenarios(s: ScenarioSet, exposure) -> np.ndarray:
    """Per-scenario portfolio returns: row-wise dot with the exposure vector."""
    v = np.asarray(exposure, dtype=np.float64).reshape(-1)
    if v.shape[0] != len(s.asset_ids):
        raise DimensionMismatch(
            f"exposure has {v.shape[0]} entries for {len(s.asset_ids)} assets"
        )
    return s.matrix @ v
