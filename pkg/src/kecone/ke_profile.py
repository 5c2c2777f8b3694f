"""Radial profile of the invariant Kahler-Einstein metric.

The metric is determined by one function f of the geodesic distance t to the
divisor, solving

    f''/f + n (f'/f)^2 + n / f^2 = n + 1,      f(0) = c,  f'(0) = 0,

with Einstein constant -2(n+1) and c in (sqrt(n/(n+1)), 1].  The endpoints are
closed forms: c = 1 gives cosh(t) (the ball) and c = sqrt(n/(n+1)) the
constant solution of the product limit.

Numerically the equation is integrated in the variables (u, w) = (log f, f'/f)

    u' = w,     w' = (n+1) - (n+1) w^2 - n exp(-2u),

which removes the e^t growth of round-off that the raw (f, f') system suffers
from.  f'' is always recomputed algebraically from the equation, never by
differencing.  The quantity

    f^{2n} (f'^2 + 1 - f^2) = c^{2n} (1 - c^2) =: kappa

is conserved along exact solutions and serves as an integration-quality
diagnostic independent of the solver path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateFit,
    HorizonTooShort,
    InvalidInitialValue,
    NonPositiveValue,
    OutOfRange,
    StepFailure,
)

__all__ = [
    "ModelParams",
    "MetricProfile",
    "ClaimReport",
    "ClaimResult",
    "DecayFit",
    "solve_profile",
    "verify_claims",
    "fit_decay_rate",
    "einstein_rescaling",
    "profile_from_json_dict",
]

#: admissibility guard above the product-limit value sqrt(n/(n+1))
BOUNDARY_EPS = 1e-14

#: uniform output grid size (dense evaluation interpolates between nodes)
GRID_POINTS = 2048

_RTOL_FLOOR = 2.3e-14  # ~100 eps, the integrator's useful floor


@dataclass(frozen=True)
class ModelParams:
    """Complex dimension n >= 2 and initial value c = f(0).

    The Einstein constant is pinned to -2(n+1); a rescaling helper is provided
    for other normalizations (see :func:`einstein_rescaling`).
    """

    n: int
    c: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidInitialValue(f"complex dimension must be an integer >= 2, got {self.n}")
        lo = math.sqrt(self.n / (self.n + 1.0))
        if not (lo + BOUNDARY_EPS <= self.c <= 1.0):
            raise InvalidInitialValue(
                f"initial value c={self.c!r} outside admissible interval "
                f"({lo} + {BOUNDARY_EPS:g}, 1] for n={self.n}"
            )

    @property
    def einstein_constant(self) -> float:
        return -2.0 * (self.n + 1.0)

    @property
    def kappa(self) -> float:
        """Conserved energy c^{2n} (1 - c^2); zero exactly for the ball."""
        return self.c ** (2 * self.n) * (1.0 - self.c ** 2)


def _rhs(t, y, n):
    u, w = y
    return (w, (n + 1.0) - (n + 1.0) * w * w - n * np.exp(-2.0 * u))


def _fppf(u, w, n):
    """f''/f recomputed algebraically from the equation."""
    return (n + 1.0) - n * w * w - n * np.exp(-2.0 * u)


# two-point quintic Hermite basis on [0, 1] (value, slope, curvature at ends)
def _hermite5(s):
    s2 = s * s
    s3 = s2 * s
    s4 = s3 * s
    s5 = s4 * s
    h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5
    h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5
    h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5)
    h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5
    h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5
    h5 = 0.5 * (s3 - 2.0 * s4 + s5)
    return h0, h1, h2, h3, h4, h5


def _hermite5_deriv(s):
    s2 = s * s
    s3 = s2 * s
    s4 = s3 * s
    d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4
    d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4
    d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4)
    d3 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4
    d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4
    d5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4)
    return d0, d1, d2, d3, d4, d5


@dataclass
class MetricProfile:
    """Sampled solution (t, f, f', f'') with dense evaluation.

    Dense output is a C^2 quintic Hermite interpolant of u = log f on the
    uniform grid, so evaluations depend only on the stored samples and survive
    serialization round-trips exactly.
    """

    params: ModelParams
    t_max: float
    tol: float
    t: np.ndarray
    u: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    @property
    def f(self) -> np.ndarray:
        return np.exp(self.u)

    @property
    def fp(self) -> np.ndarray:
        return self.w * np.exp(self.u)

    @property
    def fpp(self) -> np.ndarray:
        return _fppf(self.u, self.w, self.params.n) * np.exp(self.u)

    @property
    def samples(self) -> np.ndarray:
        """(N, 4) array with columns t, f, f', f''."""
        return np.column_stack([self.t, self.f, self.fp, self.fpp])

    def _interp_uw(self, ts):
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < -1e-12) or np.any(ts > self.t_max * (1 + 1e-12) + 1e-12):
            raise OutOfRange(f"evaluation outside [0, {self.t_max}]")
        tq = np.clip(ts, 0.0, self.t_max)
        h = self.t[1] - self.t[0]
        idx = np.clip((tq / h).astype(int), 0, len(self.t) - 2)
        s = (tq - self.t[idx]) / h
        n = self.params.n
        upp = _fppf(self.u, self.w, n) - self.w ** 2  # u'' = f''/f - w^2
        h0, h1, h2, h3, h4, h5 = _hermite5(s)
        uq = (
            h0 * self.u[idx] + h1 * h * self.w[idx] + h2 * h * h * upp[idx]
            + h3 * self.u[idx + 1] + h4 * h * self.w[idx + 1] + h5 * h * h * upp[idx + 1]
        )
        d0, d1, d2, d3, d4, d5 = _hermite5_deriv(s)
        wq = (
            d0 * self.u[idx] + d1 * h * self.w[idx] + d2 * h * h * upp[idx]
            + d3 * self.u[idx + 1] + d4 * h * self.w[idx + 1] + d5 * h * h * upp[idx + 1]
        ) / h
        return uq, wq

    def evaluate(self, ts):
        """Return (f, f', f'') at arbitrary points of [0, t_max]."""
        uq, wq = self._interp_uw(ts)
        fq = np.exp(uq)
        return fq, wq * fq, _fppf(uq, wq, self.params.n) * fq

    def residual(self) -> float:
        """sup |f''/f + n (f'/f)^2 + n/f^2 - (n+1)| over the grid.

        Zero by construction since f'' is recomputed from the equation; kept
        as the contract check that the stored columns stay consistent.
        """
        n = self.params.n
        r = self.fpp / self.f + n * (self.fp / self.f) ** 2 + n / self.f ** 2 - (n + 1.0)
        return float(np.max(np.abs(r)))

    def energy_residual(self, amplification_cap: float = 1e3) -> float:
        """sup | (w^2 + e^{-2u} - 1) e^{(2n+2)u} - kappa | on the window where
        the amplification e^{(2n+2)u} stays below the cap.

        This measures drift off the conserved-energy manifold; unlike
        :meth:`residual` it is an honest integration-quality metric.
        """
        n = self.params.n
        amp = np.exp((2 * n + 2) * self.u)
        mask = amp <= amplification_cap
        drift = (self.w ** 2 + np.exp(-2.0 * self.u) - 1.0) * amp - self.params.kappa
        return float(np.max(np.abs(drift[mask])))

    # -- serialization ------------------------------------------------------

    def to_csv(self, fh) -> None:
        fh.write("t,f,fp,fpp\n")
        for row in self.samples:
            fh.write("%.17g,%.17g,%.17g,%.17g\n" % tuple(row))

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "metric_profile",
            "params": {"n": self.params.n, "c": self.params.c,
                       "einstein_constant": self.params.einstein_constant},
            "t_max": self.t_max,
            "tol": self.tol,
            "samples": {
                "t": self.t.tolist(),
                "f": self.f.tolist(),
                "fp": self.fp.tolist(),
                "fpp": self.fpp.tolist(),
            },
        }

    def to_json(self, fh) -> None:
        json.dump(self.to_json_dict(), fh)


def profile_from_json_dict(doc: dict) -> MetricProfile:
    if doc.get("kind") != "metric_profile":
        raise ValueError(f"not a metric_profile document: kind={doc.get('kind')!r}")
    params = ModelParams(n=int(doc["params"]["n"]), c=float(doc["params"]["c"]))
    t = np.asarray(doc["samples"]["t"], dtype=float)
    f = np.asarray(doc["samples"]["f"], dtype=float)
    fp = np.asarray(doc["samples"]["fp"], dtype=float)
    return MetricProfile(params=params, t_max=float(doc["t_max"]), tol=float(doc["tol"]),
                         t=t, u=np.log(f), w=fp / f)


def solve_profile(params: ModelParams, t_max: float = 20.0, tol: float = 1e-10,
                  grid_points: int = GRID_POINTS) -> MetricProfile:
    """Integrate the profile equation up to t_max with dense output.

    tol controls the adaptive integrator (mapped onto rtol/atol with a floor
    near 100 eps); the returned grid is uniform with ``grid_points`` nodes.
    """
    if not (0.0 < tol < 1e-4):
        raise ValueError(f"tol must lie in (0, 1e-4), got {tol}")
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    rtol = min(max(tol * 1e-3, _RTOL_FLOOR), 1e-6)
    grid = np.linspace(0.0, t_max, grid_points)
    sol = solve_ivp(
        _rhs, (0.0, t_max), (math.log(params.c), 0.0), args=(params.n,),
        method="DOP853", rtol=rtol, atol=rtol, t_eval=grid,
    )
    if not sol.success:
        raise StepFailure(f"adaptive integration failed: {sol.message}")
    return MetricProfile(params=params, t_max=float(t_max), tol=float(tol),
                         t=grid, u=sol.y[0], w=sol.y[1])


# ---------------------------------------------------------------------------
# Qualitative claims about solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClaimResult:
    name: str
    passed: bool
    worst_slack: float
    note: str = ""


@dataclass(frozen=True)
class ClaimReport:
    claims: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def __getitem__(self, i):
        return self.claims[i]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "claim_report",
            "claims": [
                {"name": c.name, "passed": c.passed, "worst_slack": c.worst_slack,
                 "note": c.note}
                for c in self.claims
            ],
        }


def verify_claims(profile: MetricProfile, eps: float) -> ClaimReport:
    """Check the qualitative properties of the solved profile:

    1. log f is convex;
    2. f'/f is nondecreasing with limit 1 (limit checked when t_max >= 15);
    3. for c < 1, f < cosh and f'/f < tanh strictly for t > 0;
    4. f''/f is nondecreasing, bounded by 1, with limit 1.

    ``worst_slack`` reports the largest violation found (negative values mean
    the inequality held with margin).
    """
    if profile.t_max < 5:
        raise HorizonTooShort(f"asymptotic checks need t_max >= 5, got {profile.t_max}")
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    n = profile.params.n
    c = profile.params.c
    t, u, w = profile.t, profile.u, profile.w
    fppf = _fppf(u, w, n)

    logf_pp = fppf - w ** 2
    s1 = float(-np.min(logf_pp))
    claim1 = ClaimResult("log-convexity", s1 <= eps, s1)

    mono_w = float(np.max(w[:-1] - w[1:]))
    if profile.t_max >= 15.0:
        lim = float(abs(w[-1] - 1.0))
        passed2 = mono_w <= eps and lim < eps
        note2 = ""
    else:
        lim = float("nan")
        passed2 = mono_w <= eps
        note2 = "limit not checked (t_max < 15)"
    claim2 = ClaimResult("slope-ratio to 1", passed2, max(mono_w, 0.0 if math.isnan(lim) else lim), note2)

    if c >= 1.0:
        claim3 = ClaimResult("ball comparison", True, 0.0, "vacuous (f is the ball profile)")
    else:
        pos = t > 0
        sf = float(np.max(np.exp(u[pos]) - np.cosh(t[pos])))
        sw = float(np.max(w[pos] - np.tanh(t[pos])))
        # strict inequalities; the gap underflows at large t, so violations up
        # to eps count as round-off
        s3 = max(sf, sw)
        claim3 = ClaimResult("ball comparison", s3 <= eps, s3)

    mono_k = float(np.max(fppf[:-1] - fppf[1:]))
    bound_k = float(np.max(fppf - 1.0))
    lim_k = float(abs(fppf[-1] - 1.0)) if profile.t_max >= 15.0 else 0.0
    claim4 = ClaimResult(
        "curvature-ratio to 1",
        mono_k <= eps and bound_k <= eps and lim_k < eps,
        max(mono_k, bound_k, lim_k),
    )
    return ClaimReport((claim1, claim2, claim3, claim4))


# ---------------------------------------------------------------------------
# Exponential-decay fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    rate: float
    constant: float
    r_squared: float

    def __iter__(self):
        return iter((self.rate, self.constant, self.r_squared))


def fit_decay_rate(series, t_window) -> DecayFit:
    """Least-squares fit of log v against t over the window:
    v(t) ~ constant * exp(-rate * t).

    ``series`` is an (N, 2) array-like of (t, v) pairs; the window is a
    (lo, hi) pair of length >= 5.
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be an (N, 2) array of (t, v) pairs")
    lo, hi = float(t_window[0]), float(t_window[1])
    if hi - lo < 5.0:
        raise ValueError(f"fit window must have length >= 5, got {hi - lo}")
    mask = (arr[:, 0] >= lo) & (arr[:, 0] <= hi)
    tw, vw = arr[mask, 0], arr[mask, 1]
    if np.any(vw <= 0.0):
        raise NonPositiveValue(
            "series contains values <= 0 in the window (decay target already "
            "reached at round-off level); shrink the window"
        )
    if len(tw) < 10:
        raise DegenerateFit(f"only {len(tw)} samples in window, need >= 10")
    y = np.log(vw)
    slope, intercept = np.polyfit(tw, y, 1)
    resid = y - (slope * tw + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(rate=float(-slope), constant=float(np.exp(intercept)), r_squared=r2)


def einstein_rescaling(n: int, target_constant: float) -> dict:
    """Factors converting from the -2(n+1) normalization used here to a metric
    with Einstein constant ``target_constant`` (< 0).

    Scaling the metric by s divides the Einstein constant, every sectional
    curvature and the squared reciprocal lengths by s.
    """
    if target_constant >= 0:
        raise ValueError("target Einstein constant must be negative")
    s = -2.0 * (n + 1.0) / target_constant
    return {
        "metric_factor": s,
        "length_factor": math.sqrt(s),
        "curvature_factor": 1.0 / s,
    }
