"""One-sided stable driver: truncated jump paths, exact increments, thinning.

The driver is a pure-jump subordinator with Levy density ``c * h**(-1-alpha)``
on (0, inf), alpha in (0, 1).  Truncating the jump measure at a cutoff eps
yields a compound Poisson path that can be simulated exactly; removing the
cutoff is handled by the exact-increment sampler (Zolotarev/Kanter transform),
used when infinite small-jump activity matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StableParams",
    "JumpPath",
    "GridPath",
    "levy_tail_mass",
    "laplace_exponent",
    "sample_truncated_path",
    "extend_truncated_path",
    "thin_path",
    "sample_exact_increment",
    "sample_grid_path",
    "path_value",
]


@dataclass(frozen=True)
class StableParams:
    """Order alpha in (0,1) and Levy-density scale c > 0 of the driver.

    With the default normalization ``c = alpha / gamma(1 - alpha)`` the
    Laplace exponent is exactly ``psi(lam) = lam ** alpha``.
    """

    alpha: float
    c: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError(f"c must be a positive real, got {self.c}")

    @classmethod
    def default(cls, alpha: float) -> "StableParams":
        """Parameters normalized so that psi(lam) = lam ** alpha."""
        return cls(alpha, alpha / math.gamma(1.0 - alpha))

    @property
    def unit_time_scale(self) -> float:
        """Scale factor s with Z_1 = s * S for a standard stable sample S."""
        return (self.c * math.gamma(1.0 - self.alpha) / self.alpha) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class JumpPath:
    """Finite, time-sorted jump events of a truncated driver on [0, horizon].

    The path value at t is the sum of sizes with time <= t (cadlag); the
    cutoff records the truncation level the path was generated at.
    """

    horizon: float
    times: np.ndarray
    sizes: np.ndarray
    cutoff: float
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        sizes = np.asarray(self.sizes, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sizes", sizes)
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.cutoff < 0.0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")
        if times.shape != sizes.shape or times.ndim != 1:
            raise ValueError("times and sizes must be 1-d arrays of equal length")
        if times.size:
            if times[0] <= 0.0 or times[-1] > self.horizon:
                raise ValueError("event times must lie in (0, horizon]")
            if np.any(np.diff(times) <= 0.0):
                raise ValueError("event times must be strictly increasing")
            if np.any(sizes <= 0.0):
                raise ValueError("jump sizes must be strictly positive")
            if self.cutoff > 0.0 and np.any(sizes < self.cutoff):
                raise ValueError("jump sizes must be >= cutoff")
        object.__setattr__(self, "_cum", np.cumsum(sizes))

    def __len__(self) -> int:
        return int(self.times.size)

    def value_at(self, t: float) -> float:
        """Cadlag path value: sum of sizes with event time <= t."""
        if t < 0.0 or t > self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        idx = int(np.searchsorted(self.times, t, side="right"))
        return float(self._cum[idx - 1]) if idx else 0.0

    def values_at(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized cadlag evaluation at an array of times."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < 0.0 or ts.max() > self.horizon):
            raise ValueError("evaluation times outside [0, horizon]")
        idx = np.searchsorted(self.times, ts, side="right")
        padded = np.concatenate(([0.0], self._cum))
        return padded[idx]

    @property
    def total(self) -> float:
        return float(self._cum[-1]) if len(self) else 0.0

    @property
    def cumulative_sizes(self) -> np.ndarray:
        """Running sum of jump sizes, aligned with the event times."""
        return self._cum

    def write_csv(self, path) -> None:
        """One event per row, header ``t,dz``, 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,dz\n")
            for t, dz in zip(self.times, self.sizes):
                fh.write(f"{t:.17g},{dz:.17g}\n")


@dataclass(frozen=True)
class GridPath:
    """Exact-law driver values on a uniform grid 0 = s_0 < ... < s_m = T.

    Between grid points the path is read as a cadlag step function; values
    are non-decreasing with values[0] = 0.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.size < 2 or times.shape != values.shape:
            raise ValueError("grid needs matching 1-d times/values with >= 2 points")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0.0):
            raise ValueError("grid times must start at 0 and strictly increase")
        if values[0] != 0.0 or np.any(np.diff(values) < 0.0):
            raise ValueError("grid values must start at 0 and be non-decreasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def value_at(self, s: float) -> float:
        """Step evaluation: value at the largest grid time <= s."""
        if s < 0.0 or s > self.horizon:
            raise ValueError(f"s={s} outside [0, {self.horizon}]")
        idx = int(np.searchsorted(self.times, s, side="right")) - 1
        return float(self.values[idx])

    def write_csv(self, path) -> None:
        """Header ``s,value``, 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("s,value\n")
            for s, v in zip(self.times, self.values):
                fh.write(f"{s:.17g},{v:.17g}\n")


def levy_tail_mass(params: StableParams, eps: float) -> float:
    """Jump intensity of the eps-truncated driver: c * eps**(-alpha) / alpha."""
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps}")
    return params.c * eps ** (-params.alpha) / params.alpha


def laplace_exponent(params: StableParams, lam: float) -> float:
    """psi(lam) = c * gamma(1-alpha) * lam**alpha / alpha; lam**alpha by default."""
    if not (lam > 0.0):
        raise ValueError(f"lambda must be positive, got {lam}")
    return params.c * math.gamma(1.0 - params.alpha) * lam**params.alpha / params.alpha


def _pareto_sizes(params: StableParams, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
    # Jump-size density alpha * eps**alpha * h**(-1-alpha) on [eps, inf).
    u = rng.random(n)
    return eps * (1.0 - u) ** (-1.0 / params.alpha)


def _merge_duplicate_times(times: np.ndarray, sizes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Simultaneous events (probability zero, but possible in floats) collapse
    # to one jump with the summed size, preserving the path exactly.
    if times.size < 2 or np.all(np.diff(times) > 0.0):
        return times, sizes
    uniq, start = np.unique(times, return_index=True)
    merged = np.add.reduceat(sizes, start)
    return uniq, merged


def sample_truncated_path(
    params: StableParams, horizon: float, eps: float, rng: np.random.Generator
) -> JumpPath:
    """Compound-Poisson path of jumps >= eps on (0, horizon].

    Event count is Poisson(horizon * tail_mass), times are uniform order
    statistics on (0, horizon], sizes are Pareto on [eps, inf).
    """
    if not (horizon > 0.0):
        raise ValueError(f"horizon must be positive, got {horizon}")
    rate = levy_tail_mass(params, eps)
    n = int(rng.poisson(rate * horizon))
    times = horizon * (1.0 - rng.random(n))  # lands in (0, horizon]
    times.sort()
    sizes = _pareto_sizes(params, eps, n, rng)
    times, sizes = _merge_duplicate_times(times, sizes)
    return JumpPath(horizon=horizon, times=times, sizes=sizes, cutoff=eps)


def extend_truncated_path(
    params: StableParams, path: JumpPath, new_horizon: float, rng: np.random.Generator
) -> JumpPath:
    """Append fresh jumps on (horizon, new_horizon]; law equals sampling longer."""
    if new_horizon <= path.horizon:
        raise ValueError("new_horizon must exceed the current horizon")
    if not (path.cutoff > 0.0):
        raise ValueError("only truncated paths can be extended")
    tail = sample_truncated_path(params, new_horizon - path.horizon, path.cutoff, rng)
    times = np.concatenate([path.times, path.horizon + tail.times])
    sizes = np.concatenate([path.sizes, tail.sizes])
    times, sizes = _merge_duplicate_times(times, sizes)
    return JumpPath(horizon=new_horizon, times=times, sizes=sizes, cutoff=path.cutoff)


def thin_path(path: JumpPath, new_eps: float) -> JumpPath:
    """Keep only jumps >= new_eps; the coupling device across truncation levels."""
    if new_eps < path.cutoff:
        raise ValueError(
            f"cannot thin below the sampled cutoff ({new_eps} < {path.cutoff}): "
            "jumps in between were never sampled"
        )
    keep = path.sizes >= new_eps
    return JumpPath(
        horizon=path.horizon,
        times=path.times[keep],
        sizes=path.sizes[keep],
        cutoff=new_eps,
    )


def _standard_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Zolotarev integral representation (Kanter's sampler): for U uniform on
    # (0, pi) and W standard exponential,
    #   S = (A(U) / W) ** ((1-alpha)/alpha),
    #   A(u) = sin((1-alpha)u) * sin(alpha*u)**(alpha/(1-alpha)) / sin(u)**(1/(1-alpha))
    # has E exp(-lam*S) = exp(-lam**alpha).  Evaluated in log space to avoid
    # under/overflow near the endpoints of (0, pi).
    u = rng.uniform(0.0, np.pi, size)
    np.clip(u, 1e-300, np.nextafter(np.pi, 0.0), out=u)
    w = np.maximum(rng.standard_exponential(size), np.finfo(float).tiny)
    log_a = (
        np.log(np.sin((1.0 - alpha) * u))
        + (alpha / (1.0 - alpha)) * np.log(np.sin(alpha * u))
        - (1.0 / (1.0 - alpha)) * np.log(np.sin(u))
    )
    return np.exp(((1.0 - alpha) / alpha) * (log_a - np.log(w)))


def sample_exact_increment(
    params: StableParams, dt: float, rng: np.random.Generator, size: int | None = None
):
    """Exact-law increment Z_dt (scalar, or an array when size is given)."""
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    if size is not None and size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    scale = (dt ** (1.0 / params.alpha)) * params.unit_time_scale
    out = scale * _standard_stable(params.alpha, 1 if size is None else size, rng)
    return out if size is not None else float(out[0])


def sample_grid_path(
    params: StableParams, horizon: float, m: int, rng: np.random.Generator
) -> GridPath:
    """Driver on a uniform m-step grid from i.i.d. exact increments."""
    if m < 1:
        raise ValueError("grid needs at least one step")
    if not (horizon > 0.0):
        raise ValueError(f"horizon must be positive, got {horizon}")
    dt = horizon / m
    inc = sample_exact_increment(params, dt, rng, size=m)
    times = np.linspace(0.0, horizon, m + 1)
    values = np.concatenate(([0.0], np.cumsum(inc)))
    return GridPath(times=times, values=values)


def path_value(path: JumpPath, t: float) -> float:
    """Cadlag evaluation of a jump path at time t in [0, horizon]."""
    return path.value_at(t)
