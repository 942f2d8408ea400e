"""Generation and persistence of dense overdetermined test systems.

Two families are produced.  Consistent systems: the entries of row i are
i.i.d. normal with a per-row mean and deviation drawn uniformly from
configured ranges, a reference solution ``x_star`` is drawn from one
normal distribution of the same family, and ``b = A @ x_star``.
Inconsistent systems: standard-normal noise is added to ``b`` and the
least-squares solution ``x_ls`` is computed with CGLS and stored.

Everything is a pure function of ``(seed, m, n, noise_seed)``: the mother
matrix, every crop of it, the reference solutions, and the noise are all
derived from fixed streams, so any artifact can be regenerated byte for
byte.  Stream tags: 1 = matrix rows, 2 = reference solution (also keyed by
the cropped shape), 3 = noise.

Cropping takes the top-left m-by-n block of a larger system and redraws a
reference solution deterministically from ``(seed, m, n)``, recomputing b,
so each cropped system is exactly consistent with a known solution while
sharing its matrix prefix with the mother bitwise.

File format (little endian): magic ``b"KZSYS"``, version byte 1, u64 m,
u64 n, u32 flags, optional generator metadata (u64 seed plus the four
range floats, present when flag bit 3 is set), then A row-major, b, and
the optional reference solutions, all float64.  Flag bits: 0 consistent,
1 has x_star, 2 has x_ls, 3 has generator metadata.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .cgls import cgls_solve
from .errors import DimensionMismatchError, SystemFormatError, UnsupportedVersionError
from .sampling import Prng

__all__ = [
    "GeneratorConfig",
    "LinearSystem",
    "crop",
    "generate_mother",
    "load_system",
    "make_inconsistent",
    "save_system",
]

_MAGIC = b"KZSYS"
_VERSION = 1

_TAG_MATRIX = 1
_TAG_SOLUTION = 2
_TAG_NOISE = 3

_FLAG_CONSISTENT = 1
_FLAG_X_STAR = 2
_FLAG_X_LS = 4
_FLAG_GENMETA = 8


@dataclass
class GeneratorConfig:
    """Parameters of the system generator (defaults are desk scale)."""

    m_max: int = 4000
    n_max: int = 500
    mu_range: tuple[float, float] = (-5.0, 5.0)
    sigma_range: tuple[float, float] = (1.0, 20.0)
    noise_std: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_max < 1 or self.m_max < self.n_max:
            raise DimensionMismatchError(
                f"need m_max >= n_max >= 1 (overdetermined), got {self.m_max}x{self.n_max}"
            )
        if self.sigma_range[0] <= 0 or self.sigma_range[1] < self.sigma_range[0]:
            raise ValueError(f"sigma_range must be positive and ordered, got {self.sigma_range}")
        if self.mu_range[1] < self.mu_range[0]:
            raise ValueError(f"mu_range must be ordered, got {self.mu_range}")


@dataclass
class LinearSystem:
    """A dense system A x = b with optional reference solutions.

    ``seed`` and the ranges record how the system was generated so crops
    can deterministically rebuild their reference solutions; they survive
    save/load.
    """

    A: np.ndarray
    b: np.ndarray
    x_star: np.ndarray | None = None
    x_ls: np.ndarray | None = None
    consistent: bool = True
    seed: int | None = None
    mu_range: tuple[float, float] = (-5.0, 5.0)
    sigma_range: tuple[float, float] = (1.0, 20.0)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def x_ref(self) -> np.ndarray:
        """Reference solution for stopping and error traces."""
        ref = self.x_star if self.x_star is not None else self.x_ls
        if ref is None:
            raise ValueError("system carries no reference solution")
        return ref


def _draw_solution(seed, m, n, mu_range, sigma_range):
    rng = Prng(seed, _TAG_SOLUTION, m, n)
    mu = rng.uniform(*mu_range)
    sigma = rng.uniform(*sigma_range)
    return rng.normal(mu, sigma, size=n)


def generate_mother(cfg: GeneratorConfig) -> LinearSystem:
    """Generate the largest consistent system of a configuration."""
    cfg.validate()
    m, n = cfg.m_max, cfg.n_max
    rng = Prng(cfg.seed, _TAG_MATRIX)
    a = np.empty((m, n))
    for i in range(m):
        mu = rng.uniform(*cfg.mu_range)
        sigma = rng.uniform(*cfg.sigma_range)
        a[i] = rng.normal(mu, sigma, size=n)
    x_star = _draw_solution(cfg.seed, m, n, cfg.mu_range, cfg.sigma_range)
    b = a @ x_star
    return LinearSystem(
        A=a,
        b=b,
        x_star=x_star,
        consistent=True,
        seed=cfg.seed,
        mu_range=cfg.mu_range,
        sigma_range=cfg.sigma_range,
    )


def crop(system: LinearSystem, m: int, n: int) -> LinearSystem:
    """Top-left m-by-n subsystem with a fresh deterministic solution."""
    if m < n:
        raise DimensionMismatchError(f"crop must stay overdetermined, got {m}x{n}")
    if m > system.m or n > system.n:
        raise DimensionMismatchError(
            f"crop {m}x{n} exceeds system {system.m}x{system.n}"
        )
    if system.seed is None:
        raise ValueError("system carries no generator seed; cannot crop deterministically")
    a = np.ascontiguousarray(system.A[:m, :n])
    x_star = _draw_solution(system.seed, m, n, system.mu_range, system.sigma_range)
    return LinearSystem(
        A=a,
        b=a @ x_star,
        x_star=x_star,
        consistent=True,
        seed=system.seed,
        mu_range=system.mu_range,
        sigma_range=system.sigma_range,
    )


def make_inconsistent(system: LinearSystem, noise_seed: int) -> LinearSystem:
    """Perturb b with standard-normal noise and store the CGLS solution."""
    if not system.consistent:
        raise ValueError("system is already inconsistent")
    xi = Prng(noise_seed, _TAG_NOISE).standard_normal(size=system.m)
    b_ls = system.b + xi
    x_ls = cgls_solve(system.A, b_ls, tol=1e-10)
    return LinearSystem(
        A=system.A,
        b=b_ls,
        x_star=None,
        x_ls=x_ls,
        consistent=False,
        seed=system.seed,
        mu_range=system.mu_range,
        sigma_range=system.sigma_range,
    )


def save_system(system: LinearSystem, path) -> None:
    """Write a system file (see module docstring for the layout)."""
    flags = 0
    if system.consistent:
        flags |= _FLAG_CONSISTENT
    if system.x_star is not None:
        flags |= _FLAG_X_STAR
    if system.x_ls is not None:
        flags |= _FLAG_X_LS
    if system.seed is not None:
        flags |= _FLAG_GENMETA
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<B", _VERSION))
        fh.write(struct.pack("<QQI", system.m, system.n, flags))
        if system.seed is not None:
            fh.write(
                struct.pack(
                    "<Qdddd",
                    system.seed,
                    *system.mu_range,
                    *system.sigma_range,
                )
            )
        fh.write(np.ascontiguousarray(system.A, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(system.b, dtype="<f8").tobytes())
        if system.x_star is not None:
            fh.write(np.ascontiguousarray(system.x_star, dtype="<f8").tobytes())
        if system.x_ls is not None:
            fh.write(np.ascontiguousarray(system.x_ls, dtype="<f8").tobytes())


def _read_exact(fh, nbytes, what):
    off = fh.tell()
    data = fh.read(nbytes)
    if len(data) != nbytes:
        raise SystemFormatError(f"truncated file while reading {what}", offset=off + len(data))
    return data


def _read_f64(fh, count, what):
    return np.frombuffer(_read_exact(fh, 8 * count, what), dtype="<f8").copy()


def load_system(path) -> LinearSystem:
    """Read a system file; round-trips every field of :func:`save_system`."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, len(_MAGIC), "magic")
        if magic != _MAGIC:
            raise SystemFormatError(f"bad magic {magic!r}", offset=0)
        (version,) = struct.unpack("<B", _read_exact(fh, 1, "version"))
        if version != _VERSION:
            raise UnsupportedVersionError(
                f"unsupported system file version {version} (expected {_VERSION})",
                offset=len(_MAGIC),
            )
        m, n, flags = struct.unpack("<QQI", _read_exact(fh, 20, "header"))
        if m < 1 or n < 1:
            raise SystemFormatError(f"bad dimensions {m}x{n}", offset=len(_MAGIC) + 1)
        seed = None
        mu_range = (-5.0, 5.0)
        sigma_range = (1.0, 20.0)
        if flags & _FLAG_GENMETA:
            seed, mu_lo, mu_hi, sig_lo, sig_hi = struct.unpack(
                "<Qdddd", _read_exact(fh, 40, "generator metadata")
            )
            mu_range = (mu_lo, mu_hi)
            sigma_range = (sig_lo, sig_hi)
        a = _read_f64(fh, m * n, "matrix").reshape(m, n)
        b = _read_f64(fh, m, "constants")
        x_star = _read_f64(fh, n, "x_star") if flags & _FLAG_X_STAR else None
        x_ls = _read_f64(fh, n, "x_ls") if flags & _FLAG_X_LS else None
        return LinearSystem(
            A=a,
            b=b,
            x_star=x_star,
            x_ls=x_ls,
            consistent=bool(flags & _FLAG_CONSISTENT),
            seed=seed,
            mu_range=mu_range,
            sigma_range=sigma_range,
        )
