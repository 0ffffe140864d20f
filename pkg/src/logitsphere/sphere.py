"""Constructive sphere packings/covers and a halfspace labeling counter.

A greedy maximal random packing at radius eps keeps every drawn point that
is at distance >= eps from all kept points; maximality makes the result an
eps-cover as well.  Construction stops after 10x the current size of
consecutive rejections.  This trades optimality for simplicity: the
cardinality floor (1/eps)^(d-1) is only asserted on the documented grid
(d <= 4, eps >= 0.3) where greedy reliably exceeds it.

``count_halfspace_labelings`` counts the distinct sign patterns
(sign(x_i.T theta))_i realizable by unit theta: an angular sweep in d = 2,
and in d = 3 an enumeration of the cells of the great-circle arrangement by
perturbing every vertex +-(x_i cross x_j) into its four adjacent cells,
backed by verification sampling.  The count never exceeds the Winder bound
2*(n*e/(d-1))^(d-1).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .model import UnitParameter
from .rng import RngSeed

__all__ = [
    "NetSizeError",
    "SphereNet",
    "build_packing",
    "build_cap_cover",
    "count_halfspace_labelings",
    "winder_bound",
    "save_net",
    "load_net",
]

_STOP_FACTOR = 10
_DEFAULT_NET_SEED = RngSeed(0x6E657453)  # fixed so constructions are reproducible


class NetSizeError(ValueError):
    """Predicted net cardinality exceeds the in-memory guard (1e7 points)."""


@dataclass(frozen=True)
class SphereNet:
    """A finite point set on S^(d-1) with its packing/cover radius."""

    coords: np.ndarray  # (N, d)
    radius: float
    kind: str  # "packing" or "cover"
    construction: str
    center: np.ndarray | None = None  # cap covers only
    cap_radius: float | None = None

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.kind not in ("packing", "cover"):
            raise ValueError("kind must be 'packing' or 'cover'")

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def points_array(self) -> np.ndarray:
        return self.coords

    @property
    def points(self) -> list[UnitParameter]:
        return [UnitParameter(p) for p in self.coords]

    def check_packing(self, seed: RngSeed = _DEFAULT_NET_SEED) -> float:
        """Smallest pairwise distance found (exhaustive up to 5000 points,
        otherwise 1e6 random pairs).  Raises if below the radius."""
        n = len(self)
        if n < 2:
            return math.inf
        if n <= 5000:
            gram = self.coords @ self.coords.T
            sq = np.sum(self.coords**2, axis=1)
            dist2 = sq[:, None] + sq[None, :] - 2.0 * gram
            np.fill_diagonal(dist2, np.inf)
            dmin = math.sqrt(max(0.0, float(dist2.min())))
        else:
            rng = seed.derive("pair_check").generator()
            i = rng.integers(0, n, size=1_000_000)
            j = rng.integers(0, n, size=1_000_000)
            keep = i != j
            diff = self.coords[i[keep]] - self.coords[j[keep]]
            dmin = math.sqrt(float(np.einsum("kj,kj->k", diff, diff).min()))
        if dmin < self.radius * (1.0 - 1e-12):
            raise AssertionError(f"packing violated: min pairwise distance {dmin} < {self.radius}")
        return dmin

    def cover_certificate(self, probes: int = 100_000, seed: RngSeed = _DEFAULT_NET_SEED) -> bool:
        """Statistical cover check: every random probe of the target region
        (the cap if one is recorded, else the whole sphere) has a net point
        within the radius."""
        pts = _probe_points(self.dim, self.center, self.cap_radius, probes, seed)
        return not _uncovered(pts, self.coords, self.radius).shape[0]


def _predicted_cardinality(d: int, eps: float) -> float:
    return 4.0 * (1.0 + 4.0 / eps) ** (d - 1)


def _uncovered(probes: np.ndarray, kept: np.ndarray, radius: float) -> np.ndarray:
    """Probes with no kept point within the radius (tiny slack for roundoff)."""
    if kept.shape[0] == 0:
        return probes
    r2 = radius * radius * (1.0 + 1e-12)
    sq_net = np.sum(kept**2, axis=1)
    out = []
    for start in range(0, probes.shape[0], 8192):
        block = probes[start : start + 8192]
        d2 = np.sum(block**2, axis=1)[:, None] - 2.0 * (block @ kept.T) + sq_net[None, :]
        miss = d2.min(axis=1) > r2
        if miss.any():
            out.append(block[miss])
    return np.vstack(out) if out else np.empty((0, probes.shape[1]))


def _probe_points(
    d: int, center: np.ndarray | None, cap_radius: float | None, count: int, seed: RngSeed
) -> np.ndarray:
    """The certificate's probe set: uniform on the cap, or the whole sphere."""
    rng = seed.derive("cover_probe").generator()
    if center is not None:
        return _sample_cap(center, cap_radius, count, rng)
    pts = rng.standard_normal((count, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def _greedy_packing(d, eps, rng, sample_region, construction, kind, **net_fields):
    """Greedy maximal packing with a coverage augmentation sweep.

    The 10x-size stop rule leaves the greedy phase at jamming density,
    which is a valid packing but can leave slivers farther than eps from
    every kept point.  Any such sliver point is itself a legal packing
    addition, so augmentation rounds insert uncovered probes until a fresh
    probe set comes back clean, and a final round covers the default
    certificate probe set exactly.
    """
    predicted = _predicted_cardinality(d, eps)
    if predicted > 1e7:
        raise NetSizeError(
            f"predicted cardinality {predicted:.3g} exceeds the 1e7 guard (d={d}, radius={eps})"
        )
    cap = int(min(predicted * 3.0 + 1024.0, 2e7))
    kept = np.empty((cap, d))
    n_kept = 0
    rejects = 0
    eps2 = eps * eps
    while True:
        cands = sample_region(rng, 4096)
        if cands.shape[0] == 0:
            continue
        n_kept, rejects, status = kernels.greedy_keep(
            cands, kept, n_kept, eps2, rejects, _STOP_FACTOR
        )
        if status == 1:
            break
        if status == 2:
            raise NetSizeError("net buffer exhausted; radius too small for the guard")

    def absorb(probes: np.ndarray) -> int:
        nonlocal n_kept
        missing = _uncovered(probes, kept[:n_kept], eps)
        if missing.shape[0]:
            # stop factor bounded so stop_factor * n_kept stays in int64
            n_kept, _, status = kernels.greedy_keep(missing, kept, n_kept, eps2, 0, 1 << 31)
            if status == 2:
                raise NetSizeError("net buffer exhausted during coverage augmentation")
        return missing.shape[0]

    for round_idx in range(64):
        if absorb(sample_region(rng, 100_000)) == 0:
            break
    else:
        raise NetSizeError("coverage augmentation did not converge")
    absorb(
        _probe_points(d, net_fields.get("center"), net_fields.get("cap_radius"), 100_000,
                      _DEFAULT_NET_SEED)
    )
    return SphereNet(
        coords=kept[:n_kept].copy(),
        radius=eps,
        kind=kind,
        construction=construction,
        **net_fields,
    )


def _sphere_block(d: int):
    def draw(rng, size: int):
        g = rng.standard_normal((size, d))
        norms = np.linalg.norm(g, axis=1)
        ok = norms > 1e-12
        return g[ok] / norms[ok, None]

    return draw


def build_packing(d: int, epsilon: float, seed: RngSeed = _DEFAULT_NET_SEED) -> SphereNet:
    """Greedy maximal eps-packing of S^(d-1) (hence also an eps-cover).

    Stops after 10x the current size of consecutive rejections.  Raises
    :class:`NetSizeError` when the predicted cardinality exceeds 1e7, and an
    AssertionError if the result misses the (1/eps)^(d-1) cardinality floor
    on the guaranteed grid d <= 4, eps >= 0.3.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not (0.0 < epsilon <= 2.0):
        raise ValueError("epsilon must lie in (0, 2]")
    net = _greedy_packing(
        d,
        epsilon,
        seed.derive("packing", d, float(epsilon)).generator(),
        _sphere_block(d),
        construction="greedy_maximal_random",
        kind="packing",
    )
    if d <= 4 and epsilon >= 0.3:
        floor = (1.0 / epsilon) ** (d - 1)
        if len(net) < floor:
            raise AssertionError(
                f"greedy packing of size {len(net)} below the floor {floor:.3g}"
            )
    return net


def _sample_cap(center: np.ndarray, cap_radius: float, size: int, rng) -> np.ndarray:
    """Uniform points on the spherical cap {p : ||p - center|| <= cap_radius}."""
    d = center.shape[0]
    smin = 1.0 - 0.5 * cap_radius * cap_radius  # cos of the polar angle
    if d == 2:
        tmax = math.acos(max(-1.0, min(1.0, smin)))
        t = rng.uniform(-tmax, tmax, size)
        perp = np.array([-center[1], center[0]])
        return np.cos(t)[:, None] * center[None, :] + np.sin(t)[:, None] * perp[None, :]
    # height rejection: density of s = cos(angle) is prop. to (1-s^2)^((d-3)/2)
    expo = 0.5 * (d - 3)
    peak = (1.0 - smin * smin) ** expo if smin > 0.0 else 1.0
    peak = max(peak, 1e-300)
    out = np.empty((size, d))
    filled = 0
    while filled < size:
        block = max(1024, 2 * (size - filled))
        s = rng.uniform(smin, 1.0, block)
        accept = rng.random(block) <= ((1.0 - s * s) ** expo) / peak
        s = s[accept][: size - filled]
        if s.size == 0:
            continue
        g = rng.standard_normal((s.size, d))
        g -= (g @ center)[:, None] * center[None, :]
        norms = np.linalg.norm(g, axis=1)
        norms[norms < 1e-12] = 1.0
        w = g / norms[:, None]
        out[filled : filled + s.size] = s[:, None] * center[None, :] + np.sqrt(
            np.maximum(0.0, 1.0 - s * s)
        )[:, None] * w
        filled += s.size
    return out


def build_cap_cover(
    center: UnitParameter,
    cap_radius: float,
    cover_radius: float,
    seed: RngSeed = _DEFAULT_NET_SEED,
) -> SphereNet:
    """Greedy maximal packing of a spherical cap, returned as a cap cover.

    Draws uniform points of the cap {theta : ||theta - center|| <= cap_radius}
    and keeps those at distance >= cover_radius from all kept points; the
    maximal packing covers the cap at cover_radius.
    """
    if not (0.0 < cover_radius <= cap_radius <= 2.0):
        raise ValueError("need 0 < cover_radius <= cap_radius <= 2")
    c = center.coords

    def draw(rng, size: int):
        return _sample_cap(c, cap_radius, size, rng)

    return _greedy_packing(
        center.dim,
        cover_radius,
        seed.derive("cap", float(cap_radius), float(cover_radius)).generator(),
        draw,
        construction="greedy_maximal_random_cap",
        kind="cover",
        center=c.copy(),
        cap_radius=float(cap_radius),
    )


# ---------------------------------------------------------------------------
# halfspace labelings


def winder_bound(n: int, d: int) -> float:
    """Cap on the number of sign patterns of homogeneous halfspaces."""
    return 2.0 * (n * math.e / (d - 1)) ** (d - 1)


def _pattern(points: np.ndarray, theta: np.ndarray) -> tuple | None:
    s = points @ theta
    if np.any(s == 0.0):
        return None
    return tuple(np.where(s > 0.0, 1, -1).tolist())


def count_halfspace_labelings(points: np.ndarray, seed: RngSeed = _DEFAULT_NET_SEED) -> int:
    """Exact number of sign patterns (sign(x_i.T theta))_i over unit theta.

    d = 2: the pattern changes only at the 2n critical angles where some
    x_i.T theta(phi) = 0; evaluating one theta per arc enumerates all
    patterns.  d = 3: every cell of the great-circle arrangement touches a
    vertex +-(x_i cross x_j); perturbing each vertex into its four adjacent
    cells enumerates the patterns (verification sampling is unioned in).
    Scale guards: n <= 20 in d = 2, n <= 14 in d = 3.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] not in (2, 3):
        raise ValueError("points must be (n, d) with d in {2, 3}")
    n, d = points.shape
    if n < 1:
        raise ValueError("need at least one point")
    if (d == 2 and n > 20) or (d == 3 and n > 14):
        raise ValueError("instance too large for exact enumeration")
    norms = np.linalg.norm(points, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("degenerate input: zero point")

    patterns: set[tuple] = set()
    if d == 2:
        base = np.arctan2(points[:, 1], points[:, 0])
        kinks = np.sort(np.concatenate([(base + 0.5 * math.pi) % (2 * math.pi),
                                         (base - 0.5 * math.pi) % (2 * math.pi)]))
        mids = (kinks + np.diff(np.concatenate([kinks, [kinks[0] + 2 * math.pi]])) / 2.0) % (
            2 * math.pi
        )
        for phi in mids:
            pat = _pattern(points, np.array([math.cos(phi), math.sin(phi)]))
            if pat is not None:
                patterns.add(pat)
    else:
        unit = points / norms[:, None]
        for i in range(n):
            for j in range(i + 1, n):
                w = np.cross(unit[i], unit[j])
                nw = np.linalg.norm(w)
                if nw <= 1e-12:
                    continue
                w = w / nw
                for v in (w, -w):
                    for s1 in (-1.0, 1.0):
                        for s2 in (-1.0, 1.0):
                            delta = 1e-7
                            for _ in range(30):
                                cand = v + delta * (s1 * unit[i] + s2 * unit[j])
                                cand /= np.linalg.norm(cand)
                                pat = _pattern(points, cand)
                                if pat is not None:
                                    patterns.add(pat)
                                    break
                                delta *= 0.5
        rng = seed.derive("labelings_sample").generator()
        samples = rng.standard_normal((2048, 3))
        samples /= np.linalg.norm(samples, axis=1, keepdims=True)
        for theta in samples:
            pat = _pattern(points, theta)
            if pat is not None:
                patterns.add(pat)

    count = len(patterns)
    if count > winder_bound(n, d):
        raise RuntimeError("labeling count exceeded the Winder bound; enumeration bug")
    return count


# ---------------------------------------------------------------------------
# serialization

_HEADER_RE = re.compile(r"^# d=(\d+) radius=([^ ]+) kind=(packing|cover)$")


def save_net(net: SphereNet, path: str | Path) -> None:
    """Plain text: header '# d=<d> radius=<r> kind=<kind>', one point per line."""
    lines = [f"# d={net.dim} radius={net.radius!r} kind={net.kind}"]
    for row in net.coords:
        lines.append(" ".join(repr(float(c)) for c in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_net(path: str | Path) -> SphereNet:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise ValueError("empty net file")
    m = _HEADER_RE.match(text[0])
    if m is None:
        raise ValueError(f"bad net header: {text[0]!r}")
    d = int(m.group(1))
    radius = float(m.group(2))
    kind = m.group(3)
    rows = [[float(tok) for tok in line.split()] for line in text[1:] if line.strip()]
    coords = np.asarray(rows, dtype=np.float64).reshape(len(rows), d)
    return SphereNet(coords=coords, radius=radius, kind=kind, construction="loaded")
