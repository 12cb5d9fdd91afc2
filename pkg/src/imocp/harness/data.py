"""Score streams: synthetic generators and the UJIIndoorLoc CSV format."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from ..priors import Prior, prior_from_spec

N_WAPS = 520
WAP_COLUMNS = tuple(f"WAP{i:03d}" for i in range(1, N_WAPS + 1))
TARGET_COLUMNS = ("LONGITUDE", "LATITUDE", "BUILDINGID")
NOT_DETECTED = 100.0
DEFAULT_FLOOR_DBM = -105.0


class DataFormatError(ValueError):
    pass


# --- synthetic score streams -------------------------------------------------

def sample_prior(prior: Prior, size: int, rng: np.random.Generator) -> np.ndarray:
    b = prior.bound
    kind = prior.to_dict()["kind"]
    if kind == "uniform":
        return rng.uniform(0.0, b, size)
    if kind == "triangular":
        if b == 0:
            return np.zeros(size)
        return rng.triangular(0.0, prior.mode, b, size)
    # inverse-CDF sampling keeps the truncation exact
    u = rng.uniform(0.0, 1.0, size)
    out = np.fromiter((prior.quantile(float(q)) for q in u), float, size)
    return np.clip(out, 0.0, b)


def _segment(spec: Mapping[str, Any], size: int, bound: float, rng) -> np.ndarray:
    kind = str(spec.get("kind", "")).lower()
    if kind == "point_mass":
        value = float(spec["value"])
        if not 0.0 <= value <= bound:
            raise ValueError(f"point mass {value} outside [0, {bound}]")
        return np.full(size, value)
    if kind == "uniform" and ("low" in spec or "high" in spec):
        low, high = float(spec.get("low", 0.0)), float(spec.get("high", bound))
        if not 0.0 <= low <= high <= bound:
            raise ValueError(f"uniform range [{low}, {high}] not inside [0, {bound}]")
        return rng.uniform(low, high, size)
    return sample_prior(prior_from_spec(spec, bound=bound), size, rng)


def generate_synthetic(spec: Mapping[str, Any], horizon: int, seed: int,
                       bound: float = 1.0) -> np.ndarray:
    """I.i.d. or piecewise-stationary score stream on ``[0, bound]``.

    ``spec`` is a prior mapping (``{"kind": "triangular", "mode": 0.1}``),
    ``{"kind": "point_mass", "value": v}``, ``{"kind": "uniform", "low":
    a, "high": b}``, or ``{"kind": "changepoint", "segments": [...]}``
    where every segment is one of the former plus a ``fraction`` of the
    horizon. The last segment absorbs rounding.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    kind = str(spec.get("kind", "")).lower()
    if kind != "changepoint":
        return _segment(spec, horizon, bound, rng)
    segments = spec.get("segments") or []
    if not segments:
        raise ValueError("changepoint spec needs segments")
    fractions = [float(s.get("fraction", 1.0 / len(segments))) for s in segments]
    if any(f <= 0 for f in fractions) or not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError("segment fractions must be positive and sum to 1")
    sizes = [int(round(f * horizon)) for f in fractions[:-1]]
    sizes.append(horizon - sum(sizes))
    if sizes[-1] < 0:
        raise ValueError("segment fractions exceed the horizon")
    parts = []
    for seg, n in zip(segments, sizes):
        seg = {k: v for k, v in seg.items() if k != "fraction"}
        parts.append(_segment(seg, n, bound, rng))
    return np.concatenate(parts)


# --- UJIIndoorLoc -------------------------------------------------------------

@dataclass(frozen=True)
class LocalizationSample:
    rssi: np.ndarray
    longitude: float
    latitude: float
    building_id: int

    def __post_init__(self):
        if np.shape(self.rssi) != (N_WAPS,):
            raise ValueError(f"rssi must have length {N_WAPS}, got {np.shape(self.rssi)}")


@dataclass
class LocalizationData:
    """Column-stacked UJIIndoorLoc samples; indexing yields samples."""

    rssi: np.ndarray
    longitude: np.ndarray
    latitude: np.ndarray
    building: np.ndarray

    def __len__(self):
        return self.longitude.shape[0]

    def __getitem__(self, idx) -> LocalizationSample:
        return LocalizationSample(self.rssi[idx], float(self.longitude[idx]),
                                  float(self.latitude[idx]), int(self.building[idx]))

    def __iter__(self) -> Iterator[LocalizationSample]:
        return (self[i] for i in range(len(self)))

    def subset(self, idx) -> "LocalizationData":
        idx = np.asarray(idx, dtype=int)
        return LocalizationData(self.rssi[idx], self.longitude[idx],
                                self.latitude[idx], self.building[idx])

    @property
    def targets(self) -> np.ndarray:
        return np.column_stack([self.longitude, self.latitude])


def _empty_data() -> LocalizationData:
    return LocalizationData(np.zeros((0, N_WAPS)), np.zeros(0), np.zeros(0),
                            np.zeros(0, dtype=int))


def read_header(path) -> list[str]:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip().strip('"') for h in header]
    missing = [c for c in WAP_COLUMNS + TARGET_COLUMNS if c not in header]
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise DataFormatError(f"{path}: missing columns {shown}")
    return header


def load_ujiindoorloc(path, floor_dbm: float = DEFAULT_FLOOR_DBM) -> LocalizationData:
    """Parse a UJIIndoorLoc CSV.

    The "not detected" reading 100 is replaced by ``floor_dbm``. Extra
    columns (FLOOR, SPACEID, ...) are ignored. Rows with the wrong number
    of fields or non-numeric values raise :class:`DataFormatError` naming
    the 1-based data row.
    """
    header = read_header(path)
    pos = {name: i for i, name in enumerate(header)}
    wap_idx = np.array([pos[c] for c in WAP_COLUMNS])
    lon_i, lat_i, b_i = (pos[c] for c in TARGET_COLUMNS)
    rssi_rows, lon, lat, bld = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}")
            try:
                values = np.array(row, dtype=float)
            except ValueError as exc:
                raise DataFormatError(f"{path}: row {row_no}: {exc}") from None
            rssi_rows.append(values[wap_idx])
            lon.append(values[lon_i])
            lat.append(values[lat_i])
            bld.append(int(values[b_i]))
    if not rssi_rows:
        return _empty_data()
    rssi = np.vstack(rssi_rows)
    rssi[rssi == NOT_DETECTED] = floor_dbm
    return LocalizationData(rssi, np.array(lon), np.array(lat), np.array(bld, dtype=int))


def write_ujiindoorloc(data: LocalizationData, path, floor_dbm: float = DEFAULT_FLOOR_DBM) -> None:
    """Write samples in UJIIndoorLoc layout (floor readings become 100 again)."""
    rssi = np.where(data.rssi <= floor_dbm, NOT_DETECTED, data.rssi)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(WAP_COLUMNS + TARGET_COLUMNS)
        for i in range(len(data)):
            w.writerow([f"{v:g}" for v in rssi[i]]
                       + [repr(float(data.longitude[i])), repr(float(data.latitude[i])),
                          int(data.building[i])])


# Building footprints loosely follow the UJI campus extent (metres, EPSG:3857).
_BUILDINGS = (
    {"lon": (-7691.0, -7580.0), "lat": (4864900.0, 4865017.0)},
    {"lon": (-7580.0, -7450.0), "lat": (4864830.0, 4864950.0)},
    {"lon": (-7450.0, -7300.0), "lat": (4864745.0, 4864880.0)},
)


def make_surrogate(sizes: Sequence[int] = (1600, 2600, 8600), seed: int = 2025,
                   shadowing_db: float = 6.0) -> LocalizationData:
    """Synthetic stand-in for UJIIndoorLoc with the same schema.

    Each building owns a third of the 520 access points placed uniformly
    on its footprint. RSSI follows a log-distance path-loss model with
    Gaussian shadowing; readings below -100 dBm are "not detected".
    """
    rng = np.random.default_rng(seed)
    n_b = len(_BUILDINGS)
    owner = np.arange(N_WAPS) % n_b
    ap_xy = np.empty((N_WAPS, 2))
    for b, fp in enumerate(_BUILDINGS):
        k = int(np.sum(owner == b))
        ap_xy[owner == b, 0] = rng.uniform(*fp["lon"], k)
        ap_xy[owner == b, 1] = rng.uniform(*fp["lat"], k)
    tx_dbm = rng.uniform(-40.0, -30.0, N_WAPS)
    parts = []
    for b, n in enumerate(sizes):
        fp = _BUILDINGS[b]
        xy = np.column_stack([rng.uniform(*fp["lon"], n), rng.uniform(*fp["lat"], n)])
        dist = np.sqrt(((xy[:, None, :] - ap_xy[None, :, :]) ** 2).sum(-1)) + 1.0
        walls = np.where(owner[None, :] == b, 0.0, 25.0)
        rssi = tx_dbm[None, :] - 30.0 * np.log10(dist) - walls
        rssi = rssi + rng.normal(0.0, shadowing_db, rssi.shape)
        rssi = np.round(rssi)
        rssi[rssi < -100.0] = DEFAULT_FLOOR_DBM
        parts.append(LocalizationData(rssi, xy[:, 0], xy[:, 1], np.full(n, b, dtype=int)))
    return LocalizationData(
        np.vstack([p.rssi for p in parts]),
        np.concatenate([p.longitude for p in parts]),
        np.concatenate([p.latitude for p in parts]),
        np.concatenate([p.building for p in parts]),
    )


def split_by_building(data: LocalizationData, n_train: Sequence[int], calib_fraction: float,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, dict]:
    """Random per-building split into train, calibration and test pools.

    Returns ``(train_idx, calib_idx, test_pools)`` where ``test_pools``
    maps building id to an index array.
    """
    buildings = np.unique(data.building)
    if len(n_train) < len(buildings):
        raise ValueError(f"need a training size for each of {len(buildings)} buildings")
    train, calib, pools = [], [], {}
    for b in buildings:
        idx = rng.permutation(np.flatnonzero(data.building == b))
        n = int(n_train[int(b)])
        if n >= idx.size:
            raise ValueError(f"building {b}: {idx.size} samples, cannot hold out after {n} for training")
        rest = idx[n:]
        n_cal = int(round(calib_fraction * rest.size))
        train.append(idx[:n])
        calib.append(rest[:n_cal])
        pools[int(b)] = rest[n_cal:]
    return np.concatenate(train), np.concatenate(calib), pools


def sample_stream(pools: Mapping[int, np.ndarray], horizon: int,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Building chosen uniformly each round; samples drawn without replacement
    within a building, reshuffling and cycling once a pool is exhausted.

    Returns ``(sample_index, building)`` arrays of length ``horizon``.
    """
    keys = sorted(pools)
    order = {b: rng.permutation(pools[b]) for b in keys}
    cursor = {b: 0 for b in keys}
    groups = rng.choice(np.array(keys), size=horizon)
    picks = np.empty(horizon, dtype=int)
    for t, b in enumerate(groups):
        b = int(b)
        if order[b].size == 0:
            raise ValueError(f"building {b} has an empty test pool")
        if cursor[b] == order[b].size:
            order[b] = rng.permutation(pools[b])
            cursor[b] = 0
        picks[t] = order[b][cursor[b]]
        cursor[b] += 1
    return picks, groups.astype(int)
