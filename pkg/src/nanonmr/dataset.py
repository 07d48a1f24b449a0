"""Bit-string generation, labeled datasets and their text file format.

File format (UTF-8)::

    {"version": 1, "n_intervals": N, "dt_s": dt, "scenario": "...", "class_names": ["a", "b"]}
    0,0110...      # <label>,<exactly N bit characters>
    1,1001...
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .rng import substream
from .signal_model import (
    ResolutionSpec,
    SignalSpec,
    detector_success_prob,
    noisy_success_probs,
    ou_success_probs,
    sample_noise_realization,
    sample_ou_quadratures,
)

FORMAT_VERSION = 1

Spec = Union[SignalSpec, ResolutionSpec]


class DatasetFormatError(ValueError):
    """Malformed dataset or raw-counts file."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DiscardedBitsWarning(UserWarning):
    pass


@dataclass
class MeasurementRecord:
    bits: np.ndarray
    label: int
    meta: Optional[dict] = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")

    def __eq__(self, other):
        if not isinstance(other, MeasurementRecord):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.bits, other.bits)


@dataclass
class Dataset:
    """A labeled set of equal-length bit strings, stored as a dense (n, N) uint8 matrix."""

    bits: np.ndarray
    labels: np.ndarray
    n_intervals: int
    dt: float
    scenario: str = ""
    class_names: tuple = ("class0", "class1")
    meta: list = field(default_factory=list)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1, self.n_intervals)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.class_names = tuple(self.class_names)
        if self.bits.shape[0] != self.labels.shape[0]:
            raise ValueError("bits and labels disagree on record count")
        if len(self.class_names) != 2:
            raise ValueError("class_names must hold two names")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if self.meta and len(self.meta) != len(self.labels):
            raise ValueError("meta must be empty or one entry per record")

    @classmethod
    def from_records(cls, records: Sequence[MeasurementRecord], n_intervals: int, dt: float, **kw) -> "Dataset":
        if any(r.bits.shape != (n_intervals,) for r in records):
            raise ValueError(f"every record must have exactly {n_intervals} bits")
        bits = np.stack([r.bits for r in records]) if records else np.zeros((0, n_intervals), np.uint8)
        meta = [r.meta for r in records] if any(r.meta for r in records) else []
        return cls(bits, [r.label for r in records], n_intervals, dt, meta=meta, **kw)

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n_intervals == other.n_intervals
            and self.dt == other.dt
            and self.scenario == other.scenario
            and self.class_names == other.class_names
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.bits, other.bits)
        )

    @property
    def records(self) -> list[MeasurementRecord]:
        meta = self.meta or [None] * len(self)
        return [MeasurementRecord(b, int(l), m) for b, l, m in zip(self.bits, self.labels, meta)]

    @property
    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        meta = [self.meta[i] for i in idx] if self.meta else []
        return Dataset(self.bits[idx], self.labels[idx], self.n_intervals, self.dt, self.scenario, self.class_names, meta)

    def header(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "n_intervals": int(self.n_intervals),
            "dt_s": float(self.dt),
            "scenario": self.scenario,
            "class_names": list(self.class_names),
        }


def record_probabilities(spec: Spec, rng: np.random.Generator) -> np.ndarray:
    """Draw the nuisance process for one experiment and return per-interval click probabilities."""
    if isinstance(spec, ResolutionSpec):
        p = ou_success_probs(spec, sample_ou_quadratures(spec, rng))
    else:
        p = noisy_success_probs(spec, sample_noise_realization(spec, rng))
    return detector_success_prob(p, spec.detector)


def generate_record(spec: Spec, label: int, rng: np.random.Generator, meta: Optional[dict] = None) -> MeasurementRecord:
    q = record_probabilities(spec, rng)
    bits = (rng.random(q.shape[0]) < q).astype(np.uint8)
    return MeasurementRecord(bits, label, meta)


def _generate_rows(spec0: Spec, spec1: Spec, master_seed: int, start: int, stop: int) -> np.ndarray:
    specs = (spec0, spec1)
    out = np.empty((stop - start, spec0.n_intervals), dtype=np.uint8)
    for row, i in enumerate(range(start, stop)):
        out[row] = generate_record(specs[i % 2], i % 2, substream(master_seed, i)).bits
    return out


def generate_dataset(
    spec0: Spec,
    spec1: Spec,
    n_per_class: int,
    master_seed: int,
    scenario: str = "",
    class_names: Iterable[str] = ("class0", "class1"),
    workers: int = 1,
) -> Dataset:
    """``n_per_class`` records of each label, interleaved 0,1,0,1,...

    Record ``i`` draws from substream ``(master_seed, i)``, so the result does not
    depend on ``workers``.
    """
    if spec0.dt != spec1.dt or spec0.n_intervals != spec1.n_intervals:
        raise ValueError("class specs must share dt and n_intervals")
    n = 2 * int(n_per_class)
    n_int = spec0.n_intervals
    if workers <= 1 or n < 2 * workers:
        bits = _generate_rows(spec0, spec1, master_seed, 0, n)
    else:
        edges = np.linspace(0, n, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _generate_rows,
                [spec0] * workers,
                [spec1] * workers,
                [master_seed] * workers,
                edges[:-1],
                edges[1:],
            )
            bits = np.concatenate(list(parts)) if n else np.zeros((0, n_int), np.uint8)
    labels = np.arange(n) % 2
    meta = [{"seed": int(master_seed), "index": i, "scenario": scenario} for i in range(n)]
    return Dataset(bits, labels, n_int, spec0.dt, scenario, tuple(class_names), meta)


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified disjoint split; each side keeps the input's record order."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in (0, 1):
        idx = np.flatnonzero(ds.labels == c)
        perm = rng.permutation(idx)
        k = int(round(train_fraction * len(idx)))
        if k == 0 or k == len(idx):
            raise ValueError(f"split leaves class {c} empty on one side ({len(idx)} records, fraction {train_fraction})")
        train_idx.append(perm[:k])
        test_idx.append(perm[k:])
    return ds.subset(np.sort(np.concatenate(train_idx))), ds.subset(np.sort(np.concatenate(test_idx)))


def concat(datasets: Sequence[Dataset]) -> Dataset:
    first = datasets[0]
    for d in datasets[1:]:
        if d.n_intervals != first.n_intervals or d.dt != first.dt:
            raise ValueError("datasets disagree on timing grid")
    return Dataset(
        np.concatenate([d.bits for d in datasets]),
        np.concatenate([d.labels for d in datasets]),
        first.n_intervals,
        first.dt,
        first.scenario,
        first.class_names,
    )


_BIT_TABLE = np.full(256, 255, dtype=np.uint8)
_BIT_TABLE[ord("0")] = 0
_BIT_TABLE[ord("1")] = 1


def write_dataset(ds: Dataset, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(ds.header(), separators=(",", ":")) + "\n")
        chars = (ds.bits + ord("0")).astype(np.uint8)
        for label, row in zip(ds.labels, chars):
            fh.write(f"{int(label)},{row.tobytes().decode('ascii')}\n")


def _parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(1, f"header is not valid JSON ({exc.msg})") from None
    if not isinstance(header, dict):
        raise DatasetFormatError(1, "header must be a JSON object")
    for key, kind in (("version", int), ("n_intervals", int), ("dt_s", (int, float)), ("scenario", str), ("class_names", list)):
        if key not in header:
            raise DatasetFormatError(1, f"header missing field '{key}'")
        if not isinstance(header[key], kind) or isinstance(header[key], bool):
            raise DatasetFormatError(1, f"header field '{key}' has the wrong type")
    if header["version"] != FORMAT_VERSION:
        raise DatasetFormatError(1, f"unsupported version {header['version']}")
    if header["n_intervals"] < 1:
        raise DatasetFormatError(1, "n_intervals must be >= 1")
    if len(header["class_names"]) != 2 or not all(isinstance(c, str) for c in header["class_names"]):
        raise DatasetFormatError(1, "class_names must be two strings")
    return header


def read_dataset(path: Union[str, os.PathLike]) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise DatasetFormatError(1, "missing header")
        header = _parse_header(first)
        n = header["n_intervals"]
        labels, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            lab, sep, payload = line.partition(",")
            if not sep or lab not in ("0", "1"):
                raise DatasetFormatError(lineno, "expected '<label>,<bits>' with label 0 or 1")
            if len(payload) != n:
                raise DatasetFormatError(lineno, f"expected {n} bit characters, found {len(payload)}")
            raw = np.frombuffer(payload.encode("utf-8", errors="replace"), dtype=np.uint8)
            if raw.shape[0] != n:
                raise DatasetFormatError(lineno, "non-ASCII character in bit string")
            vals = _BIT_TABLE[raw]
            bad = np.flatnonzero(vals == 255)
            if bad.size:
                raise DatasetFormatError(lineno, f"invalid bit character {payload[bad[0]]!r} at column {bad[0] + 1}")
            labels.append(int(lab))
            rows.append(vals)
    bits = np.stack(rows) if rows else np.zeros((0, n), np.uint8)
    return Dataset(bits, labels, n, float(header["dt_s"]), header["scenario"], tuple(header["class_names"]))


def _read_raw_stream(path, threshold_policy) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if threshold_policy == "binary":
        chunks = []
        for lineno, line in enumerate(lines, start=1):
            raw = np.frombuffer("".join(line.split()).encode("utf-8"), dtype=np.uint8)
            vals = _BIT_TABLE[raw]
            if (vals == 255).any():
                raise DatasetFormatError(lineno, "raw stream may only contain '0' and '1'")
            chunks.append(vals)
        return np.concatenate(chunks) if chunks else np.zeros(0, np.uint8)
    threshold = float(threshold_policy)
    out = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(float(line))
        except ValueError:
            raise DatasetFormatError(lineno, f"not a count: {line!r}") from None
    return (np.asarray(out) >= threshold).astype(np.uint8)


def _load_sidecar(path) -> dict:
    sidecar = f"{os.fspath(path)}.json"
    if not os.path.exists(sidecar):
        return {}
    with open(sidecar, "r", encoding="utf-8") as fh:
        return json.load(fh)


def ingest_raw_counts(
    path: Union[str, os.PathLike],
    n_intervals: Optional[int] = None,
    label: Optional[int] = None,
    labels: Optional[Sequence[int]] = None,
    dt: Optional[float] = None,
    threshold_policy: Union[str, float] = "binary",
    scenario: str = "raw",
    class_names: Iterable[str] = ("class0", "class1"),
) -> Dataset:
    """Chunk a raw per-interval readout stream into fixed-length labeled records.

    Labels and timing may come from a sidecar JSON file at ``<path>.json`` with any of
    ``n_intervals``, ``dt_s``, ``label`` (one label for the whole stream), ``labels``
    (one per chunk), ``class_names``, ``scenario``. Explicit arguments win over the
    sidecar. ``threshold_policy`` is ``"binary"`` (file holds '0'/'1' characters) or a
    number: newline-separated counts at or above it map to 1.
    """
    side = _load_sidecar(path)
    n_intervals = int(n_intervals if n_intervals is not None else side.get("n_intervals", 0))
    if n_intervals < 1:
        raise ValueError("n_intervals must be given (argument or sidecar)")
    dt = float(dt if dt is not None else side.get("dt_s", 1.0))
    if label is None and labels is None:
        label = side.get("label")
        labels = side.get("labels")
    class_names = tuple(side.get("class_names", class_names))
    scenario = side.get("scenario", scenario)

    stream = _read_raw_stream(path, threshold_policy)
    if stream.size == 0:
        raise DatasetFormatError(1, "empty raw stream")
    n_chunks = stream.size // n_intervals
    discard = stream.size - n_chunks * n_intervals
    if discard:
        warnings.warn(
            f"discarding {discard} trailing bits that do not fill a {n_intervals}-interval record",
            DiscardedBitsWarning,
            stacklevel=2,
        )
    bits = stream[: n_chunks * n_intervals].reshape(n_chunks, n_intervals)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape[0] != n_chunks:
            raise ValueError(f"{labels.shape[0]} labels for {n_chunks} records")
    elif label is not None:
        labels = np.full(n_chunks, int(label))
    else:
        raise ValueError("no labels: pass label/labels or provide a sidecar")
    return Dataset(bits, labels, n_intervals, dt, scenario, class_names)


def write_raw_stream(ds: Dataset, path: Union[str, os.PathLike]) -> None:
    """Concatenate all record bits into a newline-free raw stream file."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write((ds.bits.reshape(-1) + ord("0")).astype(np.uint8).tobytes().decode("ascii"))
