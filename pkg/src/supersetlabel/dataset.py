"""Data model, file IO, synthetic data generation, and stratified split planning.

A superset-label dataset holds n feature rows, one candidate label set per
row, and (optionally) the ground-truth label of every row. Labels are 1-based
everywhere they appear in files, reports, and this module's API.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_FOLDS = 5


class DataFormatError(ValueError):
    """Raised when an input file or constructed dataset is inconsistent."""


@dataclass
class Dataset:
    """Ambiguously labeled training data.

    features   (n, d) float array, one example per row
    candidates n sorted tuples of 1-based candidate labels
    truth      optional n-tuple of 1-based ground-truth labels
    c          number of classes (labels live in {1..c})
    """

    features: np.ndarray
    candidates: tuple[tuple[int, ...], ...]
    c: int
    truth: tuple[int, ...] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise DataFormatError("features must be a 2-D array")
        self.candidates = tuple(tuple(sorted(set(s))) for s in self.candidates)
        if self.truth is not None:
            self.truth = tuple(int(y) for y in self.truth)
        validate_dataset(self)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        """New Dataset restricted to the given row indices (same c)."""
        idx = np.asarray(indices, dtype=int)
        truth = tuple(self.truth[i] for i in idx) if self.truth is not None else None
        return Dataset(
            features=self.features[idx].copy(),
            candidates=tuple(self.candidates[i] for i in idx),
            c=self.c,
            truth=truth,
        )


def validate_dataset(ds: Dataset) -> None:
    """Check every Dataset invariant; raise DataFormatError on violation."""
    if ds.c < 1:
        raise DataFormatError("class count c must be positive")
    if len(ds.candidates) != ds.n:
        raise DataFormatError(
            f"{ds.n} feature rows but {len(ds.candidates)} candidate sets"
        )
    if not np.all(np.isfinite(ds.features)):
        bad = int(np.argwhere(~np.isfinite(ds.features).all(axis=1))[0][0])
        raise DataFormatError(f"non-finite feature value in row {bad + 1}")
    for i, s in enumerate(ds.candidates):
        if len(s) == 0:
            raise DataFormatError(f"empty candidate set at row {i + 1}")
        if s[0] < 1 or s[-1] > ds.c:
            raise DataFormatError(
                f"candidate label out of range 1..{ds.c} at row {i + 1}: {s}"
            )
    if ds.truth is not None:
        if len(ds.truth) != ds.n:
            raise DataFormatError(
                f"{ds.n} feature rows but {len(ds.truth)} truth labels"
            )
        for i, (y, s) in enumerate(zip(ds.truth, ds.candidates)):
            if y not in s:
                raise DataFormatError(
                    f"truth label {y} not among candidates {s} at row {i + 1}"
                )


def _parse_float(token: str, path, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataFormatError(
            f"{path}: non-numeric feature token {token!r} on line {line_no}"
        ) from None


def load_dataset(features_path, candidates_path, truth_path=None,
                 c: int | None = None) -> Dataset:
    """Load a Dataset from the plain-text file formats.

    features_path   one example per line, tab-separated floats
    candidates_path one line per example, comma-separated 1-based labels
    truth_path      optional, one 1-based label per line
    c               optional declared class count; the effective count is
                    max(declared, largest index seen), and an index beyond
                    the declared count is an error
    """
    features_path = Path(features_path)
    candidates_path = Path(candidates_path)
    rows = []
    for line_no, line in enumerate(
        features_path.read_text().splitlines(), start=1
    ):
        if not line.strip():
            continue
        rows.append([_parse_float(t, features_path, line_no) for t in line.split("\t")])
    if not rows:
        raise DataFormatError(f"{features_path}: no feature rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataFormatError(
            f"{features_path}: inconsistent row lengths {sorted(widths)}"
        )
    features = np.asarray(rows, dtype=float)

    candidates = []
    for line_no, line in enumerate(
        candidates_path.read_text().splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            labels = tuple(int(t) for t in line.replace(" ", "").split(","))
        except ValueError:
            raise DataFormatError(
                f"{candidates_path}: bad candidate list on line {line_no}: {line!r}"
            ) from None
        if not labels:
            raise DataFormatError(
                f"{candidates_path}: empty candidate set on line {line_no}"
            )
        candidates.append(labels)
    if len(candidates) != len(features):
        raise DataFormatError(
            f"{len(features)} feature rows but {len(candidates)} candidate lines"
        )

    max_seen = max(max(s) for s in candidates)
    if c is not None and max_seen > c:
        raise DataFormatError(
            f"candidate label {max_seen} exceeds declared class count {c}"
        )
    c_eff = max(c or 0, max_seen)

    truth = None
    if truth_path is not None:
        truth = tuple(
            int(line) for line in Path(truth_path).read_text().splitlines()
            if line.strip()
        )
        if max(truth) > c_eff:
            if c is not None:
                raise DataFormatError(
                    f"truth label {max(truth)} exceeds declared class count {c}"
                )
            c_eff = max(truth)

    return Dataset(features=features, candidates=tuple(candidates), c=c_eff,
                   truth=truth)


def save_dataset(ds: Dataset, out_dir) -> dict[str, Path]:
    """Write features/candidates/truth plus a manifest into out_dir.

    Returns the written paths keyed by role. Round-trips through
    load_dataset to a structurally identical Dataset.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "features": out / "features.tsv",
        "candidates": out / "candidates.txt",
        "manifest": out / "manifest.txt",
    }
    with paths["features"].open("w") as f:
        for row in ds.features:
            f.write("\t".join(f"{v:.17g}" for v in row) + "\n")
    with paths["candidates"].open("w") as f:
        for s in ds.candidates:
            f.write(",".join(str(j) for j in s) + "\n")
    manifest = {
        "n": ds.n, "d": ds.d, "c": ds.c,
        "features": paths["features"].name,
        "candidates": paths["candidates"].name,
    }
    if ds.truth is not None:
        paths["truth"] = out / "truth.txt"
        with paths["truth"].open("w") as f:
            f.write("\n".join(str(y) for y in ds.truth) + "\n")
        manifest["truth"] = paths["truth"].name
    with paths["manifest"].open("w") as f:
        for k, v in manifest.items():
            f.write(f"{k}={v}\n")
    return paths


def load_manifest(manifest_path) -> Dataset:
    """Load a Dataset via a key=value manifest (paths relative to it)."""
    manifest_path = Path(manifest_path)
    kv = {}
    for line in manifest_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        k, v = line.split("=", 1)
        kv[k.strip()] = v.strip()
    for key in ("features", "candidates"):
        if key not in kv:
            raise DataFormatError(f"{manifest_path}: missing {key}= entry")
    base = manifest_path.parent
    ds = load_dataset(
        base / kv["features"],
        base / kv["candidates"],
        truth_path=base / kv["truth"] if "truth" in kv else None,
        c=int(kv["c"]) if "c" in kv else None,
    )
    for key, actual in (("n", ds.n), ("d", ds.d)):
        if key in kv and int(kv[key]) != actual:
            raise DataFormatError(
                f"{manifest_path}: declared {key}={kv[key]} but data has {actual}"
            )
    return ds


def normalize_unit_length(ds: Dataset) -> Dataset:
    """Scale every feature row to Euclidean norm 1."""
    norms = np.linalg.norm(ds.features, axis=1)
    zero = np.where(norms == 0.0)[0]
    if zero.size:
        raise DataFormatError(f"zero-norm feature row {int(zero[0]) + 1}")
    return Dataset(
        features=ds.features / norms[:, None],
        candidates=ds.candidates,
        c=ds.c,
        truth=ds.truth,
    )


def make_synthetic(n: int, c: int, d: int, sep: float, p_coocc: float,
                   r_extra: int, seed: int) -> Dataset:
    """Gaussian class blobs with uniformly corrupted candidate sets.

    Class means are pairwise at least sep apart (spread of each blob is the
    unit Gaussian). Every example carries its true label; with probability
    p_coocc it also receives r_extra distinct false labels drawn uniformly
    from the remaining classes.
    """
    if c < 2:
        raise ValueError("need at least 2 classes")
    if not 0 <= r_extra <= c - 1:
        raise ValueError(f"r_extra must be in 0..{c - 1}, got {r_extra}")
    if not 0.0 <= p_coocc <= 1.0:
        raise ValueError(f"p_coocc must be a probability, got {p_coocc}")
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")

    rng = np.random.default_rng(seed)
    means = rng.standard_normal((c, d))
    diffs = means[:, None, :] - means[None, :, :]
    dist = np.linalg.norm(diffs, axis=2)
    min_dist = dist[~np.eye(c, dtype=bool)].min()
    if min_dist > 0:
        means *= sep / min_dist
    else:
        # degenerate draw: fall back to collinear means sep apart
        means = np.zeros((c, d))
        means[:, 0] = sep * np.arange(c)

    truth = rng.permutation(np.arange(n) % c) + 1
    features = means[truth - 1] + rng.standard_normal((n, d))

    corrupt = rng.random(n) < p_coocc
    candidates = []
    for i in range(n):
        s = {int(truth[i])}
        if corrupt[i] and r_extra > 0:
            others = [j for j in range(1, c + 1) if j != truth[i]]
            s.update(int(j) for j in rng.choice(others, size=r_extra,
                                                replace=False))
        candidates.append(tuple(sorted(s)))
    return Dataset(features=features, candidates=tuple(candidates), c=c,
                   truth=tuple(int(y) for y in truth))


@dataclass
class SplitPlan:
    """Assignment of every example to one of five cross-validation folds."""

    folds: np.ndarray  # n integers in {1..N_FOLDS}
    seed: int
    n_folds: int = field(default=N_FOLDS)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.where(self.folds == fold)[0]

    def train_indices(self, fold: int) -> np.ndarray:
        return np.where(self.folds != fold)[0]


def plan_splits(ds: Dataset, seed: int) -> SplitPlan:
    """Stratified five-fold assignment, deterministic given the seed.

    Each class's examples are shuffled and dealt round-robin, starting from
    a rotating fold offset so remainders spread evenly. Per-fold class
    counts land within one example of n_class / 5.
    """
    if ds.truth is None:
        raise DataFormatError("plan_splits requires ground-truth labels")
    rng = np.random.default_rng(seed)
    folds = np.zeros(ds.n, dtype=int)
    truth = np.asarray(ds.truth)
    offset = 0
    for cls in sorted(set(ds.truth)):
        idx = np.where(truth == cls)[0]
        if idx.size < N_FOLDS:
            warnings.warn(
                f"class {cls} has only {idx.size} examples; "
                f"some folds will miss it", stacklevel=2,
            )
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            folds[i] = (offset + pos) % N_FOLDS + 1
        offset = (offset + idx.size) % N_FOLDS
    return SplitPlan(folds=folds, seed=seed)
