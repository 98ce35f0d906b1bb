"""Teaching-data generation: Sobol draws -> admissible parameter sets -> MC labels.

Each Sobol point x in [0, 1]^8 maps to (alpha, rho, lambda, a, b, sigma0^2, K, T)
around a calibration anchor.  The lower bounds of b and alpha depend on the
other coordinates so that every sample satisfies the MMM positivity
conditions with a safety margin (factors 1.05 and 0.95).
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blackscholes import bs_call
from .model import BnsParams, OptionSpec, check_assumption
from .pricer import price_call_mc
from .simulation import SimConfig, make_rng
from .sobol import DirectionTable, SobolStream

INPUT_NAMES = ("alpha", "rho", "lambda", "a", "b", "sigma0_sq", "strike", "maturity", "bs")
CSV_HEADER = INPUT_NAMES + ("mc", "mc_se", "split")
SPLITS = ("train", "val", "test")
ALPHA_CAP = 1.5


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationAnchor:
    s0: float = 468.40
    rho: float = -4.0739
    lam: float = 2.4958
    a: float = 0.0872
    b: float = 11.98
    sigma0_sq: float = 0.0041


ANCHOR = CalibrationAnchor()


def transform_points(x, anchor: CalibrationAnchor = ANCHOR) -> dict[str, np.ndarray]:
    """Vectorised map of (n, 8) unit-cube points to model and contract variables.

    Column order is (alpha, rho, lambda, a, b, sigma0_sq, K, T).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != 8:
        raise ValueError("points must have 8 coordinates")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("points must lie in [0, 1]^8")
    rho = 0.5 * anchor.rho + anchor.rho * x[:, 1]
    lam = 0.5 * anchor.lam + anchor.lam * x[:, 2]
    a = 0.5 * anchor.a + anchor.a * x[:, 3]
    sig0 = 0.5 * anchor.sigma0_sq + anchor.sigma0_sq * x[:, 5]
    strike = 0.5 * anchor.s0 + anchor.s0 * x[:, 6]
    mat = 0.01 + 0.99 * x[:, 7]

    b_hi = 1.5 * anchor.b
    b_lo = 1.05 * 2.0 * np.sqrt(np.maximum(-np.expm1(-lam * mat) / lam, np.abs(rho)))
    if np.any(b_lo >= b_hi):
        raise AssertionError("lower bound of b reached 3/2 of the anchor value")
    b = b_lo + (b_hi - b_lo) * x[:, 4]

    b2 = b * b
    crho = 2.0 * rho * lam * a * (1.0 / np.sqrt(b2 - 4.0 * rho) - 1.0 / np.sqrt(b2 - 2.0 * rho))
    alpha_hat = -np.exp(-lam * mat) * sig0 - crho
    alpha_lo = np.where(alpha_hat >= -ALPHA_CAP, 0.95 * alpha_hat, -ALPHA_CAP)
    alpha = alpha_lo + (ALPHA_CAP - alpha_lo) * x[:, 0]
    return dict(alpha=alpha, rho=rho, lam=lam, a=a, b=b, sigma0_sq=sig0, strike=strike,
                maturity=mat, b_lower=b_lo, alpha_lower=alpha_lo)


def transform_sample(x, anchor: CalibrationAnchor = ANCHOR) -> tuple[BnsParams, OptionSpec]:
    """Map one point of [0, 1]^8 to an admissible parameter set and option."""
    v = {k: float(val[0]) for k, val in transform_points(x, anchor).items()}
    p = BnsParams(anchor.s0, v["alpha"], v["rho"], v["lam"], v["a"], v["b"], v["sigma0_sq"])
    opt = OptionSpec(v["strike"], v["maturity"])
    rep = check_assumption(p, opt.maturity)
    if not rep.passed:
        raise AssertionError(f"transformed sample is inadmissible: {rep}")
    return p, opt


@dataclass(frozen=True)
class SampleRecord:
    alpha: float
    rho: float
    lam: float
    a: float
    b: float
    sigma0_sq: float
    strike: float
    maturity: float
    bs_feature: float
    mc_price: float
    mc_std_err: float

    def params(self, s0: float = ANCHOR.s0) -> BnsParams:
        return BnsParams(s0, self.alpha, self.rho, self.lam, self.a, self.b, self.sigma0_sq)


class Scaler:
    """Affine map of each input onto [-1, 1] using per-column min and max."""

    def __init__(self, mins, maxs, names=INPUT_NAMES):
        self.mins = np.asarray(mins, dtype=float)
        self.maxs = np.asarray(maxs, dtype=float)
        self.names = tuple(names)
        if np.any(self.maxs <= self.mins):
            raise ValueError("scaler needs max > min in every column")

    @classmethod
    def fit(cls, inputs) -> "Scaler":
        inputs = np.asarray(inputs, dtype=float)
        return cls(inputs.min(axis=0), inputs.max(axis=0))

    def transform(self, inputs) -> np.ndarray:
        return 2.0 / (self.maxs - self.mins) * (np.asarray(inputs, dtype=float) - 0.5 * (self.maxs + self.mins))

    def to_text(self) -> str:
        return "".join(f"{n} {float(lo)!r} {float(hi)!r}\n" for n, lo, hi in zip(self.names, self.mins, self.maxs))

    @classmethod
    def from_text(cls, text: str) -> "Scaler":
        names, mins, maxs = [], [], []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DatasetFormatError(f"scaler line {lineno}: expected 'name min max'")
            try:
                lo, hi = float(parts[1]), float(parts[2])
            except ValueError:
                raise DatasetFormatError(f"scaler line {lineno}: non-numeric bound") from None
            names.append(parts[0])
            mins.append(lo)
            maxs.append(hi)
        if tuple(names) != INPUT_NAMES:
            raise DatasetFormatError(f"scaler columns {names} differ from {list(INPUT_NAMES)}")
        return cls(mins, maxs, names)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "Scaler":
        return cls.from_text(Path(path).read_text())

    def __eq__(self, other) -> bool:
        return (isinstance(other, Scaler) and np.array_equal(self.mins, other.mins)
                and np.array_equal(self.maxs, other.maxs))


@dataclass
class Dataset:
    """Column-oriented teaching set: ``inputs`` is (n, 9) in INPUT_NAMES order."""
    inputs: np.ndarray
    mc: np.ndarray
    mc_se: np.ndarray
    split: np.ndarray

    def __len__(self) -> int:
        return len(self.mc)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Dataset) and np.array_equal(self.inputs, other.inputs)
                and np.array_equal(self.mc, other.mc) and np.array_equal(self.mc_se, other.mc_se)
                and np.array_equal(self.split, other.split))

    def subset(self, name: str) -> "Dataset":
        m = self.split == name
        return Dataset(self.inputs[m], self.mc[m], self.mc_se[m], self.split[m])

    def fit_scaler(self) -> Scaler:
        return Scaler.fit(self.inputs[self.split == "train"])

    @property
    def records(self) -> list[SampleRecord]:
        return [SampleRecord(*map(float, row), float(m), float(s))
                for row, m, s in zip(self.inputs, self.mc, self.mc_se)]


def bs_feature(sigma0_sq, strike, maturity, s0: float = ANCHOR.s0):
    return bs_call(s0, np.sqrt(sigma0_sq), strike, maturity)


def split_sizes(n: int, val_frac: float = 1 / 12, test_frac: float = 1 / 12) -> tuple[int, int, int]:
    n_val = max(1, round(n * val_frac))
    n_test = max(1, round(n * test_frac))
    if n_val + n_test >= n:
        raise ValueError(f"n={n} too small for a train/val/test split")
    return n - n_val - n_test, n_val, n_test


DESK_SPLIT = (5000, 500, 500)
PAPER_SPLIT = (98000, 1000, 1000)


def _label(args):
    idx, rows, cfg, seed, s0 = args
    out = np.empty((len(idx), 2))
    for j, (i, r) in enumerate(zip(idx, rows)):
        p = BnsParams(s0, *r[:6])
        est = price_call_mc(p, OptionSpec(r[6], r[7]), cfg, make_rng(seed, 1, int(i)))
        out[j] = est.price, est.std_err
    return out


def label_records(params: np.ndarray, cfg: SimConfig, seed: int, threads: int = 1,
                  s0: float = ANCHOR.s0, progress=None) -> np.ndarray:
    """MC price and standard error for each (alpha, rho, lambda, a, b, sigma0^2, K, T) row.

    Record i always uses the substream (seed, 1, i), so results do not depend on
    ``threads``.
    """
    n = len(params)
    chunk = 250
    jobs = [(np.arange(i, min(i + chunk, n)), params[i:i + chunk], cfg, seed, s0) for i in range(0, n, chunk)]
    results = []
    if threads <= 1:
        for job in jobs:
            results.append(_label(job))
            if progress:
                progress(sum(len(r) for r in results), n)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for r in pool.map(_label, jobs):
                results.append(r)
                if progress:
                    progress(sum(len(x) for x in results), n)
    return np.concatenate(results) if results else np.empty((0, 2))


def generate_dataset(n: int, cfg: SimConfig = SimConfig(), split: tuple[int, int, int] | None = None,
                     seed: int = 0, threads: int = 1, table: DirectionTable | None = None,
                     anchor: CalibrationAnchor = ANCHOR, progress=None) -> Dataset:
    """Draw ``n`` Sobol points, transform, label by MC and BS, and split at random."""
    split = split_sizes(n) if split is None else tuple(split)
    if len(split) != 3 or sum(split) != n or min(split) < 0:
        raise ValueError(f"split {split} does not partition n={n}")
    pts = SobolStream(8, table).draw(n)
    v = transform_points(pts, anchor)
    params = np.column_stack([v[k] for k in ("alpha", "rho", "lam", "a", "b", "sigma0_sq", "strike", "maturity")])
    for i, row in enumerate(params):
        rep = check_assumption(BnsParams(anchor.s0, *row[:6]), row[7])
        if not rep.passed:
            raise AssertionError(f"record {i} inadmissible: {rep}")
    bs = bs_feature(v["sigma0_sq"], v["strike"], v["maturity"], anchor.s0)
    labels = label_records(params, cfg, seed, threads, anchor.s0, progress)
    labels_split = np.empty(n, dtype=object)
    perm = make_rng(seed, 0).permutation(n)
    labels_split[perm[:split[0]]] = "train"
    labels_split[perm[split[0]:split[0] + split[1]]] = "val"
    labels_split[perm[split[0] + split[1]:]] = "test"
    inputs = np.column_stack([params, bs])
    return Dataset(inputs, labels[:, 0].copy(), labels[:, 1].copy(), labels_split.astype(str))


def _fmt(v: float) -> str:
    return format(v, ".17g")


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for row, m, s, sp in zip(ds.inputs, ds.mc, ds.mc_se, ds.split):
        buf.write(",".join([*(_fmt(x) for x in row), _fmt(m), _fmt(s), sp]) + "\n")
    return buf.getvalue()


def save_dataset(path, ds: Dataset) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dataset_to_csv(ds))


def dataset_from_csv(text: str, s0: float = ANCHOR.s0, check: bool = True) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetFormatError("empty dataset file") from None
    if tuple(header) != CSV_HEADER:
        raise DatasetFormatError(f"header mismatch: expected {','.join(CSV_HEADER)}")
    nums, splits = [], []
    for rowno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise DatasetFormatError(f"row {rowno}: expected {len(CSV_HEADER)} columns, got {len(row)}")
        try:
            vals = [float(f) for f in row[:-1]]
        except ValueError:
            raise DatasetFormatError(f"row {rowno}: non-numeric field") from None
        if row[-1] not in SPLITS:
            raise DatasetFormatError(f"row {rowno}: split {row[-1]!r} not in {SPLITS}")
        if check:
            rep = check_assumption(BnsParams(s0, *vals[:6]), vals[7])
            if not rep.passed:
                raise DatasetFormatError(f"row {rowno}: inadmissible parameters ({rep})")
        nums.append(vals)
        splits.append(row[-1])
    arr = np.array(nums, dtype=float).reshape(-1, len(CSV_HEADER) - 1)
    return Dataset(arr[:, :9].copy(), arr[:, 9].copy(), arr[:, 10].copy(), np.array(splits, dtype=str))


def load_dataset(path, check: bool = True) -> Dataset:
    with open(path, newline="") as fh:
        return dataset_from_csv(fh.read(), check=check)
