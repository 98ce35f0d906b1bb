import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bnsprice.blackscholes import bs_call
from bnsprice.dataset import (ANCHOR, CSV_HEADER, INPUT_NAMES, Dataset, DatasetFormatError, Scaler,
                              dataset_from_csv, dataset_to_csv, generate_dataset, load_dataset, save_dataset,
                              split_sizes, transform_points, transform_sample)
from bnsprice.model import check_assumption
from bnsprice.simulation import SimConfig

SMALL = SimConfig(n_paths=200)


@pytest.fixture(scope="module")
def small_ds():
    return generate_dataset(24, SMALL, seed=3)


def test_midpoints_hit_anchor():
    p, opt = transform_sample([0.3, 0.5, 0.5, 0.5, 0.4, 0.5, 0.5, 0.6])
    assert p.rho == pytest.approx(ANCHOR.rho, rel=1e-15)
    assert p.lam == pytest.approx(ANCHOR.lam, rel=1e-15)
    assert p.a == pytest.approx(ANCHOR.a, rel=1e-15)
    assert p.sigma0_sq == pytest.approx(ANCHOR.sigma0_sq, rel=1e-15)
    assert opt.strike == pytest.approx(468.40, rel=1e-15)
    assert p.s0 == 468.40


def test_maturity_endpoints():
    lo = transform_sample([0.5] * 7 + [0.0])[1].maturity
    hi = transform_sample([0.5] * 7 + [1.0])[1].maturity
    assert lo == 0.01 and hi == pytest.approx(1.0, abs=1e-15)


def test_b_lower_bound_example():
    v = transform_points([0.5, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 1.0])
    assert v["b_lower"][0] == pytest.approx(1.05 * 2 * math.sqrt(4.0739), rel=1e-12)
    assert v["b_lower"][0] == pytest.approx(4.2386, abs=1e-4)
    assert v["b"][0] == pytest.approx(17.97, rel=1e-14)


def test_transform_rejects_bad_points():
    with pytest.raises(ValueError):
        transform_points(np.full((1, 7), 0.5))
    with pytest.raises(ValueError):
        transform_points([1.2] + [0.5] * 7)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8))
def test_transform_is_admissible_and_in_range(x):
    p, opt = transform_sample(x)
    rep = check_assumption(p, opt.maturity)
    assert rep.passed and rep.cond1_lhs > rep.cond1_rhs and rep.cond2_lhs > -1
    v = transform_points(x)
    for name, anchor in [("rho", ANCHOR.rho), ("lam", ANCHOR.lam), ("a", ANCHOR.a), ("sigma0_sq", ANCHOR.sigma0_sq)]:
        lo, hi = sorted((0.5 * anchor, 1.5 * anchor))
        assert lo <= v[name][0] <= hi
    assert 0.5 * ANCHOR.s0 <= opt.strike <= 1.5 * ANCHOR.s0
    assert 0.01 <= opt.maturity <= 1.0
    assert v["b_lower"][0] <= p.b <= 1.5 * ANCHOR.b
    assert v["alpha_lower"][0] <= p.alpha <= 1.5


def test_split_sizes():
    assert split_sizes(12000) == (10000, 1000, 1000)
    assert sum(split_sizes(10)) == 10
    with pytest.raises(ValueError):
        split_sizes(2)


def test_smoke(small_ds):
    ds = small_ds
    assert len(ds) == 24 and ds.inputs.shape == (24, 9)
    assert sorted(set(ds.split)) == ["test", "train", "val"]
    assert tuple(np.unique(ds.split, return_counts=True)[1]) == (2, 20, 2)
    for r in ds.records:
        assert check_assumption(r.params(), r.maturity).passed
        assert r.mc_price >= 0 and r.mc_std_err >= 0
    np.testing.assert_allclose(ds.inputs[:, 8], bs_call(468.40, np.sqrt(ds.inputs[:, 5]), ds.inputs[:, 6],
                                                        ds.inputs[:, 7]), rtol=1e-15)
    # zero standard error only when no path finished above the strike, or every path did
    zero = ds.mc_se == 0
    intrinsic = np.maximum(468.40 - ds.inputs[:, 6], 0.0)
    np.testing.assert_allclose(ds.mc[zero], intrinsic[zero], atol=1e-9)
    assert np.count_nonzero(~zero) > len(ds) // 2


def test_scaler_endpoints(small_ds):
    sc = small_ds.fit_scaler()
    tr = small_ds.subset("train").inputs
    z = sc.transform(tr)
    np.testing.assert_allclose(z.min(axis=0), -1.0, atol=1e-12)
    np.testing.assert_allclose(z.max(axis=0), 1.0, atol=1e-12)
    i = INPUT_NAMES.index("rho")
    assert sc.transform(tr[np.argmin(tr[:, i])])[i] == pytest.approx(-1.0, abs=1e-15)
    assert sc == Scaler.from_text(sc.to_text())
    assert len(sc.to_text().splitlines()) == 9


def test_scaler_errors():
    with pytest.raises(ValueError):
        Scaler([0.0] * 9, [0.0] * 9)
    with pytest.raises(DatasetFormatError):
        Scaler.from_text("alpha 0 1\n")
    with pytest.raises(DatasetFormatError):
        Scaler.from_text("".join(f"{n} 0 x\n" for n in INPUT_NAMES))


def test_regeneration_is_byte_identical(small_ds, tmp_path):
    again = generate_dataset(24, SMALL, seed=3)
    save_dataset(tmp_path / "a.csv", small_ds)
    save_dataset(tmp_path / "b.csv", again)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert b"\r" not in (tmp_path / "a.csv").read_bytes()


def test_threads_do_not_change_labels():
    a = generate_dataset(12, SMALL.replace(n_paths=50), seed=4, threads=1)
    b = generate_dataset(12, SMALL.replace(n_paths=50), seed=4, threads=2)
    assert a == b


def test_csv_round_trip(small_ds, tmp_path):
    save_dataset(tmp_path / "d.csv", small_ds)
    back = load_dataset(tmp_path / "d.csv")
    assert back == small_ds
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)


def _mutate(ds, fn):
    lines = dataset_to_csv(ds).splitlines()
    lines[3] = fn(lines[3])
    return "\n".join(lines) + "\n"


def test_csv_errors(small_ds):
    text = _mutate(small_ds, lambda l: ",".join(l.split(",")[:9]))
    with pytest.raises(DatasetFormatError, match="row 4: expected 12 columns"):
        dataset_from_csv(text)
    with pytest.raises(DatasetFormatError, match="row 4"):
        dataset_from_csv(_mutate(small_ds, lambda l: l.rsplit(",", 1)[0] + ",holdout"))
    with pytest.raises(DatasetFormatError, match="non-numeric"):
        dataset_from_csv(_mutate(small_ds, lambda l: "abc," + l.split(",", 1)[1]))
    with pytest.raises(DatasetFormatError, match="header"):
        dataset_from_csv("alpha,rho\n")
    with pytest.raises(DatasetFormatError):
        dataset_from_csv("")


def test_csv_rejects_inadmissible(small_ds):
    text = _mutate(small_ds, lambda l: "-1.4," + l.split(",", 1)[1])
    with pytest.raises(DatasetFormatError, match="inadmissible"):
        dataset_from_csv(text)
    assert len(dataset_from_csv(text, check=False)) == len(small_ds)


def test_bad_split_request():
    with pytest.raises(ValueError):
        generate_dataset(10, SMALL, split=(5, 5, 5))


def test_subset_and_equality(small_ds):
    tr = small_ds.subset("train")
    assert isinstance(tr, Dataset) and set(tr.split) == {"train"}
    assert tr != small_ds
