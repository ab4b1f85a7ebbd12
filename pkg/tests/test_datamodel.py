import math

import numpy as np
import pytest

from lscmf import io
from lscmf.datamodel import EdgeKey, ObservedMatrix, ViewLayout, center, standardize, validate_layout
from lscmf.denoise import estimate_noise_scale, singular_values
from lscmf.errors import (
    DegenerateInputError,
    DisconnectedLayoutError,
    DuplicateMatrixError,
    InputError,
    LayoutError,
    MissingMatrixError,
    ShapeMismatchError,
    UnknownViewError,
)
from lscmf.simulate import builtin_scenario, generate


def zeros_for(layout):
    return [ObservedMatrix(e, np.zeros(layout.shape(e))) for e in layout.edges]


def l_layout():
    return ViewLayout({"1": 8, "2": 6, "3": 5, "4": 4}, (EdgeKey("1", "2"), EdgeKey("1", "3"), EdgeKey("2", "4")))


def test_edge_key_str_and_layers():
    assert str(EdgeKey("1", "2")) == "1_2"
    assert str(EdgeKey("1", "2", 3)) == "1_2_3"
    assert EdgeKey("1", "2").other("1") == "2"
    with pytest.raises(KeyError):
        EdgeKey("1", "2").other("3")


@pytest.mark.parametrize("args", [("1", "1"), ("1", "2", -1)])
def test_edge_key_rejects(args):
    with pytest.raises(LayoutError):
        EdgeKey(*args)


def test_l_shaped_layout_validates():
    layout = l_layout()
    validate_layout(layout, zeros_for(layout))
    assert layout.edges_of("2") == (EdgeKey("1", "2"), EdgeKey("2", "4"))


def test_disconnected_layout():
    layout = ViewLayout({"1": 3, "2": 3, "3": 3, "4": 3}, (EdgeKey("1", "2"), EdgeKey("3", "4")))
    assert not layout.is_connected()
    with pytest.raises(DisconnectedLayoutError, match="disconnected view graph"):
        validate_layout(layout, zeros_for(layout))


def test_shape_mismatch():
    layout = l_layout()
    mats = zeros_for(layout)
    mats[0] = ObservedMatrix(EdgeKey("1", "2"), np.zeros((6, 8)))
    with pytest.raises(ShapeMismatchError):
        validate_layout(layout, mats)


def test_missing_and_duplicate_matrices():
    layout = l_layout()
    mats = zeros_for(layout)
    with pytest.raises(MissingMatrixError):
        validate_layout(layout, mats[:-1])
    with pytest.raises(DuplicateMatrixError):
        validate_layout(layout, mats + mats[:1])
    with pytest.raises(UnknownViewError):
        validate_layout(layout, mats + [ObservedMatrix(EdgeKey("3", "4"), np.zeros((5, 4)))])


def test_layout_rejects_unknown_view_and_reverse_duplicate():
    with pytest.raises(UnknownViewError):
        ViewLayout({"1": 3}, (EdgeKey("1", "2"),))
    with pytest.raises(DuplicateMatrixError):
        ViewLayout({"1": 3, "2": 3}, (EdgeKey("1", "2"), EdgeKey("2", "1")))
    with pytest.raises(LayoutError):
        ViewLayout({"1": 0, "2": 3}, (EdgeKey("1", "2"),))


def test_layered_edges_are_distinct_matrices():
    # a tensor slice layout: two layers between the same pair of views
    layout = ViewLayout({"1": 4, "2": 3}, (EdgeKey("1", "2", 0), EdgeKey("1", "2", 1)))
    validate_layout(layout, zeros_for(layout))
    assert len(layout.edges_of("1")) == 2


def test_standardize_pure_noise_self_consistent():
    rng = np.random.default_rng(7)
    y = 3.0 * rng.standard_normal((500, 2000))
    std = standardize(ObservedMatrix(EdgeKey("a", "b"), y))
    sigma = estimate_noise_scale(singular_values(std.data), 500, 2000)
    assert sigma * math.sqrt(2000) == pytest.approx(1.0, rel=0.02)
    assert std.scale_applied / math.sqrt(2000) == pytest.approx(3.0, rel=0.02)
    np.testing.assert_allclose(std.singular_values, singular_values(std.data), rtol=1e-10, atol=1e-12)


def test_standardize_scale_invariant():
    rng = np.random.default_rng(8)
    y = rng.standard_normal((60, 40))
    a = standardize(ObservedMatrix(EdgeKey("a", "b"), y))
    b = standardize(ObservedMatrix(EdgeKey("a", "b"), 17.5 * y))
    np.testing.assert_allclose(a.data, b.data, rtol=1e-12, atol=1e-14)


def test_standardize_errors():
    key = EdgeKey("a", "b")
    with pytest.raises(DegenerateInputError):
        standardize(ObservedMatrix(key, np.zeros((4, 3))))
    with pytest.raises(InputError):
        standardize(ObservedMatrix(key, np.array([[1.0, np.nan], [0.0, 1.0]])))
    once = standardize(ObservedMatrix(key, np.eye(3) + 0.1))
    with pytest.raises(InputError):
        standardize(once)


def test_standardized_signal_separates_from_bulk():
    spec = builtin_scenario(1, dim_scale=10, seed=3)
    mat = generate(spec).matrices[0]
    std = standardize(mat)
    beta = 250 / 1000
    edge = 1 + math.sqrt(beta)
    values = std.singular_values
    assert np.all(values[:3] > edge)
    assert values[3] == pytest.approx(edge, rel=0.03)


def test_center():
    m = ObservedMatrix(EdgeKey("a", "b"), np.arange(12.0).reshape(3, 4))
    np.testing.assert_allclose(center(m, "columns").data.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(center(m, "rows").data.mean(axis=1), 0, atol=1e-12)
    with pytest.raises(ValueError):
        center(m, "both")


@pytest.mark.parametrize("fmt", io.FORMATS)
def test_matrix_io_round_trip(tmp_path, fmt):
    rng = np.random.default_rng(1)
    mat = rng.standard_normal((5, 3)) * 10.0 ** rng.integers(-30, 30, (5, 3))
    path = tmp_path / f"m.{fmt}"
    io.write_matrix(path, mat)
    out = io.read_matrix(path)
    assert out.shape == (5, 3)
    np.testing.assert_array_equal(out, mat)


def test_single_row_csv_stays_2d(tmp_path):
    io.write_matrix(tmp_path / "r.csv", np.array([[1.0, 2.0, 3.0]]))
    assert io.read_matrix(tmp_path / "r.csv").shape == (1, 3)


def test_bin_rejects_bad_magic_and_size(tmp_path):
    path = tmp_path / "m.bin"
    io.write_matrix(path, np.ones((2, 2)))
    raw = path.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXXXX\x00" + raw[7:])
    with pytest.raises(InputError, match="magic"):
        io.read_matrix(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(InputError):
        io.read_matrix(tmp_path / "short.bin")
    with pytest.raises(InputError):
        io.read_matrix(path, "npy")
