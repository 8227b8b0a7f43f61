import struct

import numpy as np
import pytest

from awcd.cloud import NOISE, REAL, PointCloud
from awcd.errors import EmptyInputError, ParseError
from awcd.io import classify_colors, load_cloud, load_labels, save_classified, save_cloud


def test_xyz(tmp_path):
    p = tmp_path / "a.xyz"
    p.write_text("0 0 0\n1 0 0\n")
    cloud = load_cloud(p)
    assert cloud.points.tolist() == [[0, 0, 0], [1, 0, 0]]


def test_xyz_bad_row_names_line(tmp_path):
    p = tmp_path / "a.xyz"
    p.write_text("0 0 0\n1 zero 0\n")
    with pytest.raises(ParseError) as err:
        load_cloud(p)
    assert err.value.line == 2


def test_xyz_empty(tmp_path):
    p = tmp_path / "a.xyz"
    p.write_text("\n")
    with pytest.raises(EmptyInputError):
        load_cloud(p)


PLY_ASCII = """ply
format ascii 1.0
comment made by hand
element vertex 3
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255 0 0
1 0 0 0 255 0
0 1 0.5 0 0 255
3 0 1 2
"""


def test_ply_ascii_ignores_colors(tmp_path):
    p = tmp_path / "a.ply"
    p.write_text(PLY_ASCII)
    cloud = load_cloud(p)
    assert cloud.points.tolist() == [[0, 0, 0], [1, 0, 0], [0, 1, 0.5]]
    assert cloud.labels is None


def binary_ply(points, declared=None, endian="little"):
    n = len(points) if declared is None else declared
    head = (
        f"ply\nformat binary_{endian}_endian 1.0\nelement vertex {n}\n"
        "property float x\nproperty float y\nproperty float z\nproperty uchar red\nend_header\n"
    ).encode()
    fmt = "<fffB" if endian == "little" else ">fffB"
    return head, head + b"".join(struct.pack(fmt, *p, 7) for p in points)


def test_ply_binary(tmp_path):
    pts = [(0.5, 1.5, 2.5), (-1.0, 0.0, 3.25)]
    p = tmp_path / "b.ply"
    p.write_bytes(binary_ply(pts)[1])
    assert load_cloud(p).points.tolist() == [list(x) for x in pts]
    assert load_cloud(p, format="ply-binary-le").points.shape == (2, 3)
    with pytest.raises(ParseError):
        load_cloud(p, format="ply-ascii")


def test_ply_binary_truncated_names_offset(tmp_path):
    pts = [(0.5, 1.5, 2.5), (1.0, 1.0, 1.0)]
    head, data = binary_ply(pts, declared=3)
    p = tmp_path / "t.ply"
    p.write_bytes(data)
    with pytest.raises(ParseError) as err:
        load_cloud(p)
    assert err.value.offset == len(head) + 2 * 13
    assert str(err.value.offset) in str(err.value)


def test_ply_big_endian_rejected(tmp_path):
    p = tmp_path / "be.ply"
    p.write_bytes(binary_ply([(1.0, 2.0, 3.0)], endian="big")[1])
    with pytest.raises(ParseError, match="big_endian"):
        load_cloud(p)


def test_ply_bad_header(tmp_path):
    p = tmp_path / "h.ply"
    p.write_text("ply\nformat ascii 1.0\nelement vertex x\nend_header\n")
    with pytest.raises(ParseError) as err:
        load_cloud(p)
    assert err.value.line == 3


@pytest.mark.parametrize("name", ["c.xyz", "c.ply"])
def test_round_trip(tmp_path, name):
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.normal(size=(50, 3)) * 1e3)
    save_cloud(cloud, tmp_path / name)
    assert np.array_equal(load_cloud(tmp_path / name).points, cloud.points)


def test_ply_round_trip_keeps_labels(tmp_path):
    cloud = PointCloud(np.eye(3), labels=[REAL, NOISE, REAL])
    save_cloud(cloud, tmp_path / "l.ply")
    assert load_cloud(tmp_path / "l.ply").labels.tolist() == [0, 1, 0]


def test_color_table():
    truth = np.array([REAL, NOISE, REAL, NOISE])
    idx, colors = classify_colors(4, [0, 1], truth)
    assert idx.tolist() == [0, 1, 2]
    assert colors.tolist() == [[0, 0, 255], [255, 0, 0], [255, 255, 0]]


def test_color_all_kept_real():
    idx, colors = classify_colors(3, [0, 1, 2], np.zeros(3))
    assert idx.tolist() == [0, 1, 2]
    assert (colors == [0, 0, 255]).all()


def test_color_nothing_kept():
    assert classify_colors(3, [], None)[0].size == 0
    idx, colors = classify_colors(3, [], np.array([REAL, NOISE, REAL]))
    assert idx.tolist() == [0, 2]
    assert (colors == [255, 255, 0]).all()


def test_color_without_truth_is_white():
    idx, colors = classify_colors(4, [3, 1], None)
    assert idx.tolist() == [1, 3]
    assert (colors == 255).all()


def test_save_classified_file(tmp_path):
    cloud = PointCloud(np.arange(12, dtype=float).reshape(4, 3), labels=[REAL, NOISE, REAL, NOISE])
    save_classified(cloud, [0, 1], tmp_path / "c.ply")
    text = (tmp_path / "c.ply").read_text().splitlines()
    assert "element vertex 3" in text
    rows = text[text.index("end_header") + 1 :]
    assert [r.split()[3:] for r in rows] == [["0", "0", "255"], ["255", "0", "0"], ["255", "255", "0"]]
    assert load_cloud(tmp_path / "c.ply").points.tolist() == cloud.points[[0, 1, 2]].tolist()


def test_load_labels(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("real\nnoise\n0\n1\n")
    assert load_labels(p).tolist() == [0, 1, 0, 1]
    p.write_text("maybe\n")
    with pytest.raises(ParseError):
        load_labels(p)
