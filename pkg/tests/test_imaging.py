import numpy as np
import pytest

from ferroscope.imaging import (
    RawImage,
    TilePolicy,
    UnitImage,
    expand_values,
    read_png,
    read_tile_manifest,
    reassemble,
    scale_to_multiple,
    tile,
    untile,
    write_png,
    write_tile_manifest,
)
from ferroscope.utils.errors import FormatError, InvalidArgumentError, TooSmallError


def _image(h, w, c=1, seed=0):
    pixels = np.random.default_rng(seed).integers(0, 256, size=(h, w, c), dtype=np.uint8)
    return RawImage(pixels, "img")


def test_scale_to_multiple_strip_width():
    scaled = scale_to_multiple(_image(256, 1600), 256)
    assert (scaled.height, scaled.width) == (256, 1792)


def test_scale_to_multiple_rounds_each_dimension_up():
    scaled = scale_to_multiple(_image(300, 300), 256)
    assert (scaled.height, scaled.width) == (512, 512)


def test_scale_to_multiple_leaves_exact_multiples_alone():
    img = _image(256, 256)
    assert scale_to_multiple(img, 256) is img


def test_scale_to_multiple_is_idempotent():
    once = scale_to_multiple(_image(40, 70), 32)
    twice = scale_to_multiple(once, 32)
    assert np.array_equal(once.pixels, twice.pixels)


@pytest.mark.parametrize("side", [0, -4, 7])
def test_tile_side_must_be_at_least_eight(side):
    with pytest.raises(InvalidArgumentError):
        scale_to_multiple(_image(16, 16), side)


def test_scaleup_strip_gives_seven_tiles():
    grid, tiles = tile(_image(256, 1600), 256, TilePolicy.SCALE_UP)
    assert (grid.rows, grid.cols) == (1, 7)
    assert len(tiles) == 7 == grid.count
    assert grid.effective_width == 1792


def test_droppartial_exact_grid():
    grid, tiles = tile(_image(1536, 2048), 256, "droppartial")
    assert (grid.rows, grid.cols) == (6, 8)
    assert len(tiles) == 48


def test_droppartial_single_tile_is_top_left():
    img = _image(300, 300)
    grid, tiles = tile(img, 256, TilePolicy.DROP_PARTIAL)
    assert (grid.rows, grid.cols) == (1, 1)
    assert np.array_equal(tiles[0].pixels, img.pixels[:256, :256])


def test_droppartial_too_small_image():
    with pytest.raises(TooSmallError):
        tile(_image(20, 100), 32, TilePolicy.DROP_PARTIAL)


def test_tiles_are_row_major():
    _, tiles = tile(_image(64, 96), 32, TilePolicy.DROP_PARTIAL)
    assert [(t.row, t.col) for t in tiles] == [(r, c) for r in range(2) for c in range(3)]
    assert tiles[4].tile_id == "img_r001_c001"


def test_droppartial_roundtrip_over_random_sizes(rng):
    for trial in range(100):
        h, w = int(rng.integers(16, 120)), int(rng.integers(16, 120))
        img = _image(h, w, c=int(rng.choice([1, 3])), seed=trial)
        grid, tiles = tile(img, 16, TilePolicy.DROP_PARTIAL)
        assert grid.count == (h // 16) * (w // 16)
        rebuilt = untile(grid, tiles)
        assert np.array_equal(rebuilt.pixels, img.pixels[: grid.effective_height, : grid.effective_width])


def test_policy_parse_accepts_variants():
    assert TilePolicy.parse("Scale_Up") is TilePolicy.SCALE_UP
    assert TilePolicy.parse("drop-partial") is TilePolicy.DROP_PARTIAL
    with pytest.raises(InvalidArgumentError):
        TilePolicy.parse("overlap")


def test_reassemble_single_tile_max():
    grid, _ = tile(_image(32, 32), 32)
    out = reassemble(grid, [1.0])
    assert out.pixels.shape == (32, 32, 1)
    assert np.all(out.pixels == 255)


def test_reassemble_checkerboard():
    grid, _ = tile(_image(64, 64), 32)
    out = reassemble(grid, [0.0, 1.0, 1.0, 0.0]).pixels[:, :, 0]
    assert np.all(out[:32, :32] == 0) and np.all(out[32:, 32:] == 0)
    assert np.all(out[:32, 32:] == 255) and np.all(out[32:, :32] == 255)


def test_reassemble_rounds_half_up():
    grid, _ = tile(_image(32, 200), 32)
    assert (grid.rows, grid.cols) == (1, 7)
    out = reassemble(grid, [0.5] * 7)
    assert np.all(out.pixels == 128)


def test_reassemble_length_mismatch():
    grid, _ = tile(_image(64, 64), 32)
    with pytest.raises(InvalidArgumentError):
        reassemble(grid, [0.1, 0.2, 0.3])


def test_reassemble_matches_cropped_dimensions():
    img = _image(70, 100)
    grid, tiles = tile(img, 32, TilePolicy.DROP_PARTIAL)
    means = [float(t.pixels.mean()) for t in tiles]
    out = reassemble(grid, means, (0.0, 255.0))
    assert (out.height, out.width) == (64, 96)


def test_expand_values_blocks():
    grid, _ = tile(_image(32, 64), 16)
    field = expand_values(grid, np.arange(8))
    assert field.shape == (32, 64)
    assert field[17, 40] == 6


def test_unit_image_as_float_is_channel_first():
    t = UnitImage(np.full((8, 8, 3), 255, dtype=np.uint8), 0, 0, "x")
    x = t.as_float()
    assert x.shape == (3, 8, 8)
    assert x.dtype == np.float32
    assert np.all(x == 1.0)


def test_png_roundtrip_gray_and_rgb(tmp_path):
    for c in (1, 3):
        img = _image(10, 13, c=c, seed=c)
        path = tmp_path / f"img{c}.png"
        write_png(path, img)
        back = read_png(path)
        assert back.source_id == f"img{c}"
        assert np.array_equal(back.pixels, img.pixels)


def test_read_png_missing_file(tmp_path):
    with pytest.raises(FormatError):
        read_png(tmp_path / "absent.png")


def test_tile_manifest_roundtrip(tmp_path):
    records = [("strip_000", 0, c, f"strip_000/strip_000_r000_c{c:03d}.png") for c in range(3)]
    path = tmp_path / "manifest.csv"
    write_tile_manifest(path, records)
    assert read_tile_manifest(path) == records
