import math
import pytest
from hopf_flow.services.curve_families import great_circle, latitude_circle, lissajous, perturbed_great_circle

LATITUDE = math.pi / 3.0


@pytest.fixture
def equator():
    return great_circle(256)


@pytest.fixture
def latitude():
    return latitude_circle(LATITUDE, 256)


@pytest.fixture
def perturbed():
    return perturbed_great_circle(0.05, [2], 7, 256)


@pytest.fixture
def figure_eight():
    return lissajous((1, 2), 0.1, 0.5, 256)


@pytest.fixture
def write_config(tmp_path):
    def write(**values):
        values.setdefault("output_dir", str(tmp_path / "out"))
        path = tmp_path / "run.conf"
        path.write_text("".join(f"{key}={value}\n" for key, value in values.items()))
        return path
    return write
