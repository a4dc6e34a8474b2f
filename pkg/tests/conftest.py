import json

import pytest
from hypothesis import HealthCheck, settings

# the sandbox CPU is noisy; wall-clock deadlines just flake here
settings.register_profile(
    "noisy-box",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("noisy-box")


def square_feature(tract_id, x0, y0, size=1.0, props=None, holes=None):
    ring = [[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size], [x0, y0]]
    properties = {"tract_id": tract_id}
    if props:
        properties.update(props)
    return {
        "type": "Feature",
        "properties": properties,
        "geometry": {"type": "Polygon", "coordinates": [ring] + (holes or [])},
    }


def feature_collection(features) -> bytes:
    return json.dumps({"type": "FeatureCollection", "features": features}).encode()


def events_csv(rows) -> bytes:
    return ("user_id,lat,lon,timestamp,text\n" + "\n".join(rows) + "\n").encode()


@pytest.fixture
def unit_square_tracts() -> bytes:
    return feature_collection([square_feature("T1", 0.0, 0.0)])
