import json

import pytest
from fastapi.testclient import TestClient

from shapes import box_triangles, stl_binary_bytes
from tasteprint.calibration import default_calibration, predict_diameter, predict_mass
from tasteprint.cli import main
from tasteprint.service import create_app

CAL = default_calibration()


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "project")
    with TestClient(app) as c:
        yield c


def upload_box(client, name="box.stl", layer_height=1.6):
    data = stl_binary_bytes(box_triangles(size=(30, 30, 8), origin=(10, 10, 0)))
    response = client.post(
        f"/api/mesh?name={name}&layer_height={layer_height}", content=data
    )
    assert response.status_code == 200, response.text
    return response.json()


def test_mesh_upload_and_slices(client):
    info = upload_box(client)
    assert info["triangle_count"] == 12
    assert info["layer_count"] == 5
    assert info["version"] == 1
    slices = client.get("/api/slices").json()
    assert len(slices["layers"]) == 5
    assert slices["layers"][0]["area"] == pytest.approx(900.0)


def test_slices_bytes_identical_to_cli(client, tmp_path):
    upload_box(client, name="box.stl")
    http_bytes = client.get("/api/slices").content
    mesh_path = tmp_path / "box.stl"
    mesh_path.write_bytes(stl_binary_bytes(box_triangles(size=(30, 30, 8), origin=(10, 10, 0))))
    out = tmp_path / "slices.json"
    assert main(["slice", "--mesh", str(mesh_path), "--layer-height", "1.6",
                 "--out", str(out)]) == 0
    assert out.read_bytes() == http_bytes


def test_event_placement_and_annotation(client):
    info = upload_box(client)
    response = client.post(
        "/api/design/layers/0/events",
        json={"channel": 1, "x_mm": 25.0, "y_mm": 25.0, "duration_ms": 20,
              "standoff_mm": 20.0, "version": info["version"]},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["version"] == 2
    assert body["annotation"]["diameter_mm"] == pytest.approx(7.065, abs=5e-4)
    assert body["annotation"]["mass_mg"] == pytest.approx(1.434, abs=5e-4)

    design = client.get("/api/design").json()
    assert design["version"] == 2
    events = design["layers"][0]
    assert len(events) == 1
    assert events[0]["x_mm"] == 25.0
    assert design["annotations"][0][0]["diameter_mm"] == pytest.approx(7.065, abs=5e-4)


def test_event_outside_contour_422(client):
    info = upload_box(client)
    response = client.post(
        "/api/design/layers/0/events",
        json={"channel": 1, "x_mm": 5.0, "y_mm": 5.0, "duration_ms": 20,
              "version": info["version"]},
    )
    assert response.status_code == 422
    assert "outside" in response.json()["detail"]["message"]
    # nothing committed
    assert client.get("/api/design").json()["layers"][0] == []


def test_stale_version_conflict(client):
    info = upload_box(client)
    good = {"channel": 0, "x_mm": 25.0, "y_mm": 25.0, "duration_ms": 20,
            "version": info["version"]}
    assert client.post("/api/design/layers/0/events", json=good).status_code == 200
    # second client reuses the old version
    response = client.post("/api/design/layers/1/events", json=good)
    assert response.status_code == 409
    assert response.json()["detail"]["current_version"] == 2


def test_put_design_round_trip_and_mesh_guard(client):
    info = upload_box(client)
    design = client.get("/api/design").json()
    design.pop("annotations")
    design.pop("design_hash")
    response = client.put("/api/design", json=design)
    assert response.status_code == 200
    assert response.json()["version"] == info["version"] + 1

    stale_mesh = dict(design)
    stale_mesh["mesh_ref"] = "0" * 64
    stale_mesh["version"] = response.json()["version"]
    response = client.put("/api/design", json=stale_mesh)
    assert response.status_code == 422
    assert "different mesh" in response.json()["detail"]["message"]


def test_pattern_and_allocate_endpoints(client):
    info = upload_box(client)
    response = client.post(
        "/api/design/pattern",
        json={"layer": 0, "channel": 2, "duration_ms": 20, "overlap": 0.0,
              "version": info["version"]},
    )
    assert response.status_code == 200
    assert response.json()["events_added"] > 0
    version = response.json()["version"]

    response = client.post(
        "/api/design/allocate",
        json={"channel": 4, "total_mass_mg": 5.0, "version": version},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["total_achieved_mg"] == pytest.approx(5.0, abs=0.5)
    assert len(body["rows"]) == 5


def test_allocate_dry_run_previews_without_commit(client):
    info = upload_box(client)
    response = client.post(
        "/api/design/allocate",
        json={"channel": 2, "total_mass_mg": 5.0, "dry_run": True,
              "version": info["version"]},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["dry_run"] is True
    assert body["version"] == info["version"]  # unchanged
    assert len(body["rows"]) == 5
    # nothing was committed
    design = client.get("/api/design").json()
    assert all(layer == [] for layer in design["layers"])


def test_predict_endpoint(client):
    response = client.post("/api/predict",
                           json={"standoff_mm": 20.0, "duration_ms": 20})
    assert response.status_code == 200
    body = response.json()
    assert body["diameter_mm"] == pytest.approx(predict_diameter(CAL, 20, 20))
    assert body["mass_mg"] == pytest.approx(predict_mass(CAL, 20))
    assert body["warnings"] == []
    # out of calibrated range -> warning, not error
    response = client.post("/api/predict",
                           json={"standoff_mm": 50.0, "duration_ms": 20})
    assert response.json()["warnings"] != []


def test_calibration_endpoint(client):
    body = client.get("/api/calibration").json()
    assert body["beta0"] == -3.525
    assert body["alpha1"] == 0.082
    assert body["duration_range"] == [10, 80]
    assert "identifier" in body


def test_gcode_and_simulation_flow(client):
    info = upload_box(client)
    client.post(
        "/api/design/layers/0/events",
        json={"channel": 1, "x_mm": 25.0, "y_mm": 25.0, "duration_ms": 20,
              "version": info["version"]},
    )
    assert client.get("/api/gcode/file").status_code == 404
    response = client.post("/api/gcode")
    assert response.status_code == 200
    assert response.json()["spray_count"] == 1

    file_a = client.get("/api/gcode/file")
    assert file_a.status_code == 200
    assert file_a.text.startswith("; generated by tasteprint")
    assert file_a.content == client.get("/api/gcode/file").content  # deterministic

    response = client.post("/api/simulate", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["comparison"]["all_clear"] is True
    assert body["synchronization_violations"] == []
    assert body["layers"][0]["channels"]["1"] == pytest.approx(
        predict_mass(CAL, 20), rel=1e-9
    )

    detail = client.get("/api/simulation/layers/0")
    assert detail.status_code == 200
    channel = detail.json()["channels"]["1"]
    assert channel["integrated_mass_mg"] == pytest.approx(predict_mass(CAL, 20), rel=1e-9)
    assert channel["centroid_mm"][0] == pytest.approx(25.0, abs=0.2)
    assert channel["preview"]["grid"]


def test_simulate_requires_gcode(client):
    upload_box(client)
    response = client.post("/api/simulate", json={})
    assert response.status_code == 422


def test_state_endpoint_and_restore(tmp_path):
    project_dir = tmp_path / "proj"
    app = create_app(project_dir)
    with TestClient(app) as client:
        info = upload_box(client)
        client.post(
            "/api/design/layers/2/events",
            json={"channel": 3, "x_mm": 20.0, "y_mm": 20.0, "duration_ms": 30,
                  "version": info["version"]},
        )
        state = client.get("/api/state").json()
        assert state["layer_count"] == 5
        assert state["version"] == 2

    # a fresh service over the same directory restores the documents
    app2 = create_app(project_dir)
    with TestClient(app2) as client2:
        state = client2.get("/api/state").json()
        assert state["version"] == 2
        design = client2.get("/api/design").json()
        assert len(design["layers"][2]) == 1
        assert design["layers"][2][0]["duration_ms"] == 30


def test_mesh_upload_rejects_garbage(client):
    response = client.post("/api/mesh?name=bad.stl", content=b"not a mesh")
    assert response.status_code == 422
