import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from slicealign.server import create_app

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@pytest.fixture()
def client(aligned_phantom):
    app = create_app(config=aligned_phantom["config"])
    with TestClient(app) as c:
        yield c


class TestStateEndpoints:
    def test_cases_ordered(self, client):
        r = client.get("/api/cases")
        assert r.status_code == 200
        assert r.json()["case_ids"] == ["case01", "case02"]

    def test_state_shape(self, client):
        state = client.get("/api/state").json()["state"]
        assert state["case_id"] == "case01"
        assert state["slice_ids"] == ["s01", "s02", "s03"]
        assert state["selected"] == "s01"
        assert state["mode"] == "micro"
        assert not state["dirty"]
        assert set(state["params"]["s01"]) == {"tx", "ty", "tz", "rx", "ry", "rz",
                                               "cx", "cy", "cz"}

    def test_no_dataset_is_conflict(self):
        with TestClient(create_app()) as bare:
            r = bare.get("/api/state")
            assert r.status_code == 409
            assert r.json()["code"] == "no_dataset"


class TestActions:
    def test_translate_updates_state(self, client):
        r = client.post("/api/action",
                        json={"type": "translate", "frame": "patient", "axis": "z",
                              "amount": 2.0})
        assert r.status_code == 200
        state = client.get("/api/state").json()["state"]
        assert state["params"]["s01"]["tz"] == 2.0
        assert state["params"]["s02"]["tz"] == 0.0    # micro mode
        assert state["dirty"]

    def test_action_returns_metric(self, client):
        r = client.post("/api/action",
                        json={"type": "translate", "frame": "patient", "axis": "x",
                              "amount": 1.0})
        metric = r.json()["metric"]
        assert metric["kind"] == "nmi"
        assert 1.0 <= metric["value"] <= 2.0

    def test_undo_at_boundary_conflict(self, client):
        r = client.post("/api/action", json={"type": "undo"})
        assert r.status_code == 409
        assert r.json()["code"] == "at_boundary"

    def test_missing_amount_rejected(self, client):
        r = client.post("/api/action", json={"type": "translate", "frame": "patient",
                                             "axis": "x"})
        assert r.status_code == 400

    def test_unknown_action_rejected(self, client):
        r = client.post("/api/action", json={"type": "explode"})
        assert r.status_code == 400

    def test_undo_redo_round_trip(self, client):
        client.post("/api/action", json={"type": "translate", "frame": "patient",
                                         "axis": "y", "amount": 3.0})
        client.post("/api/action", json={"type": "undo"})
        state = client.get("/api/state").json()["state"]
        assert state["params"]["s01"]["ty"] == 0.0
        client.post("/api/action", json={"type": "redo"})
        state = client.get("/api/state").json()["state"]
        assert state["params"]["s01"]["ty"] == 3.0


class TestCaseNavigation:
    def test_select_unknown_case_404(self, client):
        r = client.post("/api/case/select", json={"case_id": "nope"})
        assert r.status_code == 404

    def test_shift_next_then_prev(self, client):
        r = client.post("/api/case/shift", json={"direction": "next"})
        assert r.json()["state"]["case_id"] == "case02"
        r = client.post("/api/case/shift", json={"direction": "prev"})
        assert r.json()["state"]["case_id"] == "case01"

    def test_shift_past_last_is_conflict(self, client):
        client.post("/api/case/shift", json={"direction": "next"})
        r = client.post("/api/case/shift", json={"direction": "next"})
        assert r.status_code == 409
        assert r.json()["code"] == "at_boundary"

    def test_slice_select(self, client):
        r = client.post("/api/slice/select", json={"slice_id": "s03"})
        assert r.json()["state"]["selected"] == "s03"
        assert client.post("/api/slice/select",
                           json={"slice_id": "zz"}).status_code == 404


class TestSettings:
    def test_mode_switch(self, client):
        r = client.post("/api/mode", json={"mode": "macro"})
        assert r.json()["state"]["mode"] == "macro"
        assert client.post("/api/mode", json={"mode": "mega"}).status_code == 400

    def test_steps(self, client):
        r = client.post("/api/steps", json={"translation_mm": 2.0, "rotation_deg": 0.5})
        assert r.json()["state"]["step_sizes"] == {"translation_mm": 2.0,
                                                   "rotation_deg": 0.5}
        assert client.post("/api/steps", json={"translation_mm": 99.0,
                                               "rotation_deg": 1.0}).status_code == 400

    def test_style_partial_update(self, client):
        r = client.post("/api/style", json={"label_opacity": 0.25, "checker_width": 8})
        styles = r.json()["state"]["styles"]
        assert styles["label_opacity"] == 0.25
        assert styles["checker_width"] == 8
        assert client.post("/api/style", json={"label_opacity": 2.0}).status_code == 400


class TestMetric:
    def test_metric_value(self, client):
        r = client.get("/api/metric")
        body = r.json()
        assert body["kind"] == "nmi"
        assert abs(body["value"] - 2.0) < 1e-9    # identity on extracted slice

    def test_kind_switch(self, client):
        body = client.get("/api/metric", params={"kind": "sad"}).json()
        assert body["kind"] == "sad" and body["value"] == 0.0
        assert client.get("/api/state").json()["state"]["metric_kind"] == "sad"

    def test_bad_kind_rejected(self, client):
        assert client.get("/api/metric", params={"kind": "ssim"}).status_code == 400


class TestPlots:
    def test_main_plot_is_png(self, client):
        r = client.get("/api/plot/main", params={"slice_id": "s01"})
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        assert r.content.startswith(PNG_SIGNATURE)

    def test_main_plot_formats(self, client):
        for fmt in ("mask", "contour", "none"):
            r = client.get("/api/plot/main", params={"slice_id": "s01", "format": fmt})
            assert r.status_code == 200

    def test_main_plot_resultant(self, client):
        r = client.get("/api/plot/main", params={"label": "resultant"})
        assert r.status_code == 200
        assert client.get("/api/plot/main",
                          params={"label": "junk"}).status_code == 400

    def test_support_plots(self, client):
        for kind in ("resampled", "checkerboard"):
            r = client.get("/api/plot/support", params={"type": kind})
            assert r.status_code == 200
            assert r.content.startswith(PNG_SIGNATURE)

    def test_scene_document(self, client):
        doc = client.get("/api/scene").json()
        assert doc["mode"] == "micro"
        assert [s["slice_id"] for s in doc["slices"]] == ["s01"]
        client.post("/api/mode", json={"mode": "macro"})
        doc = client.get("/api/scene").json()
        assert len(doc["slices"]) == 3
        assert doc["slices"][0]["texture"].startswith("/api/plot/main")


class TestSaveAndConfig:
    def test_save_writes_outputs(self, client, aligned_phantom):
        client.post("/api/action", json={"type": "translate", "frame": "patient",
                                         "axis": "z", "amount": 1.0})
        r = client.post("/api/save")
        assert r.status_code == 200
        assert not r.json()["state"]["dirty"]
        root = aligned_phantom["config"].root_path()
        assert (root / "out" / "case01" / "transforms.csv").is_file()

    def test_config_upload_bad_text(self, client):
        r = client.post("/api/config", content=b"definitely not json")
        assert r.status_code == 400
        assert r.json()["code"] == "malformed_config"

    def test_config_upload_good(self, aligned_phantom):
        with TestClient(create_app()) as bare:
            doc = json.loads(aligned_phantom["case"].config_path.read_text())
            doc["dataset_root"] = str(aligned_phantom["config"].root_path())
            r = bare.post("/api/config", content=json.dumps(doc).encode())
            assert r.status_code == 200
            assert r.json()["state"]["case_id"] == "case01"
            assert r.json()["case_ids"] == ["case01", "case02"]

    def test_landing_page_without_assets(self, client):
        r = client.get("/")
        assert r.status_code == 200
        assert "slicealign" in r.text

    def test_missing_asset_404(self, client):
        assert client.get("/missing.js").status_code == 404


class TestResampledPlotMasking:
    def test_non_positive_slice_pixels_render_black(self, tmp_path):
        from slicealign.dataset import load_config
        from slicealign.nifti import read_nifti, write_slice_nifti
        from slicealign.phantom import build_phantom_case
        from slicealign.render import decode_png

        case = build_phantom_case(tmp_path, "c01", seed=44)
        slice_path = tmp_path / "c01" / "slices" / "s01.nii.gz"
        img = read_nifti(slice_path)
        doctored = np.array(img.data)
        doctored[0:3, 0] = -5.0           # excluded by the positive mask
        write_slice_nifti(type(img)(data=doctored, pose=img.pose, id=img.id), slice_path)

        app = create_app(config=load_config(case.config_path))
        with TestClient(app) as c:
            png = c.get("/api/plot/support", params={"type": "resampled"}).content
        decoded = decode_png(png)          # (rows, cols): pixel (i, j) -> [j, i]
        assert decoded[0, 0] == 0 and decoded[0, 1] == 0 and decoded[0, 2] == 0
        assert decoded.max() > 0


class TestReadConsistency:
    def test_plot_reflects_action(self, client):
        before = client.get("/api/plot/support", params={"type": "resampled"}).content
        client.post("/api/action", json={"type": "translate", "frame": "patient",
                                         "axis": "z", "amount": 6.0})
        after = client.get("/api/plot/support", params={"type": "resampled"}).content
        assert before != after
        client.post("/api/action", json={"type": "undo"})
        restored = client.get("/api/plot/support", params={"type": "resampled"}).content
        assert restored == before    # pure function of state snapshot
