import numpy as np
import pytest
from fastapi.testclient import TestClient

from mvinpaint.api import create_app
from mvinpaint.errors import BackendError, MvinpaintError, ObjParseError, SessionNotFound
from mvinpaint.grid import MASK_ID, S_ID, RenderConfig
from mvinpaint.images import load_binary_png, load_png
from mvinpaint.masks import Primitive
from mvinpaint.mesh import mesh_to_obj
from mvinpaint.raster import SceneObject
from mvinpaint.raycast import raycast_visibility
from mvinpaint.service import (BackendRequest, EditService, HttpBackend, MockBackend,
                               make_backend)

CFG = RenderConfig(view_resolution=48)
ELLIPSOID = Primitive("ellipsoid", (0.15, 0.15, 0.0), (0.2, 0.22, 0.2))


@pytest.fixture
def mesh_bytes(demo_mesh):
    return mesh_to_obj(demo_mesh)


@pytest.fixture
def service():
    return EditService(render_cfg=CFG)


class TestSessions:
    def test_create_returns_distinct_ids(self, service, mesh_bytes):
        a = service.create_session(mesh_bytes)
        b = service.create_session(mesh_bytes)
        assert a != b
        assert service.session_count() == 2

    def test_garbage_rejected_with_line(self, service):
        before = service.session_count()
        with pytest.raises(ObjParseError) as exc:
            service.create_session(b"v 1 2 x\nf 1 2 3\n")
        assert exc.value.line == 1
        assert service.session_count() == before

    def test_mesh_normalized_on_ingest(self, service):
        raw = b"v 0 0 0\nv 8 0 0\nv 0 8 0\nv 0 0 8\nf 1 2 3\nf 1 2 4\nf 1 3 4\nf 2 3 4\n"
        sid = service.create_session(raw)
        lo, hi = service.get(sid).mesh.bbox()
        assert abs(float((hi - lo).max()) - 1.0) < 1e-6

    def test_unknown_session(self, service):
        with pytest.raises(SessionNotFound):
            service.get("nope")


class TestSetMask:
    def test_mask_matches_raycast_oracle(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        _, mask_grid = service.set_mask(sid, [ELLIPSOID])
        session = service.get(sid)
        mask_mesh = session.mask.to_mesh(CFG.primitive_segments)
        from mvinpaint.grid import split_grid
        for view, pose in split_grid(mask_grid):
            ids = raycast_visibility(
                [SceneObject(session.mesh, S_ID), SceneObject(mask_mesh, MASK_ID)],
                pose, CFG.view_resolution)
            assert (view == (ids == MASK_ID)).mean() >= 0.99

    def test_empty_list_keeps_previous_mask(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        before = service.get(sid).mask
        with pytest.raises(ValueError):
            service.set_mask(sid, [])
        assert service.get(sid).mask is before

    def test_same_mask_twice_is_byte_identical(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        m1, g1 = service.set_mask(sid, [ELLIPSOID])
        m2, g2 = service.set_mask(sid, [ELLIPSOID])
        assert m1.png_bytes() == m2.png_bytes()
        assert g1.png_bytes() == g2.png_bytes()

    def test_preview_uses_purple_fill(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        masked, mask_grid = service.set_mask(sid, [ELLIPSOID])
        assert mask_grid.image.any()
        px = masked.image[mask_grid.image][0]
        np.testing.assert_allclose(px, [0.62, 0.16, 0.9], atol=1e-6)

    def test_conditioning_uses_white_fill(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        s = service.get(sid)
        assert (s.cond_masked.image[s.cond_mask.image] == 1.0).all()

    def test_clear_mask_gives_zero_preview(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        masked, mask_grid = service.clear_mask(sid)
        assert not mask_grid.image.any()
        s = service.get(sid)
        assert s.mask is None
        np.testing.assert_array_equal(masked.image, s.cond_gt.image)


class TestMockBackend:
    def _request(self, service, mesh_bytes, prompt="hat", seed=1):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        s = service.get(sid)
        return sid, BackendRequest.from_grids(s.cond_masked, s.cond_mask, prompt, seed)

    def test_zero_mask_is_identity(self, service, mesh_bytes, demo_mesh):
        from mvinpaint.grid import render_tuple
        gt, masked, mask = render_tuple(demo_mesh, None, CFG.rig(), CFG)
        req = BackendRequest.from_grids(masked, mask, "x", 0)
        out = MockBackend().inpaint(req)
        np.testing.assert_array_equal(out, load_png(req.masked_png))

    def test_unmasked_pixels_copied_exactly(self, service, mesh_bytes):
        _, req = self._request(service, mesh_bytes)
        out = MockBackend().inpaint(req)
        inp = load_png(req.masked_png)
        mask = load_binary_png(req.mask_png)
        np.testing.assert_array_equal(out[~mask], inp[~mask])
        assert (out[mask] != inp[mask]).any()

    def test_deterministic_in_seed(self, service, mesh_bytes):
        _, req = self._request(service, mesh_bytes, seed=9)
        out1 = MockBackend().inpaint(req)
        out2 = MockBackend().inpaint(req)
        np.testing.assert_array_equal(out1, out2)

    def test_prompt_changes_only_masked_pixels(self, service, mesh_bytes):
        sid, req1 = self._request(service, mesh_bytes, prompt="a red hat")
        s = service.get(sid)
        req2 = BackendRequest.from_grids(s.cond_masked, s.cond_mask, "a blue boat", 1)
        out1 = MockBackend().inpaint(req1)
        out2 = MockBackend().inpaint(req2)
        mask = load_binary_png(req1.mask_png)
        np.testing.assert_array_equal(out1[~mask], out2[~mask])
        assert (out1[mask] != out2[mask]).any()

    def test_full_mask(self):
        from mvinpaint.camera import CameraRig
        from mvinpaint.grid import MultiviewGrid
        rig = CameraRig.canonical()
        img = np.random.default_rng(0).random((64, 64, 3)).astype(np.float32)
        full = np.ones((64, 64), dtype=bool)
        req = BackendRequest.from_grids(
            MultiviewGrid(img, "color", rig.poses),
            MultiviewGrid(full, "binary", rig.poses), "p", 3)
        out1 = MockBackend().inpaint(req)
        out2 = MockBackend().inpaint(req)
        np.testing.assert_array_equal(out1, out2)
        inp = load_png(req.masked_png)
        assert (out1 != inp).mean() > 0.5


class TestInpaint:
    def test_round_trip_preservation_zero(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        result = service.inpaint(sid, "a tiny hat", seed=4)
        assert result.preservation == 0.0
        assert len(result.views) == 4
        assert result.grid.shape == (96, 96, 3)

    def test_same_seed_same_bytes(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        r1 = service.inpaint(sid, "hat", seed=5)
        r2 = service.inpaint(sid, "hat", seed=5)
        np.testing.assert_array_equal(r1.grid, r2.grid)
        assert r2.result_id == r1.result_id + 1

    def test_requires_mask(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        with pytest.raises(MvinpaintError):
            service.inpaint(sid, "hat", seed=1)

    def test_concurrent_inpaint_rejected(self, mesh_bytes):
        import threading

        from mvinpaint.errors import SessionBusy

        gate = threading.Event()
        started = threading.Event()

        class BlockingBackend(MockBackend):
            def inpaint(self, request):
                started.set()
                gate.wait(timeout=10)
                return super().inpaint(request)

        service = EditService(backend=BlockingBackend(), render_cfg=CFG)
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        worker = threading.Thread(target=service.inpaint, args=(sid, "slow", 1))
        worker.start()
        try:
            assert started.wait(timeout=10)
            with pytest.raises(SessionBusy):
                service.inpaint(sid, "second", 2)
        finally:
            gate.set()
            worker.join(timeout=10)
        assert service.get(sid).result is not None

    def test_backend_down_leaves_state(self, mesh_bytes):
        dead = HttpBackend("http://127.0.0.1:9", timeout=0.2, retries=1)
        service = EditService(backend=dead, render_cfg=CFG)
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        with pytest.raises(BackendError) as exc:
            service.inpaint(sid, "hat", seed=1)
        assert exc.value.retries == 1
        s = service.get(sid)
        assert s.result is None
        assert not s.busy

    def test_session_isolation(self, service, mesh_bytes):
        a = service.create_session(mesh_bytes)
        b = service.create_session(mesh_bytes)
        service.set_mask(a, [ELLIPSOID])
        sb = service.get(b)
        assert sb.mask is None and sb.result is None
        service.set_mask(b, [Primitive("box", (0, 0, 0), (0.1, 0.1, 0.1))])
        service.inpaint(b, "x", 1)
        sa = service.get(a)
        assert sa.result is None
        assert len(sa.mask.primitives) == 1
        assert sa.mask.primitives[0].kind == "ellipsoid"

    def test_paste_back_restores_lossy_backend(self, mesh_bytes):
        class LossyBackend:
            # perturbs every pixel, like a latent round trip would
            name = "lossy"

            def inpaint(self, request):
                out = load_png(request.masked_png).astype(np.int16)
                return np.clip(out + 3, 0, 255).astype(np.uint8)

            def describe(self):
                return {"backend": "lossy"}

        service = EditService(backend=LossyBackend(), render_cfg=CFG)
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        degraded = service.inpaint(sid, "x", 1)
        assert degraded.preservation > 0
        restored = service.inpaint(sid, "x", 1, paste_back=True)
        assert restored.preservation == 0.0
        mask = service.get(sid).cond_mask.image
        assert (restored.grid[mask] == degraded.grid[mask]).all()

    def test_conditioning_matches_forge_path(self, service, mesh_bytes, demo_mesh):
        # one rendering code path: the session's conditioning grids equal a
        # direct render_tuple call with the same inputs
        from mvinpaint.grid import render_tuple
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        s = service.get(sid)
        gt, masked, mask = render_tuple(s.mesh, s.mask, CFG.rig(), CFG)
        assert masked.png_bytes() == s.cond_masked.png_bytes()
        assert mask.png_bytes() == s.cond_mask.png_bytes()


class TestBackendRequest:
    def test_json_roundtrip(self, service, mesh_bytes):
        sid = service.create_session(mesh_bytes)
        service.set_mask(sid, [ELLIPSOID])
        s = service.get(sid)
        req = BackendRequest.from_grids(s.cond_masked, s.cond_mask, "p", 7,
                                        steps=29, guidance=5.5)
        back = BackendRequest.from_json(req.to_json())
        assert back == req
        assert back.steps == 29

    def test_default_steps(self):
        assert BackendRequest(b"", b"", "p", 0).steps == 29

    def test_make_backend(self):
        assert isinstance(make_backend("mock"), MockBackend)
        assert isinstance(make_backend("http://x:1"), HttpBackend)


class TestPersistence:
    def test_sessions_survive_restart(self, tmp_path, mesh_bytes):
        s1 = EditService(render_cfg=CFG, persist_dir=tmp_path / "store")
        sid = s1.create_session(mesh_bytes)
        s1.set_mask(sid, [ELLIPSOID])
        s2 = EditService(render_cfg=CFG, persist_dir=tmp_path / "store")
        restored = s2.get(sid)
        assert restored.mask is not None
        assert restored.mask.primitives == (ELLIPSOID,)
        assert restored.preview_mask.png_bytes() == s1.get(sid).preview_mask.png_bytes()


class TestHttpApi:
    @pytest.fixture
    def client(self, service):
        return TestClient(create_app(service))

    def test_full_round_trip(self, client, mesh_bytes):
        r = client.post("/api/session", content=mesh_bytes)
        assert r.status_code == 200
        sid = r.json()["session_id"]

        r = client.put(f"/api/session/{sid}/mask", json={"primitives": [
            {"kind": "ellipsoid", "center": [0.15, 0.15, 0.0], "size": [0.2, 0.22, 0.2]}]})
        assert r.status_code == 200
        payload = r.json()
        assert set(payload) == {"masked", "mask", "coverage"}
        assert sum(payload["coverage"]) > 0

        r = client.get(f"/api/session/{sid}/preview")
        assert r.status_code == 200
        assert r.json()["mask"] == payload["mask"]

        r = client.post(f"/api/session/{sid}/inpaint", json={"prompt": "a hat", "seed": 2})
        assert r.status_code == 200
        result_id = r.json()["result_id"]

        r = client.get(f"/api/session/{sid}/result")
        body = r.json()
        assert body["result_id"] == result_id
        assert body["preservation"] == 0.0
        assert len(body["views"]) == 4
        assert len(body["poses"]) == 4

        r = client.get(f"/api/session/{sid}")
        state = r.json()
        assert state["has_mask"] and state["has_result"]
        assert state["prompt"] == "a hat"
        assert state["primitives"][0]["kind"] == "ellipsoid"

        r = client.get(f"/api/session/{sid}/mesh")
        assert r.status_code == 200
        assert r.content.startswith(b"v ")

    def test_error_mapping(self, client, mesh_bytes):
        assert client.get("/api/session/missing").status_code == 404
        assert client.get("/api/session/missing/preview").status_code == 404
        r = client.post("/api/session", content=b"v 0 0 oops\nf 1 2 3\n")
        assert r.status_code == 400
        assert r.json()["line"] == 1
        sid = client.post("/api/session", content=mesh_bytes).json()["session_id"]
        assert client.get(f"/api/session/{sid}/preview").status_code == 404
        assert client.get(f"/api/session/{sid}/result").status_code == 404
        r = client.post(f"/api/session/{sid}/inpaint", json={"prompt": "x"})
        assert r.status_code == 400  # no mask yet
        r = client.put(f"/api/session/{sid}/mask", json={"primitives": []})
        assert r.status_code == 400  # empty list is a client error

    def test_clear_mask_endpoint(self, client, mesh_bytes):
        sid = client.post("/api/session", content=mesh_bytes).json()["session_id"]
        client.put(f"/api/session/{sid}/mask", json={"primitives": [
            {"kind": "box", "center": [0, 0, 0], "size": [0.2, 0.2, 0.2]}]})
        r = client.delete(f"/api/session/{sid}/mask")
        assert r.status_code == 200
        assert sum(r.json()["coverage"]) == 0.0
        assert client.get(f"/api/session/{sid}").json()["has_mask"] is False
