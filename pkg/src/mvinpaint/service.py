"""Edit-session orchestration against a pluggable inpainting backend.

Sessions hold a normalized shape, a user primitive mask, and cached
conditioning grids. The conditioning path is the same render_tuple call the
dataset forge uses, so a session's grids are pixel-identical to forged ones
for the same inputs. A deterministic mock backend makes the whole loop
testable offline; real backends speak a small JSON-over-HTTP protocol with
base64 PNGs.
"""

from __future__ import annotations

import base64
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np

from .camera import CameraPose
from .errors import BackendError, GridError, MvinpaintError, SessionBusy, SessionNotFound
from .grid import FILL_COLORS, MultiviewGrid, RenderConfig, render_tuple, split_grid
from .images import load_binary_png, load_png, to_uint8
from .masks import Primitive, PrimitiveMask, primitives_to_mask
from .mesh import TriangleMesh, mesh_to_obj, normalize_mesh, parse_obj
from .metrics import unmasked_preservation
from .util import stable_hash_u64

DEFAULT_STEPS = 29  # backend sampler steps unless the caller overrides


@dataclass(frozen=True)
class BackendRequest:
    """One inpainting call: conditioning PNGs plus sampling parameters."""

    masked_png: bytes
    mask_png: bytes
    prompt: str
    seed: int
    steps: int = DEFAULT_STEPS
    guidance: float | None = None

    @classmethod
    def from_grids(cls, masked: MultiviewGrid, mask_grid: MultiviewGrid, prompt: str,
                   seed: int, steps: int = DEFAULT_STEPS,
                   guidance: float | None = None) -> "BackendRequest":
        if masked.image.shape[:2] != mask_grid.image.shape[:2]:
            raise GridError("masked grid and mask grid dimensions differ")
        return cls(masked.png_bytes(), mask_grid.png_bytes(), prompt, seed, steps, guidance)

    def to_json(self) -> dict:
        return {
            "masked_grid": base64.b64encode(self.masked_png).decode("ascii"),
            "mask_grid": base64.b64encode(self.mask_png).decode("ascii"),
            "prompt": self.prompt,
            "seed": self.seed,
            "steps": self.steps,
            "guidance": self.guidance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BackendRequest":
        return cls(
            base64.b64decode(obj["masked_grid"]), base64.b64decode(obj["mask_grid"]),
            obj.get("prompt", ""), int(obj.get("seed", 0)),
            int(obj.get("steps", DEFAULT_STEPS)), obj.get("guidance"),
        )


def _smooth_pattern(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Low-frequency deterministic RGB pattern in uint8, used as mock fill."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    out = np.empty((h, w, 3), dtype=np.uint8)
    for c in range(3):
        acc = np.zeros((h, w))
        for _ in range(3):
            fx, fy = rng.uniform(0.5, 3.0, size=2)
            px, py = rng.uniform(0.0, 2.0 * np.pi, size=2)
            acc += np.sin(2.0 * np.pi * fx * xx / w + px) * np.sin(2.0 * np.pi * fy * yy / h + py)
        lo, hi = acc.min(), acc.max()
        unit = (acc - lo) / (hi - lo) if hi > lo else np.zeros_like(acc)
        out[..., c] = np.rint(40 + 175 * unit).astype(np.uint8)
    return out


class MockBackend:
    """Copies unmasked pixels verbatim; fills the mask with a smooth pattern
    that is a pure function of (seed, prompt)."""

    name = "mock"

    def inpaint(self, request: BackendRequest) -> np.ndarray:
        img = load_png(request.masked_png)
        mask = load_binary_png(request.mask_png)
        if img.shape[:2] != mask.shape:
            raise GridError("mock backend: grid/mask dimension mismatch")
        rng = np.random.default_rng(stable_hash_u64("mock-fill", request.prompt, request.seed))
        pattern = _smooth_pattern(mask.shape, rng)
        out = img.copy()
        out[mask] = pattern[mask]
        return out

    def describe(self) -> dict:
        return {"backend": "mock"}


class HttpBackend:
    """POSTs the request JSON to `{url}/inpaint` and decodes {"grid": b64 png}."""

    def __init__(self, url: str, timeout: float = 60.0, retries: int = 2):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.name = url

    def inpaint(self, request: BackendRequest) -> np.ndarray:
        payload = request.to_json()
        last_exc = None
        for attempt in range(self.retries + 1):
            try:
                resp = httpx.post(f"{self.url}/inpaint", json=payload, timeout=self.timeout)
                resp.raise_for_status()
                grid_b64 = resp.json()["grid"]
                out = load_png(base64.b64decode(grid_b64))
                expected = load_png(request.masked_png).shape
                if out.shape != expected:
                    raise BackendError(
                        f"backend returned grid of shape {out.shape}, expected {expected}",
                        retries=attempt)
                return out
            except BackendError:
                raise
            except Exception as exc:
                last_exc = exc
        raise BackendError(f"backend unreachable after {self.retries + 1} attempts: {last_exc}",
                           retries=self.retries)

    def describe(self) -> dict:
        return {"backend": self.url, "timeout": self.timeout}


def make_backend(spec: str, timeout: float = 60.0):
    if spec == "mock":
        return MockBackend()
    return HttpBackend(spec, timeout=timeout)


@dataclass
class EditResult:
    result_id: int
    grid: np.ndarray  # (2H, 2W, 3) uint8
    views: list[tuple[np.ndarray, CameraPose]]
    preservation: float | None
    timing: dict
    backend_meta: dict


@dataclass
class EditSession:
    session_id: str
    mesh: TriangleMesh
    mask: PrimitiveMask | None = None
    prompt: str = ""
    seed: int = 0
    preview_masked: MultiviewGrid | None = None   # purple fill, for the UI
    preview_mask: MultiviewGrid | None = None
    cond_masked: MultiviewGrid | None = None      # white fill, sent to backends
    cond_mask: MultiviewGrid | None = None
    cond_gt: MultiviewGrid | None = None
    result: EditResult | None = None
    busy: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


class EditService:
    """Holds sessions and runs the preview/inpaint loop."""

    def __init__(self, backend=None, render_cfg: RenderConfig | None = None,
                 persist_dir: str | None = None):
        self.backend = backend or MockBackend()
        self.render_cfg = render_cfg or RenderConfig()
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self._sessions: dict[str, EditSession] = {}
        self._registry_lock = threading.Lock()
        if self.persist_dir:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
            self._load_persisted()

    # -- session registry ---------------------------------------------------

    def create_session(self, mesh_bytes: bytes, session_id: str | None = None) -> str:
        mesh = parse_obj(mesh_bytes)
        mesh, _ = normalize_mesh(mesh)
        sid = session_id or uuid.uuid4().hex[:12]
        session = EditSession(session_id=sid, mesh=mesh)
        with self._registry_lock:
            self._sessions[sid] = session
        self._persist(session)
        return sid

    def get(self, session_id: str) -> EditSession:
        with self._registry_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise SessionNotFound(f"no session {session_id!r}") from None

    def session_count(self) -> int:
        with self._registry_lock:
            return len(self._sessions)

    # -- operations ----------------------------------------------------------

    def set_mask(self, session_id: str, primitives: list[Primitive]
                 ) -> tuple[MultiviewGrid, MultiviewGrid]:
        """Replace the session mask and re-render previews + conditioning.

        Raises before touching session state, so an invalid primitive list
        leaves the previous mask intact.
        """
        session = self.get(session_id)
        mask = primitives_to_mask(primitives)
        rig = self.render_cfg.rig()
        gt, masked_white, mask_grid = render_tuple(session.mesh, mask, rig, self.render_cfg)
        purple = FILL_COLORS["purple"].astype(np.float32)
        masked_purple = MultiviewGrid(
            np.where(mask_grid.image[..., None], purple, gt.image), "color", rig.poses)
        with session.lock:
            session.mask = mask
            session.preview_masked = masked_purple
            session.preview_mask = mask_grid
            session.cond_masked = masked_white
            session.cond_mask = mask_grid
            session.cond_gt = gt
        self._persist(session)
        return masked_purple, mask_grid

    def clear_mask(self, session_id: str) -> tuple[MultiviewGrid, MultiviewGrid]:
        """Remove the mask; previews fall back to the bare shape (all-zero mask)."""
        session = self.get(session_id)
        rig = self.render_cfg.rig()
        gt, masked, mask_grid = render_tuple(session.mesh, None, rig, self.render_cfg)
        with session.lock:
            session.mask = None
            session.preview_masked = masked
            session.preview_mask = mask_grid
            session.cond_masked = None
            session.cond_mask = None
            session.cond_gt = gt
        self._persist(session)
        return masked, mask_grid

    def inpaint(self, session_id: str, prompt: str, seed: int,
                steps: int = DEFAULT_STEPS, guidance: float | None = None,
                paste_back: bool = False) -> EditResult:
        """Send the cached conditioning grids to the backend.

        paste_back composites input pixels over the result wherever mask = 0,
        for backends whose latent round trip cannot preserve them exactly.
        """
        session = self.get(session_id)
        with session.lock:
            if session.busy:
                raise SessionBusy(f"session {session_id} has an inpaint in flight")
            if session.mask is None or session.cond_masked is None:
                raise MvinpaintError("session has no mask; set one before inpainting")
            masked, mask_grid = session.cond_masked, session.cond_mask
            session.busy = True
        try:
            t0 = time.perf_counter()
            request = BackendRequest.from_grids(masked, mask_grid, prompt, seed,
                                                steps=steps, guidance=guidance)
            t1 = time.perf_counter()
            out = self.backend.inpaint(request)
            t2 = time.perf_counter()
            input_u8 = to_uint8(masked.image)
            if paste_back:
                out = np.where(mask_grid.image[..., None], out, input_u8)
            preservation = unmasked_preservation(input_u8, out, mask_grid.image)
            grid = MultiviewGrid(out, "color", masked.poses)
            views = split_grid(grid)
            with session.lock:
                next_id = (session.result.result_id + 1) if session.result else 1
                result = EditResult(
                    result_id=next_id, grid=out, views=views, preservation=preservation,
                    timing={"encode_s": t1 - t0, "backend_s": t2 - t1,
                            "total_s": time.perf_counter() - t0},
                    backend_meta=self.backend.describe(),
                )
                session.result = result
                session.prompt = prompt
                session.seed = seed
            self._persist(session)
            return result
        finally:
            with session.lock:
                session.busy = False

    # -- persistence ----------------------------------------------------------

    def _persist(self, session: EditSession) -> None:
        if not self.persist_dir:
            return
        d = self.persist_dir / session.session_id
        d.mkdir(parents=True, exist_ok=True)
        (d / "mesh.obj").write_bytes(mesh_to_obj(session.mesh))
        state = {
            "session_id": session.session_id,
            "prompt": session.prompt,
            "seed": session.seed,
            "primitives": [p.to_json() for p in session.mask.primitives] if session.mask else [],
        }
        (d / "state.json").write_text(json.dumps(state, indent=1))

    def _load_persisted(self) -> None:
        for state_path in sorted(self.persist_dir.glob("*/state.json")):
            try:
                state = json.loads(state_path.read_text())
                mesh_bytes = (state_path.parent / "mesh.obj").read_bytes()
                sid = self.create_session(mesh_bytes, session_id=state["session_id"])
                prims = [Primitive.from_json(p) for p in state.get("primitives", [])]
                if prims:
                    self.set_mask(sid, prims)
                session = self.get(sid)
                session.prompt = state.get("prompt", "")
                session.seed = state.get("seed", 0)
            except Exception:
                continue  # a corrupt persisted session should not block startup
