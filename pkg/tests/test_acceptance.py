"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per criterion.
The forge criteria build a real 20-shape corpus at 256 px/view, so this module
takes a few minutes; everything is deterministic.
"""

import json
import math
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import chisquare

from mvinpaint import tessellate
from mvinpaint.camera import camera_pose
from mvinpaint.forge import (MASKS_PER_SHAPE, ForgeConfig, ForgeManifest, load_corpus,
                             plan_tasks, run_forge, validate_manifest)
from mvinpaint.grid import MASK_ID, S_ID, RenderConfig, render_tuple, split_grid
from mvinpaint.images import load_binary_png, load_png
from mvinpaint.masks import (MaskConfig, MaskType, gen_mask_type1, generate_mask,
                             sample_cylinders)
from mvinpaint.mesh import mesh_to_obj, normalize_mesh, parse_obj
from mvinpaint.metrics import ssim, sweep_offsets
from mvinpaint.raster import BACKGROUND_ID, SceneObject, rasterize_scene
from mvinpaint.raycast import raycast_visibility
from mvinpaint.util import stable_hash_u64

from test_metrics import natural_image, ssim_direct
from test_render import random_scene, silhouette_edge_mask

ACCEPT_RES = 256          # per-view resolution for the forged fixture corpus
ACCEPT_SHAPES = 20
ACCEPT_SEED = 2024
WORKERS = min(8, os.cpu_count() or 1)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] {name}: FAIL", flush=True)
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS", flush=True)


def hull_violation(hull_mesh, points):
    v = hull_mesh.vertices
    centroid = v.mean(axis=0)
    worst = -np.inf
    for (a, b, c) in hull_mesh.faces:
        n = np.cross(v[b] - v[a], v[c] - v[a])
        n = n / np.linalg.norm(n)
        if n @ (centroid - v[a]) > 0:
            n = -n
        worst = max(worst, float(((points - v[a]) @ n).max()))
    return worst


@pytest.fixture(scope="module")
def fixture_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept") / "corpus"
    root.mkdir()
    captions = {}
    for i in range(ACCEPT_SHAPES):
        rng = np.random.default_rng(stable_hash_u64("accept-corpus", i))
        mesh = tessellate.make_demo_shape(rng)
        sid = f"shape_{i:04d}"
        (root / f"{sid}.obj").write_bytes(mesh_to_obj(mesh))
        captions[sid] = f"procedural fixture shape {i}"
    (root / "captions.json").write_text(json.dumps(captions))
    return root


@pytest.fixture(scope="module")
def forged(fixture_corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("accept-out")
    cfg = ForgeConfig(out_dir=str(out), global_seed=ACCEPT_SEED, workers=WORKERS,
                      render=RenderConfig(view_resolution=ACCEPT_RES))
    corpus = load_corpus(fixture_corpus)
    captions = json.loads((fixture_corpus / "captions.json").read_text())
    tasks = plan_tasks(corpus, captions, cfg)
    t0 = time.time()
    manifest, stats = run_forge(tasks, cfg)
    elapsed = time.time() - t0
    return {"out": out, "manifest": manifest, "stats": stats, "elapsed": elapsed,
            "corpus": fixture_corpus, "cfg": cfg}


def test_dataset_shape(forged):
    """20-shape corpus -> exactly 20x30 records, 10 per type per shape, within budget."""
    with criterion("dataset shape (20x30 records, 10/10/10, runtime budget)"):
        manifest, stats = forged["manifest"], forged["stats"]
        assert stats.failed == 0, f"{stats.failed} tasks failed"
        assert len(manifest.records) == ACCEPT_SHAPES * MASKS_PER_SHAPE == 600
        per_shape = {}
        for r in manifest.records:
            per_shape.setdefault(r.shape_id, []).append(r.mask_type)
        assert len(per_shape) == ACCEPT_SHAPES
        for types in per_shape.values():
            assert len(types) == 30
            for t in ("type1", "type2", "type3"):
                assert types.count(t) == 10
        # the count formula extrapolates to the production scale
        assert 5000 * MASKS_PER_SHAPE == 150_000
        budget = 600.0  # seconds, stated for 8 cores; this box has fewer
        print(f"\n  forge: {forged['elapsed']:.1f}s for 600 records at "
              f"{ACCEPT_RES}px/view on {WORKERS} workers (budget {budget:.0f}s)")
        assert forged["elapsed"] < budget
        report = validate_manifest(forged["out"] / "manifest.jsonl")
        assert report.ok, report.to_json()


def test_mask_validity_suite(fixture_corpus):
    """Type-1 hull convexity/containment at 1e-7; type-3 sampler distributions."""
    with criterion("mask validity (hull eps=1e-7, cylinder count chi^2, size range)"):
        meshes = [normalize_mesh(parse_obj(p.read_bytes()))[0]
                  for p in sorted(fixture_corpus.glob("*.obj"))]
        checked = 0
        for mi, mesh in enumerate(meshes):
            for s in range(3):
                mask = gen_mask_type1(mesh, np.random.default_rng(
                    stable_hash_u64("hull-audit", mi, s)))
                assert hull_violation(mask.mesh, mask.mesh.vertices) <= 1e-7
                assert hull_violation(mask.mesh, mask.source_midpoints) <= 1e-7
                checked += 1
        assert checked == 60

        rng = np.random.default_rng(99)
        counts = np.zeros(4)
        draws = 4000
        for _ in range(draws):
            cyls = sample_cylinders(rng, np.zeros(3))
            counts[len(cyls) - 3] += 1
            for c in cyls:
                assert 0.1 <= c.half_height <= 0.3
                assert 0.1 <= c.radius_a <= 0.3
                assert 0.1 <= c.radius_b <= 0.3
        p = chisquare(counts).pvalue
        print(f"\n  hulls checked: {checked}; cylinder-count chi^2 p = {p:.3f}")
        assert p > 0.01


def test_renderer_oracle_equivalence():
    """Rasterizer vs ray caster: >=99% id agreement over 50 random 2-object scenes."""
    with criterion("renderer oracle equivalence (>=99% at 64x64, 50 scenes)"):
        rng = np.random.default_rng(31337)
        rates = []
        for _ in range(50):
            scene = random_scene(rng)
            cam = camera_pose(float(rng.uniform(0, 2 * math.pi)),
                              float(rng.uniform(0.1, 1.2)), distance=2.8)
            raster = rasterize_scene(scene, cam, 64, shading="none").object_id
            cast = raycast_visibility(scene, cam, 64)
            disagree = raster != cast
            rates.append(1.0 - disagree.mean())
            near_edge = silhouette_edge_mask(cast) | silhouette_edge_mask(raster)
            assert disagree[~near_edge].sum() == 0, "disagreement far from any edge"
        print(f"\n  agreement: min {min(rates):.4f}, mean {np.mean(rates):.4f}")
        assert min(rates) >= 0.99


def _check_record_occlusion(args):
    """Per-record invariant audit; runs in worker processes."""
    rec, out_root, corpus_dir, view_res, seed = args
    out_root, corpus_dir = Path(out_root), Path(corpus_dir)
    gt = load_png(out_root / rec["gt"])
    masked = load_png(out_root / rec["masked"])
    mask = load_binary_png(out_root / rec["mask"])
    keep = ~mask
    if not (masked[keep] == gt[keep]).all():
        return f"{rec['shape_id']}/{rec['mask_index']}: masked != gt outside mask"
    if mask.any() and not (masked[mask] == 255).all():
        return f"{rec['shape_id']}/{rec['mask_index']}: mask pixels not filled white"

    mesh = parse_obj((corpus_dir / f"{rec['shape_id']}.obj").read_bytes())
    mesh, _ = normalize_mesh(mesh)
    rng = np.random.default_rng(rec["seed"])
    mask_geom = generate_mask(mesh, MaskType(rec["mask_type"]), rng,
                              MaskConfig(), view_resolution=view_res)
    cfg = RenderConfig(view_resolution=view_res)
    rig = cfg.rig()
    from mvinpaint.masks import FaceSelectionMask
    m_views, s_views, sil_views = [], [], []
    for pose in rig.poses:
        if isinstance(mask_geom, FaceSelectionMask):
            scene = [SceneObject(mesh, S_ID, mask_geom.flags(), MASK_ID)]
        else:
            scene = [SceneObject(mesh, S_ID), SceneObject(mask_geom.mesh, MASK_ID)]
        ids = rasterize_scene(scene, pose, view_res, shading="none").object_id
        m_views.append(ids == MASK_ID)
        s_views.append(ids == S_ID)
        sil_views.append(ids != BACKGROUND_ID)
    h = view_res
    m_grid = np.zeros((2 * h, 2 * h), dtype=bool)
    s_grid = np.zeros_like(m_grid)
    sil_grid = np.zeros_like(m_grid)
    slices = ((0, 0), (0, 1), (1, 0), (1, 1))
    for k, (r, c) in enumerate(slices):
        m_grid[r * h:(r + 1) * h, c * h:(c + 1) * h] = m_views[k]
        s_grid[r * h:(r + 1) * h, c * h:(c + 1) * h] = s_views[k]
        sil_grid[r * h:(r + 1) * h, c * h:(c + 1) * h] = sil_views[k]
    if (m_grid & s_grid).any():
        return f"{rec['shape_id']}/{rec['mask_index']}: M and S both frontmost"
    if not ((m_grid | s_grid) == sil_grid).all():
        return f"{rec['shape_id']}/{rec['mask_index']}: frontmost union != silhouette"
    if not (m_grid == mask).all():
        return f"{rec['shape_id']}/{rec['mask_index']}: saved mask != re-rendered mask"
    return None


def test_occlusion_invariants(forged):
    """Per forged record: disjoint frontmost sets; masked==gt where mask==0."""
    with criterion("occlusion invariants (600 records, pixel-exact)"):
        manifest = forged["manifest"]
        args = [(r.to_json(), str(forged["out"]), str(forged["corpus"]),
                 ACCEPT_RES, ACCEPT_SEED) for r in manifest.records]
        failures = []
        with ProcessPoolExecutor(max_workers=WORKERS) as pool:
            for res in pool.map(_check_record_occlusion, args, chunksize=8):
                if res is not None:
                    failures.append(res)
        assert not failures, failures[:5]

        # the empty mask gives an all-zero mask grid
        mesh = parse_obj(next(iter(sorted(forged["corpus"].glob("*.obj")))).read_bytes())
        mesh, _ = normalize_mesh(mesh)
        cfg = RenderConfig(view_resolution=64)
        gt, masked, mask = render_tuple(mesh, None, cfg.rig(), cfg)
        assert not mask.image.any()
        np.testing.assert_array_equal(masked.image, gt.image)


def test_azimuth_sweep_schedule(fixture_corpus):
    """16 offsets ending at 337.5 deg; 90-degree offset is an exact permutation."""
    with criterion("azimuth sweep (16 offsets, 337.5 end, exact 90deg permutation)"):
        offsets = sweep_offsets()
        assert len(offsets) == 16
        assert offsets[0] == 0.0
        assert abs(math.degrees(offsets[-1]) - 337.5) < 1e-12

        mesh = parse_obj((fixture_corpus / "shape_0000.obj").read_bytes())
        mesh, _ = normalize_mesh(mesh)
        mask = gen_mask_type1(mesh, np.random.default_rng(5))
        cfg = RenderConfig(view_resolution=96)
        base = render_tuple(mesh, mask, cfg.rig(offsets[0]), cfg)
        again = render_tuple(mesh, mask, cfg.rig(0.0), cfg)
        quarter = render_tuple(mesh, mask, cfg.rig(offsets[4]), cfg)
        for a, b in zip(base, again):
            np.testing.assert_array_equal(a.image, b.image)
        for g_base, g_quarter in zip(base, quarter):
            b_views = [v for v, _ in split_grid(g_base)]
            q_views = [v for v, _ in split_grid(g_quarter)]
            for k in range(4):
                np.testing.assert_array_equal(q_views[k], b_views[(k + 1) % 4])


def test_forge_determinism(tmp_path_factory):
    """Same seed + different worker counts -> byte-identical datasets."""
    with criterion("determinism (workers 1 vs 2, byte-identical outputs)"):
        base = tmp_path_factory.mktemp("determinism")
        corpus_dir = base / "corpus"
        corpus_dir.mkdir()
        captions = {}
        for i in range(4):
            rng = np.random.default_rng(stable_hash_u64("det-corpus", i))
            sid = f"shape_{i}"
            (corpus_dir / f"{sid}.obj").write_bytes(mesh_to_obj(tessellate.make_demo_shape(rng)))
            captions[sid] = f"shape {i}"
        trees = []
        for workers, name in ((1, "serial"), (2, "pool")):
            cfg = ForgeConfig(out_dir=str(base / name), global_seed=11, workers=workers,
                              render=RenderConfig(view_resolution=96))
            run_forge(plan_tasks(load_corpus(corpus_dir), captions, cfg), cfg)
            trees.append({str(p.relative_to(base / name)): p.read_bytes()
                          for p in sorted((base / name).rglob("*")) if p.is_file()})
        assert trees[0].keys() == trees[1].keys()
        for key in trees[0]:
            assert trees[0][key] == trees[1][key], f"{key} differs between worker counts"
        m1 = ForgeManifest.read(base / "serial" / "manifest.jsonl")
        m2 = ForgeManifest.read(base / "pool" / "manifest.jsonl")
        assert [r.to_json() for r in m1.records] == [r.to_json() for r in m2.records]


def test_end_to_end_mock_edit(fixture_corpus, tmp_path):
    """CLI edit against the mock backend: < 5 s and preservation exactly 0."""
    with criterion("end-to-end mock edit (CLI < 5s, preservation = 0)"):
        mask_spec = tmp_path / "mask.json"
        mask_spec.write_text(json.dumps({"primitives": [
            {"kind": "ellipsoid", "center": [0.12, 0.18, 0.0], "size": [0.2, 0.25, 0.2]}]}))
        out = tmp_path / "edit_out"
        t0 = time.time()
        proc = subprocess.run(
            [sys.executable, "-m", "mvinpaint.cli", "edit",
             "--mesh", str(fixture_corpus / "shape_0001.obj"),
             "--mask", str(mask_spec), "--prompt", "a woolly hat", "--seed", "12",
             "--backend", "mock", "--res", "256", "--out", str(out)],
            capture_output=True, text=True)
        elapsed = time.time() - t0
        assert proc.returncode == 0, proc.stderr
        meta = json.loads((out / "result.json").read_text())
        print(f"\n  edit wall time: {elapsed:.2f}s, preservation: {meta['preservation']}")
        assert elapsed < 5.0
        assert meta["preservation"] == 0.0


def test_ssim_criteria():
    """ssim(x,x)=1; direct-formula oracle within 1e-4; strict monotone decay."""
    with criterion("SSIM (identity=1.0, oracle within 1e-4, monotone under noise)"):
        x = natural_image(size=72, seed=41)
        assert ssim(x, x) == 1.0
        rng = np.random.default_rng(42)
        pairs = [
            (x, np.clip(x + rng.normal(0, 8, x.shape), 0, 255)),
            (x, np.clip(x + rng.normal(0, 30, x.shape), 0, 255)),
            (x, 255.0 - x),
        ]
        for a, b in pairs:
            assert abs(ssim(a, b) - ssim_direct(a, b)) < 1e-4
        noise = rng.normal(0, 1, x.shape)
        scores = [ssim(x, np.clip(x + amp * noise, 0, 255)) for amp in (2, 5, 10, 20, 40)]
        assert all(s0 > s1 for s0, s1 in zip(scores, scores[1:]))
