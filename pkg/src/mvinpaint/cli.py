"""Command-line interface: mask, forge, validate, edit, eval, serve, corpus."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MvinpaintError
from .forge import (ForgeConfig, load_captions, load_corpus, plan_tasks, run_forge,
                    validate_manifest)
from .grid import RenderConfig
from .images import binary_png_bytes, load_binary_png, load_png
from .masks import (FaceSelectionMask, HullMask, MaskConfig, MaskType, Primitive, ViewMasks,
                    generate_mask)
from .mesh import mesh_to_obj, normalize_mesh, parse_obj
from .metrics import SweepItem, azimuth_sweep, mask_coverage, ssim, unmasked_preservation
from .service import EditService, make_backend
from .util import stable_hash_u64

ENV_BACKEND_URL = "MVINPAINT_BACKEND_URL"
ENV_BACKEND_TIMEOUT = "MVINPAINT_BACKEND_TIMEOUT"


def _render_cfg(args) -> RenderConfig:
    return RenderConfig(view_resolution=args.res)


def _load_normalized(path):
    mesh = parse_obj(Path(path).read_bytes())
    mesh, _ = normalize_mesh(mesh)
    return mesh


def cmd_mask(args) -> int:
    mesh = _load_normalized(args.mesh)
    type_map = {"1": MaskType.TYPE1, "2": MaskType.TYPE2, "3": MaskType.TYPE3,
                "random2d": MaskType.RANDOM2D}
    mask_type = type_map[args.type]
    rng = np.random.default_rng(args.seed)
    mask = generate_mask(mesh, mask_type, rng, MaskConfig(), view_resolution=args.res)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(mask, HullMask):
        path = out.with_suffix(".obj")
        path.write_bytes(mesh_to_obj(mask.mesh))
        print(f"wrote hull mask: {path}")
    elif isinstance(mask, FaceSelectionMask):
        path = out.with_suffix(".txt")
        path.write_text("\n".join(str(i) for i in mask.indices) + "\n")
        print(f"wrote {len(mask.indices)} face indices: {path}")
    elif isinstance(mask, ViewMasks):
        for k in range(4):
            path = out.parent / f"{out.stem}_view{k}.png"
            path.write_bytes(binary_png_bytes(mask.images[k]))
        print(f"wrote 4 view masks: {out.parent}/{out.stem}_view*.png")
    return 0


def cmd_forge(args) -> int:
    corpus = load_corpus(args.corpus)
    captions = load_captions(args.captions) if args.captions else {}
    cfg = ForgeConfig(
        out_dir=args.out, global_seed=args.seed, workers=args.workers,
        strict_captions=not args.allow_missing_captions,
        render=_render_cfg(args),
    )
    tasks = plan_tasks(corpus, captions, cfg)
    print(f"planned {len(tasks)} tasks over {len(corpus)} shapes")
    t0 = time.time()
    last = [0.0]

    def progress(stats):
        if time.time() - last[0] > 2.0:
            done = stats.rendered + stats.skipped + stats.failed
            print(f"  {done}/{len(tasks)} (rendered {stats.rendered}, "
                  f"skipped {stats.skipped}, failed {stats.failed})", flush=True)
            last[0] = time.time()

    manifest, stats = run_forge(tasks, cfg, progress=progress)
    print(f"forge done in {time.time() - t0:.1f}s: {stats.rendered} rendered, "
          f"{stats.skipped} skipped, {stats.failed} failed")
    print(f"manifest: {Path(args.out) / 'manifest.jsonl'}")
    return 0 if stats.failed == 0 else 1


def cmd_validate(args) -> int:
    report = validate_manifest(args.manifest)
    print(json.dumps(report.to_json(), indent=1))
    return 0 if report.ok else 1


def cmd_edit(args) -> int:
    t0 = time.time()
    backend_spec = args.backend or os.environ.get(ENV_BACKEND_URL, "mock")
    timeout = float(os.environ.get(ENV_BACKEND_TIMEOUT, "60"))
    service = EditService(backend=make_backend(backend_spec, timeout=timeout),
                          render_cfg=_render_cfg(args))
    sid = service.create_session(Path(args.mesh).read_bytes())
    spec = json.loads(Path(args.mask).read_text())
    primitives = [Primitive.from_json(p) for p in spec["primitives"]]
    service.set_mask(sid, primitives)
    result = service.inpaint(sid, args.prompt, args.seed, paste_back=args.paste_back)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .images import color_png_bytes
    (out / "result_grid.png").write_bytes(color_png_bytes(result.grid))
    for k, (img, pose) in enumerate(result.views):
        (out / f"view{k}.png").write_bytes(color_png_bytes(img))
    session = service.get(sid)
    (out / "conditioning_masked.png").write_bytes(session.cond_masked.png_bytes())
    (out / "conditioning_mask.png").write_bytes(session.cond_mask.png_bytes())
    meta = {
        "prompt": args.prompt, "seed": args.seed, "backend": result.backend_meta,
        "preservation": result.preservation, "timing": result.timing,
        "poses": [pose.to_json() for _, pose in result.views],
        "total_s": time.time() - t0,
    }
    (out / "result.json").write_text(json.dumps(meta, indent=1))
    print(json.dumps(meta, indent=1))
    return 0


def cmd_eval(args) -> int:
    if args.metric == "ssim":
        value = ssim(load_png(args.a), load_png(args.b))
        print(json.dumps({"ssim": value}))
    elif args.metric == "preserve":
        value = unmasked_preservation(load_png(args.input), load_png(args.output),
                                      load_binary_png(args.mask))
        print(json.dumps({"unmasked_preservation": value}))
    elif args.metric == "coverage":
        print(json.dumps({"coverage": list(mask_coverage(load_binary_png(args.mask)))}))
    elif args.metric == "sweep":
        corpus = load_corpus(args.corpus)
        cfg = _render_cfg(args)
        items = []
        for shape_id, path in corpus[:args.limit]:
            mesh = _load_normalized(path)
            seed = stable_hash_u64(args.seed, shape_id, "sweep")
            mask = generate_mask(mesh, MaskType(f"type{args.type}"),
                                 np.random.default_rng(seed))
            items.append(SweepItem(shape_id, mesh, mask, seed=args.seed))
        backend = make_backend(args.backend) if args.backend else None
        report = azimuth_sweep(items, cfg, backend=backend)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_json(out / "sweep.json")
        report.write_sweep_csv(out / "sweep.csv")
        print(f"wrote {out / 'sweep.json'} and {out / 'sweep.csv'}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    backend_spec = args.backend or os.environ.get(ENV_BACKEND_URL, "mock")
    timeout = float(os.environ.get(ENV_BACKEND_TIMEOUT, "60"))
    service = EditService(backend=make_backend(backend_spec, timeout=timeout),
                          render_cfg=_render_cfg(args), persist_dir=args.persist)
    app = create_app(service, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_corpus(args) -> int:
    from .tessellate import make_demo_shape

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    captions = {}
    for i in range(args.count):
        rng = np.random.default_rng(stable_hash_u64(args.seed, "demo-shape", i))
        mesh = make_demo_shape(rng)
        shape_id = f"shape_{i:04d}"
        (out / f"{shape_id}.obj").write_bytes(mesh_to_obj(mesh))
        captions[shape_id] = f"a procedural multi-part object, variant {i}"
    (out / "captions.json").write_text(json.dumps(captions, indent=1))
    print(f"wrote {args.count} shapes + captions.json to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvinpaint",
                                description="Multiview inpainting toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mask", help="generate one mask for a mesh")
    m.add_argument("--mesh", required=True)
    m.add_argument("--type", required=True, choices=["1", "2", "3", "random2d"])
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--res", type=int, default=512, help="view resolution (random2d)")
    m.add_argument("--out", required=True, help="output path prefix")
    m.set_defaults(fn=cmd_mask)

    f = sub.add_parser("forge", help="forge the training dataset for a corpus")
    f.add_argument("--corpus", required=True, help="directory of .obj shapes")
    f.add_argument("--captions", help="JSON file of shape_id -> caption")
    f.add_argument("--out", required=True)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--res", type=int, default=512, help="per-view resolution")
    f.add_argument("--workers", type=int, default=os.cpu_count() or 2)
    f.add_argument("--allow-missing-captions", action="store_true")
    f.set_defaults(fn=cmd_forge)

    v = sub.add_parser("validate", help="validate a forged manifest")
    v.add_argument("manifest")
    v.set_defaults(fn=cmd_validate)

    e = sub.add_parser("edit", help="run one edit against a backend")
    e.add_argument("--mesh", required=True)
    e.add_argument("--mask", required=True, help='JSON: {"primitives": [...]}')
    e.add_argument("--prompt", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--backend", help="'mock' or a backend URL (default: env or mock)")
    e.add_argument("--res", type=int, default=512)
    e.add_argument("--out", default="edit_out")
    e.add_argument("--paste-back", action="store_true",
                   help="composite input pixels over the result where mask = 0")
    e.set_defaults(fn=cmd_edit)

    ev = sub.add_parser("eval", help="metrics and the azimuth sweep")
    evs = ev.add_subparsers(dest="metric", required=True)
    s1 = evs.add_parser("ssim")
    s1.add_argument("--a", required=True)
    s1.add_argument("--b", required=True)
    s2 = evs.add_parser("preserve")
    s2.add_argument("--input", required=True)
    s2.add_argument("--output", required=True)
    s2.add_argument("--mask", required=True)
    s3 = evs.add_parser("coverage")
    s3.add_argument("--mask", required=True)
    s4 = evs.add_parser("sweep")
    s4.add_argument("--corpus", required=True)
    s4.add_argument("--type", type=int, default=1, choices=[1, 2, 3])
    s4.add_argument("--seed", type=int, default=0)
    s4.add_argument("--limit", type=int, default=4)
    s4.add_argument("--res", type=int, default=128)
    s4.add_argument("--backend")
    s4.add_argument("--out", default="sweep_out")
    ev.set_defaults(fn=cmd_eval)

    sv = sub.add_parser("serve", help="run the HTTP edit service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8008)
    sv.add_argument("--backend")
    sv.add_argument("--res", type=int, default=256)
    sv.add_argument("--ui-dir", help="static frontend bundle to serve at /")
    sv.add_argument("--persist", help="directory for session persistence")
    sv.set_defaults(fn=cmd_serve)

    c = sub.add_parser("corpus", help="synthesize a procedural demo corpus")
    c.add_argument("--out", required=True)
    c.add_argument("--count", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(fn=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MvinpaintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
