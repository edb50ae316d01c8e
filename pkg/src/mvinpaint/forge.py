"""Batch dataset forge: plan, execute, resume, and validate the training set.

Each shape gets 30 masks (indices 0-9 type1, 10-19 type2, 20-29 type3) and
each mask one ground-truth / masked / mask grid triple plus a pose sidecar.
Per-task seeds are a stable hash of (global seed, shape id, mask index), so
output bytes are independent of worker count and scheduling order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MvinpaintError
from .grid import RenderConfig, render_tuple, save_grid_files
from .images import load_binary_png, load_png
from .masks import MaskConfig, MaskType, generate_mask
from .mesh import normalize_mesh, parse_obj
from .util import stable_hash_u64

MASKS_PER_SHAPE = 30
_TYPE_BY_BLOCK = (MaskType.TYPE1, MaskType.TYPE2, MaskType.TYPE3)

RECORD_FILES = ("gt.png", "masked.png", "mask.png", "poses.json")


def mask_type_for_index(mask_index: int) -> MaskType:
    if not 0 <= mask_index < MASKS_PER_SHAPE:
        raise ValueError(f"mask index {mask_index} out of range")
    return _TYPE_BY_BLOCK[mask_index // 10]


@dataclass(frozen=True)
class ForgeTask:
    shape_id: str
    mesh_path: str
    mask_index: int
    mask_type: str
    caption: str
    seed: int


@dataclass(frozen=True)
class ForgeConfig:
    out_dir: str
    global_seed: int = 0
    workers: int = 1
    strict_captions: bool = True
    render: RenderConfig = field(default_factory=RenderConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)


@dataclass(frozen=True)
class DatasetRecord:
    shape_id: str
    mask_index: int
    mask_type: str
    caption: str
    seed: int
    gt_path: str
    masked_path: str
    mask_path: str
    poses_path: str

    def to_json(self) -> dict:
        return {"kind": "record", "shape_id": self.shape_id, "mask_index": self.mask_index,
                "mask_type": self.mask_type, "caption": self.caption, "seed": self.seed,
                "gt": self.gt_path, "masked": self.masked_path, "mask": self.mask_path,
                "poses": self.poses_path}

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetRecord":
        return cls(obj["shape_id"], obj["mask_index"], obj["mask_type"], obj["caption"],
                   obj["seed"], obj["gt"], obj["masked"], obj["mask"], obj["poses"])

    @property
    def key(self) -> tuple[str, int]:
        return (self.shape_id, self.mask_index)


@dataclass
class ForgeManifest:
    header: dict
    records: list[DatasetRecord]
    errors: list[dict]

    def write(self, path) -> None:
        lines = [json.dumps({"kind": "header", **self.header}, sort_keys=True)]
        lines += [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        lines += [json.dumps(e, sort_keys=True) for e in self.errors]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path) -> "ForgeManifest":
        header, records, errors = {}, [], []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            kind = obj.pop("kind", "record")
            if kind == "header":
                header = obj
            elif kind == "record":
                records.append(DatasetRecord.from_json(obj))
            else:
                errors.append({"kind": kind, **obj})
        return cls(header, records, errors)


def load_corpus(corpus_dir) -> list[tuple[str, str]]:
    """(shape_id, mesh_path) pairs for every .obj under corpus_dir, sorted by id."""
    root = Path(corpus_dir)
    pairs = sorted((p.stem, str(p)) for p in root.glob("*.obj"))
    if not pairs:
        raise MvinpaintError(f"no .obj files in {corpus_dir}")
    return pairs


def load_captions(path) -> dict[str, str]:
    """Caption sidecar: a JSON object {shape_id: caption}."""
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise MvinpaintError("captions file must be a JSON object of shape_id -> caption")
    return {str(k): str(v) for k, v in obj.items()}


def plan_tasks(corpus: list[tuple[str, str]], captions: dict[str, str],
               cfg: ForgeConfig) -> list[ForgeTask]:
    """30 tasks per shape with stable per-task seeds."""
    tasks = []
    for shape_id, mesh_path in corpus:
        if shape_id not in captions:
            if cfg.strict_captions:
                raise MvinpaintError(f"missing caption for shape {shape_id!r}")
            caption = ""
        else:
            caption = captions[shape_id]
        for mask_index in range(MASKS_PER_SHAPE):
            tasks.append(ForgeTask(
                shape_id=shape_id,
                mesh_path=mesh_path,
                mask_index=mask_index,
                mask_type=mask_type_for_index(mask_index).value,
                caption=caption,
                seed=stable_hash_u64(cfg.global_seed, shape_id, mask_index),
            ))
    return tasks


def _record_dir(out_dir: Path, task: ForgeTask) -> Path:
    return out_dir / task.shape_id / str(task.mask_index)


def _record_for(task: ForgeTask) -> DatasetRecord:
    rel = f"{task.shape_id}/{task.mask_index}"
    return DatasetRecord(
        shape_id=task.shape_id, mask_index=task.mask_index, mask_type=task.mask_type,
        caption=task.caption, seed=task.seed,
        gt_path=f"{rel}/gt.png", masked_path=f"{rel}/masked.png",
        mask_path=f"{rel}/mask.png", poses_path=f"{rel}/poses.json",
    )


def _outputs_valid(rec_dir: Path, expected_size: int) -> bool:
    try:
        for name in RECORD_FILES:
            if not (rec_dir / name).is_file():
                return False
        mask = load_binary_png(rec_dir / "mask.png")
        if mask.shape != (expected_size, expected_size):
            return False
        json.loads((rec_dir / "poses.json").read_text())
        return True
    except Exception:
        return False


def run_task(task: ForgeTask, cfg: ForgeConfig) -> tuple[DatasetRecord, bool]:
    """Execute one task; returns (record, rendered). Skips work when outputs
    already exist and validate (crash-safe resume)."""
    out_dir = Path(cfg.out_dir)
    rec_dir = _record_dir(out_dir, task)
    grid_size = 2 * cfg.render.view_resolution
    if _outputs_valid(rec_dir, grid_size):
        return _record_for(task), False

    mesh = parse_obj(Path(task.mesh_path).read_bytes())
    mesh, _ = normalize_mesh(mesh)
    rng = np.random.default_rng(task.seed)
    mask = generate_mask(mesh, MaskType(task.mask_type), rng, cfg.mask,
                         view_resolution=cfg.render.view_resolution)
    gt, masked, mask_grid = render_tuple(mesh, mask, cfg.render.rig(), cfg.render)
    save_grid_files(rec_dir, gt, masked, mask_grid)
    return _record_for(task), True


def _run_task_entry(task: ForgeTask, cfg: ForgeConfig):
    try:
        record, rendered = run_task(task, cfg)
        return task, record, rendered, None
    except Exception as exc:  # record-and-continue: one bad mesh must not kill the run
        return task, None, False, f"{type(exc).__name__}: {exc}"


@dataclass
class ForgeStats:
    rendered: int = 0
    skipped: int = 0
    failed: int = 0


def run_forge(tasks: list[ForgeTask], cfg: ForgeConfig,
              progress=None) -> tuple[ForgeManifest, ForgeStats]:
    """Execute a plan with a bounded worker pool and write manifest.jsonl.

    The manifest body is sorted by (shape_id, mask_index), so identical plans
    yield byte-identical manifests regardless of worker count. Task failures
    land in the error section; the run only aborts on manifest I/O failure.
    """
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    partial_path = out_dir / "manifest.jsonl.partial"
    stats = ForgeStats()
    records: list[DatasetRecord] = []
    errors: list[dict] = []

    def consume(task, record, rendered, err, partial):
        if err is not None:
            stats.failed += 1
            errors.append({"kind": "error", "shape_id": task.shape_id,
                           "mask_index": task.mask_index, "seed": task.seed, "error": err})
            partial.write(json.dumps(errors[-1], sort_keys=True) + "\n")
        else:
            stats.rendered += 1 if rendered else 0
            stats.skipped += 0 if rendered else 1
            records.append(record)
            partial.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
        partial.flush()
        if progress:
            progress(stats)

    with open(partial_path, "w") as partial:
        if cfg.workers <= 1:
            for task in tasks:
                consume(*_run_task_entry(task, cfg), partial)
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [pool.submit(_run_task_entry, task, cfg) for task in tasks]
                for fut in as_completed(futures):
                    consume(*fut.result(), partial)

    records.sort(key=lambda r: r.key)
    errors.sort(key=lambda e: (e["shape_id"], e["mask_index"]))
    manifest = ForgeManifest(
        header={
            "format_version": 1,
            "tool_version": __version__,
            "global_seed": cfg.global_seed,
            "view_resolution": cfg.render.view_resolution,
            "fill": cfg.render.fill,
            "rig": cfg.render.rig().to_json(),
            "masks_per_shape": MASKS_PER_SHAPE,
        },
        records=records,
        errors=errors,
    )
    manifest.write(out_dir / "manifest.jsonl")
    partial_path.unlink(missing_ok=True)
    return manifest, stats


@dataclass
class ValidationIssue:
    shape_id: str
    mask_index: int
    kind: str
    message: str

    def to_json(self) -> dict:
        return {"shape_id": self.shape_id, "mask_index": self.mask_index,
                "kind": self.kind, "message": self.message}


@dataclass
class ValidationReport:
    checked: int
    issues: list[ValidationIssue]

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_json(self) -> dict:
        return {"checked": self.checked, "ok": self.ok,
                "issues": [i.to_json() for i in self.issues]}


def validate_manifest(manifest_path) -> ValidationReport:
    """Check file existence, PNG decodability, mask purity, pose consistency,
    and per-shape count/type balance for a forged dataset."""
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    try:
        manifest = ForgeManifest.read(manifest_path)
    except (OSError, json.JSONDecodeError) as exc:
        raise MvinpaintError(f"unreadable manifest {manifest_path}: {exc}") from exc
    issues: list[ValidationIssue] = []

    def issue(rec, kind, message):
        issues.append(ValidationIssue(rec.shape_id, rec.mask_index, kind, message))

    res = manifest.header.get("view_resolution")
    grid_size = 2 * res if res else None
    rig = manifest.header.get("rig", {})

    seen: dict[tuple[str, int], int] = {}
    for rec in manifest.records:
        seen[rec.key] = seen.get(rec.key, 0) + 1
        if seen[rec.key] > 1:
            issue(rec, "duplicate", "duplicate (shape_id, mask_index)")
            continue
        missing = [p for p in (rec.gt_path, rec.masked_path, rec.mask_path, rec.poses_path)
                   if not (root / p).is_file()]
        if missing:
            issue(rec, "missing-file", f"missing {', '.join(missing)}")
            continue
        try:
            gt = load_png(root / rec.gt_path)
            masked = load_png(root / rec.masked_path)
        except Exception as exc:
            issue(rec, "bad-png", f"undecodable color grid: {exc}")
            continue
        try:
            mask = load_binary_png(root / rec.mask_path)
        except Exception as exc:
            issue(rec, "mask-not-binary", str(exc))
            continue
        if grid_size and (gt.shape[:2] != (grid_size, grid_size)
                          or masked.shape[:2] != (grid_size, grid_size)
                          or mask.shape != (grid_size, grid_size)):
            issue(rec, "bad-size", "grid size does not match manifest header")
        try:
            poses = json.loads((root / rec.poses_path).read_text())
            quadrants = poses["quadrants"]
            if len(quadrants) != 4:
                raise ValueError("needs 4 quadrant poses")
            if rig and any(abs(q["elevation"] - rig["quadrants"][i]["elevation"]) > 1e-12
                           for i, q in enumerate(quadrants)):
                raise ValueError("pose elevation differs from header rig")
        except Exception as exc:
            issue(rec, "bad-poses", f"pose sidecar: {exc}")

    per_shape: dict[str, dict[str, int]] = {}
    for rec in manifest.records:
        per_shape.setdefault(rec.shape_id, {}).setdefault(rec.mask_type, 0)
        per_shape[rec.shape_id][rec.mask_type] += 1
    for shape_id, counts in per_shape.items():
        total = sum(counts.values())
        if total == MASKS_PER_SHAPE and any(counts.get(t.value, 0) != 10 for t in _TYPE_BY_BLOCK):
            issues.append(ValidationIssue(shape_id, -1, "type-imbalance",
                                          f"expected 10/10/10 masks per type, got {counts}"))
    return ValidationReport(checked=len(manifest.records), issues=issues)
