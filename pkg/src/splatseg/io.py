"""File formats: Gaussian PLY scenes, instance-ID rasters, camera JSON.

* Scenes are binary little-endian PLY using the de-facto splatting vertex
  layout (x,y,z, scale_0..2 as logs, rot_0..3, opacity as a logit,
  f_dc_0..2 as the DC spherical-harmonic band). Higher SH bands are
  ignored. Labels persist as an extra ``uint instance_id`` property, so
  scene plus labels stay one artifact.
* Masks are 16-bit grayscale PNG or binary PGM (P5, maxval 65535), pixel
  value = instance ID. 8-bit inputs are accepted and widened.
* Cameras are a JSON list of {id, width, height, fx, fy, cx, cy,
  world_to_camera} with the transform as 16 row-major floats.

Loads are deterministic (same bytes, same arrays) and the PLY round trip
is bit-exact: the original vertex records are retained on the scene and
re-emitted verbatim when saving labels.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, ContractError, DataError, FormatError
from .geometry import Camera
from .scene import GaussianScene, InstanceMask2D, LabelAssignment, ViewSet, validate_mask

SH_C0 = 0.28209479177387814

REQUIRED_PLY_PROPERTIES = (
    "x",
    "y",
    "z",
    "scale_0",
    "scale_1",
    "scale_2",
    "rot_0",
    "rot_1",
    "rot_2",
    "rot_3",
    "opacity",
    "f_dc_0",
    "f_dc_1",
    "f_dc_2",
)

_PLY_TO_DTYPE = {
    "char": "i1",
    "int8": "i1",
    "uchar": "u1",
    "uint8": "u1",
    "short": "<i2",
    "int16": "<i2",
    "ushort": "<u2",
    "uint16": "<u2",
    "int": "<i4",
    "int32": "<i4",
    "uint": "<u4",
    "uint32": "<u4",
    "float": "<f4",
    "float32": "<f4",
    "double": "<f8",
    "float64": "<f8",
}
_DTYPE_TO_PLY = {
    "i1": "char",
    "u1": "uchar",
    "i2": "short",
    "u2": "ushort",
    "i4": "int",
    "u4": "uint",
    "f4": "float",
    "f8": "double",
}


def _read_ply_header(fh) -> tuple[int, np.dtype, list[str]]:
    """Parse the vertex element's layout; returns (count, dtype, comments)."""

    def next_line() -> str:
        raw = fh.readline()
        if not raw:
            raise FormatError("unexpected end of PLY header")
        return raw.decode("ascii", errors="replace").strip()

    if next_line() != "ply":
        raise FormatError("not a PLY file (missing 'ply' magic)")
    if next_line() != "format binary_little_endian 1.0":
        raise FormatError("PLY must be format binary_little_endian 1.0")

    comments: list[str] = []
    count = None
    fields: list[tuple[str, str]] = []
    in_vertex = False
    while True:
        line = next_line()
        if line == "end_header":
            break
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "comment":
            comments.append(line[len("comment ") :] if len(line) > 8 else "")
        elif parts[0] == "element":
            if parts[1] == "vertex":
                if count is not None:
                    raise FormatError("duplicate vertex element")
                count = int(parts[2])
                in_vertex = True
            else:
                if count is None:
                    raise FormatError("vertex must be the first PLY element")
                in_vertex = False  # trailing elements are ignored
        elif parts[0] == "property":
            if not in_vertex:
                continue
            if parts[1] == "list":
                raise FormatError("list properties are not supported")
            ply_type, name = parts[1], parts[2]
            if ply_type not in _PLY_TO_DTYPE:
                raise FormatError(f"unsupported PLY property type {ply_type!r}")
            if any(n == name for n, _ in fields):
                raise FormatError(f"duplicate PLY property {name!r}")
            fields.append((name, _PLY_TO_DTYPE[ply_type]))
    if count is None:
        raise FormatError("PLY has no vertex element")
    if not fields:
        raise FormatError("PLY vertex element has no properties")
    return count, np.dtype(fields), comments


def _read_ply_vertices(path) -> tuple[np.ndarray, list[str]]:
    with open(path, "rb") as fh:
        count, dtype, comments = _read_ply_header(fh)
        data = fh.read(count * dtype.itemsize)
    if len(data) < count * dtype.itemsize:
        raise FormatError(
            f"PLY truncated: expected {count * dtype.itemsize} payload bytes, "
            f"got {len(data)}"
        )
    return np.frombuffer(data, dtype=dtype, count=count).copy(), comments


def _write_ply(path, records: np.ndarray, comments: list[str]) -> None:
    lines = ["ply", "format binary_little_endian 1.0"]
    lines += [f"comment {c}" for c in comments]
    lines.append(f"element vertex {len(records)}")
    for name in records.dtype.names:
        base = records.dtype[name].str.lstrip("<>=|")
        ply_type = _DTYPE_TO_PLY.get(base)
        if ply_type is None:
            raise ContractError(f"cannot serialize dtype {base!r} to PLY")
        lines.append(f"property {ply_type} {name}")
    lines.append("end_header")
    payload = np.ascontiguousarray(records)
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(payload.tobytes())


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def load_scene(path) -> GaussianScene:
    """Load a Gaussian scene from PLY, applying the standard activations:
    exp on scales, sigmoid on opacity logits, DC band to RGB via
    ``0.5 + SH_C0 * f_dc`` clamped to [0, 1], quaternion normalization.

    Raises :class:`FormatError` for malformed files or missing properties
    and :class:`DataError` for non-finite values (naming the primitive).
    """
    records, _ = _read_ply_vertices(path)
    for name in REQUIRED_PLY_PROPERTIES:
        if name not in records.dtype.names:
            raise FormatError(f"PLY missing required property {name!r}")

    def column(*names) -> np.ndarray:
        return np.stack(
            [records[n].astype(np.float64) for n in names], axis=1
        ) if len(names) > 1 else records[names[0]].astype(np.float64)

    stacked = np.stack(
        [records[n].astype(np.float64) for n in REQUIRED_PLY_PROPERTIES], axis=-1
    )
    finite = np.isfinite(stacked).all(axis=-1) if len(records) else np.ones(0, bool)
    if len(records) and not finite.all():
        bad = int(np.argmin(finite))
        raise DataError(f"non-finite value in primitive {bad}")

    positions = column("x", "y", "z")
    scales = np.exp(column("scale_0", "scale_1", "scale_2"))
    rotations = column("rot_0", "rot_1", "rot_2", "rot_3")
    norms = np.linalg.norm(rotations, axis=1)
    if len(records) and norms.min() < 1e-12:
        raise DataError(f"zero-norm quaternion in primitive {int(np.argmin(norms))}")
    rotations = rotations / norms[:, None] if len(records) else rotations
    opacities = _sigmoid(column("opacity"))
    colors = np.clip(0.5 + SH_C0 * column("f_dc_0", "f_dc_1", "f_dc_2"), 0.0, 1.0)

    scene = GaussianScene(
        positions=positions.reshape(-1, 3),
        scales=scales.reshape(-1, 3),
        rotations=rotations.reshape(-1, 4),
        opacities=np.atleast_1d(opacities),
        colors=colors.reshape(-1, 3),
        raw=records,
    )
    scene.validate()
    return scene


def _canonical_records(scene: GaussianScene) -> np.ndarray:
    """Vertex records for a scene that was never loaded from disk,
    inverting the activations into the standard float32 layout."""
    n = scene.count
    dtype = np.dtype([(name, "<f4") for name in REQUIRED_PLY_PROPERTIES])
    records = np.zeros(n, dtype=dtype)
    records["x"], records["y"], records["z"] = scene.positions.T.astype(np.float32)
    logs = np.log(scene.scales)
    for i in range(3):
        records[f"scale_{i}"] = logs[:, i]
    for i in range(4):
        records[f"rot_{i}"] = scene.rotations[:, i]
    op = np.clip(scene.opacities, 1e-7, 1.0 - 1e-7)
    records["opacity"] = np.log(op / (1.0 - op))
    fdc = (scene.colors - 0.5) / SH_C0
    for i in range(3):
        records[f"f_dc_{i}"] = fdc[:, i]
    return records


def _provenance_comments(provenance: dict[str, str]) -> list[str]:
    comments = [f"{k} {v}" for k, v in sorted(provenance.items())]
    # A timestamp would break byte-identical re-runs, so it is only written
    # when the caller pins one via SOURCE_DATE_EPOCH (reproducible-builds
    # convention).
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        stamp = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        comments.append(f"timestamp {stamp.isoformat()}")
    return comments


def save_scene(scene: GaussianScene, path) -> None:
    """Write a scene to PLY (original records when available)."""
    records = scene.raw if scene.raw is not None else _canonical_records(scene)
    _write_ply(path, records, [])


def save_labels(assignment: LabelAssignment, scene: GaussianScene, path) -> None:
    """Write the scene's PLY augmented with a ``uint instance_id`` property.

    Every original vertex record is re-emitted verbatim, so a round trip
    preserves all stored attributes bit for bit; provenance is carried as
    header comments.
    """
    assignment.validate(scene)
    base = scene.raw if scene.raw is not None else _canonical_records(scene)
    names = [n for n in base.dtype.names if n != "instance_id"]
    dtype = np.dtype([(n, base.dtype[n].str) for n in names] + [("instance_id", "<u4")])
    records = np.zeros(len(base), dtype=dtype)
    for n in names:
        records[n] = base[n]
    records["instance_id"] = np.asarray(assignment.labels, dtype=np.uint32)
    _write_ply(path, records, _provenance_comments(assignment.provenance))


def load_labels(path) -> LabelAssignment:
    """Read a label assignment back from a labeled PLY.

    Raises :class:`ContractError` when the file has no ``instance_id``
    property (i.e. the label stage never ran on it).
    """
    records, comments = _read_ply_vertices(path)
    if "instance_id" not in (records.dtype.names or ()):
        raise ContractError(
            "PLY has no instance_id property; run the label stage first"
        )
    labels = records["instance_id"].astype(np.int64)
    provenance: dict[str, str] = {}
    for c in comments:
        key, _, value = c.partition(" ")
        if key:
            provenance[key] = value
    assignment = LabelAssignment(
        labels=labels,
        num_instances=int(labels.max()) if len(labels) else 0,
        provenance=provenance,
    )
    assignment.validate()
    return assignment


def save_labels_text(assignment: LabelAssignment, path) -> None:
    """Plain-text sidecar: one instance ID per line, primitive order."""
    with open(path, "w") as fh:
        for label in np.asarray(assignment.labels):
            fh.write(f"{int(label)}\n")


def save_mask(mask: InstanceMask2D, path) -> None:
    """Write an instance mask as PGM (``.pgm``) or 16-bit PNG (``.png``)."""
    mask = validate_mask(mask)
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        h, w = mask.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
            fh.write(mask.astype(">u2").tobytes())
    elif suffix == ".png":
        Image.fromarray(mask).save(path)
    else:
        raise FormatError(f"unsupported mask extension {suffix!r} (use .pgm or .png)")


def _load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise FormatError("not a binary PGM (P5) file")

    # Header tokens may be separated by any whitespace and '#' comments.
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError as exc:
            raise FormatError(f"bad PGM header token {data[start:pos]!r}") from exc
    pos += 1  # single whitespace after maxval
    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive")
    if maxval == 255:
        arr = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
        return arr.reshape(height, width).astype(np.uint16)
    if maxval == 65535:
        arr = np.frombuffer(data, dtype=">u2", count=width * height, offset=pos)
        return arr.reshape(height, width).astype(np.uint16)
    raise FormatError(f"unsupported PGM maxval {maxval} (expected 255 or 65535)")


def load_mask(path) -> InstanceMask2D:
    """Read an instance mask from PGM or PNG.

    8-bit rasters are widened to 16 bits; bit depths beyond 16 and color
    images are rejected.
    """
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return _load_pgm(path)
    if suffix == ".png":
        with Image.open(path) as img:
            if img.mode == "L":
                return np.asarray(img, dtype=np.uint8).astype(np.uint16)
            if img.mode in ("I;16", "I"):
                arr = np.asarray(img)
                if arr.min() < 0 or arr.max() > 65535:
                    raise FormatError("PNG values exceed the 16-bit ID range")
                return arr.astype(np.uint16)
            raise FormatError(
                f"unsupported PNG mode {img.mode!r} (need 8- or 16-bit grayscale)"
            )
    raise FormatError(f"unsupported mask extension {suffix!r} (use .pgm or .png)")


def find_mask_files(directory, ids: list[int]) -> list[Path]:
    """Resolve ``mask_{id}.pgm`` (or ``.png``) per view ID.

    Raises :class:`FormatError` naming the first missing file.
    """
    directory = Path(directory)
    paths = []
    for view_id in ids:
        for candidate in (
            directory / f"mask_{view_id}.pgm",
            directory / f"mask_{view_id}.png",
        ):
            if candidate.exists():
                paths.append(candidate)
                break
        else:
            raise FormatError(f"mask file not found: {directory / f'mask_{view_id}.pgm'}")
    return paths


_CAMERA_KEYS = {"id", "width", "height", "fx", "fy", "cx", "cy", "world_to_camera"}


def load_cameras(path) -> ViewSet:
    """Load a camera list from JSON (schema in the module docstring).

    Raises :class:`ConfigError` on schema violations, mixed resolutions,
    duplicate IDs, an empty list, or invalid transforms.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid camera JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise ConfigError("camera file must be a JSON list")
    if not doc:
        raise ConfigError("T >= 1 required: camera list is empty")
    cameras = []
    ids = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"camera {i} must be an object")
        unknown = set(entry) - _CAMERA_KEYS
        if unknown:
            raise ConfigError(f"camera {i} has unknown keys: {sorted(unknown)}")
        missing = _CAMERA_KEYS - set(entry)
        if missing:
            raise ConfigError(f"camera {i} is missing keys: {sorted(missing)}")
        w2c = np.asarray(entry["world_to_camera"], dtype=np.float64)
        if w2c.shape != (16,):
            raise ConfigError(f"camera {i}: world_to_camera must hold 16 floats")
        cameras.append(
            Camera(
                width=int(entry["width"]),
                height=int(entry["height"]),
                fx=float(entry["fx"]),
                fy=float(entry["fy"]),
                cx=float(entry["cx"]),
                cy=float(entry["cy"]),
                world_to_camera=w2c.reshape(4, 4),
                id=int(entry["id"]),
            )
        )
        ids.append(int(entry["id"]))
    if len(set(ids)) != len(ids):
        raise ConfigError("camera IDs must be unique")
    if len({(c.width, c.height) for c in cameras}) != 1:
        raise ConfigError("cameras must share one resolution")
    return ViewSet(cameras=cameras, ids=ids)


def save_cameras(views: ViewSet, path) -> None:
    """Write a ViewSet back to the JSON schema, row-major transforms."""
    doc = []
    for view_id, cam in views:
        doc.append(
            {
                "id": view_id,
                "width": cam.width,
                "height": cam.height,
                "fx": cam.fx,
                "fy": cam.fy,
                "cx": cam.cx,
                "cy": cam.cy,
                "world_to_camera": [float(x) for x in cam.world_to_camera.ravel()],
            }
        )
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


__all__ = [
    "SH_C0",
    "REQUIRED_PLY_PROPERTIES",
    "load_scene",
    "save_scene",
    "save_labels",
    "load_labels",
    "save_labels_text",
    "load_mask",
    "save_mask",
    "find_mask_files",
    "load_cameras",
    "save_cameras",
]
