"""Image and manifest I/O plus the pair-based verification protocol.

Images are grayscale arrays with intensities in [0, 1].  The canonical
on-disk format is 8-bit binary PGM (P5); PNG is accepted as an optional
input format.  A pairs manifest is a UTF-8 CSV with one record per line::

    setA_dir,setB_dir,label

where label is ``matched`` or ``mismatched`` and each set directory holds
the images of one set, ordered lexicographically by file name.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MATCHED = "matched"
MISMATCHED = "mismatched"
LABELS = (MATCHED, MISMATCHED)

IMAGE_SUFFIXES = (".pgm", ".png")


@dataclass(frozen=True)
class ImageSet:
    id: str
    images: np.ndarray  # (l, H, W) float64 in [0, 1]

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.shape[0] < 1:
            raise ValueError("an image set needs at least one 2-D image")

    def __len__(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class PairSpec:
    set_a: Path
    set_b: Path
    label: str

    @property
    def is_matched(self) -> bool:
        return self.label == MATCHED


def load_image(path) -> np.ndarray:
    """Load an 8-bit grayscale PGM or PNG as a float array in [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        raw = _read_pgm(path)
    elif suffix == ".png":
        raw = _read_png(path)
    else:
        raise ValueError(f"unsupported image format: {path} (expected .pgm or .png)")
    return raw.astype(np.float64) / 255.0


def save_image(image: np.ndarray, path) -> None:
    """Write a [0, 1] grayscale image as binary 8-bit PGM.

    Values are quantized with round-half-away from zero so that
    load(save(load(p))) is the identity for any 8-bit PGM p.
    """
    path = Path(path)
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    if not np.all(np.isfinite(image)) or image.min() < 0 or image.max() > 1:
        raise ValueError("intensities must be finite and in [0, 1]")
    raw = np.floor(image * 255.0 + 0.5).astype(np.uint8)
    h, w = raw.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(raw.tobytes())


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError(f"truncated PGM header: {path}")
        if data[pos:pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (P5): {path}")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ValueError(f"malformed PGM header: {path}") from None
    if not (0 < maxval <= 255):
        raise ValueError(f"only 8-bit PGM supported (maxval {maxval}): {path}")
    pos += 1  # single whitespace byte after maxval
    pixels = data[pos:pos + w * h]
    if len(pixels) != w * h:
        raise ValueError(f"PGM pixel data truncated: {path}")
    raw = np.frombuffer(pixels, dtype=np.uint8).reshape(h, w)
    if maxval != 255:
        raw = np.floor(raw.astype(np.float64) * (255.0 / maxval) + 0.5).astype(np.uint8)
    return raw


def _read_png(path: Path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - pillow is a declared dep
        raise RuntimeError("PNG support requires pillow") from exc
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValueError(f"non-grayscale PNG not supported: {path} (mode {img.mode})")
        return np.asarray(img, dtype=np.uint8)


def load_image_set(directory, set_id: str | None = None) -> ImageSet:
    """Load every image in a directory, lexicographic file order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such image set directory: {directory}")
    files = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ValueError(f"image set directory is empty: {directory}")
    images = [load_image(p) for p in files]
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise ValueError(f"images in {directory} have mixed sizes: {sorted(shapes)}")
    return ImageSet(id=set_id or directory.name, images=np.stack(images))


def load_pairs_manifest(path, check_paths: bool = True) -> list[PairSpec]:
    """Parse a pairs manifest.  Set paths are resolved relative to the
    manifest's directory; malformed lines raise with their line number."""
    path = Path(path)
    base = path.parent
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 comma-separated "
                                 f"fields, got {len(fields)}")
            a, b, label = fields
            if label not in LABELS:
                raise ValueError(f"{path}:{lineno}: unknown label {label!r} "
                                 f"(expected one of {LABELS})")
            pa, pb = base / a, base / b
            if check_paths:
                for p in (pa, pb):
                    if not p.is_dir():
                        raise FileNotFoundError(f"{path}:{lineno}: set directory "
                                                f"does not exist: {p}")
            pairs.append(PairSpec(pa, pb, label))
    return pairs


def save_pairs_manifest(pairs: list[PairSpec], path) -> None:
    """Write a manifest with set paths relative to the manifest location."""
    path = Path(path)
    base = path.parent
    lines = []
    for p in pairs:
        a = Path(p.set_a).resolve().relative_to(base.resolve())
        b = Path(p.set_b).resolve().relative_to(base.resolve())
        lines.append(f"{a},{b},{p.label}\n")
    path.write_text("".join(lines), encoding="utf-8")


def manifest_counts(pairs: list[PairSpec]) -> tuple[int, int]:
    """(matched, mismatched) counts."""
    matched = sum(1 for p in pairs if p.is_matched)
    return matched, len(pairs) - matched


def translate_image(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Shift image content by (dx, dy) pixels, replicating border rows and
    columns.  Positive dx moves content right, positive dy moves it down."""
    h, w = image.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise ValueError("translation larger than image")
    padded = np.pad(image, ((abs(dy),) * 2, (abs(dx),) * 2), mode="edge")
    y0 = abs(dy) - dy
    x0 = abs(dx) - dx
    return padded[y0:y0 + h, x0:x0 + w].copy()
