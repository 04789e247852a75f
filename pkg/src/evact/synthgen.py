"""Deterministic synthetic labeled event clips for desk-scale experiments.

Six activity classes: four motion patterns (translate left/right, vertical
oscillation, local jitter) and two near-static body shapes that only emit
sparse periodic edge flicker, mimicking the residual micro-motion of a
resting subject. Darkness-grade background noise is Poisson per pixel.

Signal events come from a simple event-camera model: a soft-edged body is
rendered on a log-intensity field at a fixed step; a pixel fires when its
log intensity drifts beyond a contrast threshold from its per-pixel
reference, which then resets. Everything is driven by one seeded
generator, so a clip is a pure function of its config (byte-identical
regeneration).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .events import Clip, ManifestEntry, make_stream, write_events, write_manifest

CLASS_NAMES = (
    "translate-left",
    "translate-right",
    "oscillate-vertical",
    "local-jitter",
    "static-slow",
    "static-fast",
)
MOTION_CLASSES = (0, 1, 2, 3)
STATIC_CLASSES = (4, 5)

# the two static classes share one resting-body shape and differ only in
# their micro-motion (edge flicker) frequency, which per-frame spatial
# features see only weakly; this is what makes them mutually confusable
STATIC_FLICKER_HZ = {4: 1.0, 5: 2.2}


@dataclass
class SynthConfig:
    class_id: int
    seed: int
    duration: int = 2_500_000          # us
    geometry: tuple = (100, 120)       # (H, W)
    noise_rate: float = 0.5            # events / pixel / second
    speed_px_s: float = 32.0
    amplitude_px: float = 18.0
    body_radius_px: float = 10.0
    # event-camera model
    threshold: float = 0.25            # log-intensity contrast threshold
    background: float = 0.1
    contrast: float = 0.9
    edge_width_px: float = 2.0
    render_step_us: int = 5_000
    # static-class micro-motion (flicker_hz=None resolves per class)
    flicker_hz: float | None = None
    flicker_amp: float = 0.22
    jitter_step_px: float = 1.2

    def __post_init__(self):
        if self.class_id not in range(len(CLASS_NAMES)):
            raise ConfigError(f"class_id must be in 0..{len(CLASS_NAMES) - 1}")
        if self.duration <= 0 or self.noise_rate < 0:
            raise ConfigError("duration must be > 0 and noise_rate >= 0")
        if self.threshold <= 0 or self.render_step_us <= 0:
            raise ConfigError("threshold and render_step_us must be > 0")


def trajectory(cfg: SynthConfig, t_us) -> tuple[np.ndarray, np.ndarray]:
    """Body center at time t (closed form; jitter paths are rng-driven and
    not available here)."""
    h, w = cfg.geometry
    t_s = np.asarray(t_us, dtype=np.float64) / 1e6
    margin = cfg.body_radius_px + cfg.edge_width_px + 2.0
    cy = np.full_like(t_s, h / 2.0)
    if cfg.class_id == 0:      # translate-left
        cx = (w - margin) - cfg.speed_px_s * t_s
    elif cfg.class_id == 1:    # translate-right
        cx = margin + cfg.speed_px_s * t_s
    elif cfg.class_id == 2:    # oscillate-vertical
        cx = np.full_like(t_s, w / 2.0)
        cy = h / 2.0 + cfg.amplitude_px * np.sin(2.0 * np.pi * 0.8 * t_s)
    elif cfg.class_id == 3:
        raise ConfigError("local-jitter trajectory is rng-driven")
    else:                      # static classes
        cx = np.full_like(t_s, w / 2.0)
    return cx, cy


def _body_mask(cfg: SynthConfig, cx: float, cy: float, grid_y, grid_x) -> np.ndarray:
    """Soft body occupancy in [0, 1] with a linear edge ramp."""
    ew = cfg.edge_width_px
    if cfg.class_id in STATIC_CLASSES:   # resting body: horizontal bar
        dx = np.abs(grid_x - cx) - 2.6 * cfg.body_radius_px
        dy = np.abs(grid_y - cy) - 0.8 * cfg.body_radius_px
        d = np.maximum(dx, dy)
    else:
        d = np.hypot(grid_x - cx, grid_y - cy) - cfg.body_radius_px
    return np.clip(0.5 - d / ew, 0.0, 1.0)


def _body_extent(cfg: SynthConfig) -> tuple[float, float]:
    """Half extents (ey, ex) of the body support including the edge ramp."""
    pad = cfg.edge_width_px / 2.0 + 1.0
    if cfg.class_id in STATIC_CLASSES:
        return 0.8 * cfg.body_radius_px + pad, 2.6 * cfg.body_radius_px + pad
    return cfg.body_radius_px + pad, cfg.body_radius_px + pad


def generate_clip(cfg: SynthConfig) -> Clip:
    """Render one labeled clip: signal events along the class trajectory
    plus uniform Poisson background noise, time-sorted."""
    h, w = cfg.geometry
    rng = np.random.default_rng(cfg.seed)
    grid_y, grid_x = np.mgrid[0:h, 0:w].astype(np.float64)

    n_steps = cfg.duration // cfg.render_step_us
    static = cfg.class_id in STATIC_CLASSES
    ey, ex = _body_extent(cfg)

    if cfg.class_id == 3:
        # mean-reverting jitter path around the frame center
        off = np.zeros((n_steps + 1, 2))
        kicks = rng.normal(0.0, cfg.jitter_step_px, (n_steps, 2))
        for i in range(n_steps):
            off[i + 1] = 0.9 * off[i] + kicks[i]

    flicker_hz = cfg.flicker_hz
    phase0 = 0.0
    if static:
        if flicker_hz is None:
            flicker_hz = STATIC_FLICKER_HZ[cfg.class_id]
        phase0 = rng.uniform(0.0, 2.0 * math.pi)

    def center_at(k):
        if cfg.class_id == 3:
            return w / 2.0 + off[k, 0], h / 2.0 + off[k, 1]
        cx_a, cy_a = trajectory(cfg, k * cfg.render_step_us)
        return float(cx_a), float(cy_a)

    def masked_lum(k, box):
        y0, y1, x0, x1 = box
        cx, cy = center_at(k)
        mask = _body_mask(cfg, cx, cy, grid_y[y0:y1, x0:x1], grid_x[y0:y1, x0:x1])
        if static:
            # periodic flicker confined to the soft edge band
            band = 4.0 * mask * (1.0 - mask)
            phase = math.sin(
                phase0 + 2.0 * math.pi * flicker_hz * k * cfg.render_step_us / 1e6)
            mask = np.clip(mask + cfg.flicker_amp * phase * band, 0.0, 1.0)
        return np.log(cfg.background + cfg.contrast * mask)

    def bbox(k):
        cx, cy = center_at(k)
        return (max(0, int(cy - ey)), min(h, int(cy + ey) + 2),
                max(0, int(cx - ex)), min(w, int(cx + ex) + 2))

    sig_t, sig_x, sig_y, sig_p = [], [], [], []
    log_ref = masked_lum(0, (0, h, 0, w))
    prev_box = bbox(0)
    for k in range(1, n_steps + 1):
        t_k = k * cfg.render_step_us
        # the field only changes where the body was or is
        cur_box = bbox(k)
        y0 = min(prev_box[0], cur_box[0])
        y1 = max(prev_box[1], cur_box[1])
        x0 = min(prev_box[2], cur_box[2])
        x1 = max(prev_box[3], cur_box[3])
        prev_box = cur_box
        lum = masked_lum(k, (y0, y1, x0, x1))
        diff = lum - log_ref[y0:y1, x0:x1]
        fy, fx = np.nonzero(np.abs(diff) >= cfg.threshold)
        if fy.size:
            jit = rng.integers(0, cfg.render_step_us, fy.size)
            sig_t.append(t_k - cfg.render_step_us + jit)
            sig_x.append(fx + x0)
            sig_y.append(fy + y0)
            sig_p.append((diff[fy, fx] > 0).astype(np.uint8))
            log_ref[fy + y0, fx + x0] = lum[fy, fx]

    if sig_t:
        t = np.concatenate(sig_t)
        x = np.concatenate(sig_x)
        y = np.concatenate(sig_y)
        p = np.concatenate(sig_p)
    else:
        t = x = y = p = np.empty(0, dtype=np.int64)

    n_noise = rng.poisson(cfg.noise_rate * (cfg.duration / 1e6) * h * w)
    if n_noise:
        t = np.concatenate([t, rng.integers(0, cfg.duration, n_noise)])
        x = np.concatenate([x, rng.integers(0, w, n_noise)])
        y = np.concatenate([y, rng.integers(0, h, n_noise)])
        p = np.concatenate([p, rng.integers(0, 2, n_noise).astype(np.uint8)])

    stream = make_stream((h, w), t, x, y, p, sort=True)
    return Clip(stream, cfg.class_id, f"s{cfg.seed:06d}",
                f"synth-noise{cfg.noise_rate:g}")


def signal_event_count(cfg: SynthConfig) -> int:
    """Number of signal (non-noise) events a config produces."""
    quiet = SynthConfig(**{**asdict(cfg), "noise_rate": 0.0})
    return len(generate_clip(quiet).stream)


# ---------------------------------------------------------------------------
# dataset emission
# ---------------------------------------------------------------------------


def generate_dataset(out_dir, classes=tuple(range(len(CLASS_NAMES))),
                     train_per_class: int = 50, test_per_class: int = 20,
                     noise_rate: float = 0.5, train_seed_base: int = 1_000,
                     test_seed_base: int = 900_000, workers: int = 1,
                     **cfg_overrides):
    """Write clips (packed binary) plus train/test manifests.

    The split is by seed range: train clip i of class c uses seed
    train_seed_base + c * per_class + i, and likewise for test, so the two
    splits never share a generator seed.
    """
    n_cls = len(classes)
    if abs(train_seed_base - test_seed_base) < n_cls * max(train_per_class, test_per_class):
        raise ConfigError("train and test seed ranges overlap")
    out_dir = Path(out_dir)
    (out_dir / "clips").mkdir(parents=True, exist_ok=True)

    specs = []
    for split, per_class, base in (("train", train_per_class, train_seed_base),
                                   ("test", test_per_class, test_seed_base)):
        for ci, cls in enumerate(classes):
            for i in range(per_class):
                seed = base + ci * per_class + i
                cfg = SynthConfig(class_id=cls, seed=seed,
                                  noise_rate=noise_rate, **cfg_overrides)
                name = f"clips/{split}_c{cls}_{i:03d}.evs"
                specs.append((split, name, cfg))

    def emit(spec):
        split, name, cfg = spec
        clip = generate_clip(cfg)
        write_events(out_dir / name, clip.stream)
        return split, ManifestEntry(name, clip.label, clip.subject_id, clip.config_id)

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_emit_spec, [(str(out_dir),) + s for s in specs]))
    else:
        results = [emit(s) for s in specs]

    manifests = {}
    for split in ("train", "test"):
        entries = [e for s, e in results if s == split]
        path = out_dir / f"manifest_{split}.csv"
        write_manifest(path, entries)
        manifests[split] = path
    meta = {
        "classes": list(classes),
        "class_names": [CLASS_NAMES[c] for c in classes],
        "motion_classes": [c for c in classes if c in MOTION_CLASSES],
        "static_classes": [c for c in classes if c in STATIC_CLASSES],
        "train_per_class": train_per_class,
        "test_per_class": test_per_class,
        "noise_rate": noise_rate,
        "train_seed_base": train_seed_base,
        "test_seed_base": test_seed_base,
        "overrides": {k: list(v) if isinstance(v, tuple) else v
                      for k, v in cfg_overrides.items()},
    }
    (out_dir / "dataset.json").write_text(json.dumps(meta, indent=2) + "\n")
    return manifests


def _emit_spec(packed):
    out_dir, split, name, cfg = packed
    clip = generate_clip(cfg)
    write_events(Path(out_dir) / name, clip.stream)
    return split, ManifestEntry(name, clip.label, clip.subject_id, clip.config_id)
