"""Event streams: parsing, validation, and preprocessing filters.

Generates a noisy synthetic clip, then walks the standard cleanup chain:
crop to a region of interest, refractory suppression, neighbor-support
denoising. Run with `python demos/01_event_streams.py`.
"""

import numpy as np

from evact.events import (RoiRect, crop_roi, parse_events, refractory_filter,
                          serialize_events, time_surface_denoise)
from evact.synthgen import SynthConfig, generate_clip

# -- a tiny stream by hand, via the CSV wire format ------------------------
csv_text = b"""4 6
100 1 1 1
250 1 1 0
2600 4 2 1
"""
stream = parse_events(csv_text)
print(f"parsed {len(stream)} events on a {stream.geometry} sensor:")
for event in stream:
    print("  ", event)

blob = serialize_events(stream)            # packed binary, bit-exact round trip
assert serialize_events(parse_events(blob)) == blob
print(f"packed-binary form is {len(blob)} bytes\n")

# -- a realistic noisy clip -------------------------------------------------
cfg = SynthConfig(class_id=1, seed=7, noise_rate=2.0)   # translate-right, noisy
clip = generate_clip(cfg)
raw = clip.stream
print(f"synthetic clip: {len(raw)} events over "
      f"{(raw.t[-1] - raw.t[0]) / 1e6:.2f}s on {raw.geometry}")

cropped = crop_roi(raw, RoiRect(10, 10, 110, 90))
print(f"after ROI crop to 100x80:         {len(cropped):>7} events")

refr = refractory_filter(cropped, 5_000)
print(f"after 5 ms refractory filter:     {len(refr):>7} events")

den1 = time_surface_denoise(cropped, tau_d=10_000, k_min=1)
den2 = time_surface_denoise(cropped, tau_d=10_000, k_min=2)
print(f"after denoise (k_min=1):          {len(den1):>7} events")
print(f"after denoise (k_min=2):          {len(den2):>7} events")

signal = generate_clip(SynthConfig(class_id=1, seed=7, noise_rate=0.0)).stream
print(f"\nfor reference, the noiseless twin has {len(signal)} signal events;")
print("k_min=2 removes nearly all darkness noise while keeping the bursts")
print("that real motion produces.")
