"""Dense representations: recency frames, voxel grids, channel stacking.

Builds the frame sequence for a moving body, shows how pixel values encode
recency, pools it down to feature resolution, and writes/reads the frame
container. Run with `python demos/02_dense_representations.py`.
"""

from pathlib import Path

import numpy as np

from evact.features import frames_to_features
from evact.representations import (build_frames, build_voxel_grid, downsample,
                                   fill_undefined, frames_to_array,
                                   read_frame_file, stack_channels,
                                   write_frame_file)
from evact.synthgen import SynthConfig, generate_clip

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

clip = generate_clip(SynthConfig(class_id=2, seed=3, noise_rate=0.2))
stream = clip.stream

# -- recency frames ----------------------------------------------------------
frames = build_frames(stream, dt=150_000, t_m=512_000)
print(f"{len(frames)} frames at 150 ms steps, memory window 512 ms")
frame = frames[len(frames) // 2]
defined = ~np.isnan(frame.values)
print(f"mid-clip frame: {defined.mean():.1%} of (pixel, polarity) cells "
      f"saw an event in the window")
print(f"defined values span [{np.nanmin(frame.values):.3f}, "
      f"{np.nanmax(frame.values):.3f}] (1.0 = just fired, 0.0 = window edge)")

# an ASCII glimpse of the positive-polarity channel, coarsened 8x
coarse = downsample(fill_undefined(frame, 0.0), 8)[:, :, 1]
ramp = " .:-=+*#%@"
print("\npositive-channel recency map (max-pooled 8x):")
for row in coarse:
    print("  " + "".join(ramp[min(int(v * (len(ramp) - 1) + 0.5), 9)] for v in row))

# -- voxel grid --------------------------------------------------------------
grid = build_voxel_grid(stream, b=5)
signed = int((stream.p == 1).sum()) - int((stream.p == 0).sum())
print(f"\n5-bin voxel grid total mass {grid.values.sum():+.6f} "
      f"(= #pos - #neg = {signed:+d})")
per_bin = np.abs(grid.values).sum(axis=(0, 1))
print("per-bin |mass|:", np.array2string(per_bin, precision=1))

# -- stacking with an auxiliary gray channel ---------------------------------
gray = [np.full(stream.geometry, k / (len(frames) - 1), dtype=np.float32)
        for k in range(len(frames) // 2)]   # e.g. an external reconstruction
stacked = stack_channels(frames, gray)
print(f"\nstacked {len(stacked)} three-channel frames "
      f"(2 recency + 1 gray at {len(gray)} frames, rate-matched)")

# -- container round trip and features ---------------------------------------
stack = frames_to_array(frames)
path = out_dir / "demo_clip.evf"
write_frame_file(path, stack, int(stream.t[0]), 150_000, 512_000, fill=0.0)
values, header = read_frame_file(path)
print(f"\nwrote {path.name}: N={header.n} H={header.h} W={header.w} C={header.c}")

seq = frames_to_features(values, pool_factor=10)
print(f"pooled features: {len(seq)} vectors of dim {seq.dim}")
