"""Uncertainty quantification: Laplace posteriors, ensembles, calibration.

Trains a head plus a small Laplace ensemble, then compares how confident
each predictive is on in-distribution and corrupted (5x noise) inputs, and
renders reliability diagrams. Takes about a minute. Run with
`python demos/05_uncertainty_and_calibration.py`.
"""

from pathlib import Path

import numpy as np

from evact.bayesian import (bridge_predictive, ensemble_predict_batch,
                            fit_laplace, laplace_bridge, logit_gaussian,
                            logit_gaussian_batch, probit_predictive,
                            train_ensemble)
from evact.calibration import calibration_report, render_diagram
from evact.classifier import TrainConfig, predict_proba, train
from evact.events import time_surface_denoise
from evact.features import frames_to_features
from evact.representations import build_frames, downsample, frames_to_array
from evact.synthgen import SynthConfig, generate_clip

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)


def clip_features(class_id, seed, noise):
    clip = generate_clip(SynthConfig(class_id=class_id, seed=seed,
                                     noise_rate=noise))
    stream = time_surface_denoise(clip.stream, 10_000, 2)
    stack = frames_to_array(build_frames(stream, 150_000, 512_000))
    stack = np.where(np.isnan(stack), np.float32(0.0), stack)
    stack = np.stack([downsample(stack[i], 2) for i in range(len(stack))])
    return frames_to_features(stack, pool_factor=5, label=class_id)


def matrix(seqs):
    return (np.vstack([s.vectors for s in seqs]),
            np.concatenate([np.full(len(s), s.label) for s in seqs]))


print("building features...")
train_seqs = [clip_features(c, 1_000 + c * 100 + i, 0.5)
              for c in range(6) for i in range(12)]
x_in, y_in = matrix([clip_features(c, 90_000 + c * 100 + i, 0.5)
                     for c in range(6) for i in range(6)])
x_ood, y_ood = matrix([clip_features(c, 90_000 + c * 100 + i, 2.5)
                       for c in range(6) for i in range(6)])

cfg = TrainConfig(epochs=100, seed=0)
head = train(train_seqs, cfg)
posterior = fit_laplace(head, train_seqs, lam=1.0, mode="diag")
ensemble = train_ensemble(train_seqs, cfg, s=6, base_seed=0, laplace=True,
                          lam=1.0, mode="diag")

# -- one frame, all predictives ----------------------------------------------
f = x_ood[0]
mu, var = logit_gaussian(posterior, f)
print("\none corrupted frame, class probabilities:")
print("  map softmax     :", np.array2string(predict_proba(head, f[None])[0], precision=3))
print("  bridge tempered :", np.array2string(bridge_predictive(mu, var), precision=3))
print("  bridge raw      :", np.array2string(bridge_predictive(mu, var, 'raw'), precision=3))
print("  probit          :", np.array2string(probit_predictive(mu, var), precision=3))
print("  Dirichlet alpha :", np.array2string(laplace_bridge(mu, var).alpha, precision=3))

# -- calibration across methods ----------------------------------------------
methods = {
    "map": lambda x: predict_proba(head, x),
    "laplace": lambda x: bridge_predictive(*logit_gaussian_batch(posterior, x)),
    "ensemble": lambda x: ensemble_predict_batch(ensemble, x, "point"),
    "laplace-ensemble": lambda x: ensemble_predict_batch(ensemble, x, "bridge"),
}
print(f"\n{'method':<18}{'split':<8}{'acc':>7}{'conf':>7}{'ACE':>7}{'MCE':>7}")
for name, fn in methods.items():
    for split, (x, y) in (("in", (x_in, y_in)), ("ood", (x_ood, y_ood))):
        p = fn(x)
        report = calibration_report(p, y, m=10)
        acc = float((np.argmax(p, axis=1) == y).mean())
        conf = float(p.max(axis=1).mean())
        print(f"{name:<18}{split:<8}{acc:>7.3f}{conf:>7.3f}"
              f"{report.ace:>7.3f}{report.mce:>7.3f}")
        if split == "ood":
            svg, _ = render_diagram(report.diagram,
                                    out_dir / f"reliability_{name}.svg")
print(f"\nreliability diagrams written to {out_dir}/")
print("on corrupted data the map head stays confident while its accuracy")
print("drops; the Laplace ensemble pulls confidence back toward accuracy.")
