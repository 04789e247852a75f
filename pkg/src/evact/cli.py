"""Command-line pipeline: synth -> ingest -> frames/voxel/blobs ->
featurize -> train -> eval -> calibrate -> report, plus a throughput bench.

Every subcommand reads and writes only the documented file formats, takes
long options, accepts --config FILE (JSON) whose values lose to explicit
flags, and is deterministic given identical inputs and seeds. Per-clip
stages parallelize across clips with --workers; outputs do not depend on
the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bayesian, blobs as blobmod, calibration, classifier, synthgen
from .errors import (ConfigError, FormatError, ParseError, ToolkitError,
                     ValidationError)
from .events import (ManifestEntry, RoiRect, crop_roi, read_events,
                     read_manifest, refractory_filter, serialize_events,
                     time_surface_denoise, write_manifest)
from .features import frames_to_features, read_features, write_features
from .representations import (DEFAULT_DT, DEFAULT_T_M, DEFAULT_VOXEL_BINS,
                              build_frames, build_voxel_grid, downsample,
                              frames_to_array, read_frame_file,
                              write_frame_file)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING_FILE = 4
EXIT_DATA = 5
EXIT_UNEXPECTED = 1


def _add_common(parser):
    parser.add_argument("--config", help="JSON file of defaults (flags win)")


def _add_workers(parser):
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="parallel clip workers (outputs are worker-count independent)")


def _parse_geometry(text):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise ConfigError(f"geometry must look like 100x120, got {text!r}") from None


def _parse_int_list(text):
    return [int(v) for v in text.split(",") if v != ""]


def _map_jobs(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _load_sequences(manifest_path):
    manifest_path = Path(manifest_path)
    entries = read_manifest(manifest_path)
    return [read_features(manifest_path.parent / e.path) for e in entries], entries


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args):
    synthgen.generate_dataset(
        args.out,
        classes=tuple(_parse_int_list(args.classes)),
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        noise_rate=args.noise_rate,
        train_seed_base=args.train_seed_base,
        test_seed_base=args.test_seed_base,
        workers=args.workers,
        duration=args.duration,
        geometry=_parse_geometry(args.geometry),
    )
    print(f"wrote dataset to {args.out}")
    return EXIT_OK


def cmd_ingest(args):
    stream = read_events(args.infile)
    if args.roi:
        x0, y0, x1, y1 = _parse_int_list(args.roi)
        stream = crop_roi(stream, RoiRect(x0, y0, x1, y1))
    if args.refractory > 0:
        stream = refractory_filter(stream, args.refractory)
    if args.denoise_tau > 0:
        stream = time_surface_denoise(stream, args.denoise_tau, args.denoise_kmin)
    with open(args.out, "wb") as f:
        f.write(serialize_events(stream, args.out_format))
    print(f"{args.infile}: {len(stream)} events -> {args.out}")
    return EXIT_OK


def _frames_job(job):
    (clips_dir, out_dir, entry_path, dt, t_m, fill, factor,
     refractory_us, denoise_tau, denoise_kmin) = job
    stream = read_events(Path(clips_dir) / entry_path)
    if refractory_us > 0:
        stream = refractory_filter(stream, refractory_us)
    if denoise_tau > 0:
        stream = time_surface_denoise(stream, denoise_tau, denoise_kmin)
    frames = build_frames(stream, dt, t_m)
    stack = frames_to_array(frames)
    if fill is not None:
        stack = np.where(np.isnan(stack), np.float32(fill), stack)
    if factor > 1:
        stack = np.stack([downsample(stack[i], factor) for i in range(len(stack))]) \
            if len(stack) else stack
    name = Path(entry_path).stem + ".evf"
    write_frame_file(Path(out_dir) / name, stack, int(stream.t[0]), dt, t_m)
    return name


def cmd_frames(args):
    manifest_path = Path(args.manifest)
    entries = read_manifest(manifest_path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fill = None if args.keep_nan else args.fill
    if args.keep_nan and args.downsample > 1:
        raise ConfigError("--keep-nan cannot be combined with --downsample")
    jobs = [(str(manifest_path.parent), str(out_dir), e.path,
             args.dt, args.t_m, fill, args.downsample,
             args.refractory, args.denoise_tau, args.denoise_kmin)
            for e in entries]
    names = _map_jobs(_frames_job, jobs, args.workers)
    write_manifest(out_dir / "manifest.csv", [
        ManifestEntry(name, e.label, e.subject_id, e.config_id)
        for name, e in zip(names, entries)])
    print(f"wrote {len(names)} frame files to {out_dir}")
    return EXIT_OK


def cmd_voxel(args):
    stream = read_events(args.infile)
    grid = build_voxel_grid(stream, args.bins)
    write_frame_file(args.out, grid.values.astype(np.float32)[None, ...],
                     grid.t0, 0, grid.tn - grid.t0)
    total = float(grid.values.sum())
    print(f"{args.infile}: {len(stream)} events -> {args.bins}-bin grid "
          f"(total mass {total:g}) -> {args.out}")
    return EXIT_OK


def _blobs_job(job):
    (clips_dir, out_dir, entry_path, label, refractory_us,
     alpha, r_min, n_samples, w_min, tau_w) = job
    stream = read_events(Path(clips_dir) / entry_path)
    if refractory_us > 0:
        stream = refractory_filter(stream, refractory_us)
    cfg = blobmod.BlobTrackerConfig(alpha, r_min, n_samples, w_min, tau_w)
    tracked = blobmod.track(stream, cfg)
    seq = blobmod.blob_feature_sequence(tracked, cfg, Path(entry_path).stem, label)
    name = Path(entry_path).stem + ".ftr"
    write_features(Path(out_dir) / name, seq)
    return name, len(tracked)


def cmd_blobs(args):
    manifest_path = Path(args.manifest)
    entries = read_manifest(manifest_path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(str(manifest_path.parent), str(out_dir), e.path, e.label,
             args.refractory, args.alpha, args.r_min, args.n_samples,
             args.w_min, args.tau_w) for e in entries]
    results = _map_jobs(_blobs_job, jobs, args.workers)
    write_manifest(out_dir / "manifest.csv", [
        ManifestEntry(name, e.label, e.subject_id, e.config_id)
        for (name, _), e in zip(results, entries)])
    empty = sum(1 for _, n in results if n == 0)
    print(f"wrote blob features for {len(results)} clips to {out_dir} "
          f"({empty} clips without blobs)")
    return EXIT_OK


def _featurize_job(job):
    frames_dir, out_dir, entry_path, label, pool = job
    values, _ = read_frame_file(Path(frames_dir) / entry_path)
    seq = frames_to_features(values, pool, Path(entry_path).stem, label)
    name = Path(entry_path).stem + ".ftr"
    write_features(Path(out_dir) / name, seq)
    return name


def cmd_featurize(args):
    manifest_path = Path(args.manifest)
    entries = read_manifest(manifest_path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(str(manifest_path.parent), str(out_dir), e.path, e.label, args.pool)
            for e in entries]
    names = _map_jobs(_featurize_job, jobs, args.workers)
    write_manifest(out_dir / "manifest.csv", [
        ManifestEntry(name, e.label, e.subject_id, e.config_id)
        for name, e in zip(names, entries)])
    print(f"wrote {len(names)} feature files to {out_dir}")
    return EXIT_OK


def cmd_train(args):
    seqs, _ = _load_sequences(args.manifest)
    cfg = classifier.TrainConfig(
        learning_rate=args.learning_rate, weight_decay=args.weight_decay,
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
        class_weights="balanced" if args.balanced else None)
    val_seqs = None
    if args.val_manifest:
        val_seqs, _ = _load_sequences(args.val_manifest)
    if args.ensemble_dir:
        ens = bayesian.train_ensemble(
            seqs, cfg, s=args.ensemble_size, base_seed=args.seed,
            laplace=args.laplace, lam=args.prior_precision, mode=args.cov_mode)
        bayesian.write_ensemble(args.ensemble_dir, ens)
        print(f"trained {len(ens)} members -> {args.ensemble_dir}"
              + (" (with Laplace posteriors)" if args.laplace else ""))
        return EXIT_OK
    head = classifier.train(seqs, cfg, val_seqs=val_seqs, log_path=args.log)
    classifier.write_model(args.out, head)
    msg = f"trained head (K={head.k}, dim={head.dim}) -> {args.out}"
    if args.laplace:
        post = bayesian.fit_laplace(head, seqs, args.prior_precision, args.cov_mode)
        posterior_path = args.posterior_out or f"{args.out}.lap"
        bayesian.write_posterior(posterior_path, post)
        msg += f" + posterior -> {posterior_path}"
    print(msg)
    return EXIT_OK


def _clip_predictions(head, seqs):
    """(mode, accumulated) predictions per clip; NO_BLOBS for empty clips."""
    modes, accums = [], []
    for seq in seqs:
        if len(seq) == 0:
            modes.append(blobmod.NO_BLOBS)
            accums.append(blobmod.NO_BLOBS)
        else:
            modes.append(classifier.predict_clip_mode(head, seq))
            accums.append(classifier.predict_clip_accumulated(head, seq))
    return np.array(modes), np.array(accums)


def evaluate_clips(head, seqs, static_classes=()):
    """Per-class and aggregate clip accuracy under both clip rules."""
    labels = np.array([s.label for s in seqs])
    if np.any(labels == None):  # noqa: E711  (object comparison intended)
        raise ConfigError("evaluation requires labeled sequences")
    modes, accums = _clip_predictions(head, seqs)
    classes = sorted(set(labels.tolist()))
    rows = []
    per_class = {}
    for c in classes:
        mask = labels == c
        acc_mode = float((modes[mask] == c).mean())
        acc_accum = float((accums[mask] == c).mean())
        per_class[c] = (acc_mode, acc_accum)
        rows.append(("class", c, int(mask.sum()), acc_mode, acc_accum))

    def aggregate(cls_set):
        sel = [per_class[c] for c in classes if c in cls_set]
        if not sel:
            return None
        arr = np.array(sel)
        return float(arr[:, 0].mean()), float(arr[:, 1].mean())

    static = set(static_classes)
    motion = [c for c in classes if c not in static]
    agg_motion = aggregate(motion)
    agg_static = aggregate(static)
    if agg_motion and static:
        rows.append(("motion", "", len(motion), *agg_motion))
    if agg_static:
        rows.append(("static", "", len(static & set(classes)), *agg_static))
    overall = aggregate(classes)
    rows.append(("overall", "", len(classes), *overall))
    fallback = int((modes == blobmod.NO_BLOBS).sum())
    return rows, overall, fallback


def cmd_eval(args):
    head = classifier.read_model(args.model)
    seqs, _ = _load_sequences(args.manifest)
    static = set(_parse_int_list(args.static_classes)) if args.static_classes else set()
    rows, overall, fallback = evaluate_clips(head, seqs, static)

    name_of = dict(enumerate(synthgen.CLASS_NAMES))
    print(f"{'group':<10}{'class':<22}{'clips':>6}{'mode':>8}{'accum':>8}")
    for kind, cls, n, am, aa in rows:
        label = f"{cls} {name_of.get(cls, '')}".strip() if kind == "class" else f"avg ({n} classes)"
        print(f"{kind:<10}{label:<22}{n:>6}{am:>8.3f}{aa:>8.3f}")
    headline = overall[0] if args.clip_rule == "mode" else overall[1]
    print(f"overall Acc@1 ({args.clip_rule} rule): {headline:.4f}")
    if fallback:
        print(f"fallback clips (no features): {fallback}")

    if args.out:
        lines = ["row_type,class_id,n,acc_mode,acc_accum"]
        for kind, cls, n, am, aa in rows:
            lines.append(f"{kind},{cls},{n},{am:.6f},{aa:.6f}")
        lines.append(f"fallback,,{fallback},,")
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def predict_method(method, x, model=None, posterior=None, ensemble=None,
                   bridge_variant="tempered"):
    """Per-frame probabilities for one calibration method."""
    if method == "map":
        return classifier.predict_proba(model, x)
    if method == "laplace":
        mu, var = bayesian.logit_gaussian_batch(posterior, x)
        return bayesian.bridge_predictive(mu, var, bridge_variant)
    if method == "ensemble":
        return bayesian.ensemble_predict_batch(ensemble, x, "point")
    if method == "laplace-ensemble":
        return bayesian.ensemble_predict_batch(ensemble, x, "bridge", bridge_variant)
    raise ConfigError(f"unknown method {method!r}")


def cmd_calibrate(args):
    seqs, _ = _load_sequences(args.manifest)
    x = np.vstack([s.vectors for s in seqs if len(s)])
    labels = np.concatenate([np.full(len(s), s.label) for s in seqs if len(s)])
    model = classifier.read_model(args.model) if args.model else None
    posterior = bayesian.read_posterior(args.posterior) if args.posterior else None
    ensemble = bayesian.read_ensemble(args.ensemble_dir) if args.ensemble_dir else None
    if args.method == "map" and model is None:
        raise ConfigError("--method map requires --model")
    if args.method == "laplace" and posterior is None:
        raise ConfigError("--method laplace requires --posterior")
    if args.method in ("ensemble", "laplace-ensemble") and ensemble is None:
        raise ConfigError(f"--method {args.method} requires --ensemble-dir")

    probs = predict_method(args.method, x, model, posterior, ensemble,
                           args.bridge_variant)
    report = calibration.calibration_report(probs, labels, args.bins)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    svg, csv_path = calibration.render_diagram(report.diagram,
                                               out_dir / f"reliability_{args.method}.svg")
    calibration.write_report(report, out_dir / f"calibration_{args.method}.txt", svg.name)
    print(f"method={args.method} ace={report.ace:.4f} mce={report.mce:.4f} "
          f"bins={report.diagram.m} nonempty={report.diagram.m_plus}")
    print(f"wrote {svg}, {csv_path}")
    return EXIT_OK


def cmd_report(args):
    sections = []
    if args.eval:
        sections.append(f"== evaluation ({args.eval})\n" + Path(args.eval).read_text())
    for cal in args.calibration or []:
        sections.append(f"== calibration ({cal})\n" + Path(cal).read_text())
    text = "\n".join(sections) if sections else "(no inputs)\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def bench_frames(n_events=2_000_000, geometry=(480, 640), duration=2_000_000,
                 dt=DEFAULT_DT, t_m=DEFAULT_T_M, seed=0):
    """Time build_frames on a uniform synthetic stream; returns events/s."""
    from .events import make_stream
    h, w = geometry
    rng = np.random.default_rng(seed)
    t = np.sort(rng.integers(0, duration, n_events))
    stream = make_stream((h, w), t,
                         rng.integers(0, w, n_events),
                         rng.integers(0, h, n_events),
                         rng.integers(0, 2, n_events))
    start = time.perf_counter()
    frames = build_frames(stream, dt, t_m)
    elapsed = time.perf_counter() - start
    return n_events / elapsed, len(frames), elapsed


def cmd_bench(args):
    rate, n_frames, elapsed = bench_frames(
        args.events, _parse_geometry(args.geometry), args.duration,
        args.dt, args.t_m, args.seed)
    print(f"events: {args.events}")
    print(f"frames: {n_frames}")
    print(f"elapsed_s: {elapsed:.4f}")
    print(f"events_per_second: {rate:.0f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser plumbing
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evact", description="event-stream activity recognition pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", default="0,1,2,3,4,5")
    p.add_argument("--train-per-class", type=int, default=50)
    p.add_argument("--test-per-class", type=int, default=20)
    p.add_argument("--noise-rate", type=float, default=0.5)
    p.add_argument("--train-seed-base", type=int, default=1_000)
    p.add_argument("--test-seed-base", type=int, default=900_000)
    p.add_argument("--duration", type=int, default=2_500_000)
    p.add_argument("--geometry", default="100x120")
    _add_workers(p)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse, validate and filter one event file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--out-format", default="packed-binary",
                   choices=["packed-binary", "csv"])
    p.add_argument("--roi", help="crop to x0,y0,x1,y1 before filtering")
    p.add_argument("--refractory", type=int, default=0,
                   help="refractory window in us (0 disables)")
    p.add_argument("--denoise-tau", type=int, default=0,
                   help="neighbor-support window in us (0 disables)")
    p.add_argument("--denoise-kmin", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("frames", help="build recency frames for every clip")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dt", type=int, default=DEFAULT_DT)
    p.add_argument("--t-m", type=int, default=DEFAULT_T_M)
    p.add_argument("--fill", type=float, default=0.0)
    p.add_argument("--keep-nan", action="store_true",
                   help="store NaN for undefined pixels instead of filling")
    p.add_argument("--downsample", type=int, default=1)
    p.add_argument("--refractory", type=int, default=0,
                   help="refractory window in us (0 disables)")
    p.add_argument("--denoise-tau", type=int, default=0,
                   help="neighbor-support window in us (0 disables)")
    p.add_argument("--denoise-kmin", type=int, default=1)
    _add_workers(p)
    _add_common(p)
    p.set_defaults(func=cmd_frames)

    p = sub.add_parser("voxel", help="build a voxel grid for one clip")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=DEFAULT_VOXEL_BINS)
    _add_common(p)
    p.set_defaults(func=cmd_voxel)

    p = sub.add_parser("blobs", help="track blobs and export their features")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--refractory", type=int, default=5_000)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--r-min", type=float, default=50.0)
    p.add_argument("--n-samples", type=int, default=100)
    p.add_argument("--w-min", type=float, default=1.0)
    p.add_argument("--tau-w", type=float, default=500_000.0)
    _add_workers(p)
    _add_common(p)
    p.set_defaults(func=cmd_blobs)

    p = sub.add_parser("featurize", help="pool and flatten frame files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool", type=int, default=5)
    _add_workers(p)
    _add_common(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train the softmax head (or an ensemble)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default="model.smx")
    p.add_argument("--val-manifest")
    p.add_argument("--log", help="training log CSV path")
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--balanced", action="store_true",
                   help="class weights inversely proportional to class counts")
    p.add_argument("--laplace", action="store_true",
                   help="also fit a Laplace posterior")
    p.add_argument("--posterior-out")
    p.add_argument("--prior-precision", type=float, default=1.0)
    p.add_argument("--cov-mode", default="auto", choices=["auto", "full", "diag"])
    p.add_argument("--ensemble-dir",
                   help="train an ensemble into this directory instead")
    p.add_argument("--ensemble-size", type=int, default=bayesian.DEFAULT_ENSEMBLE_SIZE)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="clip-level accuracy report")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--static-classes", default="4,5",
                   help="comma list of static class ids ('' for none)")
    p.add_argument("--clip-rule", default="mode", choices=["mode", "accum"])
    p.add_argument("--out", help="CSV report path")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate", help="reliability diagram, ACE and MCE")
    p.add_argument("--method", required=True,
                   choices=["map", "laplace", "ensemble", "laplace-ensemble"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--model")
    p.add_argument("--posterior")
    p.add_argument("--ensemble-dir")
    p.add_argument("--bridge-variant", default="tempered",
                   choices=["tempered", "raw"])
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", help="combine stage reports into one file")
    p.add_argument("--eval")
    p.add_argument("--calibration", nargs="*")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("bench", help="frame-building throughput")
    p.add_argument("--events", type=int, default=2_000_000)
    p.add_argument("--geometry", default="480x640")
    p.add_argument("--duration", type=int, default=2_000_000)
    p.add_argument("--dt", type=int, default=DEFAULT_DT)
    p.add_argument("--t-m", type=int, default=DEFAULT_T_M)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def _flag_given(argv, dest):
    flag = "--" + dest.replace("_", "-")
    return any(a == flag or a.startswith(flag + "=") for a in argv)


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            print(f"error: config file not found: {args.config}", file=sys.stderr)
            return EXIT_MISSING_FILE
        except json.JSONDecodeError as exc:
            print(f"error: bad config file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        valid = set(vars(args))
        unknown = set(overrides) - valid
        if unknown:
            print(f"error: unknown config keys {sorted(unknown)}", file=sys.stderr)
            return EXIT_CONFIG
        # config values fill in anything not given explicitly on the line
        for key, value in overrides.items():
            if not _flag_given(argv, key):
                setattr(args, key, value)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, FormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
