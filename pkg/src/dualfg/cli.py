"""Command-line entry point: ``dualfg run | gen | eval``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import PipelineConfig, load_config
from .io import find_indexed, read_mask
from .pipeline import compute_iou, read_report, run_pipeline
from .presets import PRESETS, preset
from .synthgen import load_scenario, write_sequence

log = logging.getLogger("dualfg")

__all__ = ["main", "build_parser", "evaluate"]


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    out = cfg.output
    if args.emit_masks:
        out = replace(out, emit_masks=True)
    if args.emit_overlays:
        out = replace(out, emit_overlays=True)
    if args.output:
        out = replace(out, directory=str(Path(args.output).resolve()))
    cfg = cfg.with_overrides(output=out)
    if args.input:
        cfg = cfg.with_overrides(input=replace(cfg.input, directory=str(Path(args.input).resolve())))
    if args.freeze_threshold:
        cfg = cfg.with_overrides(threshold=replace(cfg.threshold, mode="frozen"))
    if args.no_equalization:
        cfg = cfg.with_overrides(equalization=replace(cfg.equalization, enabled=False))
    if args.no_dehaze:
        cfg = cfg.with_overrides(dehaze=replace(cfg.dehaze, enabled=False))

    log.info("kernel backend: %s", kernels.BACKEND)
    reports = run_pipeline(cfg)
    hits = sum(r.detection is not None for r in reports)
    print(f"processed {len(reports)} frames, detections in {hits}; output in {cfg.output_dir}")
    return 0


def _cmd_gen(args) -> int:
    if (args.scenario is None) == (args.preset is None):
        raise ValueError("give exactly one of --scenario or --preset")
    s = load_scenario(args.scenario) if args.scenario else preset(args.preset)
    if args.seed is not None:
        s = replace(s, seed=args.seed)
    out = write_sequence(s, args.out)
    print(f"wrote {s.frames} frames to {out}")
    return 0


def _indexed_masks(directory: Path, patterns) -> dict[int, Path]:
    for sub in ("masks", "."):
        d = directory / sub
        if not d.is_dir():
            continue
        for pat in patterns:
            found = find_indexed(d, pat)
            if found:
                return found
    raise ValueError(f"no mask images matching {list(patterns)} under {directory}")


def evaluate(pred_dir, truth_dir, iou_hit: float = 0.5) -> dict:
    """IoU, detection-rate and latency metrics of predicted vs ground-truth masks.

    Predicted masks are ``detection_%05d.png`` (as written by ``run``) or
    ``mask_%05d.png``; truth masks are ``mask_%05d.png``. Either may sit in
    a ``masks/`` subdirectory. Frames are paired by index. Motion flags come
    from the truth ``manifest.json`` when present, and timing statistics from
    the prediction ``report.json`` when present.
    """
    pred_dir, truth_dir = Path(pred_dir), Path(truth_dir)
    pred = _indexed_masks(pred_dir, ("detection_%05d.png", "mask_%05d.png"))
    truth = _indexed_masks(truth_dir, ("mask_%05d.png",))
    common = sorted(set(pred) & set(truth))
    if not common:
        raise ValueError("prediction and truth share no frame indices")
    missing = sorted(set(truth) - set(pred))
    if missing:
        log.warning("%d truth frame(s) without prediction, first %d", len(missing), missing[0])

    flags = {}
    manifest = truth_dir / "manifest.json"
    if manifest.is_file():
        flags = {e["index"]: e["flag"] for e in json.loads(manifest.read_text())["frames"]}

    per_frame = []
    for i in common:
        p, t = read_mask(pred[i]), read_mask(truth[i])
        per_frame.append({"index": i, "iou": compute_iou(p, t), "detected": bool(p.any()),
                          "flag": flags.get(i)})
    ious = np.array([f["iou"] for f in per_frame])
    detected = np.array([f["detected"] for f in per_frame])
    res = {
        "frames": len(per_frame),
        "mean_iou": float(ious.mean()),
        "detection_rate": float(detected.mean()),
        "per_frame": per_frame,
    }
    if flags:
        static = np.array([f["flag"] == "static" for f in per_frame])
        nonstatic = ~static
        res["static_frames"] = int(static.sum())
        res["mean_iou_static"] = float(ious[static].mean()) if static.any() else None
        res["detection_rate_nonstatic"] = float(detected[nonstatic].mean()) if nonstatic.any() else None
        latency = None
        if static.any():
            first_static = per_frame[int(np.argmax(static))]["index"]
            for f in per_frame:
                if f["index"] >= first_static and f["flag"] == "static" and f["iou"] >= iou_hit:
                    latency = f["index"] - first_static
                    break
        res["latency_frames"] = latency
    report = pred_dir / "report.json"
    if report.is_file():
        _, reps = read_report(report)
        totals = np.array([r.timings_ms.get("total", np.nan) for r in reps], dtype=float)
        if np.isfinite(totals).any():
            res["timing_ms"] = {"mean": float(np.nanmean(totals)), "median": float(np.nanmedian(totals)),
                                "max": float(np.nanmax(totals))}
    return res


def _cmd_eval(args) -> int:
    res = evaluate(args.pred, args.truth, args.iou_hit)
    if args.json:
        json.dump(res, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
        return 0
    print(f"frames          {res['frames']}")
    print(f"mean IoU        {res['mean_iou']:.4f}")
    print(f"detection rate  {res['detection_rate']:.4f}")
    if "static_frames" in res:
        ms = res["mean_iou_static"]
        print(f"static frames   {res['static_frames']}")
        print(f"mean IoU static {'n/a' if ms is None else f'{ms:.4f}'}")
        lat = res["latency_frames"]
        print(f"latency         {'never' if lat is None else f'{lat} frames'} (IoU >= {args.iou_hit})")
    if "timing_ms" in res:
        t = res["timing_ms"]
        print(f"time per frame  mean {t['mean']:.2f} ms, median {t['median']:.2f} ms, max {t['max']:.2f} ms")
    if args.per_frame:
        for f in res["per_frame"]:
            print(f"{f['index']:6d} {f['iou']:.4f} {'det' if f['detected'] else '-':>3} {f['flag'] or ''}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dualfg", description="Static object detection on numbered frame sequences.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the detector over a frame directory")
    r.add_argument("--config", help="YAML config file (defaults apply when omitted)")
    r.add_argument("--input", help="override input.directory")
    r.add_argument("--output", help="override output.directory")
    r.add_argument("--emit-masks", action="store_true", help="write per-frame mask images")
    r.add_argument("--emit-overlays", action="store_true", help="write frames with the hull drawn in green")
    r.add_argument("--freeze-threshold", action="store_true",
                   help="fix the difference threshold at threshold.freeze_frame")
    r.add_argument("--no-equalization", action="store_true")
    r.add_argument("--no-dehaze", action="store_true")
    r.set_defaults(func=_cmd_run)

    g = sub.add_parser("gen", help="write a synthetic sequence with ground truth")
    g.add_argument("--scenario", help="YAML scenario file")
    g.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    g.add_argument("--seed", type=int, help="override the scenario seed")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=_cmd_gen)

    e = sub.add_parser("eval", help="score predicted masks against ground truth")
    e.add_argument("--pred", required=True, help="run output directory (or a mask directory)")
    e.add_argument("--truth", required=True, help="gen output directory (or a mask directory)")
    e.add_argument("--iou-hit", type=float, default=0.5, help="IoU that counts as found for latency")
    e.add_argument("--json", action="store_true", help="print the metrics as JSON")
    e.add_argument("--per-frame", action="store_true", help="also list per-frame IoU")
    e.set_defaults(func=_cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"dualfg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
