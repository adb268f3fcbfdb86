"""Subcommand front-end wiring the library into batch pipelines.

Every parameter resolves as flag > config file > built-in default; config
files are TOML or JSON mapping subcommand names to parameter tables, plus
an optional "common" table (currently: jobs). Exit codes: 0 success,
1 usage, 2 I/O, 3 data. Each filesystem-writing command emits a JSON run
report (inputs, resolved params, outputs, warnings, timestamp).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import shlex
import subprocess
import sys
import tempfile
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analytics, io_formats, metrics
from .depth_order import (
    DepthOrderMap,
    compose_order_map,
    compute_reference_ranks,
    depth_order_inference,
    non_intersection_regions,
    rank_by_depth,
)
from .dilation import DilationParams, frame_character_mask, frame_dilation_maps
from .errors import (
    ArgumentError,
    CondGuideError,
    FormatError,
    WindowGenerationError,
)
from .flow import (
    BlockMatchParams,
    estimate_flow_blockmatch,
    flow_guidance_inference,
    flow_guidance_training,
)
from .metrics import FeatureSet, MetricReport
from .pose import RenderParams, render_pose_map
from .raster import DepthConvention
from .scheduler import DEFAULT_STRIDE, DEFAULT_WINDOW, plan_windows

_CONVENTIONS = {
    "larger-closer": DepthConvention.LARGER_IS_CLOSER,
    "smaller-closer": DepthConvention.SMALLER_IS_CLOSER,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


class _WarningCollector:
    """Collects warning messages across worker threads."""

    def __init__(self):
        self.messages: list[str] = []
        self._lock = threading.Lock()

    def __enter__(self):
        self._ctx = warnings.catch_warnings()
        self._ctx.__enter__()
        warnings.simplefilter("always")
        collector = self

        def _show(message, category, filename, lineno, file=None, line=None):
            with collector._lock:
                collector.messages.append(f"{category.__name__}: {message}")

        warnings.showwarning = _show
        return self

    def __exit__(self, *exc):
        return self._ctx.__exit__(*exc)

    def sorted_messages(self) -> list[str]:
        return sorted(self.messages)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ArgumentError(f"config file not found: {p}")
    text = p.read_bytes()
    try:
        if p.suffix.lower() == ".json":
            return json.loads(text)
        import tomli

        return tomli.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ArgumentError(f"cannot parse config {p}: {exc}") from exc


def _resolve(args, config, command, key, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    section = config.get(command, {})
    if isinstance(section, dict) and key in section:
        return section[key]
    common = config.get("common", {})
    if isinstance(common, dict) and key in common:
        return common[key]
    return default


def _resolve_jobs(args, config, command) -> int:
    env_default = os.environ.get("CONDGUIDE_JOBS")
    default = int(env_default) if env_default else 1
    jobs = int(_resolve(args, config, command, "jobs", default))
    if jobs < 1:
        raise ArgumentError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _run_tasks(jobs, tasks):
    if jobs <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(lambda t: t(), tasks))


def _dilation_params(args, config, command) -> DilationParams:
    return DilationParams(
        confidence_threshold=float(
            _resolve(args, config, command, "conf_threshold", 0.3)
        ),
        line_thickness_512=float(_resolve(args, config, command, "thickness", 4.0)),
        joint_radius_512=float(_resolve(args, config, command, "joint_radius", 4.0)),
        rho_relative=float(_resolve(args, config, command, "rho_relative", 0.06)),
        rho_floor_px=float(_resolve(args, config, command, "rho_floor", 3.0)),
    )


def _render_params(args, config, command) -> RenderParams:
    return DilationParams(
        confidence_threshold=float(
            _resolve(args, config, command, "conf_threshold", 0.3)
        ),
        line_thickness_512=float(_resolve(args, config, command, "thickness", 4.0)),
        joint_radius_512=float(_resolve(args, config, command, "joint_radius", 4.0)),
    ).render_params()


def _clip_name(args, config, command, pose_path: Path) -> str:
    return str(_resolve(args, config, command, "clip", pose_path.stem))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sorted_files(directory: Path, suffix: str) -> list[Path]:
    if not directory.is_dir():
        raise FileNotFoundError(f"directory not found: {directory}")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == suffix)
    if not files:
        raise FormatError(f"no {suffix} files in {directory}")
    return files


def _write_report(args, report: dict, default_path: Path | None) -> None:
    path = Path(args.report) if getattr(args, "report", None) else default_path
    if path is None:
        return
    report = dict(report)
    report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    io_formats.atomic_write_bytes(
        path, json.dumps(report, sort_keys=True, indent=2).encode()
    )


def _report_skeleton(command: str, inputs: list[str], params: dict) -> dict:
    return {
        "command": command,
        "inputs": sorted(inputs),
        "params": params,
        "outputs": [],
        "warnings": [],
    }


# ---------------------------------------------------------------------------
# Subcommands


def cmd_dilate(args, config, warns) -> None:
    pose_path = Path(args.pose)
    seq = io_formats.read_pose_file(pose_path)
    params = _dilation_params(args, config, "dilate")
    clip = _clip_name(args, config, "dilate", pose_path)
    jobs = _resolve_jobs(args, config, "dilate")
    out = _out_dir(args)

    def make_task(i, frame):
        def task():
            outputs = []
            maps = frame_dilation_maps(frame, seq.topology, params)
            for character, mask in zip(frame.characters, maps):
                name = f"{clip}_{i:05}_{character.character_id}.png"
                io_formats.write_mask_png(mask, out / name)
                outputs.append(name)
            return outputs
        return task

    results = _run_tasks(jobs, [make_task(i, f) for i, f in enumerate(seq.frames)])
    report = _report_skeleton("dilate", [str(pose_path)], _params_dict(params, jobs=jobs, clip=clip))
    report["outputs"] = sorted(n for chunk in results for n in chunk)
    report["warnings"] = warns.sorted_messages()
    _write_report(args, report, out / "run_report.json")


def _params_dict(params: DilationParams, **extra) -> dict:
    d = {
        "confidence_threshold": params.confidence_threshold,
        "line_thickness_512": params.line_thickness_512,
        "joint_radius_512": params.joint_radius_512,
        "rho_relative": params.rho_relative,
        "rho_floor_px": params.rho_floor_px,
    }
    d.update(extra)
    return d


def cmd_flowmap(args, config, warns) -> None:
    mode = args.mode
    pose_path = Path(args.pose)
    seq = io_formats.read_pose_file(pose_path)
    params = _dilation_params(args, config, "flowmap")
    clip = _clip_name(args, config, "flowmap", pose_path)
    jobs = _resolve_jobs(args, config, "flowmap")
    out = _out_dir(args)
    inputs = [str(pose_path)]

    masks = _run_tasks(
        jobs,
        [
            (lambda f=f: frame_character_mask(f, seq.topology, params))
            for f in seq.frames
        ],
    )

    outputs = []
    if mode == "infer":
        def make_task(i):
            def task():
                gmap = flow_guidance_inference(masks[i])
                name = f"{clip}_{i:05}.cggm"
                io_formats.write_cggm(gmap, out / name)
                return name
            return task

        outputs = _run_tasks(jobs, [make_task(i) for i in range(len(seq.frames))])
    else:
        n = len(seq.frames)
        if n < 2:
            raise ArgumentError("training mode needs at least 2 pose frames")
        if bool(args.frames) == bool(args.flow):
            raise ArgumentError("training mode needs exactly one of --frames/--flow")
        if args.frames:
            frame_files = _sorted_files(Path(args.frames), ".png")
            if len(frame_files) != n:
                raise FormatError(
                    f"{len(frame_files)} frame images for {n} pose frames"
                )
            inputs += [str(p) for p in frame_files]
            block = BlockMatchParams(
                block=int(_resolve(args, config, "flowmap", "block", 8)),
                search=int(_resolve(args, config, "flowmap", "search", 4)),
            )
            images = _run_tasks(
                jobs, [(lambda p=p: io_formats.read_image(p)) for p in frame_files]
            )

            def make_task(i):
                def task():
                    flow = estimate_flow_blockmatch(images[i - 1], images[i], block)
                    gmap = flow_guidance_training(flow, masks[i])
                    name = f"{clip}_{i:05}.cggm"
                    io_formats.write_cggm(gmap, out / name)
                    return name
                return task

            outputs = _run_tasks(jobs, [make_task(i) for i in range(1, n)])
        else:
            flow_files = _sorted_files(Path(args.flow), ".cgfl")
            if len(flow_files) != n - 1:
                raise FormatError(
                    f"{len(flow_files)} flow files for {n} pose frames "
                    f"(expected {n - 1})"
                )
            inputs += [str(p) for p in flow_files]

            def make_task(i):
                def task():
                    flow = io_formats.read_cgfl(flow_files[i - 1])
                    gmap = flow_guidance_training(flow, masks[i])
                    name = f"{clip}_{i:05}.cggm"
                    io_formats.write_cggm(gmap, out / name)
                    return name
                return task

            outputs = _run_tasks(jobs, [make_task(i) for i in range(1, n)])

    report = _report_skeleton(
        "flowmap", inputs, _params_dict(params, mode=mode, jobs=jobs, clip=clip)
    )
    report["outputs"] = sorted(outputs)
    report["warnings"] = warns.sorted_messages()
    _write_report(args, report, out / "run_report.json")


def _load_depth(path: Path, fmt: str, scale: float, convention: DepthConvention):
    if fmt == "pfm":
        return io_formats.read_depth_pfm(path, convention)
    return io_formats.read_depth_png16(path, scale, convention)


def cmd_depthorder(args, config, warns) -> None:
    mode = args.mode
    pose_path = Path(args.pose)
    seq = io_formats.read_pose_file(pose_path)
    params = _dilation_params(args, config, "depthorder")
    clip = _clip_name(args, config, "depthorder", pose_path)
    jobs = _resolve_jobs(args, config, "depthorder")
    out = _out_dir(args)
    convention = _CONVENTIONS[
        _resolve(args, config, "depthorder", "convention", "larger-closer")
    ]
    fmt = _resolve(args, config, "depthorder", "depth_format", "pfm")
    scale = float(_resolve(args, config, "depthorder", "depth_scale", 1.0))
    on_empty = (
        "push_back"
        if _resolve(args, config, "depthorder", "on_empty", "error") == "push-back"
        else "error"
    )
    inputs = [str(pose_path)]
    outputs = []

    if mode == "train":
        if not args.depth:
            raise ArgumentError("training mode needs --depth DIR")
        depth_files = _sorted_files(Path(args.depth), ".pfm" if fmt == "pfm" else ".png")
        if len(depth_files) != len(seq.frames):
            raise FormatError(
                f"{len(depth_files)} depth files for {len(seq.frames)} pose frames"
            )
        inputs += [str(p) for p in depth_files]

        def make_task(i):
            def task():
                frame = seq.frames[i]
                depth = _load_depth(depth_files[i], fmt, scale, convention)
                if (depth.height, depth.width) != (frame.height, frame.width):
                    raise FormatError(
                        f"depth {depth.width}x{depth.height} does not match "
                        f"frame {frame.width}x{frame.height}"
                    )
                names = []
                if frame.characters:
                    maps = frame_dilation_maps(frame, seq.topology, params)
                    regions = non_intersection_regions(maps)
                    ids = [c.character_id for c in frame.characters]
                    ranks = rank_by_depth(regions, depth, ids, on_empty)
                    order = compose_order_map(maps, ranks, ids)
                else:
                    ranks = []
                    order = DepthOrderMap(
                        np.zeros((frame.height, frame.width), dtype=np.float32)
                    )
                base = f"{clip}_{i:05}"
                io_formats.write_pfm(order, out / f"{base}.pfm")
                io_formats.write_order_map_png(order, out / f"{base}.png")
                names += [f"{base}.pfm", f"{base}.png"]
                return names, ranks
            return task

        results = _run_tasks(jobs, [make_task(i) for i in range(len(seq.frames))])
        outputs = [n for names, _ in results for n in names]
        per_frame_ranks = [ranks for _, ranks in results]
        io_formats.write_ranks_json(per_frame_ranks, out / f"{clip}_ranks.json")
        outputs.append(f"{clip}_ranks.json")
    else:
        if not args.ref_pose or not args.ref_depth:
            raise ArgumentError(
                "inference mode needs reference ranks: --ref-pose and --ref-depth"
            )
        ref_seq = io_formats.read_pose_file(Path(args.ref_pose))
        ref_depth = _load_depth(Path(args.ref_depth), fmt, scale, convention)
        inputs += [str(args.ref_pose), str(args.ref_depth)]
        reference = compute_reference_ranks(
            ref_seq.frames[0], ref_depth, ref_seq.topology, params, on_empty
        )

        def make_task(i):
            def task():
                order = depth_order_inference(
                    reference, seq.frames[i], seq.topology, params
                )
                base = f"{clip}_{i:05}"
                io_formats.write_pfm(order, out / f"{base}.pfm")
                io_formats.write_order_map_png(order, out / f"{base}.png")
                return [f"{base}.pfm", f"{base}.png"]
            return task

        results = _run_tasks(jobs, [make_task(i) for i in range(len(seq.frames))])
        outputs = [n for names in results for n in names]
        io_formats.write_ranks_json([reference], out / f"{clip}_reference_ranks.json")
        outputs.append(f"{clip}_reference_ranks.json")

    report = _report_skeleton(
        "depthorder",
        inputs,
        _params_dict(
            params,
            mode=mode,
            jobs=jobs,
            clip=clip,
            convention=convention.value,
            depth_format=fmt,
            depth_scale=scale,
            on_empty=on_empty,
        ),
    )
    report["outputs"] = sorted(outputs)
    report["warnings"] = warns.sorted_messages()
    _write_report(args, report, out / "run_report.json")


def cmd_refpose(args, config, warns) -> None:
    pose_path = Path(args.pose)
    seq = io_formats.read_pose_file(pose_path)
    render = _render_params(args, config, "refpose")
    clip = _clip_name(args, config, "refpose", pose_path)
    out = _out_dir(args)
    outputs = []
    if args.all:
        for i, frame in enumerate(seq.frames):
            name = f"{clip}_{i:05}.png"
            io_formats.write_image(render_pose_map(frame, seq.topology, render), out / name)
            outputs.append(name)
    else:
        index = int(_resolve(args, config, "refpose", "frame", 0))
        if not (0 <= index < len(seq.frames)):
            raise ArgumentError(
                f"frame {index} out of range [0, {len(seq.frames)})"
            )
        name = f"{clip}_refpose.png"
        io_formats.write_image(
            render_pose_map(seq.frames[index], seq.topology, render), out / name
        )
        outputs.append(name)
    report = _report_skeleton(
        "refpose",
        [str(pose_path)],
        {
            "confidence_threshold": render.confidence_threshold,
            "line_thickness_512": render.line_thickness_512,
            "joint_radius_512": render.joint_radius_512,
            "clip": clip,
            "all": bool(args.all),
        },
    )
    report["outputs"] = sorted(outputs)
    report["warnings"] = warns.sorted_messages()
    _write_report(args, report, out / "run_report.json")


def cmd_analyze(args, config, warns) -> None:
    manifest_path = Path(args.manifest)
    clips = io_formats.read_manifest(manifest_path)
    params = _dilation_params(args, config, "analyze")
    jobs = _resolve_jobs(args, config, "analyze")
    threshold = float(_resolve(args, config, "analyze", "flow_threshold", analytics.STABLE_FLOW_THRESHOLD))
    pairwise = bool(_resolve(args, config, "analyze", "pairwise", False))
    block = BlockMatchParams(
        block=int(_resolve(args, config, "analyze", "block", 8)),
        search=int(_resolve(args, config, "analyze", "search", 4)),
    )
    out = _out_dir(args)

    def analyze_clip(entry):
        seq = io_formats.read_pose_file(entry.pose_path)
        per_frame_maps = [
            frame_dilation_maps(f, seq.topology, params) for f in seq.frames
        ]
        _, occlusion_mean = analytics.video_occlusion_rate(per_frame_maps, pairwise)
        counts = [len(f.characters) for f in seq.frames]
        char_count_mode = min(set(counts), key=lambda c: (-counts.count(c), c))
        flow_mean = None
        union_masks = [
            frame_character_mask(f, seq.topology, params) for f in seq.frames
        ]
        if entry.flow_dir is not None:
            flow_files = _sorted_files(entry.flow_dir, ".cgfl")
            flows = [io_formats.read_cgfl(p) for p in flow_files]
            flow_mean = analytics.video_background_flow_mean(
                flows, union_masks[1 : len(flows) + 1]
            )
        elif entry.frames_dir is not None:
            frame_files = _sorted_files(entry.frames_dir, ".png")
            images = [io_formats.read_image(p) for p in frame_files]
            flows = [
                estimate_flow_blockmatch(images[i - 1], images[i], block)
                for i in range(1, len(images))
            ]
            flow_mean = analytics.video_background_flow_mean(
                flows, union_masks[1 : len(flows) + 1]
            )
        return entry.clip_id, flow_mean, char_count_mode, occlusion_mean

    rows = _run_tasks(jobs, [(lambda e=e: analyze_clip(e)) for e in clips])

    csv_lines = ["clip_id,flow_mean,char_count_mode,occlusion_mean"]
    for clip_id, flow_mean, char_count_mode, occlusion_mean in rows:
        flow_cell = "" if flow_mean is None else f"{flow_mean:.6f}"
        csv_lines.append(
            f"{clip_id},{flow_cell},{char_count_mode},{occlusion_mean:.6f}"
        )
    io_formats.atomic_write_bytes(out / "analysis.csv", ("\n".join(csv_lines) + "\n").encode())

    flow_values = [r[1] for r in rows if r[1] is not None]
    occ_values = [r[3] for r in rows]
    edges = [float(e) for e in (args.occlusion_edges or analytics.OCCLUSION_QUARTILE_EDGES)]
    hist_obj = {
        "flow_mean": _hist_json(analytics.histogram(flow_values, [threshold])) if flow_values else None,
        "occlusion": _hist_json(analytics.histogram(occ_values, edges)) if occ_values else None,
    }
    io_formats.atomic_write_bytes(
        out / "histograms.json",
        json.dumps(hist_obj, sort_keys=True, indent=2).encode(),
    )

    report = _report_skeleton(
        "analyze",
        [str(manifest_path)],
        _params_dict(
            params,
            jobs=jobs,
            flow_threshold=threshold,
            pairwise=pairwise,
            block=block.block,
            search=block.search,
            occlusion_edges=edges,
        ),
    )
    report["outputs"] = ["analysis.csv", "histograms.json"]
    report["warnings"] = warns.sorted_messages()
    _write_report(args, report, out / "run_report.json")


def _hist_json(hist: analytics.Histogram) -> dict:
    return {
        "edges": list(hist.edges),
        "counts": list(hist.counts),
        "proportions": None if hist.proportions is None else list(hist.proportions),
    }


def cmd_windows(args, config, warns) -> None:
    total = int(args.total)
    window = int(_resolve(args, config, "windows", "window", DEFAULT_WINDOW))
    stride = int(_resolve(args, config, "windows", "stride", DEFAULT_STRIDE))
    plan = plan_windows(total, window, stride)
    obj = {
        "total": plan.total,
        "window": window,
        "stride": stride,
        "windows": [[w.start, w.length] for w in plan.windows],
        "coverage": list(plan.coverage),
    }
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    if getattr(args, "report", None):
        report = _report_skeleton(
            "windows", [], {"total": total, "window": window, "stride": stride}
        )
        report["outputs"] = []
        report["warnings"] = warns.sorted_messages()
        _write_report(args, report, None)


def cmd_metrics(args, config, warns) -> None:
    real_dir, gen_dir = Path(args.real), Path(args.gen)
    real_files = _sorted_files(real_dir, ".png")
    gen_files = _sorted_files(gen_dir, ".png")
    if len(real_files) != len(gen_files):
        raise FormatError(
            f"{len(real_files)} real frames vs {len(gen_files)} generated"
        )
    size = _resolve(args, config, "metrics", "standardize", None)
    l1s, psnrs, ssims = [], [], []
    for rp, gp in zip(real_files, gen_files):
        a = io_formats.read_image(rp)
        b = io_formats.read_image(gp)
        if size is not None:
            a = metrics.standardize(a, int(size))
            b = metrics.standardize(b, int(size))
        l1s.append(metrics.l1_error(a, b))
        psnrs.append(metrics.psnr(a, b))
        ssims.append(metrics.ssim(a, b))
    frechet = None
    if args.features:
        real_vectors = io_formats.read_cgfs(args.features[0])
        gen_vectors = io_formats.read_cgfs(args.features[1])
        frechet = metrics.frechet_distance(
            FeatureSet(real_vectors, source=str(args.features[0])),
            FeatureSet(gen_vectors, source=str(args.features[1])),
        )
    report_obj = MetricReport(
        l1=float(np.mean(l1s)),
        psnr=float(np.mean(psnrs)),
        ssim=float(np.mean(ssims)),
        frechet=frechet,
    )
    payload = json.dumps(report_obj.as_json_dict(), sort_keys=True, indent=2)
    if args.out:
        io_formats.atomic_write_bytes(Path(args.out), (payload + "\n").encode())
    else:
        sys.stdout.write(payload + "\n")
    if getattr(args, "report", None):
        report = _report_skeleton(
            "metrics",
            [str(real_dir), str(gen_dir)] + [str(f) for f in (args.features or [])],
            {"standardize": size, "pairs": len(real_files)},
        )
        report["outputs"] = [str(args.out)] if args.out else []
        report["warnings"] = warns.sorted_messages()
        _write_report(args, report, None)


def cmd_run(args, config, warns) -> None:
    pose_path = Path(args.pose)
    seq = io_formats.read_pose_file(pose_path)
    window = int(_resolve(args, config, "run", "window", DEFAULT_WINDOW))
    stride = int(_resolve(args, config, "run", "stride", DEFAULT_STRIDE))
    clip = _clip_name(args, config, "run", pose_path)
    out = _out_dir(args)
    command = shlex.split(args.generator)
    if not command:
        raise ArgumentError("empty generator command")

    from .pose import serialize_pose_sequence
    from .scheduler import blend_windows

    plan = plan_windows(len(seq.frames), window, stride)
    window_outputs = []
    for i, w in enumerate(plan.windows):
        sub = seq.subsequence(w.start, w.length)
        with tempfile.TemporaryDirectory(prefix=f"condguide_win{i}_") as tmp:
            proc = subprocess.run(
                command + [tmp],
                input=serialize_pose_sequence(sub),
                capture_output=True,
            )
            if proc.returncode != 0:
                raise WindowGenerationError(
                    f"generator exited {proc.returncode} on window {i} "
                    f"[{w.start}, {w.stop}): {proc.stderr.decode(errors='replace')}",
                    window_index=i,
                )
            files = sorted(Path(tmp).glob("*.png"))
            if len(files) != w.length:
                raise WindowGenerationError(
                    f"generator wrote {len(files)} frames for window {i} of "
                    f"length {w.length}",
                    window_index=i,
                )
            window_outputs.append([io_formats.read_image(p) for p in files])

    blended = blend_windows(plan, window_outputs)
    outputs = []
    for t, frame in enumerate(blended):
        name = f"{clip}_{t:05}.png"
        io_formats.write_image(frame, out / name)
        outputs.append(name)

    report = _report_skeleton(
        "run",
        [str(pose_path)],
        {"window": window, "stride": stride, "generator": args.generator, "clip": clip},
    )
    report["outputs"] = sorted(outputs)
    report["warnings"] = warns.sorted_messages()
    _write_report(args, report, out / "run_report.json")


# ---------------------------------------------------------------------------
# Parser assembly


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--jobs", type=int, help="worker threads (env CONDGUIDE_JOBS)")
    p.add_argument("--report", help="run report path (default: OUT/run_report.json)")


def _add_dilation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--conf-threshold", dest="conf_threshold", type=float)
    p.add_argument("--thickness", type=float, help="line thickness at 512px width")
    p.add_argument("--joint-radius", dest="joint_radius", type=float)
    p.add_argument("--rho-relative", dest="rho_relative", type=float)
    p.add_argument("--rho-floor", dest="rho_floor", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="condguide", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("dilate", help="write per-character dilation masks")
    p.add_argument("--pose", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clip")
    _add_dilation_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("flowmap", help="write flow guidance maps (CGGM)")
    p.add_argument("--mode", choices=["train", "infer"], required=True)
    p.add_argument("--pose", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", help="PNG frame dir (training flow source)")
    p.add_argument("--flow", help="CGFL flow dir (training flow source)")
    p.add_argument("--block", type=int)
    p.add_argument("--search", type=int)
    p.add_argument("--clip")
    _add_dilation_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_flowmap)

    p = sub.add_parser("depthorder", help="write depth-order maps")
    p.add_argument("--mode", choices=["train", "infer"], required=True)
    p.add_argument("--pose", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--depth", help="depth dir (training)")
    p.add_argument("--depth-format", dest="depth_format", choices=["pfm", "png16"])
    p.add_argument("--depth-scale", dest="depth_scale", type=float)
    p.add_argument("--convention", choices=sorted(_CONVENTIONS))
    p.add_argument("--on-empty", dest="on_empty", choices=["error", "push-back"])
    p.add_argument("--ref-pose", dest="ref_pose")
    p.add_argument("--ref-depth", dest="ref_depth")
    p.add_argument("--clip")
    _add_dilation_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_depthorder)

    p = sub.add_parser("refpose", help="render pose maps")
    p.add_argument("--pose", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame", type=int)
    p.add_argument("--all", action="store_true")
    p.add_argument("--clip")
    _add_dilation_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_refpose)

    p = sub.add_parser("analyze", help="dataset noise/occlusion statistics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--flow-threshold", dest="flow_threshold", type=float)
    p.add_argument("--occlusion-edges", dest="occlusion_edges", type=float, nargs="+")
    p.add_argument("--pairwise", action="store_const", const=True)
    p.add_argument("--block", type=int)
    p.add_argument("--search", type=int)
    _add_dilation_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("windows", help="print an overlap-window plan as JSON")
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_windows)

    p = sub.add_parser("metrics", help="evaluate generated frames")
    p.add_argument("--real", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--features", nargs=2, metavar=("REAL_CGFS", "GEN_CGFS"))
    p.add_argument("--standardize", type=int)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("run", help="windowed generation via a subprocess")
    p.add_argument("--pose", required=True)
    p.add_argument("--generator", required=True, help="command; gets OUTDIR argv and pose JSON on stdin")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--clip")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        config = _load_config(getattr(args, "config", None))
        with _WarningCollector() as warns:
            args.func(args, config, warns)
        return 0
    except ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except CondGuideError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
