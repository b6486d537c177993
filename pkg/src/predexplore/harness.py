"""Command line front end and experiment plumbing.

Subcommands: generate-scene, explore, navigate, batch, segment,
make-dataset, predictor-check. Exit codes: 0 success, 1 usage error,
2 runtime failure. Everything a batch produces is a pure function of its
spec and seed (with the null/oracle predictors), so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frontier import FrontierCluster, extract_window
from .grid import CellState, GridMap, WorldPoint, clone_region, read_pgm, write_pgm
from .prediction import ExternalPredictor, Predictor, endpoint_from_spec
from .scene import (
    ClutterParams,
    Scene,
    generate_synthetic_floorplan,
    parse_scene_file,
    save_scene_file,
    with_clutter,
)
from .strategy import (
    NAV_POLICIES,
    STRATEGIES,
    ExploreConfig,
    RunLog,
    run_exploration,
    run_navigation,
    runlog_to_csv,
)
from .topology import (
    DOOR_SIGMA,
    build_room_graph,
    detect_critical_points,
    distance_transform,
    room_graph_to_dot,
    seg_to_rle,
)

UNKNOWN = int(CellState.UNKNOWN)


class SpecError(ValueError):
    """Experiment spec file fails validation."""


# ---------------------------------------------------------------------------
# experiment spec


@dataclass
class ExperimentSpec:
    """A batch: scenes x strategies x repeats, one predictor, one seed."""

    scenes: list[dict]
    strategies: list[str]
    predictor: str = "null"
    repeats: int = 1
    output_dir: str = "out"
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.scenes:
            raise SpecError("spec needs at least one scene")
        if not self.strategies:
            raise SpecError("spec needs at least one strategy")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise SpecError(f"unknown strategy {s!r}, expected one of {STRATEGIES}")
        if self.repeats < 1:
            raise SpecError(f"repeats must be >= 1, got {self.repeats}")
        if self.workers < 1:
            raise SpecError(f"workers must be >= 1, got {self.workers}")
        for i, entry in enumerate(self.scenes):
            if not isinstance(entry, dict) or ("file" in entry) == ("generate" in entry):
                raise SpecError(f"scenes[{i}] must have exactly one of 'file' or 'generate'")
            if "file" in entry and not Path(entry["file"]).exists():
                raise SpecError(f"scenes[{i}]: no such file {entry['file']!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentSpec":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise SpecError(f"{path}: invalid JSON: {e.msg}") from None
        if not isinstance(doc, dict):
            raise SpecError(f"{path}: top level must be an object")
        known = {"scenes", "strategies", "predictor", "repeats", "output_dir", "seed", "workers"}
        extra = set(doc) - known
        if extra:
            raise SpecError(f"{path}: unknown fields {sorted(extra)}")
        try:
            return cls(**doc)
        except TypeError as e:
            raise SpecError(f"{path}: {e}") from None


def load_scene_entry(entry: dict) -> Scene:
    """Materialize one spec scene: read a file or generate, then clutter.

    Clutter never round-trips through scene JSON (plans store walls only),
    so both kinds accept a 'clutter' object {density, seed, ...} and the
    harness re-injects it deterministically.
    """
    if "file" in entry:
        scene = parse_scene_file(entry["file"])
    else:
        gen = dict(entry["generate"])
        size = gen.pop("room_size_range", (4.0, 6.0))
        scene = generate_synthetic_floorplan(
            seed=int(gen.pop("seed", 0)),
            rooms_x=int(gen.pop("rooms_x")),
            rooms_y=int(gen.pop("rooms_y")),
            room_size_range=(float(size[0]), float(size[1])),
            **gen,
        )
    clutter = entry.get("clutter")
    if clutter:
        params = dict(clutter)
        seed = int(params.pop("seed", 0))
        if "size_range" in params:
            params["size_range"] = tuple(params["size_range"])
        scene = with_clutter(scene, ClutterParams(**params), seed)
    return scene


def scene_class(scene: Scene) -> str:
    """Size bucket by free floor area: small, middle at 200 m^2, large past 600."""
    area = scene.free_area
    if area < 200.0:
        return "small"
    if area <= 600.0:
        return "middle"
    return "large"


def run_seed(global_seed: int, *coords: int) -> int:
    """Counter-based seed splitting: one global seed plus the run's
    coordinates in the batch grid give an independent stream."""
    seq = np.random.SeedSequence((int(global_seed),) + tuple(int(c) for c in coords))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


# ---------------------------------------------------------------------------
# shared output helpers


def write_run_outputs(out_dir: Path, log: RunLog) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{log.run_id}.csv"
    csv_path.write_text(runlog_to_csv(log))
    pgm_path = out_dir / f"{log.run_id}.pgm"
    assert log.final_map is not None
    write_pgm(log.final_map, pgm_path)
    return csv_path, pgm_path


def _parse_point(text: str, what: str) -> WorldPoint:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{what} must look like 'x,y', got {text!r}")
    try:
        return WorldPoint(float(parts[0]), float(parts[1]))
    except ValueError:
        raise ValueError(f"{what} has non-numeric coordinates: {text!r}") from None


def _parse_rooms(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"--rooms must look like '3x2', got {text!r}")
    try:
        rx, ry = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"--rooms has non-integer counts: {text!r}") from None
    return rx, ry


def _endpoint(spec: str, scene: Scene | None) -> Predictor:
    plan = scene.floorplan if scene is not None else None
    return endpoint_from_spec(spec, plan=plan)


def _config_from_args(args: argparse.Namespace) -> ExploreConfig:
    return ExploreConfig(
        k=args.k,
        lam=args.lam,
        gain_radius=args.gain_radius,
        sense_every=args.sense_every,
        step_cap=args.step_cap,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate_scene(args: argparse.Namespace) -> int:
    rx, ry = _parse_rooms(args.rooms)
    scene = generate_synthetic_floorplan(
        seed=args.seed,
        rooms_x=rx,
        rooms_y=ry,
        room_size_range=(args.size_min, args.size_max),
        door_width=args.door_width,
    )
    if args.clutter_density > 0:
        scene = with_clutter(scene, ClutterParams(density=args.clutter_density), args.seed)
    out = Path(args.out)
    if out.suffix != ".json":
        out = Path(str(out) + ".json")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scene_file(scene, out)
    write_pgm(scene.floorplan, out.with_suffix(".floorplan.pgm"))
    write_pgm(scene.cluttered, out.with_suffix(".cluttered.pgm"))
    print(f"{scene.scene_id}: {scene.free_area:.1f} m^2 free ({scene_class(scene)}) -> {out}")
    return 0


def _scene_from_args(args: argparse.Namespace) -> Scene:
    scene = parse_scene_file(args.scene)
    if args.clutter_density > 0:
        scene = with_clutter(scene, ClutterParams(density=args.clutter_density), args.clutter_seed)
    return scene


def cmd_explore(args: argparse.Namespace) -> int:
    scene = _scene_from_args(args)
    endpoint = _endpoint(args.predictor, scene)
    start = _parse_point(args.start, "--start") if args.start else None
    log = run_exploration(
        scene,
        args.strategy,
        endpoint,
        cfg=_config_from_args(args),
        seed=args.seed,
        start=start,
    )
    csv_path, pgm_path = write_run_outputs(Path(args.out), log)
    flag = " INCOMPLETE" if log.incomplete else ""
    print(
        f"{log.run_id}: coverage={log.coverage_pct:.2f}% traveled={log.traveled_m:.2f} m "
        f"decisions={len(log.decisions)}{flag} -> {csv_path}, {pgm_path}"
    )
    return 0


def cmd_navigate(args: argparse.Namespace) -> int:
    scene = _scene_from_args(args)
    endpoint = _endpoint(args.predictor, scene)
    log = run_navigation(
        scene,
        args.policy,
        endpoint,
        _parse_point(args.start, "--start"),
        _parse_point(args.target, "--target"),
        cfg=_config_from_args(args),
        seed=args.seed,
    )
    csv_path, pgm_path = write_run_outputs(Path(args.out), log)
    state = "reached" if log.reached_target else "DID NOT REACH"
    print(f"{log.run_id}: {state} target, traveled={log.traveled_m:.2f} m -> {csv_path}, {pgm_path}")
    return 0 if log.reached_target else 2


def _batch_job(spec: ExperimentSpec, entry: dict, strategy: str, coords: tuple[int, int, int]) -> dict:
    """One run of the batch grid; returns a result row, never raises."""
    seed = run_seed(spec.seed, *coords)
    try:
        scene = load_scene_entry(entry)
        endpoint = _endpoint(spec.predictor, scene)
        log = run_exploration(scene, strategy, endpoint, seed=seed)
        write_run_outputs(Path(spec.output_dir) / "runs", log)
        return {
            "scene_id": scene.scene_id,
            "scene_class": scene_class(scene),
            "strategy": strategy,
            "seed": seed,
            "path_m": log.traveled_m,
            "coverage_pct": log.coverage_pct,
            "incomplete": log.incomplete,
            "error": "",
        }
    except Exception as exc:  # recorded, batch keeps going
        return {
            "scene_id": entry.get("file", "generated"),
            "scene_class": "",
            "strategy": strategy,
            "seed": seed,
            "path_m": float("nan"),
            "coverage_pct": float("nan"),
            "incomplete": True,
            "error": f"{type(exc).__name__}: {exc}",
        }


def run_batch(spec: ExperimentSpec) -> tuple[Path, int, int]:
    """Execute the batch grid, write runs.csv and aggregate.csv.

    Returns (aggregate path, total runs, failed runs). Results are
    collected in submission order so the worker count never changes any
    output byte.
    """
    jobs = []
    for si, entry in enumerate(spec.scenes):
        for ti, strategy in enumerate(spec.strategies):
            for ri in range(spec.repeats):
                jobs.append((entry, strategy, (si, ti, ri)))
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        futures = [pool.submit(_batch_job, spec, *job) for job in jobs]
        results = [f.result() for f in futures]

    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs_path = out / "runs.csv"
    cols = ["scene_id", "scene_class", "strategy", "seed", "path_m", "coverage_pct", "incomplete", "error"]
    lines = [",".join(cols)]
    for r in results:
        lines.append(",".join(str(r[c]) for c in cols))
    runs_path.write_text("\n".join(lines) + "\n")

    groups: dict[tuple[str, str], list[float]] = {}
    failures = 0
    for r in results:
        if r["error"]:
            failures += 1
            continue
        groups.setdefault((r["scene_class"], r["strategy"]), []).append(r["path_m"])
    agg_path = out / "aggregate.csv"
    agg_lines = ["scene_class,strategy,runs,mean_path_m,std_path_m"]
    for (cls, strat) in sorted(groups):
        vals = np.array(groups[(cls, strat)])
        agg_lines.append(
            f"{cls},{strat},{len(vals)},{repr(float(vals.mean()))},{repr(float(vals.std()))}"
        )
    agg_path.write_text("\n".join(agg_lines) + "\n")
    return agg_path, len(results), failures


def cmd_batch(args: argparse.Namespace) -> int:
    spec = ExperimentSpec.from_file(args.config)
    if args.out:
        spec.output_dir = args.out
    if args.seed is not None:
        spec.seed = args.seed
    if args.workers:
        spec.workers = args.workers
    agg_path, total, failures = run_batch(spec)
    print(f"batch: {total} runs, {failures} failed -> {agg_path}")
    if failures * 10 > total:
        print(f"error: {failures}/{total} runs failed", file=sys.stderr)
        return 2
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    if args.map:
        grid = read_pgm(args.map)
        label = Path(args.map).stem
    else:
        scene = parse_scene_file(args.scene)
        grid = scene.floorplan
        label = scene.scene_id
    dist = distance_transform(grid)
    points = detect_critical_points(dist, sigma=args.sigma)
    graph = build_room_graph(grid, points)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dot_path = out / f"{label}.rooms.dot"
    dot_path.write_text(room_graph_to_dot(graph))
    json_path = out / f"{label}.segmentation.json"
    payload = {
        "map": label,
        "rooms": graph.rooms,
        "doors": graph.doors,
        "resolution": graph.resolution,
        "segmentation": seg_to_rle(graph.seg),
    }
    json_path.write_text(json.dumps(payload, sort_keys=True) + "\n")
    print(f"{label}: {graph.rooms} rooms, {graph.doors} doors -> {dot_path}, {json_path}")
    return 0


def make_dataset(
    scenes: list[Scene],
    samples_per_scene: int,
    seed: int,
    out_dir: Path,
) -> int:
    """Emit (observed, denoised, completed) window triplets from NBV runs.

    One triplet per goal decision: the observed window around the chosen
    frontier, the clean-plan window on the same footprint, and the fully
    known clean-plan window. Returns the number of triplets written.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    index_path = out_dir / "index.jsonl"
    total = 0
    with open(index_path, "w") as index:
        for si, scene in enumerate(scenes):
            scene_dir = out_dir / scene.scene_id
            scene_dir.mkdir(exist_ok=True)
            triplets: list[tuple[int, tuple[int, int], GridMap, GridMap, GridMap]] = []

            def on_decision(observed: GridMap, cluster: FrontierCluster, step: int) -> None:
                if len(triplets) >= samples_per_scene:
                    return
                window = extract_window(observed, cluster)
                completed = clone_region(scene.floorplan, window.center, window.half_width)
                denoised_cells = np.where(
                    window.window.cells != UNKNOWN, completed.cells, UNKNOWN
                ).astype(np.uint8)
                denoised = GridMap(denoised_cells, completed.resolution, completed.origin)
                rep = (int(window.center[0]), int(window.center[1]))
                triplets.append((step, rep, window.window, denoised, completed))

            run_exploration(
                scene,
                "nbv",
                endpoint_from_spec("null"),
                seed=run_seed(seed, si),
                on_decision=on_decision,
            )
            if len(triplets) < samples_per_scene:
                print(
                    f"{scene.scene_id}: exploration finished after {len(triplets)} "
                    f"triplets, short of the {samples_per_scene} quota"
                )
            for step, rep, x, denoised, completed in triplets:
                names = {}
                for tag, grid in (("x", x), ("denoised", denoised), ("completed", completed)):
                    rel = f"{scene.scene_id}/{step}_{tag}.pgm"
                    write_pgm(grid, out_dir / rel)
                    names[tag] = rel
                record = {
                    "scene": scene.scene_id,
                    "step": step,
                    "frontier": list(rep),
                    **names,
                }
                index.write(json.dumps(record, sort_keys=True) + "\n")
                total += 1
    return total


def cmd_make_dataset(args: argparse.Namespace) -> int:
    scenes: list[Scene] = []
    for path in args.scenes:
        scene = parse_scene_file(path)
        if args.clutter_density > 0:
            scene = with_clutter(scene, ClutterParams(density=args.clutter_density), args.seed)
        scenes.append(scene)
    for i in range(args.synthetic):
        rng = np.random.default_rng(run_seed(args.seed, i))
        scene = generate_synthetic_floorplan(
            seed=run_seed(args.seed, i, 1),
            rooms_x=int(rng.integers(2, 4)),
            rooms_y=int(rng.integers(1, 4)),
            room_size_range=(4.0, 6.5),
        )
        if args.clutter_density > 0:
            scene = with_clutter(scene, ClutterParams(density=args.clutter_density), run_seed(args.seed, i, 2))
        scenes.append(scene)
    if not scenes:
        raise ValueError("make-dataset needs scene files and/or --synthetic N")
    total = make_dataset(scenes, args.samples_per_scene, args.seed, Path(args.out))
    print(f"dataset: {total} triplets from {len(scenes)} scenes -> {args.out}")
    return 0


def cmd_predictor_check(args: argparse.Namespace) -> int:
    host, _, port_text = args.addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"--addr must look like host:port, got {args.addr!r}")
    endpoint = ExternalPredictor(host, int(port_text))
    window = GridMap(np.full((120, 120), UNKNOWN, dtype=np.uint8), 0.2, WorldPoint(0.0, 0.0))
    raw = endpoint.raw_predict(window)
    if raw.shape != (120, 120):
        raise ValueError(f"predictor returned {raw.shape}, expected (120, 120)")
    print(f"round-trip OK: 120x120 window -> 120x120 response from {args.addr}")
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; this CLI reserves 2 for
    runtime failures, so usage problems exit 1 instead."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=float, default=0.05, help="gain-to-cost scale")
    p.add_argument("--lam", type=float, default=1.0, help="room-distance decay")
    p.add_argument("--gain-radius", type=float, default=1.0, help="gain disc radius, m")
    p.add_argument("--sense-every", type=int, default=1, help="scan cadence, cells")
    p.add_argument("--step-cap", type=int, default=200_000, help="max cells moved")


def _add_clutter_flags(p: argparse.ArgumentParser, default_density: float) -> None:
    p.add_argument("--clutter-density", type=float, default=default_density, help="obstacles per m^2, 0 disables")
    p.add_argument("--clutter-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="predexplore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-scene", help="write a synthetic scene JSON + PGM snapshots")
    p.add_argument("--rooms", required=True, help="grid like 3x2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size-min", type=float, default=4.0, help="room side lower bound, m")
    p.add_argument("--size-max", type=float, default=6.0, help="room side upper bound, m")
    p.add_argument("--door-width", type=float, default=0.9)
    p.add_argument("--clutter-density", type=float, default=0.0, help="obstacles per m^2, 0 disables")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_scene)

    p = sub.add_parser("explore", help="run one exploration, write CSV + final map PGM")
    p.add_argument("--scene", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--predictor", default="null", help="null | oracle | host:port")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default=None, help="world pose 'x,y'; sampled when absent")
    p.add_argument("--out", default="out")
    _add_clutter_flags(p, 0.0)
    _add_config_flags(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("navigate", help="run one navigation, write CSV + final map PGM")
    p.add_argument("--scene", required=True)
    p.add_argument("--policy", required=True, choices=NAV_POLICIES)
    p.add_argument("--predictor", default="null")
    p.add_argument("--start", required=True, help="world pose 'x,y'")
    p.add_argument("--target", required=True, help="world pose 'x,y'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    _add_clutter_flags(p, 0.0)
    _add_config_flags(p)
    p.set_defaults(func=cmd_navigate)

    p = sub.add_parser("batch", help="run a scenes x strategies x repeats grid from a JSON spec")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the spec's output_dir")
    p.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("segment", help="dump the room graph of a map as DOT + RLE JSON")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scene", help="scene JSON, segments its floor plan")
    src.add_argument("--map", help="PGM snapshot to segment instead")
    p.add_argument("--sigma", type=float, default=DOOR_SIGMA, help="smoothing before the Hessian")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("make-dataset", help="emit (observed, denoised, completed) window triplets")
    p.add_argument("scenes", nargs="*", help="scene JSON files")
    p.add_argument("--synthetic", type=int, default=0, help="also generate N synthetic scenes")
    p.add_argument("--samples-per-scene", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clutter-density", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("predictor-check", help="round-trip one window through a live predictor")
    p.add_argument("--addr", required=True, help="host:port")
    p.set_defaults(func=cmd_predictor_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
