"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .connectivity import FormatError, dump_connectivity, load_connectivity, validate_global_connectivity
from .exchange import partition_cmesh
from .forest import ForestSummary, partition_from_forest, random_forest_partition, synthetic_band_forest
from .ghosts import format_plan
from .meshgen import (
    BrickSpec,
    brick_connectivity,
    brick_offsets,
    line_mesh,
    random_mesh,
    shift_partition,
    three_tree_ring,
)
from .offsets import OffsetArray, PartitionError, offsets_from_ranges, validate_offsets
from .pattern import compute_pattern, format_pattern
from .runtime import PartitionStats, RepartitionError, World, run_repartition, verify_world

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

NOT_COMPARABLE = (
    "note: simulated ranks on one machine; wall-clock figures are not comparable "
    "to the published supercomputer timings"
)

# the two small worked scenarios, usable wherever a mesh and partitions are needed
GOLDEN = {
    "line5": lambda: (
        line_mesh(5),
        OffsetArray([0, -2, 3, 5]),
        OffsetArray([0, -3, -4, 5]),
    ),
    "ring3": lambda: (
        three_tree_ring(),
        OffsetArray([0, 1, 3, 3]),
        offsets_from_ranges([(0, 0), (0, 1), (2, 2)], 3),
    ),
}


class UsageError(Exception):
    pass


# -- argument helpers -------------------------------------------------------


def parse_offsets(text: str) -> OffsetArray:
    """Offsets from a file path, an ``offsets P=..`` line, or a list of integers."""
    path = Path(text)
    if path.is_file():
        text = path.read_text().strip()
    if text.startswith("offsets"):
        return OffsetArray.loads(text)
    try:
        values = [int(v) for v in text.replace(",", " ").replace("{", " ").replace("}", " ").split()]
    except ValueError as err:
        raise PartitionError(f"cannot parse offsets {text!r}") from err
    return OffsetArray(values)


def parse_forest(text: str, seed: int) -> ForestSummary:
    """``forest K=..`` line or file, or ``K=<n>`` for a random forest."""
    path = Path(text)
    if path.is_file():
        text = path.read_text().strip()
    if text.startswith("forest"):
        return ForestSummary.loads(text)
    if text.startswith("K="):
        K = int(text[2:])
        rng = np.random.default_rng(seed)
        return ForestSummary(rng.integers(1, 9, size=K))
    raise ValueError(f"cannot parse forest {text!r}")


def band_forest(K: int, step: int, steps: int) -> ForestSummary:
    """Level-1 forest refined once more in a band that moves with `step`."""
    width = max(1, K // 20)
    center = (step + 1) * K // (steps + 2)
    band = range(max(0, center - width), min(K, center + width + 1))
    return synthetic_band_forest(K, 1, band, 3)


def add_mesh_args(sp, brick_required=False):
    g = sp.add_argument_group("mesh source (exactly one)")
    g.add_argument("--brick", metavar="NXxNYxNZ", help="one brick of trees per rank")
    g.add_argument("--connected", action="store_true", help="glue bricks along x")
    g.add_argument("--mesh", metavar="FILE", help="cmesh v1 dump")
    g.add_argument("--golden", choices=sorted(GOLDEN), help="small worked scenario")
    g.add_argument("--random", type=int, metavar="K", help="random mesh of K trees")
    g.add_argument("--line", type=int, metavar="K", help="K trees in a row")
    sp.add_argument("--dim", type=int, default=3, choices=(2, 3))


def add_common(sp):
    sp.add_argument("--ranks", type=int, default=None, help="number of simulated ranks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", metavar="PATH")
    sp.add_argument("--workers", type=int, default=1, help="thread-pool size")


def load_mesh(args):
    """``(conn, default old partition or None)`` from the mesh flags."""
    sources = [s for s in ("brick", "mesh", "golden", "random", "line") if getattr(args, s, None) is not None]
    if getattr(args, "forest", None) and not sources:
        return None, None
    if len(sources) != 1:
        raise UsageError("give exactly one mesh source (--brick, --mesh, --golden, --random, --line)")
    src = sources[0]
    P = args.ranks or 1
    if src == "brick":
        spec = BrickSpec.parse(args.brick, P, args.connected)
        return brick_connectivity(spec), brick_offsets(spec)
    if src == "mesh":
        return load_connectivity(Path(args.mesh).read_text()), None
    if src == "golden":
        conn, O, _ = GOLDEN[args.golden]()
        return conn, O
    if src == "random":
        return random_mesh(args.random, np.random.default_rng(args.seed), dim=args.dim), None
    return line_mesh(args.line, args.dim), None


def uniform_offsets(K: int, P: int) -> OffsetArray:
    return partition_from_forest(ForestSummary(np.ones(K, dtype=np.int64)), P)


def resolve_partitions(args, conn, default_old):
    """Old and new partition from ``--old`` and one of ``--new/--shift/--forest``."""
    K = conn.num_trees
    if args.old:
        O_old = parse_offsets(args.old)
    elif default_old is not None:
        O_old = default_old
    else:
        O_old = uniform_offsets(K, args.ranks or 1)
    sources = [s for s in ("new", "shift", "forest") if getattr(args, s, None) is not None]
    if args.golden and not sources:
        return O_old, GOLDEN[args.golden]()[2]
    if len(sources) != 1:
        raise UsageError("give exactly one partition source (--new, --shift, --forest)")
    if sources[0] == "new":
        O_new = parse_offsets(args.new)
    elif sources[0] == "shift":
        O_new = shift_partition(O_old, args.shift)
    else:
        forest = parse_forest(args.forest, args.seed)
        if forest.num_trees != K:
            raise UsageError(f"forest has {forest.num_trees} trees, mesh has {K}")
        O_new = partition_from_forest(forest, O_old.num_ranks)
    for name, O in (("old", O_old), ("new", O_new)):
        problems = validate_offsets(O)
        if problems:
            raise UsageError(f"{name} partition invalid: {problems[0]}")
        if O.num_trees != K:
            raise UsageError(f"{name} partition has {O.num_trees} trees, mesh has {K}")
    if O_old.num_ranks != O_new.num_ranks:
        raise UsageError("old and new partitions differ in rank count")
    return O_old, O_new


def write_stats(out, stats_list):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for i, st in enumerate(stats_list):
        (out / f"step{i}.csv").write_text(st.to_csv())
        (out / f"step{i}.json").write_text(st.to_json() + "\n")


def summarize(step, st: PartitionStats) -> str:
    rate = st.trees_sent / st.wall_time if st.wall_time > 0 else 0.0
    per_rank = st.trees_sent / max(len(st.ranks), 1)
    return (
        f"step {step}: trees sent {st.trees_sent} ({per_rank:.1f}/rank) "
        f"ghosts sent {st.ghosts_sent} bytes {st.bytes_sent} "
        f"messages {st.messages_sent} mean |S_p| {st.mean_S_size:.3f} "
        f"shared trees {st.shared_tree_count} time {st.wall_time:.3f}s "
        f"({rate:.3g} trees/s)"
    )


# -- subcommands ------------------------------------------------------------


def cmd_generate(args):
    conn, O = load_mesh(args)
    problems = validate_global_connectivity(conn)
    if problems:
        print(f"generated mesh is inconsistent: {problems[0]}", file=sys.stderr)
        return EXIT_FAIL
    text = dump_connectivity(conn)
    if args.out:
        Path(args.out).write_text(text)
        if O is not None:
            Path(args.out + ".offsets").write_text(O.dumps() + "\n")
        print(f"wrote {conn.num_trees} trees to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_pattern(args):
    if args.golden:
        _, O_old, O_new = GOLDEN[args.golden]()
    else:
        if not (args.old and args.new):
            raise UsageError("pattern needs --old and --new (or --golden)")
        O_old, O_new = parse_offsets(args.old), parse_offsets(args.new)
    for name, O in (("old", O_old), ("new", O_new)):
        problems = validate_offsets(O)
        if problems:
            raise UsageError(f"{name} partition invalid: {problems[0]}")
    if O_old.num_ranks != O_new.num_ranks or O_old.num_trees != O_new.num_trees:
        raise UsageError("old and new partitions differ in rank or tree count")
    text = format_pattern(compute_pattern(O_old, O_new, p) for p in range(O_old.num_ranks))
    _emit(args, text)
    return EXIT_OK


def cmd_ghosts(args):
    conn, default_old = load_mesh(args)
    O_old, O_new = resolve_partitions(args, conn, default_old)
    world = World.from_connectivity(conn, O_old)
    _, sent = partition_cmesh(world.cmeshes, O_new)
    entries = [(m.src, m.dst, list(m.tree_ids), [g.id for g in m.ghosts]) for m in sent]
    _emit(args, format_plan(entries))
    return EXIT_OK


def cmd_partition(args):
    conn, default_old = load_mesh(args)
    O_old, O_new = resolve_partitions(args, conn, default_old)
    world = World.from_connectivity(conn, O_old)
    new, st = run_repartition(world, O_new, args.workers, dump_dir=args.dump_messages)
    problems = verify_world(new, conn)
    print(f"old {O_old.dumps()}")
    print(f"new {O_new.dumps()}")
    print(summarize(0, st))
    if args.out:
        write_stats(args.out, [st])
    if problems:
        print(f"verification FAILED: {problems[0]}")
        return EXIT_FAIL
    print("verification passed")
    return EXIT_OK


def cmd_bench(args):
    if args.forest and not any(getattr(args, s) is not None for s in ("brick", "mesh", "random", "line", "golden")):
        # forest-driven run on a row of hexes matching the forest's tree count
        text = args.forest
        K = int(text[2:]) if text.startswith("K=") else parse_forest(text, args.seed).num_trees
        conn = line_mesh(K, 3)
        P = args.ranks or 8
        O = uniform_offsets(K, P)
    else:
        conn, O = load_mesh(args)
        if O is None:
            O = uniform_offsets(conn.num_trees, args.ranks or 1)
        K, P = conn.num_trees, O.num_ranks
    world = World.from_connectivity(conn, O)
    stats, failed = [], None
    steps = args.steps
    for step in range(steps):
        if args.band:
            O_new = partition_from_forest(band_forest(K, step, steps), P)
        elif args.shift is not None:
            O_new = shift_partition(world.offsets, args.shift)
        elif args.forest:
            forest = parse_forest(args.forest, args.seed + step)
            if forest.num_trees != K:
                raise UsageError(f"forest has {forest.num_trees} trees, mesh has {K}")
            O_new = partition_from_forest(forest, P)
        else:
            raise UsageError("bench needs --shift, --forest or --band")
        world, st = run_repartition(world, O_new, args.workers, dump_dir=args.dump_messages)
        t0 = time.perf_counter()
        problems = verify_world(world, conn)
        stats.append(st)
        print(summarize(step, st) + f" verify {time.perf_counter() - t0:.3f}s")
        if problems:
            failed = f"step {step}: {problems[0]}"
            break
    total = sum(s.trees_sent for s in stats)
    wall = sum(s.wall_time for s in stats)
    print(f"total: K={K} P={P} steps={len(stats)} trees sent {total} in {wall:.3f}s")
    print(NOT_COMPARABLE)
    if args.out:
        write_stats(args.out, stats)
        summary = {"K": K, "P": P, "steps": [s.aggregate() for s in stats], "comparable_to_published": False}
        Path(args.out, "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if failed:
        print(f"verification FAILED at {failed}")
        return EXIT_FAIL
    print("verification passed")
    return EXIT_OK


def _verify_scenario(conn, O_old, O_new, workers=1):
    """Problems of one repartition, checked against the replicated mesh."""
    world = World.from_connectivity(conn, O_old)
    new, _ = run_repartition(world, O_new, workers)
    return verify_world(new, conn)


def cmd_verify(args):
    if args.trials:
        rng = np.random.default_rng(args.seed)
        for t in range(args.trials):
            K = int(rng.integers(1, 51))
            P = int(rng.integers(1, 13))
            dim = int(rng.choice([2, 3]))
            conn = random_mesh(K, rng, dim=dim, mixed=bool(rng.integers(2)))
            O_old = random_forest_partition(K, P, rng)[0]
            O_new = random_forest_partition(K, P, rng)[0]
            problems = _verify_scenario(conn, O_old, O_new, args.workers)
            if problems:
                print(f"trial {t} FAILED ({O_old} -> {O_new}): {problems[0]}")
                return EXIT_FAIL
        print(f"{args.trials} fuzz trials passed (seed {args.seed})")
        return EXIT_OK
    if args.mesh and not any((args.old, args.new, args.shift is not None, args.forest)):
        conn = load_connectivity(Path(args.mesh).read_text())
        problems = validate_global_connectivity(conn)
        if problems:
            print(f"mesh invalid: {problems[0]}")
            return EXIT_FAIL
        print(f"mesh ok: {conn.num_trees} trees")
        return EXIT_OK
    if not any(getattr(args, s) is not None for s in ("brick", "mesh", "random", "line", "golden")):
        names = sorted(GOLDEN)
    else:
        names = None
    if names:
        for name in names:
            conn, O_old, O_new = GOLDEN[name]()
            problems = _verify_scenario(conn, O_old, O_new, args.workers)
            if problems:
                print(f"{name} FAILED: {problems[0]}")
                return EXIT_FAIL
            print(f"{name}: passed")
        return EXIT_OK
    conn, default_old = load_mesh(args)
    problems = validate_global_connectivity(conn)
    if problems:
        print(f"mesh invalid: {problems[0]}")
        return EXIT_FAIL
    O_old, O_new = resolve_partitions(args, conn, default_old)
    problems = _verify_scenario(conn, O_old, O_new, args.workers)
    if problems:
        print(f"verification FAILED: {problems[0]}")
        return EXIT_FAIL
    print("verification passed")
    return EXIT_OK


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmesh-partition", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="write a generated mesh as a cmesh v1 dump")
    add_mesh_args(sp)
    add_common(sp)
    sp.set_defaults(func=cmd_generate)

    def partition_args(sp):
        sp.add_argument("--old", metavar="OFFSETS", help="old partition (file or integers)")
        sp.add_argument("--new", metavar="OFFSETS", help="new partition (file or integers)")
        sp.add_argument("--shift", type=float, metavar="F", help="tail-shift fraction")
        sp.add_argument("--forest", metavar="SPEC", help="forest file/line, or K=<n>")

    sp = sub.add_parser("partition", help="repartition once, verify, report stats")
    add_mesh_args(sp)
    add_common(sp)
    partition_args(sp)
    sp.add_argument("--dump-messages", metavar="DIR")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("pattern", help="print send/receive sets and ranges")
    sp.add_argument("--old", metavar="OFFSETS")
    sp.add_argument("--new", metavar="OFFSETS")
    sp.add_argument("--golden", choices=sorted(GOLDEN))
    sp.add_argument("--out", metavar="PATH")
    sp.set_defaults(func=cmd_pattern)

    sp = sub.add_parser("ghosts", help="print the per-destination tree and ghost plan")
    add_mesh_args(sp)
    add_common(sp)
    partition_args(sp)
    sp.set_defaults(func=cmd_ghosts)

    sp = sub.add_parser("bench", help="run repartition steps and emit statistics")
    add_mesh_args(sp)
    add_common(sp)
    sp.add_argument("--shift", type=float, metavar="F")
    sp.add_argument("--forest", metavar="SPEC")
    sp.add_argument("--band", action="store_true", help="moving refinement band")
    sp.add_argument("--steps", type=int, default=1)
    sp.add_argument("--dump-messages", metavar="DIR")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("verify", help="run the invariant checks; exit 0 iff all pass")
    add_mesh_args(sp)
    add_common(sp)
    partition_args(sp)
    sp.add_argument("--trials", type=int, default=0, help="random oracle trials")
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors
        return int(exc.code or 0)
    try:
        if getattr(args, "steps", 1) < 1:
            raise UsageError("--steps must be >= 1")
        if getattr(args, "ranks", None) is not None and args.ranks < 1:
            raise UsageError("--ranks must be >= 1")
        return args.func(args)
    except (UsageError, FormatError, PartitionError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except RepartitionError as err:
        print(f"verification FAILED: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
