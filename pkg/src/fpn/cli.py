"""Command-line front end tying the pipeline together.

Subcommands mirror the pipeline stages (``build``, ``schedule``, ``circuit``,
``dem``, ``sample``, ``decode``, ``ber``, ``certify``, ``metrics``); each
reads and writes the declared on-disk formats.  Exit status is 0 on success,
1 on validation failure, and 2 on usage errors.

All randomness flows from one top-level seed; per-stage seeds are derived by
hashing ``(seed, stage name)`` so adding a stage never perturbs another.
``FPN_THREADS`` caps the sampler's worker parallelism.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from fpn.circuits import NoiseModel, build_memory_circuit, load_circuit, save_circuit
from fpn.codes import (TannerCode, gen_rotated_surface, gen_toric,
                       gen_triangular_color, load_code)
from fpn.dem import extract_hypergraph, load_hypergraph, save_hypergraph
from fpn.decoders import (certify_effective_distance, make_ml_decoder,
                          make_mwpm_decoder, make_restriction_decoder)
from fpn.layout import (FpnLayout, build_fpn, build_naive_layout,
                        layout_metrics, load_layout, save_layout)
from fpn.sampling import (compile_circuit, estimate_ber, load_batch, sample,
                          save_batch)
from fpn.scheduling import (TimingModel, load_schedule, round_latency,
                            save_schedule, schedule_code, schedule_fpn,
                            verify_schedule)

__all__ = ["ExperimentConfig", "run_experiment", "main"]

_GENERATORS = {
    "rotated": gen_rotated_surface,
    "toric": gen_toric,
    "color": gen_triangular_color,
}


class StageError(Exception):
    """A pipeline stage failed; carries the stage name and artifact path."""

    def __init__(self, stage: str, path, message: str):
        super().__init__(f"stage {stage!r} failed on {path!r}: {message}")
        self.stage = stage
        self.path = path


def stage_seed(seed: int, stage: str) -> int:
    """Stable 63-bit per-stage seed derived from the top-level seed."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _cap_threads() -> None:
    raw = os.environ.get("FPN_THREADS", "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise StageError("threads", "FPN_THREADS",
                         f"not an integer: {raw!r}")
    if n < 1:
        raise StageError("threads", "FPN_THREADS", "must be >= 1")
    try:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass  # the numpy backend is single-threaded already


def parse_code_source(source: str, verify_distance: bool = False) -> TannerCode:
    """``family:d`` generator spec (rotated/toric/color) or a JSON file path."""
    if ":" in source and not os.path.exists(source):
        family, _, arg = source.partition(":")
        if family not in _GENERATORS:
            raise ValueError(f"unknown code family {family!r}; expected one "
                             f"of {sorted(_GENERATORS)}")
        try:
            d = int(arg)
        except ValueError:
            raise ValueError(f"bad distance in code spec {source!r}")
        return _GENERATORS[family](d)
    return load_code(source, verify_distance=verify_distance)


def _make_layout(code: TannerCode, naive: bool, flag_sharing: bool,
                 max_degree: int) -> FpnLayout:
    if naive:
        return build_naive_layout(code)
    return build_fpn(code, degree_budget=max_degree,
                     flag_sharing=flag_sharing)


def _make_decoder(name: str, hg, code: TannerCode):
    if name == "mwpm":
        return make_mwpm_decoder(hg)
    if name == "restriction":
        if not code.is_color_code:
            raise ValueError("the restriction decoder needs a color code")
        colors = {c.id: c.color for c in code.checks}
        return make_restriction_decoder(hg, colors)
    if name == "oracle":
        return make_ml_decoder(hg)
    raise ValueError(f"unknown decoder {name!r}")


# --- experiment runner -------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one batch memory experiment."""

    code: str                      # generator spec or code-file path
    rounds: int
    basis: str = "Z"
    p_list: tuple[float, ...] = (1e-3,)
    trials: int = 1000
    seed: int = 0
    decoder: str = "mwpm"
    naive: bool = False
    flag_sharing: bool = True
    max_degree: int = 4
    verify_distance: bool = False
    csv_path: str = "results.csv"
    meta_path: str = "results.meta.json"
    keep_artifacts: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.basis not in ("Z", "X"):
            raise ValueError("basis must be 'Z' or 'X'")
        if not self.p_list:
            raise ValueError("p list must not be empty")
        if any(p < 0 or p >= 1 for p in self.p_list):
            raise ValueError("each p must lie in [0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.decoder not in ("mwpm", "restriction", "oracle"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.max_degree < 3:
            raise ValueError("max degree must be >= 3")


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Build → schedule → circuit → dem → sample → decode → ber per p.

    Writes one CSV row per noise strength and a JSON metadata file capturing
    the full configuration plus content hashes of every written artifact.
    Returns the rows as dictionaries.
    """
    config.validate()
    hashes: dict[str, str] = {}

    def run_stage(stage, path, fn):
        try:
            return fn()
        except Exception as exc:  # surface which stage died, and where
            raise StageError(stage, path, str(exc)) from exc

    code = run_stage("build", config.code,
                     lambda: parse_code_source(config.code,
                                               config.verify_distance))
    layout = run_stage("build", config.code,
                       lambda: _make_layout(code, config.naive,
                                            config.flag_sharing,
                                            config.max_degree))
    schedule = run_stage("schedule", config.code,
                         lambda: schedule_fpn(layout, schedule_code(code)))

    rows: list[dict] = []
    for p in config.p_list:
        circ = run_stage("circuit", config.code,
                         lambda p=p: build_memory_circuit(
                             layout, schedule, config.rounds, config.basis,
                             NoiseModel(p)))
        hg = run_stage("dem", config.code,
                       lambda c=circ: extract_hypergraph(c))
        decoder = run_stage("decode", config.code,
                            lambda h=hg: _make_decoder(config.decoder, h,
                                                       code))
        batch = run_stage("sample", config.code,
                          lambda c=circ, p=p: sample(
                              c, config.trials,
                              seed=stage_seed(config.seed, f"sample:{p}")))
        result = run_stage("ber", config.code,
                           lambda b=batch, dec=decoder: estimate_ber(b, dec,
                                                                     k=code.k))
        rows.append({
            "p": p,
            "rounds": config.rounds,
            "trials": result.trials,
            "failures": result.failures,
            "ber": result.ber,
            "ber_norm": result.ber_norm,
            "stderr": result.stderr,
        })

    fieldnames = ["p", "rounds", "trials", "failures", "ber", "ber_norm",
                  "stderr"]
    with open(config.csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    hashes["csv"] = _sha256_file(config.csv_path)

    meta = {
        "config": {
            "code": config.code,
            "rounds": config.rounds,
            "basis": config.basis,
            "p_list": list(config.p_list),
            "trials": config.trials,
            "seed": config.seed,
            "decoder": config.decoder,
            "naive": config.naive,
            "flag_sharing": config.flag_sharing,
            "max_degree": config.max_degree,
            "verify_distance": config.verify_distance,
        },
        "code": {"name": code.name, "n": code.n, "k": code.k,
                 "dx": code.dx, "dz": code.dz},
        "layout": {"N": layout.N,
                   "effective_rate": str(layout_metrics(layout).effective_rate)},
        "schedule": {"depth": schedule.depth,
                     "latency_ns": round_latency(schedule)},
        "stage_seeds": {f"sample:{p}": stage_seed(config.seed, f"sample:{p}")
                        for p in config.p_list},
        "artifact_hashes": hashes,
    }
    with open(config.meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return rows


# --- subcommands --------------------------------------------------------------


def _cmd_build(args) -> int:
    code = parse_code_source(args.code, args.verify_distance)
    layout = _make_layout(code, args.naive, args.flag_sharing == "on",
                          args.max_degree)
    save_layout(layout, args.out)
    print(json.dumps({"qubits": layout.N, "edges": len(layout.edges),
                      "out": args.out}))
    return 0


def _cmd_schedule(args) -> int:
    layout = load_layout(args.layout)
    base = schedule_code(layout.code)
    problems = verify_schedule(base, layout.code)
    if problems:
        for line in problems:
            print(line, file=sys.stderr)
        return 1
    # lowering to physical rounds reuses abstract slots across flag groups
    # by design, so the validity check applies to the abstract schedule
    schedule = schedule_fpn(layout, base)
    save_schedule(schedule, args.out)
    print(json.dumps({"depth": schedule.depth,
                      "latency_ns": round_latency(schedule),
                      "out": args.out}))
    return 0


def _cmd_circuit(args) -> int:
    layout = load_layout(args.layout)
    schedule = load_schedule(args.schedule)
    circ = build_memory_circuit(layout, schedule, args.rounds, args.basis,
                                NoiseModel(args.p))
    save_circuit(circ, args.out)
    print(json.dumps({"instructions": len(circ.instructions),
                      "out": args.out}))
    return 0


def _cmd_dem(args) -> int:
    circ = load_circuit(args.circuit)
    hg = extract_hypergraph(circ)
    save_hypergraph(hg, args.out)
    print(json.dumps({"detectors": hg.num_detectors, "flags": hg.num_flags,
                      "classes": len(hg.classes), "out": args.out}))
    return 0


def _cmd_sample(args) -> int:
    circ = load_circuit(args.circuit)
    batch = sample(circ, args.trials, seed=args.seed, backend=args.backend)
    save_batch(batch, args.out)
    print(json.dumps({"trials": batch.trials,
                      "backend": batch.meta.get("backend"),
                      "out": args.out}))
    return 0


def _cmd_decode(args) -> int:
    circ = load_circuit(args.circuit)
    hg = (load_hypergraph(args.dem) if args.dem
          else extract_hypergraph(circ))
    batch = load_batch(args.shots)
    code = parse_code_source(args.code) if args.code else None
    if args.decoder == "restriction" and code is None:
        print("decoder 'restriction' needs --code for check colors",
              file=sys.stderr)
        return 1
    decoder = _make_decoder(args.decoder, hg,
                            code if code is not None
                            else _DummyCode(is_color=False))
    result = estimate_ber(batch, decoder,
                          k=code.k if code is not None else None)
    print(json.dumps({"trials": result.trials, "failures": result.failures,
                      "ber": result.ber, "ber_norm": result.ber_norm,
                      "stderr": result.stderr}))
    return 0


class _DummyCode:
    """Stands in when a decoder doesn't need code structure."""

    k = None

    def __init__(self, is_color: bool):
        self.is_color_code = is_color


def _cmd_ber(args) -> int:
    config = ExperimentConfig(
        code=args.code, rounds=args.rounds, basis=args.basis,
        p_list=tuple(args.p), trials=args.trials, seed=args.seed,
        decoder=args.decoder, naive=args.naive,
        flag_sharing=args.flag_sharing == "on", max_degree=args.max_degree,
        verify_distance=args.verify_distance, csv_path=args.csv,
        meta_path=args.meta)
    rows = run_experiment(config)
    for row in rows:
        print(json.dumps(row))
    return 0


def _cmd_certify(args) -> int:
    circ = load_circuit(args.circuit)
    hg = extract_hypergraph(circ)
    code = parse_code_source(args.code) if args.code else None
    decoder = _make_decoder(args.decoder, hg,
                            code if code is not None
                            else _DummyCode(is_color=False))
    result = certify_effective_distance(circ, decoder, w=args.w,
                                        max_sites=args.max_sites,
                                        hypergraph=hg)
    print(json.dumps({
        "certificate": "pass" if result.passed else "fail",
        "weight": result.weight,
        "checked": result.checked,
        "fault_sites": result.fault_sites,
        "witnesses": list(result.witnesses[:10]),
    }))
    return 0 if result.passed else 1


def _cmd_metrics(args) -> int:
    layout = load_layout(args.layout)
    m = layout_metrics(layout)
    print(json.dumps({
        "N": layout.N,
        "effective_rate": str(m.effective_rate),
        "ideal_rate": str(m.ideal_rate),
        "mean_degree": str(m.mean_degree),
        "mean_degree_float": float(m.mean_degree),
        "max_degree": m.max_degree,
        "role_counts": m.role_counts,
    }, sort_keys=True))
    return 0


def _add_code_options(sub) -> None:
    sub.add_argument("--code", required=True,
                     help="generator spec family:d (rotated/toric/color) "
                          "or a code JSON file")
    sub.add_argument("--naive", action="store_true",
                     help="data+parity layout only: no flags, no proxies")
    sub.add_argument("--flag-sharing", choices=("on", "off"), default="on")
    sub.add_argument("--max-degree", type=int, default=4)
    sub.add_argument("--verify-distance", action="store_true",
                     help="brute-force check dx/dz when loading a code file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpn", description="Flag-proxy-network toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("build", help="construct an FPN layout")
    _add_code_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build)

    p = subs.add_parser("schedule", help="schedule syndrome extraction")
    p.add_argument("--layout", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_schedule)

    p = subs.add_parser("circuit", help="compile a noisy memory circuit")
    p.add_argument("--layout", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--basis", choices=("Z", "X"), default="Z")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_circuit)

    p = subs.add_parser("dem", help="extract the detector error hypergraph")
    p.add_argument("--circuit", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_dem)

    p = subs.add_parser("sample", help="Monte Carlo sample syndromes")
    p.add_argument("--circuit", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("numpy", "numba"), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sample)

    p = subs.add_parser("decode", help="decode sampled shots")
    p.add_argument("--circuit", required=True)
    p.add_argument("--dem", default=None,
                   help="reuse a saved hypergraph instead of re-extracting")
    p.add_argument("--shots", required=True)
    p.add_argument("--decoder", choices=("mwpm", "restriction", "oracle"),
                   default="mwpm")
    p.add_argument("--code", default=None,
                   help="code spec/file (needed by the restriction decoder)")
    p.set_defaults(fn=_cmd_decode)

    p = subs.add_parser("ber", help="batch experiment: CSV + metadata")
    _add_code_options(p)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--basis", choices=("Z", "X"), default="Z")
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoder", choices=("mwpm", "restriction", "oracle"),
                   default="mwpm")
    p.add_argument("--csv", required=True)
    p.add_argument("--meta", required=True)
    p.set_defaults(fn=_cmd_ber)

    p = subs.add_parser("certify", help="exhaustive fault-injection check")
    p.add_argument("--circuit", required=True)
    p.add_argument("--decoder", choices=("mwpm", "restriction", "oracle"),
                   default="mwpm")
    p.add_argument("--code", default=None)
    p.add_argument("--w", type=int, default=1)
    p.add_argument("--max-sites", type=int, default=20000)
    p.set_defaults(fn=_cmd_certify)

    p = subs.add_parser("metrics", help="layout metrics as JSON")
    p.add_argument("--layout", required=True)
    p.set_defaults(fn=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _cap_threads()
        return args.fn(args)
    except (StageError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
