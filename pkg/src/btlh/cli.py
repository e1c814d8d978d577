"""Batch front-end: corpora, norms, equivalence reports, and audits.

One JSON config document drives every command; command-line flags override
individual keys, so a report always names the exact inputs that produced
it.  Outputs are deterministic for a fixed config: no timestamps, sorted
keys, repr-formatted floats.  Every report embeds the resolved config and
the library version.

Exit codes: 0 on success, 2 when a parameter or invariant is violated,
3 when a request falls outside the numerically resolvable range.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .grid import (
    BtlhError,
    InvariantViolation,
    NumericalRangeError,
    SampledField,
    ScaleGrid,
    save_field_csv,
)
from .group import GroupPoint, GSpaceParams, haar_integral, norm_G, operator_bound_check, right_translate
from .hausdorff import GridSet, capacity
from .hnorms import HausdorffSpaceParams, norm_BH_variant, norm_FH_variant
from .kernels import (
    cwt,
    gaussian_bump,
    make_band_limited_kernel,
    make_local_means_kernel,
    make_radial_diff_kernel,
)
from .norms import B_VARIANTS, F_VARIANTS, SpaceParams, norm_B_variant, norm_F_variant
from .seqnorms import SeqSpaceParams, from_function_params, seq_norm
from .wavelets import (
    admissibility_check,
    analyze,
    catalog_names,
    decay_check,
    load_filter_pair,
    synthesize,
    wavelet_channels,
    CoeffSequence,
)

VERSION = "0.1.0"

DEFAULTS: dict = {
    "space": "bt-F",
    "variants": [5],
    "params": {"s": 0.0, "tau": 0.0, "p": 2.0, "q": 2.0, "a": 3.0, "r": 1.0, "R": 1},
    "kernel": "band-limited",
    "wavelet": "spline-2-4",
    "grid": {"n": 1, "J": 8},
    "scales": {"m": 4},
    "corpus": {"kind": "band-limited", "count": 3, "seed": 1234},
    "set": {"kind": "half", "d": 0.5, "J": 5, "density": 0.3, "seed": 7},
    "probes": {"r": [0.25, 0.5, 2.0, 4.0], "z": 0.0, "direction": "right", "space": "P"},
    "out": ".",
    "formats": ["json"],
}

_SPACES = ("bt-F", "bt-B", "fh", "bh", "seq-f", "seq-b", "g-P", "g-L")
_KERNELS = ("band-limited", "local-means", "radial-diff")
_CORPUS_KINDS = ("band-limited", "modulated-gaussian", "atoms")
_SET_KINDS = ("empty", "cell", "half", "random")


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    cur = cfg
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise BtlhError(f"config key {dotted!r} indexes through a non-table")
    cur[keys[-1]] = value


def resolve_config(args: argparse.Namespace) -> dict:
    # deep copy: --set writes through nested tables and must never touch
    # the shared defaults
    cfg = copy.deepcopy(DEFAULTS)
    if args.config is not None:
        text = Path(args.config).read_text(encoding="utf-8")
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BtlhError(f"config file {args.config!r} is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise BtlhError("config document must be a JSON object")
        cfg = _merge(cfg, loaded)
    for item in args.set or []:
        if "=" not in item:
            raise BtlhError(f"--set needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_path(cfg, key, value)
    if args.seed is not None:
        cfg["corpus"] = dict(cfg["corpus"], seed=args.seed)
        cfg["set"] = dict(cfg["set"], seed=args.seed)
    if args.out is not None:
        cfg["out"] = args.out
    formats = list(cfg["formats"])
    if args.json and "json" not in formats:
        formats.append("json")
    if args.csv and "csv" not in formats:
        formats.append("csv")
    cfg["formats"] = formats
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    if cfg["space"] not in _SPACES:
        raise BtlhError(f"unknown space selector {cfg['space']!r}; one of {_SPACES}")
    if cfg["kernel"] not in _KERNELS:
        raise BtlhError(f"unknown kernel selector {cfg['kernel']!r}; one of {_KERNELS}")
    if cfg["wavelet"] not in catalog_names():
        raise BtlhError(
            f"unknown wavelet {cfg['wavelet']!r}; catalog: {', '.join(catalog_names())}"
        )
    if cfg["corpus"]["kind"] not in _CORPUS_KINDS:
        raise BtlhError(f"unknown corpus kind {cfg['corpus']['kind']!r}")
    if cfg["set"]["kind"] not in _SET_KINDS:
        raise BtlhError(f"unknown set kind {cfg['set']['kind']!r}")
    n, J = int(cfg["grid"]["n"]), int(cfg["grid"]["J"])
    if n not in (1, 2):
        raise BtlhError(f"dimension must be 1 or 2, got {n}")
    if not 3 <= J <= 12:
        raise BtlhError(f"resolution J must lie in [3, 12], got {J}")


def _space_params(cfg: dict) -> SpaceParams:
    p = cfg["params"]
    return SpaceParams(
        s=float(p["s"]), tau=float(p["tau"]), p=float(p["p"]), q=float(p["q"]),
        a=None if p.get("a") is None else float(p["a"]),
        r=None if p.get("r") is None else float(p["r"]),
        R=int(p.get("R", 1)),
    )


def _h_params(cfg: dict) -> HausdorffSpaceParams:
    p = cfg["params"]
    return HausdorffSpaceParams(
        s=float(p["s"]), tau=float(p["tau"]), p=float(p["p"]), q=float(p["q"]),
        a=None if p.get("a") is None else float(p["a"]),
        r=None if p.get("r") is None else float(p["r"]),
        R=int(p.get("R", 1)),
    )


def _kernel(cfg: dict):
    n, J = int(cfg["grid"]["n"]), int(cfg["grid"]["J"])
    kind = cfg["kernel"]
    if kind == "band-limited":
        return make_band_limited_kernel(n, J)
    if kind == "local-means":
        return make_local_means_kernel(gaussian_bump(n, J), N=2)
    profile = lambda r: np.exp(-np.pi * np.asarray(r, dtype=np.float64) ** 2)
    return make_radial_diff_kernel(profile, R=int(cfg["params"].get("R", 1)), n=n, J=J)


def build_corpus(cfg: dict) -> list[tuple[str, SampledField]]:
    """Seeded corpus on the configured grid; deterministic per config."""
    n, J = int(cfg["grid"]["n"]), int(cfg["grid"]["J"])
    kind = cfg["corpus"]["kind"]
    count = int(cfg["corpus"]["count"])
    rng = np.random.default_rng(int(cfg["corpus"]["seed"]))
    N = 1 << J
    out = []
    for i in range(count):
        if kind == "band-limited":
            K = max(2, N // 8)
            spec = np.zeros((N,) * n, dtype=np.complex128)
            for _ in range(6):
                k = tuple(int(rng.integers(1, K)) for _ in range(n))
                amp = rng.normal() / (1.0 + float(np.hypot(*k) if n == 2 else k[0]))
                spec[k] = amp * np.exp(2j * np.pi * rng.uniform())
            vals = np.fft.ifftn(spec).real * N**n
        elif kind == "modulated-gaussian":
            axes = np.meshgrid(*[(np.arange(N) / N) for _ in range(n)], indexing="ij")
            c = rng.uniform(size=n)
            sig = rng.uniform(0.05, 0.15)
            d2 = sum(((ax - ci + 0.5) % 1.0 - 0.5) ** 2 for ax, ci in zip(axes, c))
            k = rng.integers(2, max(3, N // 8))
            vals = np.exp(-0.5 * d2 / sig**2) * np.cos(2 * np.pi * k * axes[0])
        else:
            W = load_filter_pair(cfg["wavelet"], n)
            j0 = int(rng.integers(1, max(2, J - 3)))
            ch = wavelet_channels(n)[int(rng.integers(len(wavelet_channels(n))))]
            arr = np.zeros((1 << j0,) * n)
            arr[tuple(int(rng.integers(1 << j0)) for _ in range(n))] = 1.0
            vals = synthesize(CoeffSequence(n, j0, j0, {(ch, j0): arr}), W, J).values
        f = SampledField.from_samples(vals, remove_mean=True)
        out.append((f"{kind}-{i:02d}", f))
    return out


def _norm_of(f: SampledField, cfg: dict, variant: int) -> float:
    space = cfg["space"]
    m = int(cfg["scales"]["m"])
    if space == "bt-F":
        return norm_F_variant(f, _space_params(cfg), _kernel(cfg), variant, m)
    if space == "bt-B":
        return norm_B_variant(f, _space_params(cfg), _kernel(cfg), variant, m)
    if space == "fh":
        return norm_FH_variant(f, _h_params(cfg), _kernel(cfg), variant, m)
    if space == "bh":
        return norm_BH_variant(f, _h_params(cfg), _kernel(cfg), variant, m)
    if space in ("seq-f", "seq-b"):
        W = load_filter_pair(cfg["wavelet"], f.n)
        lam = analyze(f, W, (0, f.J - 1))
        pp = cfg["params"]
        SP = from_function_params(
            float(pp["s"]), float(pp["tau"]), float(pp["p"]), float(pp["q"]), n=f.n
        )
        return seq_norm(lam, SP, space.split("-")[1])
    # group flavors ride on the wavelet transform of the field
    pp = cfg["params"]
    GP = GSpaceParams(
        s=float(pp["s"]), tau=float(pp["tau"]), p=float(pp["p"]), q=float(pp["q"]),
        a=float(pp["a"]),
    )
    return norm_G(_cwt_field(f), GP, space.split("-")[1])


def _analyzing_window(n: int, J: int) -> SampledField:
    N = 1 << J
    x = (np.arange(N) / N + 0.5) % 1.0 - 0.5
    sig = 0.07
    if n == 1:
        gv = (1.0 - (x / sig) ** 2) * np.exp(-(x**2) / (2 * sig**2))
    else:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        r2 = xx**2 + yy**2
        gv = (2.0 - r2 / sig**2) * np.exp(-r2 / (2 * sig**2))
    gv = gv - gv.mean()
    return SampledField(n, J, gv, mean_zero=True)


def _cwt_field(f: SampledField):
    g = _analyzing_window(f.n, f.J)
    top = max(0, f.J - 6)
    return cwt(f, g, ScaleGrid(0, top, 4))


def _write_report(cfg: dict, name: str, payload: dict) -> list[str]:
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"version": VERSION, "config": cfg, **payload}
    written = []
    if "json" in cfg["formats"]:
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(str(path))
    if "csv" in cfg["formats"] and "rows" in payload:
        path = out_dir / f"{name}.csv"
        rows = payload["rows"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if rows:
                head = sorted(rows[0])
                writer.writerow(head)
                for row in rows:
                    writer.writerow([_csv_cell(row[k]) for k in head])
            writer.writerow(["#config", json.dumps(cfg, sort_keys=True)])
            writer.writerow(["#version", VERSION])
        written.append(str(path))
    return written


def _csv_cell(v):
    return repr(v) if isinstance(v, float) else v


def cmd_gen_corpus(cfg: dict) -> list[str]:
    corpus = build_corpus(cfg)
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for name, f in corpus:
        path = out_dir / f"corpus-{name}.csv"
        save_field_csv(f, str(path))
        files.append(str(path))
    payload = {"rows": [{"field": name, "file": fp} for (name, _), fp in zip(corpus, files)]}
    return _write_report(cfg, "corpus_manifest", payload) + files


def cmd_norm(cfg: dict) -> list[str]:
    corpus = build_corpus(cfg)
    rows = []
    for name, f in corpus:
        for v in cfg["variants"]:
            rows.append({"field": name, "variant": int(v), "value": _norm_of(f, cfg, int(v))})
    return _write_report(cfg, "norm_report", {"rows": rows})


def cmd_equivalence(cfg: dict) -> list[str]:
    if cfg["space"] not in ("bt-F", "bt-B"):
        raise BtlhError("equivalence reports cover the bt-F and bt-B families")
    variants = F_VARIANTS if cfg["space"] == "bt-F" else B_VARIANTS
    corpus = build_corpus(cfg)
    rows = []
    values: dict[int, list[float]] = {v: [] for v in variants}
    for name, f in corpus:
        for v in variants:
            val = _norm_of(f, cfg, v)
            values[v].append(val)
            rows.append({"field": name, "variant": v, "value": val})
    pairs = {}
    for i in variants:
        for j in variants:
            if i >= j:
                continue
            ratios = [a / b for a, b in zip(values[i], values[j]) if b > 0]
            if ratios:
                pairs[f"{i}/{j}"] = [min(ratios), max(ratios)]
    return _write_report(cfg, "equivalence_report", {"rows": rows, "pairs": pairs})


def _build_set(cfg: dict) -> GridSet:
    sc = cfg["set"]
    J = int(sc["J"])
    N = 1 << J
    kind = sc["kind"]
    if kind == "empty":
        mask = np.zeros(N, dtype=bool)
    elif kind == "cell":
        mask = np.zeros(N, dtype=bool)
        mask[0] = True
    elif kind == "half":
        mask = np.arange(N) < N // 2
    else:
        rng = np.random.default_rng(int(sc["seed"]))
        mask = rng.uniform(size=N) < float(sc["density"])
    return GridSet(1, J, mask)


def cmd_capacity(cfg: dict) -> list[str]:
    E = _build_set(cfg)
    d = float(cfg["set"]["d"])
    br = capacity(E, d)
    h0 = capacity(E, 0.0)
    rows = [{
        "kind": cfg["set"]["kind"], "d": d, "lower": br.lower, "upper": br.upper,
        "method": br.method, "h0_lower": h0.lower, "h0_upper": h0.upper,
        "cells": int(E.mask.sum()),
    }]
    return _write_report(cfg, "capacity_report", {"rows": rows})


def cmd_group_check(cfg: dict) -> list[str]:
    pp = cfg["params"]
    GP = GSpaceParams(
        s=float(pp["s"]), tau=float(pp["tau"]), p=float(pp["p"]), q=float(pp["q"]),
        a=float(pp["a"]),
    )
    space = cfg["probes"]["space"]
    direction = cfg["probes"]["direction"]
    corpus = [_cwt_field(f) for _, f in build_corpus(cfg)]
    if not corpus:
        raise InvariantViolation("empty corpus")
    n = corpus[0].n
    z = float(cfg["probes"]["z"])
    rows = []
    for r in cfg["probes"]["r"]:
        g = GroupPoint((z,) * n, float(r))
        worst, shape = operator_bound_check(space, GP, direction, g, corpus)
        rows.append({"r": float(r), "z": z, "ratio": worst, "bound_shape": shape})
    F0 = corpus[0]
    g2 = GroupPoint((0.0,) * n, 2.0)
    haar = {
        "base": haar_integral(F0),
        "right_doubled": haar_integral(right_translate(F0, g2)),
    }
    haar["ratio"] = haar["right_doubled"] / haar["base"] if haar["base"] else float("nan")
    return _write_report(cfg, "group_report", {"rows": rows, "haar": haar})


def cmd_wavelet_audit(cfg: dict) -> list[str]:
    names = cfg.get("audit_wavelets") or [cfg["wavelet"]]
    family = cfg.get("audit_space", "F")
    P = _space_params(cfg)
    rows = []
    for name in names:
        W = load_filter_pair(name, int(cfg["grid"]["n"]))
        rep = decay_check(W)
        ok, required, measured = admissibility_check(W, P, family)
        rows.append({
            "system": name,
            "moments_analysis": W.moments_analysis,
            "moments_synthesis": W.moments_synthesis,
            "k_analysis": W.k_analysis,
            "k_synthesis": W.k_synthesis,
            "pr_residual": W.pr_residual,
            "tail_resolved": rep.tail_resolved,
            "slope_measured": rep.slope_measured,
            "slope_reference": rep.slope_reference,
            "admissible": ok,
            "required_decay": required,
            "measured_decay": measured,
            "verdict": "pass" if ok else "fail",
        })
    return _write_report(cfg, "wavelet_audit", {"rows": rows})


_COMMANDS = {
    "norm": cmd_norm,
    "equivalence": cmd_equivalence,
    "capacity": cmd_capacity,
    "group-check": cmd_group_check,
    "wavelet-audit": cmd_wavelet_audit,
    "gen-corpus": cmd_gen_corpus,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btlh",
        description="quasi-norms of sampled fields on the dyadic torus",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config document")
    parser.add_argument("--seed", type=int, default=None, help="override corpus and set seeds")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--json", action="store_true", help="emit JSON reports")
    parser.add_argument("--csv", action="store_true", help="emit CSV reports")
    parser.add_argument(
        "--set", action="append", metavar="KEY=VALUE",
        help="override one config key (dotted path, JSON value)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        written = _COMMANDS[args.command](cfg)
    except NumericalRangeError as exc:
        print(f"numerical range error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except BtlhError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
