"""Command line interface.

Subcommands cover the full pipeline: ``simulate`` blurs a test image
and adds noise, ``approx`` factorizes an operator into a Kronecker
sum, ``deblur`` restores an observation, ``sweep`` scans the
regularization weight, and ``metrics`` evaluates image files.

Every option can also be supplied through ``--config FILE`` holding
flat ``key = value`` lines (keys spelled like the flags, without the
leading dashes); explicit flags win over the file, which wins over
built-in defaults.  The resolved configuration is echoed into each
JSON output so any run can be reproduced from its artifacts.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import io as kio
from .blurmodel import (
    BC_ZERO,
    BOUNDARY_CONDITIONS,
    NoiseSpec,
    Psf,
    add_noise,
    build_blur_matrix,
    make_test_image,
    synth_speckle_psf,
)
from .cgls import CglsConfig
from .exceptions import NumericalError, ValidationError
from .kronop import MATERIALIZE_CAP, KroneckerSum, assemble
from .linalg import cast, vec, unvec
from .lowrank import EgkbConfig, RsvdConfig, egkb, rsvd
from .metrics import CostModel, FlopCounter, isnr_db, predict_speedups, relative_error, snr_db
from .rearrange import BlockScheme, rearrange
from .splitbregman import SbConfig, sb_run, sweep
from .validation import require


@dataclasses.dataclass(frozen=True)
class Opt:
    """One CLI option: flag spelling, value parser, default, help."""

    name: str
    parse: type | None
    default: object
    help: str = ""
    flag: bool = False  # boolean switch, true when present

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


_COMMON = [
    Opt("config", str, None, "flat key = value file with option defaults"),
    Opt("seed", int, 0, "seed for every random draw"),
]

_SIMULATE = _COMMON + [
    Opt("image", str, None, "input truth image (binary PGM)"),
    Opt("pattern", int, 0, "generate a built-in piecewise-constant truth image of this side"),
    Opt("psf", str, None, "PSF kernel file (matrix container)"),
    Opt("synth-psf", int, 0, "generate a random speckle PSF of this odd size"),
    Opt("roughness", float, 0.3, "correlation length fraction for the synthetic PSF"),
    Opt("bc", str, BC_ZERO, "boundary condition: zero or reflexive"),
    Opt("noise", float, 0.0, "relative noise level, e.g. 0.07 for 7%"),
    Opt("emit-matrix", None, False, "also write the dense blur matrix", flag=True),
    Opt("depth", int, 16, "PGM bit depth for outputs (8 or 16)"),
    Opt("out-dir", str, None, "output directory"),
]

_APPROX = _COMMON + [
    Opt("matrix", str, None, "operator to factorize (matrix container)"),
    Opt("psf", str, None, "build the operator from this PSF instead"),
    Opt("side", int, 0, "image side when building from a PSF"),
    Opt("bc", str, BC_ZERO, "boundary condition for the built operator"),
    Opt("m1", int, 0, "block grid rows (0 = infer square scheme)"),
    Opt("m2", int, 0, "block rows"),
    Opt("n1", int, 0, "block grid columns"),
    Opt("n2", int, 0, "block columns"),
    Opt("engine", str, "egkb", "factorization engine: egkb or rsvd"),
    Opt("prec", str, "double", "working precision: double or single"),
    Opt("k", int, 0, "rank for the rsvd engine (0 = estimate via egkb)"),
    Opt("k-max", int, 20, "rank cap for the egkb engine"),
    Opt("p", int, 2, "extra enlargement / oversampling columns"),
    Opt("q", int, 1, "power iterations for the rsvd engine"),
    Opt("tau-egkb", float, 1e-4, "decay tolerance of the rank rule"),
    Opt("k-min", int, 2, "floor of the rank rule"),
    Opt("reorth", str, None, "one-sided or full (default picks by precision)"),
    Opt("out-dir", str, None, "output directory"),
]

_DEBLUR = _COMMON + [
    Opt("observed", str, None, "observed image (binary PGM)"),
    Opt("operator-dir", str, None, "factorized operator directory"),
    Opt("matrix", str, None, "dense operator (matrix container)"),
    Opt("variant", str, "anisotropic", "anisotropic or isotropic shrinkage"),
    Opt("lam", float, 0.1, "data-coupling weight lambda"),
    Opt("beta", float, 0.0, "L1 weight (exclusive with gamma)"),
    Opt("gamma", float, 0.0, "shrinkage ratio lambda^2 / beta (exclusive with beta)"),
    Opt("tau-sb", float, 1e-3, "outer relative-change stopping tolerance"),
    Opt("l-max", int, 50, "outer iteration cap"),
    Opt("tau-cgls", float, 1e-4, "inner relative-change stopping tolerance"),
    Opt("i-max", int, 100, "inner iteration cap"),
    Opt("warm-start", None, False, "start each inner solve from the previous iterate", flag=True),
    Opt("truth", str, None, "ground-truth image for error metrics"),
    Opt("depth", int, 16, "PGM bit depth for the restoration (8 or 16)"),
    Opt("out-dir", str, None, "output directory"),
]

_SWEEP = _COMMON + [
    Opt("observed", str, None, "observed image (binary PGM)"),
    Opt("operator-dir", str, None, "factorized operator directory"),
    Opt("matrix", str, None, "dense operator (matrix container)"),
    Opt("variant", str, "anisotropic", "anisotropic or isotropic shrinkage"),
    Opt("gamma", float, 2.0, "fixed shrinkage ratio tying beta to each lambda"),
    Opt("lam-min", float, 1e-3, "smallest lambda"),
    Opt("lam-max", float, 1.0, "largest lambda"),
    Opt("count", int, 100, "grid size"),
    Opt("tau-sb", float, 1e-3, "outer relative-change stopping tolerance"),
    Opt("l-max", int, 50, "outer iteration cap"),
    Opt("tau-cgls", float, 1e-4, "inner relative-change stopping tolerance"),
    Opt("i-max", int, 100, "inner iteration cap"),
    Opt("truth", str, None, "ground-truth image for error metrics"),
    Opt("out-dir", str, None, "output directory"),
]

_METRICS = _COMMON + [
    Opt("truth", str, None, "ground-truth image"),
    Opt("observed", str, None, "observed image"),
    Opt("restored", str, None, "restored image"),
    Opt("clean", str, None, "noise-free observation, for the SNR of the observed image"),
    Opt("pred-side", int, 0, "image side for predicted speedups"),
    Opt("pred-k", int, 0, "Kronecker rank for predicted speedups"),
    Opt("pred-kp", int, 0, "enlarged rank (defaults to pred-k)"),
    Opt("pred-rho", float, 1.0, "factorization cost weight (1 bidiagonal, 2 randomized)"),
    Opt("pred-iota", int, 0, "total inner iterations for the amortized speedup"),
    Opt("pred-p-rows", int, 0, "difference-operator rows (defaults to side*(side-1))"),
    Opt("out", str, None, "write the JSON here instead of stdout"),
]

_TABLES = {
    "simulate": _SIMULATE,
    "approx": _APPROX,
    "deblur": _DEBLUR,
    "sweep": _SWEEP,
    "metrics": _METRICS,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kronblur",
        description="Kronecker-sum operator factorization and L1 deblurring",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "simulate": "blur a truth image and add noise",
        "approx": "factorize a blur operator into a Kronecker sum",
        "deblur": "restore an observed image",
        "sweep": "scan lambda on a log grid at fixed gamma",
        "metrics": "evaluate image files and predicted speedups",
    }
    for name, table in _TABLES.items():
        p = sub.add_parser(name, help=descriptions[name])
        for opt in table:
            if opt.flag:
                p.add_argument(
                    f"--{opt.name}", dest=opt.dest, action="store_true",
                    default=argparse.SUPPRESS, help=opt.help,
                )
            else:
                p.add_argument(
                    f"--{opt.name}", dest=opt.dest, type=str,
                    default=argparse.SUPPRESS, help=opt.help,
                )
    return parser


def _convert(opt: Opt, raw, source: str):
    if isinstance(raw, bool):
        return raw
    try:
        if opt.flag:
            return _parse_bool(str(raw))
        if opt.parse is None:
            return raw
        return opt.parse(raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad value for --{opt.name} from {source}: {raw!r}") from exc


def resolve_options(table: list[Opt], ns: argparse.Namespace) -> dict:
    """Merge defaults, config file values, and explicit flags."""
    values = {opt.dest: opt.default for opt in table}
    config_path = getattr(ns, "config", None)
    if config_path:
        file_values = kio.read_config(config_path)
        known = {opt.name: opt for opt in table}
        for key, raw in file_values.items():
            opt = known.get(key)
            if opt is None:
                raise ValidationError(f"unknown config key {key!r}")
            if key == "config":
                continue
            values[opt.dest] = _convert(opt, raw, "config file")
    for opt in table:
        if hasattr(ns, opt.dest):
            values[opt.dest] = _convert(opt, getattr(ns, opt.dest), "command line")
    values["config"] = config_path
    return values


def _echo(table: list[Opt], values: dict) -> dict:
    """Flag-spelled copy of the resolved options, for JSON echoing."""
    out = {}
    for opt in table:
        if opt.name == "config":
            continue
        out[opt.name] = values[opt.dest]
    return out


def _need_out_dir(values: dict) -> str:
    out_dir = values.get("out_dir")
    require(bool(out_dir), "--out-dir is required")
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _load_psf(values: dict) -> Psf:
    if values.get("psf"):
        return Psf(kio.read_mtx(values["psf"]))
    size = int(values.get("synth_psf", 0))
    require(size > 0, "provide --psf FILE or --synth-psf SIZE")
    return synth_speckle_psf(size, roughness=values["roughness"], seed=values["seed"])


def cmd_simulate(values: dict) -> int:
    out_dir = _need_out_dir(values)
    require(
        bool(values["image"]) != (values["pattern"] > 0),
        "provide exactly one of --image or --pattern",
    )
    if values["image"]:
        img = kio.read_pgm(values["image"])
        require(img.shape[0] == img.shape[1], "truth image must be square")
    else:
        img = make_test_image(values["pattern"])
    n = img.shape[0]
    psf = _load_psf(values)
    require(values["bc"] in BOUNDARY_CONDITIONS, f"unknown boundary condition {values['bc']!r}")
    a = build_blur_matrix(psf, n, values["bc"])
    x = vec(img)
    b_true = a @ x
    b, _ = add_noise(b_true, NoiseSpec(values["noise"], values["seed"]))

    depth = values["depth"]
    kio.write_pgm(os.path.join(out_dir, "truth.pgm"), img, depth)
    kio.write_pgm(os.path.join(out_dir, "clean.pgm"), unvec(b_true, n, n), depth)
    kio.write_pgm(os.path.join(out_dir, "observed.pgm"), unvec(b, n, n), depth)
    kio.write_mtx(os.path.join(out_dir, "psf.mtx"), psf.kernel)
    if values["emit_matrix"]:
        kio.write_mtx(os.path.join(out_dir, "matrix.mtx"), a)
    summary = {
        "side": n,
        "psf_shape": list(psf.shape),
        "snr_db": snr_db(b_true, b),
        "config": _echo(_SIMULATE, values),
    }
    kio.write_json(os.path.join(out_dir, "summary.json"), summary)
    print(f"wrote simulation to {out_dir} (SNR {kio.jsonable(summary['snr_db'])} dB)")
    return 0


def _load_operator_matrix(values: dict) -> tuple[np.ndarray, BlockScheme]:
    if values.get("matrix"):
        a = kio.read_mtx(values["matrix"]).astype(np.float64)
    else:
        require(bool(values.get("psf")) and values.get("side", 0) > 0,
                "provide --matrix FILE or --psf FILE with --side N")
        psf = Psf(kio.read_mtx(values["psf"]))
        a = build_blur_matrix(psf, values["side"], values["bc"])
    dims = [values.get(key, 0) for key in ("m1", "m2", "n1", "n2")]
    if all(d > 0 for d in dims):
        scheme = BlockScheme(*dims)
        scheme.check_matrix(a)
    else:
        require(not any(dims), "give all of --m1 --m2 --n1 --n2 or none")
        side = int(round(np.sqrt(a.shape[1])))
        require(a.shape[0] == a.shape[1] and side * side == a.shape[1],
                f"cannot infer a square-image block scheme for shape {a.shape}")
        scheme = BlockScheme.square_image(side)
    return a, scheme


def cmd_approx(values: dict) -> int:
    out_dir = _need_out_dir(values)
    a, scheme = _load_operator_matrix(values)
    require(values["prec"] in ("double", "single"), "--prec must be double or single")
    require(values["engine"] in ("egkb", "rsvd"), "--engine must be egkb or rsvd")
    r_mat = cast(rearrange(a, scheme), values["prec"])

    egkb_cfg = EgkbConfig(
        k_max=values["k_max"], p=values["p"], tau=values["tau_egkb"],
        k_min=values["k_min"], reorth=values["reorth"], seed=values["seed"],
    )
    trace = None
    if values["engine"] == "egkb":
        svd, trace = egkb(r_mat, egkb_cfg)
        k_p = trace.k_p
        rho = 1.0
    else:
        k = values["k"]
        if k <= 0:
            _, trace = egkb(r_mat, egkb_cfg)
            k = trace.chosen_k
        svd = rsvd(r_mat, RsvdConfig(k=k, p=values["p"], q=values["q"], seed=values["seed"]))
        k_p = k + values["p"]
        rho = 2.0

    op = assemble(svd, scheme)
    extra = {
        "engine": values["engine"],
        "precision": values["prec"],
        "k_p": int(k_p),
        "rho": rho,
    }
    kio.save_kron_dir(op, os.path.join(out_dir, "operator"), extra_meta=extra)
    kio.write_mtx(os.path.join(out_dir, "svd_u.mtx"), svd.u.astype(np.float64))
    kio.write_mtx(os.path.join(out_dir, "svd_sigma.mtx"), svd.sigma.astype(np.float64))
    kio.write_mtx(os.path.join(out_dir, "svd_v.mtx"), svd.v.astype(np.float64))

    summary = {
        "k": op.k,
        "k_p": int(k_p),
        "engine": values["engine"],
        "precision": values["prec"],
        "scheme": {"m1": scheme.m1, "m2": scheme.m2, "n1": scheme.n1, "n2": scheme.n2},
        "config": _echo(_APPROX, values),
    }
    r64 = rearrange(a, scheme)
    approx_r = svd.u.astype(np.float64) @ (
        svd.sigma.astype(np.float64)[:, None] * svd.v.astype(np.float64).T
    )
    summary["rel_err_rearranged"] = float(
        np.linalg.norm(r64 - approx_r) / np.linalg.norm(r64)
    )
    if a.size <= MATERIALIZE_CAP:
        summary["rel_err_operator"] = float(
            np.linalg.norm(a - op.materialize()) / np.linalg.norm(a)
        )
    if trace is not None:
        trace_payload = {
            "alphas": trace.alphas,
            "ts": trace.ts,
            "zetas": trace.zetas,
            "nus": trace.nus,
            "chosen_k": trace.chosen_k,
            "k_p": trace.k_p,
            "stop_reason": trace.stop_reason,
            "breakdown": trace.breakdown,
        }
        kio.write_json(os.path.join(out_dir, "trace.json"), trace_payload)
        summary["stop_reason"] = trace.stop_reason
        summary["breakdown"] = trace.breakdown
    kio.write_json(os.path.join(out_dir, "summary.json"), summary)
    print(f"factorized with k={op.k} into {out_dir}")
    return 0


def _load_solver_operator(values: dict):
    """Returns (operator, meta) where meta is None for dense matrices."""
    has_dir = bool(values.get("operator_dir"))
    has_mat = bool(values.get("matrix"))
    require(has_dir != has_mat, "provide exactly one of --operator-dir or --matrix")
    if has_dir:
        return kio.load_kron_dir(values["operator_dir"])
    return kio.read_mtx(values["matrix"]).astype(np.float64), None


def _solver_configs(values: dict, lam: float, beta: float, variant: str) -> SbConfig:
    return SbConfig(
        lam=lam,
        beta=beta,
        variant=variant,
        tau=values["tau_sb"],
        l_max=values["l_max"],
        cgls=CglsConfig(i_max=values["i_max"], tau=values["tau_cgls"]),
        warm_start=bool(values.get("warm_start", False)),
    )


def _resolve_beta(values: dict) -> float:
    beta, gamma = values["beta"], values["gamma"]
    require((beta > 0) != (gamma > 0), "provide exactly one of --beta or --gamma")
    if beta > 0:
        return beta
    return values["lam"] ** 2 / gamma


def cmd_deblur(values: dict) -> int:
    out_dir = _need_out_dir(values)
    require(bool(values["observed"]), "--observed is required")
    b_img = kio.read_pgm(values["observed"])
    require(b_img.shape[0] == b_img.shape[1], "observed image must be square")
    n = b_img.shape[0]
    op, meta = _load_solver_operator(values)
    shape = op.shape
    require(shape == (n * n, n * n),
            f"operator shape {shape} does not match the {n}x{n} observation")

    x_true = None
    if values["truth"]:
        truth_img = kio.read_pgm(values["truth"])
        require(truth_img.shape == b_img.shape, "truth and observation sizes differ")
        x_true = vec(truth_img)

    beta = _resolve_beta(values)
    config = _solver_configs(values, values["lam"], beta, values["variant"])
    counter = FlopCounter()
    result = sb_run(op, vec(b_img), config, x_true=x_true, counter=counter)

    kio.write_pgm(os.path.join(out_dir, "restored.pgm"), unvec(result.x, n, n), values["depth"])
    payload = {
        "outer_iters": result.outer_iters,
        "stop": result.stop,
        "lam": values["lam"],
        "beta": beta,
        "gamma": config.gamma,
        "variant": values["variant"],
        "re": result.re_history,
        "isnr_db": result.isnr_history,
        "rc_sb": result.rc_history,
        "cgls_iters": result.cgls_iters,
        "iota_total": result.iota_total,
        "flops": counter.as_dict(),
        "config": _echo(_DEBLUR, values),
    }
    if x_true is not None and isinstance(op, KroneckerSum):
        payload["snr_db"] = snr_db(op.apply(x_true), vec(b_img))
    elif x_true is not None:
        payload["snr_db"] = snr_db(op @ x_true, vec(b_img))
    if isinstance(op, KroneckerSum):
        s = op.scheme
        model = CostModel(
            m=s.rows, n=s.cols, p_rows=n * (n - 1),
            m1=s.m1, m2=s.m2, n1=s.n1, n2=s.n2,
            k=op.k, k_p=int(meta.get("k_p", op.k)) if meta else op.k,
            rho=float(meta.get("rho", 1.0)) if meta else 1.0,
            iota_total=result.iota_total,
        )
        pred = predict_speedups(model)
        payload["predicted"] = {
            "sb_speedup": pred.sb_speedup,
            "alg_speedup": pred.alg_speedup,
            "alg_speedup_half_constant": pred.alg_speedup_half_constant,
        }
    kio.write_json(os.path.join(out_dir, "metrics.json"), payload)
    print(
        f"deblurred in {result.outer_iters} outer iterations "
        f"({result.iota_total} inner) into {out_dir}"
    )
    return 0


def cmd_sweep(values: dict) -> int:
    out_dir = _need_out_dir(values)
    require(bool(values["observed"]), "--observed is required")
    b_img = kio.read_pgm(values["observed"])
    require(b_img.shape[0] == b_img.shape[1], "observed image must be square")
    n = b_img.shape[0]
    op, _ = _load_solver_operator(values)
    require(op.shape == (n * n, n * n), "operator does not match the observation")
    require(values["gamma"] > 0, "--gamma must be positive")

    x_true = None
    if values["truth"]:
        x_true = vec(kio.read_pgm(values["truth"]))

    records = sweep(
        op,
        vec(b_img),
        gamma=values["gamma"],
        lam_lo=values["lam_min"],
        lam_hi=values["lam_max"],
        count=values["count"],
        x_true=x_true,
        variant=values["variant"],
        tau=values["tau_sb"],
        l_max=values["l_max"],
        cgls=CglsConfig(i_max=values["i_max"], tau=values["tau_cgls"]),
    )
    csv_path = os.path.join(out_dir, "sweep.csv")
    fields = ["lam", "beta", "re", "isnr_db", "outer_iters", "iota_total", "rc_final"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for rec in records:
            writer.writerow({f: rec[f] for f in fields})
    kio.write_json(
        os.path.join(out_dir, "summary.json"),
        {"count": len(records), "config": _echo(_SWEEP, values)},
    )
    print(f"swept {len(records)} lambda values into {csv_path}")
    return 0


def cmd_metrics(values: dict) -> int:
    payload: dict = {"config": _echo(_METRICS, values)}
    images = {}
    for key in ("truth", "observed", "restored", "clean"):
        if values[key]:
            images[key] = vec(kio.read_pgm(values[key]))
    if "clean" in images and "observed" in images:
        payload["snr_db"] = snr_db(images["clean"], images["observed"])
    if "truth" in images and "restored" in images:
        payload["re"] = relative_error(images["restored"], images["truth"])
    if "truth" in images and "observed" in images:
        payload["re_observed"] = relative_error(images["observed"], images["truth"])
    if all(k in images for k in ("truth", "observed", "restored")):
        payload["isnr_db"] = isnr_db(images["restored"], images["observed"], images["truth"])
    side, k = values["pred_side"], values["pred_k"]
    if side > 0 and k > 0:
        p_rows = values["pred_p_rows"] or side * (side - 1)
        model = CostModel(
            m=side * side, n=side * side, p_rows=p_rows,
            m1=side, m2=side, n1=side, n2=side,
            k=k, k_p=values["pred_kp"] or k,
            rho=values["pred_rho"], iota_total=values["pred_iota"],
        )
        pred = predict_speedups(model)
        payload["predicted"] = {
            "sb_speedup": pred.sb_speedup,
            "alg_speedup": pred.alg_speedup,
            "alg_speedup_half_constant": pred.alg_speedup_half_constant,
        }
    if values["out"]:
        kio.write_json(values["out"], payload)
        print(f"wrote metrics to {values['out']}")
    else:
        print(json.dumps(kio.jsonable(payload), indent=2, sort_keys=True))
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "approx": cmd_approx,
    "deblur": cmd_deblur,
    "sweep": cmd_sweep,
    "metrics": cmd_metrics,
}


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    table = _TABLES[ns.command]
    values = resolve_options(table, ns)
    return _HANDLERS[ns.command](values)


def main(argv=None) -> int:
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
