"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``); flags given on
the command line override config fields, and built-in defaults fill the rest.
Outputs go to ``--out`` (default ``$MECHQSR_OUTPUT_ROOT/<command>``, else
``./mechqsr-out/<command>``) and an existing non-empty directory is refused
unless ``--overwrite`` is passed.

Exit codes: 0 success, 2 usage, 3 numerical accuracy, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import conditioning, formats, hilbert, phasespace, probe, tomography
from .errors import MechQSRError, OrderingError

log = logging.getLogger("mechqsr")

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4
OUTPUT_ROOT_ENV = "MECHQSR_OUTPUT_ROOT"
# keys that do not affect results and so stay out of the config hash
_UNHASHED = {"out", "overwrite", "config", "command", "verbose"}


class UsageError(Exception):
    pass


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, list):
        return complex(text[0], text[1])
    return complex(str(text).replace(" ", "").replace("i", "j"))


# -- argument parsing ------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON run config; flags override its fields")
    p.add_argument("--out", help="output directory")
    p.add_argument("--overwrite", action="store_true", default=None,
                   help="allow writing into a non-empty output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true", default=None)


def _add_state(p):
    p.add_argument("--kind", choices=sorted(hilbert._BUILDERS))
    p.add_argument("--dim", type=int)
    p.add_argument("--n", dest="fock_n", type=int, help="Fock index")
    p.add_argument("--alpha", help="coherent amplitude, e.g. 0.8 or 1+0.5i")
    p.add_argument("--beta", help="cat amplitude, e.g. 0+1.7i")
    p.add_argument("--nbar", type=float, help="thermal occupation")
    p.add_argument("--r", type=float, help="squeezing parameter")


def _add_probe(p):
    p.add_argument("--chi", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--sigma-x", type=float)
    p.add_argument("--sigma-p", type=float)
    p.add_argument("--xbar-l", type=float)
    p.add_argument("--photon-number", type=float, help="derive chi, omega from the pulse")
    p.add_argument("--g0-over-kappa", type=float)


def _add_grid(p):
    p.add_argument("--half-extent", type=float)
    p.add_argument("--grid-n", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mechqsr", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="build a density matrix and summarise it")
    _add_common(p)
    _add_state(p)

    p = sub.add_parser("quasiprob", help="s-parameterized distribution on a grid")
    _add_common(p)
    _add_state(p)
    _add_grid(p)
    p.add_argument("--s", type=float)

    p = sub.add_parser("marginal", help="quadrature marginal at angle theta")
    _add_common(p)
    _add_state(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("tomography", help="simulate pulsed tomography and reconstruct")
    _add_common(p)
    _add_state(p)
    _add_probe(p)
    _add_grid(p)
    p.add_argument("--angles", type=int, help="number of uniform angles in [0, pi)")
    p.add_argument("--per-angle", type=int)
    p.add_argument("--s-target", type=float)
    p.add_argument("--eta-max", type=float)
    p.add_argument("--estimator", choices=["histogram", "kde"])

    p = sub.add_parser("cool", help="two-pulse cooling by measurement")
    _add_common(p)
    _add_probe(p)
    p.add_argument("--nbar", type=float, help="initial thermal occupation")
    p.add_argument("--bath-nbar", type=float, help="bath occupation (default: --nbar)")
    p.add_argument("--quality", type=float, help="mechanical Q (default: no bath)")
    p.add_argument("--pl1", type=float)
    p.add_argument("--pl2", type=float)
    p.add_argument("--chi-sweep", help="comma-separated chi values; writes a sweep table")

    p = sub.add_parser("compare", help="compare two grids written by this tool")
    _add_common(p)
    p.add_argument("--a", dest="grid_a")
    p.add_argument("--b", dest="grid_b")
    return parser


DEFAULTS = {
    "common": {"overwrite": False, "verbose": False},
    "quasiprob": {"s": 0.0, "grid_n": 256},
    "marginal": {"theta": 0.0, "points": 1001},
    "tomography": {"angles": 24, "per_angle": 100000, "estimator": "histogram", "grid_n": 256,
                   "half_extent": 4.0},
    "cool": {"pl1": 0.0, "pl2": 0.0},
}


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < command-line flags."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS.get(args.command, {}))
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in doc.items()})
    for k, v in vars(args).items():
        if v is not None:
            cfg[k] = v
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


# -- builders from config ------------------------------------------------------------

def state_from_config(cfg) -> hilbert.DensityMatrix:
    _require(cfg, "kind", "dim")
    kind = cfg["kind"]
    key = {"fock": "fock_n", "coherent": "alpha", "cat": "beta", "thermal": "nbar", "squeezed": "r"}[kind]
    _require(cfg, key)
    value = cfg[key]
    if kind in ("coherent", "cat"):
        value = parse_complex(value)
    param = hilbert._BUILDERS[kind][1]
    return hilbert.make_state(kind, int(cfg["dim"]), **{param: value})


def probe_from_config(cfg) -> probe.ProbeParams:
    noise = {"sigma_x": cfg.get("sigma_x") or 0.0, "sigma_p": cfg.get("sigma_p") or 0.0,
             "xbar_l": cfg.get("xbar_l") or 0.0}
    if cfg.get("photon_number") is not None:
        _require(cfg, "g0_over_kappa")
        pulse = probe.PulseConfig(cfg["photon_number"], cfg["g0_over_kappa"])
        return probe.derive_probe_params(pulse, **noise)
    _require(cfg, "chi")
    return probe.ProbeParams(cfg["chi"], cfg.get("omega") or 0.0, **noise)


def _provenance(cfg) -> dict:
    hashed = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    return {"config_sha256": formats.config_hash(hashed), "seed": cfg.get("seed")}


def _output_dir(cfg) -> Path:
    out = cfg.get("out")
    if out is None:
        root = os.environ.get(OUTPUT_ROOT_ENV, "mechqsr-out")
        out = Path(root) / cfg["command"]
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not cfg.get("overwrite"):
        raise FileExistsError(f"output directory {out} is not empty (pass --overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands --------------------------------------------------------------------

def cmd_state(cfg) -> dict:
    rho = state_from_config(cfg)
    out = _output_dir(cfg)
    prov = _provenance(cfg)
    summary = {
        "truncation_deficit": rho.truncation_deficit,
        "mean_number": rho.mean_number(),
        "parity": hilbert.parity_expectation(rho),
    }
    formats.write_json(out / "state.json", {**formats.density_matrix_to_dict(rho), "summary": summary}, prov)
    return summary


def cmd_quasiprob(cfg) -> dict:
    rho = state_from_config(cfg)
    s = float(cfg["s"])
    grid = phasespace.quasiprob_grid(rho, s, cfg.get("half_extent"), int(cfg["grid_n"]))
    out = _output_dir(cfg)
    extra = {
        "imag_axis_local_maxima": int(len(phasespace.local_maxima(grid.profile_imag_axis()))),
        **phasespace.radial_summary(grid),
    }
    formats.write_grid(out / "grid", grid, _provenance(cfg), **extra)
    return formats.grid_sidecar(grid, **extra)


def cmd_marginal(cfg) -> dict:
    rho = state_from_config(cfg)
    xs = phasespace.default_xs(rho, int(cfg["points"]))
    m = phasespace.marginal(rho, float(cfg["theta"]), xs)
    out = _output_dir(cfg)
    formats.write_marginal_csv(out / "marginal.csv", m, _provenance(cfg))
    return {"theta": m.theta, "mean": m.mean(), "variance": m.variance()}


def cmd_tomography(cfg) -> dict:
    _require(cfg, "seed")
    rho = state_from_config(cfg)
    pr = probe_from_config(cfg)
    rcfg = tomography.ReconstructionConfig(
        s_target=cfg.get("s_target"), eta_max=cfg.get("eta_max"),
        half_extent=float(cfg["half_extent"]), n=int(cfg["grid_n"]), estimator=cfg["estimator"])
    s_nat = probe.s_parameter(pr)
    if rcfg.s_target is not None and rcfg.s_target > s_nat + 1e-12:
        raise OrderingError(
            f"s_target={rcfg.s_target:g} above the natural s={s_nat:g} would need deconvolution")
    angles = tomography.uniform_angles(int(cfg["angles"]))
    ds = tomography.run_protocol(rho, pr, angles, int(cfg["per_angle"]), int(cfg["seed"]))
    rec = tomography.invert_marginals(ds, rcfg)
    direct = phasespace.quasiprob_grid(rho, rec.s, rec.half_extent, rec.n)
    report = {
        "s_natural": s_nat,
        "s_target": rec.s,
        "negativity_possible": probe.negativity_possible(pr),
        "comparison": tomography.compare_grids(rec, direct).to_dict(),
    }
    out = _output_dir(cfg)
    prov = _provenance(cfg)
    formats.write_dataset(out / "dataset.csv", ds, prov)
    formats.write_grid(out / "reconstruction", rec, prov)
    formats.write_grid(out / "direct", direct, prov)
    formats.write_json(out / "report.json", report, prov)
    return report


def cmd_cool(cfg) -> dict:
    _require(cfg, "nbar")
    nbar = float(cfg["nbar"])
    quality = cfg.get("quality")
    bath_nbar = nbar if cfg.get("bath_nbar") is None else float(cfg["bath_nbar"])
    bath = conditioning.BathParams(bath_nbar, float(quality)) if quality else conditioning.BathParams()
    out = _output_dir(cfg)
    prov = _provenance(cfg)
    if cfg.get("chi_sweep"):
        chis = [float(c) for c in str(cfg["chi_sweep"]).split(",") if c.strip()]
        if cfg.get("photon_number") is None and cfg.get("chi") is None:
            cfg = {**cfg, "chi": chis[0]}
        base = probe_from_config(cfg)
        rows = []
        for chi in chis:
            p = probe.ProbeParams(chi, base.omega, base.sigma_x, base.sigma_p, base.xbar_l)
            run = conditioning.cool_by_measurement(nbar, p, bath, cfg["pl1"], cfg["pl2"])
            rows.append((chi, run.n_eff, run.n_eff_closed, run.relative_error))
        with open(out / "cool_sweep.csv", "w", newline="") as fh:
            fh.write("".join(f"# {k}={prov[k]}\n" for k in sorted(prov)))
            fh.write("chi,n_eff,n_eff_closed_form,relative_error\n")
            fh.writelines(",".join(formats.fmt(v) for v in row) + "\n" for row in rows)
        return {"rows": rows}
    pr = probe_from_config(cfg)
    run = conditioning.cool_by_measurement(nbar, pr, bath, cfg["pl1"], cfg["pl2"])
    record = {
        "inputs": {"nbar": nbar, "probe": pr.to_dict(),
                   "bath": {"nbar": bath.nbar, "quality": bath.quality},
                   "pl1": cfg["pl1"], "pl2": cfg["pl2"]},
        **run.to_dict(),
    }
    formats.write_json(out / "cool.json", record, prov)
    return record


def cmd_compare(cfg) -> dict:
    _require(cfg, "grid_a", "grid_b")
    a = formats.read_grid(cfg["grid_a"])
    b = formats.read_grid(cfg["grid_b"])
    report = tomography.compare_grids(a, b).to_dict()
    out = _output_dir(cfg)
    formats.write_json(out / "compare.json", report, _provenance(cfg))
    return report


COMMANDS = {
    "state": cmd_state,
    "quasiprob": cmd_quasiprob,
    "marginal": cmd_marginal,
    "tomography": cmd_tomography,
    "cool": cmd_cool,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mechqsr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MechQSRError as exc:
        print(f"mechqsr {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"mechqsr {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"mechqsr {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(formats._jsonable(result), sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
