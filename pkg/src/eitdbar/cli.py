"""Command-line entry points.

Subcommands: generate-dataset, simulate, reconstruct, evaluate, render.
Every run echoes its fully resolved configuration as JSON into the output
directory so results are reproducible from the echo alone.

Exit codes: 0 success, 1 validation/usage failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .beltrami import CgoSolverConfig
from .dataset import DatasetConfig, generate_dataset, read_pair
from .dbar import DbarSolveConfig, reconstruct
from .electrodes import (
    CurrentPatternBasis,
    act4_layout,
    build_nd_matrix,
    circular_layout,
    fit_sigma0,
    invert_nd,
    kit4_circle_layout,
    load_measurements,
    save_measurements,
    scale_to_unit,
    simulate_electrode_data,
    voltage_to_current_basis,
    _layout_from_dict,
)
from .errors import ConvergenceError, ValidationError
from .grids import SquareGrid
from .metrics import evaluate_images
from .phantoms import (
    ConductivityImage,
    generate_act4_phantom,
    generate_kit4_phantom,
    rasterize,
)
from .scattering import texp_from_dn

log = logging.getLogger("eitdbar")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

LAYOUTS = {
    "act4": act4_layout,
    "kit4-circle": kit4_circle_layout,
    "unit-disc-32": lambda: circular_layout(32, 1.0, 2 * np.pi / 32 * 0.85),
    "unit-disc-16": lambda: circular_layout(16, 1.0, 2 * np.pi / 16 * 0.85),
}


def _echo_config(out_dir: Path, name: str, cfg: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}_config.json").write_text(json.dumps(cfg, indent=1, default=str))


def cmd_generate_dataset(args) -> int:
    cfg = DatasetConfig(
        style=args.style,
        count=args.count,
        master_seed=args.seed,
        sim_k_n=args.sim_n,
        sim_k_half_width=5.0 if args.style == "act4" else 5.5,
        radius_range=(3.5, 5.0) if args.style == "act4" else (4.0, 5.5),
        out_k_n=args.out_n,
        z_n=args.z_n,
        cgo=CgoSolverConfig(box_n=args.cgo_n),
        solver_tol=args.tol,
    )
    out = Path(args.out)
    _echo_config(out, "generate_dataset", {**cfg.to_json_dict(), "resume": args.resume})
    generate_dataset(cfg, out, resume=args.resume)
    print(f"wrote dataset to {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    layout = LAYOUTS[args.layout]()
    if args.basis == "trig":
        basis = CurrentPatternBasis.trigonometric(layout)
    else:
        basis = CurrentPatternBasis.adjacent(layout.L)
    rng = np.random.default_rng(args.seed)
    grid = SquareGrid(128, 1.0)
    if args.phantom == "homogeneous":
        img = ConductivityImage(grid, np.full((128, 128), args.background), sigma_b=args.background)
    elif args.phantom == "annulus":
        X, Y = grid.mesh()
        vals = np.where(np.hypot(X, Y) < 0.5, 2.0 * args.background, args.background)
        img = ConductivityImage(grid, vals, sigma_b=args.background)
    elif args.phantom == "kit4":
        seed_img, specs = generate_kit4_phantom(rng)
        img = rasterize(specs, seed_img.sigma_b, grid)
    else:
        seed_img, specs = generate_act4_phantom(rng)
        img = rasterize(specs, seed_img.sigma_b, grid)
    currents, voltages = simulate_electrode_data(img, layout, basis)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_measurements(
        out,
        layout,
        basis.kind,
        currents,
        voltages,
        r0=layout.max_radius,
        sigma0=img.sigma_b if args.record_sigma0 else None,
    )
    if args.truth_out:
        g64 = SquareGrid(64, 1.0)
        from scipy.interpolate import RegularGridInterpolator

        c = grid.coords()
        interp = RegularGridInterpolator((c, c), img.values, method="nearest")
        X, Y = g64.mesh()
        vals = interp(np.stack([Y.ravel(), X.ravel()], axis=-1)).reshape(64, 64)
        truth = ConductivityImage(g64, vals, sigma_b=img.sigma_b)
        from .dataset import TrainingPair, write_pair
        from .dbar import LowPassReconstruction

        rec = LowPassReconstruction(grid=g64, m0=np.ones((64, 64), dtype=complex),
                                    sigma_db=np.full((64, 64), img.sigma_b),
                                    sigma_b=img.sigma_b)
        write_pair(TrainingPair(truth=truth, recon=rec, seed=args.seed, radius=0.0,
                                sigma_b=img.sigma_b, style="kit4"), Path(args.truth_out))
    _echo_config(out.parent, "simulate", vars(args))
    print(f"wrote measurements to {out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    meas_path = Path(args.measurements)
    if not meas_path.exists():
        raise ValidationError(f"measurement file not found: --measurements {meas_path}")
    meas = load_measurements(meas_path)
    if args.layout is not None:
        lay_path = Path(args.layout)
        if not lay_path.exists():
            raise ValidationError(f"layout file not found: --layout {lay_path}")
        layout = _layout_from_dict(json.loads(lay_path.read_text()))
    else:
        layout = meas["layout"]
    currents, voltages = meas["currents"], meas["voltages"]
    if meas.get("applied") == "voltage":
        currents, voltages = voltage_to_current_basis(voltages, currents)
    basis_kind = meas.get("basis_kind", "trigonometric")
    if basis_kind == "trigonometric":
        basis = CurrentPatternBasis.trigonometric(layout)
    else:
        basis = CurrentPatternBasis.adjacent(layout.L)
    R = build_nd_matrix(currents, voltages, layout, basis)
    sigma0 = args.sigma0 if args.sigma0 is not None else meas.get("sigma0")
    if sigma0 is None:
        if layout.kind != "circle":
            raise ValidationError("--sigma0 required for non-circular layouts")
        grid = SquareGrid(64, 1.0)
        ones = ConductivityImage(grid, np.ones((64, 64)))
        hc, hv = simulate_electrode_data(ones, layout, basis)
        sigma0 = fit_sigma0(R, build_nd_matrix(hc, hv, layout, basis))
        log.info("fitted sigma0 = %.5f", sigma0)
    Ru = scale_to_unit(R, layout.max_radius, sigma0)
    L = invert_nd(Ru)
    k_grid = SquareGrid(args.k_n, args.radius, include_origin=True)
    texp = texp_from_dn(L, layout, k_grid, R_meas=args.radius)
    cfg = DbarSolveConfig(z_grid=SquareGrid(args.z_n, 1.0), tol=args.tol)
    rec = reconstruct(texp, sigma_b=float(sigma0), cfg=cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(out, "reconstruct", {**vars(args), "sigma0_used": float(sigma0)})
    _write_recon_eitp(rec, out / "reconstruction.eitp")
    _render_array(rec.sigma_db, out / "reconstruction.png", args.colormap, None, None)
    print(f"reconstruction written to {out}")
    print(f"sigma_db range: [{rec.sigma_db.min():.5f}, {rec.sigma_db.max():.5f}]")
    return EXIT_OK


def _write_recon_eitp(rec, path: Path) -> None:
    # recon-only container: the truth slot mirrors the reconstruction
    from .dataset import TrainingPair, write_pair

    truth = ConductivityImage(rec.grid, rec.sigma_db.copy(), sigma_b=rec.sigma_b)
    pair = TrainingPair(truth=truth, recon=rec, seed=0, radius=0.0,
                        sigma_b=rec.sigma_b, style="kit4")
    write_pair(pair, path)


def cmd_evaluate(args) -> int:
    pair = read_pair(args.recon)
    if args.truth_eitp:
        truth = read_pair(args.truth_eitp).truth.values
    else:
        truth = pair.truth.values
    report = evaluate_images(pair.recon.sigma_db, truth, grid=pair.truth.grid, mask=args.mask)
    text = report.to_text()
    print(text, end="")
    print("row:", report.to_row())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "row: " + report.to_row() + "\n")
    return EXIT_OK


def _render_array(values, path: Path, colormap: str, vmin, vmax) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    lo = float(values.min() if vmin is None else vmin)
    hi = float(values.max() if vmax is None else vmax)
    path.parent.mkdir(parents=True, exist_ok=True)
    plt.imsave(path, values, cmap=colormap, vmin=lo, vmax=hi, origin="lower")
    sidecar = path.with_suffix(path.suffix + ".txt")
    sidecar.write_text(f"min: {values.min():.6g}\nmax: {values.max():.6g}\n"
                       f"scale_min: {lo:.6g}\nscale_max: {hi:.6g}\ncolormap: {colormap}\n")


def cmd_render(args) -> int:
    pair = read_pair(args.input)
    values = pair.recon.sigma_db if args.which == "recon" else pair.truth.values
    vmin = vmax = None
    if args.match:
        other = read_pair(args.match)
        ov = other.recon.sigma_db if args.which == "recon" else other.truth.values
        vmin = min(values.min(), ov.min())
        vmax = max(values.max(), ov.max())
    _render_array(values, Path(args.out), args.colormap, vmin, vmax)
    print(f"rendered {args.which} to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eitdbar", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-dataset", help="simulate training pairs")
    g.add_argument("--style", choices=["act4", "kit4"], required=True)
    g.add_argument("--count", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--resume", action="store_true")
    g.add_argument("--cgo-n", type=int, default=128)
    g.add_argument("--sim-n", type=int, default=32)
    g.add_argument("--out-n", type=int, default=64)
    g.add_argument("--z-n", type=int, default=64)
    g.add_argument("--tol", type=float, default=1e-6)
    g.set_defaults(func=cmd_generate_dataset)

    s = sub.add_parser("simulate", help="simulate a tank measurement file")
    s.add_argument("--phantom", choices=["homogeneous", "annulus", "kit4", "act4"], required=True)
    s.add_argument("--layout", choices=sorted(LAYOUTS), default="unit-disc-32")
    s.add_argument("--basis", choices=["trig", "adjacent"], default="trig")
    s.add_argument("--background", type=float, default=0.3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--record-sigma0", action="store_true")
    s.add_argument("--truth-out", default=None, help="also write the 64x64 truth as an EITP file")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reconstruct", help="reconstruct from a measurement file")
    r.add_argument("--measurements", required=True)
    r.add_argument("--layout", default=None, help="layout JSON overriding the embedded one")
    r.add_argument("--radius", type=float, required=True, help="scattering truncation radius R_meas")
    r.add_argument("--sigma0", type=float, default=None)
    r.add_argument("--k-n", type=int, default=64)
    r.add_argument("--z-n", type=int, default=64)
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("--colormap", default="viridis")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("evaluate", help="SSIM and relative errors of a reconstruction")
    e.add_argument("--recon", required=True)
    e.add_argument("--truth-eitp", default=None)
    e.add_argument("--mask", choices=["full-square", "disc"], default="full-square")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("render", help="render an EITP file to an image")
    d.add_argument("--input", required=True)
    d.add_argument("--which", choices=["recon", "truth"], default="recon")
    d.add_argument("--colormap", default="viridis")
    d.add_argument("--match", default=None, help="share the color scale with another EITP file")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "generate-dataset" and args.count is None:
        args.count = 4096 if args.style == "act4" else 15360
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
