"""Command-line front end: one subcommand per pipeline stage.

Exit codes: 0 success (possibly with skipped-region warnings), 2 input or
validation failure, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .assets import AssetResolver, MakeupPlan, load_catalog
from .compositor import apply_plan
from .errors import MakeupError, NotConverged
from .imaging import load_gray, load_image, save_png
from .matting import make_trimap, solve_matte, trimap_from_gray
from .transfer import TransferConfig, transfer_region

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facemakeup",
        description="Example-based facial makeup transfer pipeline.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trimap", help="expand a region mask into a trimap PNG")
    p.add_argument("mask", help="binary region mask (grayscale PNG)")
    p.add_argument("--band", type=int, default=4, help="expansion radius in px")
    p.add_argument("-o", "--out", required=True, help="output trimap PNG")

    p = sub.add_parser("matte", help="solve a soft alpha matte from a trimap")
    p.add_argument("image", help="source image (PNG/JPEG)")
    p.add_argument("trimap", help="trimap PNG with values {0,128,255}")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--lam", type=float, default=100.0)
    p.add_argument("-o", "--out", required=True, help="output matte PNG")

    p = sub.add_parser("transfer", help="restyle one matted region")
    p.add_argument("subject")
    p.add_argument("example")
    p.add_argument("--matte", required=True, help="subject region matte PNG")
    p.add_argument("--example-mask", required=True, help="example region mask PNG")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strength", type=float, default=None,
                   help="also alpha-blend onto the subject at this strength")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("render", help="render a makeup plan")
    p.add_argument("plan", help="plan JSON")
    p.add_argument("--assets", default=".", help="root for relative asset paths")
    p.add_argument("--catalog", default=None, help="catalog JSON for catalog: refs")
    p.add_argument("--seed", type=int, default=None, help="override the plan seed")
    p.add_argument("--dump-intermediates", metavar="DIR", default=None,
                   help="write per-region trimaps/mattes/styled layers and a "
                        "timing report (JSON + CSV + figure)")
    p.add_argument("-o", "--out", required=True, help="output PNG")

    p = sub.add_parser("consistency",
                       help="optimize color consistency across a collection")
    p.add_argument("tracks", help="tracks JSON")
    p.add_argument("--assets", default=None,
                   help="root for image paths (default: tracks file directory)")
    p.add_argument("--tol", type=float, default=1e-14)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--robust", action="store_true",
                   help="one residual-based reweighting pass")
    p.add_argument("-o", "--out", required=True, help="output directory")

    p = sub.add_parser("catalog", help="catalog utilities")
    catalog_sub = p.add_subparsers(dest="catalog_command", required=True)
    v = catalog_sub.add_parser("validate", help="check a catalog's files")
    v.add_argument("catalog", help="catalog JSON")
    v.add_argument("--assets", default=".", help="root for relative paths")

    p = sub.add_parser("serve", help="run the HTTP preview service")
    p.add_argument("--assets", default=".", help="asset root")
    p.add_argument("--catalog", default=None)
    p.add_argument("--persist", default=None, help="session persistence directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    return parser


def cmd_trimap(args) -> int:
    mask = load_gray(args.mask) >= 0.5
    trimap = make_trimap(mask, args.band)
    save_png(args.out, trimap.astype(float) / 255.0)
    return EXIT_OK


def cmd_matte(args) -> int:
    image = load_image(args.image)
    trimap = trimap_from_gray(load_gray(args.trimap))
    matte = solve_matte(image, trimap, eps=args.eps, lam=args.lam)
    save_png(args.out, matte)
    return EXIT_OK


def cmd_transfer(args) -> int:
    from .compositor import alpha_blend

    subject = load_image(args.subject)
    example = load_image(args.example)
    matte = load_gray(args.matte)
    example_mask = load_gray(args.example_mask) >= 0.5
    cfg = TransferConfig(sigma=args.sigma, bins=args.bins, seed=args.seed)
    styled = transfer_region(subject, example, matte, example_mask, cfg)
    if args.strength is not None:
        styled = alpha_blend(subject, styled, matte, args.strength)
    save_png(args.out, styled)
    return EXIT_OK


def cmd_render(args) -> int:
    plan = MakeupPlan.load(args.plan)
    if args.seed is not None:
        plan.seed = args.seed
    catalog = load_catalog(args.catalog) if args.catalog else None
    resolver = AssetResolver(args.assets, catalog)
    result = apply_plan(plan, resolver)
    save_png(args.out, result.image)

    for region, message in result.warnings:
        print(f"warning: skipped {region}: {message}", file=sys.stderr)

    if args.dump_intermediates:
        from .report import write_timing_report

        out_dir = Path(args.dump_intermediates)
        for region, art in result.artifacts.items():
            stem = region.value.lower()
            save_png(out_dir / f"{stem}_mask.png", art.mask.astype(float))
            save_png(out_dir / f"{stem}_trimap.png", art.trimap.astype(float) / 255.0)
            save_png(out_dir / f"{stem}_matte.png", art.matte)
            save_png(out_dir / f"{stem}_styled.png", art.styled)
        write_timing_report(result, out_dir)
    return EXIT_OK


def cmd_consistency(args) -> int:
    from .consistency import build_observation, correct_image, factorize, load_tracks
    from .report import write_consistency_report

    tracks_path = Path(args.tracks)
    with open(tracks_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    root = Path(args.assets) if args.assets else tracks_path.parent
    names = doc.get("images", [])
    if not names:
        raise MakeupError("tracks file lists no images")
    images = [load_image(root / name) for name in names]

    tracks = load_tracks(doc, images)
    channels = build_observation(tracks)
    model = factorize(channels, tol=args.tol, max_iter=args.max_iter,
                      robust=args.robust)

    out_dir = Path(args.out)
    for i, name in enumerate(names):
        corrected = correct_image(images[i], model, i)
        save_png(out_dir / f"corrected_{Path(name).name}", corrected)
    write_consistency_report(model, names, out_dir)
    if not model.converged:
        print("warning: factorization hit the iteration budget", file=sys.stderr)
    return EXIT_OK


def cmd_catalog_validate(args) -> int:
    from .semantics import load_landmarks

    entries = load_catalog(args.catalog)
    root = Path(args.assets)
    failures = 0
    for entry in entries:
        problems = []
        for label, ref in [("image", entry.image), ("landmarks", entry.landmarks),
                           *((f"mask[{k}]", v) for k, v in entry.masks.items())]:
            if not (root / ref).exists():
                problems.append(f"{label} missing: {ref}")
        if not problems:
            try:
                load_landmarks(root / entry.landmarks)
            except MakeupError as exc:
                problems.append(f"landmarks invalid: {exc}")
        status = "ok" if not problems else "; ".join(problems)
        print(f"{entry.identifier}: {status}")
        failures += bool(problems)
    if failures:
        print(f"{failures}/{len(entries)} entries failed", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    catalog = load_catalog(args.catalog) if args.catalog else None
    app = create_app(args.assets, catalog=catalog, persist_dir=args.persist)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


HANDLERS = {
    "trimap": cmd_trimap,
    "matte": cmd_matte,
    "transfer": cmd_transfer,
    "render": cmd_render,
    "consistency": cmd_consistency,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        handler = cmd_catalog_validate
    else:
        handler = HANDLERS[args.command]
    try:
        return handler(args)
    except NotConverged as exc:
        print(f"error: NotConverged: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MakeupError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
