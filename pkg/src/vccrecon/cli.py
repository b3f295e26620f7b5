"""Command line interface: one executable with pipeline-stage subcommands.

Each stage reads and writes KSP1 tensors so any step can be replayed or
swapped in isolation; ``pipeline`` chains them end to end and emits a
deterministic manifest (configuration plus content hashes of every artifact)
for reproducibility. Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import hashlib
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .calib import SensitivityMaps, calibrate, eigen_maps
from .evaluate import direct_maps, nrmse, project, rss
from .ktensor import (
    KTensor,
    KTensorFormatError,
    center_crop,
    read_ktensor,
    write_ktensor,
)
from .phantom import make_phantom, simulate_kspace
from .recon import solve, synthesize_coil_images
from .sampling import SamplingPattern, apply_pattern
from .vcc import align_sign, center_phase, make_vcc

__all__ = ["RunConfig", "main", "run"]

_MODES = {"complex": "complex", "real": "real_constrained", "imagreg": "imag_penalty"}

_EPILOG = """\
experiment recipes (pipeline flag combinations):
  calibration sweep    pipeline --hf-blobs 3 --maps 2 --mode real --acs {16,24,32,40} --kernel {4,6,8,10}
  map-set comparison   pipeline --hf-blobs 3 --mode real --maps {1,2}
  mode comparison      pipeline --hf-blobs 3 --maps 1 --mode {complex,real,imagreg}
  partial Fourier      pipeline --pf 5/8 --mode {complex,real}
"""


@dataclass(frozen=True)
class RunConfig:
    """Typed flag values of one invocation, with the standard defaults."""

    subcommand: str
    grid: int = 96
    coils: int = 8
    hf_blobs: int = 0
    seed: int = 42
    acs: int = 24
    kernel: int = 6
    thresh: float = 0.001
    crop: float = 0.85
    maps: int = 1
    accel: int = 3
    pf: str = "1"
    mode: str = "real"
    lam: float = 1e-4
    lam_imag: float = 1e-2
    iters: int = 100
    tol: float = 1e-6

    def items(self):
        for f in fields(self):
            yield f.name, getattr(self, f.name)


class UsageError(Exception):
    """Bad flag value or malformed invocation; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load(path):
    try:
        return read_ktensor(path)
    except (OSError, KTensorFormatError) as exc:
        raise RuntimeError(f"cannot read {path}: {exc}") from exc


def _save(path, data, dims):
    try:
        write_ktensor(path, KTensor(np.asarray(data), dims))
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from exc


def _sibling(path, tag):
    p = Path(path)
    if p.suffix == ".ksp1":
        return p.with_suffix(f".{tag}.ksp1")
    return Path(f"{path}.{tag}")


def _check(cond, message):
    if not cond:
        raise UsageError(message)


def _mode(name):
    _check(name in _MODES, f"mode must be one of {sorted(_MODES)}, got {name!r}")
    return _MODES[name]


def _maps_from_file(path):
    t = _load(path)
    arr = t.data.astype(np.complex128)
    if arr.ndim == 3:
        arr = arr[:, :, :, None]
    if arr.ndim != 4:
        raise RuntimeError(f"{path}: expected maps with (x, y, coil[, set]) axes")
    eig = np.ones(arr.shape[:2] + (arr.shape[3],), dtype=np.float32)
    return SensitivityMaps(maps=arr.astype(np.complex64), eigenvalues=eig)


def _cmd_phantom(args):
    _check(args.grid >= 32 and args.grid % 2 == 0, "--grid must be even and >= 32")
    _check(args.coils >= 2, "--coils must be >= 2")
    _check(args.hf_blobs >= 0, "--hf-blobs must be >= 0")
    truth = make_phantom(args.grid, args.coils, args.hf_blobs, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save(out / "magnitude.ksp1", truth.magnitude, ("x", "y"))
    _save(out / "smooth_phase.ksp1", truth.smooth_phase, ("x", "y"))
    _save(out / "hf_phase.ksp1", truth.hf_phase, ("x", "y"))
    _save(out / "support.ksp1", truth.support.astype(np.float32), ("x", "y"))
    _save(out / "coils.ksp1", truth.coils, ("x", "y", "coil"))
    write_ktensor(out / "kspace.ksp1", simulate_kspace(truth))
    print(f"wrote phantom files to {out}")
    return 0


def _cmd_vcc(args):
    ksp = _load(getattr(args, "in"))
    stack = make_vcc(ksp)
    _save(args.out, stack.data, ("x", "y", "coil"))
    print(f"n_physical={stack.n_physical}")
    return 0


def _cmd_ecalib(args):
    _check(args.kernel >= 2, "--kernel must be >= 2")
    _check(0 < args.thresh <= 1, "--thresh must be in (0, 1]")
    _check(args.maps >= 1, "--maps must be >= 1")
    _check(0 <= args.crop < 1, "--crop must be in [0, 1)")
    _check(args.acs >= 2, "--acs must be >= 2")
    ksp = _load(getattr(args, "in"))
    arr = ksp.data.astype(np.complex128)
    block = center_crop(arr, (args.acs, args.acs), axes=(0, 1))
    subspace = calibrate(block, kernel_size=args.kernel, threshold=args.thresh)
    maps = eigen_maps(subspace, arr.shape[:2], nsets=args.maps)
    _save(args.out, maps.maps, ("x", "y", "coil", "set"))
    _save(_sibling(args.out, "eig"), maps.eigenvalues, ("x", "y", "set"))
    print(f"nkernels={subspace.nkernels}")
    return 0


def _cmd_phasecal(args):
    maps = _maps_from_file(args.maps)
    phase, centered = center_phase(maps)
    if args.align_ref:
        centered = align_sign(centered, _maps_from_file(args.align_ref).maps[..., 0])
    _save(args.out, centered.maps, ("x", "y", "coil", "set"))
    _save(args.phase, phase.phi, ("x", "y", "set"))
    print(f"valid_fraction={float(np.mean(phase.valid_mask)):.6f}")
    return 0


def _cmd_recon(args):
    mode = _mode(args.mode)
    _check(args.iters >= 1, "--iters must be >= 1")
    _check(args.tol > 0, "--tol must be positive")
    _check(args.lam >= 0 and args.lambda_imag >= 0, "penalties must be >= 0")
    ksp = _load(args.ksp)
    maps = _maps_from_file(args.maps)
    try:
        pattern = SamplingPattern.from_spec(args.pattern, ksp.shape[:2])
    except ValueError as exc:
        raise UsageError(f"bad --pattern: {exc}") from exc
    result = solve(
        ksp,
        maps,
        pattern.mask,
        mode=mode,
        lam=args.lam,
        lam_imag=args.lambda_imag,
        max_iter=args.iters,
        tol=args.tol,
    )
    _save(args.out, result.image, ("x", "y", "set"))
    print(f"iterations={result.iterations}")
    print(f"converged={str(result.converged).lower()}")
    return 0


def _cmd_project(args):
    _check(args.mode in ("complex", "real"), "--mode must be complex or real")
    mode = _MODES[args.mode]
    coils = _load(args.coils)
    maps = _maps_from_file(args.maps)
    proj, err = project(coils.data.astype(np.complex128), maps, mode=mode)
    _save(args.out, proj, ("x", "y", "coil"))
    _save(args.err, err.per_coil, ("x", "y", "coil"))
    print(f"residual={err.scalar:.8f}")
    return 0


def _cmd_metrics(args):
    a = _load(args.a).data.astype(np.complex128)
    b = _load(args.b).data.astype(np.complex128)
    mask = None
    if args.mask:
        m = _load(args.mask).data
        mask = np.abs(m) > 0.5
        if mask.ndim == a.ndim - 1:
            mask = np.broadcast_to(mask[..., None], a.shape)
    try:
        value = nrmse(a, b, mask)
    except ValueError as exc:
        raise RuntimeError(str(exc)) from exc
    print(f"nrmse={value:.8f}")
    return 0


def _write_manifest(path, config, artifacts):
    lines = {f"config.{k}": str(v) for k, v in config.items()}
    for name, p in artifacts.items():
        digest = hashlib.sha256(Path(p).read_bytes()).hexdigest()
        lines[f"sha256.{name}"] = digest
    text = "".join(f"{k}={lines[k]}\n" for k in sorted(lines))
    Path(path).write_text(text, encoding="utf-8")


def _cmd_pipeline(args):
    mode = _mode(args.mode)
    _check(args.grid >= 32 and args.grid % 2 == 0, "--grid must be even and >= 32")
    _check(args.coils >= 2, "--coils must be >= 2")
    _check(args.hf_blobs >= 0, "--hf-blobs must be >= 0")
    _check(args.kernel >= 2, "--kernel must be >= 2")
    _check(0 < args.thresh <= 1, "--thresh must be in (0, 1]")
    _check(args.maps >= 1, "--maps must be >= 1")
    _check(0 <= args.crop < 1, "--crop must be in [0, 1)")
    _check(args.accel >= 1, "--accel must be >= 1")
    config = RunConfig(
        subcommand="pipeline",
        grid=args.grid,
        coils=args.coils,
        hf_blobs=args.hf_blobs,
        seed=args.seed,
        acs=args.acs,
        kernel=args.kernel,
        thresh=args.thresh,
        crop=args.crop,
        maps=args.maps,
        accel=args.accel,
        pf=args.pf,
        mode=args.mode,
        lam=args.lam,
        lam_imag=args.lambda_imag,
        iters=args.iters,
        tol=args.tol,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    truth = make_phantom(args.grid, args.coils, args.hf_blobs, seed=args.seed)
    ksp = simulate_kspace(truth)
    spec = f"R={args.accel},acs={args.acs}" + ("" if args.pf == "1" else f",pf={args.pf}")
    try:
        pattern = SamplingPattern.from_spec(spec, ksp.shape[:2])
    except ValueError as exc:
        raise UsageError(f"bad pattern ({spec}): {exc}") from exc
    und = apply_pattern(ksp, pattern)

    stack = make_vcc(ksp.data)
    subspace = calibrate(
        center_crop(stack.data, (args.acs, args.acs), axes=(0, 1)),
        kernel_size=args.kernel,
        threshold=args.thresh,
    )
    vcc_maps = eigen_maps(subspace, ksp.shape[:2], nsets=args.maps)
    phase, centered = center_phase(vcc_maps)
    centered = align_sign(centered, direct_maps(ksp, acs=args.acs))
    recon_maps = centered.weighted(args.crop) if args.maps > 1 else centered
    result = solve(
        und,
        recon_maps,
        pattern.mask,
        mode=mode,
        lam=args.lam,
        lam_imag=args.lambda_imag,
        max_iter=args.iters,
        tol=args.tol,
    )
    syn = synthesize_coil_images(result.image, recon_maps)
    support_mask = truth.support[:, :, None] & np.ones(args.coils, dtype=bool)
    value = nrmse(syn, truth.coil_images, support_mask)

    write_ktensor(out / "kspace.ksp1", ksp)
    _save(out / "undersampled.ksp1", und.data, ("x", "y", "coil"))
    _save(out / "mask.ksp1", pattern.mask.astype(np.float32), ("x", "y"))
    _save(out / "vcc.ksp1", stack.data, ("x", "y", "coil"))
    _save(out / "maps.ksp1", centered.maps, ("x", "y", "coil", "set"))
    _save(out / "maps.eig.ksp1", centered.eigenvalues, ("x", "y", "set"))
    _save(out / "phase.ksp1", phase.phi, ("x", "y", "set"))
    _save(out / "image.ksp1", result.image, ("x", "y", "set"))
    _save(out / "support.ksp1", truth.support.astype(np.float32), ("x", "y"))

    artifacts = {
        p.name: p
        for p in sorted(out.glob("*.ksp1"))
    }
    _write_manifest(out / "manifest.txt", config, artifacts)
    print(f"nrmse={value:.8f}")
    print(f"iterations={result.iterations}")
    print(f"nkernels={subspace.nkernels}")
    print(f"manifest={out / 'manifest.txt'}")
    return 0


def _build_parser():
    parser = _Parser(
        prog="vccrecon",
        description="phase-aware parallel MRI calibration and reconstruction",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap BLAS/FFT worker threads (env VCCRECON_THREADS)",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    p = sub.add_parser("phantom", help="generate truth images and k-space")
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--coils", type=int, default=8)
    p.add_argument("--hf-blobs", type=int, default=0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("vcc", help="append conjugate virtual channels")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_vcc)

    p = sub.add_parser("ecalib", help="subspace calibration and eigen maps")
    p.add_argument("--in", required=True)
    p.add_argument("--acs", type=int, default=24)
    p.add_argument("--kernel", type=int, default=6)
    p.add_argument("--thresh", type=float, default=0.001)
    p.add_argument("--maps", type=int, default=1)
    p.add_argument("--crop", type=float, default=0.85)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ecalib)

    p = sub.add_parser("phasecal", help="split doubled maps into phase and maps")
    p.add_argument("--maps", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--phase", required=True)
    p.add_argument("--align-ref", default=None)
    p.set_defaults(func=_cmd_phasecal)

    p = sub.add_parser("recon", help="iterative SENSE reconstruction")
    p.add_argument("--ksp", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--pattern", default="R=3,acs=24")
    p.add_argument("--mode", default="real", choices=sorted(_MODES))
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--lambda-imag", dest="lambda_imag", type=float, default=1e-2)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_recon)

    p = sub.add_parser("project", help="project coil images onto map span")
    p.add_argument("--coils", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--mode", default="real", choices=("complex", "real"))
    p.add_argument("--out", required=True)
    p.add_argument("--err", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("metrics", help="compare two tensors")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--mask", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("pipeline", help="phantom to metrics in one run")
    p.add_argument("--grid", type=int, default=96)
    p.add_argument("--coils", type=int, default=8)
    p.add_argument("--hf-blobs", type=int, default=0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--acs", type=int, default=24)
    p.add_argument("--kernel", type=int, default=6)
    p.add_argument("--thresh", type=float, default=0.001)
    p.add_argument("--maps", type=int, default=1)
    p.add_argument("--crop", type=float, default=0.85)
    p.add_argument("--accel", type=int, default=3, help="undersampling factor R")
    p.add_argument("--pf", default="1", help="partial Fourier fraction, e.g. 5/8")
    p.add_argument("--mode", default="real", choices=sorted(_MODES))
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--lambda-imag", dest="lambda_imag", type=float, default=1e-2)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def run(argv):
    """Parse argv and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "subcommand", None):
        parser.print_help()
        return 1
    threads = args.threads
    if threads is None:
        env = os.environ.get("VCCRECON_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                print(f"error: VCCRECON_THREADS={env!r} is not an integer", file=sys.stderr)
                return 1
    if threads is not None and threads < 1:
        print("error: thread count must be >= 1", file=sys.stderr)
        return 1
    try:
        if threads is None:
            return args.func(args)
        with threadpool_limits(limits=threads):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError, KTensorFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
