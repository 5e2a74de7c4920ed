"""Command-line surface: every analysis as a reproducible, scriptable run.

Exit codes: 0 ok, 2 parse/config error, 3 numerical failure, 4 verification
failure.  Same config + seed produces byte-identical output files.
"""

from __future__ import annotations

import functools
import json
import math
import sys

import click
import numpy as np

from . import __version__, klapp, reduction, tightness
from . import kernels
from .errors import (ConfigError, EstimatorError, FaceClassificationError,
                     NumericalError, UnsupportedFaceError, VerificationError)
from .frf import pcone_frf
from .ioutil import csv_lines, dumps_json
from .pcone import ConePoint, PExponent, face_from_exposing, project_cone, project_polar

DEFAULT_SEED = 1729

EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def _parse_vector(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip() != ""]
    except ValueError as exc:
        raise click.UsageError(f"cannot parse vector {text!r}: {exc}") from exc
    if not vals:
        raise click.UsageError(f"empty vector {text!r}")
    return np.asarray(vals, dtype=float)


def _emit(doc: dict, out, fmt: str, csv_payload=None):
    if fmt == "csv" and csv_payload is not None:
        header, rows = csv_payload
        text = csv_lines(header, rows)
    else:
        text = dumps_json(doc)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    click.echo(text, nl=False)


def _errors_to_exit(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PARSE)
        except (NumericalError, EstimatorError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        except (VerificationError, UnsupportedFaceError) as exc:
            click.echo(f"verification failure: {exc}", err=True)
            if getattr(exc, "report", None) is not None:
                click.echo(dumps_json(exc.report.to_json_dict()), nl=False, err=True)
            sys.exit(EXIT_VERIFY)

    return wrapper


common_out = [
    click.option("--out", type=click.Path(dir_okay=False), default=None,
                 help="Write the output document to this path."),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                 default="json", show_default=True),
]


def _add_options(opts):
    def deco(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return deco


@click.group()
@click.version_option(version=__version__, prog_name="conegauge")
def main():
    """Error-bound analyses for p-cones."""


@main.command()
@click.option("--p", "p_val", type=float, required=True)
@click.option("--point", required=True, help="Comma-separated (x0, xbar).")
@click.option("--tol", type=float, default=1e-12, show_default=True)
@_add_options(common_out)
@_errors_to_exit
def project(p_val, point, tol, out, fmt):
    """Project a point onto the p-cone; report distance and Moreau residual."""
    v = _parse_vector(point)
    if v.size < 2:
        raise click.UsageError("point needs at least two coordinates")
    pe = PExponent(p_val)
    cp = ConePoint.from_array(v)
    proj, dist = project_cone(cp, pe, tol=tol)
    polar, _ = project_polar(cp, pe, tol=tol)
    moreau = float(np.linalg.norm(v - proj.as_array() - polar.as_array()))
    doc = {
        "backend": kernels.BACKEND,
        "p": pe.p,
        "point": v.tolist(),
        "projection": proj.as_array().tolist(),
        "distance": dist,
        "moreau_residual": moreau,
    }
    _emit(doc, out, fmt)


@main.command()
@click.option("--p", "p_val", type=float, required=True)
@click.option("--z", "z_text", required=True, help="Comma-separated (z0, zbar).")
@click.option("--zero-tol", type=float, default=1e-10, show_default=True)
@click.option("--t", "t_bound", type=float, default=1.0, show_default=True)
@click.option("--gamma-hat", type=float, default=1.0, show_default=True)
@_add_options(common_out)
@_errors_to_exit
def exponent(p_val, z_text, zero_tol, t_bound, gamma_hat, out, fmt):
    """Face data of an exposing vector: J_z, alpha, generator, FRF."""
    z = _parse_vector(z_text)
    if z.size < 3:
        raise click.UsageError("z needs at least three coordinates")
    pe = PExponent(p_val)
    try:
        ray = face_from_exposing(ConePoint.from_array(z), pe, zero_tol=zero_tol)
    except FaceClassificationError as exc:
        doc = {"classification": exc.classification}
        if exc.classification == "interior":
            doc["face"] = "{0}"
            doc["frf"] = "linear"
        elif exc.classification == "zero":
            doc["face"] = "full cone"
            doc["frf"] = "none (no reduction)"
        _emit(doc, out, fmt)
        sys.exit(EXIT_VERIFY)
    frf = pcone_frf(ray, t_bound, gamma_hat)
    doc = {
        "p": pe.p,
        "z": ray.z.as_array().tolist(),
        "J_z": list(ray.Jz),
        "alpha": str(ray.alpha),
        "alpha_float": float(ray.alpha),
        "f": ray.f.as_array().tolist(),
        "frf": frf.to_json_dict(),
    }
    _emit(doc, out, fmt)


@main.command()
@click.option("--family", type=click.Choice(["small-support", "large-support",
                                             "expcone-finf", "expcone-fminusinf",
                                             "expcone-fbeta"]), required=True)
@click.option("--p", "p_val", type=float, default=None)
@click.option("--z", "z_text", default=None)
@click.option("--j", "j_index", type=int, default=None, help="Zero-support tail index.")
@click.option("--i", "i_index", type=int, default=None, help="Support tail index.")
@click.option("--beta", type=float, default=0.0, show_default=True)
@click.option("--eps-min", type=float, default=1e-6, show_default=True)
@click.option("--eps-max", type=float, default=1e-2, show_default=True)
@click.option("--grid", type=int, default=12, show_default=True)
@click.option("--eta", type=float, default=1.0, show_default=True)
@click.option("--samples", type=int, default=100000, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_add_options(common_out)
@_errors_to_exit
def tightness_cmd(family, p_val, z_text, j_index, i_index, beta, eps_min,
                  eps_max, grid, eta, samples, seed, out, fmt):
    """Witness-curve table, fitted slope, (G1) limsup, and gamma estimate."""
    from .frf import GFunction, expcone_g

    if eps_min <= 0 or eps_max > 1 or eps_min >= eps_max:
        raise click.UsageError("need 0 < eps-min < eps-max <= 1")
    eps_grid = np.logspace(np.log10(eps_max), np.log10(eps_min), grid)
    doc = {"family": family, "seed": seed}
    ray = None
    if family in ("small-support", "large-support"):
        if p_val is None or z_text is None:
            raise click.UsageError("p-cone families need --p and --z")
        pe = PExponent(p_val)
        ray = face_from_exposing(ConePoint.from_array(_parse_vector(z_text)), pe)
        if family == "small-support":
            curve = tightness.witness_small_support(ray, j=j_index)
        else:
            curve = tightness.witness_large_support(ray, i=i_index)
        g = GFunction.power(ray.alpha)
        doc["alpha"] = str(ray.alpha)
    elif family == "expcone-finf":
        curve = tightness.ExpconeCurve("plus_infinity")
        g = expcone_g("plus_infinity")
    elif family == "expcone-fminusinf":
        curve = tightness.ExpconeCurve("minus_infinity")
        g = expcone_g("minus_infinity")
    else:
        curve = tightness.ExpconeCurve("beta", beta=beta)
        g = expcone_g("beta")

    est = tightness.g1_limsup(curve, g, eps_grid)
    fit = tightness.fit_exponent(curve, eps_grid)
    doc.update({
        "limsup_estimate": est.estimate,
        "slope": fit.slope,
        "r2": fit.r2,
        "table": [{"eps": r.eps, "dist_K": r.dist_cone, "dist_F": r.dist_face,
                   "ratio": (r.ratio if math.isfinite(r.ratio) else None)}
                  for r in est.rows],
    })
    if ray is not None:
        gam = tightness.estimate_gamma(ray, eta=eta, n_samples=samples, seed=seed)
        doc["gamma_hat"] = gam.value
        doc["kappa"] = gam.kappa
    csv_rows = [(r.eps, r.dist_cone, r.dist_face, r.ratio) for r in est.rows]
    _emit(doc, out, fmt, csv_payload=(["eps", "dist_K", "dist_F", "ratio"], csv_rows))


@main.command()
@click.option("--p", "p_val", type=float, required=True)
@click.option("--z", "z_text", required=True)
@click.option("--eta", type=float, default=1.0, show_default=True)
@click.option("--samples", type=int, default=100000, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_add_options(common_out)
@_errors_to_exit
def gamma(p_val, z_text, eta, samples, seed, out, fmt):
    """Empirical lower bound for the ratio infimum of a ray."""
    pe = PExponent(p_val)
    ray = face_from_exposing(ConePoint.from_array(_parse_vector(z_text)), pe)
    est = tightness.estimate_gamma(ray, eta=eta, n_samples=samples, seed=seed)
    doc = {
        "p": pe.p,
        "alpha": str(ray.alpha),
        "eta": eta,
        "samples": est.samples,
        "excluded": est.excluded,
        "gamma_hat": est.value,
        "kappa": est.kappa,
        "trend": [[int(k), v] for k, v in est.trend],
    }
    csv_rows = [(int(k), float(v)) for k, v in est.trend]
    _emit(doc, out, fmt, csv_payload=(["samples", "running_min"], csv_rows))


@main.command()
@click.argument("problem_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("chain_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--t", "t_bound", type=float, default=1.0, show_default=True)
@click.option("--gamma-hat", type=float, default=1.0, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@_add_options(common_out)
@_errors_to_exit
def chain(problem_path, chain_path, t_bound, gamma_hat, tol, out, fmt):
    """Verify a reduction chain and assemble the error-bound exponent."""
    problem = reduction.load_problem(problem_path)
    chn = reduction.load_chain(chain_path)
    report = reduction.verify_certificate(problem, chn, tol=tol)
    if not report.ok:
        raise VerificationError("chain failed verification", report=report)
    bound = reduction.assemble_exponent(problem, chn, t_bound=t_bound,
                                        gamma_hats=gamma_hat, tol=tol, report=report)
    doc = {
        "verified": True,
        "exponent": str(bound.exponent),
        "exponent_float": float(bound.exponent),
        "frf": bound.frf.to_json_dict(),
        "d_pps_upper_bound": reduction.dpps_upper_bound(problem),
        "report": report.to_json_dict(),
    }
    _emit(doc, out, fmt)


@main.command()
@click.option("--p", "p_val", type=float, required=True)
@click.option("--d", "d_val", type=int, required=True)
@_add_options(common_out)
@_errors_to_exit
def kl(p_val, d_val, out, fmt):
    """KL exponent 1 - min{1/2, 1/p}^d of the regularized least-squares objective."""
    expo = klapp.kl_exponent(PExponent(p_val), d_val)
    doc = {"p": p_val, "d": d_val, "kl_exponent": str(expo),
           "kl_exponent_float": float(expo)}
    _emit(doc, out, fmt)


@main.command()
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--step", default="auto", show_default=True)
@click.option("--iters", type=int, default=20000, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@_add_options(common_out)
@_errors_to_exit
def solve(instance_path, step, iters, tol, out, fmt):
    """Proximal-gradient solve of a regularized least-squares instance."""
    with open(instance_path, "r", encoding="utf-8") as fh:
        inst = klapp.RegLSInstance.from_json_dict(json.load(fh))
    step_arg = step if step == "auto" else float(step)
    result = klapp.solve_prox_grad(inst, step=step_arg, iters=iters, tol=tol)
    residual = klapp.prox_grad_residual(inst, result.x, result.step)
    doc = {
        "backend": kernels.BACKEND,
        "objective": result.objectives[-1],
        "iterations": result.iterations,
        "converged": result.converged,
        "step": result.step,
        "lipschitz": result.lipschitz,
        "prox_residual": residual,
        "x": result.x.tolist(),
    }
    csv_rows = [(k, obj, (result.step_norms[k - 1] if k > 0 else 0.0))
                for k, obj in enumerate(result.objectives)]
    _emit(doc, out, fmt, csv_payload=(["iter", "objective", "step_norm"], csv_rows))


main.add_command(tightness_cmd, name="tightness")

if __name__ == "__main__":
    main()
