import functools
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Tuple

import click

from config import configure_logging
from models import MuMethod, OrnamentKind, TrackKind
from services.constructions import (
    make_borromean,
    make_random_ornament,
    make_scrambled_borromean,
    make_trivial,
    standard_trivial_targets,
)
from services.errors import ContractViolation, DimensionMismatch, DocumentError, OrnamentError
from services.geometry_kernel import Vector, derive_seed, parse_rational
from services.interchange import (
    degree_payload,
    dumps_ornament,
    dumps_track,
    load_ornament,
    load_track,
    pairing_payload,
    report_payload,
    triple_point_payload,
)
from services.mu_degree import compute_mu_degree
from services.mu_sweep import (
    default_trivial_targets,
    pair_opposite_signs,
    straight_line_homotopy_to_trivial,
    straight_line_track,
    sweep_to_trivial,
    sweep_track,
)
from services.ornament_model import perturb_ornament, validate_manifold, validate_ornament
from services.workers import progress

INPUT_ERRORS = (DocumentError, DimensionMismatch, ContractViolation)


class RationalType(click.ParamType):
    name = "rational"

    def convert(self, value, param, ctx):
        if isinstance(value, Fraction):
            return value
        try:
            return parse_rational(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)


RATIONAL = RationalType()


def parse_targets(text: str) -> Tuple[Vector, ...]:
    """Parse "p/q,...;...;..." into three rational vectors."""
    try:
        return tuple(tuple(parse_rational(x) for x in part.split(",")) for part in text.split(";"))
    except ValueError as e:
        raise ContractViolation(f"--targets: {e}")


def handle_errors(fn):
    """Map library errors to exit status 1 (input) or 2 (internal)."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except INPUT_ERRORS as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(1)
        except OrnamentError as e:
            click.echo(f"❌ internal error: {e}", err=True)
            sys.exit(2)
    return wrapper


def require_ornament(o, label: str = "input") -> None:
    """Raise ContractViolation unless every component is a closed manifold and o is an ornament."""
    for index, c in enumerate(o.components):
        if not validate_manifold(c.domain).is_valid:
            raise ContractViolation(f"{label} component {index + 1} is not a closed oriented manifold")
    report = validate_ornament(o)
    if not report.is_valid:
        emit({"ornament": report_payload(report)})
        raise ContractViolation(f"{label} is not an ornament")


def emit(payload) -> None:
    click.echo(json.dumps(payload, indent=2))


def write_text(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"✅ wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--log-level", default=None, help="Logging level (default from ORNAMENT_LOG_LEVEL).")
def cli(log_level):
    """Exact PL ornaments of three (2k-1)-manifolds in R^(3k-1) and their mu-invariant."""
    configure_logging(log_level)


@cli.command()
@click.argument("file", type=click.Path(dir_okay=False))
@handle_errors
def validate(file):
    """Check each component and the ornament condition."""
    o = load_ornament(file)
    components = [report_payload(validate_manifold(c.domain)) for c in o.components]
    report = validate_ornament(o)
    emit({"components": components, "ornament": report_payload(report)})
    click.echo(f"{'✅' if report.is_valid else '⚠️'} ornament is {report.status.value}", err=True)


@cli.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice([m.value for m in MuMethod]), default=MuMethod.BOTH.value)
@click.option("--seed", type=int, default=0)
@handle_errors
def mu(file, method, seed):
    """Compute mu by degree, by sweep, or both."""
    o = load_ornament(file)
    require_ornament(o)
    payload = {"method": method}
    values = []
    if method in (MuMethod.DEGREE.value, MuMethod.BOTH.value):
        result = compute_mu_degree(o, seed=seed)
        payload["degree"] = degree_payload(result)
        values.append(result.mu)
    if method in (MuMethod.SWEEP.value, MuMethod.BOTH.value):
        swept = sweep_to_trivial(o, seed=seed)
        payload["sweep"] = {"mu": swept.total, "points": len(swept.points), "keyframes": len(swept.track.keyframes)}
        values.append(swept.total)
    agree = len(set(values)) == 1
    if method == MuMethod.BOTH.value:
        payload["agree"] = agree
    emit(payload)
    if not agree:
        click.echo(f"❌ methods disagree: degree={values[0]}, sweep={values[1]}", err=True)
        sys.exit(2)
    click.echo(f"✅ mu = {values[0]}", err=True)


@cli.command()
@click.argument("kind", type=click.Choice([k.value for k in OrnamentKind]))
@click.option("--k", "k", type=int, default=1)
@click.option("--r", "r", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--spread", type=RATIONAL, default="1/4")
@click.option("--targets", default=None, help='Trivial targets "p/q,...;...;...".')
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@handle_errors
def gen(kind, k, r, seed, spread, targets, out):
    """Write a generated ornament document."""
    if kind == OrnamentKind.BORROMEAN.value:
        o = make_borromean(k, r, seed)
    elif kind == OrnamentKind.TRIVIAL.value:
        if k < 1:
            raise ContractViolation(f"k must be at least 1, got {k}")
        o = make_trivial(k, parse_targets(targets) if targets else standard_trivial_targets(k))
    elif kind == OrnamentKind.SCRAMBLED_BORROMEAN.value:
        o = make_scrambled_borromean(k, r, seed, spread)
    else:
        o = make_random_ornament(k, r, seed, spread)
    if not validate_ornament(o).is_valid:
        raise OrnamentError(f"generated {kind} ornament failed validation")
    write_text(dumps_ornament(o), out)


@cli.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0)
@handle_errors
def sweep(file, seed):
    """List the signed triple points of a homotopy and check sum = mu(start) - mu(end)."""
    homotopy = load_track(file)
    require_ornament(homotopy.start, "track start")
    require_ornament(homotopy.end, "track end")
    result = sweep_track(homotopy, seed=seed)
    mu_start = compute_mu_degree(homotopy.start, seed=seed).mu
    mu_end = compute_mu_degree(homotopy.end, seed=seed).mu
    identity = result.total == mu_start - mu_end
    emit({
        "points": [triple_point_payload(p) for p in result.points],
        "sum": result.total,
        "mu_start": mu_start,
        "mu_end": mu_end,
        "identity": identity,
        "inserted_keyframes": len(result.track.keyframes) - len(homotopy.keyframes),
        "pairing": pairing_payload(pair_opposite_signs(result.points)),
    })
    if not identity:
        click.echo(f"❌ sum {result.total} != mu(start) - mu(end) = {mu_start - mu_end}", err=True)
        sys.exit(2)
    click.echo(f"✅ {len(result.points)} triple points, sum {result.total}", err=True)


@cli.command()
@click.argument("kind", type=click.Choice([k.value for k in TrackKind]))
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=0)
@click.option("--eps", type=RATIONAL, default=None)
@click.option("--targets", default=None, help='Trivial targets "p/q,...;...;...".')
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@handle_errors
def track(kind, file, seed, eps, targets, out):
    """Write a homotopy document starting at the ornament in FILE."""
    o = load_ornament(file)
    if kind == TrackKind.TO_TRIVIAL.value:
        points = parse_targets(targets) if targets else default_trivial_targets(o, seed)
        result = straight_line_homotopy_to_trivial(o, points, eps=eps, seed=seed)
    else:
        result = straight_line_track(o, perturb_ornament(o, eps=eps, seed=seed))
    write_text(dumps_track(result), out)


@cli.command()
@click.argument("kind", type=click.Choice(["random", "perturbed-borromean", "scrambled-borromean"]))
@click.option("--count", type=int, default=100)
@click.option("--k", "k", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--eps", type=RATIONAL, default=None)
@click.option("--spread", type=RATIONAL, default="1/4")
@handle_errors
def corpus(kind, count, k, seed, eps, spread):
    """Run both mu algorithms over seeded instances, one JSON line each."""
    disagreements = 0
    base = make_borromean(k) if kind == "perturbed-borromean" else None
    for i in progress(range(count), desc=kind, total=count):
        instance_seed = derive_seed(seed, kind, i)
        if base is not None:
            o = perturb_ornament(base, eps=eps, seed=instance_seed)
        elif kind == "scrambled-borromean":
            o = make_scrambled_borromean(k, 0, instance_seed, spread)
        else:
            o = make_random_ornament(k, 0, instance_seed, spread)
        degree = compute_mu_degree(o, seed=instance_seed).mu
        swept = sweep_to_trivial(o, seed=instance_seed).total
        disagreements += degree != swept
        click.echo(json.dumps({"index": i, "seed": instance_seed, "degree": degree, "sweep": swept}))
    if disagreements:
        click.echo(f"❌ {disagreements} of {count} instances disagree", err=True)
        sys.exit(2)
    click.echo(f"✅ {count} instances agree", err=True)

