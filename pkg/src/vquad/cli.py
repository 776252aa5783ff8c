"""Command-line front end."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .errors import InputError, VquadError
from .spaces import DEFAULT_CAP, LambdaSpace, enumerate_singular, preset
from .veldkamp import Report, VeldkampGraph, check_axioms, check_propositions, dumps, is_flat, is_generalized_polygon, is_green


def _set_jobs(jobs):
    if jobs:
        import numba

        # the bundled layer avoids version checks against a system TBB
        numba.config.THREADING_LAYER = "workqueue"
        numba.set_num_threads(max(1, min(jobs, numba.config.NUMBA_NUM_THREADS)))


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _instance(preset_name, lambda_path):
    if bool(preset_name) == bool(lambda_path):
        raise InputError("give exactly one of --preset and --lambda")
    if preset_name:
        lam = preset(preset_name)
    else:
        lam = LambdaSpace.from_json(_load_json(lambda_path))
    lam.validate()
    return lam


def _write(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(obj if isinstance(obj, str) else dumps(obj))


def _emit(obj, out):
    text = dumps(obj)
    if out:
        _write(out, text)
    click.echo(text, nl=False)


def _load_graph(path):
    return VeldkampGraph.from_json(_load_json(path))


@click.group()
@click.option("--jobs", type=int, default=None, help="Cap on worker threads.")
def main(jobs):
    """Polar spaces, Veldkamp quadrangles, flat quotients and Moufang certificates."""
    _set_jobs(jobs)


@main.command()
@click.option("--preset", "preset_name", help="Named instance.")
@click.option("--lambda", "lambda_path", type=click.Path(), help="Lambda descriptor JSON.")
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--max-vectors", type=int, default=DEFAULT_CAP, show_default=True, help="Cap on |V|.")
@click.option("--cone", "cone_point", type=int, default=None, help="Also write the cone at this point.")
@click.option("--dot", is_flag=True, help="Also write DOT files.")
def build(preset_name, lambda_path, out, max_vectors, cone_point, dot):
    """Write the polar space and its Veldkamp graph."""
    from .correspondence import cone, polar_to_veldkamp
    from .polar import LineSpace

    lam = _instance(preset_name, lambda_path)
    cat = enumerate_singular(lam, max_vectors)
    S = LineSpace(len(cat.points), cat.lines)
    g = polar_to_veldkamp(S)
    out = Path(out)
    _write(out / "lambda.json", lam.to_json())
    _write(out / "catalog.json", cat.to_json())
    _write(out / "space.json", S.to_json())
    _write(out / "graph.json", g.to_json())
    summary = {"points": S.n, "lines": len(S.lines), "vertices": g.n, "rank": S.rank()}
    if dot:
        _write(out / "graph.dot", g.to_dot())
    if cone_point is not None:
        if not 0 <= cone_point < S.n:
            raise InputError(f"cone point must lie in 0..{S.n - 1}")
        omega, origin = cone(S, cone_point, g)
        _write(out / "cone.json", omega.to_json())
        _write(out / "cone_origin.json", [int(v) for v in origin])
        summary["cone_vertices"] = omega.n
        if dot:
            _write(out / "cone.dot", omega.to_dot())
    click.echo(dumps(summary), nl=False)


def _merge(rep, other):
    rep.checks.update(other.checks)
    rep.skipped.update(other.skipped)


def _suite(g, suite, naive):
    rep = Report()
    axioms = check_axioms(g, naive=naive)
    if suite in ("axioms", "all"):
        _merge(rep, axioms)
    info = {}
    if suite in ("propositions", "all"):
        vp_ok = all(axioms[k].passed for k in ("VP1", "VP2", "VP3"))
        if not vp_ok:
            rep.add("propositions", False, None, "axioms VP1-VP3 fail; propositions not evaluated")
        else:
            _merge(rep, check_propositions(g))
            if is_green(g) and g.gon == 4:
                from .quotient import weed_propositions

                _merge(rep, weed_propositions(g))
    if all(axioms[k].passed for k in ("VP1", "VP2", "VP3")):
        info = {"flat": is_flat(g), "green": is_green(g), "generalized_polygon": is_generalized_polygon(g)}
    out = rep.to_json()
    out["properties"] = info
    return rep, out


@main.command()
@click.argument("graph", type=click.Path())
@click.option("--suite", type=click.Choice(["axioms", "propositions", "all"]), default="all", show_default=True)
@click.option("--naive", is_flag=True, help="Use plain path enumeration for VP2 and VP3.")
@click.option("--out", type=click.Path(), default=None, help="Also write the report here.")
def verify(graph, suite, naive, out):
    """Check the axioms and structural propositions of a graph file."""
    g = _load_graph(graph)
    rep, obj = _suite(g, suite, naive)
    _emit(obj, out)
    sys.exit(0 if rep.passed else 1)


@main.command()
@click.argument("graph", type=click.Path())
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--dot", is_flag=True, help="Also write the quotient as DOT.")
def quotient(graph, out, dot):
    """Flat quotient of a green quadrangle, with class maps and projection."""
    from .quotient import flat_quotient

    g = _load_graph(graph)
    res = flat_quotient(g)
    out = Path(out)
    _write(out / "quotient.json", res.graph.to_json())
    _write(out / "classes.json", res.to_json())
    if dot:
        _write(out / "quotient.dot", res.graph.to_dot())
    click.echo(dumps({"histogram": res.histogram(), "vertices": res.graph.n, "flat_input": bool((np.bincount(res.pi) == 1).all())}), nl=False)


@main.command()
@click.option("--preset", "preset_name", help="Named instance.")
@click.option("--lambda", "lambda_path", type=click.Path(), help="Lambda descriptor JSON.")
@click.option("--max-vectors", type=int, default=DEFAULT_CAP, show_default=True, help="Cap on |V|.")
@click.option("--d3", "with_d3", is_flag=True, help="Also verify the D3 relations (hyperbolic plane, odd prime).")
@click.option("--out", type=click.Path(), default=None, help="Also write the certificate here.")
def moufang(preset_name, lambda_path, max_vectors, with_d3, out):
    """Moufang certificate and commutator relations."""
    from .moufang import certify_moufang, verify_commutators, verify_d3

    lam = _instance(preset_name, lambda_path)
    cert = {"instance": lam.name or "lambda", "commutators": verify_commutators(lam)}
    cert["moufang"] = certify_moufang(lam, max_vectors)
    if with_d3 or (preset_name or "").startswith("d3"):
        cert["d3"] = verify_d3(lam)
    _emit(cert, out)


def run(argv=None):
    """Entry point that maps library errors to exit codes."""
    try:
        main.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 1
    except VquadError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


def entry():
    sys.exit(run())
