#!/usr/bin/env python3
"""
Command-line entry point: ``mcmullen <command> [flags]``

Results are printed as JSON on stdout, artifacts (images, polylines,
tables) go to the output directory. Exit codes: 0 ok, 1 usage or
validation error, 2 numerical failure or failed acceptance rows.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import ValidationError as PydanticValidationError
from tenacity import RetryError

from src.cli.models import COMMANDS, JobConfig
from src.cli.verify import AcceptanceSuite
from src.dynamics.boettcher import trace_external_ray, trace_internal_ray
from src.dynamics.core import MapParams
from src.dynamics.cutrays import cut_ray
from src.parameter.boundary import component_boundary, hole_boundary
from src.parameter.coordinates import capacity_check
from src.parameter.cusps import find_cusp
from src.parameter.holes import sierpinski_hole_centers
from src.parameter.plane import param_plane
from src.parameter.rays import trace_param_ray
from src.render.classify import classify_fast, classify_oracle, render_julia
from src.render.images import BBox, save_image
from src.utils.config import get_config
from src.utils.data_validation import InputValidator
from src.utils.error_handling import DynamicsError
from src.utils.serialization import dumps, parse_angle, read_json, write_csv, write_json

logger = logging.getLogger(__name__)

Result = Tuple[dict, int]

DEFAULT_PARAM_BBOX = (-0.5, 0.5, -0.5, 0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='mcmullen',
                                     description='Dynamics of the McMullen maps z^n + lambda / z^n')
    parser.add_argument('command', nargs='?', choices=COMMANDS, help='What to compute')
    parser.add_argument('--n', '-n', help='Degree n >= 3 (default 3)')
    parser.add_argument('--lambda', '-l', dest='lam', help='Map parameter, e.g. 0+0.125i')
    parser.add_argument('--theta', '-t', help='Exact angle p/q')
    parser.add_argument('--bbox', '-b', help='xmin,xmax,ymin,ymax')
    parser.add_argument('--res', '-r', dest='resolution', help='Resolution WxH')
    parser.add_argument('--maxiter', type=int, help='Iteration cap')
    parser.add_argument('--kind', '-k', dest='ray_kind', choices=['external', 'internal', 'parameter'],
                        help='Ray kind for the ray command')
    parser.add_argument('--steps', type=int, help='Number of ray samples')
    parser.add_argument('--depth', '-d', type=int, help='Cut-ray depth')
    parser.add_argument('--level', type=int, help='Hole level k >= 3')
    parser.add_argument('--samples', type=int, help='Boundary samples')
    parser.add_argument('--rho', type=float, help='Level-curve radius in (0, 1)')
    parser.add_argument('--radii', help='Comma separated |lambda| values for capacity')
    parser.add_argument('--arg', type=float, help='arg lambda for capacity')
    parser.add_argument('--method', choices=['fast', 'oracle'], help='Classifier')
    parser.add_argument('--quick', action='store_true', help='Smaller grids in verify')
    parser.add_argument('--tol', type=float, help='Residual tolerance for cusp and holes')
    parser.add_argument('--output', '-o', help='Output directory')
    parser.add_argument('--threads', '-j', type=int, help='Worker threads')
    parser.add_argument('--png', action='store_true', help='Also write PNG images')
    parser.add_argument('--config', '-c', help='Replay a job file written by --dump-config')
    parser.add_argument('--dump-config', help='Write the job as JSON before running')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    return parser


def job_from_args(args: argparse.Namespace) -> JobConfig:
    """
    Turn parsed flags into a JobConfig

    Raises:
        ValueError: a flag does not parse (pydantic errors subclass it)
    """
    if args.config:
        data = read_json(args.config)
        if args.command:
            data['command'] = args.command
        return JobConfig.model_validate(data)

    validator = InputValidator()
    fields = {'command': args.command}
    if args.n is not None:
        fields['n'] = validator.validate_degree(args.n)
    if args.lam is not None:
        lam = validator.validate_lambda(args.lam)
        fields['lam'] = (lam.real, lam.imag) if lam is not None else None
    if args.theta is not None:
        fields['theta'] = args.theta
    if args.bbox is not None:
        fields['bbox'] = validator.validate_bbox(args.bbox)
    if args.resolution is not None:
        fields['resolution'] = validator.validate_resolution(args.resolution)
    if args.radii is not None:
        fields['radii'] = validator.validate_float_list(args.radii)

    report = validator.get_validation_report()
    if not report['is_valid']:
        raise ValueError("; ".join(f"{e['field']} {e['value']!r}: {e['error']}" for e in report['errors']))
    for warning in report['warnings']:
        logger.warning(f"{warning['field']}: {warning['warning']}")

    for name in ('maxiter', 'ray_kind', 'steps', 'depth', 'level', 'samples', 'rho', 'arg',
                 'method', 'tol', 'output', 'threads'):
        value = getattr(args, name)
        if value is not None:
            fields[name] = value
    fields['quick'] = args.quick
    fields['png'] = args.png or get_config().system_config.save_png
    if args.command is None:
        raise ValueError("a command is required")
    return JobConfig(**fields)


# Commands

def _output_dir(job: JobConfig) -> Path:
    path = Path(job.output or get_config().system_config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _angle_tag(job: JobConfig) -> str:
    theta = parse_angle(job.theta)
    return f"{theta.numerator}_{theta.denominator}"


def cmd_render_param(job: JobConfig) -> Result:
    bbox = BBox(*(job.bbox or DEFAULT_PARAM_BBOX))
    plane = param_plane(job.n, bbox, job.resolution, job.maxiter)
    stem = _output_dir(job) / f"param_n{job.n}"
    files = save_image(str(stem), plane.image(), job.png)
    files.append(str(write_csv(str(stem) + '_levels.csv', plane.histogram())))
    return {'command': job.command, 'files': files, 'plane': plane.to_dict()}, 0


def cmd_render_julia(job: JobConfig) -> Result:
    params = MapParams(job.n, job.lambda_value)
    bbox = BBox(*job.bbox) if job.bbox else BBox.square(0, 1.5 * params.escape_radius)
    image = render_julia(params, bbox, job.resolution, job.maxiter)
    stem = _output_dir(job) / f"julia_n{job.n}"
    files = save_image(str(stem), image, job.png)
    return {'command': job.command, 'lambda': params.lam, 'bbox': bbox.to_dict(), 'files': files}, 0


def cmd_classify(job: JobConfig) -> Result:
    params = MapParams(job.n, job.lambda_value)
    if job.method == 'oracle':
        result = classify_oracle(params, maxiter=job.maxiter)
    else:
        result = classify_fast(params, job.maxiter)
    return {'command': job.command, 'lambda': params.lam, 'method': job.method, **result.to_dict()}, 0


def cmd_ray(job: JobConfig) -> Result:
    theta = parse_angle(job.theta)
    if job.ray_kind == 'parameter':
        ray = trace_param_ray(job.n, theta, steps=job.steps)
    else:
        params = MapParams(job.n, job.lambda_value)
        trace = trace_external_ray if job.ray_kind == 'external' else trace_internal_ray
        ray = trace(params, theta, steps=job.steps)
    path = write_json(_output_dir(job) / f"ray_{job.ray_kind}_{_angle_tag(job)}.json", ray)
    summary = {
        'command': job.command,
        'kind': ray.kind,
        'angle': ray.angle,
        'samples': len(ray),
        'landing_estimate': ray.landing_estimate,
        'truncated': ray.truncated,
        'message': ray.message,
        'files': [str(path)],
    }
    return summary, 0


def cmd_cutray(job: JobConfig) -> Result:
    params = MapParams(job.n, job.lambda_value)
    approx = cut_ray(params, parse_angle(job.theta), job.depth)
    path = write_json(_output_dir(job) / f"cutray_{_angle_tag(job)}.json",
                      {'cut_ray': approx, 'boundary': approx.boundary()})
    summary = {
        'command': job.command,
        'theta': approx.theta,
        'depth': approx.depth,
        'requested_depth': approx.requested_depth,
        'symbols': approx.symbols,
        'julia_samples': len(approx.julia_samples),
        'contains_zero_and_infinity': approx.contains_zero_and_infinity,
        'diagnostics': approx.diagnostics,
        'files': [str(path)],
    }
    return summary, 0


def cmd_cusp(job: JobConfig) -> Result:
    cusp = find_cusp(job.n, parse_angle(job.theta), tol=job.tol)
    return {'command': job.command, **cusp.to_dict()}, 0


def cmd_holes(job: JobConfig) -> Result:
    census = sierpinski_hole_centers(job.n, job.level, tol=job.tol)
    table = pd.DataFrame({'center': census.centers, 'residual': census.residuals})
    path = write_csv(_output_dir(job) / f"holes_n{job.n}_k{job.level}.csv", table)
    return {'command': job.command, **census.to_dict(), 'files': [str(path)]}, 0


def cmd_component(job: JobConfig) -> Result:
    seed = job.lambda_value
    level = classify_fast(MapParams(job.n, seed), job.maxiter).level
    if level is not None and level >= 3:
        boundary = hole_boundary(job.n, seed, job.samples, job.rho, level)
    else:
        boundary = component_boundary(job.n, seed, job.samples, job.rho)
    table = pd.DataFrame({'s': boundary.angles, 'lambda': boundary.lambdas, 'residual': boundary.residuals})
    path = write_csv(_output_dir(job) / f"{boundary.kind}_n{job.n}.csv", table)
    summary = {
        'command': job.command,
        'kind': boundary.kind,
        'seed': boundary.seed,
        'radius': boundary.radius,
        'samples': len(boundary.lambdas),
        'gaps': boundary.gaps,
        'closure_defect': boundary.closure_defect,
        'max_step': boundary.max_step,
        'files': [str(path)],
    }
    return summary, 0


def cmd_capacity(job: JobConfig) -> Result:
    ratios = capacity_check(job.n, job.radii, job.arg)
    table = pd.DataFrame({'radius': job.radii, 'ratio': ratios})
    table['error'] = [abs(r - 1) for r in ratios]
    path = write_csv(_output_dir(job) / f"capacity_n{job.n}.csv", table)
    return {'command': job.command, 'arg': job.arg, 'rows': table.to_dict(orient='records'),
            'files': [str(path)]}, 0


def cmd_verify(job: JobConfig) -> Result:
    suite = AcceptanceSuite(job.n, quick=job.quick)
    table = suite.run()
    path = write_csv(_output_dir(job) / f"verify_n{job.n}.csv", table, float_format="%.3f")
    print(table.to_string(index=False), file=sys.stderr)
    passed = suite.all_passed(table)
    result = {
        'command': job.command,
        'n': job.n,
        'quick': job.quick,
        'passed': passed,
        'rows': table.to_dict(orient='records'),
        'errors': suite.error_handler.get_error_summary()['error_counts'],
        'files': [str(path)],
    }
    return result, 0 if passed else 2


HANDLERS: Dict[str, Callable[[JobConfig], Result]] = {
    'render-param': cmd_render_param,
    'render-julia': cmd_render_julia,
    'classify': cmd_classify,
    'ray': cmd_ray,
    'cutray': cmd_cutray,
    'cusp': cmd_cusp,
    'holes': cmd_holes,
    'component': cmd_component,
    'capacity': cmd_capacity,
    'verify': cmd_verify,
}


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj, pretty=True).decode() + "\n")


def run(argv: Optional[List[str]] = None) -> int:
    """Parse flags, run one command and return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1

    cfg = get_config().system_config
    logging.basicConfig(
        level=logging.DEBUG if args.debug else getattr(logging, cfg.log_level.upper(), logging.INFO),
        format=cfg.log_format,
        filename=cfg.log_file,
    )
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        job = job_from_args(args)
    except (PydanticValidationError, ValueError, OSError) as e:
        parser.print_usage(sys.stderr)
        print(f"mcmullen: error: {e}", file=sys.stderr)
        return 1

    if job.threads:
        cfg.max_workers = job.threads
    if args.dump_config:
        write_json(args.dump_config, job.model_dump(mode='json'))

    logger.info(f"Running {job.command} (n={job.n})")
    try:
        result, code = HANDLERS[job.command](job)
    except (DynamicsError, ArithmeticError, RetryError) as e:
        logger.error(f"{job.command} failed: {e}")
        _emit({'command': job.command, 'error': type(e).__name__, 'message': str(e),
               'job': job.model_dump(mode='json')})
        return 2
    _emit(result)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
