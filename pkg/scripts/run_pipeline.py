"""
Pipeline driver: every anticyclo stage as a subcommand with a JSON report
"""
import argparse
import json
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from anticyclo import autforms, branching, dist, family, lfun, verify
from anticyclo.coeff import encode_scalar, ring_make
from anticyclo.config import PipelineConfig, load_config
from anticyclo.errors import AnticycloError, PreconditionError, SchemaError, VerificationError
from anticyclo.log import setup_logging
from anticyclo.reports import error_report, file_hash, success, write_report
from anticyclo.storage import ArtifactStore
from anticyclo.weights import (
    AffinoidWeight,
    Weight,
    crit_set,
    dual_chain_holds,
    exponent_vector,
    lambda_direction,
)


def _json_arg(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("cli.bad_json", f"{what} is not valid JSON: {e}")


def _overrides(pairs: Optional[List[str]]) -> Dict[str, Any]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise SchemaError("cli.bad_override", f"override {item} is not key=value")
        key, value = item.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _config(args) -> PipelineConfig:
    if args.config is None and args.profile is None:
        raise SchemaError("cli.missing_config", "this subcommand needs --config or --profile")
    config = load_config(args.config, _overrides(args.set), args.profile)
    if args.log_level is None:
        setup_logging(config.settings["log_level"])
    return config


def _weight(args, config: Optional[PipelineConfig] = None) -> Weight:
    if getattr(args, "weight", None):
        return Weight.from_json(_json_arg(args.weight, "--weight"))
    if config is None:
        config = _config(args)
    return config.weight


def _inputs(config: PipelineConfig) -> Dict[str, Any]:
    out = {"profile": config.name}
    if config.source:
        out["config_hash"] = file_hash(config.source)
    if config.class_set:
        out["class_set_hash"] = file_hash(config.class_set)
    return out


def _alpha(args, config: PipelineConfig) -> int:
    if args.alpha is not None:
        return args.alpha
    if not config.refinements:
        raise PreconditionError("cli.missing_refinement", "give --alpha or list refinements in the config")
    return int(config.refinements[0]["alpha"])


def _store(args, config: Optional[PipelineConfig] = None) -> ArtifactStore:
    if args.store:
        return ArtifactStore(args.store)
    return ArtifactStore(config.settings["output_dir"] if config else "artifacts")


def _model(config: PipelineConfig) -> autforms.ClassSetModel:
    if config.class_set is None:
        raise PreconditionError("cli.missing_class_set", f"profile {config.name} has no class-set model")
    return autforms.load_class_set(config.class_set)


def _form_degree(config: PipelineConfig) -> int:
    return int(config.settings.get("form_degree", 3))


def cmd_crit(args) -> Dict[str, Any]:
    w = _weight(args)
    return success(weight=w.to_json(), dominant=w.is_dominant(), **crit_set(w).to_json())


def cmd_branch_gen(args) -> Dict[str, Any]:
    gens = branching.fundamental_generators(args.n)
    return success(
        n=args.n,
        generators={name: f.to_json() for name, f in zip(gens.names(), gens.as_list())},
        support_defects=branching.support_defects(args.n, ring_make(3, 6)),
    )


def cmd_branch_check(args) -> Dict[str, Any]:
    config = None if args.weight else _config(args)
    w = _weight(args, config)
    cap = int(config.settings["degree_cap"]) if config else branching.DEFAULT_DEGREE_CAP
    direct = branching.build_u_direct(w, cap)
    product = branching.build_u(w)
    if not branching.same_line(direct, product):
        raise VerificationError("branching.product_formula", f"generator product and invariant differ at {w.to_json()}")
    return success(
        weight=w.to_json(),
        exponents=exponent_vector(w).to_json(),
        dual_chain=dual_chain_holds(w),
        invariant=branching.canonical(direct).to_json(),
        value_at_base=str(product.value_at_base()),
    )


def cmd_kappa(args) -> Dict[str, Any]:
    config = _config(args)
    ring = config.ring()
    p, r, d = config.p, config.level, config.degree
    rng = np.random.default_rng(int(config.settings["seed"]))
    xi = dist.random_distribution(ring, "N", r, d, rng, cosets=dist.n1_cosets(p, r))
    mu = dist.kappa(xi, config.weight)
    moments = {}
    for j in crit_set(config.weight):
        f = dist.LocAnFunction.power(p, "Zpx", r, d, j, ring.modulus)
        moments[str(j)] = encode_scalar(dist.pair(mu, f))
    store = _store(args, config)
    store.save_distribution(args.name, mu, {"source": "kappa", "weight": config.weight.to_json()})
    return success(inputs=_inputs(config), artifact=args.name, level=r, degree=d, moments=moments)


def cmd_up_matrix(args) -> Dict[str, Any]:
    config = _config(args)
    model = _model(config)
    U = autforms.up_matrix(model, config.weight, config.level, _form_degree(config), config.ring())
    eigenspaces = []
    for refinement in config.refinements:
        report = autforms.localize(model, config.weight, int(refinement["alpha"]), config.level, _form_degree(config), config.ring())
        eigenspaces.append(dict(report.to_json(), label=refinement.get("label")))
    return success(inputs=_inputs(config), spectrum=autforms.up_spectrum(U), eigenspaces=eigenspaces)


def cmd_lp_build(args) -> Dict[str, Any]:
    config = _config(args)
    model = _model(config)
    alpha = _alpha(args, config)
    phi = autforms.eigenform(model, config.weight, alpha, config.level, _form_degree(config), config.ring())
    L = lfun.build_Lp(phi, alpha, args.beta)
    cert = lfun.certify_growth(L)
    store = _store(args, config)
    store.save_lfunction(args.name, L, {"alpha": alpha, "inputs": _inputs(config)})
    return success(
        inputs=_inputs(config),
        artifact=args.name,
        lfunction=L.to_json(),
        growth=cert.to_json(),
        interpolation_factor=lfun.correction_chain(config.n, config.p, args.beta, alpha),
    )


def _characters(args, config: Optional[PipelineConfig]) -> List[lfun.AnticyclotomicCharacter]:
    if args.char:
        payload = _json_arg(args.char, "--char")
        items = payload if isinstance(payload, list) else [payload]
    elif config is not None:
        items = config.characters
    else:
        items = []
    if not items:
        raise PreconditionError("cli.missing_character", "give --char or list characters in the config")
    return [lfun.AnticyclotomicCharacter.from_json(c) for c in items]


def _evaluate(
    L: lfun.PadicLFunction, chars: List[lfun.AnticyclotomicCharacter], config: Optional[PipelineConfig] = None
) -> List[Dict[str, Any]]:
    ring = config.character_ring() if config else None
    out = []
    for chi in chars:
        value = lfun.eval_character(L, chi, ring)
        out.append(dict(value.to_json(), character=chi.to_json()))
    return out


def cmd_lp_eval(args) -> Dict[str, Any]:
    config = _config(args) if (args.config or args.profile) else None
    L = _store(args, config).load_lfunction(args.name)
    return success(artifact=args.name, lfunction=L.to_json(), values=_evaluate(L, _characters(args, config), config))


def cmd_family_lift(args) -> Dict[str, Any]:
    config = _config(args)
    model = _model(config)
    alpha = _alpha(args, config)
    D = args.D or int(config.settings.get("family_degree", 4))
    phi = autforms.eigenform(model, config.weight, alpha, config.level, _form_degree(config), config.ring())
    omega = AffinoidWeight(config.weight, (lambda_direction(config.n),))
    F = family.lift_family(phi, alpha, omega, D)
    _store(args, config).save_family(args.name, F, {"inputs": _inputs(config)})
    return success(
        inputs=_inputs(config),
        artifact=args.name,
        family=F.to_json(),
        classical_points=family.classical_points(omega, config.p),
    )


def cmd_family_eval(args) -> Dict[str, Any]:
    config = _config(args)
    F = _store(args, config).load_family(args.name, _model(config))
    point = [int(t) for t in _json_arg(args.point, "--point")]
    at_point = family.specialize_family(F, point)
    payload = success(artifact=args.name, specialization=at_point.to_json())
    if args.char or config.characters:
        L = family.specialize_Lp(family.family_Lp(F, args.beta), point)
        payload["values"] = _evaluate(L, _characters(args, config), config)
    return payload


def cmd_verify_all(args) -> Dict[str, Any]:
    config = _config(args)
    results, status = verify.run_all_tests(config, args.only)
    return success(inputs=_inputs(config), results=results, overall=status)


def cmd_make_class_set(args) -> Dict[str, Any]:
    masses = _json_arg(args.masses, "--masses")
    twisted = [tuple(t) for t in _json_arg(args.twisted, "--twisted")] if args.twisted else []
    stabilizers = _json_arg(args.stabilizers, "--stabilizers") if args.stabilizers else None
    model = autforms.synthetic_class_set(args.p, masses, twisted, stabilizers, name=args.model_name, n=args.n)
    autforms.save_class_set(model, args.path)
    return success(path=args.path, hash=file_hash(args.path), n=model.n, classes=model.classes, mass=str(model.mass()))


COMMANDS = {
    "crit": cmd_crit,
    "branch-gen": cmd_branch_gen,
    "branch-check": cmd_branch_check,
    "kappa": cmd_kappa,
    "up-matrix": cmd_up_matrix,
    "lp-build": cmd_lp_build,
    "lp-eval": cmd_lp_eval,
    "family-lift": cmd_family_lift,
    "family-eval": cmd_family_eval,
    "verify-all": cmd_verify_all,
    "make-class-set": cmd_make_class_set,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--out", default=None, help="Write the JSON report to this file")
    common.add_argument("--profile", default=None, help="Bundled profile name, e.g. n1-p3")
    common.add_argument("--config", default=None, help="Path to a pipeline config file")
    common.add_argument("--set", action="append", help="Dotted override such as ring.N=10")
    common.add_argument("--store", default=None, help="Artifact directory (defaults to settings.output_dir)")

    parser = argparse.ArgumentParser(description="Anticyclotomic p-adic L-function pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crit", parents=[common], help="Critical twists of a weight")
    p.add_argument("--weight", default=None, help='e.g. {"mu": [0, -5], "lambda": [0]}')

    p = sub.add_parser("branch-gen", parents=[common], help="Fundamental H-invariant generators")
    p.add_argument("--n", type=int, default=1)

    p = sub.add_parser("branch-check", parents=[common], help="Product formula against the solved invariant")
    p.add_argument("--weight", default=None)

    p = sub.add_parser("kappa", parents=[common], help="Push a random N^1 distribution to Z_p^x")
    p.add_argument("--name", default="kappa")

    sub.add_parser("up-matrix", parents=[common], help="U_p matrix, slopes and eigenspace dimensions")

    p = sub.add_parser("lp-build", parents=[common], help="Build the p-adic L-function of a refinement")
    p.add_argument("--alpha", type=int, default=None)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--name", default="lp")

    p = sub.add_parser("lp-eval", parents=[common], help="Evaluate a stored L-function at characters")
    p.add_argument("--name", default="lp")
    p.add_argument("--char", default=None, help='e.g. {"p": 3, "beta": 1, "k": 1, "j": 0}')

    p = sub.add_parser("family-lift", parents=[common], help="Lift an eigenform over the lambda-direction disc")
    p.add_argument("--alpha", type=int, default=None)
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--name", default="family")

    p = sub.add_parser("family-eval", parents=[common], help="Specialize a stored family")
    p.add_argument("--name", default="family")
    p.add_argument("--point", default="[0]", help="JSON list of disc coordinates")
    p.add_argument("--char", default=None)
    p.add_argument("--beta", type=int, default=1)

    p = sub.add_parser("verify-all", parents=[common], help="Run the invariant suite")
    p.add_argument("--only", nargs="*", default=None, help="Check or module names")

    p = sub.add_parser("make-class-set", parents=[common], help="Write a synthetic class-set model")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--masses", required=True, help="JSON matrix whose rows sum to p^{n(n+1)(2n+1)/6}")
    p.add_argument("--twisted", default=None, help="JSON list of [class, digit] pairs")
    p.add_argument("--stabilizers", default=None)
    p.add_argument("--model-name", default="synthetic")
    p.add_argument("--path", required=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or "WARNING")
    try:
        report = COMMANDS[args.command](args)
        status = 0
        if report.get("overall") == "fail":
            status = VerificationError.exit_status
    except AnticycloError as e:
        report = error_report(e)
        status = e.exit_status
    text = write_report(report, args.out)
    if args.out is None:
        print(text)
    return status


if __name__ == '__main__':
    sys.exit(main())
