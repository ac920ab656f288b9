import argparse
import logging
import math
import sys
import time
from typing import Callable, Optional, Sequence

from config import configure_logging, get_settings
from models.arith import CyclotomicTally
from models.circle import BoxSpec
from models.geometry import VarietySpec
from models.run_config import OutputFormat, Report, RunConfig
from models.sums import GaussSumInstance, ThetaMode
from models.verification import SuiteLevel
from services.container import ServiceContainer
from services.errors import CapacityExceeded, DomainError
from services.geometry_service import CHAIN_PRIMES, CODIM_PRIMES, DEFAULT_PRIMES
from services.verification_service import VerificationService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAPACITY = 2
EXIT_CHECK_FAILED = 3

# (results, diagnostics, every check passed)
Outcome = tuple[list[dict], list[str], bool]

GLOBAL_OPTIONS = (
    "cap", "tally_cap", "workers", "chunk", "format", "output", "seed", "theta_mode", "eps_slack", "log_level",
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cap", type=int, help="work cap in term evaluations (MULTIGAUSS_CAP)")
    common.add_argument("--tally-cap", type=int, help="largest exact tally order")
    common.add_argument("--workers", type=int, help="worker threads for chunked reductions")
    common.add_argument("--chunk", type=int, help="grid chunk size")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--theta-mode", choices=[m.value for m in ThetaMode])
    common.add_argument("--eps-slack", type=float)
    common.add_argument("--log-level", default=None)

    instance = argparse.ArgumentParser(add_help=False)
    instance.add_argument("--system", required=True, help='forms separated by ";", e.g. "x1^2 + x2^2; x1*x2"')
    instance.add_argument("--q", type=int, required=True)
    instance.add_argument("--a", help="comma-separated a_1..a_R (default all 1)")
    instance.add_argument("--chi", action="append", help="character q:e1,e2,...; repeat per variable or give one")

    parser = argparse.ArgumentParser(prog="multigauss", description="Multiple Gauss sums and their circle-method shadow")
    commands = parser.add_subparsers(dest="command", required=True)

    charset = commands.add_parser("charset", parents=[common], help="characters mod q with metadata")
    charset.add_argument("q", type=int)

    gauss = commands.add_parser("gauss", parents=[common, instance], help="C_F(q, a; chi)")
    gauss.add_argument("--method", choices=["factored", "crt", "bruteforce"], default="factored")
    commands.add_parser("crt-check", parents=[common, instance], help="CRT product against brute force")
    cauchy = commands.add_parser("cauchy-check", parents=[common, instance], help="fourth-power Cauchy inequality")
    cauchy.add_argument("--literal", action="store_true", help="also evaluate the quadruple-difference sum")

    esum = commands.add_parser("esum", parents=[common], help="normalized complete sum E_F(q)")
    esum.add_argument("--form", required=True)
    esum.add_argument("--q", type=int, required=True)
    esum.add_argument("--u", type=int, default=1)

    nu = commands.add_parser("nu", parents=[common, instance], help="nu(q; chi)")
    nu.add_argument("--method", choices=["auto", "histogram", "direct"], default="auto")

    scan = commands.add_parser("exponent-scan", parents=[common], help="empirical against theoretical exponents")
    scan.add_argument("--system", required=True)
    scan.add_argument("--primes", default="11..97", help='"11..97" or "11,13,17"')
    scan.add_argument("--dim-v", type=int, required=True, help="dimension of the singular locus")
    scan.add_argument("--random-chars", action="store_true")

    cz = commands.add_parser("cz-check", parents=[common], help="Cochrane-Zheng bound for one polynomial")
    cz.add_argument("--poly", required=True)
    cz.add_argument("--p", type=int, required=True)
    cz.add_argument("--t", type=int, default=1)
    cz.add_argument("--a", type=int, default=1)
    cz.add_argument("--chi", help="one character; every character mod p^t when omitted")

    dim = commands.add_parser("dim", parents=[common], help="dimension estimate from point counts")
    dim.add_argument("--system", required=True)
    dim.add_argument("--locus", choices=["zero", "singular"], default="singular")
    dim.add_argument("--primes", default=",".join(map(str, DEFAULT_PRIMES)))

    chain = commands.add_parser("chain-check", parents=[common], help="T_k / U_k dimension chain")
    chain.add_argument("--system", required=True)
    chain.add_argument("--primes", default=",".join(map(str, CHAIN_PRIMES)))

    codim = commands.add_parser("codim-check", parents=[common], help="bihomogeneous codimension bound")
    codim.add_argument("--system", required=True)
    codim.add_argument("--primes", default=",".join(map(str, CODIM_PRIMES)))

    series = commands.add_parser("sseries", parents=[common], help="partial singular series")
    series.add_argument("--system", required=True)
    series.add_argument("--Q", type=int, required=True)
    series.add_argument("--method", choices=["multiplicative", "direct"], default="multiplicative")

    integral = commands.add_parser("sintegral", parents=[common], help="singular integral estimate")
    integral.add_argument("--system", required=True)
    integral.add_argument("--box", help='"low,high" for every side; default 1/4,3/4')
    integral.add_argument("--eps", type=float, default=0.02)
    integral.add_argument("--samples", type=int, default=1 << 18)

    count = commands.add_parser("count-primes", parents=[common], help="von Mangoldt sieve summary")
    count.add_argument("N", type=int)

    asymptotic = commands.add_parser("asymptotic", parents=[common], help="N_F(X) against the predicted main term")
    asymptotic.add_argument("--system", required=True)
    asymptotic.add_argument("--X", type=float, required=True)
    asymptotic.add_argument("--Q", type=int)
    asymptotic.add_argument("--box")
    asymptotic.add_argument("--eps", type=float, default=0.02)
    asymptotic.add_argument("--samples", type=int, default=1 << 18)

    arcs = commands.add_parser("major-arcs", parents=[common], help="major-arc boxes, measure and disjointness")
    arcs.add_argument("--X", type=float, required=True)
    arcs.add_argument("--degrees", required=True, help="comma-separated form degrees")
    arcs.add_argument("--Q", type=float, help="default X^(1 / (4 (R + 1)))")

    suite = commands.add_parser("verify-suite", parents=[common], help="acceptance battery")
    suite.add_argument("--level", choices=[level.value for level in SuiteLevel], default=SuiteLevel.SMOKE.value)
    suite.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; 0 ok, 1 usage error, 2 capacity refusal, 3 failed mathematical check"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit:
        return EXIT_OK if not exit.code else EXIT_USAGE

    started = time.perf_counter()
    try:
        settings = get_settings().with_overrides(
            work_cap=args.cap,
            tally_cap=args.tally_cap,
            workers=args.workers,
            chunk_size=args.chunk,
            eps_slack=args.eps_slack,
            theta_mode=args.theta_mode,
        )
        configure_logging(args.log_level or settings.log_level)
        services = ServiceContainer(settings)
        results, diagnostics, ok = COMMANDS[args.command](services, args)
    except CapacityExceeded as error:
        print(f"capacity refused: {error}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValueError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE
    elapsed = time.perf_counter() - started

    report = Report(
        config=run_config(args, settings),
        results=results,
        diagnostics=diagnostics,
        timing={"seconds": elapsed},
    )
    if args.output:
        services.reports.save(report, args.output, args.format)
    else:
        sys.stdout.buffer.write(services.reports.emit_report(report, args.format))
        sys.stdout.flush()
    if not ok:
        logger.warning("%s: a mathematical check failed", args.command)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def run_config(args: argparse.Namespace, settings) -> RunConfig:
    named = {"command", "system", "q", "a", "chi"} | set(GLOBAL_OPTIONS)
    extra = {key: str(value) for key, value in vars(args).items() if key not in named and value is not None}
    chi = getattr(args, "chi", None)
    if isinstance(chi, str):
        chi = [chi]
    return RunConfig(
        command=args.command,
        system=getattr(args, "system", None),
        q=str(args.q) if getattr(args, "q", None) is not None else None,
        a=str(args.a) if getattr(args, "a", None) is not None else None,
        chi=chi,
        cap=settings.work_cap,
        tally_cap=settings.tally_cap,
        eps_slack=settings.eps_slack,
        theta_mode=settings.theta_mode,
        output_format=OutputFormat(args.format),
        seed=args.seed,
        workers=settings.workers,
        extra=extra,
    )


# ---------------------------------------------------------------- commands


def cmd_charset(services: ServiceContainer, args) -> Outcome:
    rows = []
    for chi in services.characters.enumerate_characters(args.q):
        table = services.characters.value_table(chi)
        rows.append(
            {
                **services.characters.metadata(chi),
                "values": [int(m) if m >= 0 else None for m in table],
            }
        )
    return rows, [f"{len(rows)} characters mod {args.q}; values are m with chi(n) = e(m / order)"], True


def cmd_gauss(services: ServiceContainer, args) -> Outcome:
    inst = parse_instance(services, args)
    method = {
        "factored": services.expsums.gauss_sum,
        "crt": services.expsums.gauss_sum_crt,
        "bruteforce": services.expsums.gauss_sum_bruteforce,
    }[args.method]
    report = method(inst)
    row = services.expsums.scan_row(inst, report)
    row.update({"log_q_magnitude": _log_q(report.magnitude, inst.q), "tally": report.tally, "method": args.method})
    return [row], list(report.diagnostics), True


def cmd_crt_check(services: ServiceContainer, args) -> Outcome:
    inst = parse_instance(services, args)
    crt = services.expsums.gauss_sum_crt(inst)
    brute = services.expsums.gauss_sum_bruteforce(inst)
    if crt.tally is not None and brute.tally is not None:
        equal = crt.tally.same_as(brute.tally)
    else:
        equal = abs(crt.value - brute.value) <= 1e-9 * max(1.0, brute.magnitude)
    rows = [
        {**services.expsums.scan_row(inst, crt), "method": "crt", "tally": crt.tally},
        {**services.expsums.scan_row(inst, brute), "method": "bruteforce", "tally": brute.tally},
    ]
    return rows, [f"tallies equal: {equal}"], equal


def cmd_cauchy_check(services: ServiceContainer, args) -> Outcome:
    inst = parse_instance(services, args)
    check = services.expsums.cauchy_fourth_check(inst, literal=args.literal)
    return [check.model_dump()], [], check.ok


def cmd_esum(services: ServiceContainer, args) -> Outcome:
    form = services.forms.as_form(services.forms.parse_polynomial(args.form))
    value = services.expsums.normalized_complete_sum(form, args.q, args.u)
    row = {
        "q": args.q,
        "re": value.real,
        "im": value.imag,
        "magnitude": abs(value),
        "log_q_magnitude": _log_q(abs(value), args.q),
    }
    return [row], [], True


def cmd_nu(services: ServiceContainer, args) -> Outcome:
    system = services.forms.parse_system(args.system)
    chars = services.character_system(args.chi, system.s, args.q)
    result = services.expsums.nu_tally(system, args.q, chars, args.method)
    if isinstance(result, CyclotomicTally):
        value, tally, diagnostics = services.arith.tally_value(result), result, []
    else:
        value, tally, diagnostics = complex(result), None, ["complex_only"]
    row = {"q": args.q, "re": value.real, "im": value.imag, "magnitude": abs(value), "tally": tally}
    return [row], diagnostics, True


def cmd_exponent_scan(services: ServiceContainer, args) -> Outcome:
    system = services.forms.parse_system(args.system)
    primes = services.arith.prime_list(args.primes)
    rows = services.expsums.exponent_scan(system, primes, args.dim_v, seed=args.seed, random_characters=args.random_chars)
    failed = [row["q"] for row in rows if not row["ok"]]
    diagnostics = [f"exponent exceeds the bound plus slack at q={q}" for q in failed]
    return rows, diagnostics, not failed


def cmd_cz_check(services: ServiceContainer, args) -> Outcome:
    f = services.forms.parse_polynomial(args.poly, 1)
    q = args.p**args.t
    if args.chi:
        chars = [services.characters.parse_spec(args.chi)]
    else:
        chars = services.characters.enumerate_characters(q)
    rows = []
    for chi in chars:
        check = services.expsums.cochrane_zheng_check(f, args.p, args.t, args.a, chi)
        rows.append({"chi": chi.spec, "lhs": check.lhs, "rhs": check.rhs, "ok": check.ok})
    return rows, [], all(row["ok"] for row in rows)


def cmd_dim(services: ServiceContainer, args) -> Outcome:
    system = services.forms.parse_system(args.system)
    if args.locus == "singular":
        variety = services.geometry.singular_locus_spec(system)
    else:
        variety = VarietySpec(n=system.s, equations=system.forms, label="V")
    estimate = services.geometry.dim_estimate(variety, services.arith.prime_list(args.primes), system.degrees)
    return [{"locus": variety.label, **estimate.model_dump()}], [], True


def cmd_chain_check(services: ServiceContainer, args) -> Outcome:
    system = services.forms.parse_system(args.system)
    report = services.geometry.verify_chain_claims(system, services.arith.prime_list(args.primes))
    return [report.model_dump()], list(report.notes), report.all_ok


def cmd_codim_check(services: ServiceContainer, args) -> Outcome:
    report = services.geometry.verify_codim_proposition(
        services.forms.parse_system(args.system), services.arith.prime_list(args.primes)
    )
    return [report.model_dump()], list(report.notes), report.ok


def cmd_sseries(services: ServiceContainer, args) -> Outcome:
    result = services.circle.singular_series_partial(services.forms.parse_system(args.system), args.Q, args.method)
    return [result.model_dump()], list(result.notes), True


def cmd_sintegral(services: ServiceContainer, args) -> Outcome:
    system = services.forms.parse_system(args.system)
    box = BoxSpec.from_text(args.box, system.s)
    result = services.circle.singular_integral_estimate(system, box, args.eps, args.samples)
    return [result.model_dump()], [], True


def cmd_count_primes(services: ServiceContainer, args) -> Outcome:
    return [services.circle.prime_counts(args.N)], [], True


def cmd_asymptotic(services: ServiceContainer, args) -> Outcome:
    system = services.forms.parse_system(args.system)
    report = services.circle.asymptotic_report(
        system, args.X, BoxSpec.from_text(args.box, system.s), args.Q, args.eps, args.samples
    )
    return [report.model_dump()], list(report.notes), True


def cmd_major_arcs(services: ServiceContainer, args) -> Outcome:
    summary = services.circle.major_arc_summary(args.X, parse_ints(args.degrees), args.Q)
    diagnostics = [] if summary.disjoint is not None else ["too many boxes for the pairwise disjointness test"]
    return [summary.model_dump()], diagnostics, True


def cmd_verify_suite(services: ServiceContainer, args) -> Outcome:
    only = [int(piece) for piece in args.only.split(",")] if args.only else None
    suite = VerificationService(services, seed=args.seed).verify_suite(SuiteLevel(args.level), only)
    rows = [criterion.model_dump() for criterion in suite.criteria]
    diagnostics = [f"criterion {number} failed" for number in suite.failures()]
    return rows, diagnostics, suite.ok


COMMANDS: dict[str, Callable[[ServiceContainer, argparse.Namespace], Outcome]] = {
    "charset": cmd_charset,
    "gauss": cmd_gauss,
    "crt-check": cmd_crt_check,
    "cauchy-check": cmd_cauchy_check,
    "esum": cmd_esum,
    "nu": cmd_nu,
    "exponent-scan": cmd_exponent_scan,
    "cz-check": cmd_cz_check,
    "dim": cmd_dim,
    "chain-check": cmd_chain_check,
    "codim-check": cmd_codim_check,
    "sseries": cmd_sseries,
    "sintegral": cmd_sintegral,
    "count-primes": cmd_count_primes,
    "asymptotic": cmd_asymptotic,
    "major-arcs": cmd_major_arcs,
    "verify-suite": cmd_verify_suite,
}


# ----------------------------------------------------------------- parsing


def parse_instance(services: ServiceContainer, args) -> GaussSumInstance:
    return services.instance(args.system, args.q, parse_ints(args.a) if args.a else None, args.chi)


def parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(piece) for piece in text.split(",") if piece.strip())
    except ValueError:
        raise DomainError(f"Expected comma-separated integers, got {text!r}")


def _log_q(magnitude: float, q: int) -> Optional[float]:
    if q < 2 or magnitude <= 0:
        return None
    return math.log(magnitude) / math.log(q)


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
