"""
p-adic L-function Workbench - command line
Local identities, archimedean integrals, global measures and the verification campaign
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

import sympy
from dotenv import load_dotenv
from pydantic import ValidationError

# Fix path resolution
current_file = Path(__file__).resolve()
project_root = current_file.parent.parent
load_dotenv(project_root / ".env")
if str(current_file.parent) not in sys.path:
    sys.path.append(str(current_file.parent))

from campaign import load_config, run_campaign, to_jsonable, write_report  # noqa: E402
from config.settings import settings  # noqa: E402
from data.curve_loader import resolve_curve  # noqa: E402
from models import archimedean, bt_lattice  # noqa: E402
from models.char_gauss import (  # noqa: E402
    AddChar,
    MultChar,
    annulus_integral_oracle,
    char_step_function,
    gauss_sum,
    legendre_char,
    lemma24_value,
    primitive_chars,
    scalar_is_zero,
    to_complex,
    trivial_char,
)
from models.errors import ConfigError, NonPrimeError, WorkbenchError  # noqa: E402
from models.global_q import lp_report  # noqa: E402
from models.local_dist import (  # noqa: E402
    SPECIAL,
    SPHERICAL,
    LocalDist,
    LocalRep,
    euler_L_product,
    euler_factor,
    local_L,
    prop27_check,
)
from models.padic_core import LocalFieldSpec, field  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


# ---- argument helpers -----------------------------------------------------

def parse_scalar(text: str) -> Any:
    """Exact rational, complex (contains j) or sympy expression such as sqrt(-5)"""
    text = text.strip()
    try:
        return Fraction(text)
    except ValueError:
        pass
    if "j" in text:
        try:
            return complex(text.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"cannot parse complex number {text!r}") from None
    try:
        value = sympy.sympify(text, rational=True)
    except (sympy.SympifyError, TypeError):
        raise ConfigError(f"cannot parse scalar {text!r}") from None
    if value.free_symbols:
        raise ConfigError(f"scalar {text!r} has free symbols")
    return value


def field_from_q(q: int, precision: Optional[int] = None) -> LocalFieldSpec:
    factors = sympy.factorint(q)
    if len(factors) != 1:
        raise NonPrimeError(f"q = {q} is not a prime power")
    (p, f_res), = factors.items()
    return field(int(p), int(f_res), precision or settings.padic_precision)


def pick_char(fld: LocalFieldSpec, cond: int, name: str, at_uniformizer: Any = 1) -> MultChar:
    """`trivial`, `legendre`, or an index into the primitive characters of conductor exponent cond"""
    if scalar_is_zero(at_uniformizer):
        raise ConfigError("--chi-pi must be nonzero")
    if name == "trivial" or cond == 0:
        return trivial_char(fld).with_uniformizer(at_uniformizer)
    if name == "legendre":
        if cond != 1:
            raise ConfigError("the Legendre character has conductor exponent 1")
        return legendre_char(fld, at_uniformizer)
    try:
        index = int(name)
    except ValueError:
        raise ConfigError(f"--char must be trivial, legendre or an index, got {name!r}") from None
    chars = primitive_chars(fld, cond, at_uniformizer)
    if not 0 <= index < len(chars):
        raise ConfigError(f"--char {index} out of range: {len(chars)} primitive characters of conductor {cond}")
    return chars[index]


def build_rep(fld: LocalFieldSpec, kind: str, alpha1: str, alpha2: Optional[str]) -> LocalRep:
    a1 = parse_scalar(alpha1)
    if alpha2 is None:
        if kind != SPECIAL:
            raise ConfigError("--alpha2 is required for a spherical representation")
        a2 = fld.q * a1
    else:
        a2 = parse_scalar(alpha2)
    try:
        return LocalRep(fld, a1, a2, kind)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def emit(payload: Any, out: Optional[Path]) -> None:
    text = payload if isinstance(payload, str) else json.dumps(to_jsonable(payload), sort_keys=True, indent=2)
    if out is None:
        sys.stdout.write(text + "\n")
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {out}")


# ---- subcommands ----------------------------------------------------------

def cmd_gauss(args: argparse.Namespace) -> int:
    fld = field_from_q(args.q)
    chi = pick_char(fld, args.cond, args.char)
    tau = gauss_sum(chi, AddChar(fld))
    emit({"q": fld.q, "cond": chi.cond_exp, "char": chi.label,
          "tau_re": tau.real, "tau_im": tau.imag, "abs": abs(tau),
          "expected_abs": fld.q ** (chi.cond_exp / 2)}, args.out)
    return EXIT_OK


def cmd_lemma24(args: argparse.Namespace) -> int:
    fld = field_from_q(args.q)
    chi = pick_char(fld, args.cond, args.char, parse_scalar(args.chi_pi))
    psi = AddChar(fld)
    closed = to_complex(lemma24_value(chi, psi))
    oracle = annulus_integral_oracle(char_step_function(chi), psi, n_max=args.n_max, tol=args.tol)
    rel = abs(oracle["value"] - closed) / max(1.0, abs(closed))
    emit({"q": fld.q, "cond": chi.cond_exp, "closed_form": closed, "oracle": oracle["value"],
          "tail_bound": oracle["tail_bound"], "annuli": oracle["n_used"], "rel_err": rel}, args.out)
    return EXIT_OK


def cmd_euler(args: argparse.Namespace) -> int:
    fld = field_from_q(args.q)
    rep = build_rep(fld, args.kind, args.alpha1, args.alpha2)
    chi = pick_char(fld, args.cond, args.char, parse_scalar(args.chi_pi))
    e = euler_factor(rep, chi)
    report: Dict[str, Any] = {"rep": rep.to_json(), "cond": chi.cond_exp, "euler_factor": e,
                              "euler_factor_numeric": to_complex(e), "e_times_L": euler_L_product(rep, chi)}
    try:
        report["L_half"] = local_L(rep, chi.at_uniformizer, Fraction(1, 2), chi.cond_exp)
    except WorkbenchError as err:
        report["L_half"] = None
        report["note"] = str(err)
    emit(report, args.out)
    return EXIT_OK


def cmd_prop27(args: argparse.Namespace) -> int:
    fld = field_from_q(args.q)
    rep = build_rep(fld, args.kind, args.alpha1, args.alpha2)
    chi = pick_char(fld, args.cond, args.char, parse_scalar(args.chi_pi))
    report = prop27_check(LocalDist(rep), chi, args.tol)
    emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_FAILED


def cmd_tree(args: argparse.Namespace) -> int:
    fld = field_from_q(args.q)
    if args.emit == "dot":
        emit(bt_lattice.to_dot(fld, args.radius, tree=args.tree), args.out)
        return EXIT_OK
    report = bt_lattice.regularity_check(fld, args.radius)
    report["tree_vertices"] = len(bt_lattice.tree_ball(fld, args.radius))
    emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_FAILED


def cmd_arch(args: argparse.Namespace) -> int:
    if args.bessel is not None:
        evals = [archimedean.bessel_K_eval(order, args.bessel) for order in (0, 1)]
        emit({"x": args.bessel, "K": [{"order": e.order, "value": e.value, "method": e.method,
                                       "abserr": e.abserr} for e in evals]}, args.out)
        return EXIT_OK
    report = archimedean.verify_identity(args.identity, args.s, args.tol)
    emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_FAILED


def cmd_lp(args: argparse.Namespace) -> int:
    curve = resolve_curve(args.curve)
    s = parse_scalar(args.s)
    if not isinstance(s, Fraction):
        raise ConfigError(f"--s must be rational, got {args.s!r}")
    report = lp_report(curve, args.p, args.level, s, args.trunc, args.jobs)
    emit(report, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    update: Dict[str, Any] = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.jobs is not None:
        update["jobs"] = args.jobs
    if args.only:
        update["only"] = [s.strip() for s in args.only.split(",") if s.strip()]
    if update:
        config = type(config).model_validate({**config.model_dump(), **update})
    report = run_campaign(config)
    out = args.out or config.output
    if out is not None:
        write_report(report, out)
    else:
        emit(report.to_dict(), None)
    if args.table:
        sys.stderr.write(report.table() + "\n")
    return EXIT_OK if report.all_passed else EXIT_FAILED


# ---- parser ---------------------------------------------------------------

def _add_local_args(p: argparse.ArgumentParser, with_rep: bool) -> None:
    p.add_argument("--q", "--p", dest="q", type=int, required=True, help="residue field size (prime power)")
    p.add_argument("--cond", type=int, default=0, help="conductor exponent of the character")
    p.add_argument("--char", default="0", help="trivial, legendre, or index of a primitive character")
    p.add_argument("--chi-pi", dest="chi_pi", default="1", help="chi(uniformizer): rational, complex or sympy")
    if with_rep:
        p.add_argument("--kind", choices=[SPHERICAL, SPECIAL], default=SPHERICAL)
        p.add_argument("--alpha1", required=True)
        p.add_argument("--alpha2", default=None, help="defaults to q * alpha1 for special")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padic-workbench", description=settings.app_name)
    parser.add_argument("--verbose", action="store_true", help="DEBUG logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", type=Path, default=None, help="write the result here instead of stdout")
        p.set_defaults(handler=handler)
        return p

    p = command("gauss", cmd_gauss, "Gauss sum of a character")
    _add_local_args(p, with_rep=False)

    p = command("lemma24", cmd_lemma24, "closed form vs annulus oracle for int chi psi dx")
    _add_local_args(p, with_rep=False)
    p.add_argument("--n-max", dest="n_max", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)

    p = command("euler", cmd_euler, "Euler factor and local L-value")
    _add_local_args(p, with_rep=True)

    p = command("prop27", cmd_prop27, "character integral against e * tau * L(1/2)")
    _add_local_args(p, with_rep=True)
    p.add_argument("--tol", type=float, default=1e-8)

    p = command("tree", cmd_tree, "ball in the lattice graph or tree")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--emit", choices=["dot", "json"], default="json")
    p.add_argument("--tree", action="store_true", help="homothety classes instead of lattices")

    p = command("arch", cmd_arch, "archimedean Mellin identities and Bessel values")
    p.add_argument("--identity", choices=["mellin", "complex-zeta", "real-zeta"], default="mellin")
    p.add_argument("--s", type=float, nargs="+", default=None)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--bessel", type=float, default=None, help="evaluate K0 and K1 at this x instead")

    p = command("lp", cmd_lp, "finite-level measure and L_p value of a curve")
    p.add_argument("--curve", default="11a")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--s", default="0")
    p.add_argument("--trunc", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = command("verify", cmd_verify, "run the verification campaign")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--only", default=None, help="comma list of case-id prefixes")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--table", action="store_true", help="print the summary table on stderr")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)
    try:
        return args.handler(args)
    except (ConfigError, ValidationError) as e:
        logger.error(f"configuration error: {e}")
        return EXIT_CONFIG
    except WorkbenchError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILED
    except Exception as e:
        logger.exception(f"internal error: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
