"""
Curve Loader
Reads Weierstrass models and Fourier coefficient tables from the raw data directory
"""

import logging
import re
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import settings
from models.errors import ConfigError
from models.global_q import CURVES, CoeffTable, EllipticInput, coeffs_from_curve, extend_coeffs

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"#\s*N\s*=\s*(?P<N>\d+)\s+w\s*=\s*(?P<w>[+-]?1)\b")


def _read_header(path: Path) -> Tuple[int, int]:
    """Conductor and root number from the leading `# N=<conductor> w=<sign>` line"""
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            match = _HEADER.match(line)
            if match is None:
                break
            return int(match.group("N")), int(match.group("w"))
    raise ConfigError(f"{path}: missing '# N=<conductor> w=<sign>' header")


def load_curve_file(path: Union[str, Path], label: Optional[str] = None) -> EllipticInput:
    """
    Load a `.curve` file: header line then `a1,a2,a3,a4,a6`

    Raises:
        ConfigError: malformed header or coefficient line
    """
    path = Path(path)
    conductor, root_number = _read_header(path)
    rows = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    if len(rows) != 1:
        raise ConfigError(f"{path}: expected one coefficient line, found {len(rows)}")
    try:
        ainvs = tuple(int(x) for x in rows[0].split(","))
    except ValueError:
        raise ConfigError(f"{path}: non-integer Weierstrass coefficient in {rows[0]!r}") from None
    if len(ainvs) != 5:
        raise ConfigError(f"{path}: expected a1,a2,a3,a4,a6, got {len(ainvs)} values")
    try:
        curve = EllipticInput(label or path.stem, ainvs, conductor, root_number)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    logger.info(f"Loaded curve {curve.label} (N={conductor}, w={root_number}) from {path}")
    return curve


def load_coeff_file(path: Union[str, Path], n_max: Optional[int] = None,
                    label: Optional[str] = None) -> CoeffTable:
    """
    Load a coefficient CSV with columns `n,a_n`

    The file must list a_p for every prime p <= n_max; missing composite
    entries are filled by extend_coeffs and listed entries are checked against
    the extension.

    Args:
        path: CSV with a `# N=.. w=..` header line
        n_max: table length; defaults to the largest n in the file

    Returns:
        CoeffTable up to n_max
    """
    path = Path(path)
    conductor, root_number = _read_header(path)
    try:
        df = pd.read_csv(path, comment="#", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"{path}: {e}") from None
    if list(df.columns) != ["n", "a_n"]:
        raise ConfigError(f"{path}: expected columns n,a_n, got {list(df.columns)}")
    if not (pd.api.types.is_integer_dtype(df["n"]) and pd.api.types.is_integer_dtype(df["a_n"])):
        raise ConfigError(f"{path}: non-integer entries")
    if df["n"].duplicated().any():
        raise ConfigError(f"{path}: duplicate n values")
    known: Dict[int, int] = dict(zip(df["n"].astype(int), df["a_n"].astype(int)))
    n_max = n_max or max(known)
    table = extend_coeffs(known, n_max, conductor, root_number)
    table.label = label or path.stem.replace("_coeffs", "")
    mismatched = [n for n, a in known.items() if n <= n_max and table.coeffs[n] != a]
    if mismatched:
        raise ConfigError(f"{path}: listed a_n disagree with multiplicativity at n = {mismatched[:10]}")
    logger.info(f"Loaded {len(known)} coefficients for {table.label} from {path}, n_max = {n_max}")
    return table


def resolve_curve(label: str, data_dir: Optional[Path] = None) -> EllipticInput:
    """Curve by label: `<label>.curve` under data_dir if present, else the builtin registry"""
    data_dir = Path(data_dir or settings.data_dir)
    path = data_dir / f"{label}.curve"
    if path.exists():
        return load_curve_file(path, label)
    if label in CURVES:
        return CURVES[label]
    raise ConfigError(f"unknown curve {label!r}: no {path.name} in {data_dir} and not builtin")


def compare_with_curve(table: CoeffTable, curve: EllipticInput) -> Dict:
    """Point-count oracle for an ingested table: primes where the file and the curve disagree"""
    if table.conductor != curve.conductor:
        raise ConfigError(f"conductor {table.conductor} in table, {curve.conductor} on curve")
    reference = coeffs_from_curve(curve, table.n_max)
    diff = np.nonzero(reference.coeffs[1:] != table.coeffs[1:])[0] + 1
    return {"label": curve.label, "n_max": table.n_max,
            "mismatches": [int(n) for n in diff], "ok": diff.size == 0}

