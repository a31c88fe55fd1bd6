"""Exhaustive numerical checks of the finite-field functional equation for
character sums on regular prehomogeneous vector spaces."""

__version__ = "0.1.0"

from .ff_core import FiniteField, make_field, norm_to, trace_to  # noqa: E402
from .characters import AddChar, MultChar, gauss_sum, gauss_product, check_eqsim  # noqa: E402
from .catalog import builtin_instances, get_instance, load_instance  # noqa: E402
from .fourier import GridFunction, dft  # noqa: E402
from .func_eq import (  # noqa: E402
    compute_table,
    cross_extension_check,
    fit_exponents,
    support_scan,
)

__all__ = [
    "FiniteField", "make_field", "norm_to", "trace_to",
    "AddChar", "MultChar", "gauss_sum", "gauss_product", "check_eqsim",
    "builtin_instances", "get_instance", "load_instance",
    "GridFunction", "dft",
    "compute_table", "cross_extension_check", "fit_exponents", "support_scan",
]
