"""Numerical toolkit for product Morrey-Herz analysis on a truncated dyadic grid."""

__version__ = "0.1.0"

from .grid import (
    AnnulusIndex,
    DyadicRectangle,
    GridFunction,
    GridRectangle,
    GridSpec,
    annulus_restrict,
    build_function,
    dilate,
    integrate_over_rectangle,
    make_grid,
    restrict_to_window,
    window_mask,
)
from .norms import (
    ExponentParams,
    NormBracket,
    RectangleFamily,
    block_norm_bracket,
    bmo_mk_norm,
    bmo_norm,
    char_rect_norm_closed_form,
    conjugate_exponent,
    herz_norm,
    lp_norm,
    morrey_herz_norm,
    pairing_l1,
)
from .operators import (
    DOUBLE_HILBERT,
    DYADIC_SIDES,
    EXACT_GRID,
    ITERATED_1D,
    MaximalVariant,
    SeparableKernel,
    commutator,
    cz_apply,
    kernel_condition_check,
    rect_average_P,
    rubio_de_francia,
    strong_maximal,
)
from .weights import (
    WeightFunction,
    ap_star_characteristic,
    generate_a1_weight,
    make_weight,
    weighted_lp_norm,
)

__all__ = [
    "AnnulusIndex",
    "DOUBLE_HILBERT",
    "DYADIC_SIDES",
    "DyadicRectangle",
    "EXACT_GRID",
    "ExponentParams",
    "GridFunction",
    "GridRectangle",
    "GridSpec",
    "ITERATED_1D",
    "MaximalVariant",
    "NormBracket",
    "RectangleFamily",
    "SeparableKernel",
    "WeightFunction",
    "annulus_restrict",
    "ap_star_characteristic",
    "block_norm_bracket",
    "bmo_mk_norm",
    "bmo_norm",
    "build_function",
    "char_rect_norm_closed_form",
    "commutator",
    "conjugate_exponent",
    "cz_apply",
    "dilate",
    "generate_a1_weight",
    "herz_norm",
    "integrate_over_rectangle",
    "kernel_condition_check",
    "lp_norm",
    "make_grid",
    "make_weight",
    "morrey_herz_norm",
    "pairing_l1",
    "rect_average_P",
    "restrict_to_window",
    "rubio_de_francia",
    "strong_maximal",
    "weighted_lp_norm",
    "window_mask",
]
