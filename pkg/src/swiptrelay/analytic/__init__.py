"""Closed-form and quadrature-based outage and capacity expressions."""

from .capacity import (capacity_ub_inst, capacity_ub_stat, capacity_upper_bound,
                       golden_section_max, optimize_theta)
from .hypoexp import Hypoexponential, partial_fraction_weights, pdf_h1_sq, surv_h2_sq
from .outage import (HighSnrRangeWarning, OUTAGE_QUADRATURE, OutageCoefficients,
                     StatOutageReport, outage_exact_inst, outage_exact_stat,
                     outage_exact_stat_report, outage_highsnr_inst, outage_highsnr_stat,
                     outage_lb_inst)

__all__ = [
    "Hypoexponential", "partial_fraction_weights", "pdf_h1_sq", "surv_h2_sq",
    "OutageCoefficients", "OUTAGE_QUADRATURE", "HighSnrRangeWarning", "StatOutageReport",
    "outage_exact_inst", "outage_lb_inst", "outage_highsnr_inst",
    "outage_exact_stat", "outage_exact_stat_report", "outage_highsnr_stat",
    "capacity_ub_inst", "capacity_ub_stat", "capacity_upper_bound",
    "golden_section_max", "optimize_theta",
]
