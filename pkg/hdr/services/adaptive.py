"""
Adaptive solve → estimate → mark → refine loop for the vector Laplace problem.

Errors are exact per-element L² errors against the manufactured solution.
Marked elements are refined through the supports of the active 0-forms of
their level that do not vanish on them, optionally followed by exact_refine.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hdr.core.config import get_settings
from hdr.core.constants import ZERO_FORM
from hdr.core.enums import BasisVariant, BoundaryMode, ScalarMode
from hdr.models.hierarchy import HierarchicalSpace, RefinementDomains, refine_supports, support_elements
from hdr.models.tensor import Element, MultiIndex
from hdr.services.derham import build_complex, cohomology
from hdr.services.exactness import exact_refine
from hdr.services.solvers import ManufacturedSolution, assemble, circular_front_field, solve_vector_laplace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdaptiveConfig:
    theta: float = field(default_factory=lambda: get_settings().DORFLER_THETA)
    max_steps: int = field(default_factory=lambda: get_settings().ADAPTIVE_MAX_STEPS)
    max_level: int = field(default_factory=lambda: get_settings().MAX_LEVEL)
    exact: bool = True
    degree: int = 3
    base_intervals: int = 8
    boundary_mode: BoundaryMode = BoundaryMode.OPEN
    variant: BasisVariant = BasisVariant.THB
    rank_mode: ScalarMode = ScalarMode.FLOAT
    error_target: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"Dörfler parameter must lie in (0, 1], got {self.theta}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class AdaptiveStep:
    step: int
    domains: RefinementDomains = field(repr=False)
    dofs: int
    l2_error: float
    h1: int
    marked_elements: int
    singular: bool


def dorfler_mark(element_errors: np.ndarray, theta: float) -> np.ndarray:
    """Smallest set of elements (largest first) whose squared errors reach θ of the total."""
    errors = np.asarray(element_errors, dtype=float)
    if errors.size == 0:
        return np.zeros(0, dtype=int)
    order = np.argsort(errors, kind="stable")[::-1]
    total = errors.sum()
    if total <= 0.0:
        return np.zeros(0, dtype=int)
    cumulative = np.cumsum(errors[order])
    count = int(np.searchsorted(cumulative, theta * total, side="left")) + 1
    return np.sort(order[: min(count, errors.size)])


def marked_supports(
    domains: RefinementDomains,
    cells,
    variant: BasisVariant = BasisVariant.THB,
    max_level: Optional[int] = None,
) -> dict[int, set[MultiIndex]]:
    """Active level-ℓ 0-forms non-vanishing on each marked level-ℓ element, per level."""
    basis = HierarchicalSpace(domains, variant).basis(ZERO_FORM)
    cap = get_settings().MAX_LEVEL if max_level is None else max_level
    out: dict[int, set[MultiIndex]] = {}
    for cell in cells:
        if cell.level >= cap:
            continue
        active = set(basis.active[cell.level])
        tensor = domains.tensor_space(cell.level, ZERO_FORM)
        functions = {f for f in tensor.functions_on(cell.element) if f in active}
        if functions:
            out.setdefault(cell.level, set()).update(functions)
    return out


def refine_marked(
    domains: RefinementDomains, functions: dict[int, set[MultiIndex]], exact: bool
) -> RefinementDomains:
    if exact:
        marked: dict[int, set[Element]] = {
            level: support_elements(domains, level, funcs) for level, funcs in functions.items()
        }
        return exact_refine(domains, marked).domains
    for level in sorted(functions):
        domains = refine_supports(domains, level, functions[level])
    return domains


def adaptive_loop(
    config: Optional[AdaptiveConfig] = None,
    solution: Optional[ManufacturedSolution] = None,
    initial: Optional[RefinementDomains] = None,
) -> list[AdaptiveStep]:
    """
    Run the adaptive loop.

    **Input (request):**
        - config: AdaptiveConfig (θ, steps, exact_refine on/off, base mesh).
        - solution: manufactured solution; default is the circular-front field.
        - initial: starting domains; default a uniform base mesh from config.

    **Output (response):** one AdaptiveStep per solve (step, dofs, L² error, h1, marked count).
    """
    config = config or AdaptiveConfig()
    solution = solution or circular_front_field()
    domains = initial or RefinementDomains.uniform(config.degree, config.base_intervals, config.boundary_mode)
    history: list[AdaptiveStep] = []
    for step in range(config.max_steps):
        cx = build_complex(domains, config.variant, config.rank_mode, verify=False)
        h1 = cohomology(cx).h1
        reuse = cx if cx.mode is ScalarMode.FLOAT else None
        system = assemble(domains, config.variant, complex_matrices=reuse)
        result = solve_vector_laplace(system, solution)
        marked = dorfler_mark(result.element_errors, config.theta)
        cells = [system.quadrature.elements[k] for k in marked]
        history.append(
            AdaptiveStep(
                step=step,
                domains=domains,
                dofs=system.dofs[1],
                l2_error=result.l2_error,
                h1=h1,
                marked_elements=len(cells),
                singular=result.singular,
            )
        )
        logger.info(
            "Adaptive step %s: dofs=%s error=%.4e h1=%s marked=%s",
            step, system.dofs[1], result.l2_error, h1, len(cells),
        )
        if config.error_target is not None and result.l2_error <= config.error_target:
            break
        if step == config.max_steps - 1:
            break
        functions = marked_supports(domains, cells, config.variant, config.max_level)
        if not functions:
            logger.info("Adaptive loop stopped: no refinable marked elements below level cap")
            break
        domains = refine_marked(domains, functions, config.exact)
    return history
