# qwell/modules/return_method/newton.py
import logging
from typing import Any, Callable, List, Optional, Tuple

import numpy as np

from qwell.core.config import settings
from qwell.core.exceptions import NewtonDivergenceError

logger = logging.getLogger("Qwell.ReturnMethod")

Evaluate = Callable[[np.ndarray], Tuple[np.ndarray, Any]]
Step = Callable[[np.ndarray, np.ndarray, Any], np.ndarray]

_MAX_HALVINGS = 5


def residual_norm(r: np.ndarray) -> float:
    r = np.asarray(r)
    return float(np.max(np.abs(r))) if r.size else 0.0


def damped_newton(
    evaluate: Evaluate,
    step: Step,
    x0: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    label: str = "newton",
) -> Tuple[np.ndarray, List[float]]:
    """
    x <- x + alpha dx with dx = step(x, r, ctx), alpha halved until the residual decreases.
    evaluate(x) returns the residual vector and whatever the step needs (Jacobian pieces).
    Returns the solution and the residual history (one entry per accepted iterate).
    """
    budget = settings.NEWTON_BUDGET
    tol = budget["tol"] if tol is None else tol
    max_iter = int(budget["max_iter"]) if max_iter is None else int(max_iter)

    x = np.asarray(x0, dtype=float).copy()
    r, ctx = evaluate(x)
    history = [residual_norm(r)]
    for it in range(max_iter):
        if history[-1] <= tol:
            break
        dx = step(x, r, ctx)
        alpha = 1.0
        for _ in range(_MAX_HALVINGS + 1):
            x_new = x + alpha * dx
            r_new, ctx_new = evaluate(x_new)
            if residual_norm(r_new) < history[-1]:
                break
            alpha *= 0.5
        else:
            history.append(residual_norm(r_new))
            raise NewtonDivergenceError(history, f"{label}: no decrease after {_MAX_HALVINGS} halvings")
        if alpha < 1.0:
            logger.warning(f"⚠️ {label}: damped step alpha={alpha:.3g} at iteration {it + 1}")
        x, r, ctx = x_new, r_new, ctx_new
        history.append(residual_norm(r))
        logger.debug(f"{label} iteration {it + 1}: residual {history[-1]:.3e}")
    if history[-1] > tol:
        raise NewtonDivergenceError(history, f"{label}: residual {history[-1]:.3e} above {tol:.1e} after {max_iter} iterations")
    return x, history
