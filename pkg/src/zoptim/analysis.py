"""Numerical verification: moment predictions, smoothing inequalities,
convergence-bound constants, and the dimension-free second-moment study.

Everything here is measurable: closed-form predictions come with Monte
Carlo or trajectory counterparts so each claim can be checked at an
explicit tolerance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, PreconditionError
from .estimators import projected_gradient, zo_gradient
from .objectives import (
    BlockQuadratic,
    sample_noisy,
    smoothed_gradient,
    smoothed_value,
    smoothing_norm_moments,
)
from .optimizers import AdamState, MeazoState, meazo_step, zo_adam_step
from .perturb import (
    GAUSSIAN,
    UNIFORM,
    PerturbationSpec,
    batch_directions,
    keyed_generator,
    replay_directions,
)

_MC_BATCH = 32768


def predicted_squared_moment(g, q, distribution):
    """Closed-form E[ghat_k^2] for the affine objective with gradient g."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1 or g.size < 1:
        raise InvalidArgumentError("g must be a non-empty 1-D array")
    if q < 1:
        raise InvalidArgumentError(f"q must be >= 1, got {q}")
    d = g.size
    norm_sq = float(g @ g)
    if distribution == GAUSSIAN:
        return (norm_sq + g * g) / q + g * g
    if distribution == UNIFORM:
        return d * (norm_sq + 2.0 * g * g) / (q * (d + 2.0)) + ((q - 1.0) / q) * g * g
    raise InvalidArgumentError(
        f"no closed-form second moment for distribution {distribution!r}"
    )


def mc_squared_moment(g, q, distribution, n, seed=0, batch=_MC_BATCH):
    """Monte Carlo estimate of E[ghat_k^2] over n independent q-sample draws.

    On an affine objective the projected gradient equals the directional
    derivative exactly, so the estimator reduces to closed-form linear
    algebra over the sampled directions and can be evaluated in batches.
    """
    g = np.asarray(g, dtype=np.float64)
    d = g.size
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    rng = keyed_generator(seed, 0x3C0)
    acc = np.zeros(d)
    acc_sq = np.zeros(d)
    done = 0
    while done < n:
        b = min(batch, n - done)
        u = batch_directions(distribution, (b, q), d, rng)
        s = u @ g
        est = np.einsum("bq,bqd->bd", s, u) / q
        if distribution == UNIFORM:
            est = est * d
        sq = est * est
        acc += sq.sum(axis=0)
        acc_sq += (sq * sq).sum(axis=0)
        done += b
    mean = acc / n
    var = acc_sq / n - mean * mean
    se = np.sqrt(np.maximum(var, 0.0) / n)
    return mean, se


@dataclass
class MomentReport:
    empirical: np.ndarray
    predicted: np.ndarray
    max_rel_err: float
    n_trials: int
    standard_error: np.ndarray


def moment_report(g, q, distribution, n, seed=0):
    """Compare the Monte Carlo coordinate-wise second moment to the formula."""
    predicted = predicted_squared_moment(g, q, distribution)
    empirical, se = mc_squared_moment(g, q, distribution, n, seed=seed)
    rel = np.abs(empirical - predicted) / np.abs(predicted)
    return MomentReport(
        empirical=empirical,
        predicted=predicted,
        max_rel_err=float(rel.max()),
        n_trials=n,
        standard_error=se,
    )


def vt_statistics(v):
    """Summary statistics of a second-moment vector: min, max, mean,
    population std, and Fisher excess kurtosis (0 for a constant vector)."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise InvalidArgumentError("empty second-moment vector")
    mean = float(v.mean())
    std = float(v.std())
    if std == 0.0:
        kurt = 0.0
    else:
        kurt = float(np.mean((v - mean) ** 4) / std**4 - 3.0)
    return {
        "min": float(v.min()),
        "max": float(v.max()),
        "mean": mean,
        "std": std,
        "kurtosis": kurt,
    }


def vt_collapse_metric(vs, grad_norm_sq, q):
    """Spread of a second-moment vector and its error against norm^2/q.

    spread = (max - min) / mean; theory_target_err is the relative error of
    the mean against grad_norm_sq / q. A one-dimensional vector has spread 0.
    """
    vs = np.asarray(vs, dtype=np.float64)
    if vs.size == 0:
        raise InvalidArgumentError("empty second-moment vector")
    if grad_norm_sq is None:
        raise InvalidArgumentError("grad_norm_sq is required for the collapse target")
    if q < 1:
        raise InvalidArgumentError(f"q must be >= 1, got {q}")
    mean = float(vs.mean())
    spread = 0.0 if vs.size == 1 else float((vs.max() - vs.min()) / mean)
    target = float(grad_norm_sq) / q
    err = abs(mean - target) / target if target > 0 else math.inf
    return {"spread": spread, "theory_target_err": err}


def check_smoothing_inequalities(quad, epsilon, smoothing, points):
    """Verify the value and gradient bounds of the smoothed surrogate.

    Returns per-point slacks (bound minus actual gap), all of which must be
    nonnegative, along with the exact gradient error (identically zero for
    quadratics under symmetric smoothing).
    """
    if epsilon <= 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    e_norm, e_norm_sq = smoothing_norm_moments(smoothing, quad.d)
    l_const = quad.smoothness
    value_bound = 0.5 * epsilon**2 * l_const * e_norm_sq
    grad_bound = epsilon * l_const * e_norm
    rows = []
    for x in points:
        x = np.asarray(x, dtype=np.float64)
        gap = abs(smoothed_value(quad, x, epsilon, smoothing) - quad.value(x))
        grad_gap = float(
            np.linalg.norm(smoothed_gradient(quad, x, epsilon, smoothing) - quad.gradient(x))
        )
        rows.append(
            {
                "value_gap": gap,
                "value_bound": value_bound,
                "value_slack": value_bound - gap,
                "grad_gap": grad_gap,
                "grad_bound": grad_bound,
                "grad_slack": grad_bound - grad_gap,
            }
        )
    return rows


@dataclass
class TheoremConstants:
    sigma0_sq: float
    sigma1_sq: float
    G: float
    L: float
    alpha: float
    beta: float
    zeta: float


def theorem_constants(d, q, epsilon, L, sigma, G, beta, zeta):
    """Constants entering the scalar-adaptive convergence bound."""
    if d < 1 or q < 1:
        raise InvalidArgumentError("d and q must be >= 1")
    if epsilon <= 0 or L <= 0 or zeta <= 0 or G <= 0:
        raise InvalidArgumentError("epsilon, L, zeta, G must be > 0")
    if not 0.0 < beta < 1.0:
        raise InvalidArgumentError(f"beta must lie in (0, 1), got {beta}")
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be >= 0, got {sigma}")
    sigma0_sq = (d * epsilon**2 * L**2 / (2.0 * q)) * (8.0 + d) + (
        (2.0 * d - 1.0) / q + 1.0
    ) * sigma**2
    sigma1_sq = (4.0 * d - 1.0) / q
    alpha = math.sqrt(beta) * G + zeta
    return TheoremConstants(
        sigma0_sq=sigma0_sq,
        sigma1_sq=sigma1_sq,
        G=G,
        L=L,
        alpha=alpha,
        beta=beta,
        zeta=zeta,
    )


def check_meazo_condition(G, L, sigma1_sq, beta, eta, zeta):
    """Stationarity-bound precondition: both contraction terms at most 1/4."""
    term1 = G * (1.0 + sigma1_sq) * math.sqrt(1.0 - beta) / zeta
    term2 = L * eta / (2.0 * zeta)
    return max(term1, term2) <= 0.25


def meazo_bound(constants, f0_minus_fstar, eta, T, epsilon, L):
    """Bound on the average squared gradient norm for the scalar-adaptive
    method, valid only when the step-size condition holds."""
    if T < 1:
        raise InvalidArgumentError(f"T must be >= 1, got {T}")
    if eta <= 0:
        raise InvalidArgumentError(f"eta must be > 0, got {eta}")
    c = constants
    if not check_meazo_condition(c.G, c.L, c.sigma1_sq, c.beta, eta, c.zeta):
        raise PreconditionError(
            "step-size condition violated: "
            f"max(G(1+sigma1^2)sqrt(1-beta)/zeta, L eta/(2 zeta)) > 1/4 "
            f"(G={c.G}, L={c.L}, sigma1_sq={c.sigma1_sq}, beta={c.beta}, "
            f"eta={eta}, zeta={c.zeta})"
        )
    main = 2.0 * c.alpha * (f0_minus_fstar / (eta * T) + c.sigma0_sq / (2.0 * c.zeta))
    tail = epsilon**2 * L**2 * (c.alpha / (eta * T) + 2.0)
    return main + tail


def zosgd_bound(d, q, epsilon, L, sigma, eta, T, f0_minus_fstar):
    """Bound on the average squared gradient norm for plain two-point SGD."""
    if T < 1:
        raise InvalidArgumentError(f"T must be >= 1, got {T}")
    sigma1_sq = (4.0 * d - 1.0) / q
    if not eta < 2.0 / ((1.0 + sigma1_sq) * L):
        raise PreconditionError(
            f"eta must be below 2 / ((1 + sigma1^2) L) = {2.0 / ((1.0 + sigma1_sq) * L)}"
        )
    sigma0_sq = (d * epsilon**2 * L**2 / (2.0 * q)) * (8.0 + d) + (
        (2.0 * d - 1.0) / q + 1.0
    ) * sigma**2
    k0 = 1.0 / (eta * T * (1.0 - L * eta * (1.0 + sigma1_sq) / 2.0))
    k1 = L * eta * sigma0_sq / (2.0 - L * eta * (1.0 + sigma1_sq))
    return k0 * f0_minus_fstar + k1 + epsilon**2 * L**2 * (k0 / 2.0 + 2.0)


def classical_sgd_bound(L, sigma, eta, T, f0_minus_fstar):
    """First-order SGD stationarity bound that the two-point bound must
    approach as q grows and epsilon shrinks."""
    if T < 1:
        raise InvalidArgumentError(f"T must be >= 1, got {T}")
    if not eta < 2.0 / L:
        raise PreconditionError(f"eta must be below 2/L = {2.0 / L}")
    return f0_minus_fstar / (eta * T * (1.0 - L * eta / 2.0)) + L * eta * sigma**2 / (
        2.0 - L * eta
    )


def _run_one(objective, grad, optimizer, d, eta, q, epsilon, distribution, beta1, beta2,
             zeta, x0, threshold, max_steps, tail, seed):
    """Drive one optimizer until the loss threshold, recording v-hat spread."""
    spec = PerturbationSpec(distribution=distribution, epsilon=epsilon, base_seed=seed)
    if optimizer == "fo-adam":
        state = AdamState(dim=d, eta=eta, beta1=beta1, beta2=beta2, zeta=zeta)
    elif optimizer == "zo-adam":
        state = AdamState(dim=d, eta=eta, beta1=beta1, beta2=beta2, zeta=zeta)
    elif optimizer == "meazo":
        state = MeazoState(eta=eta, beta=beta2, zeta=zeta)
    else:
        raise InvalidArgumentError(f"unknown optimizer {optimizer!r}")

    x = x0.copy()
    tail_spread = []
    tail_target = []
    series = {"step": [], "loss": [], "grad_norm_sq": [], "spread": []}
    hit = None
    for t in range(max_steps):
        loss = float(objective(x))
        gvec = grad(x)
        gns = float(gvec @ gvec)

        if optimizer == "fo-adam":
            x = zo_adam_step(state, x, gvec)
        elif optimizer == "zo-adam":
            est, _ = zo_gradient(objective, x, spec, q, t)
            x = zo_adam_step(state, x, est)
        else:
            scalars = np.empty(q)
            for i, u in enumerate(replay_directions(spec, t, q, d)):
                scalars[i] = projected_gradient(objective, x, u, epsilon)
            x = meazo_step(state, x, scalars, replay_directions(spec, t, q, d))

        if optimizer == "meazo":
            vhat = np.array([state.v / (1.0 - state.beta**state.t)])
        else:
            vhat = state.v / (1.0 - state.beta2**state.t)
        metric = vt_collapse_metric(vhat, gns, q) if gns > 0 else {"spread": 0.0,
                                                                   "theory_target_err": math.inf}
        series["step"].append(t)
        series["loss"].append(loss)
        series["grad_norm_sq"].append(gns)
        series["spread"].append(metric["spread"])
        tail_spread.append(metric["spread"])
        tail_target.append(metric["theory_target_err"])
        if len(tail_spread) > tail:
            tail_spread.pop(0)
            tail_target.pop(0)
        if loss <= threshold:
            hit = t
            break

    if optimizer == "meazo":
        vhat_final = np.array([state.v / (1.0 - state.beta**max(state.t, 1))])
    else:
        vhat_final = state.v / (1.0 - state.beta2**max(state.t, 1))
    return {
        "optimizer": optimizer,
        "d": d,
        "steps_to_threshold": hit,
        "terminal_spread": float(np.mean(tail_spread)) if tail_spread else math.inf,
        "terminal_target_err": float(np.mean(tail_target)) if tail_target else math.inf,
        "final_loss": float(objective(x)),
        "vhat_final": vhat_final,
        "series": series,
    }


def collapse_study(dims=(9, 25, 49, 100, 1024), optimizers=("fo-adam", "zo-adam", "meazo"),
                   eta=1e-4, q=10, threshold=1e-3, beta1=0.9, beta2=0.999, zeta=1e-8,
                   epsilon=1e-6, distribution=GAUSSIAN, x0_norm=0.3, seed=0,
                   max_steps=200_000, tail=100, regime="heterogeneous", quad_seed=0):
    """Track the second-moment spread across dimensions for three optimizers.

    Every optimizer runs the same schedule on the same quadratic per
    dimension, started from a random point of fixed norm, and records the
    spread of the bias-corrected second moment over the last `tail`
    recorded steps before the loss threshold is reached.
    """
    results = []
    for d in dims:
        quad = BlockQuadratic(d=d, regime=regime, seed=quad_seed)
        rng = keyed_generator(seed, 0xF162, d)
        x0 = rng.standard_normal(d)
        x0 *= x0_norm / np.linalg.norm(x0)
        for opt in optimizers:
            results.append(
                _run_one(
                    quad.value, quad.gradient, opt, d, eta, q, epsilon, distribution,
                    beta1, beta2, zeta, x0, threshold, max_steps, tail, seed,
                )
            )
    return results


def bound_check_run(quad, optimizer, eta, q, epsilon, distribution, sigma, noise_seed,
                    x0, T, seed, beta=0.999, zeta=1.0, radius=None):
    """Run T steps and return the trajectory-average squared gradient norm
    of the noiseless objective, for comparison against a stationarity bound."""
    d = quad.d
    spec = PerturbationSpec(distribution=distribution, epsilon=epsilon, base_seed=seed)
    if sigma > 0:
        xi_seed = int(np.random.SeedSequence(entropy=(noise_seed, seed)).generate_state(1)[0])
        noisy = sample_noisy(quad, sigma, xi_seed)
    else:
        noisy = None

    if optimizer == "meazo":
        state = MeazoState(eta=eta, beta=beta, zeta=zeta)
    elif optimizer == "zo-sgd":
        state = None
    else:
        raise InvalidArgumentError(f"unknown optimizer {optimizer!r}")

    x = np.asarray(x0, dtype=np.float64).copy()
    total = 0.0
    max_norm = 0.0
    for t in range(T):
        g = quad.gradient(x)
        total += float(g @ g)
        max_norm = max(max_norm, float(np.linalg.norm(x)))
        fn = noisy.objective_at(t) if noisy is not None else quad.value
        if optimizer == "meazo":
            scalars = np.empty(q)
            for i, u in enumerate(replay_directions(spec, t, q, d)):
                scalars[i] = projected_gradient(fn, x, u, epsilon)
            x = meazo_step(state, x, scalars, replay_directions(spec, t, q, d))
        else:
            est, _ = zo_gradient(fn, x, spec, q, t)
            x = x - eta * est
        if not np.all(np.isfinite(x)):
            return {"avg_grad_norm_sq": math.inf, "max_point_norm": math.inf, "diverged": True}
    out = {
        "avg_grad_norm_sq": total / T,
        "max_point_norm": max_norm,
        "diverged": False,
    }
    if radius is not None:
        out["within_radius"] = max_norm <= radius
    return out
