"""Detection math for cooperative energy-detection sensing.

Closed-form detection/false-alarm probabilities, OR-rule fusion, subset
sizing and the sensing-time formula.
"""
import logging
import math
from functools import reduce
from typing import Sequence, Tuple

from scipy import special
from typing_extensions import TypedDict


# Series truncation for the Marcum Q Poisson mixture
SERIES_TOLERANCE = 1e-16

# Type alias for num_subsets results: (K, constraint_met)
SubsetCount = Tuple[int, bool]

Probability = float


# --- Value Types ---

class Snr(TypedDict):
    """SNR in both representations; linear = 10^(db/10)."""
    linear: float
    db: float


class DetectorParams(TypedDict):
    epsilon: float  # energy threshold (dimensionless)
    u: int          # number of samples
    f_s: float      # sampling frequency, Hz


class SubsetSize(TypedDict):
    s: int
    feasible: bool
    detection_bound: int  # ceil(log(1-Qd_min)/log(1-Pd_min))


def snr_from_db(db: float) -> Snr:
    return Snr(linear=10.0 ** (db / 10.0), db=float(db))


def snr_from_linear(linear: float) -> Snr:
    if linear <= 0:
        raise ValueError(f"SNR must be positive, got {linear}")
    return Snr(linear=float(linear), db=10.0 * math.log10(linear))


def make_detector(epsilon: float, u: int, f_s: float) -> DetectorParams:
    """Zero threshold is accepted: it is the always-alarm limit."""
    if epsilon < 0 or u < 1 or f_s <= 0:
        raise ValueError(f"Invalid detector parameters: epsilon={epsilon}, u={u}, f_s={f_s}")
    return DetectorParams(epsilon=float(epsilon), u=int(u), f_s=float(f_s))


def check_probability(name: str, p: float, open_interval: bool = False) -> None:
    if open_interval:
        if not 0.0 < p < 1.0:
            raise ValueError(f"{name} must be in (0,1), got {p}")
    elif not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0,1], got {p}")


def _clip(p: float) -> Probability:
    return min(1.0, max(0.0, float(p)))


# --- Special Functions ---

def regularized_upper_gamma(u: float, x: float) -> Probability:
    """Gamma(u, x) / Gamma(u)."""
    if u <= 0:
        raise ValueError(f"u must be positive, got {u}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    return _clip(special.gammaincc(u, x))


def marcum_q(u: int, a: float, b: float) -> Probability:
    """Generalized Marcum Q-function Q_u(a, b).

    Poisson-weighted series of regularized upper incomplete gamma terms:
    Q_u(a,b) = sum_k Pois(k; a^2/2) * Gamma(u+k, b^2/2)/Gamma(u+k).
    """
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u}")
    if a < 0 or b < 0:
        raise ValueError(f"Marcum Q needs a >= 0 and b >= 0, got a={a}, b={b}")
    if b == 0:
        return 1.0

    lam = 0.5 * a * a
    x = 0.5 * b * b
    if lam == 0:
        return regularized_upper_gamma(u, x)

    # Sum outward from the Poisson mode so both tails are truncated on weight
    mode = int(math.floor(lam))
    log_lam = math.log(lam)

    def term(k: int) -> Tuple[float, float]:
        weight = math.exp(-lam + k * log_lam - special.gammaln(k + 1))
        return weight, weight * special.gammaincc(u + k, x)

    total = 0.0
    k = mode
    while True:
        weight, value = term(k)
        total += value
        if weight < SERIES_TOLERANCE and k > mode:
            break
        k += 1
    k = mode - 1
    while k >= 0:
        weight, value = term(k)
        total += value
        if weight < SERIES_TOLERANCE:
            break
        k -= 1
    return _clip(total)


def gaussian_q(x: float) -> float:
    """Standard Gaussian upper tail Q(x)."""
    return float(special.ndtr(-x))


def gaussian_q_inv(p: float) -> float:
    """Inverse of Q: the upper-tail quantile."""
    return float(-special.ndtri(p))


# --- Detection Probabilities ---

def local_detection_prob(snr: Snr, det: DetectorParams) -> Probability:
    return marcum_q(det['u'], math.sqrt(2.0 * snr['linear']), math.sqrt(det['epsilon']))


def local_false_alarm_prob(det: DetectorParams) -> Probability:
    return regularized_upper_gamma(det['u'], det['epsilon'] / 2.0)


def threshold_for_false_alarm(u: int, pf: Probability) -> float:
    """Energy threshold giving local false-alarm probability pf."""
    check_probability("pf", pf, open_interval=True)
    return 2.0 * float(special.gammainccinv(u, pf))


def detector_operating_point(snr: Snr, det: DetectorParams) -> Tuple[Probability, Probability]:
    """(P_d, P_f) of a single energy detector."""
    return local_detection_prob(snr, det), local_false_alarm_prob(det)


# --- Fusion and Subset Sizing ---

def or_fuse(locals_: Sequence[Probability]) -> Probability:
    """Global probability under the OR rule: 1 - prod(1 - p_j)."""
    if len(locals_) == 0:
        raise ValueError("or_fuse needs at least one local probability")
    for p in locals_:
        check_probability("local probability", p)
    miss = reduce(lambda acc, p: acc * (1.0 - p), locals_, 1.0)
    return _clip(1.0 - miss)


def subset_size(
    qd_min: Probability, qf_max: Probability, pd_min: Probability, pf_max: Probability
) -> SubsetSize:
    """Subset capacity S from the false-alarm side, guarded by the inequality it comes from."""
    for name, p in (("qd_min", qd_min), ("qf_max", qf_max), ("pd_min", pd_min), ("pf_max", pf_max)):
        check_probability(name, p, open_interval=True)

    detection_bound = math.ceil(math.log(1.0 - qd_min) / math.log(1.0 - pd_min))
    s = math.ceil(math.log(1.0 - qf_max) / math.log(1.0 - pf_max))

    # The ceiling can overshoot the false-alarm constraint by one
    while s >= 1 and (1.0 - pf_max) ** s < 1.0 - qf_max:
        s -= 1

    if s < 1:
        logging.warning(f"No subset size satisfies Qf <= {qf_max} with Pf_max = {pf_max}")
        return SubsetSize(s=1, feasible=False, detection_bound=detection_bound)

    feasible = detection_bound <= s
    if not feasible:
        logging.warning(
            f"Subset sizing infeasible: detection needs {detection_bound} nodes, "
            f"false-alarm side allows {s}"
        )
    return SubsetSize(s=s, feasible=feasible, detection_bound=detection_bound)


def num_subsets(c: int, s: int) -> SubsetCount:
    """K = floor(C/S); a cluster smaller than S still forms one subset."""
    if c < 1 or s < 1:
        raise ValueError(f"num_subsets needs c >= 1 and s >= 1, got c={c}, s={s}")
    if c < s:
        return 1, False
    return c // s, True


# --- Sensing Time ---

def sensing_time(snr: Snr, pf_target: Probability, pd_target: Probability, f_s: float) -> float:
    """Seconds of sensing needed to reach (pf_target, pd_target) at this SNR."""
    check_probability("pf_target", pf_target, open_interval=True)
    check_probability("pd_target", pd_target, open_interval=True)
    if f_s <= 0:
        raise ValueError(f"f_s must be positive, got {f_s}")
    gamma = snr['linear']
    if gamma <= 0:
        raise ValueError(f"SNR must be positive, got {gamma}")

    numerator = gaussian_q_inv(pf_target) - gaussian_q_inv(pd_target) * math.sqrt(2.0 * gamma + 1.0)
    # Target already met with no sensing at all
    if numerator <= 0:
        return 0.0
    return (numerator / (math.sqrt(f_s) * gamma)) ** 2


def achieved_detection_prob(snr: Snr, pf_target: Probability, tau: float, f_s: float) -> Probability:
    """Detection probability reached after sensing for tau seconds."""
    check_probability("pf_target", pf_target, open_interval=True)
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if f_s <= 0:
        raise ValueError(f"f_s must be positive, got {f_s}")
    gamma = snr['linear']
    if gamma <= 0:
        raise ValueError(f"SNR must be positive, got {gamma}")

    arg = (gaussian_q_inv(pf_target) - math.sqrt(tau * f_s) * gamma) / math.sqrt(2.0 * gamma + 1.0)
    return _clip(gaussian_q(arg))

