import math

from sketchpit.core import Estimate, Seed, make_rng


def scale_estimate(raw: int, p: float) -> Estimate:
    """Scale a sampled count back to the stream scale.

    Args:
        raw (int): number of sampled occurrences.
        p (float): sampling probability.

    Returns:
        Estimate: `raw / p`.
    """
    return raw / p


class SkipSampler:
    """Processes each potential update with probability `p` by drawing geometric gaps.

    A gap `G` with `P(G=k) = p(1-p)^(k-1)`, `k >= 1`, tells how many potential updates to let pass until the
    next processed one (the last of them included). A fresh gap is drawn at construction and after every
    processed update, so the PRNG is invoked once per processed update and never on skipped ones.

    Args:
        p (float): sampling probability in (0, 1].
        seed (Seed): seed of the private generator.
    """

    def __init__(self, p: float, seed: Seed):
        if not 0.0 < p <= 1.0:
            raise ValueError(f" [!] Sampling probability must be in (0, 1], got {p}.")
        self.p = p
        self.prng_draws = 0
        self._rng = make_rng(seed)
        self._log_q = math.log1p(-p) if p < 1.0 else 0.0
        self.remaining_gap = self.draw_gap()

    def draw_gap(self) -> int:
        """Draw a gap by inverse transform, `ceil(ln(U) / ln(1-p))` with `U` uniform on (0, 1]."""
        if self._log_q == 0.0:
            return 1
        self.prng_draws += 1
        u = 1.0 - self._rng.random()
        return max(1, math.ceil(math.log(u) / self._log_q))

    def should_process(self) -> bool:
        self.remaining_gap -= 1
        if self.remaining_gap:
            return False
        self.remaining_gap = self.draw_gap()
        return True

    def __repr__(self):
        return f"SkipSampler(p={self.p}, remaining_gap={self.remaining_gap})"
