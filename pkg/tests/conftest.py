from __future__ import annotations

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def braid_texts(draw, max_b: int = 4, max_len: int = 6, singular: int = 0, ordinary: bool = True):
    """Braid words in the text syntax; ``singular`` caps the number of s<k> letters."""
    b = draw(st.integers(2, max_b))
    n = draw(st.integers(0, max_len))
    toks = []
    n_sing = 0
    for _ in range(n):
        col = draw(st.integers(1, b - 1))
        kinds = ["+", "-"] if ordinary else []
        if n_sing < singular:
            kinds.append("s")
        kind = draw(st.sampled_from(kinds))
        if kind == "s":
            n_sing += 1
            toks.append(f"s{col}")
        else:
            toks.append(str(col if kind == "+" else -col))
    return f"b={b}; w={' '.join(toks)}"
