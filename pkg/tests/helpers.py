"""Shared random-state builders for the test suite."""

from catamp import DyadMix, PureCSS, as_dyad_mix, loss_channel


def random_labels(rng, modes, scale=1.5):
    return tuple(
        complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
        for _ in range(modes)
    )


def random_pure(rng, modes=1, n_terms=3, scale=1.5) -> PureCSS:
    terms = tuple(
        (
            complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
            random_labels(rng, modes, scale),
        )
        for _ in range(n_terms)
    )
    return PureCSS(modes, terms)


def random_physical_mix(rng, modes=1, n_terms=3, r2=0.0) -> DyadMix:
    """Hermitian positive mix: a lossy version of a random pure state."""
    return loss_channel(as_dyad_mix(random_pure(rng, modes, n_terms)), r2)
