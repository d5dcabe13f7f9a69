"""Half-integral weight cusp forms on Gamma_0(4): exponential sums, cusp
expansions, truncated Voronoi sums and sign-change statistics."""

__version__ = "0.1.0"
