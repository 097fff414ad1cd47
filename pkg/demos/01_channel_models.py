"""
Fading channels used by the link-level engine
=============================================

Terrestrial links (user equipment to eNodeB/MEOC) are Rayleigh; links that
touch the satellite are Rician with a strong line-of-sight term.  All models
carry unit average power, so Eb/N0 is set purely through the noise variance.
"""

import numpy as np

from ppdrsim.channel import AwgnOnly, RayleighBlock, Rician, draw_block_gains, draw_realization

rng = np.random.default_rng(1)

###############################################################################
# Average power and spread of |h|^2 for each model.

for model in (AwgnOnly(), RayleighBlock(), Rician(0.0), Rician(1.0), Rician(10.0)):
    power = np.abs(draw_block_gains(rng, model, 200_000)) ** 2
    print(f"{model!r:28s} E|h|^2 = {power.mean():.4f}   std|h|^2 = {power.std():.4f}")

###############################################################################
# Block fading: one gain per coherence block of Q symbols, L blocks per
# codeword.  Here Q = 4 and L = 3.

h = draw_realization(rng, RayleighBlock(), n_blocks=3, block_len=4)
print("\nblock gains:", np.round(h.block_gains, 3))
print("per symbol :", np.round(h.per_symbol, 3))
