# %% [markdown]
# # PT phases of the lossy SSH chain
#
# Each Bloch sector of the chain evolves under a 2x2 damping block
# X~_k = [[0, -i t_k], [-i t_k, -2 lam]] with t_k = u + w cos k.  Its
# eigenvalues are -lam +/- sqrt(lam^2 - t_k^2): real while |t_k| < lam,
# a complex-conjugate pair once |t_k| > lam, and coalescing (an exceptional
# point) exactly at |t_k| = lam.

# %%
import numpy as np

from dmtopo import bloch_blocks, build_ssh_model, pt_classify

lam = 1.0
for u in (0.2, 1.0, 2.5):
    blocks = bloch_blocks(build_ssh_model(u, 0.5, lam, L=2), n_k=256)
    pt = pt_classify(blocks)
    n_broken = sum(lb.value == "Broken" for lb in pt.per_k)
    print(f"u={u:3.1f} w=0.5  {pt.global_label.value:16s} broken sectors: {n_broken:3d}/256")

# %% [markdown]
# In the flat band (w = 0) every sector sees the same t_k = u, so the whole
# zone flips at once at u = lam.  At u = lam exactly, each block is a
# Jordan block.

# %%
for u in (0.9, 1.0, 1.1):
    pt = pt_classify(bloch_blocks(build_ssh_model(u, 0.0, lam, 2), 16))
    print(f"u={u:3.1f} w=0    {pt.global_label.value:16s} labels: {sorted({lb.value for lb in pt.per_k})}")

# %% [markdown]
# The boundaries u + w = lam (no sector broken) and u - w = lam (all sectors
# broken) come straight from the extremes of t_k over the zone.

# %%
rng = np.random.default_rng(0)
agree = 0
for u, w in rng.uniform(0, 3, size=(50, 2)):
    g = pt_classify(bloch_blocks(build_ssh_model(u, w, lam, 2), 128)).global_label.value
    expect = "FullyUnbroken" if u + w < lam else "FullyBroken" if u - w > lam else "PartiallyBroken"
    agree += g == expect
print(f"{agree}/50 random points match the analytic boundaries")
