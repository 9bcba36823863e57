# %% [markdown]
# # Dynamic topological transitions
#
# Start from the Gaussian state whose Bloch vector follows
# n_k = (0, b sin k, a + b cos k).  For a < b that loop encircles the origin
# once, so the density-matrix winding number is 1.  Loss then drags every
# sector towards its steady direction, and the winding can only change when
# the in-plane Bloch vector closes at some momentum.

# %%
import numpy as np

from dmtopo import (
    InitialStateSpec,
    bloch_blocks,
    build_ssh_model,
    chiral_axis,
    initial_state,
    kgrid,
    transition_scan,
    winding_number,
)

n_k = 256
C0 = initial_state(InitialStateSpec(a=1.0, b=2.0), kgrid(n_k))


def scan(u, w, lam=1.0):
    blocks = bloch_blocks(build_ssh_model(u, w, lam, 2), n_k)
    frame = chiral_axis(blocks)
    return frame, transition_scan(blocks, C0, frame, t_max=20.0, n_samples=2000)


frame, _ = scan(0.6, 0.0)
print("initial winding:", winding_number(C0, frame).nu)

# %% [markdown]
# Flat band, PT unbroken (u = 0.6): one transition, after which the state
# settles into the trivial steady configuration.

# %%
_, tr = scan(0.6, 0.0)
for t in tr.transitions:
    print(f"t = {t.time:.6f}: nu {t.nu_before} -> {t.nu_after}")

# %% [markdown]
# Flat band, PT broken (u = 1.3): the Bloch vectors of all sectors rotate in
# lock-step with angular frequency 2 sqrt(u^2 - lam^2), so the winding keeps
# switching back and forth with period pi / sqrt(u^2 - lam^2).

# %%
u = 1.3
_, tr = scan(u, 0.0)
times = tr.transition_times
print("transition times:", np.round(times, 4))
print("repeat period   :", np.round(times[2:] - times[:-2], 4))
print("expected        :", round(np.pi / np.sqrt(u**2 - 1), 4))

# %% [markdown]
# Deep in the broken phase (u = 2) the rotation is too fast relative to the
# starting loop for the in-plane vector to ever close, and nothing happens.
# Away from the flat band (w = 0.2) sectors rotate at different rates and
# the transitions lose their periodicity.

# %%
for u, w in [(2.0, 0.0), (0.6, 0.2), (1.3, 0.2), (2.0, 0.2)]:
    _, tr = scan(u, w)
    nus = [nu for nu in tr.nu if nu is not None]
    print(f"u={u} w={w}: {len(tr.transitions)} transitions, nu visits {sorted(set(nus))}")
