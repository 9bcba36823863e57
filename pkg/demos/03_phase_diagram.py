# %% [markdown]
# # A coarse phase diagram
#
# Combining the PT structure with the transition behaviour gives four
# regions: I (fully unbroken), II (partially broken), III (fully broken with
# transitions) and IV (fully broken, none).  A coarse sweep is enough to see
# the layout; the CLI ``dmtopo phase-diagram`` runs the same sweep at full
# resolution and writes it to CSV.

# %%
from dmtopo import InitialStateSpec, find_uc, sweep

spec = InitialStateSpec(1.0, 2.0)
res = sweep(u_range=(0.0, 3.0), w_range=(0.0, 1.0), resolution=(16, 6), lam=1.0, spec=spec,
            n_k=128, n_samples=800)

grid = res.grid()
print("w \\ u " + " ".join(f"{u:4.1f}" for u in res.u_values))
for w, row in zip(res.w_values[::-1], grid[::-1]):
    print(f"{w:4.2f}  " + " ".join(f"{r:>4s}" for r in row))

# %% [markdown]
# Along the flat-band row the regions change at u = 1 (the exceptional point)
# and again where transitions stop.  Bisection pins the second threshold.

# %%
print("u_c =", round(find_uc(1.0, spec), 3))
