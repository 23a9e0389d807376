"""
Convergence study on the pentagon family
========================================

Runs the manufactured problem over a ladder of levels for several
degrees and plots the errors against the mesh size.  The observed
slopes match k+1 in L2 and k in H1.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sfvem.harness import convergence_study, write_csv

fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
for degree, levels in ((1, range(2, 6)), (2, range(2, 6)), (3, range(2, 5))):
    report = convergence_study("pentagon", degree, levels, "sinsin2d")
    print(report.summary())
    print()
    write_csv(report, f"pentagon_k{degree}.csv")

    hs = [r.h for r in report.reports]
    axes[0].loglog(hs, [r.l2_error for r in report.reports], "o-",
                   label=f"degree {degree}")
    axes[1].loglog(hs, [r.h1_error for r in report.reports], "o-",
                   label=f"degree {degree}")

for ax, title in zip(axes, ("L2 error", "H1 error")):
    ax.set_xlabel("h")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig("pentagon_convergence.png", dpi=120)
print("wrote pentagon_convergence.png and pentagon_k*.csv")
