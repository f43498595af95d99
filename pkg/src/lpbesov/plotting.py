"""Figure rendering for the CLI report paths.

Every renderer writes one PNG next to the delimited output and closes the
figure; nothing here is interactive.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .filters import psi_matrix


def plot_windows(bank, path, points=2048):
    """Window curves and the partition-of-unity sum."""
    xi = np.linspace(0.0, max(bank.lambda_max, 2.0**bank.J), points)
    values = psi_matrix(bank, xi)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for j in bank.levels:
        ax1.plot(xi, values[j], lw=1.5, label=rf"$\hat\psi_{{{j}}}$")
    ax1.set_ylabel("window value")
    ax1.legend(fontsize=8, ncol=min(bank.J + 1, 4))
    ax1.grid(True, alpha=0.3)
    total = (values**2).sum(axis=0)
    ax2.semilogy(xi, np.abs(total - 1.0) + 1e-18, "k-", lw=1)
    ax2.set_xlabel(r"$\xi$")
    ax2.set_ylabel(r"$|\sum_j \hat\psi_j^2 - 1|$")
    ax2.grid(True, alpha=0.3)
    fig.suptitle(f"Dyadic windows, J={bank.J}, coverage [0, {bank.lambda_max:g}]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_band_energies(rows, path):
    """Per-band norms, one line per signal: rows = [(label, norms), ...]."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, norms in rows:
        ax.semilogy(np.arange(len(norms)), np.maximum(norms, 1e-18), "o-", lw=1, label=label)
    ax.set_xlabel("band j")
    ax.set_ylabel(r"$\|\hat\psi_j(A)f\|$")
    ax.grid(True, alpha=0.3)
    if len(rows) <= 12:
        ax.legend(fontsize=7)
    ax.set_title("Band energies")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_equivalence(reports, path):
    """Scatter of the two norms plus the per-signal ratio."""
    integral = np.array([r.integral_side for r in reports])
    dyadic = np.array([r.dyadic_side for r in reports])
    ratios = np.array([r.ratio for r in reports])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.5))
    lim = (
        0.8 * min(integral.min(), dyadic.min()),
        1.25 * max(integral.max(), dyadic.max()),
    )
    ax1.loglog(dyadic, integral, "o", ms=4, alpha=0.7)
    ax1.plot(lim, lim, "k--", lw=1, alpha=0.6)
    ax1.set_xlabel("dyadic side")
    ax1.set_ylabel("integral side")
    ax1.set_title("norm against norm")
    ax1.grid(True, which="both", alpha=0.3)
    ax2.semilogy(np.arange(ratios.size), ratios, "o", ms=4)
    ax2.axhline(1.0, color="k", ls="--", lw=1, alpha=0.6)
    ax2.set_xlabel("signal index")
    ax2.set_ylabel("integral / dyadic")
    ax2.set_title(f"ratios in [{ratios.min():.3g}, {ratios.max():.3g}]")
    ax2.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_diagnostics(bound_rows, margins, path):
    """Operator-norm bounds against scale and the per-band lower margins."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.5))
    by_key = {}
    for row in bound_rows:
        by_key.setdefault((row["j"], row["r"]), []).append((row["s"], row["value"]))
    for (j, r), pts in sorted(by_key.items()):
        if r != 1:
            continue
        pts = sorted(pts)
        s = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        ax1.loglog(s, np.maximum(v, 1e-18), "o-", ms=3, lw=1, label=f"j={j}")
        ax1.loglog(s, (s * 2.0 ** (j + 1)) ** r, "--", lw=0.8, alpha=0.5)
    ax1.set_xlabel("s")
    ax1.set_ylabel(r"$\|(I-T_s)^r\hat\psi_j(A)\|$")
    ax1.set_title("filtered operator norms (r=1), dashed: elementary bound")
    ax1.legend(fontsize=7)
    ax1.grid(True, which="both", alpha=0.3)
    if margins:
        js = [m["j"] for m in margins]
        vals = [m["margin"] for m in margins]
        ax2.semilogy(js, vals, "s-", lw=1)
    ax2.set_xlabel("band j")
    ax2.set_ylabel("lower-bound margin")
    ax2.set_title("G-kernel band margins")
    ax2.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
