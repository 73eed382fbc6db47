"""Figures rendered next to the CSV artefacts."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (5 ** 0.5 - 1) / 2


def _figure(width=7.0, nrows=1):
    fig, axes = plt.subplots(nrows, 1, figsize=(width, width * GOLDEN * (0.7 + 0.5 * nrows)),
                             sharex=True, squeeze=False)
    return fig, axes[:, 0]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_training_curve(curve, d_th_us, path):
    ep = [r["episode"] for r in curve]
    fig, (ax_d, ax_j) = _figure(nrows=2)
    ax_d.plot(ep, [r["mean_delay_us"] / 1000 for r in curve], marker="o", ms=3, lw=1)
    ax_d.axhline(d_th_us / 1000, color="k", ls="--", lw=1, label="threshold")
    ax_d.set_ylabel("PC1 delay (ms)")
    ax_d.legend(frameon=False)
    ax_j.plot(ep, [r["mean_jfi"] for r in curve], marker="o", ms=3, lw=1, color="C1")
    ax_j.set_ylabel("mean JFI")
    ax_j.set_xlabel("episode")
    _save(fig, path)


def plot_execution(rows, d_th_us, path, title=None, step_s=2.5e-3):
    t = [(r["step"] + 1) * step_s for r in rows]
    fig, (ax_d, ax_l) = _figure(nrows=2)
    ax_d.plot(t, [r["step_delay_us"] / 1000 for r in rows], lw=0.6, alpha=0.5, label="step")
    ax_d.plot(t, [r["avg_delay_us"] / 1000 for r in rows], lw=1.5, label="running mean")
    ax_d.axhline(d_th_us / 1000, color="k", ls="--", lw=1, label="threshold")
    ax_d.set_ylabel("PC1 delay (ms)")
    ax_d.legend(frameon=False, ncol=3, fontsize=8)
    ax_l.plot(t, [r["lambda"] for r in rows], color="C3", lw=1)
    ax_l.set_ylabel(r"$\lambda$")
    ax_l.set_xlabel("time (s)")
    if title:
        ax_d.set_title(title, fontsize=9)
    _save(fig, path)


def plot_sweep(summary_rows, path):
    fig, (ax_d, ax_j) = _figure(nrows=2)
    for i, d_th in enumerate(sorted({r["d_th_us"] for r in summary_rows})):
        rows = sorted((r for r in summary_rows if r["d_th_us"] == d_th), key=lambda r: r["n_pc3"])
        n = [r["n_pc3"] for r in rows]
        label = f"D_th = {d_th / 1000:g} ms"
        ax_d.errorbar(n, [r["mean_delay_us"] / 1000 for r in rows],
                      yerr=[r["se_delay_us"] / 1000 for r in rows], marker="o", capsize=3,
                      color=f"C{i}", label=label)
        ax_d.axhline(d_th / 1000, color=f"C{i}", ls=":", lw=1)
        ax_j.errorbar(n, [r["mean_jfi"] for r in rows], yerr=[r["se_jfi"] for r in rows],
                      marker="s", capsize=3, color=f"C{i}", label=label)
    ax_d.set_ylabel("PC1 delay (ms)")
    ax_d.legend(frameon=False, fontsize=8)
    ax_j.set_ylabel("JFI")
    ax_j.set_xlabel("number of PC3 transmitters")
    _save(fig, path)
